//! Pairwise independent hash family `x -> ((a*x + b) mod p) mod 2^lambda + 1`.
//!
//! The prime `p` is the smallest prime above `n^2`, so the bias introduced by
//! folding `[p]` onto `[2^lambda]` is O(1/n^2). Outputs are 1-based to match
//! the `[2^k]` bucket notation used throughout the samplers: an item with
//! hash value `h` belongs to bucket `[2^k]` iff `h <= 2^k`.

use crate::rng::SplitMix64;
use crate::VertexId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseHash {
    p: u64,
    a: u64,
    b: u64,
    lambda: u32,
}

/// `ceil(log2(n))`, with `ceil_log2(1) = 0`.
pub fn ceil_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    64 - (n - 1).leading_zeros().min(64)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
        if n == small {
            return true;
        }
        if n.is_multiple_of(small) {
            return false;
        }
    }
    // Deterministic Miller-Rabin for u64.
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Smallest prime strictly greater than `x`. Memoized: hash sampling asks
/// for the same `n^2` bound thousands of times per pass.
pub fn next_prime(x: u64) -> u64 {
    use std::sync::Mutex;
    use std::sync::OnceLock;
    static CACHE: OnceLock<Mutex<std::collections::HashMap<u64, u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(std::collections::HashMap::new()));
    if let Some(&p) = cache.lock().unwrap().get(&x) {
        return p;
    }
    let mut c = x + 1;
    let p = loop {
        if is_prime(c) {
            break c;
        }
        c += 1;
    };
    cache.lock().unwrap().insert(x, p);
    p
}

impl PairwiseHash {
    /// Draw a hash for the universe `1..=n` (lambda = ceil(log2 n)),
    /// deterministically from `seed`.
    pub fn sample(n: u64, seed: u64) -> PairwiseHash {
        let mut rng = SplitMix64::new(seed);
        Self::sample_with(n, &mut rng)
    }

    pub fn sample_with(n: u64, rng: &mut SplitMix64) -> PairwiseHash {
        debug_assert!(n >= 2);
        let p = next_prime(n.saturating_mul(n).max(4));
        let a = rng.range_u64(1..p);
        let b = rng.range_u64(0..p);
        PairwiseHash {
            p,
            a,
            b,
            lambda: ceil_log2(n),
        }
    }

    /// Fixed parameters; used in tests to pin exact values.
    pub fn with_params(p: u64, a: u64, b: u64, lambda: u32) -> PairwiseHash {
        PairwiseHash { p, a, b, lambda }
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn params(&self) -> (u64, u64, u64) {
        (self.p, self.a, self.b)
    }

    /// Hash value in `1..=2^lambda`.
    #[inline]
    pub fn eval(&self, x: VertexId) -> u64 {
        self.eval_u64(x as u64)
    }

    #[inline]
    pub fn eval_u64(&self, x: u64) -> u64 {
        let h = (self.a as u128 * x as u128 + self.b as u128) % self.p as u128;
        (h as u64 & ((1u64 << self.lambda) - 1)) + 1
    }

    /// Slot-level ladder entry point: the first level `k >= 1` such that the
    /// item belongs to bucket `[2^k]`.
    #[inline]
    pub fn first_level(&self, x: u64) -> u32 {
        ceil_log2(self.eval_u64(x)).max(1)
    }
}

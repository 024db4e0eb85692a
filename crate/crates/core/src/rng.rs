//! Small self-contained seeded RNG so that every pipeline is reproducible
//! byte-for-byte from its seed, independent of external crate versions.

use std::ops::Range;

/// splitmix64 (Vigna, 2015). Passes through the full 64-bit state space.
#[derive(Clone, Debug)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        // 0 is a fine state for splitmix64; no rejection needed.
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut x = self.0;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^ (x >> 31)
    }

    /// Uniform value in `range` (rejection sampling, no modulo bias).
    pub fn range_u64(&mut self, range: Range<u64>) -> u64 {
        let Range { start, end } = range;
        debug_assert!(start < end);
        let width = end - start;
        let test = (u64::MAX - width) % width;
        loop {
            let value = self.next_u64();
            if value >= test {
                return start + value % width;
            }
        }
    }

    pub fn range_usize(&mut self, range: Range<usize>) -> usize {
        self.range_u64(range.start as u64..range.end as u64) as usize
    }

    /// Uniform f64 in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        let n = xs.len();
        if n < 2 {
            return;
        }
        for i in 0..n - 1 {
            let j = self.range_usize(i..n);
            xs.swap(i, j);
        }
    }

    /// Derive an independent child stream. Used to hand one seed to each
    /// phase / sub-phase / attempt without correlation between them.
    pub fn fork(&mut self, tag: u64) -> SplitMix64 {
        let mut mixed = SplitMix64::new(self.next_u64() ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        // burn one output so that fork(0) differs from the parent stream
        mixed.next_u64();
        mixed
    }
}

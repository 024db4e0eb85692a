//! CIS codebook, 1-sparse recovery, s-sparse recovery and l0-sampling.
//!
//! The codebook assigns every coordinate `i in 1..=n` a 2-D integer code
//! `nu(i)` taken from the extreme points of the convex hull of the integer
//! points inside a radius-R disc. No code is a convex combination of the
//! others, which turns "is this accumulator 1-sparse?" into an exact integer
//! test: `L / ctr = nu(i)` for some `i` iff only coordinate `i` contributed
//! (given non-negative final values).

use crate::error::{Error, Result};
use crate::hashing::{ceil_log2, PairwiseHash};
use crate::rng::SplitMix64;
use std::collections::HashMap;

type Point = (i64, i64);

fn isqrt(v: i64) -> i64 {
    debug_assert!(v >= 0);
    let mut x = (v as f64).sqrt() as i64;
    while x > 0 && x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

fn cross(o: Point, a: Point, b: Point) -> i128 {
    let ax = (a.0 - o.0) as i128;
    let ay = (a.1 - o.1) as i128;
    let bx = (b.0 - o.0) as i128;
    let by = (b.1 - o.1) as i128;
    ax * by - ay * bx
}

/// Extreme points of conv(Ball_2(R) cap Z^2), ordered clockwise starting at
/// (R, 0). Candidates are streamed column by column so only the hull itself
/// is ever held in memory.
fn disc_hull_vertices(r: i64) -> Vec<Point> {
    debug_assert!(r >= 1);
    let top = |x: i64| -> Point { (x, isqrt(r * r - x * x)) };

    // Lower chain (y = -top) scanned left to right, then upper chain scanned
    // right to left; `cross <= 0` pops keep strictly convex (CCW) turns, so
    // collinear boundary points are dropped and only extreme points remain.
    let mut hull: Vec<Point> = Vec::new();
    // `min_keep` is the number of already-final points a pop may never touch.
    let feed = |hull: &mut Vec<Point>, p: Point, min_keep: usize| {
        while hull.len() >= min_keep + 2
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0
        {
            hull.pop();
        }
        hull.push(p);
    };
    for x in -r..=r {
        let (x, y) = top(x);
        feed(&mut hull, (x, -y), 0);
    }
    let lower_len = hull.len();
    for x in (-r..r).rev() {
        let p = top(x);
        feed(&mut hull, p, lower_len - 1);
    }
    // hull is CCW starting at (-R, 0); the last upper-chain point is (-R, 0)
    // itself, which duplicates the start.
    if hull.last() == hull.first() {
        hull.pop();
    }
    // Clockwise from angle 0: reverse orientation, then rotate (R, 0) first.
    hull.reverse();
    let start = hull
        .iter()
        .position(|&p| p == (r, 0))
        .expect("(R, 0) is always a hull vertex");
    hull.rotate_left(start);
    hull
}

/// CIS codebook: `n` convexly independent integer codewords with their
/// inverse map.
#[derive(Debug, Clone)]
pub struct CisCodebook {
    n: usize,
    radius: i64,
    points: Vec<Point>,
    inverse: HashMap<Point, u32>,
}

impl CisCodebook {
    /// Codes for coordinates `1..=n`. The radius starts at `ceil(n^(3/2))`
    /// and doubles until the disc hull has at least `n` vertices.
    pub fn build(n: usize) -> CisCodebook {
        assert!(n >= 1);
        let mut radius = ((n as f64).powf(1.5).ceil() as i64).max(1);
        loop {
            let hull = disc_hull_vertices(radius);
            if hull.len() >= n {
                let points: Vec<Point> = hull.into_iter().take(n).collect();
                let inverse = points
                    .iter()
                    .enumerate()
                    .map(|(idx, &p)| (p, idx as u32 + 1))
                    .collect();
                return CisCodebook { n, radius, points, inverse };
            }
            radius *= 2;
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// Codeword of coordinate `i` (1-based).
    #[inline]
    pub fn code(&self, i: u32) -> Point {
        self.points[(i - 1) as usize]
    }

    /// Decode a point back to its coordinate, if it is a codeword.
    #[inline]
    pub fn decode(&self, p: Point) -> Option<u32> {
        self.inverse.get(&p).copied()
    }

    /// `sum / count` if the division is exact and hits a codeword.
    #[inline]
    pub fn decode_ratio(&self, sum: (i128, i128), count: i128) -> Option<u32> {
        if count <= 0 {
            return None;
        }
        if sum.0 % count != 0 || sum.1 % count != 0 {
            return None;
        }
        let x = sum.0 / count;
        let y = sum.1 / count;
        if x < i64::MIN as i128 || x > i64::MAX as i128 || y < i64::MIN as i128 || y > i64::MAX as i128
        {
            return None;
        }
        self.decode((x as i64, y as i64))
    }

    /// Machine-check convex independence: recomputing the hull of the stored
    /// points must return every one of them as a vertex.
    pub fn verify_cis(&self) -> bool {
        if self.n <= 2 {
            return true;
        }
        let mut pts = self.points.clone();
        pts.sort_unstable();
        let mut hull: Vec<Point> = Vec::new();
        let feed = |hull: &mut Vec<Point>, p: Point, min_keep: usize| {
            while hull.len() >= min_keep + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0
            {
                hull.pop();
            }
            hull.push(p);
        };
        for &p in &pts {
            feed(&mut hull, p, 0);
        }
        let lower_len = hull.len();
        for &p in pts.iter().rev().skip(1) {
            feed(&mut hull, p, lower_len - 1);
        }
        if hull.last() == hull.first() && hull.len() > 1 {
            hull.pop();
        }
        hull.len() == self.n
    }
}

// ---------------------------------------------------------------------------
// 1-sparse recovery
// ---------------------------------------------------------------------------

/// Linear sketch of a turnstile vector: `L = sum nu(i) * a_i`, `ctr = sum a_i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OneSparseSketch {
    pub l: (i128, i128),
    pub ctr: i128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recovery {
    Empty,
    One(u32, i64),
    Dense,
}

impl OneSparseSketch {
    pub fn new() -> OneSparseSketch {
        OneSparseSketch::default()
    }

    #[inline]
    pub fn update(&mut self, cb: &CisCodebook, i: u32, delta: i64) {
        let (x, y) = cb.code(i);
        self.l.0 += x as i128 * delta as i128;
        self.l.1 += y as i128 * delta as i128;
        self.ctr += delta as i128;
    }

    pub fn merge(&mut self, other: &OneSparseSketch) {
        self.l.0 += other.l.0;
        self.l.1 += other.l.1;
        self.ctr += other.ctr;
    }

    pub fn is_zero(&self) -> bool {
        self.ctr == 0 && self.l == (0, 0)
    }

    /// Exact recovery under the strict turnstile promise (all final values
    /// non-negative). Dense detection is deterministic.
    pub fn recover(&self, cb: &CisCodebook) -> Result<Recovery> {
        if self.ctr == 0 {
            return if self.l == (0, 0) {
                Ok(Recovery::Empty)
            } else {
                Err(Error::TurnstileViolation(
                    "1-sparse sketch: ctr = 0 but L != 0".into(),
                ))
            };
        }
        if self.ctr < 0 {
            return Err(Error::TurnstileViolation(format!(
                "1-sparse sketch: negative counter {}",
                self.ctr
            )));
        }
        match cb.decode_ratio(self.l, self.ctr) {
            Some(i) => Ok(Recovery::One(i, self.ctr as i64)),
            None => Ok(Recovery::Dense),
        }
    }
}

// ---------------------------------------------------------------------------
// s-sparse recovery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SSparseResult {
    /// The exact recovered vector, sorted by coordinate.
    Exact(Vec<(u32, i64)>),
    Dense,
}

/// Grid of `2s` buckets x `ceil(log2(s/delta))` rows of 1-sparse sketches.
/// `One` results are never wrong (Lemma-level guarantee of the codebook), so
/// the union of recovered pairs either explains every cell exactly - in
/// which case it is the full vector - or some support was missed and the
/// input is reported dense.
pub struct SSparseSketch {
    buckets: usize,
    rows: Vec<(PairwiseHash, Vec<OneSparseSketch>)>,
}

impl SSparseSketch {
    pub fn new(n: usize, s: usize, delta: f64, seed: u64) -> SSparseSketch {
        assert!(s >= 1);
        assert!(delta > 0.0 && delta < 1.0);
        let buckets = 2 * s;
        let rows_count = ((s as f64 / delta).log2().ceil() as usize).max(1);
        let mut rng = SplitMix64::new(seed);
        let rows = (0..rows_count)
            .map(|_| {
                let h = PairwiseHash::sample_with(n.max(2) as u64, &mut rng);
                (h, vec![OneSparseSketch::new(); buckets])
            })
            .collect();
        SSparseSketch { buckets, rows }
    }

    pub fn update(&mut self, cb: &CisCodebook, i: u32, delta: i64) {
        for (h, cells) in &mut self.rows {
            let b = ((h.eval(i) - 1) as usize) % self.buckets;
            cells[b].update(cb, i, delta);
        }
    }

    pub fn recover(&self, cb: &CisCodebook) -> Result<SSparseResult> {
        let mut found: HashMap<u32, i64> = HashMap::new();
        for (_, cells) in &self.rows {
            for cell in cells {
                if let Recovery::One(i, v) = cell.recover(cb)? {
                    match found.insert(i, v) {
                        Some(prev) if prev != v => {
                            return Err(Error::SketchCorrupt(format!(
                                "coordinate {i} recovered twice with values {prev} and {v}"
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        // Contract: vectors with more than s support coordinates are
        // reported dense even when the grid could identify them all.
        if found.len() > self.buckets / 2 {
            return Ok(SSparseResult::Dense);
        }
        // Verify: re-encode the recovered vector and compare cell by cell.
        // Missing coordinates have positive final values, so they always
        // leave at least one counter mismatched.
        for (h, cells) in &self.rows {
            let mut expect = vec![OneSparseSketch::new(); self.buckets];
            for (&i, &v) in &found {
                let b = ((h.eval(i) - 1) as usize) % self.buckets;
                expect[b].update(cb, i, v);
            }
            if expect != *cells {
                return Ok(SSparseResult::Dense);
            }
        }
        let mut vec: Vec<(u32, i64)> = found.into_iter().collect();
        vec.sort_unstable();
        Ok(SSparseResult::Exact(vec))
    }
}

/// One-shot s-sparse recovery over a batch of updates.
pub fn s_sparse_recover(
    updates: &[(u32, i64)],
    n: usize,
    s: usize,
    delta: f64,
    cb: &CisCodebook,
    seed: u64,
) -> Result<SSparseResult> {
    let mut sk = SSparseSketch::new(n, s, delta, seed);
    for &(i, d) in updates {
        sk.update(cb, i, d);
    }
    sk.recover(cb)
}

// ---------------------------------------------------------------------------
// l0-sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L0Outcome {
    /// Support coordinate and its final value.
    Sampled(u32, i64),
    /// The vector is exactly zero (detected deterministically).
    Empty,
    /// Sampler failure; probability at most delta.
    Fail,
}

/// l0-sampler: `r = O(log 1/delta)` independent repetitions, each trying
/// `lambda = ceil(log2 n)` geometric scales. Coordinate `i` participates at
/// scale `j` iff `h_j(i) <= 2^(lambda - j)`, i.e. with probability `2^-j`,
/// consistently across insertions and deletions.
pub struct L0Sampler {
    lambda: u32,
    /// Unfiltered sketch; settles emptiness (and 1-sparse inputs) exactly.
    global: OneSparseSketch,
    /// `reps x lambda` filtered sketches with their membership hashes.
    scales: Vec<(PairwiseHash, OneSparseSketch)>,
    reps: usize,
}

/// Repetition count for failure probability <= delta: each repetition
/// succeeds with probability at least e^-1 / 2.
pub fn l0_repetitions(delta: f64) -> usize {
    let per_rep = 1.0 - (-1.0f64).exp() / 2.0;
    ((1.0 / delta).ln() / (1.0 / per_rep).ln()).ceil().max(1.0) as usize
}

impl L0Sampler {
    pub fn new(n: usize, delta: f64, seed: u64) -> L0Sampler {
        assert!(n >= 2);
        assert!(delta > 0.0 && delta < 1.0);
        let lambda = ceil_log2(n as u64).max(1);
        let reps = l0_repetitions(delta);
        let mut rng = SplitMix64::new(seed);
        let scales = (0..reps * lambda as usize)
            .map(|_| (PairwiseHash::sample_with(n as u64, &mut rng), OneSparseSketch::new()))
            .collect();
        L0Sampler { lambda, global: OneSparseSketch::new(), scales, reps }
    }

    pub fn update(&mut self, cb: &CisCodebook, i: u32, delta: i64) {
        self.global.update(cb, i, delta);
        let lambda = self.lambda;
        for rep in 0..self.reps {
            for j in 1..=lambda {
                let idx = rep * lambda as usize + (j - 1) as usize;
                let (h, sk) = &mut self.scales[idx];
                if h.eval(i) <= 1u64 << (lambda - j) {
                    sk.update(cb, i, delta);
                }
            }
        }
    }

    /// Outcome of a single (repetition, scale) cell; used to measure
    /// per-scale success rates.
    pub fn scale_recovery(&self, rep: usize, scale: u32, cb: &CisCodebook) -> Result<Recovery> {
        let idx = rep * self.lambda as usize + (scale - 1) as usize;
        self.scales[idx].1.recover(cb)
    }

    pub fn query(&self, cb: &CisCodebook) -> Result<L0Outcome> {
        match self.global.recover(cb)? {
            Recovery::Empty => return Ok(L0Outcome::Empty),
            Recovery::One(i, v) => return Ok(L0Outcome::Sampled(i, v)),
            Recovery::Dense => {}
        }
        for rep in 0..self.reps {
            for j in 1..=self.lambda {
                if let Recovery::One(i, v) = self.scale_recovery(rep, j, cb)? {
                    return Ok(L0Outcome::Sampled(i, v));
                }
            }
        }
        Ok(L0Outcome::Fail)
    }
}

/// One-shot l0-sample over a batch of updates.
pub fn l0_sample(
    updates: &[(u32, i64)],
    n: usize,
    delta: f64,
    cb: &CisCodebook,
    seed: u64,
) -> Result<L0Outcome> {
    let mut sampler = L0Sampler::new(n, delta, seed);
    for &(i, d) in updates {
        sampler.update(cb, i, d);
    }
    sampler.query(cb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_hull_small_radii() {
        // R = 1: diamond (1,0), (0,-1)... clockwise from (1,0).
        let h1 = disc_hull_vertices(1);
        assert_eq!(h1, vec![(1, 0), (0, -1), (-1, 0), (0, 1)]);
        // R = 2: (1,1) = midpoint of (2,0) and (0,2) must be excluded.
        let h2 = disc_hull_vertices(2);
        assert_eq!(h2, vec![(2, 0), (0, -2), (-2, 0), (0, 2)]);
        // R = 4: (1,3) lies inside the hull of the others.
        let h4 = disc_hull_vertices(4);
        assert!(h4.contains(&(3, 2)) && h4.contains(&(2, 3)));
        assert!(!h4.contains(&(1, 3)));
        assert_eq!(h4[0], (4, 0));
    }

    #[test]
    fn codebook_n1() {
        let cb = CisCodebook::build(1);
        assert_eq!(cb.len(), 1);
        assert!(cb.verify_cis());
    }

    #[test]
    fn codebook_n4_is_cis() {
        let cb = CisCodebook::build(4);
        assert_eq!(cb.len(), 4);
        assert!(cb.verify_cis());
        for i in 1..=4u32 {
            assert_eq!(cb.decode(cb.code(i)), Some(i));
        }
    }

    #[test]
    fn codebook_combination_test_n64() {
        // Lemma-level check: a normalized non-negative integer combination
        // equals some nu(i) iff all other coefficients are zero.
        let n = 64usize;
        let cb = CisCodebook::build(n);
        assert!(cb.verify_cis());
        let mut rng = SplitMix64::new(5);
        for _ in 0..1000 {
            let support = 1 + rng.range_usize(0..4);
            let mut coeff = vec![0i64; n];
            for _ in 0..support {
                let i = rng.range_usize(0..n);
                coeff[i] += 1 + rng.range_u64(0..5) as i64;
            }
            let mut sum = (0i128, 0i128);
            let mut ctr = 0i128;
            for (i, &c) in coeff.iter().enumerate() {
                if c != 0 {
                    let p = cb.code(i as u32 + 1);
                    sum.0 += p.0 as i128 * c as i128;
                    sum.1 += p.1 as i128 * c as i128;
                    ctr += c as i128;
                }
            }
            let nonzero: Vec<usize> =
                (0..n).filter(|&i| coeff[i] != 0).collect();
            let decoded = cb.decode_ratio(sum, ctr);
            if nonzero.len() == 1 {
                assert_eq!(decoded, Some(nonzero[0] as u32 + 1));
            } else {
                assert_eq!(decoded, None, "support {nonzero:?} decoded as a singleton");
            }
        }
    }

    #[test]
    fn one_sparse_basics() {
        let cb = CisCodebook::build(8);
        let mut sk = OneSparseSketch::new();
        assert_eq!(sk.recover(&cb).unwrap(), Recovery::Empty);
        sk.update(&cb, 3, 5);
        let p = cb.code(3);
        assert_eq!(sk.l, (p.0 as i128 * 5, p.1 as i128 * 5));
        assert_eq!(sk.ctr, 5);
        assert_eq!(sk.recover(&cb).unwrap(), Recovery::One(3, 5));
        sk.update(&cb, 3, -5);
        assert!(sk.is_zero());
        assert_eq!(sk.recover(&cb).unwrap(), Recovery::Empty);
    }

    #[test]
    fn one_sparse_dense_pair() {
        let cb = CisCodebook::build(8);
        let mut sk = OneSparseSketch::new();
        sk.update(&cb, 1, 1);
        sk.update(&cb, 2, 1);
        assert_eq!(sk.recover(&cb).unwrap(), Recovery::Dense);
    }

    #[test]
    fn merge_equals_concatenation() {
        let cb = CisCodebook::build(16);
        let mut rng = SplitMix64::new(23);
        for _ in 0..1000 {
            let mut a = OneSparseSketch::new();
            let mut b = OneSparseSketch::new();
            let mut whole = OneSparseSketch::new();
            for _ in 0..rng.range_usize(0..20) {
                let i = 1 + rng.range_u64(0..16) as u32;
                let d = rng.range_u64(0..7) as i64 - 3;
                a.update(&cb, i, d);
                whole.update(&cb, i, d);
            }
            for _ in 0..rng.range_usize(0..20) {
                let i = 1 + rng.range_u64(0..16) as u32;
                let d = rng.range_u64(0..7) as i64 - 3;
                b.update(&cb, i, d);
                whole.update(&cb, i, d);
            }
            a.merge(&b);
            assert_eq!(a, whole);
        }
    }

    #[test]
    fn s_sparse_single() {
        let cb = CisCodebook::build(32);
        let r = s_sparse_recover(&[(7, 3)], 32, 4, 0.01, &cb, 1).unwrap();
        assert_eq!(r, SSparseResult::Exact(vec![(7, 3)]));
    }

    #[test]
    fn s_sparse_small_support_mostly_exact() {
        let cb = CisCodebook::build(32);
        let updates = [(2u32, 1i64), (5, 4), (9, 2)];
        let mut exact = 0;
        for seed in 0..100 {
            match s_sparse_recover(&updates, 32, 4, 0.01, &cb, seed).unwrap() {
                SSparseResult::Exact(v) => {
                    assert_eq!(v, vec![(2, 1), (5, 4), (9, 2)]);
                    exact += 1;
                }
                SSparseResult::Dense => {}
            }
        }
        assert!(exact >= 99, "only {exact}/100 exact");
    }

    #[test]
    fn s_sparse_oversize_support_reports_dense() {
        let cb = CisCodebook::build(64);
        let s = 4usize;
        let updates: Vec<(u32, i64)> = (1..=(2 * s + 1) as u32).map(|i| (i, 1)).collect();
        let mut dense = 0;
        for seed in 0..50 {
            if s_sparse_recover(&updates, 64, s, 0.01, &cb, seed).unwrap() == SSparseResult::Dense {
                dense += 1;
            }
        }
        assert!(dense > 25, "only {dense}/50 dense");
    }

    #[test]
    fn l0_singleton_and_empty() {
        let cb = CisCodebook::build(64);
        assert_eq!(l0_sample(&[], 64, 0.05, &cb, 3).unwrap(), L0Outcome::Empty);
        assert_eq!(
            l0_sample(&[(7, 3)], 64, 0.05, &cb, 3).unwrap(),
            L0Outcome::Sampled(7, 3)
        );
        // cancelling updates are an empty vector
        assert_eq!(
            l0_sample(&[(7, 3), (7, -3)], 64, 0.05, &cb, 3).unwrap(),
            L0Outcome::Empty
        );
    }

    #[test]
    fn l0_repetition_count_for_5_percent() {
        assert_eq!(l0_repetitions(0.05), 15);
    }

    #[test]
    fn l0_per_scale_success_at_correct_scale() {
        // at the scale j with 2^(j-1) < s <= 2^j, a single (rep, scale) cell
        // recovers some coordinate with frequency >= e^-1/2 - 0.05
        let n = 1024usize;
        let cb = CisCodebook::build(n);
        for s_size in [4usize, 16, 64] {
            let j = (s_size as f64).log2().ceil() as u32; // 2^(j-1) < s <= 2^j
            let updates: Vec<(u32, i64)> =
                (0..s_size).map(|k| (3 * k as u32 + 5, 1)).collect();
            let trials = 2_000u64;
            let mut hits = 0u64;
            for seed in 0..trials {
                let mut sampler = L0Sampler::new(n, 0.5, seed);
                for &(i, d) in &updates {
                    sampler.update(&cb, i, d);
                }
                if matches!(sampler.scale_recovery(0, j, &cb).unwrap(), Recovery::One(..)) {
                    hits += 1;
                }
            }
            let freq = hits as f64 / trials as f64;
            let floor = (-1.0f64).exp() / 2.0 - 0.05;
            assert!(freq >= floor, "s={s_size}, scale {j}: frequency {freq} < {floor}");
        }
    }

    #[test]
    fn l0_returns_support_members() {
        let cb = CisCodebook::build(256);
        let updates: Vec<(u32, i64)> = (0..16).map(|k| (10 * k + 3, k as i64 + 1)).collect();
        let mut ok = 0;
        let mut fail = 0;
        for seed in 0..200 {
            match l0_sample(&updates, 256, 0.05, &cb, seed).unwrap() {
                L0Outcome::Sampled(i, v) => {
                    let expect = updates.iter().find(|(c, _)| *c == i).map(|(_, v)| *v);
                    assert_eq!(expect, Some(v), "sampled ({i}, {v}) not in support");
                    ok += 1;
                }
                L0Outcome::Fail => fail += 1,
                L0Outcome::Empty => panic!("nonempty vector reported empty"),
            }
        }
        assert!(ok >= 190, "ok={ok} fail={fail}");
    }
}

//! Multipass drivers: BFS forests to a given depth (unweighted) and
//! (eta, zeta)-approximate Bellman-Ford explorations (weighted), both rooted
//! at a set of source vertices, with an optional offline overlay edge set
//! relaxed between stream passes.

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::hashing::PairwiseHash;
use crate::rng::SplitMix64;
use crate::samplers::{
    recover_guess, recover_parent, DistBank, GuessOutcome, ParentOutcome, RangeFamily, XorBank,
};
use crate::stream::{MultipassStream, SpaceLedger};
use crate::VertexId;
use std::collections::HashMap;

/// Repetition / retry knobs shared by the multipass drivers.
#[derive(Debug, Clone)]
pub struct ExploreConfig {
    /// Parallel sampler invocations per decision: `ceil(c1 * log_{8/7} n)`.
    pub c1: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig { c1: 3.0 }
    }
}

impl ExploreConfig {
    pub fn with_c1(c1: f64) -> ExploreConfig {
        ExploreConfig { c1 }
    }

    /// `|H_p|`: number of parallel sampler invocations.
    pub fn reps(&self, n: VertexId) -> usize {
        ((self.c1 * (n.max(2) as f64).ln() / (8f64 / 7.0).ln()).ceil() as usize).max(1)
    }
}

fn sample_hashes(n: VertexId, count: usize, rng: &mut SplitMix64) -> Vec<PairwiseHash> {
    (0..count)
        .map(|_| PairwiseHash::sample_with(n.max(2) as u64, rng))
        .collect()
}

// ---------------------------------------------------------------------------
// BFS forest
// ---------------------------------------------------------------------------

/// BFS forest of depth `eta` rooted at a source set. `layer[v]` is the hop
/// distance from the set; `parent[v]` is the sampled forest edge endpoint.
#[derive(Debug, Clone)]
pub struct BfsForest {
    pub layer: Vec<Option<u32>>,
    pub parent: Vec<Option<VertexId>>,
    pub edges: Vec<(VertexId, VertexId)>,
}

impl BfsForest {
    pub fn reached(&self, v: VertexId) -> bool {
        self.layer[v as usize].is_some()
    }

    /// Root of the tree containing `v` (follows parent pointers).
    pub fn root_of(&self, v: VertexId) -> Option<VertexId> {
        if !self.reached(v) {
            return None;
        }
        let mut cur = v;
        while let Some(p) = self.parent[cur as usize] {
            cur = p;
        }
        Some(cur)
    }

    /// Path from `v` up to its root.
    pub fn path_to_root(&self, v: VertexId) -> Option<Vec<VertexId>> {
        if !self.reached(v) {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur as usize] {
            path.push(p);
            cur = p;
        }
        Some(path)
    }
}

/// Depth-`eta` BFS forest rooted at `sources`, in exactly `eta` passes.
/// Every vertex within hop distance `eta` of the set lands on its exact BFS
/// layer whp; per phase, each still-uncovered vertex runs `reps` parallel
/// FindParents against the previous layer. A phase whose samplers all fail
/// for some vertex is retried once with fresh seeds, then aborts.
pub fn bfs_forest(
    stream: &MultipassStream,
    sources: &[VertexId],
    eta: u32,
    cfg: &ExploreConfig,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<BfsForest> {
    let n = stream.n();
    if sources.is_empty() {
        return Err(Error::InvalidParam("bfs_forest: empty source set".into()));
    }
    let mut layer: Vec<Option<u32>> = vec![None; n as usize + 1];
    let mut parent: Vec<Option<VertexId>> = vec![None; n as usize + 1];
    let mut edges = Vec::new();
    for &s in sources {
        layer[s as usize] = Some(0);
    }
    let reps = cfg.reps(n);
    let mut rng = SplitMix64::new(seed);

    for phase in 1..=eta {
        let mut in_prev = vec![false; n as usize + 1];
        for v in 1..=n {
            if layer[v as usize] == Some(phase - 1) {
                in_prev[v as usize] = true;
            }
        }
        let uncovered: Vec<VertexId> =
            (1..=n).filter(|&v| layer[v as usize].is_none()).collect();
        let mut phase_rng = rng.fork(phase as u64);

        let mut placed: Option<Vec<(VertexId, VertexId)>> = None;
        for attempt in 0..2 {
            let mut attempt_rng = phase_rng.fork(attempt);
            let hashes = sample_hashes(n, reps, &mut attempt_rng);
            let lambda = hashes.first().map(|h| h.lambda()).unwrap_or(1);
            let mut banks: Vec<XorBank> =
                vec![XorBank::new(lambda); uncovered.len() * reps];
            let index_of: HashMap<VertexId, usize> =
                uncovered.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            ledger.begin_pass();
            ledger.add("explore.bfs_banks", banks.len() as u64 * XorBank::bytes(lambda));

            stream.pass(|upd| {
                for (x, y) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    if in_prev[y as usize] {
                        if let Some(&i) = index_of.get(&x) {
                            for (r, h) in hashes.iter().enumerate() {
                                banks[i * reps + r].update(h.eval(y), upd.sign as i64, y as u64);
                            }
                        }
                    }
                }
            })?;

            let mut found: Vec<(VertexId, VertexId)> = Vec::new();
            let mut failed = false;
            'vertices: for (i, &x) in uncovered.iter().enumerate() {
                let mut any_fail = false;
                for r in 0..reps {
                    match recover_parent(&banks[i * reps + r], |y| in_prev[y as usize]) {
                        ParentOutcome::NoEdge => continue 'vertices,
                        ParentOutcome::Parent(y) => {
                            found.push((x, y));
                            continue 'vertices;
                        }
                        ParentOutcome::Fail => any_fail = true,
                    }
                }
                if any_fail {
                    failed = true;
                    break;
                }
            }
            if !failed {
                placed = Some(found);
                break;
            }
        }
        let found = placed.ok_or_else(|| {
            Error::SamplerAbort(format!("bfs_forest: phase {phase} failed twice"))
        })?;
        for (x, y) in found {
            layer[x as usize] = Some(phase);
            parent[x as usize] = Some(y);
            edges.push((x, y));
        }
    }
    Ok(BfsForest { layer, parent, edges })
}

/// Per-source BFS trees sharing the same passes: `depth` passes total, with
/// independent coverage state per source. Space scales with `|sources| * n`.
pub fn bfs_forest_per_source(
    stream: &MultipassStream,
    sources: &[VertexId],
    depth: u32,
    cfg: &ExploreConfig,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<Vec<BfsForest>> {
    let n = stream.n();
    let reps = cfg.reps(n);
    let mut rng = SplitMix64::new(seed);
    let mut forests: Vec<BfsForest> = sources
        .iter()
        .map(|&s| {
            let mut layer = vec![None; n as usize + 1];
            layer[s as usize] = Some(0);
            BfsForest { layer, parent: vec![None; n as usize + 1], edges: Vec::new() }
        })
        .collect();

    for phase in 1..=depth {
        let mut phase_rng = rng.fork(phase as u64);
        let in_prev: Vec<Vec<bool>> = forests
            .iter()
            .map(|f| {
                let mut m = vec![false; n as usize + 1];
                for v in 1..=n {
                    if f.layer[v as usize] == Some(phase - 1) {
                        m[v as usize] = true;
                    }
                }
                m
            })
            .collect();
        let uncovered: Vec<Vec<VertexId>> = forests
            .iter()
            .map(|f| (1..=n).filter(|&v| f.layer[v as usize].is_none()).collect())
            .collect();

        let mut placed: Option<Vec<Vec<(VertexId, VertexId)>>> = None;
        for attempt in 0..2 {
            let mut attempt_rng = phase_rng.fork(attempt);
            let hashes = sample_hashes(n, reps, &mut attempt_rng);
            let lambda = hashes.first().map(|h| h.lambda()).unwrap_or(1);
            // banks[src][i * reps + r]
            let mut banks: Vec<Vec<XorBank>> = uncovered
                .iter()
                .map(|u| vec![XorBank::new(lambda); u.len() * reps])
                .collect();
            let index_of: Vec<HashMap<VertexId, usize>> = uncovered
                .iter()
                .map(|u| u.iter().enumerate().map(|(i, &v)| (v, i)).collect())
                .collect();
            ledger.begin_pass();
            let total: u64 = banks.iter().map(|b| b.len() as u64).sum();
            ledger.add("explore.multi_bfs_banks", total * XorBank::bytes(lambda));

            stream.pass(|upd| {
                for (x, y) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    for (si, prev) in in_prev.iter().enumerate() {
                        if prev[y as usize] {
                            if let Some(&i) = index_of[si].get(&x) {
                                for (r, h) in hashes.iter().enumerate() {
                                    banks[si][i * reps + r]
                                        .update(h.eval(y), upd.sign as i64, y as u64);
                                }
                            }
                        }
                    }
                }
            })?;

            let mut all_found: Vec<Vec<(VertexId, VertexId)>> = Vec::new();
            let mut failed = false;
            'sources: for (si, unc) in uncovered.iter().enumerate() {
                let mut found = Vec::new();
                'vertices: for (i, &x) in unc.iter().enumerate() {
                    let mut any_fail = false;
                    for r in 0..reps {
                        match recover_parent(&banks[si][i * reps + r], |y| {
                            in_prev[si][y as usize]
                        }) {
                            ParentOutcome::NoEdge => continue 'vertices,
                            ParentOutcome::Parent(y) => {
                                found.push((x, y));
                                continue 'vertices;
                            }
                            ParentOutcome::Fail => any_fail = true,
                        }
                    }
                    if any_fail {
                        failed = true;
                        break 'sources;
                    }
                }
                all_found.push(found);
            }
            if !failed {
                placed = Some(all_found);
                break;
            }
        }
        let all_found = placed.ok_or_else(|| {
            Error::SamplerAbort(format!("bfs_forest_per_source: phase {phase} failed twice"))
        })?;
        for (si, found) in all_found.into_iter().enumerate() {
            for (x, y) in found {
                forests[si].layer[x as usize] = Some(phase);
                forests[si].parent[x as usize] = Some(y);
                forests[si].edges.push((x, y));
            }
        }
    }
    Ok(forests)
}

// ---------------------------------------------------------------------------
// Approximate Bellman-Ford
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Stream,
    Overlay,
}

/// Extra weighted edges relaxed offline after each stream pass.
pub type OverlayEdge = (VertexId, VertexId, Dist);

/// One step of a reported pointer path: `(vertex, edge to the previous
/// element)`.
pub type PathStep = (VertexId, Option<(Dist, EdgeKind)>);

/// One committed estimate version. A vertex gains a new version whenever a
/// phase commit or an overlay round improves it; the version consumed by a
/// dependent estimate is pinned by epoch, so reported paths stay consistent
/// even after the parent improves again later.
#[derive(Debug, Clone, Copy)]
struct EstimateVersion {
    epoch: u32,
    #[allow(dead_code)] // retained for debugging dumps
    dist: Dist,
    parent: Option<(VertexId, Dist, EdgeKind)>,
}

#[derive(Debug, Clone)]
pub struct DistanceEstimates {
    /// Latest estimates; never below the hop-bounded true distance.
    pub dist: Vec<Option<Dist>>,
    history: Vec<Vec<EstimateVersion>>,
    /// Candidates that fell beyond the `[1, 2*Lambda]` search space; stays 0
    /// on inputs whose aspect bound is honest.
    pub clamped_candidates: u64,
}

impl DistanceEstimates {
    pub fn new(n: VertexId, sources: &[VertexId]) -> DistanceEstimates {
        let mut dist = vec![None; n as usize + 1];
        let mut history = vec![Vec::new(); n as usize + 1];
        for &s in sources {
            dist[s as usize] = Some(Dist::ZERO);
            history[s as usize].push(EstimateVersion {
                epoch: 0,
                dist: Dist::ZERO,
                parent: None,
            });
        }
        DistanceEstimates { dist, history, clamped_candidates: 0 }
    }

    fn record(
        &mut self,
        v: VertexId,
        epoch: u32,
        dist: Dist,
        parent: Option<(VertexId, Dist, EdgeKind)>,
    ) {
        self.dist[v as usize] = Some(dist);
        self.history[v as usize].push(EstimateVersion { epoch, dist, parent });
    }

    fn version_at(&self, v: VertexId, epoch: u32) -> Option<&EstimateVersion> {
        self.history[v as usize]
            .iter()
            .rev()
            .find(|ver| ver.epoch <= epoch)
    }

    /// Current parent link of `v`.
    pub fn parent_of(&self, v: VertexId) -> Option<(VertexId, Dist, EdgeKind)> {
        self.history[v as usize].last().and_then(|ver| ver.parent)
    }

    /// Pointer path from `v` to its source. The walk follows the estimate
    /// versions that were actually consumed, so edge weights telescope
    /// exactly to `dist[v]` and the path uses at most one stream hop (plus
    /// one overlay hop) per phase.
    pub fn pointer_path(&self, v: VertexId) -> Option<Vec<PathStep>> {
        self.dist[v as usize]?;
        let mut out = vec![(v, None)];
        let mut cur = *self.history[v as usize].last()?;
        loop {
            match cur.parent {
                None => return Some(out),
                Some((p, w, kind)) => {
                    out.push((p, Some((w, kind))));
                    // dependencies are strictly older, so this terminates
                    cur = *self.version_at(p, cur.epoch.saturating_sub(1))?;
                }
            }
        }
    }

    /// Exact weight of the pointer path; equals `dist[v]` by construction.
    #[allow(clippy::type_complexity)]
    pub fn path_weight(&self, v: VertexId) -> Option<Dist> {
        let path = self.pointer_path(v)?;
        Some(path.iter().filter_map(|&(_, link)| link.map(|(w, _)| w)).sum())
    }
}

/// `eta` phases of (1+zeta)-approximate Bellman-Ford from `sources`, one
/// stream pass per phase, with per-phase shadow commits. `lambda_bound` is
/// the aspect bound: the guess space is `[1, 2*lambda_bound]`. When
/// `overlay` is present, one offline relaxation round over those edges
/// follows every phase.
#[allow(clippy::too_many_arguments)]
pub fn approx_bellman_ford(
    stream: &MultipassStream,
    sources: &[VertexId],
    eta: u32,
    zeta: f64,
    lambda_bound: Dist,
    overlay: Option<&[OverlayEdge]>,
    cfg: &ExploreConfig,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<DistanceEstimates> {
    approx_bellman_ford_capped(
        stream,
        sources,
        eta,
        zeta,
        lambda_bound,
        overlay,
        None,
        cfg,
        ledger,
        seed,
    )
}

/// [`approx_bellman_ford`] with an explicit distance cap: guesses beyond
/// `distance_cap` are discarded (the exploration is bounded, so estimates
/// past the cap are never consumed). With `None` the search space is the
/// full `[1, 2*lambda_bound]` and out-of-space candidates are counted as
/// clamp anomalies.
#[allow(clippy::too_many_arguments)]
pub fn approx_bellman_ford_capped(
    stream: &MultipassStream,
    sources: &[VertexId],
    eta: u32,
    zeta: f64,
    lambda_bound: Dist,
    overlay: Option<&[OverlayEdge]>,
    distance_cap: Option<f64>,
    cfg: &ExploreConfig,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<DistanceEstimates> {
    let n = stream.n();
    if sources.is_empty() {
        return Err(Error::InvalidParam("approx_bellman_ford: empty source set".into()));
    }
    if zeta <= 0.0 {
        return Err(Error::InvalidParam("zeta must be > 0".into()));
    }
    let zeta_prime = zeta / (2.0 * eta.max(1) as f64);
    let full_space = 2.0 * lambda_bound.to_f64();
    let limit = distance_cap.map_or(full_space, |c| c.min(full_space));
    if limit < 1.0 {
        return Ok(DistanceEstimates::new(n, sources));
    }
    let count_clamps = distance_cap.is_none();
    let fam = RangeFamily::covering(zeta_prime, limit);
    let reps = cfg.reps(n);
    let mut rng = SplitMix64::new(seed);
    let mut est = DistanceEstimates::new(n, sources);
    let mut is_source = vec![false; n as usize + 1];
    for &s in sources {
        is_source[s as usize] = true;
    }

    for phase in 1..=eta {
        let frozen: Vec<Option<Dist>> = est.dist.clone();
        let mut phase_rng = rng.fork(phase as u64);

        // (vertex, new estimate, parent) commits plus the clamp count
        type PhaseCommits = (Vec<(VertexId, Dist, VertexId)>, u64);
        let mut committed: Option<PhaseCommits> = None;
        for attempt in 0..2 {
            let mut attempt_rng = phase_rng.fork(attempt);
            let hashes = sample_hashes(n, reps, &mut attempt_rng);
            let lambda = hashes.first().map(|h| h.lambda()).unwrap_or(1);
            // guess banks allocated lazily per (vertex, sub-range)
            let mut bank_of: HashMap<(VertexId, u32), usize> = HashMap::new();
            let mut banks: Vec<DistBank> = Vec::new();
            let mut clamped = 0u64;
            ledger.begin_pass();

            stream.pass(|upd| {
                let Some(w) = upd.weight else { return };
                for (x, y) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    if is_source[x as usize] {
                        continue;
                    }
                    let Some(dy) = frozen[y as usize] else { continue };
                    let cand = dy + w;
                    let Some(j) = fam.index_of(cand) else {
                        if count_clamps {
                            clamped += 1;
                        }
                        continue;
                    };
                    let start = *bank_of.entry((x, j as u32)).or_insert_with(|| {
                        let s = banks.len();
                        banks.extend((0..reps).map(|_| DistBank::new(lambda)));
                        s
                    });
                    for (r, h) in hashes.iter().enumerate() {
                        banks[start + r].update(h.eval(y), upd.sign as i64, cand, y as u64);
                    }
                }
            })?;
            ledger.add("explore.bfe_banks", banks.len() as u64 * DistBank::bytes(lambda));

            // Recover: per vertex, the smallest sub-range index with a
            // successful (finite) guess wins; ties inside a guess break
            // towards the smallest returned distance.
            let mut by_vertex: HashMap<VertexId, Vec<u32>> = HashMap::new();
            for &(x, j) in bank_of.keys() {
                by_vertex.entry(x).or_default().push(j);
            }
            let mut updates: Vec<(VertexId, Dist, VertexId)> = Vec::new();
            let mut failed = false;
            'vertices: for (&x, ranges) in &by_vertex {
                let mut ranges = ranges.clone();
                ranges.sort_unstable();
                for j in ranges {
                    let start = bank_of[&(x, j)];
                    let range = fam.range(j as usize);
                    let mut best: Option<(Dist, VertexId)> = None;
                    let mut any_fail = false;
                    for r in 0..reps {
                        match recover_guess(&banks[start + r], range, |y| frozen[y as usize]) {
                            GuessOutcome::NoCandidate => continue,
                            GuessOutcome::Estimate { dist, parent } => {
                                if best.is_none_or(|(b, _)| dist < b) {
                                    best = Some((dist, parent));
                                }
                            }
                            GuessOutcome::Fail => any_fail = true,
                        }
                    }
                    match best {
                        Some((dist, parent)) => {
                            let improving = frozen[x as usize].is_none_or(|cur| dist < cur);
                            if improving {
                                updates.push((x, dist, parent));
                            }
                            continue 'vertices; // smallest successful j decides
                        }
                        None if any_fail => {
                            failed = true;
                            break 'vertices;
                        }
                        None => {} // genuinely empty sub-range, try the next
                    }
                }
            }
            if !failed {
                committed = Some((updates, clamped));
                break;
            }
        }

        let (updates, clamped) = committed.ok_or_else(|| {
            Error::SamplerAbort(format!("approx_bellman_ford: phase {phase} failed twice"))
        })?;
        est.clamped_candidates += clamped;
        // epochs: phase p commit = 2p-1, its overlay round = 2p; an estimate
        // committed at 2p-1 consumed parent versions of epoch <= 2p-2.
        let commit_epoch = 2 * phase - 1;
        for (x, dist, parent) in updates {
            let edge_w = dist - frozen[parent as usize].expect("parent estimate frozen");
            est.record(x, commit_epoch, dist, Some((parent, edge_w, EdgeKind::Stream)));
        }

        // offline overlay relaxation: one synchronous round
        if let Some(edges) = overlay {
            let snapshot = est.dist.clone();
            let mut improvements: Vec<(VertexId, Dist, VertexId, Dist)> = Vec::new();
            for &(a, b, w) in edges {
                for (from, to) in [(a, b), (b, a)] {
                    if let Some(df) = snapshot[from as usize] {
                        let cand = df + w;
                        if est.dist[to as usize].is_none_or(|cur| cand < cur)
                            && !is_source[to as usize]
                        {
                            improvements.push((to, cand, from, w));
                        }
                    }
                }
            }
            for (to, cand, from, w) in improvements {
                if est.dist[to as usize].is_none_or(|cur| cand < cur) {
                    est.record(to, 2 * phase, cand, Some((from, w, EdgeKind::Overlay)));
                }
            }
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::stream::{generate_stream, EdgeUpdate, MultipassStream};

    fn unweighted(n: VertexId, edges: &[(VertexId, VertexId)]) -> MultipassStream {
        let ups: Vec<EdgeUpdate> = edges.iter().map(|&(u, v)| EdgeUpdate::insert(u, v)).collect();
        MultipassStream::from_updates(n, false, ups).unwrap()
    }

    fn weighted(n: VertexId, edges: &[(VertexId, VertexId, i64)]) -> MultipassStream {
        let ups: Vec<EdgeUpdate> = edges
            .iter()
            .map(|&(u, v, w)| EdgeUpdate::insert_w(u, v, Dist::from_int(w)))
            .collect();
        MultipassStream::from_updates(n, true, ups).unwrap()
    }

    #[test]
    fn bfs_path_layers() {
        let edges: Vec<(VertexId, VertexId)> = (1..10).map(|v| (v, v + 1)).collect();
        let s = unweighted(10, &edges);
        let mut ledger = SpaceLedger::new();
        let f = bfs_forest(&s, &[1], 3, &ExploreConfig::default(), &mut ledger, 42).unwrap();
        assert_eq!(f.layer[1], Some(0));
        assert_eq!(f.layer[2], Some(1));
        assert_eq!(f.layer[3], Some(2));
        assert_eq!(f.layer[4], Some(3));
        for v in 5..=10 {
            assert_eq!(f.layer[v], None, "vertex {v} beyond depth");
        }
        assert_eq!(s.passes_taken(), 3);
    }

    #[test]
    fn bfs_all_sources_trivial() {
        let s = unweighted(6, &[(1, 2), (3, 4)]);
        let mut ledger = SpaceLedger::new();
        let all: Vec<VertexId> = (1..=6).collect();
        let f = bfs_forest(&s, &all, 2, &ExploreConfig::default(), &mut ledger, 1).unwrap();
        assert!(f.edges.is_empty());
        for v in 1..=6usize {
            assert_eq!(f.layer[v], Some(0));
            assert_eq!(f.parent[v], None);
        }
    }

#[allow(clippy::needless_range_loop)]
    #[test]
    fn bfs_matches_oracle_on_random_graphs() {
        for seed in 0..10 {
            let s = generate_stream(60, 120, 1.0, false, Dist::ONE, seed).unwrap();
            let g = s.materialize().unwrap();
            let mut ledger = SpaceLedger::new();
            let f =
                bfs_forest(&s, &[1, 2], 4, &ExploreConfig::default(), &mut ledger, seed ^ 7)
                    .unwrap();
            let oracle_dist = oracle::exact_bfs(&g, &[1, 2]);
            for v in 1..=60usize {
                let expect = oracle_dist[v].filter(|&d| d <= 4);
                assert_eq!(f.layer[v], expect, "vertex {v}, seed {seed}");
            }
            for &(x, y) in &f.edges {
                assert!(g.has_edge(x, y));
            }
        }
    }

    #[test]
    fn bfe_single_edge_exact() {
        let s = weighted(3, &[(1, 2, 5)]);
        let mut ledger = SpaceLedger::new();
        let est = approx_bellman_ford(
            &s,
            &[1],
            1,
            0.1,
            Dist::from_int(10),
            None,
            &ExploreConfig::default(),
            &mut ledger,
            3,
        )
        .unwrap();
        assert_eq!(est.dist[2], Some(Dist::from_int(5)));
        assert_eq!(est.dist[3], None);
        assert_eq!(est.clamped_candidates, 0);
    }

    #[test]
    fn bfe_triangle_two_hops() {
        // s=1, a=2, b=3: 1-2 (1), 2-3 (1), 1-3 (3); eta=2, zeta=0.2
        let s = weighted(3, &[(1, 2, 1), (2, 3, 1), (1, 3, 3)]);
        let mut ledger = SpaceLedger::new();
        let est = approx_bellman_ford(
            &s,
            &[1],
            2,
            0.2,
            Dist::from_int(4),
            None,
            &ExploreConfig::default(),
            &mut ledger,
            11,
        )
        .unwrap();
        let db = est.dist[3].unwrap().to_f64();
        assert!((2.0..=2.4 + 1e-9).contains(&db), "d(b) = {db}");
    }

#[allow(clippy::needless_range_loop)]
    #[test]
    fn bfe_sandwich_on_random_graphs() {
        let cfg = ExploreConfig::default();
        for seed in 0..5 {
            let s = generate_stream(40, 100, 0.5, true, Dist::from_int(8), 100 + seed).unwrap();
            let g = s.materialize().unwrap();
            let passes_before = s.passes_taken();
            let eta = 4u32;
            let zeta = 0.25;
            let lambda = Dist::from_int(39 * 8);
            let mut ledger = SpaceLedger::new();
            let est =
                approx_bellman_ford(&s, &[1], eta, zeta, lambda, None, &cfg, &mut ledger, seed)
                    .unwrap();
            let oracle_d = oracle::hop_bounded_bf(&g, 1, eta);
            for v in 1..=40usize {
                match (oracle_d[v], est.dist[v]) {
                    (Some(t), Some(e)) => {
                        assert!(e >= t, "v={v}: est {e} below true {t}");
                        assert!(
                            e.to_f64() <= (1.0 + zeta) * t.to_f64() + 1e-9,
                            "v={v}: est {e} above (1+zeta) * {t}"
                        );
                    }
                    (None, None) => {}
                    (Some(t), None) => panic!("v={v} reachable at {t} but no estimate"),
                    (None, Some(e)) => panic!("v={v} unreachable but estimated {e}"),
                }
            }
            assert_eq!(est.clamped_candidates, 0);
            assert_eq!(s.passes_taken() - passes_before, eta as u64);
        }
    }

    #[test]
    fn bfe_pointer_paths_telescope() {
        let s = generate_stream(30, 70, 1.0, true, Dist::from_int(5), 9).unwrap();
        let g = s.materialize().unwrap();
        let mut ledger = SpaceLedger::new();
        let est = approx_bellman_ford(
            &s,
            &[3],
            5,
            0.3,
            Dist::from_int(29 * 5),
            None,
            &ExploreConfig::default(),
            &mut ledger,
            21,
        )
        .unwrap();
        for v in 1..=30u32 {
            let Some(d) = est.dist[v as usize] else { continue };
            let path = est.pointer_path(v).unwrap();
            assert!(path.len() <= 6, "path longer than eta+1");
            // path weight telescopes to the estimate, and each stream edge
            // exists in the final graph with exactly that weight
            let mut total = Dist::ZERO;
            for i in 1..path.len() {
                let (parent, link) = path[i];
                let (child, _) = path[i - 1];
                let (w, kind) = link.unwrap();
                assert_eq!(kind, EdgeKind::Stream);
                assert_eq!(g.edge_weight(child, parent), Some(w));
                total = total + w;
            }
            assert_eq!(total, d, "pointer path weight != estimate at {v}");
            assert_eq!(est.path_weight(v), Some(d));
            assert_eq!(path.last().unwrap().0, 3);
        }
    }

    #[test]
    fn bfe_overlay_shortcut_used() {
        // 1 -2- 2 -2- 3 plus overlay edge (1,3,2.5): with eta=1 the stream
        // alone cannot reach 3; the offline overlay round can.
        let s = weighted(3, &[(1, 2, 2), (2, 3, 2)]);
        let overlay = vec![(1u32, 3u32, Dist::parse("2.5").unwrap())];
        let mut ledger = SpaceLedger::new();
        let est = approx_bellman_ford(
            &s,
            &[1],
            1,
            0.2,
            Dist::from_int(8),
            Some(&overlay),
            &ExploreConfig::default(),
            &mut ledger,
            5,
        )
        .unwrap();
        assert_eq!(est.dist[3], Some(Dist::parse("2.5").unwrap()));
        assert_eq!(est.parent_of(3).unwrap().2, EdgeKind::Overlay);
        assert_eq!(est.path_weight(3), est.dist[3]);
    }

#[allow(clippy::needless_range_loop)]
    #[test]
    fn bfs_aborts_after_retry_when_repetitions_exhausted() {
        // one FindParent per vertex on a moderately dense graph cannot place
        // every vertex; the phase retries once, then aborts
        let s = generate_stream(50, 400, 0.0, false, Dist::ONE, 12).unwrap();
        let mut ledger = SpaceLedger::new();
        let cfg = ExploreConfig::with_c1(0.01); // reps = 1
        let out = bfs_forest(&s, &[1], 2, &cfg, &mut ledger, 3);
        assert!(matches!(out, Err(crate::error::Error::SamplerAbort(_))));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn per_source_forests_match_individual_bfs() {
        let s = generate_stream(40, 90, 0.5, false, Dist::ONE, 31).unwrap();
        let g = s.materialize().unwrap();
        let passes_before = s.passes_taken();
        let mut ledger = SpaceLedger::new();
        let sources = [1u32, 5, 9];
        let forests = bfs_forest_per_source(
            &s,
            &sources,
            3,
            &ExploreConfig::default(),
            &mut ledger,
            8,
        )
        .unwrap();
        assert_eq!(s.passes_taken() - passes_before, 3);
        for (i, &src) in sources.iter().enumerate() {
            let oracle_dist = oracle::exact_bfs(&g, &[src]);
            for v in 1..=40usize {
                let expect = oracle_dist[v].filter(|&d| d <= 3);
                assert_eq!(forests[i].layer[v], expect, "src {src}, v {v}");
            }
        }
    }
}

//! Near-additive (1+eps, beta)-spanner construction for unweighted dynamic
//! streams: superclustering via BFS forests, interconnection via
//! FindNewVisitor / FindParent sub-phases, offline tree pruning.

use crate::error::{Error, Result};
use crate::explore::{bfs_forest, ExploreConfig};
use crate::hashing::PairwiseHash;
use crate::rng::SplitMix64;
use crate::samplers::{
    recover_source, CisBank, SingleXorSlot, SourceOutcome, VisitorLists, XorBank,
};
use crate::stream::{MultipassStream, SpaceLedger};
use crate::VertexId;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Phase schedule: degree thresholds, distance thresholds and radii.
#[derive(Debug, Clone)]
pub struct SpannerParams {
    pub n: VertexId,
    pub eps: f64,
    pub kappa: f64,
    pub rho: f64,
    /// Last phase index; phases run `0..=ell`, the last one skips
    /// superclustering.
    pub ell: usize,
    /// Last phase of the exponential growth stage.
    pub i0: usize,
    /// `deg_i = n^(2^i / kappa)` up to `i0`, then `n^rho`.
    pub deg: Vec<f64>,
    /// `delta_i = ceil((1/eps)^i) + 4 R_i`.
    pub delta: Vec<u64>,
    /// `R_0 = 0`, `R_{i+1} = R_i + delta_i`.
    pub radius: Vec<u64>,
    /// Additive stretch `((log kr + 1/r) / eps)^(log kr + 1/r)`.
    pub beta: f64,
    /// FindParent / pass-2 repetition constant.
    pub c1: f64,
    /// Visitor bound constant (`N_i = cp1 * deg_i * ln n`).
    pub cp1: f64,
    /// Attempt constant (`mu_i = 16 * c4 * N_i * ln n`).
    pub c4: f64,
    /// Per-vertex visitor list capacity `ceil(cp1 * n^rho * ln n)`.
    pub visitor_cap: usize,
    /// Differential-testing switch: use the full slot ladder in pass 2
    /// instead of the known-count single slot.
    pub full_ladder_pass2: bool,
}

impl SpannerParams {
    pub fn reps(&self) -> usize {
        ExploreConfig::with_c1(self.c1).reps(self.n)
    }

    /// Visitor bound `N_i` for phase `i`.
    pub fn visitor_bound(&self, i: usize) -> f64 {
        self.cp1 * self.deg[i] * (self.n as f64).ln()
    }

    /// First-pass attempt count `mu_i` for phase `i`.
    pub fn attempts(&self, i: usize) -> usize {
        ((16.0 * self.c4 * self.visitor_bound(i) * (self.n as f64).ln()).ceil() as usize).max(1)
    }

    /// Interconnection depth: `floor(delta_i / 2)`, except depth 1 in
    /// phase 0.
    pub fn interconnect_depth(&self, i: usize) -> u64 {
        if i == 0 {
            1
        } else {
            self.delta[i] / 2
        }
    }
}

pub fn spanner_schedule(n: VertexId, eps: f64, kappa: f64, rho: f64) -> Result<SpannerParams> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::InvalidParam(format!("eps must be in (0,1), got {eps}")));
    }
    if kappa < 2.0 {
        return Err(Error::InvalidParam(format!("kappa must be >= 2, got {kappa}")));
    }
    if rho < 1.0 / kappa || rho > 0.5 {
        return Err(Error::InvalidParam(format!(
            "rho must be in [1/kappa, 1/2], got {rho}"
        )));
    }
    if kappa * rho < 1.0 {
        return Err(Error::InvalidParam("kappa * rho must be >= 1".into()));
    }
    let i0 = (kappa * rho).log2().floor() as usize;
    let ell = i0 + ((kappa + 1.0) / (kappa * rho)).ceil() as usize - 1;
    let nf = n as f64;
    let mut deg = Vec::with_capacity(ell + 1);
    for i in 0..=ell {
        let exponent = if i <= i0 { 2f64.powi(i as i32) / kappa } else { rho };
        deg.push(nf.powf(exponent.min(rho)));
    }
    let mut delta = Vec::with_capacity(ell + 1);
    let mut radius = vec![0u64];
    for i in 0..=ell {
        let d = (1.0 / eps).powi(i as i32).ceil() as u64 + 4 * radius[i];
        delta.push(d);
        radius.push(radius[i] + d);
    }
    let expo = (kappa * rho).log2() + 1.0 / rho;
    let beta = (expo / eps).powf(expo);
    let visitor_cap = (3.0 * nf.powf(rho) * nf.ln()).ceil() as usize;
    Ok(SpannerParams {
        n,
        eps,
        kappa,
        rho,
        ell,
        i0,
        deg,
        delta,
        radius,
        beta,
        c1: 3.0,
        cp1: 3.0,
        c4: 2.0,
        visitor_cap,
        full_ladder_pass2: false,
    })
}

// ---------------------------------------------------------------------------
// Clusters
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Cluster {
    pub center: VertexId,
    pub members: Vec<VertexId>,
}

#[derive(Debug, Clone, Default)]
pub struct ClusterPartition {
    pub clusters: Vec<Cluster>,
}

impl ClusterPartition {
    pub fn singletons(n: VertexId) -> ClusterPartition {
        ClusterPartition {
            clusters: (1..=n).map(|v| Cluster { center: v, members: vec![v] }).collect(),
        }
    }

    pub fn centers(&self) -> Vec<VertexId> {
        self.clusters.iter().map(|c| c.center).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SuperclusteringOutcome {
    pub next: ClusterPartition,
    pub edges: Vec<(VertexId, VertexId)>,
    /// Per input-cluster flag: absorbed into some supercluster this phase
    /// (sampled clusters absorb themselves).
    pub superclustered: Vec<bool>,
}

/// Superclustering step of phase `i`: sample clusters with probability
/// `1/deg_i`, grow a depth-`delta_i` BFS forest from the sampled centers,
/// absorb every unsampled cluster whose center the forest reached, and add
/// the forest paths root -> center to the spanner.
pub fn superclustering_step(
    stream: &MultipassStream,
    p_i: &ClusterPartition,
    i: usize,
    params: &SpannerParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<SuperclusteringOutcome> {
    let mut rng = SplitMix64::new(seed);
    let sample_p = 1.0 / params.deg[i];
    let sampled: Vec<bool> = p_i.clusters.iter().map(|_| rng.coin(sample_p)).collect();
    let superclustered = vec![false; p_i.clusters.len()];
    if !sampled.iter().any(|&s| s) {
        return Ok(SuperclusteringOutcome {
            next: ClusterPartition::default(),
            edges: Vec::new(),
            superclustered,
        });
    }
    let mut superclustered = superclustered;
    let centers: Vec<VertexId> = p_i
        .clusters
        .iter()
        .zip(&sampled)
        .filter(|(_, &s)| s)
        .map(|(c, _)| c.center)
        .collect();
    let cfg = ExploreConfig::with_c1(params.c1);
    let forest =
        bfs_forest(stream, &centers, params.delta[i] as u32, &cfg, ledger, rng.next_u64())?;

    // Root each captured unsampled cluster under its forest root.
    let mut attached: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for (idx, cluster) in p_i.clusters.iter().enumerate() {
        if sampled[idx] {
            superclustered[idx] = true;
            continue;
        }
        if let Some(root) = forest.root_of(cluster.center) {
            superclustered[idx] = true;
            attached.entry(root).or_default().push(idx);
            let path = forest.path_to_root(cluster.center).unwrap();
            for w in path.windows(2) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                edges.insert((a, b));
            }
        }
    }

    let mut next = ClusterPartition::default();
    for (idx, cluster) in p_i.clusters.iter().enumerate() {
        if !sampled[idx] {
            continue;
        }
        let mut members = cluster.members.clone();
        if let Some(list) = attached.get(&cluster.center) {
            for &ai in list {
                members.extend_from_slice(&p_i.clusters[ai].members);
            }
        }
        members.sort_unstable();
        next.clusters.push(Cluster { center: cluster.center, members });
    }
    Ok(SuperclusteringOutcome { next, edges: edges.into_iter().collect(), superclustered })
}

// ---------------------------------------------------------------------------
// Interconnection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct InterconnectStats {
    pub visitor_overflows: u64,
    pub stale_tuples: u64,
    pub subphase_retries: u64,
}

/// Interconnection step of phase `i`: the centers of `u_i` explore to depth
/// `floor(delta_i / 2)` (depth 1 in phase 0); each sub-phase takes two
/// passes (FindNewVisitor then FindParent against the previous layer), and
/// offline pruning keeps exactly the shortest root-to-center paths.
#[allow(clippy::too_many_arguments)]
pub fn interconnection_step(
    stream: &MultipassStream,
    u_i: &[Cluster],
    all_centers: &[VertexId],
    i: usize,
    params: &SpannerParams,
    cb: &crate::encoding::CisCodebook,
    ledger: &mut SpaceLedger,
    seed: u64,
    stats: &mut InterconnectStats,
) -> Result<Vec<(VertexId, VertexId)>> {
    let n = stream.n();
    if u_i.is_empty() {
        return Ok(Vec::new());
    }
    let depth = params.interconnect_depth(i);
    let mu = params.attempts(i);
    let reps = params.reps();
    let mut rng = SplitMix64::new(seed);

    let mut lists = VisitorLists::new(n);
    // S_{j-1}: per source, the vertices placed on the previous layer.
    let mut s_prev: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
    for c in u_i {
        lists.insert(c.center, c.center);
        s_prev.entry(c.center).or_default().insert(c.center);
    }
    // Per-source tree edges (child, parent), grown layer by layer.
    let mut trees: BTreeMap<VertexId, Vec<(VertexId, VertexId)>> = BTreeMap::new();

    for subphase in 1..=depth {
        let mut sub_rng = rng.fork(subphase);
        type Layer = Vec<(VertexId, VertexId, i64)>;
        type Parents = Vec<(VertexId, VertexId, VertexId)>;
        let mut done: Option<(Layer, Parents)> = None;
        for attempt in 0..2 {
            if attempt == 1 {
                stats.subphase_retries += 1;
            }
            let mut attempt_rng = sub_rng.fork(attempt);

            // ---- pass 1: discover this layer's sources per vertex ----
            let hashes: Vec<PairwiseHash> = (0..mu)
                .map(|_| PairwiseHash::sample_with(n.max(2) as u64, &mut attempt_rng))
                .collect();
            let lambda = hashes[0].lambda();
            let mut bank_start: HashMap<VertexId, usize> = HashMap::new();
            let mut banks: Vec<CisBank> = Vec::new();
            ledger.begin_pass();
            stream.pass(|upd| {
                for (v, u) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    let lu = lists.list(u);
                    if lu.is_empty() {
                        continue;
                    }
                    let mut start_cached: Option<usize> = None;
                    for &s in lu {
                        if lists.contains(v, s) {
                            continue;
                        }
                        let start = *start_cached.get_or_insert_with(|| {
                            *bank_start.entry(v).or_insert_with(|| {
                                let st = banks.len();
                                banks.extend((0..mu).map(|_| CisBank::new(lambda)));
                                st
                            })
                        });
                        let code = cb.code(s);
                        for (r, h) in hashes.iter().enumerate() {
                            banks[start + r].update(h.eval(s), upd.sign as i64, code);
                        }
                    }
                }
            })?;
            ledger.add("spanner.visitor_banks", banks.len() as u64 * CisBank::bytes(lambda));

            // recover: all distinct sources per active vertex
            let mut layer: Layer = Vec::new();
            let mut pass1_failed = false;
            let mut active: Vec<(VertexId, usize)> =
                bank_start.iter().map(|(&v, &s)| (v, s)).collect();
            active.sort_unstable();
            for (v, start) in active {
                let nonempty = (0..mu).any(|r| !banks[start + r].is_zero());
                let mut found: BTreeMap<VertexId, i64> = BTreeMap::new();
                for r in 0..mu {
                    if let SourceOutcome::Found { source, count } =
                        recover_source(&banks[start + r], cb)
                    {
                        found.entry(source).or_insert(count);
                    }
                }
                if nonempty && found.is_empty() {
                    pass1_failed = true;
                    break;
                }
                for (s, count) in found {
                    layer.push((v, s, count));
                }
            }
            if pass1_failed {
                continue; // retry sub-phase with fresh seeds
            }

            // ---- pass 2: find a parent per (v, s) tuple ----
            let h2: Vec<PairwiseHash> = (0..reps)
                .map(|_| PairwiseHash::sample_with(n.max(2) as u64, &mut attempt_rng))
                .collect();
            let mut tuples_of: HashMap<VertexId, Vec<usize>> = HashMap::new();
            for (t, &(v, _, _)) in layer.iter().enumerate() {
                tuples_of.entry(v).or_default().push(t);
            }
            let use_full = params.full_ladder_pass2;
            let mut slots: Vec<SingleXorSlot> = Vec::new();
            let mut full_banks: Vec<XorBank> = Vec::new();
            if use_full {
                full_banks = vec![XorBank::new(lambda); layer.len() * reps];
            } else {
                slots = layer
                    .iter()
                    .flat_map(|&(_, _, k)| {
                        (0..reps).map(move |_| SingleXorSlot::for_known_count(lambda, k))
                    })
                    .collect();
            }
            ledger.begin_pass();
            ledger.add(
                "spanner.parent_slots",
                (layer.len() * reps) as u64 * if use_full { XorBank::bytes(lambda) } else { 24 },
            );
            stream.pass(|upd| {
                for (v, u) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    let Some(ts) = tuples_of.get(&v) else { continue };
                    for &t in ts {
                        let s = layer[t].1;
                        let prev_ok = s_prev.get(&s).is_some_and(|set| set.contains(&u));
                        if !prev_ok {
                            continue;
                        }
                        for (r, h) in h2.iter().enumerate() {
                            if use_full {
                                full_banks[t * reps + r]
                                    .update(h.eval(u), upd.sign as i64, u as u64);
                            } else {
                                slots[t * reps + r].update(h.eval(u), upd.sign as i64, u as u64);
                            }
                        }
                    }
                }
            })?;

            let mut parents: Parents = Vec::new();
            let mut pass2_failed = false;
            'tuples: for (t, &(v, s, _)) in layer.iter().enumerate() {
                let member = |u: VertexId| s_prev.get(&s).is_some_and(|set| set.contains(&u));
                let mut any_signal = false;
                for r in 0..reps {
                    let (iso, zero) = if use_full {
                        let b = &full_banks[t * reps + r];
                        (b.isolated(), b.is_zero())
                    } else {
                        let sl = &slots[t * reps + r];
                        (sl.isolated(), sl.is_zero())
                    };
                    match iso {
                        Some(name) => {
                            if let Ok(p) = u32::try_from(name) {
                                if p >= 1 && member(p) {
                                    parents.push((v, s, p));
                                    continue 'tuples;
                                }
                            }
                            any_signal = true;
                        }
                        None if !zero => any_signal = true,
                        None => {}
                    }
                }
                if any_signal {
                    pass2_failed = true;
                    break;
                }
                // no repetition saw anything: the tuple is stale (its source
                // was discovered at the wrong layer); drop it
                stats.stale_tuples += 1;
            }
            if pass2_failed {
                continue;
            }
            done = Some((layer, parents));
            break;
        }
        let (layer, parents) = done.ok_or_else(|| {
            Error::SamplerAbort(format!(
                "interconnection phase {i} sub-phase {subphase} failed twice"
            ))
        })?;

        // commit: shadow visitor lists, S_j replaces S_{j-1}, trees grow
        let mut s_cur: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        let kept: BTreeSet<(VertexId, VertexId)> =
            parents.iter().map(|&(v, s, _)| (v, s)).collect();
        for &(v, s, _) in &layer {
            if !kept.contains(&(v, s)) {
                continue;
            }
            if lists.list(v).len() >= params.visitor_cap {
                stats.visitor_overflows += 1;
                continue;
            }
            lists.insert(v, s);
            s_cur.entry(s).or_default().insert(v);
        }
        for &(v, s, p) in &parents {
            if s_cur.get(&s).is_some_and(|set| set.contains(&v)) {
                trees.entry(s).or_default().push((v, p));
            }
        }
        s_prev = s_cur;
        if s_prev.is_empty() {
            break; // no exploration grew this layer; nothing further can
        }
    }

    // ---- offline pruning: keep only root-to-center paths ----
    let center_set: BTreeSet<VertexId> = all_centers.iter().copied().collect();
    let mut result: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for (&root, tree_edges) in &trees {
        for (a, b) in prune_tree(root, tree_edges, &center_set) {
            let key = (a.min(b), a.max(b));
            result.insert(key);
        }
    }
    Ok(result.into_iter().collect())
}

/// Iteratively delete leaves that are not cluster centers; what survives is
/// the union of root-to-center shortest paths.
fn prune_tree(
    root: VertexId,
    edges: &[(VertexId, VertexId)],
    centers: &BTreeSet<VertexId>,
) -> Vec<(VertexId, VertexId)> {
    let mut parent: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut child_count: BTreeMap<VertexId, usize> = BTreeMap::new();
    for &(child, par) in edges {
        parent.insert(child, par);
        *child_count.entry(par).or_insert(0) += 1;
        child_count.entry(child).or_insert(0);
    }
    let mut queue: Vec<VertexId> = child_count
        .iter()
        .filter(|&(v, &c)| c == 0 && !centers.contains(v) && *v != root)
        .map(|(&v, _)| v)
        .collect();
    let mut removed: BTreeSet<VertexId> = BTreeSet::new();
    while let Some(leaf) = queue.pop() {
        if removed.contains(&leaf) {
            continue;
        }
        removed.insert(leaf);
        if let Some(&par) = parent.get(&leaf) {
            let c = child_count.get_mut(&par).unwrap();
            *c -= 1;
            if *c == 0 && !centers.contains(&par) && par != root {
                queue.push(par);
            }
        }
    }
    edges
        .iter()
        .filter(|(child, _)| !removed.contains(child))
        .copied()
        .collect()
}

// ---------------------------------------------------------------------------
// Full construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SpannerOutput {
    pub edges: Vec<(VertexId, VertexId)>,
    pub params: SpannerParams,
    pub passes: u64,
    pub stats: InterconnectStats,
    /// Clusters alive at the start of each phase.
    pub clusters_per_phase: Vec<usize>,
}

/// Run all phases: `0..ell` superclustering + interconnection, phase `ell`
/// interconnection only.
pub fn build_spanner(
    stream: &MultipassStream,
    params: &SpannerParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<SpannerOutput> {
    if stream.weighted() {
        return Err(Error::InvalidParam("spanner requires an unweighted stream".into()));
    }
    let n = stream.n();
    let cb = crate::encoding::CisCodebook::build(n as usize);
    let mut rng = SplitMix64::new(seed);
    let mut partition = ClusterPartition::singletons(n);
    let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    let mut stats = InterconnectStats::default();
    let mut clusters_per_phase = Vec::new();
    let passes_before = stream.passes_taken();

    for i in 0..=params.ell {
        clusters_per_phase.push(partition.clusters.len());
        if partition.is_empty() {
            break;
        }
        let all_centers = partition.centers();
        let (next, u_i) = if i < params.ell {
            let out = superclustering_step(stream, &partition, i, params, ledger, rng.next_u64())?;
            for e in out.edges {
                edges.insert(e);
            }
            let u_i: Vec<Cluster> = partition
                .clusters
                .iter()
                .zip(&out.superclustered)
                .filter(|(_, &s)| !s)
                .map(|(c, _)| c.clone())
                .collect();
            (out.next, u_i)
        } else {
            (ClusterPartition::default(), partition.clusters.clone())
        };
        let inter_edges = interconnection_step(
            stream,
            &u_i,
            &all_centers,
            i,
            params,
            &cb,
            ledger,
            rng.next_u64(),
            &mut stats,
        )?;
        for e in inter_edges {
            edges.insert(e);
        }
        partition = next;
    }

    Ok(SpannerOutput {
        edges: edges.into_iter().collect(),
        params: params.clone(),
        passes: stream.passes_taken() - passes_before,
        stats,
        clusters_per_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dist;
    use crate::oracle;
    use crate::stream::{generate_stream, EdgeUpdate};

    fn desk_params(n: VertexId, eps: f64, kappa: f64, rho: f64) -> SpannerParams {
        let mut p = spanner_schedule(n, eps, kappa, rho).unwrap();
        // desk-scale attempt budget; the formula constants target whp
        // guarantees at asymptotic n
        p.cp1 = 0.5;
        p.c4 = 0.125;
        p
    }

    #[test]
    fn schedule_kappa4_rho_half() {
        let p = spanner_schedule(1 << 10, 0.5, 4.0, 0.5).unwrap();
        assert_eq!(p.i0, 1);
        assert_eq!(p.ell, 3);
    }

    #[test]
    fn schedule_delta_recurrence_eps_half() {
        let p = spanner_schedule(100, 0.5, 4.0, 0.5).unwrap();
        assert_eq!(p.delta[0], 1);
        assert_eq!(p.radius[1], 1);
        assert_eq!(p.delta[1], 6);
    }

    #[test]
    fn schedule_degrees_n_1e4() {
        let p = spanner_schedule(10_000, 0.5, 4.0, 0.5).unwrap();
        assert!((p.deg[0] - 10.0).abs() < 1e-9);
        assert!((p.deg[1] - 100.0).abs() < 1e-9);
        assert!((p.deg[2] - 100.0).abs() < 1e-9);
        assert!((p.deg[3] - 100.0).abs() < 1e-9);
        for d in &p.deg {
            assert!(*d <= 100.0 + 1e-9, "deg_i exceeds n^rho");
        }
    }

    #[test]
    fn schedule_beta_formula() {
        let p = spanner_schedule(400, 0.5, 4.0, 0.5).unwrap();
        assert!((p.beta - 216.0).abs() < 1e-6);
    }

    #[test]
    fn schedule_rejects_bad_params() {
        assert!(spanner_schedule(100, 0.5, 4.0, 0.1).is_err()); // rho < 1/kappa
        assert!(spanner_schedule(100, 1.5, 4.0, 0.5).is_err());
        assert!(spanner_schedule(100, 0.5, 1.0, 0.9).is_err());
        assert!(spanner_schedule(100, 0.5, 2.0, 0.4).is_err()); // kappa*rho < 1
    }

    #[test]
    fn superclustering_nothing_sampled() {
        let s = generate_stream(20, 30, 0.0, false, Dist::ONE, 5).unwrap();
        let mut p = desk_params(20, 0.5, 4.0, 0.5);
        p.deg[0] = f64::INFINITY; // sampling probability 0
        let part = ClusterPartition::singletons(20);
        let mut ledger = SpaceLedger::new();
        let out = superclustering_step(&s, &part, 0, &p, &mut ledger, 3).unwrap();
        assert!(out.next.is_empty());
        assert!(out.edges.is_empty());
        assert!(out.superclustered.iter().all(|&b| !b));
    }

    #[test]
    fn superclustering_everything_sampled() {
        let s = generate_stream(20, 30, 0.0, false, Dist::ONE, 5).unwrap();
        let mut p = desk_params(20, 0.5, 4.0, 0.5);
        p.deg[0] = 1.0; // sampling probability 1
        let part = ClusterPartition::singletons(20);
        let mut ledger = SpaceLedger::new();
        let out = superclustering_step(&s, &part, 0, &p, &mut ledger, 3).unwrap();
        assert_eq!(out.next.clusters.len(), 20);
        assert!(out.edges.is_empty());
        assert!(out.superclustered.iter().all(|&b| b));
    }

    #[test]
    fn superclustering_captures_all_near_centers() {
        // every unsampled center within distance delta_i of a sampled center
        // must be superclustered (checked against exact BFS)
        for seed in 0..5 {
            let s = generate_stream(60, 150, 0.5, false, Dist::ONE, 40 + seed).unwrap();
            let g = s.materialize().unwrap();
            let p = desk_params(60, 0.5, 4.0, 0.5);
            let part = ClusterPartition::singletons(60);
            let mut ledger = SpaceLedger::new();
            let out = superclustering_step(&s, &part, 1, &p, &mut ledger, seed).unwrap();
            if out.next.is_empty() {
                continue;
            }
            let sampled_centers: Vec<VertexId> =
                out.next.clusters.iter().map(|c| c.center).collect();
            let dist = oracle::exact_bfs(&g, &sampled_centers);
            for (idx, c) in part.clusters.iter().enumerate() {
                let close = dist[c.center as usize].is_some_and(|d| d as u64 <= p.delta[1]);
                if close {
                    assert!(
                        out.superclustered[idx],
                        "center {} within delta but not captured (seed {seed})",
                        c.center
                    );
                }
            }
            for &(a, b) in &out.edges {
                assert!(g.has_edge(a, b));
            }
        }
    }

    #[test]
    fn interconnection_isolated_cluster_yields_nothing() {
        let ups = vec![EdgeUpdate::insert(2, 3)];
        let s = crate::stream::MultipassStream::from_updates(5, false, ups).unwrap();
        let p = desk_params(5, 0.5, 4.0, 0.5);
        let cb = crate::encoding::CisCodebook::build(5);
        let u = vec![Cluster { center: 1, members: vec![1] }];
        let mut ledger = SpaceLedger::new();
        let mut stats = InterconnectStats::default();
        let edges =
            interconnection_step(&s, &u, &[1, 2, 3], 1, &p, &cb, &mut ledger, 7, &mut stats)
                .unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn interconnection_connects_near_centers_exactly() {
        // pruned trees contain a shortest path of exactly d_G(r_C, r_C')
        // edges for every close center pair
        for seed in 0..6 {
            let s = generate_stream(50, 110, 0.5, false, Dist::ONE, 90 + seed).unwrap();
            let g = s.materialize().unwrap();
            let p = desk_params(50, 0.5, 4.0, 0.5);
            let u: Vec<Cluster> = [1u32, 7, 13, 19]
                .iter()
                .map(|&c| Cluster { center: c, members: vec![c] })
                .collect();
            let all_centers: Vec<VertexId> = (1..=50).step_by(3).collect();
            let cb = crate::encoding::CisCodebook::build(50);
            let mut ledger = SpaceLedger::new();
            let mut stats = InterconnectStats::default();
            let edges = interconnection_step(
                &s, &u, &all_centers, 1, &p, &cb, &mut ledger, seed, &mut stats,
            )
            .unwrap();
            let mut h = oracle::Graph::new(50);
            for &(a, b) in &edges {
                assert!(g.has_edge(a, b), "edge ({a},{b}) not in G");
                h.add_edge(a, b, Dist::ONE);
            }
            let depth = p.interconnect_depth(1);
            for c in &u {
                let dg = oracle::exact_bfs(&g, &[c.center]);
                let dh = oracle::exact_bfs(&h, &[c.center]);
                for &other in &all_centers {
                    if other == c.center {
                        continue;
                    }
                    if let Some(d) = dg[other as usize] {
                        if d as u64 <= depth {
                            assert_eq!(
                                dh[other as usize],
                                Some(d),
                                "centers {} and {} at distance {d} not exactly connected (seed {seed})",
                                c.center,
                                other
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tree_spanner_is_whole_tree() {
        // G a tree: the spanner must contain every edge (stretch is exact)
        let edges: Vec<EdgeUpdate> =
            (2..=30u32).map(|v| EdgeUpdate::insert(v, v / 2)).collect();
        let s = crate::stream::MultipassStream::from_updates(30, false, edges).unwrap();
        let g = s.materialize().unwrap();
        let p = desk_params(30, 0.5, 4.0, 0.5);
        let mut ledger = SpaceLedger::new();
        let out = build_spanner(&s, &p, &mut ledger, 11).unwrap();
        assert_eq!(out.edges.len(), g.edge_count(), "tree spanner must keep all edges");
        let r = oracle::validate_spanner(&g, &out.edges, 0.0, 0.0, 200, 5);
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn superclusters_disjoint_and_radius_bounded() {
        for seed in 0..4 {
            let s = generate_stream(70, 170, 0.5, false, Dist::ONE, 60 + seed).unwrap();
            let g = s.materialize().unwrap();
            let p = desk_params(70, 0.5, 4.0, 0.5);
            let part = ClusterPartition::singletons(70);
            let mut ledger = SpaceLedger::new();
            let out = superclustering_step(&s, &part, 1, &p, &mut ledger, seed).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            for cl in &out.next.clusters {
                for &v in &cl.members {
                    assert!(seen.insert(v), "vertex {v} in two superclusters");
                }
                // members sit within delta_i + R_i of the center in G
                let d = oracle::exact_bfs(&g, &[cl.center]);
                let bound = p.delta[1] + p.radius[1];
                for &v in &cl.members {
                    let dist = d[v as usize].expect("member connected to center");
                    assert!(
                        dist as u64 <= bound,
                        "member {v} at distance {dist} > delta + R = {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn pass_count_within_schedule_total() {
        let s = generate_stream(60, 150, 0.5, false, Dist::ONE, 91).unwrap();
        let p = desk_params(60, 0.5, 4.0, 0.5);
        let mut ledger = SpaceLedger::new();
        let out = build_spanner(&s, &p, &mut ledger, 4).unwrap();
        // schedule maximum: sum of delta_i (superclustering) plus
        // 2 * interconnect depth per phase; early-saturating sub-phases and
        // empty samples may only reduce it
        let max: u64 = (0..p.ell).map(|i| p.delta[i]).sum::<u64>()
            + (0..=p.ell).map(|i| 2 * p.interconnect_depth(i)).sum::<u64>();
        assert!(out.passes <= max, "{} passes > schedule total {max}", out.passes);
        assert!((out.passes as f64) <= 10.0 * p.beta);
    }

    #[test]
    fn full_ladder_pass2_differential() {
        // the known-count single slot and the full ladder must both produce
        // valid spanners on the same input
        let s = generate_stream(60, 140, 0.5, false, Dist::ONE, 17).unwrap();
        let g = s.materialize().unwrap();
        let mut p = desk_params(60, 0.5, 4.0, 0.5);
        let mut ledger = SpaceLedger::new();
        let fast = build_spanner(&s, &p, &mut ledger, 33).unwrap();
        p.full_ladder_pass2 = true;
        let full = build_spanner(&s, &p, &mut ledger, 33).unwrap();
        for out in [&fast, &full] {
            let r = oracle::validate_spanner(&g, &out.edges, p.eps, p.beta, 200, 3);
            assert!(r.ok, "{r:?}");
        }
    }

    #[test]
    fn spanner_stretch_random_graphs() {
        for seed in 0..3 {
            let s = generate_stream(80, 200, 1.0, false, Dist::ONE, 700 + seed).unwrap();
            let g = s.materialize().unwrap();
            let p = desk_params(80, 0.5, 4.0, 0.5);
            let mut ledger = SpaceLedger::new();
            let out = build_spanner(&s, &p, &mut ledger, seed).unwrap();
            let r = oracle::validate_spanner(&g, &out.edges, p.eps, p.beta, 300, seed);
            assert!(r.ok, "seed {seed}: {r:?}");
            assert!(out.passes <= (10.0 * p.beta) as u64, "passes {}", out.passes);
        }
    }
}

//! Single-scale and multi-scale (1+eps', beta')-hopsets with optional
//! path-reporting, plus the aspect-ratio reduction that replaces the
//! `log Lambda` scale ladder by `log n` via contracted node graphs.
//!
//! A scale-k hopset takes care of vertex pairs with `d_G in (2^k, 2^(k+1)]`.
//! Each scale runs the superclustering-and-interconnection schedule on
//! `G^(k-1)` = G plus all lower-scale hopset edges; the lower edges live
//! offline and are relaxed between stream passes.

use crate::dist::Dist;
use crate::encoding::CisCodebook;
use crate::error::{Error, Result};
use crate::explore::{approx_bellman_ford_capped, EdgeKind, ExploreConfig};
use crate::hashing::PairwiseHash;
use crate::oracle::Graph;
use crate::rng::SplitMix64;
use crate::samplers::{recover_source, CisBank, DistBank, EstimateLists, RangeFamily, SourceOutcome};
use crate::spanner::{Cluster, ClusterPartition};
use crate::stream::{MultipassStream, SpaceLedger};
use crate::VertexId;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

mod aspect;
pub use aspect::{aspect_contract, aspect_ratio_reduce, star_edge_weight, AspectReduceOutput, ContractionOutput};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HopsetParams {
    pub n: VertexId,
    pub eps_prime: f64,
    pub kappa: f64,
    pub rho: f64,
    /// Aspect bound Lambda.
    pub lambda_bound: Dist,
    pub ell: usize,
    pub i0: usize,
    pub deg: Vec<f64>,
    /// Scale unit: `delta_i = alpha * (1/eps)^i + 4 R_i` with
    /// `alpha = eps^ell * 2^(k+1)`.
    pub eps: f64,
    /// Per-exploration multiplicative error (chi).
    pub chi: f64,
    /// Rescaling parameter eps'' driving the per-scale stretch ladder.
    pub eps_dd: f64,
    pub c1: f64,
    pub cp1: f64,
    pub c4: f64,
    pub c5: f64,
    /// `beta = (1/eps)^ell`.
    pub beta: f64,
    pub k0: i64,
    pub k_lambda: i64,
    /// Per-vertex estimates list capacity.
    pub list_cap: usize,
    /// Hard cap on exploration hop-depth. `min(2 beta + 1, n - 1)`:
    /// hop-bounded distances saturate at n-1 hops, so the cap is exact.
    pub hop_cap: u32,
}

fn stage_params(n: VertexId, kappa: f64, rho: f64) -> Result<(usize, usize, Vec<f64>)> {
    if kappa < 2.0 {
        return Err(Error::InvalidParam(format!("kappa must be >= 2, got {kappa}")));
    }
    if rho < 1.0 / kappa || rho > 0.5 {
        return Err(Error::InvalidParam(format!("rho must be in [1/kappa, 1/2], got {rho}")));
    }
    if kappa * rho < 1.0 {
        return Err(Error::InvalidParam("kappa * rho must be >= 1".into()));
    }
    let i0 = (kappa * rho).log2().floor() as usize;
    let ell = i0 + ((kappa + 1.0) / (kappa * rho)).ceil() as usize - 1;
    let nf = n as f64;
    let deg = (0..=ell)
        .map(|i| {
            let e = if i <= i0 { 2f64.powi(i as i32) / kappa } else { rho };
            nf.powf(e.min(rho))
        })
        .collect();
    Ok((i0, ell, deg))
}

impl HopsetParams {
    /// Full rescaling chain: `eps'' = eps' / (4 log Lambda)`,
    /// `eps = eps'' / (16 c5 ell)`, `chi = eps''`, `beta = (1/eps)^ell`.
    /// At desk scale this yields `beta >= Lambda`, i.e. `k0 > k_lambda` and
    /// an empty hopset (the graph alone already satisfies the hopbound).
    pub fn asymptotic(
        n: VertexId,
        eps_prime: f64,
        kappa: f64,
        rho: f64,
        lambda_bound: Dist,
    ) -> Result<HopsetParams> {
        if !(0.0 < eps_prime && eps_prime < 1.0) {
            return Err(Error::InvalidParam("eps' must be in (0,1)".into()));
        }
        let (i0, ell, deg) = stage_params(n, kappa, rho)?;
        let c5 = 2.0;
        let log_lambda = lambda_bound.to_f64().log2().max(1.0);
        let eps_dd = eps_prime / (4.0 * log_lambda);
        let eps = eps_dd / (16.0 * c5 * ell as f64);
        let chi = eps_dd;
        Self::assemble(n, eps_prime, kappa, rho, lambda_bound, i0, ell, deg, eps, chi, eps_dd, c5)
    }

    /// Practical parameterization: `eps` (which sets `beta = (1/eps)^ell`)
    /// and the per-exploration error `chi` are chosen directly, and the
    /// stretch ladder is seeded with `eps'' = chi`. The asymptotic chain makes
    /// `beta` astronomically large for any usable `eps'`, so runnable
    /// constructions pick these knobs explicitly.
    pub fn practical(
        n: VertexId,
        eps_prime: f64,
        kappa: f64,
        rho: f64,
        lambda_bound: Dist,
        eps: f64,
        chi: f64,
    ) -> Result<HopsetParams> {
        if !(0.0 < eps && eps < 1.0) || chi <= 0.0 {
            return Err(Error::InvalidParam("need 0 < eps < 1 and chi > 0".into()));
        }
        let (i0, ell, deg) = stage_params(n, kappa, rho)?;
        Self::assemble(n, eps_prime, kappa, rho, lambda_bound, i0, ell, deg, eps, chi, chi, 2.0)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        n: VertexId,
        eps_prime: f64,
        kappa: f64,
        rho: f64,
        lambda_bound: Dist,
        i0: usize,
        ell: usize,
        deg: Vec<f64>,
        eps: f64,
        chi: f64,
        eps_dd: f64,
        c5: f64,
    ) -> Result<HopsetParams> {
        let beta = (1.0 / eps).powi(ell as i32);
        let k0 = beta.log2().floor() as i64;
        let k_lambda = (lambda_bound.to_f64().log2().ceil() as i64) - 1;
        let nf = n as f64;
        let list_cap = (3.0 * nf.powf(rho) * nf.ln()).ceil() as usize;
        let hop_cap = ((2.0 * beta + 1.0).min((n.saturating_sub(1)).max(1) as f64)) as u32;
        Ok(HopsetParams {
            n,
            eps_prime,
            kappa,
            rho,
            lambda_bound,
            ell,
            i0,
            deg,
            eps,
            chi,
            eps_dd,
            c1: 3.0,
            cp1: 3.0,
            c4: 2.0,
            c5,
            beta,
            k0,
            k_lambda,
            list_cap,
            hop_cap,
        })
    }

    /// `ln(1 + eps_k)`: `1 + eps_k0 = (1+eps'')^2`, then each scale
    /// multiplies by `(1+eps'')^2`. Computed in log space so the ladder does
    /// not compound float error.
    fn log1p_eps_k(&self, k: i64) -> f64 {
        if k < self.k0 {
            0.0
        } else {
            2.0 * (k - self.k0 + 1) as f64 * self.eps_dd.ln_1p()
        }
    }

    /// Stretch guarantee of `G^(k)` = G plus all hopsets up to scale k.
    pub fn eps_k(&self, k: i64) -> f64 {
        self.log1p_eps_k(k).exp() - 1.0
    }

    /// `alpha = eps^ell * 2^(k+1)`: the distance unit of scale k.
    pub fn alpha(&self, k: i64) -> f64 {
        self.eps.powi(self.ell as i32) * 2f64.powi(k as i32 + 1)
    }

    /// Centralized thresholds `delta_i = alpha (1/eps)^i + 4 R_i`.
    pub fn delta(&self, k: i64, i: usize) -> f64 {
        let (mut r, mut d) = (0.0, 0.0);
        for step in 0..=i {
            d = self.alpha(k) * (1.0 / self.eps).powi(step as i32) + 4.0 * r;
            r += d;
        }
        d
    }

    /// Rescaled threshold `(1+chi)(1+eps_{k-1}) delta_i`.
    pub fn delta_prime(&self, k: i64, i: usize) -> f64 {
        (1.0 + self.chi) * (1.0 + self.eps_k(k - 1)) * self.delta(k, i)
    }

    /// Bellman-Ford iterations per exploration (capped `2 beta + 1`).
    pub fn hops(&self) -> u32 {
        self.hop_cap
    }

    /// Sub-range resolution for interconnection guesses.
    pub fn zeta_prime(&self) -> f64 {
        self.chi / (2.0 * (2.0 * self.beta + 1.0).min(self.hop_cap as f64 + 1.0))
    }

    pub fn reps(&self) -> usize {
        ExploreConfig::with_c1(self.c1).reps(self.n)
    }

    pub fn attempts(&self, i: usize) -> usize {
        let nf = self.n as f64;
        ((16.0 * self.c4 * (self.cp1 * self.deg[i] * nf.ln()) * nf.ln()).ceil() as usize).max(1)
    }

    /// Hopbound reported for validation: the scale-k hopset serves its pairs
    /// within `2 beta + 1` hops.
    pub fn hopbound(&self) -> u32 {
        (2.0 * self.beta + 1.0).min(u32::MAX as f64) as u32
    }
}

// ---------------------------------------------------------------------------
// Hopset edges and files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopsetEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: Dist,
    pub scale: i64,
    /// Implementing path in `G u H^(<scale)`; star edges of the aspect-ratio
    /// reduction carry no path (their weight dominates, not equals, a path).
    pub path: Option<Vec<VertexId>>,
}

/// Minimum weight among lower-scale hopset edges joining `x` and `y`.
fn lower_edge_min(edges: &[HopsetEdge], x: VertexId, y: VertexId, below_scale: i64) -> Option<Dist> {
    edges
        .iter()
        .filter(|e| {
            e.scale < below_scale
                && ((e.u == x && e.v == y) || (e.u == y && e.v == x))
                && e.path.is_some()
        })
        .map(|e| e.weight)
        .min()
}

/// Expand a stored path down to G: each consecutive pair contributes
/// `min(w_G(x,y), lower hopset edges)`. Returns None when some pair has
/// neither. Edges without paths are their own expansion.
pub fn expand_path_weight(e: &HopsetEdge, hopset: &[HopsetEdge], g: &Graph) -> Option<Dist> {
    let Some(path) = &e.path else {
        return Some(e.weight);
    };
    if path.len() < 2 {
        return None;
    }
    let mut total = Dist::ZERO;
    for w in path.windows(2) {
        let (x, y) = (w[0], w[1]);
        let best = [g.edge_weight(x, y), lower_edge_min(hopset, x, y, e.scale)]
            .into_iter()
            .flatten()
            .min()?;
        total = total + best;
    }
    Some(total)
}

pub fn save_hopset(edges: &[HopsetEdge], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for e in edges {
        write!(w, "{} {} {} {}", e.u, e.v, e.weight, e.scale)?;
        if let Some(p) = &e.path {
            write!(w, " path:")?;
            for v in p {
                write!(w, " {v}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_hopset(path: &Path) -> Result<Vec<HopsetEdge>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (head, tail) = match t.split_once(" path:") {
            Some((h, t)) => (h, Some(t)),
            None => (t, None),
        };
        let mut it = head.split_ascii_whitespace();
        let parse_err = |msg: &str| Error::Parse { line: lineno, msg: msg.into() };
        let u: VertexId =
            it.next().and_then(|x| x.parse().ok()).ok_or_else(|| parse_err("bad u"))?;
        let v: VertexId =
            it.next().and_then(|x| x.parse().ok()).ok_or_else(|| parse_err("bad v"))?;
        let wt = it.next().ok_or_else(|| parse_err("missing weight"))?;
        let weight = Dist::parse(wt).map_err(|e| parse_err(&e.to_string()))?;
        let scale: i64 =
            it.next().and_then(|x| x.parse().ok()).ok_or_else(|| parse_err("bad scale"))?;
        let path = match tail {
            None => None,
            Some(t) => {
                let verts: std::result::Result<Vec<VertexId>, _> =
                    t.split_ascii_whitespace().map(|x| x.parse()).collect();
                Some(verts.map_err(|_| parse_err("bad path vertex"))?)
            }
        };
        out.push(HopsetEdge { u, v, weight, scale, path });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sourced (per-exploration) estimates with version history
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct SourcedVersion {
    epoch: u32,
    #[allow(dead_code)] // retained for debugging dumps
    dist: Dist,
    parent: Option<(VertexId, Dist, EdgeKind)>,
}

/// `LCurrent`: per vertex, per exploration source, the best estimate so far,
/// with enough history to rebuild the exact implementing path.
#[derive(Debug, Clone, Default)]
struct SourcedEstimates {
    latest: EstimateLists,
    hist: HashMap<(VertexId, VertexId), Vec<SourcedVersion>>,
}

impl SourcedEstimates {
    fn init(n: VertexId, centers: &[VertexId]) -> SourcedEstimates {
        let mut se = SourcedEstimates { latest: EstimateLists::new(n), hist: HashMap::new() };
        for &c in centers {
            se.latest.improve(c, c, Dist::ZERO);
            se.hist
                .insert((c, c), vec![SourcedVersion { epoch: 0, dist: Dist::ZERO, parent: None }]);
        }
        se
    }

    fn record(
        &mut self,
        v: VertexId,
        s: VertexId,
        epoch: u32,
        dist: Dist,
        parent: Option<(VertexId, Dist, EdgeKind)>,
    ) {
        self.latest.improve(v, s, dist);
        self.hist.entry((v, s)).or_default().push(SourcedVersion { epoch, dist, parent });
    }

    fn version_at(&self, v: VertexId, s: VertexId, epoch: u32) -> Option<&SourcedVersion> {
        self.hist.get(&(v, s))?.iter().rev().find(|ver| ver.epoch <= epoch)
    }

    /// Path `v -> ... -> s` with per-segment weights and kinds, following
    /// the estimate versions that were actually consumed.
    #[allow(clippy::type_complexity)]
    fn path(&self, v: VertexId, s: VertexId) -> Option<(Vec<VertexId>, Vec<(Dist, EdgeKind)>)> {
        let mut verts = vec![v];
        let mut segs = Vec::new();
        let mut cur = *self.hist.get(&(v, s))?.last()?;
        loop {
            match cur.parent {
                None => return Some((verts, segs)),
                Some((p, w, kind)) => {
                    verts.push(p);
                    segs.push((w, kind));
                    cur = *self.version_at(p, s, cur.epoch.saturating_sub(1))?;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact edge-weight probe (one pass)
// ---------------------------------------------------------------------------

/// For each queried vertex pair, the final edge weight if the pair is an
/// edge of the final graph. Exact: signed counters per pair.
pub(crate) fn probe_edge_weights(
    stream: &MultipassStream,
    pairs: &BTreeSet<(VertexId, VertexId)>,
    ledger: &mut SpaceLedger,
) -> Result<BTreeMap<(VertexId, VertexId), Dist>> {
    if pairs.is_empty() {
        return Ok(BTreeMap::new());
    }
    let mut acc: BTreeMap<(VertexId, VertexId), (i64, i128)> =
        pairs.iter().map(|&p| (p, (0, 0))).collect();
    ledger.begin_pass();
    ledger.add("hopset.edge_probe", acc.len() as u64 * 24);
    stream.pass(|upd| {
        if let Some(cell) = acc.get_mut(&upd.key()) {
            cell.0 += upd.sign as i64;
            let w = upd.weight.unwrap_or(Dist::ONE);
            cell.1 += w.micro() as i128 * upd.sign as i128;
        }
    })?;
    Ok(acc
        .into_iter()
        .filter(|&(_, (count, _))| count == 1)
        .map(|(p, (_, wsum))| (p, Dist::from_micro(wsum as i64)))
        .collect())
}

/// Re-price a path: each segment contributes the minimum of the recorded
/// segment weight, the direct G edge (probed this run) and any lower-scale
/// hopset edge, so that offline expansion reproduces the weight exactly.
fn reprice(
    verts: &[VertexId],
    segs: &[(Dist, EdgeKind)],
    probed: &BTreeMap<(VertexId, VertexId), Dist>,
    lower: &[HopsetEdge],
    scale: i64,
) -> Dist {
    let mut total = Dist::ZERO;
    for (i, &(w, _)) in segs.iter().enumerate() {
        let (x, y) = (verts[i], verts[i + 1]);
        let key = (x.min(y), x.max(y));
        let mut best = w;
        if let Some(&gw) = probed.get(&key) {
            best = best.min(gw);
        }
        if let Some(lw) = lower_edge_min(lower, x, y, scale) {
            best = best.min(lw);
        }
        total = total + best;
    }
    total
}

// ---------------------------------------------------------------------------
// Single-scale hopset
// ---------------------------------------------------------------------------

struct PendingEdge {
    u: VertexId,
    v: VertexId,
    verts: Vec<VertexId>,
    segs: Vec<(Dist, EdgeKind)>,
}

/// Construct `H_k` for the scale `(2^k, 2^(k+1)]` given all lower-scale
/// hopset edges.
pub fn single_scale_hopset(
    stream: &MultipassStream,
    k: i64,
    lower: &[HopsetEdge],
    params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
    path_reporting: bool,
) -> Result<Vec<HopsetEdge>> {
    if k < params.k0 {
        return Ok(Vec::new());
    }
    let n = stream.n();
    let cb = CisCodebook::build(n as usize);
    let mut rng = SplitMix64::new(seed);
    let overlay: Vec<(VertexId, VertexId, Dist)> =
        lower.iter().map(|e| (e.u, e.v, e.weight)).collect();
    let cfg = ExploreConfig::with_c1(params.c1);
    let mut partition = ClusterPartition::singletons(n);
    let mut pending: Vec<PendingEdge> = Vec::new();

    for i in 0..=params.ell {
        if partition.is_empty() {
            break;
        }
        let delta_p = params.delta_prime(k, i);
        let (next, u_i) = if i < params.ell {
            // ---- superclustering ----
            let sample_p = 1.0 / params.deg[i];
            let sampled: Vec<bool> =
                partition.clusters.iter().map(|_| rng.coin(sample_p)).collect();
            if sampled.iter().any(|&s| s) {
                let centers: Vec<VertexId> = partition
                    .clusters
                    .iter()
                    .zip(&sampled)
                    .filter(|(_, &s)| s)
                    .map(|(c, _)| c.center)
                    .collect();
                let est = approx_bellman_ford_capped(
                    stream,
                    &centers,
                    params.hops(),
                    params.chi,
                    params.lambda_bound,
                    Some(&overlay),
                    Some(delta_p),
                    &cfg,
                    ledger,
                    rng.next_u64(),
                )?;
                let mut attached: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
                for (idx, cl) in partition.clusters.iter().enumerate() {
                    if sampled[idx] {
                        continue;
                    }
                    let Some(d) = est.dist[cl.center as usize] else { continue };
                    if d.to_f64() > delta_p {
                        continue;
                    }
                    let path = est.pointer_path(cl.center).expect("estimated vertex has a path");
                    let root = path.last().unwrap().0;
                    attached.entry(root).or_default().push(idx);
                    let verts: Vec<VertexId> = path.iter().map(|&(v, _)| v).collect();
                    let segs: Vec<(Dist, EdgeKind)> =
                        path.iter().skip(1).map(|&(_, link)| link.unwrap()).collect();
                    pending.push(PendingEdge { u: root, v: cl.center, verts, segs });
                }
                let mut next = ClusterPartition::default();
                let mut u_i = Vec::new();
                for (idx, cl) in partition.clusters.iter().enumerate() {
                    if sampled[idx] {
                        let mut members = cl.members.clone();
                        if let Some(list) = attached.get(&cl.center) {
                            for &ai in list {
                                members.extend_from_slice(&partition.clusters[ai].members);
                            }
                        }
                        members.sort_unstable();
                        next.clusters.push(Cluster { center: cl.center, members });
                    } else if !attached.values().any(|list| list.contains(&idx)) {
                        u_i.push(cl.clone());
                    }
                }
                (next, u_i)
            } else {
                (ClusterPartition::default(), partition.clusters.clone())
            }
        } else {
            (ClusterPartition::default(), partition.clusters.clone())
        };

        // ---- interconnection ----
        interconnect_scale(
            stream,
            &u_i,
            k,
            i,
            params,
            &cb,
            &overlay,
            ledger,
            rng.next_u64(),
            &mut pending,
        )?;
        partition = next;
    }

    // ---- offline re-pricing so expansion is exact ----
    let mut wanted: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for pe in &pending {
        for w in pe.verts.windows(2) {
            wanted.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    let probed = probe_edge_weights(stream, &wanted, ledger)?;
    let mut best: BTreeMap<(VertexId, VertexId), (Dist, Vec<VertexId>)> = BTreeMap::new();
    for pe in pending {
        let weight = reprice(&pe.verts, &pe.segs, &probed, lower, k);
        let key = (pe.u.min(pe.v), pe.u.max(pe.v));
        let verts = if pe.u <= pe.v {
            pe.verts
        } else {
            let mut r = pe.verts;
            r.reverse();
            r
        };
        match best.get(&key) {
            Some((w, _)) if *w <= weight => {}
            _ => {
                best.insert(key, (weight, verts));
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|((u, v), (weight, verts))| HopsetEdge {
            u,
            v,
            weight,
            scale: k,
            path: path_reporting.then_some(verts),
        })
        .collect())
}

/// Interconnection of phase `i` at scale `k`: `hops()` sub-phases of two
/// passes each (FindNewCandidate on geometric sub-ranges, then GuessDistance
/// per update tuple), overlay relaxation after each sub-phase, and finally
/// hopset edges between close centers of `u_i`.
#[allow(clippy::too_many_arguments)]
fn interconnect_scale(
    stream: &MultipassStream,
    u_i: &[Cluster],
    k: i64,
    i: usize,
    params: &HopsetParams,
    cb: &CisCodebook,
    overlay: &[(VertexId, VertexId, Dist)],
    ledger: &mut SpaceLedger,
    seed: u64,
    pending: &mut Vec<PendingEdge>,
) -> Result<()> {
    if u_i.is_empty() {
        return Ok(());
    }
    let n = stream.n();
    let centers: Vec<VertexId> = u_i.iter().map(|c| c.center).collect();
    let center_set: BTreeSet<VertexId> = centers.iter().copied().collect();
    let half = params.delta_prime(k, i) / 2.0;
    if half < 1.0 {
        return Ok(());
    }
    let fam = RangeFamily::covering(params.zeta_prime(), half);
    let mu = params.attempts(i);
    let reps = params.reps();
    let mut rng = SplitMix64::new(seed);
    let mut est = SourcedEstimates::init(n, &centers);

    for subphase in 1..=params.hops() {
        let frozen = est.latest.clone();
        let mut sub_rng = rng.fork(subphase as u64);
        type Tuple = (VertexId, VertexId, u32); // (v, s, range index)
        let mut done: Option<Vec<(VertexId, VertexId, Dist, VertexId)>> = None;

        'attempts: for attempt in 0..2 {
            let mut attempt_rng = sub_rng.fork(attempt);

            // ---- pass 1: discover update candidates per (vertex, range) ----
            let hashes: Vec<PairwiseHash> = (0..mu)
                .map(|_| PairwiseHash::sample_with(n.max(2) as u64, &mut attempt_rng))
                .collect();
            let lambda = hashes[0].lambda();
            let mut bank_of: HashMap<(VertexId, u32), usize> = HashMap::new();
            let mut banks: Vec<CisBank> = Vec::new();
            ledger.begin_pass();
            stream.pass(|upd| {
                let Some(w) = upd.weight else { return };
                for (v, u) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    for &(s, du) in frozen.list(u) {
                        let cand = du + w;
                        if cand.to_f64() > half {
                            continue;
                        }
                        let better = frozen.get(v, s).is_none_or(|dv| cand < dv);
                        if !better {
                            continue;
                        }
                        let Some(j) = fam.index_of(cand) else { continue };
                        let start = *bank_of.entry((v, j as u32)).or_insert_with(|| {
                            let st = banks.len();
                            banks.extend((0..mu).map(|_| CisBank::new(lambda)));
                            st
                        });
                        let code = cb.code(s);
                        for (r, h) in hashes.iter().enumerate() {
                            banks[start + r].update(h.eval(s), upd.sign as i64, code);
                        }
                    }
                }
            })?;
            ledger.add("hopset.candidate_banks", banks.len() as u64 * CisBank::bytes(lambda));

            // smallest range index per (v, s)
            let mut tuple_of: BTreeMap<(VertexId, VertexId), u32> = BTreeMap::new();
            let mut keys: Vec<(VertexId, u32)> = bank_of.keys().copied().collect();
            keys.sort_unstable();
            for (v, j) in keys {
                let start = bank_of[&(v, j)];
                let nonempty = (0..mu).any(|r| !banks[start + r].is_zero());
                let mut found_any = false;
                for r in 0..mu {
                    if let SourceOutcome::Found { source, .. } =
                        recover_source(&banks[start + r], cb)
                    {
                        found_any = true;
                        let key = (v, source);
                        tuple_of.entry(key).and_modify(|cur| *cur = (*cur).min(j)).or_insert(j);
                    }
                }
                if nonempty && !found_any {
                    continue 'attempts; // retry sub-phase with fresh seeds
                }
            }
            let tuples: Vec<Tuple> =
                tuple_of.into_iter().map(|((v, s), j)| (v, s, j)).collect();

            // ---- pass 2: guess the new estimate per tuple ----
            let h2: Vec<PairwiseHash> = (0..reps)
                .map(|_| PairwiseHash::sample_with(n.max(2) as u64, &mut attempt_rng))
                .collect();
            let mut tuples_of_vertex: HashMap<VertexId, Vec<usize>> = HashMap::new();
            for (t, &(v, _, _)) in tuples.iter().enumerate() {
                tuples_of_vertex.entry(v).or_default().push(t);
            }
            let mut gbanks: Vec<DistBank> = vec![DistBank::new(lambda); tuples.len() * reps];
            ledger.begin_pass();
            ledger.add("hopset.guess_banks", gbanks.len() as u64 * DistBank::bytes(lambda));
            stream.pass(|upd| {
                let Some(w) = upd.weight else { return };
                for (v, u) in [(upd.u, upd.v), (upd.v, upd.u)] {
                    let Some(ts) = tuples_of_vertex.get(&v) else { continue };
                    for &t in ts {
                        let (_, s, j) = tuples[t];
                        let Some(du) = frozen.get(u, s) else { continue };
                        let cand = du + w;
                        let range = fam.range(j as usize);
                        let better = frozen.get(v, s).is_none_or(|dv| cand < dv);
                        if better && range.contains(cand) {
                            for (r, h) in h2.iter().enumerate() {
                                gbanks[t * reps + r]
                                    .update(h.eval(u), upd.sign as i64, cand, u as u64);
                            }
                        }
                    }
                }
            })?;

            let mut commits: Vec<(VertexId, VertexId, Dist, VertexId)> = Vec::new();
            for (t, &(v, s, j)) in tuples.iter().enumerate() {
                let range = fam.range(j as usize);
                let mut best: Option<(Dist, VertexId)> = None;
                let mut any_fail = false;
                let mut all_zero = true;
                for r in 0..reps {
                    let bank = &gbanks[t * reps + r];
                    if bank.is_zero() {
                        continue;
                    }
                    all_zero = false;
                    match bank.isolated() {
                        Some((dist, name)) => {
                            let parent = match u32::try_from(name) {
                                Ok(p) if p >= 1 => p,
                                _ => {
                                    any_fail = true;
                                    continue;
                                }
                            };
                            let valid = frozen
                                .get(parent, s)
                                .is_some_and(|dp| dist >= dp + Dist::ONE)
                                && range.contains(dist);
                            if valid {
                                if best.is_none_or(|(b, _)| dist < b) {
                                    best = Some((dist, parent));
                                }
                            } else {
                                any_fail = true;
                            }
                        }
                        None => any_fail = true,
                    }
                }
                match best {
                    Some((dist, parent)) => commits.push((v, s, dist, parent)),
                    None if any_fail => continue 'attempts,
                    // all reps empty: the pass-1 discovery was transient
                    // (cancelling updates); nothing to commit
                    None => debug_assert!(all_zero),
                }
            }
            done = Some(commits);
            break;
        }
        let commits = done.ok_or_else(|| {
            Error::SamplerAbort(format!(
                "hopset scale {k} phase {i} sub-phase {subphase} failed twice"
            ))
        })?;

        // ---- commit + offline overlay round ----
        let commit_epoch = 2 * subphase - 1;
        for (v, s, dist, parent) in commits {
            if est.latest.get(v, s).is_none_or(|cur| dist < cur) {
                if est.latest.list(v).len() >= params.list_cap && est.latest.get(v, s).is_none() {
                    continue;
                }
                let w = dist - frozen.get(parent, s).expect("frozen parent estimate");
                est.record(v, s, commit_epoch, dist, Some((parent, w, EdgeKind::Stream)));
            }
        }
        let snapshot = est.latest.clone();
        let mut improvements: Vec<(VertexId, VertexId, Dist, VertexId, Dist)> = Vec::new();
        for &(a, b, w) in overlay {
            for (from, to) in [(a, b), (b, a)] {
                for &(s, dfrom) in snapshot.list(from) {
                    let cand = dfrom + w;
                    if cand.to_f64() <= half
                        && snapshot.get(to, s).is_none_or(|cur| cand < cur)
                    {
                        improvements.push((to, s, cand, from, w));
                    }
                }
            }
        }
        for (to, s, cand, from, w) in improvements {
            if est.latest.get(to, s).is_none_or(|cur| cand < cur) {
                if est.latest.list(to).len() >= params.list_cap && est.latest.get(to, s).is_none()
                {
                    continue;
                }
                est.record(to, s, 2 * subphase, cand, Some((from, w, EdgeKind::Overlay)));
            }
        }
    }

    // ---- emit candidate edges between close centers ----
    for &c in &centers {
        for &(s, d) in est.latest.list(c) {
            if s == c || !center_set.contains(&s) {
                continue;
            }
            if d.to_f64() > half {
                continue;
            }
            let (verts, segs) = est.path(c, s).expect("estimate has a path");
            pending.push(PendingEdge { u: s, v: c, verts, segs });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Multi-scale hopset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HopsetOutput {
    pub edges: Vec<HopsetEdge>,
    pub passes: u64,
    pub scales: Vec<i64>,
}

/// Build `H = union of H_k` for `k in [k0, k_lambda]`, each scale consuming
/// the lower ones. Empty when `k_lambda < k0` (the graph alone satisfies
/// the hopbound).
pub fn multi_scale_hopset(
    stream: &MultipassStream,
    params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
    path_reporting: bool,
) -> Result<HopsetOutput> {
    if !stream.weighted() {
        return Err(Error::InvalidParam("hopsets require a weighted stream".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let passes_before = stream.passes_taken();
    let mut edges: Vec<HopsetEdge> = Vec::new();
    let mut scales = Vec::new();
    if params.k_lambda >= params.k0 {
        for k in params.k0..=params.k_lambda {
            scales.push(k);
            let hk = single_scale_hopset(
                stream,
                k,
                &edges,
                params,
                ledger,
                rng.next_u64(),
                path_reporting,
            )?;
            edges.extend(hk);
        }
    }
    Ok(HopsetOutput { edges, passes: stream.passes_taken() - passes_before, scales })
}

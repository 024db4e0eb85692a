//! Aspect-ratio reduction: contract light edges into nodes per scale,
//! connect node centers by star edges, then build per-scale hopsets over
//! the translated node multigraphs.
//!
//! One pass fills per-vertex XOR slot arrays (one per scale and hash copy);
//! contracting is then fully offline: component slot arrays are XOR-merges
//! of their members, so internal edges cancel and surviving slots sample
//! outgoing edges - the classic sketch-connectivity argument run per weight
//! class.

use super::{HopsetEdge, HopsetParams};
use crate::dist::Dist;
use crate::encoding::CisCodebook;
use crate::error::{Error, Result};
use crate::hashing::{ceil_log2, PairwiseHash};
use crate::rng::SplitMix64;
use crate::samplers::{recover_source, CisBank, CisDistBank, RangeFamily, SourceOutcome};
use crate::stream::{MultipassStream, SpaceLedger};
use crate::VertexId;
use std::collections::{BTreeMap, BTreeSet, HashMap};

// ---------------------------------------------------------------------------
// Edge ids
// ---------------------------------------------------------------------------

/// Compact 1-based id of the unordered pair `(a, b)`, `a < b`.
pub(crate) fn edge_id(a: VertexId, b: VertexId) -> u64 {
    debug_assert!(a < b);
    let b = b as u64;
    (b - 1) * (b - 2) / 2 + a as u64
}

pub(crate) fn edge_from_id(id: u64) -> (VertexId, VertexId) {
    // smallest b with (b-1)(b-2)/2 < id <= (b-1)(b-2)/2 + (b-1)
    let mut b = ((2.0 * id as f64).sqrt() + 1.5) as u64;
    while (b - 1) * (b - 2) / 2 >= id {
        b -= 1;
    }
    while (b - 1) * (b - 2) / 2 + (b - 1) < id {
        b += 1;
    }
    let a = id - (b - 1) * (b - 2) / 2;
    (a as VertexId, b as VertexId)
}

/// Star edge weight `(eps/n) * 2^k * |U|`.
pub fn star_edge_weight(eps_contract: f64, n: VertexId, k: i64, node_size: u64) -> Dist {
    Dist::from_f64_round(eps_contract / n as f64 * 2f64.powi(k as i32) * node_size as f64)
}

// ---------------------------------------------------------------------------
// Union-find
// ---------------------------------------------------------------------------

struct Dsu {
    parent: Vec<u32>,
    size: Vec<u64>,
}

impl Dsu {
    fn new(n: VertexId) -> Dsu {
        Dsu { parent: (0..=n).collect(), size: vec![1; n as usize + 1] }
    }

    fn find(&mut self, x: u32) -> u32 {
        if self.parent[x as usize] != x {
            let r = self.find(self.parent[x as usize]);
            self.parent[x as usize] = r;
        }
        self.parent[x as usize]
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        a
    }
}

// ---------------------------------------------------------------------------
// Pass 1: XOR slot arrays
// ---------------------------------------------------------------------------

/// Slot arrays for one (vertex, scale): `copies x lambda` cells of
/// (parity, xor-of-edge-ids). Parity is the signed count mod 2, which both
/// survives deletions and cancels under the component merge.
#[derive(Clone)]
struct XorSlots {
    parity: Vec<u64>, // bitset: copies * lambda bits, cell c*lambda+i
    xor: Vec<u64>,
}

impl XorSlots {
    fn new(cells: usize) -> XorSlots {
        XorSlots { parity: vec![0; cells.div_ceil(64)], xor: vec![0; cells] }
    }

    #[inline]
    fn flip(&mut self, cell: usize, id: u64) {
        self.parity[cell / 64] ^= 1u64 << (cell % 64);
        self.xor[cell] ^= id;
    }

    #[inline]
    fn parity_at(&self, cell: usize) -> bool {
        (self.parity[cell / 64] >> (cell % 64)) & 1 == 1
    }

    fn merge(&mut self, other: &XorSlots) {
        for (a, b) in self.parity.iter_mut().zip(&other.parity) {
            *a ^= b;
        }
        for (a, b) in self.xor.iter_mut().zip(&other.xor) {
            *a ^= b;
        }
    }

    fn is_zero(&self) -> bool {
        self.parity.iter().all(|&p| p == 0) && self.xor.iter().all(|&x| x == 0)
    }
}

struct Pass1 {
    /// slots[v][scale_idx]
    slots: Vec<Vec<XorSlots>>,
    lambda: u32,
    copies: usize,
    /// net count of edges per scale window `(2^k / n, 2^(k+1)]`
    relevance: Vec<i64>,
}

fn light_class(w: Dist, thresholds: &[f64]) -> Option<usize> {
    let x = w.to_f64();
    if x > *thresholds.last().unwrap() {
        return None;
    }
    Some(thresholds.iter().position(|&t| x <= t).unwrap())
}

fn run_pass1(
    stream: &MultipassStream,
    params: &HopsetParams,
    eps_contract: f64,
    scales: &[i64],
    ledger: &mut SpaceLedger,
    rng: &mut SplitMix64,
) -> Result<Pass1> {
    let n = stream.n();
    let nf = n as f64;
    let copies = (2 * ceil_log2(n.max(2) as u64)).max(2) as usize;
    let edge_universe = (n as u64) * (n as u64 - 1) / 2;
    let hashes: Vec<PairwiseHash> = (0..copies)
        .map(|_| PairwiseHash::sample_with(edge_universe.max(2), rng))
        .collect();
    let lambda = hashes[0].lambda();
    let cells = copies * lambda as usize;
    let thresholds: Vec<f64> = scales
        .iter()
        .map(|&k| eps_contract / nf * 2f64.powi(k as i32))
        .collect();
    let mut slots: Vec<Vec<XorSlots>> =
        (0..=n).map(|_| scales.iter().map(|_| XorSlots::new(cells)).collect()).collect();
    let mut relevance = vec![0i64; scales.len()];
    ledger.begin_pass();
    ledger.add(
        "aspect.xorslots",
        (n as u64 + 1) * scales.len() as u64 * cells as u64 * 9,
    );
    let lam = params.lambda_bound.to_f64();
    stream.pass(|upd| {
        let w = upd.weight.unwrap_or(Dist::ONE);
        let x = w.to_f64();
        // relevance counters: scale k is relevant iff some final edge has
        // weight in (2^k / n, 2^(k+1)]
        for (idx, &k) in scales.iter().enumerate() {
            let lo = 2f64.powi(k as i32) / nf;
            let hi = 2f64.powi(k as i32 + 1);
            if x > lo && x <= hi.min(lam * 2.0) {
                relevance[idx] += upd.sign as i64;
            }
        }
        if let Some(class) = light_class(w, &thresholds) {
            let (a, b) = upd.key();
            let id = edge_id(a, b);
            for (c, h) in hashes.iter().enumerate() {
                let first = ceil_log2(h.eval_u64(id)).max(1);
                for lvl in first..=lambda {
                    let cell = c * lambda as usize + (lvl - 1) as usize;
                    slots[a as usize][class].flip(cell, id);
                    slots[b as usize][class].flip(cell, id);
                }
            }
        }
    })?;
    Ok(Pass1 { slots, lambda, copies, relevance })
}

// ---------------------------------------------------------------------------
// ComputeCC
// ---------------------------------------------------------------------------

struct Contraction {
    /// center_of[scale_idx][v]
    center_of: Vec<Vec<VertexId>>,
    /// node size at each scale, indexed by center vertex
    node_size: Vec<Vec<u64>>,
    /// components per scale, each sorted
    nodes_per_scale: Vec<Vec<Vec<VertexId>>>,
    star_edges: Vec<HopsetEdge>,
    lists: Vec<Vec<(i64, VertexId)>>,
}

/// Boruvka-style contraction, one weight class at a time. Extraction
/// failures step to the next hash copy; exhausting every copy on a
/// component with a non-zero sketch is a pass-1 failure.
fn compute_cc(
    n: VertexId,
    pass1: &Pass1,
    scales: &[i64],
    eps_contract: f64,
) -> std::result::Result<Contraction, ()> {
    let mut dsu = Dsu::new(n);
    let mut center: Vec<VertexId> = (0..=n).collect();
    let mut center_of = Vec::new();
    let mut node_size = Vec::new();
    let mut nodes_per_scale = Vec::new();
    let mut star_edges = Vec::new();
    let mut lists: Vec<Vec<(i64, VertexId)>> = vec![Vec::new(); n as usize + 1];
    let lambda = pass1.lambda as usize;

    for (idx, &k) in scales.iter().enumerate() {
        // components before this class (prev-scale nodes)
        let mut prev_members: BTreeMap<u32, Vec<VertexId>> = BTreeMap::new();
        for v in 1..=n {
            prev_members.entry(dsu.find(v)).or_default().push(v);
        }
        // merged slot arrays per live component for this weight class
        let mut comp_slots: HashMap<u32, XorSlots> = HashMap::new();
        for (&root, members) in &prev_members {
            let mut acc = XorSlots::new(pass1.copies * lambda);
            for &v in members {
                acc.merge(&pass1.slots[v as usize][idx]);
            }
            comp_slots.insert(root, acc);
        }
        let mut cursor: HashMap<u32, usize> = HashMap::new();

        loop {
            let mut roots: Vec<u32> = comp_slots.keys().copied().collect();
            roots.sort_unstable();
            let mut merges: Vec<(u32, u32)> = Vec::new();
            for root in roots {
                if dsu.find(root) != root {
                    continue; // absorbed earlier this round
                }
                let slots = &comp_slots[&root];
                if slots.is_zero() {
                    continue; // no outgoing class edge (exact verdict)
                }
                let cur = cursor.entry(root).or_insert(0);
                let mut found = None;
                while *cur < pass1.copies {
                    let c = *cur;
                    for lvl in 0..lambda {
                        let cell = c * lambda + lvl;
                        if !slots.parity_at(cell) {
                            continue;
                        }
                        let id = slots.xor[cell];
                        if id == 0 {
                            continue;
                        }
                        let (a, b) = edge_from_id(id);
                        if a >= 1 && a < b && b <= n && edge_id(a, b) == id {
                            let (ra, rb) = (dsu.find(a), dsu.find(b));
                            if (ra == root) != (rb == root) {
                                found = Some((a, b));
                                break;
                            }
                        }
                    }
                    if found.is_some() {
                        break;
                    }
                    *cur += 1; // decode failed on this copy, use the next
                }
                match found {
                    Some((a, b)) => merges.push((a, b)),
                    None => return Err(()), // copies exhausted: retry pass 1
                }
            }
            if merges.is_empty() {
                break;
            }
            for (a, b) in merges {
                let (ra, rb) = (dsu.find(a), dsu.find(b));
                if ra == rb {
                    continue;
                }
                let sa = comp_slots.remove(&ra).unwrap();
                let mut sb = comp_slots.remove(&rb).unwrap();
                sb.merge(&sa);
                let new_root = dsu.union(ra, rb);
                comp_slots.insert(new_root, sb);
                cursor.remove(&ra);
                cursor.remove(&rb);
            }
        }

        // finalize scale-k nodes: centers, stars, lists
        let mut cur_groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &prev_root in prev_members.keys() {
            cur_groups.entry(dsu.find(prev_root)).or_default().push(prev_root);
        }
        let mut center_map: Vec<VertexId> = vec![0; n as usize + 1];
        let mut size_map: Vec<u64> = vec![0; n as usize + 1];
        let mut scale_nodes: Vec<Vec<VertexId>> = Vec::new();
        for (&root, group) in &cur_groups {
            let members: Vec<VertexId> = group
                .iter()
                .flat_map(|r| prev_members[r].iter().copied())
                .collect();
            let mut members = members;
            members.sort_unstable();
            let total = members.len() as u64;
            let new_center = if idx == 0 {
                // first class: arbitrary (smallest id) center per node
                let c = members[0];
                let w = star_edge_weight(eps_contract, n, k, total);
                for &z in &members {
                    lists[z as usize].push((k, c));
                    if z != c {
                        star_edges.push(HopsetEdge {
                            u: c.min(z),
                            v: c.max(z),
                            weight: w,
                            scale: k,
                            path: None,
                        });
                    }
                }
                c
            } else if group.len() == 1 {
                center[root as usize]
            } else {
                // largest constituent keeps its center (ties: smallest id)
                let largest = group
                    .iter()
                    .max_by_key(|&&r| {
                        (prev_members[&r].len(), std::cmp::Reverse(center[r as usize]))
                    })
                    .copied()
                    .unwrap();
                let c = center[largest as usize];
                let w = star_edge_weight(eps_contract, n, k, total);
                for &r in group {
                    if r == largest {
                        continue;
                    }
                    for &z in &prev_members[&r] {
                        lists[z as usize].push((k, c));
                        star_edges.push(HopsetEdge {
                            u: c.min(z),
                            v: c.max(z),
                            weight: w,
                            scale: k,
                            path: None,
                        });
                    }
                }
                c
            };
            center[root as usize] = new_center;
            for &z in &members {
                center_map[z as usize] = new_center;
                size_map[z as usize] = total;
            }
            scale_nodes.push(members);
        }
        // size lookup is by center id
        let mut size_by_center = vec![0u64; n as usize + 1];
        for node in &scale_nodes {
            let c = center_map[node[0] as usize];
            size_by_center[c as usize] = node.len() as u64;
        }
        center_of.push(center_map);
        node_size.push(size_by_center);
        let _ = size_map;
        nodes_per_scale.push(scale_nodes);
    }
    Ok(Contraction { center_of, node_size, nodes_per_scale, star_edges, lists })
}

// ---------------------------------------------------------------------------
// Node-graph hopsets (phase 2)
// ---------------------------------------------------------------------------

/// Per-scale stream translation: raw edges with weight in
/// `((eps/n) 2^k, 2^(k+1)]` become center-to-center multigraph edges with
/// the node-size surcharge.
struct Translation<'a> {
    k: i64,
    n: VertexId,
    eps_contract: f64,
    center_of: &'a [VertexId],
    node_size: &'a [u64],
}

impl Translation<'_> {
    #[inline]
    fn surcharge(&self, center: VertexId) -> f64 {
        self.eps_contract / self.n as f64
            * 2f64.powi(self.k as i32)
            * self.node_size[center as usize] as f64
    }

    /// `(X, Y, translated weight, raw edge id)`.
    #[inline]
    fn map(&self, u: VertexId, v: VertexId, w: Dist) -> Option<(VertexId, VertexId, Dist, u64)> {
        let x = w.to_f64();
        let lo = self.eps_contract / self.n as f64 * 2f64.powi(self.k as i32);
        let hi = 2f64.powi(self.k as i32 + 1);
        if x <= lo || x > hi {
            return None;
        }
        let cx = self.center_of[u as usize];
        let cy = self.center_of[v as usize];
        if cx == cy {
            return None;
        }
        let translated =
            w + Dist::from_f64_round(self.surcharge(cx)) + Dist::from_f64_round(self.surcharge(cy));
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        Some((cx, cy, translated, edge_id(a, b)))
    }
}

/// Node-graph BFE estimates with enough parent history to resolve, for any
/// estimated vertex, the sampled root its estimate leads to and the exact
/// weight of that pointer path.
/// (epoch, estimate, parent center and segment weight)
type NodeVersion = (u32, Dist, Option<(VertexId, Dist)>);

struct NodeEstimates {
    dist: Vec<Option<Dist>>,
    hist: HashMap<VertexId, Vec<NodeVersion>>,
}

impl NodeEstimates {
    fn record(&mut self, v: VertexId, epoch: u32, dist: Dist, parent: Option<(VertexId, Dist)>) {
        self.dist[v as usize] = Some(dist);
        self.hist.entry(v).or_default().push((epoch, dist, parent));
    }

    fn version_at(&self, v: VertexId, epoch: u32) -> Option<&NodeVersion> {
        self.hist.get(&v)?.iter().rev().find(|(e, _, _)| *e <= epoch)
    }

    /// Follow consumed versions to the root; returns the root and the exact
    /// pointer-path weight (a real node-graph path, so it never undercuts
    /// the root distance).
    fn resolve_root(&self, v: VertexId) -> Option<(VertexId, Dist)> {
        let mut cur = *self.hist.get(&v)?.last()?;
        let mut total = Dist::ZERO;
        let mut at = v;
        loop {
            match cur.2 {
                None => return Some((at, total)),
                Some((p, w)) => {
                    total = total + w;
                    at = p;
                    cur = *self.version_at(p, cur.0.saturating_sub(1))?;
                }
            }
        }
    }
}

/// Approximate Bellman-Ford over a translated node multigraph. Parallel
/// edges make XOR names ambiguous, so slots carry CIS sums keyed by the raw
/// edge id; an isolated slot pins one raw edge, whose endpoints resolve to
/// the parent center.
#[allow(clippy::too_many_arguments)]
fn node_bfe(
    stream: &MultipassStream,
    tr: &Translation<'_>,
    ecb: &CisCodebook,
    sources: &[VertexId],
    hops: u32,
    zeta: f64,
    limit: f64,
    overlay: &[(VertexId, VertexId, Dist)],
    params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<NodeEstimates> {
    let n = stream.n();
    let mut est = NodeEstimates {
        dist: vec![None; n as usize + 1],
        hist: HashMap::new(),
    };
    for &s in sources {
        est.record(s, 0, Dist::ZERO, None);
    }
    if limit < 1.0 {
        return Ok(est);
    }
    let zeta_prime = zeta / (2.0 * hops.max(1) as f64);
    let fam = RangeFamily::covering(zeta_prime, limit);
    let reps = params.reps();
    let mut rng = SplitMix64::new(seed);
    let mut is_source = vec![false; n as usize + 1];
    for &s in sources {
        is_source[s as usize] = true;
    }

    for phase in 1..=hops {
        let frozen = est.dist.clone();
        let mut phase_rng = rng.fork(phase as u64);
        let mut committed: Option<Vec<(VertexId, Dist, VertexId)>> = None;
        'attempts: for attempt in 0..2 {
            let mut attempt_rng = phase_rng.fork(attempt);
            let hashes: Vec<PairwiseHash> = (0..reps)
                .map(|_| {
                    PairwiseHash::sample_with(
                        ((n as u64) * (n as u64 - 1) / 2).max(2),
                        &mut attempt_rng,
                    )
                })
                .collect();
            let lambda = hashes[0].lambda();
            let mut bank_of: HashMap<(VertexId, u32), usize> = HashMap::new();
            let mut banks: Vec<CisDistBank> = Vec::new();
            ledger.begin_pass();
            stream.pass(|upd| {
                let Some(w) = upd.weight else { return };
                let Some((cx, cy, tw, id)) = tr.map(upd.u, upd.v, w) else { return };
                for (x, y) in [(cx, cy), (cy, cx)] {
                    if is_source[x as usize] {
                        continue;
                    }
                    let Some(dy) = frozen[y as usize] else { continue };
                    let cand = dy + tw;
                    let Some(j) = fam.index_of(cand) else { continue };
                    let start = *bank_of.entry((x, j as u32)).or_insert_with(|| {
                        let s = banks.len();
                        banks.extend((0..reps).map(|_| CisDistBank::new(lambda)));
                        s
                    });
                    let code = ecb.code(id as u32);
                    for (r, h) in hashes.iter().enumerate() {
                        banks[start + r].update(h.eval_u64(id), upd.sign as i64, cand, code);
                    }
                }
            })?;
            ledger.add("aspect.node_bfe_banks", banks.len() as u64 * CisDistBank::bytes(lambda));

            let mut by_vertex: HashMap<VertexId, Vec<u32>> = HashMap::new();
            for &(x, j) in bank_of.keys() {
                by_vertex.entry(x).or_default().push(j);
            }
            let mut updates: Vec<(VertexId, Dist, VertexId)> = Vec::new();
            'vertices: for (&x, ranges) in &by_vertex {
                let mut ranges = ranges.clone();
                ranges.sort_unstable();
                for j in ranges {
                    let start = bank_of[&(x, j)];
                    let range = fam.range(j as usize);
                    let mut best: Option<(Dist, VertexId)> = None;
                    let mut any_fail = false;
                    let mut all_zero = true;
                    for r in 0..reps {
                        let bank = &banks[start + r];
                        if bank.is_zero() {
                            continue;
                        }
                        all_zero = false;
                        match bank.isolated(ecb) {
                            Some((id, d)) => {
                                let (a, b) = edge_from_id(id as u64);
                                let (ca, cb2) = (
                                    tr.center_of[a as usize],
                                    tr.center_of[b as usize],
                                );
                                let parent = if ca == x {
                                    cb2
                                } else if cb2 == x {
                                    ca
                                } else {
                                    any_fail = true;
                                    continue;
                                };
                                let ok = frozen[parent as usize]
                                    .is_some_and(|dp| d > dp)
                                    && range.contains(d);
                                if ok {
                                    if best.is_none_or(|(bd, _)| d < bd) {
                                        best = Some((d, parent));
                                    }
                                } else {
                                    any_fail = true;
                                }
                            }
                            None => any_fail = true,
                        }
                    }
                    match best {
                        Some((d, parent)) => {
                            if frozen[x as usize].is_none_or(|cur| d < cur) {
                                updates.push((x, d, parent));
                            }
                            continue 'vertices;
                        }
                        None if any_fail => continue 'attempts,
                        None => debug_assert!(all_zero),
                    }
                }
            }
            committed = Some(updates);
            break;
        }
        let updates = committed.ok_or_else(|| {
            Error::SamplerAbort(format!("node_bfe scale {} phase {phase} failed twice", tr.k))
        })?;
        let commit_epoch = 2 * phase - 1;
        for (x, d, parent) in updates {
            let w = d - frozen[parent as usize].expect("frozen parent estimate");
            est.record(x, commit_epoch, d, Some((parent, w)));
        }
        // offline overlay round over translated lower hopset edges
        let snapshot = est.dist.clone();
        let mut improvements: Vec<(VertexId, Dist, VertexId, Dist)> = Vec::new();
        for &(a, b, w) in overlay {
            for (from, to) in [(a, b), (b, a)] {
                if is_source[to as usize] {
                    continue;
                }
                if let Some(df) = snapshot[from as usize] {
                    let cand = df + w;
                    if cand.to_f64() <= limit
                        && est.dist[to as usize].is_none_or(|cur| cand < cur)
                    {
                        improvements.push((to, cand, from, w));
                    }
                }
            }
        }
        for (to, cand, from, w) in improvements {
            if est.dist[to as usize].is_none_or(|cur| cand < cur) {
                est.record(to, 2 * phase, cand, Some((from, w)));
            }
        }
    }
    Ok(est)
}

/// Interconnection over the node multigraph: pass 1 isolates update-candidate
/// sources (vertex-coded CIS sums tolerate parallel edges), pass 2 isolates
/// one raw edge per tuple for an exact new estimate.
#[allow(clippy::too_many_arguments)]
fn node_interconnect(
    stream: &MultipassStream,
    tr: &Translation<'_>,
    vcb: &CisCodebook,
    ecb: &CisCodebook,
    centers: &[VertexId],
    i: usize,
    half: f64,
    overlay: &[(VertexId, VertexId, Dist)],
    params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<Vec<(VertexId, VertexId, Dist)>> {
    let n = stream.n();
    if centers.is_empty() || half < 1.0 {
        return Ok(Vec::new());
    }
    let fam = RangeFamily::covering(params.zeta_prime(), half);
    let mu = params.attempts(i);
    let reps = params.reps();
    let mut rng = SplitMix64::new(seed);
    let center_set: BTreeSet<VertexId> = centers.iter().copied().collect();
    // latest[(v, s)] estimates
    let mut latest: BTreeMap<(VertexId, VertexId), Dist> = BTreeMap::new();
    let mut by_vertex: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &c in centers {
        latest.insert((c, c), Dist::ZERO);
        by_vertex.entry(c).or_default().push(c);
    }

    for subphase in 1..=params.hops() {
        let frozen = latest.clone();
        let frozen_by_vertex = by_vertex.clone();
        let mut sub_rng = rng.fork(subphase as u64);
        let mut done: Option<Vec<(VertexId, VertexId, Dist)>> = None;
        'attempts: for attempt in 0..2 {
            let mut attempt_rng = sub_rng.fork(attempt);
            // ---- pass 1: candidate sources per (vertex, range) ----
            let hashes: Vec<PairwiseHash> = (0..mu)
                .map(|_| PairwiseHash::sample_with(n.max(2) as u64, &mut attempt_rng))
                .collect();
            let lambda = hashes[0].lambda();
            let mut bank_of: HashMap<(VertexId, u32), usize> = HashMap::new();
            let mut banks: Vec<CisBank> = Vec::new();
            ledger.begin_pass();
            stream.pass(|upd| {
                let Some(w) = upd.weight else { return };
                let Some((cx, cy, tw, _)) = tr.map(upd.u, upd.v, w) else { return };
                for (v, u) in [(cx, cy), (cy, cx)] {
                    let Some(sources) = frozen_by_vertex.get(&u) else { continue };
                    for &s in sources {
                        let du = frozen[&(u, s)];
                        let cand = du + tw;
                        if cand.to_f64() > half {
                            continue;
                        }
                        if frozen.get(&(v, s)).is_some_and(|&dv| cand >= dv) {
                            continue;
                        }
                        let Some(j) = fam.index_of(cand) else { continue };
                        let start = *bank_of.entry((v, j as u32)).or_insert_with(|| {
                            let st = banks.len();
                            banks.extend((0..mu).map(|_| CisBank::new(lambda)));
                            st
                        });
                        let code = vcb.code(s);
                        for (r, h) in hashes.iter().enumerate() {
                            banks[start + r].update(h.eval(s), upd.sign as i64, code);
                        }
                    }
                }
            })?;
            ledger.add("aspect.node_cand_banks", banks.len() as u64 * CisBank::bytes(lambda));

            let mut tuple_of: BTreeMap<(VertexId, VertexId), u32> = BTreeMap::new();
            let mut keys: Vec<(VertexId, u32)> = bank_of.keys().copied().collect();
            keys.sort_unstable();
            for (v, j) in keys {
                let start = bank_of[&(v, j)];
                let nonempty = (0..mu).any(|r| !banks[start + r].is_zero());
                let mut found_any = false;
                for r in 0..mu {
                    if let SourceOutcome::Found { source, .. } =
                        recover_source(&banks[start + r], vcb)
                    {
                        found_any = true;
                        tuple_of
                            .entry((v, source))
                            .and_modify(|cur| *cur = (*cur).min(j))
                            .or_insert(j);
                    }
                }
                if nonempty && !found_any {
                    continue 'attempts;
                }
            }
            let tuples: Vec<(VertexId, VertexId, u32)> =
                tuple_of.into_iter().map(|((v, s), j)| (v, s, j)).collect();

            // ---- pass 2: exact estimate per tuple via edge isolation ----
            let h2: Vec<PairwiseHash> = (0..reps)
                .map(|_| {
                    PairwiseHash::sample_with(
                        ((n as u64) * (n as u64 - 1) / 2).max(2),
                        &mut attempt_rng,
                    )
                })
                .collect();
            let lambda_e = h2[0].lambda();
            let mut tuples_of_vertex: HashMap<VertexId, Vec<usize>> = HashMap::new();
            for (t, &(v, _, _)) in tuples.iter().enumerate() {
                tuples_of_vertex.entry(v).or_default().push(t);
            }
            let mut gbanks: Vec<CisDistBank> =
                vec![CisDistBank::new(lambda_e); tuples.len() * reps];
            ledger.begin_pass();
            ledger
                .add("aspect.node_guess_banks", gbanks.len() as u64 * CisDistBank::bytes(lambda_e));
            stream.pass(|upd| {
                let Some(w) = upd.weight else { return };
                let Some((cx, cy, tw, id)) = tr.map(upd.u, upd.v, w) else { return };
                for (v, u) in [(cx, cy), (cy, cx)] {
                    let Some(ts) = tuples_of_vertex.get(&v) else { continue };
                    for &t in ts {
                        let (_, s, j) = tuples[t];
                        let Some(&du) = frozen.get(&(u, s)) else { continue };
                        let cand = du + tw;
                        let range = fam.range(j as usize);
                        let better = frozen.get(&(v, s)).is_none_or(|&dv| cand < dv);
                        if better && range.contains(cand) {
                            let code = ecb.code(id as u32);
                            for (r, h) in h2.iter().enumerate() {
                                gbanks[t * reps + r]
                                    .update(h.eval_u64(id), upd.sign as i64, cand, code);
                            }
                        }
                    }
                }
            })?;

            let mut commits: Vec<(VertexId, VertexId, Dist)> = Vec::new();
            for (t, &(v, s, j)) in tuples.iter().enumerate() {
                let range = fam.range(j as usize);
                let mut best: Option<Dist> = None;
                let mut any_fail = false;
                for r in 0..reps {
                    let bank = &gbanks[t * reps + r];
                    if bank.is_zero() {
                        continue;
                    }
                    match bank.isolated(ecb) {
                        Some((_, d)) if range.contains(d) => {
                            if best.is_none_or(|bd| d < bd) {
                                best = Some(d);
                            }
                        }
                        _ => any_fail = true,
                    }
                }
                match best {
                    Some(d) => commits.push((v, s, d)),
                    None if any_fail => continue 'attempts,
                    None => {}
                }
            }
            done = Some(commits);
            break;
        }
        let commits = done.ok_or_else(|| {
            Error::SamplerAbort(format!(
                "node interconnect scale {} sub-phase {subphase} failed twice",
                tr.k
            ))
        })?;
        for (v, s, d) in commits {
            let e = latest.entry((v, s)).or_insert(d);
            if d < *e {
                *e = d;
            } else if *e != d {
                continue;
            }
            let lst = by_vertex.entry(v).or_default();
            if !lst.contains(&s) {
                if lst.len() >= params.list_cap {
                    continue;
                }
                lst.push(s);
                lst.sort_unstable();
            }
        }
        // overlay round
        let snapshot = latest.clone();
        for &(a, b, w) in overlay {
            for (from, to) in [(a, b), (b, a)] {
                let Some(sources) = by_vertex.get(&from).cloned() else { continue };
                for s in sources {
                    let Some(&df) = snapshot.get(&(from, s)) else { continue };
                    let cand = df + w;
                    if cand.to_f64() > half {
                        continue;
                    }
                    if latest.get(&(to, s)).is_none_or(|&cur| cand < cur) {
                        latest.insert((to, s), cand);
                        let lst = by_vertex.entry(to).or_default();
                        if !lst.contains(&s) {
                            if lst.len() >= params.list_cap {
                                continue;
                            }
                            lst.push(s);
                            lst.sort_unstable();
                        }
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for (&(v, s), &d) in &latest {
        if v != s && center_set.contains(&v) && center_set.contains(&s) && d.to_f64() <= half {
            out.push((s, v, d));
        }
    }
    Ok(out)
}

/// Single-scale hopset on the node graph `G_k` (superclustering via
/// [`node_bfe`], interconnection via [`node_interconnect`]).
#[allow(clippy::too_many_arguments)]
fn node_scale_hopset(
    stream: &MultipassStream,
    tr: &Translation<'_>,
    vcb: &CisCodebook,
    ecb: &CisCodebook,
    params: &HopsetParams,
    overlay: &[(VertexId, VertexId, Dist)],
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<Vec<HopsetEdge>> {
    let n = stream.n();
    let k = tr.k;
    let mut rng = SplitMix64::new(seed);
    // vertices of G_k: the distinct centers
    let mut centers: Vec<VertexId> = (1..=n).map(|v| tr.center_of[v as usize]).collect();
    centers.sort_unstable();
    centers.dedup();
    let mut clusters: Vec<VertexId> = centers.clone(); // cluster = its center
    let mut edges: Vec<HopsetEdge> = Vec::new();

    for i in 0..=params.ell {
        if clusters.is_empty() {
            break;
        }
        let delta_p = params.delta_prime(k, i);
        let next: Vec<VertexId>;
        let u_i: Vec<VertexId>;
        if i < params.ell {
            let sample_p = 1.0 / params.deg[i];
            let sampled: Vec<bool> = clusters.iter().map(|_| rng.coin(sample_p)).collect();
            if sampled.iter().any(|&s| s) {
                let cs: Vec<VertexId> = clusters
                    .iter()
                    .zip(&sampled)
                    .filter(|(_, &s)| s)
                    .map(|(&c, _)| c)
                    .collect();
                let est = node_bfe(
                    stream,
                    tr,
                    ecb,
                    &cs,
                    params.hops(),
                    params.chi,
                    delta_p,
                    overlay,
                    params,
                    ledger,
                    rng.next_u64(),
                )?;
                let mut nx = cs.clone();
                let mut ui = Vec::new();
                for (&c, &s) in clusters.iter().zip(&sampled) {
                    if s {
                        continue;
                    }
                    match est.dist[c as usize] {
                        Some(d) if d.to_f64() <= delta_p => {
                            // the pointer path pins the root and a real
                            // node-graph path weightemitted as the edge
                            let (root, path_w) =
                                est.resolve_root(c).expect("estimated vertex resolves");
                            edges.push(HopsetEdge {
                                u: c,
                                v: root,
                                weight: path_w,
                                scale: k,
                                path: None,
                            });
                        }
                        _ => ui.push(c),
                    }
                }
                nx.sort_unstable();
                next = nx;
                u_i = ui;
            } else {
                next = Vec::new();
                u_i = clusters.clone();
            }
        } else {
            next = Vec::new();
            u_i = clusters.clone();
        }
        let inter = node_interconnect(
            stream,
            tr,
            vcb,
            ecb,
            &u_i,
            i,
            delta_p / 2.0,
            overlay,
            params,
            ledger,
            rng.next_u64(),
        )?;
        for (a, b, d) in inter {
            edges.push(HopsetEdge { u: a, v: b, weight: d, scale: k, path: None });
        }
        clusters = next;
    }

    // dedupe symmetric pairs, keep minima
    let mut best: BTreeMap<(VertexId, VertexId), Dist> = BTreeMap::new();
    for e in edges {
        let key = (e.u.min(e.v), e.u.max(e.v));
        match best.get(&key) {
            Some(&w) if w <= e.weight => {}
            _ => {
                best.insert(key, e.weight);
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|((u, v), weight)| HopsetEdge { u, v, weight, scale: k, path: None })
        .collect())
}

// ---------------------------------------------------------------------------
// Top-level reduction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AspectReduceOutput {
    /// Star edges followed by node-graph hopset edges.
    pub edges: Vec<HopsetEdge>,
    pub star_count: usize,
    pub relevant_scales: Vec<i64>,
    pub all_scales: Vec<i64>,
    pub passes: u64,
    /// Per scale (same order as `all_scales`): the node vertex sets.
    pub nodes_per_scale: Vec<Vec<Vec<VertexId>>>,
    /// Per scale: `center_of[v]`.
    pub centers_per_scale: Vec<Vec<VertexId>>,
    /// Node-size lookup (indexed by center) per scale.
    pub sizes_per_scale: Vec<Vec<u64>>,
    /// `L(v)`: the (scale, new center) merge log per vertex.
    pub lists: Vec<Vec<(i64, VertexId)>>,
    pub eps_contract: f64,
}

/// The pass-1 artifact: nodes, centers, star edges and merge logs per
/// scale, before any node-graph hopset is built.
pub struct ContractionOutput {
    pub star_edges: Vec<HopsetEdge>,
    pub relevant_scales: Vec<i64>,
    pub all_scales: Vec<i64>,
    pub nodes_per_scale: Vec<Vec<Vec<VertexId>>>,
    pub centers_per_scale: Vec<Vec<VertexId>>,
    pub sizes_per_scale: Vec<Vec<u64>>,
    pub lists: Vec<Vec<(i64, VertexId)>>,
    pub eps_contract: f64,
}

/// One stream pass of XOR slot arrays plus the offline ComputeCC
/// contraction, with a single fresh-seed retry when some component
/// exhausts its hash copies.
pub fn aspect_contract(
    stream: &MultipassStream,
    params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<ContractionOutput> {
    if !stream.weighted() {
        return Err(Error::InvalidParam("aspect reduction requires a weighted stream".into()));
    }
    let n = stream.n();
    let eps_contract = params.eps_prime / 24.0;
    let scales: Vec<i64> = if params.k0 <= params.k_lambda {
        (params.k0..=params.k_lambda).collect()
    } else {
        Vec::new()
    };
    if scales.is_empty() {
        return Ok(ContractionOutput {
            star_edges: Vec::new(),
            relevant_scales: Vec::new(),
            all_scales: Vec::new(),
            nodes_per_scale: Vec::new(),
            centers_per_scale: Vec::new(),
            sizes_per_scale: Vec::new(),
            lists: vec![Vec::new(); n as usize + 1],
            eps_contract,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut contraction_and_relevance = None;
    for _attempt in 0..2 {
        let pass1 = run_pass1(stream, params, eps_contract, &scales, ledger, &mut rng)?;
        match compute_cc(n, &pass1, &scales, eps_contract) {
            Ok(c) => {
                contraction_and_relevance = Some((c, pass1.relevance));
                break;
            }
            Err(()) => continue,
        }
    }
    let (contraction, relevance) = contraction_and_relevance.ok_or_else(|| {
        Error::SamplerAbort("aspect reduction: ComputeCC exhausted hash copies twice".into())
    })?;
    let relevant: Vec<i64> = scales
        .iter()
        .zip(&relevance)
        .filter(|(_, &c)| c > 0)
        .map(|(&k, _)| k)
        .collect();
    Ok(ContractionOutput {
        star_edges: contraction.star_edges,
        relevant_scales: relevant,
        all_scales: scales,
        nodes_per_scale: contraction.nodes_per_scale,
        centers_per_scale: contraction.center_of,
        sizes_per_scale: contraction.node_size,
        lists: contraction.lists,
        eps_contract,
    })
}

/// Klein-Subramanian style reduction in the turnstile model: one pass of
/// XOR slot arrays, offline contraction (ComputeCC) per scale, star edges,
/// then per-scale hopsets over the translated node multigraphs.
pub fn aspect_ratio_reduce(
    stream: &MultipassStream,
    params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<AspectReduceOutput> {
    let n = stream.n();
    let passes_before = stream.passes_taken();
    let contraction = aspect_contract(stream, params, ledger, seed)?;
    let eps_contract = contraction.eps_contract;
    if contraction.all_scales.is_empty() {
        return Ok(AspectReduceOutput {
            edges: Vec::new(),
            star_count: 0,
            relevant_scales: Vec::new(),
            all_scales: Vec::new(),
            passes: stream.passes_taken() - passes_before,
            nodes_per_scale: Vec::new(),
            centers_per_scale: Vec::new(),
            sizes_per_scale: Vec::new(),
            lists: contraction.lists,
            eps_contract,
        });
    }
    let mut rng = SplitMix64::new(seed ^ 0x9e37_79b9);
    let relevant = contraction.relevant_scales.clone();

    // phase 2: per-scale hopsets on relevant node graphs, lower scales first
    let vcb = CisCodebook::build(n as usize);
    let ecb = CisCodebook::build(((n as u64) * (n as u64 - 1) / 2).max(1) as usize);
    let mut center_edges: Vec<HopsetEdge> = Vec::new();
    for &k in &relevant {
        let idx = (k - params.k0) as usize;
        let tr = Translation {
            k,
            n,
            eps_contract,
            center_of: &contraction.centers_per_scale[idx],
            node_size: &contraction.sizes_per_scale[idx],
        };
        // translated lower-scale hopset edges as the offline overlay
        let mut overlay: Vec<(VertexId, VertexId, Dist)> = Vec::new();
        for e in &center_edges {
            let (a, b) = (tr.center_of[e.u as usize], tr.center_of[e.v as usize]);
            if a != b {
                overlay.push((a, b, e.weight));
            }
        }
        let hk = node_scale_hopset(
            stream,
            &tr,
            &vcb,
            &ecb,
            params,
            &overlay,
            ledger,
            rng.next_u64(),
        )?;
        center_edges.extend(hk);
    }

    let star_count = contraction.star_edges.len();
    let mut edges = contraction.star_edges.clone();
    edges.extend(center_edges);
    Ok(AspectReduceOutput {
        edges,
        star_count,
        relevant_scales: relevant,
        all_scales: contraction.all_scales,
        passes: stream.passes_taken() - passes_before,
        nodes_per_scale: contraction.nodes_per_scale,
        centers_per_scale: contraction.centers_per_scale,
        sizes_per_scale: contraction.sizes_per_scale,
        lists: contraction.lists,
        eps_contract,
    })
}

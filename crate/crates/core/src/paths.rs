//! Shortest-path applications: all-pairs almost shortest paths and
//! multi-source (1+eps)-approximate shortest paths, unweighted via the
//! spanner and weighted via path-reporting hopsets.

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::explore::{approx_bellman_ford, bfs_forest_per_source, ExploreConfig};
use crate::hopset::{multi_scale_hopset, HopsetEdge, HopsetParams};
use crate::oracle::{exact_bfs, Graph};
use crate::spanner::{build_spanner, SpannerParams};
use crate::stream::{MultipassStream, SpaceLedger};
use crate::VertexId;

// ---------------------------------------------------------------------------
// Unweighted APASP via the spanner
// ---------------------------------------------------------------------------

/// All-pairs almost-shortest-path oracle: distances are answered on demand
/// by BFS over the stored spanner (no n^2 matrix is materialized).
pub struct ApaspOracle {
    spanner: Graph,
    pub edges: Vec<(VertexId, VertexId)>,
    pub eps: f64,
    pub beta: f64,
    pub passes: u64,
}

impl ApaspOracle {
    pub fn query(&self, u: VertexId, v: VertexId) -> Option<u32> {
        if u == v {
            return Some(0);
        }
        exact_bfs(&self.spanner, &[u])[v as usize]
    }

    /// All distances from one source (one BFS on the spanner).
    pub fn distances_from(&self, u: VertexId) -> Vec<Option<u32>> {
        exact_bfs(&self.spanner, &[u])
    }
}

/// Build the spanner and wrap it in an on-demand distance oracle with
/// guarantee `d_G <= d <= (1+eps) d_G + beta`.
pub fn apasp_unweighted(
    stream: &MultipassStream,
    params: &SpannerParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<ApaspOracle> {
    let out = build_spanner(stream, params, ledger, seed)?;
    let mut spanner = Graph::new(stream.n());
    for &(u, v) in &out.edges {
        spanner.add_edge(u, v, Dist::ONE);
    }
    Ok(ApaspOracle {
        spanner,
        edges: out.edges,
        eps: params.eps,
        beta: params.beta,
        passes: out.passes,
    })
}

// ---------------------------------------------------------------------------
// Unweighted S x V ASP
// ---------------------------------------------------------------------------

pub struct MultiSourceAspUnweighted {
    pub sources: Vec<VertexId>,
    /// `d[source index][v]`
    pub dist: Vec<Vec<Option<u32>>>,
    pub exact_depth: u32,
    pub passes: u64,
}

impl MultiSourceAspUnweighted {
    pub fn query(&self, source_idx: usize, v: VertexId) -> Option<u32> {
        self.dist[source_idx][v as usize]
    }
}

/// S x V distances for up to `n^rho` sources: exact BFS trees to depth
/// `ceil(beta/eps)` give exact answers for near pairs; the spanner estimate
/// covers the far ones with purely multiplicative stretch `1 + O(eps)`. The
/// returned value is the minimum of the two.
pub fn multi_source_asp_unweighted(
    stream: &MultipassStream,
    sources: &[VertexId],
    params: &SpannerParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<MultiSourceAspUnweighted> {
    let cap = (stream.n() as f64).powf(params.rho).ceil() as usize;
    if sources.is_empty() || sources.len() > cap {
        return Err(Error::InvalidParam(format!(
            "need 1..={cap} sources (n^rho), got {}",
            sources.len()
        )));
    }
    let passes_before = stream.passes_taken();
    let apasp = apasp_unweighted(stream, params, ledger, seed)?;
    // BFS layers saturate at n-1 hops, so the ceil(beta/eps) exact depth
    // never needs more passes than that
    let depth = ((params.beta / params.eps).ceil() as u32).min(stream.n().saturating_sub(1));
    let cfg = ExploreConfig::with_c1(params.c1);
    let forests = bfs_forest_per_source(stream, sources, depth, &cfg, ledger, seed ^ 0x5eed)?;
    let mut dist = Vec::with_capacity(sources.len());
    for (i, &s) in sources.iter().enumerate() {
        let spanner_d = apasp.distances_from(s);
        let mut row: Vec<Option<u32>> = vec![None; stream.n() as usize + 1];
        for v in 1..=stream.n() {
            let exact = forests[i].layer[v as usize];
            let approx = spanner_d[v as usize];
            row[v as usize] = match (exact, approx) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (x, None) => x,
                (None, y) => y,
            };
        }
        dist.push(row);
    }
    Ok(MultiSourceAspUnweighted {
        sources: sources.to_vec(),
        dist,
        exact_depth: (params.beta / params.eps).ceil() as u32,
        passes: stream.passes_taken() - passes_before,
    })
}

// ---------------------------------------------------------------------------
// Weighted S x V ASP via path-reporting hopsets
// ---------------------------------------------------------------------------

pub struct MultiSourceAspWeighted {
    pub sources: Vec<VertexId>,
    /// `d[source index][v]`
    pub dist: Vec<Vec<Option<Dist>>>,
    /// G-valid path per (source index, v), endpoints included.
    paths: Vec<Vec<Option<Vec<VertexId>>>>,
    pub hopset: Vec<HopsetEdge>,
    pub passes: u64,
}

impl MultiSourceAspWeighted {
    pub fn query(&self, source_idx: usize, v: VertexId) -> Option<Dist> {
        self.dist[source_idx][v as usize]
    }

    pub fn path(&self, source_idx: usize, v: VertexId) -> Option<&[VertexId]> {
        self.paths[source_idx][v as usize].as_deref()
    }
}

/// Expand a pointer path over `G u H` into a pure-G vertex path by splicing
/// hopset paths (recursively through lower scales). `g_weights` holds the
/// probed direct-edge weights for every pair appearing in stored hopset
/// paths, so each segment resolves to the same minimum the edge weights
/// were priced with.
fn expand_to_g(
    path: &[crate::explore::PathStep],
    hopset: &[HopsetEdge],
    g_weights: &std::collections::BTreeMap<(VertexId, VertexId), Dist>,
) -> Option<Vec<VertexId>> {
    // path[0] = v, path[last] = source; the link on path[i] describes the
    // edge between path[i-1].0 and path[i].0. Walk it backwards to emit
    // source -> v.
    let mut out: Vec<VertexId> = vec![path.last().unwrap().0];
    for i in (1..path.len()).rev() {
        let from = path[i].0;
        let to = path[i - 1].0;
        let (w, kind) = path[i].1?;
        match kind {
            crate::explore::EdgeKind::Stream => out.push(to),
            crate::explore::EdgeKind::Overlay => {
                let seg = expand_hopset_edge(from, to, w, hopset, g_weights)?;
                out.extend_from_slice(&seg[1..]);
            }
        }
    }
    Some(out)
}

/// G-vertex path implementing a hopset edge of the given weight between two
/// endpoints: per stored segment, the cheaper of the direct G edge and the
/// best lower-scale hopset edge is taken (matching the priced weight), the
/// latter spliced recursively.
fn expand_hopset_edge(
    from: VertexId,
    to: VertexId,
    weight: Dist,
    hopset: &[HopsetEdge],
    g_weights: &std::collections::BTreeMap<(VertexId, VertexId), Dist>,
) -> Option<Vec<VertexId>> {
    let e = hopset.iter().find(|e| {
        e.weight == weight
            && e.path.is_some()
            && ((e.u == from && e.v == to) || (e.u == to && e.v == from))
    })?;
    let stored = e.path.as_ref()?;
    let oriented: Vec<VertexId> = if stored.first() == Some(&from) {
        stored.clone()
    } else {
        stored.iter().rev().copied().collect()
    };
    if oriented.first() != Some(&from) || oriented.last() != Some(&to) {
        return None;
    }
    let mut out = vec![from];
    for w in oriented.windows(2) {
        let (x, y) = (w[0], w[1]);
        let key = (x.min(y), x.max(y));
        let gw = g_weights.get(&key).copied();
        let lower = hopset
            .iter()
            .filter(|le| {
                le.scale < e.scale
                    && le.path.is_some()
                    && ((le.u == x && le.v == y) || (le.u == y && le.v == x))
            })
            .map(|le| le.weight)
            .min();
        match (gw, lower) {
            (Some(g), Some(l)) if g <= l => out.push(y),
            (Some(_), None) => out.push(y),
            (_, Some(l)) => {
                let seg = expand_hopset_edge(x, y, l, hopset, g_weights)?;
                out.extend_from_slice(&seg[1..]);
            }
            (None, None) => return None,
        }
    }
    Some(out)
}

/// All vertex pairs appearing as consecutive elements of stored hopset
/// paths; their direct G weights are probed once per run.
fn stored_path_pairs(hopset: &[HopsetEdge]) -> std::collections::BTreeSet<(VertexId, VertexId)> {
    let mut pairs = std::collections::BTreeSet::new();
    for e in hopset {
        if let Some(p) = &e.path {
            for w in p.windows(2) {
                pairs.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
    }
    pairs
}

/// Weighted S x V (1+eps)-ASP: build a path-reporting hopset with eps/3,
/// run the approximate Bellman-Ford with eps/3 on `G` with the hopset as
/// offline overlay to hop-depth beta, and expand every reported pointer
/// path to a G-valid path.
pub fn multi_source_asp_weighted(
    stream: &MultipassStream,
    sources: &[VertexId],
    eps: f64,
    hopset_params: &HopsetParams,
    ledger: &mut SpaceLedger,
    seed: u64,
) -> Result<MultiSourceAspWeighted> {
    let n = stream.n();
    let cap = (n as f64).powf(hopset_params.rho).ceil() as usize;
    if sources.is_empty() || sources.len() > cap {
        return Err(Error::InvalidParam(format!(
            "need 1..={cap} sources (n^rho), got {}",
            sources.len()
        )));
    }
    let passes_before = stream.passes_taken();
    let hopset = multi_scale_hopset(stream, hopset_params, ledger, seed, true)?;
    let overlay: Vec<(VertexId, VertexId, Dist)> =
        hopset.edges.iter().map(|e| (e.u, e.v, e.weight)).collect();
    let bf_eps = eps / 3.0;
    // hop depth: beta from the hopset guarantee, bounded by n-1 where
    // hop-bounded distances saturate anyway
    let depth = (hopset_params.hopbound().max(1)).min(n.saturating_sub(1));
    let cfg = ExploreConfig::with_c1(hopset_params.c1);

    let g_weights = crate::hopset::probe_edge_weights(
        stream,
        &stored_path_pairs(&hopset.edges),
        ledger,
    )?;
    let mut dist = Vec::with_capacity(sources.len());
    let mut paths = Vec::with_capacity(sources.len());
    let mut rng = crate::rng::SplitMix64::new(seed ^ 0xa5b);
    for &s in sources {
        let est = approx_bellman_ford(
            stream,
            &[s],
            depth,
            bf_eps,
            hopset_params.lambda_bound,
            Some(&overlay),
            &cfg,
            ledger,
            rng.next_u64(),
        )?;
        let mut row: Vec<Option<Dist>> = vec![None; n as usize + 1];
        let mut prow: Vec<Option<Vec<VertexId>>> = vec![None; n as usize + 1];
        for v in 1..=n {
            let Some(d) = est.dist[v as usize] else { continue };
            row[v as usize] = Some(d);
            if let Some(ptr) = est.pointer_path(v) {
                prow[v as usize] = expand_to_g(&ptr, &hopset.edges, &g_weights);
            }
        }
        dist.push(row);
        paths.push(prow);
    }
    Ok(MultiSourceAspWeighted {
        sources: sources.to_vec(),
        dist,
        paths,
        hopset: hopset.edges,
        passes: stream.passes_taken() - passes_before,
    })
}

/// Weight of a vertex path in G; `None` if some consecutive pair is not an
/// edge of the final graph.
pub fn g_path_weight(g: &Graph, path: &[VertexId]) -> Option<Dist> {
    if path.len() < 2 {
        return Some(Dist::ZERO);
    }
    let mut total = Dist::ZERO;
    for w in path.windows(2) {
        total = total + g.edge_weight(w[0], w[1])?;
    }
    Some(total)
}

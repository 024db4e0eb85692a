//! Exact offline references: BFS, Dijkstra, hop-bounded Bellman-Ford, and
//! the spanner / hopset validators built on them.

use crate::dist::Dist;
use crate::hopset::HopsetEdge;
use crate::rng::SplitMix64;
use crate::VertexId;
use rayon::prelude::*;
use std::collections::BinaryHeap;

/// Materialized simple graph, adjacency-list form, vertices `1..=n`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: VertexId,
    adj: Vec<Vec<(VertexId, Dist)>>,
}

impl Graph {
    pub fn new(n: VertexId) -> Graph {
        Graph { n, adj: vec![Vec::new(); n as usize + 1] }
    }

    pub fn n(&self) -> VertexId {
        self.n
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, w: Dist) {
        self.adj[u as usize].push((v, w));
        self.adj[v as usize].push((u, w));
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, Dist)] {
        &self.adj[v as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u as usize].iter().any(|&(x, _)| x == v)
    }

    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> Option<Dist> {
        self.adj[u as usize]
            .iter()
            .find(|&&(x, _)| x == v)
            .map(|&(_, w)| w)
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId, Dist)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 1..=self.n {
            for &(v, w) in self.neighbors(u) {
                if u < v {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    pub fn max_weight(&self) -> Dist {
        self.edges()
            .iter()
            .map(|&(_, _, w)| w)
            .max()
            .unwrap_or(Dist::ONE)
    }

    /// Union with an extra weighted edge set; parallel edges keep the
    /// minimum weight.
    pub fn union_with(&self, extra: &[(VertexId, VertexId, Dist)]) -> Graph {
        let mut g = self.clone();
        for &(u, v, w) in extra {
            match g.edge_weight(u, v) {
                Some(old) if old <= w => {}
                Some(_) => {
                    for (x, ww) in g.adj[u as usize].iter_mut() {
                        if *x == v {
                            *ww = w;
                        }
                    }
                    for (x, ww) in g.adj[v as usize].iter_mut() {
                        if *x == u {
                            *ww = w;
                        }
                    }
                }
                None => g.add_edge(u, v, w),
            }
        }
        g
    }
}

/// Exact multi-source BFS: hop distance from the set `sources`.
/// `None` means unreachable.
pub fn exact_bfs(g: &Graph, sources: &[VertexId]) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.n() as usize + 1];
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        if dist[s as usize].is_none() {
            dist[s as usize] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize].unwrap();
        for &(v, _) in g.neighbors(u) {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<Option<Dist>>,
    pub parent: Vec<Option<VertexId>>,
}

/// Exact Dijkstra from a single source.
pub fn dijkstra(g: &Graph, s: VertexId) -> ShortestPaths {
    let n = g.n() as usize;
    let mut dist: Vec<Option<Dist>> = vec![None; n + 1];
    let mut parent: Vec<Option<VertexId>> = vec![None; n + 1];
    let mut heap: BinaryHeap<std::cmp::Reverse<(Dist, VertexId)>> = BinaryHeap::new();
    dist[s as usize] = Some(Dist::ZERO);
    heap.push(std::cmp::Reverse((Dist::ZERO, s)));
    while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
        if dist[u as usize] != Some(d) {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            let nd = d + w;
            if dist[v as usize].is_none() || nd < dist[v as usize].unwrap() {
                dist[v as usize] = Some(nd);
                parent[v as usize] = Some(u);
                heap.push(std::cmp::Reverse((nd, v)));
            }
        }
    }
    ShortestPaths { dist, parent }
}

/// `t`-bounded distances from `s`: `t` rounds of synchronous relaxation, so
/// `dist[v]` is the weight of the shortest path with at most `t` edges.
pub fn hop_bounded_bf(g: &Graph, s: VertexId, t_hops: u32) -> Vec<Option<Dist>> {
    let n = g.n() as usize;
    let mut dist: Vec<Option<Dist>> = vec![None; n + 1];
    dist[s as usize] = Some(Dist::ZERO);
    // d^(t) saturates at n-1 hops: shortest paths are simple.
    let rounds = t_hops.min(g.n().saturating_sub(1));
    for _ in 0..rounds {
        let prev = dist.clone();
        let mut changed = false;
        for u in 1..=g.n() {
            if let Some(du) = prev[u as usize] {
                for &(v, w) in g.neighbors(u) {
                    let nd = du + w;
                    if dist[v as usize].is_none() || nd < dist[v as usize].unwrap() {
                        dist[v as usize] = Some(nd);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Multi-source variant of [`hop_bounded_bf`]: distance to the nearest source.
pub fn hop_bounded_bf_multi(g: &Graph, sources: &[VertexId], t_hops: u32) -> Vec<Option<Dist>> {
    let n = g.n() as usize;
    let mut dist: Vec<Option<Dist>> = vec![None; n + 1];
    for &s in sources {
        dist[s as usize] = Some(Dist::ZERO);
    }
    let rounds = t_hops.min(g.n().saturating_sub(1));
    for _ in 0..rounds {
        let prev = dist.clone();
        let mut changed = false;
        for u in 1..=g.n() {
            if let Some(du) = prev[u as usize] {
                for &(v, w) in g.neighbors(u) {
                    let nd = du + w;
                    if dist[v as usize].is_none() || nd < dist[v as usize].unwrap() {
                        dist[v as usize] = Some(nd);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Pair sample used by the validators: uniform pairs plus all pairs among
/// the 32 highest-degree vertices.
pub fn sample_pairs(g: &Graph, count: usize, seed: u64) -> Vec<(VertexId, VertexId)> {
    let n = g.n();
    let mut rng = SplitMix64::new(seed);
    let mut pairs = Vec::with_capacity(count + 32 * 32 / 2);
    if n >= 2 {
        for _ in 0..count {
            let u = rng.range_u64(1..n as u64 + 1) as VertexId;
            let v = rng.range_u64(1..n as u64 + 1) as VertexId;
            if u != v {
                pairs.push((u, v));
            }
        }
    }
    let mut by_degree: Vec<VertexId> = (1..=n).collect();
    by_degree.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    let top: Vec<VertexId> = by_degree.into_iter().take(32).collect();
    for i in 0..top.len() {
        for j in i + 1..top.len() {
            pairs.push((top[i], top[j]));
        }
    }
    pairs
}

#[derive(Debug, Clone)]
pub struct SpannerReport {
    pub ok: bool,
    pub subgraph_ok: bool,
    pub pairs_checked: usize,
    pub violations: usize,
    /// Worst observed multiplicative stretch over sampled connected pairs.
    pub worst_multiplicative: f64,
    /// Worst observed additive slack `d_H - d_G`.
    pub worst_additive: u32,
    /// Additive slack distribution over sampled pairs: `histogram[s]` counts
    /// pairs with `d_H - d_G = s` (last bucket aggregates the tail).
    pub additive_histogram: Vec<usize>,
}

/// Check `H ⊆ E(G)` and `d_H(u,v) <= (1 + eps) d_G(u,v) + beta` over sampled
/// pairs (unweighted graphs).
pub fn validate_spanner(
    g: &Graph,
    spanner_edges: &[(VertexId, VertexId)],
    eps: f64,
    beta: f64,
    pair_count: usize,
    seed: u64,
) -> SpannerReport {
    let mut h = Graph::new(g.n());
    let mut subgraph_ok = true;
    for &(u, v) in spanner_edges {
        if !g.has_edge(u, v) {
            subgraph_ok = false;
        }
        h.add_edge(u, v, Dist::ONE);
    }
    let pairs = sample_pairs(g, pair_count, seed);
    let mut sources: Vec<VertexId> = pairs.iter().map(|&(u, _)| u).collect();
    sources.sort_unstable();
    sources.dedup();
    const HIST_BUCKETS: usize = 17; // slack 0..=15, last bucket = tail
    struct SourceAcc {
        checked: usize,
        violations: usize,
        worst_mult: f64,
        worst_add: u32,
        hist: [usize; HIST_BUCKETS],
    }
    let per_source: Vec<SourceAcc> = sources
        .par_iter()
        .map(|&s| {
            let dg = exact_bfs(g, &[s]);
            let dh = exact_bfs(&h, &[s]);
            let mut acc = SourceAcc {
                checked: 0,
                violations: 0,
                worst_mult: 1.0,
                worst_add: 0,
                hist: [0; HIST_BUCKETS],
            };
            for &(_, v) in pairs.iter().filter(|&&(u, _)| u == s) {
                let (Some(dgv), dhv) = (dg[v as usize], dh[v as usize]) else {
                    continue;
                };
                acc.checked += 1;
                let bound = (1.0 + eps) * dgv as f64 + beta;
                match dhv {
                    None => acc.violations += 1,
                    Some(d) if d as f64 > bound + 1e-9 => acc.violations += 1,
                    Some(d) => {
                        if dgv > 0 {
                            acc.worst_mult = acc.worst_mult.max(d as f64 / dgv as f64);
                        }
                        let slack = d.saturating_sub(dgv);
                        acc.worst_add = acc.worst_add.max(slack);
                        acc.hist[(slack as usize).min(HIST_BUCKETS - 1)] += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut violations = 0usize;
    let mut worst_mult = 1.0f64;
    let mut worst_add = 0u32;
    let mut checked = 0usize;
    let mut additive_histogram = vec![0usize; HIST_BUCKETS];
    for acc in per_source {
        checked += acc.checked;
        violations += acc.violations;
        worst_mult = worst_mult.max(acc.worst_mult);
        worst_add = worst_add.max(acc.worst_add);
        for (slot, c) in additive_histogram.iter_mut().zip(acc.hist) {
            *slot += c;
        }
    }
    SpannerReport {
        ok: subgraph_ok && violations == 0,
        subgraph_ok,
        pairs_checked: checked,
        violations,
        worst_multiplicative: worst_mult,
        worst_additive: worst_add,
        additive_histogram,
    }
}

#[derive(Debug, Clone)]
pub struct HopsetReport {
    pub ok: bool,
    /// No hopset edge undercuts the true distance between its endpoints.
    pub never_shortens: bool,
    /// Sandwich `d_G <= d^(beta)_{G u H} <= (1+eps') d_G` over sampled pairs.
    pub sandwich_ok: bool,
    /// Every stored path expands in G to exactly the edge weight.
    pub paths_ok: bool,
    pub pairs_checked: usize,
    pub violations: usize,
    pub worst_stretch: f64,
}

/// Validate a hopset against its defining inequalities via the hop-bounded
/// oracle, plus path-reporting expansion when paths are present.
pub fn validate_hopset(
    g: &Graph,
    hopset: &[HopsetEdge],
    eps_prime: f64,
    beta_prime: u32,
    pair_count: usize,
    seed: u64,
) -> HopsetReport {
    let extra: Vec<(VertexId, VertexId, Dist)> =
        hopset.iter().map(|e| (e.u, e.v, e.weight)).collect();
    let gh = g.union_with(&extra);

    // Hopset edges never shorten true distances.
    let mut never_shortens = true;
    {
        let mut sources: Vec<VertexId> = hopset.iter().map(|e| e.u).collect();
        sources.sort_unstable();
        sources.dedup();
        for &s in &sources {
            let d = dijkstra(g, s);
            for e in hopset.iter().filter(|e| e.u == s) {
                match d.dist[e.v as usize] {
                    Some(true_d) if e.weight >= true_d => {}
                    _ => never_shortens = false,
                }
            }
        }
    }

    let pairs = sample_pairs(g, pair_count, seed);
    let mut sources: Vec<VertexId> = pairs.iter().map(|&(u, _)| u).collect();
    sources.sort_unstable();
    sources.dedup();
    let per_source: Vec<(usize, usize, f64)> = sources
        .par_iter()
        .map(|&s| {
            let dg = dijkstra(g, s);
            let dbounded = hop_bounded_bf(&gh, s, beta_prime);
            let mut acc = (0usize, 0usize, 1.0f64);
            for &(_, v) in pairs.iter().filter(|&&(u, _)| u == s) {
                let Some(true_d) = dg.dist[v as usize] else {
                    continue;
                };
                acc.0 += 1;
                match dbounded[v as usize] {
                    Some(db) if db >= true_d => {
                        let stretch = if true_d > Dist::ZERO {
                            db.to_f64() / true_d.to_f64()
                        } else {
                            1.0
                        };
                        acc.2 = acc.2.max(stretch);
                        if stretch > 1.0 + eps_prime + 1e-9 {
                            acc.1 += 1;
                        }
                    }
                    _ => acc.1 += 1,
                }
            }
            acc
        })
        .collect();
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut worst = 1.0f64;
    for (c, viol, w) in per_source {
        checked += c;
        violations += viol;
        worst = worst.max(w);
    }

    let paths_ok = hopset
        .iter()
        .all(|e| crate::hopset::expand_path_weight(e, hopset, g) == Some(e.weight));

    HopsetReport {
        ok: never_shortens && violations == 0 && paths_ok,
        never_shortens,
        sandwich_ok: violations == 0,
        paths_ok,
        pairs_checked: checked,
        violations,
        worst_stretch: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: VertexId) -> Graph {
        let mut g = Graph::new(n);
        for v in 1..n {
            g.add_edge(v, v + 1, Dist::ONE);
        }
        g
    }

    #[test]
    fn hop_bounded_needs_enough_hops() {
        // path of 3 unit edges; from one end, the far endpoint needs 3 hops
        let g = path_graph(4);
        let d2 = hop_bounded_bf(&g, 1, 2);
        assert_eq!(d2[4], None);
        let d3 = hop_bounded_bf(&g, 1, 3);
        assert_eq!(d3[4], Some(Dist::from_int(3)));
    }

    #[test]
    fn hop_bounded_saturates_to_dijkstra() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..20 {
            let n = 20;
            let mut g = Graph::new(n);
            for _ in 0..40 {
                let u = rng.range_u64(1..n as u64 + 1) as VertexId;
                let v = rng.range_u64(1..n as u64 + 1) as VertexId;
                if u != v && !g.has_edge(u, v) {
                    g.add_edge(u, v, Dist::from_int(1 + rng.range_u64(0..9) as i64));
                }
            }
            let d1 = hop_bounded_bf(&g, 1, n + 5);
            let d2 = dijkstra(&g, 1);
            assert_eq!(d1, d2.dist);
        }
    }

    #[test]
    fn hop_bounded_monotone_in_t() {
        let mut rng = SplitMix64::new(9);
        let n = 30;
        let mut g = Graph::new(n);
        for _ in 0..60 {
            let u = rng.range_u64(1..n as u64 + 1) as VertexId;
            let v = rng.range_u64(1..n as u64 + 1) as VertexId;
            if u != v && !g.has_edge(u, v) {
                g.add_edge(u, v, Dist::from_int(1 + rng.range_u64(0..5) as i64));
            }
        }
        let mut prev = hop_bounded_bf(&g, 1, 1);
        for t in 2..10 {
            let cur = hop_bounded_bf(&g, 1, t);
            for v in 1..=n as usize {
                match (prev[v], cur[v]) {
                    (Some(p), Some(c)) => assert!(c <= p),
                    (Some(_), None) => panic!("d^(t) grew with t"),
                    _ => {}
                }
            }
            prev = cur;
        }
    }

#[allow(clippy::needless_range_loop)]
    #[test]
    fn bfs_equals_dijkstra_on_unit_weights() {
        let g = path_graph(10);
        let bfs = exact_bfs(&g, &[1]);
        let dj = dijkstra(&g, 1);
        for v in 1..=10usize {
            assert_eq!(
                bfs[v].map(|h| Dist::from_int(h as i64)),
                dj.dist[v]
            );
        }
    }

    #[test]
    fn spanner_validator_tree_has_zero_slack() {
        let g = path_graph(12);
        let edges: Vec<(VertexId, VertexId)> = (1..12).map(|v| (v, v + 1)).collect();
        let r = validate_spanner(&g, &edges, 0.0, 0.0, 50, 3);
        assert!(r.ok);
        assert_eq!(r.worst_additive, 0);
        assert!((r.worst_multiplicative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_hopset_with_big_beta_is_valid() {
        let g = path_graph(8);
        let r = validate_hopset(&g, &[], 0.0, 100, 30, 1);
        assert!(r.ok, "{r:?}");
    }
}

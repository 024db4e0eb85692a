//! Strict-turnstile dynamic graph streams, replayable over multiple passes.
//!
//! A stream is a sequence of signed (optionally weighted) edge updates whose
//! final per-edge multiplicity is 0 or 1. Streams can live in memory, be
//! re-read from a `DGS1` file on every pass, or be re-shuffled per pass by a
//! seeded permuting wrapper (update order is allowed to differ between
//! passes, final multiplicities are not).

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::VertexId;
use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// One signed edge update. `weight` is present iff the stream is weighted
/// and satisfies `weight >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeUpdate {
    pub u: VertexId,
    pub v: VertexId,
    pub sign: i8,
    pub weight: Option<Dist>,
}

impl EdgeUpdate {
    pub fn insert(u: VertexId, v: VertexId) -> EdgeUpdate {
        EdgeUpdate { u, v, sign: 1, weight: None }
    }

    pub fn delete(u: VertexId, v: VertexId) -> EdgeUpdate {
        EdgeUpdate { u, v, sign: -1, weight: None }
    }

    pub fn insert_w(u: VertexId, v: VertexId, w: Dist) -> EdgeUpdate {
        EdgeUpdate { u, v, sign: 1, weight: Some(w) }
    }

    pub fn delete_w(u: VertexId, v: VertexId, w: Dist) -> EdgeUpdate {
        EdgeUpdate { u, v, sign: -1, weight: Some(w) }
    }

    /// Unordered endpoint pair, smaller first.
    pub fn key(&self) -> (VertexId, VertexId) {
        if self.u <= self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }

    fn validate(&self, n: VertexId, weighted: bool) -> Result<()> {
        if self.u == self.v {
            return Err(Error::InvalidParam(format!("self-loop at vertex {}", self.u)));
        }
        if self.u < 1 || self.u > n || self.v < 1 || self.v > n {
            return Err(Error::InvalidParam(format!(
                "endpoint out of range: ({}, {}) with n = {n}",
                self.u, self.v
            )));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::InvalidParam(format!("sign must be +-1, got {}", self.sign)));
        }
        match (weighted, self.weight) {
            (true, Some(w)) if w < Dist::ONE => {
                Err(Error::InvalidParam(format!("weight {w} < 1")))
            }
            (true, None) => Err(Error::InvalidParam("weighted stream update without weight".into())),
            (false, Some(_)) => Err(Error::InvalidParam("unweighted stream update with weight".into())),
            _ => Ok(()),
        }
    }
}

enum Source {
    InMemory(Vec<EdgeUpdate>),
    FileBacked(PathBuf),
    /// In-memory updates re-shuffled with `SplitMix64(seed ^ pass)` on every
    /// pass. Final multiplicities are order-independent, so this only
    /// exercises order-robustness of the consumers.
    Permuting { updates: Vec<EdgeUpdate>, seed: u64 },
}

/// Default stream-length cap: 10 * n^2 updates ("poly(n)" made concrete).
pub fn default_cap(n: VertexId) -> usize {
    10usize.saturating_mul(n as usize).saturating_mul(n as usize)
}

pub struct MultipassStream {
    n: VertexId,
    weighted: bool,
    cap: usize,
    passes: Cell<u64>,
    source: Source,
    scratch: RefCell<Vec<EdgeUpdate>>,
}

impl MultipassStream {
    pub fn from_updates(n: VertexId, weighted: bool, updates: Vec<EdgeUpdate>) -> Result<Self> {
        let cap = default_cap(n);
        if updates.len() > cap {
            return Err(Error::StreamCapExceeded { len: updates.len(), cap });
        }
        for u in &updates {
            u.validate(n, weighted)?;
        }
        Ok(MultipassStream {
            n,
            weighted,
            cap,
            passes: Cell::new(0),
            source: Source::InMemory(updates),
            scratch: RefCell::new(Vec::new()),
        })
    }

    /// Wrap the same updates in a per-pass permuting source.
    pub fn permuted(self, seed: u64) -> Self {
        let updates = match self.source {
            Source::InMemory(u) | Source::Permuting { updates: u, .. } => u,
            Source::FileBacked(_) => panic!("permute a loaded stream, not a file handle"),
        };
        MultipassStream {
            n: self.n,
            weighted: self.weighted,
            cap: self.cap,
            passes: Cell::new(0),
            source: Source::Permuting { updates, seed },
            scratch: RefCell::new(Vec::new()),
        }
    }

    pub fn n(&self) -> VertexId {
        self.n
    }

    pub fn weighted(&self) -> bool {
        self.weighted
    }

    pub fn passes_taken(&self) -> u64 {
        self.passes.get()
    }

    pub fn len(&self) -> usize {
        match &self.source {
            Source::InMemory(u) | Source::Permuting { updates: u, .. } => u.len(),
            Source::FileBacked(path) => {
                // One counting scan; cheap relative to algorithm passes.
                count_file_updates(path).unwrap_or(0)
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One full pass over the stream. Increments the pass counter.
    pub fn pass<F: FnMut(&EdgeUpdate)>(&self, mut f: F) -> Result<()> {
        let pass_idx = self.passes.get();
        self.passes.set(pass_idx + 1);
        match &self.source {
            Source::InMemory(updates) => {
                for u in updates {
                    f(u);
                }
            }
            Source::Permuting { updates, seed } => {
                let mut scratch = self.scratch.borrow_mut();
                scratch.clear();
                scratch.extend_from_slice(updates);
                let mut rng = SplitMix64::new(seed ^ pass_idx.wrapping_mul(0x2545_f491_4f6c_dd1d));
                rng.shuffle(&mut scratch);
                for u in scratch.iter() {
                    f(u);
                }
            }
            Source::FileBacked(path) => {
                let mut seen = 0usize;
                parse_dgs(path, |upd| {
                    seen += 1;
                    if seen > self.cap {
                        return Err(Error::StreamCapExceeded { len: seen, cap: self.cap });
                    }
                    upd.validate(self.n, self.weighted)?;
                    f(&upd);
                    Ok(())
                })?;
            }
        }
        Ok(())
    }

    /// Materialize the final simple graph (one replay): adjacency lists with
    /// weights for weighted streams, weight 1 otherwise.
    pub fn materialize(&self) -> Result<crate::oracle::Graph> {
        let mut mult: HashMap<(VertexId, VertexId), (i64, Option<Dist>)> = HashMap::new();
        self.pass(|upd| {
            let e = mult.entry(upd.key()).or_insert((0, None));
            e.0 += upd.sign as i64;
            if upd.sign > 0 {
                e.1 = upd.weight;
            }
        })?;
        let mut g = crate::oracle::Graph::new(self.n);
        for ((u, v), (m, w)) in mult {
            if m == 1 {
                g.add_edge(u, v, w.unwrap_or(Dist::ONE));
            } else if m != 0 {
                return Err(Error::TurnstileViolation(format!(
                    "edge ({u},{v}) has final multiplicity {m}"
                )));
            }
        }
        Ok(g)
    }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Build a stream whose final graph has `target_edges` random edges, with
/// `churn * target_edges` extra insert/delete pairs interleaved. Deterministic
/// for a fixed seed.
pub fn generate_stream(
    n: VertexId,
    target_edges: usize,
    churn: f64,
    weighted: bool,
    max_weight: Dist,
    seed: u64,
) -> Result<MultipassStream> {
    if n < 2 {
        return Err(Error::InvalidParam("n must be >= 2".into()));
    }
    if churn < 0.0 {
        return Err(Error::InvalidParam("churn must be >= 0".into()));
    }
    if weighted && max_weight < Dist::ONE {
        return Err(Error::InvalidParam("max_weight must be >= 1".into()));
    }
    let max_edges = n as usize * (n as usize - 1) / 2;
    if target_edges > max_edges {
        return Err(Error::InvalidParam(format!(
            "target_edges {target_edges} > n(n-1)/2 = {max_edges}"
        )));
    }
    let mut rng = SplitMix64::new(seed);

    // Final edge set: distinct pairs.
    let mut final_edges: Vec<(VertexId, VertexId)> = Vec::with_capacity(target_edges);
    let mut chosen = std::collections::HashSet::new();
    while final_edges.len() < target_edges {
        let u = rng.range_u64(1..n as u64 + 1) as VertexId;
        let v = rng.range_u64(1..n as u64 + 1) as VertexId;
        if u == v {
            continue;
        }
        let key = if u < v { (u, v) } else { (v, u) };
        if chosen.insert(key) {
            final_edges.push(key);
        }
    }

    let weight_of = |rng: &mut SplitMix64| -> Option<Dist> {
        if weighted {
            let max_units = (max_weight.micro() / crate::dist::SCALE).max(1);
            Some(Dist::from_int(rng.range_u64(1..max_units as u64 + 1) as i64))
        } else {
            None
        }
    };

    // Churn pairs: transient edges outside the final set, each inserted once
    // and deleted once.
    let churn_pairs = (churn * target_edges as f64).round() as usize;
    struct Event {
        upd: EdgeUpdate,
        pos: u64,
    }
    let mut events: Vec<Event> = Vec::new();
    for &(u, v) in &final_edges {
        let w = weight_of(&mut rng);
        events.push(Event {
            upd: EdgeUpdate { u, v, sign: 1, weight: w },
            pos: rng.next_u64(),
        });
    }
    for _ in 0..churn_pairs {
        let (u, v) = loop {
            let u = rng.range_u64(1..n as u64 + 1) as VertexId;
            let v = rng.range_u64(1..n as u64 + 1) as VertexId;
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            if !chosen.contains(&key) {
                break key;
            }
        };
        let w = weight_of(&mut rng);
        let (p1, p2) = {
            let a = rng.next_u64();
            let b = rng.next_u64();
            (a.min(b), a.max(b).max(a.min(b) + 1))
        };
        events.push(Event { upd: EdgeUpdate { u, v, sign: 1, weight: w }, pos: p1 });
        events.push(Event { upd: EdgeUpdate { u, v, sign: -1, weight: w }, pos: p2 });
    }
    events.sort_by_key(|e| e.pos);
    let updates: Vec<EdgeUpdate> = events.into_iter().map(|e| e.upd).collect();
    MultipassStream::from_updates(n, weighted, updates)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnstileViolationRecord {
    pub u: VertexId,
    pub v: VertexId,
    pub final_multiplicity: i64,
}

#[derive(Debug, Clone)]
pub struct TurnstileReport {
    pub ok: bool,
    pub violations: Vec<TurnstileViolationRecord>,
}

/// One full replay; flags every edge whose final multiplicity is not in
/// {0, 1}, and any intermediate multiplicity below `-(stream length)`.
pub fn validate_strict_turnstile(stream: &MultipassStream) -> Result<TurnstileReport> {
    let len = stream.len() as i64;
    let mut mult: BTreeMap<(VertexId, VertexId), i64> = BTreeMap::new();
    let mut violations = Vec::new();
    stream.pass(|upd| {
        let m = mult.entry(upd.key()).or_insert(0);
        *m += upd.sign as i64;
        if *m < -len {
            let (u, v) = upd.key();
            violations.push(TurnstileViolationRecord { u, v, final_multiplicity: *m });
        }
    })?;
    for ((u, v), m) in mult {
        if m != 0 && m != 1 {
            violations.push(TurnstileViolationRecord { u, v, final_multiplicity: m });
        }
    }
    Ok(TurnstileReport { ok: violations.is_empty(), violations })
}

// ---------------------------------------------------------------------------
// DGS1 file format
// ---------------------------------------------------------------------------

fn parse_header(line: &str, lineno: usize) -> Result<(VertexId, bool)> {
    let mut it = line.split_ascii_whitespace();
    let magic = it.next();
    if magic != Some("DGS1") {
        return Err(Error::Parse { line: lineno, msg: "expected DGS1 header".into() });
    }
    let n: VertexId = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(Error::Parse { line: lineno, msg: "bad vertex count".into() })?;
    let weighted = match it.next() {
        Some("weighted") => true,
        Some("unweighted") => false,
        _ => {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected 'weighted' or 'unweighted'".into(),
            })
        }
    };
    Ok((n, weighted))
}

fn parse_update(line: &str, lineno: usize, weighted: bool) -> Result<EdgeUpdate> {
    let mut it = line.split_ascii_whitespace();
    let sign = match it.next() {
        Some("+") => 1i8,
        Some("-") => -1i8,
        other => {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected '+' or '-', got {other:?}"),
            })
        }
    };
    let u: VertexId = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(Error::Parse { line: lineno, msg: "bad endpoint".into() })?;
    let v: VertexId = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(Error::Parse { line: lineno, msg: "bad endpoint".into() })?;
    let weight = if weighted {
        let tok = it
            .next()
            .ok_or(Error::Parse { line: lineno, msg: "missing weight".into() })?;
        Some(Dist::parse(tok).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?)
    } else {
        None
    };
    if it.next().is_some() {
        return Err(Error::Parse { line: lineno, msg: "trailing tokens".into() });
    }
    Ok(EdgeUpdate { u, v, sign, weight })
}

fn parse_dgs(path: &Path, mut sink: impl FnMut(EdgeUpdate) -> Result<()>) -> Result<(VertexId, bool)> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut header: Option<(VertexId, bool)> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match header {
            None => header = Some(parse_header(trimmed, lineno)?),
            Some((_, weighted)) => sink(parse_update(trimmed, lineno, weighted)?)?,
        }
    }
    header.ok_or(Error::Parse { line: 0, msg: "missing DGS1 header".into() })
}

fn count_file_updates(path: &Path) -> Result<usize> {
    let mut count = 0usize;
    parse_dgs(path, |_| {
        count += 1;
        Ok(())
    })?;
    Ok(count)
}

pub fn save_stream(stream: &MultipassStream, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "DGS1 {} {}",
        stream.n(),
        if stream.weighted() { "weighted" } else { "unweighted" }
    )?;
    stream.pass(|upd| {
        let sign = if upd.sign > 0 { '+' } else { '-' };
        let _ = match upd.weight {
            Some(wt) => writeln!(w, "{sign} {} {} {wt}", upd.u, upd.v),
            None => writeln!(w, "{sign} {} {}", upd.u, upd.v),
        };
    })?;
    w.flush()?;
    Ok(())
}

/// Load a stream into memory.
pub fn load_stream(path: &Path) -> Result<MultipassStream> {
    let mut updates = Vec::new();
    let (n, weighted) = parse_dgs(path, |upd| {
        updates.push(upd);
        Ok(())
    })?;
    MultipassStream::from_updates(n, weighted, updates)
}

/// File-backed stream: the file is re-parsed on every pass.
pub fn open_stream(path: &Path) -> Result<MultipassStream> {
    let (n, weighted) = parse_dgs(path, |_| Ok(()))?;
    Ok(MultipassStream {
        n,
        weighted,
        cap: default_cap(n),
        passes: Cell::new(0),
        source: Source::FileBacked(path.to_path_buf()),
        scratch: RefCell::new(Vec::new()),
    })
}

// ---------------------------------------------------------------------------
// Space ledger
// ---------------------------------------------------------------------------

/// Per-module byte counters for sketch state held during a pass. Counters
/// only grow within a pass; `begin_pass` records the reset. `peak_bytes` is
/// the maximum per-pass total observed.
#[derive(Debug, Default, Clone)]
pub struct SpaceLedger {
    current: BTreeMap<&'static str, u64>,
    current_total: u64,
    pub peak_bytes: u64,
    pub peak_by_module: BTreeMap<&'static str, u64>,
    pub passes: u64,
}

impl SpaceLedger {
    pub fn new() -> SpaceLedger {
        SpaceLedger::default()
    }

    pub fn begin_pass(&mut self) {
        self.current.clear();
        self.current_total = 0;
        self.passes += 1;
    }

    pub fn add(&mut self, module: &'static str, bytes: u64) {
        *self.current.entry(module).or_insert(0) += bytes;
        self.current_total += bytes;
        if self.current_total > self.peak_bytes {
            self.peak_bytes = self.current_total;
        }
        let cur = self.current.get(module).copied().unwrap_or(0);
        let peak = self.peak_by_module.entry(module).or_insert(0);
        if cur > *peak {
            *peak = cur;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn final_multiplicities(stream: &MultipassStream) -> BTreeMap<(VertexId, VertexId), i64> {
        let mut mult = BTreeMap::new();
        stream
            .pass(|upd| {
                *mult.entry(upd.key()).or_insert(0) += upd.sign as i64;
            })
            .unwrap();
        mult.retain(|_, m| *m != 0);
        mult
    }

    #[test]
    fn generate_no_churn_is_all_inserts() {
        let s = generate_stream(4, 3, 0.0, false, Dist::ONE, 7).unwrap();
        assert_eq!(s.len(), 3);
        let mut count = 0;
        s.pass(|u| {
            assert_eq!(u.sign, 1);
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 3);
        let mult = final_multiplicities(&s);
        assert_eq!(mult.len(), 3);
        assert!(mult.values().all(|&m| m == 1));
    }

    #[test]
    fn generate_zero_target_is_empty_graph() {
        let s = generate_stream(4, 0, 1.0, false, Dist::ONE, 7).unwrap();
        assert!(final_multiplicities(&s).is_empty());
    }

    #[test]
    fn generate_with_churn_validates() {
        let s = generate_stream(100, 300, 2.0, false, Dist::ONE, 1).unwrap();
        let report = validate_strict_turnstile(&s).unwrap();
        assert!(report.ok, "{:?}", report.violations);
        assert_eq!(final_multiplicities(&s).len(), 300);
    }

    #[test]
    fn generate_rejects_too_many_edges() {
        assert!(generate_stream(4, 7, 0.0, false, Dist::ONE, 1).is_err());
    }

    #[test]
    fn plus_minus_plus_is_ok() {
        let ups = vec![
            EdgeUpdate::insert(1, 2),
            EdgeUpdate::delete(1, 2),
            EdgeUpdate::insert(1, 2),
        ];
        let s = MultipassStream::from_updates(4, false, ups).unwrap();
        let r = validate_strict_turnstile(&s).unwrap();
        assert!(r.ok);
        assert_eq!(final_multiplicities(&s)[&(1, 2)], 1);
    }

    #[test]
    fn double_insert_flagged() {
        let ups = vec![EdgeUpdate::insert(1, 2), EdgeUpdate::insert(1, 2)];
        let s = MultipassStream::from_updates(4, false, ups).unwrap();
        let r = validate_strict_turnstile(&s).unwrap();
        assert!(!r.ok);
        assert_eq!(r.violations[0].final_multiplicity, 2);
    }

    #[test]
    fn generated_churny_stream_validates() {
        let s = generate_stream(50, 100, 3.0, false, Dist::ONE, 11).unwrap();
        assert!(validate_strict_turnstile(&s).unwrap().ok);
    }

    #[test]
    fn replay_is_stable_and_permutation_preserves_multiplicities() {
        let s = generate_stream(30, 60, 1.5, true, Dist::from_int(8), 3).unwrap();
        let a = final_multiplicities(&s);
        let b = final_multiplicities(&s);
        assert_eq!(a, b);
        let p = generate_stream(30, 60, 1.5, true, Dist::from_int(8), 3)
            .unwrap()
            .permuted(99);
        // two differently-permuted passes agree on multiplicities
        let c = final_multiplicities(&p);
        let d = final_multiplicities(&p);
        assert_eq!(a, c);
        assert_eq!(c, d);
    }

    #[test]
    fn pass_counter_counts_passes() {
        let s = generate_stream(10, 5, 0.0, false, Dist::ONE, 2).unwrap();
        assert_eq!(s.passes_taken(), 0);
        s.pass(|_| {}).unwrap();
        s.pass(|_| {}).unwrap();
        assert_eq!(s.passes_taken(), 2);
    }

    #[test]
    fn dgs_round_trip() {
        let dir = std::env::temp_dir().join(format!("dgs_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.dgs");
        let s = generate_stream(20, 30, 1.0, true, Dist::from_int(5), 13).unwrap();
        let mut original = Vec::new();
        s.pass(|u| original.push(*u)).unwrap();
        save_stream(&s, &path).unwrap();
        let loaded = load_stream(&path).unwrap();
        let mut reread = Vec::new();
        loaded.pass(|u| reread.push(*u)).unwrap();
        assert_eq!(original, reread);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dgs_parses_header_and_lines() {
        let dir = std::env::temp_dir().join(format!("dgs_test_parse_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.dgs");
        std::fs::write(&path, "# comment\nDGS1 4 unweighted\n+ 1 2\n").unwrap();
        let s = load_stream(&path).unwrap();
        assert_eq!(s.n(), 4);
        assert!(!s.weighted());
        let mut ups = Vec::new();
        s.pass(|u| ups.push(*u)).unwrap();
        assert_eq!(ups, vec![EdgeUpdate::insert(1, 2)]);

        let path2 = dir.join("weighted.dgs");
        std::fs::write(&path2, "DGS1 5 weighted\n+ 3 4 2.5\n").unwrap();
        let s2 = load_stream(&path2).unwrap();
        let mut ups2 = Vec::new();
        s2.pass(|u| ups2.push(*u)).unwrap();
        assert_eq!(
            ups2,
            vec![EdgeUpdate::insert_w(3, 4, Dist::parse("2.5").unwrap())]
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dgs_malformed_line_reports_lineno() {
        let dir = std::env::temp_dir().join(format!("dgs_test_bad_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.dgs");
        std::fs::write(&path, "DGS1 4 unweighted\n+ 1 2\n* 3 4\n").unwrap();
        match load_stream(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            Err(other) => panic!("expected parse error, got {other:?}"),
            Ok(_) => panic!("expected parse error, got a stream"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn stream_cap_and_update_validation() {
        // cap: 10 n^2 updates for n = 2 is 40
        let mut ups = Vec::new();
        for i in 0..41 {
            ups.push(if i % 2 == 0 {
                EdgeUpdate::insert(1, 2)
            } else {
                EdgeUpdate::delete(1, 2)
            });
        }
        assert!(matches!(
            MultipassStream::from_updates(2, false, ups),
            Err(Error::StreamCapExceeded { .. })
        ));
        // self-loops and out-of-range endpoints are rejected
        assert!(MultipassStream::from_updates(4, false, vec![EdgeUpdate::insert(2, 2)]).is_err());
        assert!(MultipassStream::from_updates(4, false, vec![EdgeUpdate::insert(1, 5)]).is_err());
        // weighted stream updates must carry weights >= 1
        assert!(MultipassStream::from_updates(4, true, vec![EdgeUpdate::insert(1, 2)]).is_err());
        assert!(MultipassStream::from_updates(
            4,
            true,
            vec![EdgeUpdate::insert_w(1, 2, Dist::parse("0.5").unwrap())]
        )
        .is_err());
    }

    #[test]
    fn ledger_tracks_peak() {
        let mut l = SpaceLedger::new();
        l.begin_pass();
        l.add("a", 10);
        l.add("b", 5);
        l.begin_pass();
        l.add("a", 7);
        assert_eq!(l.peak_bytes, 15);
        assert_eq!(l.passes, 2);
    }
}

//! `dgs`: generate, transform and validate dynamic graph streams.
//!
//! Every run is reproducible from (stream file, flags, seed). Reports are
//! JSON with a fixed schema; output files are plain text.

mod report;

use clap::{Args, Parser, Subcommand};
use dgs_core::dist::Dist;
use dgs_core::hopset::{
    aspect_ratio_reduce, load_hopset, multi_scale_hopset, save_hopset, HopsetParams,
};
use dgs_core::oracle;
use dgs_core::paths::{multi_source_asp_unweighted, multi_source_asp_weighted};
use dgs_core::spanner::{build_spanner, spanner_schedule};
use dgs_core::stream::{
    generate_stream, load_stream, open_stream, save_stream, validate_strict_turnstile,
    MultipassStream, SpaceLedger,
};
use dgs_core::VertexId;
use report::Report;
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "dgs", version, about = "dynamic graph-stream constructions")]
struct Cli {
    /// Worker threads for offline validation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a strict-turnstile stream file.
    Gen(GenArgs),
    /// Build a near-additive spanner from an unweighted stream.
    Spanner(SpannerArgs),
    /// Build a hopset from a weighted stream.
    Hopset(HopsetArgs),
    /// Multi-source approximate shortest paths.
    Asp(AspArgs),
    /// Validate a spanner or hopset against the exact oracles.
    Validate(ValidateArgs),
    /// Replay statistics for a stream file.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: VertexId,
    /// Final edge count.
    #[arg(long)]
    m: usize,
    /// Transient insert/delete pairs as a multiple of m.
    #[arg(long, default_value_t = 0.0)]
    churn: f64,
    #[arg(long, default_value_t = false)]
    weighted: bool,
    #[arg(long, default_value = "1")]
    max_weight: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct StreamArg {
    /// DGS1 stream file.
    #[arg(long)]
    stream: PathBuf,
    /// Replay the file into memory instead of re-reading it per pass.
    #[arg(long, default_value_t = false)]
    in_memory: bool,
    /// Re-shuffle update order per pass with this seed.
    #[arg(long)]
    permute: Option<u64>,
}

impl StreamArg {
    fn open(&self) -> dgs_core::Result<MultipassStream> {
        let s = if self.in_memory || self.permute.is_some() {
            load_stream(&self.stream)?
        } else {
            open_stream(&self.stream)?
        };
        Ok(match self.permute {
            Some(seed) => s.permuted(seed),
            None => s,
        })
    }
}

#[derive(Args)]
struct SpannerArgs {
    #[command(flatten)]
    stream: StreamArg,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// FindParent repetition constant.
    #[arg(long, default_value_t = 3.0)]
    c1: f64,
    /// Visitor bound constant.
    #[arg(long, default_value_t = 3.0)]
    cp1: f64,
    /// Attempt constant.
    #[arg(long, default_value_t = 2.0)]
    c4: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Sample this many pairs for the stretch histogram in the report.
    #[arg(long, default_value_t = 500)]
    stretch_pairs: usize,
}

#[derive(Args)]
struct HopsetArgs {
    #[command(flatten)]
    stream: StreamArg,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    rho: f64,
    /// Aspect bound (required unless --auto-lambda).
    #[arg(long)]
    lambda: Option<String>,
    /// Measure the aspect bound with a preliminary pass: (n-1) * maxW.
    #[arg(long, default_value_t = false)]
    auto_lambda: bool,
    /// Use the verbatim rescaling chain (degenerates to an empty hopset
    /// whenever beta exceeds Lambda, which it does at any practical size).
    #[arg(long, default_value_t = false)]
    asymptotic_params: bool,
    /// Phase scale eps for the practical parameterization.
    #[arg(long, default_value_t = 0.5)]
    phase_eps: f64,
    /// Per-exploration error for the practical parameterization.
    #[arg(long, default_value_t = 0.1)]
    chi: f64,
    #[arg(long, default_value_t = false)]
    reduce_aspect: bool,
    #[arg(long, default_value_t = false)]
    path_reporting: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    c1: f64,
    #[arg(long, default_value_t = 3.0)]
    cp1: f64,
    #[arg(long, default_value_t = 2.0)]
    c4: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AspArgs {
    #[command(flatten)]
    stream: StreamArg,
    /// Comma-separated source vertices.
    #[arg(long, value_delimiter = ',')]
    sources: Vec<VertexId>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = false)]
    weighted: bool,
    /// Aspect bound (weighted mode; required unless --auto-lambda).
    #[arg(long)]
    lambda: Option<String>,
    /// Measure the aspect bound with a preliminary pass: (n-1) * maxW.
    #[arg(long, default_value_t = false)]
    auto_lambda: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    c1: f64,
    #[arg(long, default_value_t = 3.0)]
    cp1: f64,
    #[arg(long, default_value_t = 2.0)]
    c4: f64,
    /// Practical hopset knobs (weighted mode).
    #[arg(long, default_value_t = 0.5)]
    phase_eps: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Stream file holding the graph.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    spanner: Option<PathBuf>,
    #[arg(long)]
    hopset: Option<PathBuf>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print the report as JSON to stdout.
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    stream: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    let code = match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                dgs_core::Error::InvalidParam(_) | dgs_core::Error::Parse { .. } => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn auto_lambda(stream: &MultipassStream) -> dgs_core::Result<Dist> {
    // one preliminary pass: Lambda <= (n - 1) * maxW
    let mut max_w = Dist::ONE;
    stream.pass(|upd| {
        if let Some(w) = upd.weight {
            if w > max_w {
                max_w = w;
            }
        }
    })?;
    Ok(max_w.saturating_mul_int(stream.n() as i64 - 1))
}

fn parse_lambda(
    stream: &MultipassStream,
    flag: &Option<String>,
    auto: bool,
) -> dgs_core::Result<Dist> {
    match (flag, auto) {
        (Some(s), false) => Dist::parse(s),
        (None, true) => auto_lambda(stream),
        (Some(_), true) => Err(dgs_core::Error::InvalidParam(
            "--lambda and --auto-lambda are mutually exclusive".into(),
        )),
        (None, false) => Err(dgs_core::Error::InvalidParam(
            "the aspect bound is required: pass --lambda <value> or --auto-lambda".into(),
        )),
    }
}

fn run(cmd: Command) -> dgs_core::Result<()> {
    match cmd {
        Command::Gen(a) => {
            let start = Instant::now();
            let max_w = Dist::parse(&a.max_weight)?;
            let stream = generate_stream(a.n, a.m, a.churn, a.weighted, max_w, a.seed)?;
            save_stream(&stream, &a.out)?;
            let mut report = Report::new("gen");
            report.passes = stream.passes_taken();
            report.output_size = stream.len() as u64;
            report.param("n", a.n);
            report.param("m", a.m);
            report.param("churn", a.churn);
            report.param("weighted", a.weighted);
            report.param("seed", a.seed);
            report.finish(start, a.report.as_deref())?;
            Ok(())
        }
        Command::Spanner(a) => {
            let start = Instant::now();
            let stream = a.stream.open()?;
            let mut params = spanner_schedule(stream.n(), a.eps, a.kappa, a.rho)?;
            params.c1 = a.c1;
            params.cp1 = a.cp1;
            params.c4 = a.c4;
            let mut ledger = SpaceLedger::new();
            let out = build_spanner(&stream, &params, &mut ledger, a.seed)?;
            {
                use std::io::Write;
                let mut f = std::io::BufWriter::new(std::fs::File::create(&a.out)?);
                for &(u, v) in &out.edges {
                    writeln!(f, "{u} {v}")?;
                }
            }
            let g = stream.materialize()?;
            let val = oracle::validate_spanner(
                &g,
                &out.edges,
                params.eps,
                params.beta,
                a.stretch_pairs,
                a.seed,
            );
            let mut report = Report::new("spanner");
            report.passes = out.passes;
            report.peak_sketch_bytes = ledger.peak_bytes;
            report.output_size = out.edges.len() as u64;
            report.param("eps", a.eps);
            report.param("kappa", a.kappa);
            report.param("rho", a.rho);
            report.param("beta", params.beta);
            report.param("ell", params.ell);
            report.param("seed", a.seed);
            report.param("clusters_per_phase", out.clusters_per_phase.clone());
            report.validation(serde_json::json!({
                "ok": val.ok,
                "subgraph_ok": val.subgraph_ok,
                "pairs_checked": val.pairs_checked,
                "violations": val.violations,
                "worst_multiplicative": val.worst_multiplicative,
                "worst_additive": val.worst_additive,
                "additive_stretch_histogram": val.additive_histogram,
            }));
            report.finish(start, a.report.as_deref())?;
            Ok(())
        }
        Command::Hopset(a) => {
            let start = Instant::now();
            let stream = a.stream.open()?;
            let lambda = parse_lambda(&stream, &a.lambda, a.auto_lambda)?;
            let mut params = if a.asymptotic_params {
                HopsetParams::asymptotic(stream.n(), a.eps, a.kappa, a.rho, lambda)?
            } else {
                HopsetParams::practical(
                    stream.n(),
                    a.eps,
                    a.kappa,
                    a.rho,
                    lambda,
                    a.phase_eps,
                    a.chi,
                )?
            };
            params.c1 = a.c1;
            params.cp1 = a.cp1;
            params.c4 = a.c4;
            let mut ledger = SpaceLedger::new();
            let (edges, passes, scales) = if a.reduce_aspect {
                let out = aspect_ratio_reduce(&stream, &params, &mut ledger, a.seed)?;
                (out.edges, out.passes, out.relevant_scales)
            } else {
                let out =
                    multi_scale_hopset(&stream, &params, &mut ledger, a.seed, a.path_reporting)?;
                (out.edges, out.passes, out.scales)
            };
            save_hopset(&edges, &a.out)?;
            let mut report = Report::new("hopset");
            report.passes = passes;
            report.peak_sketch_bytes = ledger.peak_bytes;
            report.output_size = edges.len() as u64;
            report.param("eps", a.eps);
            report.param("kappa", a.kappa);
            report.param("rho", a.rho);
            report.param("lambda", lambda.to_f64());
            report.param("beta", params.beta);
            report.param("hopbound", params.hopbound());
            report.param("k0", params.k0);
            report.param("k_lambda", params.k_lambda);
            report.param("scales", scales);
            report.param("asymptotic_params", a.asymptotic_params);
            report.param("reduce_aspect", a.reduce_aspect);
            report.param("path_reporting", a.path_reporting);
            report.param("seed", a.seed);
            report.finish(start, a.report.as_deref())?;
            Ok(())
        }
        Command::Asp(a) => {
            let start = Instant::now();
            let stream = a.stream.open()?;
            if a.sources.is_empty() {
                return Err(dgs_core::Error::InvalidParam("need at least one source".into()));
            }
            let mut out_file = std::io::BufWriter::new(std::fs::File::create(&a.out)?);
            use std::io::Write;
            let mut ledger = SpaceLedger::new();
            let mut report = Report::new("asp");
            if a.weighted {
                let lambda = parse_lambda(&stream, &a.lambda, a.auto_lambda)?;
                let mut params = HopsetParams::practical(
                    stream.n(),
                    a.eps,
                    1.0 / a.rho,
                    a.rho,
                    lambda,
                    a.phase_eps,
                    a.eps / 3.0,
                )?;
                params.c1 = a.c1;
                params.cp1 = a.cp1;
                params.c4 = a.c4;
                let asp = multi_source_asp_weighted(
                    &stream, &a.sources, a.eps, &params, &mut ledger, a.seed,
                )?;
                let mut rows = 0u64;
                for (i, &s) in a.sources.iter().enumerate() {
                    for v in 1..=stream.n() {
                        match asp.query(i, v) {
                            Some(d) => {
                                write!(out_file, "{s}\t{v}\t{d}")?;
                                if let Some(p) = asp.path(i, v) {
                                    let tokens: Vec<String> =
                                        p.iter().map(|x| x.to_string()).collect();
                                    write!(out_file, "\t{}", tokens.join(" "))?;
                                }
                                writeln!(out_file)?;
                            }
                            None => writeln!(out_file, "{s}\t{v}\tinf")?,
                        }
                        rows += 1;
                    }
                }
                report.output_size = rows;
                report.param("hopset_edges", asp.hopset.len());
                report.passes = asp.passes;
            } else {
                let mut params = spanner_schedule(stream.n(), a.eps, 1.0 / a.rho, a.rho)?;
                params.c1 = a.c1;
                params.cp1 = a.cp1;
                params.c4 = a.c4;
                let asp = multi_source_asp_unweighted(
                    &stream, &a.sources, &params, &mut ledger, a.seed,
                )?;
                let mut rows = 0u64;
                for (i, &s) in a.sources.iter().enumerate() {
                    for v in 1..=stream.n() {
                        match asp.query(i, v) {
                            Some(d) => writeln!(out_file, "{s}\t{v}\t{d}")?,
                            None => writeln!(out_file, "{s}\t{v}\tinf")?,
                        }
                        rows += 1;
                    }
                }
                report.output_size = rows;
                report.passes = asp.passes;
            }
            out_file.flush()?;
            report.peak_sketch_bytes = ledger.peak_bytes;
            report.param("eps", a.eps);
            report.param("rho", a.rho);
            report.param("weighted", a.weighted);
            report.param("sources", a.sources.clone());
            report.param("seed", a.seed);
            report.finish(start, a.report.as_deref())?;
            Ok(())
        }
        Command::Validate(a) => {
            let start = Instant::now();
            let stream = open_stream(&a.graph)?;
            let g = stream.materialize()?;
            let validation = match (&a.spanner, &a.hopset) {
                (Some(sp), None) => {
                    let edges = load_edge_list(sp)?;
                    let r = oracle::validate_spanner(&g, &edges, a.eps, a.beta, a.pairs, a.seed);
                    serde_json::json!({
                        "kind": "spanner",
                        "ok": r.ok,
                        "subgraph_ok": r.subgraph_ok,
                        "pairs_checked": r.pairs_checked,
                        "violations": r.violations,
                        "worst_multiplicative": r.worst_multiplicative,
                        "worst_additive": r.worst_additive,
                    })
                }
                (None, Some(hp)) => {
                    let edges = load_hopset(hp)?;
                    let r = oracle::validate_hopset(
                        &g,
                        &edges,
                        a.eps,
                        a.beta.max(0.0) as u32,
                        a.pairs,
                        a.seed,
                    );
                    serde_json::json!({
                        "kind": "hopset",
                        "ok": r.ok,
                        "never_shortens": r.never_shortens,
                        "sandwich_ok": r.sandwich_ok,
                        "paths_ok": r.paths_ok,
                        "pairs_checked": r.pairs_checked,
                        "violations": r.violations,
                        "worst_stretch": r.worst_stretch,
                    })
                }
                _ => {
                    return Err(dgs_core::Error::InvalidParam(
                        "pass exactly one of --spanner / --hopset".into(),
                    ))
                }
            };
            let ok = validation["ok"].as_bool().unwrap_or(false);
            let mut report = Report::new("validate");
            report.param("eps", a.eps);
            report.param("beta", a.beta);
            report.param("pairs", a.pairs);
            report.validation(validation);
            if a.json {
                report.print(start)?;
            } else {
                println!("validation {}", if ok { "ok" } else { "FAILED" });
            }
            if !ok {
                return Err(dgs_core::Error::SamplerAbort("validation failed".into()));
            }
            Ok(())
        }
        Command::Stats(a) => {
            let stream = open_stream(&a.stream)?;
            let turnstile = validate_strict_turnstile(&stream)?;
            let g = stream.materialize()?;
            let max_w = g.max_weight();
            let lambda = max_w.saturating_mul_int(stream.n() as i64 - 1);
            let stats = serde_json::json!({
                "schema": "1",
                "n": stream.n(),
                "weighted": stream.weighted(),
                "updates": stream.len(),
                "final_edges": g.edge_count(),
                "max_weight": max_w.to_f64(),
                "lambda_bound": lambda.to_f64(),
                "strict_turnstile_ok": turnstile.ok,
                "violations": turnstile.violations.len(),
            });
            println!("{}", serde_json::to_string_pretty(&stats).unwrap());
            Ok(())
        }
    }
}

fn load_edge_list(path: &PathBuf) -> dgs_core::Result<Vec<(VertexId, VertexId)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_ascii_whitespace();
        let err = |msg: &str| dgs_core::Error::Parse { line: idx + 1, msg: msg.into() };
        let u: VertexId = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| err("bad u"))?;
        let v: VertexId = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| err("bad v"))?;
        if seen.insert((u.min(v), u.max(v))) {
            out.push((u, v));
        }
    }
    Ok(out)
}

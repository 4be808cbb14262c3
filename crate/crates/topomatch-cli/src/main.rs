//! Command-line front end: generation, sampling, matching, benches,
//! the exhaustive oracle, triangulation, and guarantee reports.
//!
//! Every subcommand is deterministic given `--seed`; without the flag
//! a seed is drawn from the environment and printed, so any run can be
//! replayed. Summaries go to standard output as `key=value` lines;
//! errors go to standard error as one-line JSON records. Exit codes: 0
//! success, 1 runtime failure, 2 usage.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topomatch::geo::{transform_points, triangulate, Rect};
use topomatch::io::{
    match_document, mc_csv_string, parse_graph_file, parse_points_file, record_string,
    validate_document, write_graph_file, GraphFormat, MatchParameters,
};
use topomatch::matching::{CountMode, MatchOptions, ThresholdConfig};
use topomatch::oracle::{qap_best, DEFAULT_NODE_BUDGET};
use topomatch::pipeline::{match_estimating_sigma, match_with_sigma, MatchOutcome};
use topomatch::plot::emit_boxplot;
use topomatch::sim::{
    gen_er, inject_noise, run_monte_carlo, run_scaling_bench, sample_subgraph,
    satisfies_unit_assumptions, SimConfig, MAX_SAMPLE_RETRIES,
};
use topomatch::stats::GuaranteeReport;

#[derive(Parser)]
#[command(name = "topomatch", version, about = "Inexact subgraph matching on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Edgelist,
    Record,
}

impl From<FormatArg> for GraphFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Edgelist => GraphFormat::Edgelist,
            FormatArg::Record => GraphFormat::Record,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CountModeArg {
    Nodes,
    Edges,
}

impl From<CountModeArg> for CountMode {
    fn from(m: CountModeArg) -> Self {
        match m {
            CountModeArg::Nodes => CountMode::Nodes,
            CountModeArg::Edges => CountMode::Edges,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an Erdős–Rényi graph with uniform edge weights.
    Gen {
        #[arg(long, default_value_t = 100)]
        nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        edge_prob: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
    },
    /// Sample a connected induced subgraph with ground truth and
    /// optional weight noise.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        /// Only edges at most this heavy are walked while growing.
        #[arg(long, default_value_t = 0.5)]
        cutoff: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the node correspondence as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Locate a pattern graph inside a field graph.
    Match(MatchArgs),
    /// Accuracy sweep over a noise grid; CSV plus optional box plot.
    Bench {
        #[arg(long, default_value_t = 100)]
        field_nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        edge_prob: f64,
        #[arg(long, default_value_t = 20)]
        sub_nodes: usize,
        #[arg(long, default_value_t = 0.5)]
        cutoff: f64,
        /// Noise grid; defaults to 0.001..=0.010 in steps of 0.001.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, default_value_t = 0.025)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = CountModeArg::Edges)]
        count_mode: CountModeArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        boxplot: Option<PathBuf>,
        /// Full report (rows, policies, truth) as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Median runtime across field sizes at constant expected degree.
    Scale {
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 200, 400, 800])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10.0)]
        degree: f64,
        #[arg(long, default_value_t = 20)]
        sub_nodes: usize,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 0.001)]
        sigma: f64,
        #[arg(long, default_value_t = 0.025)]
        alpha: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively enumerate consistent injections of a small pair.
    Oracle {
        #[arg(long)]
        sub: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Delaunay graph from a point file, with optional crop and
    /// rotation applied first.
    Tri {
        #[arg(long)]
        points: PathBuf,
        /// Counter-clockwise rotation in degrees about the crop center.
        #[arg(long, default_value_t = 0.0)]
        rotate: f64,
        /// Keep only points inside "x0,y0,x1,y1" (inclusive).
        #[arg(long, value_parser = parse_rect)]
        crop: Option<Rect>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        /// Where to write the new-index → input-index map as JSON.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Coverage and exclusion guarantees for given mismatch sizes.
    Guarantees {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 9, 16])]
        c: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Also print the matching threshold per count at this noise
        /// level.
        #[arg(long)]
        sigma: Option<f64>,
    },
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    sub: PathBuf,
    #[arg(long)]
    field: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
    format: FormatArg,
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    /// Known noise level; mutually exclusive with --estimate-sigma.
    #[arg(long, conflicts_with = "estimate_sigma", required_unless_present = "estimate_sigma")]
    sigma: Option<f64>,
    /// Estimate the noise level from the data instead.
    #[arg(long)]
    estimate_sigma: bool,
    /// Simplex order for the initial unit (2 = triangles).
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = MatchOptions::default().tries)]
    tries: usize,
    #[arg(long, value_enum, default_value_t = CountModeArg::Edges)]
    count_mode: CountModeArg,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the full match document as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|e| format!("bad coordinate: {e}")))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err(format!("expected x0,y0,x1,y1; found {} values", parts.len()));
    }
    Rect::new(parts[0], parts[1], parts[2], parts[3]).map_err(|e| e.to_string())
}

/// Seed of last resort: wall clock mixed with the process id.
fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.unwrap_or_else(|| {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        nanos ^ (u64::from(std::process::id())).rotate_left(32)
    })
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        bail!("{name} must lie in [0, 1], got {v}");
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("alpha must lie strictly between 0 and 1, got {alpha}");
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        bail!("sigma must be finite and non-negative, got {sigma}");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Ok(raw) = std::env::var("TOPOMATCH_WORKERS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignored if a pool already exists (tests set one up).
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "error": format!("TOPOMATCH_WORKERS must be a positive integer, got {raw:?}")
                    })
                );
                std::process::exit(1);
            }
        }
    }
    if let Err(e) = run(cli.cmd) {
        eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
        std::process::exit(1);
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen {
            nodes,
            edge_prob,
            seed,
            out,
            format,
        } => {
            if nodes == 0 {
                bail!("need at least one node");
            }
            check_prob("edge-prob", edge_prob)?;
            let seed = resolve_seed(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = gen_er(nodes, edge_prob, &mut rng);
            write_graph_file(&out, &g, format.into())?;
            println!("seed={seed}");
            println!("nodes={}", g.node_count());
            println!("edges={}", g.edge_count());
            println!("out={}", out.display());
        }
        Cmd::Sample {
            graph,
            format,
            nodes,
            cutoff,
            sigma,
            seed,
            out,
            truth,
        } => {
            check_sigma(sigma)?;
            let g_f = parse_graph_file(&graph, format.into())
                .with_context(|| format!("reading {}", graph.display()))?;
            let seed = resolve_seed(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = SimConfig {
                n_s: nodes,
                weight_cutoff: cutoff,
                ..SimConfig::default()
            };
            let mut picked = None;
            let mut retries = 0usize;
            while retries < MAX_SAMPLE_RETRIES {
                let (sub, map, r) = sample_subgraph(&g_f, &cfg, &mut rng)?;
                retries += r;
                if satisfies_unit_assumptions(&sub, 2) {
                    picked = Some((sub, map));
                    break;
                }
                retries += 1;
            }
            let Some((sub, map)) = picked else {
                bail!("no sampled subgraph met the unit assumptions after {retries} attempts");
            };
            let noisy = inject_noise(&sub, sigma, &mut rng);
            write_graph_file(&out, &noisy, format.into())?;
            println!("seed={seed}");
            println!("nodes={}", noisy.node_count());
            println!("edges={}", noisy.edge_count());
            println!("retries={retries}");
            println!("sigma={sigma}");
            println!("out={}", out.display());
            if let Some(path) = truth {
                std::fs::write(&path, record_string("topomatch-truth", &map.pairs())?)?;
                println!("truth={}", path.display());
            }
        }
        Cmd::Match(args) => run_match(args)?,
        Cmd::Bench {
            field_nodes,
            edge_prob,
            sub_nodes,
            cutoff,
            sigmas,
            iterations,
            alpha,
            count_mode,
            seed,
            csv,
            boxplot,
            json,
        } => {
            check_prob("edge-prob", edge_prob)?;
            check_alpha(alpha)?;
            if iterations == 0 {
                bail!("need at least one iteration");
            }
            let sigma_grid = sigmas.unwrap_or_else(|| SimConfig::default().sigma_grid);
            if sigma_grid.is_empty() {
                bail!("need at least one noise level");
            }
            for &s in &sigma_grid {
                check_sigma(s)?;
            }
            let seed = resolve_seed(seed);
            let cfg = SimConfig {
                n_f: field_nodes,
                edge_prob,
                n_s: sub_nodes,
                weight_cutoff: cutoff,
                sigma_grid,
                iterations,
                alpha,
                count_mode: count_mode.into(),
                master_seed: seed,
            };
            let report = run_monte_carlo(&cfg)?;
            std::fs::write(&csv, mc_csv_string(&report))?;
            println!("seed={seed}");
            println!("rows={}", report.rows.len());
            println!("workers={}", report.workers);
            for &s in &report.config.sigma_grid {
                let accs: Vec<f64> = report
                    .rows
                    .iter()
                    .filter(|r| r.sigma.to_bits() == s.to_bits())
                    .map(|r| r.accuracy)
                    .collect();
                let mean = accs.iter().sum::<f64>() / accs.len().max(1) as f64;
                println!("sigma={s} mean_accuracy={mean}");
            }
            println!("csv={}", csv.display());
            if let Some(path) = boxplot {
                std::fs::write(&path, emit_boxplot(&report)?)?;
                println!("boxplot={}", path.display());
            }
            if let Some(path) = json {
                std::fs::write(&path, record_string("topomatch-bench", &report)?)?;
                println!("json={}", path.display());
            }
        }
        Cmd::Scale {
            sizes,
            degree,
            sub_nodes,
            iterations,
            sigma,
            alpha,
            seed,
            out,
        } => {
            if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
                bail!("sizes must be a strictly increasing, non-empty list");
            }
            if degree <= 0.0 || !degree.is_finite() {
                bail!("degree must be positive, got {degree}");
            }
            check_sigma(sigma)?;
            check_alpha(alpha)?;
            if iterations == 0 {
                bail!("need at least one iteration");
            }
            let seed = resolve_seed(seed);
            let base = SimConfig {
                n_s: sub_nodes,
                sigma_grid: vec![sigma],
                iterations,
                alpha,
                master_seed: seed,
                ..SimConfig::default()
            };
            let report = run_scaling_bench(&sizes, degree, &base)?;
            println!("seed={seed}");
            println!("workers={}", report.workers);
            for row in &report.rows {
                println!(
                    "n_f={} edge_prob={} median_runtime_ms={}",
                    row.n_f, row.edge_prob, row.median_runtime_ms
                );
            }
            match report.log_log_slope {
                Some(slope) => println!("slope={slope}"),
                None => println!("slope=nan"),
            }
            if let Some(path) = out {
                std::fs::write(&path, record_string("topomatch-scale", &report)?)?;
                println!("out={}", path.display());
            }
        }
        Cmd::Oracle {
            sub,
            field,
            format,
            budget,
            out,
        } => {
            let g_s = parse_graph_file(&sub, format.into())
                .with_context(|| format!("reading {}", sub.display()))?;
            let g_f = parse_graph_file(&field, format.into())
                .with_context(|| format!("reading {}", field.display()))?;
            let result = qap_best(&g_s, &g_f, budget)?;
            println!("budget={budget}");
            println!("consistent={}", result.policies.len());
            if let Some((best, objective)) = result.best() {
                println!("best_objective={objective}");
                let pairs: Vec<String> = best
                    .pairs()
                    .iter()
                    .map(|(s, f)| format!("{s}:{f}"))
                    .collect();
                println!("best={}", pairs.join(","));
            }
            if let Some(path) = out {
                std::fs::write(&path, record_string("topomatch-oracle", &result)?)?;
                println!("out={}", path.display());
            }
        }
        Cmd::Tri {
            points,
            rotate,
            crop,
            out,
            format,
            map,
        } => {
            if !rotate.is_finite() {
                bail!("rotation must be finite, got {rotate}");
            }
            let ps = parse_points_file(&points)
                .with_context(|| format!("reading {}", points.display()))?;
            let (transformed, provenance) = transform_points(&ps, rotate, crop)?;
            let tri = triangulate(&transformed)?;
            write_graph_file(&out, &tri.graph, format.into())?;
            println!("points={}", ps.len());
            println!("kept={}", transformed.len());
            println!("nodes={}", tri.graph.node_count());
            println!("edges={}", tri.graph.edge_count());
            println!("triangles={}", tri.triangles.len());
            println!("jittered={}", tri.jittered);
            println!("out={}", out.display());
            if let Some(path) = map {
                std::fs::write(&path, record_string("topomatch-points-map", &provenance)?)?;
                println!("map={}", path.display());
            }
        }
        Cmd::Guarantees {
            mu,
            c,
            alpha,
            sigma,
        } => {
            check_alpha(alpha)?;
            if mu.is_empty() || c.is_empty() {
                bail!("need at least one mu and one c value");
            }
            for &m in &mu {
                if !(m.is_finite() && m >= 0.0) {
                    bail!("mu must be finite and non-negative, got {m}");
                }
            }
            if c.contains(&0) {
                bail!("c must be at least 1");
            }
            let report = GuaranteeReport::evaluate(mu[0], c[0], alpha);
            println!("alpha={alpha}");
            println!("coverage={}", report.coverage);
            if let Some(s) = sigma {
                check_sigma(s)?;
                let cfg = ThresholdConfig::new(alpha, s);
                for &count in &c {
                    println!("c={count} threshold={}", cfg.threshold(count));
                }
            }
            for &m in &mu {
                for &count in &c {
                    let cell = GuaranteeReport::evaluate(m, count, alpha);
                    println!(
                        "mu={m} c={count} exclusion_lower_bound={}",
                        cell.exclusion_lower_bound
                    );
                }
            }
        }
    }
    Ok(())
}

fn run_match(args: MatchArgs) -> Result<()> {
    check_alpha(args.alpha)?;
    if args.p < 1 {
        bail!("p must be at least 1");
    }
    if args.tries == 0 {
        bail!("need at least one placement try");
    }
    let sub = parse_graph_file(&args.sub, args.format.into())
        .with_context(|| format!("reading {}", args.sub.display()))?;
    let field = parse_graph_file(&args.field, args.format.into())
        .with_context(|| format!("reading {}", args.field.display()))?;
    let seed = resolve_seed(args.seed);
    let opts = MatchOptions {
        p: args.p,
        tries: args.tries,
        ..MatchOptions::default()
    };
    let mode: CountMode = args.count_mode.into();
    let outcome: MatchOutcome = if let Some(sigma) = args.sigma {
        check_sigma(sigma)?;
        let cfg = ThresholdConfig::new(args.alpha, sigma).with_count_mode(mode);
        match_with_sigma(&sub, &field, &cfg, &opts, seed)?
    } else {
        match_estimating_sigma(&sub, &field, args.alpha, mode, &opts, seed)?
    };
    let params = MatchParameters {
        alpha: args.alpha,
        sigma: args.sigma,
        sigma_used: outcome.sigma_used,
        sigma_estimate: outcome.sigma_estimate,
        p: args.p,
        count_mode: mode,
        seed,
        tries: args.tries,
    };
    let doc = match_document(&sub, &outcome, params);
    validate_document(&doc, &sub, &field)
        .map_err(|e| anyhow::anyhow!("emitted document failed self-validation: {e}"))?;
    println!("seed={seed}");
    println!("sigma_used={}", outcome.sigma_used);
    if let Some(est) = outcome.sigma_estimate {
        println!("sigma_estimate={est}");
    }
    println!("candidates={}", outcome.candidates);
    println!("steps={}", doc.diagnostics.expansion.steps.len());
    println!("matched={}", doc.matches.len());
    println!("unmatched={}", doc.unmatched.len());
    println!("validated=ok");
    if let Some(path) = &args.out {
        std::fs::write(path, record_string("topomatch-match", &doc)?)?;
        println!("out={}", path.display());
    }
    Ok(())
}

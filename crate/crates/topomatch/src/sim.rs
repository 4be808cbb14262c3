//! Simulation study: random instance generation, noise injection, and
//! Monte Carlo accuracy/runtime sweeps over a noise grid.
//!
//! Instances are Erdős–Rényi graphs with uniform edge weights; the
//! pattern is a connected induced subgraph grown through light edges,
//! perturbed by Gaussian noise, and handed back to the matcher. Every
//! iteration draws from its own seed substream, so reports reproduce
//! bit-for-bit regardless of worker count.

use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::graph::{enumerate_simplexes, Graph, NodeId};
use crate::matching::{CountMode, MatchOptions, MatchingPolicy, ThresholdConfig};
use crate::pipeline::match_with_sigma;
use crate::stats::normal_quantile;
use crate::util::{mix, rand_index, uniform_open01};

/// Instance-generation and sweep parameters. The defaults reproduce
/// the reference operating point: ER(100, 0.1), 20-node patterns grown
/// through edges lighter than 0.5, noise grid 0.001..=0.010.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_f: usize,
    pub edge_prob: f64,
    pub n_s: usize,
    pub weight_cutoff: f64,
    pub sigma_grid: Vec<f64>,
    pub iterations: usize,
    pub alpha: f64,
    #[serde(default)]
    pub count_mode: CountMode,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_f: 100,
            edge_prob: 0.1,
            n_s: 20,
            weight_cutoff: 0.5,
            sigma_grid: (1..=10).map(|i| i as f64 / 1000.0).collect(),
            iterations: 100,
            alpha: 0.025,
            count_mode: CountMode::default(),
            master_seed: 0,
        }
    }
}

/// Bound on fresh sampling attempts per iteration; a row carrying this
/// value in `retries` with zero matches records a growth failure.
pub const MAX_SAMPLE_RETRIES: usize = 100;

/// One Monte Carlo iteration's record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub sigma: f64,
    pub iter: usize,
    /// Fraction of pattern nodes mapped to their true images.
    pub accuracy: f64,
    /// Wall-clock of the matching stages only; generation excluded.
    pub runtime_ms: f64,
    /// Substream seed reproducing this iteration end to end.
    pub seed: u64,
    /// Pattern nodes the returned policy covers.
    pub matched: usize,
    /// Failed sampling attempts (stalled growth or violated unit-stage
    /// assumptions) before a valid instance. A row whose `truth` is
    /// empty never got one and scores zero.
    pub retries: usize,
    /// Feasible-set sizes the run saw: initial unit candidates first,
    /// then each accepted step's per-length trajectory.
    pub feasible_sizes: Vec<usize>,
    pub policy: MatchingPolicy,
    pub truth: MatchingPolicy,
}

/// Full sweep output, one row per (noise level, iteration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: SimConfig,
    /// Worker threads the sweep ran on; timings may differ across
    /// worker counts, accuracies may not.
    pub workers: usize,
    pub rows: Vec<McRow>,
}

/// Standard normal draw via the quantile transform.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    normal_quantile(uniform_open01(rng)).expect("open-interval draw")
}

/// Erdős–Rényi graph: each unordered pair is an edge with probability
/// `p`, each edge weight an independent U(0,1) draw.
pub fn gen_er(n: usize, p: f64, rng: &mut impl RngCore) -> Graph {
    assert!(n >= 1, "need at least one node");
    assert!((0.0..=1.0).contains(&p), "probability out of range");
    let mut edges = Vec::new();
    for u in 0..n as NodeId {
        for v in u + 1..n as NodeId {
            if uniform_open01(rng) < p {
                edges.push((u, v, uniform_open01(rng)));
            }
        }
    }
    Graph::from_edges_with_nodes(n, edges).expect("generated edges are canonical")
}

/// Grows a connected induced pattern of `cfg.n_s` nodes from a random
/// seed node, traversing only edges lighter than `cfg.weight_cutoff`;
/// the induced subgraph keeps every edge between chosen nodes (heavy
/// ones included). Retries from fresh seed nodes when growth stalls,
/// reporting how many attempts failed first.
pub fn sample_subgraph(
    g_f: &Graph,
    cfg: &SimConfig,
    rng: &mut impl RngCore,
) -> Result<(Graph, MatchingPolicy, usize), SimError> {
    if g_f.node_count() == 0 {
        return Err(SimError::GrowthFailure {
            target: cfg.n_s,
            retries: 0,
        });
    }
    for attempt in 0..MAX_SAMPLE_RETRIES {
        let start = rand_index(rng, g_f.node_count()) as NodeId;
        if let Some(nodes) = grow_component(g_f, start, cfg.n_s, cfg.weight_cutoff) {
            let (g_s, truth) = induce(g_f, &nodes);
            return Ok((g_s, truth, attempt));
        }
    }
    Err(SimError::GrowthFailure {
        target: cfg.n_s,
        retries: MAX_SAMPLE_RETRIES,
    })
}

fn grow_component(g: &Graph, start: NodeId, target: usize, cutoff: f64) -> Option<Vec<NodeId>> {
    let mut seen = vec![false; g.node_count()];
    let mut queue = std::collections::VecDeque::from([start]);
    let mut chosen = vec![start];
    seen[start as usize] = true;
    while chosen.len() < target {
        let v = queue.pop_front()?;
        for &(nb, w) in g.neighbors(v) {
            if w < cutoff && !seen[nb as usize] {
                seen[nb as usize] = true;
                chosen.push(nb);
                queue.push_back(nb);
                if chosen.len() == target {
                    break;
                }
            }
        }
    }
    Some(chosen)
}

/// Induced subgraph on `nodes`, relabeled 0.. in ascending full-graph
/// id order, plus the truth map back.
fn induce(g: &Graph, nodes: &[NodeId]) -> (Graph, MatchingPolicy) {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let mut edges = Vec::new();
    for (i, &u) in sorted.iter().enumerate() {
        for (j, &v) in sorted.iter().enumerate().skip(i + 1) {
            if let Some(w) = g.weight(u, v) {
                edges.push((i as NodeId, j as NodeId, w));
            }
        }
    }
    let g_s = Graph::from_edges_with_nodes(sorted.len(), edges).expect("induced edges");
    let truth = MatchingPolicy::from_pairs(
        sorted
            .iter()
            .enumerate()
            .map(|(i, &u)| (i as NodeId, u))
            .collect(),
    )
    .expect("relabeling is injective");
    (g_s, truth)
}

/// The unit stage's standing assumptions, checked up front so sampled
/// instances do not abort the sweep.
pub fn satisfies_unit_assumptions(g: &Graph, p: usize) -> bool {
    if !is_connected(g) {
        return false;
    }
    let simplexes = enumerate_simplexes(g, p);
    for (i, a) in simplexes.iter().enumerate() {
        for b in &simplexes[i + 1..] {
            if a.nodes().iter().all(|v| !b.nodes().contains(v)) {
                return true;
            }
        }
    }
    false
}

fn is_connected(g: &Graph) -> bool {
    let n = g.node_count();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0 as NodeId];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &(nb, _) in g.neighbors(v) {
            if !seen[nb as usize] {
                seen[nb as usize] = true;
                count += 1;
                stack.push(nb);
            }
        }
    }
    count == n
}

/// Adds independent N(0, sigma²) noise to every edge weight; topology
/// untouched.
pub fn inject_noise(g: &Graph, sigma: f64, rng: &mut impl RngCore) -> Graph {
    assert!(sigma >= 0.0 && sigma.is_finite());
    let edges: Vec<(NodeId, NodeId, f64)> = g
        .edges()
        .map(|(e, w)| {
            let (u, v) = e.endpoints();
            (u, v, w + sigma * standard_normal(rng))
        })
        .collect();
    Graph::from_edges_with_nodes(g.node_count(), edges).expect("same topology")
}

/// Fraction of truth pairs the found policy reproduces; unmatched
/// pattern nodes count as wrong. An empty truth is vacuously perfect.
pub fn accuracy(found: &MatchingPolicy, truth: &MatchingPolicy) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits = truth
        .pairs()
        .iter()
        .filter(|&&(s, f)| found.image(s) == Some(f))
        .count();
    hits as f64 / truth.len() as f64
}

/// Runs the full sweep: `sigma_grid x iterations` independent
/// instances, matched with the noise level known. Rows come back in
/// grid-major order. Growth failures become flagged rows rather than
/// aborting the sweep.
pub fn run_monte_carlo(cfg: &SimConfig) -> Result<McReport, SimError> {
    assert!(cfg.iterations >= 1, "need at least one iteration");
    assert!(!cfg.sigma_grid.is_empty(), "need at least one noise level");
    let keys: Vec<(usize, usize)> = (0..cfg.sigma_grid.len())
        .flat_map(|si| (0..cfg.iterations).map(move |it| (si, it)))
        .collect();
    let rows = keys
        .par_iter()
        .map(|&(si, it)| run_iteration(cfg, si, it))
        .collect::<Result<Vec<McRow>, SimError>>()?;
    Ok(McReport {
        config: cfg.clone(),
        workers: rayon::current_num_threads(),
        rows,
    })
}

fn run_iteration(cfg: &SimConfig, sigma_index: usize, iter: usize) -> Result<McRow, SimError> {
    let sigma = cfg.sigma_grid[sigma_index];
    let seed = mix(cfg.master_seed, ((sigma_index as u64) << 32) | iter as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g_f = gen_er(cfg.n_f, cfg.edge_prob, &mut rng);
    // Instances that violate the unit stage's assumptions are resampled
    // (bounded) and every failed attempt counted.
    let mut retries = 0usize;
    let mut instance = None;
    while retries < MAX_SAMPLE_RETRIES {
        match sample_subgraph(&g_f, cfg, &mut rng) {
            Ok((g_s, truth, r)) => {
                retries += r;
                if satisfies_unit_assumptions(&g_s, MatchOptions::default().p) {
                    instance = Some((g_s, truth));
                    break;
                }
                retries += 1;
            }
            Err(SimError::GrowthFailure { .. }) => {
                retries = MAX_SAMPLE_RETRIES;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let Some((g_s, truth)) = instance else {
        return Ok(McRow {
            sigma,
            iter,
            accuracy: 0.0,
            runtime_ms: 0.0,
            seed,
            matched: 0,
            retries,
            feasible_sizes: Vec::new(),
            policy: MatchingPolicy::new(),
            truth: MatchingPolicy::new(),
        });
    };
    let noisy = inject_noise(&g_s, sigma, &mut rng);
    let match_seed = rng.next_u64();
    let tcfg = ThresholdConfig::new(cfg.alpha, sigma).with_count_mode(cfg.count_mode);
    let started = Instant::now();
    let out = match_with_sigma(&noisy, &g_f, &tcfg, &MatchOptions::default(), match_seed)?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    let mut feasible_sizes = vec![out.candidates];
    for step in &out.diagnostics.steps {
        feasible_sizes.extend_from_slice(&step.feasible_sizes);
    }
    Ok(McRow {
        sigma,
        iter,
        accuracy: accuracy(&out.policy, &truth),
        runtime_ms,
        seed,
        matched: out.policy.len(),
        retries,
        feasible_sizes,
        policy: out.policy,
        truth,
    })
}

/// One scaling measurement: field size, the density that keeps the
/// expected degree constant, and the median matching wall-clock over
/// the successful iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_f: usize,
    pub edge_prob: f64,
    pub median_runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of ln(median runtime) against ln(n_f);
    /// absent with fewer than two usable rows.
    pub log_log_slope: Option<f64>,
    pub workers: usize,
}

/// Sweeps field sizes at constant expected degree, timing the matcher
/// at the first noise level of `base.sigma_grid`.
pub fn run_scaling_bench(
    grid: &[usize],
    degree: f64,
    base: &SimConfig,
) -> Result<ScalingReport, SimError> {
    assert!(!grid.is_empty(), "empty size grid");
    assert!(grid.windows(2).all(|w| w[0] < w[1]), "grid must ascend");
    assert!(degree > 0.0);
    let sigma = *base.sigma_grid.first().expect("need a noise level");
    let mut rows = Vec::new();
    for &n_f in grid {
        let cfg = SimConfig {
            n_f,
            edge_prob: (degree / n_f as f64).min(1.0),
            sigma_grid: vec![sigma],
            ..base.clone()
        };
        let report = run_monte_carlo(&cfg)?;
        let mut times: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| !r.truth.is_empty())
            .map(|r| r.runtime_ms)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
        let median = if times.is_empty() {
            f64::NAN
        } else if times.len() % 2 == 1 {
            times[times.len() / 2]
        } else {
            0.5 * (times[times.len() / 2 - 1] + times[times.len() / 2])
        };
        rows.push(ScalingRow {
            n_f,
            edge_prob: cfg.edge_prob,
            median_runtime_ms: median,
        });
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.median_runtime_ms.is_finite() && r.median_runtime_ms > 0.0)
        .map(|r| ((r.n_f as f64).ln(), r.median_runtime_ms.ln()))
        .collect();
    let log_log_slope = (fit.len() >= 2).then(|| {
        let n = fit.len() as f64;
        let xm = fit.iter().map(|&(x, _)| x).sum::<f64>() / n;
        let ym = fit.iter().map(|&(_, y)| y).sum::<f64>() / n;
        let num: f64 = fit.iter().map(|&(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = fit.iter().map(|&(x, _)| (x - xm) * (x - xm)).sum();
        num / den
    });
    Ok(ScalingReport {
        rows,
        log_log_slope,
        workers: rayon::current_num_threads(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::estimate_sigma;

    #[test]
    fn er_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = gen_er(6, 0.0, &mut rng);
        assert_eq!(empty.edge_count(), 0);
        assert_eq!(empty.node_count(), 6);
        let full = gen_er(5, 1.0, &mut rng);
        assert_eq!(full.edge_count(), 10);
        assert!(full.edges().all(|(_, w)| w > 0.0 && w < 1.0));
    }

    #[test]
    fn er_edge_count_concentrates() {
        // C(100,2) * 0.1 = 495 expected; SD of the mean over 1000
        // draws is sqrt(4950 * 0.1 * 0.9 / 1000) ~ 0.667.
        let mut total = 0usize;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            total += gen_er(100, 0.1, &mut rng).edge_count();
        }
        let mean = total as f64 / 1000.0;
        assert!((mean - 495.0).abs() < 3.0 * 0.667, "mean {mean}");
    }

    #[test]
    fn sampling_from_complete_graph_takes_any_five() {
        let n = 8;
        let edges: Vec<(NodeId, NodeId, f64)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v, 0.1)))
            .collect();
        let g = Graph::from_edges(edges).unwrap();
        let cfg = SimConfig {
            n_s: 5,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (g_s, truth, retries) = sample_subgraph(&g, &cfg, &mut rng).unwrap();
        assert_eq!(g_s.node_count(), 5);
        assert_eq!(g_s.edge_count(), 10);
        assert_eq!(retries, 0);
        assert!(truth.is_consistent(&g_s, &g));
    }

    #[test]
    fn sampling_fails_when_no_edge_is_light_enough() {
        let g = Graph::from_edges([(0, 1, 0.9), (1, 2, 0.8), (0, 2, 0.7)]).unwrap();
        let cfg = SimConfig {
            n_s: 3,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        match sample_subgraph(&g, &cfg, &mut rng) {
            Err(SimError::GrowthFailure { target, retries }) => {
                assert_eq!(target, 3);
                assert_eq!(retries, MAX_SAMPLE_RETRIES);
            }
            other => panic!("expected growth failure, got {other:?}"),
        }
    }

    #[test]
    fn unit_assumption_check() {
        // Two disjoint triangles joined by a bridge: fine.
        let bowtie = Graph::from_edges([
            (0, 1, 0.1),
            (0, 2, 0.2),
            (1, 2, 0.3),
            (2, 3, 0.4),
            (3, 4, 0.5),
            (4, 5, 0.6),
            (4, 6, 0.7),
            (5, 6, 0.8),
        ])
        .unwrap();
        assert!(satisfies_unit_assumptions(&bowtie, 2));
        // K5 has triangles galore but no node-disjoint pair.
        let k5: Vec<(NodeId, NodeId, f64)> = (0..5)
            .flat_map(|u| (u + 1..5).map(move |v| (u, v, 0.1)))
            .collect();
        assert!(!satisfies_unit_assumptions(&Graph::from_edges(k5).unwrap(), 2));
        // Triangle-free path.
        let path = Graph::from_edges((0..6).map(|i| (i, i + 1, 0.2))).unwrap();
        assert!(!satisfies_unit_assumptions(&path, 2));
        // Disjoint triangles but disconnected.
        let split = Graph::from_edges([
            (0, 1, 0.1),
            (0, 2, 0.2),
            (1, 2, 0.3),
            (4, 5, 0.5),
            (4, 6, 0.6),
            (5, 6, 0.7),
        ])
        .unwrap();
        assert!(!satisfies_unit_assumptions(&split, 2));
    }

    #[test]
    fn sampled_instance_is_induced() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x10);
        let g_f = gen_er(100, 0.1, &mut rng);
        let cfg = SimConfig::default();
        let (g_s, truth, _) = sample_subgraph(&g_f, &cfg, &mut rng).unwrap();
        assert_eq!(g_s.node_count(), 20);
        assert!(is_connected(&g_s));
        assert!(truth.is_consistent(&g_s, &g_f));
        // Induced means *every* full-graph edge between chosen nodes
        // is present, weights bit-identical.
        for (e, w) in g_s.edges() {
            let (u, v) = e.endpoints();
            let (fu, fv) = (truth.image(u).unwrap(), truth.image(v).unwrap());
            assert_eq!(g_f.weight(fu, fv), Some(w));
        }
        let subs: Vec<NodeId> = truth.pairs().iter().map(|&(s, _)| s).collect();
        for i in 0..subs.len() {
            for j in i + 1..subs.len() {
                let (fu, fv) = (
                    truth.image(subs[i]).unwrap(),
                    truth.image(subs[j]).unwrap(),
                );
                assert_eq!(
                    g_s.has_edge(subs[i], subs[j]),
                    g_f.has_edge(fu, fv),
                    "induced subgraph must mirror the full graph"
                );
            }
        }
    }

    #[test]
    fn noise_injection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gen_er(60, 0.3, &mut rng);
        assert!(g.edge_count() >= 100);
        let same = inject_noise(&g, 0.0, &mut rng);
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            same.edges().collect::<Vec<_>>()
        );
        let noisy = inject_noise(&g, 0.01, &mut rng);
        let before: Vec<_> = g.edges().map(|(e, _)| e).collect();
        let after: Vec<_> = noisy.edges().map(|(e, _)| e).collect();
        assert_eq!(before, after);
        let residuals: Vec<f64> = g
            .edges()
            .zip(noisy.edges())
            .map(|((_, w0), (_, w1))| w1 - w0)
            .collect();
        let sd = estimate_sigma(&residuals).unwrap();
        assert!((0.008..=0.012).contains(&sd), "sd {sd}");
    }

    #[test]
    fn accuracy_counts_unmatched_as_wrong() {
        let truth = MatchingPolicy::from_pairs((0..20).map(|v| (v, v + 50)).collect()).unwrap();
        assert_eq!(accuracy(&truth, &truth), 1.0);
        assert_eq!(accuracy(&MatchingPolicy::new(), &truth), 0.0);
        let nineteen =
            MatchingPolicy::from_pairs((0..19).map(|v| (v, v + 50)).collect()).unwrap();
        assert_eq!(accuracy(&nineteen, &truth), 0.95);
    }

    fn small_cfg() -> SimConfig {
        SimConfig {
            n_f: 40,
            edge_prob: 0.4,
            n_s: 10,
            weight_cutoff: 0.5,
            sigma_grid: vec![0.0, 0.002],
            iterations: 3,
            alpha: 0.025,
            count_mode: CountMode::default(),
            master_seed: 0xfeed,
        }
    }

    #[test]
    fn monte_carlo_rows_are_ordered_and_recomputable() {
        let report = run_monte_carlo(&small_cfg()).unwrap();
        assert_eq!(report.rows.len(), 6);
        for (i, row) in report.rows.iter().enumerate() {
            assert_eq!(row.sigma, small_cfg().sigma_grid[i / 3]);
            assert_eq!(row.iter, i % 3);
            assert!((0.0..=1.0).contains(&row.accuracy));
            assert_eq!(row.accuracy, accuracy(&row.policy, &row.truth));
            assert_eq!(row.matched, row.policy.len());
        }
    }

    #[test]
    fn zero_noise_sweep_is_perfect() {
        let cfg = SimConfig {
            sigma_grid: vec![0.0],
            iterations: 4,
            ..small_cfg()
        };
        let report = run_monte_carlo(&cfg).unwrap();
        for row in &report.rows {
            assert!(!row.truth.is_empty(), "instance generation failed");
            assert_eq!(row.accuracy, 1.0, "row {row:?}");
        }
    }

    #[test]
    fn reports_reproduce_modulo_runtime() {
        let a = run_monte_carlo(&small_cfg()).unwrap();
        let b = run_monte_carlo(&small_cfg()).unwrap();
        let strip = |r: &McReport| {
            r.rows
                .iter()
                .map(|row| {
                    (
                        row.sigma.to_bits(),
                        row.iter,
                        row.accuracy.to_bits(),
                        row.seed,
                        row.matched,
                        row.retries,
                        row.feasible_sizes.clone(),
                        row.policy.clone(),
                        row.truth.clone(),
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn scaling_bench_shapes() {
        let base = SimConfig {
            sigma_grid: vec![0.002],
            iterations: 2,
            n_s: 8,
            ..small_cfg()
        };
        let report = run_scaling_bench(&[30, 60], 12.0, &base).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].n_f, 30);
        assert!((report.rows[0].edge_prob - 0.4).abs() < 1e-12);
        assert!((report.rows[1].edge_prob - 0.2).abs() < 1e-12);
        for row in &report.rows {
            assert!(row.median_runtime_ms.is_finite() && row.median_runtime_ms >= 0.0);
        }
        if let Some(slope) = report.log_log_slope {
            assert!(slope.is_finite());
        }
    }
}

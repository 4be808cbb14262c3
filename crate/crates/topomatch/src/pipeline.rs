//! End-to-end matching: unit location followed by consensus expansion,
//! with the noise level either supplied or estimated from the data.
//!
//! Estimation is two-pass. A ladder of conservative noise levels is
//! climbed until the unit stage finds anything; the accepted match's
//! per-edge residuals then yield a sample estimate, and the whole
//! match is re-run once at the estimated level. Whichever pass covers
//! more pattern nodes wins.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::consensus::{consensus_expand, ExpansionDiagnostics};
use crate::error::MatchError;
use crate::graph::Graph;
use crate::matching::{
    topology_match, CountMode, MatchOptions, MatchingPolicy, ThresholdConfig, TopologyUnit,
};
use crate::stats::estimate_sigma;
use crate::util::mix;

/// Result of a full matching run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchOutcome {
    /// Final pattern-to-field assignment; empty when no unit was found.
    pub policy: MatchingPolicy,
    /// The pattern-side unit the run anchored on (the last one tried
    /// when nothing matched).
    pub unit: TopologyUnit,
    /// How many feasible unit assignments the first stage produced.
    pub candidates: usize,
    pub diagnostics: ExpansionDiagnostics,
    /// Noise level the winning pass ran with.
    pub sigma_used: f64,
    /// Sample estimate from matched-edge residuals, when estimation ran
    /// and a first-pass match existed to estimate from.
    pub sigma_estimate: Option<f64>,
}

impl MatchOutcome {
    pub fn matched_nodes(&self) -> usize {
        self.policy.len()
    }
}

/// One matching run at a known noise level.
pub fn match_with_sigma(
    sub: &Graph,
    field: &Graph,
    cfg: &ThresholdConfig,
    opts: &MatchOptions,
    seed: u64,
) -> Result<MatchOutcome, MatchError> {
    run_once(sub, field, cfg, opts, seed)
}

fn run_once(
    sub: &Graph,
    field: &Graph,
    cfg: &ThresholdConfig,
    opts: &MatchOptions,
    seed: u64,
) -> Result<MatchOutcome, MatchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = topology_match(sub, field, cfg, opts, &mut rng)?;
    if set.is_empty() {
        return Ok(MatchOutcome {
            policy: MatchingPolicy::new(),
            unit: set.unit,
            candidates: 0,
            diagnostics: ExpansionDiagnostics::default(),
            sigma_used: cfg.sigma,
            sigma_estimate: None,
        });
    }
    let candidates = set.candidates.len();
    let exp = consensus_expand(sub, field, &set, cfg, seed)?;
    Ok(MatchOutcome {
        policy: exp.policy,
        unit: set.unit,
        candidates,
        diagnostics: exp.diagnostics,
        sigma_used: cfg.sigma,
        sigma_estimate: None,
    })
}

/// Ladder exponents tried relative to the pattern's weight spread:
/// 2^-14 up to 2^2 times the spread, doubling each rung.
const LADDER_LOW: i32 = -14;
const LADDER_HIGH: i32 = 2;

/// Full matching with the noise level estimated from the data.
///
/// The first pass climbs a geometric ladder of trial levels anchored at
/// the pattern's own weight spread, stopping at the first level where a
/// unit match exists; the refined level is the sample standard
/// deviation of that match's per-edge residuals. When even the top
/// rung finds nothing, the empty outcome is returned with no
/// estimate.
pub fn match_estimating_sigma(
    sub: &Graph,
    field: &Graph,
    alpha: f64,
    count_mode: CountMode,
    opts: &MatchOptions,
    seed: u64,
) -> Result<MatchOutcome, MatchError> {
    let anchor = weight_scale(sub);
    let mut first = None;
    let mut last_empty = None;
    for (rung, exp) in (LADDER_LOW..=LADDER_HIGH).enumerate() {
        let cfg = ThresholdConfig::new(alpha, anchor * (2f64).powi(exp))
            .with_count_mode(count_mode);
        let out = run_once(sub, field, &cfg, opts, mix(seed, rung as u64))?;
        if out.policy.is_empty() {
            last_empty = Some(out);
        } else {
            first = Some(out);
            break;
        }
    }
    let Some(first) = first else {
        return Ok(last_empty.expect("ladder has at least one rung"));
    };
    let residuals = first.policy.residuals(sub, field);
    if residuals.len() < 2 {
        return Ok(first);
    }
    let hat = estimate_sigma(&residuals).expect("two or more residuals");
    let cfg = ThresholdConfig::new(alpha, hat).with_count_mode(count_mode);
    let second = run_once(sub, field, &cfg, opts, mix(seed, 1 << 32))?;
    let mut winner = if better_of(&second, &first, sub, field) {
        second
    } else {
        first
    };
    winner.sigma_estimate = Some(hat);
    Ok(winner)
}

/// Does `a` beat `b`? More matched nodes first, then smaller total
/// absolute residual; full ties go to `a` (the refined pass).
fn better_of(a: &MatchOutcome, b: &MatchOutcome, sub: &Graph, field: &Graph) -> bool {
    if a.matched_nodes() != b.matched_nodes() {
        return a.matched_nodes() > b.matched_nodes();
    }
    let total = |o: &MatchOutcome| {
        o.policy
            .residuals(sub, field)
            .iter()
            .map(|r| r.abs())
            .sum::<f64>()
    };
    total(a) <= total(b)
}

/// Spread of the pattern's own edge weights, anchoring the trial
/// ladder to the data's scale; falls back to 1 for degenerate inputs.
fn weight_scale(g: &Graph) -> f64 {
    let w: Vec<f64> = g.edges().map(|(_, w)| w).collect();
    match estimate_sigma(&w) {
        Ok(sd) if sd > 0.0 => sd,
        _ => 1.0,
    }
}

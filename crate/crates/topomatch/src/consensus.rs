//! Second matching stage: grow an initial unit match over the rest of
//! the pattern graph.
//!
//! From the matched node set, a boundary edge is sampled and extended
//! into a path reaching unmatched pattern nodes. The path is accepted
//! only when exactly one feasible counterpart exists in the field graph;
//! with several counterparts the path grows another hop until the
//! ambiguity resolves or the branch dead-ends. Failed anchors are
//! retired permanently, so the search always terminates.

use std::collections::BTreeSet;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::MatchError;
use crate::graph::{count_walks, paths_from, Edge, Graph, NodeId, Path, DEFAULT_PATH_CAP};
use crate::matching::{FeasibleSet, MatchingPolicy, ThresholdConfig};
use crate::util::rand_index;

/// Expansion state: the accumulated policy plus the anchors already
/// attempted without success. Boundary edges — pattern edges with
/// exactly one matched endpoint — are recomputed from the policy on
/// demand so they can never drift out of sync.
#[derive(Debug, Clone)]
pub struct Frontier {
    matched: MatchingPolicy,
    exhausted: BTreeSet<Edge>,
}

impl Frontier {
    pub fn new(initial: MatchingPolicy) -> Self {
        Frontier {
            matched: initial,
            exhausted: BTreeSet::new(),
        }
    }

    pub fn matched(&self) -> &MatchingPolicy {
        &self.matched
    }

    /// Pattern edges with exactly one matched endpoint, canonical order.
    pub fn boundary_edges(&self, sub: &Graph) -> Vec<Edge> {
        sub.edges()
            .map(|(e, _)| e)
            .filter(|e| {
                let (u, v) = e.endpoints();
                self.matched.contains_sub(u) != self.matched.contains_sub(v)
            })
            .collect()
    }

    /// Boundary edges not yet retired.
    pub fn available(&self, sub: &Graph) -> Vec<Edge> {
        self.boundary_edges(sub)
            .into_iter()
            .filter(|e| !self.exhausted.contains(e))
            .collect()
    }

    /// Retires an anchor permanently; the set never shrinks, which
    /// bounds total attempts by the pattern's edge count.
    pub fn exhaust(&mut self, e: Edge) {
        self.exhausted.insert(e);
    }

    pub fn exhausted_count(&self) -> usize {
        self.exhausted.len()
    }

    fn accept(&mut self, pairs: &[(NodeId, NodeId)]) -> Result<(), MatchError> {
        for &(s, f) in pairs {
            self.matched.insert(s, f)?;
        }
        Ok(())
    }
}

/// One candidate continuation: a pattern path from a matched anchor and
/// a same-length field path from the anchor's image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathCandidate {
    pub sub_path: Path,
    pub full_path: Path,
    /// Signed per-edge weight differences (field minus pattern), hop by
    /// hop.
    pub diffs: Vec<f64>,
}

impl PathCandidate {
    /// Mean absolute per-edge difference, the quantity feasibility
    /// tests.
    pub fn mean_abs_diff(&self) -> f64 {
        self.diffs.iter().map(|d| d.abs()).sum::<f64>() / self.diffs.len() as f64
    }

    /// Pattern-to-field pairs added beyond the anchor.
    pub fn new_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.sub_path.nodes()[1..]
            .iter()
            .zip(&self.full_path.nodes()[1..])
            .map(|(&s, &f)| (s, f))
            .collect()
    }
}

/// Weight-feasible continuations plus the count of purely topological
/// ones (any simple equal-hop path clear of matched images, before the
/// weight test).
fn candidates_with_topo(
    sub: &Graph,
    field: &Graph,
    sub_path: &Path,
    matched: &MatchingPolicy,
    cfg: &ThresholdConfig,
) -> Result<(Vec<PathCandidate>, usize), MatchError> {
    let anchor = sub_path.first();
    let anchor_image = matched.image(anchor).ok_or_else(|| {
        MatchError::AssumptionViolation("path anchor is not matched".into())
    })?;
    for &v in &sub_path.nodes()[1..] {
        if matched.contains_sub(v) {
            return Err(MatchError::AssumptionViolation(
                "path reaches an already-matched node".into(),
            ));
        }
    }
    let q = sub_path.hops();
    let tau = cfg.threshold(q);
    let forbidden: Vec<NodeId> = matched
        .pairs()
        .iter()
        .map(|&(_, f)| f)
        .filter(|&f| f != anchor_image)
        .collect();
    // Walk counts over-approximate the path count; a continuation too
    // branchy to enumerate is reported as having no usable walks, so
    // the caller backs off to another anchor instead of aborting.
    let bound = count_walks(field, anchor_image, q, &forbidden)
        .into_iter()
        .fold(0u64, u64::saturating_add);
    if bound > DEFAULT_PATH_CAP as u64 {
        return Ok((Vec::new(), 0));
    }
    let walks = paths_from(field, anchor_image, q, &forbidden, DEFAULT_PATH_CAP)
        .map_err(MatchError::Graph)?;
    let topo = walks.len();
    let sub_weights: Vec<f64> = sub_path
        .edges()
        .map(|e| {
            let (u, v) = e.endpoints();
            sub.weight(u, v).ok_or(MatchError::TopologyMismatch)
        })
        .collect::<Result<_, _>>()?;
    let mut feasible = Vec::new();
    for w in walks {
        let diffs: Vec<f64> = w
            .edges()
            .zip(&sub_weights)
            .map(|(e, &ws)| {
                let (u, v) = e.endpoints();
                field.weight(u, v).expect("field path edge") - ws
            })
            .collect();
        let cand = PathCandidate {
            sub_path: sub_path.clone(),
            full_path: w,
            diffs,
        };
        if cand.mean_abs_diff() <= tau {
            feasible.push(cand);
        }
    }
    Ok((feasible, topo))
}

/// All field paths that could continue the matched set along
/// `sub_path`: equal hop count, starting at the image of the anchor,
/// avoiding every other matched image, with mean absolute per-edge
/// weight difference within `threshold(hop count)`.
pub fn feasible_path_matches(
    sub: &Graph,
    field: &Graph,
    sub_path: &Path,
    matched: &MatchingPolicy,
    cfg: &ThresholdConfig,
) -> Result<Vec<PathCandidate>, MatchError> {
    Ok(candidates_with_topo(sub, field, sub_path, matched, cfg)?.0)
}

/// Would accepting `cand` keep the accumulated policy topology
/// consistent? Checks every pattern edge from a newly added node back
/// into the matched set or to another new node.
fn extension_consistent(
    sub: &Graph,
    field: &Graph,
    matched: &MatchingPolicy,
    cand: &PathCandidate,
) -> bool {
    let new_pairs = cand.new_pairs();
    let image = |v: NodeId| -> Option<NodeId> {
        matched
            .image(v)
            .or_else(|| new_pairs.iter().find(|&&(s, _)| s == v).map(|&(_, f)| f))
    };
    for &(s, f) in &new_pairs {
        for &(nb, _) in sub.neighbors(s) {
            if let Some(fnb) = image(nb) {
                if !field.has_edge(f, fnb) {
                    return false;
                }
            }
        }
    }
    true
}

/// One accepted expansion step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// Boundary edge the step grew from.
    pub anchor: Edge,
    pub accepted: PathCandidate,
    /// Feasible-set size at each path length tried before acceptance.
    pub feasible_sizes: Vec<usize>,
}

/// What one expansion did, and from which initial candidate it started.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ExpansionDiagnostics {
    pub initial_index: usize,
    pub initial_nodes: usize,
    pub matched_nodes: usize,
    pub steps: Vec<StepRecord>,
    pub exhausted_edges: usize,
}

/// Expanded policy with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion {
    pub policy: MatchingPolicy,
    pub diagnostics: ExpansionDiagnostics,
}

/// Grows every initial candidate independently and returns the
/// expansion matching the most pattern nodes; ties fall to the smallest
/// total absolute residual, then to candidate order.
///
/// Each candidate runs on its own deterministic random substream, so
/// the result depends only on the inputs and `seed`.
pub fn consensus_expand(
    sub: &Graph,
    field: &Graph,
    initial: &FeasibleSet,
    cfg: &ThresholdConfig,
    seed: u64,
) -> Result<Expansion, MatchError> {
    assert!(
        !initial.is_empty(),
        "consensus expansion needs a non-empty feasible set"
    );
    let mut best: Option<(usize, f64, Expansion)> = None;
    for (idx, policy) in initial.candidates.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let exp = expand_one(sub, field, policy.clone(), cfg, idx, &mut rng)?;
        let nodes = exp.policy.len();
        let residual: f64 = exp
            .policy
            .residuals(sub, field)
            .iter()
            .map(|r| r.abs())
            .sum();
        let better = match &best {
            None => true,
            Some((bn, br, _)) => nodes > *bn || (nodes == *bn && residual < *br),
        };
        if better {
            best = Some((nodes, residual, exp));
        }
    }
    Ok(best.expect("at least one candidate").2)
}

fn expand_one(
    sub: &Graph,
    field: &Graph,
    initial: MatchingPolicy,
    cfg: &ThresholdConfig,
    initial_index: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Expansion, MatchError> {
    let initial_nodes = initial.len();
    let mut frontier = Frontier::new(initial);
    let mut steps = Vec::new();
    loop {
        let available = frontier.available(sub);
        if available.is_empty() {
            break;
        }
        let anchor = available[rand_index(rng, available.len())];
        let (u, v) = anchor.endpoints();
        let (from, into) = if frontier.matched().contains_sub(u) {
            (u, v)
        } else {
            (v, u)
        };
        let mut trace = Vec::new();
        let mut nodes = vec![from, into];
        match grow(sub, field, frontier.matched(), cfg, &mut nodes, &mut trace)? {
            Some(cand) => {
                frontier.accept(&cand.new_pairs())?;
                debug_assert!(frontier.matched().is_consistent(sub, field));
                steps.push(StepRecord {
                    anchor,
                    accepted: cand,
                    feasible_sizes: trace,
                });
            }
            None => frontier.exhaust(anchor),
        }
    }
    let diagnostics = ExpansionDiagnostics {
        initial_index,
        initial_nodes,
        matched_nodes: frontier.matched().len(),
        steps,
        exhausted_edges: frontier.exhausted_count(),
    };
    Ok(Expansion {
        policy: frontier.matched().clone(),
        diagnostics,
    })
}

/// Depth-first growth of the pattern path. Returns the accepted
/// candidate once some length yields a unique consistent feasible
/// match; gives up on a branch when no equal-hop field path exists at
/// all (an extension can never revive it) or when the pattern side
/// cannot extend further.
fn grow(
    sub: &Graph,
    field: &Graph,
    matched: &MatchingPolicy,
    cfg: &ThresholdConfig,
    nodes: &mut Vec<NodeId>,
    trace: &mut Vec<usize>,
) -> Result<Option<PathCandidate>, MatchError> {
    let sub_path = Path::from_nodes(nodes.clone());
    let (feasible, topo) = candidates_with_topo(sub, field, &sub_path, matched, cfg)?;
    let consistent: Vec<PathCandidate> = feasible
        .into_iter()
        .filter(|c| extension_consistent(sub, field, matched, c))
        .collect();
    trace.push(consistent.len());
    if consistent.len() == 1 {
        return Ok(consistent.into_iter().next());
    }
    if topo == 0 {
        return Ok(None);
    }
    let last = *nodes.last().unwrap();
    let mut next: Vec<NodeId> = sub
        .neighbors(last)
        .iter()
        .map(|&(nb, _)| nb)
        .filter(|&nb| !matched.contains_sub(nb) && !nodes.contains(&nb))
        .collect();
    next.sort_unstable();
    for nb in next {
        nodes.push(nb);
        if let Some(found) = grow(sub, field, matched, cfg, nodes, trace)? {
            return Ok(Some(found));
        }
        nodes.pop();
    }
    Ok(None)
}

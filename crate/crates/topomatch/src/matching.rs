//! First matching stage: locate one topology-preserving unit of the
//! pattern graph inside the field graph.
//!
//! A unit is two node-disjoint p-simplexes joined by a shortest hop
//! path. Units are compared by the difference of their averaged edge
//! weights, accepted when the difference stays within a threshold
//! calibrated from the noise level, and resolved into concrete
//! node-to-node assignments.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::MatchError;
use crate::graph::{
    count_walks, enumerate_simplexes, paths_with_hops_capped, shortest_hop_path, Edge, Graph,
    NodeId, Path, Simplex, DEFAULT_PATH_CAP,
};
use crate::stats::normal_quantile;
use crate::util::shuffle;

/// Which count divides averaged weights and calibrates thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Divide by the structure's node count.
    Nodes,
    /// Divide by the number of compared edges, which is also the number
    /// of independent noise terms entering the average — the mode under
    /// which the coverage guarantee is exact.
    #[default]
    Edges,
}

/// Noise level, risk level, and count convention for feasibility tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub count_mode: CountMode,
}

impl ThresholdConfig {
    pub fn new(alpha: f64, sigma: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and non-negative");
        ThresholdConfig {
            alpha,
            sigma,
            count_mode: CountMode::default(),
        }
    }

    pub fn with_count_mode(mut self, mode: CountMode) -> Self {
        self.count_mode = mode;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        assert!(sigma >= 0.0 && sigma.is_finite());
        self.sigma = sigma;
        self
    }

    /// Feasibility threshold for a structure of the given count:
    /// `quantile(1 - alpha/2) * sigma / sqrt(count)`.
    ///
    /// Written so that quadrupling the count exactly halves the
    /// threshold: `sqrt` and division by a power of two are both
    /// correctly rounded, so `threshold(4c) == threshold(c) / 2`
    /// bit-for-bit.
    pub fn threshold(&self, count: usize) -> f64 {
        assert!(count >= 1, "threshold needs a positive count");
        let z = normal_quantile(1.0 - self.alpha / 2.0).expect("alpha in (0, 1)");
        z * self.sigma / (count as f64).sqrt()
    }

    /// The count a simplex of order `p` contributes under this mode.
    pub fn simplex_count(&self, p: usize) -> usize {
        match self.count_mode {
            CountMode::Nodes => p + 1,
            CountMode::Edges => p * (p + 1) / 2,
        }
    }
}

/// Injective partial map from pattern nodes to field nodes, stored as
/// pairs sorted by pattern node.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchingPolicy {
    pairs: Vec<(NodeId, NodeId)>,
}

impl MatchingPolicy {
    pub fn new() -> Self {
        MatchingPolicy::default()
    }

    pub fn from_pairs(mut pairs: Vec<(NodeId, NodeId)>) -> Result<Self, MatchError> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(MatchError::NotInjective(w[0].0));
            }
        }
        let mut images: Vec<NodeId> = pairs.iter().map(|&(_, f)| f).collect();
        images.sort_unstable();
        for w in images.windows(2) {
            if w[0] == w[1] {
                return Err(MatchError::NotInjective(w[0]));
            }
        }
        Ok(MatchingPolicy { pairs })
    }

    /// Field image of a pattern node.
    pub fn image(&self, sub: NodeId) -> Option<NodeId> {
        self.pairs
            .binary_search_by_key(&sub, |&(s, _)| s)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    /// Pattern node mapped onto a field node.
    pub fn preimage(&self, field: NodeId) -> Option<NodeId> {
        self.pairs.iter().find(|&&(_, f)| f == field).map(|&(s, _)| s)
    }

    pub fn contains_sub(&self, sub: NodeId) -> bool {
        self.image(sub).is_some()
    }

    pub fn contains_field(&self, field: NodeId) -> bool {
        self.preimage(field).is_some()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    /// Adds a pair, rejecting any remap of either side.
    pub fn insert(&mut self, sub: NodeId, field: NodeId) -> Result<(), MatchError> {
        if let Some(existing) = self.image(sub) {
            if existing == field {
                return Ok(());
            }
            return Err(MatchError::NotInjective(sub));
        }
        if self.contains_field(field) {
            return Err(MatchError::NotInjective(field));
        }
        let at = self.pairs.partition_point(|&(s, _)| s < sub);
        self.pairs.insert(at, (sub, field));
        Ok(())
    }

    /// Forward topology consistency: every pattern edge whose endpoints
    /// are both mapped must land on a field edge.
    pub fn is_consistent(&self, sub: &Graph, field: &Graph) -> bool {
        for &(s, f) in &self.pairs {
            for &(nb, _) in sub.neighbors(s) {
                if nb > s {
                    if let Some(fnb) = self.image(nb) {
                        if !field.has_edge(f, fnb) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Signed weight residuals (field minus pattern) over every pattern
    /// edge with both endpoints mapped, in canonical edge order.
    pub fn residuals(&self, sub: &Graph, field: &Graph) -> Vec<f64> {
        let mut out = Vec::new();
        for (e, ws) in sub.edges() {
            let (u, v) = e.endpoints();
            if let (Some(fu), Some(fv)) = (self.image(u), self.image(v)) {
                if let Some(wf) = field.weight(fu, fv) {
                    out.push(wf - ws);
                }
            }
        }
        out
    }
}

/// Two node-disjoint same-order simplexes joined by a path running from
/// a node of the first to a node of the second.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyUnit {
    s1: Simplex,
    s2: Simplex,
    path: Path,
}

impl TopologyUnit {
    pub fn new(g: &Graph, s1: Simplex, s2: Simplex, path: Path) -> Result<Self, MatchError> {
        if s1.order() != s2.order() || !s1.is_disjoint(&s2) {
            return Err(MatchError::TopologyMismatch);
        }
        if path.hops() < 1 || !s1.contains(path.first()) || !s2.contains(path.last()) {
            return Err(MatchError::TopologyMismatch);
        }
        let interior = &path.nodes()[1..path.nodes().len() - 1];
        if interior.iter().any(|&v| s1.contains(v) || s2.contains(v)) {
            return Err(MatchError::TopologyMismatch);
        }
        for e in path.edges() {
            let (u, v) = e.endpoints();
            if !g.has_edge(u, v) {
                return Err(MatchError::TopologyMismatch);
            }
        }
        Ok(TopologyUnit { s1, s2, path })
    }

    pub fn simplexes(&self) -> (&Simplex, &Simplex) {
        (&self.s1, &self.s2)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Simplex order `p`.
    pub fn order(&self) -> usize {
        self.s1.order()
    }

    /// All unit nodes, sorted.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .s1
            .nodes()
            .iter()
            .chain(self.s2.nodes())
            .copied()
            .chain(self.path.nodes()[1..self.path.nodes().len() - 1].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Unit edges: both simplex cliques then the path, in that order.
    pub fn edges(&self) -> Vec<Edge> {
        self.s1
            .edges()
            .chain(self.s2.edges())
            .chain(self.path.edges())
            .collect()
    }

    /// `2(p+1) + hops - 1` nodes.
    pub fn node_count(&self) -> usize {
        2 * (self.order() + 1) + self.path.hops() - 1
    }

    /// `p(p+1) + hops` edges.
    pub fn edge_count(&self) -> usize {
        self.order() * (self.order() + 1) + self.path.hops()
    }

    /// The count entering distances and thresholds under `mode`.
    pub fn count(&self, mode: CountMode) -> usize {
        match mode {
            CountMode::Nodes => self.node_count(),
            CountMode::Edges => self.edge_count(),
        }
    }

    fn same_shape(&self, other: &TopologyUnit) -> bool {
        self.order() == other.order() && self.path.hops() == other.path.hops()
    }
}

/// Candidate assignments of one unit (or the reason none were found).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleSet {
    /// The pattern-side unit the candidates refer to.
    pub unit: TopologyUnit,
    /// Feasible assignments of the unit's nodes into the field graph,
    /// best ranked first. Empty when every try came up dry.
    pub candidates: Vec<MatchingPolicy>,
}

impl FeasibleSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Sum of edge weights over `edges` divided by the structure's count:
/// its distinct node count under [`CountMode::Nodes`], the edge count
/// under [`CountMode::Edges`].
pub fn mean_edge_weight(g: &Graph, edges: &[Edge], mode: CountMode) -> Result<f64, MatchError> {
    if edges.is_empty() {
        return Err(MatchError::EmptyEdgeSet);
    }
    let mut sum = 0.0;
    for e in edges {
        let (u, v) = e.endpoints();
        sum += g.weight(u, v).ok_or(MatchError::TopologyMismatch)?;
    }
    let divisor = match mode {
        CountMode::Edges => edges.len(),
        CountMode::Nodes => {
            let mut nodes: Vec<NodeId> =
                edges.iter().flat_map(|e| [e.endpoints().0, e.endpoints().1]).collect();
            nodes.sort_unstable();
            nodes.dedup();
            nodes.len()
        }
    };
    Ok(sum / divisor as f64)
}

/// Absolute difference of averaged edge weights between two same-shape
/// units.
pub fn unit_distance(
    sub: &Graph,
    sub_unit: &TopologyUnit,
    field: &Graph,
    field_unit: &TopologyUnit,
    mode: CountMode,
) -> Result<f64, MatchError> {
    if !sub_unit.same_shape(field_unit) {
        return Err(MatchError::TopologyMismatch);
    }
    let a = mean_edge_weight(sub, &sub_unit.edges(), mode)?;
    let b = mean_edge_weight(field, &field_unit.edges(), mode)?;
    Ok((a - b).abs())
}

/// Absolute difference of averaged edge weights between two same-order
/// simplexes.
pub fn simplex_distance(
    sub: &Graph,
    s: &Simplex,
    field: &Graph,
    t: &Simplex,
    mode: CountMode,
) -> Result<f64, MatchError> {
    if s.order() != t.order() {
        return Err(MatchError::TopologyMismatch);
    }
    let a = mean_edge_weight(sub, &s.edges().collect::<Vec<_>>(), mode)?;
    let b = mean_edge_weight(field, &t.edges().collect::<Vec<_>>(), mode)?;
    Ok((a - b).abs())
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Any single edge further off than this many noise standard deviations
/// marks the whole assignment as a gross mismatch. Six sigmas keeps the
/// false-rejection probability per edge near 2e-9 — invisible next to
/// the alpha-level averaged tests — while still discarding assignments
/// whose residuals sit at weight scale rather than noise scale.
const OUTLIER_SDS: f64 = 6.0;

/// Ranks assignments by total per-edge weight difference over `edges`,
/// ties broken by the assignment pairs for determinism. Averaged
/// distances cannot tell orientations of the same node set apart, so
/// every bijection whose edges all sit within the gross-mismatch guard
/// stays a candidate and the expansion stage arbitrates. (A cut at the
/// alpha-level per-edge threshold would reject the true assignment with
/// fixed probability per edge at every noise level — the noise and any
/// sigma-scaled cut grow together.)
fn rank_assignments(
    sub: &Graph,
    field: &Graph,
    edges: &[Edge],
    raw: Vec<MatchingPolicy>,
    cfg: &ThresholdConfig,
) -> Vec<MatchingPolicy> {
    let cap = OUTLIER_SDS * cfg.sigma;
    let mut scored: Vec<(f64, MatchingPolicy)> = Vec::new();
    'next: for policy in raw {
        let mut total = 0.0;
        for e in edges {
            let (u, v) = e.endpoints();
            let ws = sub.weight(u, v).expect("unit edge in pattern graph");
            let wf = field
                .weight(policy.image(u).unwrap(), policy.image(v).unwrap())
                .expect("assignment preserves the edge pattern");
            let d = (ws - wf).abs();
            if d > cap {
                continue 'next;
            }
            total += d;
        }
        scored.push((total, policy));
    }
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite scores")
            .then_with(|| a.1.pairs().cmp(b.1.pairs()))
    });
    scored.into_iter().map(|(_, p)| p).collect()
}

/// All node bijections of one simplex onto another of the same order,
/// ranked per [`rank_assignments`].
pub fn simplex_assignments(
    sub: &Graph,
    s: &Simplex,
    field: &Graph,
    t: &Simplex,
    cfg: &ThresholdConfig,
) -> Result<Vec<MatchingPolicy>, MatchError> {
    if s.order() != t.order() {
        return Err(MatchError::TopologyMismatch);
    }
    let edges: Vec<Edge> = s.edges().collect();
    let raw = permutations(s.nodes().len())
        .into_iter()
        .map(|perm| {
            let pairs = s
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, t.nodes()[perm[i]]))
                .collect();
            MatchingPolicy::from_pairs(pairs).expect("bijection of distinct nodes")
        })
        .collect();
    Ok(rank_assignments(sub, field, &edges, raw, cfg))
}

/// Same-order field cliques within the simplex-level feasibility
/// threshold of `s`, each with its ranked node assignments.
pub fn feasible_simplex_matches(
    field: &Graph,
    sub: &Graph,
    s: &Simplex,
    cfg: &ThresholdConfig,
) -> Vec<(Simplex, Vec<MatchingPolicy>)> {
    let tau = cfg.threshold(cfg.simplex_count(s.order()));
    enumerate_simplexes(field, s.order())
        .into_iter()
        .filter(|t| {
            simplex_distance(sub, s, field, t, cfg.count_mode).expect("same order") <= tau
        })
        .map(|t| {
            let asg = simplex_assignments(sub, s, field, &t, cfg).expect("same order");
            (t, asg)
        })
        .collect()
}

/// Node bijections between two same-shape units that preserve the edge
/// pattern: path nodes correspond in order (which pins both attachment
/// nodes) and the free simplex vertices permute. Ranked per
/// [`rank_assignments`].
pub fn resolve_orientation(
    sub: &Graph,
    sub_unit: &TopologyUnit,
    field: &Graph,
    field_unit: &TopologyUnit,
    cfg: &ThresholdConfig,
) -> Result<Vec<MatchingPolicy>, MatchError> {
    if !sub_unit.same_shape(field_unit) {
        return Err(MatchError::TopologyMismatch);
    }
    let base: Vec<(NodeId, NodeId)> = sub_unit
        .path()
        .nodes()
        .iter()
        .zip(field_unit.path().nodes())
        .map(|(&s, &f)| (s, f))
        .collect();
    let free = |s: &Simplex, anchor: NodeId| -> Vec<NodeId> {
        s.nodes().iter().copied().filter(|&v| v != anchor).collect()
    };
    let (s1, s2) = sub_unit.simplexes();
    let (f1, f2) = field_unit.simplexes();
    let free_s1 = free(s1, sub_unit.path().first());
    let free_s2 = free(s2, sub_unit.path().last());
    let free_f1 = free(f1, field_unit.path().first());
    let free_f2 = free(f2, field_unit.path().last());

    let perms = permutations(sub_unit.order());
    let mut raw = Vec::with_capacity(perms.len() * perms.len());
    for p1 in &perms {
        for p2 in &perms {
            let mut pairs = base.clone();
            pairs.extend(free_s1.iter().enumerate().map(|(i, &v)| (v, free_f1[p1[i]])));
            pairs.extend(free_s2.iter().enumerate().map(|(i, &v)| (v, free_f2[p2[i]])));
            raw.push(MatchingPolicy::from_pairs(pairs).expect("unit nodes are distinct"));
        }
    }
    Ok(rank_assignments(sub, field, &sub_unit.edges(), raw, cfg))
}

/// Knobs for [`topology_match`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Simplex order; 2 matches triangles.
    pub p: usize,
    /// Simplex pairs drawn (without replacement) before giving up.
    pub tries: usize,
    /// Cap on enumerated connecting paths per attachment pair; a pair
    /// whose equal-hop walk count exceeds it is skipped outright.
    pub path_cap: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            p: 2,
            tries: 32,
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

/// Draws random disjoint simplex pairs from the pattern graph and
/// returns the first unit with a non-empty feasible set of field
/// assignments; the feasible set is empty when every try fails.
///
/// A candidate assignment must clear three tests: each simplex within
/// its simplex-level threshold, the whole unit within the unit-level
/// threshold, and forward topology consistency over every pattern edge
/// between assigned nodes.
pub fn topology_match(
    sub: &Graph,
    field: &Graph,
    cfg: &ThresholdConfig,
    opts: &MatchOptions,
    rng: &mut impl RngCore,
) -> Result<FeasibleSet, MatchError> {
    assert!(opts.p >= 1 && opts.tries >= 1);
    if !sub.is_connected() {
        return Err(MatchError::AssumptionViolation(
            "pattern graph is not connected".into(),
        ));
    }
    let sub_simplexes = enumerate_simplexes(sub, opts.p);
    if sub_simplexes.len() < 2 {
        return Err(MatchError::AssumptionViolation(format!(
            "pattern graph holds {} simplex(es) of order {}, need at least 2",
            sub_simplexes.len(),
            opts.p
        )));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..sub_simplexes.len() {
        for j in i + 1..sub_simplexes.len() {
            if sub_simplexes[i].is_disjoint(&sub_simplexes[j]) {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(MatchError::AssumptionViolation(
            "no node-disjoint simplex pair in the pattern graph".into(),
        ));
    }
    shuffle(rng, &mut pairs);

    let field_simplexes = enumerate_simplexes(field, opts.p);
    let tau_simplex = cfg.threshold(cfg.simplex_count(opts.p));

    let mut last_unit = None;
    for &(i, j) in pairs.iter().take(opts.tries) {
        let (s1, s2) = (&sub_simplexes[i], &sub_simplexes[j]);
        let path = match shortest_hop_path(sub, s1.nodes(), s2.nodes()) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let unit = TopologyUnit::new(sub, s1.clone(), s2.clone(), path)?;
        let candidates = unit_candidates(sub, &unit, field, &field_simplexes, tau_simplex, cfg, opts)?;
        if !candidates.is_empty() {
            return Ok(FeasibleSet { unit, candidates });
        }
        last_unit = Some(unit);
    }
    Ok(FeasibleSet {
        unit: last_unit.expect("at least one disjoint pair was tried"),
        candidates: Vec::new(),
    })
}

/// Feasible field assignments for one fixed pattern unit, best first.
fn unit_candidates(
    sub: &Graph,
    unit: &TopologyUnit,
    field: &Graph,
    field_simplexes: &[Simplex],
    tau_simplex: f64,
    cfg: &ThresholdConfig,
    opts: &MatchOptions,
) -> Result<Vec<MatchingPolicy>, MatchError> {
    let (s1, s2) = unit.simplexes();
    let near = |s: &Simplex| -> Result<Vec<usize>, MatchError> {
        (0..field_simplexes.len())
            .filter_map(|k| {
                match simplex_distance(sub, s, field, &field_simplexes[k], cfg.count_mode) {
                    Ok(d) if d <= tau_simplex => Some(Ok(k)),
                    Ok(_) => None,
                    Err(e) => Some(Err(e)),
                }
            })
            .collect()
    };
    let cands1 = near(s1)?;
    let cands2 = near(s2)?;
    let hops = unit.path().hops();
    let tau_unit = cfg.threshold(unit.count(cfg.count_mode));

    let mut found: Vec<MatchingPolicy> = Vec::new();
    for &a in &cands1 {
        for &b in &cands2 {
            let (fa, fb) = (&field_simplexes[a], &field_simplexes[b]);
            if a == b || !fa.is_disjoint(fb) {
                continue;
            }
            for &start in fa.nodes() {
                // Walk counts over-approximate the simple-path count;
                // attachment pairs that would blow the cap are skipped,
                // not enumerated.
                let walk_bound = count_walks(field, start, hops, &[]);
                for &end in fb.nodes() {
                    if walk_bound[end as usize] > opts.path_cap as u64 {
                        continue;
                    }
                    let paths = paths_with_hops_capped(field, start, end, hops, opts.path_cap)
                        .map_err(MatchError::Graph)?;
                    for fpath in paths {
                        let interior = &fpath.nodes()[1..fpath.nodes().len() - 1];
                        if interior.iter().any(|&v| fa.contains(v) || fb.contains(v)) {
                            continue;
                        }
                        let funit = TopologyUnit::new(field, fa.clone(), fb.clone(), fpath)?;
                        if unit_distance(sub, unit, field, &funit, cfg.count_mode)? > tau_unit {
                            continue;
                        }
                        for policy in resolve_orientation(sub, unit, field, &funit, cfg)? {
                            if policy.is_consistent(sub, field) {
                                found.push(policy);
                            }
                        }
                    }
                }
            }
        }
    }
    // Re-rank globally; per-unit ranking only ordered within one field unit.
    Ok(rank_assignments(sub, field, &unit.edges(), found, cfg))
}

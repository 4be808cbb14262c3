//! Exhaustive reference matchers for small instances.
//!
//! Both operations enumerate every injective, topology-consistent map
//! of the pattern into the field graph by backtracking. Exponential in
//! the worst case — the node budget keeps them honest — but exact, which
//! makes them the ground truth the probabilistic pipeline is tested
//! against.

use serde::Serialize;

use crate::error::MatchError;
use crate::graph::{Graph, NodeId};
use crate::matching::MatchingPolicy;

/// Largest field-graph node count the exhaustive scans accept.
pub const DEFAULT_NODE_BUDGET: usize = 14;

/// Ranked output of [`qap_best`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Topology-consistent injections, cheapest first.
    pub policies: Vec<MatchingPolicy>,
    /// Summed squared edge-weight differences, aligned with `policies`
    /// and ascending.
    pub objectives: Vec<f64>,
}

impl OracleResult {
    /// The minimizer, when any injection exists.
    pub fn best(&self) -> Option<(&MatchingPolicy, f64)> {
        self.policies.first().map(|p| (p, self.objectives[0]))
    }
}

fn check_budget(field: &Graph, budget: usize) -> Result<(), MatchError> {
    if field.node_count() > budget {
        return Err(MatchError::BudgetExceeded {
            nodes: field.node_count(),
            budget,
        });
    }
    Ok(())
}

/// Backtracking enumeration of all injective maps under which every
/// pattern edge lands on a field edge. Pattern nodes are assigned in
/// descending-degree order so dead branches die early; output is in
/// ascending pair order regardless.
fn enumerate_consistent(sub: &Graph, field: &Graph) -> Vec<MatchingPolicy> {
    let n_s = sub.node_count();
    let mut order: Vec<NodeId> = (0..n_s as NodeId).collect();
    order.sort_unstable_by_key(|&v| (std::cmp::Reverse(sub.degree(v)), v));

    let mut image = vec![None::<NodeId>; n_s];
    let mut used = vec![false; field.node_count()];
    let mut out = Vec::new();
    backtrack(sub, field, &order, 0, &mut image, &mut used, &mut out);
    out.sort_unstable();
    out
}

fn backtrack(
    sub: &Graph,
    field: &Graph,
    order: &[NodeId],
    depth: usize,
    image: &mut [Option<NodeId>],
    used: &mut [bool],
    out: &mut Vec<MatchingPolicy>,
) {
    if depth == order.len() {
        let pairs = image
            .iter()
            .enumerate()
            .map(|(s, f)| (s as NodeId, f.expect("complete assignment")))
            .collect();
        out.push(MatchingPolicy::from_pairs(pairs).expect("backtracking keeps injectivity"));
        return;
    }
    let s = order[depth];
    'cand: for f in 0..field.node_count() as NodeId {
        if used[f as usize] || field.degree(f) < sub.degree(s) {
            continue;
        }
        for &(nb, _) in sub.neighbors(s) {
            if let Some(fnb) = image[nb as usize] {
                if !field.has_edge(f, fnb) {
                    continue 'cand;
                }
            }
        }
        image[s as usize] = Some(f);
        used[f as usize] = true;
        backtrack(sub, field, order, depth + 1, image, used, out);
        image[s as usize] = None;
        used[f as usize] = false;
    }
}

/// Every injective, topology-consistent map of the pattern graph into a
/// field graph of at most `node_budget` nodes, in ascending pair order.
pub fn exact_isomorphisms(
    sub: &Graph,
    field: &Graph,
    node_budget: usize,
) -> Result<Vec<MatchingPolicy>, MatchError> {
    check_budget(field, node_budget)?;
    Ok(enumerate_consistent(sub, field))
}

/// Scores every topology-consistent injection by the summed squared
/// weight difference over matched edge pairs and returns all of them,
/// cheapest first. Maps sending a pattern edge to a non-edge are
/// infeasible rather than penalized.
pub fn qap_best(
    sub: &Graph,
    field: &Graph,
    node_budget: usize,
) -> Result<OracleResult, MatchError> {
    check_budget(field, node_budget)?;
    let mut scored: Vec<(f64, MatchingPolicy)> = enumerate_consistent(sub, field)
        .into_iter()
        .map(|p| (qap_objective(sub, field, &p), p))
        .collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite objectives")
            .then_with(|| a.1.pairs().cmp(b.1.pairs()))
    });
    let (objectives, policies) = scored.into_iter().map(|(o, p)| (o, p)).unzip();
    Ok(OracleResult {
        policies,
        objectives,
    })
}

/// Summed squared edge-weight difference of a consistent injection.
pub fn qap_objective(sub: &Graph, field: &Graph, policy: &MatchingPolicy) -> f64 {
    sub.edges()
        .map(|(e, ws)| {
            let (u, v) = e.endpoints();
            let wf = field
                .weight(policy.image(u).unwrap(), policy.image(v).unwrap())
                .expect("consistent policy maps edges to edges");
            (ws - wf) * (ws - wf)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[(NodeId, NodeId, f64)]) -> Graph {
        Graph::from_edges(edges.iter().copied()).unwrap()
    }

    #[test]
    fn single_edge_into_triangle_gives_six() {
        let sub = graph(&[(0, 1, 0.5)]);
        let field = graph(&[(0, 1, 0.1), (0, 2, 0.2), (1, 2, 0.3)]);
        let got = exact_isomorphisms(&sub, &field, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(got.len(), 6);
        for p in &got {
            assert!(p.is_consistent(&sub, &field));
        }
    }

    #[test]
    fn k4_into_tree_is_empty() {
        let sub = graph(&[
            (0, 1, 0.1),
            (0, 2, 0.1),
            (0, 3, 0.1),
            (1, 2, 0.1),
            (1, 3, 0.1),
            (2, 3, 0.1),
        ]);
        let field = graph(&[(0, 1, 0.5), (1, 2, 0.5), (1, 3, 0.5), (3, 4, 0.5)]);
        assert!(exact_isomorphisms(&sub, &field, DEFAULT_NODE_BUDGET)
            .unwrap()
            .is_empty());
    }

    /// Unpruned factorial scan: every injective assignment in id order,
    /// filtered by the shared consistency checker afterwards.
    fn naive_injections(sub: &Graph, field: &Graph) -> Vec<MatchingPolicy> {
        fn rec(
            n_s: usize,
            n_f: usize,
            cur: &mut Vec<(NodeId, NodeId)>,
            used: &mut Vec<bool>,
            out: &mut Vec<Vec<(NodeId, NodeId)>>,
        ) {
            let s = cur.len();
            if s == n_s {
                out.push(cur.clone());
                return;
            }
            for f in 0..n_f {
                if !used[f] {
                    used[f] = true;
                    cur.push((s as NodeId, f as NodeId));
                    rec(n_s, n_f, cur, used, out);
                    cur.pop();
                    used[f] = false;
                }
            }
        }
        let mut all = Vec::new();
        rec(
            sub.node_count(),
            field.node_count(),
            &mut Vec::new(),
            &mut vec![false; field.node_count()],
            &mut all,
        );
        let mut out: Vec<MatchingPolicy> = all
            .into_iter()
            .map(|pairs| MatchingPolicy::from_pairs(pairs).unwrap())
            .filter(|p| p.is_consistent(sub, field))
            .collect();
        out.sort_unstable();
        out
    }

    #[test]
    fn four_cycle_into_k4_matches_naive_filter() {
        let sub = graph(&[(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3), (0, 3, 0.4)]);
        let field = graph(&[
            (0, 1, 0.5),
            (0, 2, 0.5),
            (0, 3, 0.5),
            (1, 2, 0.5),
            (1, 3, 0.5),
            (2, 3, 0.5),
        ]);
        let got = exact_isomorphisms(&sub, &field, DEFAULT_NODE_BUDGET).unwrap();
        let want = naive_injections(&sub, &field);
        assert_eq!(got, want);
        assert_eq!(got.len(), 24);
    }

    #[test]
    fn solutions_closed_under_pattern_automorphisms() {
        // The 4-cycle's automorphism group (rotations and reflections).
        let sub = graph(&[(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3), (0, 3, 0.4)]);
        let autos: Vec<[NodeId; 4]> = vec![
            [0, 1, 2, 3],
            [1, 2, 3, 0],
            [2, 3, 0, 1],
            [3, 0, 1, 2],
            [3, 2, 1, 0],
            [2, 1, 0, 3],
            [1, 0, 3, 2],
            [0, 3, 2, 1],
        ];
        let field = graph(&[
            (0, 1, 0.5),
            (1, 2, 0.5),
            (2, 3, 0.5),
            (0, 3, 0.5),
            (0, 4, 0.5),
            (4, 5, 0.5),
        ]);
        let got = exact_isomorphisms(&sub, &field, DEFAULT_NODE_BUDGET).unwrap();
        assert!(!got.is_empty());
        for p in &got {
            for auto in &autos {
                let permuted = MatchingPolicy::from_pairs(
                    (0..4).map(|v| (v as NodeId, p.image(auto[v]).unwrap())).collect(),
                )
                .unwrap();
                assert!(
                    got.binary_search(&permuted).is_ok(),
                    "automorphism image missing from solution set"
                );
            }
        }
    }

    #[test]
    fn budget_guard() {
        let sub = graph(&[(0, 1, 0.5)]);
        let field = Graph::from_edges((0..15).map(|i| (i, i + 1, 0.5))).unwrap();
        assert!(matches!(
            exact_isomorphisms(&sub, &field, DEFAULT_NODE_BUDGET),
            Err(MatchError::BudgetExceeded { nodes: 16, budget: 14 })
        ));
        assert!(exact_isomorphisms(&sub, &field, 16).is_ok());
    }

    #[test]
    fn qap_zero_noise_copy_is_argmin_at_zero() {
        let sub = graph(&[(0, 1, 0.11), (0, 2, 0.23), (1, 2, 0.35), (2, 3, 0.47)]);
        let field = graph(&[
            (4, 5, 0.11),
            (4, 6, 0.23),
            (5, 6, 0.35),
            (6, 7, 0.47),
            (0, 4, 0.9),
            (0, 7, 0.8),
            (1, 0, 0.7),
        ]);
        let truth = MatchingPolicy::from_pairs(vec![(0, 4), (1, 5), (2, 6), (3, 7)]).unwrap();
        let res = qap_best(&sub, &field, DEFAULT_NODE_BUDGET).unwrap();
        let (best, obj) = res.best().unwrap();
        assert_eq!(best, &truth);
        assert_eq!(obj, 0.0);
        // Ranked ascending.
        for w in res.objectives.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn qap_argmin_no_worse_than_truth_under_noise() {
        let sub = graph(&[(0, 1, 0.11), (0, 2, 0.23), (1, 2, 0.35), (2, 3, 0.47)]);
        let field = graph(&[
            (4, 5, 0.115),
            (4, 6, 0.222),
            (5, 6, 0.358),
            (6, 7, 0.461),
            (0, 4, 0.9),
            (0, 7, 0.8),
            (1, 0, 0.7),
        ]);
        let truth = MatchingPolicy::from_pairs(vec![(0, 4), (1, 5), (2, 6), (3, 7)]).unwrap();
        let res = qap_best(&sub, &field, DEFAULT_NODE_BUDGET).unwrap();
        let truth_obj = qap_objective(&sub, &field, &truth);
        assert!(res.objectives[0] <= truth_obj);
    }

    /// Independent scorer: evaluate the quadratic form by scanning every
    /// ordered pattern-edge pair against the map, rather than per edge.
    fn quadratic_form_full(sub: &Graph, field: &Graph, p: &MatchingPolicy) -> f64 {
        let mut total = 0.0;
        for (e, ws) in sub.edges() {
            let (u, v) = e.endpoints();
            for (fu, fv) in [(u, v), (v, u)] {
                let wf = field
                    .weight(p.image(fu).unwrap(), p.image(fv).unwrap())
                    .unwrap();
                total += 0.5 * (ws - wf) * (ws - wf);
            }
        }
        total
    }

    #[test]
    fn qap_agrees_with_independent_scorer_on_seeded_instance() {
        let mut state = 0x00c0_ffeeu64;
        let mut step = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut edges = Vec::new();
        for u in 0..10u32 {
            for v in u + 1..10 {
                if step() % 2 == 0 {
                    edges.push((u, v, (step() % 1000) as f64 / 1000.0));
                }
            }
        }
        let field = Graph::from_edges(edges).unwrap();
        let sub = graph(&[(0, 1, 0.4), (1, 2, 0.6), (0, 2, 0.1), (2, 3, 0.9)]);
        let res = qap_best(&sub, &field, DEFAULT_NODE_BUDGET).unwrap();
        assert!(!res.policies.is_empty());
        for (p, &o) in res.policies.iter().zip(&res.objectives) {
            assert!((o - quadratic_form_full(&sub, &field, p)).abs() < 1e-12);
        }
    }
}

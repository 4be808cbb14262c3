//! Immutable weighted graphs with clique enumeration and hop-count path
//! queries.
//!
//! A [`Graph`] is frozen at construction: all queries are read-only, so a
//! graph can be shared freely across threads. Node ids are dense integers;
//! ids that never appear in an edge are valid isolated nodes.

use std::collections::VecDeque;

use crate::error::GraphError;

/// Dense node identifier.
pub type NodeId = u32;

/// Unordered node pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Edge(NodeId, NodeId);

impl Edge {
    /// Canonicalizes the pair; `u` and `v` must be distinct.
    pub fn new(u: NodeId, v: NodeId) -> Self {
        debug_assert_ne!(u, v);
        if u < v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.0, self.1)
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`; panics if `v` is not an endpoint.
    pub fn other(&self, v: NodeId) -> NodeId {
        if self.0 == v {
            self.1
        } else {
            debug_assert_eq!(self.1, v);
            self.0
        }
    }
}

/// Immutable undirected weighted graph.
///
/// Adjacency lists are sorted by neighbor id, which makes every query
/// deterministic and lets clique enumeration intersect lists in linear time.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<(NodeId, f64)>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from `(u, v, weight)` triples.
    ///
    /// The node count is one past the largest id mentioned, so ids may be
    /// sparse (unmentioned ids become isolated nodes). Each unordered pair
    /// may appear at most once; self-loops and non-finite weights are
    /// rejected.
    pub fn from_edges<I>(triples: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let triples: Vec<_> = triples.into_iter().collect();
        let mut n = 0usize;
        let mut seen = std::collections::HashSet::with_capacity(triples.len());
        for &(u, v, w) in &triples {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight(u, v));
            }
            if !seen.insert(Edge::new(u, v)) {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            n = n.max(u as usize + 1).max(v as usize + 1);
        }
        let mut adj: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        for &(u, v, w) in &triples {
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(nb, _)| nb);
        }
        let edge_count = triples.len();
        Ok(Graph { adj, edge_count })
    }

    /// Like [`Graph::from_edges`], but guarantees at least `n` nodes
    /// even when the trailing ids are isolated.
    pub fn from_edges_with_nodes<I>(n: usize, triples: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut g = Self::from_edges(triples)?;
        if g.adj.len() < n {
            g.adj.resize(n, Vec::new());
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        (v as usize) < self.adj.len()
    }

    /// Neighbors of `v` with edge weights, sorted by neighbor id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.weight(u, v).is_some()
    }

    /// Weight of edge `(u, v)`, or `None` when the edge is absent.
    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let list = self.adj.get(u as usize)?;
        list.binary_search_by_key(&v, |&(nb, _)| nb)
            .ok()
            .map(|i| list[i].1)
    }

    /// All edges as canonical pairs with weights, ordered by `(u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let u = u as NodeId;
            list.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (Edge::new(u, v), w))
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.adj.len() as NodeId
    }

    /// True when every node can reach every other node.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0 as NodeId]);
        seen[0] = true;
        let mut visited = 1;
        while let Some(v) = queue.pop_front() {
            for &(nb, _) in self.neighbors(v) {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    visited += 1;
                    queue.push_back(nb);
                }
            }
        }
        visited == n
    }
}

/// A clique on `p + 1` nodes, stored in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct Simplex {
    nodes: Vec<NodeId>,
}

impl Simplex {
    /// Wraps a node set after checking the clique property in `g`.
    pub fn new(g: &Graph, mut nodes: Vec<NodeId>) -> Option<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() < 2 {
            return None;
        }
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if !g.has_edge(nodes[i], nodes[j]) {
                    return None;
                }
            }
        }
        Some(Simplex { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Simplex order `p` (one less than the node count).
    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    pub fn is_disjoint(&self, other: &Simplex) -> bool {
        self.nodes.iter().all(|&v| !other.contains(v))
    }

    /// The `C(p+1, 2)` internal edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let nodes = &self.nodes;
        (0..nodes.len()).flat_map(move |i| {
            (i + 1..nodes.len()).map(move |j| Edge::new(nodes[i], nodes[j]))
        })
    }
}

/// A simple path given as its node sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    pub(crate) fn from_nodes(nodes: Vec<NodeId>) -> Self {
        debug_assert!(!nodes.is_empty());
        Path { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of edges on the path.
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes.windows(2).map(|w| Edge::new(w[0], w[1]))
    }
}

/// Emitted-path cap for [`paths_with_hops`]; dense graphs can hold
/// factorially many simple paths.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Lists every `(p+1)`-clique of `g` exactly once.
///
/// Nodes are ranked by `(degree, id)` and each edge oriented toward the
/// higher rank, so a clique is discovered only from its lowest-ranked
/// member; candidates shrink by sorted-list intersection. Output is in
/// lexicographic order of the sorted node sets.
pub fn enumerate_simplexes(g: &Graph, p: usize) -> Vec<Simplex> {
    assert!(p >= 1, "simplex order must be at least 1");
    let n = g.node_count();
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.sort_unstable_by_key(|&v| (g.degree(v), v));
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v as usize] = r;
    }
    // Forward neighbors by rank, kept sorted by node id.
    let fwd: Vec<Vec<NodeId>> = (0..n)
        .map(|v| {
            g.neighbors(v as NodeId)
                .iter()
                .map(|&(nb, _)| nb)
                .filter(|&nb| rank[nb as usize] > rank[v])
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut clique = Vec::with_capacity(p + 1);
    for v in 0..n as NodeId {
        clique.push(v);
        extend_cliques(&fwd, &mut clique, &fwd[v as usize], p + 1, &mut out);
        clique.pop();
    }
    for s in &mut out {
        s.sort_unstable();
    }
    out.sort_unstable();
    out.into_iter().map(|nodes| Simplex { nodes }).collect()
}

fn extend_cliques(
    fwd: &[Vec<NodeId>],
    clique: &mut Vec<NodeId>,
    cands: &[NodeId],
    size: usize,
    out: &mut Vec<Vec<NodeId>>,
) {
    if clique.len() == size {
        out.push(clique.clone());
        return;
    }
    if clique.len() + cands.len() < size {
        return;
    }
    for &u in cands {
        // fwd[u] holds only higher-ranked nodes, so intersecting against
        // the full candidate list still yields each clique exactly once,
        // discovered in increasing rank order.
        let next: Vec<NodeId> = intersect_sorted(cands, &fwd[u as usize]);
        clique.push(u);
        extend_cliques(fwd, clique, &next, size, out);
        clique.pop();
    }
}

fn intersect_sorted(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Minimum-hop simple path from any source to any target.
///
/// Among all minimum-hop paths the lexicographically smallest node
/// sequence is returned, which makes the result independent of input
/// ordering.
pub fn shortest_hop_path(
    g: &Graph,
    sources: &[NodeId],
    targets: &[NodeId],
) -> Result<Path, GraphError> {
    if sources.is_empty() || targets.is_empty() {
        return Err(GraphError::BadEndpoints);
    }
    for &v in sources.iter().chain(targets) {
        if !g.contains_node(v) {
            return Err(GraphError::NodeOutOfRange(v));
        }
    }
    if sources.iter().any(|s| targets.contains(s)) {
        return Err(GraphError::BadEndpoints);
    }

    // Hop distance to the nearest target, by multi-source BFS.
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    for &t in targets {
        if dist[t as usize] == usize::MAX {
            dist[t as usize] = 0;
            queue.push_back(t);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &(nb, _) in g.neighbors(v) {
            if dist[nb as usize] == usize::MAX {
                dist[nb as usize] = dist[v as usize] + 1;
                queue.push_back(nb);
            }
        }
    }

    let total = sources
        .iter()
        .map(|&s| dist[s as usize])
        .min()
        .filter(|&d| d != usize::MAX)
        .ok_or(GraphError::NoPath)?;

    // Greedy descent along the distance field picks the lexicographically
    // smallest minimum-hop sequence: any node at distance d from the
    // targets extends to some neighbor at distance d - 1.
    let mut cur = *sources
        .iter()
        .filter(|&&s| dist[s as usize] == total)
        .min()
        .unwrap();
    let mut nodes = vec![cur];
    for step in 1..=total {
        let want = total - step;
        cur = g
            .neighbors(cur)
            .iter()
            .map(|&(nb, _)| nb)
            .find(|&nb| dist[nb as usize] == want)
            .expect("BFS distance field admits a descent");
        nodes.push(cur);
    }
    Ok(Path::from_nodes(nodes))
}

/// All simple paths from `start` to `end` with exactly `hops` edges, in
/// lexicographic order, using [`DEFAULT_PATH_CAP`].
pub fn paths_with_hops(
    g: &Graph,
    start: NodeId,
    end: NodeId,
    hops: usize,
) -> Result<Vec<Path>, GraphError> {
    paths_with_hops_capped(g, start, end, hops, DEFAULT_PATH_CAP)
}

/// [`paths_with_hops`] with an explicit cap on emitted paths.
pub fn paths_with_hops_capped(
    g: &Graph,
    start: NodeId,
    end: NodeId,
    hops: usize,
    cap: usize,
) -> Result<Vec<Path>, GraphError> {
    for v in [start, end] {
        if !g.contains_node(v) {
            return Err(GraphError::NodeOutOfRange(v));
        }
    }
    if hops == 0 {
        return Ok(if start == end {
            vec![Path::from_nodes(vec![start])]
        } else {
            Vec::new()
        });
    }
    if start == end {
        return Ok(Vec::new());
    }

    // Hop distances to `end` prune branches that cannot finish in budget.
    let mut dist = vec![usize::MAX; g.node_count()];
    dist[end as usize] = 0;
    let mut queue = VecDeque::from([end]);
    while let Some(v) = queue.pop_front() {
        for &(nb, _) in g.neighbors(v) {
            if dist[nb as usize] == usize::MAX {
                dist[nb as usize] = dist[v as usize] + 1;
                queue.push_back(nb);
            }
        }
    }

    let mut out = Vec::new();
    let mut stack = vec![start];
    let mut visited = vec![false; g.node_count()];
    visited[start as usize] = true;
    path_dfs(g, end, hops, cap, &dist, &mut stack, &mut visited, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn path_dfs(
    g: &Graph,
    end: NodeId,
    hops: usize,
    cap: usize,
    dist: &[usize],
    stack: &mut Vec<NodeId>,
    visited: &mut [bool],
    out: &mut Vec<Path>,
) -> Result<(), GraphError> {
    let cur = *stack.last().unwrap();
    let remaining = hops - (stack.len() - 1);
    if remaining == 0 {
        if cur == end {
            if out.len() == cap {
                return Err(GraphError::PathLimit(cap));
            }
            out.push(Path::from_nodes(stack.clone()));
        }
        return Ok(());
    }
    for &(nb, _) in g.neighbors(cur) {
        if visited[nb as usize] || dist[nb as usize] > remaining - 1 {
            continue;
        }
        visited[nb as usize] = true;
        stack.push(nb);
        path_dfs(g, end, hops, cap, dist, stack, visited, out)?;
        stack.pop();
        visited[nb as usize] = false;
    }
    Ok(())
}

/// All simple paths of exactly `hops` edges leaving `start`, never
/// touching a `forbidden` node (`start` itself may be listed), in
/// lexicographic order and capped at `cap` paths.
pub fn paths_from(
    g: &Graph,
    start: NodeId,
    hops: usize,
    forbidden: &[NodeId],
    cap: usize,
) -> Result<Vec<Path>, GraphError> {
    if !g.contains_node(start) {
        return Err(GraphError::NodeOutOfRange(start));
    }
    if hops == 0 {
        return Ok(vec![Path::from_nodes(vec![start])]);
    }
    let mut blocked = vec![false; g.node_count()];
    for &v in forbidden {
        if !g.contains_node(v) {
            return Err(GraphError::NodeOutOfRange(v));
        }
        blocked[v as usize] = true;
    }
    blocked[start as usize] = true;
    let mut out = Vec::new();
    let mut stack = vec![start];
    walk_dfs(g, hops, cap, &mut stack, &mut blocked, &mut out)?;
    Ok(out)
}

/// Number of `hops`-edge walks from `start` ending at each node, with
/// `forbidden` nodes and `start` itself never re-entered, saturating
/// at `u64::MAX`. Such walks may still repeat other nodes, so each
/// entry bounds the matching simple-path count from above; callers use
/// it to skip path enumerations that would blow past a cap. Out-of-range
/// `start` yields all zeros.
pub fn count_walks(g: &Graph, start: NodeId, hops: usize, forbidden: &[NodeId]) -> Vec<u64> {
    let n = g.node_count();
    let mut cur = vec![0u64; n];
    if !g.contains_node(start) {
        return cur;
    }
    let mut blocked = vec![false; n];
    for &v in forbidden {
        if g.contains_node(v) {
            blocked[v as usize] = true;
        }
    }
    if blocked[start as usize] {
        return cur;
    }
    cur[start as usize] = 1;
    blocked[start as usize] = true;
    for _ in 0..hops {
        let mut next = vec![0u64; n];
        for v in 0..n {
            if cur[v] == 0 {
                continue;
            }
            for &(nb, _) in g.neighbors(v as NodeId) {
                if !blocked[nb as usize] {
                    next[nb as usize] = next[nb as usize].saturating_add(cur[v]);
                }
            }
        }
        cur = next;
    }
    cur
}

fn walk_dfs(
    g: &Graph,
    hops: usize,
    cap: usize,
    stack: &mut Vec<NodeId>,
    blocked: &mut [bool],
    out: &mut Vec<Path>,
) -> Result<(), GraphError> {
    if stack.len() == hops + 1 {
        if out.len() == cap {
            return Err(GraphError::PathLimit(cap));
        }
        out.push(Path::from_nodes(stack.clone()));
        return Ok(());
    }
    let cur = *stack.last().unwrap();
    for &(nb, _) in g.neighbors(cur) {
        if blocked[nb as usize] {
            continue;
        }
        blocked[nb as usize] = true;
        stack.push(nb);
        walk_dfs(g, hops, cap, stack, blocked, out)?;
        stack.pop();
        blocked[nb as usize] = false;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: u32) -> Graph {
        let mut triples = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                triples.push((u, v, 1.0));
            }
        }
        Graph::from_edges(triples).unwrap()
    }

    /// Subgraph shaped like the worked example used throughout the docs:
    /// triangles {3,8,9} and {6,11,12} joined through node 13, plus
    /// surrounding chaff.
    fn two_triangle_subgraph() -> Graph {
        Graph::from_edges([
            (3, 8, 0.4),
            (8, 9, 0.7),
            (3, 9, 0.6),
            (6, 11, 0.5),
            (11, 12, 0.8),
            (6, 12, 0.3),
            (8, 13, 0.2),
            (13, 12, 0.9),
            (0, 3, 0.5),
            (0, 1, 0.4),
            (1, 2, 0.3),
            (2, 9, 0.8),
            (4, 9, 0.6),
            (4, 5, 0.2),
            (5, 6, 0.7),
            (7, 8, 0.3),
            (7, 10, 0.5),
            (10, 13, 0.4),
        ])
        .unwrap()
    }

    #[test]
    fn walk_counts_bound_path_enumeration() {
        // Path 0-1-2-3: one 2-hop walk from 0, ending at node 2.
        let g = Graph::from_edges([(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3)]).unwrap();
        assert_eq!(count_walks(&g, 0, 2, &[]), vec![0, 0, 1, 0]);
        // K5: walk counts dominate simple-path counts for every length.
        let g = k(5);
        for hops in 0..=4 {
            let counts = count_walks(&g, 0, hops, &[]);
            for end in 1..5 as NodeId {
                let paths = paths_with_hops(&g, 0, end, hops).unwrap().len() as u64;
                assert!(counts[end as usize] >= paths);
            }
            let total: u64 = counts.iter().sum();
            let all = paths_from(&g, 0, hops, &[], DEFAULT_PATH_CAP).unwrap().len() as u64;
            assert!(total >= all);
        }
        // Forbidding node 1 leaves only the detour 0-2-3.
        let g = Graph::from_edges([(0, 1, 0.1), (1, 3, 0.2), (0, 2, 0.3), (2, 3, 0.4)]).unwrap();
        assert_eq!(count_walks(&g, 0, 2, &[1]), vec![0, 0, 0, 1]);
    }

    #[test]
    fn builds_single_edge() {
        let g = Graph::from_edges([(0, 1, 0.5)]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), Some(0.5));
        assert_eq!(g.weight(1, 0), Some(0.5));
    }

    #[test]
    fn builds_empty_graph() {
        let g = Graph::from_edges([]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn isolated_ids_are_nodes() {
        let g = Graph::from_edges([(0, 5, 1.25)]).unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn rejects_duplicate_pair_under_symmetry() {
        let err = Graph::from_edges([(0, 1, 0.5), (1, 0, 0.5)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(0, 1));
    }

    #[test]
    fn rejects_self_loop_and_nonfinite() {
        assert_eq!(
            Graph::from_edges([(2, 2, 1.0)]).unwrap_err(),
            GraphError::SelfLoop(2)
        );
        assert_eq!(
            Graph::from_edges([(0, 1, f64::NAN)]).unwrap_err(),
            GraphError::NonFiniteWeight(0, 1)
        );
    }

    #[test]
    fn neighbor_lookup_is_symmetric_and_sorted() {
        let g = two_triangle_subgraph();
        for v in g.nodes() {
            let nbs = g.neighbors(v);
            assert!(nbs.windows(2).all(|w| w[0].0 < w[1].0));
            for &(nb, w) in nbs {
                assert_eq!(g.weight(nb, v), Some(w));
            }
        }
    }

    #[test]
    fn triangle_is_single_2_simplex() {
        let g = k(3);
        let s = enumerate_simplexes(&g, 2);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].nodes(), &[0, 1, 2]);
    }

    #[test]
    fn k4_clique_counts() {
        let g = k(4);
        assert_eq!(enumerate_simplexes(&g, 2).len(), 4);
        assert_eq!(enumerate_simplexes(&g, 3).len(), 1);
        assert_eq!(enumerate_simplexes(&g, 1).len(), 6);
    }

    /// Independent check: every (p+1)-subset tested for the clique property.
    fn naive_cliques(g: &Graph, p: usize) -> Vec<Vec<NodeId>> {
        let n = g.node_count() as NodeId;
        let mut out = Vec::new();
        let mut pick = Vec::new();
        fn rec(
            g: &Graph,
            n: NodeId,
            from: NodeId,
            size: usize,
            pick: &mut Vec<NodeId>,
            out: &mut Vec<Vec<NodeId>>,
        ) {
            if pick.len() == size {
                let clique = pick
                    .iter()
                    .enumerate()
                    .all(|(i, &u)| pick[i + 1..].iter().all(|&v| g.has_edge(u, v)));
                if clique {
                    out.push(pick.clone());
                }
                return;
            }
            for v in from..n {
                pick.push(v);
                rec(g, n, v + 1, size, pick, out);
                pick.pop();
            }
        }
        rec(g, n, 0, p + 1, &mut pick, &mut out);
        out
    }

    #[test]
    fn clique_listing_matches_naive_filter() {
        let g = two_triangle_subgraph();
        for p in 1..=3 {
            let fast: Vec<_> = enumerate_simplexes(&g, p)
                .into_iter()
                .map(|s| s.nodes().to_vec())
                .collect();
            assert_eq!(fast, naive_cliques(&g, p), "p = {p}");
        }
    }

    #[test]
    fn clique_listing_matches_naive_on_seeded_er() {
        // Keep this module self-contained: a tiny LCG drives edge choice.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..5 {
            let mut triples = Vec::new();
            for u in 0..28u32 {
                for v in u + 1..28 {
                    if next() % 100 < 18 {
                        triples.push((u, v, 1.0));
                    }
                }
            }
            let g = Graph::from_edges(triples).unwrap();
            for p in 1..=3 {
                let fast: Vec<_> = enumerate_simplexes(&g, p)
                    .into_iter()
                    .map(|s| s.nodes().to_vec())
                    .collect();
                assert_eq!(fast, naive_cliques(&g, p));
            }
        }
    }

    #[test]
    fn chain_shortest_path() {
        let g = Graph::from_edges([(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let p = shortest_hop_path(&g, &[0], &[2]).unwrap();
        assert_eq!(p.nodes(), &[0, 1, 2]);
        assert_eq!(p.hops(), 2);
    }

    #[test]
    fn two_triangle_connector_runs_through_13() {
        let g = two_triangle_subgraph();
        let p = shortest_hop_path(&g, &[3, 8, 9], &[6, 11, 12]).unwrap();
        assert_eq!(p.nodes(), &[8, 13, 12]);
    }

    #[test]
    fn disconnected_pair_is_no_path() {
        let g = Graph::from_edges([(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(
            shortest_hop_path(&g, &[0], &[3]).unwrap_err(),
            GraphError::NoPath
        );
    }

    #[test]
    fn overlapping_endpoint_sets_rejected() {
        let g = k(3);
        assert_eq!(
            shortest_hop_path(&g, &[0, 1], &[1, 2]).unwrap_err(),
            GraphError::BadEndpoints
        );
    }

    #[test]
    fn shortest_path_breaks_ties_lexicographically() {
        // Two 2-hop routes 0-1-4 and 0-2-4; the smaller middle node wins.
        let g = Graph::from_edges([(0, 1, 1.0), (1, 4, 1.0), (0, 2, 1.0), (2, 4, 1.0)]).unwrap();
        let p = shortest_hop_path(&g, &[0], &[4]).unwrap();
        assert_eq!(p.nodes(), &[0, 1, 4]);
    }

    #[test]
    fn four_cycle_opposite_corners() {
        let g = Graph::from_edges([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let paths = paths_with_hops(&g, 0, 2, 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].nodes(), &[0, 1, 2]);
        assert_eq!(paths[1].nodes(), &[0, 3, 2]);
    }

    #[test]
    fn zero_hop_paths() {
        let g = k(3);
        let same = paths_with_hops(&g, 1, 1, 0).unwrap();
        assert_eq!(same.len(), 1);
        assert_eq!(same[0].nodes(), &[1]);
        assert!(paths_with_hops(&g, 0, 1, 0).unwrap().is_empty());
    }

    /// Exhaustive recursive enumeration without pruning.
    fn naive_paths(g: &Graph, start: NodeId, end: NodeId, hops: usize) -> Vec<Vec<NodeId>> {
        fn rec(
            g: &Graph,
            end: NodeId,
            hops: usize,
            stack: &mut Vec<NodeId>,
            out: &mut Vec<Vec<NodeId>>,
        ) {
            let cur = *stack.last().unwrap();
            if stack.len() == hops + 1 {
                if cur == end {
                    out.push(stack.clone());
                }
                return;
            }
            for &(nb, _) in g.neighbors(cur) {
                if !stack.contains(&nb) {
                    stack.push(nb);
                    rec(g, end, hops, stack, out);
                    stack.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(g, end, hops, &mut vec![start], &mut out);
        out
    }

    #[test]
    fn k4_three_hop_paths_match_naive_enumeration() {
        let g = k(4);
        for (s, t) in [(0u32, 1u32), (0, 3), (2, 3)] {
            let fast: Vec<_> = paths_with_hops(&g, s, t, 3)
                .unwrap()
                .into_iter()
                .map(|p| p.nodes().to_vec())
                .collect();
            assert_eq!(fast, naive_paths(&g, s, t, 3));
        }
    }

    #[test]
    fn path_cap_is_enforced() {
        let g = k(6);
        let err = paths_with_hops_capped(&g, 0, 1, 4, 3).unwrap_err();
        assert_eq!(err, GraphError::PathLimit(3));
    }

    #[test]
    fn no_shorter_path_exists_than_bfs_answer() {
        let g = two_triangle_subgraph();
        let best = shortest_hop_path(&g, &[3], &[12]).unwrap();
        for h in 0..best.hops() {
            assert!(paths_with_hops(&g, 3, 12, h).unwrap().is_empty());
        }
    }

    #[test]
    fn anchored_walks_respect_forbidden_set() {
        let g = k(4);
        let all: Vec<_> = paths_from(&g, 0, 2, &[], usize::MAX)
            .unwrap()
            .into_iter()
            .map(|p| p.nodes().to_vec())
            .collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert!(all.windows(2).all(|w| w[0] < w[1]), "lexicographic order");
        let restricted = paths_from(&g, 0, 2, &[2], usize::MAX).unwrap();
        assert_eq!(restricted.len(), 2);
        assert!(restricted
            .iter()
            .all(|p| !p.nodes().contains(&2)));
        // Zero hops: the trivial path.
        let trivial = paths_from(&g, 3, 0, &[], usize::MAX).unwrap();
        assert_eq!(trivial[0].nodes(), &[3]);
        // Cap error surfaces.
        assert_eq!(
            paths_from(&g, 0, 3, &[], 2).unwrap_err(),
            GraphError::PathLimit(2)
        );
    }
}

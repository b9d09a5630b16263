//! Causal graphs, m-connectivity sets and sign-pattern causal matrices.

use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CkcError, Result};

/// Exact longest-simple-path search is exponential; graphs are capped at this size.
pub const MAX_EXACT_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
    pub weight: f64,
}

/// Directed graph over `node_count` nodes without self-loops or repeated edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl CausalGraph {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &edges {
            let reason = if e.parent >= node_count || e.child >= node_count {
                Some("node index out of range")
            } else if e.parent == e.child {
                Some("self-loop")
            } else if !seen.insert((e.parent, e.child)) {
                Some("duplicate edge")
            } else if !e.weight.is_finite() {
                Some("non-finite weight")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(CkcError::InvalidEdge {
                    parent: e.parent,
                    child: e.child,
                    reason,
                });
            }
        }
        Ok(Self { node_count, edges })
    }

    pub fn empty(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
        }
    }

    /// Unit-weight graph from `(parent, child)` pairs.
    pub fn from_pairs(node_count: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            node_count,
            pairs
                .iter()
                .map(|&(parent, child)| Edge {
                    parent,
                    child,
                    weight: 1.0,
                })
                .collect(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn parents(&self, child: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.child == child)
    }

    /// Kahn's algorithm, smallest available node first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indegree = vec![0usize; self.node_count];
        for e in &self.edges {
            indegree[e.child] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..self.node_count).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.node_count);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for e in self.edges.iter().filter(|e| e.parent == v) {
                indegree[e.child] -= 1;
                if indegree[e.child] == 0 {
                    ready.insert(e.child);
                }
            }
        }
        if order.len() != self.node_count {
            return Err(CkcError::CyclicGraph);
        }
        Ok(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    fn neighbour_masks(&self) -> Vec<u32> {
        let mut adj = vec![0u32; self.node_count];
        for e in &self.edges {
            adj[e.parent] |= 1 << e.child;
            adj[e.child] |= 1 << e.parent;
        }
        adj
    }

    /// Longest simple path length (in edges) between every pair on the undirected
    /// skeleton; `None` for disconnected pairs and on the diagonal.
    pub fn longest_path_lengths(&self) -> Result<Array2<Option<usize>>> {
        let n = self.node_count;
        if n > MAX_EXACT_NODES {
            return Err(CkcError::GraphTooLarge {
                nodes: n,
                limit: MAX_EXACT_NODES,
            });
        }
        let adj = self.neighbour_masks();
        let mut longest = Array2::<Option<usize>>::from_elem((n, n), None);
        // ends[mask] = set of nodes v such that some simple path from `start`
        // visits exactly `mask` and ends at v.
        let mut ends = vec![0u32; 1 << n];
        for start in 0..n {
            ends.iter_mut().for_each(|e| *e = 0);
            ends[1 << start] = 1 << start;
            for mask in 0..(1u32 << n) {
                let mut frontier = ends[mask as usize];
                if frontier == 0 {
                    continue;
                }
                let edges_used = mask.count_ones() as usize - 1;
                while frontier != 0 {
                    let v = frontier.trailing_zeros() as usize;
                    frontier &= frontier - 1;
                    if v != start {
                        let slot = &mut longest[[start, v]];
                        *slot = Some(slot.map_or(edges_used, |l| l.max(edges_used)));
                    }
                    let mut next = adj[v] & !mask;
                    while next != 0 {
                        let w = next.trailing_zeros();
                        next &= next - 1;
                        ends[(mask | (1 << w)) as usize] |= 1 << w;
                    }
                }
            }
        }
        Ok(longest)
    }
}

/// Unordered pairs `(a, b)`, `a < b`, whose longest simple path has exactly `m_len` edges.
pub fn m_connectivity(graph: &CausalGraph, m_len: usize) -> Result<BTreeSet<(usize, usize)>> {
    if m_len == 0 {
        return Err(CkcError::InvalidArgument("m_len must be at least 1".into()));
    }
    let longest = graph.longest_path_lengths()?;
    let n = graph.node_count();
    Ok((0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .filter(|&(a, b)| longest[[a, b]] == Some(m_len))
        .collect())
}

/// Equal m-connectivity sets for every `m_len` in `1..node_count`.
pub fn graphs_equivalent(graph: &CausalGraph, other: &CausalGraph) -> Result<bool> {
    if graph.node_count() != other.node_count() {
        return Err(CkcError::NodeCountMismatch {
            left: graph.node_count(),
            right: other.node_count(),
        });
    }
    // Identical longest-path tables are exactly identical m-connectivity families.
    Ok(graph.longest_path_lengths()? == other.longest_path_lengths()?)
}

/// A matrix with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalMatrix {
    data: Array2<i8>,
}

impl CausalMatrix {
    pub fn data(&self) -> &Array2<i8> {
        &self.data
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[[row, col]]
    }

    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        self.data.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

/// `+1` where `Y ≥ 0`, `-1` where `Y < 0`.
pub fn sign_matrix(y: &Array2<f64>) -> CausalMatrix {
    CausalMatrix {
        data: y.mapv(|v| if v >= 0.0 { 1 } else { -1 }),
    }
}

pub fn matrices_equivalent(y: &Array2<f64>, other: &Array2<f64>) -> Result<bool> {
    if y.dim() != other.dim() {
        return Err(CkcError::ShapeMismatch {
            left: y.dim(),
            right: other.dim(),
        });
    }
    Ok(sign_matrix(y) == sign_matrix(other))
}

/// `+1` at pairs of the m-connectivity set (both orientations), `-1` elsewhere
/// including the diagonal.
pub fn indicator_from_graph(graph: &CausalGraph, m_len: usize) -> Result<CausalMatrix> {
    let pairs = m_connectivity(graph, m_len)?;
    let n = graph.node_count();
    let mut data = Array2::<i8>::from_elem((n, n), -1);
    for (a, b) in pairs {
        data[[a, b]] = 1;
        data[[b, a]] = 1;
    }
    Ok(CausalMatrix { data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    /// Graph over 1-based node names, as the worked examples use.
    fn named_chain(names: &[usize]) -> CausalGraph {
        let pairs: Vec<(usize, usize)> = names.windows(2).map(|w| (w[0] - 1, w[1] - 1)).collect();
        CausalGraph::from_pairs(names.len(), &pairs).unwrap()
    }

    fn named(pairs: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        pairs.iter().map(|&(a, b)| (a.min(b) - 1, a.max(b) - 1)).collect()
    }

    #[test]
    fn chain_2_1_3_4_sets() {
        let g = named_chain(&[2, 1, 3, 4]);
        assert_eq!(m_connectivity(&g, 1).unwrap(), named(&[(1, 2), (1, 3), (3, 4)]));
        assert_eq!(m_connectivity(&g, 2).unwrap(), named(&[(1, 4), (2, 3)]));
        assert_eq!(m_connectivity(&g, 3).unwrap(), named(&[(2, 4)]));
    }

    #[test]
    fn chain_1_2_4_3_sets() {
        let g = named_chain(&[1, 2, 4, 3]);
        assert_eq!(m_connectivity(&g, 1).unwrap(), named(&[(1, 2), (2, 4), (3, 4)]));
        assert_eq!(m_connectivity(&g, 2).unwrap(), named(&[(1, 4), (2, 3)]));
        assert_eq!(m_connectivity(&g, 3).unwrap(), named(&[(1, 3)]));
    }

    #[test]
    fn chain_equivalence() {
        let g = named_chain(&[2, 1, 3, 4]);
        let h = named_chain(&[1, 2, 4, 3]);
        assert!(graphs_equivalent(&g, &g).unwrap());
        assert!(!graphs_equivalent(&g, &h).unwrap());
        let same_edges = CausalGraph::from_pairs(4, &[(1, 0), (0, 2), (2, 3)]).unwrap();
        assert!(graphs_equivalent(&g, &same_edges).unwrap());
        assert_eq!(graphs_equivalent(&g, &CausalGraph::empty(5)).unwrap_err().name(), "NodeCountMismatch");
    }

    #[test]
    fn longest_path_beats_shortest_path() {
        // Triangle plus tail: 0-1, 1-2, 0-2, 2-3. Longest 0..2 path goes through 1.
        let g = CausalGraph::from_pairs(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let l = g.longest_path_lengths().unwrap();
        assert_eq!(l[[0, 2]], Some(2));
        assert_eq!(l[[0, 1]], Some(2));
        assert_eq!(l[[0, 3]], Some(3));
        assert_eq!(l[[0, 0]], None);
    }

    #[test]
    fn too_large_graph() {
        let g = CausalGraph::empty(13);
        assert_eq!(m_connectivity(&g, 1).unwrap_err().name(), "GraphTooLarge");
    }

    #[test]
    fn complete_graph_at_the_limit() {
        let pairs: Vec<(usize, usize)> = (0..12).flat_map(|a| ((a + 1)..12).map(move |b| (a, b))).collect();
        let g = CausalGraph::from_pairs(12, &pairs).unwrap();
        assert_eq!(m_connectivity(&g, 11).unwrap().len(), 66);
    }

    #[test]
    fn edge_validation_and_topology() {
        assert_eq!(CausalGraph::from_pairs(3, &[(0, 3)]).unwrap_err().name(), "InvalidEdge");
        assert_eq!(CausalGraph::from_pairs(3, &[(1, 1)]).unwrap_err().name(), "InvalidEdge");
        assert_eq!(CausalGraph::from_pairs(3, &[(0, 1), (0, 1)]).unwrap_err().name(), "InvalidEdge");
        let cyclic = CausalGraph::from_pairs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(cyclic.topological_order().unwrap_err(), CkcError::CyclicGraph);
        let dag = CausalGraph::from_pairs(3, &[(2, 0), (0, 1)]).unwrap();
        assert_eq!(dag.topological_order().unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn sign_matrix_examples() {
        let expected = array![[1i8, 1], [-1, 1]];
        let y = array![[0.0, 0.8], [-0.2, 0.0]];
        let y2 = array![[0.0, 0.2], [-0.5, 0.0]];
        assert_eq!(sign_matrix(&y).data(), &expected);
        assert_eq!(sign_matrix(&y2).data(), &expected);
        assert!(matrices_equivalent(&y, &y2).unwrap());
        assert!(sign_matrix(&Array2::zeros((3, 3))).data().iter().all(|&v| v == 1));
        assert_eq!(
            matrices_equivalent(&y, &Array2::zeros((3, 2))).unwrap_err().name(),
            "ShapeMismatch"
        );
    }

    #[test]
    fn negation_and_scaling() {
        let y = array![[1.0, -2.0], [3.0, -0.5]];
        assert!(!matrices_equivalent(&y, &(-&y)).unwrap());
        assert!(matrices_equivalent(&y, &(&y * 2.0)).unwrap());
    }

    #[test]
    fn indicator_examples() {
        let g = named_chain(&[2, 1, 3, 4]);
        let ind = indicator_from_graph(&g, 1).unwrap();
        let plus: BTreeSet<(usize, usize)> = (0..4)
            .flat_map(|a| ((a + 1)..4).map(move |b| (a, b)))
            .filter(|&(a, b)| ind.get(a, b) == 1)
            .collect();
        assert_eq!(plus, named(&[(1, 2), (1, 3), (3, 4)]));
        assert_eq!(ind.data(), &ind.data().t().to_owned());
        for v in 0..4 {
            assert_eq!(ind.get(v, v), -1);
        }
        let empty = indicator_from_graph(&CausalGraph::empty(4), 1).unwrap();
        assert!(empty.data().iter().all(|&v| v == -1));
    }

    fn arb_graph() -> impl Strategy<Value = CausalGraph> {
        (2usize..=8).prop_flat_map(|n| {
            prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let pairs: Vec<(usize, usize)> = (0..n)
                    .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
                    .zip(bits)
                    .filter_map(|(p, keep)| keep.then_some(p))
                    .collect();
                CausalGraph::from_pairs(n, &pairs).unwrap()
            })
        })
    }

    fn connected(graph: &CausalGraph, a: usize, b: usize) -> bool {
        let mut seen = vec![false; graph.node_count()];
        let mut stack = vec![a];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            for e in graph.edges() {
                if e.parent == v {
                    stack.push(e.child);
                }
                if e.child == v {
                    stack.push(e.parent);
                }
            }
        }
        seen[b]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sets_partition_connected_pairs(g in arb_graph()) {
            let n = g.node_count();
            let mut union = BTreeSet::new();
            let mut total = 0;
            for m_len in 1..n {
                let set = m_connectivity(&g, m_len).unwrap();
                total += set.len();
                union.extend(set);
            }
            prop_assert_eq!(total, union.len());
            let expected: BTreeSet<(usize, usize)> = (0..n)
                .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
                .filter(|&(a, b)| connected(&g, a, b))
                .collect();
            prop_assert_eq!(union, expected);
        }

        #[test]
        fn sign_invariant_under_positive_scaling(values in prop::collection::vec(-5.0f64..5.0, 9), c in 0.01f64..100.0) {
            let y = Array2::from_shape_vec((3, 3), values).unwrap();
            prop_assert_eq!(sign_matrix(&y), sign_matrix(&(&y * c)));
        }
    }
}

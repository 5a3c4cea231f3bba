//! Weighted bipartite graph of a band system and the networks built on it.
//!
//! Vertex ids reuse basis indices. In a [`BNetwork`] the source is `0` and
//! the sink is `n_max + 1`; merging them yields a [`RootedNetwork`] whose
//! root is `0`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;


use crate::error::{Error, Result};
use crate::flow::PseudoFlow;
use crate::scalar::Scalar;
use crate::system::{BandSystem, RowSource, Side};

pub type VertexId = usize;

/// Adjacency with positive edge lengths.
pub trait Neighbors<S> {
    fn neighbors(&self, v: VertexId) -> Result<Vec<(VertexId, S)>>;
}

/// Undirected network with a length on each edge.
pub trait Network<S>: Neighbors<S> {
    fn length(&self, u: VertexId, v: VertexId) -> Option<S>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph<S> {
    left: BTreeSet<VertexId>,
    right: BTreeSet<VertexId>,
    /// `lhat(l, r)` keyed by `(l, r)` with `l` left and `r` right.
    lhat: BTreeMap<(VertexId, VertexId), S>,
    adjacency: BTreeMap<VertexId, BTreeSet<VertexId>>,
    index_bound: usize,
}

impl<S: Scalar> BipartiteGraph<S> {
    /// `edges` holds `(l, r, lhat(l, r))`. `index_bound` must dominate every
    /// vertex id (it fixes the sink id of the network).
    pub fn new(
        left: BTreeSet<VertexId>,
        right: BTreeSet<VertexId>,
        edges: Vec<(VertexId, VertexId, S)>,
        index_bound: usize,
    ) -> Result<Self> {
        if let Some(v) = left.intersection(&right).next() {
            return Err(Error::MalformedGraph(format!("vertex {v} is in both parts")));
        }
        if let Some(&v) = left.iter().chain(right.iter()).find(|&&v| v == 0 || v > index_bound) {
            return Err(Error::MalformedGraph(format!("vertex id {v} outside 1..={index_bound}")));
        }
        let mut lhat = BTreeMap::new();
        let mut adjacency: BTreeMap<VertexId, BTreeSet<VertexId>> =
            left.iter().chain(right.iter()).map(|&v| (v, BTreeSet::new())).collect();
        for (l, r, w) in edges {
            if !left.contains(&l) || !right.contains(&r) {
                return Err(Error::MalformedGraph(format!("edge ({l}, {r}) must join a left and a right vertex")));
            }
            if w.is_zero() {
                return Err(Error::MalformedGraph(format!("edge ({l}, {r}) has zero weight")));
            }
            if lhat.insert((l, r), w).is_some() {
                return Err(Error::MalformedGraph(format!("duplicate edge ({l}, {r})")));
            }
            adjacency.entry(l).or_default().insert(r);
            adjacency.entry(r).or_default().insert(l);
        }
        Ok(Self { left, right, lhat, adjacency, index_bound })
    }

    pub fn left(&self) -> &BTreeSet<VertexId> {
        &self.left
    }

    pub fn right(&self) -> &BTreeSet<VertexId> {
        &self.right
    }

    pub fn index_bound(&self) -> usize {
        self.index_bound
    }

    pub fn side(&self, v: VertexId) -> Option<Side> {
        if self.left.contains(&v) {
            Some(Side::Left)
        } else if self.right.contains(&v) {
            Some(Side::Right)
        } else {
            None
        }
    }

    /// Skew-symmetric weight: `lhat(r, l) = -lhat(l, r)`.
    pub fn lhat(&self, u: VertexId, v: VertexId) -> Option<S> {
        if let Some(w) = self.lhat.get(&(u, v)) {
            Some(w.clone())
        } else {
            self.lhat.get(&(v, u)).map(|w| -w.clone())
        }
    }

    /// `(l, r, lhat(l, r))` in key order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, &S)> + '_ {
        self.lhat.iter().map(|(&(l, r), w)| (l, r, w))
    }

    pub fn edge_count(&self) -> usize {
        self.lhat.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency.get(&v).map_or(0, BTreeSet::len)
    }
}

impl<S: Scalar> Neighbors<S> for BipartiteGraph<S> {
    fn neighbors(&self, v: VertexId) -> Result<Vec<(VertexId, S)>> {
        Ok(self
            .adjacency
            .get(&v)
            .into_iter()
            .flatten()
            .filter_map(|&u| self.length(v, u).map(|len| (u, len)))
            .collect())
    }
}

impl<S: Scalar> Network<S> for BipartiteGraph<S> {
    fn length(&self, u: VertexId, v: VertexId) -> Option<S> {
        self.lhat(u, v).map(|w| w.abs())
    }
}

/// Bipartite graph of a system: left vertices where `f*_l = e_l`, right
/// vertices where `f_r = e_r`, an edge wherever `<f_l, e_r> != 0`, weighted by
/// `lhat(l, r) = 1 / <f_l, e_r>`.
pub fn build_bipartite<S: Scalar>(sys: &BandSystem<S>) -> BipartiteGraph<S> {
    let left: BTreeSet<_> = sys.indices_on(Side::Left).collect();
    let right: BTreeSet<_> = sys.indices_on(Side::Right).collect();
    let mut edges = Vec::new();
    for &l in &left {
        for (r, v) in sys.row(crate::system::Matrix::F, l) {
            if r != l && right.contains(&r) {
                edges.push((l, r, S::one() / v.clone()));
            }
        }
    }
    // Inputs come from a system, so every precondition of `new` holds.
    BipartiteGraph::new(left, right, edges, sys.n_max()).expect("system graph is well formed")
}

/// Bipartite graph plus a source joined to every left vertex and a sink
/// joined to every right vertex, all by unit-length edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BNetwork<S> {
    graph: BipartiteGraph<S>,
}

impl<S: Scalar> BNetwork<S> {
    pub fn graph(&self) -> &BipartiteGraph<S> {
        &self.graph
    }

    pub fn source(&self) -> VertexId {
        0
    }

    pub fn sink(&self) -> VertexId {
        self.graph.index_bound + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count() + 2
    }

    /// All edges `(u, v, length)`: terminal edges first, then the bipartite ones.
    pub fn edges(&self) -> Vec<(VertexId, VertexId, S)> {
        let mut out: Vec<_> = self.graph.left.iter().map(|&l| (self.source(), l, S::one())).collect();
        out.extend(self.graph.right.iter().map(|&r| (r, self.sink(), S::one())));
        out.extend(self.graph.edges().map(|(l, r, w)| (l, r, w.abs())));
        out
    }

    /// Identifies source and sink. Flows are carried over with
    /// [`BNetwork::merge_flow`].
    pub fn merge_source_sink(&self) -> RootedNetwork<S> {
        RootedNetwork { graph: self.graph.clone(), rows: None }
    }

    /// Re-labels sink endpoints as the root.
    pub fn merge_flow(&self, flow: &PseudoFlow<S>) -> PseudoFlow<S> {
        let sink = self.sink();
        let relabel = |v: VertexId| if v == sink { 0 } else { v };
        let mut merged = PseudoFlow::new();
        for (u, v, x) in flow.iter() {
            merged.add(relabel(u), relabel(v), x.clone());
        }
        merged
    }
}

impl<S: Scalar> Neighbors<S> for BNetwork<S> {
    fn neighbors(&self, v: VertexId) -> Result<Vec<(VertexId, S)>> {
        if v == self.source() {
            return Ok(self.graph.left.iter().map(|&l| (l, S::one())).collect());
        }
        if v == self.sink() {
            return Ok(self.graph.right.iter().map(|&r| (r, S::one())).collect());
        }
        let mut out = match self.graph.side(v) {
            Some(Side::Left) => vec![(self.source(), S::one())],
            Some(Side::Right) => vec![(self.sink(), S::one())],
            None => return Ok(Vec::new()),
        };
        out.extend(self.graph.neighbors(v)?);
        Ok(out)
    }
}

impl<S: Scalar> Network<S> for BNetwork<S> {
    fn length(&self, u: VertexId, v: VertexId) -> Option<S> {
        let terminal = |t: VertexId, x: VertexId| {
            (t == self.source() && self.graph.left.contains(&x)) || (t == self.sink() && self.graph.right.contains(&x))
        };
        if terminal(u, v) || terminal(v, u) {
            Some(S::one())
        } else {
            self.graph.length(u, v)
        }
    }
}

pub fn build_network<S: Scalar>(graph: BipartiteGraph<S>) -> Result<BNetwork<S>> {
    if graph.left.is_empty() || graph.right.is_empty() {
        return Err(Error::MalformedGraph("both parts must be nonempty".to_owned()));
    }
    // source → l → … → r → sink needs at least one bipartite edge.
    if graph.edge_count() == 0 {
        return Err(Error::DisconnectedSourceSink);
    }
    Ok(BNetwork { graph })
}

/// Network with source and sink identified as the root `0`. May carry the
/// row source it was built from, so deeper truncations can be regenerated.
#[derive(Clone)]
pub struct RootedNetwork<S> {
    graph: BipartiteGraph<S>,
    rows: Option<Arc<dyn RowSource<S>>>,
}

impl<S: Scalar> std::fmt::Debug for RootedNetwork<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RootedNetwork")
            .field("graph", &self.graph)
            .field("lazy", &self.rows.is_some())
            .finish()
    }
}

impl<S: Scalar> RootedNetwork<S> {
    /// Rooted network of the first `n_max` rows of `rows`.
    pub fn from_rows(rows: Arc<dyn RowSource<S>>, n_max: usize) -> Result<Self> {
        let sys = BandSystem::from_source(rows.as_ref(), n_max)?;
        let net = build_network(build_bipartite(&sys))?;
        Ok(Self { graph: net.graph, rows: Some(rows) })
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn graph(&self) -> &BipartiteGraph<S> {
        &self.graph
    }

    pub fn is_lazy(&self) -> bool {
        self.rows.is_some()
    }

    /// Regenerates the network at a deeper truncation.
    pub fn extended(&self, n_max: usize) -> Result<Self> {
        match &self.rows {
            Some(rows) => Self::from_rows(Arc::clone(rows), n_max),
            None => Err(Error::Precondition("network has no row source to expand".to_owned())),
        }
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId, S)> {
        let mut out: Vec<_> = self.graph.vertices().map(|v| (0, v, S::one())).collect();
        out.extend(self.graph.edges().map(|(l, r, w)| (l, r, w.abs())));
        out
    }
}

impl<S: Scalar> Neighbors<S> for RootedNetwork<S> {
    fn neighbors(&self, v: VertexId) -> Result<Vec<(VertexId, S)>> {
        if v == 0 {
            return Ok(self.graph.vertices().map(|u| (u, S::one())).collect());
        }
        if self.graph.side(v).is_none() {
            return Ok(Vec::new());
        }
        let mut out = vec![(0, S::one())];
        out.extend(self.graph.neighbors(v)?);
        Ok(out)
    }
}

impl<S: Scalar> Network<S> for RootedNetwork<S> {
    fn length(&self, u: VertexId, v: VertexId) -> Option<S> {
        let touches_root = |r: VertexId, x: VertexId| r == 0 && self.graph.side(x).is_some();
        if touches_root(u, v) || touches_root(v, u) {
            Some(S::one())
        } else {
            self.graph.length(u, v)
        }
    }
}

/// Bipartite graph of an unbounded row source, expanded on demand.
pub struct LazyBipartite<'a, S> {
    rows: &'a dyn RowSource<S>,
}

impl<'a, S: Scalar> LazyBipartite<'a, S> {
    pub fn new(rows: &'a dyn RowSource<S>) -> Self {
        Self { rows }
    }
}

impl<S: Scalar> Neighbors<S> for LazyBipartite<'_, S> {
    fn neighbors(&self, v: VertexId) -> Result<Vec<(VertexId, S)>> {
        let mut out = Vec::new();
        match self.rows.side(v)? {
            None => {}
            Some(Side::Left) => {
                for (r, x) in self.rows.f_row(v)? {
                    if r != v && self.rows.side(r)? == Some(Side::Right) {
                        out.push((r, (S::one() / x).abs()));
                    }
                }
            }
            Some(Side::Right) => {
                let bw = self.rows.bandwidth();
                for l in v.saturating_sub(bw).max(1)..=v + bw {
                    if self.rows.side(l)? != Some(Side::Left) {
                        continue;
                    }
                    if let Some((_, x)) = self.rows.f_row(l)?.into_iter().find(|(k, _)| *k == v) {
                        out.push((l, (S::one() / x).abs()));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::make_larson_wogen;
    use crate::weights::WeightSequenceSpec;

    fn lw_graph(weights: WeightSequenceSpec, n_max: usize) -> BipartiteGraph<f64> {
        build_bipartite(&make_larson_wogen(&weights, n_max).unwrap())
    }

    #[test]
    fn larson_wogen_graph_is_a_path() {
        let g = lw_graph(WeightSequenceSpec::constant(1.0), 4);
        assert_eq!(g.left().iter().copied().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(g.right().iter().copied().collect::<Vec<_>>(), vec![2, 4]);
        let edges: Vec<_> = g.edges().map(|(l, r, w)| (l, r, *w)).collect();
        // v1-v2 (lhat 1/a_2), v3-v2 (lhat = 1/(-a_3)), v3-v4 (lhat 1/a_4)
        assert_eq!(edges, vec![(1, 2, 1.0), (3, 2, -1.0), (3, 4, 1.0)]);
        for (l, r, _) in g.edges() {
            assert_eq!(g.length(l, r), Some(1.0));
        }
    }

    #[test]
    fn geometric_first_length() {
        let g = lw_graph(WeightSequenceSpec::geometric(1.0, 2.0), 6);
        assert_eq!(g.length(1, 2), Some(0.25));
        assert_eq!(g.lhat(2, 1), Some(-0.25));
    }

    #[test]
    fn diagonal_system_has_no_edges() {
        let sides = vec![Side::Left, Side::Right, Side::Left];
        let g = build_bipartite(&BandSystem::<f64>::diagonal(sides).unwrap());
        assert_eq!(g.edge_count(), 0);
        assert_eq!(build_network(g), Err(Error::DisconnectedSourceSink));
    }

    #[test]
    fn network_of_four_vertex_path() {
        let net = build_network(lw_graph(WeightSequenceSpec::constant(1.0), 4)).unwrap();
        assert_eq!(net.vertex_count(), 6);
        let edges = net.edges();
        let interior = edges.iter().filter(|(u, v, _)| *u != 0 && *v != net.sink()).count();
        assert_eq!(interior, 3);
        assert_eq!(edges.len() - interior, 4);
        assert!(edges.iter().all(|(_, _, len)| *len > 0.0));
    }

    #[test]
    fn smallest_network() {
        let g = BipartiteGraph::new([1].into(), [2].into(), vec![(1, 2, -0.5)], 2).unwrap();
        let net = build_network(g).unwrap();
        assert_eq!(net.length(0, 1), Some(1.0));
        assert_eq!(net.length(1, 2), Some(0.5));
        assert_eq!(net.length(2, 3), Some(1.0));
        assert_eq!(net.length(0, 2), None);
    }

    #[test]
    fn isolated_left_vertex_connects_to_source_only() {
        let g = BipartiteGraph::new([1, 3].into(), [2].into(), vec![(1, 2, 1.0)], 3).unwrap();
        let net = build_network(g).unwrap();
        assert_eq!(net.neighbors(3).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn merging_a_path_gives_a_cycle() {
        let g = BipartiteGraph::new([1].into(), [2].into(), vec![(1, 2, 2.0)], 2).unwrap();
        let rooted = build_network(g).unwrap().merge_source_sink();
        let mut edges: Vec<_> = rooted.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
        edges.sort_unstable();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn merging_two_disjoint_paths_gives_two_cycles() {
        let g =
            BipartiteGraph::new([1, 3].into(), [2, 4].into(), vec![(1, 2, 1.0), (3, 4, 1.0)], 4).unwrap();
        let rooted = build_network(g).unwrap().merge_source_sink();
        assert_eq!(rooted.neighbors(0).unwrap().len(), 4);
        // each vertex sees the root and its partner: two triangles through 0
        for v in 1..=4 {
            assert_eq!(rooted.neighbors(v).unwrap().len(), 2);
        }
    }

    #[test]
    fn merge_flow_relabels_sink() {
        let g = BipartiteGraph::new([1].into(), [2].into(), vec![(1, 2, 1.0)], 2).unwrap();
        let net = build_network(g).unwrap();
        let mut flow = PseudoFlow::new();
        flow.set(0, 1, 1.0);
        flow.set(1, 2, 1.0);
        flow.set(2, 3, 1.0);
        let merged = net.merge_flow(&flow);
        assert_eq!(merged.get(0, 1), 1.0);
        assert_eq!(merged.get(2, 0), 1.0);
    }

    #[test]
    fn skew_weights_and_degrees() {
        let g = lw_graph(WeightSequenceSpec::power(2.0, -1.0), 30);
        for (l, r, w) in g.edges() {
            assert_eq!(g.lhat(l, r).unwrap() + g.lhat(r, l).unwrap(), 0.0);
            assert!(*w != 0.0);
        }
        assert!(g.vertices().all(|v| g.degree(v) <= 2));
    }

    #[test]
    fn lazy_graph_matches_materialized() {
        let weights = WeightSequenceSpec::power(1.0, -1.0);
        let rows = crate::system::LarsonWogenRows::new(weights.clone()).unwrap();
        let lazy = LazyBipartite::new(&rows);
        let g = lw_graph(weights, 40);
        for v in 1..40 {
            assert_eq!(lazy.neighbors(v).unwrap(), g.neighbors(v).unwrap(), "vertex {v}");
        }
    }

    #[test]
    fn rooted_network_extends_from_rows() {
        let rows: Arc<dyn RowSource<f64>> =
            Arc::new(crate::system::LarsonWogenRows::new(WeightSequenceSpec::constant(1.0)).unwrap());
        let shallow = RootedNetwork::from_rows(rows, 4).unwrap();
        let deep = shallow.extended(10).unwrap();
        assert_eq!(shallow.graph().vertex_count(), 4);
        assert_eq!(deep.graph().vertex_count(), 10);
        assert!(deep.is_lazy());
    }
}

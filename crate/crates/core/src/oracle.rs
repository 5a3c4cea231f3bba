//! Brute-force references for small instances: simple-path enumeration for
//! distances, simple-cycle enumeration for flows, and direct summation of
//! vertex totals. Also the random rooted flows the cycle checks run on.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cycles::eliminate_positive_cycles;
use crate::distance::shortest_distances;
use crate::error::{Error, Result};
use crate::flow::{flow_stats, OrientedFlow, PseudoFlow};
use crate::graph::{BipartiteGraph, Neighbors, VertexId};
use crate::scalar::Scalar;

/// Largest instance any oracle accepts.
pub const MAX_VERTICES: usize = 21;
/// Above this many vertices only paths and cycles (degree ≤ 2) are accepted.
pub const MAX_BRANCHING_VERTICES: usize = 14;

pub fn check_size(vertex_count: usize, max_degree: usize) -> Result<()> {
    if vertex_count > MAX_VERTICES || (vertex_count > MAX_BRANCHING_VERTICES && max_degree > 2) {
        return Err(Error::InstanceTooLarge(format!(
            "{vertex_count} vertices with degree up to {max_degree}"
        )));
    }
    Ok(())
}

/// Least length over all simple paths from `source` to each vertex of
/// `vertices`. Unreachable vertices are absent.
pub fn exhaustive_distances<S: Scalar, N: Neighbors<S> + ?Sized>(
    net: &N,
    source: VertexId,
    vertices: &BTreeSet<VertexId>,
) -> Result<BTreeMap<VertexId, S>> {
    let mut adjacency = BTreeMap::new();
    for &v in vertices {
        let out: Vec<(VertexId, S)> = net.neighbors(v)?.into_iter().filter(|(w, _)| vertices.contains(w)).collect();
        adjacency.insert(v, out);
    }
    let max_degree = adjacency.values().map(Vec::len).max().unwrap_or(0);
    check_size(vertices.len(), max_degree)?;

    let mut best = BTreeMap::new();
    let mut on_path = BTreeSet::from([source]);
    walk(&adjacency, source, S::zero(), &mut on_path, &mut best);
    Ok(best)
}

fn walk<S: Scalar>(
    adjacency: &BTreeMap<VertexId, Vec<(VertexId, S)>>,
    v: VertexId,
    length: S,
    on_path: &mut BTreeSet<VertexId>,
    best: &mut BTreeMap<VertexId, S>,
) {
    if best.get(&v).is_none_or(|b| length < *b) {
        best.insert(v, length.clone());
    }
    for (w, l) in adjacency.get(&v).into_iter().flatten() {
        if on_path.insert(*w) {
            walk(adjacency, *w, length.clone() + l.clone(), on_path, best);
            on_path.remove(w);
        }
    }
}

/// Every simple directed cycle whose arcs all carry positive flow, each
/// listed once starting from its smallest vertex.
pub fn positive_cycles<S: Scalar>(flow: &OrientedFlow<S>) -> Result<Vec<Vec<VertexId>>> {
    let vertices: Vec<VertexId> = flow.vertices().collect();
    let max_degree = vertices.iter().map(|&v| flow.successors(v).count() + flow.predecessors(v).count()).max();
    check_size(vertices.len(), max_degree.unwrap_or(0))?;

    let mut cycles = Vec::new();
    for &start in &vertices {
        let mut path = vec![start];
        extend_cycles(flow, start, &mut path, &mut cycles);
    }
    Ok(cycles)
}

fn extend_cycles<S: Scalar>(flow: &OrientedFlow<S>, start: VertexId, path: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
    let v = *path.last().expect("nonempty");
    let next: Vec<VertexId> = flow.successors(v).filter(|&w| flow.flow(v, w) > S::zero()).collect();
    for w in next {
        if w == start {
            out.push(path.clone());
        } else if w > start && !path.contains(&w) {
            path.push(w);
            extend_cycles(flow, start, path, out);
            path.pop();
        }
    }
}

/// `d(v) = Σ_w F̂(v, w)`, summed straight from the stored values.
pub fn direct_totals<S: Scalar>(flow: &PseudoFlow<S>) -> BTreeMap<VertexId, S> {
    let mut totals: BTreeMap<VertexId, S> = BTreeMap::new();
    for (u, v, x) in flow.iter() {
        let du = totals.remove(&u).unwrap_or_else(S::zero) + x.clone();
        totals.insert(u, du);
        let dv = totals.remove(&v).unwrap_or_else(S::zero) - x.clone();
        totals.insert(v, dv);
    }
    totals
}

/// Random connected graph on `0..vertex_count` with a flow made of unit
/// root paths plus planted circulations, oriented along its sign. Flows and
/// lengths are small integers and ratios, so they are exact in any field.
pub fn random_rooted_flow<S: Scalar, R: Rng + ?Sized>(rng: &mut R, vertex_count: usize) -> Result<OrientedFlow<S>> {
    if vertex_count < 3 {
        return Err(Error::Precondition("random rooted flows need at least 3 vertices".to_owned()));
    }
    let mut edges = BTreeSet::new();
    for v in 1..vertex_count {
        edges.insert((rng.random_range(0..v), v));
    }
    let extra = rng.random_range(0..=vertex_count);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..vertex_count), rng.random_range(0..vertex_count));
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut adjacency: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &(a, b) in &edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }

    let mut pf = PseudoFlow::<S>::new();
    for _ in 0..rng.random_range(1..=3) {
        let path = random_simple_walk(rng, &adjacency, 0, vertex_count);
        let amount = S::from_ratio(rng.random_range(1..=4), 1);
        for w in path.windows(2) {
            pf.add(w[0], w[1], amount.clone());
        }
    }
    for _ in 0..rng.random_range(1..=3) {
        let start = rng.random_range(0..vertex_count);
        if let Some(cycle) = random_cycle(rng, &adjacency, start, vertex_count) {
            let amount = S::from_ratio(rng.random_range(1..=4), 1);
            for i in 0..cycle.len() {
                pf.add(cycle[i], cycle[(i + 1) % cycle.len()], amount.clone());
            }
        }
    }

    let mut flow = OrientedFlow::new();
    for (u, v, x) in pf.iter() {
        let length = S::from_ratio(rng.random_range(1..=8), rng.random_range(1..=4));
        if *x > S::zero() {
            flow.insert(u, v, x.clone(), length)?;
        } else if *x < S::zero() {
            flow.insert(v, u, -x.clone(), length)?;
        }
    }
    Ok(flow)
}

fn random_simple_walk<R: Rng + ?Sized>(
    rng: &mut R,
    adjacency: &BTreeMap<VertexId, Vec<VertexId>>,
    start: VertexId,
    max_len: usize,
) -> Vec<VertexId> {
    let mut path = vec![start];
    while path.len() < max_len {
        let here = *path.last().expect("nonempty");
        let options: Vec<VertexId> =
            adjacency.get(&here).into_iter().flatten().copied().filter(|w| !path.contains(w)).collect();
        match options.choose(rng) {
            Some(&w) if path.len() == 1 || rng.random_bool(0.8) => path.push(w),
            _ => break,
        }
    }
    path
}

// Walks at random until it revisits a vertex; the loop closed there is the cycle.
fn random_cycle<R: Rng + ?Sized>(
    rng: &mut R,
    adjacency: &BTreeMap<VertexId, Vec<VertexId>>,
    start: VertexId,
    max_steps: usize,
) -> Option<Vec<VertexId>> {
    let mut path = vec![start];
    for _ in 0..4 * max_steps {
        let here = *path.last().expect("nonempty");
        let previous = path.len().checked_sub(2).map(|i| path[i]);
        let options: Vec<VertexId> =
            adjacency.get(&here).into_iter().flatten().copied().filter(|&w| Some(w) != previous).collect();
        let &w = options.choose(rng)?;
        if let Some(at) = path.iter().position(|&x| x == w) {
            return Some(path[at..].to_vec());
        }
        path.push(w);
    }
    None
}

/// Library results set against the brute-force references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub vertex_count: usize,
    pub source: VertexId,
    /// Vertices where Dijkstra and path enumeration disagree.
    pub distance_mismatches: Vec<VertexId>,
    pub flow_arcs: usize,
    pub cycles_before: usize,
    pub cycles_after: usize,
    /// Vertices where the library totals differ from direct sums.
    pub total_mismatches: Vec<VertexId>,
    pub root_preserved: bool,
    pub monotone: bool,
}

impl OracleReport {
    pub fn agrees(&self) -> bool {
        self.distance_mismatches.is_empty()
            && self.cycles_after == 0
            && self.total_mismatches.is_empty()
            && self.root_preserved
            && self.monotone
    }
}

/// Checks distances on `graph` from its lowest vertex, then builds a random
/// rooted flow from `rng` and checks cycle elimination and vertex totals.
pub fn oracle_check<S: Scalar, R: Rng + ?Sized>(graph: &BipartiteGraph<S>, rng: &mut R) -> Result<OracleReport> {
    let vertices: BTreeSet<VertexId> = graph.vertices().collect();
    let source = *vertices.first().ok_or_else(|| Error::MalformedGraph("graph has no vertices".to_owned()))?;
    let brute = exhaustive_distances(graph, source, &vertices)?;
    let library = shortest_distances(graph, source, None)?;
    let distance_mismatches = vertices.iter().copied().filter(|&v| brute.get(&v) != library.get(v)).collect();

    let count = vertices.len().clamp(3, 12);
    let flow = random_rooted_flow::<S, _>(rng, count)?;
    let report = flow_check(&flow)?;
    Ok(OracleReport { vertex_count: vertices.len(), source, distance_mismatches, ..report })
}

/// Cycle elimination on `flow`, rooted at 0, against the references.
pub fn flow_check<S: Scalar>(flow: &OrientedFlow<S>) -> Result<OracleReport> {
    let cycles_before = positive_cycles(flow)?.len();
    let (out, _) = eliminate_positive_cycles(flow);
    let cycles_after = positive_cycles(&out)?.len();
    let monotone = out.arcs().all(|(u, v, a)| a.flow <= flow.flow(u, v));

    let pf = PseudoFlow::from_oriented(&out);
    let direct = direct_totals(&pf);
    let stats = out.stats();
    let total_mismatches = direct.iter().filter(|(v, d)| stats.total(**v) != **d).map(|(v, _)| *v).collect();
    let root_preserved = out.total(0) == flow.total(0);
    Ok(OracleReport {
        vertex_count: flow.vertices().count(),
        source: 0,
        distance_mismatches: Vec::new(),
        flow_arcs: flow.arc_count(),
        cycles_before,
        cycles_after,
        total_mismatches,
        root_preserved,
        monotone,
    })
}

/// Direct totals set against [`flow_stats`] for a flow on a network.
pub fn totals_agree<S: Scalar, N: crate::graph::Network<S> + ?Sized>(net: &N, flow: &PseudoFlow<S>) -> Result<bool> {
    let stats = flow_stats(net, flow)?;
    Ok(direct_totals(flow).iter().all(|(v, d)| stats.total(*v) == *d))
}

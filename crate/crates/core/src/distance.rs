//! Shortest paths with positive lengths, generic over the scalar field.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use crate::error::Result;
use crate::graph::{Neighbors, VertexId};
use crate::scalar::Scalar;

/// Root distances φ with shortest-path predecessors. Missing vertices are
/// unreachable (φ = +∞).
#[derive(Debug, Clone, PartialEq)]
pub struct Distances<S> {
    source: VertexId,
    dist: BTreeMap<VertexId, S>,
    pred: BTreeMap<VertexId, VertexId>,
}

impl<S: Scalar> Distances<S> {
    pub fn source(&self) -> VertexId {
        self.source
    }

    /// `None` means +∞.
    pub fn get(&self, v: VertexId) -> Option<&S> {
        self.dist.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &S)> + '_ {
        self.dist.iter().map(|(&v, d)| (v, d))
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Vertices of a shortest path from the source to `v`, both included.
    pub fn path_to(&self, v: VertexId) -> Option<Vec<VertexId>> {
        self.dist.get(&v)?;
        let mut path = vec![v];
        let mut cur = v;
        while cur != self.source {
            cur = self.pred[&cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

struct Entry<S> {
    dist: S,
    vertex: VertexId,
}

impl<S: Scalar> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Entry<S> {}

impl<S: Scalar> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the nearest vertex, lowest id first on ties.
impl<S: Scalar> Ord for Entry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        crate::scalar::cmp(&other.dist, &self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Dijkstra from `source` over the arcs produced by `out`. Vertices farther
/// than `cutoff` are neither settled nor expanded, which keeps searches on
/// lazily generated graphs finite.
pub fn dijkstra_with<S, F>(source: VertexId, mut out: F, cutoff: Option<&S>) -> Result<Distances<S>>
where
    S: Scalar,
    F: FnMut(VertexId) -> Result<Vec<(VertexId, S)>>,
{
    let mut best: BTreeMap<VertexId, S> = BTreeMap::new();
    let mut pred = BTreeMap::new();
    let mut dist = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(source, S::zero());
    heap.push(Entry { dist: S::zero(), vertex: source });
    while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
        if dist.contains_key(&v) || best.get(&v).is_some_and(|b| *b < d) {
            continue;
        }
        if cutoff.is_some_and(|c| d > *c) {
            break;
        }
        for (w, length) in out(v)? {
            if dist.contains_key(&w) {
                continue;
            }
            let candidate = d.clone() + length;
            if best.get(&w).is_none_or(|b| candidate < *b) {
                best.insert(w, candidate.clone());
                pred.insert(w, v);
                heap.push(Entry { dist: candidate, vertex: w });
            }
        }
        dist.insert(v, d);
    }
    pred.retain(|v, _| dist.contains_key(v));
    Ok(Distances { source, dist, pred })
}

/// φ over an undirected network.
pub fn shortest_distances<S: Scalar, N: Neighbors<S> + ?Sized>(
    net: &N,
    source: VertexId,
    cutoff: Option<&S>,
) -> Result<Distances<S>> {
    dijkstra_with(source, |v| net.neighbors(v), cutoff)
}

/// Breadth-first layers `[{source}, L_1, …]` up to `max_depth`. Stops early
/// when a layer comes out empty.
pub fn bfs_layers<S: Scalar, N: Neighbors<S> + ?Sized>(
    net: &N,
    source: VertexId,
    max_depth: usize,
) -> Result<Vec<Vec<VertexId>>> {
    let mut depth_of = BTreeMap::from([(source, 0usize)]);
    let mut layers = vec![vec![source]];
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = depth_of[&v];
        if d == max_depth {
            continue;
        }
        for (w, _) in net.neighbors(v)? {
            if depth_of.contains_key(&w) {
                continue;
            }
            depth_of.insert(w, d + 1);
            if layers.len() == d + 1 {
                layers.push(Vec::new());
            }
            layers[d + 1].push(w);
            queue.push_back(w);
        }
    }
    for layer in &mut layers {
        layer.sort_unstable();
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;
    use crate::Rational;

    fn path(lengths: &[f64]) -> BipartiteGraph<f64> {
        let n = lengths.len() + 1;
        let left = (1..=n).step_by(2).collect();
        let right = (2..=n).step_by(2).collect();
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let (a, b) = (i + 1, i + 2);
                if a % 2 == 1 {
                    (a, b, w)
                } else {
                    (b, a, w)
                }
            })
            .collect();
        BipartiteGraph::new(left, right, edges, n).unwrap()
    }

    #[test]
    fn geometric_path() {
        let g = path(&[1.0, 0.5, 0.25]);
        let d = shortest_distances(&g, 1, None).unwrap();
        assert_eq!(d.get(4), Some(&1.75));
        assert_eq!(d.path_to(4).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn unreachable_is_infinite() {
        let g = BipartiteGraph::new([1, 3].into(), [2].into(), vec![(1, 2, 1.0)], 3).unwrap();
        let d = shortest_distances(&g, 1, None).unwrap();
        assert_eq!(d.get(3), None);
        assert!(d.path_to(3).is_none());
    }

    #[test]
    fn parallel_routes_take_minimum() {
        // direct edge of length 3 against 1 → 4 → 3 → 2 of length 2
        let g = BipartiteGraph::new([1, 3].into(), [2, 4].into(), vec![(1, 2, 3.0), (1, 4, 1.0), (3, 4, 0.5), (3, 2, 0.5)], 4)
            .unwrap();
        let d = shortest_distances(&g, 1, None).unwrap();
        assert_eq!(d.get(2), Some(&2.0));
        assert_eq!(d.path_to(2).unwrap(), vec![1, 4, 3, 2]);
    }

    #[test]
    fn cutoff_stops_expansion() {
        let g = path(&[1.0, 1.0, 1.0, 1.0]);
        let d = shortest_distances(&g, 1, Some(&2.0)).unwrap();
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn exact_rational_distances() {
        let third = Rational::from_ratio(1, 3);
        let g = BipartiteGraph::new([1, 3].into(), [2].into(), vec![(1, 2, third.clone()), (3, 2, -third.clone())], 3)
            .unwrap();
        let d = shortest_distances(&g, 1, None).unwrap();
        assert_eq!(d.get(3), Some(&Rational::from_ratio(2, 3)));
    }

    #[test]
    fn layers_of_a_path() {
        let g = path(&[1.0, 2.0, 3.0]);
        assert_eq!(bfs_layers(&g, 1, 10).unwrap(), vec![vec![1], vec![2], vec![3], vec![4]]);
        assert_eq!(bfs_layers(&g, 1, 2).unwrap().len(), 3);
    }
}

//! Removal of positive flow cycles from an oriented flow.

use std::collections::BTreeMap;

use crate::flow::OrientedFlow;
use crate::graph::VertexId;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationReport<S> {
    pub cycles_cancelled: usize,
    pub mass_before: S,
    pub mass_after: S,
    /// Mass after each cancellation; nonincreasing.
    pub mass_trace: Vec<S>,
}

#[derive(Clone, Copy, PartialEq)]
enum Colour {
    White,
    Grey,
    Black,
}

/// Some cycle along arcs with positive flow, found by DFS from the lowest
/// vertex id with successors visited in id order. Returned as its vertex
/// sequence without repeating the first vertex.
pub fn find_positive_cycle<S: Scalar>(flow: &OrientedFlow<S>) -> Option<Vec<VertexId>> {
    let positive = |u: VertexId, v: VertexId| flow.flow(u, v) > S::zero();
    let mut colour: BTreeMap<VertexId, Colour> = flow.vertices().map(|v| (v, Colour::White)).collect();
    let starts: Vec<VertexId> = colour.keys().copied().collect();
    for start in starts {
        if colour[&start] != Colour::White {
            continue;
        }
        // Stack of (vertex, remaining successors).
        let mut stack: Vec<(VertexId, Vec<VertexId>)> = Vec::new();
        let mut path: Vec<VertexId> = Vec::new();
        let push = |v: VertexId, stack: &mut Vec<(VertexId, Vec<VertexId>)>, path: &mut Vec<VertexId>| {
            let mut next: Vec<VertexId> = flow.successors(v).filter(|&w| positive(v, w)).collect();
            next.reverse();
            stack.push((v, next));
            path.push(v);
        };
        colour.insert(start, Colour::Grey);
        push(start, &mut stack, &mut path);
        while let Some((v, next)) = stack.last_mut() {
            let v = *v;
            match next.pop() {
                Some(w) => match colour[&w] {
                    Colour::White => {
                        colour.insert(w, Colour::Grey);
                        push(w, &mut stack, &mut path);
                    }
                    Colour::Grey => {
                        let at = path.iter().position(|&x| x == w).expect("grey vertices lie on the path");
                        return Some(path[at..].to_vec());
                    }
                    Colour::Black => {}
                },
                None => {
                    colour.insert(v, Colour::Black);
                    stack.pop();
                    path.pop();
                }
            }
        }
    }
    None
}

pub fn has_positive_cycle<S: Scalar>(flow: &OrientedFlow<S>) -> bool {
    find_positive_cycle(flow).is_some()
}

/// Cancels positive cycles until none remain. Each pass subtracts the
/// cycle's minimum along it, zeroing at least one arc, so at most
/// `arc_count` passes run. Totals at every vertex are unchanged and the
/// result is pointwise at most the input. Zeroed arcs are dropped.
pub fn eliminate_positive_cycles<S: Scalar>(flow: &OrientedFlow<S>) -> (OrientedFlow<S>, EliminationReport<S>) {
    let mass_before = flow.mass();
    let mut current = flow.without_small_arcs(&S::zero());
    let mut mass_trace = Vec::new();
    while let Some(cycle) = find_positive_cycle(&current) {
        let arcs: Vec<(VertexId, VertexId)> =
            (0..cycle.len()).map(|i| (cycle[i], cycle[(i + 1) % cycle.len()])).collect();
        let min = arcs
            .iter()
            .map(|&(u, v)| current.flow(u, v))
            .reduce(crate::scalar::min_of)
            .expect("cycles have arcs");
        for &(u, v) in &arcs {
            let arc = current.arc_mut(u, v).expect("cycle arcs exist");
            arc.flow = arc.flow.clone() - min.clone();
            if arc.flow <= S::zero() {
                current.remove(u, v);
            }
        }
        mass_trace.push(current.mass());
    }
    let report = EliminationReport {
        cycles_cancelled: mass_trace.len(),
        mass_before,
        mass_after: current.mass(),
        mass_trace,
    };
    (current, report)
}

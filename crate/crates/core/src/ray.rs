//! Rays: finite-length witnesses extracted from escaping flows, and the unit
//! flows they carry.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distance::dijkstra_with;
use crate::error::{Error, Result};
use crate::flow::PseudoFlow;
use crate::graph::{Network, VertexId};
use crate::layers::{build_layers, LayeredState, ReferenceFlow};
use crate::scalar::{self, Scalar};

/// Simple path with its running lengths and a claimed bound on them.
#[derive(Debug, Clone, PartialEq)]
pub struct RayWitness<S> {
    pub ray: Vec<VertexId>,
    /// `partial_lengths[j]` is the length of `ray[..=j]`, so it starts at 0.
    pub partial_lengths: Vec<S>,
    pub bound: S,
}

/// Serialized witness, values in `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDump {
    pub ray: Vec<VertexId>,
    pub partial_lengths: Vec<f64>,
    pub bound: f64,
}

impl<S: Scalar> RayWitness<S> {
    /// Measures `ray` on `net`.
    pub fn measure<N: Network<S> + ?Sized>(net: &N, ray: Vec<VertexId>, bound: S) -> Result<Self> {
        check_simple(&ray)?;
        let mut partial_lengths = Vec::with_capacity(ray.len());
        let mut total = S::zero();
        partial_lengths.push(total.clone());
        for w in ray.windows(2) {
            let length = net.length(w[0], w[1]).ok_or(Error::NotAdjacent { u: w[0], v: w[1] })?;
            total = total + length;
            partial_lengths.push(total.clone());
        }
        Ok(Self { ray, partial_lengths, bound })
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.ray.len().saturating_sub(1)
    }

    pub fn total_length(&self) -> S {
        self.partial_lengths.last().cloned().unwrap_or_else(S::zero)
    }

    /// Adjacency, nondecreasing partial lengths, and partial lengths within
    /// the bound.
    pub fn verify<N: Network<S> + ?Sized>(&self, net: &N) -> Result<()> {
        let remeasured = Self::measure(net, self.ray.clone(), self.bound.clone())?;
        let tol = S::tolerance();
        if remeasured.partial_lengths.len() != self.partial_lengths.len()
            || remeasured
                .partial_lengths
                .iter()
                .zip(&self.partial_lengths)
                .any(|(a, b)| !a.close_to(b, &tol))
        {
            return Err(Error::CertificateFailure("partial lengths do not match the network".to_owned()));
        }
        if self.total_length().exceeds(&(self.bound.clone() + tol)) {
            return Err(Error::CertificateFailure("partial lengths exceed the bound".to_owned()));
        }
        Ok(())
    }

    /// Drops the first vertex (e.g. the root) and re-bases the lengths.
    pub fn without_first(&self) -> Self {
        let offset = self.partial_lengths.get(1).cloned().unwrap_or_else(S::zero);
        Self {
            ray: self.ray.iter().skip(1).copied().collect(),
            partial_lengths: self.partial_lengths.iter().skip(1).map(|x| x.clone() - offset.clone()).collect(),
            bound: self.bound.clone(),
        }
    }

    pub fn to_dump(&self) -> WitnessDump {
        WitnessDump {
            ray: self.ray.clone(),
            partial_lengths: self.partial_lengths.iter().map(Scalar::as_f64).collect(),
            bound: self.bound.as_f64(),
        }
    }
}

fn check_simple(ray: &[VertexId]) -> Result<()> {
    let mut seen = BTreeSet::new();
    match ray.iter().find(|v| !seen.insert(**v)) {
        Some(&vertex) => Err(Error::RepeatedVertex { vertex }),
        None => Ok(()),
    }
}

/// Unit flow along `ray`: `F̂(r_k, r_{k+1}) = 1`.
pub fn flow_from_ray<S: Scalar, N: Network<S> + ?Sized>(net: &N, ray: &[VertexId]) -> Result<PseudoFlow<S>> {
    check_simple(ray)?;
    let mut flow = PseudoFlow::new();
    for w in ray.windows(2) {
        if net.length(w[0], w[1]).is_none() {
            return Err(Error::NotAdjacent { u: w[0], v: w[1] });
        }
        flow.set(w[0], w[1], S::one());
    }
    Ok(flow)
}

/// Ray through `G_depth` starting at the root with partial lengths bounded
/// by the mass of the (scaled) reference flow.
///
/// Each step moves to the child from which the most deepest-layer vertices
/// remain reachable within the unused length budget; ties go to the child
/// nearer the root, then the lower id. The walk ends on the deepest layer.
pub fn extract_ray<S: Scalar>(reference: Arc<ReferenceFlow<S>>, depth: usize) -> Result<RayWitness<S>> {
    let state = build_layers(Arc::clone(&reference), depth).map_err(|e| match e {
        Error::FrontierEmpty { depth: d } | Error::TruncationReached { depth: d, .. } => {
            Error::WitnessExhausted { achieved: d - 1, requested: depth }
        }
        other => other,
    })?;
    konig_walk(&state)
}

fn konig_walk<S: Scalar>(state: &LayeredState<S>) -> Result<RayWitness<S>> {
    let reference = state.reference();
    let mass = reference.mass().clone();
    let mut out: BTreeMap<VertexId, Vec<(VertexId, S)>> = BTreeMap::new();
    for (u, v) in state.arcs() {
        let length = reference.flow().arc(u, v).expect("layer arcs are reference arcs").length.clone();
        out.entry(u).or_default().push((v, length));
    }
    let deepest: BTreeSet<VertexId> = state.frontier().iter().copied().collect();
    let phi = state.distances();
    let reachable_within = |from: VertexId, budget: &S| -> usize {
        let dist = dijkstra_with(from, |v| Ok(out.get(&v).cloned().unwrap_or_default()), Some(budget))
            .expect("in-memory search cannot fail");
        dist.iter().filter(|(v, d)| deepest.contains(v) && *d <= budget).count()
    };

    let root = reference.root();
    let mut ray = vec![root];
    let mut partial_lengths = vec![S::zero()];
    let mut current = root;
    while !deepest.contains(&current) {
        let prefix = partial_lengths.last().expect("nonempty").clone();
        let mut best: Option<(usize, S, VertexId, S)> = None;
        for (child, length) in out.get(&current).into_iter().flatten() {
            let budget = mass.clone() - prefix.clone() - length.clone();
            if budget < S::zero() {
                continue;
            }
            let count = reachable_within(*child, &budget);
            if count == 0 {
                continue;
            }
            let child_phi = phi.get(*child).cloned().expect("arc heads are reachable");
            let better = match &best {
                None => true,
                Some((c, p, id, _)) => {
                    count > *c
                        || (count == *c && scalar::cmp(&child_phi, p).is_lt())
                        || (count == *c && scalar::cmp(&child_phi, p).is_eq() && child < id)
                }
            };
            if better {
                best = Some((count, child_phi, *child, length.clone()));
            }
        }
        let (_, _, child, length) = best.ok_or(Error::WitnessExhausted { achieved: ray.len() - 1, requested: state.depth() })?;
        ray.push(child);
        partial_lengths.push(prefix + length);
        current = child;
    }
    Ok(RayWitness { ray, partial_lengths, bound: mass })
}

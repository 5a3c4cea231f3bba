//! Pseudo-flows on undirected networks and their oriented counterparts.
//!
//! Total flow follows `d(v) = d⁺(v) − d⁻(v)`: a unit flow leaving the
//! source gives `d(source) = 1`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Network, VertexId};
use crate::scalar::Scalar;

/// Skew-symmetric edge valuation. Only `F̂(u, v)` with `u < v` is stored,
/// so `F̂(v, u) = −F̂(u, v)` holds by construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoFlow<S> {
    values: BTreeMap<(VertexId, VertexId), S>,
}

impl<S: Scalar> PseudoFlow<S> {
    pub fn new() -> Self {
        Self { values: BTreeMap::new() }
    }

    /// Sets `F̂(u, v) = x` (and so `F̂(v, u) = −x`). Zero removes the pair.
    pub fn set(&mut self, u: VertexId, v: VertexId, x: S) {
        assert_ne!(u, v, "pseudo-flows live on edges, not loops");
        let (key, value) = if u < v { ((u, v), x) } else { ((v, u), -x) };
        if value.is_zero() {
            self.values.remove(&key);
        } else {
            self.values.insert(key, value);
        }
    }

    pub fn add(&mut self, u: VertexId, v: VertexId, x: S) {
        let current = self.get(u, v);
        self.set(u, v, current + x);
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> S {
        if u < v {
            self.values.get(&(u, v)).cloned().unwrap_or_else(S::zero)
        } else {
            self.values.get(&(v, u)).map(|x| -x.clone()).unwrap_or_else(S::zero)
        }
    }

    /// Stored pairs `(u, v, F̂(u, v))` with `u < v`.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId, &S)> + '_ {
        self.values.iter().map(|(&(u, v), x)| (u, v, x))
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().map(|(&k, x)| (k, -x.clone())).collect() }
    }

    pub fn scaled(&self, factor: &S) -> Self {
        let mut out = Self::new();
        for (u, v, x) in self.iter() {
            out.set(u, v, x.clone() * factor.clone());
        }
        out
    }

    /// Every pair must be an edge of `net`.
    pub fn check_support<N: Network<S> + ?Sized>(&self, net: &N) -> Result<()> {
        match self.iter().find(|(u, v, _)| net.length(*u, *v).is_none()) {
            Some((u, v, _)) => Err(Error::NotAdjacent { u, v }),
            None => Ok(()),
        }
    }

    /// Forgets the orientation: `F̂(u, v) = 𝓕(u → v)`.
    pub fn from_oriented(flow: &OrientedFlow<S>) -> Self {
        let mut out = Self::new();
        for (u, v, arc) in flow.arcs() {
            out.add(u, v, arc.flow.clone());
        }
        out
    }

    /// Rows `(u, v, F̂(u, v))` for dumps.
    pub fn to_rows(&self) -> Vec<(VertexId, VertexId, f64)> {
        self.iter().map(|(u, v, x)| (u, v, x.as_f64())).collect()
    }

    pub fn from_rows(rows: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let mut out = Self::new();
        for &(u, v, x) in rows {
            if u == v {
                return Err(Error::MalformedGraph(format!("flow on loop ({u}, {u})")));
            }
            let x = S::from_f64_value(x)
                .ok_or_else(|| Error::MalformedGraph(format!("flow value {x} is not representable")))?;
            out.add(u, v, x);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrientedArc<S> {
    pub flow: S,
    pub length: S,
}

/// Nonnegative flow on oriented arcs, each arc carrying its length.
/// At most one of `(u, v)` and `(v, u)` is present.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrientedFlow<S> {
    arcs: BTreeMap<(VertexId, VertexId), OrientedArc<S>>,
    out: BTreeMap<VertexId, BTreeSet<VertexId>>,
    into: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

impl<S: Scalar> OrientedFlow<S> {
    pub fn new() -> Self {
        Self { arcs: BTreeMap::new(), out: BTreeMap::new(), into: BTreeMap::new() }
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId, flow: S, length: S) -> Result<()> {
        if u == v {
            return Err(Error::MalformedGraph(format!("loop at {u}")));
        }
        if flow < S::zero() {
            return Err(Error::MalformedGraph(format!("negative flow on ({u}, {v})")));
        }
        if length <= S::zero() {
            return Err(Error::MalformedGraph(format!("length of ({u}, {v}) must be positive")));
        }
        if self.arcs.contains_key(&(v, u)) {
            return Err(Error::MalformedGraph(format!("arcs ({u}, {v}) and ({v}, {u}) both present")));
        }
        self.arcs.insert((u, v), OrientedArc { flow, length });
        self.out.entry(u).or_default().insert(v);
        self.into.entry(v).or_default().insert(u);
        self.out.entry(v).or_default();
        self.into.entry(u).or_default();
        Ok(())
    }

    pub fn remove(&mut self, u: VertexId, v: VertexId) -> Option<OrientedArc<S>> {
        let arc = self.arcs.remove(&(u, v))?;
        if let Some(set) = self.out.get_mut(&u) {
            set.remove(&v);
        }
        if let Some(set) = self.into.get_mut(&v) {
            set.remove(&u);
        }
        Some(arc)
    }

    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId, &OrientedArc<S>)> + '_ {
        self.arcs.iter().map(|(&(u, v), a)| (u, v, a))
    }

    pub fn arc(&self, u: VertexId, v: VertexId) -> Option<&OrientedArc<S>> {
        self.arcs.get(&(u, v))
    }

    pub fn arc_mut(&mut self, u: VertexId, v: VertexId) -> Option<&mut OrientedArc<S>> {
        self.arcs.get_mut(&(u, v))
    }

    /// Flow on `u → v`, zero when absent.
    pub fn flow(&self, u: VertexId, v: VertexId) -> S {
        self.arcs.get(&(u, v)).map(|a| a.flow.clone()).unwrap_or_else(S::zero)
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.out.keys().copied()
    }

    pub fn successors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.out.get(&v).into_iter().flatten().copied()
    }

    pub fn predecessors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.into.get(&v).into_iter().flatten().copied()
    }

    pub fn d_plus(&self, v: VertexId) -> S {
        crate::scalar::sum(self.successors(v).map(|u| self.flow(v, u)))
    }

    pub fn d_minus(&self, v: VertexId) -> S {
        crate::scalar::sum(self.predecessors(v).map(|u| self.flow(u, v)))
    }

    pub fn total(&self, v: VertexId) -> S {
        self.d_plus(v) - self.d_minus(v)
    }

    pub fn mass(&self) -> S {
        crate::scalar::sum(self.arcs.values().map(|a| a.flow.clone() * a.length.clone()))
    }

    pub fn stats(&self) -> FlowStats<S> {
        let mut stats = FlowStats::empty();
        for (u, v, arc) in self.arcs() {
            stats.record(u, v, &arc.flow, &arc.length);
        }
        stats
    }

    /// Copy without the arcs whose flow is at most `tol`.
    pub fn without_small_arcs(&self, tol: &S) -> Self {
        let mut out = Self::new();
        for (u, v, arc) in self.arcs() {
            if arc.flow.exceeds(tol) {
                out.insert(u, v, arc.flow.clone(), arc.length.clone()).expect("subset of a valid flow");
            }
        }
        out
    }

    pub fn scaled(&self, factor: &S) -> Self {
        let mut out = Self::new();
        for (u, v, arc) in self.arcs() {
            out.insert(u, v, arc.flow.clone() * factor.clone(), arc.length.clone()).expect("scaling keeps validity");
        }
        out
    }

    /// Every arc turned around; totals change sign.
    pub fn reversed(&self) -> Self {
        let mut out = Self::new();
        for (u, v, arc) in self.arcs() {
            out.insert(v, u, arc.flow.clone(), arc.length.clone()).expect("reversal keeps validity");
        }
        out
    }
}

/// Per-vertex incoming, outgoing and total flow plus the mass.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStats<S> {
    pub d_plus: BTreeMap<VertexId, S>,
    pub d_minus: BTreeMap<VertexId, S>,
    pub d: BTreeMap<VertexId, S>,
    pub mass: S,
}

impl<S: Scalar> FlowStats<S> {
    fn empty() -> Self {
        Self { d_plus: BTreeMap::new(), d_minus: BTreeMap::new(), d: BTreeMap::new(), mass: S::zero() }
    }

    // `x > 0` flows from `from` to `to`.
    fn record(&mut self, from: VertexId, to: VertexId, x: &S, length: &S) {
        accumulate(&mut self.d_plus, from, x.clone());
        accumulate(&mut self.d_minus, to, x.clone());
        accumulate(&mut self.d_plus, to, S::zero());
        accumulate(&mut self.d_minus, from, S::zero());
        accumulate(&mut self.d, from, x.clone());
        accumulate(&mut self.d, to, -x.clone());
        self.mass = self.mass.clone() + x.clone() * length.clone();
    }

    /// `d(v)`, zero for vertices the flow does not touch.
    pub fn total(&self, v: VertexId) -> S {
        self.d.get(&v).cloned().unwrap_or_else(S::zero)
    }

    pub fn d_plus_of(&self, v: VertexId) -> S {
        self.d_plus.get(&v).cloned().unwrap_or_else(S::zero)
    }

    pub fn d_minus_of(&self, v: VertexId) -> S {
        self.d_minus.get(&v).cloned().unwrap_or_else(S::zero)
    }

    /// Vertices other than `exempt` whose total exceeds `tol` in magnitude.
    pub fn non_preserving(&self, exempt: &[VertexId], tol: &S) -> Vec<VertexId> {
        self.d
            .iter()
            .filter(|(v, x)| !exempt.contains(v) && !x.is_negligible(tol))
            .map(|(&v, _)| v)
            .collect()
    }
}

fn accumulate<S: Scalar>(map: &mut BTreeMap<VertexId, S>, v: VertexId, x: S) {
    let slot = map.entry(v).or_insert_with(S::zero);
    *slot = slot.clone() + x;
}

pub fn flow_stats<S: Scalar, N: Network<S> + ?Sized>(net: &N, flow: &PseudoFlow<S>) -> Result<FlowStats<S>> {
    let mut stats = FlowStats::empty();
    for (u, v, x) in flow.iter() {
        let length = net.length(u, v).ok_or(Error::NotAdjacent { u, v })?;
        if *x > S::zero() {
            stats.record(u, v, x, &length);
        } else {
            stats.record(v, u, &-x.clone(), &length);
        }
    }
    Ok(stats)
}

/// `d(sink) = −d(source)` within `tol`. Pass the root twice for a rooted
/// network, which then preserves the flow iff `d(root) = 0`.
pub fn is_preserving<S: Scalar>(stats: &FlowStats<S>, source: VertexId, sink: VertexId, tol: &S) -> bool {
    if source == sink {
        stats.total(source).is_negligible(tol)
    } else {
        (stats.total(source) + stats.total(sink)).is_negligible(tol)
    }
}

/// Orients each edge along its positive flow; zero-flow edges are dropped.
pub fn orient<S: Scalar, N: Network<S> + ?Sized>(net: &N, flow: &PseudoFlow<S>) -> Result<OrientedFlow<S>> {
    let mut out = OrientedFlow::new();
    for (u, v, x) in flow.iter() {
        let length = net.length(u, v).ok_or(Error::NotAdjacent { u, v })?;
        if *x > S::zero() {
            out.insert(u, v, x.clone(), length)?;
        } else {
            out.insert(v, u, -x.clone(), length)?;
        }
    }
    Ok(out)
}

//! Conversion between flows on the B-network and band operators that
//! annihilate the rank-one subalgebra.
//!
//! Sign convention: `T_ll = F̂(s, v_l)`, `T_rr = F̂(t, v_r)` and
//! `T_lr = −F̂(v_l, v_r)·lhat(l, r)`, so that `Tr(T) = d(s) + d(t)` and
//! every row annihilation sum equals `−d(v_n)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::PseudoFlow;
use crate::graph::BNetwork;
use crate::scalar::{self, Scalar};
use crate::system::{BandSystem, Matrix, Side};

/// Sparse operator matrix, `T_ij = <T e_j, e_i>`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorMatrix<S> {
    entries: BTreeMap<(usize, usize), S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub entries: Vec<(usize, usize, f64)>,
    pub trace: f64,
}

impl<S: Scalar> OperatorMatrix<S> {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Sets `T_ij`; zero removes the entry.
    pub fn set(&mut self, i: usize, j: usize, x: S) {
        if x.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), x);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(S::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &S)> + '_ {
        self.entries.iter().map(|(&(i, j), x)| (i, j, x))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn trace(&self) -> S {
        scalar::sum(self.entries().filter(|(i, j, _)| i == j).map(|(_, _, x)| x.clone()))
    }

    /// `Σ |T_ij|`.
    pub fn l1_norm(&self) -> S {
        scalar::sum(self.entries.values().map(|x| x.abs()))
    }

    /// Largest `|i − j|` over the entries.
    pub fn bandwidth(&self) -> usize {
        self.entries.keys().map(|&(i, j)| i.abs_diff(j)).max().unwrap_or(0)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::new();
        for i in 1..=n {
            t.set(i, i, S::one());
        }
        t
    }

    pub fn to_dump(&self) -> OperatorDump {
        OperatorDump {
            entries: self.entries().map(|(i, j, x)| (i, j, x.as_f64())).collect(),
            trace: self.trace().as_f64(),
        }
    }

    pub fn from_dump(dump: &OperatorDump) -> Result<Self> {
        let mut t = Self::new();
        for &(i, j, x) in &dump.entries {
            let x = S::from_f64_value(x)
                .ok_or_else(|| Error::MalformedSystem(format!("operator entry {x} is not representable")))?;
            t.set(i, j, t.get(i, j) + x);
        }
        Ok(t)
    }
}

/// Operator of a pseudo-flow on the B-network.
pub fn flow_to_operator<S: Scalar>(net: &BNetwork<S>, flow: &PseudoFlow<S>) -> Result<OperatorMatrix<S>> {
    flow.check_support(net)?;
    let (s, t) = (net.source(), net.sink());
    let graph = net.graph();
    let mut op = OperatorMatrix::new();
    for (u, v, x) in flow.iter() {
        // pairs are stored with u < v, and the source is 0, the sink the largest id
        if u == s {
            op.set(v, v, x.clone());
        } else if v == t {
            op.set(u, u, -x.clone());
        } else {
            let (l, r, value) = match graph.side(u) {
                Some(Side::Left) => (u, v, x.clone()),
                _ => (v, u, -x.clone()),
            };
            let lhat = graph.lhat(l, r).ok_or(Error::NotAdjacent { u: l, v: r })?;
            op.set(l, r, -(value * lhat));
        }
    }
    Ok(op)
}

/// Inverse of [`flow_to_operator`].
pub fn operator_to_flow<S: Scalar>(net: &BNetwork<S>, op: &OperatorMatrix<S>) -> Result<PseudoFlow<S>> {
    let (s, t) = (net.source(), net.sink());
    let graph = net.graph();
    let mut flow = PseudoFlow::new();
    for (i, j, x) in op.entries() {
        match (graph.side(i), graph.side(j)) {
            (Some(Side::Left), Some(Side::Left)) if i == j => flow.set(s, i, x.clone()),
            (Some(Side::Right), Some(Side::Right)) if i == j => flow.set(t, i, x.clone()),
            (Some(Side::Left), Some(Side::Right)) => {
                let lhat = graph.lhat(i, j).ok_or(Error::InconsistentOperator { row: i, col: j })?;
                flow.set(i, j, -x.clone() / lhat);
            }
            _ => return Err(Error::InconsistentOperator { row: i, col: j }),
        }
    }
    Ok(flow)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnihilationReport<S> {
    pub max_defect: S,
    /// Row attaining the maximum.
    pub worst_row: usize,
}

/// `max |Σ_j T_nj f(n, j)|` over left rows and `max |Σ_j T_jn fstar(n, j)|`
/// over right rows, interior rows `n ≤ n_max − bandwidth` only.
pub fn annihilation_check<S: Scalar>(sys: &BandSystem<S>, op: &OperatorMatrix<S>) -> AnnihilationReport<S> {
    let mut by_row: BTreeMap<usize, Vec<(usize, S)>> = BTreeMap::new();
    let mut by_col: BTreeMap<usize, Vec<(usize, S)>> = BTreeMap::new();
    for (i, j, x) in op.entries() {
        by_row.entry(i).or_default().push((j, x.clone()));
        by_col.entry(j).or_default().push((i, x.clone()));
    }
    let mut max_defect = S::zero();
    let mut worst_row = 0;
    for n in 1..=sys.interior_limit() {
        let (terms, matrix) = match sys.side_of(n) {
            Side::Left => (by_row.get(&n), Matrix::F),
            Side::Right => (by_col.get(&n), Matrix::FStar),
        };
        let coefficient = |k: usize| match matrix {
            Matrix::F => sys.f(n, k),
            Matrix::FStar => sys.fstar(n, k),
        };
        let value = scalar::sum(terms.into_iter().flatten().map(|(k, x)| x.clone() * coefficient(*k)));
        if value.abs() > max_defect {
            max_defect = value.abs();
            worst_row = n;
        }
    }
    AnnihilationReport { max_defect, worst_row }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_stats;
    use crate::graph::{build_bipartite, build_network};
    use crate::system::make_larson_wogen;
    use crate::weights::WeightSequenceSpec;
    use crate::Rational;

    fn lw(a: f64, n_max: usize) -> (BandSystem<f64>, BNetwork<f64>) {
        let sys = make_larson_wogen(&WeightSequenceSpec::constant(a), n_max).unwrap();
        let net = build_network(build_bipartite(&sys)).unwrap();
        (sys, net)
    }

    #[test]
    fn short_path_flow_operator() {
        let a = 4.0;
        let (sys, net) = lw(a, 6);
        let mut flow = PseudoFlow::new();
        flow.set(net.source(), 1, 1.0);
        flow.set(1, 2, 1.0);
        flow.set(2, net.sink(), 1.0);
        let op = flow_to_operator(&net, &flow).unwrap();
        // the negation of the hand-solved (−1, 1/a, 1); both annihilate
        assert_eq!(op.get(1, 1), 1.0);
        assert_eq!(op.get(1, 2), -1.0 / a);
        assert_eq!(op.get(2, 2), -1.0);
        assert_eq!(op.trace(), 0.0);
        assert_eq!(annihilation_check(&sys, &op).max_defect, 0.0);
        assert_eq!(op.l1_norm(), flow_stats(&net, &flow).unwrap().mass);
        assert_eq!(operator_to_flow(&net, &op).unwrap(), flow);
    }

    #[test]
    fn zero_and_identity() {
        let (sys, net) = lw(1.0, 8);
        let zero = flow_to_operator(&net, &PseudoFlow::new()).unwrap();
        assert_eq!(zero.nnz(), 0);
        assert_eq!(zero.trace(), 0.0);
        assert!(operator_to_flow(&net, &zero).unwrap().is_zero());
        assert_eq!(annihilation_check(&sys, &zero).max_defect, 0.0);
        assert_eq!(annihilation_check(&sys, &OperatorMatrix::identity(8)).max_defect, 1.0);
    }

    #[test]
    fn escaping_ray_has_unit_trace() {
        let sys = make_larson_wogen::<Rational>(&WeightSequenceSpec::geometric(1.0, 2.0), 12).unwrap();
        let net = build_network(build_bipartite(&sys)).unwrap();
        let mut ray = vec![net.source()];
        ray.extend(1..=12);
        let flow = crate::ray::flow_from_ray(&net, &ray).unwrap();
        let op = flow_to_operator(&net, &flow).unwrap();
        assert_eq!(op.trace(), Rational::from_ratio(1, 1));
        assert_eq!(annihilation_check(&sys, &op).max_defect, Rational::from_ratio(0, 1));
        assert_eq!(op.l1_norm(), flow_stats(&net, &flow).unwrap().mass);
    }

    #[test]
    fn off_support_entry_rejected() {
        let (_, net) = lw(1.0, 6);
        let mut op = OperatorMatrix::new();
        op.set(1, 4, 1.0);
        assert_eq!(operator_to_flow(&net, &op), Err(Error::InconsistentOperator { row: 1, col: 4 }));
        let mut op = OperatorMatrix::new();
        op.set(2, 1, 1.0);
        assert!(operator_to_flow(&net, &op).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let mut op = OperatorMatrix::<f64>::new();
        op.set(1, 1, 0.5);
        op.set(1, 2, -2.0);
        let dump = op.to_dump();
        assert_eq!(dump.trace, 0.5);
        assert_eq!(OperatorMatrix::from_dump(&dump).unwrap(), op);
        assert_eq!(op.bandwidth(), 1);
    }
}

//! Truncated finite-band biorthogonal systems.
//!
//! A system is stored through its two coefficient matrices
//! `f(n, k) = <f_n, e_k>` and `fstar(n, k) = <f*_n, e_k>` over the indices
//! `1..=n_max`. Entries that would fall outside the truncation are dropped,
//! so rows within `bandwidth` of `n_max` are frontier rows.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::WeightSequenceSpec;

/// Which of the two vectors of index `n` is the basis vector `e_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `f*_n = e_n`.
    Left,
    /// `f_n = e_n`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matrix {
    F,
    FStar,
}

/// Row-wise access to a (possibly infinite) band system. Rows are pure
/// functions of their index, so sources can be shared between threads and
/// expanded lazily.
pub trait RowSource<S>: Send + Sync {
    fn bandwidth(&self) -> usize;

    /// Largest index, `None` when the source is unbounded.
    fn limit(&self) -> Option<usize>;

    /// `None` beyond the limit.
    fn side(&self, n: usize) -> Result<Option<Side>>;

    /// Nonzero entries `(k, <f_n, e_k>)` of row `n`, diagonal included.
    fn f_row(&self, n: usize) -> Result<Vec<(usize, S)>>;

    /// Nonzero entries `(k, <f*_n, e_k>)` of row `n`, diagonal included.
    fn fstar_row(&self, n: usize) -> Result<Vec<(usize, S)>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSystem<S> {
    n_max: usize,
    bandwidth: usize,
    sides: Vec<Side>,
    f: BTreeMap<(usize, usize), S>,
    fstar: BTreeMap<(usize, usize), S>,
}

impl<S: Scalar> BandSystem<S> {
    /// Assembles a system from raw entries. Only structural problems (index
    /// out of range, wrong number of sides) are errors; the defining
    /// conditions are checked by [`validate_system`].
    pub fn from_parts(
        bandwidth: usize,
        sides: Vec<Side>,
        f: BTreeMap<(usize, usize), S>,
        fstar: BTreeMap<(usize, usize), S>,
    ) -> Result<Self> {
        let n_max = sides.len();
        if n_max == 0 {
            return Err(Error::MalformedSystem("a system needs at least one index".to_owned()));
        }
        for (matrix, entries) in [("f", &f), ("fstar", &fstar)] {
            if let Some(&(n, k)) = entries.keys().find(|&&(n, k)| n == 0 || k == 0 || n > n_max || k > n_max) {
                return Err(Error::MalformedSystem(format!(
                    "{matrix} entry ({n}, {k}) lies outside 1..={n_max}"
                )));
            }
        }
        let drop_zeros = |m: BTreeMap<(usize, usize), S>| m.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(Self { n_max, bandwidth, sides, f: drop_zeros(f), fstar: drop_zeros(fstar) })
    }

    /// System given by the off-diagonal entries of `f` only. Unit diagonals
    /// are added and `fstar` is derived from the skew relation
    /// `fstar(k, n) = -f(n, k)`.
    pub fn from_f_entries(sides: Vec<Side>, bandwidth: usize, f_entries: &[(usize, usize, S)]) -> Result<Self> {
        let n_max = sides.len();
        let mut f = BTreeMap::new();
        let mut fstar = BTreeMap::new();
        for n in 1..=n_max {
            f.insert((n, n), S::one());
            fstar.insert((n, n), S::one());
        }
        for (n, k, v) in f_entries {
            f.insert((*n, *k), v.clone());
            if n != k {
                fstar.insert((*k, *n), -v.clone());
            }
        }
        Self::from_parts(bandwidth, sides, f, fstar)
    }

    /// `f_n = f*_n = e_n` for every index, all assigned to the left part.
    pub fn identity(n_max: usize) -> Result<Self> {
        Self::diagonal(vec![Side::Left; n_max])
    }

    /// Orthonormal system with the given side assignment.
    pub fn diagonal(sides: Vec<Side>) -> Result<Self> {
        Self::from_f_entries(sides, 0, &[])
    }

    /// Materializes rows `1..=n_max` of a source, clipping entries beyond the
    /// truncation.
    pub fn from_source<R: RowSource<S> + ?Sized>(source: &R, n_max: usize) -> Result<Self> {
        if let Some(limit) = source.limit() {
            if n_max > limit {
                return Err(Error::MalformedSystem(format!("source ends at index {limit}, asked for {n_max}")));
            }
        }
        let mut sides = Vec::with_capacity(n_max);
        let mut f = BTreeMap::new();
        let mut fstar = BTreeMap::new();
        for n in 1..=n_max {
            let side = source
                .side(n)?
                .ok_or_else(|| Error::MalformedSystem(format!("source has no index {n}")))?;
            sides.push(side);
            let in_range = |k: &usize| (1..=n_max).contains(k);
            f.extend(source.f_row(n)?.into_iter().filter(|(k, _)| in_range(k)).map(|(k, v)| ((n, k), v)));
            fstar.extend(source.fstar_row(n)?.into_iter().filter(|(k, _)| in_range(k)).map(|(k, v)| ((n, k), v)));
        }
        Self::from_parts(source.bandwidth(), sides, f, fstar)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    /// Panics if `n` is outside `1..=n_max`.
    pub fn side_of(&self, n: usize) -> Side {
        self.sides[n - 1]
    }

    pub fn indices_on(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        (1..=self.n_max).filter(move |&n| self.side_of(n) == side)
    }

    pub fn f(&self, n: usize, k: usize) -> S {
        self.f.get(&(n, k)).cloned().unwrap_or_else(S::zero)
    }

    pub fn fstar(&self, n: usize, k: usize) -> S {
        self.fstar.get(&(n, k)).cloned().unwrap_or_else(S::zero)
    }

    pub fn f_entries(&self) -> &BTreeMap<(usize, usize), S> {
        &self.f
    }

    pub fn fstar_entries(&self) -> &BTreeMap<(usize, usize), S> {
        &self.fstar
    }

    pub fn row(&self, matrix: Matrix, n: usize) -> impl Iterator<Item = (usize, &S)> + '_ {
        let entries = match matrix {
            Matrix::F => &self.f,
            Matrix::FStar => &self.fstar,
        };
        entries.range((n, 0)..=(n, usize::MAX)).map(|(&(_, k), v)| (k, v))
    }

    /// Indices whose band reaches past the truncation.
    pub fn interior_limit(&self) -> usize {
        self.n_max.saturating_sub(self.bandwidth)
    }

    /// Same system with every entry mapped into another scalar field.
    pub fn convert<T: Scalar>(&self) -> Result<BandSystem<T>> {
        let map = |m: &BTreeMap<(usize, usize), S>| -> Result<BTreeMap<(usize, usize), T>> {
            m.iter()
                .map(|(&key, v)| {
                    T::from_f64_value(v.as_f64())
                        .map(|t| (key, t))
                        .ok_or_else(|| Error::MalformedSystem(format!("entry {key:?} is not representable")))
                })
                .collect()
        };
        BandSystem::from_parts(self.bandwidth, self.sides.clone(), map(&self.f)?, map(&self.fstar)?)
    }
}

impl<S: Scalar> RowSource<S> for BandSystem<S> {
    fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn limit(&self) -> Option<usize> {
        Some(self.n_max)
    }

    fn side(&self, n: usize) -> Result<Option<Side>> {
        Ok((1..=self.n_max).contains(&n).then(|| self.side_of(n)))
    }

    fn f_row(&self, n: usize) -> Result<Vec<(usize, S)>> {
        Ok(self.row(Matrix::F, n).map(|(k, v)| (k, v.clone())).collect())
    }

    fn fstar_row(&self, n: usize) -> Result<Vec<(usize, S)>> {
        Ok(self.row(Matrix::FStar, n).map(|(k, v)| (k, v.clone())).collect())
    }
}

/// Unbounded Larson–Wogen rows:
/// odd `n` is left with `f_n = -a_n e_{n-1} + e_n + a_{n+1} e_{n+1}`,
/// even `n` is right with `f*_n = -a_n e_{n-1} + e_n + a_{n+1} e_{n+1}`.
#[derive(Debug, Clone)]
pub struct LarsonWogenRows {
    weights: WeightSequenceSpec,
}

impl LarsonWogenRows {
    pub fn new(weights: WeightSequenceSpec) -> Result<Self> {
        weights.validate()?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &WeightSequenceSpec {
        &self.weights
    }

    fn band_row<S: Scalar>(&self, n: usize) -> Result<Vec<(usize, S)>> {
        let convert = |x: f64| {
            S::from_f64_value(x).ok_or_else(|| Error::InvalidWeights(format!("weight {x} is not representable")))
        };
        let mut row = Vec::with_capacity(3);
        if n > 1 {
            row.push((n - 1, convert(-self.weights.weight(n)?)?));
        }
        row.push((n, S::one()));
        row.push((n + 1, convert(self.weights.weight(n + 1)?)?));
        Ok(row)
    }
}

impl<S: Scalar> RowSource<S> for LarsonWogenRows {
    fn bandwidth(&self) -> usize {
        1
    }

    fn limit(&self) -> Option<usize> {
        None
    }

    fn side(&self, n: usize) -> Result<Option<Side>> {
        Ok((n >= 1).then_some(if n % 2 == 1 { Side::Left } else { Side::Right }))
    }

    fn f_row(&self, n: usize) -> Result<Vec<(usize, S)>> {
        if n % 2 == 1 {
            self.band_row(n)
        } else {
            Ok(vec![(n, S::one())])
        }
    }

    fn fstar_row(&self, n: usize) -> Result<Vec<(usize, S)>> {
        if n % 2 == 0 {
            self.band_row(n)
        } else {
            Ok(vec![(n, S::one())])
        }
    }
}

/// Larson–Wogen system truncated at `n_max`.
pub fn make_larson_wogen<S: Scalar>(weights: &WeightSequenceSpec, n_max: usize) -> Result<BandSystem<S>> {
    let rows = LarsonWogenRows::new(weights.clone())?;
    BandSystem::from_source(&rows, n_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition")]
pub enum Violation {
    /// C2: the row that should be `e_n` has another entry.
    UnitRow { row: usize, side: Side, matrix: Matrix, entry: (usize, usize) },
    /// C3: a diagonal entry differs from one.
    UnitDiagonal { index: usize, matrix: Matrix },
    /// C4: `f(n, k) != -fstar(k, n)`.
    Skew { n: usize, k: usize },
    /// C5: nonzero entry farther than the bandwidth from the diagonal.
    OutsideBand { matrix: Matrix, entry: (usize, usize) },
    /// One of the two parts has no index.
    EmptyPart { side: Side },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the defining conditions of a B-class truncation. Comparisons are
/// exact: entries are data and the conditions are structural.
pub fn validate_system<S: Scalar>(sys: &BandSystem<S>) -> ValidationReport {
    let mut violations = Vec::new();

    for n in 1..=sys.n_max() {
        let side = sys.side_of(n);
        let unit_matrix = match side {
            Side::Left => Matrix::FStar,
            Side::Right => Matrix::F,
        };
        for (k, _) in sys.row(unit_matrix, n) {
            if k != n {
                violations.push(Violation::UnitRow { row: n, side, matrix: unit_matrix, entry: (n, k) });
            }
        }
    }

    for n in 1..=sys.n_max() {
        if !sys.f(n, n).is_one() {
            violations.push(Violation::UnitDiagonal { index: n, matrix: Matrix::F });
        }
        if !sys.fstar(n, n).is_one() {
            violations.push(Violation::UnitDiagonal { index: n, matrix: Matrix::FStar });
        }
    }

    let mut pairs: Vec<(usize, usize)> = sys
        .f_entries()
        .keys()
        .copied()
        .chain(sys.fstar_entries().keys().map(|&(k, n)| (n, k)))
        .filter(|(n, k)| n != k)
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    for (n, k) in pairs {
        if sys.f(n, k) != -sys.fstar(k, n) {
            violations.push(Violation::Skew { n, k });
        }
    }

    for (matrix, entries) in [(Matrix::F, sys.f_entries()), (Matrix::FStar, sys.fstar_entries())] {
        for &(n, k) in entries.keys() {
            if n.abs_diff(k) > sys.bandwidth() {
                violations.push(Violation::OutsideBand { matrix, entry: (n, k) });
            }
        }
    }

    for side in [Side::Left, Side::Right] {
        if sys.indices_on(side).next().is_none() {
            violations.push(Violation::EmptyPart { side });
        }
    }

    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalityReport<S> {
    pub max_defect: S,
    /// Pair `(n, m)` attaining the maximum.
    pub worst: (usize, usize),
    pub within_tolerance: bool,
}

/// `max |<f_n, f*_m> - δ_nm|` over interior indices `n, m <= n_max - bandwidth`.
/// Pairs farther apart than twice the bandwidth have disjoint supports and
/// contribute exactly zero, so only nearby pairs are summed.
pub fn biorthogonality_check<S: Scalar>(sys: &BandSystem<S>, tol: &S) -> Result<BiorthogonalityReport<S>> {
    let bw = sys.bandwidth();
    if sys.n_max() <= 2 * bw {
        return Err(Error::TruncationTooShallow { n_max: sys.n_max(), bandwidth: bw });
    }
    let interior = sys.interior_limit();
    let mut max_defect = S::zero();
    let mut worst = (1, 1);
    for n in 1..=interior {
        let lo = n.saturating_sub(2 * bw).max(1);
        let hi = (n + 2 * bw).min(interior);
        for m in lo..=hi {
            let inner = crate::scalar::sum(sys.row(Matrix::F, n).map(|(k, v)| v.clone() * sys.fstar(m, k)));
            let expected = if n == m { S::one() } else { S::zero() };
            let defect = (inner - expected).abs();
            if defect > max_defect {
                max_defect = defect;
                worst = (n, m);
            }
        }
    }
    let within_tolerance = max_defect <= *tol;
    Ok(BiorthogonalityReport { max_defect, worst, within_tolerance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSystemConfig {
    pub n_max: usize,
    pub bandwidth: usize,
    /// Probability that an allowed off-diagonal entry is filled.
    pub fill: f64,
}

impl RandomSystemConfig {
    pub fn new(n_max: usize, bandwidth: usize) -> Self {
        Self { n_max, bandwidth, fill: 1.0 }
    }
}

/// Random B-class truncation: fair-coin sides (at least one of each), left
/// rows of `f` filled on right columns inside the band with magnitudes in
/// `[0.1, 2]` and random sign, `fstar` derived from the skew relation.
pub fn random_b_class<S: Scalar, R: Rng + ?Sized>(rng: &mut R, config: RandomSystemConfig) -> Result<BandSystem<S>> {
    let RandomSystemConfig { n_max, bandwidth, fill } = config;
    if n_max < 2 {
        return Err(Error::MalformedSystem("random systems need n_max >= 2".to_owned()));
    }
    let mut sides: Vec<Side> =
        (0..n_max).map(|_| if rng.random_bool(0.5) { Side::Left } else { Side::Right }).collect();
    for forced in [Side::Left, Side::Right] {
        if !sides.contains(&forced) {
            let i = rng.random_range(0..n_max);
            sides[i] = forced;
        }
    }
    let mut entries = Vec::new();
    for l in 1..=n_max {
        if sides[l - 1] != Side::Left {
            continue;
        }
        let lo = l.saturating_sub(bandwidth).max(1);
        let hi = (l + bandwidth).min(n_max);
        for r in lo..=hi {
            if sides[r - 1] == Side::Right && rng.random_bool(fill) {
                let magnitude: f64 = rng.random_range(0.1..=2.0);
                let value = if rng.random_bool(0.5) { magnitude } else { -magnitude };
                let value = S::from_f64_value(value)
                    .ok_or_else(|| Error::MalformedSystem(format!("{value} is not representable")))?;
                entries.push((l, r, value));
            }
        }
    }
    BandSystem::from_f_entries(sides, bandwidth, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_traits::Zero;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lw(weights: WeightSequenceSpec, n_max: usize) -> BandSystem<f64> {
        make_larson_wogen(&weights, n_max).unwrap()
    }

    #[test]
    fn larson_wogen_unit_weights_rows() {
        let sys = lw(WeightSequenceSpec::constant(1.0), 4);
        // f_1 = e_1 + e_2
        assert_eq!(sys.f_row(1).unwrap(), vec![(1, 1.0), (2, 1.0)]);
        // f*_2 = -e_1 + e_2 + e_3
        assert_eq!(sys.fstar_row(2).unwrap(), vec![(1, -1.0), (2, 1.0), (3, 1.0)]);
        assert_eq!(sys.f_row(2).unwrap(), vec![(2, 1.0)]);
        assert_eq!(sys.fstar_row(1).unwrap(), vec![(1, 1.0)]);
        assert_eq!(sys.side_of(1), Side::Left);
        assert_eq!(sys.side_of(2), Side::Right);
    }

    #[test]
    fn larson_wogen_geometric_row() {
        // a_3 = 8, a_4 = 16: f_3 = -8 e_2 + e_3 + 16 e_4
        let sys = lw(WeightSequenceSpec::geometric(1.0, 2.0), 4);
        assert_eq!(sys.f_row(3).unwrap(), vec![(2, -8.0), (3, 1.0), (4, 16.0)]);
    }

    #[test]
    fn larson_wogen_single_row_is_clipped() {
        let sys = lw(WeightSequenceSpec::constant(3.0), 1);
        assert_eq!(sys.f_row(1).unwrap(), vec![(1, 1.0)]);
        let report = validate_system(&sys);
        assert_eq!(report.violations, vec![Violation::EmptyPart { side: Side::Right }]);
        assert_eq!(
            biorthogonality_check(&sys, &1e-12),
            Err(Error::TruncationTooShallow { n_max: 1, bandwidth: 1 })
        );
    }

    #[test]
    fn larson_wogen_rejects_zero_weight() {
        let w = WeightSequenceSpec::with_prefix(vec![1.0, 1.0, 0.0], crate::WeightTail::Constant { c: 1.0 });
        assert_eq!(make_larson_wogen::<f64>(&w, 8), Err(Error::ZeroWeight { index: 3 }));
    }

    #[test]
    fn larson_wogen_validates() {
        let sys = lw(WeightSequenceSpec::constant(1.0), 8);
        assert!(validate_system(&sys).is_valid());
    }

    #[test]
    fn identity_is_flagged() {
        let sys = BandSystem::<f64>::identity(6).unwrap();
        assert_eq!(validate_system(&sys).violations, vec![Violation::EmptyPart { side: Side::Right }]);
    }

    #[test]
    fn sign_flip_breaks_skew() {
        let sys = lw(WeightSequenceSpec::constant(1.0), 8);
        let mut fstar = sys.fstar_entries().clone();
        fstar.insert((2, 1), 1.0);
        let broken =
            BandSystem::from_parts(sys.bandwidth(), sys.sides().to_vec(), sys.f_entries().clone(), fstar).unwrap();
        assert_eq!(validate_system(&broken).violations, vec![Violation::Skew { n: 1, k: 2 }]);
    }

    #[test]
    fn unit_row_and_band_violations() {
        let sides = vec![Side::Left, Side::Right, Side::Left, Side::Right];
        // Right row 2 of f gets an entry: C2; entry (1, 4) is outside bandwidth 1: C5.
        let sys = BandSystem::from_f_entries(sides, 1, &[(2, 1, 0.5), (1, 4, 2.0)]).unwrap();
        let v = validate_system(&sys).violations;
        assert!(v.contains(&Violation::UnitRow { row: 2, side: Side::Right, matrix: Matrix::F, entry: (2, 1) }));
        // fstar(1, 2) = -0.5 lands in the unit row of left index 1.
        assert!(v.contains(&Violation::UnitRow { row: 1, side: Side::Left, matrix: Matrix::FStar, entry: (1, 2) }));
        assert!(v.contains(&Violation::OutsideBand { matrix: Matrix::F, entry: (1, 4) }));
        assert!(v.contains(&Violation::OutsideBand { matrix: Matrix::FStar, entry: (4, 1) }));
    }

    #[test]
    fn diagonal_defect_is_exactly_zero() {
        let sides = (0..10).map(|i| if i % 2 == 0 { Side::Left } else { Side::Right }).collect();
        let sys = BandSystem::<f64>::diagonal(sides).unwrap();
        assert!(validate_system(&sys).is_valid());
        // bandwidth 0: every index is interior
        let report = biorthogonality_check(&sys, &0.0).unwrap();
        assert_eq!(report.max_defect, 0.0);
    }

    #[test]
    fn larson_wogen_biorthogonal() {
        // <f_1, f*_2> = 1·(-a_2) + a_2·1 = 0, and the same pattern on every pair.
        for weights in [WeightSequenceSpec::constant(1.0), WeightSequenceSpec::power(1.0, -1.0)] {
            let sys = lw(weights, 50);
            let report = biorthogonality_check(&sys, &1e-12).unwrap();
            assert!(report.within_tolerance, "{report:?}");
        }
    }

    #[test]
    fn biorthogonality_detects_broken_pair() {
        let sys = lw(WeightSequenceSpec::constant(2.0), 12);
        let mut f = sys.f_entries().clone();
        f.insert((3, 4), 2.5);
        let broken =
            BandSystem::from_parts(sys.bandwidth(), sys.sides().to_vec(), f, sys.fstar_entries().clone()).unwrap();
        let report = biorthogonality_check(&broken, &1e-12).unwrap();
        assert!(!report.within_tolerance);
        assert_eq!(report.max_defect, 0.5);
        assert_eq!(report.worst, (3, 4));
    }

    #[test]
    fn exact_rational_biorthogonality() {
        let sys: BandSystem<Rational> = make_larson_wogen(&WeightSequenceSpec::power(3.0, -1.0), 40).unwrap();
        let report = biorthogonality_check(&sys, &Rational::tolerance()).unwrap();
        assert!(report.max_defect.is_zero());
    }

    #[test]
    fn random_systems_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for bandwidth in 1..=5 {
            let sys: BandSystem<f64> = random_b_class(&mut rng, RandomSystemConfig::new(60, bandwidth)).unwrap();
            assert!(validate_system(&sys).is_valid());
            assert!(biorthogonality_check(&sys, &1e-12).unwrap().within_tolerance);
        }
    }

    #[test]
    fn malformed_entries_rejected() {
        let sides = vec![Side::Left, Side::Right];
        assert!(BandSystem::from_f_entries(sides, 1, &[(1, 3, 1.0)]).is_err());
        assert!(BandSystem::<f64>::diagonal(Vec::new()).is_err());
    }
}

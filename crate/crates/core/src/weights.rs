//! Weight sequences `a_k` for the Larson–Wogen family and the length series
//! `|1/a_k|` they induce on its graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form rule for the weights past the explicit prefix, as a function of
/// the absolute index `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightTail {
    /// `a_k = c`.
    Constant { c: f64 },
    /// `a_k = c · k^(-p)`.
    Power { c: f64, p: f64 },
    /// `a_k = c · q^k`.
    Geometric { c: f64, q: f64 },
    /// No formula; the caller declares whether `Σ|1/a_k|` is finite and may
    /// give an upper bound for it. Weights must come from the prefix.
    ExplicitL1 {
        summable: bool,
        #[serde(default)]
        bound: Option<f64>,
    },
}

/// Weights `a_1, a_2, …` given as an explicit prefix followed by a tail rule.
/// `a_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequenceSpec {
    #[serde(default)]
    pub prefix: Vec<f64>,
    pub tail: WeightTail,
}

/// Series of edge lengths along the Larson–Wogen ray, `term(k) = |1/a_k|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthSeries {
    Constant { c: f64 },
    /// `c · k^(-p)`.
    Power { c: f64, p: f64 },
    /// `c · q^k`.
    Geometric { c: f64, q: f64 },
    Declared {
        summable: bool,
        bound: Option<f64>,
    },
}

impl WeightSequenceSpec {
    pub fn new(tail: WeightTail) -> Self {
        Self { prefix: Vec::new(), tail }
    }

    pub fn with_prefix(prefix: Vec<f64>, tail: WeightTail) -> Self {
        Self { prefix, tail }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(WeightTail::Constant { c })
    }

    /// `a_k = c · k^(-p)`.
    pub fn power(c: f64, p: f64) -> Self {
        Self::new(WeightTail::Power { c, p })
    }

    /// `a_k = c · q^k`.
    pub fn geometric(c: f64, q: f64) -> Self {
        Self::new(WeightTail::Geometric { c, q })
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &a) in self.prefix.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidWeights(format!("a_{} = {a} is not finite", i + 1)));
            }
            if a == 0.0 {
                return Err(Error::ZeroWeight { index: i + 1 });
            }
        }
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidWeights(format!("{name} = {x} is not finite")))
            }
        };
        match self.tail {
            WeightTail::Constant { c } => {
                finite("c", c)?;
                nonzero_coefficient(c)
            }
            WeightTail::Power { c, p } => {
                finite("c", c)?;
                finite("p", p)?;
                nonzero_coefficient(c)
            }
            WeightTail::Geometric { c, q } => {
                finite("c", c)?;
                finite("q", q)?;
                nonzero_coefficient(c)?;
                if q <= 0.0 {
                    return Err(Error::InvalidWeights(format!("geometric ratio q = {q} must be positive")));
                }
                Ok(())
            }
            WeightTail::ExplicitL1 { bound, .. } => match bound {
                Some(b) if !(b.is_finite() && b >= 0.0) => {
                    Err(Error::InvalidWeights(format!("declared bound {b} must be finite and nonnegative")))
                }
                _ => Ok(()),
            },
        }
    }

    /// `a_k` for `k ≥ 1`; `a_0 = 0`.
    pub fn weight(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        let a = match self.prefix.get(k - 1) {
            Some(&a) => a,
            None => match self.tail {
                WeightTail::Constant { c } => c,
                WeightTail::Power { c, p } => c * power_of_index(k, -p),
                WeightTail::Geometric { c, q } => c * power_of_base(q, k),
                WeightTail::ExplicitL1 { .. } => return Err(Error::TailUndefined { index: k }),
            },
        };
        if a == 0.0 {
            return Err(Error::ZeroWeight { index: k });
        }
        if !a.is_finite() {
            return Err(Error::InvalidWeights(format!("a_{k} = {a} is not representable")));
        }
        Ok(a)
    }

    /// Series followed by the lengths `|1/a_k|` once the prefix is exhausted.
    pub fn length_series(&self) -> LengthSeries {
        match self.tail {
            WeightTail::Constant { c } => LengthSeries::Constant { c: 1.0 / c.abs() },
            WeightTail::Power { c, p } => LengthSeries::Power { c: 1.0 / c.abs(), p: -p },
            WeightTail::Geometric { c, q } => LengthSeries::Geometric { c: 1.0 / c.abs(), q: 1.0 / q },
            WeightTail::ExplicitL1 { summable, bound } => LengthSeries::Declared { summable, bound },
        }
    }
}

impl LengthSeries {
    pub fn converges(&self) -> bool {
        match *self {
            LengthSeries::Constant { .. } => false,
            LengthSeries::Power { p, .. } => p > 1.0,
            LengthSeries::Geometric { q, .. } => q < 1.0,
            LengthSeries::Declared { summable, .. } => summable,
        }
    }

    /// `k`-th term, `None` for declared series.
    pub fn term(&self, k: usize) -> Option<f64> {
        match *self {
            LengthSeries::Constant { c } => Some(c),
            LengthSeries::Power { c, p } => Some(c * power_of_index(k, -p)),
            LengthSeries::Geometric { c, q } => Some(c * power_of_base(q, k)),
            LengthSeries::Declared { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            LengthSeries::Constant { c } => format!("sum of constant {c} diverges"),
            LengthSeries::Power { c, p } if p > 1.0 => format!("sum of {c}*k^-{p} converges (p > 1)"),
            LengthSeries::Power { c, p } => format!("sum of {c}*k^-{p} diverges (p <= 1)"),
            LengthSeries::Geometric { c, q } if q < 1.0 => format!("sum of {c}*{q}^k converges (q < 1)"),
            LengthSeries::Geometric { c, q } => format!("sum of {c}*{q}^k diverges (q >= 1)"),
            LengthSeries::Declared { summable: true, .. } => "declared summable".to_owned(),
            LengthSeries::Declared { summable: false, .. } => "declared not summable".to_owned(),
        }
    }
}

fn nonzero_coefficient(c: f64) -> Result<()> {
    if c == 0.0 {
        Err(Error::InvalidWeights("tail coefficient c must be nonzero".to_owned()))
    } else {
        Ok(())
    }
}

// Integer exponents go through powi so that k^2, 2^k and friends stay exact.
fn power_of_index(k: usize, exponent: f64) -> f64 {
    let k = k as f64;
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        k.powi(exponent as i32)
    } else {
        k.powf(exponent)
    }
}

fn power_of_base(q: f64, k: usize) -> f64 {
    match i32::try_from(k) {
        Ok(k) => q.powi(k),
        Err(_) => q.powf(k as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_then_tail() {
        let w = WeightSequenceSpec::with_prefix(vec![5.0, -3.0], WeightTail::Constant { c: 2.0 });
        assert_eq!(w.weight(0).unwrap(), 0.0);
        assert_eq!(w.weight(1).unwrap(), 5.0);
        assert_eq!(w.weight(2).unwrap(), -3.0);
        assert_eq!(w.weight(3).unwrap(), 2.0);
    }

    #[test]
    fn catalog_weights_are_exact() {
        assert_eq!(WeightSequenceSpec::geometric(1.0, 2.0).weight(4).unwrap(), 16.0);
        assert_eq!(WeightSequenceSpec::power(1.0, -2.0).weight(7).unwrap(), 49.0);
        assert_eq!(WeightSequenceSpec::power(1.0, -1.0).weight(7).unwrap(), 7.0);
    }

    #[test]
    fn zero_weight_rejected() {
        let w = WeightSequenceSpec::with_prefix(vec![1.0, 1.0, 0.0], WeightTail::Constant { c: 1.0 });
        assert_eq!(w.validate(), Err(Error::ZeroWeight { index: 3 }));
        assert_eq!(w.weight(3), Err(Error::ZeroWeight { index: 3 }));
        assert!(WeightSequenceSpec::constant(0.0).validate().is_err());
        assert!(WeightSequenceSpec::geometric(1.0, -2.0).validate().is_err());
    }

    #[test]
    fn explicit_tail_needs_prefix() {
        let w = WeightSequenceSpec::with_prefix(
            vec![1.0, 2.0],
            WeightTail::ExplicitL1 { summable: true, bound: Some(3.0) },
        );
        assert_eq!(w.weight(2).unwrap(), 2.0);
        assert_eq!(w.weight(3), Err(Error::TailUndefined { index: 3 }));
    }

    #[test]
    fn series_tests_match_catalog() {
        let cases = [
            (WeightSequenceSpec::constant(1.0), false),
            (WeightSequenceSpec::power(1.0, -1.0), false),
            (WeightSequenceSpec::power(1.0, -2.0), true),
            (WeightSequenceSpec::power(1.0, -1.01), true),
            (WeightSequenceSpec::geometric(1.0, 2.0), true),
            (WeightSequenceSpec::geometric(1.0, 0.5), false),
            (WeightSequenceSpec::geometric(3.0, 1.0), false),
        ];
        for (w, converges) in cases {
            assert_eq!(w.length_series().converges(), converges, "{w:?}");
        }
    }

    #[test]
    fn length_terms_are_reciprocal_weights() {
        for w in [
            WeightSequenceSpec::power(-2.0, -1.5),
            WeightSequenceSpec::geometric(0.5, 3.0),
            WeightSequenceSpec::constant(-4.0),
        ] {
            let series = w.length_series();
            for k in 1..20 {
                let expected = 1.0 / w.weight(k).unwrap().abs();
                let got = series.term(k).unwrap();
                assert!((got - expected).abs() <= 1e-12 * expected, "{w:?} k={k}");
            }
        }
    }

    #[test]
    fn tail_json_shape() {
        let w: WeightSequenceSpec =
            serde_json::from_str(r#"{"tail":{"kind":"geometric","c":1,"q":2}}"#).unwrap();
        assert_eq!(w, WeightSequenceSpec::geometric(1.0, 2.0));
    }
}

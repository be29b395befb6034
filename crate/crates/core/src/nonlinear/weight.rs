use alloc::vec::Vec;

use crate::{math, Error, Result};

/// Positive weights `ω(t)` for the norms `sup_t ω(t)‖f(t)‖`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFunction {
    /// `e^{−g t}`.
    Exponential { g: f64 },
    /// `e^{−g_n t}` on `[n−1, n)`; the last rate continues past the list.
    PiecewiseExponential { rates: Vec<f64> },
    /// `e^{−c t}/(1 + t²)`, the regularized form of `e^{−ct}/t²`.
    PolyExp { c: f64 },
    /// Pointwise minimum.
    Min(Vec<WeightFunction>),
}

impl WeightFunction {
    /// `ω ≡ 1`.
    pub fn unit() -> Self {
        WeightFunction::Exponential { g: 0.0 }
    }

    /// `min(ω₁, ω₂)` with `ω₁` piecewise exponential and `ω₂` sharing its
    /// largest rate.
    pub fn combined(rates: Vec<f64>) -> Self {
        let c = rates.iter().copied().fold(0.0, f64::max);
        WeightFunction::Min(alloc::vec![
            WeightFunction::PiecewiseExponential { rates },
            WeightFunction::PolyExp { c },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = Error::InvalidParameter {
            name: "weight",
            reason: "rates must be finite and non-negative",
        };
        match self {
            WeightFunction::Exponential { g } | WeightFunction::PolyExp { c: g } => {
                if !(g.is_finite() && *g >= 0.0) {
                    return Err(bad);
                }
            }
            WeightFunction::PiecewiseExponential { rates } => {
                if rates.is_empty() || rates.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return Err(bad);
                }
            }
            WeightFunction::Min(parts) => {
                if parts.is_empty() {
                    return Err(bad);
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WeightFunction::Exponential { g } => math::exp(-g * t),
            WeightFunction::PiecewiseExponential { rates } => {
                math::exp(-rates[interval_index(t, rates.len())] * t)
            }
            WeightFunction::PolyExp { c } => math::exp(-c * t) / (1.0 + t * t),
            WeightFunction::Min(parts) => parts.iter().map(|p| p.eval(t)).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Zero-based unit interval containing `t`, clamped to `count − 1`.
pub(crate) fn interval_index(t: f64, count: usize) -> usize {
    let n = math::floor(t.max(0.0));
    if n >= count as f64 {
        count - 1
    } else {
        n as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_weight_starts_at_one_and_switches_rates() {
        let w = WeightFunction::PiecewiseExponential {
            rates: alloc::vec![1.0, 3.0],
        };
        assert_eq!(w.eval(0.0), 1.0);
        assert!((w.eval(0.5) - math::exp(-0.5)).abs() < 1e-15);
        assert!((w.eval(1.5) - math::exp(-4.5)).abs() < 1e-15);
        assert!((w.eval(7.0) - math::exp(-21.0)).abs() < 1e-20);
    }

    #[test]
    fn combined_weight_is_the_minimum() {
        let w = WeightFunction::combined(alloc::vec![0.5, 2.0]);
        for &t in &[0.0, 0.4, 1.0, 2.5] {
            let a = WeightFunction::PiecewiseExponential { rates: alloc::vec![0.5, 2.0] }.eval(t);
            let b = math::exp(-2.0 * t) / (1.0 + t * t);
            assert_eq!(w.eval(t), a.min(b));
            assert!(w.eval(t) > 0.0);
        }
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(WeightFunction::Exponential { g: -1.0 }.validate().is_err());
        assert!(WeightFunction::PiecewiseExponential { rates: alloc::vec![] }.validate().is_err());
    }
}

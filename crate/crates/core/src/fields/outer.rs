use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Scalar outer functions `u: R → R` with closed-form derivatives up to third
/// order.
#[derive(Debug, Clone, PartialEq)]
pub enum OuterFunction {
    Identity,
    Constant { value: f64 },
    /// `slope · s + intercept`.
    Linear { slope: f64, intercept: f64 },
    /// `tanh(gain · s)`.
    Tanh { gain: f64 },
    /// `amplitude · exp(−s² / (2 width²))`.
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude · sin(frequency · s)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `coeff · s²`.
    Quadratic { coeff: f64 },
}

/// Global sup-norms of `u`, `u'`, `u''`; `None` when unbounded on `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterBounds {
    pub u0: Option<f64>,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
}

impl OuterFunction {
    pub fn name(&self) -> &'static str {
        match self {
            OuterFunction::Identity => "identity",
            OuterFunction::Constant { .. } => "constant",
            OuterFunction::Linear { .. } => "linear",
            OuterFunction::Tanh { .. } => "tanh",
            OuterFunction::Gaussian { .. } => "gaussian",
            OuterFunction::Sine { .. } => "sine",
            OuterFunction::Quadratic { .. } => "quadratic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OuterFunction::Identity => true,
            OuterFunction::Constant { value } => value.is_finite(),
            OuterFunction::Linear { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            OuterFunction::Tanh { gain } => gain.is_finite(),
            OuterFunction::Gaussian { amplitude, width } => {
                amplitude.is_finite() && width > 0.0 && width.is_finite()
            }
            OuterFunction::Sine {
                amplitude,
                frequency,
            } => amplitude.is_finite() && frequency.is_finite(),
            OuterFunction::Quadratic { coeff } => coeff.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "outer function",
                reason: "parameters must be finite and widths positive",
            })
        }
    }

    /// True when `u` does not depend on its argument.
    pub fn is_constant(&self) -> bool {
        match *self {
            OuterFunction::Constant { .. } => true,
            OuterFunction::Linear { slope, .. } => slope == 0.0,
            OuterFunction::Tanh { gain } => gain == 0.0,
            OuterFunction::Gaussian { amplitude, .. } => amplitude == 0.0,
            OuterFunction::Sine {
                amplitude,
                frequency,
            } => amplitude == 0.0 || frequency == 0.0,
            OuterFunction::Quadratic { coeff } => coeff == 0.0,
            OuterFunction::Identity => false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.value(0.0) == 0.0
    }

    pub fn value(&self, s: f64) -> f64 {
        self.derivatives(s)[0]
    }

    pub fn d1(&self, s: f64) -> f64 {
        self.derivatives(s)[1]
    }

    pub fn d2(&self, s: f64) -> f64 {
        self.derivatives(s)[2]
    }

    pub fn d3(&self, s: f64) -> f64 {
        self.derivatives(s)[3]
    }

    /// `[u(s), u'(s), u''(s), u'''(s)]`.
    pub fn derivatives(&self, s: f64) -> [f64; 4] {
        match *self {
            OuterFunction::Identity => [s, 1.0, 0.0, 0.0],
            OuterFunction::Constant { value } => [value, 0.0, 0.0, 0.0],
            OuterFunction::Linear { slope, intercept } => [slope * s + intercept, slope, 0.0, 0.0],
            OuterFunction::Tanh { gain } => {
                let t = math::tanh(gain * s);
                let sech2 = 1.0 - t * t;
                [
                    t,
                    gain * sech2,
                    -2.0 * gain * gain * t * sech2,
                    -2.0 * gain * gain * gain * sech2 * (1.0 - 3.0 * t * t),
                ]
            }
            OuterFunction::Gaussian { amplitude, width } => {
                let w2 = width * width;
                let e = amplitude * math::exp(-0.5 * s * s / w2);
                [
                    e,
                    -s / w2 * e,
                    (s * s / w2 - 1.0) / w2 * e,
                    (3.0 * s / (w2 * w2) - s * s * s / (w2 * w2 * w2)) * e,
                ]
            }
            OuterFunction::Sine {
                amplitude: a,
                frequency: f,
            } => {
                let (sn, cs) = (math::sin(f * s), math::cos(f * s));
                [a * sn, a * f * cs, -a * f * f * sn, -a * f * f * f * cs]
            }
            OuterFunction::Quadratic { coeff } => [coeff * s * s, 2.0 * coeff * s, 2.0 * coeff, 0.0],
        }
    }

    pub fn bounds(&self) -> OuterBounds {
        match *self {
            OuterFunction::Identity => OuterBounds {
                u0: None,
                u1: Some(1.0),
                u2: Some(0.0),
            },
            OuterFunction::Constant { value } => OuterBounds {
                u0: Some(value.abs()),
                u1: Some(0.0),
                u2: Some(0.0),
            },
            OuterFunction::Linear { slope, intercept } => OuterBounds {
                u0: if slope == 0.0 { Some(intercept.abs()) } else { None },
                u1: Some(slope.abs()),
                u2: Some(0.0),
            },
            // sup|tanh''| = 4/(3√3), attained where tanh² = 1/3
            OuterFunction::Tanh { gain } => OuterBounds {
                u0: Some(if gain == 0.0 { 0.0 } else { 1.0 }),
                u1: Some(gain.abs()),
                u2: Some(gain * gain * 4.0 / (3.0 * math::sqrt(3.0))),
            },
            OuterFunction::Gaussian { amplitude, width } => {
                let a = amplitude.abs();
                OuterBounds {
                    u0: Some(a),
                    u1: Some(a * math::exp(-0.5) / width),
                    u2: Some(a / (width * width)),
                }
            }
            OuterFunction::Sine {
                amplitude,
                frequency,
            } => {
                let (a, f) = (amplitude.abs(), frequency.abs());
                OuterBounds {
                    u0: Some(a),
                    u1: Some(a * f),
                    u2: Some(a * f * f),
                }
            }
            OuterFunction::Quadratic { coeff } => OuterBounds {
                u0: if coeff == 0.0 { Some(0.0) } else { None },
                u1: if coeff == 0.0 { Some(0.0) } else { None },
                u2: Some(2.0 * coeff.abs()),
            },
        }
    }

    /// `sup |u(s)|` over `|s| ≤ radius`.
    pub fn sup_on(&self, radius: f64) -> f64 {
        if let Some(u0) = self.bounds().u0 {
            return u0;
        }
        match *self {
            OuterFunction::Identity => radius,
            OuterFunction::Linear { slope, intercept } => slope.abs() * radius + intercept.abs(),
            OuterFunction::Quadratic { coeff } => coeff.abs() * radius * radius,
            _ => unreachable!("bounded outer functions return early"),
        }
    }
}

/// Vector outer function `s ↦ profile(s) · direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorOuter {
    pub profile: OuterFunction,
    pub direction: Vec<f64>,
}

impl VectorOuter {
    pub fn new(profile: OuterFunction, direction: Vec<f64>) -> Result<Self> {
        profile.validate()?;
        if direction.is_empty() || direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "direction",
                reason: "must be a non-empty finite vector",
            });
        }
        Ok(VectorOuter { profile, direction })
    }

    /// Constant velocity `c`.
    pub fn constant(c: &[f64]) -> Self {
        VectorOuter {
            profile: OuterFunction::Constant { value: 1.0 },
            direction: c.to_vec(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        VectorOuter {
            profile: OuterFunction::Constant { value: 0.0 },
            direction: alloc::vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn is_zero(&self) -> bool {
        self.profile.is_zero() || self.direction.iter().all(|&v| v == 0.0)
    }

    /// `|direction|`, the factor between scalar and vector bounds.
    pub fn scale(&self) -> f64 {
        math::norm(&self.direction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> [OuterFunction; 7] {
        [
            OuterFunction::Identity,
            OuterFunction::Constant { value: -0.4 },
            OuterFunction::Linear {
                slope: 2.0,
                intercept: 0.5,
            },
            OuterFunction::Tanh { gain: 1.3 },
            OuterFunction::Gaussian {
                amplitude: 0.8,
                width: 0.6,
            },
            OuterFunction::Sine {
                amplitude: 1.1,
                frequency: 2.0,
            },
            OuterFunction::Quadratic { coeff: -0.7 },
        ]
    }

    #[test]
    fn derivative_chain_matches_differences() {
        let h = 1e-5;
        for u in registry() {
            for &s in &[-1.3, -0.2, 0.0, 0.45, 2.1] {
                let d = u.derivatives(s);
                let p = u.derivatives(s + h);
                let m = u.derivatives(s - h);
                for k in 0..3 {
                    let fd = (p[k] - m[k]) / (2.0 * h);
                    assert!(
                        (d[k + 1] - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                        "{} order {} at {s}: {} vs {fd}",
                        u.name(),
                        k + 1,
                        d[k + 1]
                    );
                }
            }
        }
    }

    #[test]
    fn global_bounds_dominate_samples() {
        for u in registry() {
            let b = u.bounds();
            for i in -4000..=4000 {
                let s = i as f64 * 2e-3;
                let d = u.derivatives(s);
                if let Some(u0) = b.u0 {
                    assert!(d[0].abs() <= u0 + 1e-12, "{}", u.name());
                }
                if let Some(u1) = b.u1 {
                    assert!(d[1].abs() <= u1 + 1e-12, "{}", u.name());
                }
                if let Some(u2) = b.u2 {
                    assert!(d[2].abs() <= u2 + 1e-12, "{}", u.name());
                }
            }
        }
    }

    #[test]
    fn tanh_second_derivative_bound_is_tight() {
        let u = OuterFunction::Tanh { gain: 1.0 };
        let peak = (0..20000)
            .map(|i| u.d2(i as f64 * 1e-4).abs())
            .fold(0.0, f64::max);
        assert!((peak - u.bounds().u2.unwrap()).abs() < 1e-6);
    }
}

use alloc::vec;
use alloc::vec::Vec;

use super::{kernel_convolve, Convolved, Kernel, OuterFunction, ScalarField, VectorOuter};
use crate::measure::ParticleMeasure;
use crate::{Error, Result};

/// Velocity summand `v(k^K_μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTerm {
    pub outer: VectorOuter,
    pub kernel: Kernel,
}

/// Growth-rate summand `m(k^K_μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTerm {
    pub outer: OuterFunction,
    pub kernel: Kernel,
}

impl VelocityTerm {
    pub fn new(outer: VectorOuter, kernel: Kernel) -> Self {
        VelocityTerm { outer, kernel }
    }

    pub fn constant(c: &[f64]) -> Self {
        VelocityTerm::new(VectorOuter::constant(c), Kernel::Constant { value: 0.0 })
    }

    pub fn zero(dim: usize) -> Self {
        VelocityTerm::new(VectorOuter::zero(dim), Kernel::Constant { value: 0.0 })
    }

    fn is_measure_independent(&self) -> bool {
        self.outer.is_zero()
            || self.outer.profile.is_constant()
            || matches!(self.kernel, Kernel::Constant { value } if value == 0.0)
    }
}

impl RateTerm {
    pub fn new(outer: OuterFunction, kernel: Kernel) -> Self {
        RateTerm { outer, kernel }
    }

    pub fn constant(c: f64) -> Self {
        RateTerm::new(OuterFunction::Constant { value: c }, Kernel::Constant { value: 0.0 })
    }

    pub fn zero() -> Self {
        RateTerm::constant(0.0)
    }

    fn is_measure_independent(&self) -> bool {
        self.outer.is_constant() || matches!(self.kernel, Kernel::Constant { value } if value == 0.0)
    }
}

/// Coefficients `b = v₀(k_μ) + h v₁(k_μ)`, `w = m₀(k_μ) + h m₁(k_μ)`, each
/// summand with its own kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub v0: VelocityTerm,
    pub v1: VelocityTerm,
    pub m0: RateTerm,
    pub m1: RateTerm,
    h: f64,
}

impl FieldModel {
    pub fn new(v0: VelocityTerm, v1: VelocityTerm, m0: RateTerm, m1: RateTerm, h: f64) -> Result<Self> {
        let dim = v0.outer.dim();
        if v1.outer.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: v1.outer.dim(),
            });
        }
        for k in [&v0.kernel, &v1.kernel, &m0.kernel, &m1.kernel] {
            k.validate()?;
        }
        for u in [&v0.outer.profile, &v1.outer.profile, &m0.outer, &m1.outer] {
            u.validate()?;
        }
        check_h(h)?;
        Ok(FieldModel { v0, v1, m0, m1, h })
    }

    /// `b ≡ 1 + h`, `w ≡ 0` on the line.
    pub fn scaled_drift(h: f64) -> Result<Self> {
        FieldModel::new(
            VelocityTerm::constant(&[1.0]),
            VelocityTerm::constant(&[1.0]),
            RateTerm::zero(),
            RateTerm::zero(),
            h,
        )
    }

    pub fn zero(dim: usize) -> Self {
        FieldModel {
            v0: VelocityTerm::zero(dim),
            v1: VelocityTerm::zero(dim),
            m0: RateTerm::zero(),
            m1: RateTerm::zero(),
            h: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.v0.outer.dim()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        check_h(h)?;
        Ok(FieldModel { h, ..self.clone() })
    }

    /// True when the perturbation directions `v₁`, `m₁` vanish.
    pub fn is_unperturbed(&self) -> bool {
        self.v1.outer.is_zero() && self.m1.outer.is_zero()
    }

    /// True when the coefficients do not depend on the measure, so the
    /// nonlinear problem is linear.
    pub fn is_measure_independent(&self) -> bool {
        self.v0.is_measure_independent()
            && self.v1.is_measure_independent()
            && self.m0.is_measure_independent()
            && self.m1.is_measure_independent()
    }

    /// The velocity when it is one constant vector for every measure.
    pub fn constant_velocity(&self) -> Option<Vec<f64>> {
        if !(self.v0.is_measure_independent() && self.v1.is_measure_independent()) {
            return None;
        }
        let c0 = self.v0.outer.profile.value(0.0);
        let c1 = self.v1.outer.profile.value(0.0);
        Some(
            (0..self.dim())
                .map(|k| c0 * self.v0.outer.direction[k] + self.h * c1 * self.v1.outer.direction[k])
                .collect(),
        )
    }

    /// Upper estimate of `sup |w|` over measures with total variation `tv`.
    pub fn rate_sup(&self, tv: f64) -> f64 {
        let s0 = self.m0.kernel.bound().sup * tv;
        let s1 = self.m1.kernel.bound().sup * tv;
        self.m0.outer.sup_on(s0) + self.h.abs() * self.m1.outer.sup_on(s1)
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > -0.5 && h < 0.5 {
        Ok(())
    } else {
        Err(Error::HOutOfRange(h))
    }
}

/// The coefficient pair of a model frozen at one measure.
#[derive(Debug, Clone)]
pub struct Coefficients {
    dim: usize,
    velocity: Vec<(f64, VectorOuter, Convolved)>,
    rate: Vec<(f64, OuterFunction, Convolved)>,
}

pub fn perturbed_coefficients(model: &FieldModel, mu: &ParticleMeasure) -> Result<Coefficients> {
    if mu.dim() != model.dim() {
        return Err(Error::DimMismatch {
            expected: model.dim(),
            found: mu.dim(),
        });
    }
    let mut velocity = Vec::new();
    for (factor, term) in [(1.0, &model.v0), (model.h, &model.v1)] {
        if factor != 0.0 && !term.outer.is_zero() {
            velocity.push((factor, term.outer.clone(), kernel_convolve(&term.kernel, mu)));
        }
    }
    let mut rate = Vec::new();
    for (factor, term) in [(1.0, &model.m0), (model.h, &model.m1)] {
        if factor != 0.0 && !term.outer.is_zero() {
            rate.push((factor, term.outer.clone(), kernel_convolve(&term.kernel, mu)));
        }
    }
    Ok(Coefficients {
        dim: model.dim(),
        velocity,
        rate,
    })
}

impl Coefficients {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn velocity(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (factor, v, k) in &self.velocity {
            let s = factor * v.profile.value(k.value(x));
            for j in 0..self.dim {
                out[j] += s * v.direction[j];
            }
        }
    }

    /// Adds `scale · b(x)` to `out`.
    pub fn add_velocity(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        for (factor, v, k) in &self.velocity {
            let s = scale * factor * v.profile.value(k.value(x));
            for j in 0..self.dim {
                out[j] += s * v.direction[j];
            }
        }
    }

    pub fn velocity_jacobian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        let mut g = vec![0.0; d];
        for (factor, v, k) in &self.velocity {
            let slope = factor * v.profile.d1(k.value(x));
            if slope == 0.0 {
                continue;
            }
            k.gradient(x, &mut g);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += slope * v.direction[i] * g[j];
                }
            }
        }
    }

    pub fn rate(&self, x: &[f64]) -> f64 {
        self.rate
            .iter()
            .map(|(factor, m, k)| factor * m.value(k.value(x)))
            .sum()
    }

    pub fn rate_gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut g = vec![0.0; self.dim];
        for (factor, m, k) in &self.rate {
            let slope = factor * m.d1(k.value(x));
            if slope == 0.0 {
                continue;
            }
            k.gradient(x, &mut g);
            for j in 0..self.dim {
                out[j] += slope * g[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_range_enforced() {
        assert!(matches!(FieldModel::scaled_drift(0.5), Err(Error::HOutOfRange(_))));
        assert!(FieldModel::scaled_drift(-0.49).is_ok());
    }

    #[test]
    fn example_field_is_one_plus_h() {
        let mu = ParticleMeasure::from_1d(&[(0.3, 2.0), (-1.0, -1.0)]).unwrap();
        let model = FieldModel::scaled_drift(0.2).unwrap();
        let c = perturbed_coefficients(&model, &mu).unwrap();
        let mut b = [0.0];
        c.velocity(&[5.0], &mut b);
        assert!((b[0] - 1.2).abs() < 1e-15);
        assert_eq!(c.rate(&[5.0]), 0.0);
        assert_eq!(model.constant_velocity().unwrap(), vec![1.2]);
        assert!(model.is_measure_independent());
    }

    #[test]
    fn zero_model_gives_zero_fields() {
        let mu = ParticleMeasure::from_1d(&[(0.3, 2.0)]).unwrap();
        let c = perturbed_coefficients(&FieldModel::zero(1), &mu).unwrap();
        let mut b = [1.0];
        c.velocity(&[0.0], &mut b);
        assert_eq!((b[0], c.rate(&[0.0])), (0.0, 0.0));
    }

    #[test]
    fn h_zero_drops_perturbation() {
        let mu = ParticleMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let model = FieldModel::new(
            VelocityTerm::new(
                VectorOuter::new(OuterFunction::Tanh { gain: 1.0 }, vec![1.0]).unwrap(),
                Kernel::Gaussian { sigma: 1.0 },
            ),
            VelocityTerm::constant(&[3.0]),
            RateTerm::new(OuterFunction::Sine { amplitude: 0.5, frequency: 1.0 }, Kernel::Gaussian { sigma: 1.0 }),
            RateTerm::constant(1.0),
            0.0,
        )
        .unwrap();
        let c = perturbed_coefficients(&model, &mu).unwrap();
        let mut b = [0.0];
        c.velocity(&[0.0], &mut b);
        assert!((b[0] - crate::math::tanh(1.0)).abs() < 1e-15);
        assert!((c.rate(&[0.0]) - 0.5 * crate::math::sin(1.0)).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_differences() {
        let mu = ParticleMeasure::new(2, vec![0.0, 0.0, 1.0, 0.5], vec![1.0, -0.4]).unwrap();
        let model = FieldModel::new(
            VelocityTerm::new(
                VectorOuter::new(OuterFunction::Tanh { gain: 1.5 }, vec![1.0, -0.5]).unwrap(),
                Kernel::Gaussian { sigma: 0.8 },
            ),
            VelocityTerm::new(
                VectorOuter::new(OuterFunction::Identity, vec![0.2, 1.0]).unwrap(),
                Kernel::Wendland { radius: 2.0 },
            ),
            RateTerm::new(OuterFunction::Identity, Kernel::Wendland { radius: 1.5 }),
            RateTerm::zero(),
            0.3,
        )
        .unwrap();
        let c = perturbed_coefficients(&model, &mu).unwrap();
        let x = [0.4, 0.1];
        let mut jac = [0.0; 4];
        c.velocity_jacobian(&x, &mut jac);
        let mut gw = [0.0; 2];
        c.rate_gradient(&x, &mut gw);
        for j in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[j] += 1e-6;
            xm[j] -= 1e-6;
            let (mut bp, mut bm) = ([0.0; 2], [0.0; 2]);
            c.velocity(&xp, &mut bp);
            c.velocity(&xm, &mut bm);
            for i in 0..2 {
                let fd = (bp[i] - bm[i]) / 2e-6;
                assert!((jac[i * 2 + j] - fd).abs() < 1e-7);
            }
            let fd = (c.rate(&xp) - c.rate(&xm)) / 2e-6;
            assert!((gw[j] - fd).abs() < 1e-7);
        }
    }
}

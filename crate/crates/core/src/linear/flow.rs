use alloc::vec;
use alloc::vec::Vec;

use super::{MeasureCurve, TimeGrid};
use crate::measure::ParticleMeasure;
use crate::{math, Error, Result};

/// Trajectories leaving this ball are reported as blow-up.
pub const BLOW_UP_RADIUS: f64 = 1e12;

/// A time-dependent vector field `b(t, x)` with Jacobian in `x`.
pub trait Velocity {
    fn dim(&self) -> usize;
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]);
    /// Row-major `∂ⱼbᵢ`.
    fn velocity_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]);
}

/// A time-dependent scalar growth rate `w(t, x)`.
pub trait Rate {
    fn rate(&self, t: f64, x: &[f64]) -> f64;
}

impl<T: Velocity + ?Sized> Velocity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (**self).velocity(t, x, out)
    }
    fn velocity_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (**self).velocity_jacobian(t, x, out)
    }
}

impl<T: Rate + ?Sized> Rate for &T {
    fn rate(&self, t: f64, x: &[f64]) -> f64 {
        (**self).rate(t, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantVelocity(pub Vec<f64>);

impl Velocity for ConstantVelocity {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn velocity(&self, _: f64, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
    fn velocity_jacobian(&self, _: f64, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRate(pub f64);

impl Rate for ConstantRate {
    fn rate(&self, _: f64, _: &[f64]) -> f64 {
        self.0
    }
}

/// Velocity from closures for the value and the Jacobian.
pub struct FnVelocity<V, J> {
    dim: usize,
    value: V,
    jacobian: J,
}

impl<V, J> FnVelocity<V, J>
where
    V: Fn(f64, &[f64], &mut [f64]),
    J: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(dim: usize, value: V, jacobian: J) -> Self {
        FnVelocity {
            dim,
            value,
            jacobian,
        }
    }
}

impl<V, J> Velocity for FnVelocity<V, J>
where
    V: Fn(f64, &[f64], &mut [f64]),
    J: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.value)(t, x, out)
    }
    fn velocity_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.jacobian)(t, x, out)
    }
}

/// Rate from a closure.
pub struct FnRate<F>(pub F);

impl<F: Fn(f64, &[f64]) -> f64> Rate for FnRate<F> {
    fn rate(&self, t: f64, x: &[f64]) -> f64 {
        (self.0)(t, x)
    }
}

/// `b₀ + h b₁`.
pub struct Perturbed<B0, B1> {
    pub b0: B0,
    pub b1: B1,
    pub h: f64,
}

impl<B0: Velocity, B1: Velocity> Velocity for Perturbed<B0, B1> {
    fn dim(&self) -> usize {
        self.b0.dim()
    }
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; out.len()];
        self.b0.velocity(t, x, out);
        self.b1.velocity(t, x, &mut tmp);
        out.iter_mut().zip(&tmp).for_each(|(o, v)| *o += self.h * v);
    }
    fn velocity_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; out.len()];
        self.b0.velocity_jacobian(t, x, out);
        self.b1.velocity_jacobian(t, x, &mut tmp);
        out.iter_mut().zip(&tmp).for_each(|(o, v)| *o += self.h * v);
    }
}

/// Classical RK4 on the augmented state `(X, E)` with `Ẋ = b(t, X)`,
/// `Ė = w(t, X)`. Returns positions (row-major per node) and exponents.
fn characteristic<B: Velocity + ?Sized, W: Rate + ?Sized>(
    b: &B,
    w: Option<&W>,
    x0: &[f64],
    grid: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = x0.len();
    let n = grid.len();
    let dt = grid.dt();
    let mut xs = Vec::with_capacity(n * d);
    let mut es = Vec::with_capacity(n);
    let mut x = x0.to_vec();
    let mut e = 0.0;
    xs.extend_from_slice(&x);
    es.push(e);
    let mut k = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut ke = [0.0; 4];
    let mut tmp = vec![0.0; d];
    let rate = |t: f64, x: &[f64]| w.map_or(0.0, |w| w.rate(t, x));
    for step in 0..grid.n_steps() {
        let t = grid.time(step);
        let half = t + 0.5 * dt;
        b.velocity(t, &x, &mut k[0]);
        ke[0] = rate(t, &x);
        for j in 0..d {
            tmp[j] = x[j] + 0.5 * dt * k[0][j];
        }
        b.velocity(half, &tmp, &mut k[1]);
        ke[1] = rate(half, &tmp);
        for j in 0..d {
            tmp[j] = x[j] + 0.5 * dt * k[1][j];
        }
        b.velocity(half, &tmp, &mut k[2]);
        ke[2] = rate(half, &tmp);
        for j in 0..d {
            tmp[j] = x[j] + dt * k[2][j];
        }
        let t1 = grid.time(step + 1);
        b.velocity(t1, &tmp, &mut k[3]);
        ke[3] = rate(t1, &tmp);
        for j in 0..d {
            x[j] += dt / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
        }
        e += dt / 6.0 * (ke[0] + 2.0 * ke[1] + 2.0 * ke[2] + ke[3]);
        if !e.is_finite() || x.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_RADIUS) {
            return Err(Error::BlowUp { time: t1 });
        }
        xs.extend_from_slice(&x);
        es.push(e);
    }
    Ok((xs, es))
}

/// RK4 trajectory of `Ẋ = b(t, X)`, `X(0) = x0`, one row per grid node.
pub fn integrate_flow<B: Velocity + ?Sized>(b: &B, x0: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    if x0.len() != b.dim() {
        return Err(Error::DimMismatch {
            expected: b.dim(),
            found: x0.len(),
        });
    }
    characteristic::<B, ConstantRate>(b, None, x0, grid).map(|(xs, _)| xs)
}

/// Representation formula `ν_t = X_b(t,·)#(e^{∫₀ᵗ w(s, X_b(s,·)) ds} ν₀)`
/// evaluated particle by particle.
pub fn solve_linear<B: Velocity + ?Sized, W: Rate + ?Sized>(
    b: &B,
    w: &W,
    mu0: &ParticleMeasure,
    grid: &TimeGrid,
) -> Result<MeasureCurve> {
    let d = mu0.dim();
    if b.dim() != d {
        return Err(Error::DimMismatch {
            expected: b.dim(),
            found: d,
        });
    }
    let n = mu0.len();
    let nodes = grid.len();
    let mut coords = vec![Vec::with_capacity(n * d); nodes];
    let mut weights = vec![Vec::with_capacity(n); nodes];
    for i in 0..n {
        let (xs, es) = characteristic(b, Some(w), mu0.point(i), grid)?;
        let a = mu0.weight(i);
        for k in 0..nodes {
            coords[k].extend_from_slice(&xs[k * d..(k + 1) * d]);
            weights[k].push(a * math::exp(es[k]));
        }
    }
    let snapshots = coords
        .into_iter()
        .zip(weights)
        .map(|(c, w)| ParticleMeasure::new(d, c, w))
        .collect::<Result<Vec<_>>>()?;
    MeasureCurve::new(grid.clone(), snapshots)
}

//! Discrete checks of the weak formulation and of the flow estimates.

use alloc::vec;
use alloc::vec::Vec;

use super::flow::{integrate_flow, Perturbed, Rate, Velocity};
use super::{MeasureCurve, TimeGrid};
use crate::measure::ParticleMeasure;
use crate::norms::{flat_distance, BoxGrid};
use crate::{math, Result};

/// Space-time test function with its partial derivatives.
pub trait TestFunction {
    fn value(&self, t: f64, x: &[f64]) -> f64;
    fn time_derivative(&self, t: f64, x: &[f64]) -> f64;
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]);
}

/// `exp(−1/(1−τ²))` on `(−1, 1)` with its derivative.
fn smooth_bump(tau: f64) -> (f64, f64) {
    if tau.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - tau * tau;
    let v = math::exp(-1.0 / q);
    (v, -2.0 * tau / (q * q) * v)
}

/// Product of `C^∞` bumps, supported in `|t − t_c| < t_half` and
/// `|x − c| < radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpTest {
    pub t_center: f64,
    pub t_half: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpTest {
    fn space(&self, x: &[f64]) -> (f64, f64, f64) {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let rho2 = r2 / (self.radius * self.radius);
        if rho2 >= 1.0 {
            return (0.0, 0.0, rho2);
        }
        // ψ(ρ²) = exp(−1/(1−ρ²)); ∇ = ψ'(ρ²) 2(x−c)/R²
        let q = 1.0 - rho2;
        let v = math::exp(-1.0 / q);
        (v, -v / (q * q), rho2)
    }
}

impl TestFunction for BumpTest {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        smooth_bump((t - self.t_center) / self.t_half).0 * self.space(x).0
    }

    fn time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        smooth_bump((t - self.t_center) / self.t_half).1 / self.t_half * self.space(x).0
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let tb = smooth_bump((t - self.t_center) / self.t_half).0;
        let (_, dpsi, _) = self.space(x);
        let c = tb * dpsi * 2.0 / (self.radius * self.radius);
        for k in 0..x.len() {
            out[k] = c * (x[k] - self.center[k]);
        }
    }
}

/// `cos(ω t) exp(−|x − c|²/(2s²))`; smooth but not compactly supported in t.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTest {
    pub frequency: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl WaveTest {
    fn space(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        math::exp(-0.5 * r2 / (self.width * self.width))
    }
}

impl TestFunction for WaveTest {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        math::cos(self.frequency * t) * self.space(x)
    }

    fn time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        -self.frequency * math::sin(self.frequency * t) * self.space(x)
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let c = -math::cos(self.frequency * t) * self.space(x) / (self.width * self.width);
        for k in 0..x.len() {
            out[k] = c * (x[k] - self.center[k]);
        }
    }
}

/// Residual of the weak formulation
/// `∫₀ᵀ⟨ν_t, ∂ₜφ + b·∇φ + wφ⟩dt + ⟨ν₀, φ(0)⟩ − ⟨ν_T, φ(T)⟩`,
/// trapezoid rule in time and exact particle sums in space.
pub fn weak_residual<B, W, P>(curve: &MeasureCurve, b: &B, w: &W, mu0: &ParticleMeasure, phi: &P) -> f64
where
    B: Velocity + ?Sized,
    W: Rate + ?Sized,
    P: TestFunction + ?Sized,
{
    let grid = curve.grid();
    let d = curve.dim();
    let dt = grid.dt();
    let mut bx = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut integral = 0.0;
    for (k, snap) in curve.snapshots().iter().enumerate() {
        let t = grid.time(k);
        let mut s = 0.0;
        for (x, &a) in snap.points().zip(snap.weights()) {
            b.velocity(t, x, &mut bx);
            phi.gradient(t, x, &mut grad);
            s += a * (phi.time_derivative(t, x) + math::dot(&bx, &grad) + w.rate(t, x) * phi.value(t, x));
        }
        let q = if k == 0 || k == grid.n_steps() { 0.5 } else { 1.0 };
        integral += q * dt * s;
    }
    let start: f64 = mu0.points().zip(mu0.weights()).map(|(x, a)| a * phi.value(0.0, x)).sum();
    let end = curve.last();
    let end: f64 = end
        .points()
        .zip(end.weights())
        .map(|(x, a)| a * phi.value(grid.t_end(), x))
        .sum();
    integral + start - end
}

/// Sup-norm sampling of coefficient fields on a box grid plus extra points,
/// at the nodes of a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSampler {
    pub grid: BoxGrid,
    /// Additional sample points, row-major.
    pub extra: Vec<f64>,
}

impl FieldSampler {
    pub fn new(grid: BoxGrid) -> Self {
        FieldSampler {
            grid,
            extra: Vec::new(),
        }
    }

    /// Grid points per axis, recorded with every bound check.
    pub fn resolution(&self) -> usize {
        self.grid.per_axis()
    }

    fn with_points(&self, pts: &[f64]) -> Vec<f64> {
        let mut all = self.grid.points();
        all.extend_from_slice(&self.extra);
        all.extend_from_slice(pts);
        all
    }

    /// `max_k sup_x f(t_k, x)` over the samples.
    fn sup<F: FnMut(f64, &[f64]) -> f64>(&self, times: &[f64], pts: &[f64], mut f: F) -> f64 {
        let d = self.grid.dim();
        let all = self.with_points(pts);
        let mut m = 0.0_f64;
        for &t in times {
            for x in all.chunks(d) {
                m = m.max(f(t, x));
            }
        }
        m
    }

    /// Per-node `sup_x f(t_k, x)`.
    fn profile<F: FnMut(f64, &[f64]) -> f64>(&self, times: &[f64], pts: &[f64], mut f: F) -> Vec<f64> {
        let d = self.grid.dim();
        let all = self.with_points(pts);
        times
            .iter()
            .map(|&t| all.chunks(d).map(|x| f(t, x)).fold(0.0, f64::max))
            .collect()
    }

    pub fn velocity_sup<B: Velocity + ?Sized>(&self, b: &B, times: &[f64], pts: &[f64]) -> f64 {
        let mut v = vec![0.0; b.dim()];
        self.sup(times, pts, |t, x| {
            b.velocity(t, x, &mut v);
            math::norm(&v)
        })
    }

    /// Frobenius norm of the Jacobian, an upper bound of its operator norm.
    pub fn jacobian_sup<B: Velocity + ?Sized>(&self, b: &B, times: &[f64], pts: &[f64]) -> f64 {
        let d = b.dim();
        let mut j = vec![0.0; d * d];
        self.sup(times, pts, |t, x| {
            b.velocity_jacobian(t, x, &mut j);
            math::frobenius(&j)
        })
    }

    pub fn rate_sup<W: Rate + ?Sized>(&self, w: &W, times: &[f64], pts: &[f64]) -> f64 {
        self.sup(times, pts, |t, x| w.rate(t, x).abs())
    }

    pub fn rate_positive_sup<W: Rate + ?Sized>(&self, w: &W, times: &[f64], pts: &[f64]) -> f64 {
        self.sup(times, pts, |t, x| w.rate(t, x).max(0.0))
    }
}

/// Gronwall comparison of two flows from the same starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStability {
    /// `|X_b(t_k, x) − X_b̄(t_k, x)|`.
    pub lhs: Vec<f64>,
    /// `e^{t C_t} ∫₀ᵗ ‖b − b̄‖_∞ ds`.
    pub rhs: Vec<f64>,
    /// `min(sup‖∇b‖, sup‖∇b̄‖)`.
    pub constant: f64,
    pub resolution: usize,
}

impl FlowStability {
    /// `min_k (rhs − lhs)`.
    pub fn margin(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(l, r)| r - l)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn flow_stability_gap<B1, B2>(
    b: &B1,
    bbar: &B2,
    x: &[f64],
    grid: &TimeGrid,
    sampler: &FieldSampler,
) -> Result<FlowStability>
where
    B1: Velocity + ?Sized,
    B2: Velocity + ?Sized,
{
    let d = x.len();
    let xb = integrate_flow(b, x, grid)?;
    let xbar = integrate_flow(bbar, x, grid)?;
    let mut pts = xb.clone();
    pts.extend_from_slice(&xbar);
    let times = grid.times();
    let c = sampler
        .jacobian_sup(b, &times, &pts)
        .min(sampler.jacobian_sup(bbar, &times, &pts));
    let (mut v, mut vbar) = (vec![0.0; d], vec![0.0; d]);
    let gap = sampler.profile(&times, &pts, |t, y| {
        b.velocity(t, y, &mut v);
        bbar.velocity(t, y, &mut vbar);
        math::dist(&v, &vbar)
    });
    let dt = grid.dt();
    let mut integral = 0.0;
    let mut lhs = Vec::with_capacity(grid.len());
    let mut rhs = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        if k > 0 {
            // right-biased sum keeps the integral an upper estimate
            integral += dt * gap[k - 1].max(gap[k]);
        }
        lhs.push(math::dist(&xb[k * d..(k + 1) * d], &xbar[k * d..(k + 1) * d]));
        rhs.push(math::exp(times[k] * c) * integral);
    }
    Ok(FlowStability {
        lhs,
        rhs,
        constant: c,
        resolution: sampler.resolution(),
    })
}

/// Difference quotient of the flow in the perturbation parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSensitivity {
    /// `(X_{b₀+(h+λ)b₁} − X_{b₀+hb₁})/λ`, one row per node.
    pub fd: Vec<f64>,
    /// `t ‖b₁‖_∞ e^{C_h t}` per node.
    pub bound: Vec<f64>,
    pub resolution: usize,
}

impl FlowSensitivity {
    /// `max_k |fd_k| / bound_k` over nodes with positive bound.
    pub fn worst_ratio(&self) -> f64 {
        let d = self.fd.len() / self.bound.len();
        self.bound
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > 0.0)
            .map(|(k, &b)| math::norm(&self.fd[k * d..(k + 1) * d]) / b)
            .fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Vec<f64> {
        let d = self.fd.len() / self.bound.len();
        self.fd.chunks(d).map(math::norm).collect()
    }
}

pub fn flow_sensitivity_fd<B0, B1>(
    b0: &B0,
    b1: &B1,
    h: f64,
    lambda: f64,
    x: &[f64],
    grid: &TimeGrid,
    sampler: &FieldSampler,
) -> Result<FlowSensitivity>
where
    B0: Velocity,
    B1: Velocity,
{
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(crate::Error::InvalidParameter {
            name: "lambda",
            reason: "must be non-zero and finite",
        });
    }
    let at = |h: f64| Perturbed { b0, b1, h };
    let x0 = integrate_flow(&at(h), x, grid)?;
    let x1 = integrate_flow(&at(h + lambda), x, grid)?;
    let fd: Vec<f64> = x1.iter().zip(&x0).map(|(a, b)| (a - b) / lambda).collect();
    let mut pts = x0.clone();
    pts.extend_from_slice(&x1);
    let times = grid.times();
    let b1_sup = sampler.velocity_sup(b1, &times, &pts);
    // the quotient averages ∂_h X over [h, h + λ]
    let c_h = sampler.jacobian_sup(b0, &times, &pts)
        + h.abs().max((h + lambda).abs()) * sampler.jacobian_sup(b1, &times, &pts);
    let bound = times.iter().map(|&t| t * b1_sup * math::exp(c_h * t)).collect();
    Ok(FlowSensitivity {
        fd,
        bound,
        resolution: sampler.resolution(),
    })
}

/// Largest flat-metric speed of a curve against its a-priori bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLipschitz {
    pub ratio: f64,
    pub bound: f64,
    pub resolution: usize,
}

/// `max_k ρ_F(ν_{t_{k+1}}, ν_{t_k}) / dt` against
/// `(C₁ max(∫₀ᵀ‖b‖_∞, sup‖b‖) + e^{‖w‖T}‖w‖) TV(ν₀)` with
/// `C₁ = e^{‖w⁺‖(T+1)}`.
pub fn time_lipschitz_check<B, W>(curve: &MeasureCurve, b: &B, w: &W, sampler: &FieldSampler) -> Result<TimeLipschitz>
where
    B: Velocity + ?Sized,
    W: Rate + ?Sized,
{
    let grid = curve.grid();
    let dt = grid.dt();
    let mut ratio = 0.0_f64;
    for k in 0..grid.n_steps() {
        ratio = ratio.max(flat_distance(curve.at(k + 1), curve.at(k))? / dt);
    }
    let pts: Vec<f64> = curve.snapshots().iter().flat_map(|s| s.coords().iter().copied()).collect();
    let times = grid.times();
    let t_end = grid.t_end();
    let b_sup = sampler.velocity_sup(b, &times, &pts);
    let w_sup = sampler.rate_sup(w, &times, &pts);
    let w_pos = sampler.rate_positive_sup(w, &times, &pts);
    let c1 = math::exp(w_pos * (t_end + 1.0));
    let b_term = (b_sup * t_end).max(b_sup);
    let bound = (c1 * b_term + math::exp(w_sup * t_end) * w_sup) * curve.at(0).total_variation();
    Ok(TimeLipschitz {
        ratio,
        bound,
        resolution: sampler.resolution(),
    })
}

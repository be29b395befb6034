use alloc::boxed::Box;
use alloc::vec::Vec;

use super::WeightFunction;
use crate::fields::{perturbed_coefficients, Coefficients, FieldModel};
use crate::linear::{solve_linear, MeasureCurve, Rate, TimeGrid, Velocity};
use crate::measure::{ParticleMeasure, COMPACT_TOL};
use crate::norms::{flat_norm, z_upper};
use crate::{math, stats, Error, Result};

/// Spatial norm applied to node-wise differences of curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveNorm {
    Flat,
    /// Upper side of the `Z` bracket.
    ZUpper { alpha: f64 },
    /// Total variation after merging coincident particles.
    Tv,
}

impl CurveNorm {
    pub fn eval(&self, mu: &ParticleMeasure) -> Result<f64> {
        match *self {
            CurveNorm::Flat => Ok(flat_norm(mu)?.value),
            CurveNorm::ZUpper { alpha } => z_upper(mu, alpha),
            CurveNorm::Tv => Ok(mu.compact(COMPACT_TOL).total_variation()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOptions {
    pub weight: WeightFunction,
    pub norm: CurveNorm,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            weight: WeightFunction::Exponential { g: 1.0 },
            norm: CurveNorm::Flat,
            tol: 1e-8,
            max_iter: 60,
        }
    }
}

/// Per-iteration record of the fixed-point scheme.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SchemeTrace {
    /// `‖ν^{n+1} − ν^n‖` in the weighted curve norm.
    pub distances: Vec<f64>,
    /// `distances[i+1] / distances[i]`, or 0 when `distances[i]` is 0.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub n_iter: usize,
}

impl SchemeTrace {
    fn push(&mut self, d: f64) {
        if let Some(&prev) = self.distances.last() {
            self.ratios.push(if prev > 0.0 { d / prev } else { 0.0 });
        }
        self.distances.push(d);
        self.n_iter += 1;
    }
}

/// Coefficients of a model along a curve, linear in time between nodes.
#[derive(Debug, Clone)]
pub struct CurveCoefficients {
    grid: TimeGrid,
    nodes: Vec<Coefficients>,
    constant: bool,
}

impl CurveCoefficients {
    pub fn node(&self, k: usize) -> &Coefficients {
        &self.nodes[if self.constant { 0 } else { k }]
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Bracketing node and the weight of the right node.
    fn locate(&self, t: f64) -> (usize, f64) {
        if self.constant {
            return (0, 0.0);
        }
        let s = t / self.grid.dt();
        let k = math::floor(s).max(0.0) as usize;
        if k >= self.grid.n_steps() {
            return (self.grid.n_steps(), 0.0);
        }
        (k, s - k as f64)
    }
}

impl Velocity for CurveCoefficients {
    fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (k, theta) = self.locate(t);
        out.fill(0.0);
        self.node(k).add_velocity(x, 1.0 - theta, out);
        if theta > 0.0 {
            self.node(k + 1).add_velocity(x, theta, out);
        }
    }

    fn velocity_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (k, theta) = self.locate(t);
        self.node(k).velocity_jacobian(x, out);
        if theta > 0.0 {
            let mut right = alloc::vec![0.0; out.len()];
            self.node(k + 1).velocity_jacobian(x, &mut right);
            for (o, r) in out.iter_mut().zip(&right) {
                *o = (1.0 - theta) * *o + theta * r;
            }
        }
    }
}

impl Rate for CurveCoefficients {
    fn rate(&self, t: f64, x: &[f64]) -> f64 {
        let (k, theta) = self.locate(t);
        let left = self.node(k).rate(x);
        if theta > 0.0 {
            (1.0 - theta) * left + theta * self.node(k + 1).rate(x)
        } else {
            left
        }
    }
}

/// `B_h`: the coefficient pair `(v₀ + h v₁, m₀ + h m₁)(k_{ν_t})` along a
/// curve.
pub fn operator_b(curve: &MeasureCurve, model: &FieldModel) -> Result<CurveCoefficients> {
    let constant = model.is_measure_independent();
    let nodes = if constant {
        alloc::vec![perturbed_coefficients(model, curve.at(0))?]
    } else {
        curve
            .snapshots()
            .iter()
            .map(|s| perturbed_coefficients(model, s))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(CurveCoefficients {
        grid: curve.grid().clone(),
        nodes,
        constant,
    })
}

/// `S`: solution of the linear problem with the given coefficients.
pub fn operator_s(coefficients: &CurveCoefficients, mu0: &ParticleMeasure, grid: &TimeGrid) -> Result<MeasureCurve> {
    solve_linear(coefficients, coefficients, mu0, grid)
}

/// `T_h = S ∘ B_h`.
pub fn operator_t(curve: &MeasureCurve, model: &FieldModel, mu0: &ParticleMeasure) -> Result<MeasureCurve> {
    operator_s(&operator_b(curve, model)?, mu0, curve.grid())
}

/// `ω(t_k) · ‖c₁(t_k) − c₂(t_k)‖` at every node.
pub fn weighted_node_distances(
    c1: &MeasureCurve,
    c2: &MeasureCurve,
    weight: &WeightFunction,
    norm: CurveNorm,
) -> Result<Vec<f64>> {
    node_distances(c1, c2, norm).map(|d| {
        d.iter()
            .enumerate()
            .map(|(k, v)| weight.eval(c1.grid().time(k)) * v)
            .collect()
    })
}

/// Unweighted `‖c₁(t_k) − c₂(t_k)‖` at every node.
pub fn node_distances(c1: &MeasureCurve, c2: &MeasureCurve, norm: CurveNorm) -> Result<Vec<f64>> {
    if c1.grid() != c2.grid() {
        return Err(Error::GridMismatch);
    }
    c1.snapshots()
        .iter()
        .zip(c2.snapshots())
        .map(|(a, b)| norm.eval(&ParticleMeasure::difference(a, b)?))
        .collect()
}

/// `sup_k ω(t_k) ‖c₁(t_k) − c₂(t_k)‖`.
pub fn weighted_curve_distance(
    c1: &MeasureCurve,
    c2: &MeasureCurve,
    weight: &WeightFunction,
    norm: CurveNorm,
) -> Result<f64> {
    Ok(weighted_node_distances(c1, c2, weight, norm)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Iterates `ν^{n+1} = T_h(ν^n)` from the scheme's canonical start: the
/// constant curve `μ₀` for `h = 0`, the solved unperturbed curve otherwise.
pub fn fixed_point_solve(
    model: &FieldModel,
    mu0: &ParticleMeasure,
    grid: &TimeGrid,
    opts: &SchemeOptions,
) -> Result<(MeasureCurve, SchemeTrace)> {
    let start = if model.h() == 0.0 {
        MeasureCurve::constant(mu0, grid)
    } else {
        fixed_point_solve(&model.with_h(0.0)?, mu0, grid, opts)?.0
    };
    fixed_point_from(model, &start, mu0, opts)
}

/// Iterates `T_h` from an arbitrary starting curve until the weighted
/// distance of consecutive iterates drops to `opts.tol`.
pub fn fixed_point_from(
    model: &FieldModel,
    start: &MeasureCurve,
    mu0: &ParticleMeasure,
    opts: &SchemeOptions,
) -> Result<(MeasureCurve, SchemeTrace)> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: "must be positive",
        });
    }
    opts.weight.validate()?;
    let mut trace = SchemeTrace::default();
    let mut current = start.clone();
    for _ in 0..opts.max_iter {
        let next = operator_t(&current, model, mu0)?;
        let d = weighted_curve_distance(&next, &current, &opts.weight, opts.norm)?;
        trace.push(d);
        current = next;
        if d <= opts.tol {
            trace.converged = true;
            return Ok((current, trace));
        }
    }
    Err(Error::NoConvergence {
        max_iter: opts.max_iter,
        trace: Box::new(trace),
    })
}

/// `start, T_h(start), …` with `count` applications of `T_h`.
pub fn scheme_iterates(
    model: &FieldModel,
    start: &MeasureCurve,
    mu0: &ParticleMeasure,
    count: usize,
) -> Result<Vec<MeasureCurve>> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(start.clone());
    for n in 0..count {
        let next = operator_t(&out[n], model, mu0)?;
        out.push(next);
    }
    Ok(out)
}

/// Geometric fit `distances_n ≈ C c^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionFit {
    pub c_hat: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `log distances` over the positive entries.
pub fn contraction_ratio(trace: &SchemeTrace) -> Result<ContractionFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = trace
        .distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0)
        .map(|(i, &d)| (i as f64, math::ln(d)))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::TooFewIterations { positive: xs.len() });
    }
    let fit = stats::linear_fit(&xs, &ys);
    Ok(ContractionFit {
        c_hat: math::exp(fit.slope),
        r_squared: fit.r_squared,
    })
}

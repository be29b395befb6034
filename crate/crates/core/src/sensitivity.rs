//! Difference quotients `(μ^{h+λ} − μ^h)/λ` of the parameter-to-solution
//! map and the diagnostics built on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::fields::FieldModel;
use crate::linear::{MeasureCurve, TimeGrid};
use crate::measure::ParticleMeasure;
use crate::nonlinear::{
    fixed_point_from, fixed_point_solve, scheme_iterates, weighted_curve_distance, weighted_node_distances,
    CurveNorm, SchemeOptions, SchemeTrace, WeightFunction,
};
use crate::norms::Bump;
use crate::{stats, Error, Result};

/// `(μ^{h+λ}_t − μ^h_t)/λ` at every node, with particle `i` of the second
/// solve stored at index `N + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientCurve {
    pub h: f64,
    pub lambda: f64,
    pub curve: MeasureCurve,
}

impl QuotientCurve {
    /// Node-wise pairing with a spatial test function.
    pub fn pair<F: FnMut(&[f64]) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        self.curve.pair(f)
    }
}

/// Solutions `h ↦ μ^h` of one model sharing the unperturbed solution as
/// the scheme start.
#[derive(Debug, Clone)]
pub struct SolutionFamily {
    model: FieldModel,
    mu0: ParticleMeasure,
    opts: SchemeOptions,
    base: MeasureCurve,
    base_trace: SchemeTrace,
}

impl SolutionFamily {
    pub fn new(model: &FieldModel, mu0: &ParticleMeasure, grid: &TimeGrid, opts: &SchemeOptions) -> Result<Self> {
        let unperturbed = model.with_h(0.0)?;
        let (base, base_trace) = fixed_point_solve(&unperturbed, mu0, grid, opts)?;
        Ok(SolutionFamily {
            model: unperturbed,
            mu0: mu0.clone(),
            opts: opts.clone(),
            base,
            base_trace,
        })
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        self.base.grid()
    }

    pub fn mu0(&self) -> &ParticleMeasure {
        &self.mu0
    }

    pub fn options(&self) -> &SchemeOptions {
        &self.opts
    }

    /// `μ^0`.
    pub fn base(&self) -> &MeasureCurve {
        &self.base
    }

    /// Iteration record of the solve that produced `μ^0`.
    pub fn base_trace(&self) -> &SchemeTrace {
        &self.base_trace
    }

    /// `μ^h`, iterated from `μ^0`.
    pub fn solve(&self, h: f64) -> Result<MeasureCurve> {
        if h == 0.0 {
            return Ok(self.base.clone());
        }
        let model = self.model.with_h(h)?;
        Ok(fixed_point_from(&model, &self.base, &self.mu0, &self.opts)?.0)
    }

    pub fn quotient(&self, h: f64, lambda: f64) -> Result<QuotientCurve> {
        let lower = self.solve(h)?;
        self.quotient_from(h, lambda, &lower)
    }

    fn quotient_from(&self, h: f64, lambda: f64, lower: &MeasureCurve) -> Result<QuotientCurve> {
        check_increment(h, lambda)?;
        let upper = self.solve(h + lambda)?;
        let curve = MeasureCurve::linear_combination(1.0 / lambda, &upper, -1.0 / lambda, lower)?;
        Ok(QuotientCurve { h, lambda, curve })
    }
}

fn check_increment(h: f64, lambda: f64) -> Result<()> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: "must be non-zero and finite",
        });
    }
    for v in [h, h + lambda] {
        if !(v > -0.5 && v < 0.5) {
            return Err(Error::HOutOfRange(v));
        }
    }
    Ok(())
}

/// One-off quotient; builds the solution family internally.
pub fn fd_quotient(
    model: &FieldModel,
    mu0: &ParticleMeasure,
    grid: &TimeGrid,
    h: f64,
    lambda: f64,
    opts: &SchemeOptions,
) -> Result<QuotientCurve> {
    check_increment(h, lambda)?;
    SolutionFamily::new(model, mu0, grid, opts)?.quotient(h, lambda)
}

/// `λ_i = λ₀ / 2^i`, `i < rungs`.
pub fn lambda_ladder(lambda0: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|i| lambda0 / (1u64 << i) as f64).collect()
}

/// Pairwise weighted distances between quotient curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyTable {
    pub lambdas: Vec<f64>,
    /// Symmetric with zero diagonal.
    pub pairwise: Vec<Vec<f64>>,
    /// `d(q_{λ_i}, q_{λ_{i+1}})`.
    pub rung_distances: Vec<f64>,
    /// Slope of `log d(q_{λ_i}, q_{λ_{i+1}})` against `log λ_i`; infinite
    /// when fewer than two rung distances are positive.
    pub fitted_order: f64,
}

impl CauchyTable {
    pub fn is_monotone(&self) -> bool {
        self.rung_distances.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0)
    }
}

pub fn cauchy_diagnostic(
    family: &SolutionFamily,
    h: f64,
    lambdas: &[f64],
    weight: &WeightFunction,
    norm: CurveNorm,
) -> Result<CauchyTable> {
    if lambdas.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "lambdas",
            reason: "need at least three increments",
        });
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) || lambdas[lambdas.len() - 1] <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambdas",
            reason: "must be positive and strictly decreasing",
        });
    }
    let lower = family.solve(h)?;
    let quotients = lambdas
        .iter()
        .map(|&l| family.quotient_from(h, l, &lower))
        .collect::<Result<Vec<_>>>()?;
    let n = lambdas.len();
    let mut pairwise = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = weighted_curve_distance(&quotients[i].curve, &quotients[j].curve, weight, norm)?;
            pairwise[i][j] = d;
            pairwise[j][i] = d;
        }
    }
    let rung_distances: Vec<f64> = (0..n - 1).map(|i| pairwise[i][i + 1]).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .zip(&rung_distances)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&l, &d)| (l, d))
        .unzip();
    let fitted_order = if xs.len() >= 2 {
        stats::loglog_order(&xs, &ys).slope
    } else {
        f64::INFINITY
    };
    Ok(CauchyTable {
        lambdas: lambdas.to_vec(),
        pairwise,
        rung_distances,
        fitted_order,
    })
}

/// `q_{λ₀/2}` as the derivative estimate with `d(q_{λ₀}, q_{λ₀/2})` as its
/// error indicator. The limit lives in `Z`, not among measures; only these
/// approximants and their pairings are exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    pub estimate: QuotientCurve,
    pub error: f64,
}

pub fn derivative_estimate(
    family: &SolutionFamily,
    h: f64,
    lambda0: f64,
    weight: &WeightFunction,
    norm: CurveNorm,
) -> Result<DerivativeEstimate> {
    let lower = family.solve(h)?;
    let coarse = family.quotient_from(h, lambda0, &lower)?;
    let fine = family.quotient_from(h, 0.5 * lambda0, &lower)?;
    let error = weighted_curve_distance(&coarse.curve, &fine.curve, weight, norm)?;
    Ok(DerivativeEstimate { estimate: fine, error })
}

/// `a_n = ‖(ν^{λ,n+1} − ν^{λ,n})/λ‖` for the perturbed scheme started at
/// the unperturbed solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub a: Vec<f64>,
    /// `a_n / a_{n−1}` for `n ≥ 1` (0 when `a_{n−1}` is 0).
    pub ratios: Vec<f64>,
}

pub fn iterate_quotient_decay(
    family: &SolutionFamily,
    lambda: f64,
    n_max: usize,
    weight: &WeightFunction,
    norm: CurveNorm,
) -> Result<DecayTable> {
    check_increment(0.0, lambda)?;
    let model = family.model().with_h(lambda)?;
    let iterates = scheme_iterates(&model, family.base(), family.mu0(), n_max + 1)?;
    let a = iterates
        .windows(2)
        .map(|w| Ok(weighted_curve_distance(&w[1], &w[0], weight, norm)? / lambda.abs()))
        .collect::<Result<Vec<f64>>>()?;
    let ratios = a
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    Ok(DecayTable { a, ratios })
}

/// Adjacent differences of derivative estimates along an `h` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityScan {
    pub h: Vec<f64>,
    /// Weighted curve distance between estimates at `h_i` and `h_{i+1}`.
    pub gaps: Vec<f64>,
    /// `sup_t ω(t) max_φ |⟨q^{h_{i+1}}_t − q^{h_i}_t, φ⟩|` over the dictionary.
    pub pairing_gaps: Vec<f64>,
}

impl ContinuityScan {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_pairing_gap(&self) -> f64 {
        self.pairing_gaps.iter().copied().fold(0.0, f64::max)
    }
}

pub fn derivative_continuity_scan(
    family: &SolutionFamily,
    h_values: &[f64],
    lambda0: f64,
    weight: &WeightFunction,
    norm: CurveNorm,
    dictionary: &[Bump],
) -> Result<ContinuityScan> {
    if h_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "h_values",
            reason: "must be strictly increasing",
        });
    }
    let estimates = h_values
        .iter()
        .map(|&h| Ok(derivative_estimate(family, h, lambda0, weight, norm)?.estimate))
        .collect::<Result<Vec<_>>>()?;
    let mut gaps = Vec::new();
    let mut pairing_gaps = Vec::new();
    for w in estimates.windows(2) {
        gaps.push(weighted_curve_distance(&w[1].curve, &w[0].curve, weight, norm)?);
        let diff = MeasureCurve::linear_combination(1.0, &w[1].curve, -1.0, &w[0].curve)?;
        let mut worst = 0.0_f64;
        for bump in dictionary {
            let values = diff.pair(|x| bump.value(x))?;
            for (k, v) in values.iter().enumerate() {
                worst = worst.max(weight.eval(diff.grid().time(k)) * v.abs());
            }
        }
        pairing_gaps.push(worst);
    }
    Ok(ContinuityScan {
        h: h_values.to_vec(),
        gaps,
        pairing_gaps,
    })
}

/// Weighted per-node distances of two quotient curves; exposed for tables.
pub fn quotient_node_distances(
    a: &QuotientCurve,
    b: &QuotientCurve,
    weight: &WeightFunction,
    norm: CurveNorm,
) -> Result<Vec<f64>> {
    weighted_node_distances(&a.curve, &b.curve, weight, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{RateTerm, VelocityTerm};
    use crate::math;

    fn dirac() -> ParticleMeasure {
        ParticleMeasure::dirac(&[0.0], 1.0).unwrap()
    }

    #[test]
    fn example_quotient_is_a_dipole() {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let lambda = 0.1;
        let q = fd_quotient(&FieldModel::scaled_drift(0.0).unwrap(), &dirac(), &grid, 0.0, lambda, &SchemeOptions::default())
            .unwrap();
        let last = q.curve.last();
        assert_eq!(last.len(), 2);
        assert!((last.point(0)[0] - 1.1).abs() < 1e-12 && (last.weight(0) - 10.0).abs() < 1e-12);
        assert!((last.point(1)[0] - 1.0).abs() < 1e-12 && (last.weight(1) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn unperturbed_model_has_zero_quotient() {
        let grid = TimeGrid::new(1.0, 0.05).unwrap();
        let model = FieldModel::new(
            VelocityTerm::constant(&[0.5]),
            VelocityTerm::zero(1),
            RateTerm::constant(0.2),
            RateTerm::zero(),
            0.0,
        )
        .unwrap();
        let q = fd_quotient(&model, &dirac(), &grid, 0.0, 0.05, &SchemeOptions::default()).unwrap();
        for s in q.curve.snapshots() {
            assert_eq!(s.compact(1e-12).total_variation(), 0.0);
        }
    }

    #[test]
    fn out_of_range_increment() {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let r = fd_quotient(&FieldModel::scaled_drift(0.0).unwrap(), &dirac(), &grid, 0.45, 0.1, &SchemeOptions::default());
        assert!(matches!(r, Err(Error::HOutOfRange(_))));
    }

    #[test]
    fn pure_growth_derivative() {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let model = FieldModel::new(
            VelocityTerm::zero(1),
            VelocityTerm::zero(1),
            RateTerm::zero(),
            RateTerm::constant(1.0),
            0.0,
        )
        .unwrap();
        let fam = SolutionFamily::new(&model, &dirac(), &grid, &SchemeOptions::default()).unwrap();
        let est = derivative_estimate(&fam, 0.0, 1e-4, &WeightFunction::unit(), CurveNorm::Flat).unwrap();
        let mass = est.estimate.pair(|_| 1.0).unwrap();
        for k in 0..grid.len() {
            assert!((mass[k] - grid.time(k)).abs() < 1e-4);
        }
    }

    #[test]
    fn linear_model_iterates_stop_after_one_step() {
        let grid = TimeGrid::new(1.0, 0.05).unwrap();
        let fam = SolutionFamily::new(&FieldModel::scaled_drift(0.0).unwrap(), &dirac(), &grid, &SchemeOptions::default())
            .unwrap();
        let t = iterate_quotient_decay(&fam, 0.01, 3, &WeightFunction::unit(), CurveNorm::Flat).unwrap();
        assert!(t.a[0] > 0.0);
        assert!(t.a[1..].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn example_derivative_pairs_with_sine() {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let fam = SolutionFamily::new(&FieldModel::scaled_drift(0.0).unwrap(), &dirac(), &grid, &SchemeOptions::default())
            .unwrap();
        let est = derivative_estimate(&fam, 0.0, 1e-3, &WeightFunction::unit(), CurveNorm::Flat).unwrap();
        let v = est.estimate.pair(|x| math::sin(x[0])).unwrap();
        assert!((v[grid.n_steps()] - math::cos(1.0)).abs() < 5e-3);
    }
}

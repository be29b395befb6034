//! Experiment drivers behind the CLI subcommands.
//!
//! Each driver writes its CSV tables into the output directory and returns
//! the metrics that end up in `summary.json`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use measure_flow_core::fields::FieldModel;
use measure_flow_core::linear::{
    time_lipschitz_check, weak_residual, BumpTest, FieldSampler, MeasureCurve, flow_stability_gap,
};
use measure_flow_core::nonlinear::{
    calibrate_weight, contraction_ratio, fixed_point_solve, operator_b, operator_t, weighted_curve_distance,
    CurveNorm, SchemeTrace, WeightFunction,
};
use measure_flow_core::norms::{flat_distance, flat_norm, z_norm_bracket, BoxGrid, Bump, DEFAULT_ATOMS};
use measure_flow_core::sensitivity::{
    cauchy_diagnostic, derivative_continuity_scan, derivative_estimate, iterate_quotient_decay, lambda_ladder,
    CauchyTable, SolutionFamily,
};
use measure_flow_core::ParticleMeasure;
use rayon::prelude::*;

use crate::config::{
    parse_norm, CounterexampleSpec, Experiment, Objective, Scenario, SensitivitySpec, SweepSpec, ValidateSpec,
    WeightSpec,
};
use crate::io::{self, Cell, Summary, Table};

/// Margins below this count as failures.
pub const MARGIN_TOL: f64 = -1e-9;

#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    /// Set by validation when some inequality has a negative margin.
    pub failed: bool,
}

impl Outcome {
    fn ok(summary: Summary) -> Self {
        Outcome { summary, failed: false }
    }
}

/// Runs the experiment named in the scenario.
pub fn run(scenario: &Scenario, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outcome = match &scenario.experiment {
        Experiment::Solve {} => Outcome::ok(solve(scenario, out)?),
        Experiment::Sensitivity(spec) => Outcome::ok(sensitivity(scenario, spec, out)?),
        Experiment::Counterexample(spec) => Outcome::ok(counterexample(scenario, spec, out)?),
        Experiment::Validate(spec) => validate(scenario, spec, out)?,
        Experiment::Sweep(spec) => Outcome::ok(sweep(scenario, spec, out)?),
    };
    outcome.summary.set("experiment", experiment_name(&scenario.experiment));
    outcome.summary.set("passed", !outcome.failed);
    outcome.summary.write(&out.join("summary.json"))?;
    Ok(outcome)
}

fn experiment_name(e: &Experiment) -> &'static str {
    match e {
        Experiment::Solve {} => "solve",
        Experiment::Sensitivity(_) => "sensitivity",
        Experiment::Counterexample(_) => "counterexample",
        Experiment::Validate(_) => "validate",
        Experiment::Sweep(_) => "sweep",
    }
}

/// Weight for the fixed-point scheme and the (possibly different) weight
/// for sensitivity distances.
#[derive(Debug, Clone)]
pub struct Weights {
    pub scheme: WeightFunction,
    pub sensitivity: WeightFunction,
}

pub fn resolve_weights(s: &Scenario) -> Result<Weights> {
    match &s.weight {
        WeightSpec::Fixed(w) => Ok(Weights {
            scheme: w.clone(),
            sensitivity: w.clone(),
        }),
        WeightSpec::Auto { target } => {
            let w = calibrate_weight(&s.model, &s.mu0, &s.grid, *target, s.norm).context("calibrating the weight")?;
            let rates = match &w {
                WeightFunction::PiecewiseExponential { rates } => rates.clone(),
                _ => unreachable!("calibration yields a piecewise weight"),
            };
            Ok(Weights {
                scheme: w,
                sensitivity: WeightFunction::combined(rates),
            })
        }
    }
}

fn record_weight(summary: &mut Summary, w: &WeightFunction) {
    if let WeightFunction::PiecewiseExponential { rates } = w {
        summary.num("weight_max_rate", rates.iter().copied().fold(0.0, f64::max));
        summary.set("weight_intervals", rates.len());
    }
}

fn write_trace(path: &Path, trace: &SchemeTrace) -> Result<()> {
    let mut t = Table::create(path, &["iteration", "distance", "ratio"])?;
    for (n, &d) in trace.distances.iter().enumerate() {
        let ratio = if n == 0 { Cell::Text(String::new()) } else { Cell::Num(trace.ratios[n - 1]) };
        t.row(&[n.into(), d.into(), ratio])?;
    }
    t.finish()
}

fn record_trace(summary: &mut Summary, trace: &SchemeTrace) {
    summary.set("n_iter", trace.n_iter);
    summary.set("converged", trace.converged);
    match contraction_ratio(trace) {
        Ok(fit) => {
            summary.num("c_hat", fit.c_hat);
            summary.num("fit_r_squared", fit.r_squared);
        }
        // too few iterations to fit; the largest observed ratio still bounds the rate
        Err(_) => summary.num("c_hat", trace.ratios.iter().copied().fold(0.0, f64::max)),
    }
}

/// `w ≡ c` when both rate terms are constant.
fn constant_rate(model: &FieldModel) -> Option<f64> {
    let (m0, m1) = (&model.m0.outer, &model.m1.outer);
    (m0.is_constant() && m1.is_constant()).then(|| m0.value(0.0) + model.h() * m1.value(0.0))
}

fn solve(s: &Scenario, out: &Path) -> Result<Summary> {
    let weights = resolve_weights(s)?;
    let opts = s.options(weights.scheme.clone());
    let (curve, trace) = fixed_point_solve(&s.model, &s.mu0, &s.grid, &opts)?;
    io::write_curve(&out.join("curve.csv"), &curve)?;
    write_trace(&out.join("trace.csv"), &trace)?;

    let mut summary = Summary::default();
    record_weight(&mut summary, &weights.scheme);
    record_trace(&mut summary, &trace);
    let next = operator_t(&curve, &s.model, &s.mu0)?;
    summary.num("fixed_point_gap", weighted_curve_distance(&next, &curve, &opts.weight, opts.norm)?);
    summary.num("tv_initial", s.mu0.total_variation());
    summary.num("tv_final", curve.last().total_variation());
    summary.num("mass_final", curve.last().total_mass());

    // closed forms for constant fields
    if let Some(b) = s.model.constant_velocity() {
        let d = s.dim;
        let mut err = 0.0_f64;
        for (k, snap) in curve.snapshots().iter().enumerate() {
            let t = s.grid.time(k);
            for (x, x0) in snap.points().zip(s.mu0.points()) {
                for j in 0..d {
                    err = err.max((x[j] - (x0[j] + b[j] * t)).abs());
                }
            }
        }
        summary.num("position_error", err);
    }
    if let Some(c) = constant_rate(&s.model) {
        let mut err = 0.0_f64;
        for (k, snap) in curve.snapshots().iter().enumerate() {
            let growth = (c * s.grid.time(k)).exp();
            for (&a, &a0) in snap.weights().iter().zip(s.mu0.weights()) {
                if a0 != 0.0 {
                    err = err.max((a / (a0 * growth) - 1.0).abs());
                }
            }
        }
        summary.num("weight_relative_error", err);
    }
    Ok(summary)
}

fn write_cauchy(path: &Path, table: &CauchyTable) -> Result<()> {
    let mut t = Table::create(path, &["lambda_i", "lambda_j", "distance"])?;
    let n = table.lambdas.len();
    for i in 0..n {
        for j in (i + 1)..n {
            t.row(&[table.lambdas[i].into(), table.lambdas[j].into(), table.pairwise[i][j].into()])?;
        }
    }
    t.finish()
}

/// Gaussian test functions spread over the region visited by the curve.
pub fn probe_bumps(curve: &MeasureCurve, per_axis: usize) -> Vec<Bump> {
    let d = curve.dim();
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for snap in curve.snapshots() {
        if let Some((a, b)) = snap.bounding_box() {
            for k in 0..d {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
        }
    }
    if lo[0].is_infinite() {
        return Vec::new();
    }
    let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut bumps = Vec::new();
    for k in 0..d {
        for i in 0..per_axis {
            let s = if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
            let mut c = mid.clone();
            c[k] = lo[k] + s * (hi[k] - lo[k]);
            bumps.push(Bump {
                center: c,
                width: 1.0,
                amplitude: 1.0,
            });
        }
    }
    bumps
}

fn sensitivity(s: &Scenario, spec: &SensitivitySpec, out: &Path) -> Result<Summary> {
    let weights = resolve_weights(s)?;
    let opts = s.options(weights.scheme.clone());
    let family = SolutionFamily::new(&s.model, &s.mu0, &s.grid, &opts)?;
    let norm = parse_norm(&spec.norm, s.alpha).context("in `experiment.norm`")?;
    let mut summary = Summary::default();
    record_weight(&mut summary, &weights.scheme);
    record_trace(&mut summary, family.base_trace());

    let cauchy = cauchy_diagnostic(&family, spec.h, &lambda_ladder(spec.lambda0, spec.rungs), &weights.sensitivity, norm)?;
    write_cauchy(&out.join("cauchy.csv"), &cauchy)?;
    summary.num("cauchy_fitted_order", cauchy.fitted_order);
    summary.set("cauchy_monotone", cauchy.is_monotone());

    let est = derivative_estimate(&family, spec.h, spec.derivative_lambda, &weights.sensitivity, norm)?;
    io::write_curve(&out.join("derivative.csv"), &est.estimate.curve)?;
    summary.num("derivative_error", est.error);

    if spec.decay_steps > 0 {
        // same weight and norm as the trace behind c_hat
        let decay = iterate_quotient_decay(&family, spec.decay_lambda, spec.decay_steps, &opts.weight, opts.norm)?;
        let mut t = Table::create(&out.join("decay.csv"), &["n", "a_n", "ratio"])?;
        for (n, &a) in decay.a.iter().enumerate() {
            let ratio = if n == 0 { Cell::Text(String::new()) } else { Cell::Num(decay.ratios[n - 1]) };
            t.row(&[n.into(), a.into(), ratio])?;
        }
        t.finish()?;
        summary.num("decay_max_ratio", decay.ratios.iter().copied().fold(0.0, f64::max));
    }

    if !spec.continuity_h.is_empty() {
        let bumps = probe_bumps(family.base(), 5);
        let scan = derivative_continuity_scan(
            &family,
            &spec.continuity_h,
            spec.derivative_lambda,
            &weights.sensitivity,
            norm,
            &bumps,
        )?;
        let mut t = Table::create(&out.join("continuity.csv"), &["h", "gap"])?;
        for (h, &g) in scan.h.iter().zip(&scan.gaps) {
            t.row(&[(*h).into(), g.into()])?;
        }
        t.finish()?;
        summary.num("continuity_max_gap", scan.max_gap());
        summary.num("continuity_max_pairing_gap", scan.max_pairing_gap());
    }
    Ok(summary)
}

fn counterexample(s: &Scenario, spec: &CounterexampleSpec, out: &Path) -> Result<Summary> {
    let weights = resolve_weights(s)?;
    let opts = s.options(weights.scheme.clone());
    let family = SolutionFamily::new(&s.model, &s.mu0, &s.grid, &opts)?;
    let Some(node) = s.grid.node_of(spec.t) else {
        bail!("experiment.t = {} is not a grid node", spec.t);
    };
    let plus = family.quotient(0.0, spec.h)?;
    let minus = family.quotient(0.0, -spec.h)?;
    let gap = flat_distance(plus.curve.at(node), minus.curve.at(node))?;
    let bound = 2.0 * spec.t * (1.0 - spec.h.abs());

    let ladder = lambda_ladder(spec.lambda0, spec.rungs);
    let z = cauchy_diagnostic(&family, 0.0, &ladder, &weights.sensitivity, CurveNorm::ZUpper { alpha: s.alpha })?;
    write_cauchy(&out.join("cauchy.csv"), &z)?;
    let flat = cauchy_diagnostic(&family, 0.0, &ladder, &weights.sensitivity, CurveNorm::Flat)?;
    write_cauchy(&out.join("cauchy_flat.csv"), &flat)?;

    let mut summary = Summary::default();
    summary.num("alpha", s.alpha);
    summary.num("h", spec.h);
    summary.num("t", spec.t);
    summary.num("flat_gap", gap);
    summary.num("flat_gap_bound", bound);
    summary.num("flat_gap_margin", gap - bound);
    summary.num("z_cauchy_order", z.fitted_order);
    summary.set("z_cauchy_monotone", z.is_monotone());
    summary.num("flat_cauchy_order", flat.fitted_order);
    Ok(summary)
}

/// One named inequality `value ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
        }
    }

    /// `bound − value`, relative to `bound` when that exceeds one.
    pub fn margin(&self) -> f64 {
        (self.bound - self.value) / self.bound.abs().max(1.0)
    }
}

/// Runs the invariant suite on the configured model.
pub fn validation_checks(s: &Scenario, spec: &ValidateSpec) -> Result<Vec<Check>> {
    let weights = resolve_weights(s)?;
    let opts = s.options(weights.scheme.clone());
    let (curve, trace) = fixed_point_solve(&s.model, &s.mu0, &s.grid, &opts)?;
    let coeffs = operator_b(&curve, &s.model)?;
    let frozen = operator_b(&MeasureCurve::constant(&s.mu0, &s.grid), &s.model)?;
    let times = s.grid.times();
    let pts: Vec<f64> = curve.snapshots().iter().flat_map(|m| m.coords().iter().copied()).collect();
    let sampler = sampler_around(&curve, spec)?;
    let mut checks = Vec::new();

    let w_pos = match spec.declared_rate_sup {
        Some(v) => v,
        None => sampler.rate_positive_sup(&coeffs, &times, &pts),
    };
    let tv0 = s.mu0.total_variation();
    // both inequalities are equalities at t = 0, so the scan starts at the first step
    let mut tv_worst: Option<Check> = None;
    for (k, snap) in curve.snapshots().iter().enumerate().skip(1) {
        let c = Check::new("tv_growth", snap.total_variation(), (w_pos * times[k]).exp() * tv0);
        keep_worst(&mut tv_worst, c);
    }
    checks.extend(tv_worst);

    let mut stab_worst: Option<Check> = None;
    for x in s.mu0.points() {
        let st = flow_stability_gap(&coeffs, &frozen, x, &s.grid, &sampler)?;
        for (l, r) in st.lhs.iter().zip(&st.rhs).skip(1) {
            keep_worst(&mut stab_worst, Check::new("flow_stability", *l, *r));
        }
    }
    checks.extend(stab_worst);

    let lip = time_lipschitz_check(&curve, &coeffs, &coeffs, &sampler)?;
    checks.push(Check::new("time_lipschitz", lip.ratio, lip.bound));

    let t_end = s.grid.t_end();
    let scale = curve.tv_profile().into_iter().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for (i, x) in s.mu0.points().take(5).enumerate() {
        let phi = BumpTest {
            t_center: 0.5 * t_end,
            t_half: 0.45 * t_end,
            center: x.to_vec(),
            radius: 1.0,
        };
        let r = weak_residual(&curve, &coeffs, &coeffs, &s.mu0, &phi);
        checks.push(Check::new(format!("weak_residual_{i}"), r.abs(), spec.residual_tol * scale));
    }

    let c_hat = match contraction_ratio(&trace) {
        Ok(fit) => fit.c_hat,
        Err(_) => trace.ratios.iter().copied().fold(0.0, f64::max),
    };
    checks.push(Check::new("contraction", c_hat, 1.0));
    let next = operator_t(&curve, &s.model, &s.mu0)?;
    let fp = weighted_curve_distance(&next, &curve, &opts.weight, opts.norm)?;
    checks.push(Check::new("fixed_point", fp, 2.0 * s.tol));

    let n = s.grid.n_steps();
    for k in [0, n / 2, n] {
        let mu = curve.at(k);
        let flat = flat_norm(mu)?.value;
        let tv = mu.total_variation();
        let z = z_norm_bracket(mu, s.alpha, DEFAULT_ATOMS, 40)?;
        checks.push(Check::new(format!("z_lower_le_upper_{k}"), z.lower, z.upper));
        checks.push(Check::new(format!("z_upper_le_flat_{k}"), z.upper, flat));
        checks.push(Check::new(format!("flat_le_tv_{k}"), flat, tv));
    }
    Ok(checks)
}

fn keep_worst(slot: &mut Option<Check>, c: Check) {
    if slot.as_ref().is_none_or(|w| c.margin() < w.margin()) {
        *slot = Some(c);
    }
}

fn sampler_around(curve: &MeasureCurve, spec: &ValidateSpec) -> Result<FieldSampler> {
    let d = curve.dim();
    let (mut lo, mut hi) = (vec![0.0; d], vec![0.0; d]);
    for snap in curve.snapshots() {
        if let Some((a, b)) = snap.bounding_box() {
            for k in 0..d {
                lo[k] = f64::min(lo[k], a[k]);
                hi[k] = f64::max(hi[k], b[k]);
            }
        }
    }
    for k in 0..d {
        lo[k] -= spec.sample_margin;
        hi[k] += spec.sample_margin;
    }
    // keep the tensor grid affordable in higher dimension
    let per_axis = match d {
        1 => spec.sample_points,
        2 => spec.sample_points.min(41),
        _ => spec.sample_points.min(11),
    };
    Ok(FieldSampler::new(BoxGrid::new(lo, hi, per_axis)?))
}

fn validate(s: &Scenario, spec: &ValidateSpec, out: &Path) -> Result<Outcome> {
    let checks = validation_checks(s, spec)?;
    let mut t = Table::create(&out.join("validate.csv"), &["check", "value", "bound", "margin"])?;
    let mut summary = Summary::default();
    let mut failed = false;
    let mut worst = f64::INFINITY;
    for c in &checks {
        let m = c.margin();
        t.row(&[c.name.as_str().into(), c.value.into(), c.bound.into(), m.into()])?;
        summary.num(format!("margin_{}", c.name), m);
        failed |= !(m >= MARGIN_TOL);
        worst = worst.min(m);
    }
    t.finish()?;
    summary.num("worst_margin", worst);
    summary.set("checks", checks.len());
    Ok(Outcome { summary, failed })
}

/// `C²` quintic ramp from 0 at `u ≤ 0` to 1 at `u ≥ 1`.
fn ramp(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// Smoothed indicator of `[lower, upper]`, equal to one at depth `width`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub width: f64,
}

impl SmoothBox {
    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&a, &b))| ramp((v - a) / self.width) * ramp((b - v) / self.width))
            .product()
    }
}

fn objective_box(objective: &Objective, width: f64, dim: usize) -> Result<SmoothBox> {
    let (lower, upper) = match objective {
        Objective::MassInRegion { lower, upper, .. } | Objective::ExitTime { lower, upper, .. } => (lower, upper),
    };
    if lower.len() != dim || upper.len() != dim {
        bail!("objective region must have {dim} coordinates per corner");
    }
    if !(width > 0.0) {
        bail!("ramp_width must be positive");
    }
    Ok(SmoothBox {
        lower: lower.clone(),
        upper: upper.clone(),
        width,
    })
}

/// One cell of the sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub h: f64,
    pub objective: f64,
    pub gradient: f64,
}

pub fn sweep_table(s: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    if spec.count < 2 || !(spec.h_min < spec.h_max) || spec.h_min <= -0.5 || spec.h_max >= 0.5 {
        bail!("sweep needs count >= 2 and -1/2 < h_min < h_max < 1/2");
    }
    let region = objective_box(&spec.objective, spec.ramp_width, s.dim)?;
    let weights = resolve_weights(s)?;
    let family = SolutionFamily::new(&s.model, &s.mu0, &s.grid, &s.options(weights.scheme))?;
    let hs: Vec<f64> = (0..spec.count)
        .map(|i| spec.h_min + (spec.h_max - spec.h_min) * i as f64 / (spec.count - 1) as f64)
        .collect();
    hs.par_iter()
        .map(|&h| {
            let lambda = if h + spec.lambda < 0.5 { spec.lambda } else { -spec.lambda };
            let curve = family.solve(h)?;
            let q = family.quotient(h, lambda)?;
            let mass = curve.pair(|x| region.value(x))?;
            let dmass = q.pair(|x| region.value(x))?;
            let (objective, gradient) = evaluate_objective(&spec.objective, s, &mass, &dmass)?;
            Ok(SweepCell { h, objective, gradient })
        })
        .collect()
}

/// Objective value and its `h`-derivative from the mass series `M(t_k)` and
/// its quotient pairing `∂_h M(t_k)`.
fn evaluate_objective(objective: &Objective, s: &Scenario, mass: &[f64], dmass: &[f64]) -> Result<(f64, f64)> {
    match objective {
        Objective::MassInRegion { time, .. } => {
            let t = time.unwrap_or(s.grid.t_end());
            let Some(k) = s.grid.node_of(t) else {
                bail!("objective time {t} is not a grid node");
            };
            Ok((mass[k], dmass[k]))
        }
        Objective::ExitTime { threshold, .. } => {
            let dt = s.grid.dt();
            for k in 1..mass.len() {
                if mass[k] <= *threshold && mass[k - 1] > *threshold {
                    // linear interpolation of the crossing; dτ/dh = −∂_hM/∂_tM
                    let slope = (mass[k] - mass[k - 1]) / dt;
                    let theta = (threshold - mass[k - 1]) / (mass[k] - mass[k - 1]);
                    let tau = s.grid.time(k - 1) + theta * dt;
                    let dm = dmass[k - 1] + theta * (dmass[k] - dmass[k - 1]);
                    return Ok((tau, -dm / slope));
                }
            }
            if mass[0] <= *threshold {
                Ok((0.0, 0.0))
            } else {
                Ok((s.grid.t_end(), 0.0))
            }
        }
    }
}

fn sweep(s: &Scenario, spec: &SweepSpec, out: &Path) -> Result<Summary> {
    let cells = sweep_table(s, spec)?;
    let mut t = Table::create(&out.join("sweep.csv"), &["h", "objective", "gradient"])?;
    for c in &cells {
        t.row(&[c.h.into(), c.objective.into(), c.gradient.into()])?;
    }
    t.finish()?;
    let best = cells
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("at least two cells");
    let mut summary = Summary::default();
    summary.num("h_star", best.h);
    summary.num("objective_min", best.objective);
    summary.num("gradient_at_h_star", best.gradient);
    Ok(summary)
}

/// `flat, z_lower, z_upper, tv` of one measure.
pub fn norm_row(mu: &ParticleMeasure, alpha: f64) -> Result<[f64; 4]> {
    let z = z_norm_bracket(mu, alpha, DEFAULT_ATOMS, measure_flow_core::norms::DEFAULT_BUDGET)?;
    Ok([z.flat, z.lower, z.upper, mu.total_variation()])
}

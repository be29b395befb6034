//! Scenario files.
//!
//! A scenario is a TOML document naming an initial measure, a field model
//! assembled from registry components, a time grid and one experiment.
//! Relative paths are resolved against the directory of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use measure_flow_core::fields::{FieldModel, Kernel, OuterFunction, RateTerm, VectorOuter, VelocityTerm};
use measure_flow_core::linear::TimeGrid;
use measure_flow_core::nonlinear::{CurveNorm, SchemeOptions, WeightFunction};
use measure_flow_core::ParticleMeasure;
use serde::Deserialize;

use crate::io;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    dim: usize,
    alpha: Option<f64>,
    initial_measure: RawMeasure,
    model: RawModel,
    grid: RawGrid,
    #[serde(default)]
    scheme: RawScheme,
    #[serde(default)]
    weight: RawWeight,
    #[serde(default)]
    experiment: Experiment,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    /// Rows `[x0, …, x{d−1}, weight]`.
    particles: Option<Vec<Vec<f64>>>,
    csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    h: f64,
    v0: Option<RawVelocity>,
    v1: Option<RawVelocity>,
    m0: Option<RawRate>,
    m1: Option<RawRate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVelocity {
    outer: Component,
    kernel: Component,
    direction: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRate {
    outer: Component,
    kernel: Component,
}

/// `{ name = "...", <parameters> }`.
#[derive(Debug, Deserialize)]
struct Component {
    name: String,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t_end: f64,
    dt: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawScheme {
    tol: f64,
    max_iter: usize,
    norm: String,
    contraction_target: f64,
}

impl Default for RawScheme {
    fn default() -> Self {
        RawScheme {
            tol: 1e-8,
            max_iter: 60,
            norm: "flat".into(),
            contraction_target: 0.5,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawWeight {
    Keyword(String),
    Spec(WeightTable),
}

impl Default for RawWeight {
    fn default() -> Self {
        RawWeight::Keyword("auto".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WeightTable {
    Exponential { g: f64 },
    Piecewise { rates: Vec<f64> },
    Combined { rates: Vec<f64> },
}

/// How the weight of the curve norms is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// Calibrated so that probe iterates contract by `target`.
    Auto { target: f64 },
    Fixed(WeightFunction),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Solve {},
    Sensitivity(SensitivitySpec),
    Counterexample(CounterexampleSpec),
    Validate(ValidateSpec),
    Sweep(SweepSpec),
}

/// A scenario without an `[experiment]` table just solves.
impl Default for Experiment {
    fn default() -> Self {
        Experiment::Solve {}
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySpec {
    pub h: f64,
    /// First rung of the halving ladder.
    pub lambda0: f64,
    pub rungs: usize,
    /// `z_upper`, `flat` or `tv`.
    pub norm: String,
    pub derivative_lambda: f64,
    pub decay_lambda: f64,
    pub decay_steps: usize,
    /// Increasing `h` grid for the continuity scan; skipped when empty.
    pub continuity_h: Vec<f64>,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        SensitivitySpec {
            h: 0.0,
            lambda0: 0.1,
            rungs: 6,
            norm: "z_upper".into(),
            derivative_lambda: 1e-3,
            decay_lambda: 1e-2,
            decay_steps: 7,
            continuity_h: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSpec {
    /// Quotients `q_{±h}` are compared at time `t`.
    pub h: f64,
    pub t: f64,
    pub lambda0: f64,
    pub rungs: usize,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        CounterexampleSpec {
            h: 0.1,
            t: 1.0,
            lambda0: 0.1,
            rungs: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSpec {
    /// Accepted `|weak residual|` per unit total variation.
    pub residual_tol: f64,
    /// Replaces the sampled `sup w⁺` in the total-variation check.
    pub declared_rate_sup: Option<f64>,
    /// Half width of the sampling box around the particle cloud.
    pub sample_margin: f64,
    pub sample_points: usize,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec {
            residual_tol: 1e-4,
            declared_rate_sup: None,
            sample_margin: 1.0,
            sample_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub h_min: f64,
    pub h_max: f64,
    pub count: usize,
    pub objective: Objective,
    #[serde(default = "default_sweep_lambda")]
    pub lambda: f64,
    #[serde(default = "default_ramp")]
    pub ramp_width: f64,
}

fn default_sweep_lambda() -> f64 {
    1e-3
}

fn default_ramp() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// Smoothed mass inside the box at `time` (default: the horizon).
    MassInRegion {
        lower: Vec<f64>,
        upper: Vec<f64>,
        time: Option<f64>,
    },
    /// First time the smoothed mass inside the box falls to `threshold`.
    ExitTime {
        lower: Vec<f64>,
        upper: Vec<f64>,
        threshold: f64,
    },
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dim: usize,
    pub alpha: f64,
    pub mu0: ParticleMeasure,
    pub model: FieldModel,
    pub grid: TimeGrid,
    pub tol: f64,
    pub max_iter: usize,
    pub norm: CurveNorm,
    pub weight: WeightSpec,
    pub experiment: Experiment,
}

pub const DEFAULT_ALPHA: f64 = 0.5;

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::parse(&text, base).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Scenario> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| anyhow!("config error: {e}"))?;
        let dim = raw.dim;
        if dim == 0 {
            bail!("config error: `dim` must be positive");
        }
        let alpha = raw.alpha.unwrap_or(DEFAULT_ALPHA);
        check_alpha(alpha)?;
        let mu0 = build_measure(&raw.initial_measure, dim, base_dir)?;
        let model = build_model(&raw.model, dim)?;
        if !(raw.grid.dt > 0.0) {
            bail!("config error: `grid.dt` must be positive");
        }
        let grid = TimeGrid::new(raw.grid.t_end, raw.grid.dt).context("config error in `grid`")?;
        let norm = parse_norm(&raw.scheme.norm, alpha).context("config error in `scheme.norm`")?;
        let target = raw.scheme.contraction_target;
        if !(target > 0.0 && target < 1.0) {
            bail!("config error: `scheme.contraction_target` must lie in (0, 1)");
        }
        let weight = match raw.weight {
            RawWeight::Keyword(k) if k == "auto" => WeightSpec::Auto { target },
            RawWeight::Keyword(k) => bail!("config error: unknown weight `{k}`; expected \"auto\" or a table with kind = exponential | piecewise | combined"),
            RawWeight::Spec(WeightTable::Exponential { g }) => WeightSpec::Fixed(WeightFunction::Exponential { g }),
            RawWeight::Spec(WeightTable::Piecewise { rates }) => {
                WeightSpec::Fixed(WeightFunction::PiecewiseExponential { rates })
            }
            RawWeight::Spec(WeightTable::Combined { rates }) => WeightSpec::Fixed(WeightFunction::combined(rates)),
        };
        if let WeightSpec::Fixed(w) = &weight {
            w.validate().context("config error in `weight`")?;
        }
        Ok(Scenario {
            dim,
            alpha,
            mu0,
            model,
            grid,
            tol: raw.scheme.tol,
            max_iter: raw.scheme.max_iter,
            norm,
            weight,
            experiment: raw.experiment,
        })
    }

    /// Overrides `α`, including inside a `z_upper` scheme norm.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        if let CurveNorm::ZUpper { .. } = self.norm {
            self.norm = CurveNorm::ZUpper { alpha };
        }
        Ok(())
    }

    /// Scheme options with the given weight.
    pub fn options(&self, weight: WeightFunction) -> SchemeOptions {
        SchemeOptions {
            weight,
            norm: self.norm,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        bail!("config error: `alpha` must lie in (0, 1], got {alpha}")
    }
}

pub fn parse_norm(name: &str, alpha: f64) -> Result<CurveNorm> {
    match name {
        "flat" => Ok(CurveNorm::Flat),
        "z_upper" => Ok(CurveNorm::ZUpper { alpha }),
        "tv" => Ok(CurveNorm::Tv),
        other => bail!("unknown norm `{other}`; valid: flat, z_upper, tv"),
    }
}

fn build_measure(raw: &RawMeasure, dim: usize, base_dir: &Path) -> Result<ParticleMeasure> {
    match (&raw.particles, &raw.csv) {
        (Some(rows), None) => {
            let mut coords = Vec::with_capacity(rows.len() * dim);
            let mut weights = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                if row.len() != dim + 1 {
                    bail!(
                        "config error: `initial_measure.particles[{i}]` has {} entries, expected {} (coordinates then weight)",
                        row.len(),
                        dim + 1
                    );
                }
                coords.extend_from_slice(&row[..dim]);
                weights.push(row[dim]);
            }
            ParticleMeasure::new(dim, coords, weights).context("config error in `initial_measure`")
        }
        (None, Some(csv)) => io::read_measure(&base_dir.join(csv), dim),
        _ => bail!("config error: `initial_measure` needs exactly one of `particles` or `csv`"),
    }
}

fn build_model(raw: &RawModel, dim: usize) -> Result<FieldModel> {
    let velocity = |term: &Option<RawVelocity>, field: &str| -> Result<VelocityTerm> {
        match term {
            None => Ok(VelocityTerm::zero(dim)),
            Some(t) => {
                let outer = outer(&t.outer).with_context(|| format!("config error in `model.{field}.outer`"))?;
                let kernel = kernel(&t.kernel).with_context(|| format!("config error in `model.{field}.kernel`"))?;
                let vo = VectorOuter::new(outer, t.direction.clone())
                    .with_context(|| format!("config error in `model.{field}.direction`"))?;
                Ok(VelocityTerm::new(vo, kernel))
            }
        }
    };
    let rate = |term: &Option<RawRate>, field: &str| -> Result<RateTerm> {
        match term {
            None => Ok(RateTerm::zero()),
            Some(t) => {
                let outer = outer(&t.outer).with_context(|| format!("config error in `model.{field}.outer`"))?;
                let kernel = kernel(&t.kernel).with_context(|| format!("config error in `model.{field}.kernel`"))?;
                Ok(RateTerm::new(outer, kernel))
            }
        }
    };
    FieldModel::new(
        velocity(&raw.v0, "v0")?,
        velocity(&raw.v1, "v1")?,
        rate(&raw.m0, "m0")?,
        rate(&raw.m1, "m1")?,
        raw.h,
    )
    .context("config error in `model`")
}

pub const OUTER_NAMES: &[&str] = &["identity", "constant", "linear", "tanh", "gaussian", "sine", "quadratic"];
pub const KERNEL_NAMES: &[&str] = &["gaussian", "wendland", "constant"];

/// Pulls named parameters out of a component, rejecting leftovers.
struct Params<'a> {
    component: &'a Component,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn new(component: &'a Component) -> Self {
        Params {
            component,
            used: Vec::new(),
        }
    }

    fn get(&mut self, key: &'static str, default: Option<f64>) -> Result<f64> {
        self.used.push(key);
        match (self.component.params.get(key), default) {
            (Some(&v), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => bail!("`{}` requires parameter `{key}`", self.component.name),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.component.params.keys().find(|k| !self.used.contains(&k.as_str())) {
            let valid = if self.used.is_empty() { "none".to_string() } else { self.used.join(", ") };
            bail!("`{}` has no parameter `{k}` (valid: {valid})", self.component.name);
        }
        Ok(())
    }
}

fn outer(c: &Component) -> Result<OuterFunction> {
    let mut p = Params::new(c);
    let f = match c.name.as_str() {
        "identity" => OuterFunction::Identity,
        "constant" => OuterFunction::Constant { value: p.get("value", None)? },
        "linear" => OuterFunction::Linear {
            slope: p.get("slope", Some(1.0))?,
            intercept: p.get("intercept", Some(0.0))?,
        },
        "tanh" => OuterFunction::Tanh { gain: p.get("gain", Some(1.0))? },
        "gaussian" => OuterFunction::Gaussian {
            amplitude: p.get("amplitude", Some(1.0))?,
            width: p.get("width", Some(1.0))?,
        },
        "sine" => OuterFunction::Sine {
            amplitude: p.get("amplitude", Some(1.0))?,
            frequency: p.get("frequency", Some(1.0))?,
        },
        "quadratic" => OuterFunction::Quadratic { coeff: p.get("coeff", Some(1.0))? },
        other => bail!("unknown outer function `{other}`; valid: {}", OUTER_NAMES.join(", ")),
    };
    p.finish()?;
    f.validate()?;
    Ok(f)
}

fn kernel(c: &Component) -> Result<Kernel> {
    let mut p = Params::new(c);
    let k = match c.name.as_str() {
        "gaussian" => Kernel::Gaussian { sigma: p.get("sigma", None)? },
        "wendland" => Kernel::Wendland { radius: p.get("radius", None)? },
        "constant" => Kernel::Constant { value: p.get("value", Some(1.0))? },
        other => bail!("unknown kernel `{other}`; valid: {}", KERNEL_NAMES.join(", ")),
    };
    p.finish()?;
    k.validate()?;
    Ok(k)
}

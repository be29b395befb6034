use alloc::vec;
use alloc::vec::Vec;

use super::weight::interval_index;
use super::{node_distances, operator_t, CurveNorm, WeightFunction};
use crate::fields::FieldModel;
use crate::linear::{MeasureCurve, TimeGrid};
use crate::measure::ParticleMeasure;
use crate::{math, Error, Result};

/// Rates beyond this are reported as a calibration failure.
pub const MAX_RATE: f64 = 1e6;

/// Piecewise-exponential weight under which probe iterates of `T_h`
/// contract by at most `c`.
///
/// Three applications of `T_h` from the constant curve `μ₀` give node
/// distances `d₀₁`, `d₁₂`, `d₂₃`. For each unit interval `N` in turn, the
/// rate `g_N` starts at `max(sup|w|, 1)` and doubles until both
/// `d₁₂/d₀₁` and `d₂₃/d₁₂`, weighted and maximized over the nodes of
/// `[0, N)`, are at most `c`.
pub fn calibrate_weight(
    model: &FieldModel,
    mu0: &ParticleMeasure,
    grid: &TimeGrid,
    c: f64,
    norm: CurveNorm,
) -> Result<WeightFunction> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: "contraction target must lie in (0, 1)",
        });
    }
    let c0 = MeasureCurve::constant(mu0, grid);
    let c1 = operator_t(&c0, model, mu0)?;
    let c2 = operator_t(&c1, model, mu0)?;
    let c3 = operator_t(&c2, model, mu0)?;
    let d01 = node_distances(&c1, &c0, norm)?;
    let d12 = node_distances(&c2, &c1, norm)?;
    let d23 = node_distances(&c3, &c2, norm)?;

    let tv = [&c1, &c2, &c3]
        .iter()
        .flat_map(|c| c.tv_profile())
        .fold(mu0.total_variation(), f64::max);
    let initial = model.rate_sup(tv).max(1.0);

    let intervals = (math::ceil(grid.t_end()) as usize).max(1);
    let interval_of: Vec<usize> = grid.times().iter().map(|&t| interval_index(t, intervals)).collect();
    let mut rates = vec![initial; intervals];
    for n in 0..intervals {
        loop {
            let weight = WeightFunction::PiecewiseExponential { rates: rates.clone() };
            let prefix = |d: &[f64]| {
                (0..grid.len())
                    .filter(|&k| interval_of[k] <= n)
                    .map(|k| weight.eval(grid.time(k)) * d[k])
                    .fold(0.0, f64::max)
            };
            let (a, b, e) = (prefix(&d01), prefix(&d12), prefix(&d23));
            if quotient(b, a).max(quotient(e, b)) <= c {
                break;
            }
            rates[n] *= 2.0;
            if rates[n] > MAX_RATE {
                return Err(Error::CalibrationFailure {
                    interval: n + 1,
                    rate: rates[n],
                });
            }
        }
    }
    Ok(WeightFunction::PiecewiseExponential { rates })
}

fn quotient(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

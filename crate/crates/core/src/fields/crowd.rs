use alloc::vec;
use alloc::vec::Vec;

use super::kernel::wendland;
use crate::linear::{MeasureCurve, TimeGrid};
use crate::math;
use crate::measure::ParticleMeasure;
use crate::{Error, Result};

/// Particles closer than this to the evaluation point are the point itself.
const SELF_TOL: f64 = 1e-12;
const MAX_COORD: f64 = 1e12;

/// Nonlocal pedestrian velocity
/// `v(x) = Σᵢ aᵢ K_r(|yᵢ − x|) g(∠(heading, yᵢ − x)) (yᵢ − x)/|yᵢ − x|`.
#[derive(Debug, Clone, Copy)]
pub struct Crowd {
    pub radius: f64,
    /// Radial profile on `ρ = r/R ∈ [0, 1]`; zero beyond.
    pub profile: fn(f64) -> f64,
    /// Vision weight of the angle between heading and neighbour, in `[0, 1]`.
    pub vision: fn(f64) -> f64,
}

fn wendland_profile(rho: f64) -> f64 {
    wendland(rho).0
}

/// `cos²(α/2)` inside the forward half-plane, zero behind.
pub fn cone_vision(angle: f64) -> f64 {
    if angle.abs() <= core::f64::consts::FRAC_PI_2 {
        let c = math::cos(0.5 * angle);
        c * c
    } else {
        0.0
    }
}

impl Crowd {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: "must be positive",
            });
        }
        Ok(Crowd {
            radius,
            profile: wendland_profile,
            vision: cone_vision,
        })
    }
}

/// Evaluates the crowd velocity at `x` for an individual facing `heading`.
pub fn crowd_velocity(
    crowd: &Crowd,
    mu: &ParticleMeasure,
    x: &[f64],
    heading: &[f64],
    out: &mut [f64],
) -> Result<()> {
    if mu.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: mu.dim(),
        });
    }
    out[0] = 0.0;
    out[1] = 0.0;
    for (y, &a) in mu.points().zip(mu.weights()) {
        let dx = y[0] - x[0];
        let dy = y[1] - x[1];
        let r = math::sqrt(dx * dx + dy * dy);
        if r < SELF_TOL || r >= crowd.radius {
            continue;
        }
        let angle = if heading[0] == 0.0 && heading[1] == 0.0 {
            0.0
        } else {
            let cross = heading[0] * dy - heading[1] * dx;
            let dot = heading[0] * dx + heading[1] * dy;
            math::atan2(cross, dot)
        };
        let s = a * (crowd.profile)(r / crowd.radius) * (crowd.vision)(angle) / r;
        out[0] += s * dx;
        out[1] += s * dy;
    }
    Ok(())
}

/// Moves every individual with the crowd velocity of the current
/// configuration; headings are the previous step's velocity directions,
/// starting from `initial_heading`. Weights stay fixed.
pub fn simulate_crowd(
    crowd: &Crowd,
    mu0: &ParticleMeasure,
    grid: &TimeGrid,
    initial_heading: &[f64],
) -> Result<MeasureCurve> {
    if mu0.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: mu0.dim(),
        });
    }
    let n = mu0.len();
    let dt = grid.dt();
    let weights = mu0.weights().to_vec();
    let mut x = mu0.coords().to_vec();
    let mut heading: Vec<f64> = (0..n).flat_map(|_| [initial_heading[0], initial_heading[1]]).collect();
    let mut snapshots = vec![mu0.clone()];

    let rhs = |pos: &[f64], heading: &[f64], out: &mut [f64]| -> Result<()> {
        let mu = ParticleMeasure::new(2, pos.to_vec(), weights.clone())?;
        for i in 0..n {
            crowd_velocity(crowd, &mu, &pos[2 * i..2 * i + 2], &heading[2 * i..2 * i + 2], &mut out[2 * i..2 * i + 2])?;
        }
        Ok(())
    };
    let mut k1 = vec![0.0; 2 * n];
    let mut k2 = vec![0.0; 2 * n];
    let mut k3 = vec![0.0; 2 * n];
    let mut k4 = vec![0.0; 2 * n];
    let mut tmp = vec![0.0; 2 * n];
    for step in 0..grid.n_steps() {
        rhs(&x, &heading, &mut k1)?;
        for j in 0..2 * n {
            tmp[j] = x[j] + 0.5 * dt * k1[j];
        }
        rhs(&tmp, &heading, &mut k2)?;
        for j in 0..2 * n {
            tmp[j] = x[j] + 0.5 * dt * k2[j];
        }
        rhs(&tmp, &heading, &mut k3)?;
        for j in 0..2 * n {
            tmp[j] = x[j] + dt * k3[j];
        }
        rhs(&tmp, &heading, &mut k4)?;
        for j in 0..2 * n {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > MAX_COORD) {
            return Err(Error::BlowUp {
                time: grid.time(step + 1),
            });
        }
        rhs(&x, &heading, &mut k1)?;
        for i in 0..n {
            let v = &k1[2 * i..2 * i + 2];
            let s = math::norm(v);
            if s > 0.0 {
                heading[2 * i] = v[0] / s;
                heading[2 * i + 1] = v[1] / s;
            }
        }
        snapshots.push(ParticleMeasure::new(2, x.clone(), weights.clone())?);
    }
    MeasureCurve::new(grid.clone(), snapshots)
}

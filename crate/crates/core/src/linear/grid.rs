use alloc::vec::Vec;

use crate::measure::ParticleMeasure;
use crate::{Error, Result};

/// Uniform time grid `0, dt, …, n·dt = t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Fails unless `t_end / dt` is an integer up to `1e-9` relative error.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: "must be positive and finite",
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "must be positive and finite",
            });
        }
        let n = crate::math::round(t_end / dt);
        if n < 1.0 || (n * dt - t_end).abs() > 1e-9 * t_end {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "t_end must be an integer multiple of dt",
            });
        }
        Ok(TimeGrid {
            t_end,
            n_steps: n as usize,
        })
    }

    pub fn with_steps(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "must be positive",
            });
        }
        TimeGrid::new(t_end, t_end / n_steps as f64)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Node index of `t` when it lies on the grid (to `1e-9·dt`).
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let k = crate::math::round(t / self.dt());
        if k >= 0.0 && (k as usize) < self.len() && (k * self.dt() - t).abs() <= 1e-9 * self.dt() {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Same grid with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        TimeGrid {
            t_end: self.t_end,
            n_steps: self.n_steps * factor.max(1),
        }
    }
}

/// A curve `t ↦ μ_t` sampled at the nodes of a [`TimeGrid`], with a fixed
/// particle count along the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCurve {
    grid: TimeGrid,
    snapshots: Vec<ParticleMeasure>,
}

impl MeasureCurve {
    pub fn new(grid: TimeGrid, snapshots: Vec<ParticleMeasure>) -> Result<Self> {
        if snapshots.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: snapshots.len(),
            });
        }
        let (dim, n) = (snapshots[0].dim(), snapshots[0].len());
        for s in &snapshots {
            if s.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            if s.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: s.len(),
                });
            }
        }
        Ok(MeasureCurve { grid, snapshots })
    }

    /// The curve that stays at `mu` for all times.
    pub fn constant(mu: &ParticleMeasure, grid: &TimeGrid) -> Self {
        MeasureCurve {
            grid: grid.clone(),
            snapshots: (0..grid.len()).map(|_| mu.clone()).collect(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn snapshots(&self) -> &[ParticleMeasure] {
        &self.snapshots
    }

    pub fn at(&self, k: usize) -> &ParticleMeasure {
        &self.snapshots[k]
    }

    pub fn last(&self) -> &ParticleMeasure {
        &self.snapshots[self.snapshots.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].dim()
    }

    pub fn particle_count(&self) -> usize {
        self.snapshots[0].len()
    }

    pub fn tv_profile(&self) -> Vec<f64> {
        self.snapshots.iter().map(ParticleMeasure::total_variation).collect()
    }

    /// Node-wise `α c₁ + β c₂` at the particle level.
    pub fn linear_combination(alpha: f64, c1: &Self, beta: f64, c2: &Self) -> Result<Self> {
        if c1.grid != c2.grid {
            return Err(Error::GridMismatch);
        }
        let snapshots = c1
            .snapshots
            .iter()
            .zip(&c2.snapshots)
            .map(|(a, b)| ParticleMeasure::linear_combination(alpha, a, beta, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasureCurve {
            grid: c1.grid.clone(),
            snapshots,
        })
    }

    /// Pairing `⟨μ_{t_k}, f⟩` at every node.
    pub fn pair<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Result<Vec<f64>> {
        self.snapshots.iter().map(|s| s.pair(&mut f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_are_exact_multiples() {
        let g = TimeGrid::new(1.0, 1e-3).unwrap();
        assert_eq!(g.len(), 1001);
        assert_eq!(g.time(1000), 1.0);
        assert_eq!(g.node_of(0.5), Some(500));
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }

    #[test]
    fn curve_rejects_changing_particle_count() {
        let g = TimeGrid::new(1.0, 1.0).unwrap();
        let a = ParticleMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let b = ParticleMeasure::from_1d(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(MeasureCurve::new(g, alloc::vec![a, b]).is_err());
    }
}

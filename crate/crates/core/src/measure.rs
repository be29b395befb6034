//! Signed measures as finite weighted Dirac ensembles.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Positions closer than this are treated as one point by [`ParticleMeasure::compact`].
pub const COMPACT_TOL: f64 = 1e-12;

/// A signed Radon measure `Σ aᵢ δ_{xᵢ}` on `R^d`.
///
/// Coordinates are stored row-major (`coords[i*d..(i+1)*d]` is particle `i`).
/// Coincident particles and zero weights are kept as-is; arithmetic never
/// merges them, so particle indices stay stable along a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleMeasure {
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be positive",
            });
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::LengthMismatch {
                expected: weights.len() * dim,
                found: coords.len(),
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "coordinate",
                index: i / dim,
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                what: "weight",
                index: i,
            });
        }
        Ok(ParticleMeasure {
            dim,
            coords,
            weights,
        })
    }

    /// The zero measure on `R^dim`.
    pub fn zero(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        ParticleMeasure {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// `weight · δ_point`.
    pub fn dirac(point: &[f64], weight: f64) -> Result<Self> {
        Self::new(point.len(), point.to_vec(), alloc::vec![weight])
    }

    /// Builds a one-dimensional measure from `(x, weight)` pairs.
    pub fn from_1d(particles: &[(f64, f64)]) -> Result<Self> {
        let coords = particles.iter().map(|p| p.0).collect();
        let weights = particles.iter().map(|p| p.1).collect();
        Self::new(1, coords, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `Σ |aᵢ|`.
    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// `Σ aᵢ`, the pairing with the constant function 1.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Moves every particle through `map`; weights are untouched.
    ///
    /// `map(x, out)` writes `r(x)` into `out`.
    pub fn push_forward<F>(&self, mut map: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let d = self.dim;
        let mut coords = alloc::vec![0.0; self.coords.len()];
        for (i, (src, dst)) in self
            .coords
            .chunks_exact(d)
            .zip(coords.chunks_exact_mut(d))
            .enumerate()
        {
            map(src, dst);
            if dst.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteMap { index: i });
            }
        }
        Ok(ParticleMeasure {
            dim: d,
            coords,
            weights: self.weights.clone(),
        })
    }

    /// Multiplies each weight by a positive per-particle factor.
    pub fn reweight(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: factors.len(),
            });
        }
        if let Some(i) = factors.iter().position(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::NonFinite {
                what: "reweighting factor",
                index: i,
            });
        }
        Ok(ParticleMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.weights.iter().zip(factors).map(|(w, f)| w * f).collect(),
        })
    }

    /// `α·self`, keeping the particle layout.
    pub fn scaled(&self, alpha: f64) -> Self {
        ParticleMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.weights.iter().map(|w| alpha * w).collect(),
        }
    }

    /// `α·μ + β·ν` as the concatenation of both particle lists.
    pub fn linear_combination(alpha: f64, mu: &Self, beta: f64, nu: &Self) -> Result<Self> {
        if mu.dim != nu.dim {
            return Err(Error::DimMismatch {
                expected: mu.dim,
                found: nu.dim,
            });
        }
        let mut coords = Vec::with_capacity(mu.coords.len() + nu.coords.len());
        coords.extend_from_slice(&mu.coords);
        coords.extend_from_slice(&nu.coords);
        let mut weights = Vec::with_capacity(mu.len() + nu.len());
        weights.extend(mu.weights.iter().map(|w| alpha * w));
        weights.extend(nu.weights.iter().map(|w| beta * w));
        Self::new(mu.dim, coords, weights)
    }

    /// `μ − ν`.
    pub fn difference(mu: &Self, nu: &Self) -> Result<Self> {
        Self::linear_combination(1.0, mu, -1.0, nu)
    }

    /// `⟨μ, f⟩ = Σ aᵢ f(xᵢ)`.
    pub fn pair<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut acc = 0.0;
        for (i, (x, w)) in self.points().zip(&self.weights).enumerate() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteField { index: i });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Particles with strictly positive weight.
    pub fn positive_part(&self) -> Self {
        self.filter(|w| w > 0.0, 1.0)
    }

    /// `μ⁻` as a non-negative measure (particles with negative weight, negated).
    pub fn negative_part(&self) -> Self {
        self.filter(|w| w < 0.0, -1.0)
    }

    fn filter(&self, keep: impl Fn(f64) -> bool, sign: f64) -> Self {
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (x, &w) in self.points().zip(&self.weights) {
            if keep(w) {
                coords.extend_from_slice(x);
                weights.push(sign * w);
            }
        }
        ParticleMeasure {
            dim: self.dim,
            coords,
            weights,
        }
    }

    /// Merges particles whose positions agree within `tol` (max-norm) and
    /// drops zero weights.
    ///
    /// Points are sorted lexicographically first, so merging is `O(n log n)`
    /// apart from long runs of nearly-equal leading coordinates.
    pub fn compact(&self, tol: f64) -> Self {
        let d = self.dim;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let mut coords: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        // start index (into `weights`) of clusters whose leading coordinate is within tol
        let mut window_start = 0;
        for &i in &order {
            let x = self.point(i);
            while window_start < weights.len() && x[0] - coords[window_start * d] > tol {
                window_start += 1;
            }
            let hit = (window_start..weights.len()).find(|&k| {
                coords[k * d..(k + 1) * d]
                    .iter()
                    .zip(x)
                    .all(|(a, b)| (a - b).abs() <= tol)
            });
            match hit {
                Some(k) => weights[k] += self.weights[i],
                None => {
                    coords.extend_from_slice(x);
                    weights.push(self.weights[i]);
                }
            }
        }
        let mut out = ParticleMeasure {
            dim: d,
            coords: Vec::new(),
            weights: Vec::new(),
        };
        for (k, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                out.coords.extend_from_slice(&coords[k * d..(k + 1) * d]);
                out.weights.push(w);
            }
        }
        out
    }

    /// Largest Euclidean norm of a particle position (0 for the empty measure).
    pub fn max_radius(&self) -> f64 {
        self.points().map(math::norm).fold(0.0, f64::max)
    }

    /// Axis-aligned bounding box `(lower, upper)`; `None` when empty.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for x in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        Some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_point() -> ParticleMeasure {
        ParticleMeasure::from_1d(&[(0.0, 1.0), (1.0, -2.0)]).unwrap()
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(two_point().total_variation(), 3.0);
        assert_eq!(ParticleMeasure::zero(2).total_variation(), 0.0);
        let prob = ParticleMeasure::from_1d(&[(0.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!(prob.total_variation(), 1.0);
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(matches!(
            ParticleMeasure::new(1, vec![f64::NAN], vec![1.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            ParticleMeasure::new(1, vec![0.0], vec![f64::INFINITY]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            ParticleMeasure::new(2, vec![0.0], vec![1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn push_forward_examples() {
        let d0 = ParticleMeasure::dirac(&[0.0], 1.0).unwrap();
        let moved = d0.push_forward(|x, y| y[0] = x[0] + 1.0).unwrap();
        assert_eq!(moved.point(0), &[1.0]);

        let mu = two_point();
        assert_eq!(mu.push_forward(|x, y| y.copy_from_slice(x)).unwrap(), mu);

        let dipole = ParticleMeasure::from_1d(&[(0.0, 1.0), (1.0, -1.0)]).unwrap();
        let stretched = dipole.push_forward(|x, y| y[0] = 2.0 * x[0]).unwrap();
        assert_eq!(stretched.coords(), &[0.0, 2.0]);
        assert_eq!(stretched.total_variation(), 2.0);
        assert_eq!(dipole.total_variation(), 2.0);

        assert!(matches!(
            d0.push_forward(|_, y| y[0] = f64::NAN),
            Err(Error::NonFiniteMap { index: 0 })
        ));
    }

    #[test]
    fn reweight_examples() {
        let mu = ParticleMeasure::from_1d(&[(0.0, 1.0), (1.0, -1.0)]).unwrap();
        assert_eq!(mu.reweight(&[2.0, 3.0]).unwrap().weights(), &[2.0, -3.0]);
        assert_eq!(mu.reweight(&[1.0, 1.0]).unwrap(), mu);
        let c = 0.7;
        let t = 1.3;
        let grown = ParticleMeasure::dirac(&[0.0], 1.0)
            .unwrap()
            .reweight(&[math::exp(c * t)])
            .unwrap();
        assert!((grown.total_variation() - math::exp(c * t)).abs() < 1e-15);
        assert!(matches!(
            mu.reweight(&[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(mu.reweight(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn linear_combination_examples() {
        let d0 = ParticleMeasure::dirac(&[0.0], 1.0).unwrap();
        let zero = ParticleMeasure::linear_combination(1.0, &d0, -1.0, &d0).unwrap();
        for f in [|x: &[f64]| x[0] + 3.0, |x: &[f64]| math::sin(x[0]) + 1.0] {
            assert_eq!(zero.pair(f).unwrap(), 0.0);
        }
        // first-order quotient of δ_{(1+λ)t}
        let (lam, t) = (0.1, 1.0);
        let q = ParticleMeasure::linear_combination(
            1.0 / lam,
            &ParticleMeasure::dirac(&[(1.0 + lam) * t], 1.0).unwrap(),
            -1.0 / lam,
            &ParticleMeasure::dirac(&[t], 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(q.len(), 2);
        let expected = (math::sin((1.0 + lam) * t) - math::sin(t)) / lam;
        assert!((q.pair(|x| math::sin(x[0])).unwrap() - expected).abs() < 1e-12);

        let mu = two_point();
        let nu = ParticleMeasure::dirac(&[5.0], 4.0).unwrap();
        let c = ParticleMeasure::linear_combination(2.0, &mu, 0.0, &nu).unwrap();
        let f = |x: &[f64]| x[0] * x[0] + 1.0;
        assert_eq!(c.pair(f).unwrap(), 2.0 * mu.pair(f).unwrap());

        let other = ParticleMeasure::zero(2);
        assert!(matches!(
            ParticleMeasure::linear_combination(1.0, &mu, 1.0, &other),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn pair_examples() {
        let d = ParticleMeasure::dirac(&[0.3, -0.2], 1.0).unwrap();
        assert_eq!(d.pair(|x| x[0] - x[1]).unwrap(), 0.5);
        let mu = two_point();
        assert_eq!(mu.pair(|_| 1.0).unwrap(), mu.total_mass());
        assert!(matches!(
            mu.pair(|x| 1.0 / x[0]),
            Err(Error::NonFiniteField { index: 0 })
        ));
    }

    #[test]
    fn hahn_jordan_parts() {
        let mu = ParticleMeasure::from_1d(&[(0.0, 1.5), (1.0, -2.0), (2.0, 0.5)]).unwrap();
        let (p, n) = (mu.positive_part(), mu.negative_part());
        assert_eq!(p.weights(), &[1.5, 0.5]);
        assert_eq!(n.weights(), &[2.0]);
        assert_eq!(
            mu.total_variation(),
            p.total_variation() + n.total_variation()
        );
    }

    #[test]
    fn compact_merges_and_drops() {
        let mu = ParticleMeasure::from_1d(&[
            (1.0, 1.0),
            (0.0, 2.0),
            (1.0 + 1e-13, -1.0),
            (2.0, 0.0),
            (0.0, 1.0),
        ])
        .unwrap();
        let c = mu.compact(COMPACT_TOL);
        assert_eq!(c.len(), 1);
        assert_eq!(c.point(0), &[0.0]);
        assert_eq!(c.weight(0), 3.0);
        // arithmetic itself never merges
        assert_eq!(mu.len(), 5);
    }
}

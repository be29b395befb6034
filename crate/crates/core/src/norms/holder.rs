//! `C^{1+α}` norms: grid estimates and analytic upper bounds.

use alloc::vec;
use alloc::vec::Vec;

use crate::fields::ScalarField;
use crate::math;
use crate::{Error, Result};

/// Uniform tensor grid on an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    per_axis: usize,
}

impl BoxGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, per_axis: usize) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() || per_axis == 0 {
            return Err(Error::EmptyGrid);
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidParameter {
                name: "box",
                reason: "bounds must be finite with lower <= upper",
            });
        }
        Ok(BoxGrid {
            lower,
            upper,
            per_axis,
        })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64, per_axis: usize) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim], per_axis)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same box with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Self {
        let per_axis = (self.per_axis - 1) * factor.max(1) + 1;
        BoxGrid {
            per_axis,
            ..self.clone()
        }
    }

    /// Grid points, row-major.
    pub fn points(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.len();
        let mut out = Vec::with_capacity(n * d);
        let mut idx = vec![0usize; d];
        for _ in 0..n {
            for k in 0..d {
                out.push(self.coordinate(k, idx[k]));
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < self.per_axis {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if self.per_axis == 1 {
            return 0.5 * (self.lower[axis] + self.upper[axis]);
        }
        let s = i as f64 / (self.per_axis - 1) as f64;
        self.lower[axis] + s * (self.upper[axis] - self.lower[axis])
    }
}

/// Grid-sampled pieces of the `C^{1+α}` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub sup: f64,
    pub grad_sup: f64,
    pub seminorm: f64,
}

impl HolderEstimate {
    pub fn total(&self) -> f64 {
        self.sup + self.grad_sup + self.seminorm
    }
}

/// Lower estimate of `sup|f| + sup|∇f| + |∇f|_α` from samples on `grid`.
///
/// The Hölder seminorm is maximized over all sampled pairs, so the cost is
/// quadratic in the number of grid points.
pub fn holder_norm_estimate<F: ScalarField + ?Sized>(
    f: &F,
    grid: &BoxGrid,
    alpha: f64,
) -> Result<HolderEstimate> {
    check_alpha(alpha)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let d = grid.dim();
    if f.dim() != d {
        return Err(Error::DimMismatch {
            expected: f.dim(),
            found: d,
        });
    }
    let pts = grid.points();
    let n = grid.len();
    let mut grads = vec![0.0; n * d];
    let mut sup = 0.0_f64;
    let mut grad_sup = 0.0_f64;
    for i in 0..n {
        let x = &pts[i * d..(i + 1) * d];
        sup = sup.max(f.value(x).abs());
        let g = &mut grads[i * d..(i + 1) * d];
        f.gradient(x, g);
        grad_sup = grad_sup.max(math::norm(g));
    }
    let mut seminorm = 0.0_f64;
    for i in 0..n {
        let xi = &pts[i * d..(i + 1) * d];
        let gi = &grads[i * d..(i + 1) * d];
        for j in (i + 1)..n {
            let xj = &pts[j * d..(j + 1) * d];
            let gj = &grads[j * d..(j + 1) * d];
            let num = math::dist(gi, gj);
            if num == 0.0 {
                continue;
            }
            let den = math::powf(math::dist(xi, xj), alpha);
            seminorm = seminorm.max(num / den);
        }
    }
    Ok(HolderEstimate {
        sup,
        grad_sup,
        seminorm,
    })
}

/// Analytic bounds `sup|f|`, `sup|∇f|`, `sup‖∇²f‖` for a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderBound {
    pub sup: f64,
    pub grad_sup: f64,
    pub hessian_sup: f64,
}

impl HolderBound {
    /// Upper bound on `|∇f|_α` from `|∇f(x) − ∇f(y)| ≤ min(L|x−y|, 2G)`.
    pub fn seminorm(&self, alpha: f64) -> f64 {
        interpolated_seminorm(self.hessian_sup, self.grad_sup, alpha)
    }

    /// Upper bound on the full `C^{1+α}` norm.
    pub fn norm(&self, alpha: f64) -> f64 {
        self.sup + self.grad_sup + self.seminorm(alpha)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let c = c.abs();
        HolderBound {
            sup: c * self.sup,
            grad_sup: c * self.grad_sup,
            hessian_sup: c * self.hessian_sup,
        }
    }
}

impl core::ops::Add for HolderBound {
    type Output = HolderBound;

    fn add(self, o: HolderBound) -> HolderBound {
        HolderBound {
            sup: self.sup + o.sup,
            grad_sup: self.grad_sup + o.grad_sup,
            hessian_sup: self.hessian_sup + o.hessian_sup,
        }
    }
}

/// `L^α (2G)^{1−α}`, a Hölder constant for a map with Lipschitz constant `L`
/// and sup-norm `G`.
pub fn interpolated_seminorm(lipschitz: f64, sup: f64, alpha: f64) -> f64 {
    if lipschitz == 0.0 || sup == 0.0 {
        return 0.0;
    }
    math::powf(lipschitz, alpha) * math::powf(2.0 * sup, 1.0 - alpha)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            reason: "must lie in (0, 1]",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FnScalar;

    #[test]
    fn constant_function() {
        let one = FnScalar::new(1, |_| 1.0, |_, g| g.fill(0.0));
        let grid = BoxGrid::cube(1, 2.0, 41).unwrap();
        let est = holder_norm_estimate(&one, &grid, 0.5).unwrap();
        assert_eq!(est.total(), 1.0);
    }

    #[test]
    fn identity_on_unit_interval() {
        let id = FnScalar::new(1, |x| x[0], |_, g| g[0] = 1.0);
        let grid = BoxGrid::cube(1, 1.0, 2001).unwrap();
        let est = holder_norm_estimate(&id, &grid, 0.5).unwrap();
        assert!((est.total() - 2.0).abs() < 1e-6);
        assert_eq!(est.seminorm, 0.0);
    }

    #[test]
    fn gaussian_bump_grid_converges() {
        let g = FnScalar::new(
            1,
            |x| math::exp(-0.5 * x[0] * x[0]),
            |x, g| g[0] = -x[0] * math::exp(-0.5 * x[0] * x[0]),
        );
        let coarse = BoxGrid::cube(1, 4.0, 201).unwrap();
        let fine = coarse.refined(10);
        let a = holder_norm_estimate(&g, &coarse, 0.5).unwrap().total();
        let b = holder_norm_estimate(&g, &fine, 0.5).unwrap().total();
        assert!(((a - b) / b).abs() < 0.02, "{a} vs {b}");
        // analytic bound dominates both samples
        let bound = HolderBound {
            sup: 1.0,
            grad_sup: math::exp(-0.5),
            hessian_sup: 1.0,
        };
        assert!(bound.norm(0.5) >= b);
    }

    #[test]
    fn empty_and_invalid_grids() {
        assert!(matches!(BoxGrid::cube(1, 1.0, 0), Err(Error::EmptyGrid)));
        assert!(BoxGrid::new(alloc::vec![1.0], alloc::vec![0.0], 3).is_err());
    }

    #[test]
    fn grid_points_cover_corners() {
        let g = BoxGrid::new(alloc::vec![0.0, -1.0], alloc::vec![1.0, 1.0], 3).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 18);
        assert_eq!(&p[..2], &[0.0, -1.0]);
        assert_eq!(&p[16..], &[1.0, 1.0]);
    }
}

use crate::math;
use crate::norms::HolderBound;
use crate::{Error, Result};

/// Radial kernels `K(y, x) = ψ(|x − y|)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `exp(−|x − y|² / (2σ²))`.
    Gaussian { sigma: f64 },
    /// Wendland `φ_{3,2}(|x − y| / R)`, a `C⁴` bump supported in the ball of radius `R`.
    Wendland { radius: f64 },
    Constant { value: f64 },
}

const WENDLAND_SAMPLES: usize = 20_000;
/// Relative slack on sampled Wendland extrema; the sampling error of a
/// smooth profile at this resolution is orders of magnitude below it.
const WENDLAND_SAFETY: f64 = 1.001;

/// `ψ(ρ) = (1−ρ)⁶(35ρ² + 18ρ + 3)/3` with its first two derivatives.
pub fn wendland(rho: f64) -> (f64, f64, f64) {
    if rho >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = 1.0 - rho;
    let s4 = s * s * s * s;
    let v = s4 * s * s * (35.0 * rho * rho + 18.0 * rho + 3.0) / 3.0;
    let d1 = -56.0 / 3.0 * rho * s4 * s * (5.0 * rho + 1.0);
    let d2 = 56.0 / 3.0 * s4 * (35.0 * rho * rho - 4.0 * rho - 1.0);
    (v, d1, d2)
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Wendland { .. } => "wendland",
            Kernel::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            Kernel::Wendland { radius } => radius > 0.0 && radius.is_finite(),
            Kernel::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "kernel",
                reason: "width must be positive and values finite",
            })
        }
    }

    /// Radial profile and its derivative at distance `r`.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        match *self {
            Kernel::Gaussian { sigma } => {
                let v = math::exp(-0.5 * r * r / (sigma * sigma));
                (v, -r / (sigma * sigma) * v)
            }
            Kernel::Wendland { radius } => {
                let (v, d1, _) = wendland(r / radius);
                (v, d1 / radius)
            }
            Kernel::Constant { value } => (value, 0.0),
        }
    }

    pub fn eval(&self, y: &[f64], x: &[f64]) -> f64 {
        match *self {
            Kernel::Constant { value } => value,
            Kernel::Gaussian { sigma } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                math::exp(-0.5 * r2 / (sigma * sigma))
            }
            _ => self.profile(math::dist(x, y)).0,
        }
    }

    /// Adds `scale · ∇ₓK(y, x)` to `out`.
    pub fn add_grad_x(&self, y: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
        match *self {
            Kernel::Constant { .. } => {}
            Kernel::Gaussian { sigma } => {
                let v = self.eval(y, x);
                let c = -scale * v / (sigma * sigma);
                for k in 0..x.len() {
                    out[k] += c * (x[k] - y[k]);
                }
            }
            Kernel::Wendland { radius } => {
                // ψ'(ρ)/ρ is regular at 0, so divide analytically
                let r = math::dist(x, y);
                let rho = r / radius;
                if rho >= 1.0 {
                    return;
                }
                let s = 1.0 - rho;
                let d1_over_rho = -56.0 / 3.0 * s * s * s * s * s * (5.0 * rho + 1.0);
                let c = scale * d1_over_rho / (radius * radius);
                for k in 0..x.len() {
                    out[k] += c * (x[k] - y[k]);
                }
            }
        }
    }

    /// Certified bounds on `x ↦ K(y, x)`: sup, gradient sup and Hessian
    /// operator-norm sup.
    pub fn bound(&self) -> HolderBound {
        match *self {
            Kernel::Constant { value } => HolderBound {
                sup: value.abs(),
                grad_sup: 0.0,
                hessian_sup: 0.0,
            },
            // Hessian eigenvalues are K(r²/σ² − 1)/σ² and −K/σ²; the largest
            // magnitude is 1/σ² at r = 0.
            Kernel::Gaussian { sigma } => HolderBound {
                sup: 1.0,
                grad_sup: math::exp(-0.5) / sigma,
                hessian_sup: 1.0 / (sigma * sigma),
            },
            Kernel::Wendland { radius } => {
                let (grad, hess) = wendland_extrema();
                HolderBound {
                    sup: 1.0,
                    grad_sup: grad / radius,
                    hessian_sup: hess / (radius * radius),
                }
            }
        }
    }

    /// Certified `C^{1+α}` norm of `x ↦ K(y, x)`, uniform in `y`.
    pub fn norm_bound(&self, alpha: f64) -> f64 {
        self.bound().norm(alpha)
    }
}

/// `(sup|ψ'|, sup max(|ψ''|, |ψ'/ρ|))` over `[0, 1]`.
fn wendland_extrema() -> (f64, f64) {
    let mut grad = 0.0_f64;
    // |ψ'/ρ| is decreasing and equals 56/3 at the origin
    let mut hess = 56.0_f64 / 3.0;
    for i in 0..=WENDLAND_SAMPLES {
        let rho = i as f64 / WENDLAND_SAMPLES as f64;
        let (_, d1, d2) = wendland(rho);
        grad = grad.max(d1.abs());
        hess = hess.max(d2.abs());
    }
    (grad * WENDLAND_SAFETY, hess * WENDLAND_SAFETY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wendland_profile_is_normalized_and_smooth_at_support_edge() {
        let (v, d1, d2) = wendland(0.0);
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(d1, 0.0);
        assert!((d2 + 56.0 / 3.0).abs() < 1e-12);
        let (v, d1, d2) = wendland(1.0 - 1e-9);
        assert!(v.abs() < 1e-40 && d1.abs() < 1e-30 && d2.abs() < 1e-30);
    }

    #[test]
    fn wendland_derivatives_match_differences() {
        let h = 1e-6;
        for &rho in &[0.1, 0.37, 0.8] {
            let (_, d1, d2) = wendland(rho);
            let fd1 = (wendland(rho + h).0 - wendland(rho - h).0) / (2.0 * h);
            let fd2 = (wendland(rho + h).1 - wendland(rho - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6, "{d1} {fd1}");
            assert!((d2 - fd2).abs() < 1e-5, "{d2} {fd2}");
        }
    }

    #[test]
    fn gradients_match_differences() {
        let y = [0.3, -0.2];
        let x = [0.9, 0.4];
        for k in [
            Kernel::Gaussian { sigma: 0.7 },
            Kernel::Wendland { radius: 1.5 },
            Kernel::Constant { value: 2.0 },
        ] {
            let mut g = [0.0; 2];
            k.add_grad_x(&y, &x, 1.0, &mut g);
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += 1e-6;
                xm[j] -= 1e-6;
                let fd = (k.eval(&y, &xp) - k.eval(&y, &xm)) / 2e-6;
                assert!((g[j] - fd).abs() < 1e-7, "{}: {} vs {}", k.name(), g[j], fd);
            }
        }
    }

    #[test]
    fn wendland_has_compact_support() {
        let k = Kernel::Wendland { radius: 1.0 };
        assert_eq!(k.eval(&[0.0], &[1.0]), 0.0);
        assert_eq!(k.eval(&[0.0], &[3.0]), 0.0);
        assert!(k.eval(&[0.0], &[0.5]) > 0.0);
    }
}

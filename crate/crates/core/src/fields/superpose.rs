use super::{Kernel, OuterFunction, ScalarField};
use crate::measure::ParticleMeasure;
use crate::norms::HolderBound;

/// `k_μ(x) = Σᵢ aᵢ K(yᵢ, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolved {
    pub kernel: Kernel,
    pub measure: ParticleMeasure,
}

pub fn kernel_convolve(kernel: &Kernel, mu: &ParticleMeasure) -> Convolved {
    Convolved {
        kernel: kernel.clone(),
        measure: mu.clone(),
    }
}

impl Convolved {
    /// Certified bounds from the triangle inequality over particles.
    pub fn bound(&self) -> HolderBound {
        self.kernel.bound().scaled(self.measure.total_variation())
    }
}

impl ScalarField for Convolved {
    fn dim(&self) -> usize {
        self.measure.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if let Kernel::Constant { value } = self.kernel {
            return value * self.measure.total_mass();
        }
        self.measure
            .points()
            .zip(self.measure.weights())
            .map(|(y, a)| a * self.kernel.eval(y, x))
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        if let Kernel::Constant { .. } = self.kernel {
            return;
        }
        for (y, &a) in self.measure.points().zip(self.measure.weights()) {
            self.kernel.add_grad_x(y, x, a, out);
        }
    }
}

/// `x ↦ u(k(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposed<F> {
    pub outer: OuterFunction,
    pub inner: F,
}

pub fn superpose<F: ScalarField>(outer: &OuterFunction, inner: F) -> Superposed<F> {
    Superposed {
        outer: outer.clone(),
        inner,
    }
}

impl<F: ScalarField> ScalarField for Superposed<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.outer.value(self.inner.value(x))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d1 = self.outer.d1(self.inner.value(x));
        self.inner.gradient(x, out);
        out.iter_mut().for_each(|g| *g *= d1);
    }
}

impl Superposed<Convolved> {
    /// Certified bounds on `u ∘ k_μ`.
    pub fn bound(&self) -> HolderBound {
        let k = self.inner.bound();
        let (u1, u2) = outer_slopes(&self.outer, k.sup);
        HolderBound {
            sup: self.outer.sup_on(k.sup),
            grad_sup: u1 * k.grad_sup,
            hessian_sup: u2 * k.grad_sup * k.grad_sup + u1 * k.hessian_sup,
        }
    }
}

/// `sup|u'|`, `sup|u''|` over `|s| ≤ radius`.
fn outer_slopes(u: &OuterFunction, radius: f64) -> (f64, f64) {
    let b = u.bounds();
    let u1 = match (b.u1, u) {
        (Some(v), _) => v,
        (None, OuterFunction::Quadratic { coeff }) => 2.0 * coeff.abs() * radius,
        (None, _) => unreachable!("only the quadratic has an unbounded slope"),
    };
    (u1, b.u2.unwrap_or(0.0))
}

/// Gateaux derivative `x ↦ u'(k_μ̄(x)) · k_ν(x)` of `μ ↦ u(k_μ)` at `μ̄` in
/// direction `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeField {
    pub outer: OuterFunction,
    pub base: Convolved,
    pub direction: Convolved,
}

pub fn superposition_derivative(
    outer: &OuterFunction,
    base: &ParticleMeasure,
    direction: &ParticleMeasure,
    kernel: &Kernel,
) -> DerivativeField {
    DerivativeField {
        outer: outer.clone(),
        base: kernel_convolve(kernel, base),
        direction: kernel_convolve(kernel, direction),
    }
}

impl ScalarField for DerivativeField {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.direction.measure.is_empty() {
            return 0.0;
        }
        self.outer.d1(self.base.value(x)) * self.direction.value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        if self.direction.measure.is_empty() {
            return;
        }
        let d = self.dim();
        let kb = self.base.value(x);
        let kv = self.direction.value(x);
        let u = self.outer.derivatives(kb);
        let mut gb = alloc::vec![0.0; d];
        self.base.gradient(x, &mut gb);
        self.direction.gradient(x, out);
        for k in 0..d {
            out[k] = u[2] * kv * gb[k] + u[1] * out[k];
        }
    }
}

/// Constant `C` with `‖u(k_μ)‖_{C^{1+α}} ≤ C (1 + N + N²)`, `N = TV(μ)`.
///
/// `None` when `u'` is unbounded, where no bound of this form exists.
pub fn superposition_constant(outer: &OuterFunction, kernel: &Kernel) -> Option<f64> {
    let b = outer.bounds();
    let u1 = b.u1?;
    let u2 = b.u2?;
    let k = kernel.bound();
    let (c0, extra) = match b.u0 {
        Some(u0) => (u0, 0.0),
        None => (outer.value(0.0).abs(), k.sup),
    };
    // seminorm ≤ L^α (2G)^{1−α} ≤ L + 2G by weighted AM-GM
    let c1 = u1 * (extra + 3.0 * k.grad_sup + k.hessian_sup);
    let c2 = u2 * k.grad_sup * k.grad_sup;
    Some(c0.max(c1).max(c2))
}

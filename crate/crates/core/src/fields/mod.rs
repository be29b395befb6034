//! Kernel convolutions, superposition coefficients and the crowd velocity.

mod crowd;
mod kernel;
mod model;
mod outer;
mod superpose;

pub use crowd::{cone_vision, crowd_velocity, simulate_crowd, Crowd};
pub use kernel::{wendland, Kernel};
pub use model::{perturbed_coefficients, Coefficients, FieldModel, RateTerm, VelocityTerm};
pub use outer::{OuterBounds, OuterFunction, VectorOuter};
pub use superpose::{
    kernel_convolve, superposition_constant, superpose, superposition_derivative, Convolved,
    DerivativeField, Superposed,
};

/// A real-valued field on `R^d` with a gradient.
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// A vector field `R^d → R^d` with a row-major Jacobian `J[i*d + j] = ∂ⱼvᵢ`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64], out: &mut [f64]);
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient(x, out)
    }
}

/// Scalar field from a value closure and a gradient closure.
#[derive(Clone)]
pub struct FnScalar<V, G> {
    dim: usize,
    value: V,
    gradient: G,
}

impl<V, G> FnScalar<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(dim: usize, value: V, gradient: G) -> Self {
        FnScalar {
            dim,
            value,
            gradient,
        }
    }
}

impl<V, G> ScalarField for FnScalar<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }
}

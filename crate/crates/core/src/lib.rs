//! Particle-based solvers for linear and nonlinear transport equations on
//! signed Radon measures.
//!
//! Measures are finite weighted Dirac ensembles. The linear equation
//! `∂ₜν + div(b ν) = w ν` is solved by riding characteristics and
//! accumulating the exponential mass factor along each trajectory. The
//! nonlocal equation, whose coefficients are superpositions `u(k_μ)` of a
//! kernel convolution, is solved by a contraction fixed-point scheme built
//! from the linear solver. Parameter sensitivities are probed with particle
//! level difference quotients measured in the flat metric and in a rigorous
//! bracket for the dual norm of `C^{1+α}`.
//!
//! The crate is `no_std` (it needs `alloc`); IO, configuration and the
//! command-line front end live in the `measure-flow` crate.

#![cfg_attr(not(test), no_std)]
// Index loops over particle arrays read better than zipped iterators here.
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` is how NaN inputs get rejected alongside non-positive ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

extern crate alloc;

mod error;
pub mod fields;
pub mod linear;
pub mod math;
pub mod measure;
pub mod nonlinear;
pub mod norms;
pub mod sensitivity;
pub mod stats;

pub use error::{Error, Result};
pub use measure::ParticleMeasure;

pub mod prelude {
    pub use crate::fields::{FieldModel, Kernel, OuterFunction, VectorOuter};
    pub use crate::linear::{MeasureCurve, TimeGrid};
    pub use crate::nonlinear::{CurveNorm, SchemeOptions, SchemeTrace, WeightFunction};
    pub use crate::norms::{flat_distance, flat_norm, z_norm_bracket, BumpDictionary};
    pub use crate::{Error, ParticleMeasure, Result};
}

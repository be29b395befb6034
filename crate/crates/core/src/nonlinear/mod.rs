//! The contraction scheme `ν^{n+1} = S(B_h(ν^n))` for the nonlocal problem.

mod calibrate;
mod scheme;
mod weight;

pub use calibrate::{calibrate_weight, MAX_RATE};
pub use scheme::{
    contraction_ratio, fixed_point_from, fixed_point_solve, node_distances, operator_b,
    operator_s, operator_t, scheme_iterates, weighted_curve_distance, weighted_node_distances,
    ContractionFit, CurveCoefficients, CurveNorm, SchemeOptions, SchemeTrace,
};
pub use weight::WeightFunction;

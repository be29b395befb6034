//! The linear problem `∂ₜν + div(bν) = wν` solved along characteristics.

mod checks;
mod flow;
mod grid;

pub use checks::{
    flow_sensitivity_fd, flow_stability_gap, time_lipschitz_check, weak_residual, BumpTest,
    FieldSampler, FlowSensitivity, FlowStability, TestFunction, TimeLipschitz, WaveTest,
};
pub use flow::{
    integrate_flow, solve_linear, ConstantRate, ConstantVelocity, FnRate, FnVelocity, Perturbed,
    Rate, Velocity, BLOW_UP_RADIUS,
};
pub use grid::{MeasureCurve, TimeGrid};

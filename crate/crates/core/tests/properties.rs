use measure_flow_core::fields::{kernel_convolve, Kernel, ScalarField};
use measure_flow_core::linear::{solve_linear, ConstantRate, FnRate, FnVelocity, TimeGrid};
use measure_flow_core::norms::{flat_norm, z_norm_bracket, z_upper, Bump};
use measure_flow_core::ParticleMeasure;
use proptest::prelude::*;

fn measure(dim: usize, max_len: usize) -> impl Strategy<Value = ParticleMeasure> {
    prop::collection::vec((prop::collection::vec(-3.0..3.0f64, dim), -2.0..2.0f64), 1..=max_len).prop_map(
        move |ps| {
            let coords = ps.iter().flat_map(|(x, _)| x.clone()).collect();
            let weights = ps.iter().map(|(_, a)| *a).collect();
            ParticleMeasure::new(dim, coords, weights).unwrap()
        },
    )
}

fn flat(mu: &ParticleMeasure) -> f64 {
    flat_norm(mu).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_is_a_norm(mu in measure(2, 8), nu in measure(2, 8), c in -3.0..3.0f64) {
        let sum = ParticleMeasure::linear_combination(1.0, &mu, 1.0, &nu).unwrap();
        prop_assert!(flat(&sum) <= flat(&mu) + flat(&nu) + 1e-9);
        prop_assert!((flat(&mu.scaled(c)) - c.abs() * flat(&mu)).abs() <= 1e-9 * (1.0 + flat(&mu)));
    }

    #[test]
    fn norms_nest(mu in measure(1, 6)) {
        let z = z_norm_bracket(&mu, 0.5, 4, 20).unwrap();
        let tv = mu.compact(1e-12).total_variation();
        prop_assert!(z.lower <= z.upper * (1.0 + 1e-12) + 1e-15);
        prop_assert!(z.upper <= z.flat + 1e-15);
        prop_assert!(z.flat <= tv + 1e-9);
    }

    #[test]
    fn convolution_is_linear(mu in measure(2, 6), nu in measure(2, 6), a in -2.0..2.0f64, b in -2.0..2.0f64,
                             x in prop::collection::vec(-3.0..3.0f64, 2)) {
        let k = Kernel::Gaussian { sigma: 0.7 };
        let combo = ParticleMeasure::linear_combination(a, &mu, b, &nu).unwrap();
        let lhs = kernel_convolve(&k, &combo).value(&x);
        let rhs = a * kernel_convolve(&k, &mu).value(&x) + b * kernel_convolve(&k, &nu).value(&x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn push_forward_keeps_tv(mu in measure(2, 8), s in -2.0..2.0f64) {
        let moved = mu.push_forward(|x, out| {
            out[0] = x[0] + s * x[1].sin();
            out[1] = x[1] * 0.5 - s;
        }).unwrap();
        prop_assert!((moved.total_variation() - mu.total_variation()).abs() <= 1e-12);
    }

    #[test]
    fn linear_solve_is_linear(mu in measure(1, 5), nu in measure(1, 5), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let grid = TimeGrid::new(1.0, 0.05).unwrap();
        let v = FnVelocity::new(1, |t: f64, x: &[f64], out: &mut [f64]| out[0] = (x[0] + t).sin(),
                                   |t: f64, x: &[f64], out: &mut [f64]| out[0] = (x[0] + t).cos());
        let w = FnRate(|t: f64, x: &[f64]| 0.3 * (x[0] - t).cos());
        let combo = ParticleMeasure::linear_combination(a, &mu, b, &nu).unwrap();
        let whole = solve_linear(&v, &w, &combo, &grid).unwrap();
        let parts = [solve_linear(&v, &w, &mu, &grid).unwrap(), solve_linear(&v, &w, &nu, &grid).unwrap()];
        let phi = |x: &[f64]| (-x[0] * x[0]).exp();
        let lhs = whole.pair(phi).unwrap();
        let p0 = parts[0].pair(phi).unwrap();
        let p1 = parts[1].pair(phi).unwrap();
        for k in 0..lhs.len() {
            prop_assert!((lhs[k] - (a * p0[k] + b * p1[k])).abs() <= 1e-12 * (1.0 + lhs[k].abs()));
        }
    }

    #[test]
    fn constant_rate_scales_tv(mu in measure(1, 6), c in -1.0..1.0f64) {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let v = FnVelocity::new(1, |_: f64, x: &[f64], out: &mut [f64]| out[0] = x[0].cos(),
                                   |_: f64, x: &[f64], out: &mut [f64]| out[0] = -x[0].sin());
        let curve = solve_linear(&v, &ConstantRate(c), &mu, &grid).unwrap();
        for (k, tv) in curve.tv_profile().into_iter().enumerate() {
            let expect = (c * grid.time(k)).exp() * mu.total_variation();
            prop_assert!((tv - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }
}

/// Any single Gaussian bump `f` gives `⟨μ, f⟩ / ‖f‖ ≤ ‖μ‖_Z`; a coarse
/// search over centers and widths must therefore stay below the upper side
/// of the bracket.
#[test]
fn bump_search_stays_below_upper_bound() {
    let alpha = 0.5;
    let cases = [
        vec![(0.0, 1.0), (0.1, -1.0)],
        vec![(0.0, 1.0), (0.5, -0.5), (1.0, 0.25)],
        vec![(-1.0, 0.3), (1.0, 0.3), (0.02, -0.6)],
        vec![(0.0, 2.0)],
    ];
    for pts in cases {
        let mu = ParticleMeasure::from_1d(&pts).unwrap();
        let upper = z_upper(&mu, alpha).unwrap();
        let mut best = 0.0_f64;
        for ci in -40..=40 {
            for &width in &[0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2] {
                let bump = Bump { center: vec![ci as f64 * 0.05], width, amplitude: 1.0 };
                let pairing = mu.pair(|x| bump.value(x)).unwrap();
                best = best.max(pairing.abs() / bump.bound().norm(alpha));
            }
        }
        assert!(best <= upper * (1.0 + 1e-12), "{pts:?}: {best} > {upper}");
        let bracket = z_norm_bracket(&mu, alpha, 8, 200).unwrap();
        assert!(bracket.lower <= bracket.upper);
    }
}

//! The flat norm against brute-force vertex enumeration of its linear
//! program, for up to four particles.

use measure_flow_core::norms::flat_norm;
use measure_flow_core::ParticleMeasure;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows `g·f ≤ r` of `|f_i| ≤ 1`, `f_i − f_j ≤ |x_i − x_j|`.
fn constraints(mu: &ParticleMeasure) -> Vec<(Vec<f64>, f64)> {
    let n = mu.len();
    let mut rows = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut g = vec![0.0; n];
            g[i] = s;
            rows.push((g, 1.0));
        }
        for j in 0..n {
            if i != j {
                let mut g = vec![0.0; n];
                g[i] = 1.0;
                g[j] = -1.0;
                let d: f64 = mu.point(i).iter().zip(mu.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                rows.push((g, d.sqrt()));
            }
        }
    }
    rows
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let m = a[r][c] / a[c][c];
            let pivot = a[c].clone();
            for (dst, src) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                *dst -= m * src;
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = ((c + 1)..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for last in (k - 1)..m {
        for mut c in combinations(last, k - 1) {
            c.push(last);
            out.push(c);
        }
    }
    out
}

/// Maximum of `Σ a_i f_i` over the vertices of the feasible polytope.
fn vertex_oracle(mu: &ParticleMeasure) -> f64 {
    let n = mu.len();
    let rows = constraints(mu);
    let mut best = f64::NEG_INFINITY;
    for pick in combinations(rows.len(), n) {
        let a = pick.iter().map(|&r| rows[r].0.clone()).collect();
        let b = pick.iter().map(|&r| rows[r].1).collect();
        let Some(f) = solve(a, b) else { continue };
        let feasible = rows
            .iter()
            .all(|(g, r)| g.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>() <= r + 1e-9);
        if feasible {
            best = best.max(mu.weights().iter().zip(&f).map(|(a, f)| a * f).sum());
        }
    }
    best
}

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..300 {
        let n = 1 + trial % 4;
        let dim = 1 + trial % 3;
        let spread = [0.3, 1.0, 3.0][trial % 3];
        let coords = (0..n * dim).map(|_| rng.random_range(-spread..spread)).collect();
        let weights = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mu = ParticleMeasure::new(dim, coords, weights).unwrap();
        let exact = vertex_oracle(&mu);
        let got = flat_norm(&mu).unwrap().value;
        assert!((got - exact).abs() <= 1e-9 * (1.0 + exact), "trial {trial}: {got} vs {exact}");
    }
}

#[test]
fn balanced_and_unbalanced_extremes() {
    // far apart: no transport, every particle pays its mass
    let mu = ParticleMeasure::from_1d(&[(0.0, 1.0), (10.0, -1.0), (20.0, 0.5)]).unwrap();
    assert!((flat_norm(&mu).unwrap().value - vertex_oracle(&mu)).abs() < 1e-12);
    assert!((flat_norm(&mu).unwrap().value - 2.5).abs() < 1e-12);
    // close together: transport wins
    let mu = ParticleMeasure::from_1d(&[(0.0, 1.0), (0.1, -1.0), (0.15, 0.25), (0.2, -0.25)]).unwrap();
    assert!((flat_norm(&mu).unwrap().value - vertex_oracle(&mu)).abs() < 1e-12);
}

//! Two-sided bracket for `‖μ‖_Z`, the dual norm of `C^{1+α}`.
//!
//! Upper side: any decomposition of `⟨μ, φ⟩` into mass, dipole and Taylor
//! remainder terms bounds the pairing by `max(masses, dipoles, remainders)`
//! on the unit ball of the sum-norm, so the minimum over several
//! decompositions (and the flat norm, whose unit ball is larger) is an upper
//! bound. Lower side: `⟨μ, f⟩ / N(f)` for a dictionary of Gaussian bumps,
//! where `N(f)` is an analytic upper bound of `‖f‖_{C^{1+α}}`.

use alloc::vec;
use alloc::vec::Vec;

use super::flat::flat_norm;
use super::holder::{check_alpha, BoxGrid, HolderBound};
use crate::fields::ScalarField;
use crate::math;
use crate::measure::{ParticleMeasure, COMPACT_TOL};
use crate::{Error, Result};

/// Default number of atoms in the bump dictionary.
pub const DEFAULT_ATOMS: usize = 8;
/// Default number of coordinate line searches for the lower bound.
pub const DEFAULT_BUDGET: usize = 200;

const MAX_SCALES: usize = 16;
const GOLDEN_STEPS: usize = 24;

/// Upper bound on `‖μ‖_Z`: the smaller of the flat norm and the best
/// multi-scale Taylor-cluster bound.
pub fn z_upper(mu: &ParticleMeasure, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let merged = mu.compact(COMPACT_TOL);
    if merged.is_empty() {
        return Ok(0.0);
    }
    let flat = flat_norm(&merged)?.value;
    Ok(flat.min(multiscale_cluster_bound(&merged, alpha)))
}

/// Best two-level cluster bound over a ladder of clustering radii.
pub fn multiscale_cluster_bound(mu: &ParticleMeasure, alpha: f64) -> f64 {
    if mu.is_empty() {
        return 0.0;
    }
    let scales = radius_ladder(mu);
    let mut best = mu.total_variation();
    for (i, &r1) in scales.iter().enumerate() {
        let level1 = cluster_moments(mu, r1, alpha);
        for &r2 in &scales[i..] {
            best = best.min(group_bound(&level1, mu.dim(), r2, alpha));
        }
    }
    best
}

/// Cluster bound for fixed particle radius `r1` and cluster-grouping radius
/// `r2` (`r2 = 0` gives the single-level bound).
pub fn cluster_bound(mu: &ParticleMeasure, alpha: f64, r1: f64, r2: f64) -> f64 {
    let level1 = cluster_moments(mu, r1, alpha);
    group_bound(&level1, mu.dim(), r2, alpha)
}

struct Moments {
    center: Vec<f64>,
    mass: f64,
    dipole: Vec<f64>,
    remainder: f64,
}

fn radius_ladder(mu: &ParticleMeasure) -> Vec<f64> {
    let n = mu.len();
    let mut dmin = f64::INFINITY;
    let mut diam = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = math::dist(mu.point(i), mu.point(j));
            if d > 0.0 {
                dmin = dmin.min(d);
            }
            diam = diam.max(d);
        }
    }
    let mut scales = vec![0.0];
    if diam > 0.0 {
        let ratio = math::powf(diam / dmin, 1.0 / (MAX_SCALES - 2) as f64).max(2.0);
        let mut r = dmin;
        while r < diam * ratio {
            scales.push(r);
            r *= ratio;
        }
    }
    scales
}

/// Greedy leader clustering in lexicographic order.
fn leaders(points: &[&[f64]], radius: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let mut taken = vec![false; points.len()];
    let mut clusters = Vec::new();
    for &i in &order {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        let mut members = vec![i];
        for &j in &order {
            if !taken[j] && math::dist(points[i], points[j]) <= radius {
                taken[j] = true;
                members.push(j);
            }
        }
        clusters.push(members);
    }
    clusters
}

fn weighted_center(points: &[&[f64]], weights: &[f64], members: &[usize], d: usize) -> Vec<f64> {
    let total: f64 = members.iter().map(|&i| weights[i]).sum();
    if total <= 0.0 {
        return points[members[0]].to_vec();
    }
    let mut c = vec![0.0; d];
    for &i in members {
        for k in 0..d {
            c[k] += weights[i] * points[i][k];
        }
    }
    c.iter_mut().for_each(|v| *v /= total);
    c
}

fn cluster_moments(mu: &ParticleMeasure, radius: f64, alpha: f64) -> Vec<Moments> {
    let d = mu.dim();
    let pts: Vec<&[f64]> = mu.points().collect();
    let abs_w: Vec<f64> = mu.weights().iter().map(|w| w.abs()).collect();
    leaders(&pts, radius)
        .into_iter()
        .map(|members| {
            let center = weighted_center(&pts, &abs_w, &members, d);
            let mut mass = 0.0;
            let mut dipole = vec![0.0; d];
            let mut remainder = 0.0;
            for &i in &members {
                let a = mu.weight(i);
                mass += a;
                for k in 0..d {
                    dipole[k] += a * (pts[i][k] - center[k]);
                }
                let r = math::dist(pts[i], &center);
                if r > 0.0 {
                    remainder += a.abs() * math::powf(r, 1.0 + alpha) / (1.0 + alpha);
                }
            }
            Moments {
                center,
                mass,
                dipole,
                remainder,
            }
        })
        .collect()
}

fn group_bound(level1: &[Moments], d: usize, radius: f64, alpha: f64) -> f64 {
    let centers: Vec<&[f64]> = level1.iter().map(|m| m.center.as_slice()).collect();
    let strength: Vec<f64> = level1
        .iter()
        .map(|m| m.mass.abs() + math::norm(&m.dipole))
        .collect();
    let mut mass_term = 0.0;
    let mut dipole_term = 0.0;
    let mut remainder_term: f64 = level1.iter().map(|m| m.remainder).sum();
    for members in leaders(&centers, radius) {
        let cg = weighted_center(&centers, &strength, &members, d);
        let mut mass = 0.0;
        let mut dipole = vec![0.0; d];
        for &c in &members {
            let m = &level1[c];
            mass += m.mass;
            for k in 0..d {
                dipole[k] += m.dipole[k] + m.mass * (m.center[k] - cg[k]);
            }
            let r = math::dist(&m.center, &cg);
            if r > 0.0 {
                remainder_term += m.mass.abs() * math::powf(r, 1.0 + alpha) / (1.0 + alpha)
                    + math::norm(&m.dipole) * math::powf(r, alpha);
            }
        }
        mass_term += mass.abs();
        dipole_term += math::norm(&dipole);
    }
    mass_term.max(dipole_term).max(remainder_term)
}

/// `A · exp(−|x − c|² / (2 s²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.amplitude * math::exp(-0.5 * r2 / (self.width * self.width))
    }

    pub fn add_gradient(&self, x: &[f64], out: &mut [f64]) {
        let v = self.value(x);
        let s2 = self.width * self.width;
        for k in 0..x.len() {
            out[k] -= v * (x[k] - self.center[k]) / s2;
        }
    }

    /// `sup|f| = |A|`, `sup|∇f| = |A| e^{−1/2}/s`, `sup‖∇²f‖ = |A|/s²`.
    pub fn bound(&self) -> HolderBound {
        let a = self.amplitude.abs();
        HolderBound {
            sup: a,
            grad_sup: a * math::exp(-0.5) / self.width,
            hessian_sup: a / (self.width * self.width),
        }
    }
}

/// Sum of Gaussian bumps used as `C^{1+α}` test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpDictionary {
    pub dim: usize,
    pub alpha: f64,
    pub atoms: Vec<Bump>,
    /// Optional box for grid-based norm estimates of the optimized function.
    pub grid: Option<BoxGrid>,
}

impl BumpDictionary {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(BumpDictionary {
            dim,
            alpha,
            atoms: Vec::new(),
            grid: None,
        })
    }

    /// Analytic upper bound of the `C^{1+α}` norm of the atom sum.
    pub fn certified_norm(&self) -> f64 {
        self.atoms
            .iter()
            .map(Bump::bound)
            .fold(HolderBound { sup: 0.0, grad_sup: 0.0, hessian_sup: 0.0 }, |a, b| a + b)
            .norm(self.alpha)
    }
}

impl ScalarField for BumpDictionary {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.atoms.iter().map(|b| b.value(x)).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for b in &self.atoms {
            b.add_gradient(x, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZBracket {
    pub lower: f64,
    pub upper: f64,
    pub flat: f64,
    pub cluster: f64,
    /// The maximizing dictionary behind `lower`.
    pub dictionary: BumpDictionary,
}

/// Rigorous bracket `lower ≤ ‖μ‖_Z ≤ upper`.
///
/// `budget` is the number of coordinate line searches spent on optimizing
/// the bump dictionary; `atoms` its size.
pub fn z_norm_bracket(
    mu: &ParticleMeasure,
    alpha: f64,
    atoms: usize,
    budget: usize,
) -> Result<ZBracket> {
    check_alpha(alpha)?;
    if budget == 0 {
        return Err(Error::BudgetZero);
    }
    let merged = mu.compact(COMPACT_TOL);
    let mut dictionary = BumpDictionary::new(mu.dim(), alpha)?;
    if merged.is_empty() {
        return Ok(ZBracket {
            lower: 0.0,
            upper: 0.0,
            flat: 0.0,
            cluster: 0.0,
            dictionary,
        });
    }
    let flat = flat_norm(&merged)?.value;
    let cluster = multiscale_cluster_bound(&merged, alpha);
    let upper = flat.min(cluster);

    let mut opt = BumpSearch::new(&merged, alpha, atoms.max(1));
    opt.run(budget);
    let lower = opt.best_value.max(0.0);
    dictionary.atoms = opt.atoms;
    if opt.sign < 0.0 {
        dictionary.atoms.iter_mut().for_each(|b| b.amplitude = -b.amplitude);
    }
    Ok(ZBracket {
        lower,
        upper,
        flat,
        cluster,
        dictionary,
    })
}

/// `⟨μ, f⟩ / N(f)` for a dictionary with certified norm bound `N`.
pub fn dictionary_ratio(mu: &ParticleMeasure, dict: &BumpDictionary) -> f64 {
    let norm = dict.certified_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let pairing: f64 = mu.points().zip(mu.weights()).map(|(x, w)| w * dict.value(x)).sum();
    pairing / norm
}

struct BumpSearch<'a> {
    mu: &'a ParticleMeasure,
    alpha: f64,
    atoms: Vec<Bump>,
    /// Overall sign applied to the pairing so the search maximizes `|⟨μ,f⟩|/N`.
    sign: f64,
    best_value: f64,
    min_width: f64,
    max_width: f64,
}

impl<'a> BumpSearch<'a> {
    fn new(mu: &'a ParticleMeasure, alpha: f64, count: usize) -> Self {
        let d = mu.dim();
        let (lo, hi) = mu.bounding_box().expect("non-empty measure");
        let diam = math::dist(&lo, &hi);
        let scale = if diam > 0.0 { diam } else { 1.0 };
        let min_width = 1e-4 * scale;
        let max_width = 1e3 * scale;

        let mut by_size: Vec<usize> = (0..mu.len()).collect();
        by_size.sort_by(|&a, &b| mu.weight(b).abs().total_cmp(&mu.weight(a).abs()));
        let tv = mu.total_variation();
        let mut atoms: Vec<Bump> = by_size
            .iter()
            .take(count)
            .map(|&i| {
                // half the distance to the nearest opposite-sign particle
                let mut w = scale;
                for j in 0..mu.len() {
                    if mu.weight(j) * mu.weight(i) < 0.0 {
                        w = w.min(0.5 * math::dist(mu.point(i), mu.point(j)));
                    }
                }
                Bump {
                    center: mu.point(i).to_vec(),
                    width: w.clamp(min_width, max_width),
                    amplitude: mu.weight(i) / tv,
                }
            })
            .collect();
        while atoms.len() < count {
            atoms.push(Bump {
                center: vec![0.0; d],
                width: scale,
                amplitude: 0.0,
            });
        }
        let mut s = BumpSearch {
            mu,
            alpha,
            atoms,
            sign: 1.0,
            best_value: f64::NEG_INFINITY,
            min_width,
            max_width,
        };

        // a single wide bump on the mass centre competes with the particle start
        let mut wide = vec![Bump {
            center: weighted_mean(mu),
            width: 10.0 * scale,
            amplitude: if mu.total_mass() >= 0.0 { 1.0 } else { -1.0 },
        }];
        wide.extend(s.atoms.iter().skip(1).map(|b| Bump {
            amplitude: 0.0,
            ..b.clone()
        }));
        let v_particles = s.evaluate(&s.atoms);
        let v_wide = s.evaluate(&wide);
        if v_wide.abs() > v_particles.abs() {
            s.atoms = wide;
        }
        let v = s.evaluate(&s.atoms);
        s.sign = if v < 0.0 { -1.0 } else { 1.0 };
        s.best_value = s.sign * v;
        s
    }

    fn evaluate(&self, atoms: &[Bump]) -> f64 {
        let dict = BumpDictionary {
            dim: self.mu.dim(),
            alpha: self.alpha,
            atoms: atoms.to_vec(),
            grid: None,
        };
        dictionary_ratio(self.mu, &dict)
    }

    /// Number of scalar coordinates per atom: centre, log-width, amplitude.
    fn per_atom(&self) -> usize {
        self.mu.dim() + 2
    }

    fn get(&self, coord: usize) -> f64 {
        let (a, k) = (coord / self.per_atom(), coord % self.per_atom());
        let atom = &self.atoms[a];
        let d = self.mu.dim();
        if k < d {
            atom.center[k]
        } else if k == d {
            math::ln(atom.width)
        } else {
            atom.amplitude
        }
    }

    fn with(&self, coord: usize, value: f64) -> Vec<Bump> {
        let mut atoms = self.atoms.clone();
        let (a, k) = (coord / self.per_atom(), coord % self.per_atom());
        let d = self.mu.dim();
        if k < d {
            atoms[a].center[k] = value;
        } else if k == d {
            atoms[a].width = math::exp(value).clamp(self.min_width, self.max_width);
        } else {
            atoms[a].amplitude = value;
        }
        atoms
    }

    fn step(&self, coord: usize) -> f64 {
        let (a, k) = (coord / self.per_atom(), coord % self.per_atom());
        let d = self.mu.dim();
        if k < d {
            2.0 * self.atoms[a].width
        } else if k == d {
            1.5
        } else {
            let amax = self.atoms.iter().map(|b| b.amplitude.abs()).fold(0.0, f64::max);
            self.atoms[a].amplitude.abs().max(0.1 * amax).max(1e-3)
        }
    }

    fn run(&mut self, budget: usize) {
        let ncoord = self.atoms.len() * self.per_atom();
        for it in 0..budget {
            let coord = it % ncoord;
            let x0 = self.get(coord);
            let h = self.step(coord);
            let objective = |v: f64| self.sign * self.evaluate(&self.with(coord, v));
            let (x, fx) = golden_max(objective, x0 - h, x0 + h);
            if fx > self.best_value {
                self.atoms = self.with(coord, x);
                self.best_value = fx;
            }
        }
    }
}

fn weighted_mean(mu: &ParticleMeasure) -> Vec<f64> {
    let d = mu.dim();
    let tv = mu.total_variation();
    let mut c = vec![0.0; d];
    for (x, w) in mu.points().zip(mu.weights()) {
        for k in 0..d {
            c[k] += w.abs() * x[k] / tv;
        }
    }
    c
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_STEPS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(p: &[(f64, f64)]) -> ParticleMeasure {
        ParticleMeasure::from_1d(p).unwrap()
    }

    #[test]
    fn zero_measure_bracket() {
        let b = z_norm_bracket(&ParticleMeasure::zero(1), 0.5, 8, 10).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
    }

    #[test]
    fn budget_zero_rejected() {
        assert!(matches!(
            z_norm_bracket(&m1(&[(0.0, 1.0)]), 0.5, 8, 0),
            Err(Error::BudgetZero)
        ));
    }

    #[test]
    fn dirac_bracket() {
        let b = z_norm_bracket(&m1(&[(0.0, 1.0)]), 0.5, DEFAULT_ATOMS, DEFAULT_BUDGET).unwrap();
        assert_eq!(b.upper, 1.0);
        assert!(b.lower >= 0.3 && b.lower <= 1.0 + 1e-9, "{}", b.lower);
    }

    #[test]
    fn symmetric_quotient_gap_matches_taylor_constant() {
        // (δ_{t(1+λ)} + δ_{t(1−λ)} − 2δ_t)/λ
        let alpha = 0.5;
        for &(lam, t) in &[(0.1, 1.0), (0.01, 1.0), (0.05, 2.0)] {
            let mu = m1(&[
                (t * (1.0 + lam), 1.0 / lam),
                (t, -1.0 / lam),
                (t * (1.0 - lam), 1.0 / lam),
                (t, -1.0 / lam),
            ]);
            let up = z_upper(&mu, alpha).unwrap();
            let bound = 2.0 / (1.0 + alpha) * math::powf(lam, alpha) * math::powf(t, 1.0 + alpha);
            assert!(up <= bound * (1.0 + 1e-9), "λ={lam}: {up} > {bound}");
            assert!(flat_norm(&mu).unwrap().value >= 2.0 * t - 1e-9);
        }
    }

    #[test]
    fn cluster_bound_is_total_variation_at_zero_radius() {
        let mu = m1(&[(0.0, 1.0), (1.0, -0.5), (3.0, 2.0)]);
        assert!((cluster_bound(&mu, 0.5, 0.0, 0.0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_quadratic_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-4);
        assert!(fx <= 0.0);
    }
}

//! Randomized self-checks, run by the `verify` command.
//!
//! Each check draws its inputs from a seeded generator and compares the
//! library against an independent computation: finite differences, closed
//! forms, sign-vector enumeration, or the stated inequalities.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conjugate::{conjugate, conjugate_ml, conjugate_nl, conjugate_numeric, ProxFunction};
use crate::gev::{GnlModel, NestSpec};
use crate::hessian::{hessian_surplus, norm_inf1_exact, smoothness_certificate, ClassAMatrix};
use crate::lancaster::{run_cycle, LancasterInstance};
use crate::matrix::Matrix;
use crate::montecarlo::mc_surplus_ml;
use crate::simplex::SimplexPoint;

/// Random GNL model with `2..=max_n` alternatives and `1..=max_nests` nests.
///
/// Every alternative joins one nest chosen uniformly and each other nest
/// with probability 1/3; shares are uniform on `[0.1, 1]` before
/// renormalization. `μ ∈ [0.5, 2]` and `μ_ℓ ∈ [0.1μ, μ]`.
pub fn random_gnl<R: Rng>(rng: &mut R, max_n: usize, max_nests: usize) -> GnlModel<f64> {
    let n = rng.gen_range(2..=max_n.max(2));
    let nests = rng.gen_range(1..=max_nests.max(1));
    let mu = rng.gen_range(0.5..=2.0);
    let mut specs: Vec<NestSpec<f64>> = (0..nests)
        .map(|_| NestSpec {
            mu_ell: mu * rng.gen_range(0.1..=1.0),
            shares: Default::default(),
        })
        .collect();
    for i in 0..n {
        let home = rng.gen_range(0..nests);
        let mut picked: Vec<usize> = (0..nests).filter(|&l| l == home || rng.gen_bool(1.0 / 3.0)).collect();
        picked.sort_unstable();
        let raw: Vec<f64> = picked.iter().map(|_| rng.gen_range(0.1..=1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (&l, &s) in picked.iter().zip(&raw) {
            specs[l].shares.insert(i, s / total);
        }
    }
    GnlModel::new(n, mu, specs).expect("generated model is valid")
}

/// Random nested logit model with `μ = 1` over `2..=max_n` alternatives.
pub fn random_nested_logit<R: Rng>(rng: &mut R, max_n: usize) -> GnlModel<f64> {
    let n = rng.gen_range(2..=max_n.max(2));
    let groups_n = rng.gen_range(1..=n);
    let mut groups = vec![Vec::new(); groups_n];
    for i in 0..n {
        let g = if i < groups_n { i } else { rng.gen_range(0..groups_n) };
        groups[g].push(i);
    }
    let scales: Vec<f64> = (0..groups_n).map(|_| rng.gen_range(0.1..=1.0)).collect();
    GnlModel::nested_logit(&groups, &scales).expect("generated model is valid")
}

/// Point of the simplex with every entry at least `floor`.
pub fn random_interior_point<R: Rng>(rng: &mut R, n: usize, floor: f64) -> SimplexPoint<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let slack = 1.0 - floor * n as f64;
    SimplexPoint::new(raw.iter().map(|&x| floor + slack * x / total).collect())
        .expect("generated point is on the simplex")
}

/// Random utility vector in `[-width, width]ⁿ`.
pub fn random_utilities<R: Rng>(rng: &mut R, n: usize, width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-width..=width)).collect()
}

/// Random class-𝒜 matrix: a nonnegative combination of `2..=4` covariance
/// matrices `diag p − ppᵀ`.
pub fn random_class_a<R: Rng>(rng: &mut R, n: usize) -> ClassAMatrix<f64> {
    let terms = rng.gen_range(2..=4);
    let mut acc = ClassAMatrix::from_probabilities(&vec![1.0 / n as f64; n]).scale(0.0);
    for _ in 0..terms {
        let p = random_interior_point(rng, n, 0.0);
        acc = acc.sum(&ClassAMatrix::from_probabilities(&p).scale(rng.gen_range(0.0..=2.0)));
    }
    acc
}

/// Random consumption instance: `Q ∈ [0, 2]`, `π, σ ∈ [0.5, 2]`, `w = 1`.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, m: usize) -> LancasterInstance<f64> {
    loop {
        let q = (0..n).map(|_| (0..m).map(|_| rng.gen_range(0.0..=2.0)).collect()).collect();
        let pi = (0..m).map(|_| rng.gen_range(0.5..=2.0)).collect();
        let sigma = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
        if let Ok(inst) = LancasterInstance::new(q, pi, 1.0, sigma) {
            return inst;
        }
    }
}

/// `max_{z∈{±1}ⁿ} ‖Az‖₁` by direct enumeration.
pub fn brute_force_inf1(a: &Matrix<f64>) -> f64 {
    let n = a.dim();
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << n) {
        let z: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        best = best.max(a.mul_vec(&z).iter().map(|x| x.abs()).sum());
    }
    best
}

/// Central-difference gradient of the surplus with step `h`.
pub fn fd_gradient(model: &GnlModel<f64>, u: &[f64], h: f64) -> Vec<f64> {
    (0..u.len())
        .map(|i| {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[i] += h;
            dn[i] -= h;
            (model.surplus(&up) - model.surplus(&dn)) / (2.0 * h)
        })
        .collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, worst: f64, tol: f64) {
        self.checks.push(Check {
            name,
            passed: worst <= tol,
            detail: format!("worst {worst:.3e}, tolerance {tol:.0e}"),
        });
    }
}

fn gradient_identity(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let model = random_gnl(rng, 8, 4);
        let u = random_utilities(rng, model.n(), 2.0);
        let p = model.choice_probabilities(&u);
        let fd = fd_gradient(&model, &u, 1e-6);
        worst = worst.max(p.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    worst
}

fn closed_forms(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..40 {
        let model = if k % 2 == 0 {
            GnlModel::multinomial_logit(rng.gen_range(2..=6), rng.gen_range(0.2..=2.0)).unwrap()
        } else {
            random_nested_logit(rng, 6)
        };
        let p = random_interior_point(rng, model.n(), 1e-3);
        let closed = if k % 2 == 0 { conjugate_ml(&model, &p) } else { conjugate_nl(&model, &p) };
        match (closed, conjugate_numeric(&model, &p)) {
            (Ok(c), Ok(s)) => worst = worst.max((c - s.value).abs()),
            _ => return f64::INFINITY,
        }
    }
    worst
}

fn norm_exactness(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let n = rng.gen_range(2..=8);
        let a = random_class_a(rng, n);
        let exact = norm_inf1_exact(&a).unwrap().value;
        worst = worst.max((exact - brute_force_inf1(a.matrix())).abs());
    }
    worst
}

fn covariance_norm(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let n = rng.gen_range(2..=12);
        let p = random_interior_point(rng, n, 0.0);
        let v = norm_inf1_exact(&ClassAMatrix::from_probabilities(&p)).unwrap().value;
        worst = worst.max(v - 1.0);
    }
    let half = norm_inf1_exact(&ClassAMatrix::<f64>::from_probabilities(&[0.5, 0.5])).unwrap().value;
    worst.max((half - 1.0).abs())
}

fn smoothness(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..5 {
        let model = random_gnl(rng, 8, 4);
        let cert = smoothness_certificate(&model, 100, rng.gen()).unwrap();
        worst = worst.max(cert.max_observed - cert.bound);
    }
    worst
}

fn hessian_fd(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let model = random_gnl(rng, 6, 3);
        let u = random_utilities(rng, model.n(), 2.0);
        let h = hessian_surplus(&model, &u);
        let step = 1e-5;
        for j in 0..model.n() {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += step;
            dn[j] -= step;
            let pu = model.choice_probabilities(&up);
            let pd = model.choice_probabilities(&dn);
            for i in 0..model.n() {
                let fd = (pu[i] - pd[i]) / (2.0 * step);
                worst = worst.max((h.full.matrix()[(i, j)] - fd).abs());
            }
        }
    }
    worst
}

fn strong_convexity(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..6 {
        let model = match k % 3 {
            0 => GnlModel::multinomial_logit(rng.gen_range(2..=5), rng.gen_range(0.2..=2.0)).unwrap(),
            1 => random_nested_logit(rng, 5),
            _ => random_gnl(rng, 5, 3),
        };
        let beta = model.convexity_parameter();
        for _ in 0..100 {
            let p = random_interior_point(rng, model.n(), 1e-3);
            let q = random_interior_point(rng, model.n(), 1e-3);
            let a: f64 = rng.gen_range(0.0..=1.0);
            let mid = SimplexPoint::new(p.iter().zip(q.iter()).map(|(x, y)| a * x + (1.0 - a) * y).collect())
                .unwrap();
            let (Ok(fp), Ok(fq), Ok(fm)) = (conjugate(&model, &p), conjugate(&model, &q), conjugate(&model, &mid))
            else {
                return f64::INFINITY;
            };
            let dist = l1(&p, &q);
            let excess = fm - (a * fp + (1.0 - a) * fq) + 0.5 * beta * a * (1.0 - a) * dist * dist;
            worst = worst.max(excess);
        }
    }
    worst
}

fn beta_specializations(rng: &mut ChaCha8Rng) -> f64 {
    let mut bad = 0.0;
    for _ in 0..20 {
        let mu = rng.gen_range(0.05..=3.0);
        let ml = GnlModel::multinomial_logit(rng.gen_range(1..=8), mu).unwrap();
        if ml.convexity_parameter() != mu {
            bad += 1.0;
        }
        let nl = random_nested_logit(rng, 8);
        let expect = 1.0 / (2.0 / nl.min_nest_scale() - 1.0);
        if nl.convexity_parameter() != expect {
            bad += 1.0;
        }
    }
    bad
}

fn consumption_cycle(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..3 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(2..=5);
        let inst = random_instance(rng, n, m);
        let mu = [0.05, 0.2, 1.0][k];
        let model = GnlModel::multinomial_logit(n, mu).unwrap();
        let trace = run_cycle(&inst, &model, 1000).unwrap();
        for r in &trace.records {
            worst = worst.max(-r.gap).max(r.gap - r.bound);
        }
    }
    worst
}

fn entropic_reduction(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=10);
        let prox = ProxFunction::new(GnlModel::multinomial_logit(n, 1.0).unwrap());
        let s = random_utilities(rng, n, 5.0);
        let p = prox.prox_map(&s, 1.0);
        let z: f64 = s.iter().map(|x| (-x).exp()).sum();
        for (pi, si) in p.iter().zip(&s) {
            worst = worst.max((pi - (-si).exp() / z).abs());
        }
    }
    worst
}

fn monte_carlo(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let n = rng.gen_range(1..=6);
        let model = GnlModel::multinomial_logit(n, rng.gen_range(0.2..=2.0)).unwrap();
        let u = random_utilities(rng, n, 2.0);
        let est = mc_surplus_ml(&model, &u, 100_000, rng.gen()).unwrap();
        worst = worst.max((est.mean - model.surplus(&u)).abs() / est.std_error);
    }
    worst
}

/// Runs every check with inputs drawn from `seed`.
pub fn run_all(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::default();
    report.push("gradient identity", gradient_identity(&mut rng), 1e-5);
    report.push("closed-form conjugates", closed_forms(&mut rng), 1e-8);
    report.push("exact inf-1 norm", norm_exactness(&mut rng), 1e-12);
    report.push("covariance norm at most 1", covariance_norm(&mut rng), 1e-12);
    report.push("hessian finite differences", hessian_fd(&mut rng), 1e-4);
    report.push("smoothness certificate", smoothness(&mut rng), 1e-8);
    report.push("strong convexity", strong_convexity(&mut rng), 1e-9);
    report.push("convexity parameter specializations", beta_specializations(&mut rng), 0.0);
    report.push("consumption cycle gap", consumption_cycle(&mut rng), 1e-9);
    report.push("entropic prox-mapping", entropic_reduction(&mut rng), 1e-14);
    report.push("monte carlo surplus (SE units)", monte_carlo(&mut rng), 5.0);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let m = random_gnl(&mut rng, 8, 4);
            assert!(m.n() >= 2 && m.n() <= 8);
            let p = random_interior_point(&mut rng, 5, 1e-3);
            assert!(p.min_entry() >= 1e-3 - 1e-15);
            let inst = random_instance(&mut rng, 3, 4);
            assert_eq!((inst.n(), inst.m()), (3, 4));
        }
    }

    #[test]
    fn brute_force_small() {
        let a = ClassAMatrix::from_probabilities(&[0.5, 0.5]);
        assert_eq!(brute_force_inf1(a.matrix()), 1.0);
    }

    #[test]
    fn all_checks_pass() {
        let report = run_all(1);
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
    }
}

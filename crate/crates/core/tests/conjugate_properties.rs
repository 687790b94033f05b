mod common;

use common::{family_model, l1, max_abs, rng};
use dcprox::verify::{random_interior_point, random_utilities};
use dcprox::{
    conjugate, conjugate_at_vertex, conjugate_ml, conjugate_numeric, prox_center, GnlModel, Prox, SimplexPoint,
    EULER_GAMMA,
};
use proptest::prelude::*;
use rand::Rng;

/// Euclidean projection onto the simplex (sort and threshold).
fn project(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimizes `⟨s,p⟩ + E*(p)/t` over the simplex by projected gradient, using
/// `∇E*(p) = u(p)` from the numeric conjugate. Backtracking on the objective
/// finds a safe step while objective differences are resolvable; the final
/// phase iterates the projected-gradient map with that step fixed.
fn reference_prox(model: &GnlModel<f64>, s: &[f64], t: f64) -> Vec<f64> {
    let eval = |p: &[f64]| -> Option<(f64, Vec<f64>)> {
        let sol = conjugate_numeric(model, &SimplexPoint::new(p.to_vec()).ok()?).ok()?;
        let value = s.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + sol.value / t;
        let grad = s.iter().zip(&sol.utilities).map(|(a, u)| a + u / t).collect();
        Some((value, grad))
    };
    let step = |p: &[f64], g: &[f64], eta: f64| project(&p.iter().zip(g).map(|(x, d)| x - eta * d).collect::<Vec<_>>());
    let n = model.n();
    let mut p = vec![1.0 / n as f64; n];
    let (mut val, mut grad) = eval(&p).unwrap();
    let mut eta = 1.0;
    loop {
        let (cand, v, g, moved) = loop {
            let cand = step(&p, &grad, eta);
            if let Some((v, g)) = eval(&cand) {
                let diff: Vec<f64> = cand.iter().zip(&p).map(|(a, b)| a - b).collect();
                let lin: f64 = grad.iter().zip(&diff).map(|(a, b)| a * b).sum();
                let sq: f64 = diff.iter().map(|d| d * d).sum();
                if v <= val + lin + sq / (2.0 * eta) {
                    break (cand, v, g, sq.sqrt());
                }
            }
            eta *= 0.5;
            assert!(eta > 1e-16, "line search failed");
        };
        p = cand;
        val = v;
        grad = g;
        if moved < 1e-7 {
            break;
        }
        eta *= 1.5;
    }
    eta *= 0.5;
    for _ in 0..100_000 {
        let next = step(&p, &grad, eta);
        let moved = l1(&next, &p);
        p = next;
        grad = eval(&p).expect("iterate stays interior").1;
        if moved < 1e-13 {
            break;
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_bounds(seed in any::<u64>(), family in 0usize..6) {
        let mut r = rng(seed);
        let model = family_model(&mut r, family, 6);
        let p = random_interior_point(&mut r, model.n(), 1e-4);
        let value = conjugate(&model, &p).unwrap();
        let low = conjugate(&model, &prox_center(&model)).unwrap();
        let high = (0..model.n()).map(|i| conjugate_at_vertex(&model, i)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(low <= value + 1e-10);
        prop_assert!(value <= high + 1e-10);
    }

    #[test]
    fn ml_conjugate_bounds(n in 1usize..10, mu in 0.05f64..3.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = GnlModel::multinomial_logit(n, mu).unwrap();
        let p = random_interior_point(&mut r, n, 0.0);
        let value = conjugate_ml(&model, &p).unwrap();
        prop_assert!(value >= -mu * (n as f64).ln() - mu * EULER_GAMMA - 1e-10);
        prop_assert!(value <= -mu * EULER_GAMMA + 1e-10);
    }

    #[test]
    fn fenchel_young(seed in any::<u64>(), family in 0usize..6) {
        let mut r = rng(seed);
        let model = family_model(&mut r, family, 6);
        let u = random_utilities(&mut r, model.n(), 3.0);
        let p = model.choice_probabilities(&u);
        prop_assume!(p.min_entry() >= 1e-6);
        let inner: f64 = p.iter().zip(&u).map(|(a, b)| a * b).sum();
        let closed = conjugate(&model, &p).unwrap();
        prop_assert!((model.surplus(&u) + closed - inner).abs() <= 1e-8);
        let numeric = conjugate_numeric(&model, &p).unwrap();
        prop_assert!((model.surplus(&u) + numeric.value - inner).abs() <= 1e-8);
    }

    #[test]
    fn numeric_round_trip(seed in any::<u64>(), family in 0usize..6) {
        let mut r = rng(seed);
        let model = family_model(&mut r, family, 8);
        let p = random_interior_point(&mut r, model.n(), 1e-6);
        let sol = conjugate_numeric(&model, &p).unwrap();
        prop_assert!(l1(&model.choice_probabilities(&sol.utilities), &p) <= 1e-9);
        prop_assert_eq!(*sol.utilities.last().unwrap(), 0.0);
    }

    #[test]
    fn boundary_points_rejected(n in 2usize..6) {
        let model = GnlModel::multinomial_logit(n, 1.0).unwrap();
        let mut v = vec![1.0 / (n - 1) as f64; n];
        v[0] = 0.0;
        prop_assert!(conjugate_numeric(&model, &SimplexPoint::new(v).unwrap()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn prox_map_minimizes(seed in any::<u64>(), family in 0usize..6, t in 0.2f64..2.0) {
        let mut r = rng(seed);
        let model = family_model(&mut r, family, 5);
        prop_assume!(model.min_nest_scale() >= 0.25);
        let s: Vec<f64> = (0..model.n()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let prox = Prox::new(model.clone());
        let p = prox.prox_map(&s, t);
        prop_assume!(p.min_entry() >= 0.02);
        prop_assert!(max_abs(&p, &reference_prox(&model, &s, t)) <= 1e-6);
    }
}

//! Convex conjugate of the surplus function and the induced prox-function.
//!
//! `E*(p) = sup_u ⟨p, u⟩ − E(u)` is finite exactly on the simplex. Its
//! maximizer at any interior `p` is the utility vector whose choice
//! probabilities equal `p`, so the prox-mapping of `d = E* − E*(p₀)` is a
//! single evaluation of [`GnlModel::choice_probabilities`].

use crate::error::{Error, Result};
use crate::gev::GnlModel;
use crate::hessian::hessian_surplus;
use crate::matrix::solve;
use crate::scalar::{dot, l1_distance, xlnx, Scalar};
use crate::simplex::SimplexPoint;

/// Smallest entry accepted by [`conjugate_numeric`].
pub const INTERIOR_MIN: f64 = 1e-6;
/// Stopping tolerance on `‖∇E(u) − p‖₁`.
pub const RECOVERY_TOL: f64 = 1e-10;
/// Iteration cap of the inner solver.
pub const MAX_ITERATIONS: usize = 100_000;

/// Closed-form multinomial logit conjugate `μ Σ pᵢ ln pᵢ − μγ`.
pub fn conjugate_ml<T: Scalar>(model: &GnlModel<T>, p: &SimplexPoint<T>) -> Result<T> {
    if !model.is_multinomial_logit() {
        return Err(Error::WrongModelKind {
            expected: "multinomial logit",
        });
    }
    check_len(model, p)?;
    let mu = model.mu();
    Ok(mu * p.iter().map(|&x| xlnx(x)).sum::<T>() - mu * T::euler_gamma())
}

/// Closed-form nested logit conjugate (`μ = 1`, disjoint unit-share nests):
///
/// ```text
/// E*(p) = Σ_ℓ μ_ℓ Σ_{i∈N_ℓ} pᵢ ln pᵢ + Σ_ℓ (1 − μ_ℓ) P_ℓ ln P_ℓ − γ,   P_ℓ = Σ_{i∈N_ℓ} pᵢ
/// ```
pub fn conjugate_nl<T: Scalar>(model: &GnlModel<T>, p: &SimplexPoint<T>) -> Result<T> {
    if !model.is_nested_logit() {
        return Err(Error::WrongModelKind {
            expected: "nested logit",
        });
    }
    check_len(model, p)?;
    let mut value = -model.mu() * T::euler_gamma();
    for nest in model.nests() {
        let within: T = nest.members.iter().map(|&i| xlnx(p[i])).sum();
        let mass: T = nest.members.iter().map(|&i| p[i]).sum();
        value = value + nest.mu_ell * within + (T::one() - nest.mu_ell) * xlnx(mass);
    }
    Ok(value)
}

fn check_len<T: Scalar>(model: &GnlModel<T>, p: &[T]) -> Result<()> {
    if p.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, model has {} alternatives",
            p.len(),
            model.n()
        )));
    }
    Ok(())
}

/// Value of `E*` together with the maximizing utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateSolution<T> {
    pub value: T,
    /// Maximizer, normalized so that its last entry is zero.
    pub utilities: Vec<T>,
    pub iterations: usize,
}

/// `E*(p)` for any GNL model at an interior point, by recovering the
/// utilities `u` with `∇E(u) = p`.
///
/// The concave objective `u ↦ ⟨p, u⟩ − E(u)` is maximized by damped Newton
/// steps with the coordinate of the largest `p_i` held fixed, starting from
/// the best of `u = c ln p` over `c ∈ {μ, μ_ℓ}`, which is exact for the
/// multinomial logit. Steps must pass an Armijo test on the objective, except
/// once objective changes fall to rounding level, where lowering the residual
/// `‖∇E(u) − p‖₁` suffices. Newton moves are capped at `μ` in each coordinate; if no step
/// along the Newton direction is accepted the solver falls back to a gradient
/// step of length `β`.
pub fn conjugate_numeric<T: Scalar>(
    model: &GnlModel<T>,
    p: &SimplexPoint<T>,
) -> Result<ConjugateSolution<T>> {
    check_len(model, p)?;
    let n = model.n();
    let min = p.min_entry();
    if min < T::lit(INTERIOR_MIN) {
        return Err(Error::BoundaryPoint { min: min.as_f64() });
    }
    let objective = |u: &[T]| dot(p, u) - model.surplus(u);
    let residual = |u: &[T]| l1_distance(&model.choice_probabilities(u), p);

    // Pin the most likely alternative: the reduced Hessian then stays well
    // conditioned even when other entries of p are tiny.
    let pin = (0..n).fold(0, |best, i| if p[i] > p[best] { i } else { best });
    let start = |scale: T| -> Vec<T> {
        let base = scale * p[pin].ln();
        p.iter().map(|&x| scale * x.ln() - base).collect()
    };
    let mu = model.mu();
    let mut u = start(mu);
    let mut res = residual(&u);
    for l in 0..model.nest_count() {
        let trial = start(model.nest_scale(l));
        let trial_res = residual(&trial);
        if trial_res < res {
            u = trial;
            res = trial_res;
        }
    }

    let tol = T::tol(RECOVERY_TOL);
    let beta = model.convexity_parameter();
    let mut iterations = 0;
    while res > tol {
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: res.as_f64(),
            });
        }
        iterations += 1;
        let grad: Vec<T> = p
            .iter()
            .zip(model.choice_probabilities(&u).iter())
            .map(|(&a, &b)| a - b)
            .collect();
        let phi = objective(&u);
        let mut accepted = false;
        if let Some(mut dir) = newton_direction(model, &u, &grad, pin) {
            // Flat directions give huge Newton steps; cap the move at μ.
            let len = dir.iter().fold(T::zero(), |m, d| m.max(d.abs()));
            if len > mu {
                dir.iter_mut().for_each(|d| *d = *d * mu / len);
            }
            let slope = dot(&grad, &dir);
            let mut step = T::one();
            while step > T::lit(1e-12) {
                let trial: Vec<T> = u.iter().zip(&dir).map(|(&a, &d)| a + step * d).collect();
                let trial_res = residual(&trial);
                let gain = objective(&trial) - phi;
                let noise = T::lit(1e3) * T::epsilon() * (T::one() + phi.abs());
                let armijo = gain >= T::lit(1e-4) * step * slope;
                if armijo || (gain.abs() <= noise && trial_res < res) {
                    u = trial;
                    res = trial_res;
                    accepted = true;
                    break;
                }
                step = step * T::lit(0.5);
            }
        }
        if !accepted {
            let trial: Vec<T> = u
                .iter()
                .zip(&grad)
                .enumerate()
                .map(|(i, (&a, &g))| if i == pin { a } else { a + beta * g })
                .collect();
            let trial_res = residual(&trial);
            let improved = trial_res < res || objective(&trial) > phi;
            if !improved {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: res.as_f64(),
                });
            }
            u = trial;
            res = trial_res;
        }
    }
    let last = u[n - 1];
    u.iter_mut().for_each(|x| *x = *x - last);
    Ok(ConjugateSolution {
        value: objective(&u),
        utilities: u,
        iterations,
    })
}

/// Newton direction with coordinate `pin` held fixed.
fn newton_direction<T: Scalar>(model: &GnlModel<T>, u: &[T], grad: &[T], pin: usize) -> Option<Vec<T>> {
    let n = u.len();
    if n == 1 {
        return None;
    }
    let h = hessian_surplus(model, u).full.into_matrix();
    let free: Vec<usize> = (0..n).filter(|&i| i != pin).collect();
    let reduced: Vec<Vec<T>> = free.iter().map(|&i| free.iter().map(|&j| h[(i, j)]).collect()).collect();
    let rhs: Vec<T> = free.iter().map(|&i| grad[i]).collect();
    let step = solve(reduced, rhs)?;
    let mut dir = vec![T::zero(); n];
    for (&i, d) in free.iter().zip(step) {
        dir[i] = d;
    }
    Some(dir)
}

/// `E*(p)`: closed form for multinomial and nested logit, numeric otherwise.
pub fn conjugate<T: Scalar>(model: &GnlModel<T>, p: &SimplexPoint<T>) -> Result<T> {
    if model.is_multinomial_logit() {
        conjugate_ml(model, p)
    } else if model.is_nested_logit() {
        conjugate_nl(model, p)
    } else {
        conjugate_numeric(model, p).map(|s| s.value)
    }
}

/// `E*(e_i)`, the conjugate at a vertex of the simplex.
///
/// Driving every other utility to `−∞` leaves `E(u) → u_i + μ ln Σ_ℓ σ_iℓ^{1/μ} + μγ`,
/// and `E` is monotone, so `E*(e_i) = −μγ − μ ln Σ_ℓ σ_iℓ^{1/μ}`.
pub fn conjugate_at_vertex<T: Scalar>(model: &GnlModel<T>, i: usize) -> T {
    assert!(i < model.n());
    let mu = model.mu();
    let inv = T::one() / mu;
    let mass: T = model
        .nests()
        .iter()
        .filter_map(|nest| nest.members.iter().position(|&j| j == i).map(|k| nest.shares[k]))
        .map(|s| s.powf(inv))
        .sum();
    -mu * T::euler_gamma() - mu * mass.ln()
}

/// `max_{p∈Δ} d(p)`. `E*` is convex, so the maximum sits at a vertex.
pub fn prox_diameter<T: Scalar>(model: &GnlModel<T>) -> T {
    let zero = vec![T::zero(); model.n()];
    let e0 = model.surplus(&zero);
    (0..model.n())
        .map(|i| conjugate_at_vertex(model, i) + e0)
        .fold(T::neg_infinity(), T::max)
}

/// The prox-center `p₀ = ∇E(0)`, the unique minimizer of `E*` on `Δ`.
pub fn prox_center<T: Scalar>(model: &GnlModel<T>) -> SimplexPoint<T> {
    model.choice_probabilities(&vec![T::zero(); model.n()])
}

/// Prox-function `d(p) = E*(p) − E*(p₀)` of a GNL model.
#[derive(Debug, Clone)]
pub struct ProxFunction<T> {
    model: GnlModel<T>,
    conjugate_min: T,
    prox_center: SimplexPoint<T>,
    beta: T,
}

impl<T: Scalar> ProxFunction<T> {
    pub fn new(model: GnlModel<T>) -> Self {
        let zero = vec![T::zero(); model.n()];
        // E*(p₀) = −E(0)
        let conjugate_min = -model.surplus(&zero);
        let prox_center = prox_center(&model);
        let beta = model.convexity_parameter();
        Self {
            model,
            conjugate_min,
            prox_center,
            beta,
        }
    }

    pub fn model(&self) -> &GnlModel<T> {
        &self.model
    }

    pub fn prox_center(&self) -> &SimplexPoint<T> {
        &self.prox_center
    }

    pub fn conjugate_min(&self) -> T {
        self.conjugate_min
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// `d(p)`.
    pub fn value(&self, p: &SimplexPoint<T>) -> Result<T> {
        conjugate(&self.model, p).map(|v| v - self.conjugate_min)
    }

    /// `argmin_{p∈Δ} ⟨s, p⟩ + d(p)/t`, which equals `∇E(−t·s)`.
    pub fn prox_map(&self, s: &[T], t: T) -> SimplexPoint<T> {
        assert!(t > T::zero(), "prox_map requires t > 0");
        let u: Vec<T> = s.iter().map(|&x| -t * x).collect();
        self.model.choice_probabilities(&u)
    }
}

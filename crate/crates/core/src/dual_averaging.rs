//! Dual averaging over the simplex with a discrete choice prox-function.
//!
//! Each step queries a subgradient `g_k` at `p_k`, averages
//! `s_{k+1} = (1/(k+1)) Σ_{ℓ≤k} g_ℓ`, and moves to
//! `p_{k+1} = argmin_p ⟨s_{k+1}, p⟩ + d(p)/√(k+1)`. The run starts at the
//! prox-center, where `d` vanishes.

use crate::conjugate::ProxFunction;
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::simplex::SimplexPoint;

/// Aggregates of a dual averaging run after `k + 1` subgradients.
#[derive(Debug, Clone)]
pub struct DaState<T> {
    /// Index of the last aggregated subgradient.
    pub k: usize,
    /// Running average `s_{k+1}` of the subgradients.
    pub s: Vec<T>,
    /// Next iterate `p_{k+1}`.
    pub p: SimplexPoint<T>,
    /// `(p_ℓ, g_ℓ)` for `ℓ = 0..=k`, when requested.
    pub history: Option<Vec<(SimplexPoint<T>, Vec<T>)>>,
    /// Average of the iterates `p_0 … p_k`.
    pub p_avg: Vec<T>,
    /// `(1/(k+1)) Σ_ℓ ⟨g_ℓ, p_ℓ⟩`.
    pub linearization_avg: T,
}

/// Incremental driver; [`da_run`] wraps it for a fixed iteration count.
#[derive(Debug, Clone)]
pub struct DualAveraging<'a, T> {
    prox: &'a ProxFunction<T>,
    k: usize,
    current: SimplexPoint<T>,
    grad_sum: Vec<T>,
    p_sum: Vec<T>,
    lin_sum: T,
    history: Option<Vec<(SimplexPoint<T>, Vec<T>)>>,
}

impl<'a, T: Scalar> DualAveraging<'a, T> {
    pub fn new(prox: &'a ProxFunction<T>, keep_history: bool) -> Self {
        let n = prox.n();
        Self {
            prox,
            k: 0,
            current: prox.prox_center().clone(),
            grad_sum: vec![T::zero(); n],
            p_sum: vec![T::zero(); n],
            lin_sum: T::zero(),
            history: keep_history.then(Vec::new),
        }
    }

    /// The iterate `p_k` the next step will query.
    pub fn current(&self) -> &SimplexPoint<T> {
        &self.current
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> usize {
        self.k
    }

    /// Feeds the subgradient at [`current`](Self::current) and advances.
    pub fn step(&mut self, grad: Vec<T>) -> Result<()> {
        if grad.len() != self.prox.n() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::OracleFailure { k: self.k });
        }
        for (acc, &g) in self.grad_sum.iter_mut().zip(&grad) {
            *acc = *acc + g;
        }
        for (acc, &x) in self.p_sum.iter_mut().zip(self.current.iter()) {
            *acc = *acc + x;
        }
        self.lin_sum = self.lin_sum + dot(&grad, &self.current);
        let count = T::from_count(self.k + 1);
        let s: Vec<T> = self.grad_sum.iter().map(|&g| g / count).collect();
        let next = self.prox.prox_map(&s, count.sqrt());
        let prev = std::mem::replace(&mut self.current, next);
        if let Some(h) = self.history.as_mut() {
            h.push((prev, grad));
        }
        self.k += 1;
        Ok(())
    }

    pub fn average_subgradient(&self) -> Vec<T> {
        let count = T::from_count(self.k.max(1));
        self.grad_sum.iter().map(|&g| g / count).collect()
    }

    pub fn into_state(self) -> DaState<T> {
        assert!(self.k > 0, "no steps taken");
        let count = T::from_count(self.k);
        DaState {
            k: self.k - 1,
            s: self.grad_sum.iter().map(|&g| g / count).collect(),
            p: self.current,
            history: self.history,
            p_avg: self.p_sum.iter().map(|&x| x / count).collect(),
            linearization_avg: self.lin_sum / count,
        }
    }
}

/// Runs `iters` steps of dual averaging from the prox-center.
pub fn da_run<T: Scalar, F>(
    mut oracle: F,
    prox: &ProxFunction<T>,
    iters: usize,
    keep_history: bool,
) -> Result<DaState<T>>
where
    F: FnMut(&SimplexPoint<T>) -> Vec<T>,
{
    if iters == 0 {
        return Err(Error::BadCount { got: 0, min: 1 });
    }
    let mut da = DualAveraging::new(prox, keep_history);
    for _ in 0..iters {
        let g = oracle(da.current());
        da.step(g)?;
    }
    Ok(da.into_state())
}

/// Constants of the dual averaging rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBoundInputs<T> {
    /// Upper bound on `max_{p∈Δ} d(p)`.
    pub d: T,
    /// Upper bound on `‖g‖_∞` over all subgradients.
    pub m: T,
    /// Convexity parameter of `d` w.r.t. `‖·‖₁`.
    pub beta: T,
}

/// `(D + M²/β)/√(k+1)`, the simplified dual averaging gap bound.
pub fn gap_bound<T: Scalar>(inputs: &GapBoundInputs<T>, k: usize) -> T {
    (inputs.d + inputs.m * inputs.m / inputs.beta) / T::from_count(k + 1).sqrt()
}

/// `δ_k = max_{p∈Δ} (1/(k+1)) Σ_ℓ ⟨g_ℓ, p_ℓ − p⟩`, recomputed from the history.
/// The inner maximum is attained at a vertex, giving `… − min_i s_{k+1,i}`.
pub fn empirical_gap<T: Scalar>(state: &DaState<T>) -> Result<T> {
    let history = state.history.as_ref().ok_or(Error::NoHistory)?;
    let count = T::from_count(history.len());
    let n = state.s.len();
    let mut lin = T::zero();
    let mut sum = vec![T::zero(); n];
    for (p, g) in history {
        lin = lin + dot(g, p);
        for (acc, &x) in sum.iter_mut().zip(g) {
            *acc = *acc + x;
        }
    }
    let min_s = sum.iter().map(|&v| v / count).fold(T::infinity(), T::min);
    Ok(lin / count - min_s)
}

//! Validated vectors: points of the probability simplex and utility vectors.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A probability vector `p ∈ Δ`.
///
/// Entries in `[-1e-14, 0)` are clamped to zero; the entries must sum to one
/// within `1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<T>(Vec<T>);

impl<T: Scalar> SimplexPoint<T> {
    pub fn new(mut p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::NotInSimplex("empty vector".into()));
        }
        let clamp = T::lit(-1e-14);
        for (i, x) in p.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if *x < T::zero() {
                if *x < clamp {
                    return Err(Error::NotInSimplex(format!(
                        "entry {i} is negative ({x})"
                    )));
                }
                *x = T::zero();
            }
        }
        let sum: T = p.iter().copied().sum();
        if (sum - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::NotInSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "simplex of dimension zero");
        Self(vec![T::one() / T::from_count(n); n])
    }

    /// The coordinate vector `e_i`.
    pub fn vertex(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut v = vec![T::zero(); n];
        v[i] = T::one();
        Self(v)
    }

    pub(crate) fn from_vec_unchecked(p: Vec<T>) -> Self {
        Self(p)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn min_entry(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }
}

impl<T> Deref for SimplexPoint<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Deterministic utilities `u ∈ ℝⁿ`, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector<T>(Vec<T>);

impl<T: Scalar> UtilityVector<T> {
    pub fn new(u: Vec<T>) -> Result<Self> {
        if let Some(index) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(u))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for UtilityVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

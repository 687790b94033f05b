//! Generalized nested logit (GNL) models.
//!
//! A GNL model over `n` alternatives is a set of nests `ℓ`, each with a scale
//! `μ_ℓ ∈ (0, μ]` and allocation shares `σ_iℓ > 0` for its members. The
//! generating function is
//!
//! ```text
//! G(x) = Σ_ℓ ( Σ_{i ∈ N_ℓ} (σ_iℓ x_i)^{1/μ_ℓ} )^{μ_ℓ/μ}
//! ```
//!
//! and the surplus is `E(u) = μ ln G(eᵘ) + μγ`. Every evaluation here runs in
//! log space with a per-nest max shift, so small `μ_ℓ` never overflows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};
use crate::simplex::SimplexPoint;

/// Row sums of the share matrix within this distance of one are renormalized.
pub const SHARE_RENORMALIZE_TOL: f64 = 1e-9;

/// One nest as written in a model file. Alternatives absent from `shares`
/// do not belong to the nest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestSpec<T> {
    pub mu_ell: T,
    pub shares: BTreeMap<usize, T>,
}

/// Raw model description, the JSON model-file schema.
///
/// `n` may be omitted, in which case it is inferred from the largest
/// alternative index that appears in any nest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub mu: T,
    pub nests: Vec<NestSpec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// One nest with `μ_1 = μ` and unit shares.
    MultinomialLogit,
    /// Disjoint nests with unit shares and `μ = 1`.
    NestedLogit,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Nest<T> {
    pub(crate) mu_ell: T,
    pub(crate) members: Vec<usize>,
    pub(crate) shares: Vec<T>,
    pub(crate) ln_shares: Vec<T>,
}

/// A validated GNL model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GnlModel<T> {
    n: usize,
    mu: T,
    nests: Vec<Nest<T>>,
    kind: ModelKind,
}

/// Per-nest quantities of the two-stage choice process at a utility vector.
#[derive(Debug, Clone)]
pub(crate) struct NestEval<T> {
    /// `ln q_ℓ`.
    pub(crate) log_q: Vec<T>,
    /// Conditional probabilities `p_iℓ`, aligned with `Nest::members`.
    pub(crate) cond: Vec<Vec<T>>,
    /// `ln G(eᵘ)`.
    pub(crate) ln_g: T,
}

/// Output of [`GnlModel::nest_probabilities`].
#[derive(Debug, Clone)]
pub struct NestProbabilities<T> {
    /// Probability `q_ℓ` of choosing each nest.
    pub q: Vec<T>,
    /// Conditional choice probabilities within each nest, as full-length
    /// vectors that vanish outside the nest.
    pub conditional: Vec<SimplexPoint<T>>,
}

fn check_scale<T: Scalar>(x: T) -> Result<()> {
    if x.is_finite() && x > T::zero() {
        Ok(())
    } else {
        Err(Error::NonPositiveScale(x.as_f64()))
    }
}

impl<T: Scalar> GnlModel<T> {
    /// Validates a GNL definition.
    ///
    /// Share rows that miss one by at most [`SHARE_RENORMALIZE_TOL`] are
    /// rescaled; anything worse is rejected.
    pub fn new(n: usize, mu: T, nests: Vec<NestSpec<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyModel);
        }
        check_scale(mu)?;
        let mut row_sums = vec![T::zero(); n];
        for (l, nest) in nests.iter().enumerate() {
            check_scale(nest.mu_ell)?;
            if nest.mu_ell > mu {
                return Err(Error::NestScaleTooLarge {
                    nest: l,
                    mu_ell: nest.mu_ell.as_f64(),
                    mu: mu.as_f64(),
                });
            }
            for (&alt, &share) in &nest.shares {
                if alt >= n {
                    return Err(Error::AlternativeOutOfRange { nest: l, alt, n });
                }
                if !(share.is_finite() && share > T::zero()) {
                    return Err(Error::InvalidShare {
                        nest: l,
                        alt,
                        share: share.as_f64(),
                    });
                }
                row_sums[alt] = row_sums[alt] + share;
            }
        }
        for (alt, &sum) in row_sums.iter().enumerate() {
            if sum == T::zero() {
                return Err(Error::OrphanAlternative { alt });
            }
            if (sum - T::one()).abs() > T::tol(SHARE_RENORMALIZE_TOL) {
                return Err(Error::SharesNotUnit {
                    alt,
                    sum: sum.as_f64(),
                });
            }
        }
        // empty nests contribute nothing to G
        let nests: Vec<Nest<T>> = nests
            .into_iter()
            .filter(|nest| !nest.shares.is_empty())
            .map(|nest| {
                let (members, shares): (Vec<usize>, Vec<T>) = nest
                    .shares
                    .iter()
                    .map(|(&i, &s)| (i, s / row_sums[i]))
                    .unzip();
                let ln_shares = shares.iter().map(|s| s.ln()).collect();
                Nest {
                    mu_ell: nest.mu_ell,
                    members,
                    shares,
                    ln_shares,
                }
            })
            .collect();
        let kind = classify(n, mu, &nests);
        Ok(Self {
            n,
            mu,
            nests,
            kind,
        })
    }

    pub fn from_spec(spec: &ModelSpec<T>) -> Result<Self> {
        let n = match spec.n {
            Some(n) => n,
            None => spec
                .nests
                .iter()
                .flat_map(|nest| nest.shares.keys().copied())
                .max()
                .map_or(0, |m| m + 1),
        };
        Self::new(n, spec.mu, spec.nests.clone())
    }

    pub fn to_spec(&self) -> ModelSpec<T> {
        ModelSpec {
            n: Some(self.n),
            mu: self.mu,
            nests: self
                .nests
                .iter()
                .map(|nest| NestSpec {
                    mu_ell: nest.mu_ell,
                    shares: nest
                        .members
                        .iter()
                        .copied()
                        .zip(nest.shares.iter().copied())
                        .collect(),
                })
                .collect(),
        }
    }

    /// Multinomial logit: a single nest with `μ_1 = μ`.
    pub fn multinomial_logit(n: usize, mu: T) -> Result<Self> {
        let shares = (0..n).map(|i| (i, T::one())).collect();
        Self::new(n, mu, vec![NestSpec { mu_ell: mu, shares }])
    }

    /// Nested logit with `μ = 1`: `groups` partitions the alternatives.
    pub fn nested_logit(groups: &[Vec<usize>], mu_ells: &[T]) -> Result<Self> {
        if groups.len() != mu_ells.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} groups but {} nest scales",
                groups.len(),
                mu_ells.len()
            )));
        }
        let n = groups.iter().flatten().max().map_or(0, |m| m + 1);
        let nests = groups
            .iter()
            .zip(mu_ells)
            .map(|(group, &mu_ell)| NestSpec {
                mu_ell,
                shares: group.iter().map(|&i| (i, T::one())).collect(),
            })
            .collect();
        Self::new(n, T::one(), nests)
    }

    /// Ordered GEV with `μ = 1` and `n + m` overlapping nests.
    ///
    /// Nest `ℓ` (0-based) holds alternatives `i` with `ℓ - m ≤ i ≤ ℓ`.
    /// `shares[i][k]` is the share of alternative `i` in nest `i + k`.
    pub fn ordered_gev(n: usize, m: usize, shares: &[Vec<T>], mu_ells: &[T]) -> Result<Self> {
        if shares.len() != n || shares.iter().any(|row| row.len() != m + 1) {
            return Err(Error::ShapeMismatch(format!(
                "ordered GEV shares must be {n} x {}",
                m + 1
            )));
        }
        if mu_ells.len() != n + m {
            return Err(Error::ShapeMismatch(format!(
                "ordered GEV needs {} nest scales, got {}",
                n + m,
                mu_ells.len()
            )));
        }
        let mut nests: Vec<NestSpec<T>> = mu_ells
            .iter()
            .map(|&mu_ell| NestSpec {
                mu_ell,
                shares: BTreeMap::new(),
            })
            .collect();
        for (i, row) in shares.iter().enumerate() {
            for (k, &s) in row.iter().enumerate() {
                nests[i + k].shares.insert(i, s);
            }
        }
        Self::new(n, T::one(), nests)
    }

    /// Paired combinatorial logit with `μ = 1`: one nest per ordered pair
    /// `(i, j)`, `i ≠ j`, each member carrying share `1/(2(n-1))`.
    ///
    /// `mu_pairs` lists the nest scales in lexicographic order of the pairs.
    pub fn paired_combinatorial(n: usize, mu_pairs: &[T]) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadCount { got: n, min: 2 });
        }
        if mu_pairs.len() != n * (n - 1) {
            return Err(Error::ShapeMismatch(format!(
                "paired combinatorial logit needs {} nest scales, got {}",
                n * (n - 1),
                mu_pairs.len()
            )));
        }
        let share = T::one() / T::from_count(2 * (n - 1));
        let pairs = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
        let nests = pairs
            .zip(mu_pairs)
            .map(|((i, j), &mu_ell)| NestSpec {
                mu_ell,
                shares: [(i, share), (j, share)].into_iter().collect(),
            })
            .collect();
        Self::new(n, T::one(), nests)
    }

    /// Principles-of-differentiation GEV with `μ = 1`.
    pub fn pod_gev(dimensions: &[PodDimension<T>]) -> Result<Self> {
        let n = dimensions
            .iter()
            .flat_map(|d| d.clusters.iter().flatten())
            .max()
            .map_or(0, |m| m + 1);
        let mut nests = Vec::new();
        for (d, dim) in dimensions.iter().enumerate() {
            let mut seen = vec![false; n];
            for &i in dim.clusters.iter().flatten() {
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::ShapeMismatch(format!(
                        "dimension {d}: alternative {i} appears in two clusters"
                    )));
                }
            }
            if let Some(i) = seen.iter().position(|&s| !s) {
                return Err(Error::ShapeMismatch(format!(
                    "dimension {d}: alternative {i} is not clustered"
                )));
            }
            for cluster in &dim.clusters {
                nests.push(NestSpec {
                    mu_ell: dim.mu,
                    shares: cluster.iter().map(|&i| (i, dim.share)).collect(),
                });
            }
        }
        Self::new(n, T::one(), nests)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn nest_count(&self) -> usize {
        self.nests.len()
    }

    pub(crate) fn nests(&self) -> &[Nest<T>] {
        &self.nests
    }

    /// Scale of nest `l`.
    pub fn nest_scale(&self, l: usize) -> T {
        self.nests[l].mu_ell
    }

    pub fn min_nest_scale(&self) -> T {
        self.nests
            .iter()
            .map(|nest| nest.mu_ell)
            .fold(T::infinity(), T::min)
    }

    /// Share `σ_iℓ` (zero when `i ∉ N_ℓ`).
    pub fn share(&self, alt: usize, l: usize) -> T {
        let nest = &self.nests[l];
        nest.members
            .iter()
            .position(|&i| i == alt)
            .map_or(T::zero(), |k| nest.shares[k])
    }

    /// Whether closed-form nested logit formulas apply (this includes the
    /// multinomial logit with `μ = 1`).
    pub fn is_nested_logit(&self) -> bool {
        match self.kind {
            ModelKind::NestedLogit => true,
            ModelKind::MultinomialLogit => self.mu == T::one(),
            ModelKind::General => false,
        }
    }

    pub fn is_multinomial_logit(&self) -> bool {
        self.kind == ModelKind::MultinomialLogit
    }

    /// Per-nest log quantities at log-arguments `y` (`y = u` for the surplus,
    /// `y = ln x` for the generating function).
    pub(crate) fn evaluate(&self, y: &[T]) -> NestEval<T> {
        assert_eq!(y.len(), self.n, "utility vector has wrong length");
        let mut top = Vec::with_capacity(self.nests.len());
        let mut cond = Vec::with_capacity(self.nests.len());
        for nest in &self.nests {
            let inv = T::one() / nest.mu_ell;
            let a: Vec<T> = nest
                .members
                .iter()
                .zip(&nest.ln_shares)
                .map(|(&i, &ln_s)| (ln_s + y[i]) * inv)
                .collect();
            let lse = log_sum_exp(a.iter().copied());
            top.push(nest.mu_ell / self.mu * lse);
            cond.push(a.into_iter().map(|x| (x - lse).exp()).collect());
        }
        let ln_g = log_sum_exp(top.iter().copied());
        let log_q = top.into_iter().map(|t| t - ln_g).collect();
        NestEval { log_q, cond, ln_g }
    }

    /// `ln G(x)` for `x > 0`.
    pub fn ln_generating_function(&self, x: &[T]) -> Result<T> {
        assert_eq!(x.len(), self.n, "argument has wrong length");
        if let Some(index) = x.iter().position(|&v| v.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::NonPositiveInput {
                index,
                value: x[index].as_f64(),
            });
        }
        let ln_x: Vec<T> = x.iter().map(|v| v.ln()).collect();
        Ok(self.evaluate(&ln_x).ln_g)
    }

    /// The GNL generating function `G(x)`.
    pub fn generating_function(&self, x: &[T]) -> Result<T> {
        self.ln_generating_function(x).map(T::exp)
    }

    /// Surplus `E(u) = μ ln G(eᵘ) + μγ`.
    pub fn surplus(&self, u: &[T]) -> T {
        self.mu * (self.evaluate(u).ln_g + T::euler_gamma())
    }

    /// Choice probabilities `∇E(u) = Σ_ℓ q_ℓ p_iℓ`.
    pub fn choice_probabilities(&self, u: &[T]) -> SimplexPoint<T> {
        let eval = self.evaluate(u);
        SimplexPoint::from_vec_unchecked(self.mix(&eval))
    }

    pub(crate) fn mix(&self, eval: &NestEval<T>) -> Vec<T> {
        let mut p = vec![T::zero(); self.n];
        for ((nest, cond), &log_q) in self.nests.iter().zip(&eval.cond).zip(&eval.log_q) {
            let q = log_q.exp();
            for (&i, &c) in nest.members.iter().zip(cond) {
                p[i] = p[i] + q * c;
            }
        }
        p
    }

    /// Two-stage decomposition: nest probabilities `q_ℓ` and the conditional
    /// probabilities `p_iℓ` within each nest.
    pub fn nest_probabilities(&self, u: &[T]) -> NestProbabilities<T> {
        let eval = self.evaluate(u);
        let conditional = self
            .nests
            .iter()
            .zip(&eval.cond)
            .map(|(nest, cond)| {
                let mut full = vec![T::zero(); self.n];
                for (&i, &c) in nest.members.iter().zip(cond) {
                    full[i] = c;
                }
                SimplexPoint::from_vec_unchecked(full)
            })
            .collect();
        NestProbabilities {
            q: eval.log_q.iter().map(|l| l.exp()).collect(),
            conditional,
        }
    }

    /// Strong-convexity modulus of `E*` w.r.t. `‖·‖₁`:
    /// `β = 1 / (2/min_ℓ μ_ℓ − 1/μ)`.
    ///
    /// When `min_ℓ μ_ℓ = μ` the expression collapses to `μ`, which is returned
    /// as is.
    pub fn convexity_parameter(&self) -> T {
        let m = self.min_nest_scale();
        if m == self.mu {
            return self.mu;
        }
        T::one() / (T::lit(2.0) / m - T::one() / self.mu)
    }
}

fn classify<T: Scalar>(n: usize, mu: T, nests: &[Nest<T>]) -> ModelKind {
    let unit = |nest: &Nest<T>| nest.shares.iter().all(|&s| s == T::one());
    if nests.len() == 1 && nests[0].mu_ell == mu && nests[0].members.len() == n && unit(&nests[0]) {
        return ModelKind::MultinomialLogit;
    }
    let disjoint = nests.iter().map(|nest| nest.members.len()).sum::<usize>() == n;
    if mu == T::one() && disjoint && nests.iter().all(unit) {
        return ModelKind::NestedLogit;
    }
    ModelKind::General
}

/// One dimension of a principles-of-differentiation GEV model.
#[derive(Debug, Clone, PartialEq)]
pub struct PodDimension<T> {
    /// Common share `σ_d` of every alternative along this dimension.
    pub share: T,
    /// Common nest scale `μ_d`.
    pub mu: T,
    /// Disjoint clusters covering every alternative.
    pub clusters: Vec<Vec<usize>>,
}

/// IID random utility shocks with a density whose mode value is `f(z̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidShockSpec<T> {
    pub n: usize,
    pub density_mode_value: T,
}

impl<T: Scalar> IidShockSpec<T> {
    pub fn new(n: usize, density_mode_value: T) -> Result<Self> {
        if !(density_mode_value.is_finite() && density_mode_value > T::zero()) {
            return Err(Error::BadDensity(density_mode_value.as_f64()));
        }
        Ok(Self {
            n,
            density_mode_value,
        })
    }

    /// `β = 1 / (2 n (n−1) f(z̄))`.
    pub fn convexity_parameter(&self) -> Result<T> {
        if self.n < 2 {
            return Err(Error::BadCount { got: self.n, min: 2 });
        }
        let n = T::from_count(self.n);
        Ok(T::one() / (T::lit(2.0) * n * (n - T::one()) * self.density_mode_value))
    }
}

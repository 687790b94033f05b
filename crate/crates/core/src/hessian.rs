//! Second-order structure of GNL surplus functions.
//!
//! The Hessian of a surplus function belongs to the class `𝒜` of symmetric
//! matrices with nonnegative diagonal, nonpositive off-diagonal entries and
//! zero row sums. On that class the `∞→1` operator norm reduces to a finite
//! maximization over index subsets,
//!
//! ```text
//! ‖A‖_{∞,1} = 4 · max { Σ_{i,j ∈ K} a_ij : |K| ≤ ⌊n/2⌋ },
//! ```
//!
//! which [`norm_inf1_exact`] enumerates in Gray-code order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gev::GnlModel;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Largest dimension accepted by [`norm_inf1_exact`].
pub const MAX_EXACT_DIM: usize = 24;

/// Slack allowed on the sign conditions of class `𝒜`.
pub const SIGN_TOL: f64 = 1e-12;
/// Slack allowed on row sums and symmetry.
pub const ROW_SUM_TOL: f64 = 1e-10;

/// A symmetric matrix satisfying the class `𝒜` conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAMatrix<T>(Matrix<T>);

impl<T: Scalar> ClassAMatrix<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `A + B`, which stays in the class.
    pub fn sum(&self, other: &Self) -> Self {
        Self(self.0.add(&other.0))
    }

    /// `λA` for `λ ≥ 0`.
    pub fn scale(&self, lambda: T) -> Self {
        assert!(lambda >= T::zero(), "class A is only closed under nonnegative scaling");
        Self(self.0.scaled(lambda))
    }

    /// `diag(p) − ppᵀ`.
    pub fn from_probabilities(p: &[T]) -> Self {
        let n = p.len();
        Self(Matrix::from_fn(n, |i, j| {
            if i == j {
                p[i] - p[i] * p[i]
            } else {
                -(p[i] * p[j])
            }
        }))
    }
}

/// Validates the class `𝒜` conditions: symmetry, `a_ii ≥ 0`, `a_ij ≤ 0` for
/// `i ≠ j`, and `Σ_j a_ij = 0`.
pub fn check_class_a<T: Scalar>(a: Matrix<T>) -> Result<ClassAMatrix<T>> {
    let n = a.dim();
    let sign = T::tol(SIGN_TOL);
    let row_tol = T::tol(ROW_SUM_TOL);
    for i in 0..n {
        if !a.row(i).iter().all(|x| x.is_finite()) {
            return Err(Error::NotClassA(format!("row {i} has a non-finite entry")));
        }
        if a[(i, i)] < -sign {
            return Err(Error::NotClassA(format!(
                "(A1) diagonal a[{i}][{i}] = {} is negative",
                a[(i, i)]
            )));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            if (a[(i, j)] - a[(j, i)]).abs() > row_tol {
                return Err(Error::NotClassA(format!("asymmetric at ({i}, {j})")));
            }
            if a[(i, j)] > sign {
                return Err(Error::NotClassA(format!(
                    "(A1) off-diagonal a[{i}][{j}] = {} is positive",
                    a[(i, j)]
                )));
            }
        }
        let sum: T = a.row(i).iter().copied().sum();
        if sum.abs() > row_tol {
            return Err(Error::NotClassA(format!("(A2) row {i} sums to {sum}")));
        }
    }
    Ok(ClassAMatrix(a))
}

/// `∇²E(u) = R(u)/μ + S(u)` with `R = diag(∇E) − ∇E∇Eᵀ`.
#[derive(Debug, Clone)]
pub struct HessianDecomposition<T> {
    pub r: ClassAMatrix<T>,
    pub s: ClassAMatrix<T>,
    pub full: ClassAMatrix<T>,
}

/// Analytic Hessian of the GNL surplus.
///
/// Differentiating the two-stage form `p_i = Σ_ℓ q_ℓ p_iℓ` gives
/// `S(u) = Σ_ℓ q_ℓ (1/μ_ℓ − 1/μ) (diag(p_ℓ) − p_ℓ p_ℓᵀ)`, where `p_ℓ` is the
/// conditional distribution inside nest `ℓ`.
pub fn hessian_surplus<T: Scalar>(model: &GnlModel<T>, u: &[T]) -> HessianDecomposition<T> {
    let n = model.n();
    let eval = model.evaluate(u);
    let p = model.mix(&eval);
    let inv_mu = T::one() / model.mu();
    let r = ClassAMatrix::from_probabilities(&p);
    let mut s = Matrix::zeros(n);
    for ((nest, cond), &log_q) in model.nests().iter().zip(&eval.cond).zip(&eval.log_q) {
        let w = log_q.exp() * (T::one() / nest.mu_ell - inv_mu);
        if w == T::zero() {
            continue;
        }
        for (a, (&i, &ci)) in nest.members.iter().zip(cond).enumerate() {
            s[(i, i)] = s[(i, i)] + w * ci;
            for (&j, &cj) in nest.members[..].iter().zip(cond).take(a + 1) {
                let v = w * ci * cj;
                s[(i, j)] = s[(i, j)] - v;
                if i != j {
                    s[(j, i)] = s[(j, i)] - v;
                }
            }
        }
    }
    let full = r.0.scaled(inv_mu).add(&s);
    HessianDecomposition {
        r,
        s: ClassAMatrix(s),
        full: ClassAMatrix(full),
    }
}

/// Exact `‖A‖_{∞,1}` together with a maximizing subset `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfOneNorm<T> {
    pub value: T,
    pub witness: Vec<usize>,
}

/// Exact `∞→1` norm of a class `𝒜` matrix by subset enumeration, `n ≤ 24`.
pub fn norm_inf1_exact<T: Scalar>(a: &ClassAMatrix<T>) -> Result<InfOneNorm<T>> {
    let a = &a.0;
    let n = a.dim();
    if n > MAX_EXACT_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_EXACT_DIM,
        });
    }
    let half = n / 2;
    let mut in_k = vec![false; n];
    // col[k] = Σ_{j ∈ K} a_kj
    let mut col = vec![T::zero(); n];
    let mut size = 0usize;
    let mut block = T::zero();
    let mut best = T::zero();
    let mut best_mask: u32 = 0;
    let mut mask: u32 = 0;
    for step in 1u32..(1u32 << n) {
        let b = step.trailing_zeros() as usize;
        if in_k[b] {
            for (k, c) in col.iter_mut().enumerate() {
                *c = *c - a[(k, b)];
            }
            block = block - (T::lit(2.0) * col[b] + a[(b, b)]);
            in_k[b] = false;
            size -= 1;
        } else {
            block = block + T::lit(2.0) * col[b] + a[(b, b)];
            for (k, c) in col.iter_mut().enumerate() {
                *c = *c + a[(k, b)];
            }
            in_k[b] = true;
            size += 1;
        }
        mask ^= 1 << b;
        if size <= half && block > best {
            best = block;
            best_mask = mask;
        }
    }
    let witness: Vec<usize> = (0..n).filter(|&i| best_mask & (1 << i) != 0).collect();
    // recompute from scratch to shed the drift of incremental updates
    let sum: T = witness
        .iter()
        .flat_map(|&i| witness.iter().map(move |&j| (i, j)))
        .map(|(i, j)| a[(i, j)])
        .sum();
    Ok(InfOneNorm {
        value: T::lit(4.0) * sum,
        witness,
    })
}

/// The trace bound `‖A‖_{∞,1} ≤ 2 tr(A)`.
pub fn norm_inf1_trace_bound<T: Scalar>(a: &ClassAMatrix<T>) -> T {
    T::lit(2.0) * a.0.trace()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessCertificate<T> {
    /// Largest `‖∇²E(u)‖_{∞,1}` over the sampled utilities.
    pub max_observed: T,
    /// Theoretical smoothness constant `1/β`.
    pub bound: T,
    /// Utility vector attaining `max_observed`.
    pub argmax: Vec<T>,
    pub samples: usize,
}

impl<T: Scalar> SmoothnessCertificate<T> {
    pub fn holds(&self) -> bool {
        self.max_observed <= self.bound + T::tol(1e-8)
    }
}

/// Samples `‖∇²E(u)‖_{∞,1}` and compares it with `1/β`.
///
/// The first sample is always `u = 0`. The rest alternate between
/// `u ∈ [-3, 3]ⁿ` and the same box shrunk by `min_ℓ μ_ℓ`, where small nest
/// scales concentrate curvature.
pub fn smoothness_certificate<T: Scalar>(
    model: &GnlModel<T>,
    sample_count: usize,
    seed: u64,
) -> Result<SmoothnessCertificate<T>> {
    let n = model.n();
    if n > MAX_EXACT_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_EXACT_DIM,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shrink = model.min_nest_scale().as_f64();
    let mut best = T::neg_infinity();
    let mut argmax = vec![T::zero(); n];
    for k in 0..sample_count.max(1) {
        let u: Vec<T> = if k == 0 {
            vec![T::zero(); n]
        } else {
            let width = if k % 2 == 0 { 3.0 * shrink } else { 3.0 };
            (0..n).map(|_| T::lit(rng.gen_range(-width..=width))).collect()
        };
        let h = hessian_surplus(model, &u);
        let norm = norm_inf1_exact(&h.full)?.value;
        if norm > best {
            best = norm;
            argmax = u;
        }
    }
    Ok(SmoothnessCertificate {
        max_observed: best,
        bound: T::one() / model.convexity_parameter(),
        argmax,
        samples: sample_count.max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn ml_hessian_at_zero() {
        let model = GnlModel::multinomial_logit(2, 1.0).unwrap();
        let h = hessian_surplus(&model, &[0.0, 0.0]);
        let expect = m(&[vec![0.25, -0.25], vec![-0.25, 0.25]]);
        assert!(h.full.matrix().max_abs_diff(&expect) < 1e-15);
        assert!(h.s.matrix().max_abs_diff(&Matrix::zeros(2)) < 1e-15);
    }

    #[test]
    fn ml_hessian_is_softmax_covariance() {
        let model = GnlModel::multinomial_logit(3, 1.0).unwrap();
        let u = [0.5, -1.0, 0.25];
        let p = model.choice_probabilities(&u);
        let h = hessian_surplus(&model, &u);
        let r = ClassAMatrix::from_probabilities(&p);
        assert!(h.full.matrix().max_abs_diff(r.matrix()) < 1e-15);
    }

    #[test]
    fn decomposition_adds_up() {
        let model = GnlModel::<f64>::paired_combinatorial(4, &[0.4, 0.6, 0.9, 0.5, 0.7, 0.8, 0.3, 0.6, 0.9, 1.0, 0.45, 0.55]).unwrap();
        let u = [0.3, -0.8, 1.2, 0.0];
        let h = hessian_surplus(&model, &u);
        let recombined = h.r.matrix().scaled(1.0 / model.mu()).add(h.s.matrix());
        assert!(recombined.max_abs_diff(h.full.matrix()) < 1e-12);
        for i in 0..4 {
            let s: f64 = h.full.matrix().row(i).iter().sum();
            assert!(s.abs() < 1e-10);
        }
        check_class_a(h.full.into_matrix()).unwrap();
        check_class_a(h.s.into_matrix()).unwrap();
    }

    #[test]
    fn class_a_checks() {
        assert!(check_class_a(m(&[vec![1.0, -1.0], vec![-1.0, 1.0]])).is_ok());
        let err = check_class_a(m(&[vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotClassA(ref s) if s.contains("(A2)")));
        let err = check_class_a(m(&[vec![-1.0, 1.0], vec![1.0, -1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotClassA(ref s) if s.contains("(A1)")));
        let err = check_class_a(m(&[vec![1.0, -1.0], vec![-0.5, 0.5]])).unwrap_err();
        assert!(matches!(err, Error::NotClassA(ref s) if s.contains("asymmetric")));
        let r = ClassAMatrix::from_probabilities(&[0.2, 0.3, 0.5]);
        assert!(check_class_a(r.into_matrix()).is_ok());
    }

    #[test]
    fn exact_norm_examples() {
        let a = check_class_a(m(&[vec![1.0, -1.0], vec![-1.0, 1.0]])).unwrap();
        let norm = norm_inf1_exact(&a).unwrap();
        assert_eq!(norm.value, 4.0);
        assert_eq!(norm.witness.len(), 1);

        let zero = check_class_a(Matrix::<f64>::zeros(3)).unwrap();
        assert_eq!(norm_inf1_exact(&zero).unwrap().value, 0.0);

        let r = ClassAMatrix::from_probabilities(&[0.5, 0.5]);
        assert_abs_diff_eq!(norm_inf1_exact(&r).unwrap().value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn trace_bound_examples() {
        let a = check_class_a(m(&[vec![1.0, -1.0], vec![-1.0, 1.0]])).unwrap();
        assert_eq!(norm_inf1_trace_bound(&a), 4.0);
        let r = ClassAMatrix::from_probabilities(&[0.5, 0.5]);
        assert_abs_diff_eq!(norm_inf1_trace_bound(&r), 1.0, epsilon = 1e-15);
        let r = ClassAMatrix::from_probabilities(&[0.9, 0.1]);
        assert_abs_diff_eq!(norm_inf1_trace_bound(&r), 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_inf1_exact(&r).unwrap().value, 0.36, epsilon = 1e-15);
    }

    #[test]
    fn too_large_is_rejected() {
        let a = ClassAMatrix::from_probabilities(&[1.0 / 25.0; 25]);
        assert!(matches!(norm_inf1_exact(&a), Err(Error::TooLarge { n: 25, .. })));
    }

    #[test]
    fn certificate_examples() {
        let ml = GnlModel::multinomial_logit(2, 1.0).unwrap();
        let cert = smoothness_certificate(&ml, 50, 1).unwrap();
        assert_eq!(cert.bound, 1.0);
        assert_abs_diff_eq!(cert.max_observed, 1.0, epsilon = 1e-12);
        assert!(cert.holds());

        let pcl = GnlModel::<f64>::paired_combinatorial(3, &[0.5, 1.0, 0.8, 0.9, 0.6, 0.7]).unwrap();
        let cert = smoothness_certificate(&pcl, 100, 3).unwrap();
        assert_abs_diff_eq!(cert.bound, 3.0, epsilon = 1e-14);
        assert!(cert.holds());
    }
}

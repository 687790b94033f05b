//! Lancaster consumption problem with Leontief utility, and the consumption
//! cycle that solves its dual by dual averaging.
//!
//! Primal: `max U(x) = min_i (Qx)_i/σ_i` over `x ≥ 0`, `⟨π, x⟩ = w`.
//! Dual: `min Φ(λ) = w max_j (Qᵀλ)_j/π_j` over `λ ≥ 0`, `⟨σ, λ⟩ = 1`.
//! Writing `p = σ ∘ λ` turns the dual into a problem on the simplex over the
//! `n` qualities, which dual averaging solves with a GNL prox-function.

use serde::{Deserialize, Serialize};

use crate::conjugate::{prox_diameter, ProxFunction};
use crate::dual_averaging::{gap_bound, DualAveraging, GapBoundInputs};
use crate::error::{Error, Result};
use crate::gev::GnlModel;
use crate::scalar::{dot, Scalar};
use crate::simplex::SimplexPoint;

/// Relative tolerance for counting a good as best quality/price.
pub const TIE_TOL: f64 = 1e-12;

/// Raw instance, the JSON instance-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec<T> {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<T>>,
    pub pi: Vec<T>,
    pub w: T,
    pub sigma: Vec<T>,
}

/// A validated instance: `n` qualities, `m` goods.
#[derive(Debug, Clone, PartialEq)]
pub struct LancasterInstance<T> {
    q: Vec<Vec<T>>,
    pi: Vec<T>,
    w: T,
    sigma: Vec<T>,
}

fn positive<T: Scalar>(name: &str, v: &[T]) -> Result<()> {
    match v.iter().position(|&x| !(x.is_finite() && x > T::zero())) {
        Some(i) => Err(Error::InvalidInstance(format!(
            "{name}[{i}] = {} must be positive",
            v[i]
        ))),
        None => Ok(()),
    }
}

impl<T: Scalar> LancasterInstance<T> {
    /// Validates shapes and signs and checks that some feasible demand
    /// yields positive utility.
    ///
    /// Quality amounts must be nonnegative. The positivity check first tries
    /// single-good demands `x = (w/π_j) e_j`; failing that, it uses the
    /// uniform budget split, which yields positive utility exactly when every
    /// quality is supplied by some good.
    pub fn new(q: Vec<Vec<T>>, pi: Vec<T>, w: T, sigma: Vec<T>) -> Result<Self> {
        let n = sigma.len();
        let m = pi.len();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInstance("need at least one quality and one good".into()));
        }
        if q.len() != n || q.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidInstance(format!("Q must be {n} x {m}")));
        }
        positive("pi", &pi)?;
        positive("sigma", &sigma)?;
        positive("w", &[w])?;
        for (i, row) in q.iter().enumerate() {
            if let Some(j) = row.iter().position(|&x| !(x.is_finite() && x >= T::zero())) {
                return Err(Error::InvalidInstance(format!(
                    "Q[{i}][{j}] = {} must be finite and nonnegative",
                    row[j]
                )));
            }
        }
        let inst = Self { q, pi, w, sigma };
        if !inst.has_positive_utility() {
            return Err(Error::InvalidInstance(
                "no feasible demand yields positive utility".into(),
            ));
        }
        Ok(inst)
    }

    pub fn from_spec(spec: &InstanceSpec<T>) -> Result<Self> {
        Self::new(spec.q.clone(), spec.pi.clone(), spec.w, spec.sigma.clone())
    }

    fn has_positive_utility(&self) -> bool {
        let single = (0..self.m()).any(|j| {
            let mut x = vec![T::zero(); self.m()];
            x[j] = self.w / self.pi[j];
            self.utility(&x) > T::zero()
        });
        if single {
            return true;
        }
        let share = self.w / T::from_count(self.m());
        let x: Vec<T> = self.pi.iter().map(|&p| share / p).collect();
        self.utility(&x) > T::zero()
    }

    /// Number of qualities.
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    /// Number of goods.
    pub fn m(&self) -> usize {
        self.pi.len()
    }

    pub fn quality(&self) -> &[Vec<T>] {
        &self.q
    }

    pub fn prices(&self) -> &[T] {
        &self.pi
    }

    pub fn budget(&self) -> T {
        self.w
    }

    pub fn standards(&self) -> &[T] {
        &self.sigma
    }

    fn qx(&self, x: &[T]) -> Vec<T> {
        self.q.iter().map(|row| dot(row, x)).collect()
    }

    fn utility(&self, x: &[T]) -> T {
        self.qx(x)
            .iter()
            .zip(&self.sigma)
            .map(|(&z, &s)| z / s)
            .fold(T::infinity(), T::min)
    }

    fn ratios(&self, lambda: &[T]) -> Vec<T> {
        (0..self.m())
            .map(|j| {
                let qt: T = self.q.iter().zip(lambda).map(|(row, &l)| row[j] * l).sum();
                qt / self.pi[j]
            })
            .collect()
    }

    /// Leontief utility `U(x) = min_i (Qx)_i/σ_i`.
    pub fn primal_utility(&self, x: &[T]) -> Result<T> {
        if x.len() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "demand has {} entries, expected {}",
                x.len(),
                self.m()
            )));
        }
        if let Some(index) = x.iter().position(|&v| v < T::zero()) {
            return Err(Error::NegativeDemand {
                index,
                value: x[index].as_f64(),
            });
        }
        Ok(self.utility(x))
    }

    /// `Φ(λ) = w max_j (Qᵀλ)_j/π_j` for feasible internal prices.
    pub fn dual_price(&self, lambda: &[T]) -> Result<T> {
        if lambda.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "prices have {} entries, expected {}",
                lambda.len(),
                self.n()
            )));
        }
        if let Some(i) = lambda.iter().position(|&v| v < T::zero()) {
            return Err(Error::InfeasiblePrices(format!("lambda[{i}] = {} is negative", lambda[i])));
        }
        let budget = dot(&self.sigma, lambda);
        if (budget - T::one()).abs() > T::tol(1e-8) {
            return Err(Error::InfeasiblePrices(format!("<sigma, lambda> = {budget}")));
        }
        Ok(self.dual_unchecked(lambda))
    }

    fn dual_unchecked(&self, lambda: &[T]) -> T {
        self.w * self.ratios(lambda).into_iter().fold(T::neg_infinity(), T::max)
    }

    /// Subgradient of `Ψ(p) = Φ(p/σ)` at `p`, together with the demand it
    /// induces.
    pub fn consumption_oracle(&self, p: &SimplexPoint<T>) -> OracleOutput<T> {
        assert_eq!(p.len(), self.n(), "point has wrong dimension");
        let lambda: Vec<T> = p.iter().zip(&self.sigma).map(|(&x, &s)| x / s).collect();
        let ratios = self.ratios(&lambda);
        let best = ratios.iter().copied().fold(T::neg_infinity(), T::max);
        let slack = T::lit(TIE_TOL) * best.abs();
        let active: Vec<usize> = (0..self.m()).filter(|&j| best - ratios[j] <= slack).collect();
        let weight = T::one() / T::from_count(active.len());
        let mut sharing = vec![T::zero(); self.m()];
        for &j in &active {
            sharing[j] = weight;
        }
        let demand: Vec<T> = sharing
            .iter()
            .zip(&self.pi)
            .map(|(&y, &pi)| self.w * y / pi)
            .collect();
        let grad = self
            .qx(&demand)
            .into_iter()
            .zip(&self.sigma)
            .map(|(z, &s)| z / s)
            .collect();
        OracleOutput {
            grad,
            demand,
            sharing: SimplexPoint::from_vec_unchecked(sharing),
            active,
            lambda,
        }
    }

    /// `M = w max_{i,j} |q_ij| / (σ_i π_j)`, the sup of `‖∇Ψ‖_∞` on `Δ`.
    pub fn subgradient_bound(&self) -> T {
        let mut m = T::zero();
        for (row, &s) in self.q.iter().zip(&self.sigma) {
            for (&q, &pi) in row.iter().zip(&self.pi) {
                m = m.max(q.abs() / (s * pi));
            }
        }
        self.w * m
    }
}

/// One evaluation of the consumption oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput<T> {
    /// `∇Ψ(p) = Qx/σ`.
    pub grad: Vec<T>,
    /// Demand `x = w y/π`.
    pub demand: Vec<T>,
    /// Sharing vector `y`, uniform over the active goods.
    pub sharing: SimplexPoint<T>,
    /// Goods with the best quality/price ratio, `J(λ)`.
    pub active: Vec<usize>,
    /// Internal prices `λ = p/σ`.
    pub lambda: Vec<T>,
}

/// Constants of the consumption-cycle rate `(D + M²/β)/√(k+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate<T> {
    pub m: T,
    pub d: T,
    pub beta: T,
    pub bound: T,
}

impl<T: Scalar> GapCertificate<T> {
    pub fn inputs(&self) -> GapBoundInputs<T> {
        GapBoundInputs {
            d: self.d,
            m: self.m,
            beta: self.beta,
        }
    }

    pub fn bound_at(&self, k: usize) -> T {
        gap_bound(&self.inputs(), k)
    }
}

/// Prox diameter `D` used in the certificate.
///
/// Multinomial logit: `μ ln n`. Other GNL models: the exact
/// `max_{p∈Δ} d(p)`, attained at a vertex of the simplex.
pub fn certified_diameter<T: Scalar>(model: &GnlModel<T>) -> T {
    if model.is_multinomial_logit() {
        model.mu() * T::from_count(model.n()).ln()
    } else {
        prox_diameter(model)
    }
}

pub fn gap_certificate<T: Scalar>(
    inst: &LancasterInstance<T>,
    model: &GnlModel<T>,
    k: usize,
) -> GapCertificate<T> {
    let mut cert = GapCertificate {
        m: inst.subgradient_bound(),
        d: certified_diameter(model),
        beta: model.convexity_parameter(),
        bound: T::zero(),
    };
    cert.bound = cert.bound_at(k);
    cert
}

/// State of the cycle at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord<T> {
    pub k: usize,
    /// Sharing vector `y_k` over goods.
    pub sharing: Vec<T>,
    /// Demand `x_k`.
    pub demand: Vec<T>,
    /// Internal prices `λ_k`.
    pub prices: Vec<T>,
    /// Dual iterate `p_k`.
    pub p: Vec<T>,
    /// Average demand `x̄_k`.
    pub demand_avg: Vec<T>,
    /// Average internal prices `λ̄_k`.
    pub prices_avg: Vec<T>,
    /// `U(x̄_k)`.
    pub utility_avg: T,
    /// `Φ(λ̄_k)`.
    pub price_avg: T,
    /// `Φ(λ̄_k) − U(x̄_k)`.
    pub gap: T,
    pub bound: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleTrace<T> {
    pub records: Vec<CycleRecord<T>>,
    pub certificate: GapCertificate<T>,
}

impl<T: Scalar> CycleTrace<T> {
    pub fn last(&self) -> &CycleRecord<T> {
        self.records.last().expect("trace is never empty")
    }
}

/// Runs `iters` iterations of the consumption cycle, recording `k = 0..iters`.
pub fn run_cycle<T: Scalar>(
    inst: &LancasterInstance<T>,
    model: &GnlModel<T>,
    iters: usize,
) -> Result<CycleTrace<T>> {
    if model.n() != inst.n() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} alternatives, instance has {} qualities",
            model.n(),
            inst.n()
        )));
    }
    if iters == 0 {
        return Err(Error::BadCount { got: 0, min: 1 });
    }
    let certificate = gap_certificate(inst, model, 0);
    let prox = ProxFunction::new(model.clone());
    let mut da = DualAveraging::new(&prox, false);
    let mut demand_sum = vec![T::zero(); inst.m()];
    let mut price_sum = vec![T::zero(); inst.n()];
    let mut records = Vec::with_capacity(iters);
    for k in 0..iters {
        let p = da.current().clone();
        let out = inst.consumption_oracle(&p);
        for (acc, &x) in demand_sum.iter_mut().zip(&out.demand) {
            *acc = *acc + x;
        }
        for (acc, &l) in price_sum.iter_mut().zip(&out.lambda) {
            *acc = *acc + l;
        }
        let count = T::from_count(k + 1);
        let demand_avg: Vec<T> = demand_sum.iter().map(|&s| s / count).collect();
        let prices_avg: Vec<T> = price_sum.iter().map(|&s| s / count).collect();
        let utility_avg = inst.utility(&demand_avg);
        let price_avg = inst.dual_unchecked(&prices_avg);
        records.push(CycleRecord {
            k,
            sharing: out.sharing.into_vec(),
            demand: out.demand,
            prices: out.lambda,
            p: p.into_vec(),
            demand_avg,
            prices_avg,
            utility_avg,
            price_avg,
            gap: price_avg - utility_avg,
            bound: certificate.bound_at(k),
        });
        da.step(out.grad)?;
    }
    Ok(CycleTrace {
        records,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn symmetric() -> LancasterInstance<f64> {
        LancasterInstance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 1.0],
            1.0,
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    fn asymmetric() -> LancasterInstance<f64> {
        LancasterInstance::new(
            vec![vec![2.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 1.0],
            1.0,
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let bad_price = LancasterInstance::new(vec![vec![1.0, 1.0]], vec![1.0, 0.0], 1.0, vec![1.0]);
        assert!(matches!(bad_price, Err(Error::InvalidInstance(ref s)) if s.contains("pi[1]")));
        let no_supply = LancasterInstance::new(vec![vec![1.0], vec![0.0]], vec![1.0], 1.0, vec![1.0, 1.0]);
        assert!(no_supply.is_err());
        // no single good supplies both qualities, but a split does
        let split = LancasterInstance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 2.0],
            1.0,
            vec![1.0, 1.0],
        );
        assert!(split.is_ok());
        let shape = LancasterInstance::new(vec![vec![1.0, 0.0]], vec![1.0], 1.0, vec![1.0]);
        assert!(shape.is_err());
    }

    #[test]
    fn primal_examples() {
        let inst = symmetric();
        assert_abs_diff_eq!(inst.primal_utility(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(inst.primal_utility(&[0.0, 0.0]).unwrap(), 0.0);
        let x = [0.3, 0.9];
        assert_abs_diff_eq!(
            inst.primal_utility(&[0.6, 1.8]).unwrap(),
            2.0 * inst.primal_utility(&x).unwrap(),
            epsilon = 1e-15
        );
        assert!(matches!(inst.primal_utility(&[-0.1, 1.1]), Err(Error::NegativeDemand { index: 0, .. })));
    }

    #[test]
    fn dual_examples() {
        let inst = symmetric();
        assert_abs_diff_eq!(inst.dual_price(&[0.5, 0.5]).unwrap(), 0.5);
        let inst = asymmetric();
        // λ = e_1/σ_1
        assert_abs_diff_eq!(inst.dual_price(&[1.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(inst.dual_price(&[0.7, 0.7]), Err(Error::InfeasiblePrices(_))));
        assert!(matches!(inst.dual_price(&[1.5, -0.5]), Err(Error::InfeasiblePrices(_))));
    }

    #[test]
    fn oracle_examples() {
        let inst = symmetric();
        let out = inst.consumption_oracle(&SimplexPoint::new(vec![0.5, 0.5]).unwrap());
        assert_eq!(out.sharing.as_slice(), &[0.5, 0.5]);
        assert_eq!(out.demand, vec![0.5, 0.5]);
        assert_eq!(out.grad, vec![0.5, 0.5]);
        let out = inst.consumption_oracle(&SimplexPoint::vertex(2, 0));
        assert_eq!(out.active, vec![0]);
        assert_eq!(out.demand, vec![1.0, 0.0]);
        assert_eq!(out.grad, vec![1.0, 0.0]);
    }

    #[test]
    fn certificate_examples() {
        let ml = GnlModel::multinomial_logit(2, 1.0).unwrap();
        let cert = gap_certificate(&symmetric(), &ml, 0);
        assert_eq!(cert.m, 1.0);
        assert_abs_diff_eq!(cert.d, 2f64.ln(), epsilon = 1e-16);
        assert_eq!(cert.beta, 1.0);
        assert_abs_diff_eq!(cert.bound, 1.0 + 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(cert.bound, 1.6931, epsilon = 1e-4);
        let late = gap_certificate(&symmetric(), &ml, 99);
        assert_abs_diff_eq!(late.bound, cert.bound / 10.0, epsilon = 1e-15);
        assert_eq!(gap_certificate(&asymmetric(), &ml, 0).m, 2.0);
    }

    #[test]
    fn symmetric_cycle_hits_optimum_immediately() {
        let ml = GnlModel::multinomial_logit(2, 1.0).unwrap();
        let trace = run_cycle(&symmetric(), &ml, 50).unwrap();
        assert_eq!(trace.records[0].gap, 0.0);
        for r in &trace.records {
            assert_abs_diff_eq!(r.utility_avg, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn asymmetric_cycle_converges() {
        let ml = GnlModel::multinomial_logit(2, 0.05).unwrap();
        let trace = run_cycle(&asymmetric(), &ml, 10_000).unwrap();
        let last = trace.last();
        assert!((last.utility_avg - 2.0 / 3.0).abs() <= 0.01);
        for r in &trace.records {
            assert!(r.gap >= -1e-9);
            assert!(r.gap <= r.bound + 1e-9);
            assert!((dot(inst_prices(), &r.demand) - 1.0).abs() <= 1e-9);
            assert!((r.prices.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    fn inst_prices() -> &'static [f64] {
        &[1.0, 1.0]
    }

    #[test]
    fn dimension_mismatch() {
        let ml = GnlModel::multinomial_logit(3, 1.0).unwrap();
        assert!(matches!(run_cycle(&symmetric(), &ml, 5), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn nested_logit_cycle_respects_certificate() {
        let inst = LancasterInstance::new(
            vec![vec![1.0, 0.5, 0.0], vec![0.2, 1.0, 0.7], vec![0.0, 0.3, 1.5]],
            vec![1.0, 1.5, 0.8],
            1.0,
            vec![0.9, 1.2, 0.6],
        )
        .unwrap();
        let nl = GnlModel::nested_logit(&[vec![0, 1], vec![2]], &[0.3, 0.8]).unwrap();
        let trace = run_cycle(&inst, &nl, 2000).unwrap();
        assert!(trace.certificate.d > 0.0);
        for r in &trace.records {
            assert!(r.gap >= -1e-9 && r.gap <= r.bound + 1e-9);
        }
    }
}

//! Simulation checks of the analytic surplus and choice probabilities.
//!
//! Sampling is split across [`SHARDS`] ChaCha8 streams derived from the seed.
//! Shard `i` always uses stream `i`, and partial sums are combined in shard
//! order, so results depend only on the inputs and the seed, not on how many
//! threads run the shards.

use rand::distributions::{Distribution, Open01, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gev::GnlModel;
use crate::scalar::Scalar;
use crate::simplex::SimplexPoint;

/// Number of independent substreams per run.
pub const SHARDS: u64 = 8;

/// Gumbel distribution with the given mode and scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelSpec {
    scale: f64,
    location: f64,
}

impl GumbelSpec {
    pub fn new(scale: f64, location: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NonPositiveScale(scale));
        }
        Ok(Self { scale, location })
    }

    /// Zero-mode Gumbel.
    pub fn standard(scale: f64) -> Result<Self> {
        Self::new(scale, 0.0)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    /// Inverse CDF `location − scale·ln(−ln U)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.location - self.scale * (-u.ln()).ln()
    }

    pub fn mean(&self) -> f64 {
        self.location + self.scale * crate::scalar::EULER_GAMMA
    }
}

/// Draws `count` Gumbel variates by inversion.
pub fn sample_gumbel<R: Rng + ?Sized>(spec: &GumbelSpec, rng: &mut R, count: usize) -> Vec<f64> {
    (0..count)
        .map(|_| spec.quantile(rng.sample::<f64, _>(Open01)))
        .collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn shard_sizes(samples: usize) -> Vec<(u64, usize)> {
    let shards = SHARDS as usize;
    (0..shards)
        .map(|i| (i as u64, samples / shards + usize::from(i < samples % shards)))
        .collect()
}

/// Estimates `E(u) = 𝔼 max_i (u_i + ε_i)` for a multinomial logit model with
/// IID zero-mode Gumbel shocks of scale `μ`.
pub fn mc_surplus_ml<T: Scalar>(
    model: &GnlModel<T>,
    u: &[T],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !model.is_multinomial_logit() {
        return Err(Error::WrongModelKind {
            expected: "multinomial logit",
        });
    }
    if u.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries, model has {} alternatives",
            u.len(),
            model.n()
        )));
    }
    if samples == 0 {
        return Err(Error::BadCount { got: 0, min: 1 });
    }
    let spec = GumbelSpec::standard(model.mu().as_f64())?;
    let u: Vec<f64> = u.iter().map(|x| x.as_f64()).collect();
    let partial: Vec<(f64, f64)> = shard_sizes(samples)
        .into_par_iter()
        .map(|(shard, count)| {
            let mut rng = shard_rng(seed, shard);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..count {
                let best = u
                    .iter()
                    .map(|&ui| ui + spec.quantile(rng.sample(Open01)))
                    .fold(f64::NEG_INFINITY, f64::max);
                sum += best;
                sq += best * best;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
    let count = samples as f64;
    let mean = sum / count;
    let var = if samples > 1 {
        ((sq - count * mean * mean) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / count).sqrt(),
        samples,
    })
}

fn counts_to_frequencies<T: Scalar>(counts: &[usize], samples: usize) -> SimplexPoint<T> {
    let total = T::from_count(samples);
    SimplexPoint::from_vec_unchecked(counts.iter().map(|&c| T::from_count(c) / total).collect())
}

fn merge_counts(n: usize, partial: Vec<Vec<usize>>) -> Vec<usize> {
    partial.into_iter().fold(vec![0; n], |mut acc, c| {
        for (a, x) in acc.iter_mut().zip(c) {
            *a += x;
        }
        acc
    })
}

/// Empirical choice frequencies from the two-stage decomposition: draw a
/// nest with probability `q_ℓ`, then an alternative with probability `p_iℓ`.
pub fn mc_choice_frequencies<T: Scalar>(
    model: &GnlModel<T>,
    u: &[T],
    samples: usize,
    seed: u64,
) -> Result<SimplexPoint<T>> {
    if u.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries, model has {} alternatives",
            u.len(),
            model.n()
        )));
    }
    if samples == 0 {
        return Err(Error::BadCount { got: 0, min: 1 });
    }
    let n = model.n();
    let probs = model.nest_probabilities(u);
    let weights = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
    let nest_dist = WeightedIndex::new(weights(&probs.q)).expect("nest probabilities are valid");
    let alt_dists: Vec<Option<WeightedIndex<f64>>> = probs
        .conditional
        .iter()
        .map(|c| WeightedIndex::new(weights(c)).ok())
        .collect();
    let partial: Vec<Vec<usize>> = shard_sizes(samples)
        .into_par_iter()
        .map(|(shard, count)| {
            let mut rng = shard_rng(seed, shard);
            let mut counts = vec![0usize; n];
            for _ in 0..count {
                let l = nest_dist.sample(&mut rng);
                let alt = alt_dists[l]
                    .as_ref()
                    .expect("a nest with positive probability has members")
                    .sample(&mut rng);
                counts[alt] += 1;
            }
            counts
        })
        .collect();
    Ok(counts_to_frequencies(&merge_counts(n, partial), samples))
}

/// Empirical choice frequencies of `argmax_i (u_i + ε_i)` with IID Gumbel
/// shocks. Multinomial logit only.
pub fn mc_choice_frequencies_gumbel<T: Scalar>(
    model: &GnlModel<T>,
    u: &[T],
    samples: usize,
    seed: u64,
) -> Result<SimplexPoint<T>> {
    if !model.is_multinomial_logit() {
        return Err(Error::WrongModelKind {
            expected: "multinomial logit",
        });
    }
    if u.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries, model has {} alternatives",
            u.len(),
            model.n()
        )));
    }
    if samples == 0 {
        return Err(Error::BadCount { got: 0, min: 1 });
    }
    let n = model.n();
    let spec = GumbelSpec::standard(model.mu().as_f64())?;
    let u: Vec<f64> = u.iter().map(|x| x.as_f64()).collect();
    let partial: Vec<Vec<usize>> = shard_sizes(samples)
        .into_par_iter()
        .map(|(shard, count)| {
            let mut rng = shard_rng(seed, shard);
            let mut counts = vec![0usize; n];
            for _ in 0..count {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, &ui) in u.iter().enumerate() {
                    let v = ui + spec.quantile(rng.sample(Open01));
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                counts[best.0] += 1;
            }
            counts
        })
        .collect();
    Ok(counts_to_frequencies(&merge_counts(n, partial), samples))
}

#![allow(dead_code)]

use dcprox::verify::{random_gnl, random_nested_logit};
use dcprox::{GnlModel, PodDimension};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random model from one of the named GNL families, chosen by `family % 6`.
pub fn family_model<R: Rng>(rng: &mut R, family: usize, max_n: usize) -> GnlModel<f64> {
    let max_n = max_n.max(2);
    match family % 6 {
        0 => GnlModel::multinomial_logit(rng.gen_range(1..=max_n), rng.gen_range(0.1..=2.0)).unwrap(),
        1 => random_nested_logit(rng, max_n),
        2 => {
            let n = rng.gen_range(2..=max_n);
            let m = rng.gen_range(1..=2);
            let shares: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let row: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.1..=1.0)).collect();
                    let total: f64 = row.iter().sum();
                    row.iter().map(|s| s / total).collect()
                })
                .collect();
            let scales: Vec<f64> = (0..n + m).map(|_| rng.gen_range(0.1..=1.0)).collect();
            GnlModel::ordered_gev(n, m, &shares, &scales).unwrap()
        }
        3 => {
            let n = rng.gen_range(2..=max_n.min(5));
            let scales: Vec<f64> = (0..n * (n - 1)).map(|_| rng.gen_range(0.1..=1.0)).collect();
            GnlModel::paired_combinatorial(n, &scales).unwrap()
        }
        4 => {
            let n = rng.gen_range(2..=max_n);
            let dims: Vec<PodDimension<f64>> = (0..2)
                .map(|_| {
                    let k = rng.gen_range(1..=n);
                    let mut clusters = vec![Vec::new(); k];
                    for i in 0..n {
                        let c = if i < k { i } else { rng.gen_range(0..k) };
                        clusters[c].push(i);
                    }
                    PodDimension {
                        share: 0.5,
                        mu: rng.gen_range(0.1..=1.0),
                        clusters,
                    }
                })
                .collect();
            GnlModel::pod_gev(&dims).unwrap()
        }
        _ => random_gnl(rng, max_n, 4),
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

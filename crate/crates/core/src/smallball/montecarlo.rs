use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::chernoff::chernoff_logprob;
use crate::eigensolve::EigenSequence;
use crate::error::{invalid, Result};

/// Samples per RNG stream. Each block uses its own ChaCha stream, so results
/// do not depend on how blocks are spread over workers.
pub const MC_BLOCK: usize = 4096;
const MIN_SAMPLES: usize = 1000;
const MIN_ESS: f64 = 50.0;

/// Exponential tilt of the sampling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tilt {
    None,
    /// The Chernoff minimizer `s*` for the requested `ε`.
    Chernoff,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub probability: f64,
    pub std_error: f64,
    /// 95% normal-approximation interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub effective_sample_size: f64,
    pub low_ess: bool,
    pub tilt: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub generator: &'static str,
}

#[derive(Default, Clone, Copy)]
struct BlockSums {
    w: f64,
    w2: f64,
    hits: u64,
}

fn run_block(values: &[f64], scale: &[f64], eps2: f64, s: f64, log_norm: f64, seed: u64, block: usize, count: usize) -> BlockSums {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    let mut out = BlockSums::default();
    for _ in 0..count {
        let mut sum = 0.0;
        for (l, sc) in values.iter().zip(scale) {
            let z: f64 = StandardNormal.sample(&mut rng);
            let xi = z * sc;
            sum += l * xi * xi;
        }
        if sum <= eps2 {
            let w = (s * sum + log_norm).exp();
            out.w += w;
            out.w2 += w * w;
            out.hits += 1;
        }
    }
    out
}

/// Estimates `P(Σ λ_n ξ_n² ≤ ε²)` for independent standard normals `ξ_n`.
///
/// With tilt `s`, draws use variances `1/(1+2sλ_n)` and each hit is weighted by
/// `exp(s Σλξ²) Π (1+2sλ_n)^{−1/2}`. Samples are split into blocks of
/// [`MC_BLOCK`], each with its own ChaCha20 stream derived from `seed`; block
/// sums are reduced in block order, so the result is the same for any worker
/// count.
pub fn mc_smallball(eig: &EigenSequence<f64>, eps: f64, n_samples: usize, seed: u64, tilt: Tilt, workers: usize) -> Result<McEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(invalid("n_samples", format!("need at least {MIN_SAMPLES} samples")));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let values: Vec<f64> = eig.values.iter().copied().filter(|v| *v > 0.0).collect();
    if values.is_empty() {
        return Err(invalid("eigenvalues", "all eigenvalues vanish"));
    }
    let s = match tilt {
        Tilt::None => 0.0,
        Tilt::Fixed(s) if s >= 0.0 && s.is_finite() => s,
        Tilt::Fixed(s) => return Err(invalid("tilt", format!("must be finite and non-negative, got {s}"))),
        Tilt::Chernoff => chernoff_logprob(eig, None, eps)?.s_star,
    };
    let scale: Vec<f64> = values.iter().map(|l| (1.0 + 2.0 * s * l).sqrt().recip()).collect();
    let log_norm = -0.5 * values.iter().map(|l| (2.0 * s * l).ln_1p()).sum::<f64>();
    let eps2 = eps * eps;
    let blocks = n_samples.div_ceil(MC_BLOCK);
    let workers = workers.max(1).min(blocks);
    let mut sums = vec![BlockSums::default(); blocks];
    let count = |b: usize| (n_samples - b * MC_BLOCK).min(MC_BLOCK);
    if workers == 1 {
        for (b, slot) in sums.iter_mut().enumerate() {
            *slot = run_block(&values, &scale, eps2, s, log_norm, seed, b, count(b));
        }
    } else {
        let chunk = blocks.div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, slots) in sums.chunks_mut(chunk).enumerate() {
                let (values, scale) = (&values, &scale);
                scope.spawn(move || {
                    for (i, slot) in slots.iter_mut().enumerate() {
                        let b = w * chunk + i;
                        *slot = run_block(values, scale, eps2, s, log_norm, seed, b, count(b));
                    }
                });
            }
        });
    }
    let total = sums.iter().fold(BlockSums::default(), |acc, b| BlockSums {
        w: acc.w + b.w,
        w2: acc.w2 + b.w2,
        hits: acc.hits + b.hits,
    });
    let n = n_samples as f64;
    let p = total.w / n;
    let var = (total.w2 / n - p * p).max(0.0) / n;
    let se = var.sqrt();
    let ess = if total.w2 > 0.0 { total.w * total.w / total.w2 } else { 0.0 };
    Ok(McEstimate {
        probability: p,
        std_error: se,
        ci_low: p - 1.96 * se,
        ci_high: p + 1.96 * se,
        hits: total.hits,
        effective_sample_size: ess,
        low_ess: ess < MIN_ESS,
        tilt: s,
        n_samples,
        seed,
        workers,
        generator: "ChaCha20 (rand_chacha), one stream per block",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn seq(v: Vec<f64>) -> EigenSequence<f64> {
        EigenSequence::from_values(v, "test")
    }

    #[test]
    fn single_gaussian() {
        let exact = 2.0 * normal_cdf(0.5) - 1.0;
        assert!((exact - 0.38292).abs() < 1e-5);
        let est = mc_smallball(&seq(vec![1.0]), 0.5, 100_000, 7, Tilt::None, 1).unwrap();
        assert!((est.probability - exact).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn chi_square_two() {
        let exact = 1.0 - (-0.5f64).exp();
        let est = mc_smallball(&seq(vec![1.0, 1.0]), 1.0, 100_000, 11, Tilt::None, 2).unwrap();
        assert!((est.probability - exact).abs() < 3.0 * est.std_error);
        let tilted = mc_smallball(&seq(vec![1.0, 1.0]), 1.0, 100_000, 11, Tilt::Fixed(0.3), 2).unwrap();
        assert!((tilted.probability - exact).abs() < 3.0 * tilted.std_error);
    }

    #[test]
    fn tilted_and_plain_agree() {
        let eig = seq((1..=20).map(|n| 1.0 / (n * n) as f64).collect());
        let plain = mc_smallball(&eig, 0.3, 200_000, 3, Tilt::None, 4).unwrap();
        let tilted = mc_smallball(&eig, 0.3, 200_000, 5, Tilt::Chernoff, 4).unwrap();
        assert!(tilted.tilt > 0.0);
        let joint = (plain.std_error.powi(2) + tilted.std_error.powi(2)).sqrt();
        assert!((plain.probability - tilted.probability).abs() < 3.0 * joint);
        assert!(tilted.std_error < plain.std_error);
        let bound = chernoff_logprob(&eig, None, 0.3).unwrap().log_prob;
        assert!(bound >= (tilted.ci_low.max(1e-300)).ln());
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let eig = seq(vec![1.0, 0.5, 0.25]);
        let a = mc_smallball(&eig, 0.6, 20_000, 99, Tilt::Chernoff, 1).unwrap();
        let b = mc_smallball(&eig, 0.6, 20_000, 99, Tilt::Chernoff, 3).unwrap();
        assert_eq!(a.probability.to_bits(), b.probability.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn low_ess_is_flagged() {
        let eig = seq((1..=50).map(|n| 1.0 / (n * n) as f64).collect());
        let est = mc_smallball(&eig, 0.05, 2000, 1, Tilt::None, 1).unwrap();
        assert!(est.low_ess);
        assert!(mc_smallball(&eig, 0.05, 10, 1, Tilt::None, 1).is_err());
    }
}

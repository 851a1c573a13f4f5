use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{empirical, sprinter_mixture, tv_distance, CategoricalDist, RngStream};
use crate::engine::{run_sd, run_sprinter, CostModel, Position, Verifier};
use crate::error::{Error, Result};
use crate::lm::SyntheticModel;
use crate::theory::{acceptance_rate_sd, acceptance_rate_sprinter};
use crate::verifier::VerifierQuality;

/// Samples handled by one random stream.
const CHUNK: u64 = 1 << 16;

/// Smallest sample size accepted by the distribution checks.
pub const MIN_SAMPLES: u64 = 10_000;

const COMPONENT_TOKENS: u8 = 2;
const COMPONENT_ACCEPT: u8 = 3;
const COMPONENT_SD: u8 = 4;
const COMPONENT_ENGINE: u8 = 5;
const COMPONENT_BATTERY: u8 = 6;

/// Runs `draw` `samples` times and tallies its outputs into `bins` counters.
///
/// Samples are split into fixed chunks, each with its own stream, so counts
/// are identical whatever the thread count.
fn parallel_counts<F>(samples: u64, seed: u64, component: u8, bins: usize, draw: F) -> Result<Vec<u64>>
where
    F: Fn(&mut RngStream) -> Result<usize> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::for_trial(seed, c, component);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut counts = vec![0u64; bins];
            for _ in 0..n {
                counts[draw(&mut rng)?] += 1;
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; bins],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                Ok(a)
            },
        )
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    Ok(())
}

/// `count` random `(p, q)` pairs with vocabulary sizes cycling through 2, 4, 8, 16.
///
/// Entries are normalized exponential draws, i.e. uniform on the simplex.
pub fn random_battery(count: usize, seed: u64) -> Vec<(CategoricalDist, CategoricalDist)> {
    let mut rng = RngStream::for_trial(seed, 0, COMPONENT_BATTERY);
    let mut draw = |v: usize| {
        let w: Vec<f64> = (0..v).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        crate::dist::normalize(w).expect("exponential draws are positive")
    };
    (0..count)
        .map(|i| {
            let v = [2, 4, 8, 16][i % 4];
            (draw(v), draw(v))
        })
        .collect()
}

/// Single-step token law of sequential verification against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDistributionCheck {
    pub empirical: CategoricalDist,
    /// `(1 − η_FP)·p + η_FP·q`.
    pub theory: CategoricalDist,
    pub tv_to_theory: f64,
    /// Measured `d_TV(p, empirical)`.
    pub tv_to_target: f64,
    /// Predicted `η_FP·d_TV(p, q)`.
    pub expected_tv_to_target: f64,
}

/// Draws `samples` single-token steps with an oracle verifier over fixed `(p, q)`.
pub fn validate_token_distribution(
    p: &CategoricalDist,
    q: &CategoricalDist,
    quality: VerifierQuality,
    samples: u64,
    seed: u64,
) -> Result<TokenDistributionCheck> {
    check_samples(samples)?;
    let pos = Position::new(q, p)?;
    let counts = parallel_counts(samples, seed, COMPONENT_TOKENS, p.vocab_size(), |rng| {
        Ok(pos.oracle_step(quality, rng).0 as usize)
    })?;
    let emp = empirical(&counts)?;
    let theory = sprinter_mixture(p, q, quality.eta_fp)?;
    Ok(TokenDistributionCheck {
        tv_to_theory: tv_distance(&emp, &theory)?,
        tv_to_target: tv_distance(p, &emp)?,
        expected_tv_to_target: quality.eta_fp * tv_distance(p, q)?,
        empirical: emp,
        theory,
    })
}

/// Per-draft-token acceptance rate against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCheck {
    /// Fraction of draft tokens that ended up emitted, by the verifier or the target's keep test.
    pub beta_empirical: f64,
    /// `1 − (1 − η_FP)·d_TV(p, q)`.
    pub beta_theory: f64,
    /// `1 − d_TV(p, q)`.
    pub beta_sd: f64,
    /// Binomial standard error of `beta_empirical` at `beta_theory`.
    pub std_err: f64,
}

pub fn validate_acceptance_rate(
    p: &CategoricalDist,
    q: &CategoricalDist,
    quality: VerifierQuality,
    samples: u64,
    seed: u64,
) -> Result<AcceptanceCheck> {
    check_samples(samples)?;
    let pos = Position::new(q, p)?;
    let counts = parallel_counts(samples, seed, COMPONENT_ACCEPT, 2, |rng| {
        Ok(pos.oracle_step(quality, rng).1.from_draft() as usize)
    })?;
    let beta_theory = acceptance_rate_sprinter(p, q, quality.eta_fp)?;
    Ok(AcceptanceCheck {
        beta_empirical: counts[1] as f64 / samples as f64,
        beta_theory,
        beta_sd: acceptance_rate_sd(p, q)?,
        std_err: (beta_theory * (1.0 - beta_theory) / samples as f64).sqrt(),
    })
}

/// Empirical law of the first token emitted by full speculative-decoding runs.
pub fn sd_single_token(
    p: &CategoricalDist,
    q: &CategoricalDist,
    gamma: usize,
    runs: u64,
    seed: u64,
) -> Result<CategoricalDist> {
    check_samples(runs)?;
    let (draft, target) = (SyntheticModel::fixed(q.clone()), SyntheticModel::fixed(p.clone()));
    let cost = CostModel::default();
    let counts = parallel_counts(runs, seed, COMPONENT_SD, p.vocab_size(), |rng| {
        let trace = run_sd(&draft, &target, &[], gamma, 1, &cost, rng)?;
        Ok(trace.steps[0].token as usize)
    })?;
    empirical(&counts)
}

/// Empirical law of the first token emitted by full sequential-verification runs.
pub fn sprinter_single_token(
    p: &CategoricalDist,
    q: &CategoricalDist,
    quality: VerifierQuality,
    runs: u64,
    seed: u64,
) -> Result<CategoricalDist> {
    check_samples(runs)?;
    let (draft, target) = (SyntheticModel::fixed(q.clone()), SyntheticModel::fixed(p.clone()));
    let cost = CostModel::default();
    let verifier = Verifier::oracle(quality);
    let counts = parallel_counts(runs, seed, COMPONENT_ENGINE, p.vocab_size(), |rng| {
        let trace = run_sprinter(&draft, &target, &verifier, &[], 1, &cost, rng)?;
        Ok(trace.steps[0].token as usize)
    })?;
    empirical(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> CategoricalDist {
        CategoricalDist::new(v.to_vec()).unwrap()
    }

    fn quality(tp: f64, fp: f64) -> VerifierQuality {
        VerifierQuality::new(tp, fp).unwrap()
    }

    #[test]
    fn perfect_verifier_recovers_target() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        let c = validate_token_distribution(&p, &q, quality(0.8, 0.0), 1_000_000, 1).unwrap();
        assert!(c.tv_to_target <= 0.005, "{c:?}");
    }

    #[test]
    fn always_accepting_verifier_recovers_draft() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        let c = validate_token_distribution(&p, &q, quality(1.0, 1.0), 1_000_000, 2).unwrap();
        assert!(tv_distance(&c.empirical, &q).unwrap() <= 0.005);
    }

    #[test]
    fn mixture_example() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        let c = validate_token_distribution(&p, &q, quality(0.5, 0.3), 1_000_000, 3).unwrap();
        assert!((c.theory.probs()[0] - 0.48).abs() < 1e-12);
        assert!(c.tv_to_theory <= 0.005, "{c:?}");
        assert!((c.tv_to_target - c.expected_tv_to_target).abs() <= 0.005);
    }

    #[test]
    fn acceptance_rate_examples() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        let same = validate_acceptance_rate(&p, &p, quality(0.5, 0.5), 100_000, 4).unwrap();
        assert_eq!(same.beta_empirical, 1.0);
        let sd = validate_acceptance_rate(&p, &q, quality(0.9, 0.0), 100_000, 5).unwrap();
        assert!((sd.beta_empirical - 0.6).abs() <= 0.01, "{sd:?}");
        let sp = validate_acceptance_rate(&p, &q, quality(0.9, 0.2), 100_000, 6).unwrap();
        assert!((sp.beta_theory - 0.68).abs() < 1e-12);
        assert!((sp.beta_empirical - 0.68).abs() <= 0.01, "{sp:?}");
    }

    #[test]
    fn true_positive_rate_does_not_move_the_marginals() {
        let (p, q) = (d(&[0.5, 0.3, 0.2]), d(&[0.1, 0.5, 0.4]));
        for tp in [0.0, 0.5, 1.0] {
            let c = validate_token_distribution(&p, &q, quality(tp, 0.4), 200_000, 7).unwrap();
            assert!(c.tv_to_theory <= 0.01, "tp={tp} {c:?}");
        }
    }

    #[test]
    fn engines_are_consistent_with_target() {
        for (p, q) in random_battery(4, 8) {
            let sd = sd_single_token(&p, &q, 4, 100_000, 9).unwrap();
            assert!(tv_distance(&sd, &p).unwrap() <= 0.015);
            let sp = sprinter_single_token(&p, &q, quality(0.7, 0.0), 100_000, 10).unwrap();
            assert!(tv_distance(&sp, &p).unwrap() <= 0.015);
        }
    }

    #[test]
    fn battery_shape_and_determinism() {
        let a = random_battery(8, 1);
        assert_eq!(a, random_battery(8, 1));
        let sizes: Vec<usize> = a.iter().map(|(p, _)| p.vocab_size()).collect();
        assert_eq!(sizes, vec![2, 4, 8, 16, 2, 4, 8, 16]);
        assert!(a.iter().all(|(p, q)| tv_distance(p, q).unwrap() > 0.0));
    }

    #[test]
    fn sample_floor_and_chunk_independence() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        assert!(validate_token_distribution(&p, &q, quality(1.0, 0.0), 100, 0).is_err());
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = one.install(|| validate_token_distribution(&p, &q, quality(0.9, 0.1), 300_000, 5).unwrap());
        let parallel = validate_token_distribution(&p, &q, quality(0.9, 0.1), 300_000, 5).unwrap();
        assert_eq!(serial, parallel);
    }
}

//! Finite categorical distributions over dense token ids.
//!
//! `CategoricalDist` is the common currency of the whole crate: the draft
//! distribution `q`, the target distribution `p`, the residual `norm(max(0, p - q))`
//! used after a rejection, and the mixture produced by approximate verification.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense token identifier in `0..V`.
pub type TokenId = u32;

/// Tolerance on the total mass of a probability vector.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A probability vector indexed by token id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDist {
    probs: Vec<f64>,
}

impl CategoricalDist {
    /// Validates `probs` and renormalizes away float drift below [`PROB_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        check_weights(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self::from_positive_sum(probs, sum))
    }

    /// Uniform distribution over `vocab_size` tokens.
    pub fn uniform(vocab_size: usize) -> Self {
        assert!(vocab_size > 0, "vocab_size must be positive");
        Self {
            probs: vec![1.0 / vocab_size as f64; vocab_size],
        }
    }

    /// All mass on `token`.
    pub fn point(vocab_size: usize, token: TokenId) -> Self {
        assert!((token as usize) < vocab_size, "token out of range");
        let mut probs = vec![0.0; vocab_size];
        probs[token as usize] = 1.0;
        Self { probs }
    }

    fn from_positive_sum(mut probs: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    /// Probability of `token`; zero for ids outside the vocabulary.
    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs.get(token as usize).copied().unwrap_or(0.0)
    }

    /// Draws a token by inverse-CDF lookup. Zero-mass tokens are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TokenId {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                cum += p;
                last_positive = i;
                if u < cum {
                    return i as TokenId;
                }
            }
        }
        // u landed in the rounding gap above the accumulated mass.
        last_positive as TokenId
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }

    /// Token with the largest probability (lowest id on ties) and its mass.
    pub fn argmax(&self) -> (TokenId, f64) {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        (best as TokenId, self.probs[best])
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite() || **w < 0.0)
    {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is {w}; weights must be finite and non-negative"
        )));
    }
    Ok(())
}

fn check_same_vocab(p: &CategoricalDist, q: &CategoricalDist) -> Result<()> {
    if p.vocab_size() != q.vocab_size() {
        return Err(Error::VocabMismatch {
            left: p.vocab_size(),
            right: q.vocab_size(),
        });
    }
    Ok(())
}

/// Divides non-negative weights by their sum.
pub fn normalize(weights: Vec<f64>) -> Result<CategoricalDist> {
    if weights.is_empty() {
        return Err(Error::InvalidDistribution("empty weight vector".into()));
    }
    check_weights(&weights)?;
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(CategoricalDist::from_positive_sum(weights, sum))
}

/// Total-variation distance `½ Σ |p_i − q_i|`.
pub fn tv_distance(p: &CategoricalDist, q: &CategoricalDist) -> Result<f64> {
    check_same_vocab(p, q)?;
    let l1: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

/// The correction distribution `norm(max(0, p − q))` sampled after a rejection.
///
/// When `p` and `q` coincide the positive part vanishes; `p` itself is returned.
pub fn residual_dist(p: &CategoricalDist, q: &CategoricalDist) -> Result<CategoricalDist> {
    check_same_vocab(p, q)?;
    let diff: Vec<f64> = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).max(0.0))
        .collect();
    match normalize(diff) {
        Ok(d) => Ok(d),
        Err(Error::AllZero) => Ok(p.clone()),
        Err(e) => Err(e),
    }
}

/// `(1 − η_FP)·p + η_FP·q`, the token law of approximate verification.
pub fn sprinter_mixture(
    p: &CategoricalDist,
    q: &CategoricalDist,
    eta_fp: f64,
) -> Result<CategoricalDist> {
    check_same_vocab(p, q)?;
    if !(0.0..=1.0).contains(&eta_fp) {
        return Err(Error::invalid(format!("eta_fp must be in [0, 1], got {eta_fp}")));
    }
    let mixed: Vec<f64> = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (1.0 - eta_fp) * a + eta_fp * b)
        .collect();
    let sum: f64 = mixed.iter().sum();
    Ok(CategoricalDist::from_positive_sum(mixed, sum))
}

/// Empirical distribution of observed token counts.
pub fn empirical(counts: &[u64]) -> Result<CategoricalDist> {
    normalize(counts.iter().map(|&c| c as f64).collect())
}

/// Seedable random stream addressed by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with its native 64-bit stream selector, so streams with
/// different ids never overlap and a given pair always replays the same draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Stream for one `(trial, component)` pair of a Monte Carlo experiment.
    pub fn for_trial(seed: u64, trial: u64, component: u8) -> Self {
        Self::new(seed, (trial << 8) | component as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen()
    }

    /// Bernoulli draw with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

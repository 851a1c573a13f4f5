use std::sync::OnceLock;

use rand::Rng;

use crate::dist::{residual_dist, CategoricalDist, TokenId};
use crate::engine::trace::StepSource;
use crate::engine::{keep_probability, ORACLE_LAMBDA};
use crate::error::{Error, Result};
use crate::verifier::{ground_truth_label, oracle_decide, VerifierQuality};

/// Draft and target distributions at one sequence position.
///
/// Holds the per-position logic every decoder shares: the target's
/// keep-or-resample correction and the oracle verifier's decision. The
/// residual distribution is built on first use and cached.
#[derive(Debug)]
pub struct Position<'a> {
    q: &'a CategoricalDist,
    p: &'a CategoricalDist,
    residual: OnceLock<CategoricalDist>,
}

impl<'a> Position<'a> {
    pub fn new(q: &'a CategoricalDist, p: &'a CategoricalDist) -> Result<Self> {
        if q.vocab_size() != p.vocab_size() {
            return Err(Error::VocabMismatch {
                left: q.vocab_size(),
                right: p.vocab_size(),
            });
        }
        Ok(Self {
            q,
            p,
            residual: OnceLock::new(),
        })
    }

    pub fn q(&self) -> &CategoricalDist {
        self.q
    }

    pub fn p(&self) -> &CategoricalDist {
        self.p
    }

    fn residual(&self) -> &CategoricalDist {
        self.residual
            .get_or_init(|| residual_dist(self.p, self.q).expect("vocab sizes checked in Position::new"))
    }

    /// Target correction of a draft token: keep `x` with probability
    /// `min(1, p(x)/q(x))`, otherwise draw from `norm(max(0, p − q))`.
    pub fn correct<R: Rng + ?Sized>(&self, x: TokenId, rng: &mut R) -> (TokenId, StepSource) {
        if rng.gen::<f64>() < keep_probability(self.p.prob(x), self.q.prob(x)) {
            (x, StepSource::TargetKept)
        } else {
            (self.residual().sample(rng), StepSource::TargetResampled)
        }
    }

    /// Whether the oracle with the given rates accepts draft token `x`.
    pub fn oracle_accepts<R: Rng + ?Sized>(&self, x: TokenId, quality: VerifierQuality, rng: &mut R) -> bool {
        let acceptable = ground_truth_label(self.q.prob(x), self.p.prob(x), ORACLE_LAMBDA);
        oracle_decide(acceptable, quality, rng)
    }

    /// One sequential-verification step with an oracle verifier: draw from the
    /// draft, emit on acceptance, otherwise apply the target correction.
    pub fn oracle_step<R: Rng + ?Sized>(&self, quality: VerifierQuality, rng: &mut R) -> (TokenId, StepSource) {
        let x = self.q.sample(rng);
        if self.oracle_accepts(x, quality, rng) {
            (x, StepSource::DraftAccepted)
        } else {
            self.correct(x, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngStream;

    fn d(v: &[f64]) -> CategoricalDist {
        CategoricalDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn acceptable_tokens_are_always_kept() {
        let (q, p) = (d(&[0.2, 0.8]), d(&[0.6, 0.4]));
        let pos = Position::new(&q, &p).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!((0..1000).all(|_| pos.correct(0, &mut rng) == (0, StepSource::TargetKept)));
    }

    #[test]
    fn residual_replaces_unacceptable_tokens() {
        let (q, p) = (d(&[0.2, 0.8]), d(&[0.6, 0.4]));
        let pos = Position::new(&q, &p).unwrap();
        let mut rng = RngStream::new(1, 0);
        let n = 100_000;
        let kept = (0..n).filter(|_| pos.correct(1, &mut rng).1 == StepSource::TargetKept).count();
        // keep probability p/q = 0.5; a replacement is always token 0
        assert!((kept as f64 / n as f64 - 0.5).abs() < 0.005);
        assert!((0..1000).all(|_| {
            let (t, s) = pos.correct(1, &mut rng);
            s == StepSource::TargetKept || t == 0
        }));
    }

    #[test]
    fn vocab_mismatch() {
        let (q, p) = (d(&[0.5, 0.5]), d(&[0.2, 0.3, 0.5]));
        assert!(matches!(Position::new(&q, &p), Err(Error::VocabMismatch { .. })));
    }
}

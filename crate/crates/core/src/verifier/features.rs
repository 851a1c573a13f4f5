use serde::{Deserialize, Serialize};

use crate::dist::{CategoricalDist, TokenId};

pub const FEATURE_DIM: usize = 6;

/// Identifies the feature layout below; stored in verifier files.
pub const FEATURE_SCHEMA: &str = "draft-dist-v1";

/// Probabilities are floored here before taking logs.
const LOG_FLOOR: f64 = 1e-12;

/// Prefix lengths saturate at this many tokens.
const PREFIX_SCALE: f64 = 32.0;

/// Draft-side features of a sampled token:
/// `[log q(x), H(q), q(x) − max q, rank(x)/(V−1), max q, min(len, 32)/32]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn log_prob(&self) -> f64 {
        self.0[0]
    }

    pub fn entropy(&self) -> f64 {
        self.0[1]
    }

    pub fn margin(&self) -> f64 {
        self.0[2]
    }

    pub fn rank(&self) -> f64 {
        self.0[3]
    }

    pub fn top1(&self) -> f64 {
        self.0[4]
    }

    pub fn prefix_len(&self) -> f64 {
        self.0[5]
    }

    pub fn dot(&self, w: &[f64; FEATURE_DIM]) -> f64 {
        self.0.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

/// Features of `token` drawn from `q` after a prefix of `prefix_len` tokens.
///
/// Rank counts tokens strictly more probable than `token`, so ties share the
/// better rank.
pub fn featurize(q: &CategoricalDist, token: TokenId, prefix_len: usize) -> FeatureVector {
    let q_x = q.prob(token);
    let (_, top1) = q.argmax();
    let v = q.vocab_size();
    let above = q.probs().iter().filter(|&&p| p > q_x).count();
    let rank = if v > 1 {
        above as f64 / (v - 1) as f64
    } else {
        0.0
    };
    FeatureVector([
        q_x.max(LOG_FLOOR).ln(),
        q.entropy(),
        q_x - top1,
        rank,
        top1,
        (prefix_len as f64).min(PREFIX_SCALE) / PREFIX_SCALE,
    ])
}

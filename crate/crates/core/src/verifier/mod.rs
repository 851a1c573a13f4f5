//! Acceptance verifiers.
//!
//! A verifier predicts whether a draft token `x` is acceptable, i.e. whether
//! `q(x)/p(x) ≤ λ`, without running the target. Two kinds exist: an oracle that
//! knows the true label and errs i.i.d. with rates `(η_TP, η_FP)`, and a
//! single-layer logistic classifier over features of the draft distribution.

mod dataset;
mod features;
mod logistic;
mod roc;

pub use dataset::{build_training_set, relabel, Category, DatasetConfig, LabeledExample};
pub use features::{featurize, FeatureVector, FEATURE_DIM, FEATURE_SCHEMA};
pub use logistic::{train_logistic, LogisticVerifier, TrainConfig, TrainReport};
pub use roc::{roc_curve, RocCurve, RocPoint};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// True-positive and false-positive acceptance rates of a verifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifierQuality {
    pub eta_tp: f64,
    pub eta_fp: f64,
}

impl VerifierQuality {
    pub const PERFECT: Self = Self {
        eta_tp: 1.0,
        eta_fp: 0.0,
    };

    pub fn new(eta_tp: f64, eta_fp: f64) -> Result<Self> {
        for (name, v) in [("eta_tp", eta_tp), ("eta_fp", eta_fp)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(Self { eta_tp, eta_fp })
    }
}

/// Ground truth: a draft token is acceptable iff `q(x)/p(x) ≤ λ`.
///
/// Evaluated as `q(x) ≤ λ·p(x)`, so a token the target rules out (`p(x) = 0`)
/// with `q(x) > 0` is labeled unacceptable.
pub fn ground_truth_label(q_x: f64, p_x: f64, lambda: f64) -> bool {
    q_x <= lambda * p_x
}

/// Oracle decision: accepts an acceptable token w.p. `η_TP`, an unacceptable one w.p. `η_FP`.
pub fn oracle_decide<R: Rng + ?Sized>(acceptable: bool, quality: VerifierQuality, rng: &mut R) -> bool {
    let p = if acceptable {
        quality.eta_tp
    } else {
        quality.eta_fp
    };
    rng.gen::<f64>() < p
}

/// Empirical `(η_TP, η_FP)` of `decide` over labeled examples.
pub fn measure_quality<F>(heldout: &[LabeledExample], mut decide: F) -> Result<VerifierQuality>
where
    F: FnMut(&LabeledExample) -> bool,
{
    let (mut pos, mut neg, mut tp, mut fp) = (0u64, 0u64, 0u64, 0u64);
    for ex in heldout {
        let accepted = decide(ex);
        if ex.label {
            pos += 1;
            tp += accepted as u64;
        } else {
            neg += 1;
            fp += accepted as u64;
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    VerifierQuality::new(tp as f64 / pos as f64, fp as f64 / neg as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngStream;

    #[test]
    fn labels() {
        assert!(ground_truth_label(0.3, 0.5, 1.0));
        assert!(!ground_truth_label(0.5, 0.3, 1.0));
        // ratio 1.1 passes the relaxed threshold
        assert!(ground_truth_label(0.55, 0.5, 1.2));
        assert!(!ground_truth_label(0.55, 0.5, 1.0));
        assert!(!ground_truth_label(0.1, 0.0, 1.5));
        assert!(ground_truth_label(0.5, 0.5, 1.0));
    }

    #[test]
    fn oracle_extremes() {
        let mut rng = RngStream::new(0, 0);
        let perfect = VerifierQuality::PERFECT;
        assert!((0..1000).all(|_| oracle_decide(true, perfect, &mut rng)));
        assert!((0..1000).all(|_| !oracle_decide(false, perfect, &mut rng)));
    }

    #[test]
    fn oracle_frequency_within_three_sigma() {
        let q = VerifierQuality::new(0.9, 0.2).unwrap();
        let mut rng = RngStream::new(17, 3);
        let n = 100_000;
        let acc = (0..n).filter(|_| oracle_decide(true, q, &mut rng)).count() as f64 / n as f64;
        assert!((0.894..=0.906).contains(&acc), "{acc}");
        let sigma = (0.2f64 * 0.8 / n as f64).sqrt();
        let fp = (0..n).filter(|_| oracle_decide(false, q, &mut rng)).count() as f64 / n as f64;
        assert!((fp - 0.2).abs() <= 3.0 * sigma, "{fp}");
    }

    #[test]
    fn quality_rejects_out_of_range() {
        assert!(VerifierQuality::new(1.1, 0.0).is_err());
        assert!(VerifierQuality::new(0.5, -0.1).is_err());
    }

    fn example(label: bool) -> LabeledExample {
        LabeledExample {
            features: FeatureVector([0.0; FEATURE_DIM]),
            label,
            category: Category::Original,
            q_x: 0.5,
            p_x: 0.5,
        }
    }

    #[test]
    fn measure_quality_constant_deciders() {
        let data: Vec<_> = (0..10).map(|i| example(i % 3 == 0)).collect();
        assert_eq!(
            measure_quality(&data, |_| true).unwrap(),
            VerifierQuality::new(1.0, 1.0).unwrap()
        );
        assert_eq!(
            measure_quality(&data, |_| false).unwrap(),
            VerifierQuality::new(0.0, 0.0).unwrap()
        );
        let one_class: Vec<_> = (0..4).map(|_| example(true)).collect();
        assert!(matches!(
            measure_quality(&one_class, |_| true),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn measure_quality_recovers_oracle_rates() {
        let data: Vec<_> = (0..100_000).map(|i| example(i % 2 == 0)).collect();
        let quality = VerifierQuality::new(0.9, 0.2).unwrap();
        let mut rng = RngStream::new(99, 0);
        let got = measure_quality(&data, |ex| oracle_decide(ex.label, quality, &mut rng)).unwrap();
        assert!((got.eta_tp - 0.9).abs() <= 0.01, "{got:?}");
        assert!((got.eta_fp - 0.2).abs() <= 0.01, "{got:?}");
    }
}

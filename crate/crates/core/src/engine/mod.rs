//! Decoding engines and their accounting.
//!
//! Three decoders share one trace format: sequential approximate verification
//! ([`run_sprinter`]), standard speculative decoding ([`run_sd`]) and plain
//! target sampling ([`run_target_only`]). Each step records the model calls it
//! incurred so latency and FLOPs can be recomputed from a trace alone.

mod kernel;
mod sd;
mod sprinter;
mod target_only;
mod trace;

pub use kernel::Position;
pub use sd::run_sd;
pub use sprinter::{run_sprinter, Verifier, ORACLE_LAMBDA};
pub use target_only::run_target_only;
pub use trace::{Method, RunSettings, RunTrace, StepRecord, StepSource, Totals, TRACE_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::LanguageModel;

/// Per-invocation time and FLOPs charged to each model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    /// Time per draft call.
    pub t_d: f64,
    /// Time per target call.
    pub t_t: f64,
    /// Time per verifier call.
    pub t_v: f64,
    /// FLOPs per draft call.
    pub f_d: f64,
    /// FLOPs per target position.
    pub f_t: f64,
    /// FLOPs per verifier call.
    pub f_v: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            t_d: 1.0,
            t_t: 10.0,
            t_v: 0.05,
            f_d: 1.0,
            f_t: 9.0,
            f_v: 0.001,
        }
    }
}

impl CostModel {
    /// Rejects negative or non-finite entries.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("t_d", self.t_d),
            ("t_t", self.t_t),
            ("t_v", self.t_v),
            ("f_d", self.f_d),
            ("f_t", self.f_t),
            ("f_v", self.f_v),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("cost {name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Human-readable notes when the usual ordering `t_v ≤ t_d ≤ t_t` does not hold.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.t_v > self.t_d {
            out.push(format!("verifier time {} exceeds draft time {}", self.t_v, self.t_d));
        }
        if self.t_d > self.t_t {
            out.push(format!("draft time {} exceeds target time {}", self.t_d, self.t_t));
        }
        out
    }
}

pub(crate) fn check_vocab<D, T>(draft: &D, target: &T) -> Result<()>
where
    D: LanguageModel + ?Sized,
    T: LanguageModel + ?Sized,
{
    if draft.vocab_size() != target.vocab_size() {
        return Err(Error::VocabMismatch {
            left: draft.vocab_size(),
            right: target.vocab_size(),
        });
    }
    Ok(())
}

/// `min(1, p/q)`, treating `q = 0` as always-keep.
pub(crate) fn keep_probability(p_x: f64, q_x: f64) -> f64 {
    if q_x <= 0.0 {
        1.0
    } else {
        (p_x / q_x).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_costs_are_ordered() {
        let c = CostModel::default();
        assert!(c.validate().is_ok());
        assert!(c.warnings().is_empty());
    }

    #[test]
    fn inverted_costs_warn_but_validate() {
        let c = CostModel {
            t_d: 20.0,
            t_v: 30.0,
            ..CostModel::default()
        };
        assert!(c.validate().is_ok());
        assert_eq!(c.warnings().len(), 2);
        let bad = CostModel {
            f_t: -1.0,
            ..CostModel::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn keep_probability_bounds() {
        assert_eq!(keep_probability(0.5, 0.25), 1.0);
        assert_eq!(keep_probability(0.1, 0.4), 0.25);
        assert_eq!(keep_probability(0.0, 0.4), 0.0);
        assert_eq!(keep_probability(0.3, 0.0), 1.0);
    }
}

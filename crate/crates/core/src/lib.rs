//! Speculative decoding and sequential approximate verification.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`] — categorical distributions, total variation, residual and
//!   mixture distributions, and seedable split random streams;
//! * [`lm`] — n-gram and fixed-table language models playing the draft and
//!   target roles;
//! * [`verifier`] — acceptability labels, the oracle verifier, the logistic
//!   verifier with its training set builder, and ROC analysis;
//! * [`engine`] — the sequential-verification, speculative and target-only
//!   decoders with per-step cost accounting;
//! * [`theory`] — closed forms for token counts, stopping time, acceptance
//!   rates and FLOPs;
//! * [`harness`] — Monte Carlo checks of the closed forms, ROUGE, and the
//!   benchmark suite.

pub mod dist;
pub mod engine;
pub mod error;
pub mod harness;
pub mod lm;
pub mod theory;
pub mod verifier;

pub use dist::{CategoricalDist, RngStream, TokenId};
pub use engine::{CostModel, Method, RunTrace, StepRecord, StepSource, Verifier};
pub use error::{Error, Result};
pub use lm::{LanguageModel, NGramModel, SyntheticModel, TokenizeMode, Vocab};
pub use theory::ScenarioParams;
pub use verifier::{LogisticVerifier, VerifierQuality};

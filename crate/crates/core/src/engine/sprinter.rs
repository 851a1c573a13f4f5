use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::engine::kernel::Position;
use crate::engine::trace::{Method, RunSettings, RunTrace, StepRecord, StepSource};
use crate::engine::{check_vocab, CostModel};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::verifier::{featurize, LogisticVerifier, VerifierQuality};

/// Acceptability threshold used by the oracle: a token is acceptable iff `q(x) ≤ p(x)`.
pub const ORACLE_LAMBDA: f64 = 1.0;

/// The verifier consulted on each draft token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verifier {
    /// Knows the true label and errs independently with the given rates.
    ///
    /// Looking up the label reads the target distribution; that lookup is a
    /// property of the simulation, not a target call, and is not charged.
    /// The target distribution is likewise computed eagerly for every position
    /// by the engine, but only charged when a rejection consults it.
    Oracle { quality: VerifierQuality },
    /// Trained classifier over draft-side features; decides `score > τ`.
    Logistic { model: LogisticVerifier },
}

impl Verifier {
    pub fn oracle(quality: VerifierQuality) -> Self {
        Verifier::Oracle { quality }
    }

    pub fn logistic(model: LogisticVerifier) -> Self {
        Verifier::Logistic { model }
    }
}

/// Sequential approximate verification.
///
/// Draft tokens are sampled one at a time and shown to the verifier. Accepted
/// tokens are emitted without consulting the target. On the first rejection
/// the target runs once: the rejected token survives with probability
/// `min(1, p(x)/q(x))`, otherwise a replacement is drawn from the residual
/// distribution. Drafting then resumes from the extended prefix.
///
/// Stops after `max_new_tokens` emitted tokens. If that happens while draft
/// tokens are still unverified by the target, the trace is flagged with
/// `unverified_tail`.
pub fn run_sprinter<D, T, R>(
    draft: &D,
    target: &T,
    verifier: &Verifier,
    prefix: &[TokenId],
    max_new_tokens: usize,
    cost: &CostModel,
    rng: &mut R,
) -> Result<RunTrace>
where
    D: LanguageModel + ?Sized,
    T: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    check_vocab(draft, target)?;
    cost.validate()?;
    if let Verifier::Logistic { model } = verifier {
        if !(model.tau > 0.0 && model.tau < 1.0) {
            return Err(Error::InvalidTau(model.tau));
        }
    }
    let start = Instant::now();
    let settings = RunSettings {
        prefix_len: prefix.len(),
        max_new_tokens,
        gamma: None,
        verifier: Some(verifier.clone()),
    };
    let mut trace = RunTrace::new(Method::Sprinter, settings, *cost);
    let mut seq = prefix.to_vec();
    let mut round = 0u64;
    let mut pending_draft = false;

    while trace.steps.len() < max_new_tokens {
        let q = draft.next_dist(&seq);
        let p = target.next_dist(&seq);
        let pos = Position::new(&q, &p)?;
        let x = q.sample(rng);
        let q_x = q.prob(x);

        let (accepted, score) = match verifier {
            Verifier::Oracle { quality } => (pos.oracle_accepts(x, *quality, rng), None),
            Verifier::Logistic { model } => {
                let s = model.score(&featurize(&q, x, seq.len()));
                (s > model.tau, Some(s))
            }
        };

        if accepted {
            trace.steps.push(StepRecord {
                token: x,
                source: StepSource::DraftAccepted,
                q_x: Some(q_x),
                p_x: None,
                verifier_score: score,
                draft_calls: 1,
                target_calls: 0,
                verifier_calls: 1,
                target_positions: 0,
                round,
            });
            seq.push(x);
            pending_draft = true;
            continue;
        }

        let (token, source) = pos.correct(x, rng);
        trace.steps.push(StepRecord {
            token,
            source,
            q_x: Some(q.prob(token)),
            p_x: Some(p.prob(token)),
            verifier_score: score,
            draft_calls: 1,
            target_calls: 1,
            verifier_calls: 1,
            target_positions: 1,
            round,
        });
        seq.push(token);
        round += 1;
        pending_draft = false;
    }

    trace.unverified_tail = pending_draft;
    trace.finish(start.elapsed().as_secs_f64());
    Ok(trace)
}

use std::time::Instant;

use rand::Rng;

use crate::dist::TokenId;
use crate::engine::trace::{Method, RunSettings, RunTrace, StepRecord, StepSource};
use crate::engine::CostModel;
use crate::error::Result;
use crate::lm::LanguageModel;

/// Plain autoregressive sampling from the target, one call per token.
pub fn run_target_only<T, R>(
    target: &T,
    prefix: &[TokenId],
    max_new_tokens: usize,
    cost: &CostModel,
    rng: &mut R,
) -> Result<RunTrace>
where
    T: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    cost.validate()?;
    let start = Instant::now();
    let settings = RunSettings {
        prefix_len: prefix.len(),
        max_new_tokens,
        gamma: None,
        verifier: None,
    };
    let mut trace = RunTrace::new(Method::TargetOnly, settings, *cost);
    let mut seq = prefix.to_vec();
    for i in 0..max_new_tokens {
        let p = target.next_dist(&seq);
        let x = p.sample(rng);
        trace.steps.push(StepRecord {
            token: x,
            source: StepSource::TargetSampled,
            q_x: None,
            p_x: Some(p.prob(x)),
            verifier_score: None,
            draft_calls: 0,
            target_calls: 1,
            verifier_calls: 0,
            target_positions: 1,
            round: i as u64,
        });
        seq.push(x);
    }
    trace.finish(start.elapsed().as_secs_f64());
    Ok(trace)
}

use std::time::Instant;

use rand::Rng;

use crate::dist::TokenId;
use crate::engine::kernel::Position;
use crate::engine::trace::{Method, RunSettings, RunTrace, StepRecord, StepSource};
use crate::engine::{check_vocab, CostModel};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;

/// Standard speculative decoding.
///
/// Each round drafts `g = min(γ, remaining)` tokens, then scores them with a
/// single parallel target call. Positions are checked in order, keeping each
/// with probability `min(1, p/q)`; the first failure is replaced by a residual
/// sample and ends the round. A fully accepted round earns a bonus token from
/// the target when budget remains.
///
/// A round costs `g` draft calls, one target call of latency and `g` target
/// positions of FLOPs, all charged to the round's last emitted token.
pub fn run_sd<D, T, R>(
    draft: &D,
    target: &T,
    prefix: &[TokenId],
    gamma: usize,
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
    if gamma == 0 {
        return Err(Error::invalid("gamma must be at least 1"));
    }
    let start = Instant::now();
    let settings = RunSettings {
        prefix_len: prefix.len(),
        max_new_tokens,
        gamma: Some(gamma),
        verifier: None,
    };
    let mut trace = RunTrace::new(Method::Sd, settings, *cost);
    let mut seq = prefix.to_vec();
    let mut round = 0u64;

    while trace.steps.len() < max_new_tokens {
        let g = gamma.min(max_new_tokens - trace.steps.len());
        let base = seq.len();

        let mut drafts = Vec::with_capacity(g);
        for _ in 0..g {
            let q = draft.next_dist(&seq);
            let x = q.sample(rng);
            seq.push(x);
            drafts.push((x, q));
        }
        seq.truncate(base);

        let mut emitted = Vec::with_capacity(g + 1);
        let mut all_accepted = true;
        for (x, q) in &drafts {
            let p = target.next_dist(&seq);
            let (token, source) = Position::new(q, &p)?.correct(*x, rng);
            emitted.push((token, source, Some(q.prob(token)), p.prob(token)));
            seq.push(token);
            if source == StepSource::TargetResampled {
                all_accepted = false;
                break;
            }
        }
        if all_accepted && trace.steps.len() + emitted.len() < max_new_tokens {
            let p = target.next_dist(&seq);
            let y = p.sample(rng);
            emitted.push((y, StepSource::TargetSampled, None, p.prob(y)));
            seq.push(y);
        }

        let last = emitted.len() - 1;
        for (i, (token, source, q_x, p_x)) in emitted.into_iter().enumerate() {
            let charged = i == last;
            trace.steps.push(StepRecord {
                token,
                source,
                q_x,
                p_x: Some(p_x),
                verifier_score: None,
                draft_calls: if charged { g as u64 } else { 0 },
                target_calls: charged as u64,
                verifier_calls: 0,
                target_positions: if charged { g as u64 } else { 0 },
                round,
            });
        }
        round += 1;
    }

    trace.finish(start.elapsed().as_secs_f64());
    Ok(trace)
}

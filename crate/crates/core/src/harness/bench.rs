use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dist::{RngStream, TokenId};
use crate::engine::{run_sd, run_sprinter, run_target_only, CostModel, Method, RunTrace, Verifier, ORACLE_LAMBDA};
use crate::error::{Error, Result};
use crate::harness::rouge::{rouge, RougeVariant};
use crate::lm::{perplexity_with_context, LanguageModel};
use crate::verifier::ground_truth_label;

const COMPONENT_REFERENCE: u8 = 10;
const COMPONENT_SD: u8 = 11;
const COMPONENT_SPRINTER: u8 = 12;
const COMPONENT_PROFILE: u8 = 13;

/// Bumped whenever the report layout changes.
pub const BENCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Draft length per speculative round.
    pub gamma: usize,
    pub max_new_tokens: usize,
    pub cost: CostModel,
    pub verifier: Verifier,
}

/// Aggregates for one decoding method over all prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub tokens: u64,
    /// Draft-proposed tokens kept per draft–verify round.
    pub avg_accepted_per_round: f64,
    /// Mean over prompts of simulated time per generated token.
    pub time_per_token_mean: f64,
    pub time_per_token_std: f64,
    pub simulated_time: f64,
    /// Speculative decoding's total simulated time divided by this method's.
    pub speedup: f64,
    pub flops: f64,
    pub draft_calls: u64,
    pub target_calls: u64,
    pub verifier_calls: u64,
    /// Mean F1 against the target-only completion of the same prompt.
    pub rouge1_f1: f64,
    pub rouge2_f1: f64,
    pub rougel_f1: f64,
    /// Target-model perplexity of the completions given their prompts.
    pub perplexity: f64,
}

/// Per-position acceptability of free-running draft samples under the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RProfile {
    /// Fraction of prompts whose `i`-th draft token satisfies `q(x) ≤ p(x)`.
    pub acceptable_by_position: Vec<f64>,
    /// `first_unacceptable[i]` counts prompts whose first unacceptable token is
    /// at position `i`; the last slot counts prompts with none.
    pub first_unacceptable: Vec<u64>,
    /// Mean leading run of acceptable tokens.
    pub mean_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub seed: u64,
    pub prompts: usize,
    pub config: BenchConfig,
    /// Speculative decoding, sequential verification, target-only, in that order.
    pub rows: Vec<MethodRow>,
    pub r_profile: RProfile,
}

pub const BENCH_CSV_HEADER: &str = "method,tokens,avg_accepted_per_round,time_per_token_mean,time_per_token_std,simulated_time,speedup,flops,draft_calls,target_calls,verifier_calls,rouge1_f1,rouge2_f1,rougel_f1,perplexity";

impl BenchReport {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{BENCH_CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.method.name(),
                r.tokens,
                r.avg_accepted_per_round,
                r.time_per_token_mean,
                r.time_per_token_std,
                r.simulated_time,
                r.speedup,
                r.flops,
                r.draft_calls,
                r.target_calls,
                r.verifier_calls,
                r.rouge1_f1,
                r.rouge2_f1,
                r.rougel_f1,
                r.perplexity
            );
        }
        out
    }
}

/// All traces of one benchmark, indexed `[method][prompt]`.
pub struct BenchTraces {
    pub sd: Vec<RunTrace>,
    pub sprinter: Vec<RunTrace>,
    pub target_only: Vec<RunTrace>,
}

/// Runs speculative decoding, sequential verification and target-only
/// decoding on every prompt and aggregates the results.
///
/// Each prompt and method draws from its own stream derived from `seed`.
pub fn benchmark<D, T>(
    draft: &D,
    target: &T,
    prompts: &[Vec<TokenId>],
    cfg: &BenchConfig,
    seed: u64,
) -> Result<(BenchReport, BenchTraces)>
where
    D: LanguageModel + ?Sized,
    T: LanguageModel + ?Sized,
{
    if prompts.is_empty() {
        return Err(Error::EmptyPrompts);
    }
    if cfg.max_new_tokens == 0 {
        return Err(Error::invalid("max_new_tokens must be at least 1"));
    }
    let mut traces = BenchTraces {
        sd: Vec::with_capacity(prompts.len()),
        sprinter: Vec::with_capacity(prompts.len()),
        target_only: Vec::with_capacity(prompts.len()),
    };
    for (i, prompt) in prompts.iter().enumerate() {
        let i = i as u64;
        let n = cfg.max_new_tokens;
        traces.target_only.push(run_target_only(
            target,
            prompt,
            n,
            &cfg.cost,
            &mut RngStream::for_trial(seed, i, COMPONENT_REFERENCE),
        )?);
        traces.sd.push(run_sd(
            draft,
            target,
            prompt,
            cfg.gamma,
            n,
            &cfg.cost,
            &mut RngStream::for_trial(seed, i, COMPONENT_SD),
        )?);
        traces.sprinter.push(run_sprinter(
            draft,
            target,
            &cfg.verifier,
            prompt,
            n,
            &cfg.cost,
            &mut RngStream::for_trial(seed, i, COMPONENT_SPRINTER),
        )?);
    }

    let references: Vec<Vec<TokenId>> = traces.target_only.iter().map(RunTrace::tokens).collect();
    let sd_time: f64 = traces.sd.iter().map(|t| t.totals.simulated_time).sum();
    let rows = [&traces.sd, &traces.sprinter, &traces.target_only]
        .into_iter()
        .map(|runs| method_row(target, prompts, runs, &references, sd_time))
        .collect::<Result<Vec<_>>>()?;

    let report = BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        seed,
        prompts: prompts.len(),
        config: cfg.clone(),
        rows,
        r_profile: r_profile(draft, target, prompts, cfg.max_new_tokens, seed)?,
    };
    Ok((report, traces))
}

fn method_row<T: LanguageModel + ?Sized>(
    target: &T,
    prompts: &[Vec<TokenId>],
    runs: &[RunTrace],
    references: &[Vec<TokenId>],
    sd_time: f64,
) -> Result<MethodRow> {
    let method = runs[0].method;
    let mut row = MethodRow {
        method,
        tokens: 0,
        avg_accepted_per_round: 0.0,
        time_per_token_mean: 0.0,
        time_per_token_std: 0.0,
        simulated_time: 0.0,
        speedup: 0.0,
        flops: 0.0,
        draft_calls: 0,
        target_calls: 0,
        verifier_calls: 0,
        rouge1_f1: 0.0,
        rouge2_f1: 0.0,
        rougel_f1: 0.0,
        perplexity: 0.0,
    };
    let (mut accepted, mut rounds) = (0u64, 0u64);
    let mut per_token = Vec::with_capacity(runs.len());
    let mut nll = 0.0;
    for ((run, prompt), reference) in runs.iter().zip(prompts).zip(references) {
        let t = &run.totals;
        row.tokens += t.tokens;
        row.simulated_time += t.simulated_time;
        row.flops += t.flops;
        row.draft_calls += t.draft_calls;
        row.target_calls += t.target_calls;
        row.verifier_calls += t.verifier_calls;
        accepted += t.accepted_draft_tokens;
        rounds += t.rounds;
        per_token.push(t.simulated_time / t.tokens as f64);

        let tokens = run.tokens();
        row.rouge1_f1 += rouge(&tokens, reference, RougeVariant::Rouge1)?.f1;
        row.rouge2_f1 += rouge(&tokens, reference, RougeVariant::Rouge2)?.f1;
        row.rougel_f1 += rouge(&tokens, reference, RougeVariant::RougeL)?.f1;
        nll += perplexity_with_context(target, prompt, &tokens)?.ln() * tokens.len() as f64;
    }
    let n = runs.len() as f64;
    row.rouge1_f1 /= n;
    row.rouge2_f1 /= n;
    row.rougel_f1 /= n;
    row.perplexity = (nll / row.tokens as f64).exp();
    row.avg_accepted_per_round = if rounds == 0 { 0.0 } else { accepted as f64 / rounds as f64 };
    row.time_per_token_mean = per_token.iter().sum::<f64>() / n;
    row.time_per_token_std = if per_token.len() > 1 {
        let m = row.time_per_token_mean;
        (per_token.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    row.speedup = if method == Method::Sd {
        1.0
    } else {
        sd_time / row.simulated_time
    };
    Ok(row)
}

/// Rolls the draft forward from each prompt and records where its tokens
/// stop being acceptable to the target.
pub fn r_profile<D, T>(
    draft: &D,
    target: &T,
    prompts: &[Vec<TokenId>],
    length: usize,
    seed: u64,
) -> Result<RProfile>
where
    D: LanguageModel + ?Sized,
    T: LanguageModel + ?Sized,
{
    if prompts.is_empty() {
        return Err(Error::EmptyPrompts);
    }
    let mut acceptable = vec![0u64; length];
    let mut first = vec![0u64; length + 1];
    for (i, prompt) in prompts.iter().enumerate() {
        let mut rng = RngStream::for_trial(seed, i as u64, COMPONENT_PROFILE);
        let mut seq = prompt.clone();
        let mut first_bad = length;
        for (pos, slot) in acceptable.iter_mut().enumerate() {
            let q = draft.next_dist(&seq);
            let x = q.sample(&mut rng);
            let ok = ground_truth_label(q.prob(x), target.next_dist(&seq).prob(x), ORACLE_LAMBDA);
            *slot += ok as u64;
            if !ok && first_bad == length {
                first_bad = pos;
            }
            seq.push(x);
        }
        first[first_bad] += 1;
    }
    let n = prompts.len() as f64;
    let mean_r = first.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum::<f64>() / n;
    Ok(RProfile {
        acceptable_by_position: acceptable.iter().map(|&c| c as f64 / n).collect(),
        first_unacceptable: first,
        mean_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::CategoricalDist;
    use crate::lm::SyntheticModel;
    use crate::verifier::VerifierQuality;

    fn cfg(verifier: Verifier) -> BenchConfig {
        BenchConfig {
            gamma: 4,
            max_new_tokens: 20,
            cost: CostModel::default(),
            verifier,
        }
    }

    fn prompts() -> Vec<Vec<TokenId>> {
        (0..6).map(|i| vec![i % 3, 1]).collect()
    }

    #[test]
    fn identical_models_always_accept() {
        let m = SyntheticModel::fixed(CategoricalDist::new(vec![0.2, 0.3, 0.5]).unwrap());
        let c = cfg(Verifier::oracle(VerifierQuality::new(1.0, 1.0).unwrap()));
        let (report, traces) = benchmark(&m, &m, &prompts(), &c, 1).unwrap();
        let cost = c.cost;
        let n = c.max_new_tokens as f64;
        let sprinter = report.row(Method::Sprinter).unwrap();
        // no target call at all: the whole completion is one unverified block
        assert_eq!(sprinter.target_calls, 0);
        assert!((sprinter.time_per_token_mean - (cost.t_d + cost.t_v)).abs() < 1e-12);
        // γ = 4 with a bonus each round: 4 rounds per 20 tokens
        let sd = report.row(Method::Sd).unwrap();
        let sd_time = 4.0 * (4.0 * cost.t_d + cost.t_t);
        assert!((sd.time_per_token_mean - sd_time / n).abs() < 1e-12);
        assert!((sprinter.speedup - sd_time / (n * (cost.t_d + cost.t_v))).abs() < 1e-9);
        assert!(sprinter.speedup > 1.0);
        assert_eq!(sd.speedup, 1.0);
        assert_eq!(traces.sd.len(), 6);
        assert_eq!(report.r_profile.mean_r, 20.0);
    }

    #[test]
    fn speedups_recompute_from_traces() {
        let q = SyntheticModel::fixed(CategoricalDist::new(vec![0.5, 0.3, 0.2]).unwrap());
        let p = SyntheticModel::fixed(CategoricalDist::new(vec![0.3, 0.3, 0.4]).unwrap());
        let c = cfg(Verifier::oracle(VerifierQuality::new(0.9, 0.1).unwrap()));
        let (report, traces) = benchmark(&q, &p, &prompts(), &c, 2).unwrap();
        let total = |ts: &[RunTrace]| ts.iter().map(|t| t.totals.simulated_time).sum::<f64>();
        let sd = total(&traces.sd);
        assert_eq!(report.row(Method::Sprinter).unwrap().speedup, sd / total(&traces.sprinter));
        assert_eq!(report.row(Method::TargetOnly).unwrap().speedup, sd / total(&traces.target_only));
        assert_eq!(report.row(Method::TargetOnly).unwrap().rouge1_f1, 1.0);
        let order: Vec<Method> = report.rows.iter().map(|r| r.method).collect();
        assert_eq!(order, vec![Method::Sd, Method::Sprinter, Method::TargetOnly]);
    }

    #[test]
    fn reproducible_outputs() {
        let q = SyntheticModel::fixed(CategoricalDist::new(vec![0.5, 0.3, 0.2]).unwrap());
        let p = SyntheticModel::fixed(CategoricalDist::new(vec![0.3, 0.3, 0.4]).unwrap());
        let c = cfg(Verifier::oracle(VerifierQuality::new(0.9, 0.1).unwrap()));
        let a = benchmark(&q, &p, &prompts(), &c, 3).unwrap().0;
        let b = benchmark(&q, &p, &prompts(), &c, 3).unwrap().0;
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with(BENCH_CSV_HEADER));
        assert_eq!(a.to_csv().lines().count(), 4);
    }

    #[test]
    fn rejects_empty_inputs() {
        let m = SyntheticModel::fixed(CategoricalDist::uniform(2));
        let c = cfg(Verifier::oracle(VerifierQuality::PERFECT));
        assert!(matches!(benchmark(&m, &m, &[], &c, 0), Err(Error::EmptyPrompts)));
        let zero = BenchConfig {
            max_new_tokens: 0,
            ..c
        };
        assert!(benchmark(&m, &m, &prompts(), &zero, 0).is_err());
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::engine::{CostModel, Verifier};
use crate::error::{Error, Result};

/// Bumped whenever the JSON-lines layout changes.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sprinter,
    Sd,
    TargetOnly,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sprinter => "sprinter",
            Method::Sd => "sd",
            Method::TargetOnly => "target-only",
        }
    }
}

/// Where an emitted token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSource {
    /// Draft token accepted by the verifier; the target was not consulted.
    DraftAccepted,
    /// Draft token that the target checked and kept with probability `min(1, p/q)`.
    TargetKept,
    /// Replacement drawn from the residual `norm(max(0, p − q))` after a rejection.
    TargetResampled,
    /// Drawn directly from the target: plain decoding or the bonus token of a
    /// fully accepted speculative round.
    TargetSampled,
}

impl StepSource {
    /// True when the emitted token was proposed by the draft model.
    pub fn from_draft(self) -> bool {
        matches!(self, StepSource::DraftAccepted | StepSource::TargetKept)
    }
}

/// One emitted token and the model calls charged to it.
///
/// Calls made within a speculative round are charged to the round's last
/// emitted token, so per-step counts sum to the run totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub token: TokenId,
    pub source: StepSource,
    /// Draft probability of `token`, when the draft proposed or evaluated it.
    pub q_x: Option<f64>,
    /// Target probability of `token`, when the target was consulted.
    pub p_x: Option<f64>,
    /// Logistic verifier score, when one was computed.
    pub verifier_score: Option<f64>,
    pub draft_calls: u64,
    pub target_calls: u64,
    pub verifier_calls: u64,
    /// Sequence positions scored by target calls; drives target FLOPs.
    pub target_positions: u64,
    /// Zero-based index of the draft–verify round this token belongs to.
    pub round: u64,
}

/// Run-level sums over a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub tokens: u64,
    pub draft_calls: u64,
    pub target_calls: u64,
    pub verifier_calls: u64,
    pub target_positions: u64,
    /// Emitted tokens proposed by the draft model.
    pub accepted_draft_tokens: u64,
    /// Draft–verify rounds, counting an unverified trailing block as a round.
    pub rounds: u64,
    pub simulated_time: f64,
    pub flops: f64,
}

/// Inputs that shaped a run, recorded for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub prefix_len: usize,
    pub max_new_tokens: usize,
    pub gamma: Option<usize>,
    pub verifier: Option<Verifier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: Method,
    pub settings: RunSettings,
    pub cost: CostModel,
    pub steps: Vec<StepRecord>,
    pub totals: Totals,
    /// Set when generation stopped on the budget with draft tokens the target never saw.
    pub unverified_tail: bool,
    /// Host seconds spent in the run; not part of any exported file.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Line {
    Step(StepRecord),
    Totals(TotalsLine),
}

#[derive(Serialize, Deserialize)]
struct TotalsLine {
    schema_version: u32,
    method: Method,
    settings: RunSettings,
    cost: CostModel,
    unverified_tail: bool,
    totals: Totals,
}

impl RunTrace {
    pub(crate) fn new(method: Method, settings: RunSettings, cost: CostModel) -> Self {
        Self {
            method,
            settings,
            cost,
            steps: Vec::new(),
            totals: Totals::default(),
            unverified_tail: false,
            wall_time: 0.0,
        }
    }

    /// Recomputes [`Totals`] from the steps.
    pub(crate) fn finish(&mut self, wall_time: f64) {
        self.totals = Self::sum(&self.steps, &self.cost, self.unverified_tail);
        self.wall_time = wall_time;
    }

    fn sum(steps: &[StepRecord], cost: &CostModel, unverified_tail: bool) -> Totals {
        let mut t = Totals {
            tokens: steps.len() as u64,
            ..Totals::default()
        };
        for s in steps {
            t.draft_calls += s.draft_calls;
            t.target_calls += s.target_calls;
            t.verifier_calls += s.verifier_calls;
            t.target_positions += s.target_positions;
            t.accepted_draft_tokens += s.source.from_draft() as u64;
        }
        t.rounds = t.target_calls + unverified_tail as u64;
        t.simulated_time = t.draft_calls as f64 * cost.t_d
            + t.target_calls as f64 * cost.t_t
            + t.verifier_calls as f64 * cost.t_v;
        t.flops = t.draft_calls as f64 * cost.f_d
            + t.target_positions as f64 * cost.f_t
            + t.verifier_calls as f64 * cost.f_v;
        t
    }

    pub fn tokens(&self) -> Vec<TokenId> {
        self.steps.iter().map(|s| s.token).collect()
    }

    /// Accepted draft tokens per round; zero for runs without rounds.
    pub fn accepted_per_round(&self) -> f64 {
        if self.totals.rounds == 0 {
            0.0
        } else {
            self.totals.accepted_draft_tokens as f64 / self.totals.rounds as f64
        }
    }

    /// Checks that the stored totals equal the sums over steps.
    pub fn check_totals(&self) -> Result<()> {
        let expected = Self::sum(&self.steps, &self.cost, self.unverified_tail);
        if expected == self.totals {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "trace totals {:?} disagree with step sums {:?}",
                self.totals, expected
            )))
        }
    }

    /// One JSON object per step, then a totals record carrying the schema version.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let line = serde_json::to_string(&Line::Step(s.clone())).expect("step serializes");
            let _ = writeln!(out, "{line}");
        }
        let totals = Line::Totals(TotalsLine {
            schema_version: TRACE_SCHEMA_VERSION,
            method: self.method,
            settings: self.settings.clone(),
            cost: self.cost,
            unverified_tail: self.unverified_tail,
            totals: self.totals,
        });
        let _ = writeln!(out, "{}", serde_json::to_string(&totals).expect("totals serialize"));
        out
    }

    /// Parses [`RunTrace::to_jsonl`] output; `wall_time` comes back as zero.
    pub fn from_jsonl(text: &str, path: &std::path::Path) -> Result<Self> {
        let mut steps = Vec::new();
        let mut tail = None;
        for (n, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            if tail.is_some() {
                return Err(Error::format(path, format!("line {}: data after totals record", n + 1)));
            }
            let line: Line = serde_json::from_str(raw)
                .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
            match line {
                Line::Step(s) => steps.push(s),
                Line::Totals(t) => tail = Some(t),
            }
        }
        let t = tail.ok_or_else(|| Error::format(path, "missing totals record"))?;
        if t.schema_version != TRACE_SCHEMA_VERSION {
            return Err(Error::format(
                path,
                format!("trace schema {} is not {TRACE_SCHEMA_VERSION}", t.schema_version),
            ));
        }
        let trace = RunTrace {
            method: t.method,
            settings: t.settings,
            cost: t.cost,
            steps,
            totals: t.totals,
            unverified_tail: t.unverified_tail,
            wall_time: 0.0,
        };
        trace.check_totals().map_err(|e| Error::format(path, e.to_string()))?;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn step(source: StepSource, d: u64, t: u64, v: u64) -> StepRecord {
        StepRecord {
            token: 1,
            source,
            q_x: Some(0.25),
            p_x: None,
            verifier_score: None,
            draft_calls: d,
            target_calls: t,
            verifier_calls: v,
            target_positions: t,
            round: 0,
        }
    }

    fn sample_trace() -> RunTrace {
        let settings = RunSettings {
            prefix_len: 3,
            max_new_tokens: 3,
            gamma: None,
            verifier: None,
        };
        let mut tr = RunTrace::new(Method::Sprinter, settings, CostModel::default());
        tr.steps = vec![
            step(StepSource::DraftAccepted, 1, 0, 1),
            step(StepSource::TargetResampled, 1, 1, 1),
            step(StepSource::DraftAccepted, 1, 0, 1),
        ];
        tr.unverified_tail = true;
        tr.finish(0.5);
        tr
    }

    #[test]
    fn totals_and_identity() {
        let tr = sample_trace();
        assert_eq!(tr.totals.draft_calls, 3);
        assert_eq!(tr.totals.target_calls, 1);
        assert_eq!(tr.totals.rounds, 2);
        assert_eq!(tr.totals.accepted_draft_tokens, 2);
        assert_eq!(tr.totals.simulated_time, 3.0 * 1.0 + 10.0 + 3.0 * 0.05);
        assert_eq!(tr.accepted_per_round(), 1.0);
        assert!(tr.check_totals().is_ok());
    }

    #[test]
    fn jsonl_round_trip_drops_wall_time() {
        let tr = sample_trace();
        let text = tr.to_jsonl();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains("wall_time"));
        assert!(text.lines().last().unwrap().contains("\"schema_version\":1"));
        let back = RunTrace::from_jsonl(&text, Path::new("t")).unwrap();
        assert_eq!(back.steps, tr.steps);
        assert_eq!(back.totals, tr.totals);
        assert_eq!(back.wall_time, 0.0);
    }

    #[test]
    fn jsonl_rejects_tampering() {
        let text = sample_trace().to_jsonl();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(0);
        assert!(RunTrace::from_jsonl(&lines.join("\n"), Path::new("t")).is_err());
        let no_totals: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(RunTrace::from_jsonl(&no_totals, Path::new("t")).is_err());
    }
}

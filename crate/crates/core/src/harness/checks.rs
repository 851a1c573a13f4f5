use serde::{Deserialize, Serialize};

use crate::dist::tv_distance;
use crate::engine::CostModel;
use crate::error::Result;
use crate::harness::consistency::{
    random_battery, sd_single_token, sprinter_single_token, validate_acceptance_rate, validate_token_distribution,
};
use crate::harness::curves::{validate_r_grid, GridConfig, GridReport};
use crate::theory::{acceptance_rate_sd, acceptance_rate_sprinter, flops_savings, flops_sd, flops_sprinter};
use crate::verifier::VerifierQuality;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            passed,
            detail,
        }
    }
}

/// Sizes and tolerances of the theory-versus-simulation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    /// Random `(p, q)` pairs, vocabulary sizes cycling through 2, 4, 8, 16.
    pub battery_pairs: usize,
    /// False-positive rates applied to every pair.
    pub eta_fp: Vec<f64>,
    /// True-positive rate of the oracle; the single-token marginals do not depend on it.
    pub eta_tp: f64,
    pub token_samples: u64,
    pub token_tv_tol: f64,
    pub accept_samples: u64,
    pub accept_tol: f64,
    pub consistency_runs: u64,
    pub consistency_tol: f64,
    /// Draft length for the speculative-decoding consistency runs.
    pub gamma: usize,
    pub grid: GridConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            battery_pairs: 20,
            eta_fp: (0..=10).map(|i| i as f64 / 10.0).collect(),
            eta_tp: 0.8,
            token_samples: 1_000_000,
            token_tv_tol: 0.01,
            accept_samples: 100_000,
            accept_tol: 0.01,
            consistency_runs: 100_000,
            consistency_tol: 0.015,
            gamma: 4,
            grid: GridConfig::default(),
        }
    }
}

/// Single-token law of every battery instance against `(1 − η_FP)·p + η_FP·q`,
/// and the measured distance to `p` against `η_FP·d_TV(p, q)`.
pub fn check_token_distribution(cfg: &SuiteConfig, seed: u64) -> Result<CheckOutcome> {
    let (mut worst_mix, mut worst_shift, mut failures) = (0.0f64, 0.0f64, 0usize);
    let mut instances = 0usize;
    for (i, (p, q)) in random_battery(cfg.battery_pairs, seed).iter().enumerate() {
        for (j, &fp) in cfg.eta_fp.iter().enumerate() {
            let quality = VerifierQuality::new(cfg.eta_tp, fp)?;
            let c = validate_token_distribution(p, q, quality, cfg.token_samples, instance_seed(seed, i, j))?;
            let shift = (c.tv_to_target - c.expected_tv_to_target).abs();
            worst_mix = worst_mix.max(c.tv_to_theory);
            worst_shift = worst_shift.max(shift);
            failures += (c.tv_to_theory > cfg.token_tv_tol || shift > cfg.token_tv_tol) as usize;
            instances += 1;
        }
    }
    Ok(CheckOutcome::new(
        "token-distribution",
        failures == 0,
        format!(
            "{instances} instances x {} samples: max TV to mixture {worst_mix:.5}, max |TV(p,emp) - eta_fp*TV(p,q)| {worst_shift:.5} (tol {}), {failures} failing",
            cfg.token_samples, cfg.token_tv_tol
        ),
    ))
}

/// Per-draft-token acceptance against `1 − (1 − η_FP)·d_TV(p, q)` on the battery,
/// plus the ordering of the two closed-form rates.
pub fn check_acceptance_rate(cfg: &SuiteConfig, seed: u64) -> Result<CheckOutcome> {
    let (mut worst, mut failures, mut order_violations, mut instances) = (0.0f64, 0usize, 0usize, 0usize);
    for (i, (p, q)) in random_battery(cfg.battery_pairs, seed).iter().enumerate() {
        for (j, &fp) in cfg.eta_fp.iter().enumerate() {
            let quality = VerifierQuality::new(cfg.eta_tp, fp)?;
            let c = validate_acceptance_rate(p, q, quality, cfg.accept_samples, instance_seed(seed, i, j))?;
            let err = (c.beta_empirical - c.beta_theory).abs();
            worst = worst.max(err);
            failures += (err > cfg.accept_tol) as usize;
            order_violations += (acceptance_rate_sprinter(p, q, fp)? < acceptance_rate_sd(p, q)?) as usize;
            instances += 1;
        }
    }
    Ok(CheckOutcome::new(
        "acceptance-rate",
        failures == 0 && order_violations == 0,
        format!(
            "{instances} instances x {} samples: max |beta_emp - beta_theory| {worst:.5} (tol {}), {failures} failing, {order_violations} with beta_sprinter < beta_sd",
            cfg.accept_samples, cfg.accept_tol
        ),
    ))
}

/// First-token law of full speculative-decoding runs and of sequential
/// verification with a zero false-positive oracle, each against `p`.
pub fn check_consistency(cfg: &SuiteConfig, seed: u64) -> Result<CheckOutcome> {
    let (mut worst_sd, mut worst_sp, mut failures) = (0.0f64, 0.0f64, 0usize);
    let battery = random_battery(cfg.battery_pairs, seed);
    let quality = VerifierQuality::new(cfg.eta_tp, 0.0)?;
    for (i, (p, q)) in battery.iter().enumerate() {
        let sd = tv_distance(&sd_single_token(p, q, cfg.gamma, cfg.consistency_runs, instance_seed(seed, i, 100))?, p)?;
        let sp = tv_distance(
            &sprinter_single_token(p, q, quality, cfg.consistency_runs, instance_seed(seed, i, 101))?,
            p,
        )?;
        worst_sd = worst_sd.max(sd);
        worst_sp = worst_sp.max(sp);
        failures += (sd > cfg.consistency_tol) as usize + (sp > cfg.consistency_tol) as usize;
    }
    Ok(CheckOutcome::new(
        "statistical-consistency",
        failures == 0,
        format!(
            "{} pairs x {} runs: max TV(sd, p) {worst_sd:.5}, max TV(sprinter eta_fp=0, p) {worst_sp:.5} (tol {}), {failures} failing",
            battery.len(),
            cfg.consistency_runs,
            cfg.consistency_tol
        ),
    ))
}

/// Runs the r-scenario grid and summarizes it as token-count and stopping-time checks.
pub fn check_grid(cfg: &SuiteConfig, seed: u64) -> Result<(GridReport, CheckOutcome, CheckOutcome)> {
    let g = &cfg.grid;
    let report = validate_r_grid(g, seed)?;
    let tokens = CheckOutcome::new(
        "token-count",
        report.token_count_passed(),
        format!(
            "{} points x {} trials: {} means outside {:.2}se (max |z| {:.2}; {} beyond {}se, {:.2} expected by chance), {} pmf TV > {} (max {:.5}); gap claim r={} eta_fp<={}: max E[N] gap {:.5} <= 1: {}",
            report.rows.len(),
            g.trials,
            report.token_mean_failures.len(),
            report.point_sigmas,
            report.max_abs_z_tokens,
            report.token_points_beyond_sigmas,
            g.sigmas,
            report.expected_beyond_sigmas,
            report.pmf_failures.len(),
            g.pmf_tv_tol,
            report.max_pmf_tv,
            g.gap_r,
            g.gap_max_eta_fp,
            report.max_token_gap,
            report.token_gap_holds
        ),
    );
    let time = CheckOutcome::new(
        "stopping-time",
        report.stop_time_passed(),
        format!(
            "{} points x {} trials (t_d={}, t_v=0): {} means outside {:.2}se (max |z| {:.2}; {} beyond {}se, {:.2} expected by chance); gap claim: max E[T] gap {:.5} <= t_d: {}",
            report.rows.len(),
            g.trials,
            g.t_d,
            report.stop_time_failures.len(),
            report.point_sigmas,
            report.max_abs_z_time,
            report.time_points_beyond_sigmas,
            g.sigmas,
            report.expected_beyond_sigmas,
            report.max_time_gap,
            report.time_gap_holds
        ),
    );
    Ok((report, tokens, time))
}

/// Per-token FLOPs of a reference draft/target pair, from budgets of 8.01B and 64.66B per 20 tokens.
pub const REFERENCE_DRAFT_FLOPS_PER_TOKEN: f64 = 8.01e9 / 20.0;
pub const REFERENCE_TARGET_FLOPS_PER_TOKEN: f64 = 64.66e9 / 20.0;

/// The FLOPs formulas at `γ = 20` with the per-token rates above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopsComparison {
    pub gamma: u32,
    pub sd: f64,
    pub sprinter: f64,
    pub ratio: f64,
}

pub fn reference_flops_comparison() -> FlopsComparison {
    let cost = CostModel {
        f_d: REFERENCE_DRAFT_FLOPS_PER_TOKEN,
        f_t: REFERENCE_TARGET_FLOPS_PER_TOKEN,
        f_v: 0.0,
        ..CostModel::default()
    };
    let sd = flops_sd(20, &cost);
    let sprinter = flops_sprinter(20, &cost);
    FlopsComparison {
        gamma: 20,
        sd,
        sprinter,
        ratio: sd / sprinter,
    }
}

/// FLOPs formulas, their savings identity, and the reference-rate substitution.
pub fn check_flops() -> CheckOutcome {
    let cost = CostModel::default();
    let identity = (1..=64).all(|g| {
        let gf = g as f64;
        let savings = (gf - 1.0) * cost.f_t - gf * cost.f_v;
        (flops_savings(g, &cost) - savings).abs() <= 1e-9 * savings.abs().max(1.0)
    });
    let t = reference_flops_comparison();
    let matches = (t.sd - 72.67e9).abs() <= 0.01e9 && (t.sprinter - 11.24e9).abs() <= 0.01e9;
    CheckOutcome::new(
        "flops",
        identity && matches,
        format!(
            "savings identity {}; gamma=20 with 8.01B/64.66B per 20 tokens: SD {:.4e} vs SPRINTER {:.4e} (ratio {:.3}x)",
            if identity { "holds" } else { "violated" },
            t.sd,
            t.sprinter,
            t.ratio
        ),
    )
}

fn instance_seed(seed: u64, pair: usize, eta: usize) -> u64 {
    seed.wrapping_add(((pair as u64) << 20) | eta as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            battery_pairs: 4,
            eta_fp: vec![0.0, 0.5, 1.0],
            token_samples: 100_000,
            token_tv_tol: 0.02,
            accept_samples: 20_000,
            accept_tol: 0.02,
            consistency_runs: 20_000,
            consistency_tol: 0.03,
            grid: GridConfig {
                r_values: vec![1, 5],
                eta_tp: vec![0.5, 1.0],
                eta_fp: vec![0.0, 0.5],
                trials: 5000,
                pmf_tv_tol: 0.05,
                ..GridConfig::default()
            },
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn small_suite_passes() {
        let cfg = small();
        assert!(check_token_distribution(&cfg, 1).unwrap().passed);
        assert!(check_acceptance_rate(&cfg, 1).unwrap().passed);
        assert!(check_consistency(&cfg, 1).unwrap().passed);
        let (_, n, t) = check_grid(&cfg, 1).unwrap();
        assert!(n.passed && t.passed, "{n:?} {t:?}");
    }

    #[test]
    fn flops_substitution() {
        let t = reference_flops_comparison();
        assert!((t.sd - 72.67e9).abs() <= 0.01e9);
        assert!((t.sprinter - 11.24e9).abs() <= 0.01e9);
        assert!((t.ratio - 6.46).abs() < 0.01);
        assert!(check_flops().passed);
    }
}

//! `validate-theory`: simulation checks of the closed forms, with tolerances
//! widened like a standard error when run below the default sample sizes.

use std::time::Instant;

use serde::Serialize;
use sprinter_core::harness::{
    check_acceptance_rate, check_consistency, check_flops, check_grid, check_token_distribution, curves_to_csv,
    reference_flops_comparison, CheckOutcome, FlopsComparison, GridConfig, SuiteConfig,
};

use crate::config::Config;
use crate::output::{out_path, write_report, write_text};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CheckName {
    TokenDistribution,
    AcceptanceRate,
    Consistency,
    Grid,
    Flops,
}

const ALL: [CheckName; 5] = [
    CheckName::TokenDistribution,
    CheckName::AcceptanceRate,
    CheckName::Consistency,
    CheckName::Grid,
    CheckName::Flops,
];

#[derive(Serialize)]
struct GridSummary {
    points: usize,
    point_sigmas: f64,
    token_points_beyond_sigmas: usize,
    time_points_beyond_sigmas: usize,
    expected_beyond_sigmas: f64,
    max_abs_z_tokens: f64,
    max_abs_z_time: f64,
    token_mean_failures: Vec<String>,
    stop_time_failures: Vec<String>,
    pmf_failures: Vec<String>,
    max_pmf_tv: f64,
    max_token_gap: f64,
    max_time_gap: f64,
    curves_file: String,
}

#[derive(Serialize)]
struct TheoryReport {
    passed: bool,
    /// The suite after tolerance scaling.
    effective: SuiteConfig,
    checks: Vec<CheckOutcome>,
    grid: Option<GridSummary>,
    flops: FlopsComparison,
}

/// Widens every distance tolerance for sample sizes below the defaults.
pub fn scale_tolerances(cfg: &SuiteConfig) -> SuiteConfig {
    let d = SuiteConfig::default();
    let mut s = cfg.clone();
    s.token_tv_tol = GridConfig::scaled_tv_tol(cfg.token_tv_tol, d.token_samples, cfg.token_samples);
    s.accept_tol = GridConfig::scaled_tv_tol(cfg.accept_tol, d.accept_samples, cfg.accept_samples);
    s.consistency_tol = GridConfig::scaled_tv_tol(cfg.consistency_tol, d.consistency_runs, cfg.consistency_runs);
    s.grid.pmf_tv_tol = GridConfig::scaled_tv_tol(cfg.grid.pmf_tv_tol, d.grid.trials, cfg.grid.trials);
    s
}

pub fn run(cfg: &Config, only: Option<&[CheckName]>) -> Result<(), CliError> {
    let suite = scale_tolerances(&cfg.theory);
    let selected = only.unwrap_or(&ALL);
    let mut checks = Vec::new();
    let mut grid = None;
    let record = |outcome: CheckOutcome, started: Instant, checks: &mut Vec<CheckOutcome>| {
        println!(
            "{} {}: {} [{:.1} s]",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        checks.push(outcome);
    };
    for name in ALL.into_iter().filter(|n| selected.contains(n)) {
        let started = Instant::now();
        match name {
            CheckName::TokenDistribution => record(check_token_distribution(&suite, cfg.seed)?, started, &mut checks),
            CheckName::AcceptanceRate => record(check_acceptance_rate(&suite, cfg.seed)?, started, &mut checks),
            CheckName::Consistency => record(check_consistency(&suite, cfg.seed)?, started, &mut checks),
            CheckName::Grid => {
                let (report, tokens, time) = check_grid(&suite, cfg.seed)?;
                let curves = out_path(cfg, "theory-curves.csv");
                write_text(&curves, &curves_to_csv(&report.rows))?;
                record(tokens, started, &mut checks);
                record(time, started, &mut checks);
                for f in report.token_mean_failures.iter().chain(&report.stop_time_failures).chain(&report.pmf_failures) {
                    println!("  outside tolerance: {f}");
                }
                grid = Some(GridSummary {
                    points: report.rows.len(),
                    point_sigmas: report.point_sigmas,
                    token_points_beyond_sigmas: report.token_points_beyond_sigmas,
                    time_points_beyond_sigmas: report.time_points_beyond_sigmas,
                    expected_beyond_sigmas: report.expected_beyond_sigmas,
                    max_abs_z_tokens: report.max_abs_z_tokens,
                    max_abs_z_time: report.max_abs_z_time,
                    token_mean_failures: report.token_mean_failures,
                    stop_time_failures: report.stop_time_failures,
                    pmf_failures: report.pmf_failures,
                    max_pmf_tv: report.max_pmf_tv,
                    max_token_gap: report.max_token_gap,
                    max_time_gap: report.max_time_gap,
                    curves_file: curves.display().to_string(),
                });
            }
            CheckName::Flops => record(check_flops(), started, &mut checks),
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let report = TheoryReport {
        passed: failed == 0,
        effective: suite,
        checks,
        grid,
        flops: reference_flops_comparison(),
    };
    let path = write_report(cfg, "validate-theory", "validate-theory.json", report)?;
    println!("report: {}", path.display());
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_widen_only_below_defaults() {
        let base = SuiteConfig::default();
        assert_eq!(scale_tolerances(&base), base);
        let mut small = base.clone();
        small.grid.trials = 100;
        let s = scale_tolerances(&small);
        assert!((s.grid.pmf_tv_tol - 0.01 * 1000f64.sqrt()).abs() < 1e-12);
        let mut big = base.clone();
        big.token_samples = 4_000_000;
        assert_eq!(scale_tolerances(&big).token_tv_tol, base.token_tv_tol);
    }
}

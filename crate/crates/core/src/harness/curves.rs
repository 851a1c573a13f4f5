use std::fmt::Write as _;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::harness::rscenario::{simulate_r_scenario, RScenario};
use crate::theory::{expected_stop_time, expected_tokens, token_count_pmf, token_count_tail, ScenarioParams};

/// One grid point of the token-count and stopping-time curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub r: u32,
    pub eta_tp: f64,
    pub eta_fp: f64,
    pub en_theory: f64,
    pub en_sim: f64,
    /// Standard error of `en_sim` under the closed-form distribution.
    pub en_se: f64,
    pub et_theory: f64,
    pub et_sim: f64,
    pub et_se: f64,
    pub pmf_tv: f64,
    /// `E[N](η_TP, η_FP) − E[N](η_TP, 0)` from the closed form.
    pub en_gap: f64,
    /// `E[T](η_TP, η_FP) − E[T](η_TP, 0)` from the closed form.
    pub et_gap: f64,
}

pub const CURVE_CSV_HEADER: &str =
    "r,eta_tp,eta_fp,en_theory,en_sim,en_se,et_theory,et_sim,et_se,pmf_tv,en_gap,et_gap";

/// Renders rows as CSV with [`CURVE_CSV_HEADER`].
pub fn curves_to_csv(rows: &[CurveRow]) -> String {
    let mut out = format!("{CURVE_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.r,
            r.eta_tp,
            r.eta_fp,
            r.en_theory,
            r.en_sim,
            r.en_se,
            r.et_theory,
            r.et_sim,
            r.et_se,
            r.pmf_tv,
            r.en_gap,
            r.et_gap
        );
    }
    out
}

/// Variance of the token count, summed from the pmf until the tail is negligible.
pub fn token_count_variance(params: &ScenarioParams) -> Result<f64> {
    let mean = expected_tokens(params)?;
    let mut second = 0.0;
    let mut i = 0u64;
    while token_count_tail(params, i) > 1e-16 {
        let p = token_count_pmf(params, i);
        second += (i as f64) * (i as f64) * p;
        i += 1;
    }
    Ok((second - mean * mean).max(0.0))
}

/// Seed for grid point `index`, derived so points never share trial streams.
fn point_seed(seed: u64, index: u64) -> u64 {
    RngStream::new(seed, u64::MAX - index).next_u64()
}

/// Evaluates the closed forms and the Monte Carlo simulation on a grid.
///
/// Rows are ordered by `η_FP` (outer) then `η_TP` (inner). Stopping times use
/// zero verifier time, matching the closed form.
pub fn sweep_theory_curves(
    r: u32,
    t_d: f64,
    eta_fp_list: &[f64],
    eta_tp_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    if eta_fp_list.is_empty() || eta_tp_grid.is_empty() {
        return Err(Error::invalid("curve grids must be non-empty"));
    }
    let mut rows = Vec::with_capacity(eta_fp_list.len() * eta_tp_grid.len());
    for (a, &fp) in eta_fp_list.iter().enumerate() {
        for (b, &tp) in eta_tp_grid.iter().enumerate() {
            let params = ScenarioParams::new(tp, fp, r, t_d)?;
            let base = ScenarioParams::new(tp, 0.0, r, t_d)?;
            let en_theory = expected_tokens(&params)?;
            let et_theory = expected_stop_time(&params)?;
            let index = ((r as u64) << 32) | ((a as u64) << 16) | b as u64;
            let stats = simulate_r_scenario(&RScenario::new(params, trials)?, point_seed(seed, index))?;
            let en_se = (token_count_variance(&params)? / trials as f64).sqrt();
            rows.push(CurveRow {
                r,
                eta_tp: tp,
                eta_fp: fp,
                en_theory,
                en_sim: stats.mean_tokens,
                en_se,
                et_theory,
                et_sim: stats.mean_stop_time,
                et_se: en_se * t_d,
                pmf_tv: stats.pmf_tv,
                en_gap: en_theory - expected_tokens(&base)?,
                et_gap: et_theory - expected_stop_time(&base)?,
            });
        }
    }
    Ok(rows)
}

/// Grid and tolerances for the token-count and stopping-time checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub r_values: Vec<u32>,
    pub eta_tp: Vec<f64>,
    pub eta_fp: Vec<f64>,
    pub trials: u64,
    pub t_d: f64,
    /// Allowed deviation of simulated means, in standard errors.
    pub sigmas: f64,
    /// Widen the per-point band (Bonferroni) so the whole grid has the
    /// false-alarm rate of a single `sigmas` test; otherwise every point is
    /// held to `sigmas` on its own.
    pub family_wise: bool,
    /// Allowed histogram-to-pmf total variation.
    pub pmf_tv_tol: f64,
    /// `r` at which the curve-gap claims are checked.
    pub gap_r: u32,
    /// Largest `η_FP` covered by the gap claims.
    pub gap_max_eta_fp: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let mut eta_tp: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        eta_tp.push(1.0);
        let mut eta_fp = vec![0.0];
        eta_fp.extend((1..=9).map(|i| i as f64 / 10.0));
        Self {
            r_values: vec![1, 3, 5, 10],
            eta_tp,
            eta_fp,
            trials: 100_000,
            t_d: 0.1,
            sigmas: 3.0,
            family_wise: true,
            pmf_tv_tol: 0.01,
            gap_r: 5,
            gap_max_eta_fp: 0.5,
        }
    }
}

impl GridConfig {
    /// Per-point band in standard errors for a grid of `points` checks.
    ///
    /// With `family_wise`, a two-sided `sigmas` test's false-alarm probability
    /// is split evenly over the points.
    pub fn point_sigmas(&self, points: usize) -> f64 {
        if !self.family_wise || points <= 1 {
            return self.sigmas;
        }
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let alpha = 2.0 * normal.sf(self.sigmas);
        normal.inverse_cdf(1.0 - alpha / (2.0 * points as f64))
    }

    /// Points expected outside a per-point `sigmas` band by chance alone.
    pub fn expected_outliers(&self, points: usize) -> f64 {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        2.0 * normal.sf(self.sigmas) * points as f64
    }

    /// The total-variation tolerance scaled like a standard error: the base
    /// tolerance holds at `reference_trials` and widens as `sqrt(reference/trials)` below it.
    pub fn scaled_tv_tol(base: f64, reference_trials: u64, trials: u64) -> f64 {
        base * (reference_trials as f64 / trials.max(1) as f64).max(1.0).sqrt()
    }
}

/// Outcome of [`validate_r_grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub rows: Vec<CurveRow>,
    /// Band applied to every point, in standard errors.
    pub point_sigmas: f64,
    /// Points whose mean token count lies outside `sigmas` on its own.
    pub token_points_beyond_sigmas: usize,
    /// Points whose mean stopping time lies outside `sigmas` on its own.
    pub time_points_beyond_sigmas: usize,
    /// Points expected outside `sigmas` by chance alone.
    pub expected_beyond_sigmas: f64,
    /// Largest `|sim − theory|/se` over the grid.
    pub max_abs_z_tokens: f64,
    pub max_abs_z_time: f64,
    /// Points whose simulated mean token count is outside the band.
    pub token_mean_failures: Vec<String>,
    /// Points whose simulated mean stopping time is outside the band.
    pub stop_time_failures: Vec<String>,
    /// Points whose histogram is too far from the pmf.
    pub pmf_failures: Vec<String>,
    pub max_pmf_tv: f64,
    /// Largest token-count gap among the claim's points.
    pub max_token_gap: f64,
    /// Largest stopping-time gap among the claim's points.
    pub max_time_gap: f64,
    pub token_gap_holds: bool,
    pub time_gap_holds: bool,
}

impl GridReport {
    pub fn token_count_passed(&self) -> bool {
        self.token_mean_failures.is_empty() && self.pmf_failures.is_empty() && self.token_gap_holds
    }

    pub fn stop_time_passed(&self) -> bool {
        self.stop_time_failures.is_empty() && self.time_gap_holds
    }
}

fn within(sim: f64, theory: f64, se: f64, sigmas: f64) -> bool {
    // a zero standard error means the process is deterministic at this point
    (sim - theory).abs() <= sigmas * se + 1e-9 * theory.abs().max(1.0)
}

fn abs_z(sim: f64, theory: f64, se: f64) -> f64 {
    if se > 0.0 {
        (sim - theory).abs() / se
    } else {
        0.0
    }
}

/// Runs [`sweep_theory_curves`] for every `r` and checks each point.
pub fn validate_r_grid(cfg: &GridConfig, seed: u64) -> Result<GridReport> {
    let points = cfg.r_values.len() * cfg.eta_tp.len() * cfg.eta_fp.len();
    let band = cfg.point_sigmas(points);
    let mut report = GridReport {
        rows: Vec::new(),
        point_sigmas: band,
        token_points_beyond_sigmas: 0,
        time_points_beyond_sigmas: 0,
        expected_beyond_sigmas: cfg.expected_outliers(points),
        max_abs_z_tokens: 0.0,
        max_abs_z_time: 0.0,
        token_mean_failures: Vec::new(),
        stop_time_failures: Vec::new(),
        pmf_failures: Vec::new(),
        max_pmf_tv: 0.0,
        max_token_gap: f64::NEG_INFINITY,
        max_time_gap: f64::NEG_INFINITY,
        token_gap_holds: true,
        time_gap_holds: true,
    };
    for &r in &cfg.r_values {
        let rows = sweep_theory_curves(r, cfg.t_d, &cfg.eta_fp, &cfg.eta_tp, cfg.trials, seed)?;
        for row in rows {
            let at = format!("r={} eta_tp={} eta_fp={}", row.r, row.eta_tp, row.eta_fp);
            report.token_points_beyond_sigmas += !within(row.en_sim, row.en_theory, row.en_se, cfg.sigmas) as usize;
            report.time_points_beyond_sigmas += !within(row.et_sim, row.et_theory, row.et_se, cfg.sigmas) as usize;
            report.max_abs_z_tokens = report.max_abs_z_tokens.max(abs_z(row.en_sim, row.en_theory, row.en_se));
            report.max_abs_z_time = report.max_abs_z_time.max(abs_z(row.et_sim, row.et_theory, row.et_se));
            if !within(row.en_sim, row.en_theory, row.en_se, band) {
                report.token_mean_failures.push(format!(
                    "{at}: E[N] sim {} vs theory {} (se {})",
                    row.en_sim, row.en_theory, row.en_se
                ));
            }
            if !within(row.et_sim, row.et_theory, row.et_se, band) {
                report.stop_time_failures.push(format!(
                    "{at}: E[T] sim {} vs theory {} (se {})",
                    row.et_sim, row.et_theory, row.et_se
                ));
            }
            if row.pmf_tv > cfg.pmf_tv_tol {
                report.pmf_failures.push(format!("{at}: pmf TV {}", row.pmf_tv));
            }
            report.max_pmf_tv = report.max_pmf_tv.max(row.pmf_tv);
            if row.r == cfg.gap_r && row.eta_fp <= cfg.gap_max_eta_fp {
                report.max_token_gap = report.max_token_gap.max(row.en_gap);
                report.max_time_gap = report.max_time_gap.max(row.et_gap);
                report.token_gap_holds &= row.en_gap <= 1.0;
                report.time_gap_holds &= row.et_gap <= cfg.t_d * (1.0 + 1e-12);
            }
            report.rows.push(row);
        }
    }
    Ok(report)
}

//! Closed forms for approximate sequential verification.
//!
//! The stopping-rule results assume the "r-scenario": the first `r` draft
//! tokens are acceptable and every later one is not, and the verifier decides
//! i.i.d. with true-positive rate `η_TP` and false-positive rate `η_FP`.

use serde::{Deserialize, Serialize};

use crate::dist::{sprinter_mixture, tv_distance, CategoricalDist};
use crate::engine::CostModel;
use crate::error::{Error, Result};
use crate::verifier::VerifierQuality;

/// Parameters of the r-scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub quality: VerifierQuality,
    /// Number of consecutive acceptable draft tokens.
    pub r: u32,
    /// Draft model time per call.
    pub t_d: f64,
}

impl ScenarioParams {
    pub fn new(eta_tp: f64, eta_fp: f64, r: u32, t_d: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::invalid("r must be at least 1"));
        }
        if !(t_d.is_finite() && t_d > 0.0) {
            return Err(Error::invalid(format!("t_d must be positive, got {t_d}")));
        }
        Ok(Self {
            quality: VerifierQuality::new(eta_tp, eta_fp)?,
            r,
            t_d,
        })
    }

    pub fn eta_tp(&self) -> f64 {
        self.quality.eta_tp
    }

    pub fn eta_fp(&self) -> f64 {
        self.quality.eta_fp
    }
}

/// `P(N = i)` for the number of draft tokens accepted before the first rejection.
pub fn token_count_pmf(params: &ScenarioParams, i: u64) -> f64 {
    let (tp, fp, r) = (params.eta_tp(), params.eta_fp(), params.r as u64);
    if i < r {
        tp.powi(i as i32) * (1.0 - tp)
    } else {
        tp.powi(r as i32) * powu(fp, i - r) * (1.0 - fp)
    }
}

/// `P(N ≥ i)`, the closed-form tail of [`token_count_pmf`].
pub fn token_count_tail(params: &ScenarioParams, i: u64) -> f64 {
    let (tp, fp, r) = (params.eta_tp(), params.eta_fp(), params.r as u64);
    if i <= r {
        tp.powi(i as i32)
    } else {
        tp.powi(r as i32) * powu(fp, i - r)
    }
}

fn powu(base: f64, exp: u64) -> f64 {
    if exp > i32::MAX as u64 {
        return if base == 1.0 { 1.0 } else { 0.0 };
    }
    base.powi(exp as i32)
}

/// `E[N] = (η_TP − η_TP^r)/(1 − η_TP) + η_TP^r/(1 − η_FP)`.
///
/// The first term is evaluated as the finite sum `η_TP + … + η_TP^(r−1)`, which
/// equals the quotient for `η_TP < 1`, has the limit `r − 1` at `η_TP = 1`,
/// and avoids cancellation near that boundary.
pub fn expected_tokens(params: &ScenarioParams) -> Result<f64> {
    let (tp, fp, r) = (params.eta_tp(), params.eta_fp(), params.r);
    if fp >= 1.0 {
        return Err(Error::Divergent("expected token count"));
    }
    let tp_r = tp.powi(r as i32);
    let early = geometric_sum(tp, 1, r);
    Ok(early + tp_r / (1.0 - fp))
}

/// `E[T_stop] = (1 − η_TP^r)·t_d/(1 − η_TP) + η_TP^r·t_d/(1 − η_FP)`.
///
/// Verifier time is neglected. The first term is evaluated as
/// `t_d·(1 + η_TP + … + η_TP^(r−1))`, whose value at `η_TP = 1` is `r·t_d`.
pub fn expected_stop_time(params: &ScenarioParams) -> Result<f64> {
    let (tp, fp, r, t_d) = (params.eta_tp(), params.eta_fp(), params.r, params.t_d);
    if fp >= 1.0 {
        return Err(Error::Divergent("expected stopping time"));
    }
    let tp_r = tp.powi(r as i32);
    let early = geometric_sum(tp, 0, r) * t_d;
    Ok(early + tp_r * t_d / (1.0 - fp))
}

/// `x^from + … + x^(to−1)`.
fn geometric_sum(x: f64, from: u32, to: u32) -> f64 {
    let mut term = x.powi(from as i32);
    let mut total = 0.0;
    for _ in from..to {
        total += term;
        term *= x;
    }
    total
}

/// Token law under an i.i.d. verifier: `(1 − η_FP)·p + η_FP·q`.
pub fn sprinter_token_dist(
    p: &CategoricalDist,
    q: &CategoricalDist,
    eta_fp: f64,
) -> Result<CategoricalDist> {
    sprinter_mixture(p, q, eta_fp)
}

/// Acceptance rate of standard speculative decoding, `1 − d_TV(p, q)`.
pub fn acceptance_rate_sd(p: &CategoricalDist, q: &CategoricalDist) -> Result<f64> {
    Ok(1.0 - tv_distance(p, q)?)
}

/// Acceptance rate under approximate verification, `1 − (1 − η_FP)·d_TV(p, q)`.
pub fn acceptance_rate_sprinter(
    p: &CategoricalDist,
    q: &CategoricalDist,
    eta_fp: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta_fp) {
        return Err(Error::invalid(format!("eta_fp must be in [0, 1], got {eta_fp}")));
    }
    Ok(1.0 - (1.0 - eta_fp) * tv_distance(p, q)?)
}

/// FLOPs of one speculative-decoding round: `γ·F_d + γ·F_t`.
pub fn flops_sd(gamma: u32, cost: &CostModel) -> f64 {
    let g = gamma as f64;
    g * cost.f_d + g * cost.f_t
}

/// FLOPs of one sequential-verification run over `γ` draft tokens: `γ·F_d + γ·F_v + F_t`.
pub fn flops_sprinter(gamma: u32, cost: &CostModel) -> f64 {
    let g = gamma as f64;
    g * cost.f_d + g * cost.f_v + cost.f_t
}

/// `flops_sd − flops_sprinter = (γ − 1)·F_t − γ·F_v`.
pub fn flops_savings(gamma: u32, cost: &CostModel) -> f64 {
    flops_sd(gamma, cost) - flops_sprinter(gamma, cost)
}

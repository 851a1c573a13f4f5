use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::theory::{token_count_pmf, token_count_tail, ScenarioParams};

/// Stream component tag for r-scenario trials.
const COMPONENT: u8 = 1;

/// Monte Carlo setup for the r-scenario process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RScenario {
    pub params: ScenarioParams,
    pub trials: u64,
    /// Verifier time per decision; zero reproduces the stopping-time closed form.
    pub t_v: f64,
}

impl RScenario {
    pub fn new(params: ScenarioParams, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        Ok(Self {
            params,
            trials,
            t_v: 0.0,
        })
    }
}

/// Empirical token count and stopping time over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RScenarioStats {
    pub trials: u64,
    /// `histogram[i]` counts trials that accepted exactly `i` tokens.
    pub histogram: Vec<u64>,
    pub mean_tokens: f64,
    /// Standard error of `mean_tokens`.
    pub se_tokens: f64,
    pub mean_stop_time: f64,
    pub se_stop_time: f64,
    /// Total variation between the histogram and the closed-form pmf, including
    /// the closed-form mass beyond the longest observed run.
    pub pmf_tv: f64,
}

#[derive(Default)]
struct Acc {
    histogram: Vec<u64>,
    sum: u128,
    sum_sq: u128,
}

impl Acc {
    fn add(mut self, n: u64) -> Self {
        let i = n as usize;
        if self.histogram.len() <= i {
            self.histogram.resize(i + 1, 0);
        }
        self.histogram[i] += 1;
        self.sum += n as u128;
        self.sum_sq += (n as u128) * (n as u128);
        self
    }

    fn merge(mut self, other: Self) -> Self {
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }
}

/// Number of draft tokens the verifier accepts before its first rejection in one trial.
///
/// Token `i` (zero-based) is acceptable iff `i < r`; acceptable tokens pass
/// with probability `η_TP`, the rest with `η_FP`.
fn one_trial<R: Rng + ?Sized>(params: &ScenarioParams, rng: &mut R) -> u64 {
    let r = params.r as u64;
    let mut n = 0u64;
    loop {
        let pass = if n < r { params.eta_tp() } else { params.eta_fp() };
        if rng.gen::<f64>() >= pass {
            return n;
        }
        n += 1;
    }
}

/// Simulates the abstract r-scenario directly.
///
/// Trial `k` draws from its own stream derived from `(seed, k)`, and all
/// aggregates are integer sums, so results do not depend on thread scheduling.
/// A trial that accepts `N` tokens makes `N + 1` draft and verifier calls, so
/// its stopping time is `(N + 1)·(t_d + t_v)`.
pub fn simulate_r_scenario(scenario: &RScenario, seed: u64) -> Result<RScenarioStats> {
    let params = scenario.params;
    if params.eta_fp() >= 1.0 {
        return Err(Error::Divergent("r-scenario simulation"));
    }
    if scenario.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let acc = (0..scenario.trials)
        .into_par_iter()
        .fold(Acc::default, |acc, k| {
            let mut rng = RngStream::for_trial(seed, k, COMPONENT);
            acc.add(one_trial(&params, &mut rng))
        })
        .reduce(Acc::default, Acc::merge);

    let n = scenario.trials as f64;
    let mean = acc.sum as f64 / n;
    let var = if scenario.trials > 1 {
        ((acc.sum_sq as f64 - acc.sum as f64 * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let se = (var / n).sqrt();
    let step = params.t_d + scenario.t_v;

    let mut tv = 0.0;
    for (i, &c) in acc.histogram.iter().enumerate() {
        tv += (c as f64 / n - token_count_pmf(&params, i as u64)).abs();
    }
    tv += token_count_tail(&params, acc.histogram.len() as u64);

    Ok(RScenarioStats {
        trials: scenario.trials,
        histogram: acc.histogram,
        mean_tokens: mean,
        se_tokens: se,
        mean_stop_time: (mean + 1.0) * step,
        se_stop_time: se * step,
        pmf_tv: tv / 2.0,
    })
}

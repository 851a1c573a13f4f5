//! Layered run configuration.
//!
//! Values resolve as built-in defaults, then the TOML file given with
//! `--config`, then command-line flags. The resolved configuration is written
//! into every report so each artifact records how it was produced.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sprinter_core::harness::SuiteConfig;
use sprinter_core::{CostModel, TokenizeMode};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Directory every command writes its artifacts to.
    pub out_dir: PathBuf,
    /// Directory model and verifier files are read from; defaults to `out_dir`.
    pub models_dir: Option<PathBuf>,
    pub cost: CostModel,
    pub lm: LmConfig,
    pub verifier: VerifierConfig,
    pub decode: DecodeConfig,
    pub bench: BenchSection,
    pub theory: SuiteConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("out"),
            models_dir: None,
            cost: CostModel::default(),
            lm: LmConfig::default(),
            verifier: VerifierConfig::default(),
            decode: DecodeConfig::default(),
            bench: BenchSection::default(),
            theory: SuiteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub corpus: PathBuf,
    pub mode: TokenizeMode,
    /// n-gram order of the draft model.
    pub k_draft: usize,
    /// n-gram order of the target model.
    pub k_target: usize,
    /// Add-α smoothing shared by both models.
    pub alpha: f64,
    /// Trailing fraction of the corpus held out from training.
    pub heldout_fraction: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("data/demo_corpus.txt"),
            mode: TokenizeMode::Char,
            k_draft: 1,
            k_target: 3,
            alpha: 0.1,
            heldout_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierConfig {
    /// Label threshold on `q(x)/p(x)` for the saved verifier.
    pub lambda: f64,
    /// Decision threshold of the saved verifier.
    pub tau: f64,
    /// Label thresholds swept for ROC curves; `lambda` is always included.
    pub lambda_grid: Vec<f64>,
    /// Decision thresholds swept to measure `(η_TP, η_FP)` on held-out data.
    pub tau_grid: Vec<f64>,
    /// Training examples per prefix category.
    pub per_category: usize,
    /// Held-out examples per prefix category.
    pub heldout_per_category: usize,
    pub max_continuation: usize,
    /// Seed prefixes cut from each corpus split.
    pub seed_prefixes: usize,
    pub min_prefix: usize,
    pub max_prefix: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            lambda: 1.2,
            tau: 0.5,
            lambda_grid: vec![1.0, 1.2, 1.5],
            tau_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            per_category: 500,
            heldout_per_category: 250,
            max_continuation: 12,
            seed_prefixes: 400,
            min_prefix: 8,
            max_prefix: 64,
            epochs: 500,
            lr: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMethod {
    Sprinter,
    Sd,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VerifierKind {
    /// The logistic verifier saved by `train-verifier`.
    Trained,
    /// A synthetic verifier with fixed `(η_TP, η_FP)`.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub method: DecodeMethod,
    pub prompt: String,
    /// Draft length per speculative round.
    pub gamma: usize,
    pub max_new_tokens: usize,
    pub verifier: VerifierKind,
    pub eta_tp: f64,
    pub eta_fp: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            method: DecodeMethod::Sprinter,
            prompt: "the ".to_owned(),
            gamma: 4,
            max_new_tokens: 20,
            verifier: VerifierKind::Trained,
            eta_tp: 1.0,
            eta_fp: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// One prompt per non-empty line.
    pub prompts: PathBuf,
    /// Leading fraction of each prompt given as input.
    pub prefix_fraction: f64,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            prompts: PathBuf::from("data/demo_prompts.txt"),
            prefix_fraction: 0.3,
        }
    }
}

impl Config {
    /// Defaults overlaid with `path`, when given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn models_dir(&self) -> &Path {
        self.models_dir.as_deref().unwrap_or(&self.out_dir)
    }

    pub fn draft_path(&self) -> PathBuf {
        self.models_dir().join("draft.ngram")
    }

    pub fn target_path(&self) -> PathBuf {
        self.models_dir().join("target.ngram")
    }

    pub fn verifier_path(&self) -> PathBuf {
        self.models_dir().join("verifier.json")
    }

    /// Domain checks shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        self.cost.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let lm = &self.lm;
        at_least("lm.k_draft", lm.k_draft, 1)?;
        at_least("lm.k_target", lm.k_target, 1)?;
        if !(lm.alpha.is_finite() && lm.alpha >= 0.0) {
            return usage(format!("lm.alpha must be finite and non-negative, got {}", lm.alpha));
        }
        open_unit("lm.heldout_fraction", lm.heldout_fraction)?;

        let v = &self.verifier;
        positive("verifier.lambda", v.lambda)?;
        open_unit("verifier.tau", v.tau)?;
        for &l in &v.lambda_grid {
            positive("verifier.lambda_grid", l)?;
        }
        for &t in &v.tau_grid {
            open_unit("verifier.tau_grid", t)?;
        }
        at_least("verifier.per_category", v.per_category, 1)?;
        at_least("verifier.heldout_per_category", v.heldout_per_category, 1)?;
        at_least("verifier.max_continuation", v.max_continuation, 1)?;
        at_least("verifier.seed_prefixes", v.seed_prefixes, 1)?;
        at_least("verifier.min_prefix", v.min_prefix, 1)?;
        at_least("verifier.max_prefix", v.max_prefix, v.min_prefix)?;
        at_least("verifier.epochs", v.epochs, 1)?;
        positive("verifier.lr", v.lr)?;

        let d = &self.decode;
        at_least("decode.gamma", d.gamma, 1)?;
        at_least("decode.max_new_tokens", d.max_new_tokens, 1)?;
        unit("decode.eta_tp", d.eta_tp)?;
        unit("decode.eta_fp", d.eta_fp)?;

        open_unit("bench.prefix_fraction", self.bench.prefix_fraction)?;

        let t = &self.theory;
        at_least("theory.battery_pairs", t.battery_pairs, 1)?;
        unit("theory.eta_tp", t.eta_tp)?;
        for &fp in t.eta_fp.iter().chain(&t.grid.eta_fp) {
            unit("theory.eta_fp", fp)?;
        }
        for &tp in &t.grid.eta_tp {
            unit("theory.grid.eta_tp", tp)?;
        }
        at_least("theory.gamma", t.gamma, 1)?;
        at_least("theory.grid.trials", t.grid.trials as usize, 1)?;
        for &r in &t.grid.r_values {
            at_least("theory.grid.r_values", r as usize, 1)?;
        }
        Ok(())
    }
}

fn usage<T>(msg: String) -> Result<T, CliError> {
    Err(CliError::Usage(msg))
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v < min {
        return usage(format!("{name} must be at least {min}, got {v}"));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if !(v.is_finite() && v > 0.0) {
        return usage(format!("{name} must be positive, got {v}"));
    }
    Ok(())
}

fn unit(name: &str, v: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&v) {
        return usage(format!("{name} must be in [0, 1], got {v}"));
    }
    Ok(())
}

fn open_unit(name: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v < 1.0) {
        return usage(format!("{name} must be in (0, 1), got {v}"));
    }
    Ok(())
}

//! `sprinter`: train toy models and verifiers, decode, check the closed forms
//! and benchmark the decoders.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage or
//! configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sprinter_core::TokenizeMode;

use crate::config::{Config, DecodeMethod, VerifierKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] sprinter_core::Error),

    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sprinter", version, about = "Speculative decoding and sequential verification lab")]
struct Cli {
    /// TOML file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random stream (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Directory holding model and verifier files (default: the output directory).
    #[arg(long, global = true)]
    models_dir: Option<PathBuf>,

    #[command(flatten)]
    cost: CostArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Time per draft call.
    #[arg(long, global = true)]
    t_d: Option<f64>,
    /// Time per target call.
    #[arg(long, global = true)]
    t_t: Option<f64>,
    /// Time per verifier call.
    #[arg(long, global = true)]
    t_v: Option<f64>,
    /// FLOPs per draft call.
    #[arg(long, global = true)]
    f_d: Option<f64>,
    /// FLOPs per target position.
    #[arg(long, global = true)]
    f_t: Option<f64>,
    /// FLOPs per verifier call.
    #[arg(long, global = true)]
    f_v: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the draft and target n-gram models on a corpus.
    TrainLm(TrainLmArgs),
    /// Build the labeled dataset, train the logistic verifier and write ROC curves.
    TrainVerifier(TrainVerifierArgs),
    /// Decode one prompt and write its trace.
    Run(RunArgs),
    /// Check the closed-form results against simulation.
    ValidateTheory(TheoryArgs),
    /// Compare the decoders on a prompt file.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct TrainLmArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Tokenization: `char` or `whitespace`.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TokenizeMode>,
    #[arg(long)]
    k_draft: Option<usize>,
    #[arg(long)]
    k_target: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    heldout_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainVerifierArgs {
    /// Corpus the models were trained on; seed prefixes are cut from it.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Comma-separated label thresholds to sweep.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long)]
    per_category: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifierArgs {
    /// Trained logistic verifier or fixed-rate oracle.
    #[arg(long, value_enum)]
    verifier: Option<VerifierKind>,
    /// Oracle true-positive rate; implies `--verifier oracle`.
    #[arg(long)]
    eta_tp: Option<f64>,
    /// Oracle false-positive rate; implies `--verifier oracle`.
    #[arg(long)]
    eta_fp: Option<f64>,
    /// Decision threshold applied to the trained verifier.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long)]
    max_new_tokens: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    method: Option<DecodeMethod>,
    #[arg(long)]
    prompt: Option<String>,
    #[command(flatten)]
    decode: VerifierArgs,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    /// Trials per grid point; tolerances widen with the standard error below the default.
    #[arg(long)]
    trials: Option<u64>,
    /// Samples per battery instance for the token-distribution check.
    #[arg(long)]
    samples: Option<u64>,
    /// Comma-separated false-positive rates for the battery and the grid.
    #[arg(long, value_delimiter = ',')]
    eta_fp: Option<Vec<f64>>,
    /// Comma-separated values of r for the grid.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<u32>>,
    /// Comma-separated subset of checks to run.
    #[arg(long, value_enum, value_delimiter = ',')]
    checks: Option<Vec<commands::theory::CheckName>>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long)]
    prefix_fraction: Option<f64>,
    #[command(flatten)]
    decode: VerifierArgs,
}

fn parse_mode(s: &str) -> Result<TokenizeMode, String> {
    match s {
        "char" => Ok(TokenizeMode::Char),
        "whitespace" => Ok(TokenizeMode::Whitespace),
        _ => Err(format!("expected `char` or `whitespace`, got `{s}`")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    /// Applies global and command flags on top of `cfg`.
    fn overlay(&self, cfg: &mut Config) {
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.out_dir, self.out_dir.clone());
        if self.models_dir.is_some() {
            cfg.models_dir = self.models_dir.clone();
        }
        let c = &self.cost;
        set(&mut cfg.cost.t_d, c.t_d);
        set(&mut cfg.cost.t_t, c.t_t);
        set(&mut cfg.cost.t_v, c.t_v);
        set(&mut cfg.cost.f_d, c.f_d);
        set(&mut cfg.cost.f_t, c.f_t);
        set(&mut cfg.cost.f_v, c.f_v);
        match &self.command {
            Command::TrainLm(a) => {
                set(&mut cfg.lm.corpus, a.corpus.clone());
                set(&mut cfg.lm.mode, a.mode);
                set(&mut cfg.lm.k_draft, a.k_draft);
                set(&mut cfg.lm.k_target, a.k_target);
                set(&mut cfg.lm.alpha, a.alpha);
                set(&mut cfg.lm.heldout_fraction, a.heldout_fraction);
            }
            Command::TrainVerifier(a) => {
                set(&mut cfg.lm.corpus, a.corpus.clone());
                set(&mut cfg.verifier.lambda, a.lambda);
                set(&mut cfg.verifier.tau, a.tau);
                set(&mut cfg.verifier.lambda_grid, a.lambda_grid.clone());
                set(&mut cfg.verifier.per_category, a.per_category);
                set(&mut cfg.verifier.epochs, a.epochs);
                set(&mut cfg.verifier.lr, a.lr);
            }
            Command::Run(a) => {
                set(&mut cfg.decode.method, a.method);
                set(&mut cfg.decode.prompt, a.prompt.clone());
                a.decode.overlay(cfg);
            }
            Command::ValidateTheory(a) => {
                let t = &mut cfg.theory;
                set(&mut t.grid.trials, a.trials);
                set(&mut t.token_samples, a.samples);
                if let Some(fp) = &a.eta_fp {
                    t.eta_fp = fp.clone();
                    t.grid.eta_fp = fp.clone();
                }
                set(&mut t.grid.r_values, a.r.clone());
            }
            Command::Bench(a) => {
                set(&mut cfg.bench.prompts, a.prompts.clone());
                set(&mut cfg.bench.prefix_fraction, a.prefix_fraction);
                a.decode.overlay(cfg);
            }
        }
    }
}

impl VerifierArgs {
    fn overlay(&self, cfg: &mut Config) {
        let d = &mut cfg.decode;
        if self.eta_tp.is_some() || self.eta_fp.is_some() {
            d.verifier = VerifierKind::Oracle;
        }
        set(&mut d.verifier, self.verifier);
        set(&mut d.eta_tp, self.eta_tp);
        set(&mut d.eta_fp, self.eta_fp);
        set(&mut d.gamma, self.gamma);
        set(&mut d.max_new_tokens, self.max_new_tokens);
        set(&mut cfg.verifier.tau, self.tau);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    cli.overlay(&mut cfg);
    cfg.validate()?;
    for w in cfg.cost.warnings() {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    match &cli.command {
        Command::TrainLm(_) => commands::train_lm::run(&cfg),
        Command::TrainVerifier(_) => commands::train_verifier::run(&cfg),
        Command::Run(_) => commands::run::run(&cfg),
        Command::ValidateTheory(a) => commands::theory::run(&cfg, a.checks.as_deref()),
        Command::Bench(_) => commands::bench::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `sprinter --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

//! `train-verifier`: builds the four-category dataset from the trained model
//! pair, fits one logistic verifier per label threshold and writes ROC curves.

use rand::Rng;
use serde::Serialize;
use sprinter_core::verifier::{
    build_training_set, measure_quality, relabel, roc_curve, train_logistic, DatasetConfig, LabeledExample,
    TrainConfig,
};
use sprinter_core::{Error, RngStream, TokenId};

use crate::commands::{load_pair, split};
use crate::config::Config;
use crate::output::{out_path, read_text, write_report, write_text};
use crate::CliError;

const COMPONENT_TRAIN_PREFIXES: u8 = 20;
const COMPONENT_HELDOUT_PREFIXES: u8 = 21;
const COMPONENT_TRAIN_SET: u8 = 22;
const COMPONENT_HELDOUT_SET: u8 = 23;

#[derive(Serialize)]
struct TauPoint {
    tau: f64,
    eta_tp: f64,
    eta_fp: f64,
}

#[derive(Serialize)]
struct LambdaResult {
    lambda: f64,
    train_positive_fraction: f64,
    heldout_positive_fraction: f64,
    initial_loss: f64,
    final_loss: f64,
    heldout_auc: f64,
    /// Held-out rates at the configured decision threshold.
    eta_tp: f64,
    eta_fp: f64,
    roc_file: String,
    tau_sweep: Vec<TauPoint>,
    /// Sweep point maximizing `η_TP − η_FP` (Youden's J) on held-out data.
    youden_tau: Option<f64>,
}

#[derive(Serialize)]
struct TrainVerifierReport {
    train_examples: usize,
    heldout_examples: usize,
    verifier_file: String,
    heldout_auc: f64,
    lambdas: Vec<LambdaResult>,
}

/// `count` random windows of `min..=max` tokens from `tokens`.
fn cut_prefixes(
    tokens: &[TokenId],
    count: usize,
    min: usize,
    max: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<TokenId>>, CliError> {
    if tokens.len() < min {
        return Err(Error::CorpusTooShort {
            len: tokens.len(),
            order: min,
        }
        .into());
    }
    let max = max.min(tokens.len());
    Ok((0..count)
        .map(|_| {
            let len = rng.gen_range(min..=max);
            let start = rng.gen_range(0..=tokens.len() - len);
            tokens[start..start + len].to_vec()
        })
        .collect())
}

fn positive_fraction(examples: &[LabeledExample]) -> f64 {
    examples.iter().filter(|e| e.label).count() as f64 / examples.len().max(1) as f64
}

/// The first sweep threshold with the largest `η_TP − η_FP`.
fn youden(sweep: &[TauPoint]) -> Option<f64> {
    sweep
        .iter()
        .fold(None::<&TauPoint>, |best, p| match best {
            Some(b) if b.eta_tp - b.eta_fp >= p.eta_tp - p.eta_fp => Some(b),
            _ => Some(p),
        })
        .map(|p| p.tau)
}

pub fn run(cfg: &Config) -> Result<(), CliError> {
    let v = &cfg.verifier;
    let (draft, target) = load_pair(cfg)?;
    let text = read_text(&cfg.lm.corpus, "corpus")?;
    let tokens = draft.vocab().encode(&text)?;
    let (train, heldout) = split(&tokens, cfg.lm.heldout_fraction);

    let prefixes = |split: &[TokenId], component| {
        let mut rng = RngStream::for_trial(cfg.seed, 0, component);
        cut_prefixes(split, v.seed_prefixes, v.min_prefix, v.max_prefix, &mut rng)
    };
    let train_prefixes = prefixes(train, COMPONENT_TRAIN_PREFIXES)?;
    let heldout_prefixes = prefixes(heldout, COMPONENT_HELDOUT_PREFIXES)?;

    let dataset = |prefixes: &[Vec<TokenId>], per_category, component| {
        let dcfg = DatasetConfig {
            per_category,
            lambda: v.lambda,
            max_continuation: v.max_continuation,
        };
        let mut rng = RngStream::for_trial(cfg.seed, 0, component);
        build_training_set(&draft, &target, prefixes, &dcfg, &mut rng)
    };
    let train_set = dataset(&train_prefixes, v.per_category, COMPONENT_TRAIN_SET)?;
    let heldout_set = dataset(&heldout_prefixes, v.heldout_per_category, COMPONENT_HELDOUT_SET)?;

    let mut lambdas = v.lambda_grid.clone();
    lambdas.push(v.lambda);
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();

    let mut results = Vec::with_capacity(lambdas.len());
    let mut primary_auc = f64::NAN;
    for &lambda in &lambdas {
        let tr = relabel(&train_set, lambda);
        let he = relabel(&heldout_set, lambda);
        let tcfg = TrainConfig {
            epochs: v.epochs,
            lr: v.lr,
            tau: v.tau,
            lambda_train: lambda,
            ..TrainConfig::default()
        };
        let (model, fit) = train_logistic(&tr, &tcfg)?;
        let scores: Vec<f64> = he.iter().map(|e| model.score(&e.features)).collect();
        let labels: Vec<bool> = he.iter().map(|e| e.label).collect();
        let roc = roc_curve(&scores, &labels)?;
        let roc_path = out_path(cfg, &format!("roc-lambda-{lambda:.2}.csv"));
        write_text(&roc_path, &roc.to_csv())?;

        let at_tau = measure_quality(&he, |e| model.decide(&e.features))?;
        let tau_sweep = v
            .tau_grid
            .iter()
            .map(|&tau| {
                let q = measure_quality(&he, |e| model.score(&e.features) > tau)?;
                Ok(TauPoint {
                    tau,
                    eta_tp: q.eta_tp,
                    eta_fp: q.eta_fp,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;

        let youden_tau = youden(&tau_sweep);
        println!(
            "lambda {lambda:.2}: positive fraction {:.4} train / {:.4} held out, held-out AUC {:.4}, eta_tp {:.4}, eta_fp {:.4} at tau {}, Youden tau {}",
            positive_fraction(&tr),
            positive_fraction(&he),
            roc.auc,
            at_tau.eta_tp,
            at_tau.eta_fp,
            v.tau,
            youden_tau.map_or("-".to_owned(), |t| t.to_string())
        );
        if lambda == v.lambda {
            model.save(&cfg.verifier_path())?;
            primary_auc = roc.auc;
        }
        results.push(LambdaResult {
            lambda,
            train_positive_fraction: positive_fraction(&tr),
            heldout_positive_fraction: positive_fraction(&he),
            initial_loss: fit.initial_loss,
            final_loss: fit.final_loss,
            heldout_auc: roc.auc,
            eta_tp: at_tau.eta_tp,
            eta_fp: at_tau.eta_fp,
            roc_file: roc_path.display().to_string(),
            tau_sweep,
            youden_tau,
        });
    }

    println!("held-out AUC (lambda={}, tau={}): {primary_auc:.4}", v.lambda, v.tau);
    println!("verifier: {}", cfg.verifier_path().display());
    let report = TrainVerifierReport {
        train_examples: train_set.len(),
        heldout_examples: heldout_set.len(),
        verifier_file: cfg.verifier_path().display().to_string(),
        heldout_auc: primary_auc,
        lambdas: results,
    };
    let path = write_report(cfg, "train-verifier", "train-verifier.json", report)?;
    println!("report: {}", path.display());
    Ok(())
}

//! `train-lm`: fits the draft and target n-gram models on one corpus.

use serde::Serialize;
use sprinter_core::lm::{perplexity_with_context, tokenize};
use sprinter_core::{Error, NGramModel};

use crate::commands::split;
use crate::config::Config;
use crate::output::{read_text, write_report};
use crate::CliError;

/// Tokens of training text the held-out perplexity is conditioned on.
const CONTEXT_TOKENS: usize = 64;

#[derive(Serialize)]
struct ModelStats {
    file: String,
    order: usize,
    alpha: f64,
    contexts: usize,
    heldout_perplexity: f64,
}

#[derive(Serialize)]
struct TrainLmReport {
    vocab_size: usize,
    train_tokens: usize,
    heldout_tokens: usize,
    draft: ModelStats,
    target: ModelStats,
}

pub fn run(cfg: &Config) -> Result<(), CliError> {
    let lm = &cfg.lm;
    let text = read_text(&lm.corpus, "corpus")?;
    let (vocab, tokens) = tokenize(&text, lm.mode)?;
    let (train, heldout) = split(&tokens, lm.heldout_fraction);
    if heldout.is_empty() {
        return Err(Error::CorpusTooShort {
            len: tokens.len(),
            order: lm.k_target.max(lm.k_draft),
        }
        .into());
    }
    let context = &train[train.len().saturating_sub(CONTEXT_TOKENS)..];
    std::fs::create_dir_all(cfg.models_dir())
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", cfg.models_dir().display())))?;

    let fit = |order: usize, path: std::path::PathBuf| -> Result<ModelStats, CliError> {
        let model = NGramModel::train(&vocab, train, order, lm.alpha)?;
        model.save(&path)?;
        Ok(ModelStats {
            file: path.display().to_string(),
            order,
            alpha: lm.alpha,
            contexts: model.num_contexts(),
            heldout_perplexity: perplexity_with_context(&model, context, heldout)?,
        })
    };
    let draft = fit(lm.k_draft, cfg.draft_path())?;
    let target = fit(lm.k_target, cfg.target_path())?;

    println!("vocab size: {}", vocab.len());
    println!("tokens: {} train, {} held out", train.len(), heldout.len());
    for (name, s) in [("draft", &draft), ("target", &target)] {
        println!(
            "{name}: order {}, {} contexts, held-out perplexity {:.4} -> {}",
            s.order, s.contexts, s.heldout_perplexity, s.file
        );
    }
    let report = TrainLmReport {
        vocab_size: vocab.len(),
        train_tokens: train.len(),
        heldout_tokens: heldout.len(),
        draft,
        target,
    };
    let path = write_report(cfg, "train-lm", "train-lm.json", report)?;
    println!("report: {}", path.display());
    Ok(())
}

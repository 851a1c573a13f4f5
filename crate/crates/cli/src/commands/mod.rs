//! One module per subcommand, plus the loading helpers they share.

pub mod bench;
pub mod run;
pub mod theory;
pub mod train_lm;
pub mod train_verifier;

use sprinter_core::verifier::LogisticVerifier;
use sprinter_core::{Error, NGramModel, TokenId, Verifier, VerifierQuality};

use crate::config::{Config, VerifierKind};
use crate::CliError;

/// Loads the draft and target models and checks they share a vocabulary.
pub fn load_pair(cfg: &Config) -> Result<(NGramModel, NGramModel), CliError> {
    let mut models = Vec::with_capacity(2);
    for path in [cfg.draft_path(), cfg.target_path()] {
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "model file {} does not exist; run `sprinter train-lm` first",
                path.display()
            )));
        }
        models.push(NGramModel::load(&path)?);
    }
    let target = models.pop().expect("two models");
    let draft = models.pop().expect("two models");
    if draft.vocab() != target.vocab() {
        return Err(Error::VocabMismatch {
            left: draft.vocab().len(),
            right: target.vocab().len(),
        }
        .into());
    }
    Ok((draft, target))
}

/// Splits a token stream into a leading training part and a trailing held-out part.
pub fn split(tokens: &[TokenId], heldout_fraction: f64) -> (&[TokenId], &[TokenId]) {
    let cut = ((tokens.len() as f64) * (1.0 - heldout_fraction)).round() as usize;
    tokens.split_at(cut.min(tokens.len()))
}

/// The verifier selected by the decode settings.
pub fn build_verifier(cfg: &Config) -> Result<Verifier, CliError> {
    let d = &cfg.decode;
    match d.verifier {
        VerifierKind::Oracle => Ok(Verifier::oracle(VerifierQuality::new(d.eta_tp, d.eta_fp)?)),
        VerifierKind::Trained => {
            let path = cfg.verifier_path();
            if !path.exists() {
                return Err(CliError::Usage(format!(
                    "verifier file {} does not exist; run `sprinter train-verifier` first or pass --verifier oracle",
                    path.display()
                )));
            }
            Ok(Verifier::logistic(LogisticVerifier::load(&path)?.with_tau(cfg.verifier.tau)?))
        }
    }
}

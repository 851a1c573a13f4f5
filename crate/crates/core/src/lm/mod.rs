//! Desk-scale language models for the draft and target roles.

mod ngram;
mod synthetic;
mod vocab;

pub use ngram::NGramModel;
pub use synthetic::SyntheticModel;
pub use vocab::{tokenize, TokenizeMode, Vocab, BOS, BOS_ID};

use crate::dist::{CategoricalDist, TokenId};
use crate::error::{Error, Result};

/// A conditional next-token distribution `P(· | prefix)`.
pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn next_dist(&self, prefix: &[TokenId]) -> CategoricalDist;
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_dist(&self, prefix: &[TokenId]) -> CategoricalDist {
        (**self).next_dist(prefix)
    }
}

/// `exp(−mean log P(x_t | x_<t))` over `tokens`, each conditioned on its own prefix.
pub fn perplexity<M: LanguageModel + ?Sized>(model: &M, tokens: &[TokenId]) -> Result<f64> {
    perplexity_with_context(model, &[], tokens)
}

/// Perplexity of `tokens` when they follow `context`.
pub fn perplexity_with_context<M: LanguageModel + ?Sized>(
    model: &M,
    context: &[TokenId],
    tokens: &[TokenId],
) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::invalid("perplexity needs at least one token"));
    }
    let mut seq = context.to_vec();
    let mut nll = 0.0;
    for (position, &tok) in tokens.iter().enumerate() {
        let p = model.next_dist(&seq).prob(tok);
        if p <= 0.0 {
            return Err(Error::ZeroProbability {
                token: tok,
                position,
            });
        }
        nll -= p.ln();
        seq.push(tok);
    }
    Ok((nll / tokens.len() as f64).exp())
}

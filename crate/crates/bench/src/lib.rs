//! Fixtures shared by the criterion benchmarks in `benches/`.

use sprinter_core::lm::tokenize;
use sprinter_core::{CategoricalDist, NGramModel, TokenId, TokenizeMode};

/// The shipped demo corpus.
pub const DEMO_CORPUS: &str = include_str!("../../../data/demo_corpus.txt");

/// Character-level draft (order 1) and target (order 3) models on the demo
/// corpus, with the corpus tokens.
pub fn demo_pair() -> (NGramModel, NGramModel, Vec<TokenId>) {
    let (vocab, tokens) = tokenize(DEMO_CORPUS, TokenizeMode::Char).expect("demo corpus is non-empty");
    let draft = NGramModel::train(&vocab, &tokens, 1, 0.1).expect("draft trains");
    let target = NGramModel::train(&vocab, &tokens, 3, 0.1).expect("target trains");
    (draft, target, tokens)
}

/// A fixed pair of distributions over `v` tokens that differ in total variation.
pub fn skewed_pair(v: usize) -> (CategoricalDist, CategoricalDist) {
    let up: Vec<f64> = (1..=v).map(|i| i as f64).collect();
    let down: Vec<f64> = (1..=v).rev().map(|i| i as f64).collect();
    (
        sprinter_core::dist::normalize(up).expect("positive weights"),
        sprinter_core::dist::normalize(down).expect("positive weights"),
    )
}

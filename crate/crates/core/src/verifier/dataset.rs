use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::verifier::features::{featurize, FeatureVector};
use crate::verifier::ground_truth_label;

/// How the prefix preceding a labeled token was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// A seed prefix as given.
    Original,
    /// Seed prefix extended by draft samples.
    DraftCompleted,
    /// Seed prefix extended by target samples.
    TargetCompleted,
    /// Seed prefix extended by alternating draft/target samples, chosen per token.
    Mixed,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Original,
        Category::DraftCompleted,
        Category::TargetCompleted,
        Category::Mixed,
    ];
}

/// One draft-sampled token with its features and ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: bool,
    pub category: Category,
    /// Draft probability of the token.
    pub q_x: f64,
    /// Target probability of the token.
    pub p_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Examples generated for each of the four categories.
    pub per_category: usize,
    /// Label threshold on `q(x)/p(x)`.
    pub lambda: f64,
    /// Continuations are `1..=max_continuation` tokens long.
    pub max_continuation: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            per_category: 500,
            lambda: 1.2,
            max_continuation: 12,
        }
    }
}

/// Builds a class-balanced-by-category training set.
///
/// For every example a seed prefix is picked uniformly, extended according to
/// the category, and a token is drawn from the draft's next distribution;
/// the label compares its draft and target probabilities. Output is grouped by
/// category in [`Category::ALL`] order.
pub fn build_training_set<D, T, R>(
    draft: &D,
    target: &T,
    seed_prefixes: &[Vec<TokenId>],
    cfg: &DatasetConfig,
    rng: &mut R,
) -> Result<Vec<LabeledExample>>
where
    D: LanguageModel + ?Sized,
    T: LanguageModel + ?Sized,
    R: Rng + ?Sized,
{
    if draft.vocab_size() != target.vocab_size() {
        return Err(Error::VocabMismatch {
            left: draft.vocab_size(),
            right: target.vocab_size(),
        });
    }
    if seed_prefixes.is_empty() {
        return Err(Error::invalid("no seed prefixes"));
    }
    if !(cfg.lambda.is_finite() && cfg.lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {}", cfg.lambda)));
    }
    if cfg.max_continuation == 0 {
        return Err(Error::invalid("max_continuation must be at least 1"));
    }

    let mut out = Vec::with_capacity(4 * cfg.per_category);
    for category in Category::ALL {
        for _ in 0..cfg.per_category {
            let seed = &seed_prefixes[rng.gen_range(0..seed_prefixes.len())];
            let mut prefix = seed.clone();
            if category != Category::Original {
                let extra = rng.gen_range(1..=cfg.max_continuation);
                for _ in 0..extra {
                    let use_draft = match category {
                        Category::DraftCompleted => true,
                        Category::TargetCompleted => false,
                        _ => rng.gen::<bool>(),
                    };
                    let next = if use_draft {
                        draft.next_dist(&prefix).sample(rng)
                    } else {
                        target.next_dist(&prefix).sample(rng)
                    };
                    prefix.push(next);
                }
            }
            let q = draft.next_dist(&prefix);
            let x = q.sample(rng);
            let q_x = q.prob(x);
            let p_x = target.next_dist(&prefix).prob(x);
            out.push(LabeledExample {
                features: featurize(&q, x, prefix.len()),
                label: ground_truth_label(q_x, p_x, cfg.lambda),
                category,
                q_x,
                p_x,
            });
        }
    }
    Ok(out)
}

/// Recomputes labels at a different threshold without resampling.
pub fn relabel(examples: &[LabeledExample], lambda: f64) -> Vec<LabeledExample> {
    examples
        .iter()
        .map(|e| LabeledExample {
            label: ground_truth_label(e.q_x, e.p_x, lambda),
            ..e.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{CategoricalDist, RngStream};
    use crate::lm::{tokenize, NGramModel, SyntheticModel, TokenizeMode};

    fn pair() -> (NGramModel, NGramModel, Vec<Vec<TokenId>>) {
        let text = "the cat sat on the mat and the dog sat on the log while the cat ran";
        let (vocab, tokens) = tokenize(text, TokenizeMode::Char).unwrap();
        let draft = NGramModel::train(&vocab, &tokens, 1, 0.1).unwrap();
        let target = NGramModel::train(&vocab, &tokens, 3, 0.1).unwrap();
        let seeds = tokens.chunks(8).map(|c| c.to_vec()).collect();
        (draft, target, seeds)
    }

    #[test]
    fn category_counts() {
        let (draft, target, seeds) = pair();
        let cfg = DatasetConfig {
            per_category: 25,
            ..DatasetConfig::default()
        };
        let set = build_training_set(&draft, &target, &seeds, &cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(set.len(), 100);
        for c in Category::ALL {
            assert_eq!(set.iter().filter(|e| e.category == c).count(), 25);
        }
        assert!(set.iter().all(|e| e.features.0.iter().all(|x| x.is_finite())));
    }

    #[test]
    fn lambda_monotone() {
        let (draft, target, seeds) = pair();
        let cfg = DatasetConfig {
            per_category: 100,
            lambda: 1.0,
            ..DatasetConfig::default()
        };
        let set = build_training_set(&draft, &target, &seeds, &cfg, &mut RngStream::new(2, 0)).unwrap();
        let frac = |s: &[LabeledExample]| s.iter().filter(|e| e.label).count();
        let mut last = 0;
        for lambda in [0.5, 1.0, 1.2, 1.5, 3.0] {
            let n = frac(&relabel(&set, lambda));
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn identical_models_label_everything_acceptable() {
        let (draft, _, seeds) = pair();
        let cfg = DatasetConfig {
            per_category: 20,
            lambda: 1.0,
            ..DatasetConfig::default()
        };
        let set = build_training_set(&draft, &draft, &seeds, &cfg, &mut RngStream::new(3, 0)).unwrap();
        assert!(set.iter().all(|e| e.label));
    }

    #[test]
    fn deterministic_given_seed() {
        let (draft, target, seeds) = pair();
        let cfg = DatasetConfig {
            per_category: 10,
            ..DatasetConfig::default()
        };
        let a = build_training_set(&draft, &target, &seeds, &cfg, &mut RngStream::new(4, 0)).unwrap();
        let b = build_training_set(&draft, &target, &seeds, &cfg, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vocab_mismatch() {
        let a = SyntheticModel::fixed(CategoricalDist::uniform(3));
        let b = SyntheticModel::fixed(CategoricalDist::uniform(4));
        let err = build_training_set(&a, &b, &[vec![0]], &DatasetConfig::default(), &mut RngStream::new(0, 0));
        assert!(matches!(err, Err(Error::VocabMismatch { .. })));
    }
}

use std::collections::BTreeMap;

use crate::dist::{CategoricalDist, TokenId};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;

/// Table-driven model: a distribution per prefix length, with a default.
///
/// Used where theory needs exact, known `p` and `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    default: CategoricalDist,
    by_length: BTreeMap<usize, CategoricalDist>,
}

impl SyntheticModel {
    /// Same distribution for every prefix.
    pub fn fixed(dist: CategoricalDist) -> Self {
        Self {
            default: dist,
            by_length: BTreeMap::new(),
        }
    }

    /// Overrides the distribution used when the prefix has exactly `len` tokens.
    pub fn with_length(mut self, len: usize, dist: CategoricalDist) -> Result<Self> {
        if dist.vocab_size() != self.default.vocab_size() {
            return Err(Error::VocabMismatch {
                left: self.default.vocab_size(),
                right: dist.vocab_size(),
            });
        }
        self.by_length.insert(len, dist);
        Ok(self)
    }
}

impl LanguageModel for SyntheticModel {
    fn vocab_size(&self) -> usize {
        self.default.vocab_size()
    }

    fn next_dist(&self, prefix: &[TokenId]) -> CategoricalDist {
        self.by_length
            .get(&prefix.len())
            .unwrap_or(&self.default)
            .clone()
    }
}

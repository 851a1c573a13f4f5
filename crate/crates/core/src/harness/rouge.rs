use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeVariant {
    Rouge1,
    Rouge2,
    RougeL,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_overlap(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        let precision = ratio(overlap, candidate_total);
        let recall = ratio(overlap, reference_total);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-1/2 (clipped n-gram overlap) or ROUGE-L (longest common subsequence).
///
/// When the reference is too short to contain a single n-gram, the score is 1
/// for an identical candidate and 0 otherwise.
pub fn rouge<T: Eq + Hash>(candidate: &[T], reference: &[T], variant: RougeVariant) -> Result<RougeScore> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let n = match variant {
        RougeVariant::Rouge1 => 1,
        RougeVariant::Rouge2 => 2,
        RougeVariant::RougeL => {
            let l = lcs_len(candidate, reference);
            return Ok(RougeScore::from_overlap(l, candidate.len(), reference.len()));
        }
    };
    if reference.len() < n {
        let same = (candidate == reference) as u8 as f64;
        return Ok(RougeScore {
            precision: same,
            recall: same,
            f1: same,
        });
    }
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    Ok(RougeScore::from_overlap(
        overlap,
        candidate.len().saturating_sub(n - 1),
        reference.len() - (n - 1),
    ))
}

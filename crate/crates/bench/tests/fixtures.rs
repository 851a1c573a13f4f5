//! The benchmark fixtures are valid inputs for the engines.

use sprinter_bench::{demo_pair, skewed_pair};
use sprinter_core::dist::tv_distance;
use sprinter_core::LanguageModel;

#[test]
fn demo_pair_shares_a_vocabulary() {
    let (draft, target, tokens) = demo_pair();
    assert_eq!(draft.vocab_size(), target.vocab_size());
    assert!(tokens.len() > 1_000);
    assert!(tokens.iter().all(|&t| (t as usize) < draft.vocab_size()));
}

#[test]
fn skewed_pair_is_mirrored() {
    let (p, q) = skewed_pair(16);
    assert_eq!(p.vocab_size(), 16);
    assert!(tv_distance(&p, &q).unwrap() > 0.2);
    assert!((p.prob(0) - q.prob(15)).abs() < 1e-15);
}

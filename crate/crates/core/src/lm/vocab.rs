use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::error::{Error, Result};

/// Reserved begin-of-sequence symbol, always id 0.
pub const BOS: &str = "<s>";
pub const BOS_ID: TokenId = 0;

/// How raw text is split into symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    /// Whitespace-separated words; detokenized with single spaces.
    Whitespace,
    /// One symbol per Unicode scalar value.
    #[default]
    Char,
}

impl TokenizeMode {
    pub fn as_u8(self) -> u8 {
        match self {
            TokenizeMode::Whitespace => 0,
            TokenizeMode::Char => 1,
        }
    }

    pub fn from_u8(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(TokenizeMode::Whitespace),
            1 => Some(TokenizeMode::Char),
            _ => None,
        }
    }

    fn split(self, text: &str) -> Vec<String> {
        match self {
            TokenizeMode::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
            TokenizeMode::Char => text.chars().map(String::from).collect(),
        }
    }
}

/// Bijection between symbols and dense ids, BOS at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    mode: TokenizeMode,
    symbols: Vec<String>,
    lookup: HashMap<String, TokenId>,
}

impl Vocab {
    pub fn new(mode: TokenizeMode) -> Self {
        let mut v = Self {
            mode,
            symbols: Vec::new(),
            lookup: HashMap::new(),
        };
        v.intern(BOS);
        v
    }

    /// Rebuilds a vocabulary from an ordered symbol list (BOS first).
    pub fn from_symbols(mode: TokenizeMode, symbols: Vec<String>) -> Result<Self> {
        if symbols.first().map(String::as_str) != Some(BOS) {
            return Err(Error::invalid("symbol list must start with the BOS symbol"));
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if lookup.insert(s.clone(), i as TokenId).is_some() {
                return Err(Error::invalid(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self {
            mode,
            symbols,
            lookup,
        })
    }

    fn intern(&mut self, symbol: &str) -> TokenId {
        if let Some(&id) = self.lookup.get(symbol) {
            return id;
        }
        let id = self.symbols.len() as TokenId;
        self.symbols.push(symbol.to_owned());
        self.lookup.insert(symbol.to_owned(), id);
        id
    }

    pub fn mode(&self) -> TokenizeMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn id(&self, symbol: &str) -> Option<TokenId> {
        self.lookup.get(symbol).copied()
    }

    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.symbols.get(id as usize).map(String::as_str)
    }

    /// Encodes text against this fixed vocabulary.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        self.mode
            .split(text)
            .into_iter()
            .map(|s| self.id(&s).ok_or(Error::OutOfVocabulary(s)))
            .collect()
    }

    /// Joins symbols back into text, skipping BOS.
    pub fn decode(&self, tokens: &[TokenId]) -> String {
        let parts = tokens
            .iter()
            .filter(|&&t| t != BOS_ID)
            .filter_map(|&t| self.symbol(t));
        match self.mode {
            TokenizeMode::Whitespace => parts.collect::<Vec<_>>().join(" "),
            TokenizeMode::Char => parts.collect(),
        }
    }
}

/// Splits `text` and assigns ids in first-seen order.
pub fn tokenize(text: &str, mode: TokenizeMode) -> Result<(Vocab, Vec<TokenId>)> {
    let pieces = mode.split(text);
    if pieces.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut vocab = Vocab::new(mode);
    let tokens = pieces.iter().map(|s| vocab.intern(s)).collect();
    Ok((vocab, tokens))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_first_seen_order() {
        let (vocab, toks) = tokenize("a b a", TokenizeMode::Whitespace).unwrap();
        assert_eq!(toks, vec![1, 2, 1]);
        assert_eq!(vocab.symbols(), &["<s>", "a", "b"]);
    }

    #[test]
    fn char_mode() {
        let (vocab, toks) = tokenize("ab", TokenizeMode::Char).unwrap();
        assert_eq!(toks, vec![1, 2]);
        assert_eq!(vocab.decode(&toks), "ab");
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            tokenize("", TokenizeMode::Char),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            tokenize("  \n ", TokenizeMode::Whitespace),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn whitespace_round_trip_normalizes_spacing() {
        let text = "the  cat\n sat";
        let (vocab, toks) = tokenize(text, TokenizeMode::Whitespace).unwrap();
        assert_eq!(vocab.decode(&toks), "the cat sat");
    }

    #[test]
    fn encode_rejects_unknown_symbols() {
        let (vocab, _) = tokenize("ab", TokenizeMode::Char).unwrap();
        assert_eq!(vocab.encode("ba").unwrap(), vec![2, 1]);
        assert!(matches!(vocab.encode("z"), Err(Error::OutOfVocabulary(_))));
    }

    #[test]
    fn from_symbols_validates() {
        assert!(Vocab::from_symbols(TokenizeMode::Char, vec!["a".into()]).is_err());
        assert!(Vocab::from_symbols(
            TokenizeMode::Char,
            vec![BOS.into(), "a".into(), "a".into()]
        )
        .is_err());
    }
}

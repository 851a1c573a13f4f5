use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::dist::{CategoricalDist, TokenId};
use crate::error::{Error, Result};
use crate::lm::vocab::{TokenizeMode, Vocab, BOS_ID};
use crate::lm::LanguageModel;

const MAGIC: &[u8; 8] = b"SPRNGRAM";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
struct ContextCounts {
    /// Sorted by token id.
    entries: Vec<(TokenId, u64)>,
    total: u64,
}

/// Order-k Markov model with additive smoothing.
///
/// `next_dist(c)[x] = (count(c, x) + α) / (count(c, ·) + αV)`, where `c` is the
/// last `k` tokens of the prefix left-padded with BOS. Unseen contexts with
/// `α = 0` fall back to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab: Vocab,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
}

impl NGramModel {
    /// Counts every `(context, next)` pair of `corpus`, padding the start with BOS.
    pub fn train(vocab: &Vocab, corpus: &[TokenId], order: usize, alpha: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("n-gram order must be at least 1"));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!("smoothing alpha must be >= 0, got {alpha}")));
        }
        if corpus.len() <= order {
            return Err(Error::CorpusTooShort {
                len: corpus.len(),
                order,
            });
        }
        if let Some(&bad) = corpus.iter().find(|&&t| t as usize >= vocab.len()) {
            return Err(Error::invalid(format!("token {bad} outside vocabulary")));
        }

        let mut padded = vec![BOS_ID; order];
        padded.extend_from_slice(corpus);
        let mut table: BTreeMap<&[TokenId], BTreeMap<TokenId, u64>> = BTreeMap::new();
        for window in padded.windows(order + 1) {
            let (ctx, next) = window.split_at(order);
            *table.entry(ctx).or_default().entry(next[0]).or_default() += 1;
        }
        let counts = table
            .into_iter()
            .map(|(ctx, row)| {
                let entries: Vec<_> = row.into_iter().collect();
                let total = entries.iter().map(|(_, c)| c).sum();
                (ctx.to_vec(), ContextCounts { entries, total })
            })
            .collect();

        Ok(Self {
            order,
            alpha,
            vocab: vocab.clone(),
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn num_contexts(&self) -> usize {
        self.counts.len()
    }

    /// The BOS-padded context of length `order` that conditions the next token.
    pub fn context_of(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        let take = prefix.len().min(self.order);
        let mut ctx = vec![BOS_ID; self.order - take];
        ctx.extend_from_slice(&prefix[prefix.len() - take..]);
        ctx
    }

    /// Observed contexts in canonical (sorted) order.
    pub fn contexts(&self) -> Vec<&[TokenId]> {
        let mut keys: Vec<&[TokenId]> = self.counts.keys().map(Vec::as_slice).collect();
        keys.sort_unstable();
        keys
    }

    fn dist_for_context(&self, ctx: &[TokenId]) -> CategoricalDist {
        let v = self.vocab.len();
        let Some(row) = self.counts.get(ctx) else {
            return CategoricalDist::uniform(v);
        };
        let denom = row.total as f64 + self.alpha * v as f64;
        let mut probs = vec![self.alpha / denom; v];
        for &(tok, c) in &row.entries {
            probs[tok as usize] = (c as f64 + self.alpha) / denom;
        }
        CategoricalDist::new(probs).expect("smoothed counts form a distribution")
    }

    /// Writes the canonical binary encoding; equal models give equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.order as u32).to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.push(self.vocab.mode().as_u8());
        out.extend_from_slice(&(self.vocab.len() as u32).to_le_bytes());
        for sym in self.vocab.symbols() {
            out.extend_from_slice(&(sym.len() as u32).to_le_bytes());
            out.extend_from_slice(sym.as_bytes());
        }
        let contexts = self.contexts();
        out.extend_from_slice(&(contexts.len() as u64).to_le_bytes());
        for ctx in contexts {
            for &t in ctx {
                out.extend_from_slice(&t.to_le_bytes());
            }
            let row = &self.counts[ctx];
            out.extend_from_slice(&(row.entries.len() as u32).to_le_bytes());
            for &(tok, c) in &row.entries {
                out.extend_from_slice(&tok.to_le_bytes());
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }

    /// Parses bytes produced by [`NGramModel::to_bytes`]; `path` is only used in errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::format(path, "bad magic bytes"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported format version {version}"),
            ));
        }
        let order = r.u32()? as usize;
        let alpha = r.f64()?;
        let mode = TokenizeMode::from_u8(r.u8()?)
            .ok_or_else(|| Error::format(path, "unknown tokenize mode"))?;
        let n_symbols = r.u32()? as usize;
        let mut symbols = Vec::with_capacity(n_symbols.min(1 << 16));
        for _ in 0..n_symbols {
            let len = r.u32()? as usize;
            let s = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format(path, "symbol is not UTF-8"))?;
            symbols.push(s.to_owned());
        }
        let vocab = Vocab::from_symbols(mode, symbols)
            .map_err(|e| Error::format(path, e.to_string()))?;
        let n_contexts = r.u64()?;
        let mut counts = HashMap::new();
        for _ in 0..n_contexts {
            let ctx = (0..order).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let n = r.u32()? as usize;
            let mut entries = Vec::with_capacity(n.min(vocab.len()));
            for _ in 0..n {
                let tok = r.u32()?;
                if tok as usize >= vocab.len() {
                    return Err(Error::format(path, format!("token {tok} out of range")));
                }
                entries.push((tok, r.u64()?));
            }
            let total = entries.iter().map(|(_, c)| c).sum();
            counts.insert(ctx, ContextCounts { entries, total });
        }
        if r.pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes after count table"));
        }
        if order == 0 || !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::format(path, "invalid order or smoothing"));
        }
        Ok(Self {
            order,
            alpha,
            vocab,
            counts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

impl LanguageModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_dist(&self, prefix: &[TokenId]) -> CategoricalDist {
        self.dist_for_context(&self.context_of(prefix))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.path, "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.array().map(f64::from_le_bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::vocab::tokenize;

    fn char_model(text: &str, order: usize, alpha: f64) -> (Vocab, NGramModel) {
        let (vocab, toks) = tokenize(text, TokenizeMode::Char).unwrap();
        let m = NGramModel::train(&vocab, &toks, order, alpha).unwrap();
        (vocab, m)
    }

    #[test]
    fn alternating_corpus_is_deterministic_after_a() {
        let (vocab, m) = char_model("abababab", 1, 0.0);
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let d = m.next_dist(&[b, a]);
        assert_eq!(d.prob(b), 1.0);
    }

    #[test]
    fn counts_split_evenly() {
        let (vocab, m) = char_model("aab", 1, 0.0);
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let d = m.next_dist(&[a]);
        assert_eq!(d.prob(a), 0.5);
        assert_eq!(d.prob(b), 0.5);
    }

    #[test]
    fn unseen_context_is_uniform() {
        for alpha in [0.0, 1.0] {
            let (vocab, m) = char_model("abcabc", 1, alpha);
            let d = m.dist_for_context(&[99]);
            let u = 1.0 / vocab.len() as f64;
            assert!(d.probs().iter().all(|&p| (p - u).abs() < 1e-15));
        }
    }

    #[test]
    fn smoothing_formula() {
        let (vocab, m) = char_model("aab", 1, 0.5);
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let v = vocab.len() as f64;
        let d = m.next_dist(&[a]);
        let denom = 2.0 + 0.5 * v;
        assert!((d.prob(a) - 1.5 / denom).abs() < 1e-15);
        assert!((d.prob(b) - 1.5 / denom).abs() < 1e-15);
        assert!((d.prob(BOS_ID) - 0.5 / denom).abs() < 1e-15);
    }

    #[test]
    fn short_prefix_pads_with_bos() {
        let (vocab, m) = char_model("abcabd", 3, 0.0);
        assert_eq!(m.context_of(&[]), vec![0, 0, 0]);
        assert_eq!(m.context_of(&[5]), vec![0, 0, 5]);
        // The first corpus token is observed after an all-BOS context.
        let a = vocab.id("a").unwrap();
        assert_eq!(m.next_dist(&[]).prob(a), 1.0);
    }

    #[test]
    fn only_last_k_tokens_matter() {
        let (vocab, m) = char_model("the cat sat on the mat", 2, 0.1);
        let enc = |s: &str| vocab.encode(s).unwrap();
        assert_eq!(m.next_dist(&enc("the ca")), m.next_dist(&enc("sat on ca")));
    }

    #[test]
    fn corpus_too_short() {
        let (vocab, toks) = tokenize("ab", TokenizeMode::Char).unwrap();
        assert!(matches!(
            NGramModel::train(&vocab, &toks, 2, 0.1),
            Err(Error::CorpusTooShort { len: 2, order: 2 })
        ));
    }

    #[test]
    fn bytes_round_trip_and_canonical() {
        let (_, m) = char_model("abab abba baba", 2, 0.1);
        let bytes = m.to_bytes();
        assert_eq!(bytes, m.clone().to_bytes());
        let back = NGramModel::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, m);
        for ctx in m.contexts() {
            assert_eq!(back.dist_for_context(ctx), m.dist_for_context(ctx));
        }
    }

    #[test]
    fn truncated_and_corrupt_files() {
        let (_, m) = char_model("abab", 1, 0.1);
        let bytes = m.to_bytes();
        for cut in [0, 4, 12, bytes.len() - 1] {
            assert!(matches!(
                NGramModel::from_bytes(&bytes[..cut], Path::new("t")),
                Err(Error::Format { .. })
            ));
        }
        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(matches!(
            NGramModel::from_bytes(&bad_version, Path::new("t")),
            Err(Error::Format { .. })
        ));
    }
}

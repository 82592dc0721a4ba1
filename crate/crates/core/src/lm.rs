//! Interpolated add-k n-gram language model and the average negative log
//! probability used as the fluency signal.
//!
//! Each order `j` (unigram up to the model order) contributes an add-k
//! estimate over the predictable vocabulary `V` (every training word after
//! unknown-mapping, plus `</s>` and `<unk>`):
//!
//! ```text
//! P_j(w | h) = (c(h_j, w) + k) / (c(h_j) + k |V|)
//! P(w | h)   = sum_j weight_j * P_j(w | h)
//! ```
//!
//! Every `P_j` is a proper distribution for any context, so the mixture is too.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::text::tokenize;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const UNK_ID: u32 = 2;

const FORMAT_HEADER: &str = "ngram-lm 1";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("training corpus contains no sentences")]
    EmptyCorpus,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("sentence has {0} token(s); at least 2 are needed for a transition")]
    TooShort(usize),
    #[error("line {line}: malformed model file: {reason}")]
    Malformed { line: usize, reason: String },
}

/// A conditional next-token distribution.
pub trait LanguageModel: Send + Sync {
    /// `P(word | history)`. `history` holds the preceding tokens of the
    /// sentence (without boundary padding); implementations truncate it.
    fn prob(&self, history: &[&str], word: &str) -> f64;

    /// `-ln P` summed over transitions `1..n`. Override when a model can do
    /// this faster than one `prob` call per transition.
    fn neg_log_prob_sum(&self, tokens: &[&str]) -> f64 {
        (1..tokens.len()).map(|i| -self.prob(&tokens[..i], tokens[i]).ln()).sum()
    }
}

/// Mean of `-ln P(t_{i+1} | t_1..t_i)` over the `n - 1` transitions of a
/// sentence of `n` tokens.
///
/// This is the quantity the ranking code calls perplexity, although it is
/// the log of what is usually called perplexity. The first token is only
/// conditioned on, and no end-of-sentence transition is scored.
pub fn avg_neg_log_prob<M, S>(model: &M, tokens: &[S]) -> Result<f64, LmError>
where
    M: LanguageModel + ?Sized,
    S: AsRef<str>,
{
    if tokens.len() < 2 {
        return Err(LmError::TooShort(tokens.len()));
    }
    let toks: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    Ok(model.neg_log_prob_sum(&toks) / (toks.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramConfig {
    pub order: usize,
    pub k: f64,
    /// Interpolation weight per order, unigram first. `None` uses weights
    /// proportional to the order (1, 2, ..., n), normalized.
    pub weights: Option<Vec<f64>>,
    /// Words seen fewer times than this are mapped to `<unk>`. 1 disables it.
    pub min_count: u64,
}

impl Default for NGramConfig {
    fn default() -> Self {
        NGramConfig {
            order: 3,
            k: 0.01,
            weights: None,
            min_count: 2,
        }
    }
}

impl NGramConfig {
    fn resolved_weights(&self) -> Result<Vec<f64>, LmError> {
        if self.order < 2 {
            return Err(LmError::InvalidConfig(format!("order {} < 2", self.order)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(LmError::InvalidConfig(format!("k = {} must be positive", self.k)));
        }
        let w = match &self.weights {
            Some(w) => w.clone(),
            None => {
                let total = (self.order * (self.order + 1) / 2) as f64;
                (1..=self.order).map(|j| j as f64 / total).collect()
            }
        };
        if w.len() != self.order {
            return Err(LmError::InvalidConfig(format!(
                "{} weights for order {}",
                w.len(),
                self.order
            )));
        }
        let sum: f64 = w.iter().sum();
        if w.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(LmError::InvalidConfig(
                "weights must be non-negative and sum to 1".into(),
            ));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    next: FxHashMap<u32, u64>,
}

/// A trained n-gram model.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    k: f64,
    weights: Vec<f64>,
    min_count: u64,
    vocab: Vec<String>,
    ids: FxHashMap<String, u32>,
    /// `tables[j]` maps contexts of length `j` to their continuation counts.
    tables: Vec<FxHashMap<Vec<u32>, ContextCounts>>,
}

impl NGramModel {
    fn empty(config: &NGramConfig, weights: Vec<f64>) -> Self {
        let mut m = NGramModel {
            order: config.order,
            k: config.k,
            weights,
            min_count: config.min_count,
            vocab: Vec::new(),
            ids: FxHashMap::default(),
            tables: vec![FxHashMap::default(); config.order],
        };
        for w in [BOS, EOS, UNK] {
            m.intern(w);
        }
        m
    }

    fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.vocab.len() as u32;
        self.vocab.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    /// Trains on pre-tokenized sentences.
    pub fn train_sentences<S: AsRef<str>>(
        sentences: &[Vec<S>],
        config: &NGramConfig,
    ) -> Result<Self, LmError> {
        let weights = config.resolved_weights()?;
        let sentences: Vec<&Vec<S>> = sentences.iter().filter(|s| !s.is_empty()).collect();
        if sentences.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in &sentences {
            for t in s.iter() {
                *freq.entry(t.as_ref()).or_default() += 1;
            }
        }
        let mut model = NGramModel::empty(config, weights);
        let mut kept: Vec<&str> = freq
            .iter()
            .filter(|(_, c)| **c >= config.min_count)
            .map(|(w, _)| *w)
            .collect();
        kept.sort_unstable();
        for w in kept {
            model.intern(w);
        }
        for s in &sentences {
            let ids: Vec<u32> = s.iter().map(|t| model.id(t.as_ref())).collect();
            model.count_sentence(&ids);
        }
        Ok(model)
    }

    /// Trains on raw text, one sentence per line, tokenized like pipeline input.
    pub fn train_text(corpus: &str, config: &NGramConfig) -> Result<Self, LmError> {
        let sentences: Vec<Vec<String>> = corpus
            .lines()
            .filter_map(|l| tokenize(l).ok())
            .map(|s| s.surfaces().iter().map(|t| t.to_string()).collect())
            .collect();
        Self::train_sentences(&sentences, config)
    }

    pub fn train_file(path: impl AsRef<Path>, config: &NGramConfig) -> Result<Self, LmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LmError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::train_text(&text, config)
    }

    fn count_sentence(&mut self, ids: &[u32]) {
        let pad = self.order - 1;
        let mut padded = vec![BOS_ID; pad];
        padded.extend_from_slice(ids);
        padded.push(EOS_ID);
        for p in pad..padded.len() {
            let word = padded[p];
            for j in 0..self.order {
                let ctx = padded[p - j..p].to_vec();
                let cc = self.tables[j].entry(ctx).or_default();
                cc.total += 1;
                *cc.next.entry(word).or_default() += 1;
            }
        }
    }

    fn id(&self, word: &str) -> u32 {
        match self.ids.get(word) {
            Some(&BOS_ID) | None => UNK_ID,
            Some(&id) => id,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Size of the predictable vocabulary (everything except `<s>`).
    pub fn vocab_size(&self) -> usize {
        self.vocab.len() - 1
    }

    /// Predictable vocabulary words, including `</s>` and `<unk>`.
    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().skip(1).map(String::as_str)
    }

    /// Count of `word` after `context`, both as raw strings (no unknown mapping).
    pub fn count(&self, context: &[&str], word: &str) -> u64 {
        let Some(ctx) = context
            .iter()
            .map(|t| self.ids.get(*t).copied())
            .collect::<Option<Vec<u32>>>()
        else {
            return 0;
        };
        let (Some(table), Some(w)) = (self.tables.get(ctx.len()), self.ids.get(word)) else {
            return 0;
        };
        table
            .get(&ctx)
            .and_then(|cc| cc.next.get(w))
            .copied()
            .unwrap_or(0)
    }

    /// `P(word | context)` where `context` is the already-padded id history.
    fn prob_ids(&self, context: &[u32], word: u32) -> f64 {
        let v = self.vocab_size() as f64;
        let mut p = 0.0;
        for (j, weight) in self.weights.iter().enumerate() {
            if *weight == 0.0 {
                continue;
            }
            let ctx = &context[context.len() - j..];
            let (c_hw, c_h) = match self.tables[j].get(ctx) {
                Some(cc) => (cc.next.get(&word).copied().unwrap_or(0), cc.total),
                None => (0, 0),
            };
            p += weight * (c_hw as f64 + self.k) / (c_h as f64 + self.k * v);
        }
        p
    }

    fn padded_history(&self, history: &[&str]) -> Vec<u32> {
        let want = self.order - 1;
        let take = history.len().min(want);
        let mut ctx = vec![BOS_ID; want - take];
        ctx.extend(history[history.len() - take..].iter().map(|t| self.id(t)));
        ctx
    }

    /// Writes the versioned text serialization.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "order {}", self.order).unwrap();
        writeln!(out, "k {}", self.k).unwrap();
        let w: Vec<String> = self.weights.iter().map(|x| x.to_string()).collect();
        writeln!(out, "weights {}", w.join(" ")).unwrap();
        writeln!(out, "min_count {}", self.min_count).unwrap();
        writeln!(out, "vocab {}", self.vocab.len() - 3).unwrap();
        for w in &self.vocab[3..] {
            writeln!(out, "{w}").unwrap();
        }
        // Only top-order n-grams are stored; lower orders are recomputed from
        // them on load, which is exact because every position is counted at
        // every order.
        let top = self.order - 1;
        let mut lines: Vec<String> = Vec::new();
        for (ctx, cc) in &self.tables[top] {
            for (w, c) in &cc.next {
                let toks: Vec<&str> = ctx
                    .iter()
                    .chain(std::iter::once(w))
                    .map(|id| self.vocab[*id as usize].as_str())
                    .collect();
                lines.push(format!("{}\t{c}", toks.join(" ")));
            }
        }
        lines.sort();
        writeln!(out, "ngrams {}", lines.len()).unwrap();
        for l in lines {
            writeln!(out, "{l}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LmError> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .map(|(i, l)| (i + 1, l))
                .ok_or_else(|| LmError::Malformed {
                    line: 0,
                    reason: format!("unexpected end of file, expected {what}"),
                })
        };
        let bad = |line: usize, reason: &str| LmError::Malformed {
            line,
            reason: reason.to_string(),
        };
        let (n, header) = next("header")?;
        if header.trim() != FORMAT_HEADER {
            return Err(bad(n, "unsupported format header"));
        }
        fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::trim)
        }
        let (n, l) = next("order")?;
        let order: usize = field(l, "order")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(n, "expected `order N`"))?;
        let (n, l) = next("k")?;
        let k: f64 = field(l, "k")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(n, "expected `k X`"))?;
        let (n, l) = next("weights")?;
        let weights: Vec<f64> = field(l, "weights")
            .and_then(|v| v.split_whitespace().map(|x| x.parse().ok()).collect())
            .ok_or_else(|| bad(n, "expected `weights ...`"))?;
        let (n, l) = next("min_count")?;
        let min_count: u64 = field(l, "min_count")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(n, "expected `min_count N`"))?;
        let config = NGramConfig {
            order,
            k,
            weights: Some(weights),
            min_count,
        };
        let weights = config
            .resolved_weights()
            .map_err(|e| bad(n, &e.to_string()))?;
        let mut model = NGramModel::empty(&config, weights);
        let (n, l) = next("vocab")?;
        let vocab_n: usize = field(l, "vocab")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(n, "expected `vocab N`"))?;
        for _ in 0..vocab_n {
            let (n, w) = next("vocabulary word")?;
            if w.is_empty() || w.contains(char::is_whitespace) || model.ids.contains_key(w) {
                return Err(bad(n, "invalid or duplicate vocabulary word"));
            }
            model.intern(w);
        }
        let (n, l) = next("ngrams")?;
        let ngram_n: usize = field(l, "ngrams")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(n, "expected `ngrams N`"))?;
        for _ in 0..ngram_n {
            let (n, l) = next("n-gram line")?;
            let (toks, count) = l.split_once('\t').ok_or_else(|| bad(n, "expected `tokens<TAB>count`"))?;
            let count: u64 = count.trim().parse().map_err(|_| bad(n, "invalid count"))?;
            let ids: Vec<u32> = toks
                .split(' ')
                .map(|t| model.ids.get(t).copied())
                .collect::<Option<_>>()
                .ok_or_else(|| bad(n, "token not in vocabulary"))?;
            if ids.len() != order {
                return Err(bad(n, "n-gram length differs from model order"));
            }
            let word = ids[order - 1];
            for j in 0..order {
                let ctx = ids[order - 1 - j..order - 1].to_vec();
                let cc = model.tables[j].entry(ctx).or_default();
                cc.total += count;
                *cc.next.entry(word).or_default() += count;
            }
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LmError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

impl LanguageModel for NGramModel {
    fn prob(&self, history: &[&str], word: &str) -> f64 {
        let ctx = self.padded_history(history);
        self.prob_ids(&ctx, self.id(word))
    }

    fn neg_log_prob_sum(&self, tokens: &[&str]) -> f64 {
        let pad = self.order - 1;
        let mut ids = vec![BOS_ID; pad];
        ids.extend(tokens.iter().map(|t| self.id(t)));
        (pad + 1..ids.len())
            .map(|i| -self.prob_ids(&ids[i - pad..i], ids[i]).ln())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct ConstModel(f64);

    impl LanguageModel for ConstModel {
        fn prob(&self, _: &[&str], _: &str) -> f64 {
            self.0
        }
    }

    fn no_threshold(order: usize, k: f64, weights: Option<Vec<f64>>) -> NGramConfig {
        NGramConfig {
            order,
            k,
            weights,
            min_count: 1,
        }
    }

    #[test]
    fn constant_transition_probabilities() {
        let toks = ["a", "b", "c", "d"];
        let v = avg_neg_log_prob(&ConstModel((-1.0f64).exp()), &toks).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(avg_neg_log_prob(&ConstModel(1.0), &toks).unwrap(), 0.0);
        assert!(matches!(avg_neg_log_prob(&ConstModel(1.0), &["a"]), Err(LmError::TooShort(1))));
    }

    #[test]
    fn single_bigram_add_k() {
        let k = 0.01;
        let m = NGramModel::train_text("a b", &no_threshold(2, k, Some(vec![0.0, 1.0]))).unwrap();
        // V = {a, b, </s>, <unk>}
        assert_eq!(m.vocab_size(), 4);
        let want = (1.0 + k) / (1.0 + k * 4.0);
        assert!((m.prob(&["a"], "b") - want).abs() < 1e-15);
    }

    #[test]
    fn two_sentence_table_by_hand() {
        // Padded: <s> a b </s> and <s> a c </s>; V = {a, b, c, </s>, <unk>}.
        // Unigram counts over 6 predicted tokens: a 2, b 1, c 1, </s> 2.
        // Bigram: c(<s> a) = 2, c(a b) = 1, c(a c) = 1, c(b </s>) = 1.
        let k = 0.5;
        let m = NGramModel::train_text("a b\na c\n", &no_threshold(2, k, Some(vec![0.25, 0.75]))).unwrap();
        assert_eq!(m.vocab_size(), 5);
        assert_eq!(m.count(&["a"], "b"), 1);
        assert_eq!(m.count(&[BOS], "a"), 2);
        assert_eq!(m.count(&[], "a"), 2);
        let uni = |c: f64| (c + k) / (6.0 + 5.0 * k);
        let p_b_a = 0.25 * uni(1.0) + 0.75 * (1.0 + k) / (2.0 + 5.0 * k);
        let p_a_bos = 0.25 * uni(2.0) + 0.75 * (2.0 + k) / (2.0 + 5.0 * k);
        let p_a_b = 0.25 * uni(2.0) + 0.75 * (0.0 + k) / (1.0 + 5.0 * k);
        let p_z_c = 0.25 * uni(0.0) + 0.75 * k / (1.0 + 5.0 * k);
        assert!((m.prob(&["a"], "b") - p_b_a).abs() < 1e-15);
        assert!((m.prob(&[], "a") - p_a_bos).abs() < 1e-15);
        assert!((m.prob(&["b"], "a") - p_a_b).abs() < 1e-15);
        // OOV words are scored as <unk>, which was never seen.
        assert!((m.prob(&["c"], "zebra") - p_z_c).abs() < 1e-15);
    }

    #[test]
    fn four_token_sentence_by_hand() {
        // Trigram model on "x y z" twice; sentence "x y z x".
        // Padded training: <s> <s> x y z </s>, twice. V = {x, y, z, </s>, <unk>}.
        let k = 0.1;
        let w = vec![0.2, 0.3, 0.5];
        let m = NGramModel::train_text("x y z\nx y z\n", &no_threshold(3, k, Some(w.clone()))).unwrap();
        let v = 5.0;
        let addk = |c: f64, n: f64| (c + k) / (n + k * v);
        // y | (<s>, x): uni c(y)=2 of 8; bi c(x y)=2 of c(x)=2; tri c(<s> x y)=2 of 2
        let p1 = w[0] * addk(2.0, 8.0) + w[1] * addk(2.0, 2.0) + w[2] * addk(2.0, 2.0);
        // z | (x, y)
        let p2 = w[0] * addk(2.0, 8.0) + w[1] * addk(2.0, 2.0) + w[2] * addk(2.0, 2.0);
        // x | (y, z): c(z x)=0 of c(z)=2; c(y z x)=0 of 2
        let p3 = w[0] * addk(2.0, 8.0) + w[1] * addk(0.0, 2.0) + w[2] * addk(0.0, 2.0);
        let want = (-p1.ln() - p2.ln() - p3.ln()) / 3.0;
        let got = avg_neg_log_prob(&m, &["x", "y", "z", "x"]).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn rare_words_become_unknown() {
        let m = NGramModel::train_text("a b\na c\n", &NGramConfig { order: 2, ..Default::default() }).unwrap();
        let vocab: Vec<&str> = m.vocab().collect();
        assert_eq!(vocab, [EOS, UNK, "a"]);
        assert_eq!(m.count(&["a"], UNK), 2);
        assert!((m.prob(&["a"], "b") - m.prob(&["a"], "c")).abs() < 1e-15);
    }

    #[test]
    fn empty_corpus_and_bad_config() {
        assert!(matches!(NGramModel::train_text("", &NGramConfig::default()), Err(LmError::EmptyCorpus)));
        assert!(matches!(NGramModel::train_text("  \n\n", &NGramConfig::default()), Err(LmError::EmptyCorpus)));
        let bad = NGramConfig { order: 1, ..Default::default() };
        assert!(matches!(NGramModel::train_text("a b", &bad), Err(LmError::InvalidConfig(_))));
        let bad = NGramConfig { k: 0.0, ..Default::default() };
        assert!(NGramModel::train_text("a b", &bad).is_err());
        let bad = NGramConfig { weights: Some(vec![0.5, 0.6, 0.0]), ..Default::default() };
        assert!(NGramModel::train_text("a b", &bad).is_err());
    }

    fn corpus() -> String {
        crate::synth::ToyWorld::generate(&crate::synth::ToyConfig::default()).lm_corpus.join("\n")
    }

    #[test]
    fn distributions_normalize_for_seen_contexts() {
        let m = NGramModel::train_text(&corpus(), &NGramConfig::default()).unwrap();
        let vocab: Vec<String> = m.vocab().map(str::to_string).collect();
        let mut contexts: Vec<Vec<u32>> = m.tables[m.order - 1].keys().cloned().collect();
        contexts.sort();
        for ctx in contexts.iter().take(200) {
            let sum: f64 = vocab.iter().map(|w| m.prob_ids(ctx, m.id(w))).sum();
            assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
            for w in &vocab {
                let p = m.prob_ids(ctx, m.id(w));
                assert!(p > 0.0 && p <= 1.0);
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let m = NGramModel::train_text(&corpus(), &NGramConfig::default()).unwrap();
        let back = NGramModel::parse(&m.to_text()).unwrap();
        assert_eq!(back.to_text(), m.to_text());
        for s in ["i am happy", "my son was standing close to the street", "zzz qqq"] {
            let toks: Vec<&str> = s.split(' ').collect();
            assert_eq!(
                avg_neg_log_prob(&m, &toks).unwrap(),
                avg_neg_log_prob(&back, &toks).unwrap()
            );
        }
        assert!(NGramModel::parse("ngram-lm 9\n").is_err());
        assert!(NGramModel::parse("").is_err());
    }

    #[test]
    fn sentence_sum_matches_per_transition_probs() {
        let m = NGramModel::train_text(&corpus(), &NGramConfig::default()).unwrap();
        for s in ["i am happy", "zzz my son qqq was", "the dog", "a b c d e f g"] {
            let toks: Vec<&str> = s.split(' ').collect();
            let slow: f64 = (1..toks.len()).map(|i| -m.prob(&toks[..i], toks[i]).ln()).sum();
            assert!((m.neg_log_prob_sum(&toks) - slow).abs() < 1e-12, "{s}");
        }
        assert_eq!(m.neg_log_prob_sum(&["one"]), 0.0);
    }

    #[test]
    fn in_corpus_sentences_beat_permutations() {
        let text = corpus();
        let m = NGramModel::train_text(&text, &NGramConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut wins, mut trials) = (0, 0);
        for line in text.lines().filter(|l| l.split(' ').count() >= 4).take(40) {
            let toks: Vec<&str> = line.split(' ').collect();
            let mut perm = toks.clone();
            while perm == toks {
                perm.shuffle(&mut rng);
            }
            trials += 1;
            if avg_neg_log_prob(&m, &toks).unwrap() < avg_neg_log_prob(&m, &perm).unwrap() {
                wins += 1;
            }
        }
        assert!(trials >= 20);
        assert!(wins as f64 >= 0.9 * trials as f64, "{wins}/{trials}");
    }

    proptest! {
        #[test]
        fn non_negative_and_running_mean(words in proptest::collection::vec("[a-e]", 2..10), extra in "[a-f]") {
            let m = NGramModel::train_text("a b c\nb c d\nc d e\na c e\n", &no_threshold(3, 0.05, None)).unwrap();
            let before = avg_neg_log_prob(&m, &words).unwrap();
            prop_assert!(before >= 0.0);
            let hist: Vec<&str> = words.iter().map(String::as_str).collect();
            let p = m.prob(&hist, &extra);
            let mut longer = words.clone();
            longer.push(extra.clone());
            let after = avg_neg_log_prob(&m, &longer).unwrap();
            let steps = (words.len() - 1) as f64;
            let predicted = (before * steps - p.ln()) / (steps + 1.0);
            prop_assert!((after - predicted).abs() < 1e-12);
        }
    }
}

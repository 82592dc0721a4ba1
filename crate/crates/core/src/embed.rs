//! Dense word vectors: exhaustive cosine KNN, centroids and the
//! emotion-informed re-scoring of neighbours.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::emotion::{Emotion, PerEmotion, NUM_EMOTIONS};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-numeric component `{value}`")]
    NonNumeric { line: usize, value: String },
    #[error("line {line}: zero vector for `{word}` cannot be normalized")]
    ZeroVector { line: usize, word: String },
    #[error("embedding file has no vectors")]
    Empty,
    #[error("word `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("none of the {0} words is in the vocabulary")]
    AllOutOfVocabulary(usize),
    #[error("line {line}: malformed centroid line: {reason}")]
    MalformedCentroids { line: usize, reason: String },
}

/// A word with a similarity or score attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWord {
    pub word: String,
    pub score: f64,
}

/// Orders by descending score, then ascending word.
fn rank_order(a: &ScoredWord, b: &ScoredWord) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.word.cmp(&b.word))
}

/// Vocabulary of unit-normalized vectors stored row-major.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    words: Vec<String>,
    vocab: FxHashMap<String, usize>,
    matrix: Vec<f64>,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

impl EmbeddingStore {
    /// Builds a store from raw vectors, normalizing each. Duplicate words keep
    /// their first vector. Errors use 1-based entry numbers as line numbers.
    pub fn from_vectors<S: AsRef<str>>(
        entries: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, EmbedError> {
        let mut store: Option<EmbeddingStore> = None;
        for (i, (word, v)) in entries.into_iter().enumerate() {
            let s = store.get_or_insert_with(|| EmbeddingStore::empty(v.len()));
            s.push(word.as_ref(), v, i + 1)?;
        }
        store.filter(|s| !s.is_empty()).ok_or(EmbedError::Empty)
    }

    fn empty(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            words: Vec::new(),
            vocab: FxHashMap::default(),
            matrix: Vec::new(),
        }
    }

    fn push(&mut self, word: &str, mut v: Vec<f64>, line: usize) -> Result<(), EmbedError> {
        if v.len() != self.dim || self.dim == 0 {
            return Err(EmbedError::DimensionMismatch {
                line,
                expected: self.dim,
                found: v.len(),
            });
        }
        if self.vocab.contains_key(word) {
            return Ok(());
        }
        let n = norm(&v);
        if n == 0.0 || !n.is_finite() {
            return Err(EmbedError::ZeroVector {
                line,
                word: word.to_string(),
            });
        }
        v.iter_mut().for_each(|x| *x /= n);
        self.vocab.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.matrix.extend(v);
        Ok(())
    }

    /// Parses word2vec text format with an optional `count dim` header.
    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut lines = text.lines().enumerate().peekable();
        let mut dim: Option<usize> = None;
        if let Some((_, first)) = lines.peek() {
            let fields: Vec<&str> = first.split_whitespace().collect();
            if fields.len() == 2 {
                if let (Ok(_count), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    dim = Some(d);
                    lines.next();
                }
            }
        }
        let mut store: Option<EmbeddingStore> = dim.map(EmbeddingStore::empty);
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else {
                continue;
            };
            let mut v = Vec::new();
            for f in fields {
                match f.parse::<f64>() {
                    Ok(x) if x.is_finite() => v.push(x),
                    _ => {
                        return Err(EmbedError::NonNumeric {
                            line: i + 1,
                            value: f.to_string(),
                        })
                    }
                }
            }
            let s = store.get_or_insert_with(|| EmbeddingStore::empty(v.len()));
            s.push(word, v, i + 1)?;
        }
        store.filter(|s| !s.is_empty()).ok_or(EmbedError::Empty)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serializes in word2vec text format with a header line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// The unit vector of `word`.
    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|&i| self.row(i))
    }

    fn vector_or_oov(&self, word: &str) -> Result<&[f64], EmbedError> {
        self.vector(word)
            .ok_or_else(|| EmbedError::OutOfVocabulary(word.to_string()))
    }

    /// Cosine between two in-vocabulary words.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64, EmbedError> {
        Ok(dot(self.vector_or_oov(a)?, self.vector_or_oov(b)?))
    }

    /// The `u` most cosine-similar words to `word`, excluding itself, by
    /// descending cosine with lexicographic tie-breaking. Scans the whole
    /// vocabulary.
    pub fn nearest(&self, word: &str, u: usize) -> Result<Vec<ScoredWord>, EmbedError> {
        let q = self.vector_or_oov(word)?;
        let mut all: Vec<ScoredWord> = self
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| w.as_str() != word)
            .map(|(i, w)| ScoredWord {
                word: w.clone(),
                score: dot(q, self.row(i)),
            })
            .collect();
        if u < all.len() && u > 0 {
            all.select_nth_unstable_by(u - 1, rank_order);
        }
        all.truncate(u);
        all.sort_by(rank_order);
        Ok(all)
    }

    /// Arithmetic mean of the unit vectors of the in-vocabulary `words`.
    /// The result is not re-normalized.
    pub fn centroid<S: AsRef<str>>(&self, words: &[S]) -> Result<Centroid, EmbedError> {
        let mut sum = vec![0.0; self.dim];
        let mut used = 0usize;
        let mut skipped = Vec::new();
        for w in words {
            match self.vector(w.as_ref()) {
                Some(v) => {
                    sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                    used += 1;
                }
                None => skipped.push(w.as_ref().to_string()),
            }
        }
        if used == 0 {
            return Err(EmbedError::AllOutOfVocabulary(words.len()));
        }
        sum.iter_mut().for_each(|s| *s /= used as f64);
        Ok(Centroid {
            vector: sum,
            used,
            skipped,
        })
    }

    /// Mean of the in-vocabulary token vectors; `None` when no token is known.
    pub fn mean_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut used = 0usize;
        for t in tokens {
            if let Some(v) = self.vector(t.as_ref()) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                used += 1;
            }
        }
        (used > 0).then(|| {
            sum.iter_mut().for_each(|s| *s /= used as f64);
            sum
        })
    }
}

/// A centroid together with which members contributed to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub vector: Vec<f64>,
    pub used: usize,
    pub skipped: Vec<String>,
}

/// One centroid per emotion, in [`Emotion::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionCentroids {
    vectors: PerEmotion<Vec<f64>>,
}

impl EmotionCentroids {
    /// Panics if the vectors differ in length or hold non-finite values.
    pub fn new(vectors: PerEmotion<Vec<f64>>) -> Self {
        let dim = vectors[0].len();
        assert!(
            vectors.iter().all(|v| v.len() == dim && v.iter().all(|x| x.is_finite())),
            "centroids must share one dimension and be finite"
        );
        EmotionCentroids { vectors }
    }

    pub fn get(&self, e: Emotion) -> &[f64] {
        &self.vectors[e.index()]
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// `emotion<TAB>v1 ... v_dim` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in Emotion::ALL {
            out.push_str(e.name());
            out.push('\t');
            let parts: Vec<String> = self.get(e).iter().map(|x| x.to_string()).collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut slots: [Option<Vec<f64>>; NUM_EMOTIONS] = Default::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| EmbedError::MalformedCentroids { line: i + 1, reason };
            let (name, values) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `emotion<TAB>values`".into()))?;
            let e: Emotion = name.parse().map_err(|err: crate::emotion::UnknownEmotion| bad(err.to_string()))?;
            let v = values
                .split_whitespace()
                .map(|f| f.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| bad("non-numeric component".into()))?;
            if slots[e.index()].replace(v).is_some() {
                return Err(bad(format!("duplicate emotion `{e}`")));
            }
        }
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(NUM_EMOTIONS);
        for (i, slot) in slots.into_iter().enumerate() {
            let v = slot.ok_or_else(|| EmbedError::MalformedCentroids {
                line: 0,
                reason: format!("missing emotion `{}`", Emotion::ALL[i]),
            })?;
            if !vectors.is_empty() && v.len() != vectors[0].len() {
                return Err(EmbedError::MalformedCentroids {
                    line: 0,
                    reason: "centroids differ in dimension".into(),
                });
            }
            vectors.push(v);
        }
        let vectors: PerEmotion<Vec<f64>> = vectors.try_into().expect("six centroids");
        Ok(EmotionCentroids { vectors })
    }
}

/// `cos(target centroid, c)` minus the mean cosine of `c` to the other five
/// emotion centroids. Lies in `[-2, 2]`.
pub fn informed_score(
    store: &EmbeddingStore,
    candidate: &str,
    target: Emotion,
    centroids: &EmotionCentroids,
) -> Result<f64, EmbedError> {
    let c = store.vector_or_oov(candidate)?;
    Ok(informed_score_vec(c, target, centroids))
}

fn informed_score_vec(c: &[f64], target: Emotion, centroids: &EmotionCentroids) -> f64 {
    let mut others = 0.0;
    for e in Emotion::ALL {
        if e != target {
            others += cosine(centroids.get(e), c);
        }
    }
    cosine(centroids.get(target), c) - others / (NUM_EMOTIONS - 1) as f64
}

/// Takes the `u` nearest neighbours of `word`, re-scores each with
/// [`informed_score`] for `target`, and keeps the best `v` (ties by word).
pub fn informed_retrieve(
    store: &EmbeddingStore,
    word: &str,
    target: Emotion,
    centroids: &EmotionCentroids,
    u: usize,
    v: usize,
) -> Result<Vec<ScoredWord>, EmbedError> {
    let mut scored: Vec<ScoredWord> = store
        .nearest(word, u)?
        .into_iter()
        .map(|n| {
            let c = store.vector(&n.word).expect("neighbour is in vocabulary");
            ScoredWord {
                score: informed_score_vec(c, target, centroids),
                word: n.word,
            }
        })
        .collect();
    scored.sort_by(rank_order);
    scored.truncate(v);
    Ok(scored)
}

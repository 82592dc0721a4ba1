//! Multinomial logistic regression over mean word vectors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::{softmax, EmotionScorer};
use crate::embed::EmbeddingStore;
use crate::emotion::{Emotion, PerEmotion, NUM_EMOTIONS};

const FORMAT_HEADER: &str = "linear-scorer 1";

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("no training example for {0}")]
    MissingClass(Emotion),
    #[error("feature dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum ScorerFileError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed scorer file: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("scorer dimension {scorer} does not match embedding dimension {store}")]
    DimensionMismatch { scorer: usize, store: usize },
}

/// Weights (`|E| x dim`, row-major) and bias of a softmax regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: PerEmotion<f64>,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            dim,
            weights: vec![0.0; NUM_EMOTIONS * dim],
            bias: [0.0; NUM_EMOTIONS],
        }
    }

    /// Number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.weights.len() + NUM_EMOTIONS
    }

    /// Parameters flattened as weights then bias.
    pub fn params(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn from_params(dim: usize, params: &[f64]) -> Self {
        assert_eq!(params.len(), NUM_EMOTIONS * (dim + 1));
        let (w, b) = params.split_at(NUM_EMOTIONS * dim);
        LinearModel {
            dim,
            weights: w.to_vec(),
            bias: b.try_into().expect("six biases"),
        }
    }

    pub fn logits(&self, x: &[f64]) -> PerEmotion<f64> {
        let mut out = self.bias;
        for (e, o) in out.iter_mut().enumerate() {
            let row = &self.weights[e * self.dim..(e + 1) * self.dim];
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        out
    }

    pub fn predict(&self, x: &[f64]) -> Emotion {
        let l = self.logits(x);
        let best = (0..NUM_EMOTIONS)
            .max_by(|a, b| l[*a].partial_cmp(&l[*b]).unwrap().then(b.cmp(a)))
            .expect("non-empty");
        Emotion::from_index(best).expect("valid index")
    }

    /// Mean cross-entropy over the batch and its gradient (same layout as
    /// the model).
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[Emotion]) -> (f64, LinearModel) {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len().max(1) as f64;
        let mut grad = LinearModel::zeros(self.dim);
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let p = softmax(&self.logits(x));
            loss -= p[y.index()].max(f64::MIN_POSITIVE).ln();
            for e in 0..NUM_EMOTIONS {
                let d = (p[e] - if e == y.index() { 1.0 } else { 0.0 }) / n;
                grad.bias[e] += d;
                let row = &mut grad.weights[e * self.dim..(e + 1) * self.dim];
                row.iter_mut().zip(x).for_each(|(g, v)| *g += d * v);
            }
        }
        (loss / n, grad)
    }

    pub fn loss(&self, xs: &[Vec<f64>], ys: &[Emotion]) -> f64 {
        self.loss_and_gradient(xs, ys).0
    }

    /// Full-batch gradient descent from the current parameters. Returns the
    /// loss before each step followed by the final loss (`epochs + 1` values).
    pub fn fit(
        &mut self,
        xs: &[Vec<f64>],
        ys: &[Emotion],
        epochs: usize,
        learning_rate: f64,
    ) -> Result<Vec<f64>, TrainError> {
        if let Some(x) = xs.iter().find(|x| x.len() != self.dim) {
            return Err(TrainError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        for e in Emotion::ALL {
            if !ys.contains(&e) {
                return Err(TrainError::MissingClass(e));
            }
        }
        let mut history = Vec::with_capacity(epochs + 1);
        for _ in 0..epochs {
            let (loss, grad) = self.loss_and_gradient(xs, ys);
            history.push(loss);
            self.weights
                .iter_mut()
                .zip(&grad.weights)
                .for_each(|(w, g)| *w -= learning_rate * g);
            self.bias
                .iter_mut()
                .zip(&grad.bias)
                .for_each(|(b, g)| *b -= learning_rate * g);
        }
        history.push(self.loss(xs, ys));
        Ok(history)
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[Emotion]) -> f64 {
        let hits = xs.iter().zip(ys).filter(|(x, y)| self.predict(x) == **y).count();
        hits as f64 / xs.len().max(1) as f64
    }
}

/// [`LinearModel`] applied to the mean in-vocabulary token vector of a
/// sentence (the zero vector when no token is known).
#[derive(Debug, Clone)]
pub struct LinearScorer {
    model: LinearModel,
    store: Arc<EmbeddingStore>,
}

impl LinearScorer {
    pub fn new(model: LinearModel, store: Arc<EmbeddingStore>) -> Result<Self, ScorerFileError> {
        if model.dim != store.dim() {
            return Err(ScorerFileError::DimensionMismatch {
                scorer: model.dim,
                store: store.dim(),
            });
        }
        Ok(LinearScorer { model, store })
    }

    pub fn features<S: AsRef<str>>(store: &EmbeddingStore, tokens: &[S]) -> Vec<f64> {
        store
            .mean_vector(tokens)
            .unwrap_or_else(|| vec![0.0; store.dim()])
    }

    /// Trains from zero initialization; returns the scorer and loss history.
    pub fn train<S: AsRef<str>>(
        examples: &[(Vec<S>, Emotion)],
        store: Arc<EmbeddingStore>,
        epochs: usize,
        learning_rate: f64,
    ) -> Result<(Self, Vec<f64>), TrainError> {
        let xs: Vec<Vec<f64>> = examples
            .iter()
            .map(|(t, _)| Self::features(&store, t))
            .collect();
        let ys: Vec<Emotion> = examples.iter().map(|(_, e)| *e).collect();
        let mut model = LinearModel::zeros(store.dim());
        let history = model.fit(&xs, &ys, epochs, learning_rate)?;
        Ok((LinearScorer { model, store }, history))
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn store(&self) -> &Arc<EmbeddingStore> {
        &self.store
    }

    /// `linear-scorer 1`, then `dim D`, `classes 6`, six weight rows and
    /// one bias row, space-separated.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut out = format!("{FORMAT_HEADER}\ndim {}\nclasses {NUM_EMOTIONS}\n", m.dim);
        let row = |vals: &[f64]| vals.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        for e in 0..NUM_EMOTIONS {
            writeln!(out, "{}", row(&m.weights[e * m.dim..(e + 1) * m.dim])).unwrap();
        }
        writeln!(out, "{}", row(&m.bias)).unwrap();
        out
    }

    pub fn parse(text: &str, store: Arc<EmbeddingStore>) -> Result<Self, ScorerFileError> {
        let bad = |line: usize, reason: &str| ScorerFileError::Malformed {
            line,
            reason: reason.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        if lines.first().map(|l| l.trim()) != Some(FORMAT_HEADER) {
            return Err(bad(1, "unsupported format header"));
        }
        let dim: usize = lines
            .get(1)
            .and_then(|l| l.strip_prefix("dim "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(2, "expected `dim D`"))?;
        let classes: usize = lines
            .get(2)
            .and_then(|l| l.strip_prefix("classes "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(3, "expected `classes 6`"))?;
        if classes != NUM_EMOTIONS {
            return Err(bad(3, "class count must be 6"));
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(NUM_EMOTIONS + 1);
        for i in 0..=NUM_EMOTIONS {
            let n = i + 4;
            let line = lines.get(n - 1).ok_or_else(|| bad(n, "missing row"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| bad(n, "non-numeric or non-finite value"))?;
            let want = if i < NUM_EMOTIONS { dim } else { NUM_EMOTIONS };
            if vals.len() != want {
                return Err(bad(n, &format!("expected {want} values, found {}", vals.len())));
            }
            rows.push(vals);
        }
        let bias: PerEmotion<f64> = rows.pop().unwrap().try_into().unwrap();
        let model = LinearModel {
            dim,
            weights: rows.concat(),
            bias,
        };
        LinearScorer::new(model, store)
    }

    pub fn load(path: impl AsRef<Path>, store: Arc<EmbeddingStore>) -> Result<Self, ScorerFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScorerFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, store)
    }
}

impl EmotionScorer for LinearScorer {
    fn activations(&self, tokens: &[&str]) -> PerEmotion<f64> {
        match self.store.mean_vector(tokens) {
            Some(x) => self.model.logits(&x),
            None => self.model.bias,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::emo;

    fn two_d_store() -> Arc<EmbeddingStore> {
        Arc::new(
            EmbeddingStore::from_vectors([("x", vec![1.0, 0.0]), ("y", vec![0.0, 1.0])]).unwrap(),
        )
    }

    #[test]
    fn zero_epochs_give_uniform_output() {
        let store = two_d_store();
        let examples: Vec<(Vec<&str>, Emotion)> =
            Emotion::ALL.iter().map(|e| (vec!["x"], *e)).collect();
        let (scorer, hist) = LinearScorer::train(&examples, store, 0, 0.1).unwrap();
        assert_eq!(hist.len(), 1);
        assert!((hist[0] - (6.0f64).ln()).abs() < 1e-12);
        for e in Emotion::ALL {
            assert!((emo(&scorer, &["x", "y"], e) - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_class_is_an_error() {
        let examples = vec![(vec!["x"], Emotion::Joy), (vec!["y"], Emotion::Anger)];
        let err = LinearScorer::train(&examples, two_d_store(), 10, 0.1).unwrap_err();
        assert_eq!(err, TrainError::MissingClass(Emotion::Disgust));
    }

    #[test]
    fn activations_are_affine_in_the_mean_vector() {
        let mut m = LinearModel::zeros(2);
        m.weights = vec![1.0, 2.0, 0.0, 0.0, -1.0, 0.5, 0.0, 0.0, 3.0, 0.0, 0.0, -3.0];
        m.bias = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let s = LinearScorer::new(m, two_d_store()).unwrap();
        let a = s.activations(&["x", "y", "oov"]);
        assert!((a[0] - (0.1 + 0.5 + 1.0)).abs() < 1e-15);
        assert!((a[2] - (0.3 - 0.5 + 0.25)).abs() < 1e-15);
        assert!((a[5] - (0.6 - 1.5)).abs() < 1e-15);
        // No in-vocabulary token: zero features, so just the bias.
        assert_eq!(s.activations(&["oov"]), [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(s.activations(&[]), [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mut m = LinearModel::zeros(2);
        m.weights.iter_mut().enumerate().for_each(|(i, w)| *w = i as f64 / 7.0 - 0.5);
        m.bias = [0.25, -1.0, 1e-9, 3.0, 0.0, -0.125];
        let s = LinearScorer::new(m.clone(), two_d_store()).unwrap();
        let back = LinearScorer::parse(&s.to_text(), two_d_store()).unwrap();
        assert_eq!(back.model(), &m);

        let three = Arc::new(EmbeddingStore::from_vectors([("z", vec![1.0, 0.0, 0.0])]).unwrap());
        assert!(matches!(
            LinearScorer::parse(&s.to_text(), three),
            Err(ScorerFileError::DimensionMismatch { scorer: 2, store: 3 })
        ));
        let truncated: String = s.to_text().lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            LinearScorer::parse(&truncated, two_d_store()),
            Err(ScorerFileError::Malformed { line: 6, .. })
        ));
        assert!(LinearScorer::parse("nonsense\n", two_d_store()).is_err());
    }
}

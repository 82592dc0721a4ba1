//! The three objective terms, their weighted combination, the emotion scorer
//! contract and occlusion salience.

mod linear;

pub use linear::{LinearModel, LinearScorer, ScorerFileError, TrainError};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine, EmbeddingStore};
use crate::emolex::EmotionLexicon;
use crate::emotion::{Emotion, PerEmotion, NUM_EMOTIONS};

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("{0} sentence has no in-vocabulary token")]
    NoInVocabulary(SentenceRole),
    #[error("perplexity {ppl} outside batch range [{min}, {max}]")]
    OutOfRange { ppl: f64, min: f64, max: f64 },
    #[error("invalid objective weights: {0}")]
    InvalidWeights(String),
}

/// Which side of a similarity comparison failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentenceRole {
    Source,
    Variation,
}

impl fmt::Display for SentenceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentenceRole::Source => "source",
            SentenceRole::Variation => "variation",
        })
    }
}

/// Maps a token sequence to one unnormalized activation per emotion.
///
/// Implementations must return finite values and define the empty sequence
/// as the zero vector.
pub trait EmotionScorer: Send + Sync {
    fn activations(&self, tokens: &[&str]) -> PerEmotion<f64>;
}

impl<T: EmotionScorer + ?Sized> EmotionScorer for std::sync::Arc<T> {
    fn activations(&self, tokens: &[&str]) -> PerEmotion<f64> {
        (**self).activations(tokens)
    }
}

/// Scores a sentence by counting lexicon hits per emotion, scaled by `gain`.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: EmotionLexicon,
    gain: f64,
}

impl LexiconScorer {
    pub fn new(lexicon: EmotionLexicon) -> Self {
        Self::with_gain(lexicon, 1.0)
    }

    pub fn with_gain(lexicon: EmotionLexicon, gain: f64) -> Self {
        assert!(gain.is_finite(), "gain must be finite");
        LexiconScorer { lexicon, gain }
    }

    pub fn lexicon(&self) -> &EmotionLexicon {
        &self.lexicon
    }
}

impl EmotionScorer for LexiconScorer {
    fn activations(&self, tokens: &[&str]) -> PerEmotion<f64> {
        self.lexicon.activations(tokens).map(|c| c * self.gain)
    }
}

/// Softmax with max-subtraction.
pub fn softmax(activations: &PerEmotion<f64>) -> PerEmotion<f64> {
    let max = activations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = activations.map(|a| (a - max).exp());
    let z: f64 = exps.iter().sum();
    exps.map(|x| x / z)
}

/// Probability the scorer assigns to `target` for `tokens`.
pub fn emo<S: EmotionScorer + ?Sized>(scorer: &S, tokens: &[&str], target: Emotion) -> f64 {
    softmax(&scorer.activations(tokens))[target.index()]
}

/// Full emotion distribution for `tokens`.
pub fn emotion_distribution<S: EmotionScorer + ?Sized>(scorer: &S, tokens: &[&str]) -> PerEmotion<f64> {
    softmax(&scorer.activations(tokens))
}

/// Cosine between the mean token vectors of two sentences.
pub fn sim<S: AsRef<str>, T: AsRef<str>>(
    store: &EmbeddingStore,
    source: &[S],
    variation: &[T],
) -> Result<f64, ScoringError> {
    let r = store
        .mean_vector(source)
        .ok_or(ScoringError::NoInVocabulary(SentenceRole::Source))?;
    let r2 = store
        .mean_vector(variation)
        .ok_or(ScoringError::NoInVocabulary(SentenceRole::Variation))?;
    Ok(cosine(&r, &r2).clamp(-1.0, 1.0))
}

/// Min-max normalization with reversed polarity: the lowest perplexity in a
/// batch maps to 1, the highest to 0. A batch with a single distinct
/// perplexity maps everything to 1.
pub fn flu(ppl: f64, ppl_min: f64, ppl_max: f64) -> Result<f64, ScoringError> {
    if !(ppl_min <= ppl && ppl <= ppl_max) {
        return Err(ScoringError::OutOfRange {
            ppl,
            min: ppl_min,
            max: ppl_max,
        });
    }
    if ppl_min == ppl_max {
        return Ok(1.0);
    }
    Ok(((ppl - ppl_max) / (ppl_min - ppl_max)).clamp(0.0, 1.0))
}

/// Non-negative weights on (emo, sim, flu) summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    emo: f64,
    sim: f64,
    flu: f64,
}

impl ObjectiveWeights {
    /// Emotion score only, as used for automatic evaluation.
    pub const EMO_ONLY: ObjectiveWeights = ObjectiveWeights {
        emo: 1.0,
        sim: 0.0,
        flu: 0.0,
    };

    pub const EQUAL: ObjectiveWeights = ObjectiveWeights {
        emo: 1.0 / 3.0,
        sim: 1.0 / 3.0,
        flu: 1.0 / 3.0,
    };

    pub fn new(emo: f64, sim: f64, flu: f64) -> Result<Self, ScoringError> {
        let all = [emo, sim, flu];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(ScoringError::InvalidWeights(format!(
                "({emo}, {sim}, {flu}) has a negative or non-finite entry"
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ScoringError::InvalidWeights(format!(
                "({emo}, {sim}, {flu}) sums to {sum}, not 1"
            )));
        }
        Ok(ObjectiveWeights { emo, sim, flu })
    }

    pub fn emo(&self) -> f64 {
        self.emo
    }

    pub fn sim(&self) -> f64 {
        self.sim
    }

    pub fn flu(&self) -> f64 {
        self.flu
    }
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self::EQUAL
    }
}

impl fmt::Display for ObjectiveWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.emo, self.sim, self.flu)
    }
}

/// Parses `e,s,f`.
impl FromStr for ObjectiveWeights {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ScoringError::InvalidWeights(format!(
                "`{s}`: expected three comma-separated numbers"
            )));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| ScoringError::InvalidWeights(format!("`{p}` is not a number")))?;
        }
        ObjectiveWeights::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub emo: f64,
    pub sim: f64,
    pub flu: f64,
    pub total: f64,
}

/// Weighted sum of the three terms.
pub fn objective(emo: f64, sim: f64, flu: f64, weights: &ObjectiveWeights) -> ScoreBreakdown {
    ScoreBreakdown {
        emo,
        sim,
        flu,
        total: weights.emo * emo + weights.sim * sim + weights.flu * flu,
    }
}

/// Per-token occlusion salience: the L1 distance between the emotion
/// distribution of the sentence and that of the sentence with the token
/// removed.
pub fn salience<S: EmotionScorer + ?Sized>(scorer: &S, tokens: &[&str]) -> Vec<f64> {
    let full = emotion_distribution(scorer, tokens);
    let mut rest: Vec<&str> = Vec::with_capacity(tokens.len());
    (0..tokens.len())
        .map(|i| {
            rest.clear();
            rest.extend(tokens[..i].iter().chain(&tokens[i + 1..]));
            let without = emotion_distribution(scorer, &rest);
            (0..NUM_EMOTIONS).map(|e| (full[e] - without[e]).abs()).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Fixed(PerEmotion<f64>);

    impl EmotionScorer for Fixed {
        fn activations(&self, _: &[&str]) -> PerEmotion<f64> {
            self.0
        }
    }

    /// Bag-of-words scorer: every token adds its own row.
    struct Bow;

    impl EmotionScorer for Bow {
        fn activations(&self, tokens: &[&str]) -> PerEmotion<f64> {
            let mut a = [0.0; NUM_EMOTIONS];
            for t in tokens {
                let h = t.bytes().map(usize::from).sum::<usize>();
                a[h % NUM_EMOTIONS] += 1.0 + (h % 7) as f64 * 0.1;
            }
            a
        }
    }

    #[test]
    fn emo_reference_values() {
        assert!((emo(&Fixed([2.5; 6]), &[], Emotion::Fear) - 1.0 / 6.0).abs() < 1e-15);
        let e = std::f64::consts::E;
        let got = emo(&Fixed([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), &["x"], Emotion::Anger);
        assert!((got - e / (e + 5.0)).abs() < 1e-15);
        assert!((got - 0.3521).abs() < 1e-4);
    }

    #[test]
    fn emo_matches_direct_softmax() {
        let a = [0.3, -1.2, 2.0, 0.7, 0.0, -0.4];
        let z: f64 = a.iter().map(|x: &f64| x.exp()).sum();
        for e in Emotion::ALL {
            let got = emo(&Fixed(a), &["w"], e);
            assert!((got - a[e.index()].exp() / z).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_is_stable_for_large_activations() {
        let p = softmax(&[1000.0, 999.0, 0.0, 0.0, -1000.0, 0.0]);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn store2d() -> EmbeddingStore {
        EmbeddingStore::from_vectors([
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("c", vec![-1.0, 0.0]),
            ("d", vec![0.6, 0.8]),
        ])
        .unwrap()
    }

    #[test]
    fn sim_cases() {
        let s = store2d();
        assert!((sim(&s, &["a", "b"], &["a", "b"]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(sim(&s, &["a"], &["b"]).unwrap(), 0.0);
        // Source a b a b d: mean (2.6, 2.8)/5. Replace position 4 (d) with c: (1, 2)/5.
        let src = ["a", "b", "a", "b", "d"];
        let var = ["a", "b", "a", "b", "c"];
        let (r, r2): ([f64; 2], [f64; 2]) = ([2.6, 2.8], [1.0, 2.0]);
        let want = (r[0] * r2[0] + r[1] * r2[1])
            / (r[0] * r[0] + r[1] * r[1]).sqrt()
            / (r2[0] * r2[0] + r2[1] * r2[1]).sqrt();
        assert!((sim(&s, &src, &var).unwrap() - want).abs() < 1e-12);
        // Out-of-vocabulary tokens are ignored in the mean.
        assert!((sim(&s, &["a", "zzz"], &["a"]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            sim(&s, &["zzz"], &["a"]),
            Err(ScoringError::NoInVocabulary(SentenceRole::Source))
        );
        assert_eq!(
            sim(&s, &["a"], &["qqq"]),
            Err(ScoringError::NoInVocabulary(SentenceRole::Variation))
        );
    }

    #[test]
    fn flu_endpoints_and_errors() {
        assert_eq!(flu(2.0, 2.0, 6.0).unwrap(), 1.0);
        assert_eq!(flu(6.0, 2.0, 6.0).unwrap(), 0.0);
        assert_eq!(flu(4.0, 2.0, 6.0).unwrap(), 0.5);
        assert_eq!(flu(3.0, 3.0, 3.0).unwrap(), 1.0);
        assert!(matches!(flu(7.0, 2.0, 6.0), Err(ScoringError::OutOfRange { .. })));
        assert!(flu(f64::NAN, 2.0, 6.0).is_err());
    }

    #[test]
    fn weights_and_objective() {
        let w = ObjectiveWeights::EMO_ONLY;
        assert_eq!(objective(0.4, 0.9, 0.1, &w).total, 0.4);
        let b = objective(0.6, 0.9, 0.3, &ObjectiveWeights::EQUAL);
        assert!((b.total - 0.6).abs() < 1e-15);
        assert!(ObjectiveWeights::new(0.5, 0.5, 0.1).is_err());
        assert!(ObjectiveWeights::new(1.2, -0.2, 0.0).is_err());
        assert_eq!("1,0,0".parse::<ObjectiveWeights>().unwrap(), ObjectiveWeights::EMO_ONLY);
        assert_eq!("0.5, 0.5, 0".parse::<ObjectiveWeights>().unwrap(), ObjectiveWeights::new(0.5, 0.5, 0.0).unwrap());
        assert!("1,0".parse::<ObjectiveWeights>().is_err());
        assert!("a,b,c".parse::<ObjectiveWeights>().is_err());
        let w = ObjectiveWeights::new(0.2, 0.3, 0.5).unwrap();
        assert_eq!(w.to_string().parse::<ObjectiveWeights>().unwrap(), w);
    }

    #[test]
    fn salience_cases() {
        let w = salience(&Bow, &["x", "x", "x", "x"]);
        assert!(w.iter().all(|x| *x == w[0]));
        assert!(w[0] > 0.0);

        let mut lex = EmotionLexicon::new();
        lex.set("happy", Emotion::Joy, true);
        let scorer = LexiconScorer::new(lex);
        let w = salience(&scorer, &["i", "am", "happy"]);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[1], 0.0);
        assert!(w[2] > 0.0);

        // Removing the only token leaves the empty sentence, i.e. uniform.
        let w = salience(&scorer, &["happy"]);
        let p = softmax(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let want: f64 = p.iter().map(|x| (x - 1.0 / 6.0).abs()).sum();
        assert_eq!(w.len(), 1);
        assert!((w[0] - want).abs() < 1e-15);
    }

    fn arr6() -> impl Strategy<Value = PerEmotion<f64>> {
        proptest::array::uniform6(-50.0f64..50.0)
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(a in arr6(), c in -100.0f64..100.0) {
            let p = softmax(&a);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let q = softmax(&a.map(|x| x + c));
            for e in 0..NUM_EMOTIONS {
                prop_assert!((p[e] - q[e]).abs() < 1e-12);
            }
        }

        #[test]
        fn sim_is_symmetric(x in proptest::collection::vec(0usize..4, 1..6), y in proptest::collection::vec(0usize..4, 1..6)) {
            let s = store2d();
            let words = ["a", "b", "c", "d"];
            let xs: Vec<&str> = x.iter().map(|i| words[*i]).collect();
            let ys: Vec<&str> = y.iter().map(|i| words[*i]).collect();
            if let (Ok(a), Ok(b)) = (sim(&s, &xs, &ys), sim(&s, &ys, &xs)) {
                prop_assert!((a - b).abs() < 1e-15);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn flu_monotone(lo in 0.0f64..10.0, span in 0.0f64..10.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let hi = lo + span;
            let (a, b) = (lo + t1.min(t2) * span, lo + t1.max(t2) * span);
            let (a, b) = (a.clamp(lo, hi), b.clamp(lo, hi));
            let (fa, fb) = (flu(a, lo, hi).unwrap(), flu(b, lo, hi).unwrap());
            prop_assert!(fa >= fb);
            prop_assert!((0.0..=1.0).contains(&fa));
        }

        #[test]
        fn objective_is_monotone(
            w in proptest::array::uniform3(0.0f64..1.0),
            base in proptest::array::uniform3(0.0f64..1.0),
            which in 0usize..3,
            bump in 0.0f64..1.0,
        ) {
            let s: f64 = w.iter().sum::<f64>().max(1e-6);
            let weights = match ObjectiveWeights::new(w[0] / s, w[1] / s, 1.0 - w[0] / s - w[1] / s) {
                Ok(x) => x,
                Err(_) => return Ok(()),
            };
            let before = objective(base[0], base[1], base[2], &weights).total;
            let mut up = base;
            up[which] += bump;
            let after = objective(up[0], up[1], up[2], &weights).total;
            prop_assert!(after >= before - 1e-15);
        }
    }
}

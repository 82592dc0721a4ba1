//! NRC-style word/emotion association lexicons.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::embed::{EmbedError, EmbeddingStore, EmotionCentroids};
use crate::emotion::{Emotion, PerEmotion, NUM_EMOTIONS};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed lexicon line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: association value `{value}` is not 0 or 1")]
    ValueOutOfRange { line: usize, value: String },
    #[error("no in-vocabulary term for {emotion}: {source}")]
    EmptyCentroid {
        emotion: Emotion,
        #[source]
        source: EmbedError,
    },
}

/// Term to per-emotion 0/1 flags, restricted to the six basic emotions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmotionLexicon {
    associations: BTreeMap<String, PerEmotion<bool>>,
}

impl EmotionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets one association flag, creating the term if needed.
    pub fn set(&mut self, term: &str, emotion: Emotion, associated: bool) {
        let flags = self
            .associations
            .entry(term.to_lowercase())
            .or_insert([false; NUM_EMOTIONS]);
        flags[emotion.index()] = associated;
    }

    /// Parses `term<TAB>category<TAB>{0|1}` lines. Categories outside the six
    /// basic emotions are dropped; multiword terms are skipped.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = EmotionLexicon::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            if fields.len() != 3 {
                return Err(LexiconError::Malformed {
                    line: i + 1,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let (term, category, value) = (fields[0], fields[1], fields[2]);
            let associated = match value {
                "0" => false,
                "1" => true,
                v if v.parse::<i64>().is_ok() => {
                    return Err(LexiconError::ValueOutOfRange {
                        line: i + 1,
                        value: v.to_string(),
                    })
                }
                v => {
                    return Err(LexiconError::Malformed {
                        line: i + 1,
                        reason: format!("non-integer value `{v}`"),
                    })
                }
            };
            if term.is_empty() || term.contains(char::is_whitespace) {
                continue;
            }
            let Ok(emotion) = category.parse::<Emotion>() else {
                continue;
            };
            // Only full category names count; `a`, `sad` etc. are CLI shorthands.
            if emotion.name() != category.to_lowercase() {
                continue;
            }
            lex.set(term, emotion, associated);
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Writes all six flags for every term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (term, flags) in &self.associations {
            for e in Emotion::ALL {
                out.push_str(&format!("{term}\t{e}\t{}\n", flags[e.index()] as u8));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.associations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.associations.is_empty()
    }

    pub fn associated(&self, term: &str, emotion: Emotion) -> bool {
        self.associations
            .get(term)
            .is_some_and(|f| f[emotion.index()])
    }

    /// Terms flagged for `emotion`, sorted.
    pub fn emotion_terms(&self, emotion: Emotion) -> BTreeSet<&str> {
        self.associations
            .iter()
            .filter(|(_, f)| f[emotion.index()])
            .map(|(t, _)| t.as_str())
            .collect()
    }

    /// Per-emotion count of tokens flagged for that emotion.
    pub fn activations<S: AsRef<str>>(&self, tokens: &[S]) -> PerEmotion<f64> {
        let mut out = [0.0; NUM_EMOTIONS];
        for t in tokens {
            if let Some(flags) = self.associations.get(t.as_ref()) {
                for (o, f) in out.iter_mut().zip(flags) {
                    if *f {
                        *o += 1.0;
                    }
                }
            }
        }
        out
    }

    /// One centroid per emotion over that emotion's in-vocabulary terms.
    pub fn build_centroids(&self, store: &EmbeddingStore) -> Result<EmotionCentroids, LexiconError> {
        let mut vectors = Vec::with_capacity(NUM_EMOTIONS);
        for e in Emotion::ALL {
            let terms: Vec<&str> = self.emotion_terms(e).into_iter().collect();
            let c = store
                .centroid(&terms)
                .map_err(|source| LexiconError::EmptyCentroid { emotion: e, source })?;
            if !c.skipped.is_empty() {
                log::debug!("{e}: {} lexicon terms not in embedding vocabulary", c.skipped.len());
            }
            vectors.push(c.vector);
        }
        Ok(EmotionCentroids::new(vectors.try_into().expect("six emotions")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    const FIXTURE: &str = "\
abandon\tanger\t1
abandon\tdisgust\t0
abandon\tfear\t1
abandon\tjoy\t0
abandon\tsadness\t1
abandon\tsurprise\t0
happy\tanger\t0
happy\tdisgust\t0
happy\tfear\t0
happy\tjoy\t1
happy\tsadness\t0
happy\tsurprise\t0
gift\tanger\t0
gift\tdisgust\t0
gift\tfear\t0
gift\tjoy\t1
gift\tsadness\t0
gift\tsurprise\t1
shriek\tanger\t0
shriek\tdisgust\t0
shriek\tfear\t1
shriek\tjoy\t0
shriek\tsadness\t0
shriek\tsurprise\t1
table\tanger\t0
table\tdisgust\t0
table\tfear\t0
table\tjoy\t0
table\tsadness\t0
table\tsurprise\t0
";

    #[test]
    fn fixture_terms_and_sets() {
        let lex = EmotionLexicon::parse(FIXTURE).unwrap();
        assert_eq!(FIXTURE.lines().count(), 30);
        assert_eq!(lex.len(), 5);
        assert!(lex.associated("abandon", Emotion::Anger));
        let joy: Vec<&str> = lex.emotion_terms(Emotion::Joy).into_iter().collect();
        assert_eq!(joy, ["gift", "happy"]);
        assert!(lex.emotion_terms(Emotion::Disgust).is_empty());
        let fear = lex.emotion_terms(Emotion::Fear);
        let surprise = lex.emotion_terms(Emotion::Surprise);
        assert!(fear.contains("shriek") && surprise.contains("shriek"));
    }

    #[test]
    fn space_separated_and_non_ekman_categories() {
        let lex = EmotionLexicon::parse("abandon anger 1\nabandon negative 1\nabandon trust 0\n").unwrap();
        assert!(lex.associated("abandon", Emotion::Anger));
        let lex = EmotionLexicon::parse("hope\tanticipation\t1\nhope\tpositive\t1\n").unwrap();
        assert!(lex.is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            EmotionLexicon::parse("abandon\tanger\t2\n"),
            Err(LexiconError::ValueOutOfRange { line: 1, .. })
        ));
        assert!(matches!(
            EmotionLexicon::parse("abandon\tanger\n"),
            Err(LexiconError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            EmotionLexicon::parse("abandon\tanger\tyes\n"),
            Err(LexiconError::Malformed { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let lex = EmotionLexicon::parse(FIXTURE).unwrap();
        assert_eq!(EmotionLexicon::parse(&lex.to_text()).unwrap(), lex);
    }

    #[test]
    fn activation_counts() {
        let mut lex = EmotionLexicon::new();
        lex.set("happy", Emotion::Joy, true);
        lex.set("furious", Emotion::Anger, true);
        lex.set("mad", Emotion::Anger, true);
        let s = tokenize("i am happy").unwrap();
        assert_eq!(lex.activations(&s.surfaces()), [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(lex.activations(&["the", "cat"]), [0.0; 6]);
        assert_eq!(
            lex.activations(&["furious", "and", "mad", "but", "happy"]),
            [2.0, 0.0, 0.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn activations_permutation_invariant_and_additive() {
        let lex = EmotionLexicon::parse(FIXTURE).unwrap();
        let a = ["happy", "gift", "table", "abandon"];
        let b = ["shriek", "abandon"];
        let mut rev = a;
        rev.reverse();
        assert_eq!(lex.activations(&a), lex.activations(&rev));
        let joined: Vec<&str> = a.iter().chain(&b).copied().collect();
        let (x, y) = (lex.activations(&a), lex.activations(&b));
        let sum: Vec<f64> = x.iter().zip(y).map(|(p, q)| p + q).collect();
        assert_eq!(lex.activations(&joined).to_vec(), sum);
    }

    #[test]
    fn centroids_from_lexicon() {
        let mut lex = EmotionLexicon::new();
        for (t, e) in [
            ("rage", Emotion::Anger),
            ("yuck", Emotion::Disgust),
            ("dread", Emotion::Fear),
            ("bliss", Emotion::Joy),
            ("cheer", Emotion::Joy),
            ("grief", Emotion::Sadness),
            ("wow", Emotion::Surprise),
            ("missing", Emotion::Surprise),
        ] {
            lex.set(t, e, true);
        }
        let store = EmbeddingStore::from_vectors([
            ("rage", vec![1.0, 0.0]),
            ("yuck", vec![0.0, 1.0]),
            ("dread", vec![-1.0, 0.0]),
            ("bliss", vec![1.0, 0.0]),
            ("cheer", vec![0.0, 1.0]),
            ("grief", vec![0.0, -1.0]),
            ("wow", vec![3.0, 4.0]),
        ])
        .unwrap();
        let c = lex.build_centroids(&store).unwrap();
        assert_eq!(c.get(Emotion::Anger), &[1.0, 0.0]);
        assert_eq!(c.get(Emotion::Joy), &[0.5, 0.5]);
        assert_eq!(c.get(Emotion::Surprise), &[0.6, 0.8]);

        lex.set("rage", Emotion::Anger, false);
        match lex.build_centroids(&store) {
            Err(LexiconError::EmptyCentroid { emotion, .. }) => assert_eq!(emotion, Emotion::Anger),
            other => panic!("unexpected {other:?}"),
        }
    }
}

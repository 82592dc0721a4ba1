//! The six basic emotion categories used as transfer targets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the six Ekman emotions.
///
/// The declaration order (anger, disgust, fear, joy, sadness, surprise) is the
/// canonical index order for every per-emotion vector in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
}

/// Number of emotion categories.
pub const NUM_EMOTIONS: usize = 6;

/// A value per emotion, indexed by [`Emotion::index`].
pub type PerEmotion<T> = [T; NUM_EMOTIONS];

impl Emotion {
    pub const ALL: [Emotion; NUM_EMOTIONS] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Emotion> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
        }
    }

    /// Short code used in tables: A, D, F, J, Sa, Su.
    pub fn code(self) -> &'static str {
        match self {
            Emotion::Anger => "A",
            Emotion::Disgust => "D",
            Emotion::Fear => "F",
            Emotion::Joy => "J",
            Emotion::Sadness => "Sa",
            Emotion::Surprise => "Su",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown emotion `{0}` (expected one of anger, disgust, fear, joy, sadness, surprise)")]
pub struct UnknownEmotion(pub String);

impl FromStr for Emotion {
    type Err = UnknownEmotion;

    /// Accepts full names and the short table codes, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        let e = match lower.as_str() {
            "anger" | "a" | "angry" => Emotion::Anger,
            "disgust" | "d" => Emotion::Disgust,
            "fear" | "f" => Emotion::Fear,
            "joy" | "j" => Emotion::Joy,
            "sadness" | "sa" | "sad" => Emotion::Sadness,
            "surprise" | "su" => Emotion::Surprise,
            _ => return Err(UnknownEmotion(s.to_string())),
        };
        Ok(e)
    }
}

/// Parses a comma-separated emotion list; `all` expands to every emotion.
pub fn parse_emotion_list(s: &str) -> Result<Vec<Emotion>, UnknownEmotion> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Emotion::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let e: Emotion = part.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    Ok(out)
}

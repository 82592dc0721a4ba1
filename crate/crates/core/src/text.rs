//! Tokenization, coarse part-of-speech tagging and the sentence model.
//!
//! Every surface is lowercased. Runs of alphanumeric characters form words;
//! every other non-whitespace character is a token of its own, so `don't`
//! becomes `don ' t`.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("input is empty or whitespace-only")]
    EmptyInput,
    #[error("malformed pre-tagged item `{item}`: {reason}")]
    MalformedPretagged { item: String, reason: String },
    #[error("{}:{line}: malformed POS lexicon line: {reason}", path.display())]
    MalformedLexicon {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Other => "OTHER",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NOUN" | "N" => Ok(Pos::Noun),
            "VERB" | "V" => Ok(Pos::Verb),
            "ADJ" | "A" | "S" => Ok(Pos::Adj),
            "ADV" | "R" => Ok(Pos::Adv),
            "OTHER" | "X" => Ok(Pos::Other),
            _ => Err(format!("unknown POS tag `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: Pos,
    pub index: usize,
}

/// An input sentence: ordered tokens plus the text they came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<Token>,
    raw: String,
}

impl Sentence {
    /// Builds a sentence from already-split surfaces, tagged `OTHER`.
    ///
    /// Surfaces are lowercased. Returns `EmptyInput` for an empty list and
    /// `MalformedPretagged` for a surface that is empty or contains whitespace.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Result<Sentence, TextError> {
        let tagged: Vec<(String, Pos)> = surfaces
            .iter()
            .map(|s| (s.as_ref().to_lowercase(), Pos::Other))
            .collect();
        Self::from_tagged(tagged)
    }

    fn from_tagged(tagged: Vec<(String, Pos)>) -> Result<Sentence, TextError> {
        if tagged.is_empty() {
            return Err(TextError::EmptyInput);
        }
        let mut tokens = Vec::with_capacity(tagged.len());
        for (index, (surface, pos)) in tagged.into_iter().enumerate() {
            if surface.is_empty() || surface.chars().any(char::is_whitespace) {
                return Err(TextError::MalformedPretagged {
                    item: surface,
                    reason: "token surface must be non-empty and whitespace-free".into(),
                });
            }
            tokens.push(Token { surface, pos, index });
        }
        let raw = tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Ok(Sentence { tokens, raw })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Space-joined surfaces.
    pub fn detokenize(&self) -> String {
        self.surfaces().join(" ")
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits `raw` into lowercase tokens tagged `OTHER`.
pub fn tokenize(raw: &str) -> Result<Sentence, TextError> {
    if raw.trim().is_empty() {
        return Err(TextError::EmptyInput);
    }
    let lower = raw.to_lowercase();
    let mut surfaces: Vec<String> = Vec::new();
    let mut current = String::new();
    for c in lower.chars() {
        if is_word_char(c) {
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            surfaces.push(std::mem::take(&mut current));
        }
        if !c.is_whitespace() {
            surfaces.push(c.to_string());
        }
    }
    if !current.is_empty() {
        surfaces.push(current);
    }
    let tokens = surfaces
        .into_iter()
        .enumerate()
        .map(|(index, surface)| Token {
            surface,
            pos: Pos::Other,
            index,
        })
        .collect();
    Ok(Sentence {
        tokens,
        raw: raw.to_string(),
    })
}

/// Parses `token/TAG` pairs separated by whitespace, e.g. `I/OTHER am/VERB happy/ADJ`.
///
/// The tag is taken after the last `/`, so `a/b/NOUN` has surface `a/b`.
pub fn parse_pretagged(line: &str) -> Result<Sentence, TextError> {
    let mut tagged = Vec::new();
    for item in line.split_whitespace() {
        let (surface, tag) = item
            .rsplit_once('/')
            .ok_or_else(|| TextError::MalformedPretagged {
                item: item.to_string(),
                reason: "missing `/TAG` suffix".into(),
            })?;
        let pos: Pos = tag.parse().map_err(|reason| TextError::MalformedPretagged {
            item: item.to_string(),
            reason,
        })?;
        tagged.push((surface.to_lowercase(), pos));
    }
    let mut sentence = Sentence::from_tagged(tagged)?;
    sentence.raw = line.trim().to_string();
    Ok(sentence)
}

/// True when every whitespace-separated item of `line` looks like `token/TAG`
/// with a recognised tag.
pub fn looks_pretagged(line: &str) -> bool {
    let mut any = false;
    for item in line.split_whitespace() {
        any = true;
        match item.rsplit_once('/') {
            Some((s, tag)) if !s.is_empty() && tag.parse::<Pos>().is_ok() => {}
            _ => return false,
        }
    }
    any
}

/// Word to coarse POS lookup table.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, Pos>,
}

impl PosLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, pos: Pos) {
        self.entries.insert(word.to_lowercase(), pos);
    }

    pub fn get(&self, word: &str) -> Option<Pos> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `word<TAB>TAG` lines. Blank lines and `#` comments are skipped;
    /// a later entry for the same word wins.
    pub fn parse(text: &str, path: &Path) -> Result<Self, TextError> {
        let mut lex = PosLexicon::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: String| TextError::MalformedLexicon {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected `word<TAB>TAG`".into()))?;
            let word = word.trim();
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(malformed(format!("bad word `{word}`")));
            }
            let pos: Pos = tag.trim().parse().map_err(malformed)?;
            lex.insert(word, pos);
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

/// Suffix fallback table, checked in order; the stem must keep at least
/// three characters.
const SUFFIX_RULES: &[(&str, Pos)] = &[
    ("ly", Pos::Adv),
    ("ing", Pos::Verb),
    ("ed", Pos::Verb),
    ("ness", Pos::Noun),
    ("tion", Pos::Noun),
    ("sion", Pos::Noun),
    ("ment", Pos::Noun),
    ("ity", Pos::Noun),
    ("ery", Pos::Noun),
    ("ism", Pos::Noun),
    ("ship", Pos::Noun),
    ("ful", Pos::Adj),
    ("ous", Pos::Adj),
    ("less", Pos::Adj),
    ("ive", Pos::Adj),
    ("able", Pos::Adj),
    ("ible", Pos::Adj),
];

const MIN_STEM: usize = 3;

/// Guesses a POS from the word's suffix, or `OTHER`.
pub fn suffix_pos(word: &str) -> Pos {
    if !word.chars().all(char::is_alphabetic) {
        return Pos::Other;
    }
    for (suffix, pos) in SUFFIX_RULES {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.chars().count() >= MIN_STEM {
                return *pos;
            }
        }
    }
    Pos::Other
}

/// Assigns a POS to every token: lexicon lookup first, then the suffix rules.
pub fn pos_tag(sentence: &Sentence, lexicon: &PosLexicon) -> Sentence {
    let tokens = sentence
        .tokens
        .iter()
        .map(|t| Token {
            surface: t.surface.clone(),
            pos: lexicon
                .get(&t.surface)
                .unwrap_or_else(|| suffix_pos(&t.surface)),
            index: t.index,
        })
        .collect();
    Sentence {
        tokens,
        raw: sentence.raw.clone(),
    }
}

//! Six fixed sentences covering three ways emotion shows up in text, each
//! transferred to every target for side-by-side reading.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::emotion::Emotion;
use crate::transfer::{transfer, PipelineConfig, Resources, TransferOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChallengeType {
    /// Explicit mention of the emotion.
    Ex,
    /// A bodily reaction.
    BR,
    /// Appraisal of an event.
    Ap,
}

impl fmt::Display for ChallengeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChallengeType::Ex => "Ex",
            ChallengeType::BR => "BR",
            ChallengeType::Ap => "Ap",
        })
    }
}

pub const CHALLENGE_SENTENCES: [(&str, ChallengeType); 6] = [
    ("I am happy", ChallengeType::Ex),
    ("I am sad", ChallengeType::Ex),
    ("Tears are running over my face", ChallengeType::BR),
    ("I was trembling", ChallengeType::BR),
    ("My son was standing close to the street", ChallengeType::Ap),
    ("My grandmother died", ChallengeType::Ap),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChallengeRow {
    pub id: usize,
    pub kind: ChallengeType,
    pub input: String,
    pub target: Emotion,
    /// The chosen output, or the reason there is none.
    pub output: Result<String, String>,
    pub emo: Option<f64>,
}

/// 36 rows: every sentence to every emotion, in sentence then emotion order.
pub fn run_challenge_suite(config: &PipelineConfig, resources: &Resources) -> Vec<ChallengeRow> {
    let jobs: Vec<(usize, &str, ChallengeType, Emotion)> = CHALLENGE_SENTENCES
        .iter()
        .enumerate()
        .flat_map(|(i, (s, k))| Emotion::ALL.map(|e| (i + 1, *s, *k, e)))
        .collect();
    jobs.par_iter()
        .map(|(id, s, kind, target)| {
            let (output, emo) = match transfer(s, *target, config, resources) {
                Ok(TransferOutcome::Transferred(r)) => {
                    (Ok(r.best.text()), r.best.scores.map(|b| b.emo))
                }
                Ok(TransferOutcome::NoCandidates { .. }) => (Err("no candidates".to_string()), None),
                Err(e) => (Err(e.to_string()), None),
            };
            ChallengeRow {
                id: *id,
                kind: *kind,
                input: s.to_string(),
                target: *target,
                output,
                emo,
            }
        })
        .collect()
}

/// Fixed-width table: id, type, target code, emo, output.
pub fn format_table(rows: &[ChallengeRow]) -> String {
    let mut out = format!("{:<3} {:<3} {:<3} {:>6}  {}\n", "id", "typ", "tgt", "emo", "output");
    let mut last = 0;
    for r in rows {
        if r.id != last {
            out.push_str(&format!("# {}\n", r.input));
            last = r.id;
        }
        let emo = r.emo.map_or("-".to_string(), |e| format!("{e:.4}"));
        let text = match &r.output {
            Ok(t) => t.clone(),
            Err(e) => format!("FAILED: {e}"),
        };
        out.push_str(&format!("{:<3} {:<3} {:<3} {:>6}  {}\n", r.id, r.kind, r.target.code(), emo, text));
    }
    out
}

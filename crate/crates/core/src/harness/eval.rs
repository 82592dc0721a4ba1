//! Automatic evaluation: every sentence to every target under the emotion-only
//! objective, aggregated to per-emotion means.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::emotion::{Emotion, PerEmotion};
use crate::scoring::ObjectiveWeights;
use crate::transfer::{
    transfer, PipelineConfig, Resources, Substitution, TransferError, TransferOutcome, TransferResult, Variation,
};

/// One line of the record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub input: String,
    pub target: Emotion,
    pub preset: String,
    pub output: String,
    pub emo: f64,
    pub sim: f64,
    pub flu: f64,
    pub total: f64,
    pub substitutions: Vec<Substitution>,
}

impl EvalRecord {
    /// Record for one ranked variation of a transfer result.
    pub fn new(result: &TransferResult, preset: &str, variation: &Variation) -> Self {
        let b = variation.scores.expect("ranked variation");
        EvalRecord {
            input: result.input.clone(),
            target: result.target,
            preset: preset.to_string(),
            output: variation.text(),
            emo: b.emo,
            sim: b.sim,
            flu: b.flu,
            total: b.total,
            substitutions: variation.substitutions.clone(),
        }
    }

    /// Single-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Aggregates for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub configuration: String,
    /// Mean best-variation emotion score per target; `None` when no sentence
    /// succeeded (or the emotion was not a target).
    pub means: PerEmotion<Option<f64>>,
    /// Unweighted mean of the available per-emotion means.
    pub m: Option<f64>,
    pub failures: usize,
    pub no_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub sentences: usize,
    pub targets: Vec<Emotion>,
    /// Mean emotion score of the unmodified inputs, per target.
    pub input: EvalRow,
    pub rows: Vec<EvalRow>,
}

/// Order-independent mean: values are sorted before summation.
fn mean(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

fn row(configuration: &str, per_target: PerEmotion<Vec<f64>>, failures: usize, no_candidates: usize) -> EvalRow {
    let means = per_target.map(mean);
    let m = mean(means.iter().flatten().copied().collect());
    EvalRow {
        configuration: configuration.to_string(),
        means,
        m,
        failures,
        no_candidates,
    }
}

impl EvalReport {
    pub fn row(&self, configuration: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.configuration == configuration)
    }

    /// One row per configuration (inputs first), one column per emotion, then
    /// `m` and the failure and no-candidate counts.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("configuration");
        for e in Emotion::ALL {
            write!(out, "\t{e}").unwrap();
        }
        out.push_str("\tm\tfailures\tno_candidates\n");
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
        for r in std::iter::once(&self.input).chain(&self.rows) {
            out.push_str(&r.configuration);
            for v in r.means {
                write!(out, "\t{}", fmt(v)).unwrap();
            }
            writeln!(out, "\t{}\t{}\t{}", fmt(r.m), r.failures, r.no_candidates).unwrap();
        }
        out
    }
}

/// Transfers every non-blank corpus line to every target under each named
/// configuration with emotion-only weights. Records are written to `sink`
/// (one JSON object per line) in corpus, target, configuration order.
pub fn evaluate_batch(
    corpus: &[String],
    configs: &[(String, PipelineConfig)],
    targets: &[Emotion],
    resources: &Resources,
    mut sink: Option<&mut dyn Write>,
) -> Result<(EvalReport, Vec<EvalRecord>), HarnessError> {
    let sentences: Vec<&str> = corpus.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if sentences.is_empty() {
        return Err(HarnessError::Data("evaluation corpus is empty".into()));
    }
    if targets.is_empty() {
        return Err(HarnessError::Usage("no target emotions".into()));
    }
    let configs: Vec<(String, PipelineConfig)> = configs
        .iter()
        .map(|(name, c)| {
            let mut c = c.clone();
            c.weights = ObjectiveWeights::EMO_ONLY;
            c.top_n = 1;
            (name.clone(), c)
        })
        .collect();
    for (_, c) in &configs {
        c.validate()?;
        c.check_resources(resources)?;
    }

    type Outcomes = Vec<Vec<Result<TransferOutcome, TransferError>>>;
    let results: Vec<Outcomes> = sentences
        .par_iter()
        .map(|s| {
            targets
                .iter()
                .map(|t| configs.iter().map(|(_, c)| transfer(s, *t, c, resources)).collect())
                .collect()
        })
        .collect();

    let mut records = Vec::new();
    let mut per_config: Vec<(PerEmotion<Vec<f64>>, usize, usize)> =
        vec![(Default::default(), 0, 0); configs.len()];
    let mut input_scores: PerEmotion<Vec<f64>> = Default::default();
    for (s, per_target) in sentences.iter().zip(&results) {
        for (t, per_cfg) in targets.iter().zip(per_target) {
            let mut input_seen = false;
            for ((name, _), (outcome, acc)) in configs.iter().zip(per_cfg.iter().zip(per_config.iter_mut())) {
                match outcome {
                    Err(e) => {
                        log::warn!("{name}: `{s}` -> {t}: {e}");
                        acc.1 += 1;
                    }
                    Ok(TransferOutcome::NoCandidates { .. }) => acc.2 += 1,
                    Ok(TransferOutcome::Transferred(r)) => {
                        if r.generated == 0 {
                            acc.2 += 1;
                        }
                        if !input_seen {
                            input_scores[t.index()].push(r.input_emo());
                            input_seen = true;
                        }
                        let rec = EvalRecord::new(r, name, &r.best);
                        acc.0[t.index()].push(rec.emo);
                        if let Some(w) = sink.as_deref_mut() {
                            writeln!(w, "{}", rec.to_json()).map_err(|e| HarnessError::Io {
                                path: "<records>".into(),
                                source: e,
                            })?;
                        }
                        records.push(rec);
                    }
                }
            }
        }
    }
    let rows = configs
        .iter()
        .zip(per_config)
        .map(|((name, _), (scores, fails, none))| row(name, scores, fails, none))
        .collect();
    Ok((
        EvalReport {
            sentences: sentences.len(),
            targets: targets.to_vec(),
            input: row("input", input_scores, 0, 0),
            rows,
        },
        records,
    ))
}

/// Parses a JSON-lines record stream.
pub fn read_records(text: &str) -> Result<Vec<EvalRecord>, HarnessError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Data(format!("record line {}: {e}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_is_order_independent() {
        let a = vec![0.1, 0.7, 1e-17, 0.3333, 0.9];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(mean(a).unwrap().to_bits(), mean(b).unwrap().to_bits());
        assert_eq!(mean(Vec::new()), None);
    }

    #[test]
    fn m_is_mean_of_available_emotions() {
        let r = row("x", [vec![0.2], vec![0.4], vec![], vec![0.6, 1.0], vec![], vec![]], 1, 2);
        assert_eq!(r.means[2], None);
        assert!((r.means[3].unwrap() - 0.8).abs() < 1e-15);
        assert!((r.m.unwrap() - (0.2 + 0.4 + 0.8) / 3.0).abs() < 1e-15);
        assert_eq!((r.failures, r.no_candidates), (1, 2));
    }

    #[test]
    fn record_round_trip() {
        let rec = EvalRecord {
            input: "i am happy".into(),
            target: Emotion::Anger,
            preset: "atin".into(),
            output: "i am furious".into(),
            emo: 0.5,
            sim: 0.25,
            flu: 1.0,
            total: 0.5,
            substitutions: vec![Substitution {
                position: 2,
                original: "happy".into(),
                replacement: "furious".into(),
            }],
        };
        let line = serde_json::to_string(&rec).unwrap();
        for key in ["input", "target", "preset", "output", "emo", "sim", "flu", "total", "substitutions"] {
            assert!(line.contains(&format!("\"{key}\"")), "{key}");
        }
        assert_eq!(read_records(&format!("{line}\n\n{line}\n")).unwrap(), vec![rec.clone(), rec]);
        assert!(read_records("{not json}\n").is_err());
    }
}

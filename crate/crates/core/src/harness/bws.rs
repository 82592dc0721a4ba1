//! Best-worst scaling: packaging four-way tuples for annotators and scoring
//! their choices.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::HarnessError;
use crate::emotion::{Emotion, NUM_EMOTIONS};

pub const KEYS: [&str; 4] = ["A", "B", "C", "D"];

/// One configuration's output for one (input, target) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PackEntry {
    pub input: String,
    pub target: Emotion,
    pub configuration: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwsItem {
    pub key: String,
    pub configuration: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwsTuple {
    pub id: usize,
    pub input: String,
    pub target: Emotion,
    /// Sorted by key.
    pub items: Vec<BwsItem>,
}

impl BwsTuple {
    pub fn configuration_of(&self, key: &str) -> Option<&str> {
        self.items
            .iter()
            .find(|i| i.key == key)
            .map(|i| i.configuration.as_str())
    }
}

/// The 24 orderings of four items, lexicographic.
fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    p.iter().for_each(|i| seen[*i] = true);
                    if seen.iter().all(|s| *s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Builds `n_items` tuples from the first `n_items` distinct inputs (in
/// order of first appearance). Tuple `i` uses target `E[i mod 6]` and
/// assigns keys A-D by the `(i mod 24)`-th permutation of the sorted
/// configuration names, so keys carry no stable meaning across tuples.
pub fn bws_pack(entries: &[PackEntry], n_items: usize) -> Result<Vec<BwsTuple>, HarnessError> {
    let mut configs: Vec<&str> = entries.iter().map(|e| e.configuration.as_str()).collect();
    configs.sort_unstable();
    configs.dedup();
    if configs.len() != 4 {
        return Err(HarnessError::Data(format!(
            "best-worst tuples need exactly 4 configurations, found {}",
            configs.len()
        )));
    }
    let mut inputs: Vec<&str> = Vec::new();
    let mut lookup: HashMap<(&str, Emotion, &str), &str> = HashMap::new();
    for e in entries {
        if !inputs.contains(&e.input.as_str()) {
            inputs.push(&e.input);
        }
        lookup.insert((&e.input, e.target, &e.configuration), &e.output);
    }
    if inputs.len() < n_items {
        return Err(HarnessError::Data(format!(
            "{n_items} tuples requested but only {} inputs available",
            inputs.len()
        )));
    }
    let perms = permutations4();
    let mut tuples = Vec::with_capacity(n_items);
    for (id, input) in inputs.iter().take(n_items).enumerate() {
        let target = Emotion::ALL[id % NUM_EMOTIONS];
        let perm = perms[id % perms.len()];
        let mut items = Vec::with_capacity(4);
        for (key, ci) in KEYS.iter().zip(perm) {
            let configuration = configs[ci];
            let output = lookup.get(&(*input, target, configuration)).ok_or_else(|| {
                HarnessError::Data(format!(
                    "incomplete quadruple for `{input}` -> {target}: no output from {configuration}"
                ))
            })?;
            items.push(BwsItem {
                key: key.to_string(),
                configuration: configuration.to_string(),
                output: output.to_string(),
            });
        }
        tuples.push(BwsTuple {
            id,
            input: input.to_string(),
            target,
            items,
        });
    }
    Ok(tuples)
}

/// Annotator view: `tuple_id<TAB>input<TAB>target<TAB>A<TAB>B<TAB>C<TAB>D`,
/// with a header. Configuration names are not included.
pub fn write_annotator_file(tuples: &[BwsTuple]) -> String {
    let mut out = String::from("tuple_id\tinput\ttarget\tA\tB\tC\tD\n");
    for t in tuples {
        let outputs: Vec<&str> = t.items.iter().map(|i| i.output.as_str()).collect();
        out.push_str(&format!("{}\t{}\t{}\t{}\n", t.id, t.input, t.target, outputs.join("\t")));
    }
    out
}

/// Hidden key: `tuple_id<TAB>input<TAB>target<TAB>config_A<TAB>...<TAB>config_D`.
pub fn write_answer_key(tuples: &[BwsTuple]) -> String {
    let mut out = String::from("tuple_id\tinput\ttarget\tA\tB\tC\tD\n");
    for t in tuples {
        let cfgs: Vec<&str> = t.items.iter().map(|i| i.configuration.as_str()).collect();
        out.push_str(&format!("{}\t{}\t{}\t{}\n", t.id, t.input, t.target, cfgs.join("\t")));
    }
    out
}

/// Reads an answer key back into tuples (outputs left empty).
pub fn parse_answer_key(text: &str) -> Result<Vec<BwsTuple>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |r: &str| HarnessError::Data(format!("answer key line {}: {r}", i + 1));
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 tab-separated fields"));
        }
        let id: usize = f[0].parse().map_err(|_| bad("bad tuple id"))?;
        let target: Emotion = f[2].parse().map_err(|_| bad("bad target emotion"))?;
        let items = KEYS
            .iter()
            .zip(&f[3..])
            .map(|(k, c)| BwsItem {
                key: k.to_string(),
                configuration: c.to_string(),
                output: String::new(),
            })
            .collect();
        out.push(BwsTuple {
            id,
            input: f[1].to_string(),
            target,
            items,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Emotion,
    Similarity,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Emotion => "emotion",
            Dimension::Similarity => "similarity",
        })
    }
}

impl FromStr for Dimension {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "emotion" => Ok(Dimension::Emotion),
            "similarity" => Ok(Dimension::Similarity),
            _ => Err(HarnessError::Usage(format!("unknown dimension `{s}` (emotion | similarity)"))),
        }
    }
}

/// One judgement: the best and worst key of a tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub tuple_id: usize,
    pub best: String,
    pub worst: String,
}

/// `tuple_id<TAB>best<TAB>worst`; a header line starting with `tuple_id`
/// is skipped.
pub fn parse_annotations(text: &str) -> Result<Vec<Annotation>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("tuple_id") {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let bad = || HarnessError::Data(format!("annotation line {}: expected `tuple_id<TAB>best<TAB>worst`", i + 1));
        if f.len() != 3 {
            return Err(bad());
        }
        out.push(Annotation {
            tuple_id: f[0].parse().map_err(|_| bad())?,
            best: f[1].to_uppercase(),
            worst: f[2].to_uppercase(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigScore {
    pub configuration: String,
    pub best: usize,
    pub worst: usize,
    pub appearances: usize,
    /// `(best - worst) / appearances`, in `[-1, 1]`.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwsResult {
    pub dimension: Dimension,
    /// Sorted by configuration name.
    pub scores: Vec<ConfigScore>,
}

impl BwsResult {
    pub fn get(&self, configuration: &str) -> Option<&ConfigScore> {
        self.scores.iter().find(|s| s.configuration == configuration)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("configuration\t{}_score\tbest\tworst\tappearances\n", self.dimension);
        for s in &self.scores {
            out.push_str(&format!(
                "{}\t{:.4}\t{}\t{}\t{}\n",
                s.configuration, s.score, s.best, s.worst, s.appearances
            ));
        }
        out
    }
}

/// Counts best and worst choices per configuration. Every annotation counts
/// as one appearance for each configuration in its tuple.
pub fn bws_score(
    tuples: &[BwsTuple],
    annotations: &[Annotation],
    dimension: Dimension,
) -> Result<BwsResult, HarnessError> {
    let by_id: HashMap<usize, &BwsTuple> = tuples.iter().map(|t| (t.id, t)).collect();
    let mut counts: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for t in tuples {
        for i in &t.items {
            counts.entry(&i.configuration).or_default();
        }
    }
    for a in annotations {
        let t = by_id
            .get(&a.tuple_id)
            .ok_or_else(|| HarnessError::Data(format!("annotation for unknown tuple {}", a.tuple_id)))?;
        if a.best == a.worst {
            return Err(HarnessError::Data(format!(
                "tuple {}: best and worst are both `{}`",
                a.tuple_id, a.best
            )));
        }
        let lookup = |k: &str| {
            t.configuration_of(k)
                .ok_or_else(|| HarnessError::Data(format!("tuple {}: unknown key `{k}`", a.tuple_id)))
        };
        let (best, worst) = (lookup(&a.best)?, lookup(&a.worst)?);
        for i in &t.items {
            counts.get_mut(i.configuration.as_str()).unwrap().2 += 1;
        }
        counts.get_mut(best).unwrap().0 += 1;
        counts.get_mut(worst).unwrap().1 += 1;
    }
    let scores = counts
        .into_iter()
        .map(|(c, (b, w, n))| ConfigScore {
            configuration: c.to_string(),
            best: b,
            worst: w,
            appearances: n,
            score: if n == 0 { 0.0 } else { (b as f64 - w as f64) / n as f64 },
        })
        .collect();
    Ok(BwsResult { dimension, scores })
}

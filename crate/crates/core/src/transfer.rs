//! Selection, variation generation, ranking and the end-to-end transfer call.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine, informed_retrieve, EmbeddingStore, EmotionCentroids};
use crate::emotion::{Emotion, PerEmotion};
use crate::lm::{avg_neg_log_prob, LanguageModel};
use crate::scoring::{
    emotion_distribution, flu, objective, salience, softmax, EmotionScorer, ObjectiveWeights,
    ScoreBreakdown,
};
use crate::text::{looks_pretagged, parse_pretagged, pos_tag, tokenize, PosLexicon, Sentence, TextError};
use crate::wordnet::LexicalDb;

pub const DEFAULT_MAX_VARIATIONS: usize = 50_000;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("cannot rank an empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} retrieval needs resources that are not loaded")]
    MissingResource(&'static str),
}

/// Token positions chosen for joint substitution, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection {
    positions: Vec<usize>,
}

impl Selection {
    /// Sorts and deduplicates; panics on an empty set.
    pub fn new(mut positions: Vec<usize>) -> Self {
        positions.sort_unstable();
        positions.dedup();
        assert!(!positions.is_empty(), "a selection needs at least one position");
        Selection { positions }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SelectionStrategy {
    BruteForce,
    Salient { k: usize, p: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RetrievalStrategy {
    Wordnet,
    Uninformed { u: usize },
    Informed { u: usize, v: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub selection: SelectionStrategy,
    pub retrieval: RetrievalStrategy,
    pub weights: ObjectiveWeights,
    pub max_variations: usize,
    pub include_identity: bool,
    /// How many ranked variations to keep in the result.
    pub top_n: usize,
}

impl PipelineConfig {
    pub fn new(selection: SelectionStrategy, retrieval: RetrievalStrategy) -> Self {
        PipelineConfig {
            selection,
            retrieval,
            weights: ObjectiveWeights::default(),
            max_variations: DEFAULT_MAX_VARIATIONS,
            include_identity: true,
            top_n: 5,
        }
    }

    pub fn validate(&self) -> Result<(), TransferError> {
        let bad = |m: &str| Err(TransferError::InvalidConfig(m.to_string()));
        if let SelectionStrategy::Salient { k, p } = self.selection {
            if k == 0 || p == 0 {
                return bad("k and p must be positive");
            }
        }
        match self.retrieval {
            RetrievalStrategy::Uninformed { u: 0 } => return bad("u must be positive"),
            RetrievalStrategy::Informed { u, v } if u == 0 || v == 0 || v > u => {
                return bad("informed retrieval needs 0 < v <= u")
            }
            _ => {}
        }
        if self.max_variations == 0 {
            return bad("max_variations must be positive");
        }
        if self.top_n == 0 {
            return bad("top_n must be positive");
        }
        Ok(())
    }

    /// Fails if the retrieval strategy needs a resource that is absent.
    pub fn check_resources(&self, resources: &Resources) -> Result<(), TransferError> {
        match self.retrieval {
            RetrievalStrategy::Wordnet if resources.wordnet.is_none() => Err(TransferError::MissingResource("wordnet")),
            RetrievalStrategy::Informed { .. } if resources.centroids.is_none() => {
                Err(TransferError::MissingResource("informed"))
            }
            _ => Ok(()),
        }
    }
}

/// Everything a transfer call reads. Shared read-only across threads.
pub struct Resources {
    pub store: EmbeddingStore,
    pub pos_lexicon: PosLexicon,
    pub scorer: Box<dyn EmotionScorer>,
    pub lm: Box<dyn LanguageModel>,
    pub wordnet: Option<LexicalDb>,
    pub centroids: Option<EmotionCentroids>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub position: usize,
    pub original: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub tokens: Vec<String>,
    /// `None` for the unmodified input.
    pub selection: Option<Selection>,
    pub substitutions: Vec<Substitution>,
    pub scores: Option<ScoreBreakdown>,
}

impl Variation {
    pub fn identity(source: &[&str]) -> Self {
        Variation {
            tokens: source.iter().map(|t| t.to_string()).collect(),
            selection: None,
            substitutions: Vec::new(),
            scores: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.selection.is_none()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn token_refs(&self) -> Vec<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }
}

/// One singleton selection per token.
pub fn select_brute_force(sentence: &Sentence) -> Vec<Selection> {
    (0..sentence.len()).map(|i| Selection::new(vec![i])).collect()
}

/// The `k` positions with the highest weight (ties to the lower index),
/// in ascending position order.
pub fn top_k_positions(weights: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|a, b| {
        weights[*b]
            .partial_cmp(&weights[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// All non-empty subsets of size at most `p` of the top-`k` positions,
/// ordered by size and then lexicographically by position. `k` is clamped to
/// the sentence length.
pub fn select_salient(weights: &[f64], k: usize, p: usize) -> Vec<Selection> {
    let top = top_k_positions(weights, k);
    let mut out = Vec::new();
    for size in 1..=p.min(top.len()) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(Selection::new(combo.iter().map(|i| top[*i]).collect()));
            // Advance to the next combination in lexicographic order.
            let mut i = size;
            while i > 0 && combo[i - 1] == top.len() - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// Result of [`generate_variations`].
#[derive(Debug, Clone)]
pub struct Generated {
    pub variations: Vec<Variation>,
    /// Substitution variations before the cap was applied.
    pub generated: usize,
    pub truncated: bool,
}

/// Every combination of candidates over each selection's positions, in
/// selection order and then odometer order (last position fastest). The cap
/// applies to substitution variations; the identity, if requested, is
/// appended afterwards.
pub fn generate_variations(
    source: &[&str],
    selections: &[Selection],
    candidates: &BTreeMap<usize, Vec<String>>,
    max_variations: usize,
    include_identity: bool,
) -> Generated {
    let empty = Vec::new();
    let mut variations = Vec::new();
    let mut generated = 0usize;
    for sel in selections {
        let sets: Vec<&Vec<String>> = sel
            .positions()
            .iter()
            .map(|p| candidates.get(p).unwrap_or(&empty))
            .collect();
        if sets.iter().any(|s| s.is_empty()) {
            continue;
        }
        let count: usize = sets.iter().map(|s| s.len()).product();
        generated += count;
        let room = max_variations.saturating_sub(variations.len());
        let mut digits = vec![0usize; sets.len()];
        for _ in 0..count.min(room) {
            let mut tokens: Vec<String> = source.iter().map(|t| t.to_string()).collect();
            let mut subs = Vec::with_capacity(sets.len());
            for ((pos, set), d) in sel.positions().iter().zip(&sets).zip(&digits) {
                let replacement = set[*d].clone();
                subs.push(Substitution {
                    position: *pos,
                    original: source[*pos].to_string(),
                    replacement: replacement.clone(),
                });
                tokens[*pos] = replacement;
            }
            variations.push(Variation {
                tokens,
                selection: Some(sel.clone()),
                substitutions: subs,
                scores: None,
            });
            for i in (0..digits.len()).rev() {
                digits[i] += 1;
                if digits[i] < sets[i].len() {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
    let truncated = generated > variations.len();
    if truncated {
        log::warn!(
            "{generated} variations generated; keeping the first {}",
            variations.len()
        );
    }
    if include_identity {
        variations.push(Variation::identity(source));
    }
    Generated {
        variations,
        generated,
        truncated,
    }
}

/// Candidate replacements for one token under a retrieval strategy.
pub fn candidates(
    token: &crate::text::Token,
    target: Emotion,
    retrieval: RetrievalStrategy,
    resources: &Resources,
) -> Result<Vec<String>, TransferError> {
    let words = |v: Vec<crate::embed::ScoredWord>| v.into_iter().map(|s| s.word).collect();
    Ok(match retrieval {
        RetrievalStrategy::Wordnet => resources
            .wordnet
            .as_ref()
            .ok_or(TransferError::MissingResource("wordnet"))?
            .candidates_for(&token.surface, token.pos),
        RetrievalStrategy::Uninformed { u } => resources
            .store
            .nearest(&token.surface, u)
            .map(words)
            .unwrap_or_default(),
        RetrievalStrategy::Informed { u, v } => {
            let centroids = resources
                .centroids
                .as_ref()
                .ok_or(TransferError::MissingResource("informed"))?;
            informed_retrieve(&resources.store, &token.surface, target, centroids, u, v)
                .map(words)
                .unwrap_or_default()
        }
    })
}

/// Everything needed to score a batch against one source sentence.
pub struct RankContext<'a> {
    pub source: &'a [&'a str],
    pub target: Emotion,
    pub scorer: &'a dyn EmotionScorer,
    pub store: &'a EmbeddingStore,
    pub lm: &'a dyn LanguageModel,
    pub weights: ObjectiveWeights,
}

fn rank_cmp(a: &Variation, b: &Variation) -> Ordering {
    let (sa, sb) = (a.scores.unwrap(), b.scores.unwrap());
    sb.total
        .partial_cmp(&sa.total)
        .unwrap_or(Ordering::Equal)
        .then_with(|| sb.emo.partial_cmp(&sa.emo).unwrap_or(Ordering::Equal))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Scores every variation and sorts by total descending (ties: higher emo,
/// then token sequence). Fluency is normalized over the whole batch.
///
/// Similarity falls back to 0 when either side has no in-vocabulary token,
/// and a batch of sentences shorter than two tokens has no perplexity, so
/// its fluency is 1 throughout.
pub fn rank(ctx: &RankContext<'_>, mut variations: Vec<Variation>) -> Result<Vec<Variation>, TransferError> {
    if variations.is_empty() {
        return Err(TransferError::EmptyBatch);
    }
    let source_mean = ctx.store.mean_vector(ctx.source);
    let raw: Vec<(f64, f64, Option<f64>)> = variations
        .par_iter()
        .map(|v| {
            let toks = v.token_refs();
            let e = softmax(&ctx.scorer.activations(&toks))[ctx.target.index()];
            // Same value as `scoring::sim`, without recomputing the source mean.
            let s = match (&source_mean, ctx.store.mean_vector(&toks)) {
                (Some(r), Some(r2)) => cosine(r, &r2).clamp(-1.0, 1.0),
                _ => 0.0,
            };
            let p = avg_neg_log_prob(ctx.lm, &toks).ok();
            (e, s, p)
        })
        .collect();
    let ppls = raw.iter().filter_map(|r| r.2);
    let (lo, hi) = ppls.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    for (v, (e, s, p)) in variations.iter_mut().zip(raw) {
        let f = match p {
            Some(p) => flu(p, lo, hi).expect("batch perplexity lies within its own range"),
            None => 1.0,
        };
        v.scores = Some(objective(e, s, f, &ctx.weights));
    }
    variations.sort_by(rank_cmp);
    Ok(variations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub input: String,
    pub tokens: Vec<String>,
    pub target: Emotion,
    /// Emotion distribution of the unmodified input.
    pub input_emotions: PerEmotion<f64>,
    pub selections: Vec<Selection>,
    /// Substitution variations produced before any cap.
    pub generated: usize,
    pub truncated: bool,
    pub best: Variation,
    /// Highest-ranked variations, best first (includes `best`).
    pub top: Vec<Variation>,
}

impl TransferResult {
    pub fn input_emo(&self) -> f64 {
        self.input_emotions[self.target.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TransferOutcome {
    Transferred(TransferResult),
    /// Retrieval produced nothing to substitute and the identity was not
    /// allowed to compete.
    NoCandidates {
        input: String,
        target: Emotion,
        selections: Vec<Selection>,
    },
}

impl TransferOutcome {
    pub fn result(&self) -> Option<&TransferResult> {
        match self {
            TransferOutcome::Transferred(r) => Some(r),
            TransferOutcome::NoCandidates { .. } => None,
        }
    }

    /// True when no substitution variation was generated.
    pub fn is_unchanged(&self) -> bool {
        match self {
            TransferOutcome::Transferred(r) => r.generated == 0,
            TransferOutcome::NoCandidates { .. } => true,
        }
    }
}

/// Tokenizes (or reads `word/TAG` input), tags, selects, retrieves,
/// generates and ranks.
pub fn transfer(
    raw: &str,
    target: Emotion,
    config: &PipelineConfig,
    resources: &Resources,
) -> Result<TransferOutcome, TransferError> {
    config.validate()?;
    let sentence = if looks_pretagged(raw) {
        parse_pretagged(raw)?
    } else {
        pos_tag(&tokenize(raw)?, &resources.pos_lexicon)
    };
    transfer_sentence(&sentence, target, config, resources)
}

pub fn transfer_sentence(
    sentence: &Sentence,
    target: Emotion,
    config: &PipelineConfig,
    resources: &Resources,
) -> Result<TransferOutcome, TransferError> {
    config.validate()?;
    let source = sentence.surfaces();
    let input_emotions = emotion_distribution(resources.scorer.as_ref(), &source);
    let selections = match config.selection {
        SelectionStrategy::BruteForce => select_brute_force(sentence),
        SelectionStrategy::Salient { k, p } => {
            select_salient(&salience(resources.scorer.as_ref(), &source), k, p)
        }
    };
    let mut cands: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for sel in &selections {
        for &p in sel.positions() {
            if let Entry::Vacant(slot) = cands.entry(p) {
                slot.insert(candidates(&sentence.tokens()[p], target, config.retrieval, resources)?);
            }
        }
    }
    let gen = generate_variations(
        &source,
        &selections,
        &cands,
        config.max_variations,
        config.include_identity,
    );
    if gen.variations.is_empty() {
        return Ok(TransferOutcome::NoCandidates {
            input: sentence.detokenize(),
            target,
            selections,
        });
    }
    let ctx = RankContext {
        source: &source,
        target,
        scorer: resources.scorer.as_ref(),
        store: &resources.store,
        lm: resources.lm.as_ref(),
        weights: config.weights,
    };
    let mut ranked = rank(&ctx, gen.variations)?;
    ranked.truncate(config.top_n);
    Ok(TransferOutcome::Transferred(TransferResult {
        input: sentence.detokenize(),
        tokens: source.iter().map(|t| t.to_string()).collect(),
        target,
        input_emotions,
        selections,
        generated: gen.generated,
        truncated: gen.truncated,
        best: ranked[0].clone(),
        top: ranked,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn brute_force_singletons() {
        let s = tokenize("a b c").unwrap();
        let sel = select_brute_force(&s);
        let pos: Vec<&[usize]> = sel.iter().map(|s| s.positions()).collect();
        assert_eq!(pos, [&[0][..], &[1], &[2]]);
        assert_eq!(select_brute_force(&tokenize("a").unwrap()).len(), 1);
        let nine = tokenize("love watching my daughter be so excited around christmas").unwrap();
        assert_eq!(select_brute_force(&nine).len(), 9);
    }

    #[test]
    fn salient_worked_example() {
        // this soul - crushing drudgery plagues him
        let s = tokenize("This soul-crushing drudgery plagues him").unwrap();
        assert_eq!(s.surfaces(), ["this", "soul", "-", "crushing", "drudgery", "plagues", "him"]);
        let w = [0.1, 0.2, 0.0, 0.9, 0.8, 0.7, 0.05];
        let sel = select_salient(&w, 3, 2);
        let surf = s.surfaces();
        let got: Vec<Vec<&str>> = sel
            .iter()
            .map(|s| s.positions().iter().map(|p| surf[*p]).collect())
            .collect();
        assert_eq!(
            got,
            vec![
                vec!["crushing"],
                vec!["drudgery"],
                vec!["plagues"],
                vec!["crushing", "drudgery"],
                vec!["crushing", "plagues"],
                vec!["drudgery", "plagues"],
            ]
        );
        assert_eq!(select_salient(&w, 2, 2).len(), 3);
        assert_eq!(select_salient(&w, 1, 5).len(), 1);
    }

    #[test]
    fn top_k_ties_go_to_lower_index() {
        assert_eq!(top_k_positions(&[0.5, 0.9, 0.5, 0.5], 2), [0, 1]);
        assert_eq!(top_k_positions(&[0.0; 4], 3), [0, 1, 2]);
        assert_eq!(top_k_positions(&[1.0, 2.0], 5), [0, 1]);
    }

    fn uniform(positions: &[usize], c: usize) -> BTreeMap<usize, Vec<String>> {
        positions
            .iter()
            .map(|p| (*p, (0..c).map(|i| format!("w{p}_{i}")).collect()))
            .collect()
    }

    #[test]
    fn generation_counts_and_contents() {
        let src = ["a", "b", "c"];
        let sels = select_salient(&[0.3, 0.2, 0.1], 2, 2);
        let g = generate_variations(&src, &sels, &uniform(&[0, 1], 3), 1000, false);
        assert_eq!(g.variations.len(), 2 * 3 + 9);
        assert_eq!(g.generated, 15);
        assert!(!g.truncated);
        let last = g.variations.last().unwrap();
        assert_eq!(last.tokens, ["w0_2", "w1_2", "c"]);
        assert_eq!(g.variations[6].tokens, ["w0_0", "w1_0", "c"]);
        assert_eq!(g.variations[7].tokens, ["w0_0", "w1_1", "c"]);
        for v in &g.variations {
            for (i, t) in v.tokens.iter().enumerate() {
                let sub = v.substitutions.iter().find(|s| s.position == i);
                match sub {
                    Some(s) => {
                        assert_eq!(&s.replacement, t);
                        assert_eq!(s.original, src[i]);
                    }
                    None => assert_eq!(t, src[i]),
                }
            }
        }
    }

    #[test]
    fn empty_candidate_sets_and_cap() {
        let src = ["a", "b"];
        let sels = select_brute_force(&tokenize("a b").unwrap());
        let mut c = uniform(&[0], 4);
        c.insert(1, Vec::new());
        let g = generate_variations(&src, &sels, &c, 100, true);
        assert_eq!(g.variations.len(), 5);
        assert!(g.variations.last().unwrap().is_identity());

        let g = generate_variations(&src, &sels, &uniform(&[0, 1], 4), 6, true);
        assert_eq!(g.generated, 8);
        assert!(g.truncated);
        assert_eq!(g.variations.len(), 7);
        assert!(g.variations[6].is_identity());
        assert_eq!(g.variations[5].tokens, ["a", "w1_1"]);
    }

    proptest! {
        #[test]
        fn salient_count_formula(weights in proptest::collection::vec(0.0f64..1.0, 1..9), k in 1usize..9, p in 1usize..=5) {
            let k = k.min(weights.len());
            let sel = select_salient(&weights, k, p);
            let want: usize = (1..=p.min(k)).map(|i| binom(k, i)).sum();
            prop_assert_eq!(sel.len(), want);
            let set: std::collections::HashSet<&Selection> = sel.iter().collect();
            prop_assert_eq!(set.len(), sel.len());
            for s in &sel {
                prop_assert!(s.len() <= p);
                prop_assert!(s.positions().iter().all(|x| *x < weights.len()));
            }
        }

        #[test]
        fn uniform_generation_count(k in 1usize..6, c in 1usize..6) {
            let n = 7;
            let w: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let src: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let src: Vec<&str> = src.iter().map(String::as_str).collect();
            let sels = select_salient(&w, k, 2);
            let positions: Vec<usize> = (0..n).collect();
            let g = generate_variations(&src, &sels, &uniform(&positions, c), usize::MAX, false);
            prop_assert_eq!(g.variations.len(), k * c + binom(k, 2) * c * c);
        }
    }
}

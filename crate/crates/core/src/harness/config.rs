//! Named presets, the flat `key = value` run configuration and resource
//! loading.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::embed::EmbeddingStore;
use crate::emolex::EmotionLexicon;
use crate::emotion::{parse_emotion_list, Emotion};
use crate::lm::{NGramConfig, NGramModel};
use crate::scoring::{EmotionScorer, LexiconScorer, LinearScorer, ObjectiveWeights};
use crate::text::{tokenize, PosLexicon};
use crate::transfer::{PipelineConfig, Resources, RetrievalStrategy, SelectionStrategy, DEFAULT_MAX_VARIATIONS};
use crate::wordnet::load_wndb;

/// The four lexical-substitution configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    BfWN,
    AtWN,
    AtUn,
    AtIn,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::BfWN, Preset::AtWN, Preset::AtUn, Preset::AtIn];

    pub fn selection(self) -> SelectionStrategy {
        match self {
            Preset::BfWN => SelectionStrategy::BruteForce,
            Preset::AtWN | Preset::AtUn => SelectionStrategy::Salient { k: 2, p: 2 },
            Preset::AtIn => SelectionStrategy::Salient { k: 3, p: 2 },
        }
    }

    pub fn retrieval(self) -> RetrievalStrategy {
        match self {
            Preset::BfWN | Preset::AtWN => RetrievalStrategy::Wordnet,
            Preset::AtUn => RetrievalStrategy::Uninformed { u: 150 },
            Preset::AtIn => RetrievalStrategy::Informed { u: 100, v: 25 },
        }
    }

    /// Pipeline with the global default weights.
    pub fn pipeline(self) -> PipelineConfig {
        PipelineConfig::new(self.selection(), self.retrieval())
    }

    /// Weights suited to human-judged output: emotion and similarity only,
    /// except the informed configuration which also weighs fluency.
    pub fn annotation_weights(self) -> ObjectiveWeights {
        match self {
            Preset::AtIn => ObjectiveWeights::EQUAL,
            _ => ObjectiveWeights::new(0.5, 0.5, 0.0).expect("valid weights"),
        }
    }

    /// Short identifier used in files and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Preset::BfWN => "bfwn",
            Preset::AtWN => "atwn",
            Preset::AtUn => "atun",
            Preset::AtIn => "atin",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::BfWN => "Bf+WN",
            Preset::AtWN => "At+WN",
            Preset::AtUn => "At+Un",
            Preset::AtIn => "At+In",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        Preset::ALL
            .into_iter()
            .find(|p| p.id() == key)
            .ok_or_else(|| HarnessError::Usage(format!("unknown preset `{s}` (bfwn, atwn, atun, atin)")))
    }
}

/// `brute_force` or `salient:K,P`.
pub fn parse_selection(s: &str) -> Result<SelectionStrategy, HarnessError> {
    let bad = || HarnessError::Usage(format!("bad selection `{s}` (brute_force | salient:K,P)"));
    let s = s.trim();
    if s == "brute_force" || s == "brute-force" {
        return Ok(SelectionStrategy::BruteForce);
    }
    let rest = s.strip_prefix("salient:").ok_or_else(bad)?;
    let nums = parse_usizes(rest).ok_or_else(bad)?;
    match nums[..] {
        [k, p] => Ok(SelectionStrategy::Salient { k, p }),
        _ => Err(bad()),
    }
}

/// `wordnet`, `uninformed:U` or `informed:U,V`.
pub fn parse_retrieval(s: &str) -> Result<RetrievalStrategy, HarnessError> {
    let bad = || HarnessError::Usage(format!("bad retrieval `{s}` (wordnet | uninformed:U | informed:U,V)"));
    let s = s.trim();
    if s == "wordnet" {
        return Ok(RetrievalStrategy::Wordnet);
    }
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let nums = parse_usizes(rest).ok_or_else(bad)?;
    match (kind, &nums[..]) {
        ("uninformed", [u]) => Ok(RetrievalStrategy::Uninformed { u: *u }),
        ("informed", [u, v]) => Ok(RetrievalStrategy::Informed { u: *u, v: *v }),
        _ => Err(bad()),
    }
}

fn parse_usizes(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LmSource {
    /// Raw text, one sentence per line, trained on load.
    Corpus(PathBuf),
    /// A serialized model.
    Model(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSource {
    /// A serialized linear scorer.
    Linear(PathBuf),
    /// `emotion<TAB>text` lines; a linear scorer is trained on load.
    Train(PathBuf),
    /// Lexicon hit counts (needs `lexicon`).
    Lexicon,
}

/// Resource locations. Only `embeddings`, `lm` and `scorer` are always needed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourcePaths {
    pub embeddings: PathBuf,
    pub wordnet: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub lm: LmSource,
    pub scorer: ScorerSource,
}

/// Which pipeline(s) a run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetChoice {
    Named(Preset),
    Custom(PipelineConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub resources: ResourcePaths,
    pub preset: PresetChoice,
    /// Overrides the preset's weights when set.
    pub weights: Option<ObjectiveWeights>,
    pub targets: Vec<Emotion>,
    pub output: Option<PathBuf>,
    pub top_n: usize,
    pub max_variations: usize,
    pub include_identity: bool,
    pub lm: NGramConfig,
    pub scorer_epochs: usize,
    pub scorer_learning_rate: f64,
}

impl RunConfig {
    pub fn new(resources: ResourcePaths) -> Self {
        RunConfig {
            resources,
            preset: PresetChoice::Named(Preset::AtIn),
            weights: None,
            targets: Emotion::ALL.to_vec(),
            output: None,
            top_n: 5,
            max_variations: DEFAULT_MAX_VARIATIONS,
            include_identity: true,
            lm: NGramConfig::default(),
            scorer_epochs: 300,
            scorer_learning_rate: 2.0,
        }
    }

    /// The pipeline for the configured preset, with overrides applied.
    pub fn pipeline(&self) -> PipelineConfig {
        let base = match &self.preset {
            PresetChoice::Named(p) => p.pipeline(),
            PresetChoice::Custom(c) => c.clone(),
        };
        self.apply(base)
    }

    /// The pipeline for a specific preset, with overrides applied.
    pub fn pipeline_for(&self, preset: Preset) -> PipelineConfig {
        self.apply(preset.pipeline())
    }

    fn apply(&self, mut c: PipelineConfig) -> PipelineConfig {
        if let Some(w) = self.weights {
            c.weights = w;
        }
        c.top_n = self.top_n;
        c.max_variations = self.max_variations;
        c.include_identity = self.include_identity;
        c
    }

    /// Reads a `key = value` file. Blank lines and `#` comments are ignored;
    /// relative paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut kv: Vec<(usize, String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Config {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            let k = k.trim().to_string();
            if kv.iter().any(|(_, seen, _)| *seen == k) {
                return Err(HarnessError::Config {
                    line: i + 1,
                    reason: format!("duplicate key `{k}`"),
                });
            }
            kv.push((i + 1, k, v.trim().to_string()));
        }
        let get = |key: &str| kv.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
        let path_of = |key: &str| get(key).map(|(_, v)| base.join(v));
        let err = |line: usize, reason: String| HarnessError::Config { line, reason };

        const KNOWN: &[&str] = &[
            "embeddings", "wordnet", "lexicon", "pos_lexicon", "lm_corpus", "lm_model", "lm_order",
            "lm_k", "lm_min_count", "scorer", "scorer_corpus", "scorer_epochs", "scorer_learning_rate",
            "preset", "selection", "retrieval", "lambda", "targets", "output", "top_n",
            "max_variations", "include_identity",
        ];
        if let Some((l, k, _)) = kv.iter().find(|(_, k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(err(*l, format!("unknown key `{k}`")));
        }

        let embeddings = path_of("embeddings").ok_or_else(|| err(0, "missing key `embeddings`".into()))?;
        let lm = match (path_of("lm_corpus"), path_of("lm_model")) {
            (Some(c), None) => LmSource::Corpus(c),
            (None, Some(m)) => LmSource::Model(m),
            (Some(_), Some(_)) => return Err(err(0, "set only one of `lm_corpus` and `lm_model`".into())),
            (None, None) => return Err(err(0, "missing key `lm_corpus` or `lm_model`".into())),
        };
        let scorer = match (get("scorer"), path_of("scorer_corpus")) {
            (Some((_, "lexicon")), None) => ScorerSource::Lexicon,
            (Some((_, p)), None) => ScorerSource::Linear(base.join(p)),
            (None, Some(c)) => ScorerSource::Train(c),
            (Some(_), Some(_)) => return Err(err(0, "set only one of `scorer` and `scorer_corpus`".into())),
            (None, None) => return Err(err(0, "missing key `scorer` or `scorer_corpus`".into())),
        };
        let resources = ResourcePaths {
            embeddings,
            wordnet: path_of("wordnet"),
            lexicon: path_of("lexicon"),
            pos_lexicon: path_of("pos_lexicon"),
            lm,
            scorer,
        };
        let mut cfg = RunConfig::new(resources);

        fn num<T: FromStr>(v: Option<(usize, &str)>, key: &str) -> Result<Option<T>, HarnessError> {
            match v {
                None => Ok(None),
                Some((line, s)) => s.parse().map(Some).map_err(|_| HarnessError::Config {
                    line,
                    reason: format!("`{key}`: cannot parse `{s}`"),
                }),
            }
        }
        fn with_line<T>(r: Result<T, HarnessError>, line: usize) -> Result<T, HarnessError> {
            r.map_err(|e| HarnessError::Config {
                line,
                reason: e.to_string(),
            })
        }

        let preset = get("preset");
        let custom = (get("selection"), get("retrieval"));
        cfg.preset = match (preset, custom) {
            (Some((_, "custom")), (Some((ls, s)), Some((lr, r)))) => {
                PresetChoice::Custom(PipelineConfig::new(
                    with_line(parse_selection(s), ls)?,
                    with_line(parse_retrieval(r), lr)?,
                ))
            }
            (Some((l, "custom")), _) => {
                return Err(err(l, "preset `custom` needs `selection` and `retrieval`".into()))
            }
            (Some((l, p)), (None, None)) => PresetChoice::Named(with_line(p.parse(), l)?),
            (None, (None, None)) => PresetChoice::Named(Preset::AtIn),
            (_, (Some((l, _)), _)) | (_, (_, Some((l, _)))) => {
                return Err(err(l, "`selection`/`retrieval` need `preset = custom`".into()))
            }
        };
        if let Some((l, v)) = get("lambda") {
            cfg.weights = Some(with_line(v.parse().map_err(HarnessError::from), l)?);
        }
        if let Some((l, v)) = get("targets") {
            cfg.targets = parse_emotion_list(v).map_err(|e| err(l, e.to_string()))?;
        }
        cfg.output = path_of("output");
        if let Some(v) = num(get("top_n"), "top_n")? {
            cfg.top_n = v;
        }
        if let Some(v) = num(get("max_variations"), "max_variations")? {
            cfg.max_variations = v;
        }
        if let Some(v) = num(get("include_identity"), "include_identity")? {
            cfg.include_identity = v;
        }
        if let Some(v) = num(get("lm_order"), "lm_order")? {
            cfg.lm.order = v;
        }
        if let Some(v) = num(get("lm_k"), "lm_k")? {
            cfg.lm.k = v;
        }
        if let Some(v) = num(get("lm_min_count"), "lm_min_count")? {
            cfg.lm.min_count = v;
        }
        if let Some(v) = num(get("scorer_epochs"), "scorer_epochs")? {
            cfg.scorer_epochs = v;
        }
        if let Some(v) = num(get("scorer_learning_rate"), "scorer_learning_rate")? {
            cfg.scorer_learning_rate = v;
        }
        Ok(cfg)
    }

    /// The retrieval strategies this configuration may run.
    fn retrievals(&self, all_presets: bool) -> Vec<RetrievalStrategy> {
        if all_presets {
            Preset::ALL.iter().map(|p| p.retrieval()).collect()
        } else {
            vec![self.pipeline().retrieval]
        }
    }

    /// Loads everything the configured pipeline (or, with `all_presets`,
    /// every preset) needs.
    pub fn load_resources(&self, all_presets: bool) -> Result<Resources, HarnessError> {
        let r = &self.resources;
        let retrievals = self.retrievals(all_presets);
        let res = |what: &'static str, e: Box<dyn std::error::Error + Send + Sync>| HarnessError::Resource {
            what,
            source: e,
        };
        let store = EmbeddingStore::load(&r.embeddings).map_err(|e| res("embeddings", e.into()))?;
        log::info!("loaded {} embeddings of dimension {}", store.len(), store.dim());

        let needs_wordnet = retrievals.contains(&RetrievalStrategy::Wordnet);
        let wordnet = match (&r.wordnet, needs_wordnet) {
            (Some(dir), _) => Some(load_wndb(dir).map_err(|e| res("wordnet", e.into()))?),
            (None, true) => {
                return Err(res("wordnet", "configuration uses WordNet retrieval but `wordnet` is not set".into()))
            }
            (None, false) => None,
        };
        let needs_lexicon = retrievals
            .iter()
            .any(|r| matches!(r, RetrievalStrategy::Informed { .. }))
            || r.scorer == ScorerSource::Lexicon;
        let lexicon = match (&r.lexicon, needs_lexicon) {
            (Some(p), _) => Some(EmotionLexicon::load(p).map_err(|e| res("lexicon", e.into()))?),
            (None, true) => {
                return Err(res("lexicon", "configuration needs an emotion lexicon but `lexicon` is not set".into()))
            }
            (None, false) => None,
        };
        let centroids = match &lexicon {
            Some(l) => Some(l.build_centroids(&store).map_err(|e| res("lexicon", e.into()))?),
            None => None,
        };
        let pos_lexicon = match &r.pos_lexicon {
            Some(p) => PosLexicon::load(p).map_err(|e| res("pos_lexicon", e.into()))?,
            None => PosLexicon::new(),
        };
        let lm = match &r.lm {
            LmSource::Corpus(p) => NGramModel::train_file(p, &self.lm).map_err(|e| res("lm_corpus", e.into()))?,
            LmSource::Model(p) => NGramModel::load(p).map_err(|e| res("lm_model", e.into()))?,
        };
        let shared = Arc::new(store.clone());
        let scorer: Box<dyn EmotionScorer> = match &r.scorer {
            ScorerSource::Linear(p) => Box::new(LinearScorer::load(p, shared).map_err(|e| res("scorer", e.into()))?),
            ScorerSource::Train(p) => {
                let examples = load_labeled(p)?;
                let (s, hist) = LinearScorer::train(&examples, shared, self.scorer_epochs, self.scorer_learning_rate)
                    .map_err(|e| res("scorer_corpus", e.into()))?;
                log::info!("trained scorer: loss {:.4} -> {:.4}", hist[0], hist[hist.len() - 1]);
                Box::new(s)
            }
            ScorerSource::Lexicon => Box::new(LexiconScorer::new(lexicon.clone().expect("checked above"))),
        };
        Ok(Resources {
            store,
            pos_lexicon,
            scorer,
            lm: Box::new(lm),
            wordnet,
            centroids,
        })
    }
}

/// Reads `emotion<TAB>text` lines into tokenized training examples.
pub fn load_labeled(path: &Path) -> Result<Vec<(Vec<String>, Emotion)>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_labeled(&text)
}

pub fn parse_labeled(text: &str) -> Result<Vec<(Vec<String>, Emotion)>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| HarnessError::Data(format!("labeled corpus line {}: {reason}", i + 1));
        let (label, sentence) = line.split_once('\t').ok_or_else(|| bad("expected `emotion<TAB>text`".into()))?;
        let e: Emotion = label.trim().parse().map_err(|e: crate::emotion::UnknownEmotion| bad(e.to_string()))?;
        let tokens = tokenize(sentence).map_err(|e| bad(e.to_string()))?;
        out.push((tokens.surfaces().iter().map(|s| s.to_string()).collect(), e));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "embeddings = e.txt\nlm_corpus = lm.txt\nscorer = s.txt\n";

    #[test]
    fn presets_expand_to_their_parameters() {
        assert_eq!(Preset::BfWN.selection(), SelectionStrategy::BruteForce);
        assert_eq!(Preset::AtWN.pipeline().selection, SelectionStrategy::Salient { k: 2, p: 2 });
        assert_eq!(Preset::AtWN.retrieval(), RetrievalStrategy::Wordnet);
        assert_eq!(Preset::AtUn.retrieval(), RetrievalStrategy::Uninformed { u: 150 });
        assert_eq!(Preset::AtUn.selection(), SelectionStrategy::Salient { k: 2, p: 2 });
        assert_eq!(Preset::AtIn.selection(), SelectionStrategy::Salient { k: 3, p: 2 });
        assert_eq!(Preset::AtIn.retrieval(), RetrievalStrategy::Informed { u: 100, v: 25 });
        for p in Preset::ALL {
            assert_eq!(p.id().parse::<Preset>().unwrap(), p);
            assert_eq!(p.label().parse::<Preset>().unwrap(), p);
            assert!(p.pipeline().validate().is_ok());
        }
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn parse_minimal_and_full_configs() {
        let c = RunConfig::parse(BASE, Path::new("/data")).unwrap();
        assert_eq!(c.resources.embeddings, Path::new("/data/e.txt"));
        assert_eq!(c.resources.lm, LmSource::Corpus("/data/lm.txt".into()));
        assert_eq!(c.resources.scorer, ScorerSource::Linear("/data/s.txt".into()));
        assert_eq!(c.preset, PresetChoice::Named(Preset::AtIn));
        assert_eq!(c.targets.len(), 6);

        let text = format!(
            "{BASE}# comment\npreset = custom\nselection = salient:4,3\nretrieval = informed:50,10\n\
             lambda = 0.5,0.25,0.25\ntargets = joy,sa\ntop_n = 3\ninclude_identity = false\nlm_order = 4\n"
        );
        let c = RunConfig::parse(&text, Path::new("")).unwrap();
        let p = c.pipeline();
        assert_eq!(p.selection, SelectionStrategy::Salient { k: 4, p: 3 });
        assert_eq!(p.retrieval, RetrievalStrategy::Informed { u: 50, v: 10 });
        assert_eq!(p.weights, ObjectiveWeights::new(0.5, 0.25, 0.25).unwrap());
        assert_eq!(p.top_n, 3);
        assert!(!p.include_identity);
        assert_eq!(c.targets, [Emotion::Joy, Emotion::Sadness]);
        assert_eq!(c.lm.order, 4);
    }

    #[test]
    fn config_errors_name_the_line() {
        let e = RunConfig::parse(&format!("{BASE}preset = nope\n"), Path::new("")).unwrap_err();
        assert!(matches!(e, HarnessError::Config { line: 4, .. }), "{e}");
        let e = RunConfig::parse(&format!("{BASE}colour = red\n"), Path::new("")).unwrap_err();
        assert!(matches!(e, HarnessError::Config { line: 4, .. }));
        let e = RunConfig::parse(&format!("{BASE}lambda = 1,1,1\n"), Path::new("")).unwrap_err();
        assert!(matches!(e, HarnessError::Config { line: 4, .. }));
        let e = RunConfig::parse(&format!("{BASE}selection = brute_force\n"), Path::new("")).unwrap_err();
        assert!(matches!(e, HarnessError::Config { .. }));
        assert!(RunConfig::parse("lm_corpus = x\nscorer = y\n", Path::new("")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}embeddings = again\n"), Path::new("")).is_err());
        assert!(RunConfig::parse("just words\n", Path::new("")).is_err());
    }

    #[test]
    fn strategy_parsers() {
        assert_eq!(parse_selection("brute_force").unwrap(), SelectionStrategy::BruteForce);
        assert_eq!(parse_selection("salient:2,2").unwrap(), SelectionStrategy::Salient { k: 2, p: 2 });
        assert!(parse_selection("salient:2").is_err());
        assert_eq!(parse_retrieval("uninformed:150").unwrap(), RetrievalStrategy::Uninformed { u: 150 });
        assert!(parse_retrieval("informed:100").is_err());
        assert!(parse_retrieval("magic").is_err());
    }

    #[test]
    fn labeled_corpus() {
        let ex = parse_labeled("joy\tI am happy!\n\nanger\tgo away\n").unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].0, ["i", "am", "happy", "!"]);
        assert_eq!(ex[1].1, Emotion::Anger);
        assert!(parse_labeled("joy i am happy\n").is_err());
        assert!(parse_labeled("hope\ti am happy\n").is_err());
    }
}

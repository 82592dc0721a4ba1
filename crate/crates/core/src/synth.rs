//! A small, fully deterministic synthetic world: embeddings, an emotion
//! lexicon, a WNDB database, training text for the language model and the
//! scorer, and an evaluation corpus.
//!
//! Emotion words of every emotion share a common "feeling" direction on top
//! of their own emotion direction, so embedding neighbourhoods cross emotion
//! boundaries and informed re-ranking has something to do. The WordNet graph
//! only links emotion words within their own emotion (plus one antonym pair),
//! which gives it a deliberately shorter emotional reach.

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embed::EmbeddingStore;
use crate::emolex::EmotionLexicon;
use crate::emotion::{Emotion, PerEmotion};
use crate::lm::{NGramConfig, NGramModel};
use crate::scoring::LinearScorer;
use crate::text::{Pos, PosLexicon};
use crate::transfer::Resources;
use crate::wordnet::{WnPos, WndbBuilder};

const FUNCTION_WORDS: &[&str] = &[
    "i", "you", "he", "she", "we", "they", "my", "your", "his", "her", "our", "the", "a", "was", "is",
    "am", "are", "so", "very", "really", "and", "but", "when", "with", "at", "in", "on", "to", "of",
    "that", "this", "it", "me", "him", "them",
];

const DETERMINERS: &[&str] = &["my", "the", "our", "his", "her", "your"];

/// (hypernym, hyponyms) for neutral nouns.
const NOUN_GROUPS: &[(&str, &[&str])] = &[
    ("person", &["friend", "mother", "father", "son", "daughter", "brother", "sister", "teacher", "boss", "neighbor"]),
    ("vehicle", &["car", "bus", "train"]),
    ("building", &["house", "office", "school"]),
    ("event", &["party", "game", "meeting", "trip", "holiday", "birthday", "christmas", "dinner"]),
    ("message", &["letter", "email", "news"]),
    ("time", &["day", "morning", "night", "week", "weekend"]),
    ("place", &["street", "city", "park", "garden", "kitchen", "room"]),
    ("thing", &["phone", "book", "picture", "door", "window", "movie", "song", "test", "result", "job"]),
];

const VERB_GROUPS: &[(&str, &[&str])] = &[
    ("move", &["walk", "drive", "visit", "leave"]),
    ("get", &["find", "take", "bring"]),
    ("communicate", &["call", "tell", "say", "write"]),
    ("perceive", &["see", "hear", "watch"]),
    ("make", &["cook", "build"]),
];

const LONE_VERBS: &[&str] = &["meet", "open", "read", "play", "give", "know", "think"];

const ADJ_PAIRS: &[(&str, &str)] = &[
    ("big", "small"),
    ("old", "new"),
    ("early", "late"),
    ("cold", "warm"),
    ("empty", "full"),
    ("heavy", "light"),
    ("long", "short"),
    ("quiet", "busy"),
];

const LONE_ADJS: &[&str] = &["red", "blue", "strange", "simple"];

/// Per emotion: six adjectives, three nouns, three verbs.
const EMOTION_WORDS: [(&[&str; 6], &[&str; 3], &[&str; 3]); 6] = [
    (
        &["angry", "furious", "mad", "annoyed", "irritated", "outraged"],
        &["rage", "fury", "anger"],
        &["hate", "detest", "resent"],
    ),
    (
        &["disgusted", "gross", "revolting", "nasty", "sickening", "repulsive"],
        &["disgust", "filth", "revulsion"],
        &["loathe", "despise", "abhor"],
    ),
    (
        &["afraid", "scared", "terrified", "nervous", "anxious", "frightened"],
        &["fear", "terror", "panic"],
        &["dread", "worry", "tremble"],
    ),
    (
        &["happy", "glad", "joyful", "delighted", "cheerful", "excited"],
        &["joy", "delight", "happiness"],
        &["love", "enjoy", "adore"],
    ),
    (
        &["sad", "unhappy", "miserable", "depressed", "gloomy", "heartbroken"],
        &["sorrow", "grief", "sadness"],
        &["cry", "mourn", "weep"],
    ),
    (
        &["surprised", "amazed", "astonished", "shocked", "stunned", "startled"],
        &["surprise", "wonder", "shock"],
        &["gasp", "marvel", "gape"],
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub seed: u64,
    pub dim: usize,
    /// Evaluation corpus size.
    pub corpus_size: usize,
    pub lm_sentences: usize,
    pub labeled_per_emotion: usize,
    pub scorer_epochs: usize,
    pub scorer_learning_rate: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            seed: 20_190_607,
            dim: 50,
            corpus_size: 200,
            lm_sentences: 3000,
            labeled_per_emotion: 80,
            scorer_epochs: 300,
            scorer_learning_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Word(&'static str),
    Det,
    Noun,
    Verb,
    Adj,
    EmoAdj,
    EmoNoun,
    EmoVerb,
}

use Slot::*;

const EMOTIONAL_TEMPLATES: &[&[Slot]] = &[
    &[Word("i"), Word("was"), Word("so"), EmoAdj, Word("when"), Det, Noun, Verb, Word("the"), Noun],
    &[Det, Noun, Word("is"), Adj, Word("and"), Word("i"), Word("am"), EmoAdj],
    &[Word("i"), EmoVerb, Word("the"), Adj, Noun],
    &[Det, EmoNoun, Word("at"), Word("the"), Noun, Word("was"), Adj],
    &[Word("the"), Noun, Word("is"), Adj, Word("but"), Word("i"), Word("am"), EmoAdj],
    &[Word("we"), EmoVerb, Det, Noun, Word("and"), Word("the"), Noun],
    &[Word("she"), Word("was"), Word("really"), EmoAdj, Word("with"), Det, Noun],
];

const NEUTRAL_TEMPLATES: &[&[Slot]] = &[
    &[Word("we"), Verb, Word("the"), Noun, Word("with"), Det, Noun],
    &[Det, Noun, Word("and"), Det, Noun, Verb, Word("the"), Adj, Noun],
    &[Word("the"), Noun, Word("was"), Word("very"), Adj, Word("in"), Word("the"), Noun],
    &[Word("they"), Verb, Det, Adj, Noun, Word("on"), Word("the"), Noun],
];

/// Generated resources, kept in memory.
#[derive(Debug, Clone)]
pub struct ToyWorld {
    pub config: ToyConfig,
    pub store: EmbeddingStore,
    pub lexicon: EmotionLexicon,
    pub wordnet: WndbBuilder,
    pub pos_lexicon: PosLexicon,
    pub lm_corpus: Vec<String>,
    pub labeled: Vec<(Emotion, String)>,
    pub corpus: Vec<String>,
    /// Source emotion of each corpus sentence; `None` for neutral ones.
    pub corpus_emotions: Vec<Option<Emotion>>,
}

/// Paths written by [`ToyWorld::write`].
#[derive(Debug, Clone)]
pub struct ToyFiles {
    pub dir: PathBuf,
    pub embeddings: PathBuf,
    pub wordnet: PathBuf,
    pub lexicon: PathBuf,
    pub pos_lexicon: PathBuf,
    pub lm_corpus: PathBuf,
    pub labeled: PathBuf,
    pub scorer: PathBuf,
    pub corpus: PathBuf,
    pub config: PathBuf,
}

struct Vocab {
    nouns: Vec<&'static str>,
    verbs: Vec<&'static str>,
    adjs: Vec<&'static str>,
}

fn neutral_vocab() -> Vocab {
    let mut nouns: Vec<&str> = vec!["feeling", "emotion"];
    for (h, hs) in NOUN_GROUPS {
        nouns.push(h);
        nouns.extend(hs.iter());
    }
    let mut verbs: Vec<&str> = vec!["feel"];
    for (h, hs) in VERB_GROUPS {
        verbs.push(h);
        verbs.extend(hs.iter());
    }
    verbs.extend(LONE_VERBS);
    let mut adjs: Vec<&str> = ADJ_PAIRS.iter().flat_map(|(a, b)| [*a, *b]).collect();
    adjs.extend(LONE_ADJS);
    Vocab { nouns, verbs, adjs }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn mix(parts: &[(f64, &[f64])], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (w, v) in parts {
        out.iter_mut().zip(*v).for_each(|(o, x)| *o += w * x);
    }
    out
}

impl ToyWorld {
    pub fn generate(config: &ToyConfig) -> ToyWorld {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dim = config.dim;
        let vocab = neutral_vocab();

        let feeling = unit(gaussian(&mut rng, dim));
        let emo_dirs: Vec<Vec<f64>> = (0..6).map(|_| unit(gaussian(&mut rng, dim))).collect();
        let [function_dir, noun_dir, verb_dir, adj_dir] =
            [(); 4].map(|_| unit(gaussian(&mut rng, dim)));

        let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
        let mut pos_lexicon = PosLexicon::new();
        let noise = |rng: &mut ChaCha8Rng| unit(gaussian(rng, dim));
        let mut lexicon = EmotionLexicon::new();

        for w in FUNCTION_WORDS {
            let n = noise(&mut rng);
            entries.push((w.to_string(), mix(&[(1.0, &function_dir), (0.8, &n)], dim)));
            pos_lexicon.insert(w, Pos::Other);
            set_neutral(&mut lexicon, w);
        }
        let neutral: [(&[&str], &[f64], Pos); 3] = [
            (&vocab.nouns, &noun_dir, Pos::Noun),
            (&vocab.verbs, &verb_dir, Pos::Verb),
            (&vocab.adjs, &adj_dir, Pos::Adj),
        ];
        for (words, dir, pos) in neutral {
            for w in words {
                let n = noise(&mut rng);
                let topic = if matches!(*w, "feeling" | "emotion" | "feel") { 0.8 } else { 0.15 };
                entries.push((w.to_string(), mix(&[(0.8, dir), (topic, &feeling), (0.9, &n)], dim)));
                pos_lexicon.insert(w, pos);
                set_neutral(&mut lexicon, w);
            }
        }
        for e in Emotion::ALL {
            let (adjs, nouns, verbs) = EMOTION_WORDS[e.index()];
            let groups: [(&[&str], &[f64], Pos); 3] = [
                (adjs, &adj_dir, Pos::Adj),
                (nouns, &noun_dir, Pos::Noun),
                (verbs, &verb_dir, Pos::Verb),
            ];
            for (words, dir, pos) in groups {
                for w in words {
                    let n = noise(&mut rng);
                    entries.push((
                        w.to_string(),
                        mix(&[(1.0, &feeling), (1.2, &emo_dirs[e.index()]), (0.5, dir), (0.5, &n)], dim),
                    ));
                    pos_lexicon.insert(w, pos);
                    for other in Emotion::ALL {
                        lexicon.set(w, other, other == e);
                    }
                }
            }
        }
        let store = EmbeddingStore::from_vectors(entries).expect("synthetic vectors are valid");

        let wordnet = build_wordnet();

        let mut gen = Generator { rng: &mut rng, vocab: &vocab };
        let lm_corpus: Vec<String> = (0..config.lm_sentences).map(|_| gen.any_sentence().0).collect();
        let mut labeled = Vec::new();
        for _ in 0..config.labeled_per_emotion {
            for e in Emotion::ALL {
                labeled.push((e, gen.emotional(e)));
            }
        }
        let (corpus, corpus_emotions) = (0..config.corpus_size).map(|_| gen.any_sentence()).unzip();

        ToyWorld {
            config: config.clone(),
            store,
            lexicon,
            wordnet,
            pos_lexicon,
            lm_corpus,
            labeled,
            corpus,
            corpus_emotions,
        }
    }

    /// A fixed 20-token sentence made of in-vocabulary words.
    pub fn long_sentence(&self) -> String {
        "i was so happy when my mother call the teacher and our old neighbor is busy but i am nervous".to_string()
    }

    pub fn train_scorer(&self, store: Arc<EmbeddingStore>) -> LinearScorer {
        let examples: Vec<(Vec<&str>, Emotion)> = self
            .labeled
            .iter()
            .map(|(e, s)| (s.split(' ').collect(), *e))
            .collect();
        LinearScorer::train(
            &examples,
            store,
            self.config.scorer_epochs,
            self.config.scorer_learning_rate,
        )
        .expect("every emotion has labeled examples")
        .0
    }

    pub fn train_lm(&self) -> NGramModel {
        NGramModel::train_text(&self.lm_corpus.join("\n"), &NGramConfig::default())
            .expect("non-empty synthetic corpus")
    }

    /// All in-memory resources with a trained linear scorer and trigram LM.
    pub fn resources(&self) -> Resources {
        let store = Arc::new(self.store.clone());
        let scorer = self.train_scorer(Arc::clone(&store));
        Resources {
            store: self.store.clone(),
            pos_lexicon: self.pos_lexicon.clone(),
            scorer: Box::new(scorer),
            lm: Box::new(self.train_lm()),
            wordnet: Some(self.wordnet.build().expect("synthetic database is consistent")),
            centroids: Some(
                self.lexicon
                    .build_centroids(&self.store)
                    .expect("every emotion has terms"),
            ),
        }
    }

    /// Writes every resource plus a run configuration into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> io::Result<ToyFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let files = ToyFiles {
            dir: dir.to_path_buf(),
            embeddings: dir.join("embeddings.txt"),
            wordnet: dir.join("wndb"),
            lexicon: dir.join("emolex.txt"),
            pos_lexicon: dir.join("pos.tsv"),
            lm_corpus: dir.join("lm_corpus.txt"),
            labeled: dir.join("labeled.tsv"),
            scorer: dir.join("scorer.txt"),
            corpus: dir.join("corpus.txt"),
            config: dir.join("run.conf"),
        };
        std::fs::write(&files.embeddings, self.store.to_text())?;
        self.wordnet.write(&files.wordnet)?;
        std::fs::write(&files.lexicon, self.lexicon.to_text())?;
        let mut pos = String::new();
        for w in self.store.words() {
            if let Some(p) = self.pos_lexicon.get(w) {
                pos.push_str(&format!("{w}\t{p}\n"));
            }
        }
        std::fs::write(&files.pos_lexicon, pos)?;
        std::fs::write(&files.lm_corpus, lines(&self.lm_corpus))?;
        let labeled: Vec<String> = self.labeled.iter().map(|(e, s)| format!("{e}\t{s}")).collect();
        std::fs::write(&files.labeled, lines(&labeled))?;
        let scorer = self.train_scorer(Arc::new(self.store.clone()));
        std::fs::write(&files.scorer, scorer.to_text())?;
        std::fs::write(&files.corpus, lines(&self.corpus))?;
        let conf = "\
# Synthetic resources; paths are relative to this file.
embeddings = embeddings.txt
wordnet = wndb
lexicon = emolex.txt
pos_lexicon = pos.tsv
lm_corpus = lm_corpus.txt
scorer = scorer.txt
preset = atin
targets = all
";
        std::fs::write(&files.config, conf)?;
        Ok(files)
    }

    /// Every word with an embedding.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.store.words().iter().map(String::as_str).collect()
    }
}

fn set_neutral(lexicon: &mut EmotionLexicon, w: &str) {
    for e in Emotion::ALL {
        lexicon.set(w, e, false);
    }
}

fn lines(v: &[String]) -> String {
    let mut s = v.join("\n");
    s.push('\n');
    s
}

/// Emotion words of one emotion, in adjective/noun/verb groups.
pub fn emotion_words(e: Emotion) -> Vec<&'static str> {
    let (a, n, v) = EMOTION_WORDS[e.index()];
    a.iter().chain(n).chain(v).copied().collect()
}

/// Per-emotion word lists.
pub fn all_emotion_words() -> PerEmotion<Vec<&'static str>> {
    Emotion::ALL.map(emotion_words)
}

fn build_wordnet() -> WndbBuilder {
    let mut b = WndbBuilder::new();

    let feeling = b.synset(WnPos::Noun, &["feeling", "emotion"], "a mental state");
    let feel = b.synset(WnPos::Verb, &["feel"], "undergo a mental state");
    let mut heads = Vec::new();
    for (i, (adjs, nouns, verbs)) in EMOTION_WORDS.iter().enumerate() {
        let gloss = format!("related to {}", Emotion::ALL[i]);
        let head = b.synset(WnPos::Adj, &[adjs[0], adjs[1]], &gloss);
        for pair in [[adjs[2], adjs[3]], [adjs[4], adjs[5]]] {
            let sat = b.satellite(&pair, &gloss);
            b.pointer(sat, "&", head);
            b.pointer(head, "&", sat);
        }
        heads.push(head);
        let n1 = b.synset(WnPos::Noun, &[nouns[0], nouns[1]], &gloss);
        let n2 = b.synset(WnPos::Noun, &[nouns[2]], &gloss);
        b.hypernym(n1, feeling);
        b.hypernym(n2, feeling);
        let v1 = b.synset(WnPos::Verb, &[verbs[0], verbs[1]], &gloss);
        let v2 = b.synset(WnPos::Verb, &[verbs[2]], &gloss);
        b.hypernym(v1, feel);
        b.hypernym(v2, feel);
    }
    // happy <-> unhappy
    let (joy, sad) = (heads[Emotion::Joy.index()], heads[Emotion::Sadness.index()]);
    b.lexical_pointer(joy, 1, "!", sad, 2);
    b.lexical_pointer(sad, 2, "!", joy, 1);

    for (hyper, hypos) in NOUN_GROUPS {
        let h = b.synset(WnPos::Noun, &[hyper], "a neutral category");
        for w in hypos.iter() {
            let s = b.synset(WnPos::Noun, &[w], "a neutral thing");
            b.hypernym(s, h);
        }
    }
    for (hyper, hypos) in VERB_GROUPS {
        let h = b.synset(WnPos::Verb, &[hyper], "a neutral action");
        for w in hypos.iter() {
            let s = b.synset(WnPos::Verb, &[w], "a neutral action");
            b.hypernym(s, h);
        }
    }
    for w in LONE_VERBS {
        b.synset(WnPos::Verb, &[w], "a neutral action");
    }
    for (a, z) in ADJ_PAIRS {
        let x = b.synset(WnPos::Adj, &[a], "a neutral property");
        let y = b.synset(WnPos::Adj, &[z], "a neutral property");
        b.lexical_pointer(x, 1, "!", y, 1);
        b.lexical_pointer(y, 1, "!", x, 1);
    }
    for w in LONE_ADJS {
        b.synset(WnPos::Adj, &[w], "a neutral property");
    }
    b.synset(WnPos::Adv, &["very", "really"], "to a high degree");
    b
}

struct Generator<'a> {
    rng: &'a mut ChaCha8Rng,
    vocab: &'a Vocab,
}

impl Generator<'_> {
    fn fill(&mut self, template: &[Slot], e: Emotion) -> String {
        let (ea, en, ev) = EMOTION_WORDS[e.index()];
        let words: Vec<&str> = template
            .iter()
            .map(|slot| match slot {
                Word(w) => *w,
                Det => *DETERMINERS.choose(self.rng).unwrap(),
                Noun => *self.vocab.nouns.choose(self.rng).unwrap(),
                Verb => *self.vocab.verbs.choose(self.rng).unwrap(),
                Adj => *self.vocab.adjs.choose(self.rng).unwrap(),
                EmoAdj => *ea.choose(self.rng).unwrap(),
                EmoNoun => *en.choose(self.rng).unwrap(),
                EmoVerb => *ev.choose(self.rng).unwrap(),
            })
            .collect();
        words.join(" ")
    }

    fn emotional(&mut self, e: Emotion) -> String {
        let t = EMOTIONAL_TEMPLATES.choose(self.rng).unwrap();
        self.fill(t, e)
    }

    fn any_sentence(&mut self) -> (String, Option<Emotion>) {
        if self.rng.gen_bool(0.75) {
            let e = Emotion::ALL[self.rng.gen_range(0..6)];
            (self.emotional(e), Some(e))
        } else {
            let t = NEUTRAL_TEMPLATES.choose(self.rng).unwrap();
            (self.fill(t, Emotion::Joy), None)
        }
    }
}

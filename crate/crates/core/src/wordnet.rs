//! Princeton WNDB (`index.*` / `data.*`) loading and one-hop candidate retrieval.
//!
//! Only the fields needed for substitution are kept: lemma lists and pointer
//! blocks. Glosses, verb frames and sense counts are parsed past and dropped.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::text::Pos;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("missing WNDB file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed line: {reason}")]
    Malformed {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("{file}:{line}: reference to unknown synset {target}")]
    Dangling {
        file: String,
        line: usize,
        target: SynsetKey,
    },
}

/// The four WordNet syntactic categories. Satellite adjectives (`s`) fold
/// into [`WnPos::Adj`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WnPos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl WnPos {
    pub const ALL: [WnPos; 4] = [WnPos::Noun, WnPos::Verb, WnPos::Adj, WnPos::Adv];

    fn from_code(c: &str) -> Option<WnPos> {
        match c {
            "n" => Some(WnPos::Noun),
            "v" => Some(WnPos::Verb),
            "a" | "s" => Some(WnPos::Adj),
            "r" => Some(WnPos::Adv),
            _ => None,
        }
    }

    fn code(self) -> char {
        match self {
            WnPos::Noun => 'n',
            WnPos::Verb => 'v',
            WnPos::Adj => 'a',
            WnPos::Adv => 'r',
        }
    }

    fn file_suffix(self) -> &'static str {
        match self {
            WnPos::Noun => "noun",
            WnPos::Verb => "verb",
            WnPos::Adj => "adj",
            WnPos::Adv => "adv",
        }
    }

    pub fn from_pos(pos: Pos) -> Option<WnPos> {
        match pos {
            Pos::Noun => Some(WnPos::Noun),
            Pos::Verb => Some(WnPos::Verb),
            Pos::Adj => Some(WnPos::Adj),
            Pos::Adv => Some(WnPos::Adv),
            Pos::Other => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetKey {
    pub offset: u64,
    pub pos: WnPos,
}

impl std::fmt::Display for SynsetKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:08}-{}", self.offset, self.pos.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    /// Lowercase, with WordNet's underscores kept for multiword entries.
    pub text: String,
    pub multiword: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pointer {
    pub symbol: String,
    pub target: SynsetKey,
    /// 1-based word numbers; both 0 for a semantic (synset-to-synset) pointer.
    pub source_word: u16,
    pub target_word: u16,
}

impl Pointer {
    pub fn is_lexical(&self) -> bool {
        self.source_word != 0 || self.target_word != 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub key: SynsetKey,
    pub satellite: bool,
    pub lemmas: Vec<Lemma>,
    pub pointers: Vec<Pointer>,
}

impl Synset {
    fn lemma(&self, word_number: u16) -> Option<&Lemma> {
        (word_number as usize)
            .checked_sub(1)
            .and_then(|i| self.lemmas.get(i))
    }
}

/// Retrieval switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordNetOptions {
    /// Keep lemmas such as `hot_dog`. Off by default since a substitution
    /// replaces exactly one token.
    pub include_multiword: bool,
}

const NOUN_VERB_RELATIONS: &[&str] = &["@", "@i", "~", "~i"];
const SIMILAR_TO: &str = "&";
const ANTONYM: &str = "!";

/// A loaded, fully resolved lexical database.
#[derive(Debug, Clone, Default)]
pub struct LexicalDb {
    index: HashMap<(String, WnPos), Vec<SynsetKey>>,
    synsets: HashMap<SynsetKey, Synset>,
}

impl LexicalDb {
    pub fn synset(&self, key: SynsetKey) -> Option<&Synset> {
        self.synsets.get(&key)
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values()
    }

    pub fn synset_count(&self) -> usize {
        self.synsets.len()
    }

    /// `(lemma, pos)` pairs present in the index files.
    pub fn index_entries(&self) -> impl Iterator<Item = (&str, WnPos)> {
        self.index.keys().map(|(l, p)| (l.as_str(), *p))
    }

    pub fn lookup(&self, lemma: &str, pos: WnPos) -> &[SynsetKey] {
        self.index
            .get(&(lemma.to_string(), pos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains_lemma(&self, lemma: &str) -> bool {
        WnPos::ALL.iter().any(|p| !self.lookup(lemma, *p).is_empty())
    }

    /// Substitution candidates with default options.
    pub fn candidates_for(&self, surface: &str, pos: Pos) -> Vec<String> {
        self.candidates_with(surface, pos, WordNetOptions::default())
    }

    /// Substitution candidates for `surface` read as `pos`, sorted and deduplicated.
    ///
    /// Nouns and verbs take the lemmas of every synset one hypernym or hyponym
    /// hop away from any sense of the word. Adjectives take co-lemmas, lemmas
    /// of similar-to neighbours and antonyms; antonym pointers from any lemma
    /// of the word's synsets count, and a lexical antonym yields just its
    /// target word. Adverbs and untagged words get nothing. The surface is
    /// looked up as-is, with no sense disambiguation or lemmatization.
    pub fn candidates_with(&self, surface: &str, pos: Pos, opts: WordNetOptions) -> Vec<String> {
        let wn_pos = match pos {
            Pos::Noun => WnPos::Noun,
            Pos::Verb => WnPos::Verb,
            Pos::Adj => WnPos::Adj,
            Pos::Adv | Pos::Other => return Vec::new(),
        };
        let mut out: BTreeSet<&Lemma> = BTreeSet::new();
        for key in self.lookup(surface, wn_pos) {
            let synset = &self.synsets[key];
            match wn_pos {
                WnPos::Noun | WnPos::Verb => {
                    for ptr in &synset.pointers {
                        if NOUN_VERB_RELATIONS.contains(&ptr.symbol.as_str()) {
                            out.extend(&self.synsets[&ptr.target].lemmas);
                        }
                    }
                }
                WnPos::Adj => {
                    out.extend(&synset.lemmas);
                    for ptr in &synset.pointers {
                        let target = &self.synsets[&ptr.target];
                        if ptr.symbol == SIMILAR_TO {
                            out.extend(&target.lemmas);
                        } else if ptr.symbol == ANTONYM {
                            match target.lemma(ptr.target_word) {
                                Some(l) if ptr.is_lexical() => {
                                    out.insert(l);
                                }
                                _ => out.extend(&target.lemmas),
                            }
                        }
                    }
                }
                WnPos::Adv => unreachable!(),
            }
        }
        out.into_iter()
            .filter(|l| opts.include_multiword || !l.multiword)
            .map(|l| l.text.as_str())
            .filter(|t| *t != surface)
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

impl PartialOrd for Lemma {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Lemma {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.text
            .cmp(&other.text)
            .then(self.multiword.cmp(&other.multiword))
    }
}

fn file_name(kind: &str, pos: WnPos) -> String {
    format!("{kind}.{}", pos.file_suffix())
}

/// Loads the eight `index.*` / `data.*` files from `dir`.
pub fn load_wndb(dir: impl AsRef<Path>) -> Result<LexicalDb, WordNetError> {
    let dir = dir.as_ref();
    let mut files = Vec::with_capacity(8);
    for pos in WnPos::ALL {
        for kind in ["data", "index"] {
            let name = file_name(kind, pos);
            let path = dir.join(&name);
            if !path.is_file() {
                return Err(WordNetError::MissingFile { path });
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|source| WordNetError::Io { path, source })?;
            files.push((name, text));
        }
    }
    parse_wndb(files.iter().map(|(n, t)| (n.as_str(), t.as_str())))
}

/// Parses WNDB file contents keyed by their canonical names (`data.noun`, ...).
/// Files with other names are ignored; missing ones are treated as empty.
pub fn parse_wndb<'a>(
    files: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<LexicalDb, WordNetError> {
    let files: HashMap<&str, &str> = files.into_iter().collect();
    let mut db = LexicalDb::default();
    // Source line of each synset, for error reports.
    let mut sites: HashMap<SynsetKey, (String, usize)> = HashMap::new();

    for pos in WnPos::ALL {
        let name = file_name("data", pos);
        let text = files.get(name.as_str()).copied().unwrap_or("");
        for (i, line) in text.lines().enumerate() {
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let synset = parse_data_line(line, pos).map_err(|reason| WordNetError::Malformed {
                file: name.clone(),
                line: i + 1,
                reason,
            })?;
            if db.synsets.contains_key(&synset.key) {
                return Err(WordNetError::Malformed {
                    file: name.clone(),
                    line: i + 1,
                    reason: format!("duplicate synset {}", synset.key),
                });
            }
            sites.insert(synset.key, (name.clone(), i + 1));
            db.synsets.insert(synset.key, synset);
        }
    }

    let mut ordered: Vec<&Synset> = db.synsets.values().collect();
    ordered.sort_by_key(|s| (s.key.pos, s.key.offset));
    for synset in ordered {
        let (file, line) = sites[&synset.key].clone();
        for p in &synset.pointers {
            let Some(target) = db.synsets.get(&p.target) else {
                return Err(WordNetError::Dangling {
                    file,
                    line,
                    target: p.target,
                });
            };
            let bad_src = p.source_word as usize > synset.lemmas.len();
            let bad_dst = p.target_word as usize > target.lemmas.len();
            if bad_src || bad_dst {
                return Err(WordNetError::Malformed {
                    file,
                    line,
                    reason: format!(
                        "pointer {} from {} to {} has out-of-range word numbers",
                        p.symbol, synset.key, p.target
                    ),
                });
            }
        }
    }

    for pos in WnPos::ALL {
        let name = file_name("index", pos);
        let text = files.get(name.as_str()).copied().unwrap_or("");
        for (i, line) in text.lines().enumerate() {
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let (lemma, keys) =
                parse_index_line(line, pos).map_err(|reason| WordNetError::Malformed {
                    file: name.clone(),
                    line: i + 1,
                    reason,
                })?;
            for key in &keys {
                if !db.synsets.contains_key(key) {
                    return Err(WordNetError::Dangling {
                        file: name.clone(),
                        line: i + 1,
                        target: *key,
                    });
                }
            }
            db.index.insert((lemma, pos), keys);
        }
    }
    Ok(db)
}

fn parse_num<T: TryFrom<u64>>(field: Option<&str>, what: &str, radix: u32) -> Result<T, String> {
    let f = field.ok_or_else(|| format!("missing {what}"))?;
    let v = u64::from_str_radix(f, radix).map_err(|_| format!("invalid {what} `{f}`"))?;
    T::try_from(v).map_err(|_| format!("{what} `{f}` out of range"))
}

/// Lowercases and strips adjective position markers such as `(p)`.
fn normalize_lemma(word: &str) -> String {
    let w = match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    };
    w.to_lowercase()
}

fn parse_data_line(line: &str, file_pos: WnPos) -> Result<Synset, String> {
    let body = line.split_once('|').map(|(b, _)| b).unwrap_or(line);
    let mut it = body.split_whitespace();
    let offset: u64 = parse_num(it.next(), "synset offset", 10)?;
    let _lex_filenum: u32 = parse_num(it.next(), "lex_filenum", 10)?;
    let ss_type = it.next().ok_or("missing ss_type")?;
    let pos = WnPos::from_code(ss_type).ok_or_else(|| format!("invalid ss_type `{ss_type}`"))?;
    if pos != file_pos {
        return Err(format!("ss_type `{ss_type}` in {} file", file_pos.file_suffix()));
    }
    let w_cnt: usize = parse_num(it.next(), "w_cnt", 16)?;
    if w_cnt == 0 {
        return Err("synset without lemmas".into());
    }
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = it.next().ok_or("missing word")?;
        let _lex_id: u32 = parse_num(it.next(), "lex_id", 16)?;
        let text = normalize_lemma(word);
        lemmas.push(Lemma {
            multiword: text.contains('_'),
            text,
        });
    }
    let p_cnt: usize = parse_num(it.next(), "p_cnt", 10)?;
    let mut pointers = Vec::with_capacity(p_cnt);
    for _ in 0..p_cnt {
        let symbol = it.next().ok_or("missing pointer symbol")?.to_string();
        let target_offset: u64 = parse_num(it.next(), "pointer offset", 10)?;
        let pcode = it.next().ok_or("missing pointer pos")?;
        let target_pos =
            WnPos::from_code(pcode).ok_or_else(|| format!("invalid pointer pos `{pcode}`"))?;
        let st = it.next().ok_or("missing source/target field")?;
        if st.len() != 4 {
            return Err(format!("invalid source/target field `{st}`"));
        }
        let source_word: u16 = parse_num(Some(&st[..2]), "source word", 16)?;
        let target_word: u16 = parse_num(Some(&st[2..]), "target word", 16)?;
        pointers.push(Pointer {
            symbol,
            target: SynsetKey {
                offset: target_offset,
                pos: target_pos,
            },
            source_word,
            target_word,
        });
    }
    if pos == WnPos::Verb {
        if let Some(f) = it.next() {
            let f_cnt: usize = parse_num(Some(f), "f_cnt", 10)?;
            for _ in 0..f_cnt * 3 {
                it.next().ok_or("truncated verb frame list")?;
            }
        }
    }
    Ok(Synset {
        key: SynsetKey { offset, pos },
        satellite: ss_type == "s",
        lemmas,
        pointers,
    })
}

fn parse_index_line(line: &str, file_pos: WnPos) -> Result<(String, Vec<SynsetKey>), String> {
    let mut it = line.split_whitespace();
    let lemma = it.next().ok_or("missing lemma")?.to_lowercase();
    let pcode = it.next().ok_or("missing pos")?;
    if WnPos::from_code(pcode) != Some(file_pos) {
        return Err(format!("pos `{pcode}` in {} index", file_pos.file_suffix()));
    }
    let synset_cnt: usize = parse_num(it.next(), "synset_cnt", 10)?;
    let p_cnt: usize = parse_num(it.next(), "p_cnt", 10)?;
    for _ in 0..p_cnt {
        it.next().ok_or("missing pointer symbol")?;
    }
    let _sense_cnt: usize = parse_num(it.next(), "sense_cnt", 10)?;
    let _tagsense_cnt: usize = parse_num(it.next(), "tagsense_cnt", 10)?;
    let mut keys = Vec::with_capacity(synset_cnt);
    for _ in 0..synset_cnt {
        let offset: u64 = parse_num(it.next(), "synset offset", 10)?;
        keys.push(SynsetKey {
            offset,
            pos: file_pos,
        });
    }
    if let Some(extra) = it.next() {
        return Err(format!("trailing field `{extra}`"));
    }
    Ok((lemma, keys))
}

/// Handle to a synset under construction in a [`WndbBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DraftId(usize);

#[derive(Debug, Clone)]
struct DraftSynset {
    pos: WnPos,
    satellite: bool,
    lemmas: Vec<String>,
    pointers: Vec<(String, DraftId, u16, u16)>,
    gloss: String,
}

/// Writes small WNDB databases with correct byte offsets. Used for
/// synthetic resources and test fixtures.
#[derive(Debug, Clone, Default)]
pub struct WndbBuilder {
    drafts: Vec<DraftSynset>,
}

const WNDB_HEADER: &str = "  1 Synthetic database in Princeton WNDB format.\n  2 Offsets are byte positions of each data line.\n";

impl WndbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn synset(&mut self, pos: WnPos, lemmas: &[&str], gloss: &str) -> DraftId {
        self.push(pos, false, lemmas, gloss)
    }

    pub fn satellite(&mut self, lemmas: &[&str], gloss: &str) -> DraftId {
        self.push(WnPos::Adj, true, lemmas, gloss)
    }

    fn push(&mut self, pos: WnPos, satellite: bool, lemmas: &[&str], gloss: &str) -> DraftId {
        assert!(!lemmas.is_empty(), "synset needs at least one lemma");
        self.drafts.push(DraftSynset {
            pos,
            satellite,
            lemmas: lemmas.iter().map(|l| l.to_string()).collect(),
            pointers: Vec::new(),
            gloss: gloss.to_string(),
        });
        DraftId(self.drafts.len() - 1)
    }

    /// Adds a semantic pointer `from --symbol--> to`.
    pub fn pointer(&mut self, from: DraftId, symbol: &str, to: DraftId) {
        self.drafts[from.0]
            .pointers
            .push((symbol.to_string(), to, 0, 0));
    }

    /// Adds a lexical pointer between 1-based word numbers.
    pub fn lexical_pointer(&mut self, from: DraftId, from_word: u16, symbol: &str, to: DraftId, to_word: u16) {
        self.drafts[from.0]
            .pointers
            .push((symbol.to_string(), to, from_word, to_word));
    }

    /// Adds `@` from `hypo` to `hyper` and the inverse `~`.
    pub fn hypernym(&mut self, hypo: DraftId, hyper: DraftId) {
        self.pointer(hypo, "@", hyper);
        self.pointer(hyper, "~", hypo);
    }

    pub fn len(&self) -> usize {
        self.drafts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drafts.is_empty()
    }

    fn data_line(&self, i: usize, offsets: &[u64]) -> String {
        let d = &self.drafts[i];
        let ss_type = if d.satellite { 's' } else { d.pos.code() };
        let mut line = String::new();
        let me = offsets[i];
        write!(line, "{me:08} 00 {ss_type} {:02x}", d.lemmas.len()).unwrap();
        for l in &d.lemmas {
            write!(line, " {l} 0").unwrap();
        }
        write!(line, " {:03}", d.pointers.len()).unwrap();
        for (sym, target, sw, tw) in &d.pointers {
            let t = &self.drafts[target.0];
            write!(
                line,
                " {sym} {:08} {} {sw:02x}{tw:02x}",
                offsets[target.0],
                t.pos.code()
            )
            .unwrap();
        }
        if d.pos == WnPos::Verb {
            line.push_str(" 00");
        }
        writeln!(line, " | {}  ", d.gloss).unwrap();
        line
    }

    /// Renders `(file name, contents)` for all eight files.
    pub fn render(&self) -> Vec<(String, String)> {
        // Offsets are zero-padded to eight digits, so line lengths do not depend
        // on offset values: lay out with placeholders, then render for real.
        let placeholder = vec![0u64; self.drafts.len()];
        let mut offsets = vec![0u64; self.drafts.len()];
        for pos in WnPos::ALL {
            let mut cursor = WNDB_HEADER.len() as u64;
            for (i, _) in self.drafts.iter().enumerate().filter(|(_, d)| d.pos == pos) {
                offsets[i] = cursor;
                cursor += self.data_line(i, &placeholder).len() as u64;
            }
        }
        let mut out = Vec::new();
        for pos in WnPos::ALL {
            let mut data = String::from(WNDB_HEADER);
            let mut index: std::collections::BTreeMap<String, (Vec<u64>, BTreeSet<String>)> =
                Default::default();
            for (i, d) in self.drafts.iter().enumerate().filter(|(_, d)| d.pos == pos) {
                data.push_str(&self.data_line(i, &offsets));
                for l in &d.lemmas {
                    let entry = index.entry(l.to_lowercase()).or_default();
                    entry.0.push(offsets[i]);
                    entry.1.extend(d.pointers.iter().map(|p| p.0.clone()));
                }
            }
            let mut idx = String::from(WNDB_HEADER);
            for (lemma, (offs, syms)) in index {
                write!(idx, "{lemma} {} {} {}", pos.code(), offs.len(), syms.len()).unwrap();
                for s in &syms {
                    write!(idx, " {s}").unwrap();
                }
                write!(idx, " {} 0", offs.len()).unwrap();
                for o in offs {
                    write!(idx, " {o:08}").unwrap();
                }
                idx.push_str("  \n");
            }
            out.push((file_name("data", pos), data));
            out.push((file_name("index", pos), idx));
        }
        out
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, contents) in self.render() {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<LexicalDb, WordNetError> {
        let files = self.render();
        parse_wndb(files.iter().map(|(n, t)| (n.as_str(), t.as_str())))
    }
}

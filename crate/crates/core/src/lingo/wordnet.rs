//! Princeton WordNet 3.0 database files (`data.*`, `index.*`, `index.sense`,
//! `*.exc`).
//!
//! `data.noun` and `index.noun` are required; the verb, adjective and adverb
//! pairs, the exception lists and `index.sense` are loaded when present. Hypernym pointers (`@`,
//! `@i`) are resolved at load time, the hypernym graph is checked for cycles,
//! and each synset's minimum depth (shortest hypernym path to a root) is
//! computed once.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("integrity: {0}")]
    Integrity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosClass {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl PosClass {
    pub const ALL: [PosClass; 4] = [PosClass::Noun, PosClass::Verb, PosClass::Adj, PosClass::Adv];

    /// Tie-break priority for ambiguous words: lower sorts first.
    fn priority(self) -> u8 {
        match self {
            PosClass::Noun => 0,
            PosClass::Adj => 1,
            PosClass::Verb => 2,
            PosClass::Adv => 3,
        }
    }

    fn slot(self) -> usize {
        match self {
            PosClass::Noun => 0,
            PosClass::Verb => 1,
            PosClass::Adj => 2,
            PosClass::Adv => 3,
        }
    }

    pub fn file_suffix(self) -> &'static str {
        match self {
            PosClass::Noun => "noun",
            PosClass::Verb => "verb",
            PosClass::Adj => "adj",
            PosClass::Adv => "adv",
        }
    }

    /// Synset type letter in data files; `s` (satellite) is an adjective.
    fn from_ss_type(c: &str) -> Option<PosClass> {
        match c {
            "n" => Some(PosClass::Noun),
            "v" => Some(PosClass::Verb),
            "a" | "s" => Some(PosClass::Adj),
            "r" => Some(PosClass::Adv),
            _ => None,
        }
    }

    /// Synset type digit in sense keys.
    fn from_sense_digit(c: char) -> Option<PosClass> {
        match c {
            '1' => Some(PosClass::Noun),
            '2' => Some(PosClass::Verb),
            '3' | '5' => Some(PosClass::Adj),
            '4' => Some(PosClass::Adv),
            _ => None,
        }
    }
}

impl fmt::Display for PosClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub offset: u32,
    pub pos_class: PosClass,
    /// Lemmas as written in the data file (underscores, original case).
    pub lemmas: Vec<String>,
    pub hypernym_offsets: Vec<u32>,
    /// Length of the shortest hypernym path to a root; 0 for roots.
    pub min_depth: u32,
}

#[derive(Debug, Default)]
struct ClassTable {
    synsets: Vec<Synset>,
    by_offset: HashMap<u32, usize>,
    /// Lower-cased lemma (underscored) → synset offsets in sense order.
    lemma_index: HashMap<String, Vec<u32>>,
    /// Offsets on hypernym cycles (never nouns, which must be acyclic).
    cyclic: Vec<u32>,
}

#[derive(Debug, Default)]
pub struct WordNetDb {
    classes: [Option<ClassTable>; 4],
    /// Summed corpus tag counts per lemma and class, from `index.sense`.
    tag_counts: HashMap<String, [u32; 4]>,
    /// Irregular inflection → base forms, per class (`noun.exc` etc.).
    exceptions: [HashMap<String, Vec<String>>; 4],
}

/// Text contents of one class's data and index files.
pub struct ClassSource<'a> {
    pub class: PosClass,
    pub data: &'a str,
    pub index: &'a str,
}

impl WordNetDb {
    /// Loads a WordNet `dict` directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, WordNetError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|source| WordNetError::Io { path: p, source })
        };
        let mut texts = Vec::new();
        for class in PosClass::ALL {
            let data_name = format!("data.{}", class.file_suffix());
            let index_name = format!("index.{}", class.file_suffix());
            if class != PosClass::Noun && !dir.join(&data_name).exists() {
                continue;
            }
            texts.push((class, read(&data_name)?, read(&index_name)?));
        }
        let sense = if dir.join("index.sense").exists() {
            Some(read("index.sense")?)
        } else {
            None
        };
        let sources: Vec<ClassSource<'_>> = texts
            .iter()
            .map(|(class, data, index)| ClassSource {
                class: *class,
                data,
                index,
            })
            .collect();
        let mut db = Self::from_sources(&sources, sense.as_deref())?;
        for class in PosClass::ALL {
            let name = format!("{}.exc", class.file_suffix());
            if dir.join(&name).exists() {
                db.add_exceptions(class, &read(&name)?)?;
            }
        }
        Ok(db)
    }

    /// Adds an exception list (`inflected base [base...]` per line).
    pub fn add_exceptions(&mut self, class: PosClass, text: &str) -> Result<(), WordNetError> {
        let map = &mut self.exceptions[class.slot()];
        for (lineno, line) in text.lines().enumerate() {
            let mut f = line.split_ascii_whitespace();
            let Some(inflected) = f.next() else {
                continue;
            };
            let bases: Vec<String> = f.map(str::to_lowercase).collect();
            if bases.is_empty() {
                return Err(WordNetError::Parse {
                    file: format!("{}.exc", class.file_suffix()),
                    line: lineno + 1,
                    message: "exception without base form".into(),
                });
            }
            map.entry(inflected.to_lowercase()).or_default().extend(bases);
        }
        Ok(())
    }

    /// Index keys `word` may be an inflection of, WordNet-morphy style: the
    /// word itself if indexed, then exception-list bases, then bases found by
    /// the class's suffix detachment rules. Only indexed forms are returned.
    pub fn base_forms(&self, word: &str, class: PosClass) -> Vec<String> {
        let Some(t) = self.table(class) else {
            return Vec::new();
        };
        let key = lemma_key(word);
        let mut out: Vec<String> = Vec::new();
        let mut push = |cand: String| {
            if t.lemma_index.contains_key(&cand) && !out.contains(&cand) {
                out.push(cand);
            }
        };
        push(key.clone());
        if let Some(bases) = self.exceptions[class.slot()].get(&key) {
            for b in bases {
                push(b.clone());
            }
        }
        for (suffix, ending) in detachment_rules(class) {
            if let Some(stem) = key.strip_suffix(suffix) {
                if !stem.is_empty() {
                    push(format!("{stem}{ending}"));
                }
            }
        }
        out
    }

    /// Builds a database from in-memory file contents.
    pub fn from_sources(sources: &[ClassSource<'_>], index_sense: Option<&str>) -> Result<Self, WordNetError> {
        let mut db = WordNetDb::default();
        for src in sources {
            let mut table = parse_data(src.class, src.data)?;
            parse_index(src.class, src.index, &mut table)?;
            db.classes[src.class.slot()] = Some(table);
        }
        if db.classes[PosClass::Noun.slot()].is_none() {
            return Err(WordNetError::Integrity("noun files are required".into()));
        }
        for class in PosClass::ALL {
            if let Some(table) = db.classes[class.slot()].as_mut() {
                resolve_hypernyms(class, table)?;
            }
        }
        if let Some(text) = index_sense {
            db.tag_counts = parse_index_sense(text)?;
        }
        Ok(db)
    }

    pub fn has_class(&self, class: PosClass) -> bool {
        self.classes[class.slot()].is_some()
    }

    fn table(&self, class: PosClass) -> Option<&ClassTable> {
        self.classes[class.slot()].as_ref()
    }

    /// Offsets of synsets on hypernym cycles, ascending. Always empty for
    /// nouns.
    pub fn cyclic_synsets(&self, class: PosClass) -> &[u32] {
        self.table(class).map(|t| t.cyclic.as_slice()).unwrap_or(&[])
    }

    /// All synsets of a class in file (offset) order.
    pub fn synsets(&self, class: PosClass) -> &[Synset] {
        self.table(class).map(|t| t.synsets.as_slice()).unwrap_or(&[])
    }

    pub fn synset(&self, class: PosClass, offset: u32) -> Option<&Synset> {
        let t = self.table(class)?;
        t.by_offset.get(&offset).map(|&i| &t.synsets[i])
    }

    /// Synsets of `word` in sense order. Lookup is case-folded with spaces
    /// mapped to underscores; absent words give an empty list.
    pub fn synsets_of(&self, word: &str, class: PosClass) -> Vec<&Synset> {
        let Some(t) = self.table(class) else {
            return Vec::new();
        };
        t.lemma_index
            .get(&lemma_key(word))
            .map(|offs| {
                offs.iter()
                    .filter_map(|o| t.by_offset.get(o).map(|&i| &t.synsets[i]))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Synsets of every base form of `word` (see [`WordNetDb::base_forms`]),
    /// base forms in order and senses in order, without repeats.
    pub fn synsets_of_inflected(&self, word: &str, class: PosClass) -> Vec<&Synset> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for form in self.base_forms(word, class) {
            for s in self.synsets_of(&form, class) {
                if seen.insert(s.offset) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Other lemmas across the word's synsets, in sense order then lemma
    /// order, rendered with spaces and de-duplicated. The word itself is
    /// excluded case-insensitively.
    pub fn synonyms_of(&self, word: &str, class: PosClass) -> Vec<String> {
        let key = lemma_key(word);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in self.synsets_of(word, class) {
            for lemma in &s.lemmas {
                if lemma.to_lowercase() == key {
                    continue;
                }
                let rendered = lemma.replace('_', " ");
                if seen.insert(rendered.clone()) {
                    out.push(rendered);
                }
            }
        }
        out
    }

    /// Classes in which `word` or one of its base forms has an index entry.
    pub fn lemma_classes(&self, word: &str) -> Vec<PosClass> {
        PosClass::ALL
            .into_iter()
            .filter(|c| !self.base_forms(word, *c).is_empty())
            .collect()
    }

    /// Summed `index.sense` tag count for `word` in `class` (0 when unknown).
    pub fn tag_count(&self, word: &str, class: PosClass) -> u32 {
        self.tag_counts
            .get(&lemma_key(word))
            .map(|c| c[class.slot()])
            .unwrap_or(0)
    }

    /// Most likely open class for `word`. Each class where the word or a
    /// base form is indexed scores the largest tag count among those forms;
    /// the best score wins and equal scores are broken by
    /// NOUN > ADJ > VERB > ADV.
    pub fn preferred_class(&self, word: &str) -> Option<PosClass> {
        PosClass::ALL
            .into_iter()
            .filter_map(|c| {
                let forms = self.base_forms(word, c);
                let best = forms.iter().map(|f| self.tag_count(f, c)).max()?;
                Some((c, best))
            })
            .max_by(|(a, ca), (b, cb)| ca.cmp(cb).then(b.priority().cmp(&a.priority())))
            .map(|(c, _)| c)
    }
}

/// Suffix → replacement pairs tried in order (WordNet's detachment rules).
fn detachment_rules(class: PosClass) -> &'static [(&'static str, &'static str)] {
    match class {
        PosClass::Noun => &[
            ("s", ""),
            ("ses", "s"),
            ("xes", "x"),
            ("zes", "z"),
            ("ches", "ch"),
            ("shes", "sh"),
            ("men", "man"),
            ("ies", "y"),
        ],
        PosClass::Verb => &[
            ("s", ""),
            ("ies", "y"),
            ("es", "e"),
            ("es", ""),
            ("ed", "e"),
            ("ed", ""),
            ("ing", "e"),
            ("ing", ""),
        ],
        PosClass::Adj => &[("er", ""), ("est", ""), ("er", "e"), ("est", "e")],
        PosClass::Adv => &[],
    }
}

/// Index key for a word: lower-cased, spaces as underscores.
pub(crate) fn lemma_key(word: &str) -> String {
    word.trim().to_lowercase().replace(' ', "_")
}

fn is_license_line(line: &str) -> bool {
    line.starts_with("  ")
}

fn perr(class: PosClass, kind: &str, line: usize, message: impl Into<String>) -> WordNetError {
    WordNetError::Parse {
        file: format!("{kind}.{}", class.file_suffix()),
        line,
        message: message.into(),
    }
}

/// Strips the adjective position marker, e.g. `galore(ip)` → `galore`.
fn strip_adj_marker(word: &str) -> &str {
    match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    }
}

fn parse_data(class: PosClass, text: &str) -> Result<ClassTable, WordNetError> {
    let mut table = ClassTable::default();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() || is_license_line(line) {
            continue;
        }
        let err = |m: &str| perr(class, "data", lineno, m);
        let head = line.split_once('|').map(|(h, _)| h).unwrap_or(line);
        let f: Vec<&str> = head.split_ascii_whitespace().collect();
        if f.len() < 4 {
            return Err(err("record too short"));
        }
        let offset: u32 = f[0].parse().map_err(|_| err("bad synset offset"))?;
        if PosClass::from_ss_type(f[2]) != Some(class) {
            return Err(err(&format!("synset type {:?} in {} file", f[2], class)));
        }
        let w_cnt = usize::from_str_radix(f[3], 16).map_err(|_| err("bad word count"))?;
        let mut p = 4;
        if f.len() < p + 2 * w_cnt + 1 {
            return Err(err("truncated word list"));
        }
        let lemmas: Vec<String> = (0..w_cnt).map(|i| strip_adj_marker(f[p + 2 * i]).to_string()).collect();
        if lemmas.is_empty() {
            return Err(err("synset without lemmas"));
        }
        p += 2 * w_cnt;
        let p_cnt: usize = f[p].parse().map_err(|_| err("bad pointer count"))?;
        p += 1;
        if f.len() < p + 4 * p_cnt {
            return Err(err("truncated pointer list"));
        }
        let mut hypernyms = Vec::new();
        for i in 0..p_cnt {
            let q = p + 4 * i;
            if f[q] == "@" || f[q] == "@i" {
                let target: u32 = f[q + 1].parse().map_err(|_| err("bad pointer offset"))?;
                if PosClass::from_ss_type(f[q + 2]) != Some(class) {
                    return Err(WordNetError::Integrity(format!(
                        "{class} synset {offset:08} has hypernym {target:08} of another class"
                    )));
                }
                if !hypernyms.contains(&target) {
                    hypernyms.push(target);
                }
            }
        }
        if table.by_offset.insert(offset, table.synsets.len()).is_some() {
            return Err(err(&format!("duplicate synset offset {offset:08}")));
        }
        table.synsets.push(Synset {
            offset,
            pos_class: class,
            lemmas,
            hypernym_offsets: hypernyms,
            min_depth: 0,
        });
    }
    Ok(table)
}

fn parse_index(class: PosClass, text: &str, table: &mut ClassTable) -> Result<(), WordNetError> {
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() || is_license_line(line) {
            continue;
        }
        let err = |m: &str| perr(class, "index", lineno, m);
        let f: Vec<&str> = line.split_ascii_whitespace().collect();
        if f.len() < 6 {
            return Err(err("record too short"));
        }
        let synset_cnt: usize = f[2].parse().map_err(|_| err("bad synset count"))?;
        let p_cnt: usize = f[3].parse().map_err(|_| err("bad pointer count"))?;
        let offsets_start = 4 + p_cnt + 2;
        if synset_cnt == 0 {
            return Err(err("lemma without synsets"));
        }
        if f.len() != offsets_start + synset_cnt {
            return Err(err("field count does not match synset count"));
        }
        let mut offsets = Vec::with_capacity(synset_cnt);
        for o in &f[offsets_start..] {
            let o: u32 = o.parse().map_err(|_| err("bad synset offset"))?;
            if !table.by_offset.contains_key(&o) {
                return Err(WordNetError::Integrity(format!(
                    "index.{} lemma {:?} points at missing synset {o:08}",
                    class.file_suffix(),
                    f[0]
                )));
            }
            offsets.push(o);
        }
        table.lemma_index.insert(f[0].to_lowercase(), offsets);
    }
    Ok(())
}

/// Checks every hypernym target exists and fills `min_depth` in one
/// topological pass from the roots.
///
/// A noun cycle is an integrity error, since concept depth is undefined on
/// it. WordNet 3.0 ships one verb cycle (02422663 and 02423762 are each
/// other's hypernym), so cycles in the other classes are tolerated: their
/// members are recorded and depths fall back to [`bfs_depths`].
fn resolve_hypernyms(class: PosClass, table: &mut ClassTable) -> Result<(), WordNetError> {
    let n = table.synsets.len();
    let mut hyponyms: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending: Vec<usize> = vec![0; n];
    for (i, s) in table.synsets.iter().enumerate() {
        for h in &s.hypernym_offsets {
            let &j = table.by_offset.get(h).ok_or_else(|| {
                WordNetError::Integrity(format!("{class} synset {:08} has unresolved hypernym {h:08}", s.offset))
            })?;
            hyponyms[j].push(i);
        }
        pending[i] = s.hypernym_offsets.len();
    }

    let mut depth: Vec<Option<u32>> = vec![None; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    for &r in &queue {
        depth[r] = Some(0);
    }
    let mut done = 0;
    while let Some(i) = queue.pop_front() {
        done += 1;
        let d = depth[i].expect("dequeued synsets have a depth");
        for &c in &hyponyms[i] {
            depth[c] = Some(depth[c].map_or(d + 1, |cd| cd.min(d + 1)));
            pending[c] -= 1;
            if pending[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if done != n {
        let cyclic = cycle_members(&table.synsets, &table.by_offset);
        // Anything left unresolved sits on or below a cycle.
        let first = cyclic[0];
        if class == PosClass::Noun {
            return Err(WordNetError::Integrity(format!(
                "hypernym cycle through {class} synset {first:08}"
            )));
        }
        log::info!(
            "{} {class} synsets lie on hypernym cycles (first {first:08})",
            cyclic.len()
        );
        table.cyclic = cyclic;
        let fallback = bfs_depths(&table.synsets, &hyponyms);
        for (s, d) in table.synsets.iter_mut().zip(fallback) {
            s.min_depth = d;
        }
        return Ok(());
    }
    for (s, d) in table.synsets.iter_mut().zip(depth) {
        s.min_depth = d.expect("all synsets visited");
    }
    Ok(())
}

/// Shortest distance to a root by breadth-first search over hyponym edges.
/// Synsets that reach no root (a rootless cycle and what hangs below it) are
/// seeded at depth 0 from the lowest-index unreached synset whose hypernyms
/// are all unreached, repeatedly.
fn bfs_depths(synsets: &[Synset], hyponyms: &[Vec<usize>]) -> Vec<u32> {
    let n = synsets.len();
    let mut depth: Vec<Option<u32>> = vec![None; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, s) in synsets.iter().enumerate() {
        if s.hypernym_offsets.is_empty() {
            depth[i] = Some(0);
            queue.push_back(i);
        }
    }
    let mut hypernyms: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, hs) in hyponyms.iter().enumerate() {
        for &i in hs {
            hypernyms[i].push(j);
        }
    }
    loop {
        while let Some(i) = queue.pop_front() {
            let d = depth[i].expect("queued synsets have a depth") + 1;
            for &c in &hyponyms[i] {
                if depth[c].is_none() {
                    depth[c] = Some(d);
                    queue.push_back(c);
                }
            }
        }
        let seed = (0..n).find(|&i| depth[i].is_none() && hypernyms[i].iter().all(|&j| depth[j].is_none()));
        match seed {
            Some(i) => {
                depth[i] = Some(0);
                queue.push_back(i);
            }
            None => break,
        }
    }
    depth
        .into_iter()
        .map(|d| d.expect("every synset seeded or reached"))
        .collect()
}

/// Offsets of synsets lying on a hypernym cycle, ascending.
fn cycle_members(synsets: &[Synset], by_offset: &HashMap<u32, usize>) -> Vec<u32> {
    let n = synsets.len();
    let up: Vec<Vec<usize>> = synsets
        .iter()
        .map(|s| {
            s.hypernym_offsets
                .iter()
                .filter_map(|h| by_offset.get(h).copied())
                .collect()
        })
        .collect();
    let mut down: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, hs) in up.iter().enumerate() {
        for &j in hs {
            down[j].push(i);
        }
    }
    // Peel synsets with no live hypernyms, then synsets with no live
    // hyponyms. The survivors each have a live edge in both directions
    // within a finite graph, so they lie on cycles.
    let mut alive = vec![true; n];
    for (out_edges, in_edges) in [(&up, &down), (&down, &up)] {
        let mut degree: Vec<usize> = (0..n)
            .map(|i| out_edges[i].iter().filter(|&&j| alive[j]).count())
            .collect();
        let mut stack: Vec<usize> = (0..n).filter(|&i| alive[i] && degree[i] == 0).collect();
        while let Some(i) = stack.pop() {
            alive[i] = false;
            for &k in &in_edges[i] {
                if alive[k] {
                    degree[k] -= 1;
                    if degree[k] == 0 {
                        stack.push(k);
                    }
                }
            }
        }
    }
    (0..n).filter(|&i| alive[i]).map(|i| synsets[i].offset).collect()
}

fn parse_index_sense(text: &str) -> Result<HashMap<String, [u32; 4]>, WordNetError> {
    let mut counts: HashMap<String, [u32; 4]> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| WordNetError::Parse {
            file: "index.sense".into(),
            line: lineno + 1,
            message: m.into(),
        };
        let f: Vec<&str> = line.split_ascii_whitespace().collect();
        if f.len() != 4 {
            return Err(err("expected 4 fields"));
        }
        let (lemma, rest) = f[0].split_once('%').ok_or_else(|| err("sense key without %"))?;
        let class = rest
            .chars()
            .next()
            .and_then(PosClass::from_sense_digit)
            .ok_or_else(|| err("bad synset type in sense key"))?;
        let tag_cnt: u32 = f[3].parse().map_err(|_| err("bad tag count"))?;
        counts.entry(lemma.to_lowercase()).or_default()[class.slot()] += tag_cnt;
    }
    Ok(counts)
}

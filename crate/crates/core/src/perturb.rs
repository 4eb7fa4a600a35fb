//! Seeded caption perturbations.
//!
//! Every caption gets its own generator seeded with
//! `derive_seed(master_seed, caption_id, kind_tag)`, so the output for a
//! caption depends only on those three values and never on processing
//! order or thread count.
//!
//! Shuffles move word tokens only; punctuation tokens keep their slots and
//! the text is rebuilt with single spaces, punctuation staying attached
//! where it was attached. Typos and lexical replacements are spliced into
//! the original text so everything outside the edited words is untouched.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::corpus::{Caption, Corpus};
use crate::error::{Error, Result};
use crate::lingo::{adjacent_keys, analyze, detokenize_with_gaps, LexiconTagger, PosClass, PosTag, Token, WordNetDb};
use crate::par;
use crate::rng::{derive_seed, SplitMix64};

pub const DEFAULT_DISTRACTION_POOL: [&str; 2] = ["and true is true", "and one plus one is two"];

/// Shortest word a typo may target.
pub const MIN_TYPO_WORD_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerturbationKind {
    ShuffleNounsAdjectives,
    ShuffleAllButNounsAdjectives,
    ShuffleWithinTrigrams,
    ShuffleTrigrams,
    ShuffleAllWords,
    Distraction,
    ReplaceSynonyms,
    ReplaceNouns,
    TypoTransposition,
    TypoOmission,
    TypoInsertion,
    TypoKeyProximity,
    /// One of the four typo kinds, chosen per caption.
    Typos,
    /// One of the two replacement kinds, chosen per caption.
    LexicalVariation,
}

use PerturbationKind as K;

impl PerturbationKind {
    pub const ATOMIC: [PerturbationKind; 12] = [
        K::ShuffleNounsAdjectives,
        K::ShuffleAllButNounsAdjectives,
        K::ShuffleWithinTrigrams,
        K::ShuffleTrigrams,
        K::ShuffleAllWords,
        K::Distraction,
        K::ReplaceSynonyms,
        K::ReplaceNouns,
        K::TypoTransposition,
        K::TypoOmission,
        K::TypoInsertion,
        K::TypoKeyProximity,
    ];

    pub const ALL: [PerturbationKind; 14] = [
        K::ShuffleNounsAdjectives,
        K::ShuffleAllButNounsAdjectives,
        K::ShuffleWithinTrigrams,
        K::ShuffleTrigrams,
        K::ShuffleAllWords,
        K::Distraction,
        K::ReplaceSynonyms,
        K::ReplaceNouns,
        K::TypoTransposition,
        K::TypoOmission,
        K::TypoInsertion,
        K::TypoKeyProximity,
        K::Typos,
        K::LexicalVariation,
    ];

    pub const TYPO_KINDS: [PerturbationKind; 4] = [
        K::TypoTransposition,
        K::TypoOmission,
        K::TypoInsertion,
        K::TypoKeyProximity,
    ];

    pub const LEXICAL_KINDS: [PerturbationKind; 2] = [K::ReplaceSynonyms, K::ReplaceNouns];

    /// Stable snake_case tag; part of the seed derivation.
    pub fn tag(self) -> &'static str {
        match self {
            K::ShuffleNounsAdjectives => "shuffle_nouns_adjectives",
            K::ShuffleAllButNounsAdjectives => "shuffle_all_but_nouns_adjectives",
            K::ShuffleWithinTrigrams => "shuffle_within_trigrams",
            K::ShuffleTrigrams => "shuffle_trigrams",
            K::ShuffleAllWords => "shuffle_all_words",
            K::Distraction => "distraction",
            K::ReplaceSynonyms => "replace_synonyms",
            K::ReplaceNouns => "replace_nouns",
            K::TypoTransposition => "typo_transposition",
            K::TypoOmission => "typo_omission",
            K::TypoInsertion => "typo_insertion",
            K::TypoKeyProximity => "typo_key_proximity",
            K::Typos => "typos",
            K::LexicalVariation => "lexical_variation",
        }
    }

    /// Row label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            K::ShuffleNounsAdjectives => "Shuffle N&A",
            K::ShuffleAllButNounsAdjectives => "Shuffle all but N&A",
            K::ShuffleWithinTrigrams => "Shuffle within trigrams",
            K::ShuffleTrigrams => "Shuffle trigrams",
            K::ShuffleAllWords => "Shuffle all words",
            K::Distraction => "Distraction",
            K::ReplaceSynonyms => "Replace synonyms",
            K::ReplaceNouns => "Replace nouns",
            K::TypoTransposition => "Typo: transposition",
            K::TypoOmission => "Typo: omission",
            K::TypoInsertion => "Typo: insertion",
            K::TypoKeyProximity => "Typo: key proximity",
            K::Typos => "Typos",
            K::LexicalVariation => "Lexical variation",
        }
    }

    pub fn is_aggregate(self) -> bool {
        matches!(self, K::Typos | K::LexicalVariation)
    }

    /// Kinds whose result depends on POS tags or synonyms and therefore on
    /// a WordNet database.
    pub fn needs_wordnet(self) -> bool {
        matches!(
            self,
            K::ShuffleNounsAdjectives
                | K::ShuffleAllButNounsAdjectives
                | K::ReplaceSynonyms
                | K::ReplaceNouns
                | K::LexicalVariation
        )
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    /// Accepts the snake_case tag or the CamelCase variant name, ignoring
    /// case, `-` and `_`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = |x: &str| {
            x.chars()
                .filter(|c| *c != '_' && *c != '-')
                .collect::<String>()
                .to_lowercase()
        };
        let want = norm(s);
        K::ALL
            .into_iter()
            .find(|k| norm(k.tag()) == want || norm(&format!("{k:?}")) == want)
            .ok_or_else(|| {
                let names: Vec<&str> = K::ALL.iter().map(|k| k.tag()).collect();
                Error::Usage(format!(
                    "unknown perturbation kind {s:?} (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Parameters of one perturbation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Words replaced per caption by the lexical kinds.
    pub k: usize,
    /// Fraction of eligible words hit by typo kinds; `None` means exactly
    /// one word per caption.
    pub rate: Option<f64>,
    pub seed: u64,
    /// Distraction clauses.
    pub pool: Vec<String>,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, seed: u64) -> Self {
        Self {
            kind,
            k: 1,
            rate: None,
            seed,
            pool: DEFAULT_DISTRACTION_POOL.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Usage("k must be at least 1".into()));
        }
        if let Some(r) = self.rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Usage(format!("rate must be in (0, 1], got {r}")));
            }
        }
        if self.pool.is_empty() {
            return Err(Error::Usage("distraction pool is empty".into()));
        }
        if self.pool.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::Usage("distraction pool contains an empty clause".into()));
        }
        Ok(())
    }
}

/// Result for one caption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedCaption {
    pub caption_id: String,
    /// Kind requested in the spec.
    pub kind: PerturbationKind,
    /// Atomic kind actually applied (differs from `kind` for presets).
    pub applied: PerturbationKind,
    pub text: String,
    /// True iff `text` differs from the original caption.
    pub changed: bool,
    /// Indices (in the original tokenization) of tokens whose text was
    /// edited or moved.
    pub edited: Vec<usize>,
}

/// Applies one [`PerturbationSpec`] to caption texts.
#[derive(Debug, Clone)]
pub struct Perturber<'a> {
    spec: PerturbationSpec,
    db: Option<&'a WordNetDb>,
    tagger: LexiconTagger<'a>,
}

impl<'a> Perturber<'a> {
    /// Fails when the settings are invalid or a WordNet-dependent kind has no
    /// database.
    pub fn new(spec: PerturbationSpec, db: Option<&'a WordNetDb>) -> Result<Self> {
        spec.validate()?;
        if spec.kind.needs_wordnet() && db.is_none() {
            return Err(Error::Usage(format!(
                "perturbation {} requires a WordNet directory",
                spec.kind
            )));
        }
        Ok(Self {
            tagger: LexiconTagger::new(db),
            spec,
            db,
        })
    }

    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }

    pub fn perturb(&self, caption_id: &str, text: &str) -> PerturbedCaption {
        let mut rng = SplitMix64::new(derive_seed(self.spec.seed, caption_id, self.spec.kind.tag()));
        let applied = match self.spec.kind {
            K::Typos => K::TYPO_KINDS[rng.index(K::TYPO_KINDS.len())],
            K::LexicalVariation => K::LEXICAL_KINDS[rng.index(K::LEXICAL_KINDS.len())],
            k => k,
        };
        let tokens = analyze(text, &self.tagger);
        let (out, edited) = match applied {
            K::ShuffleNounsAdjectives
            | K::ShuffleAllButNounsAdjectives
            | K::ShuffleWithinTrigrams
            | K::ShuffleTrigrams
            | K::ShuffleAllWords => shuffle(text, &tokens, applied, &mut rng),
            K::Distraction => (distraction(text, &self.spec.pool, &mut rng), Vec::new()),
            K::ReplaceSynonyms | K::ReplaceNouns => {
                let db = self.db.expect("checked in Perturber::new");
                lexical(text, &tokens, applied, self.spec.k, db, &mut rng)
            }
            K::TypoTransposition | K::TypoOmission | K::TypoInsertion | K::TypoKeyProximity => {
                typo(text, &tokens, applied, self.spec.rate, &mut rng)
            }
            K::Typos | K::LexicalVariation => unreachable!("presets resolve to atomic kinds"),
        };
        let changed = out != text;
        PerturbedCaption {
            caption_id: caption_id.to_string(),
            kind: self.spec.kind,
            applied,
            text: if changed { out } else { text.to_string() },
            changed,
            edited: if changed { edited } else { Vec::new() },
        }
    }
}

fn is_noun_or_adj(t: &Token) -> bool {
    matches!(t.pos, PosTag::Noun | PosTag::Adj)
}

/// Shuffles word tokens per `kind`; returns the text and moved positions.
pub fn shuffle(text: &str, tokens: &[Token], kind: PerturbationKind, rng: &mut SplitMix64) -> (String, Vec<usize>) {
    let words: Vec<usize> = (0..tokens.len()).filter(|&i| tokens[i].pos != PosTag::Punct).collect();
    // slot_sources[j] = index of the token whose surface goes to words[j].
    let mut order: Vec<usize> = words.clone();
    match kind {
        K::ShuffleAllWords => rng.shuffle(&mut order),
        K::ShuffleNounsAdjectives | K::ShuffleAllButNounsAdjectives => {
            let want_na = kind == K::ShuffleNounsAdjectives;
            let slots: Vec<usize> = (0..words.len())
                .filter(|&j| is_noun_or_adj(&tokens[words[j]]) == want_na)
                .collect();
            let mut picked: Vec<usize> = slots.iter().map(|&j| order[j]).collect();
            rng.shuffle(&mut picked);
            for (&j, src) in slots.iter().zip(picked) {
                order[j] = src;
            }
        }
        K::ShuffleWithinTrigrams => {
            for group in order.chunks_mut(3) {
                rng.shuffle(group);
            }
        }
        K::ShuffleTrigrams => {
            let mut groups: Vec<Vec<usize>> = order.chunks(3).map(<[usize]>::to_vec).collect();
            rng.shuffle(&mut groups);
            order = groups.concat();
        }
        _ => unreachable!("not a shuffle kind"),
    }
    let mut surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    let mut moved = Vec::new();
    for (&slot, &src) in words.iter().zip(&order) {
        if tokens[slot].surface != tokens[src].surface {
            moved.push(slot);
        }
        surfaces[slot] = tokens[src].surface.as_str();
    }
    if moved.is_empty() {
        return (text.to_string(), moved);
    }
    (detokenize_with_gaps(text, tokens, &surfaces), moved)
}

/// Appends one clause from the pool after a single space.
pub fn distraction(text: &str, pool: &[String], rng: &mut SplitMix64) -> String {
    let clause = &pool[rng.index(pool.len())];
    if text.is_empty() {
        clause.clone()
    } else {
        format!("{text} {clause}")
    }
}

fn wordnet_class(tag: PosTag) -> Option<PosClass> {
    match tag {
        PosTag::Noun => Some(PosClass::Noun),
        PosTag::Adj => Some(PosClass::Adj),
        PosTag::Verb => Some(PosClass::Verb),
        PosTag::Adv => Some(PosClass::Adv),
        _ => None,
    }
}

/// Candidate replacements for token `t` under a lexical kind.
pub fn replacement_candidates(t: &Token, kind: PerturbationKind, db: &WordNetDb) -> Vec<String> {
    let class = match (kind, t.pos) {
        (K::ReplaceNouns, PosTag::Noun) => PosClass::Noun,
        (K::ReplaceSynonyms, tag) => match wordnet_class(tag) {
            Some(c) => c,
            None => return Vec::new(),
        },
        _ => return Vec::new(),
    };
    db.synonyms_of(&t.lower, class)
}

fn match_case(replacement: &str, original: &str) -> String {
    let upper_initial = original.chars().next().is_some_and(char::is_uppercase);
    let mut chars = replacement.chars();
    match chars.next() {
        Some(c) if upper_initial => c.to_uppercase().chain(chars).collect(),
        _ => replacement.to_string(),
    }
}

/// Replaces up to `k` eligible words with WordNet synonyms.
pub fn lexical(
    text: &str,
    tokens: &[Token],
    kind: PerturbationKind,
    k: usize,
    db: &WordNetDb,
    rng: &mut SplitMix64,
) -> (String, Vec<usize>) {
    let eligible: Vec<(usize, Vec<String>)> = tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let c = replacement_candidates(t, kind, db);
            (!c.is_empty()).then_some((i, c))
        })
        .collect();
    let chosen = rng.choose_indices(eligible.len(), k);
    let edits: Vec<(usize, String)> = chosen
        .iter()
        .map(|&e| {
            let (i, cands) = &eligible[e];
            (*i, match_case(&cands[rng.index(cands.len())], &tokens[*i].surface))
        })
        .collect();
    (splice(text, tokens, &edits), edits.iter().map(|(i, _)| *i).collect())
}

/// Rebuilds `text` with the tokens at the given indices replaced.
fn splice(text: &str, tokens: &[Token], edits: &[(usize, String)]) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    let mut pos = 0;
    for (i, new) in edits {
        let span = &tokens[*i].span;
        out.push_str(&text[pos..span.start]);
        out.push_str(new);
        pos = span.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Character positions of `word` where `kind` can act.
pub fn typo_sites(word: &[char], kind: PerturbationKind) -> Vec<usize> {
    match kind {
        K::TypoTransposition => (0..word.len().saturating_sub(1))
            .filter(|&i| word[i] != word[i + 1])
            .collect(),
        K::TypoOmission => (0..word.len()).collect(),
        K::TypoInsertion | K::TypoKeyProximity => (0..word.len()).filter(|&i| word[i].is_ascii_alphabetic()).collect(),
        _ => Vec::new(),
    }
}

fn with_case(c: char, like: char) -> char {
    if like.is_ascii_uppercase() {
        c.to_ascii_uppercase()
    } else {
        c
    }
}

/// Applies one typo of `kind` to `word` at character `site`, drawing the
/// replacement key (when needed) from `rng`.
pub fn apply_typo(word: &[char], kind: PerturbationKind, site: usize, rng: &mut SplitMix64) -> Vec<char> {
    let mut w = word.to_vec();
    match kind {
        K::TypoTransposition => w.swap(site, site + 1),
        K::TypoOmission => {
            w.remove(site);
        }
        K::TypoInsertion | K::TypoKeyProximity => {
            let c = w[site];
            let keys = adjacent_keys(c.to_ascii_lowercase());
            let key = with_case(keys[rng.index(keys.len())], c);
            if kind == K::TypoInsertion {
                w.insert(site + 1, key);
            } else {
                w[site] = key;
            }
        }
        _ => unreachable!("not a typo kind"),
    }
    w
}

/// Every distinct output of a typo kind on a word. Insertion and key
/// proximity enumerate every neighbouring key.
pub fn all_typo_outputs(word: &str, kind: PerturbationKind) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out: Vec<String> = Vec::new();
    for site in typo_sites(&chars, kind) {
        let variants: Vec<Vec<char>> = match kind {
            K::TypoInsertion | K::TypoKeyProximity => adjacent_keys(chars[site].to_ascii_lowercase())
                .iter()
                .map(|&k| {
                    let mut w = chars.clone();
                    let key = with_case(k, chars[site]);
                    if kind == K::TypoInsertion {
                        w.insert(site + 1, key);
                    } else {
                        w[site] = key;
                    }
                    w
                })
                .collect(),
            _ => vec![apply_typo(&chars, kind, site, &mut SplitMix64::new(0))],
        };
        for v in variants {
            let s: String = v.into_iter().collect();
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Applies typos of one kind to one or more eligible words.
pub fn typo(
    text: &str,
    tokens: &[Token],
    kind: PerturbationKind,
    rate: Option<f64>,
    rng: &mut SplitMix64,
) -> (String, Vec<usize>) {
    let eligible: Vec<(usize, Vec<char>)> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_alphabetic())
        .map(|(i, t)| (i, t.surface.chars().collect::<Vec<char>>()))
        .filter(|(_, w)| w.len() >= MIN_TYPO_WORD_LEN && !typo_sites(w, kind).is_empty())
        .collect();
    if eligible.is_empty() {
        return (text.to_string(), Vec::new());
    }
    let n = match rate {
        None => 1,
        Some(r) => ((r * eligible.len() as f64).ceil() as usize).clamp(1, eligible.len()),
    };
    let chosen = rng.choose_indices(eligible.len(), n);
    let edits: Vec<(usize, String)> = chosen
        .iter()
        .map(|&e| {
            let (i, word) = &eligible[e];
            let sites = typo_sites(word, kind);
            let site = sites[rng.index(sites.len())];
            (*i, apply_typo(word, kind, site, rng).into_iter().collect())
        })
        .collect();
    (splice(text, tokens, &edits), edits.iter().map(|(i, _)| *i).collect())
}

/// A corpus with every caption perturbed.
#[derive(Debug, Clone)]
pub struct PerturbedCorpus {
    pub spec: PerturbationSpec,
    pub corpus: Corpus,
    /// One entry per caption, in corpus order.
    pub captions: Vec<PerturbedCaption>,
}

impl PerturbedCorpus {
    pub fn changed_count(&self) -> usize {
        self.captions.iter().filter(|c| c.changed).count()
    }

    /// caption id → perturbed text, for rewriting annotation files.
    pub fn replacements(&self) -> HashMap<String, String> {
        self.captions
            .iter()
            .map(|c| (c.caption_id.clone(), c.text.clone()))
            .collect()
    }

    /// Description of the run for manifests and evaluation reports.
    pub fn summary(&self) -> Value {
        let mut applied: BTreeMap<&str, usize> = BTreeMap::new();
        if self.spec.kind.is_aggregate() {
            for c in &self.captions {
                *applied.entry(c.applied.tag()).or_default() += 1;
            }
        }
        json!({
            "kind": self.spec.kind.tag(),
            "label": self.spec.kind.label(),
            "seed": self.spec.seed,
            "k": self.spec.k,
            "rate": self.spec.rate,
            "pool": self.spec.pool,
            "changed_count": self.changed_count(),
            "total": self.captions.len(),
            "applied": if applied.is_empty() { Value::Null } else { json!(applied) },
        })
    }
}

/// Perturbs every caption of `corpus`; captions are processed in parallel
/// and results kept in corpus order.
pub fn perturb_corpus(corpus: &Corpus, spec: &PerturbationSpec, db: Option<&WordNetDb>) -> Result<PerturbedCorpus> {
    let perturber = Perturber::new(spec.clone(), db)?;
    let captions: Vec<&Caption> = corpus.captions().collect();
    let out = par::map_collect(&captions, |c| perturber.perturb(&c.caption_id, &c.text));
    let by_id: HashMap<&str, &str> = out.iter().map(|p| (p.caption_id.as_str(), p.text.as_str())).collect();
    let perturbed = corpus.map_text(|c| by_id[c.caption_id.as_str()].to_string());
    Ok(PerturbedCorpus {
        spec: spec.clone(),
        corpus: perturbed,
        captions: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingo::{tokenize, wordnet_fixture};

    fn run(kind: PerturbationKind, seed: u64, id: &str, text: &str) -> PerturbedCaption {
        let db = wordnet_fixture::db();
        Perturber::new(PerturbationSpec::new(kind, seed), Some(&db))
            .unwrap()
            .perturb(id, text)
    }

    fn sorted_words(text: &str) -> Vec<String> {
        let mut w: Vec<String> = tokenize(text).into_iter().map(|t| t.surface).collect();
        w.sort();
        w
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in K::ALL {
            assert_eq!(k.tag().parse::<PerturbationKind>().unwrap(), k);
            assert_eq!(format!("{k:?}").parse::<PerturbationKind>().unwrap(), k);
        }
        assert_eq!(
            "Shuffle-All-Words".parse::<PerturbationKind>().unwrap(),
            K::ShuffleAllWords
        );
        assert!("bogus".parse::<PerturbationKind>().is_err());
    }

    #[test]
    fn single_token_shuffle_unchanged() {
        let p = run(K::ShuffleAllWords, 1, "c", "rose");
        assert_eq!(p.text, "rose");
        assert!(!p.changed);
    }

    #[test]
    fn noun_adjective_shuffle_two_options() {
        for seed in 0..20 {
            let p = run(K::ShuffleNounsAdjectives, seed, "c", "a red dog");
            assert!(p.text == "a red dog" || p.text == "a dog red", "{}", p.text);
            assert_eq!(p.changed, p.text != "a red dog");
        }
    }

    #[test]
    fn punctuation_stays_pinned() {
        for seed in 0..50 {
            let p = run(K::ShuffleAllWords, seed, "c", "two dogs, one rose.");
            let toks = tokenize(&p.text);
            assert_eq!(toks[2].surface, ",");
            assert_eq!(toks[5].surface, ".");
            assert_eq!(sorted_words(&p.text), sorted_words("two dogs, one rose."));
        }
    }

    #[test]
    fn trigram_shuffle_keeps_groups() {
        let text = "w1 w2 w3 w4 w5 w6 w7";
        for seed in 0..30 {
            let p = run(K::ShuffleTrigrams, seed, "c", text);
            assert!(p.text.contains("w1 w2 w3"));
            assert!(p.text.contains("w4 w5 w6"));
        }
    }

    #[test]
    fn distraction_appends() {
        let pool = vec!["and true is true".to_string()];
        let mut rng = SplitMix64::new(3);
        assert_eq!(
            distraction("a red rose", &pool, &mut rng),
            "a red rose and true is true"
        );
        assert_eq!(distraction("", &pool, &mut rng), "and true is true");
        let p = run(K::Distraction, 9, "c", "a red rose");
        assert!(p.changed && p.text.starts_with("a red rose "));
    }

    #[test]
    fn lexical_replacement() {
        let p = run(K::ReplaceNouns, 5, "c", "a florp");
        assert!(!p.changed);
        for seed in 0..20 {
            let p = run(K::ReplaceNouns, seed, "c", "a dog runs");
            assert!(
                ["a domestic dog runs", "a Canis familiaris runs", "a hotdog runs"].contains(&p.text.as_str()),
                "{}",
                p.text
            );
            assert_eq!(p.edited, vec![1]);
        }
        let db = wordnet_fixture::db();
        let mut spec = PerturbationSpec::new(K::ReplaceSynonyms, 4);
        spec.k = 10;
        let p = Perturber::new(spec, Some(&db)).unwrap().perturb("c", "a small dog");
        assert_eq!(p.edited, vec![1, 2]);
        assert!(p.text.starts_with("a little "));
    }

    #[test]
    fn typo_contracts_on_rose() {
        let outs = all_typo_outputs("rose", K::TypoOmission);
        assert_eq!(outs, vec!["ose", "rse", "roe", "ros"]);
        assert!(all_typo_outputs("couple", K::TypoTransposition).contains(&"coupel".to_string()));
        assert!(all_typo_outputs("motorcycles", K::TypoTransposition).contains(&"omtorcycles".to_string()));
        for seed in 0..50 {
            let p = run(K::TypoOmission, seed, "c", "a rose");
            assert!(["a ose", "a rse", "a roe", "a ros"].contains(&p.text.as_str()));
        }
    }

    #[test]
    fn typo_needs_long_word() {
        let p = run(K::TypoKeyProximity, 1, "c", "a b to");
        assert!(!p.changed);
        let p = run(K::TypoTransposition, 1, "c", "aaa");
        assert!(!p.changed);
    }

    #[test]
    fn key_proximity_case_preserved() {
        for seed in 0..50 {
            let p = run(K::TypoKeyProximity, seed, "c", "ROSE");
            assert_eq!(p.text.chars().count(), 4);
            assert!(p.text.chars().all(|c| c.is_ascii_uppercase()));
        }
    }

    #[test]
    fn rate_hits_fraction_of_words() {
        let db = wordnet_fixture::db();
        let mut spec = PerturbationSpec::new(K::TypoOmission, 2);
        spec.rate = Some(0.5);
        let p = Perturber::new(spec, Some(&db))
            .unwrap()
            .perturb("c", "alpha beta gamma delta epsilon");
        assert_eq!(p.edited.len(), 3);
    }

    #[test]
    fn spec_validation() {
        let mut s = PerturbationSpec::new(K::Distraction, 0);
        s.k = 0;
        assert!(s.validate().is_err());
        let mut s = PerturbationSpec::new(K::Distraction, 0);
        s.rate = Some(1.5);
        assert!(s.validate().is_err());
        let mut s = PerturbationSpec::new(K::Distraction, 0);
        s.pool.clear();
        assert!(s.validate().is_err());
        assert!(Perturber::new(PerturbationSpec::new(K::ReplaceNouns, 0), None).is_err());
    }

    #[test]
    fn presets_pick_member_kinds() {
        for i in 0..40 {
            let p = run(K::Typos, 7, &format!("c{i}"), "a red rose is sitting");
            assert!(K::TYPO_KINDS.contains(&p.applied));
            assert_eq!(p.kind, K::Typos);
            let p = run(K::LexicalVariation, 7, &format!("c{i}"), "a small dog");
            assert!(K::LEXICAL_KINDS.contains(&p.applied));
        }
    }
}

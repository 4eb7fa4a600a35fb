//! Caption granularity features.
//!
//! Noun-phrase level: adjectives, complement phrases, articles, quantifiers
//! and concept depth. Caption level: length in characters, word count and
//! concept diversity. A corpus profile is the arithmetic mean of the
//! per-caption values.
//!
//! Concept depth of a noun token is the largest `min_depth` among the noun
//! synsets of the word (inflections resolved through WordNet's base forms);
//! a caption's depth is the mean over its nouns that WordNet knows. Captions
//! without such a noun get depth 0 and are counted in
//! `captions_without_nouns`.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Caption, Corpus};
use crate::error::{Error, Result};
use crate::lingo::{analyze, LexiconTagger, PosClass, PosTag, PosTagger, Token, WordNetDb, COMPLEMENTIZERS};
use crate::par;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GranularityProfile {
    pub caption_count: usize,
    pub adjectives: f64,
    pub complement_phrases: f64,
    pub articles: f64,
    pub quantifiers: f64,
    pub concept_depth: f64,
    pub caption_length_chars: f64,
    pub word_count: f64,
    /// Distinct first-sense noun synsets per caption.
    pub concept_diversity: f64,
    /// `concept_diversity / word_count`, per caption.
    pub concept_diversity_ratio: f64,
    pub captions_without_nouns: usize,
}

impl GranularityProfile {
    fn features(&self) -> [f64; 9] {
        [
            self.adjectives,
            self.complement_phrases,
            self.articles,
            self.quantifiers,
            self.concept_depth,
            self.caption_length_chars,
            self.word_count,
            self.concept_diversity,
            self.concept_diversity_ratio,
        ]
    }

    fn from_features(f: [f64; 9], caption_count: usize, captions_without_nouns: usize) -> Self {
        Self {
            caption_count,
            adjectives: f[0],
            complement_phrases: f[1],
            articles: f[2],
            quantifiers: f[3],
            concept_depth: f[4],
            caption_length_chars: f[5],
            word_count: f[6],
            concept_diversity: f[7],
            concept_diversity_ratio: f[8],
            captions_without_nouns,
        }
    }

    /// Feature-wise mean of profiles; counts are summed. `None` when empty.
    pub fn mean(profiles: &[GranularityProfile]) -> Option<GranularityProfile> {
        if profiles.is_empty() {
            return None;
        }
        let mut out = [0.0; 9];
        let mut column = Vec::with_capacity(profiles.len());
        for (j, slot) in out.iter_mut().enumerate() {
            column.clear();
            column.extend(profiles.iter().map(|p| p.features()[j]));
            *slot = par::ordered_mean(&column).expect("non-empty");
        }
        Some(Self::from_features(
            out,
            profiles.iter().map(|p| p.caption_count).sum(),
            profiles.iter().map(|p| p.captions_without_nouns).sum(),
        ))
    }
}

/// Features of already tagged tokens of `text`.
pub fn profile_tokens(text: &str, tokens: &[Token], db: &WordNetDb) -> GranularityProfile {
    let count = |tag: PosTag| tokens.iter().filter(|t| t.pos == tag).count() as f64;
    let first_noun = tokens.iter().position(|t| t.pos == PosTag::Noun);
    let complement_phrases = first_noun.map_or(0, |i| {
        tokens[i + 1..]
            .iter()
            .filter(|t| t.pos == PosTag::Prep || COMPLEMENTIZERS.contains(&t.lower.as_str()))
            .count()
    });

    let mut depths = Vec::new();
    let mut first_senses = HashSet::new();
    for t in tokens.iter().filter(|t| t.pos == PosTag::Noun) {
        let synsets = db.synsets_of_inflected(&t.lower, PosClass::Noun);
        if let Some(first) = synsets.first() {
            first_senses.insert(first.offset);
            let depth = synsets.iter().map(|s| s.min_depth).max().expect("non-empty");
            depths.push(f64::from(depth));
        }
    }
    let word_count = tokens.iter().filter(|t| t.pos != PosTag::Punct).count();
    let diversity = first_senses.len();
    GranularityProfile {
        caption_count: 1,
        adjectives: count(PosTag::Adj),
        complement_phrases: complement_phrases as f64,
        articles: count(PosTag::DetArticle),
        quantifiers: count(PosTag::DetQuantifier),
        concept_depth: par::ordered_mean(&depths).unwrap_or(0.0),
        caption_length_chars: text.trim().chars().count() as f64,
        word_count: word_count as f64,
        concept_diversity: diversity as f64,
        concept_diversity_ratio: if word_count == 0 {
            0.0
        } else {
            diversity as f64 / word_count as f64
        },
        captions_without_nouns: usize::from(depths.is_empty()),
    }
}

/// Features of one caption text under `tagger`.
pub fn profile_text(text: &str, tagger: &dyn PosTagger, db: &WordNetDb) -> GranularityProfile {
    profile_tokens(text, &analyze(text, tagger), db)
}

/// Features of one caption with the WordNet-backed lexicon tagger.
pub fn profile_caption(caption: &Caption, db: &WordNetDb) -> GranularityProfile {
    profile_text(&caption.text, &LexiconTagger::new(Some(db)), db)
}

/// Mean profile of caption texts, computed in parallel.
pub fn profile_texts(texts: &[&str], tagger: &dyn PosTagger, db: &WordNetDb) -> Result<GranularityProfile> {
    let per_caption = par::map_collect(texts, |t| profile_text(t, tagger, db));
    GranularityProfile::mean(&per_caption).ok_or_else(|| Error::Usage("cannot profile an empty corpus".into()))
}

/// Mean profile over every caption of the corpus.
pub fn profile_corpus(corpus: &Corpus, db: &WordNetDb) -> Result<GranularityProfile> {
    let texts: Vec<&str> = corpus.captions().map(|c| c.text.as_str()).collect();
    profile_texts(&texts, &LexiconTagger::new(Some(db)), db)
}

const TABLE_ROWS: [(&str, &str, &str); 9] = [
    ("NP", "Modifiers of the Noun", "Adjectives"),
    ("", "", "Complement Phrases"),
    ("", "Determiners", "Articles"),
    ("", "", "Quantifiers"),
    ("", "Semantics", "Concept depth"),
    ("Caption", "Number of Characters", "Caption length"),
    ("", "Number of Words", "Number of words in a caption"),
    ("", "Semantics", "Diversity of concepts per caption"),
    ("", "", "Concept diversity ratio"),
];

/// Level / aspect / feature table with one value column per profile.
pub fn format_table1(columns: &[(&str, &GranularityProfile)]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Level".to_string(), "Aspect".into(), "Feature".into()];
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    rows.push(header);
    for (i, (level, aspect, feature)) in TABLE_ROWS.iter().enumerate() {
        let mut row = vec![level.to_string(), aspect.to_string(), feature.to_string()];
        row.extend(columns.iter().map(|(_, p)| {
            let v = p.features()[i];
            if i == 8 {
                format!("{v:.4}")
            } else {
                format!("{v:.2}")
            }
        }));
        rows.push(row);
    }
    let mut row = vec![String::new(), String::new(), "Captions".to_string()];
    row.extend(columns.iter().map(|(_, p)| p.caption_count.to_string()));
    rows.push(row);

    let ncol = rows[0].len();
    let widths: Vec<usize> = (0..ncol)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (ri, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, w))| if j < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if ri == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

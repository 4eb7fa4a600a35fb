use super::token::{PosTag, Token};
use super::wordnet::{PosClass, WordNetDb};

const ARTICLES: &[&str] = &["a", "an", "the"];

const QUANTIFIERS: &[&str] = &[
    "some", "many", "few", "several", "all", "both", "each", "every", "most", "no", "any",
];

const CARDINALS: &[&str] = &[
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
    "thirty",
    "forty",
    "fifty",
    "sixty",
    "seventy",
    "eighty",
    "ninety",
    "hundred",
    "thousand",
    "million",
];

const PREPOSITIONS: &[&str] = &[
    "aboard",
    "about",
    "above",
    "across",
    "after",
    "against",
    "along",
    "alongside",
    "amid",
    "among",
    "amongst",
    "around",
    "as",
    "at",
    "atop",
    "before",
    "behind",
    "below",
    "beneath",
    "beside",
    "besides",
    "between",
    "beyond",
    "by",
    "despite",
    "down",
    "during",
    "except",
    "for",
    "from",
    "in",
    "inside",
    "into",
    "like",
    "near",
    "of",
    "off",
    "on",
    "onto",
    "opposite",
    "out",
    "outside",
    "over",
    "past",
    "per",
    "through",
    "throughout",
    "till",
    "to",
    "toward",
    "towards",
    "under",
    "underneath",
    "unlike",
    "until",
    "up",
    "upon",
    "via",
    "with",
    "within",
    "without",
];

const PRONOUNS: &[&str] = &[
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "you",
    "your",
    "yours",
    "yourself",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "this",
    "these",
    "those",
    "that",
    "which",
    "who",
    "whom",
    "whose",
    "what",
    "someone",
    "somebody",
    "something",
    "anyone",
    "anything",
    "everyone",
    "everybody",
    "everything",
    "nobody",
    "nothing",
    "there",
];

const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "yet", "so", "because", "while", "although", "though", "if", "whereas", "either",
    "neither", "whether",
];

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "does", "do", "did", "can", "could",
    "will", "would", "shall", "should", "may", "might", "must",
];

/// Words that open a complement clause.
pub const COMPLEMENTIZERS: &[&str] = &["that", "which", "who", "whom", "whose"];

/// Assigns a POS tag to every token. Implementations must be deterministic
/// and total.
pub trait PosTagger: Send + Sync {
    fn tag_word(&self, lower: &str) -> PosTag;

    fn tag(&self, tokens: &mut [Token]) {
        for t in tokens {
            t.pos = if t.is_punct() {
                PosTag::Punct
            } else {
                self.tag_word(&t.lower)
            };
        }
    }
}

/// Closed-class lexicon, then WordNet's lemma index, then suffix rules.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconTagger<'a> {
    wordnet: Option<&'a WordNetDb>,
}

impl<'a> LexiconTagger<'a> {
    pub fn new(wordnet: Option<&'a WordNetDb>) -> Self {
        Self { wordnet }
    }

    fn closed_class(lower: &str) -> Option<PosTag> {
        if ARTICLES.contains(&lower) {
            Some(PosTag::DetArticle)
        } else if QUANTIFIERS.contains(&lower) || CARDINALS.contains(&lower) || is_cardinal_number(lower) {
            Some(PosTag::DetQuantifier)
        } else if PREPOSITIONS.contains(&lower) {
            Some(PosTag::Prep)
        } else if PRONOUNS.contains(&lower) {
            Some(PosTag::Pron)
        } else if CONJUNCTIONS.contains(&lower) {
            Some(PosTag::Conj)
        } else if AUXILIARIES.contains(&lower) {
            Some(PosTag::Verb)
        } else {
            None
        }
    }

    fn suffix_rule(lower: &str) -> PosTag {
        if lower.ends_with("ly") {
            PosTag::Adv
        } else if lower.ends_with("ing") || lower.ends_with("ed") {
            PosTag::Verb
        } else {
            PosTag::Noun
        }
    }
}

/// Digit strings such as `3`, `1,000` or `2.5`.
fn is_cardinal_number(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_digit()) && s.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.')
}

impl PosTagger for LexiconTagger<'_> {
    fn tag_word(&self, lower: &str) -> PosTag {
        if lower.is_empty() || !lower.chars().any(char::is_alphanumeric) {
            return PosTag::Punct;
        }
        if let Some(tag) = Self::closed_class(lower) {
            return tag;
        }
        if lower.chars().any(|c| c.is_ascii_digit()) {
            return PosTag::Num;
        }
        if !lower.chars().any(char::is_alphabetic) {
            return PosTag::Other;
        }
        if let Some(class) = self.wordnet.and_then(|db| db.preferred_class(lower)) {
            return match class {
                PosClass::Noun => PosTag::Noun,
                PosClass::Adj => PosTag::Adj,
                PosClass::Verb => PosTag::Verb,
                PosClass::Adv => PosTag::Adv,
            };
        }
        Self::suffix_rule(lower)
    }
}

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Part-of-speech tag set. Articles and quantifiers are separate determiner
/// classes so that granularity features can count them independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PosTag {
    Noun,
    Adj,
    DetArticle,
    DetQuantifier,
    Verb,
    Adv,
    Pron,
    Prep,
    Conj,
    Num,
    Punct,
    Other,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Adj => "ADJ",
            PosTag::DetArticle => "DET_ARTICLE",
            PosTag::DetQuantifier => "DET_QUANTIFIER",
            PosTag::Verb => "VERB",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Prep => "PREP",
            PosTag::Conj => "CONJ",
            PosTag::Num => "NUM",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }

    /// Noun, adjective, verb or adverb.
    pub fn is_open_class(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Adj | PosTag::Verb | PosTag::Adv)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub pos: PosTag,
    /// Byte range of `surface` in the source text.
    pub span: Range<usize>,
}

impl Token {
    fn new(text: &str, span: Range<usize>) -> Self {
        let surface = text[span.clone()].to_string();
        let lower = surface.to_lowercase();
        let pos = if is_punct_str(&surface) {
            PosTag::Punct
        } else {
            PosTag::Other
        };
        Token {
            surface,
            lower,
            pos,
            span,
        }
    }

    /// True when the token contains no alphanumeric character.
    pub fn is_punct(&self) -> bool {
        is_punct_str(&self.surface)
    }

    /// True when every character is alphabetic.
    pub fn is_alphabetic(&self) -> bool {
        !self.surface.is_empty() && self.surface.chars().all(char::is_alphabetic)
    }
}

fn is_punct_str(s: &str) -> bool {
    !s.chars().any(char::is_alphanumeric)
}

/// Splits on whitespace, then peels leading and trailing non-alphanumeric
/// runs off each chunk as separate tokens. Spans are lossless: the text
/// between consecutive spans is exactly the original separator.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                split_chunk(text, s, i, &mut tokens);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        split_chunk(text, s, text.len(), &mut tokens);
    }
    tokens
}

fn split_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &text[start..end];
    let Some(first_alnum) = chunk.find(char::is_alphanumeric) else {
        out.push(Token::new(text, start..end));
        return;
    };
    let last_alnum = chunk
        .char_indices()
        .rfind(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .expect("chunk has an alphanumeric char");
    if first_alnum > 0 {
        out.push(Token::new(text, start..start + first_alnum));
    }
    out.push(Token::new(text, start + first_alnum..start + last_alnum));
    if last_alnum < chunk.len() {
        out.push(Token::new(text, start + last_alnum..end));
    }
}

/// Rebuilds text from per-slot surfaces. A slot is separated from the
/// previous one by a single space when the original separator was
/// whitespace, and glued to it when the original separator was empty
/// (punctuation attached to a word). Leading and trailing whitespace of the
/// source is dropped.
pub fn detokenize_with_gaps(text: &str, tokens: &[Token], surfaces: &[&str]) -> String {
    debug_assert_eq!(tokens.len(), surfaces.len());
    let mut out = String::with_capacity(text.len());
    for (i, surface) in surfaces.iter().enumerate() {
        if i > 0 && tokens[i - 1].span.end < tokens[i].span.start {
            out.push(' ');
        }
        out.push_str(surface);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn whitespace_split() {
        assert_eq!(surfaces("a red rose"), vec!["a", "red", "rose"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn punctuation_peeled() {
        assert_eq!(surfaces("motorcycles."), vec!["motorcycles", "."]);
        assert_eq!(surfaces("(red)"), vec!["(", "red", ")"]);
        assert_eq!(surfaces("dog's, ..."), vec!["dog's", ",", "..."]);
        let t = tokenize("on omtorcycles .");
        assert_eq!(t[2].pos, PosTag::Punct);
        assert!(t[2].is_punct());
    }

    #[test]
    fn lower_and_spans() {
        let t = tokenize("Two  Men");
        assert_eq!(t[0].lower, "two");
        assert_eq!(t[1].span, 5..8);
    }

    #[test]
    fn detokenize_glues_punctuation() {
        let text = "a  red rose.";
        let t = tokenize(text);
        let s = ["rose", "a", "red", "."];
        assert_eq!(detokenize_with_gaps(text, &t, &s), "rose a red.");
    }

    proptest! {
        #[test]
        fn spans_reconstruct_input(text in "[a-zA-Z0-9 .,!?'()\\-é\t]{0,60}") {
            let toks = tokenize(&text);
            let mut rebuilt = String::new();
            let mut prev = 0;
            for t in &toks {
                prop_assert!(t.span.start >= prev);
                rebuilt.push_str(&text[prev..t.span.start]);
                prop_assert!(text[prev..t.span.start].chars().all(char::is_whitespace));
                rebuilt.push_str(&t.surface);
                prev = t.span.end;
            }
            rebuilt.push_str(&text[prev..]);
            prop_assert_eq!(rebuilt, text);
        }
    }
}

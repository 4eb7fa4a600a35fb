//! Linguistic substrate: tokenization, POS tagging, WordNet and keyboard
//! adjacency. Everything here is immutable after construction and safe to
//! share across threads.

mod keyboard;
mod tagger;
mod token;
mod wordnet;

pub use keyboard::{adjacent_keys, KeyboardLayout};
pub use tagger::{LexiconTagger, PosTagger, COMPLEMENTIZERS};
pub use token::{detokenize_with_gaps, tokenize, PosTag, Token};
pub use wordnet::{ClassSource, PosClass, Synset, WordNetDb, WordNetError};

/// Tokenizes and tags `text` in one call.
pub fn analyze(text: &str, tagger: &dyn PosTagger) -> Vec<Token> {
    let mut tokens = tokenize(text);
    tagger.tag(&mut tokens);
    tokens
}

#[cfg(test)]
pub(crate) use wordnet::fixture as wordnet_fixture;

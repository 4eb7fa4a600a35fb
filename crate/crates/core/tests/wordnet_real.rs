//! Checks against the WordNet 3.0 release under `data/wordnet-3.0` (or
//! `ITRBENCH_WORDNET`).

use std::path::PathBuf;
use std::sync::OnceLock;

use itrbench::corpus::load_annotations;
use itrbench::granularity::{profile_corpus, profile_text};
use itrbench::lingo::{analyze, LexiconTagger, PosClass, PosTag, WordNetDb};
use itrbench::Split;

fn db() -> &'static WordNetDb {
    static DB: OnceLock<WordNetDb> = OnceLock::new();
    DB.get_or_init(|| {
        let dir = std::env::var_os("ITRBENCH_WORDNET")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wordnet-3.0"));
        WordNetDb::load(&dir).expect("WordNet 3.0 release")
    })
}

fn tags(text: &str) -> Vec<PosTag> {
    analyze(text, &LexiconTagger::new(Some(db())))
        .iter()
        .map(|t| t.pos)
        .collect()
}

#[test]
fn tags_a_typical_caption() {
    use PosTag::*;
    assert_eq!(
        tags("A man riding a red bicycle down the street ."),
        [DetArticle, Noun, Verb, DetArticle, Adj, Noun, Prep, DetArticle, Noun, Punct]
    );
    // Cardinal digits count as quantifying determiners.
    assert_eq!(
        tags("Two dogs are playing with 3 balls"),
        [DetQuantifier, Noun, Verb, Verb, Prep, DetQuantifier, Noun]
    );
}

#[test]
fn inflected_nouns_reach_their_lemmas() {
    let db = db();
    assert!(db.base_forms("men", PosClass::Noun).contains(&"man".to_string()));
    assert!(db
        .base_forms("balloons", PosClass::Noun)
        .contains(&"balloon".to_string()));
    assert!(!db.synsets_of_inflected("children", PosClass::Noun).is_empty());
}

#[test]
fn synonyms_of_car() {
    let syn = db().synonyms_of("car", PosClass::Noun);
    for want in ["auto", "automobile", "motorcar", "railcar"] {
        assert!(syn.iter().any(|s| s == want), "{want} missing from {syn:?}");
    }
    assert!(!syn.iter().any(|s| s == "car"));
}

#[test]
fn depth_of_common_nouns() {
    let db = db();
    let depth = |w: &str| {
        db.synsets_of(w, PosClass::Noun)
            .iter()
            .map(|s| s.min_depth)
            .max()
            .unwrap()
    };
    assert_eq!(db.synsets_of("dog", PosClass::Noun)[0].min_depth, 8);
    assert_eq!(depth("dog"), 9);
    assert_eq!(depth("table"), 8);
    assert_eq!(depth("entity"), 0);
}

#[test]
fn adjective_raises_the_adjective_count() {
    let tagger = LexiconTagger::new(Some(db()));
    let plain = profile_text("a dog on the grass", &tagger, db());
    let rich = profile_text("a small dog on the green grass", &tagger, db());
    assert_eq!(plain.adjectives, 0.0);
    assert_eq!(rich.adjectives, 2.0);
    assert_eq!(plain.concept_depth, rich.concept_depth);
}

#[test]
fn golden_corpus_profile() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden/annotations.json");
    let corpus = load_annotations(path, Split::Test).unwrap();
    let g = profile_corpus(&corpus, db()).unwrap();
    assert_eq!(g.caption_count, 40);
    assert_eq!(g.captions_without_nouns, 0);
    assert_eq!(format!("{:.2}", g.adjectives), "0.68");
    assert_eq!(format!("{:.2}", g.concept_depth), "9.07");
    assert_eq!(format!("{:.2}", g.word_count), "7.20");
}

//! Image-text retrieval robustness workbench.
//!
//! The crate ingests Karpathy-format caption annotations and precomputed
//! text/image embedding matrices, perturbs caption text under a seeded
//! taxonomy, profiles caption granularity against WordNet, runs exact
//! bidirectional retrieval and scores it with Recall@k, rsum and a
//! cross-modal discounted cumulative gain.
//!
//! Module map:
//!
//! | module | role |
//! |--------|------|
//! | [`corpus`] | annotation loading, splits, ground truth |
//! | [`lingo`] | tokenizer, POS tagger, WordNet database, QWERTY adjacency |
//! | [`granularity`] | NP-level and caption-level granularity features |
//! | [`perturb`] | seeded caption perturbations |
//! | [`embedstore`] | EMBD binary matrices and L2 normalization |
//! | [`retrieval`] | blocked scoring and exact top-k |
//! | [`metrics`] | Recall@k, rsum, relevance, DCG_CM, evaluation reports |
//! | [`harness`] | experiment commands behind the CLI |
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.
//! Every reduction is performed in a fixed order, so outputs are
//! bit-identical for any thread count.

pub mod corpus;
pub mod embedstore;
pub mod error;
pub mod granularity;
pub mod harness;
pub mod lingo;
pub mod metrics;
pub mod par;
pub mod perturb;
pub mod retrieval;
pub mod rng;
pub mod synthetic;

pub use corpus::{Caption, Corpus, Direction, ImageTextTuple, Split};
pub use embedstore::EmbeddingMatrix;
pub use error::{Error, ErrorClass, Result};
pub use granularity::GranularityProfile;
pub use lingo::{KeyboardLayout, PosClass, PosTag, Synset, Token, WordNetDb};
pub use metrics::{EvalConfig, EvalReport};
pub use perturb::{PerturbationKind, PerturbationSpec, PerturbedCaption, PerturbedCorpus};
pub use retrieval::RankedList;

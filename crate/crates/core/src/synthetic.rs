//! Deterministic stand-in encoders for fixtures and benchmarks.
//!
//! Text is embedded as a weighted sum of pseudo-random feature vectors, one
//! per lower-cased word and one per adjacent word pair, so the embedding
//! reacts to both vocabulary and word order. An image is embedded as the
//! mean of its captions' text embeddings plus image-specific noise.

use crate::corpus::Corpus;
use crate::embedstore::EmbeddingMatrix;
use crate::lingo::tokenize;
use crate::par;
use crate::rng::{derive_seed, SplitMix64};

const UNIGRAM_WEIGHT: f64 = 1.0;
const BIGRAM_WEIGHT: f64 = 0.75;
/// Scale of the per-image noise relative to a unit-norm caption mean.
const IMAGE_NOISE: f64 = 0.35;

fn feature(dim: usize, seed: u64, name: &str, out: &mut [f64], weight: f64) {
    let mut rng = SplitMix64::new(derive_seed(seed, name, "synthetic_feature"));
    for v in out.iter_mut().take(dim) {
        // Uniform in [-1, 1) from the top 53 bits.
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        *v += weight * (2.0 * u - 1.0);
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Unit-norm text embedding (f64) of `text`.
pub fn encode_text_f64(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    let words: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| !t.is_punct())
        .map(|t| t.lower)
        .collect();
    let mut v = vec![0.0; dim];
    for w in &words {
        feature(dim, seed, &format!("u:{w}"), &mut v, UNIGRAM_WEIGHT);
    }
    for pair in words.windows(2) {
        feature(
            dim,
            seed,
            &format!("b:{}\u{1f}{}", pair[0], pair[1]),
            &mut v,
            BIGRAM_WEIGHT,
        );
    }
    if words.is_empty() {
        feature(dim, seed, "empty", &mut v, 1.0);
    }
    normalize(&mut v);
    v
}

pub fn encode_text(text: &str, dim: usize, seed: u64) -> Vec<f32> {
    encode_text_f64(text, dim, seed).into_iter().map(|x| x as f32).collect()
}

/// Raw (unnormalized flag) text embeddings for every caption, corpus order.
pub fn text_embeddings(corpus: &Corpus, dim: usize, seed: u64) -> EmbeddingMatrix {
    let caps: Vec<(&str, &str)> = corpus
        .captions()
        .map(|c| (c.caption_id.as_str(), c.text.as_str()))
        .collect();
    let rows = par::map_collect(&caps, |(_, text)| encode_text(text, dim, seed));
    let ids = caps.iter().map(|(id, _)| id.to_string()).collect();
    EmbeddingMatrix::new(ids, dim, rows.concat(), false).expect("synthetic rows are finite with unique ids")
}

/// Image embeddings: mean caption embedding plus per-image noise.
pub fn image_embeddings(corpus: &Corpus, dim: usize, seed: u64) -> EmbeddingMatrix {
    let rows = par::map_collect(corpus.tuples(), |t| {
        let mut v = vec![0.0; dim];
        for c in &t.captions {
            for (a, b) in v.iter_mut().zip(encode_text_f64(&c.text, dim, seed)) {
                *a += b;
            }
        }
        normalize(&mut v);
        let mut noise = vec![0.0; dim];
        feature(dim, seed, &format!("i:{}", t.image_id), &mut noise, 1.0);
        normalize(&mut noise);
        v.iter()
            .zip(noise)
            .map(|(a, n)| (a + IMAGE_NOISE * n) as f32)
            .collect::<Vec<f32>>()
    });
    let ids = corpus.image_ids().map(str::to_string).collect();
    EmbeddingMatrix::new(ids, dim, rows.concat(), false).expect("synthetic rows are finite with unique ids")
}

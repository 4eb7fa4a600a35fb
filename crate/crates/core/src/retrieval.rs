//! Exact bidirectional retrieval over normalized embedding matrices.
//!
//! Scores are dot products accumulated in f64 in a fixed order, so the same
//! pair always gets the same score no matter how the work is tiled or split
//! across threads. Ties in top-k are broken by ascending candidate index.

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{Corpus, Direction};
use crate::embedstore::{EmbdError, EmbeddingMatrix};
use crate::par;

/// Queries scored together in one tile.
pub const QUERY_BLOCK: usize = 32;
/// Candidate rows per tile; 256 rows of a 512-dim f32 matrix is 512 KiB.
pub const CANDIDATE_BLOCK: usize = 256;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("{matrix} embeddings are missing {} corpus ids: {}", missing.len(), preview(missing))]
    Coverage { matrix: &'static str, missing: Vec<String> },
    #[error("unknown query id {0:?}")]
    MissingId(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Normalize(#[from] EmbdError),
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        let _ = write!(s, ", ... ({} more)", ids.len() - SHOWN);
    }
    s
}

/// One retrieved candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub candidate_id: String,
    /// Row of the candidate in corpus order.
    pub candidate_index: usize,
    pub score: f64,
}

/// Top-k candidates for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    pub direction: Direction,
    pub entries: Vec<RankedEntry>,
}

/// Dot product accumulated in f64, left to right.
#[inline]
pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = 0.0f64;
    for (a, b) in u.iter().zip(v) {
        acc += f64::from(*a) * f64::from(*b);
    }
    acc
}

/// Cosine similarity of two vectors of any norm.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, RetrievalError> {
    if u.len() != v.len() {
        return Err(RetrievalError::DimMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Scores one query row against every candidate row.
pub fn score_all(query: &[f32], candidates: &EmbeddingMatrix) -> Result<Vec<f64>, RetrievalError> {
    if query.len() != candidates.dim() {
        return Err(RetrievalError::DimMismatch {
            expected: candidates.dim(),
            actual: query.len(),
        });
    }
    let mut out = vec![0.0; candidates.len()];
    score_tile(&[query], candidates, &mut out);
    Ok(out)
}

/// Scores `queries` (row-major, `dim` columns) against all candidates,
/// returning a `queries × candidates` row-major matrix. Work is tiled into
/// query blocks × candidate blocks and query blocks run in parallel.
pub fn score_matrix(queries: &[f32], dim: usize, candidates: &EmbeddingMatrix) -> Result<Vec<f64>, RetrievalError> {
    if dim != candidates.dim() || !queries.len().is_multiple_of(dim.max(1)) {
        return Err(RetrievalError::DimMismatch {
            expected: candidates.dim(),
            actual: dim,
        });
    }
    let nq = queries.len() / dim;
    let nc = candidates.len();
    let mut out = vec![0.0; nq * nc];
    if nc == 0 {
        return Ok(out);
    }
    par::for_each_chunk_mut(&mut out, QUERY_BLOCK * nc, |block, chunk| {
        let q0 = block * QUERY_BLOCK;
        let rows: Vec<&[f32]> = (q0..q0 + chunk.len() / nc)
            .map(|q| &queries[q * dim..(q + 1) * dim])
            .collect();
        score_tile(&rows, candidates, chunk);
    });
    Ok(out)
}

/// Fills `out[q * n + c]` for every query row `q` and candidate `c`,
/// walking candidates in blocks so a block stays cache-resident while all
/// queries pass over it.
fn score_tile(queries: &[&[f32]], candidates: &EmbeddingMatrix, out: &mut [f64]) {
    let n = candidates.len();
    for c0 in (0..n).step_by(CANDIDATE_BLOCK) {
        let c1 = (c0 + CANDIDATE_BLOCK).min(n);
        for (qi, q) in queries.iter().enumerate() {
            let row_out = &mut out[qi * n..(qi + 1) * n];
            for (c, slot) in row_out.iter_mut().enumerate().take(c1).skip(c0) {
                *slot = dot(q, candidates.row(c));
            }
        }
    }
}

fn rank_order(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of the `k` best scores, best first, ties by ascending index.
/// Uses partial selection followed by a sort of the selected prefix.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(scores.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = rank_order(scores);
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(&cmp);
    idx
}

/// Ranked list of the `k` best candidates.
pub fn top_k(
    query_id: &str,
    direction: Direction,
    scores: &[f64],
    k: usize,
    candidate_ids: &[String],
) -> Result<RankedList, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    debug_assert_eq!(scores.len(), candidate_ids.len());
    Ok(RankedList {
        query_id: query_id.to_string(),
        direction,
        entries: top_k_indices(scores, k)
            .into_iter()
            .map(|i| RankedEntry {
                candidate_id: candidate_ids[i].clone(),
                candidate_index: i,
                score: scores[i],
            })
            .collect(),
    })
}

/// Text and image matrices restricted to a corpus, rows in corpus order
/// (captions in file order, images in file order) and L2-normalized.
#[derive(Debug, Clone)]
pub struct Retriever {
    texts: EmbeddingMatrix,
    images: EmbeddingMatrix,
}

impl Retriever {
    /// Aligns both matrices to the corpus. Ids present in the corpus but
    /// absent from a matrix produce a coverage error listing them; extra
    /// matrix rows are ignored. Unnormalized matrices are normalized here.
    pub fn new(
        corpus: &Corpus,
        text_emb: &EmbeddingMatrix,
        image_emb: &EmbeddingMatrix,
    ) -> Result<Self, RetrievalError> {
        if text_emb.dim() != image_emb.dim() {
            return Err(RetrievalError::DimMismatch {
                expected: text_emb.dim(),
                actual: image_emb.dim(),
            });
        }
        let texts = text_emb
            .select(corpus.captions().map(|c| c.caption_id.as_str()))
            .map_err(|missing| RetrievalError::Coverage {
                matrix: "text",
                missing,
            })?;
        let images = image_emb
            .select(corpus.image_ids())
            .map_err(|missing| RetrievalError::Coverage {
                matrix: "image",
                missing,
            })?;
        Ok(Self {
            texts: normalized(texts)?,
            images: normalized(images)?,
        })
    }

    pub fn texts(&self) -> &EmbeddingMatrix {
        &self.texts
    }

    pub fn images(&self) -> &EmbeddingMatrix {
        &self.images
    }

    /// (query matrix, candidate matrix) for a direction.
    pub fn sides(&self, direction: Direction) -> (&EmbeddingMatrix, &EmbeddingMatrix) {
        match direction {
            Direction::I2t => (&self.images, &self.texts),
            Direction::T2i => (&self.texts, &self.images),
        }
    }

    /// Top-k list for a single query.
    pub fn retrieve(&self, query_id: &str, direction: Direction, k: usize) -> Result<RankedList, RetrievalError> {
        let (queries, candidates) = self.sides(direction);
        let row = queries
            .row_by_id(query_id)
            .ok_or_else(|| RetrievalError::MissingId(query_id.to_string()))?;
        let scores = score_all(row, candidates)?;
        top_k(query_id, direction, &scores, k, candidates.ids())
    }

    /// Top-k lists for every query of a direction, in corpus order.
    pub fn retrieve_all(&self, direction: Direction, k: usize) -> Result<Vec<RankedList>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        let (queries, candidates) = self.sides(direction);
        let nq = queries.len();
        let blocks = nq.div_ceil(QUERY_BLOCK);
        let per_block = par::map_range(blocks, |b| {
            let q0 = b * QUERY_BLOCK;
            let q1 = (q0 + QUERY_BLOCK).min(nq);
            let rows: Vec<&[f32]> = (q0..q1).map(|q| queries.row(q)).collect();
            let nc = candidates.len();
            let mut scores = vec![0.0; rows.len() * nc];
            score_tile(&rows, candidates, &mut scores);
            (q0..q1)
                .map(|q| {
                    let s = &scores[(q - q0) * nc..(q - q0 + 1) * nc];
                    top_k(&queries.ids()[q], direction, s, k, candidates.ids())
                })
                .collect::<Result<Vec<_>, _>>()
        });
        let mut out = Vec::with_capacity(nq);
        for block in per_block {
            out.extend(block?);
        }
        Ok(out)
    }
}

fn normalized(m: EmbeddingMatrix) -> Result<EmbeddingMatrix, EmbdError> {
    if m.is_normalized() {
        Ok(m)
    } else {
        m.l2_normalize()
    }
}

/// Results file body: `query_id TAB rank TAB candidate_id TAB score`, rank
/// 1-based, score with nine decimals.
pub fn format_results(lists: &[RankedList]) -> String {
    let mut s = String::new();
    for list in lists {
        for (r, e) in list.entries.iter().enumerate() {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.9}", list.query_id, r + 1, e.candidate_id, e.score);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Caption, ImageTextTuple, Split};
    use proptest::prelude::*;

    fn matrix(ids: &[&str], dim: usize, data: Vec<f32>) -> EmbeddingMatrix {
        EmbeddingMatrix::new(ids.iter().map(|s| s.to_string()).collect(), dim, data, false).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 0.0], &[0.6, 0.8]).unwrap() - 0.6).abs() < 1e-7);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(RetrievalError::DimMismatch { .. })
        ));
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 2.0]),
            Err(RetrievalError::ZeroVector)
        ));
    }

    #[test]
    fn basis_scores() {
        let m = matrix(&["a", "b", "c"], 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]);
        assert_eq!(score_all(&[1., 0., 0.], &m).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k_indices(&[0.1, 0.9, 0.5], 2), vec![1, 2]);
        assert_eq!(top_k_indices(&[0.3, 0.3, 0.3, 0.3], 2), vec![0, 1]);
        assert_eq!(top_k_indices(&[0.3, 0.7], 5), vec![1, 0]);
        assert!(top_k_indices(&[], 3).is_empty());
    }

    #[test]
    fn single_pair_rank_one() {
        let corpus = Corpus::new(
            "t",
            Split::Test,
            vec![ImageTextTuple {
                image_id: "img".into(),
                image_uri: "img.jpg".into(),
                captions: vec![Caption {
                    caption_id: "c".into(),
                    image_id: "img".into(),
                    text: "x".into(),
                }],
            }],
        )
        .unwrap();
        let t = matrix(&["c"], 2, vec![0.3, 0.4]);
        let i = matrix(&["img"], 2, vec![0.3, 0.4]);
        let r = Retriever::new(&corpus, &t, &i).unwrap();
        let list = r.retrieve("c", Direction::T2i, 1).unwrap();
        assert_eq!(list.entries[0].candidate_id, "img");
        assert!((list.entries[0].score - 1.0).abs() < 1e-6);

        let missing = matrix(&["other"], 2, vec![1.0, 0.0]);
        match Retriever::new(&corpus, &t, &missing) {
            Err(RetrievalError::Coverage { matrix, missing }) => {
                assert_eq!(matrix, "image");
                assert_eq!(missing, vec!["img".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn results_format() {
        let list = RankedList {
            query_id: "q".into(),
            direction: Direction::T2i,
            entries: vec![RankedEntry {
                candidate_id: "i".into(),
                candidate_index: 0,
                score: 0.5,
            }],
        };
        assert_eq!(format_results(&[list]), "q\t1\ti\t0.500000000\n");
    }

    proptest! {
        #[test]
        fn top_k_matches_full_sort(scores in prop::collection::vec(-3i32..3, 0..200), k in 1usize..30) {
            let scores: Vec<f64> = scores.into_iter().map(|s| s as f64 / 2.0).collect();
            let mut full: Vec<usize> = (0..scores.len()).collect();
            full.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
            full.truncate(k);
            prop_assert_eq!(top_k_indices(&scores, k), full);
        }

        #[test]
        fn tiled_matches_naive(nq in 1usize..70, nc in 0usize..300, seed in any::<u64>()) {
            let dim = 5;
            let mut rng = crate::rng::SplitMix64::new(seed);
            let mut val = || (rng.next_u64() % 2001) as f32 / 1000.0 - 1.0;
            let q: Vec<f32> = (0..nq * dim).map(|_| val()).collect();
            let c: Vec<f32> = (0..nc * dim).map(|_| val()).collect();
            let ids: Vec<String> = (0..nc).map(|i| i.to_string()).collect();
            let m = EmbeddingMatrix::new(ids, dim, c, false).unwrap();
            let tiled = score_matrix(&q, dim, &m).unwrap();
            for qi in 0..nq {
                for ci in 0..nc {
                    let naive: f64 = (0..dim).map(|j| f64::from(q[qi * dim + j]) * f64::from(m.row(ci)[j])).sum();
                    prop_assert!((tiled[qi * nc + ci] - naive).abs() < 1e-12);
                }
            }
        }
    }
}

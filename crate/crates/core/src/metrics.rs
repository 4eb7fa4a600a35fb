//! Recall@k, rsum, cross-modal relevance and DCG_CM.
//!
//! Recall uses the any-hit convention: a query counts as a hit at `k` when
//! at least one of its ground-truth candidates is ranked in the top `k`.
//! DCG_CM grades each ranked entry with 1 for a ground-truth candidate and
//! with its cosine similarity (clamped to `[0, 1]`) otherwise.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::corpus::{Corpus, Direction, Split};
use crate::embedstore::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::par;
use crate::retrieval::{RankedList, Retriever};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("query {0:?} has no ranked list")]
    MissingQuery(String),
    #[error("no queries to evaluate")]
    NoQueries,
}

/// Ground-truth candidate sets for every query of one direction, in corpus
/// order.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    direction: Direction,
    queries: Vec<(String, HashSet<String>)>,
}

impl GroundTruth {
    pub fn from_corpus(corpus: &Corpus, direction: Direction) -> Self {
        let queries = match direction {
            Direction::I2t => corpus
                .tuples()
                .iter()
                .map(|t| {
                    let set = t.captions.iter().map(|c| c.caption_id.clone()).collect();
                    (t.image_id.clone(), set)
                })
                .collect(),
            Direction::T2i => corpus
                .captions()
                .map(|c| (c.caption_id.clone(), HashSet::from([c.image_id.clone()])))
                .collect(),
        };
        Self { direction, queries }
    }

    /// Builds from explicit `(query, relevant ids)` pairs.
    pub fn from_pairs<I, S>(direction: Direction, pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: Into<String>,
    {
        Self {
            direction,
            queries: pairs
                .into_iter()
                .map(|(q, rel)| (q.into(), rel.into_iter().map(Into::into).collect()))
                .collect(),
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &HashSet<String>)> {
        self.queries.iter().map(|(q, s)| (q.as_str(), s))
    }
}

/// Lists aligned to the truth's query order.
fn align<'a>(ranked: &'a [RankedList], truth: &'a GroundTruth) -> Result<Vec<&'a RankedList>, MetricsError> {
    if truth.is_empty() {
        return Err(MetricsError::NoQueries);
    }
    let by_id: HashMap<&str, &RankedList> = ranked.iter().map(|l| (l.query_id.as_str(), l)).collect();
    truth
        .iter()
        .map(|(q, _)| {
            by_id
                .get(q)
                .copied()
                .ok_or_else(|| MetricsError::MissingQuery(q.to_string()))
        })
        .collect()
}

/// 1-based rank of the first ground-truth candidate, if any was retrieved.
pub fn first_hit_rank(list: &RankedList, relevant: &HashSet<String>) -> Option<usize> {
    list.entries
        .iter()
        .position(|e| relevant.contains(&e.candidate_id))
        .map(|i| i + 1)
}

/// Percentage of queries with a ground-truth candidate in the top `k`.
pub fn recall_at_k(ranked: &[RankedList], truth: &GroundTruth, k: usize) -> Result<f64, MetricsError> {
    let lists = align(ranked, truth)?;
    let hits = lists
        .iter()
        .zip(truth.iter())
        .filter(|(l, (_, rel))| first_hit_rank(l, rel).is_some_and(|r| r <= k))
        .count();
    Ok(100.0 * hits as f64 / lists.len() as f64)
}

pub fn rsum(r1: f64, r5: f64, r10: f64) -> f64 {
    r1 + r5 + r10
}

/// Graded relevance of a ranked candidate: 1 for a perfect match,
/// otherwise the cosine similarity clamped to `[0, 1]`.
pub fn relevance(perfect_match: bool, cosine: f64) -> f64 {
    if perfect_match {
        1.0
    } else {
        cosine.clamp(0.0, 1.0)
    }
}

/// Relevance of `candidate_id` for `query_id` computed from raw embeddings.
pub fn relevance_of(
    query_id: &str,
    candidate_id: &str,
    direction: Direction,
    corpus: &Corpus,
    text_emb: &EmbeddingMatrix,
    image_emb: &EmbeddingMatrix,
) -> Result<f64> {
    let truth = corpus.ground_truth(query_id, direction)?;
    if truth.contains(&candidate_id) {
        return Ok(1.0);
    }
    let (q_m, c_m) = match direction {
        Direction::I2t => (image_emb, text_emb),
        Direction::T2i => (text_emb, image_emb),
    };
    let q = q_m
        .row_by_id(query_id)
        .ok_or_else(|| crate::retrieval::RetrievalError::MissingId(query_id.to_string()))?;
    let c = c_m
        .row_by_id(candidate_id)
        .ok_or_else(|| crate::retrieval::RetrievalError::MissingId(candidate_id.to_string()))?;
    Ok(relevance(false, crate::retrieval::cosine(q, c)?))
}

/// `Σ_{i=1..min(p, len)} rels[i-1] / log2(i + 1)`.
pub fn dcg_cm(rels: &[f64], p: usize) -> f64 {
    let mut s = 0.0;
    for (i, r) in rels.iter().take(p).enumerate() {
        s += r / ((i + 2) as f64).log2();
    }
    s
}

/// Largest DCG_CM attainable at depth `p` (all entries perfect matches).
pub fn dcg_cm_ideal(p: usize) -> f64 {
    dcg_cm(&vec![1.0; p], p)
}

/// Relevance vector of a ranked list.
pub fn relevance_vector(list: &RankedList, relevant: &HashSet<String>) -> Vec<f64> {
    list.entries
        .iter()
        .map(|e| relevance(relevant.contains(&e.candidate_id), e.score))
        .collect()
}

/// Recall cut-offs and DCG depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub dcg_p: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 5, 10],
            dcg_p: 10,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() {
            return Err(Error::Usage("k list is empty".into()));
        }
        if self.ks.contains(&0) {
            return Err(Error::Usage("k values must be at least 1".into()));
        }
        if self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("k list must be strictly ascending".into()));
        }
        if self.dcg_p == 0 {
            return Err(Error::Usage("DCG depth must be at least 1".into()));
        }
        Ok(())
    }

    /// Retrieval depth needed for every metric.
    pub fn depth(&self) -> usize {
        self.ks.iter().copied().max().unwrap_or(1).max(self.dcg_p)
    }
}

/// Scores for one direction. Percentages and DCG are full precision here;
/// rounding happens only in [`EvalReport::to_json`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMetrics {
    pub queries: usize,
    /// `(k, R@k)` in ascending `k`.
    pub recall: Vec<(usize, f64)>,
    pub dcg_cm: f64,
}

impl DirectionMetrics {
    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.recall.iter().find(|(kk, _)| *kk == k).map(|(_, r)| *r)
    }

    /// Sum of all configured recall values (R@1 + R@5 + R@10 by default).
    pub fn rsum(&self) -> f64 {
        self.recall.iter().map(|(_, r)| r).sum()
    }
}

/// Per-direction metrics from ranked lists.
pub fn direction_metrics(
    ranked: &[RankedList],
    truth: &GroundTruth,
    config: &EvalConfig,
) -> Result<DirectionMetrics, MetricsError> {
    let lists = align(ranked, truth)?;
    let rel_sets: Vec<&HashSet<String>> = truth.iter().map(|(_, s)| s).collect();
    let pairs: Vec<(&RankedList, &HashSet<String>)> = lists.into_iter().zip(rel_sets).collect();
    let per_query: Vec<(Option<usize>, f64)> = par::map_collect(&pairs, |(l, rel)| {
        (first_hit_rank(l, rel), dcg_cm(&relevance_vector(l, rel), config.dcg_p))
    });
    let n = per_query.len();
    let recall = config
        .ks
        .iter()
        .map(|&k| {
            let hits = per_query.iter().filter(|(r, _)| r.is_some_and(|r| r <= k)).count();
            (k, 100.0 * hits as f64 / n as f64)
        })
        .collect();
    let dcgs: Vec<f64> = per_query.iter().map(|(_, d)| *d).collect();
    Ok(DirectionMetrics {
        queries: n,
        recall,
        dcg_cm: par::ordered_mean(&dcgs).ok_or(MetricsError::NoQueries)?,
    })
}

/// One input file of a run: its role, base name and SHA-256.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub role: String,
    pub file: String,
    pub sha256: String,
}

/// Bidirectional evaluation summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub split: Split,
    pub images: usize,
    pub captions: usize,
    pub config: EvalConfig,
    pub i2t: DirectionMetrics,
    pub t2i: DirectionMetrics,
    /// Perturbation description, `None` for an unperturbed run. Must carry
    /// a string `label` for comparison tables.
    pub perturbation: Option<Value>,
    pub inputs: Vec<InputDigest>,
}

/// Report plus the ranked lists it was computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub i2t: Vec<RankedList>,
    pub t2i: Vec<RankedList>,
}

/// Runs retrieval in both directions and scores it.
pub fn evaluate(
    corpus: &Corpus,
    text_emb: &EmbeddingMatrix,
    image_emb: &EmbeddingMatrix,
    config: &EvalConfig,
) -> Result<Evaluation> {
    config.validate()?;
    let retriever = Retriever::new(corpus, text_emb, image_emb)?;
    let depth = config.depth();
    let i2t = retriever.retrieve_all(Direction::I2t, depth)?;
    let t2i = retriever.retrieve_all(Direction::T2i, depth)?;
    let i2t_m = direction_metrics(&i2t, &GroundTruth::from_corpus(corpus, Direction::I2t), config)?;
    let t2i_m = direction_metrics(&t2i, &GroundTruth::from_corpus(corpus, Direction::T2i), config)?;
    Ok(Evaluation {
        report: EvalReport {
            dataset: corpus.dataset_name.clone(),
            split: corpus.split,
            images: corpus.num_images(),
            captions: corpus.num_captions(),
            config: config.clone(),
            i2t: i2t_m,
            t2i: t2i_m,
            perturbation: None,
            inputs: Vec::new(),
        },
        i2t,
        t2i,
    })
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl EvalReport {
    fn direction_json(&self, m: &DirectionMetrics) -> Value {
        let mut o = Map::new();
        o.insert("queries".into(), json!(m.queries));
        let mut sum = 0.0;
        for &(k, r) in &m.recall {
            let r = round2(r);
            sum += r;
            o.insert(format!("r{k}"), json!(r));
        }
        o.insert("rsum".into(), json!(round2(sum)));
        o.insert("dcg_cm".into(), json!(round6(m.dcg_cm)));
        Value::Object(o)
    }

    /// Pretty JSON with percentages rounded to two decimals, rsum summed
    /// from the rounded percentages and DCG_CM rounded to six decimals.
    pub fn to_json(&self) -> String {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|d| json!({"role": d.role, "file": d.file, "sha256": d.sha256}))
            .collect();
        let doc = json!({
            "dataset": self.dataset,
            "split": self.split.as_str(),
            "images": self.images,
            "captions": self.captions,
            "k": self.config.ks,
            "dcg_p": self.config.dcg_p,
            "i2t": self.direction_json(&self.i2t),
            "t2i": self.direction_json(&self.t2i),
            "perturbation": self.perturbation.clone().unwrap_or(Value::Null),
            "inputs": inputs,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializing a JSON value");
        s.push('\n');
        s
    }

    /// Parses a document written by [`EvalReport::to_json`]. Values are the
    /// rounded ones stored in the file.
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let str_field = |k: &str| {
            doc.get(k)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or(format!("missing string field `{k}`"))
        };
        let num_field = |v: &Value, k: &str| {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or(format!("missing number field `{k}`"))
        };
        let usize_field = |k: &str| {
            doc.get(k)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or(format!("missing integer field `{k}`"))
        };
        let ks: Vec<usize> = doc
            .get("k")
            .and_then(Value::as_array)
            .ok_or("missing `k` list")?
            .iter()
            .map(|v| v.as_u64().map(|k| k as usize).ok_or("non-integer k".to_string()))
            .collect::<std::result::Result<_, _>>()?;
        let direction = |name: &str| -> std::result::Result<DirectionMetrics, String> {
            let d = doc.get(name).ok_or(format!("missing `{name}` section"))?;
            let queries = d
                .get("queries")
                .and_then(Value::as_u64)
                .ok_or(format!("missing `{name}.queries`"))? as usize;
            let recall = ks
                .iter()
                .map(|&k| num_field(d, &format!("r{k}")).map(|r| (k, r)))
                .collect::<std::result::Result<_, _>>()?;
            Ok(DirectionMetrics {
                queries,
                recall,
                dcg_cm: num_field(d, "dcg_cm")?,
            })
        };
        let split: Split = str_field("split")?
            .parse()
            .map_err(|e: crate::corpus::CorpusError| e.to_string())?;
        let inputs = doc
            .get("inputs")
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .map(|v| {
                        let f = |k: &str| {
                            v.get(k)
                                .and_then(Value::as_str)
                                .map(str::to_string)
                                .ok_or(format!("input entry lacks `{k}`"))
                        };
                        Ok(InputDigest {
                            role: f("role")?,
                            file: f("file")?,
                            sha256: f("sha256")?,
                        })
                    })
                    .collect::<std::result::Result<Vec<_>, String>>()
            })
            .transpose()?
            .unwrap_or_default();
        Ok(EvalReport {
            dataset: str_field("dataset")?,
            split,
            images: usize_field("images")?,
            captions: usize_field("captions")?,
            config: EvalConfig {
                ks: ks.clone(),
                dcg_p: usize_field("dcg_p")?,
            },
            i2t: direction("i2t")?,
            t2i: direction("t2i")?,
            perturbation: doc.get("perturbation").filter(|v| !v.is_null()).cloned(),
            inputs,
        })
    }

    /// Row label: the perturbation label, or "No perturbation".
    pub fn label(&self) -> String {
        self.perturbation
            .as_ref()
            .and_then(|p| p.get("label"))
            .and_then(Value::as_str)
            .unwrap_or(NO_PERTURBATION)
            .to_string()
    }

    pub fn input(&self, role: &str) -> Option<&InputDigest> {
        self.inputs.iter().find(|d| d.role == role)
    }

    /// Rsum as written to the report file (sum of rounded recalls).
    pub fn reported_rsum(&self, direction: Direction) -> f64 {
        let m = match direction {
            Direction::I2t => &self.i2t,
            Direction::T2i => &self.t2i,
        };
        round2(m.recall.iter().map(|(_, r)| round2(*r)).sum())
    }
}

pub const NO_PERTURBATION: &str = "No perturbation";

/// Text table with one row per report: recalls and DCG for i2t and t2i,
/// then the two rsums.
pub fn format_table2(rows: &[(&str, &EvalReport)]) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let ks = &first.config.ks;
    let mut header = vec!["Run".to_string()];
    for dir in Direction::BOTH {
        for k in ks {
            header.push(format!("{dir} R@{k}"));
        }
        header.push(format!("{dir} DCG"));
    }
    header.push("rsum i2t".into());
    header.push("rsum t2i".into());
    let mut body = Vec::new();
    for (label, r) in rows {
        let mut cells = vec![label.to_string()];
        for m in [&r.i2t, &r.t2i] {
            for (_, v) in &m.recall {
                cells.push(format!("{:.2}", round2(*v)));
            }
            cells.push(format!("{:.2}", m.dcg_cm));
        }
        cells.push(format!("{:.2}", r.reported_rsum(Direction::I2t)));
        cells.push(format!("{:.2}", r.reported_rsum(Direction::T2i)));
        body.push(cells);
    }
    render_table(&header, &body)
}

fn render_table(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header, &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in body {
        line(row, &mut out);
    }
    out
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub t2i_rsum: f64,
    pub t2i_delta: f64,
    pub i2t_rsum: f64,
    pub i2t_delta: f64,
}

/// Rsum of each report next to its change from the baseline. The baseline
/// row comes first, then the perturbed reports in the order given.
pub fn compare_reports(baseline: &EvalReport, perturbed: &[EvalReport]) -> Result<Vec<ComparisonRow>> {
    for p in perturbed {
        check_comparable(baseline, p)?;
    }
    let b_t2i = baseline.reported_rsum(Direction::T2i);
    let b_i2t = baseline.reported_rsum(Direction::I2t);
    let row = |label: String, r: &EvalReport| {
        let t2i = r.reported_rsum(Direction::T2i);
        let i2t = r.reported_rsum(Direction::I2t);
        ComparisonRow {
            label,
            t2i_rsum: t2i,
            t2i_delta: round2(t2i - b_t2i),
            i2t_rsum: i2t,
            i2t_delta: round2(i2t - b_i2t),
        }
    };
    let mut rows = vec![row(NO_PERTURBATION.to_string(), baseline)];
    rows.extend(perturbed.iter().map(|p| row(p.label(), p)));
    Ok(rows)
}

fn check_comparable(a: &EvalReport, b: &EvalReport) -> Result<()> {
    let mismatch = |what: &str, x: String, y: String| Err(Error::Metadata(format!("{what} differs: {x} vs {y}")));
    if a.dataset != b.dataset {
        return mismatch("dataset", a.dataset.clone(), b.dataset.clone());
    }
    if a.split != b.split {
        return mismatch("split", a.split.to_string(), b.split.to_string());
    }
    if a.config != b.config {
        return mismatch(
            "metric configuration",
            format!("{:?}", a.config),
            format!("{:?}", b.config),
        );
    }
    if (a.images, a.captions) != (b.images, b.captions) {
        return mismatch(
            "corpus size",
            format!("{}/{}", a.images, a.captions),
            format!("{}/{}", b.images, b.captions),
        );
    }
    if let (Some(x), Some(y)) = (a.input("image_emb"), b.input("image_emb")) {
        if x.sha256 != y.sha256 {
            return mismatch("image embeddings", x.file.clone(), y.file.clone());
        }
    }
    Ok(())
}

/// Renders comparison rows as an aligned table.
pub fn format_comparison_table(rows: &[ComparisonRow]) -> String {
    let header: Vec<String> = ["Perturbation", "t2i rsum", "Δ t2i", "i2t rsum", "Δ i2t"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                format!("{:.2}", r.t2i_rsum),
                format!("{:+.2}", r.t2i_delta),
                format!("{:.2}", r.i2t_rsum),
                format!("{:+.2}", r.i2t_delta),
            ]
        })
        .collect();
    render_table(&header, &body)
}

/// Renders comparison rows as CSV.
pub fn format_comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("perturbation,t2i_rsum,t2i_delta,i2t_rsum,i2t_delta\n");
    for r in rows {
        let label = if r.label.contains([',', '"']) {
            format!("\"{}\"", r.label.replace('"', "\"\""))
        } else {
            r.label.clone()
        };
        let _ = writeln!(
            s,
            "{label},{:.2},{:.2},{:.2},{:.2}",
            r.t2i_rsum, r.t2i_delta, r.i2t_rsum, r.i2t_delta
        );
    }
    s
}

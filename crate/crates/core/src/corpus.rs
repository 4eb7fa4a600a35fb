//! Karpathy-format caption annotations.
//!
//! The annotation document has a top-level `images` array. Each image carries
//! a `split` (`train`, `restval`, `val`, `test`), a `filename` (optionally with
//! a `filepath` directory), an optional numeric `imgid`, and `sentences`, each
//! with a `raw` caption string, optional `tokens`, and an optional `sentid`.
//! Unknown fields are ignored on load and preserved on rewrite.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

use crate::lingo;

/// Number of captions per image in the standard datasets.
pub const STANDARD_CAPTIONS_PER_IMAGE: usize = 5;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("{path}: {location}: {message}")]
    Schema {
        path: String,
        location: String,
        message: String,
    },
    #[error("unknown split selector {0:?} (expected train, val or test)")]
    UnknownSplit(String),
    #[error("{path}: no images in split {split}")]
    EmptySplit { path: String, split: Split },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown id {0:?}")]
    UnknownId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Test => "test",
        }
    }

    /// Maps an annotation file's `split` value. `restval` belongs to train.
    fn from_file_value(s: &str) -> Option<Split> {
        match s {
            "train" | "restval" => Some(Split::Train),
            "val" | "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(CorpusError::UnknownSplit(s.to_string())),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Retrieval direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Image query, caption candidates.
    I2t,
    /// Caption query, image candidates.
    T2i,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::I2t, Direction::T2i];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::I2t => "i2t",
            Direction::T2i => "t2i",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caption {
    pub caption_id: String,
    pub image_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTextTuple {
    pub image_id: String,
    /// Opaque locator; never opened by this crate.
    pub image_uri: String,
    pub captions: Vec<Caption>,
}

/// Images and captions of one split. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dataset_name: String,
    pub split: Split,
    tuples: Vec<ImageTextTuple>,
    image_index: HashMap<String, usize>,
    caption_index: HashMap<String, (usize, usize)>,
}

impl Corpus {
    /// Validates id uniqueness and non-empty captions.
    pub fn new(
        dataset_name: impl Into<String>,
        split: Split,
        tuples: Vec<ImageTextTuple>,
    ) -> Result<Self, CorpusError> {
        let mut image_index = HashMap::with_capacity(tuples.len());
        let mut caption_index = HashMap::new();
        for (i, t) in tuples.iter().enumerate() {
            if image_index.insert(t.image_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(t.image_id.clone()));
            }
            if t.captions.is_empty() {
                return Err(CorpusError::Schema {
                    path: dataset_name_hint(&t.image_id),
                    location: format!("image {}", t.image_id),
                    message: "image has no captions".into(),
                });
            }
            for (j, c) in t.captions.iter().enumerate() {
                if c.text.trim().is_empty() {
                    return Err(CorpusError::Schema {
                        path: dataset_name_hint(&t.image_id),
                        location: format!("caption {}", c.caption_id),
                        message: "caption text is empty".into(),
                    });
                }
                if caption_index.insert(c.caption_id.clone(), (i, j)).is_some() {
                    return Err(CorpusError::DuplicateId(c.caption_id.clone()));
                }
            }
            if t.captions.len() != STANDARD_CAPTIONS_PER_IMAGE {
                log::warn!(
                    "image {} has {} captions (expected {})",
                    t.image_id,
                    t.captions.len(),
                    STANDARD_CAPTIONS_PER_IMAGE
                );
            }
        }
        Ok(Self {
            dataset_name: dataset_name.into(),
            split,
            tuples,
            image_index,
            caption_index,
        })
    }

    pub fn tuples(&self) -> &[ImageTextTuple] {
        &self.tuples
    }

    pub fn num_images(&self) -> usize {
        self.tuples.len()
    }

    pub fn num_captions(&self) -> usize {
        self.caption_index.len()
    }

    /// All captions in file order.
    pub fn captions(&self) -> impl Iterator<Item = &Caption> {
        self.tuples.iter().flat_map(|t| t.captions.iter())
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.tuples.iter().map(|t| t.image_id.as_str())
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageTextTuple> {
        self.image_index.get(image_id).map(|&i| &self.tuples[i])
    }

    pub fn caption(&self, caption_id: &str) -> Option<&Caption> {
        self.caption_index
            .get(caption_id)
            .map(|&(i, j)| &self.tuples[i].captions[j])
    }

    /// Image owning `caption_id`.
    pub fn owner(&self, caption_id: &str) -> Option<&str> {
        self.caption(caption_id).map(|c| c.image_id.as_str())
    }

    /// Images whose caption count differs from the standard five.
    pub fn irregular_images(&self) -> Vec<&str> {
        self.tuples
            .iter()
            .filter(|t| t.captions.len() != STANDARD_CAPTIONS_PER_IMAGE)
            .map(|t| t.image_id.as_str())
            .collect()
    }

    /// Relevant candidate ids for a query.
    ///
    /// For [`Direction::I2t`] the query is an image id and the result is the
    /// ids of all its captions; for [`Direction::T2i`] the query is a caption
    /// id and the result is the single owning image id.
    pub fn ground_truth(&self, query_id: &str, direction: Direction) -> Result<Vec<&str>, CorpusError> {
        match direction {
            Direction::I2t => self
                .image(query_id)
                .map(|t| t.captions.iter().map(|c| c.caption_id.as_str()).collect())
                .ok_or_else(|| CorpusError::UnknownId(query_id.to_string())),
            Direction::T2i => self
                .owner(query_id)
                .map(|img| vec![img])
                .ok_or_else(|| CorpusError::UnknownId(query_id.to_string())),
        }
    }

    /// Rebuilds the corpus with caption text replaced by `f(caption)`.
    pub fn map_text<F>(&self, f: F) -> Corpus
    where
        F: Fn(&Caption) -> String,
    {
        let tuples = self
            .tuples
            .iter()
            .map(|t| ImageTextTuple {
                image_id: t.image_id.clone(),
                image_uri: t.image_uri.clone(),
                captions: t
                    .captions
                    .iter()
                    .map(|c| Caption {
                        caption_id: c.caption_id.clone(),
                        image_id: c.image_id.clone(),
                        text: f(c),
                    })
                    .collect(),
            })
            .collect();
        Corpus {
            dataset_name: self.dataset_name.clone(),
            split: self.split,
            tuples,
            image_index: self.image_index.clone(),
            caption_index: self.caption_index.clone(),
        }
    }
}

fn dataset_name_hint(id: &str) -> String {
    format!("<corpus containing {id}>")
}

/// Reads and parses an annotation file, keeping images of `split`.
pub fn load_annotations(path: impl AsRef<Path>, split: Split) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let fallback_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_annotations(&text, &path.display().to_string(), &fallback_name, split)
}

/// Parses annotation text. `path` is used only in error messages.
pub fn parse_annotations(text: &str, path: &str, fallback_name: &str, split: Split) -> Result<Corpus, CorpusError> {
    let doc = parse_document(text, path)?;
    let dataset_name = doc
        .get("dataset")
        .and_then(Value::as_str)
        .unwrap_or(fallback_name)
        .to_string();
    let images = images_array(&doc, path)?;

    let mut tuples = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let loc = format!("images[{i}]");
        if image_split(img, path, &loc)? != Some(split) {
            continue;
        }
        let image_id = image_id_of(img, path, &loc)?;
        let image_uri = image_uri_of(img, path, &loc)?;
        let sentences = sentences_of(img, path, &loc)?;
        let mut captions = Vec::with_capacity(sentences.len());
        for (j, s) in sentences.iter().enumerate() {
            let sloc = format!("{loc}.sentences[{j}]");
            let caption_id = caption_id_of(s, &image_id, j);
            let text = sentence_text(s, path, &sloc)?;
            if text.trim().is_empty() {
                return Err(schema(path, &sloc, "caption text is empty"));
            }
            captions.push(Caption {
                caption_id,
                image_id: image_id.clone(),
                text,
            });
        }
        if captions.is_empty() {
            return Err(schema(path, &loc, "image has no sentences"));
        }
        tuples.push(ImageTextTuple {
            image_id,
            image_uri,
            captions,
        });
    }
    if tuples.is_empty() {
        return Err(CorpusError::EmptySplit {
            path: path.to_string(),
            split,
        });
    }
    Corpus::new(dataset_name, split, tuples)
}

/// Rewrites an annotation document keeping only images of `split`, with each
/// caption's `raw` text (and `tokens`, when present) replaced from
/// `replacements` keyed by caption id. All other fields are preserved.
pub fn rewrite_annotations(
    text: &str,
    path: &str,
    split: Split,
    replacements: &HashMap<String, String>,
) -> Result<String, CorpusError> {
    let mut doc = parse_document(text, path)?;
    let images = doc
        .get_mut("images")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| schema(path, "$", "missing top-level `images` array"))?;

    let mut kept = Vec::new();
    for (i, mut img) in std::mem::take(images).into_iter().enumerate() {
        let loc = format!("images[{i}]");
        if image_split(&img, path, &loc)? != Some(split) {
            continue;
        }
        let image_id = image_id_of(&img, path, &loc)?;
        let sentences = img
            .get_mut("sentences")
            .and_then(Value::as_array_mut)
            .ok_or_else(|| schema(path, &loc, "missing `sentences` array"))?;
        for (j, s) in sentences.iter_mut().enumerate() {
            let caption_id = caption_id_of(s, &image_id, j);
            if let Some(new_text) = replacements.get(&caption_id) {
                let obj = s
                    .as_object_mut()
                    .ok_or_else(|| schema(path, &format!("{loc}.sentences[{j}]"), "sentence is not an object"))?;
                obj.insert("raw".into(), Value::String(new_text.clone()));
                if obj.contains_key("tokens") {
                    obj.insert("tokens".into(), Value::from(karpathy_tokens(new_text)));
                }
            }
        }
        kept.push(img);
    }
    *doc.get_mut("images")
        .and_then(Value::as_array_mut)
        .expect("checked above") = kept;
    let mut out = serde_json::to_string(&doc).expect("serializing a JSON value");
    out.push('\n');
    Ok(out)
}

/// Lower-cased word tokens without punctuation, the shape of the `tokens`
/// field in Karpathy files.
pub fn karpathy_tokens(text: &str) -> Vec<String> {
    lingo::tokenize(text)
        .into_iter()
        .filter(|t| !t.is_punct())
        .map(|t| t.lower)
        .collect()
}

fn parse_document(text: &str, path: &str) -> Result<Value, CorpusError> {
    serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        path: path.to_string(),
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn schema(path: &str, location: &str, message: &str) -> CorpusError {
    CorpusError::Schema {
        path: path.to_string(),
        location: location.to_string(),
        message: message.to_string(),
    }
}

fn images_array<'a>(doc: &'a Value, path: &str) -> Result<&'a Vec<Value>, CorpusError> {
    doc.get("images")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(path, "$", "missing top-level `images` array"))
}

fn image_split(img: &Value, path: &str, loc: &str) -> Result<Option<Split>, CorpusError> {
    let s = img
        .get("split")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(path, loc, "missing string field `split`"))?;
    Ok(Split::from_file_value(s))
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn image_id_of(img: &Value, path: &str, loc: &str) -> Result<String, CorpusError> {
    if let Some(id) = img.get("imgid").and_then(id_string) {
        return Ok(id);
    }
    img.get("filename")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| schema(path, loc, "image needs `imgid` or `filename`"))
}

fn image_uri_of(img: &Value, path: &str, loc: &str) -> Result<String, CorpusError> {
    let filename = img
        .get("filename")
        .and_then(Value::as_str)
        .or_else(|| img.get("filepath").and_then(Value::as_str))
        .ok_or_else(|| schema(path, loc, "missing `filename`"))?;
    Ok(match img.get("filepath").and_then(Value::as_str) {
        Some(dir) if img.get("filename").is_some() && !dir.is_empty() => format!("{dir}/{filename}"),
        _ => filename.to_string(),
    })
}

fn sentences_of<'a>(img: &'a Value, path: &str, loc: &str) -> Result<&'a Vec<Value>, CorpusError> {
    img.get("sentences")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(path, loc, "missing `sentences` array"))
}

/// `sentid` when present, else `<image_id>#<ordinal>`.
fn caption_id_of(sentence: &Value, image_id: &str, ordinal: usize) -> String {
    sentence
        .get("sentid")
        .and_then(id_string)
        .unwrap_or_else(|| format!("{image_id}#{ordinal}"))
}

fn sentence_text(s: &Value, path: &str, loc: &str) -> Result<String, CorpusError> {
    if let Some(raw) = s.get("raw").and_then(Value::as_str) {
        return Ok(raw.to_string());
    }
    if let Some(tokens) = s.get("tokens").and_then(Value::as_array) {
        let words: Option<Vec<&str>> = tokens.iter().map(Value::as_str).collect();
        if let Some(words) = words {
            return Ok(words.join(" "));
        }
    }
    Err(schema(path, loc, "sentence needs `raw` text or a `tokens` list"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> &'static str {
        r#"{"dataset":"toy","images":[
          {"split":"test","filepath":"val2014","filename":"a.jpg","imgid":0,
           "sentences":[{"raw":"A red rose.","sentid":10,"tokens":["a","red","rose"]},{"raw":"a flower","sentid":11},
                        {"raw":"a","sentid":12},{"raw":"b","sentid":13},{"raw":"c","sentid":14}]},
          {"split":"train","filename":"b.jpg","imgid":1,"sentences":[{"raw":"x"}]},
          {"split":"test","filename":"c.jpg","sentences":[{"tokens":["two","dogs"]},{"raw":"d"},{"raw":"e"},{"raw":"f"},{"raw":"g"}],"extra":true}
        ]}"#
    }

    #[test]
    fn split_filter_and_ids() {
        let c = parse_annotations(fixture(), "f.json", "f", Split::Test).unwrap();
        assert_eq!(c.dataset_name, "toy");
        assert_eq!(c.num_images(), 2);
        assert_eq!(c.num_captions(), 10);
        let first = &c.tuples()[0];
        assert_eq!(first.image_id, "0");
        assert_eq!(first.image_uri, "val2014/a.jpg");
        assert_eq!(first.captions[0].caption_id, "10");
        let second = &c.tuples()[1];
        assert_eq!(second.image_id, "c.jpg");
        assert_eq!(second.captions[0].caption_id, "c.jpg#0");
        assert_eq!(second.captions[0].text, "two dogs");

        let train = parse_annotations(fixture(), "f.json", "f", Split::Train).unwrap();
        assert_eq!(train.num_images(), 1);
        assert_eq!(train.irregular_images(), vec!["1"]);
    }

    #[test]
    fn empty_split_is_an_error() {
        let e = parse_annotations(fixture(), "f.json", "f", Split::Validation).unwrap_err();
        assert!(matches!(e, CorpusError::EmptySplit { .. }));
    }

    #[test]
    fn unknown_split_selector() {
        assert!(matches!("dev".parse::<Split>(), Err(CorpusError::UnknownSplit(_))));
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Validation);
        assert_eq!("TEST".parse::<Split>().unwrap(), Split::Test);
    }

    #[test]
    fn malformed_json_reports_byte_offset() {
        let text = "{\"images\": [\n  {\"split\": \"test\",, }\n]}";
        match parse_annotations(text, "bad.json", "bad", Split::Test).unwrap_err() {
            CorpusError::Parse { offset, .. } => {
                assert_eq!(&text[offset..offset + 1], ",");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_images_is_schema_error() {
        let e = parse_annotations("{}", "x", "x", Split::Test).unwrap_err();
        assert!(matches!(e, CorpusError::Schema { .. }));
    }

    #[test]
    fn duplicate_caption_ids_rejected() {
        let text = r#"{"images":[{"split":"test","filename":"a","sentences":[{"raw":"x","sentid":1},{"raw":"y","sentid":1}]}]}"#;
        let e = parse_annotations(text, "x", "x", Split::Test).unwrap_err();
        assert!(matches!(e, CorpusError::DuplicateId(id) if id == "1"));
    }

    #[test]
    fn ground_truth_both_directions() {
        let c = parse_annotations(fixture(), "f.json", "f", Split::Test).unwrap();
        let gt = c.ground_truth("0", Direction::I2t).unwrap();
        assert_eq!(gt, vec!["10", "11", "12", "13", "14"]);
        assert_eq!(c.ground_truth("11", Direction::T2i).unwrap(), vec!["0"]);
        for cap in c.captions() {
            let owner = c.owner(&cap.caption_id).unwrap();
            assert!(c
                .ground_truth(owner, Direction::I2t)
                .unwrap()
                .contains(&cap.caption_id.as_str()));
        }
        assert!(matches!(
            c.ground_truth("nope", Direction::T2i),
            Err(CorpusError::UnknownId(_))
        ));
    }

    #[test]
    fn rewrite_replaces_raw_and_tokens_only() {
        let mut rep = HashMap::new();
        rep.insert("10".to_string(), "A rose red.".to_string());
        let out = rewrite_annotations(fixture(), "f", Split::Test, &rep).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        let imgs = v["images"].as_array().unwrap();
        assert_eq!(imgs.len(), 2);
        assert_eq!(imgs[0]["sentences"][0]["raw"], "A rose red.");
        assert_eq!(
            imgs[0]["sentences"][0]["tokens"],
            serde_json::json!(["a", "rose", "red"])
        );
        assert_eq!(imgs[1]["extra"], true);
        let reloaded = parse_annotations(&out, "f", "f", Split::Test).unwrap();
        assert_eq!(reloaded.caption("10").unwrap().text, "A rose red.");
        assert_eq!(reloaded.num_captions(), 10);
    }
}

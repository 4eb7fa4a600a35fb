//! Experiment commands: granularity profiling, perturbation, evaluation,
//! comparison and synthetic embedding generation.
//!
//! Every command writes into an output directory and records its inputs by
//! base name and SHA-256, never by absolute path or time, so reruns with the
//! same inputs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::corpus::{load_annotations, rewrite_annotations, Corpus, Direction, Split};
use crate::embedstore::{read_embeddings, write_embeddings};
use crate::error::{Error, Result};
use crate::granularity::{format_table1, profile_corpus, GranularityProfile};
use crate::lingo::WordNetDb;
use crate::metrics::{
    compare_reports, evaluate, format_comparison_csv, format_comparison_table, format_table2, EvalConfig, EvalReport,
    InputDigest,
};
use crate::perturb::{perturb_corpus, PerturbationKind, PerturbationSpec};
use crate::retrieval::format_results;
use crate::synthetic;

pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.txt";
pub const GRANULARITY_FILE: &str = "granularity.json";
pub const GRANULARITY_TABLE_FILE: &str = "granularity.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn base_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Digest of one file under a role name.
pub fn digest_file(role: &str, path: &Path) -> Result<InputDigest> {
    Ok(InputDigest {
        role: role.to_string(),
        file: base_name(path),
        sha256: sha256_hex(&read_bytes(path)?),
    })
}

/// Digest of a WordNet directory: SHA-256 over the sorted names and
/// contents of its database files.
pub fn digest_wordnet_dir(dir: &Path) -> Result<InputDigest> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("data.") || n.starts_with("index.") || n.ends_with(".exc"))
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for n in &names {
        h.update((n.len() as u64).to_le_bytes());
        h.update(n.as_bytes());
        let bytes = read_bytes(&dir.join(n))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(InputDigest {
        role: "wordnet".into(),
        file: base_name(dir),
        sha256: hex::encode(h.finalize()),
    })
}

fn digest_json(d: &InputDigest) -> Value {
    json!({"file": d.file, "sha256": d.sha256})
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializing a JSON value");
    s.push('\n');
    s
}

fn load_wordnet(dir: &Path) -> Result<WordNetDb> {
    let db = WordNetDb::load(dir)?;
    log::info!(
        "loaded WordNet from {}: {} noun synsets",
        dir.display(),
        db.synsets(crate::PosClass::Noun).len()
    );
    Ok(db)
}

#[derive(Debug, Clone)]
pub struct GranularityArgs {
    pub annotations: PathBuf,
    pub split: Split,
    pub wordnet: PathBuf,
    pub compare: Option<PathBuf>,
    pub out: PathBuf,
}

/// Profiles one or two corpora; writes `granularity.json` and a side-by-side
/// text table. Returns the profiles in argument order.
pub fn cmd_granularity(args: &GranularityArgs) -> Result<Vec<(String, GranularityProfile)>> {
    ensure_dir(&args.out)?;
    let db = load_wordnet(&args.wordnet)?;
    let mut paths = vec![&args.annotations];
    paths.extend(args.compare.iter());
    let mut corpora_json = Vec::new();
    let mut profiles = Vec::new();
    for path in paths {
        let corpus = load_annotations(path, args.split)?;
        let profile = profile_corpus(&corpus, &db)?;
        corpora_json.push(json!({
            "dataset": corpus.dataset_name,
            "split": corpus.split.as_str(),
            "annotations": digest_json(&digest_file("annotations", path)?),
            "profile": profile,
        }));
        profiles.push((corpus.dataset_name.clone(), profile));
    }
    let doc = json!({
        "wordnet": digest_json(&digest_wordnet_dir(&args.wordnet)?),
        "corpora": corpora_json,
    });
    write_file(&args.out.join(GRANULARITY_FILE), pretty(&doc).as_bytes())?;
    let columns: Vec<(&str, &GranularityProfile)> = profiles.iter().map(|(n, p)| (n.as_str(), p)).collect();
    write_file(
        &args.out.join(GRANULARITY_TABLE_FILE),
        format_table1(&columns).as_bytes(),
    )?;
    Ok(profiles)
}

#[derive(Debug, Clone)]
pub struct PerturbArgs {
    pub annotations: PathBuf,
    pub split: Split,
    pub kind: PerturbationKind,
    pub seed: u64,
    pub k: usize,
    pub rate: Option<f64>,
    pub wordnet: Option<PathBuf>,
    /// File with one distraction clause per line.
    pub pool: Option<PathBuf>,
    pub out: PathBuf,
}

/// Paths written by [`cmd_perturb`].
#[derive(Debug, Clone)]
pub struct PerturbOutputs {
    pub annotations: PathBuf,
    pub manifest: PathBuf,
    pub changed: usize,
    pub total: usize,
}

/// Reads a distraction pool file: one clause per non-blank line.
pub fn read_pool(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Perturbs a split and writes `<stem>.<kind>.json` (annotation format)
/// and `<stem>.<kind>.manifest.json`.
pub fn cmd_perturb(args: &PerturbArgs) -> Result<PerturbOutputs> {
    let mut spec = PerturbationSpec::new(args.kind, args.seed);
    spec.k = args.k;
    spec.rate = args.rate;
    if let Some(p) = &args.pool {
        spec.pool = read_pool(p)?;
    }
    spec.validate()?;
    if args.kind.needs_wordnet() && args.wordnet.is_none() {
        return Err(Error::Usage(format!("--wordnet is required for --kind {}", args.kind)));
    }
    ensure_dir(&args.out)?;
    let db = args.wordnet.as_deref().map(load_wordnet).transpose()?;
    let source_text = read_text(&args.annotations)?;
    let corpus = load_annotations(&args.annotations, args.split)?;
    let perturbed = perturb_corpus(&corpus, &spec, db.as_ref())?;
    let rewritten = rewrite_annotations(
        &source_text,
        &args.annotations.display().to_string(),
        args.split,
        &perturbed.replacements(),
    )?;

    let stem = args
        .annotations
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "annotations".into());
    let ann_path = args.out.join(format!("{stem}.{}.json", args.kind.tag()));
    let manifest_path = args.out.join(format!("{stem}.{}.manifest.json", args.kind.tag()));
    write_file(&ann_path, rewritten.as_bytes())?;

    let mut manifest = perturbed.summary();
    let m = manifest.as_object_mut().expect("summary is an object");
    m.insert("dataset".into(), json!(corpus.dataset_name));
    m.insert("split".into(), json!(corpus.split.as_str()));
    m.insert(
        "source".into(),
        json!({"file": base_name(&args.annotations), "sha256": sha256_hex(source_text.as_bytes())}),
    );
    m.insert(
        "annotations".into(),
        json!({"file": base_name(&ann_path), "sha256": sha256_hex(rewritten.as_bytes())}),
    );
    m.insert(
        "wordnet".into(),
        match &args.wordnet {
            Some(dir) => digest_json(&digest_wordnet_dir(dir)?),
            None => Value::Null,
        },
    );
    write_file(&manifest_path, pretty(&manifest).as_bytes())?;
    Ok(PerturbOutputs {
        annotations: ann_path,
        manifest: manifest_path,
        changed: perturbed.changed_count(),
        total: perturbed.captions.len(),
    })
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub annotations: PathBuf,
    pub split: Split,
    pub text_emb: PathBuf,
    pub image_emb: PathBuf,
    pub config: EvalConfig,
    /// Manifest written by `perturb`; requires `perturbed_text_emb`.
    pub perturbation_manifest: Option<PathBuf>,
    /// Text embeddings of the perturbed captions.
    pub perturbed_text_emb: Option<PathBuf>,
    pub out: PathBuf,
}

/// Fields of a perturbation manifest carried into an evaluation report.
const MANIFEST_REPORT_FIELDS: [&str; 8] = ["kind", "label", "seed", "k", "rate", "pool", "changed_count", "total"];

/// Evaluates both directions and writes `report.json`, `table.txt`,
/// `results_i2t.tsv` and `results_t2i.tsv`.
///
/// A perturbed run takes the manifest and the perturbed text embeddings
/// together. It is refused when the perturbed embeddings are byte-identical
/// to the baseline ones, or when the annotation file is neither the
/// manifest's source nor its output.
pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    args.config.validate()?;
    let ann = digest_file("annotations", &args.annotations)?;
    let baseline_text = digest_file("text_emb", &args.text_emb)?;
    let image = digest_file("image_emb", &args.image_emb)?;

    let mut inputs = vec![ann.clone()];
    let mut perturbation = None;
    let text_path = match (&args.perturbation_manifest, &args.perturbed_text_emb) {
        (None, None) => {
            inputs.push(baseline_text);
            &args.text_emb
        }
        (Some(_), None) => {
            return Err(Error::Usage(
                "--perturbation-manifest needs --perturbed-text-emb; perturbed captions must be re-embedded".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(Error::Usage(
                "--perturbed-text-emb needs --perturbation-manifest".into(),
            ))
        }
        (Some(manifest_path), Some(pert_path)) => {
            let pert = digest_file("text_emb", pert_path)?;
            if pert.sha256 == baseline_text.sha256 {
                return Err(Error::Usage(
                    "perturbed text embeddings are identical to the baseline text embeddings".into(),
                ));
            }
            let manifest: Value = serde_json::from_str(&read_text(manifest_path)?).map_err(|source| Error::Json {
                path: manifest_path.display().to_string(),
                source,
            })?;
            let sha_of = |key: &str| manifest.get(key).and_then(|v| v.get("sha256")).and_then(Value::as_str);
            if sha_of("source") != Some(ann.sha256.as_str()) && sha_of("annotations") != Some(ann.sha256.as_str()) {
                return Err(Error::Metadata(format!(
                    "{} is neither the source nor the output of perturbation manifest {}",
                    ann.file,
                    base_name(manifest_path)
                )));
            }
            let mut summary = serde_json::Map::new();
            for key in MANIFEST_REPORT_FIELDS {
                summary.insert(key.into(), manifest.get(key).cloned().unwrap_or(Value::Null));
            }
            if summary.get("label").and_then(Value::as_str).is_none() {
                return Err(Error::Metadata(format!(
                    "{} has no perturbation label",
                    base_name(manifest_path)
                )));
            }
            perturbation = Some(Value::Object(summary));
            inputs.push(pert);
            inputs.push(InputDigest {
                role: "baseline_text_emb".into(),
                ..baseline_text
            });
            inputs.push(digest_file("perturbation_manifest", manifest_path)?);
            pert_path
        }
    };
    inputs.push(image);

    let corpus = load_annotations(&args.annotations, args.split)?;
    let text = read_embeddings(text_path)?;
    let image = read_embeddings(&args.image_emb)?;
    let mut evaluation = evaluate(&corpus, &text, &image, &args.config)?;
    evaluation.report.perturbation = perturbation;
    evaluation.report.inputs = inputs;
    let report = evaluation.report;

    ensure_dir(&args.out)?;
    write_file(&args.out.join(REPORT_FILE), report.to_json().as_bytes())?;
    let label = format!("{} ({})", report.dataset, report.label());
    write_file(
        &args.out.join(TABLE_FILE),
        format_table2(&[(&label, &report)]).as_bytes(),
    )?;
    for (dir, lists) in [(Direction::I2t, &evaluation.i2t), (Direction::T2i, &evaluation.t2i)] {
        write_file(
            &args.out.join(format!("results_{dir}.tsv")),
            format_results(lists).as_bytes(),
        )?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareFormat {
    Table,
    Csv,
}

impl std::str::FromStr for CompareFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Usage(format!(
                "unknown format {other:?} (expected table or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub baseline: PathBuf,
    pub perturbed: Vec<PathBuf>,
    pub format: CompareFormat,
    pub out: PathBuf,
}

fn load_report(path: &Path) -> Result<EvalReport> {
    EvalReport::from_json(&read_text(path)?).map_err(|m| Error::Metadata(format!("{}: {m}", path.display())))
}

/// Writes `comparison.txt` or `comparison.csv` and returns its contents.
pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let baseline = load_report(&args.baseline)?;
    let perturbed = args
        .perturbed
        .iter()
        .map(|p| load_report(p))
        .collect::<Result<Vec<_>>>()?;
    let rows = compare_reports(&baseline, &perturbed)?;
    let (name, body) = match args.format {
        CompareFormat::Table => ("comparison.txt", format_comparison_table(&rows)),
        CompareFormat::Csv => ("comparison.csv", format_comparison_csv(&rows)),
    };
    ensure_dir(&args.out)?;
    write_file(&args.out.join(name), body.as_bytes())?;
    Ok(body)
}

#[derive(Debug, Clone)]
pub struct SynthEmbedArgs {
    pub annotations: PathBuf,
    pub split: Split,
    pub dim: usize,
    pub seed: u64,
    pub out_text: PathBuf,
    pub out_image: Option<PathBuf>,
}

/// Writes synthetic text (and optionally image) EMBD files for a split.
pub fn cmd_synth_embed(args: &SynthEmbedArgs) -> Result<Corpus> {
    if args.dim == 0 {
        return Err(Error::Usage("--dim must be at least 1".into()));
    }
    let corpus = load_annotations(&args.annotations, args.split)?;
    write_embeddings(
        &args.out_text,
        &synthetic::text_embeddings(&corpus, args.dim, args.seed),
    )?;
    if let Some(p) = &args.out_image {
        write_embeddings(p, &synthetic::image_embeddings(&corpus, args.dim, args.seed))?;
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn compare_format_parse() {
        assert_eq!("csv".parse::<CompareFormat>().unwrap(), CompareFormat::Csv);
        assert!("xml".parse::<CompareFormat>().is_err());
    }
}

//! `itrbench` command-line interface.
//!
//! Every subcommand flag may also be given in a TOML file passed with
//! `--config`, under a table named after the subcommand (`[eval]`,
//! `[perturb]`, ...). Flags given on the command line win. Relative paths in
//! the config file are resolved against the file's directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use itrbench::harness::{
    cmd_compare, cmd_eval, cmd_granularity, cmd_perturb, cmd_synth_embed, CompareArgs, CompareFormat, EvalArgs,
    GranularityArgs, PerturbArgs, SynthEmbedArgs,
};
use itrbench::{Error, EvalConfig, PerturbationKind, Split};

#[derive(Parser, Debug)]
#[command(name = "itrbench", version, about = "Image-text retrieval robustness workbench")]
struct Cli {
    /// TOML file with default values for subcommand flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Profile caption granularity of one corpus, or two side by side.
    Granularity(GranularityCli),
    /// Write a perturbed copy of an annotation file plus a manifest.
    Perturb(PerturbCli),
    /// Evaluate bidirectional retrieval from precomputed embeddings.
    Eval(EvalCli),
    /// Tabulate rsum of perturbed runs against a baseline report.
    Compare(CompareCli),
    /// Write deterministic synthetic embeddings for an annotation file.
    SynthEmbed(SynthEmbedCli),
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct GranularityCli {
    /// Karpathy-format annotation JSON.
    #[arg(long, value_name = "FILE")]
    annotations: Option<PathBuf>,
    /// `train`, `val` or `test`.
    #[arg(long)]
    split: Option<String>,
    /// WordNet 3.0 database directory (data.noun, index.sense, *.exc).
    #[arg(long, value_name = "DIR")]
    wordnet: Option<PathBuf>,
    /// Second annotation file profiled with the same split.
    #[arg(long, value_name = "FILE")]
    compare: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct PerturbCli {
    /// Karpathy-format annotation JSON.
    #[arg(long, value_name = "FILE")]
    annotations: Option<PathBuf>,
    /// `train`, `val` or `test`.
    #[arg(long)]
    split: Option<String>,
    /// Perturbation kind, e.g. `shuffle_all_words`, `typos`.
    #[arg(long)]
    kind: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Words replaced per caption by lexical kinds (default 1).
    #[arg(long)]
    k: Option<usize>,
    /// Fraction of eligible words hit by typo kinds (default: one word).
    #[arg(long)]
    rate: Option<f64>,
    /// WordNet 3.0 database directory (data.noun, index.sense, *.exc).
    #[arg(long, value_name = "DIR")]
    wordnet: Option<PathBuf>,
    /// Distraction clauses, one per line.
    #[arg(long, value_name = "FILE")]
    pool: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct EvalCli {
    /// Karpathy-format annotation JSON.
    #[arg(long, value_name = "FILE")]
    annotations: Option<PathBuf>,
    /// `train`, `val` or `test`.
    #[arg(long)]
    split: Option<String>,
    /// EMBD file with one row per caption.
    #[arg(long, value_name = "FILE")]
    text_emb: Option<PathBuf>,
    /// EMBD file with one row per image.
    #[arg(long, value_name = "FILE")]
    image_emb: Option<PathBuf>,
    /// Recall cut-offs (default 1,5,10).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// DCG_CM depth (default 10).
    #[arg(long)]
    dcg_p: Option<usize>,
    /// Manifest written by `perturb`; requires --perturbed-text-emb.
    #[arg(long, value_name = "FILE")]
    perturbation_manifest: Option<PathBuf>,
    /// Text embeddings of the perturbed captions.
    #[arg(long, value_name = "FILE")]
    perturbed_text_emb: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct CompareCli {
    /// `report.json` of the unperturbed run.
    #[arg(long, value_name = "FILE")]
    baseline: Option<PathBuf>,
    /// `report.json` of each perturbed run.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    perturbed: Option<Vec<PathBuf>>,
    /// `table` (default) or `csv`.
    #[arg(long)]
    format: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SynthEmbedCli {
    /// Karpathy-format annotation JSON.
    #[arg(long, value_name = "FILE")]
    annotations: Option<PathBuf>,
    /// `train`, `val` or `test`.
    #[arg(long)]
    split: Option<String>,
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caption embeddings to write.
    #[arg(long, value_name = "FILE")]
    out_text: Option<PathBuf>,
    /// Image embeddings to write; omit to write only captions.
    #[arg(long, value_name = "FILE")]
    out_image: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    granularity: GranularityCli,
    #[serde(default)]
    perturb: PerturbCli,
    #[serde(default)]
    eval: EvalCli,
    #[serde(default)]
    compare: CompareCli,
    #[serde(default, rename = "synth-embed")]
    synth_embed: SynthEmbedCli,
}

fn load_config(path: &Path) -> Result<ConfigFile, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: ConfigFile =
        toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {}", path.display(), e.message())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.resolve_paths(base);
    Ok(cfg)
}

fn rebase(p: &mut Option<PathBuf>, base: &Path) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl ConfigFile {
    fn resolve_paths(&mut self, base: &Path) {
        let g = &mut self.granularity;
        for p in [&mut g.annotations, &mut g.wordnet, &mut g.compare, &mut g.out] {
            rebase(p, base);
        }
        let p = &mut self.perturb;
        for x in [&mut p.annotations, &mut p.wordnet, &mut p.pool, &mut p.out] {
            rebase(x, base);
        }
        let e = &mut self.eval;
        for x in [
            &mut e.annotations,
            &mut e.text_emb,
            &mut e.image_emb,
            &mut e.perturbation_manifest,
            &mut e.perturbed_text_emb,
            &mut e.out,
        ] {
            rebase(x, base);
        }
        let c = &mut self.compare;
        rebase(&mut c.baseline, base);
        rebase(&mut c.out, base);
        if let Some(list) = &mut c.perturbed {
            for p in list.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        let s = &mut self.synth_embed;
        for x in [&mut s.annotations, &mut s.out_text, &mut s.out_image] {
            rebase(x, base);
        }
    }
}

/// `flag` if given, else the config value.
macro_rules! merge {
    ($cli:expr, $cfg:expr, [$($field:ident),*]) => {
        $( if $cli.$field.is_none() { $cli.$field = $cfg.$field.take(); } )*
    };
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::Usage(format!("missing required option --{flag}")))
}

fn split(v: Option<String>) -> Result<Split, Error> {
    Ok(required(v, "split")?.parse::<Split>()?)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Granularity(mut a) => {
            merge!(a, cfg.granularity, [annotations, split, wordnet, compare, out]);
            let args = GranularityArgs {
                annotations: required(a.annotations, "annotations")?,
                split: split(a.split)?,
                wordnet: required(a.wordnet, "wordnet")?,
                compare: a.compare,
                out: required(a.out, "out")?,
            };
            let profiles = cmd_granularity(&args)?;
            let cols: Vec<(&str, &itrbench::GranularityProfile)> =
                profiles.iter().map(|(n, p)| (n.as_str(), p)).collect();
            print!("{}", itrbench::granularity::format_table1(&cols));
        }
        Command::Perturb(mut a) => {
            merge!(
                a,
                cfg.perturb,
                [annotations, split, kind, seed, k, rate, wordnet, pool, out]
            );
            let args = PerturbArgs {
                annotations: required(a.annotations, "annotations")?,
                split: split(a.split)?,
                kind: required(a.kind, "kind")?.parse::<PerturbationKind>()?,
                seed: required(a.seed, "seed")?,
                k: a.k.unwrap_or(1),
                rate: a.rate,
                wordnet: a.wordnet,
                pool: a.pool,
                out: required(a.out, "out")?,
            };
            let out = cmd_perturb(&args)?;
            println!(
                "{} captions, {} changed\nannotations: {}\nmanifest: {}",
                out.total,
                out.changed,
                out.annotations.display(),
                out.manifest.display()
            );
        }
        Command::Eval(mut a) => {
            merge!(
                a,
                cfg.eval,
                [
                    annotations,
                    split,
                    text_emb,
                    image_emb,
                    k,
                    dcg_p,
                    perturbation_manifest,
                    perturbed_text_emb,
                    out
                ]
            );
            let defaults = EvalConfig::default();
            let args = EvalArgs {
                annotations: required(a.annotations, "annotations")?,
                split: split(a.split)?,
                text_emb: required(a.text_emb, "text-emb")?,
                image_emb: required(a.image_emb, "image-emb")?,
                config: EvalConfig {
                    ks: a.k.unwrap_or(defaults.ks),
                    dcg_p: a.dcg_p.unwrap_or(defaults.dcg_p),
                },
                perturbation_manifest: a.perturbation_manifest,
                perturbed_text_emb: a.perturbed_text_emb,
                out: required(a.out, "out")?,
            };
            cmd_eval(&args)?;
            let table = args.out.join(itrbench::harness::TABLE_FILE);
            print!("{}", std::fs::read_to_string(&table).map_err(|e| Error::io(&table, e))?);
        }
        Command::Compare(mut a) => {
            merge!(a, cfg.compare, [baseline, perturbed, format, out]);
            let args = CompareArgs {
                baseline: required(a.baseline, "baseline")?,
                perturbed: required(a.perturbed, "perturbed")?,
                format: a.format.as_deref().unwrap_or("table").parse::<CompareFormat>()?,
                out: required(a.out, "out")?,
            };
            print!("{}", cmd_compare(&args)?);
        }
        Command::SynthEmbed(mut a) => {
            merge!(a, cfg.synth_embed, [annotations, split, dim, seed, out_text, out_image]);
            let args = SynthEmbedArgs {
                annotations: required(a.annotations, "annotations")?,
                split: split(a.split)?,
                dim: required(a.dim, "dim")?,
                seed: required(a.seed, "seed")?,
                out_text: required(a.out_text, "out-text")?,
                out_image: a.out_image,
            };
            let corpus = cmd_synth_embed(&args)?;
            println!("{} images, {} captions", corpus.num_images(), corpus.num_captions());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut message = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let cause = s.to_string();
                if !message.contains(&cause) {
                    message.push_str(&format!("\n  caused by: {cause}"));
                }
                source = s.source();
            }
            eprintln!("error: {message}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

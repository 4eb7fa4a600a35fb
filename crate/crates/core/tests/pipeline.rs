use std::path::PathBuf;

use itrbench::corpus::load_annotations;
use itrbench::embedstore::{read_embeddings, write_embeddings};
use itrbench::metrics::{evaluate, EvalConfig, Evaluation};
use itrbench::perturb::perturb_corpus;
use itrbench::synthetic::{image_embeddings, text_embeddings};
use itrbench::{Corpus, PerturbationKind, PerturbationSpec, Split};

fn golden() -> Corpus {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden/annotations.json");
    load_annotations(path, Split::Test).unwrap()
}

fn run(corpus: &Corpus, texts_from: &Corpus) -> Evaluation {
    let text = text_embeddings(texts_from, 32, 7);
    let image = image_embeddings(corpus, 32, 7);
    evaluate(corpus, &text, &image, &EvalConfig::default()).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn baseline_scores_on_the_golden_corpus() {
    let c = golden();
    assert_eq!((c.num_images(), c.num_captions()), (8, 40));
    let e = run(&c, &c);
    assert_eq!(e.report.i2t.rsum(), 300.0);
    assert_eq!(e.report.t2i.rsum(), 285.0);
    assert_eq!(e.report.t2i.recall_at(1), Some(85.0));
    assert_eq!(e.i2t.len(), 8);
    assert_eq!(e.t2i.len(), 40);
    assert!(e.t2i.iter().all(|l| l.entries.len() == 8));
}

#[test]
fn shuffling_every_word_lowers_rsum() {
    let c = golden();
    let spec = PerturbationSpec::new(PerturbationKind::ShuffleAllWords, 42);
    let p = perturb_corpus(&c, &spec, None).unwrap();
    assert_eq!(p.changed_count(), 40);
    let base = run(&c, &c);
    let shuffled = run(&c, &p.corpus);
    assert!(shuffled.report.t2i.rsum() < base.report.t2i.rsum());
    assert!(shuffled.report.i2t.rsum() < base.report.i2t.rsum());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let c = golden();
    let spec = PerturbationSpec::new(PerturbationKind::Typos, 9);
    let one = in_pool(1, || {
        (run(&c, &c).report, perturb_corpus(&c, &spec, None).unwrap().captions)
    });
    let four = in_pool(4, || {
        (run(&c, &c).report, perturb_corpus(&c, &spec, None).unwrap().captions)
    });
    assert_eq!(one, four);
}

#[test]
fn embeddings_survive_a_file_round_trip() {
    let c = golden();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("text.embd");
    let m = text_embeddings(&c, 16, 1);
    write_embeddings(&path, &m).unwrap();
    assert_eq!(read_embeddings(&path).unwrap(), m);
}

//! The command-line interface and its exit codes.

mod common;

use std::fs;

use common::*;

#[test]
fn ingest_reports_counts_and_writes_folds() {
    let ws = Workspace::with_folds(120, 8, false);
    let data = ws.path("reviews.csv");
    let o = cli(&["ingest", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pos = ws.reviews.iter().filter(|r| r.polarity == 1).count();
    assert!(
        stdout(&o).contains(&format!("documents 120 ({} negative, {pos} positive)", 120 - pos)),
        "{}",
        stdout(&o)
    );
    assert!(stdout(&o).contains("folds     none"));

    let out = ws.path("assigned.csv");
    let o = cli(&[
        "ingest",
        data.to_str().unwrap(),
        "--assign-folds",
        "4",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("folds     4 [30 30 30 30]"), "{}", stdout(&o));
    let again = cli(&["ingest", out.to_str().unwrap(), "--id-column", "id", "--folds", "4"]);
    assert!(stdout(&again).contains("[30 30 30 30]"), "{}", stdout(&again));
}

#[test]
fn ingest_schema_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.tsv");
    fs::write(&path, "texto\tnota\nbom demais\t1\nruim\t0\n\t1\nok\t7\n").unwrap();
    let p = path.to_str().unwrap();
    let strict = cli(&[
        "ingest",
        p,
        "--delimiter",
        "\t",
        "--text-column",
        "texto",
        "--polarity-column",
        "nota",
    ]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("row 3"), "{}", stderr(&strict));
    let lenient = cli(&[
        "ingest",
        p,
        "--delimiter",
        "\t",
        "--text-column",
        "texto",
        "--polarity-column",
        "nota",
        "--skip-invalid-rows",
    ]);
    assert!(stdout(&lenient).contains("documents 2"), "{}", stdout(&lenient));
    assert!(stdout(&lenient).contains("skipped   2"));
}

#[test]
fn prep_writes_vocabulary_and_tokens() {
    let ws = Workspace::new(60, 1);
    let vocab = ws.path("vocab.txt");
    let tokens = ws.path("tokens.tsv");
    let o = cli(&[
        "prep",
        ws.path("reviews.csv").to_str().unwrap(),
        "--vocab-out",
        vocab.to_str().unwrap(),
        "--min-count",
        "1",
        "--ngram-max",
        "2",
        "--tokens-out",
        tokens.to_str().unwrap(),
        "--vectors",
        ws.path("vectors.vec").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("documents 60"));
    assert!(text.contains("coverage  "), "{text}");
    let vocab_text = fs::read_to_string(vocab).unwrap();
    assert!(vocab_text.starts_with("#N=60\n"));
    assert!(
        vocab_text.lines().any(|l| l.split('\t').next().unwrap().contains(' ')),
        "no bigrams"
    );
    let lines = fs::read_to_string(tokens).unwrap();
    assert_eq!(lines.lines().count(), 60);
    // bag-of-words mode strips accents and punctuation
    assert!(!lines.contains('ã') && !lines.contains(','));
}

#[test]
fn run_prints_the_summary() {
    let ws = Workspace::new(80, 2);
    let out = ws.path("out");
    let o = cli(&[
        "run",
        ws.config("bow", TFIDF).to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), fs::read_to_string(out.join("summary.txt")).unwrap());
    assert!(stdout(&o).contains("folds    10 ok, 0 failed"));
}

#[test]
fn config_errors_exit_2_before_any_output() {
    let ws = Workspace::new(40, 3);
    let cases = [
        ("family = \"word2vec\"\n", "unknown variant"),
        ("family = \"tfidf\"\nhidden_size = 3\n", "hidden_size"),
        ("family = \"avg_bowv\"\nvectors = \"missing.vec\"\n", "does not exist"),
        ("family = \"lsa\"\ncomponents = 0\n", "components"),
    ];
    for (i, (pipeline, needle)) in cases.iter().enumerate() {
        let out = ws.path(&format!("out{i}"));
        let o = cli(&[
            "run",
            ws.config("bad", pipeline).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "{pipeline}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{pipeline}: {}", stderr(&o));
        assert!(!out.exists());
    }
}

#[test]
fn invalid_worker_override_is_a_config_error() {
    let ws = Workspace::new(40, 3);
    let o = bin()
        .env("REVEMBED_WORKERS", "zero")
        .args([
            "run",
            ws.config("bow", TFIDF).to_str().unwrap(),
            "--out",
            ws.path("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("REVEMBED_WORKERS"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["compare"]).status.code(), Some(2));
    assert_eq!(cli(&["compare", "x.csv", "--metric", "mcc"]).status.code(), Some(2));
}

#[test]
fn a_failed_fold_exits_1_and_is_reported() {
    let ws = Workspace::new(100, 4);
    // fold 3 keeps only positive reviews, so its ROC-AUC is undefined
    let mut csv = String::from("review_text,polarity,kfold\n");
    for (i, r) in ws.reviews.iter().enumerate() {
        let fold = if r.polarity == 1 && i % 4 == 0 {
            3
        } else if i % 9 == 3 {
            4
        } else {
            i % 9
        };
        let fold = if fold == 3 && r.polarity == 0 { 5 } else { fold };
        csv.push_str(&format!("\"{}\",{},{fold}\n", r.text, r.polarity));
    }
    fs::write(ws.path("reviews.csv"), csv).unwrap();
    let config = ws.config("bow", TFIDF);
    let text = fs::read_to_string(&config)
        .unwrap()
        .replace("[dataset]", "[dataset]\nschema = { folds = 9 }");
    fs::write(&config, text).unwrap();
    let out = ws.path("out");
    let o = cli(&["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("1 of 9 folds failed"), "{}", stderr(&o));
    let failures = fs::read_to_string(out.join("failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 2, "{failures}");
    assert!(failures.lines().nth(1).unwrap().starts_with("reviews,bow,3,"));
    assert_eq!(fs::read_to_string(out.join("folds.csv")).unwrap().lines().count(), 9);
}

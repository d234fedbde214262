//! End-to-end checks of the binary: exit codes, stderr, artifact contents.

use std::path::Path;
use std::process::{Command, Output};

fn finelens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finelens"))
        .args(args)
        .output()
        .expect("spawn finelens")
}

fn case_line(id: &str, extra: &str) -> String {
    format!(
        "{{\"case_id\":\"{id}\",\"country\":\"FI\",\"year\":2020,\"sector\":\"Telecom\",\
         \"articles\":[5,32],\"fine_eur\":100000.0,\"decision_ref\":\"dec-{id}\",\
         \"text\":\"a breach\"{extra}}}"
    )
}

#[test]
fn ingest_rejects_duplicate_case_ids() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cases.jsonl");
    std::fs::write(
        &input,
        format!("{}\n{}\n", case_line("c1", ""), case_line("c1", "")),
    )
    .unwrap();
    let out = finelens(&[
        "ingest",
        "--input",
        input.to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("c1"), "stderr was: {stderr}");
    assert!(!dir.path().join("corpus.jsonl").exists());
}

#[test]
fn ingest_unknown_field_strict_vs_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cases.jsonl");
    std::fs::write(
        &input,
        format!("{}\n", case_line("c1", ",\"appeal_status\":\"pending\"")),
    )
    .unwrap();
    let base = [
        "ingest",
        "--input",
        input.to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ];
    let strict = finelens(&base);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("appeal_status"));

    let mut lenient_args = base.to_vec();
    lenient_args.push("--lenient");
    let lenient = finelens(&lenient_args);
    assert_eq!(lenient.status.code(), Some(0), "{:?}", lenient);
    assert!(String::from_utf8_lossy(&lenient.stderr).contains("appeal_status"));
    assert!(dir.path().join("corpus.jsonl").exists());
}

#[test]
fn usage_errors_exit_2() {
    let out = finelens(&["ingest", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = finelens(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

fn synth_and_ingest(dir: &Path, seed: &str, noise: &str) {
    let d = dir.to_str().unwrap();
    let out = finelens(&[
        "synth", "--seed", seed, "--n", "120", "--noise-sd", noise, "--output-dir", d,
    ]);
    assert!(out.status.success());
    let cases = dir.join("cases.jsonl");
    let out = finelens(&[
        "ingest",
        "--input",
        cases.to_str().unwrap(),
        "--output-dir",
        d,
    ]);
    assert!(out.status.success());
}

#[test]
fn anova_recovers_noise_free_synthetic_effects() {
    let dir = tempfile::tempdir().unwrap();
    synth_and_ingest(dir.path(), "7", "0");
    let corpus = dir.path().join("corpus.jsonl");
    let out = finelens(&[
        "anova",
        "--input",
        corpus.to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("anova.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    let coef_of = |article: u64| {
        report["articles"]
            .as_array()
            .unwrap()
            .iter()
            .find(|a| a["article"] == article)
            .and_then(|a| a["coefficient"].as_f64())
            .unwrap()
    };
    // the default synthetic ground truth: art5 +1.0, art32 +1.5
    assert!((coef_of(5) - 1.0).abs() < 1e-8);
    assert!((coef_of(32) - 1.5).abs() < 1e-8);
    assert!((report["r_squared"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(dir.path().join("article_counts.csv").exists());
    assert!(dir.path().join("article_effects.csv").exists());

    // report renders the stored JSON as a table
    let out = finelens(&["report", "--input", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("art32"), "stdout was: {stdout}");
    assert!(stdout.contains("R^2"), "stdout was: {stdout}");
}

#[test]
fn train_with_fixed_hyper_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    synth_and_ingest(dir.path(), "3", "0.5");
    let d = dir.path().to_str().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let lexicon = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../lexicon");
    let out = finelens(&[
        "preprocess",
        "--input",
        corpus.to_str().unwrap(),
        "--lexicon-dir",
        lexicon.to_str().unwrap(),
        "--output-dir",
        d,
    ]);
    assert!(out.status.success(), "{:?}", out);
    let out = finelens(&[
        "featurize",
        "--input",
        corpus.to_str().unwrap(),
        "--tokens",
        dir.path().join("tokens.jsonl").to_str().unwrap(),
        "--output-dir",
        d,
    ]);
    assert!(out.status.success(), "{:?}", out);
    let out = finelens(&[
        "train",
        "--input",
        corpus.to_str().unwrap(),
        "--features",
        dir.path().join("tfidf.csv").to_str().unwrap(),
        "--estimator",
        "ridge",
        "--hyper",
        "10.0",
        "--output-dir",
        d,
    ]);
    assert!(out.status.success(), "{:?}", out);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap())
            .unwrap();
    assert_eq!(model["method"], "Ridge");
    assert_eq!(model["hyper"]["kind"], "Lambda");
    assert_eq!(model["hyper"]["value"], 10.0);
    assert_eq!(
        model["col_names"].as_array().unwrap().len(),
        model["coefficients"].as_array().unwrap().len()
    );
}

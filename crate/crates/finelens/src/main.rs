use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use finelens::anova::{article_counts, run_anova};
use finelens::corpus::{load_cases, merge_shared_decisions, log_fines, save_cases, Corpus, ParseMode};
use finelens::error::{Error, Result};
use finelens::eval::{
    log_fine_histogram, run_grid, EstimatorKind, EvalReport, GridOptions, SplitSpec,
};
use finelens::features::{
    build_vocabulary, dummy_encode, hconcat, near_zero_variance_filter, read_csv, tf_matrix,
    tfidf_matrix, write_csv, DummyGroup, IdfVariant, NZV_FREQ_CUT,
    NZV_UNIQUE_CUT_PCT,
};
use finelens::linreg::Hyper;
use finelens::synthgen::{generate, SynthSpec};
use finelens::textprep::{
    load_docs, preprocess_document, prune_rare_terms, save_docs, Lexicon, PrepConfig, TokenizedDoc,
};

#[derive(Parser)]
#[command(name = "finelens", version, about = "GDPR enforcement-fine analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdfFlag {
    Plain,
    Smooth,
}

impl From<IdfFlag> for IdfVariant {
    fn from(f: IdfFlag) -> Self {
        match f {
            IdfFlag::Plain => IdfVariant::Plain,
            IdfFlag::Smooth => IdfVariant::Smooth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorFlag {
    Pcr,
    Pls,
    Ridge,
}

impl From<EstimatorFlag> for EstimatorKind {
    fn from(f: EstimatorFlag) -> Self {
        match f {
            EstimatorFlag::Pcr => EstimatorKind::Pcr,
            EstimatorFlag::Pls => EstimatorKind::Pls,
            EstimatorFlag::Ridge => EstimatorKind::Ridge,
        }
    }
}

#[derive(Args)]
struct PrepFlags {
    #[arg(long, default_value_t = 3)]
    min_token_len: usize,
    #[arg(long, default_value_t = 20)]
    max_token_len: usize,
    #[arg(long, default_value_t = 3)]
    min_corpus_count: usize,
}

impl PrepFlags {
    fn config(&self) -> Result<PrepConfig> {
        let cfg = PrepConfig {
            min_token_len: self.min_token_len,
            max_token_len: self.max_token_len,
            min_corpus_count: self.min_corpus_count,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SplitFlags {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.20)]
    test_fraction: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

impl SplitFlags {
    fn spec(&self) -> Result<SplitSpec> {
        let spec = SplitSpec {
            seed: self.seed,
            test_fraction: self.test_fraction,
            folds: self.folds,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL case file and merge cases sharing a decision.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// Ignore unknown record fields with a warning instead of rejecting.
        #[arg(long)]
        lenient: bool,
    },
    /// Tokenize, filter, and lemmatize the decision texts.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// Directory holding dictionary.txt, lemmas.tsv, stopwords.txt, and
        /// custom_stopwords.txt; FINELENS_LEXICON_DIR is the fallback.
        #[arg(long)]
        lexicon_dir: Option<PathBuf>,
        #[command(flatten)]
        prep: PrepFlags,
    },
    /// Emit the TF, TF-IDF, and meta-data dummy matrices as CSV.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        /// tokens.jsonl from `preprocess`.
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, value_enum, default_value = "plain")]
        idf: IdfFlag,
    },
    /// Regress log-fines on article dummies; emit the report and plot data.
    Anova {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Fit one estimator on one feature matrix and emit the model as JSON.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Feature matrix CSV (from `featurize`).
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum)]
        estimator: EstimatorFlag,
        /// Components (PCR/PLS) or lambda (ridge); cross-validated if absent.
        #[arg(long)]
        hyper: Option<f64>,
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        split: SplitFlags,
        #[arg(long)]
        grid_components: Option<String>,
        #[arg(long)]
        grid_lambda: Option<String>,
    },
    /// Run the feature-set x estimator grid with a shared train/test split.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// Directory holding meta.csv, tf.csv, and tfidf.csv.
        #[arg(long)]
        features_dir: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        split: SplitFlags,
        #[arg(long)]
        grid_components: Option<String>,
        #[arg(long)]
        grid_lambda: Option<String>,
    },
    /// Render a text summary from prior anova/eval JSON artifacts.
    Report {
        /// Directory holding anova.json and/or eval.json.
        #[arg(long)]
        input: PathBuf,
    },
    /// Generate a seeded synthetic corpus with known ground truth.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        noise_sd: f64,
        #[arg(long)]
        text_signal: bool,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Write via a temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().unwrap_or_default().to_string_lossy()
    ));
    std::fs::write(&tmp, contents).map_err(|source| Error::Io {
        path: tmp.display().to_string(),
        source,
    })?;
    std::fs::rename(&tmp, path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Other(e.to_string()))?;
    if let Some(obj) = v.as_object_mut() {
        obj.entry("schema_version").or_insert(1.into());
    }
    let mut out = serde_json::to_vec_pretty(&v).map_err(|e| Error::Other(e.to_string()))?;
    out.push(b'\n');
    write_atomic(path, &out)
}

fn lexicon_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| std::env::var_os("FINELENS_LEXICON_DIR").map(PathBuf::from))
        .ok_or_else(|| {
            Error::InvalidConfig(
                "no lexicon directory: pass --lexicon-dir or set FINELENS_LEXICON_DIR".into(),
            )
        })
}

fn parse_component_grid(s: &str) -> Result<Vec<Hyper>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map(Hyper::Components)
                .map_err(|e| Error::InvalidConfig(format!("--grid-components: {e}")))
        })
        .collect()
}

fn parse_lambda_grid(s: &str) -> Result<Vec<Hyper>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map(Hyper::Lambda)
                .map_err(|e| Error::InvalidConfig(format!("--grid-lambda: {e}")))
        })
        .collect()
}

fn grid_options(components: Option<&str>, lambdas: Option<&str>) -> Result<GridOptions> {
    let mut options = GridOptions::default();
    if let Some(s) = components {
        options.component_grid = Some(parse_component_grid(s)?);
    }
    if let Some(s) = lambdas {
        options.lambda_grid = parse_lambda_grid(s)?;
    }
    Ok(options)
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    load_cases(path, ParseMode::Strict)
}

fn tokens_for(corpus: &Corpus, docs: Vec<TokenizedDoc>) -> Result<Vec<TokenizedDoc>> {
    // align to corpus order; every case must be present
    let mut by_id: std::collections::HashMap<String, TokenizedDoc> = docs
        .into_iter()
        .map(|d| (d.case_id.clone(), d))
        .collect();
    corpus
        .cases
        .iter()
        .map(|c| {
            by_id.remove(&c.case_id).ok_or_else(|| Error::InvalidCase {
                case_id: c.case_id.clone(),
                message: "missing tokenized document".into(),
            })
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            input,
            output_dir,
            lenient,
        } => {
            let mode = if lenient {
                ParseMode::Lenient
            } else {
                ParseMode::Strict
            };
            let corpus = load_cases(&input, mode)?;
            let merged = merge_shared_decisions(&corpus)?;
            let mut buf = Vec::new();
            save_cases(&merged, &mut buf).map_err(|source| Error::Io {
                path: "corpus.jsonl".into(),
                source,
            })?;
            write_atomic(&output_dir.join("corpus.jsonl"), &buf)?;
            eprintln!(
                "ingested {} cases, {} after merging shared decisions",
                corpus.len(),
                merged.len()
            );
            Ok(())
        }
        Command::Preprocess {
            input,
            output_dir,
            lexicon_dir: dir,
            prep,
        } => {
            let cfg = prep.config()?;
            let lexicon = Lexicon::load_dir(&lexicon_dir(dir)?)?;
            let corpus = load_corpus(&input)?;
            let docs: Vec<TokenizedDoc> = corpus
                .cases
                .iter()
                .map(|c| TokenizedDoc {
                    case_id: c.case_id.clone(),
                    lemmas: preprocess_document(&c.text, &lexicon, &cfg),
                })
                .collect();
            let pruned = prune_rare_terms(&docs, &cfg);
            let mut buf = Vec::new();
            save_docs(&pruned, &mut buf).map_err(|source| Error::Io {
                path: "tokens.jsonl".into(),
                source,
            })?;
            write_atomic(&output_dir.join("tokens.jsonl"), &buf)
        }
        Command::Featurize {
            input,
            tokens,
            output_dir,
            idf,
        } => {
            let corpus = load_corpus(&input)?;
            let docs = tokens_for(&corpus, load_docs(&tokens)?)?;
            let vocab = build_vocabulary(&docs)?;
            let tf = tf_matrix(&docs, &vocab)?;
            let tfidf = tfidf_matrix(&docs, &vocab, idf.into())?;
            let meta = dummy_encode(&corpus, &DummyGroup::ALL)?;
            let (meta_nzv, dropped) =
                near_zero_variance_filter(&meta, NZV_FREQ_CUT, NZV_UNIQUE_CUT_PCT)?;
            for (name, matrix) in [
                ("tf.csv", &tf),
                ("tfidf.csv", &tfidf),
                ("meta.csv", &meta),
                ("meta_nzv.csv", &meta_nzv),
            ] {
                let mut buf = Vec::new();
                write_csv(matrix, &mut buf).map_err(|source| Error::Io {
                    path: name.into(),
                    source,
                })?;
                write_atomic(&output_dir.join(name), &buf)?;
            }
            eprintln!(
                "featurized: {} terms, {} meta columns ({} after near-zero-variance filter; dropped: {})",
                vocab.terms.len(),
                meta.n_cols(),
                meta_nzv.n_cols(),
                dropped.join(",")
            );
            Ok(())
        }
        Command::Anova { input, output_dir } => {
            let corpus = load_corpus(&input)?;
            let report = run_anova(&corpus)?;
            write_json(&output_dir.join("anova.json"), &report)?;

            let mut counts = String::from("article,count\n");
            for (article, count) in article_counts(&corpus) {
                counts.push_str(&format!("{article},{count}\n"));
            }
            write_atomic(&output_dir.join("article_counts.csv"), counts.as_bytes())?;

            let mut effects = String::from("article,coefficient,ci_low,ci_high\n");
            for a in &report.articles {
                if let (Some(c), Some(lo), Some(hi)) = (a.coefficient, a.ci_low, a.ci_high) {
                    effects.push_str(&format!("{},{c},{lo},{hi}\n", a.article));
                }
            }
            write_atomic(&output_dir.join("article_effects.csv"), effects.as_bytes())
        }
        Command::Train {
            input,
            features,
            estimator,
            hyper,
            output_dir,
            split,
            grid_components,
            grid_lambda,
        } => {
            let corpus = load_corpus(&input)?;
            let matrix = read_csv(&features)?;
            if matrix.row_ids != corpus.case_ids() {
                return Err(Error::ShapeMismatch(
                    "feature rows do not match corpus order".into(),
                ));
            }
            let y = log_fines(&corpus);
            let kind: EstimatorKind = estimator.into();
            let spec = split.spec()?;
            let chosen = match hyper {
                Some(v) => match kind {
                    EstimatorKind::Ridge => Hyper::Lambda(v),
                    _ => Hyper::Components(v as usize),
                },
                None => {
                    let options =
                        grid_options(grid_components.as_deref(), grid_lambda.as_deref())?;
                    let grid = match kind {
                        EstimatorKind::Ridge => options.lambda_grid.clone(),
                        _ => options.component_grid.clone().unwrap_or_else(|| {
                            finelens::eval::default_component_grid(
                                matrix.n_cols(),
                                corpus.len() - corpus.len() / spec.folds,
                                options.component_cap,
                            )
                        }),
                    };
                    finelens::eval::cross_validate(&matrix, &y, kind, &grid, spec.folds, spec.seed)?
                        .best
                }
            };
            let model = finelens::eval::fit_estimator(kind, &matrix, &y, chosen)?;
            write_json(&output_dir.join("model.json"), &model)
        }
        Command::Evaluate {
            input,
            features_dir,
            output_dir,
            split,
            grid_components,
            grid_lambda,
        } => {
            let corpus = load_corpus(&input)?;
            let spec = split.spec()?;
            let options = grid_options(grid_components.as_deref(), grid_lambda.as_deref())?;
            let meta = read_csv(&features_dir.join("meta.csv"))?;
            let tf = read_csv(&features_dir.join("tf.csv"))?;
            let tfidf = read_csv(&features_dir.join("tfidf.csv"))?;
            let meta_tfidf = hconcat(&meta, &tfidf)?;
            let feature_sets = vec![
                ("Meta".to_string(), meta),
                ("TF".to_string(), tf),
                ("TFIDF".to_string(), tfidf),
                ("Meta+TFIDF".to_string(), meta_tfidf),
            ];
            let report = run_grid(&corpus, &feature_sets, &EstimatorKind::ALL, &spec, &options)?;
            write_json(&output_dir.join("eval.json"), &report)?;
            write_eval_csvs(&report, &output_dir)?;

            let mut hist = String::from("bin_low,bin_high,count\n");
            for (lo, hi, count) in log_fine_histogram(&log_fines(&corpus)) {
                hist.push_str(&format!("{lo},{hi},{count}\n"));
            }
            write_atomic(&output_dir.join("histogram.csv"), hist.as_bytes())
        }
        Command::Report { input } => {
            let mut stdout = std::io::stdout().lock();
            let anova_path = input.join("anova.json");
            let eval_path = input.join("eval.json");
            if !anova_path.exists() && !eval_path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "no anova.json or eval.json under {}",
                    input.display()
                )));
            }
            if anova_path.exists() {
                let report: serde_json::Value = read_json(&anova_path)?;
                render_anova(&mut stdout, &report).map_err(|source| Error::Io {
                    path: "stdout".into(),
                    source,
                })?;
            }
            if eval_path.exists() {
                let report: serde_json::Value = read_json(&eval_path)?;
                render_eval(&mut stdout, &report).map_err(|source| Error::Io {
                    path: "stdout".into(),
                    source,
                })?;
            }
            Ok(())
        }
        Command::Synth {
            seed,
            n,
            noise_sd,
            text_signal,
            output_dir,
        } => {
            let spec = SynthSpec {
                seed,
                n_cases: n,
                noise_sd,
                text_signal,
                ..SynthSpec::default()
            };
            let (corpus, truth) = generate(&spec)?;
            let mut buf = Vec::new();
            save_cases(&corpus, &mut buf).map_err(|source| Error::Io {
                path: "cases.jsonl".into(),
                source,
            })?;
            write_atomic(&output_dir.join("cases.jsonl"), &buf)?;
            write_json(&output_dir.join("truth.json"), &truth)
        }
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

fn write_eval_csvs(report: &EvalReport, output_dir: &Path) -> Result<()> {
    let mut maes = String::from("feature_set,estimator,hyper,cv_rmse,train_mae,test_mae\n");
    let mut preds = String::from("case_id,observed,predicted,feature_set,estimator\n");
    for cfg in &report.configs {
        let hyper = match cfg.hyper {
            Hyper::None => "-".to_string(),
            Hyper::Components(k) => format!("k={k}"),
            Hyper::Lambda(l) => format!("lambda={l}"),
        };
        maes.push_str(&format!(
            "{},{},{hyper},{},{},{}\n",
            cfg.feature_set, cfg.estimator, cfg.cv_rmse, cfg.train_mae, cfg.test_mae
        ));
        for p in &cfg.test_predictions {
            preds.push_str(&format!(
                "{},{},{},{},{}\n",
                p.case_id, p.observed, p.predicted, cfg.feature_set, cfg.estimator
            ));
        }
    }
    write_atomic(&output_dir.join("maes.csv"), maes.as_bytes())?;
    write_atomic(&output_dir.join("predictions.csv"), preds.as_bytes())
}

fn render_anova(out: &mut impl Write, report: &serde_json::Value) -> std::io::Result<()> {
    writeln!(out, "== ANOVA: log-fines on article dummies ==")?;
    writeln!(
        out,
        "n = {}, R^2 = {:.4}, F = {:.4} (p = {:.3e}), df = ({}, {})",
        report["n"],
        report["r_squared"].as_f64().unwrap_or(f64::NAN),
        report["f_statistic"].as_f64().unwrap_or(f64::NAN),
        report["f_p_value"].as_f64().unwrap_or(f64::NAN),
        report["df_model"],
        report["df_resid"],
    )?;
    if let Some(articles) = report["articles"].as_array() {
        writeln!(out, "{:<8} {:>6} {:>10} {:>22}", "article", "count", "coef", "95% CI")?;
        for a in articles {
            let count = a["reference_count"].as_u64().unwrap_or(0);
            match a["coefficient"].as_f64() {
                Some(c) => {
                    writeln!(
                        out,
                        "{:<8} {:>6} {:>10.4} [{:>9.4}, {:>9.4}]",
                        a["name"].as_str().unwrap_or("?"),
                        count,
                        c,
                        a["ci_low"].as_f64().unwrap_or(f64::NAN),
                        a["ci_high"].as_f64().unwrap_or(f64::NAN),
                    )?;
                }
                None => {
                    writeln!(
                        out,
                        "{:<8} {:>6} {:>10} (aliased)",
                        a["name"].as_str().unwrap_or("?"),
                        count,
                        "-"
                    )?;
                }
            }
        }
    }
    writeln!(out)
}

fn render_eval(out: &mut impl Write, report: &serde_json::Value) -> std::io::Result<()> {
    writeln!(out, "== Prediction grid (log-fine MAEs) ==")?;
    writeln!(
        out,
        "seed = {}, test fraction = {}, folds = {}, train/test = {}/{}",
        report["seed"],
        report["test_fraction"],
        report["folds"],
        report["n_train"],
        report["n_test"],
    )?;
    if let Some(configs) = report["configs"].as_array() {
        writeln!(
            out,
            "{:<12} {:<8} {:>14} {:>10} {:>10} {:>10}",
            "features", "model", "hyper", "cv_rmse", "train_mae", "test_mae"
        )?;
        for c in configs {
            let hyper = match (c["hyper"]["kind"].as_str(), c["hyper"]["value"].as_f64()) {
                (Some("Components"), Some(v)) => format!("k={v}"),
                (Some("Lambda"), Some(v)) => format!("lambda={v:.4}"),
                _ => "-".into(),
            };
            writeln!(
                out,
                "{:<12} {:<8} {:>14} {:>10.4} {:>10.4} {:>10.4}",
                c["feature_set"].as_str().unwrap_or("?"),
                c["estimator"].as_str().unwrap_or("?"),
                hyper,
                c["cv_rmse"].as_f64().unwrap_or(f64::NAN),
                c["train_mae"].as_f64().unwrap_or(f64::NAN),
                c["test_mae"].as_f64().unwrap_or(f64::NAN),
            )?;
        }
    }
    writeln!(out)
}

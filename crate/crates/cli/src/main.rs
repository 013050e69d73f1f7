use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use deeptrust::baselines::{feature_importance, fit_forest, ForestParams, LogisticParams, TreeParams};
use deeptrust::data::{
    filter_corpus, generate_synthetic, load_corpus, load_labels, save_corpus, save_labels, split_dataset, Corpus,
    LoadOptions, SplitSpec, SynthConfig,
};
use deeptrust::deeptrust::DeepTrustConfig;
use deeptrust::evaluation::{
    cross_validate, emit_report, evaluate_holdout, make_folds, permutation_test, write_metrics_csv, EvalReport,
    ReportFile,
};
use deeptrust::features::{export_cdf, export_scatter_matrix};
use deeptrust::model_io::{load_model, save_model};
use deeptrust::neural::{StepDecay, TrainConfig};
use deeptrust::pipeline::{
    fit_model, learner, mode_of, predict_users, prepare_labeled, prepare_unlabeled, with_reputation_column,
    write_predictions_csv, GatedLearner, ModelKind, ModelSettings, Prepared, ReputationMode,
};
use deeptrust::reputation::{score_users, write_reputation_csv, ThresholdConfig};
use deeptrust::sentiment::{load_lexicon, Lexicon};
use deeptrust::{Error, Learner, Result};

/// Trust classification for social network users.
#[derive(Debug, Parser)]
#[command(name = "deeptrust", version)]
struct Cli {
    /// Directory for every file the command writes.
    #[arg(long, global = true, env = "DEEPTRUST_OUT", default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground-truth labels.
    Synth(SynthArgs),
    /// Load and filter a corpus, reporting what was kept.
    Ingest(IngestArgs),
    /// Extract the feature table, plus optional CDF and scatter exports.
    Features(FeaturesArgs),
    /// Compute acquaintance scores, affinities and the trusted ranking.
    Reputation(ReputationArgs),
    /// Train a model on every labeled user and write model.json.
    Train(TrainArgs),
    /// Holdout or K-fold evaluation; writes report.json and metrics.csv.
    Evaluate(EvaluateArgs),
    /// Per-user trust probability from a saved model.
    Predict(PredictArgs),
    /// Random forest feature importance ranking.
    RankFeatures(RankArgs),
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    users: usize,
    #[arg(long, default_value_t = 0.5)]
    trusted_fraction: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Share of users whose behavior contradicts their label, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 6)]
    min_messages: usize,
    #[arg(long, default_value_t = 24)]
    max_messages: usize,
}

#[derive(Debug, Args, Serialize)]
struct CorpusArgs {
    /// users.jsonl
    #[arg(long)]
    users: PathBuf,
    /// messages.jsonl
    #[arg(long)]
    messages: PathBuf,
    /// Fail on malformed lines and orphan messages instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Derive interaction counts from the messages.
    #[arg(long)]
    recompute_interactions: bool,
    /// Most recent messages kept per user.
    #[arg(long, default_value_t = 3200)]
    per_user_cap: usize,
    #[arg(long, default_value = "")]
    topic: String,
}

#[derive(Debug, Args, Serialize)]
struct LexiconArgs {
    /// Sentiment lexicon TSV (`term<TAB>+` or `term<TAB>-`); built-in list if absent.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReputationOpts {
    /// off, feature or gate.
    #[arg(long, default_value = "off", value_parser = parse_mode)]
    reputation_mode: ReputationMode,
    #[arg(long, default_value_t = deeptrust::reputation::DEFAULT_THETA)]
    theta: f64,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Debug, Args, Serialize)]
struct FeaturesArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// labels.csv
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    reputation: ReputationOpts,
    /// Feature to export a per-class CDF for; repeatable.
    #[arg(long)]
    cdf: Vec<String>,
    /// Comma-separated features for a scatter matrix export.
    #[arg(long, value_delimiter = ',')]
    scatter: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
struct ReputationArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = deeptrust::reputation::DEFAULT_THETA)]
    theta: f64,
}

#[derive(Debug, Args, Serialize)]
struct Hyper {
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2_lambda: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    #[arg(long, default_value_t = 10)]
    patience: usize,
    /// Multiply the learning rate by --decay-factor every this many epochs.
    #[arg(long)]
    decay_every: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    decay_factor: f64,
    #[arg(long, default_value_t = deeptrust::deeptrust::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = deeptrust::deeptrust::DEFAULT_DROPOUT)]
    dropout: f64,
    #[arg(long, default_value_t = 0.1)]
    validation_fraction: f64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    features_per_split: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 500)]
    logistic_epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    logistic_learning_rate: f64,
    #[arg(long, default_value_t = 1e-3)]
    logistic_l2_lambda: f64,
}

impl Hyper {
    fn settings(&self, seed: u64) -> Result<ModelSettings> {
        let train = TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            l2_lambda: self.l2_lambda,
            epochs: self.epochs,
            seed,
            patience: (self.patience > 0).then_some(self.patience),
            step_decay: self.decay_every.map(|every_epochs| StepDecay {
                every_epochs,
                factor: self.decay_factor,
            }),
        };
        let mut problems = Vec::new();
        if let Err(Error::InvalidConfig(p)) = train.validate() {
            problems.extend(p);
        }
        if self.hidden == 0 {
            problems.push("hidden must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            problems.push(format!("validation_fraction must be in (0, 1), got {}", self.validation_fraction));
        }
        if self.trees == 0 {
            problems.push("trees must be at least 1".into());
        }
        if self.min_samples_split < 2 {
            problems.push("min_samples_split must be at least 2".into());
        }
        if self.features_per_split == Some(0) {
            problems.push("features_per_split must be at least 1".into());
        }
        if !(self.logistic_learning_rate >= 0.0 && self.logistic_l2_lambda >= 0.0) {
            problems.push("logistic learning rate and L2 must be non-negative".into());
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        Ok(ModelSettings {
            deeptrust: DeepTrustConfig {
                hidden: self.hidden,
                dropout: self.dropout,
                train,
                validation_fraction: self.validation_fraction,
            },
            tree: TreeParams {
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
                ..Default::default()
            },
            forest: ForestParams {
                trees: self.trees,
                features_per_split: self.features_per_split,
                bootstrap: true,
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
            },
            logistic: LogisticParams {
                l2_lambda: self.logistic_l2_lambda,
                learning_rate: self.logistic_learning_rate,
                epochs: self.logistic_epochs,
            },
        })
    }
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// deeptrust, decision_tree, random_forest, naive_bayes or logistic_regression.
    #[arg(default_value = "deeptrust", value_parser = parse_kind)]
    model: ModelKind,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    reputation: ReputationOpts,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[arg(default_value = "deeptrust", value_parser = parse_kind)]
    model: ModelKind,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    reputation: ReputationOpts,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of cross-validation folds; plain holdout when absent.
    #[arg(long)]
    cv: Option<usize>,
    /// Holdout share used for testing.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Second model for a paired permutation test on the same folds.
    #[arg(long, value_parser = parse_kind)]
    compare: Option<ModelKind>,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    /// model.json written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Label users whose normalized reputation rank reaches theta as trusted.
    #[arg(long)]
    gate: bool,
    #[arg(long, default_value_t = deeptrust::reputation::DEFAULT_THETA)]
    theta: f64,
}

#[derive(Debug, Args, Serialize)]
struct RankArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    reputation: ReputationOpts,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    features_per_split: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<ReputationMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn theta(t: f64) -> Result<ThresholdConfig> {
    ThresholdConfig::new(t)
}

fn lexicon(args: &LexiconArgs) -> Result<Lexicon> {
    match &args.lexicon {
        Some(p) => load_lexicon(p),
        None => Ok(Lexicon::builtin()),
    }
}

struct Loaded {
    raw_users: usize,
    raw_messages: usize,
    orphans: usize,
    malformed: usize,
    corpus: Corpus,
}

fn load(args: &CorpusArgs) -> Result<Loaded> {
    if args.per_user_cap == 0 {
        return Err(Error::InvalidConfig(vec!["per_user_cap must be at least 1".into()]));
    }
    let loaded = load_corpus(
        &args.users,
        &args.messages,
        &LoadOptions {
            strict: args.strict,
            recompute_interactions: args.recompute_interactions,
            topic: args.topic.clone(),
        },
    )?;
    if loaded.orphans_dropped > 0 {
        eprintln!("warning: dropped {} messages with unknown authors", loaded.orphans_dropped);
    }
    if loaded.malformed_skipped > 0 {
        eprintln!("warning: skipped {} malformed lines", loaded.malformed_skipped);
    }
    let corpus = filter_corpus(&loaded.corpus, args.per_user_cap)?;
    Ok(Loaded {
        raw_users: loaded.corpus.n(),
        raw_messages: loaded.corpus.message_count(),
        orphans: loaded.orphans_dropped,
        malformed: loaded.malformed_skipped,
        corpus,
    })
}

fn prepare(corpus: &CorpusArgs, labels: &Path, lex: &LexiconArgs, rep: &ReputationOpts) -> Result<Prepared> {
    let th = theta(rep.theta)?;
    let lexicon = lexicon(lex)?;
    let corpus = load(corpus)?.corpus;
    let labels = load_labels(labels)?;
    let prep = prepare_labeled(&corpus, &labels, &lexicon, rep.reputation_mode, th)?;
    if prep.unlabeled > 0 {
        eprintln!("note: {} users have no label and were skipped", prep.unlabeled);
    }
    if prep.dangling_labels > 0 {
        eprintln!("warning: {} labels refer to users not in the corpus", prep.dangling_labels);
    }
    if prep.empty_history > 0 {
        eprintln!("warning: {} labeled users have no messages", prep.empty_history);
    }
    Ok(prep)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    command: &'a str,
    out: &'a Path,
    args: &'a T,
}

fn echo<T: Serialize>(command: &str, out: &Path, args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(Echo { command, out, args })?)
}

fn synth(out: &Path, a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        users: a.users,
        trusted_fraction: a.trusted_fraction,
        seed: a.seed,
        noise: a.noise,
        min_messages: a.min_messages,
        max_messages: a.max_messages,
    };
    cfg.validate()?;
    let s = generate_synthetic(&cfg)?;
    save_corpus(&s.corpus, &out.join("users.jsonl"), &out.join("messages.jsonl"))?;
    save_labels(&s.labels, &out.join("labels.csv"))?;
    let lex = out.join("lexicon.tsv");
    std::fs::write(&lex, Lexicon::builtin().to_tsv()).map_err(|e| Error::io(&lex, e))?;
    write_json(&out.join("synth_config.json"), &echo("synth", out, a)?)?;
    eprintln!(
        "wrote {} users, {} messages, {} labels",
        s.corpus.n(),
        s.corpus.message_count(),
        s.labels.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    config: serde_json::Value,
    users_loaded: usize,
    messages_loaded: usize,
    orphan_messages_dropped: usize,
    malformed_lines_skipped: usize,
    users_kept: usize,
    messages_kept: usize,
    duplicate_messages_removed: usize,
}

fn ingest(out: &Path, a: &IngestArgs) -> Result<()> {
    let l = load(&a.corpus)?;
    save_corpus(
        &l.corpus,
        &out.join("filtered_users.jsonl"),
        &out.join("filtered_messages.jsonl"),
    )?;
    let summary = IngestSummary {
        config: echo("ingest", out, a)?,
        users_loaded: l.raw_users,
        messages_loaded: l.raw_messages,
        orphan_messages_dropped: l.orphans,
        malformed_lines_skipped: l.malformed,
        users_kept: l.corpus.n(),
        messages_kept: l.corpus.message_count(),
        duplicate_messages_removed: l.corpus.duplicates.values().map(|d| d.duplicates).sum(),
    };
    write_json(&out.join("ingest_summary.json"), &summary)?;
    let text = serde_json::to_string_pretty(&summary)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn features(out: &Path, a: &FeaturesArgs) -> Result<()> {
    let prep = prepare(&a.corpus, &a.labels, &a.lexicon, &a.reputation)?;
    let ds = &prep.dataset;
    for name in &a.cdf {
        ds.column_index(name)?;
    }
    if !a.scatter.is_empty() {
        let names: Vec<&str> = a.scatter.iter().map(String::as_str).collect();
        let table = export_scatter_matrix(ds, &names)?;
        table.write_csv(create(&out.join("scatter.csv"))?)?;
    }
    ds.write_csv(create(&out.join("features.csv"))?)?;
    for name in &a.cdf {
        export_cdf(ds, name)?.write_csv(create(&out.join(format!("cdf_{name}.csv")))?)?;
    }
    eprintln!("wrote {} rows x {} features", ds.len(), ds.dim());
    Ok(())
}

fn reputation(out: &Path, a: &ReputationArgs) -> Result<()> {
    let th = theta(a.theta)?;
    let corpus = load(&a.corpus)?.corpus;
    let scores = score_users(&corpus.users, &th)?;
    write_reputation_csv(&scores, create(&out.join("reputation.csv"))?)?;
    let trusted = scores.iter().filter(|s| s.trusted_by_threshold).count();
    eprintln!("{trusted} of {} users at or above theta {}", scores.len(), th.theta);
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    config: serde_json::Value,
    model: &'static str,
    samples: usize,
    features: usize,
    feature_schema_version: String,
    best_epoch: Option<usize>,
    epochs_run: Option<usize>,
    final_train_loss: Option<f64>,
}

fn train(out: &Path, a: &TrainArgs) -> Result<()> {
    let settings = a.hyper.settings(a.seed)?;
    let prep = prepare(&a.corpus, &a.labels, &a.lexicon, &a.reputation)?;
    let (model, history) = fit_model(a.model, &settings, &prep.dataset, a.seed)?;
    save_model(&model, &out.join("model.json"))?;
    if let Some(h) = &history {
        h.write_csv(create(&out.join("history.csv"))?)?;
    }
    let summary = TrainSummary {
        config: echo("train", out, a)?,
        model: a.model.name(),
        samples: prep.dataset.len(),
        features: prep.dataset.dim(),
        feature_schema_version: model.feature_schema_version.clone(),
        best_epoch: history.as_ref().map(|h| h.best_epoch),
        epochs_run: history.as_ref().map(|h| h.epochs.len()),
        final_train_loss: history.as_ref().and_then(|h| h.epochs.last()).map(|e| e.train_loss),
    };
    write_json(&out.join("train_summary.json"), &summary)?;
    eprintln!("trained {} on {} users", a.model.name(), prep.dataset.len());
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    config: serde_json::Value,
    model: String,
    compared_with: String,
    model_mean_error: f64,
    compared_mean_error: f64,
    fold_accuracies: Vec<f64>,
    compared_fold_accuracies: Vec<f64>,
    test: deeptrust::evaluation::PermutationTest,
}

fn fold_accuracies(r: &EvalReport) -> Vec<f64> {
    r.folds.iter().flatten().map(|f| f.accuracy).collect()
}

fn evaluate(out: &Path, a: &EvaluateArgs) -> Result<()> {
    let settings = a.hyper.settings(a.seed)?;
    if a.compare.is_some() && a.cv.is_none() {
        return Err(Error::InvalidConfig(vec!["--compare requires --cv".into()]));
    }
    if a.cv.is_none() && !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(Error::InvalidConfig(vec![format!(
            "test_fraction must be in (0, 1), got {}",
            a.test_fraction
        )]));
    }
    let th = theta(a.reputation.theta)?;
    let prep = prepare(&a.corpus, &a.labels, &a.lexicon, &a.reputation)?;
    let gated = a.reputation.reputation_mode == ReputationMode::Gate;
    let ds = if gated {
        with_reputation_column(&prep)?
    } else {
        prep.dataset.clone()
    };
    let plan = a.cv.map(|k| make_folds(ds.len(), k, a.seed)).transpose()?;
    let run = |kind: ModelKind| -> Result<EvalReport> {
        let base = learner(kind, &settings);
        let gate = GatedLearner {
            inner: base.as_ref(),
            theta: th,
        };
        let l: &dyn Learner = if gated { &gate } else { base.as_ref() };
        match &plan {
            Some(plan) => cross_validate(l, &ds, plan),
            None => {
                let idx: Vec<usize> = (0..ds.len()).collect();
                let split = split_dataset(
                    &idx,
                    &SplitSpec {
                        train: 1.0 - a.test_fraction,
                        validation: 0.0,
                        test: a.test_fraction,
                        seed: a.seed,
                        stratify: false,
                    },
                )?;
                evaluate_holdout(l, &ds.subset(&split.train), &ds.subset(&split.test), a.seed)
            }
        }
    };
    let report = run(a.model)?;
    let config = echo("evaluate", out, a)?;
    let file = ReportFile::new(report.clone(), &prep.dataset.schema_version, config.clone());
    emit_report(&file, &out.join("report.json"))?;
    write_metrics_csv(&report, create(&out.join("metrics.csv"))?)?;
    eprintln!(
        "{}: accuracy {:.4}, kappa {:.4}, mean error {:.4}",
        report.model, report.metrics.accuracy, report.metrics.kappa, report.mean_error
    );
    if let Some(other) = a.compare {
        let second = run(other)?;
        let (x, y) = (fold_accuracies(&report), fold_accuracies(&second));
        let test = permutation_test(&x, &y, 9999, a.seed)?;
        write_json(
            &out.join("comparison.json"),
            &Comparison {
                config,
                model: report.model.clone(),
                compared_with: second.model.clone(),
                model_mean_error: report.mean_error,
                compared_mean_error: second.mean_error,
                fold_accuracies: x,
                compared_fold_accuracies: y,
                test,
            },
        )?;
        eprintln!(
            "{} vs {}: mean accuracy difference {:.4}, p = {:.4}",
            report.model, second.model, test.mean_difference, test.p_value
        );
    }
    Ok(())
}

fn predict(out: &Path, a: &PredictArgs) -> Result<()> {
    let th = theta(a.theta)?;
    let model = load_model(&a.model)?;
    let lexicon = lexicon(&a.lexicon)?;
    let corpus = load(&a.corpus)?.corpus;
    let mode = match (mode_of(&model), a.gate) {
        (ReputationMode::Feature, _) => ReputationMode::Feature,
        (_, true) => ReputationMode::Gate,
        _ => ReputationMode::Off,
    };
    let prep = prepare_unlabeled(&corpus, &lexicon, mode, th)?;
    let gate = if a.gate { prep.reputation.as_ref() } else { None };
    let preds = predict_users(&model, &prep, gate)?;
    write_predictions_csv(&preds, create(&out.join("predictions.csv"))?)?;
    eprintln!("scored {} users", preds.len());
    Ok(())
}

fn rank_features(out: &Path, a: &RankArgs) -> Result<()> {
    let prep = prepare(&a.corpus, &a.labels, &a.lexicon, &a.reputation)?;
    let ds = &prep.dataset;
    let params = ForestParams {
        trees: a.trees,
        features_per_split: a.features_per_split,
        max_depth: a.max_depth,
        ..Default::default()
    };
    let forest = fit_forest(&ds.rows, &ds.labels, params, a.seed)?;
    let ranked = feature_importance(&forest)?;
    let mut w = csv::Writer::from_writer(create(&out.join("feature_ranking.csv"))?);
    w.write_record(["rank", "feature", "importance"])?;
    for (rank, (idx, imp)) in ranked.iter().enumerate() {
        w.write_record([(rank + 1).to_string(), ds.feature_names[*idx].clone(), imp.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(out.join("feature_ranking.csv"), e))?;
    for (idx, imp) in ranked.iter().take(5) {
        eprintln!("{:<28} {imp:.4}", ds.feature_names[*idx]);
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let out = &cli.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    match &cli.command {
        Command::Synth(a) => synth(out, a),
        Command::Ingest(a) => ingest(out, a),
        Command::Features(a) => features(out, a),
        Command::Reputation(a) => reputation(out, a),
        Command::Train(a) => train(out, a),
        Command::Evaluate(a) => evaluate(out, a),
        Command::Predict(a) => predict(out, a),
        Command::RankFeatures(a) => rank_features(out, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let top = e.to_string();
            eprintln!("error: {top}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let msg = s.to_string();
                if !top.contains(&msg) {
                    eprintln!("  caused by: {msg}");
                }
                source = s.source();
            }
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

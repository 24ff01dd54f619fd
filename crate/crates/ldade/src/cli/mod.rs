//! Batch command-line surface. Every command resolves its settings as
//! flag > config file > built-in default, computes everything in memory,
//! then writes its report files together; reruns with identical flags and
//! seed are byte-identical regardless of `--jobs`.

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::classify::evaluate_pipeline;
use crate::corpus::io::{load_csv, load_lines, load_matrix, load_stopwords, render_matrix};
use crate::corpus::{
    build_matrix, default_stopwords, preprocess_text, select_vocabulary, DocumentTermMatrix,
    PreprocessConfig, RawDocument,
};
use crate::lda::{LdaParams, DEFAULT_ITERATIONS, DEFAULT_K};
use crate::report::{self, OutputSet};
use crate::seeds;
use crate::stability::{stability_curve, ScorePoint, StabilityConfig, StabilityReport};
use crate::stats::{scott_knott, SampleGroup, ScottKnottConfig};
use crate::tuner::{random_search, tune_de, Bounds, DeConfig, TuningResult};
use crate::{Error, Result};

use config::{resolve, ConfigFile};

#[derive(Parser)]
#[command(name = "ldade", version, about = "Order-stability scoring and tuning for LDA")]
pub struct Cli {
    /// INI-style config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize, stem, select vocabulary and export the document-term matrix.
    Preprocess(PreprocessArgs),
    /// Score topic stability across shuffled-order runs.
    Stability(StabilityArgs),
    /// Search for stability-maximizing LDA parameters.
    Tune(TuneArgs),
    /// Cross-validated classification on document-topic features.
    Classify(ClassifyArgs),
    /// Rank result groups with Scott-Knott, A12 and bootstrap.
    Stats(StatsArgs),
    /// Summarize prior report files into one markdown page.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Lines,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Baseline {
    De,
    Random,
}

#[derive(Args)]
struct InputArgs {
    /// Raw corpus file, or a matrix directory written by `preprocess`.
    #[arg(long)]
    input: PathBuf,
    /// Raw corpus layout; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Stopword list (one word per line); bundled English list by default.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Fraction of distinct terms kept by tf-idf score.
    #[arg(long)]
    keep_fraction: Option<f64>,
    /// Minimum token length in characters.
    #[arg(long)]
    min_token_length: Option<usize>,
    /// Disable stemming.
    #[arg(long)]
    no_stemming: bool,
}

#[derive(Args)]
struct LdaArgs {
    /// Topic count.
    #[arg(long)]
    k: Option<usize>,
    /// Document-topic prior (default 1/k).
    #[arg(long)]
    alpha: Option<f64>,
    /// Topic-word prior (default 1/k).
    #[arg(long)]
    beta: Option<f64>,
    /// Gibbs sweeps per fit.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args)]
struct StabilityFlags {
    /// Top-word count n scored by the stability metric.
    #[arg(long)]
    n_words: Option<usize>,
    /// Shuffled-order runs m per repeat.
    #[arg(long)]
    runs: Option<usize>,
    /// Repeats j of the whole comparison.
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Args)]
struct DeArgs {
    /// Population size.
    #[arg(long)]
    np: Option<usize>,
    /// Differential weight.
    #[arg(long = "f")]
    f: Option<f64>,
    /// Crossover probability.
    #[arg(long = "cr")]
    cr: Option<f64>,
    /// Evolution generations.
    #[arg(long)]
    generations: Option<usize>,
    /// Evaluation budget for the random baseline.
    #[arg(long)]
    budget: Option<usize>,
    /// Search algorithm.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Base seed for every random stream in the command.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    lda: LdaArgs,
    #[command(flatten)]
    stability: StabilityFlags,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    lda: LdaArgs,
    #[command(flatten)]
    stability: StabilityFlags,
    #[command(flatten)]
    de: DeArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    lda: LdaArgs,
    #[command(flatten)]
    stability: StabilityFlags,
    #[command(flatten)]
    de: DeArgs,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Class scored as positive (default: lexicographically last label).
    #[arg(long)]
    positive_label: Option<String>,
    /// Tuned parameters from a prior `tune` run (tuning.json); when absent,
    /// an inline search runs first.
    #[arg(long)]
    tuned_params: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// CSV with header `group,value`.
    #[arg(long)]
    input: PathBuf,
    /// Split-acceptance significance level.
    #[arg(long)]
    significance: Option<f64>,
    /// Minimum A12 effect size for a split.
    #[arg(long)]
    a12_threshold: Option<f64>,
    /// Bootstrap resamples.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding prior report files.
    #[arg(long)]
    input: PathBuf,
    /// Output directory (defaults to the input directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse arguments, run one command, and report the exit code.
pub fn run() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .is_test(false)
        .try_init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 1;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let cfg = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        },
        None => ConfigFile::empty(),
    };
    let outcome = match cli.command {
        Command::Preprocess(args) => cmd_preprocess(args, &cfg),
        Command::Stability(args) => cmd_stability(args, &cfg),
        Command::Tune(args) => cmd_tune(args, &cfg),
        Command::Classify(args) => cmd_classify(args, &cfg),
        Command::Stats(args) => cmd_stats(args, &cfg),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn seed_of(run: &RunArgs, cfg: &ConfigFile) -> Result<u64> {
    Ok(resolve(run.seed, cfg.get_u64("run", "seed")?, 0))
}

fn preprocess_settings(args: &CorpusArgs, cfg: &ConfigFile) -> Result<(PreprocessConfig, Value)> {
    let stopword_path = args.stopwords.clone().or_else(|| cfg.get_path("corpus", "stopwords"));
    let stopwords = match &stopword_path {
        Some(path) => load_stopwords(path)?,
        None => default_stopwords(),
    };
    let stemming = if args.no_stemming {
        false
    } else {
        cfg.get_bool("corpus", "stemming")?.unwrap_or(true)
    };
    let pre = PreprocessConfig {
        stopwords,
        stemming_enabled: stemming,
        keep_fraction: resolve(args.keep_fraction, cfg.get_f64("corpus", "keep_fraction")?, 0.05),
        min_token_length: resolve(
            args.min_token_length,
            cfg.get_usize("corpus", "min_token_length")?,
            2,
        ),
    };
    pre.validate()?;
    let described = json!({
        "keep_fraction": report::real(pre.keep_fraction),
        "min_token_length": pre.min_token_length,
        "stemming": pre.stemming_enabled,
        "stopwords": stopword_path
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bundled".to_string()),
    });
    Ok((pre, described))
}

fn load_documents(input: &InputArgs, cfg: &ConfigFile) -> Result<(Vec<RawDocument>, Format)> {
    let format = match input.format {
        Some(f) => f,
        None => match cfg.get_str("corpus", "format") {
            Some("lines") => Format::Lines,
            Some("csv") => Format::Csv,
            Some(other) => {
                return Err(Error::config(
                    "corpus.format",
                    format!("expected `lines` or `csv`, got {other:?}"),
                ))
            }
            None => {
                if input.input.extension().and_then(|e| e.to_str()) == Some("csv") {
                    Format::Csv
                } else {
                    Format::Lines
                }
            }
        },
    };
    let docs = match format {
        Format::Lines => load_lines(&input.input)?,
        Format::Csv => load_csv(&input.input)?,
    };
    Ok((docs, format))
}

/// A matrix directory is used as-is; a raw corpus is preprocessed in memory.
fn acquire_matrix(
    input: &InputArgs,
    corpus: &CorpusArgs,
    cfg: &ConfigFile,
) -> Result<(DocumentTermMatrix, Value)> {
    if input.input.is_dir() {
        let matrix = load_matrix(&input.input)?;
        let described = json!({
            "input": input.input.to_string_lossy(),
            "kind": "matrix-directory",
        });
        return Ok((matrix, described));
    }
    let (docs, format) = load_documents(input, cfg)?;
    let (pre, pre_json) = preprocess_settings(corpus, cfg)?;
    let token_lists: Vec<Vec<String>> =
        docs.iter().map(|d| preprocess_text(&d.text, &pre)).collect();
    let vocabulary = std::sync::Arc::new(select_vocabulary(&token_lists, &pre)?);
    let build = build_matrix(&docs, &vocabulary, &pre)?;
    let described = json!({
        "format": format!("{format:?}").to_lowercase(),
        "input": input.input.to_string_lossy(),
        "kind": "raw-corpus",
        "preprocess": pre_json,
    });
    Ok((build.matrix, described))
}

fn lda_settings(args: &LdaArgs, cfg: &ConfigFile) -> Result<LdaParams> {
    let k = resolve(args.k, cfg.get_usize("lda", "k")?, DEFAULT_K);
    let default_prior = 1.0 / k as f64;
    let params = LdaParams {
        k,
        alpha: resolve(args.alpha, cfg.get_f64("lda", "alpha")?, default_prior),
        beta: resolve(args.beta, cfg.get_f64("lda", "beta")?, default_prior),
        iterations: resolve(args.iterations, cfg.get_usize("lda", "iterations")?, DEFAULT_ITERATIONS),
        seed: 0,
    };
    params.validate()?;
    Ok(params)
}

fn lda_json(params: &LdaParams) -> Value {
    json!({
        "alpha": report::real(params.alpha),
        "beta": report::real(params.beta),
        "iterations": params.iterations,
        "k": params.k,
    })
}

fn stability_settings(args: &StabilityFlags, cfg: &ConfigFile, seed: u64) -> Result<StabilityConfig> {
    let config = StabilityConfig {
        runs_m: resolve(args.runs, cfg.get_usize("stability", "runs")?, 10),
        repeats_j: resolve(args.repeats, cfg.get_usize("stability", "repeats")?, 10),
        n_words: resolve(args.n_words, cfg.get_usize("stability", "n_words")?, 5),
        base_seed: seed,
    };
    config.validate()?;
    Ok(config)
}

fn de_settings(args: &DeArgs, stability: &StabilityConfig, cfg: &ConfigFile) -> Result<(DeConfig, Bounds, usize, Baseline)> {
    let de = DeConfig {
        np: resolve(args.np, cfg.get_usize("tune", "np")?, 10),
        f: resolve(args.f, cfg.get_f64("tune", "f")?, 0.7),
        cr: resolve(args.cr, cfg.get_f64("tune", "cr")?, 0.3),
        iter: resolve(args.generations, cfg.get_usize("tune", "generations")?, 3),
        inner_repeats: cfg.get_usize("tune", "inner_repeats")?.unwrap_or(1),
        final_repeats: stability.repeats_j,
    };
    de.validate()?;
    let defaults = Bounds::default();
    let bounds = Bounds {
        k_range: (
            resolve(args.k_min, cfg.get_usize("tune", "k_min")?, defaults.k_range.0),
            resolve(args.k_max, cfg.get_usize("tune", "k_max")?, defaults.k_range.1),
        ),
        alpha_range: (
            resolve(args.alpha_min, cfg.get_f64("tune", "alpha_min")?, defaults.alpha_range.0),
            resolve(args.alpha_max, cfg.get_f64("tune", "alpha_max")?, defaults.alpha_range.1),
        ),
        beta_range: (
            resolve(args.beta_min, cfg.get_f64("tune", "beta_min")?, defaults.beta_range.0),
            resolve(args.beta_max, cfg.get_f64("tune", "beta_max")?, defaults.beta_range.1),
        ),
    };
    bounds.validate()?;
    let budget = resolve(args.budget, cfg.get_usize("tune", "budget")?, 30);
    let baseline = args.baseline.unwrap_or(match cfg.get_str("tune", "baseline") {
        Some("random") => Baseline::Random,
        _ => Baseline::De,
    });
    Ok((de, bounds, budget, baseline))
}

fn de_json(de: &DeConfig, bounds: &Bounds) -> Value {
    json!({
        "alpha_range": [report::real(bounds.alpha_range.0), report::real(bounds.alpha_range.1)],
        "beta_range": [report::real(bounds.beta_range.0), report::real(bounds.beta_range.1)],
        "cr": report::real(de.cr),
        "f": report::real(de.f),
        "final_repeats": de.final_repeats,
        "generations": de.iter,
        "inner_repeats": de.inner_repeats,
        "k_range": [bounds.k_range.0, bounds.k_range.1],
        "np": de.np,
    })
}

fn stability_json_block(config: &StabilityConfig) -> Value {
    json!({
        "n_words": config.n_words,
        "repeats": config.repeats_j,
        "runs": config.runs_m,
    })
}

fn provenance_for(command: &str, settings: Value, seed: u64) -> Value {
    let described = json!({"command": command, "settings": settings});
    report::provenance(&report::canonical_config_text(&described), seed)
}

fn cmd_preprocess(args: PreprocessArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed_of(&args.run, cfg)?;
    if args.input.input.is_dir() {
        return Err(Error::invalid("preprocess expects a raw corpus file, not a matrix directory"));
    }
    let (docs, format) = load_documents(&args.input, cfg)?;
    let (pre, pre_json) = preprocess_settings(&args.corpus, cfg)?;
    let token_lists: Vec<Vec<String>> =
        docs.iter().map(|d| preprocess_text(&d.text, &pre)).collect();
    let vocabulary = std::sync::Arc::new(select_vocabulary(&token_lists, &pre)?);
    let build = build_matrix(&docs, &vocabulary, &pre)?;

    let settings = json!({
        "format": format!("{format:?}").to_lowercase(),
        "input": args.input.input.to_string_lossy(),
        "preprocess": pre_json,
    });
    let prov = provenance_for("preprocess", settings, seed);
    let mut out = OutputSet::new();
    for (name, content) in render_matrix(&build.matrix, &build.dropped) {
        out.add_text(&name, content);
    }
    out.add_json(
        "preprocess.json",
        &json!({
            "dropped_doc_ids": build.dropped,
            "kept_docs": build.matrix.num_docs(),
            "provenance": prov,
            "total_docs": docs.len(),
            "total_tokens": build.matrix.total_tokens(),
            "vocab_size": build.matrix.vocab_size(),
        }),
    );
    out.write_all(&args.run.out)?;
    println!(
        "preprocess: kept {} of {} documents, vocabulary {}, wrote {} files to {}",
        build.matrix.num_docs(),
        docs.len(),
        build.matrix.vocab_size(),
        out.names().len(),
        args.run.out.display()
    );
    Ok(())
}

fn curve_for(
    point: ScorePoint,
    matrix: &DocumentTermMatrix,
    stability: &StabilityConfig,
    iterations: usize,
) -> Result<Vec<StabilityReport>> {
    stability_curve(point, matrix, stability, iterations)
}

fn focal_report<'a>(curve: &'a [StabilityReport], n_words: usize) -> Result<&'a StabilityReport> {
    curve.get(n_words.wrapping_sub(1)).ok_or_else(|| {
        Error::invalid(format!(
            "n_words = {n_words} exceeds the curve length {} for this vocabulary",
            curve.len()
        ))
    })
}

fn cmd_stability(args: StabilityArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed_of(&args.run, cfg)?;
    let (matrix, input_json) = acquire_matrix(&args.input, &args.corpus, cfg)?;
    let params = lda_settings(&args.lda, cfg)?;
    let stability = stability_settings(&args.stability, cfg, seed)?;
    let point = ScorePoint { k: params.k, alpha: params.alpha, beta: params.beta };

    let curve = curve_for(point, &matrix, &stability, params.iterations)?;
    let focal = focal_report(&curve, stability.n_words)?;

    let settings = json!({
        "input": input_json,
        "lda": lda_json(&params),
        "stability": stability_json_block(&stability),
    });
    let prov = provenance_for("stability", settings, seed);
    let mut out = OutputSet::new();
    out.add_text("stability_curve.csv", report::curve_csv(&curve));
    out.add_json("stability.json", &report::stability_json(focal, &curve, prov));
    out.write_all(&args.run.out)?;
    println!(
        "stability: raw score {} at n={} (k={}, alpha={}, beta={}); wrote {} files to {}",
        report::round_sig(focal.raw_score),
        stability.n_words,
        params.k,
        report::round_sig(params.alpha),
        report::round_sig(params.beta),
        out.names().len(),
        args.run.out.display()
    );
    Ok(())
}

fn run_search(
    baseline: Baseline,
    matrix: &DocumentTermMatrix,
    stability: &StabilityConfig,
    de: &DeConfig,
    bounds: &Bounds,
    budget: usize,
    iterations: usize,
    seed: u64,
) -> Result<(TuningResult, &'static str)> {
    match baseline {
        Baseline::De => {
            let result =
                tune_de(matrix, stability.n_words, de, bounds, stability, iterations, seed)?;
            Ok((result, "de"))
        }
        Baseline::Random => {
            let result = random_search(
                matrix,
                stability.n_words,
                budget,
                de,
                bounds,
                stability,
                iterations,
                seed,
            )?;
            Ok((result, "random"))
        }
    }
}

fn cmd_tune(args: TuneArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed_of(&args.run, cfg)?;
    let (matrix, input_json) = acquire_matrix(&args.input, &args.corpus, cfg)?;
    let params = lda_settings(&args.lda, cfg)?;
    let stability = stability_settings(&args.stability, cfg, seed)?;
    let (de, bounds, budget, baseline) = de_settings(&args.de, &stability, cfg)?;

    let (result, method) =
        run_search(baseline, &matrix, &stability, &de, &bounds, budget, params.iterations, seed)?;

    // Before/after curves share one stability seed so the delta reflects
    // the parameters, not fresh shuffles.
    let curve_cfg = StabilityConfig {
        base_seed: seeds::derive(seed, &[40]),
        ..stability
    };
    let before_point = ScorePoint { k: params.k, alpha: params.alpha, beta: params.beta };
    let before = curve_for(before_point, &matrix, &curve_cfg, params.iterations)?;
    let after = curve_for(result.best.point(), &matrix, &curve_cfg, params.iterations)?;

    let settings = json!({
        "baseline": method,
        "budget": budget,
        "de": de_json(&de, &bounds),
        "input": input_json,
        "lda": lda_json(&params),
        "stability": stability_json_block(&stability),
    });
    let prov = provenance_for("tune", settings, seed);
    let mut out = OutputSet::new();
    out.add_json("tuning.json", &report::tuning_json(&result, method, prov));
    out.add_text("tune_log.jsonl", report::tune_log_jsonl(&result));
    out.add_text("before.csv", report::curve_csv(&before));
    out.add_text("after.csv", report::curve_csv(&after));
    out.add_text("delta.csv", report::delta_csv(&before, &after));
    out.write_all(&args.run.out)?;
    println!(
        "tune[{method}]: best k={} alpha={} beta={} search score {} final score {} ({} evaluations, {} lda fits); wrote {} files to {}",
        result.best.k as usize,
        report::round_sig(result.best.alpha),
        report::round_sig(result.best.beta),
        report::round_sig(result.best_score),
        report::round_sig(result.final_score),
        result.evaluations,
        result.lda_fit_count,
        out.names().len(),
        args.run.out.display()
    );
    Ok(())
}

fn read_tuned_params(path: &Path) -> Result<(usize, f64, f64)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let best = value.get("best").unwrap_or(&value);
    let field = |key: &str| -> Result<f64> {
        best.get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::parse(path, 1, format!("missing numeric field {key:?}")))
    };
    Ok((field("k")? as usize, field("alpha")?, field("beta")?))
}

fn cmd_classify(args: ClassifyArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed_of(&args.run, cfg)?;
    if args.input.input.is_dir() {
        return Err(Error::invalid(
            "classify expects a labeled CSV corpus; per-fold vocabularies cannot come from a prebuilt matrix",
        ));
    }
    let docs = load_csv(&args.input.input)?;
    let (pre, pre_json) = preprocess_settings(&args.corpus, cfg)?;
    let untuned = lda_settings(&args.lda, cfg)?;
    let folds = resolve(args.folds, cfg.get_usize("classify", "folds")?, 5);
    let positive = args
        .positive_label
        .clone()
        .or_else(|| cfg.get_str("classify", "positive_label").map(str::to_string));

    let (tuned_point, tuned_source) = match &args.tuned_params {
        Some(path) => (read_tuned_params(path)?, json!(path.to_string_lossy())),
        None => {
            let stability = stability_settings(&args.stability, cfg, seed)?;
            let (de, bounds, budget, baseline) = de_settings(&args.de, &stability, cfg)?;
            let token_lists: Vec<Vec<String>> =
                docs.iter().map(|d| preprocess_text(&d.text, &pre)).collect();
            let vocabulary = std::sync::Arc::new(select_vocabulary(&token_lists, &pre)?);
            let build = build_matrix(&docs, &vocabulary, &pre)?;
            let (result, method) = run_search(
                baseline,
                &build.matrix,
                &stability,
                &de,
                &bounds,
                budget,
                untuned.iterations,
                seeds::derive(seed, &[50]),
            )?;
            (
                (result.best.k as usize, result.best.alpha, result.best.beta),
                json!(format!("inline-{method}")),
            )
        }
    };
    let tuned = LdaParams {
        k: tuned_point.0,
        alpha: tuned_point.1,
        beta: tuned_point.2,
        iterations: untuned.iterations,
        seed: 0,
    };
    tuned.validate()?;

    let untuned_metrics =
        evaluate_pipeline(&docs, &pre, &untuned, folds, positive.as_deref(), seed)?;
    let tuned_metrics = evaluate_pipeline(&docs, &pre, &tuned, folds, positive.as_deref(), seed)?;

    let settings = json!({
        "folds": folds,
        "input": args.input.input.to_string_lossy(),
        "positive_label": positive.clone().map(Value::from).unwrap_or(Value::Null),
        "preprocess": pre_json,
        "tuned_source": tuned_source,
        "untuned": lda_json(&untuned),
    });
    let prov = provenance_for("classify", settings, seed);
    let mut out = OutputSet::new();
    out.add_json(
        "classify.json",
        &report::classify_json(&untuned_metrics, &tuned_metrics, tuned_point, prov),
    );
    out.write_all(&args.run.out)?;
    println!(
        "classify: untuned F1 {} F2 {} | tuned(k={}) F1 {} F2 {}; wrote classify.json to {}",
        report::round_sig(untuned_metrics.f1),
        report::round_sig(untuned_metrics.f2),
        tuned.k,
        report::round_sig(tuned_metrics.f1),
        report::round_sig(tuned_metrics.f2),
        args.run.out.display()
    );
    Ok(())
}

fn load_sample_groups(path: &Path) -> Result<Vec<SampleGroup>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let group_col =
        col("group").ok_or_else(|| Error::parse(path, 1, "missing required column `group`"))?;
    let value_col =
        col("value").ok_or_else(|| Error::parse(path, 1, "missing required column `value`"))?;

    let mut order: Vec<String> = Vec::new();
    let mut by_name: std::collections::HashMap<String, Vec<f64>> =
        std::collections::HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let group = record
            .get(group_col)
            .ok_or_else(|| Error::parse(path, line, "missing group field"))?
            .to_string();
        let value: f64 = record
            .get(value_col)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(path, line, "value is not a real number"))?;
        if !by_name.contains_key(&group) {
            order.push(group.clone());
        }
        by_name.entry(group).or_default().push(value);
    }
    if order.is_empty() {
        return Err(Error::parse(path, 1, "no data rows"));
    }
    Ok(order
        .into_iter()
        .map(|name| {
            let values = by_name.remove(&name).expect("group recorded");
            SampleGroup::new(name, values)
        })
        .collect())
}

fn cmd_stats(args: StatsArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed_of(&args.run, cfg)?;
    let groups = load_sample_groups(&args.input)?;
    let sk = ScottKnottConfig {
        significance: resolve(args.significance, cfg.get_f64("stats", "significance")?, 0.01),
        a12_threshold: resolve(args.a12_threshold, cfg.get_f64("stats", "a12_threshold")?, 0.6),
        bootstrap_samples: resolve(args.bootstrap, cfg.get_usize("stats", "bootstrap")?, 1000),
        seed,
    };
    let ranked = scott_knott(&groups, &sk)?;

    let settings = json!({
        "a12_threshold": report::real(sk.a12_threshold),
        "bootstrap": sk.bootstrap_samples,
        "groups": groups.iter().map(|g| g.name.clone()).collect::<Vec<_>>(),
        "input": args.input.to_string_lossy(),
        "significance": report::real(sk.significance),
    });
    let prov = provenance_for("stats", settings, seed);
    let mut out = OutputSet::new();
    out.add_text("ranks.csv", report::ranks_csv(&ranked));
    out.add_json("stats.json", &report::stats_json(&ranked, prov));
    out.write_all(&args.run.out)?;
    let mut rows: Vec<&crate::stats::RankedGroup> = ranked.iter().collect();
    rows.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.name.cmp(&b.name)));
    for row in rows {
        println!("rank {}  {}  median {}", row.rank, row.name, report::round_sig(row.median));
    }
    println!("stats: wrote {} files to {}", out.names().len(), args.run.out.display());
    Ok(())
}

fn markdown_metrics_row(label: &str, m: &Value) -> String {
    format!(
        "| {label} | {} | {} | {} | {} |\n",
        m["precision"], m["recall"], m["f1"], m["f2"]
    )
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let dir = &args.input;
    if !dir.is_dir() {
        return Err(Error::invalid(format!("{} is not a directory", dir.display())));
    }
    let read_json = |name: &str| -> Result<Option<Value>> {
        let path = dir.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::parse(&path, e.line(), e.to_string()))
    };

    let mut sections = Vec::new();
    if let Some(v) = read_json("stability.json")? {
        let mut s = String::from("## Stability\n\n");
        s.push_str(&format!(
            "Raw stability score {} at n = {}.\n\n| n | raw score |\n|---|---|\n",
            v["raw_score"], v["n_words"]
        ));
        for point in v["curve"].as_array().cloned().unwrap_or_default() {
            s.push_str(&format!("| {} | {} |\n", point["n"], point["raw_score"]));
        }
        sections.push(s);
    }
    if let Some(v) = read_json("tuning.json")? {
        sections.push(format!(
            "## Tuning\n\nMethod `{}`: best k = {}, alpha = {}, beta = {}.\n\nSearch score {}, \
             final score {}, {} evaluations, {} LDA fits.\n",
            v["method"].as_str().unwrap_or("?"),
            v["best"]["k"],
            v["best"]["alpha"],
            v["best"]["beta"],
            v["best_score"],
            v["final_score"],
            v["evaluations"],
            v["lda_fit_count"]
        ));
    }
    if let Some(v) = read_json("classify.json")? {
        let mut s = String::from(
            "## Classification\n\n| pipeline | precision | recall | F1 | F2 |\n|---|---|---|---|---|\n",
        );
        s.push_str(&markdown_metrics_row("untuned", &v["untuned"]));
        s.push_str(&markdown_metrics_row("tuned", &v["tuned"]));
        sections.push(s);
    }
    if let Some(v) = read_json("stats.json")? {
        let mut s = String::from("## Ranking\n\n| rank | group | median |\n|---|---|---|\n");
        for g in v["groups"].as_array().cloned().unwrap_or_default() {
            s.push_str(&format!("| {} | {} | {} |\n", g["rank"], g["name"], g["median"]));
        }
        sections.push(s);
    }
    if sections.is_empty() {
        return Err(Error::invalid(format!(
            "no report files found in {} (expected stability.json, tuning.json, classify.json or stats.json)",
            dir.display()
        )));
    }

    let mut summary = String::from("# Run summary\n\n");
    summary.push_str(&sections.join("\n"));
    let out_dir = args.out.clone().unwrap_or_else(|| dir.clone());
    let mut out = OutputSet::new();
    out.add_text("summary.md", summary);
    out.write_all(&out_dir)?;
    println!(
        "report: summarized {} sections into {}",
        sections.len(),
        out_dir.join("summary.md").display()
    );
    Ok(())
}

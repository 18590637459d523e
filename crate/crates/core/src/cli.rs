//! Command-line interface: `stats`, `split`, `evaluate`, `predict`.
//!
//! Every evaluate option can also come from a flat `key=value` config
//! file; flags win over file values, file values win over defaults.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    parse_ratings, parse_trust, split_folds, ItemIdx, RatingsTable, TrainView, TrustGraph, UserIdx,
};
use crate::error::{Error, Result};
use crate::eval::{run_experiment_collect, EvaluationReport, ExperimentConfig};
use crate::predict::{Method, PredictionOutcome, Predictor, PredictorConfig};
use crate::similarity::{build_histograms, build_user_profiles};

#[derive(Debug, Parser)]
#[command(name = "bcrec", version, about = "Trust-aware collaborative filtering over rating histograms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dataset statistics (user/item/rating/trust counts, sparsity)
    Stats {
        #[arg(long, value_name = "PATH")]
        ratings: PathBuf,
        #[arg(long, value_name = "PATH")]
        trust: Option<PathBuf>,
    },
    /// Assign every rating record to a fold and write the assignment
    Split {
        #[arg(long, value_name = "PATH")]
        ratings: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Run a k-fold evaluation and write the report
    Evaluate(EvaluateArgs),
    /// Predict a single (user, item) rate from the full dataset
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    A,
    B,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::A => Method::A,
            MethodArg::B => Method::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl From<Toggle> for bool {
    fn from(t: Toggle) -> bool {
        t == Toggle::On
    }
}

impl FromStr for Toggle {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "on" | "true" | "1" => Ok(Toggle::On),
            "off" | "false" | "0" => Ok(Toggle::Off),
            other => Err(format!("expected on/off, got {other:?}")),
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    pub ratings: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub trust: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub social: Option<Toggle>,
    #[arg(long, value_name = "K")]
    pub folds: Option<usize>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Comma-separated training folds (requires --test-fold)
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub train_folds: Option<Vec<usize>>,
    #[arg(long, value_name = "N")]
    pub test_fold: Option<usize>,
    /// Cap the total number of test records (smoke runs)
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
    /// Worker threads for prediction
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, value_enum)]
    pub rounding: Option<Toggle>,
    /// Keep a trustee in the trust aggregate even when it is the scorer
    #[arg(long, value_enum)]
    pub include_scorer_as_trustee: Option<Toggle>,
    /// Write the JSON report here
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Write a per-prediction CSV here
    #[arg(long, value_name = "PATH")]
    pub dump_predictions: Option<PathBuf>,
    /// Flat key=value config file; flags override its values
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Suppress progress lines on stderr
    #[arg(long, default_value_t = false)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    pub ratings: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub trust: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub social: Option<Toggle>,
    #[arg(long, value_enum)]
    pub include_scorer_as_trustee: Option<Toggle>,
    #[arg(long, value_enum)]
    pub rounding: Option<Toggle>,
    #[arg(long)]
    pub user: u64,
    #[arg(long)]
    pub item: u64,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Parsed flat config file.
#[derive(Debug, Default)]
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: &Path) -> Result<FileConfig> {
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        let mut map = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(lineno + 1, format!("expected key=value, got {line:?}")));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("bad value for {key}: {raw:?}"))),
        }
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad value for {key}: {raw:?}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

/// Evaluate options after flag/file/default resolution.
#[derive(Debug)]
pub struct ResolvedEvaluate {
    pub ratings: PathBuf,
    pub trust: Option<PathBuf>,
    pub experiment: ExperimentConfig,
    pub output: Option<PathBuf>,
    pub dump_predictions: Option<PathBuf>,
}

pub fn resolve_evaluate(args: &EvaluateArgs) -> Result<ResolvedEvaluate> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let defaults = ExperimentConfig::default();
    let default_jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

    let ratings = args
        .ratings
        .clone()
        .or(file.get::<PathBuf>("ratings")?)
        .ok_or_else(|| Error::Config("ratings path required (--ratings or config)".into()))?;
    let trust = args.trust.clone().or(file.get::<PathBuf>("trust")?);

    let method = match args.method {
        Some(m) => m.into(),
        None => match file.get::<String>("method")?.as_deref() {
            Some("a") | Some("A") => Method::A,
            Some("b") | Some("B") => Method::B,
            Some(other) => return Err(Error::Config(format!("bad method {other:?}"))),
            None => defaults.predictor.method,
        },
    };
    let social = match args.social {
        Some(t) => t.into(),
        None => file
            .get::<Toggle>("social")?
            .map(bool::from)
            .unwrap_or(defaults.predictor.social),
    };
    let rounding = match args.rounding {
        Some(t) => t.into(),
        None => file
            .get::<Toggle>("rounding")?
            .map(bool::from)
            .unwrap_or(defaults.predictor.rounding),
    };
    let include_scorer = match args.include_scorer_as_trustee {
        Some(t) => t.into(),
        None => file
            .get::<Toggle>("include_scorer_as_trustee")?
            .map(bool::from)
            .unwrap_or(defaults.predictor.include_scorer_as_trustee),
    };

    let experiment = ExperimentConfig {
        predictor: PredictorConfig {
            method,
            social,
            rounding,
            include_scorer_as_trustee: include_scorer,
            ..defaults.predictor
        },
        k: args.folds.or(file.get("folds")?).unwrap_or(defaults.k),
        seed: args.seed.or(file.get("seed")?).unwrap_or(defaults.seed),
        test_fold: args.test_fold.or(file.get("test_fold")?),
        train_folds: args.train_folds.clone().or(file.get_list("train_folds")?),
        worker_count: args.jobs.or(file.get("jobs")?).unwrap_or(default_jobs),
        limit: args.limit.or(file.get("limit")?),
        progress: !args.quiet,
    };
    experiment.validate()?;

    Ok(ResolvedEvaluate {
        ratings,
        trust,
        experiment,
        output: args.output.clone().or(file.get("output")?),
        dump_predictions: args
            .dump_predictions
            .clone()
            .or(file.get("dump_predictions")?),
    })
}

/// Dataset shape as printed by `stats`.
#[derive(Debug, Clone)]
pub struct DatasetStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub n_rejected: usize,
    pub n_duplicates: usize,
    pub sparsity: f64,
    pub trust: Option<TrustStats>,
}

#[derive(Debug, Clone)]
pub struct TrustStats {
    pub n_raw_edges: usize,
    pub n_edges: usize,
    pub n_self_edges: usize,
    pub n_duplicate_edges: usize,
    pub n_trustors: usize,
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "users:            {}", self.n_users)?;
        writeln!(f, "items:            {}", self.n_items)?;
        writeln!(f, "ratings:          {}", self.n_ratings)?;
        if self.n_rejected > 0 {
            writeln!(f, "rejected ratings: {}", self.n_rejected)?;
        }
        if self.n_duplicates > 0 {
            writeln!(f, "duplicate pairs:  {}", self.n_duplicates)?;
        }
        write!(f, "sparsity:         {:.6}", self.sparsity)?;
        if let Some(t) = &self.trust {
            writeln!(f)?;
            writeln!(f, "trust lines:      {}", t.n_raw_edges)?;
            writeln!(f, "trust edges:      {} (distinct, non-self)", t.n_edges)?;
            write!(f, "trustors:         {}", t.n_trustors)?;
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::file(path, e))
}

pub fn load_ratings(path: &Path) -> Result<RatingsTable> {
    parse_ratings(open(path)?)
}

pub fn load_trust(path: &Path) -> Result<TrustGraph> {
    parse_trust(open(path)?)
}

/// Counts and sparsity for the `stats` subcommand.
pub fn dataset_stats(ratings: &Path, trust: Option<&Path>) -> Result<DatasetStats> {
    let table = load_ratings(ratings)?;
    if table.n_ratings() == 0 {
        return Err(Error::InvalidArgument(format!(
            "empty dataset: no valid ratings in {}",
            ratings.display()
        )));
    }
    let trust = trust
        .map(|path| -> Result<TrustStats> {
            let graph = load_trust(path)?;
            Ok(TrustStats {
                n_raw_edges: graph.n_raw_edges,
                n_edges: graph.n_edges,
                n_self_edges: graph.n_self_edges,
                n_duplicate_edges: graph.n_duplicate_edges,
                n_trustors: graph.n_trustors(),
            })
        })
        .transpose()?;
    Ok(DatasetStats {
        n_users: table.n_users(),
        n_items: table.n_items(),
        n_ratings: table.n_ratings(),
        n_rejected: table.n_rejected,
        n_duplicates: table.n_duplicates,
        sparsity: table.sparsity(),
        trust,
    })
}

/// Splits the ratings into folds and writes `record_index fold_id` lines.
pub fn write_split(ratings: &Path, k: usize, seed: u64, output: &Path) -> Result<()> {
    let table = load_ratings(ratings)?;
    let split = split_folds(&table, k, seed)?;
    let file = File::create(output).map_err(|e| Error::file(output, e))?;
    let mut out = BufWriter::new(file);
    split.write_lines(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Runs the evaluation and writes the report and optional dump.
pub fn evaluate(resolved: &ResolvedEvaluate) -> Result<EvaluationReport> {
    let table = load_ratings(&resolved.ratings)?;
    let trust = match &resolved.trust {
        Some(path) => load_trust(path)?,
        None => TrustGraph::default(),
    };
    let (report, rows) = run_experiment_collect(&resolved.experiment, &table, &trust)?;
    if let Some(path) = &resolved.output {
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, &report)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    if let Some(path) = &resolved.dump_predictions {
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::new(file);
        crate::eval::write_predictions_csv(&rows, &mut out)?;
        out.flush()?;
    }
    Ok(report)
}

fn print_metrics(label: &str, m: &crate::eval::MetricsBlock) {
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "{label}: n_test={} covered={} ({:.2}%) | rounded mae={} rmse={} | raw mae={} rmse={}",
        m.n_test,
        m.n_predicted,
        m.coverage * 100.0,
        fmt(m.rounded.mae),
        fmt(m.rounded.rmse),
        fmt(m.raw.mae),
        fmt(m.raw.rmse),
    );
}

/// Single-prediction output for the `predict` subcommand.
#[derive(Debug)]
pub struct SinglePrediction {
    pub outcome: PredictionOutcome,
    pub variant: String,
}

/// Builds the model from the full ratings file (no held-out fold) and
/// predicts one (user, item) pair given by external id.
pub fn predict_single(
    ratings: &Path,
    trust: Option<&Path>,
    cfg: PredictorConfig,
    user: u64,
    item: u64,
) -> Result<SinglePrediction> {
    cfg.validate()?;
    let table = load_ratings(ratings)?;
    let trust = match trust {
        Some(path) => load_trust(path)?,
        None => TrustGraph::default(),
    };
    let Some(q) = table.users().resolve(user) else {
        return Err(Error::InvalidArgument(format!("unknown user id {user}")));
    };
    let outcome = match table.items().resolve(item) {
        None => {
            // never rated by anyone: same situation as an unseen item
            PredictionOutcome::NotCovered(crate::predict::NotCoveredReason::ItemUnseen)
        }
        Some(t) => {
            let train = TrainView::full(&table);
            let stats = build_histograms(&train);
            let profiles = build_user_profiles(&train, &stats);
            let trust_index = trust.resolve(table.users());
            Predictor {
                train: &train,
                profiles: &profiles,
                trust: &trust_index,
                cfg,
            }
            .predict(UserIdx(q), ItemIdx(t))
        }
    };
    Ok(SinglePrediction {
        outcome,
        variant: cfg.variant_label(),
    })
}

fn resolve_predict(args: &PredictArgs) -> Result<(PathBuf, Option<PathBuf>, PredictorConfig)> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let defaults = PredictorConfig::default();
    let ratings = args
        .ratings
        .clone()
        .or(file.get::<PathBuf>("ratings")?)
        .ok_or_else(|| Error::Config("ratings path required (--ratings or config)".into()))?;
    let trust = args.trust.clone().or(file.get::<PathBuf>("trust")?);
    let method = match args.method {
        Some(m) => m.into(),
        None => match file.get::<String>("method")?.as_deref() {
            Some("a") | Some("A") => Method::A,
            Some("b") | Some("B") => Method::B,
            Some(other) => return Err(Error::Config(format!("bad method {other:?}"))),
            None => defaults.method,
        },
    };
    let cfg = PredictorConfig {
        method,
        social: args
            .social
            .map(bool::from)
            .or(file.get::<Toggle>("social")?.map(bool::from))
            .unwrap_or(defaults.social),
        rounding: args
            .rounding
            .map(bool::from)
            .or(file.get::<Toggle>("rounding")?.map(bool::from))
            .unwrap_or(defaults.rounding),
        include_scorer_as_trustee: args
            .include_scorer_as_trustee
            .map(bool::from)
            .or(file
                .get::<Toggle>("include_scorer_as_trustee")?
                .map(bool::from))
            .unwrap_or(defaults.include_scorer_as_trustee),
        ..defaults
    };
    Ok((ratings, trust, cfg))
}

/// Runs a parsed command; errors map to a nonzero exit in `main`.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats { ratings, trust } => {
            let stats = dataset_stats(&ratings, trust.as_deref())?;
            println!("{stats}");
        }
        Command::Split {
            ratings,
            folds,
            seed,
            output,
        } => {
            write_split(&ratings, folds, seed, &output)?;
            println!("wrote fold assignment to {}", output.display());
        }
        Command::Evaluate(args) => {
            let resolved = resolve_evaluate(&args)?;
            let report = evaluate(&resolved)?;
            println!("{}", report.variant);
            println!("protocol: {}", report.protocol);
            for fold in &report.folds {
                print_metrics(&format!("fold {}", fold.test_fold), &fold.metrics);
            }
            print_metrics("overall", &report.aggregate);
            if let Some(path) = &resolved.output {
                println!("report written to {}", path.display());
            }
            if let Some(path) = &resolved.dump_predictions {
                println!("predictions written to {}", path.display());
            }
        }
        Command::Predict(args) => {
            let (ratings, trust, cfg) = resolve_predict(&args)?;
            let prediction = predict_single(&ratings, trust.as_deref(), cfg, args.user, args.item)?;
            println!("{}", prediction.variant);
            match prediction.outcome {
                PredictionOutcome::Predicted { raw, rounded } => {
                    if cfg.rounding {
                        println!("predicted rate: {rounded} (raw {raw:.6})");
                    } else {
                        println!("predicted rate: {raw:.6} (rounds to {rounded})");
                    }
                }
                PredictionOutcome::NotCovered(reason) => {
                    println!("not covered: {reason}");
                }
            }
        }
    }
    Ok(())
}

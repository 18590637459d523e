//! K-fold experiment runner: MAE, RMSE, and coverage per fold and overall.
//!
//! Test records inside a fold are predicted concurrently by a dedicated
//! worker pool; each outcome lands in its record's slot and the metric
//! reduction runs serially in record order afterwards, so the report is
//! identical whatever the worker count.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{
    all_but, split_folds, train_test_views, RatingsTable, TrustGraph,
};
use crate::error::{Error, Result};
use crate::predict::{NotCoveredReason, PredictionOutcome, Predictor, PredictorConfig};
use crate::similarity::{build_histograms, build_user_profiles};

/// Everything a reproducible run needs besides the input files.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub predictor: PredictorConfig,
    /// Fold count.
    pub k: usize,
    /// Seed for the fold permutation.
    pub seed: u64,
    /// Restrict the run to one test fold; `None` tests every fold in turn.
    pub test_fold: Option<usize>,
    /// Explicit training folds (requires `test_fold`); `None` means all
    /// folds except the test fold.
    pub train_folds: Option<Vec<usize>>,
    pub worker_count: usize,
    /// Cap on the total number of test records, for smoke runs.
    pub limit: Option<usize>,
    /// Emit progress lines to stderr. Not part of the report contract.
    #[serde(skip_serializing)]
    pub progress: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            predictor: PredictorConfig::default(),
            k: 5,
            seed: 42,
            test_fold: None,
            train_folds: None,
            worker_count: 1,
            limit: None,
            progress: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.predictor.validate()?;
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!(
                "fold count must be at least 2, got {}",
                self.k
            )));
        }
        if self.worker_count == 0 {
            return Err(Error::InvalidArgument("worker count must be positive".into()));
        }
        if let Some(tf) = self.test_fold {
            if tf >= self.k {
                return Err(Error::InvalidArgument(format!(
                    "test fold {tf} out of range for k={}",
                    self.k
                )));
            }
        }
        if let Some(folds) = &self.train_folds {
            let Some(tf) = self.test_fold else {
                return Err(Error::InvalidArgument(
                    "explicit train folds require an explicit test fold".into(),
                ));
            };
            if folds.is_empty() {
                return Err(Error::InvalidArgument("train fold list is empty".into()));
            }
            if folds.contains(&tf) {
                return Err(Error::InvalidArgument(format!(
                    "test fold {tf} overlaps the training folds"
                )));
            }
            if let Some(&bad) = folds.iter().find(|&&f| f >= self.k) {
                return Err(Error::InvalidArgument(format!(
                    "train fold {bad} out of range for k={}",
                    self.k
                )));
            }
        }
        Ok(())
    }

    fn protocol(&self) -> String {
        match (self.test_fold, &self.train_folds) {
            (Some(tf), Some(folds)) => format!(
                "single configuration: test fold {tf}, training folds {folds:?}, k={}, seed={}",
                self.k, self.seed
            ),
            (Some(tf), None) => format!(
                "single configuration: test fold {tf}, training on all remaining folds, k={}, seed={}",
                self.k, self.seed
            ),
            (None, _) => format!(
                "{}-fold cross-validation, seed={}: each fold tested once, training on all remaining folds",
                self.k, self.seed
            ),
        }
    }
}

/// Mean absolute error over predicted pairs; `None` when nothing was
/// predicted.
pub fn mae(pairs: &[(u8, f64)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let total: f64 = pairs.iter().map(|&(t, p)| (t as f64 - p).abs()).sum();
    Some(total / pairs.len() as f64)
}

/// Root mean square error over predicted pairs; `None` when empty.
pub fn rmse(pairs: &[(u8, f64)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let total: f64 = pairs.iter().map(|&(t, p)| (t as f64 - p).powi(2)).sum();
    Some((total / pairs.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct NotCoveredCounts {
    pub item_unseen: usize,
    pub no_usable_scorers: usize,
}

/// Coverage and error metrics over one set of outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsBlock {
    pub n_test: usize,
    pub n_predicted: usize,
    pub coverage: f64,
    /// Metrics against the rounded predictions.
    pub rounded: Metrics,
    /// Metrics against the raw (unrounded, unclamped) predictions.
    pub raw: Metrics,
    pub not_covered: NotCoveredCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub test_fold: usize,
    pub train_folds: Vec<usize>,
    #[serde(flatten)]
    pub metrics: MetricsBlock,
    pub duration_secs: f64,
}

/// Dataset shape echoed into the report.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub n_trust_edges: usize,
    pub sparsity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub variant: String,
    pub protocol: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub folds: Vec<FoldReport>,
    pub aggregate: MetricsBlock,
    pub duration_secs: f64,
}

/// One prediction with its ground truth, in external id space.
#[derive(Debug, Clone, Copy)]
pub struct PredictionRow {
    pub user: u64,
    pub item: u64,
    pub truth: u8,
    pub outcome: PredictionOutcome,
}

fn metrics_over(rows: &[PredictionRow]) -> MetricsBlock {
    let mut rounded_pairs = Vec::new();
    let mut raw_pairs = Vec::new();
    let mut not_covered = NotCoveredCounts::default();
    for row in rows {
        match row.outcome {
            PredictionOutcome::Predicted { raw, rounded } => {
                rounded_pairs.push((row.truth, rounded as f64));
                raw_pairs.push((row.truth, raw));
            }
            PredictionOutcome::NotCovered(NotCoveredReason::ItemUnseen) => {
                not_covered.item_unseen += 1;
            }
            PredictionOutcome::NotCovered(NotCoveredReason::NoUsableScorers) => {
                not_covered.no_usable_scorers += 1;
            }
        }
    }
    let n_test = rows.len();
    let n_predicted = rounded_pairs.len();
    MetricsBlock {
        n_test,
        n_predicted,
        coverage: if n_test == 0 {
            0.0
        } else {
            n_predicted as f64 / n_test as f64
        },
        rounded: Metrics {
            mae: mae(&rounded_pairs),
            rmse: rmse(&rounded_pairs),
        },
        raw: Metrics {
            mae: mae(&raw_pairs),
            rmse: rmse(&raw_pairs),
        },
        not_covered,
    }
}

/// Runs the configured experiment and returns the report.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    table: &RatingsTable,
    trust: &TrustGraph,
) -> Result<EvaluationReport> {
    run_experiment_collect(cfg, table, trust).map(|(report, _)| report)
}

/// As [`run_experiment`], additionally returning every per-record
/// prediction for dumping or analysis.
pub fn run_experiment_collect(
    cfg: &ExperimentConfig,
    table: &RatingsTable,
    trust: &TrustGraph,
) -> Result<(EvaluationReport, Vec<PredictionRow>)> {
    cfg.validate()?;
    let started = Instant::now();
    let split = split_folds(table, cfg.k, cfg.seed)?;
    let trust_index = trust.resolve(table.users());

    let fold_plans: Vec<(usize, BTreeSet<usize>)> = match cfg.test_fold {
        Some(tf) => {
            let train = match &cfg.train_folds {
                Some(folds) => folds.iter().copied().collect(),
                None => all_but(cfg.k, tf),
            };
            vec![(tf, train)]
        }
        None => (0..cfg.k).map(|f| (f, all_but(cfg.k, f))).collect(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let progress_counter = AtomicUsize::new(0);
    let mut folds = Vec::new();
    let mut all_rows: Vec<PredictionRow> = Vec::new();
    let mut remaining = cfg.limit.unwrap_or(usize::MAX);

    for (test_fold, train_folds) in fold_plans {
        if remaining == 0 {
            break;
        }
        let fold_started = Instant::now();
        let (train, mut test) = train_test_views(table, &split, test_fold, &train_folds)?;
        if test.len() > remaining {
            test.truncate(remaining);
        }
        remaining -= test.len();

        let stats = build_histograms(&train);
        let profiles = build_user_profiles(&train, &stats);
        let predictor = Predictor {
            train: &train,
            profiles: &profiles,
            trust: &trust_index,
            cfg: cfg.predictor,
        };

        let outcomes: Vec<PredictionOutcome> = pool.install(|| {
            test.par_iter()
                .map(|record| {
                    let outcome = predictor.predict(record.user, record.item);
                    if cfg.progress {
                        let done = progress_counter.fetch_add(1, Ordering::Relaxed) + 1;
                        if done.is_multiple_of(10_000) {
                            eprintln!("  predicted {done} records");
                        }
                    }
                    outcome
                })
                .collect()
        });

        let rows: Vec<PredictionRow> = test
            .iter()
            .zip(&outcomes)
            .map(|(record, &outcome)| PredictionRow {
                user: table.users().external(record.user.0),
                item: table.items().external(record.item.0),
                truth: record.rating,
                outcome,
            })
            .collect();

        let metrics = metrics_over(&rows);
        if cfg.progress {
            eprintln!(
                "fold {test_fold}: {} / {} covered, took {:.1}s",
                metrics.n_predicted,
                metrics.n_test,
                fold_started.elapsed().as_secs_f64()
            );
        }
        folds.push(FoldReport {
            test_fold,
            train_folds: train_folds.iter().copied().collect(),
            metrics,
            duration_secs: fold_started.elapsed().as_secs_f64(),
        });
        all_rows.extend(rows);
    }

    let aggregate = metrics_over(&all_rows);
    let report = EvaluationReport {
        variant: cfg.predictor.variant_label(),
        protocol: cfg.protocol(),
        config: cfg.clone(),
        dataset: DatasetSummary {
            n_users: table.n_users(),
            n_items: table.n_items(),
            n_ratings: table.n_ratings(),
            n_trust_edges: trust.n_edges,
            sparsity: table.sparsity(),
        },
        folds,
        aggregate,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    Ok((report, all_rows))
}

/// Writes the per-prediction dump as CSV.
pub fn write_predictions_csv<W: std::io::Write>(
    rows: &[PredictionRow],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "user,item,truth,raw,rounded,covered,reason")?;
    for row in rows {
        match row.outcome {
            PredictionOutcome::Predicted { raw, rounded } => writeln!(
                out,
                "{},{},{},{raw},{rounded},true,",
                row.user, row.item, row.truth
            )?,
            PredictionOutcome::NotCovered(reason) => writeln!(
                out,
                "{},{},{},,,false,{reason}",
                row.user, row.item, row.truth
            )?,
        }
    }
    Ok(())
}

//! End-to-end runs: preprocessing, model training and the filter sweep.

mod config;
mod summary;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::ensemble::{
    combine_predictions, fit_stacker, member_predictions, train_bagging, train_boosting, Combiner,
    EnsembleFit,
};
use crate::error::{Error, Result};
use crate::forecast_linear::{fit_arimax, fit_linear, ArimaxOrder};
use crate::forecast_neural::{self, Arch};
use crate::model::ForecastModel;
use crate::persistence::{
    save_model, write_report, ArimaxSummary, CorrelationAudit, EnsembleEntry, FilterAudit,
    MemberEntry, ModelEntry, PreprocessAudit, RunReport, SplitMetrics, StackedEntry, SweepReport,
    SweepRow, WindowAudit,
};
use crate::preprocess::{
    apply_scaler, drop_constant_features, fit_scaler, make_windows, proportional_filter,
    remove_outliers_zscore, select_features, shuffle_split, window_features, FilterConfig,
};
use crate::stats::evaluate_metrics;
use crate::types::{RawTable, SplitSet, WindowedDataset};

pub use config::{
    EnsembleChoice, EnsembleSection, ModelName, ModelSection, RunConfig, RunOverrides, TrainSection,
};
pub use summary::{format_run_summary, format_sweep_summary};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output of preprocessing, shared by every model of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Audit with a placeholder filter section (filled per filtering pass).
    pub audit: PreprocessAudit,
    /// Splits of windows at the context width.
    pub split: SplitSet,
    pub width: usize,
    pub target_feature: usize,
    pub warnings: Vec<String>,
}

fn names(table: &RawTable, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| table.column_names()[j].clone()).collect()
}

/// Cleansing, feature selection, scaling, windowing and splitting.
pub fn prepare(table: &RawTable, cfg: &RunConfig) -> Result<Prepared> {
    let pcfg = &cfg.preprocess;
    let (no_const, dropped) = drop_constant_features(table);
    let (cleansed, outliers) = remove_outliers_zscore(&no_const, pcfg.zscore_threshold)?;
    let sel = select_features(&cleansed, pcfg.correlation_rule())?;
    let scaler = fit_scaler(&sel.table);
    let scaled = apply_scaler(&sel.table, &scaler)?;

    let context = cfg.context_width();
    let windows = make_windows(&scaled, context)?;
    let (cols, target_feature) = window_features(&scaled);
    let split = shuffle_split(&windows, pcfg.split_fractions, pcfg.shuffle_seed)?;

    let per_feature_r = sel
        .report
        .per_feature_r
        .iter()
        .map(|(&j, &r)| (cleansed.column_names()[j].clone(), r))
        .collect();
    let audit = PreprocessAudit {
        input_rows: table.n_rows(),
        input_columns: table.n_cols(),
        dropped_constant: names(table, &dropped),
        zscore_threshold: pcfg.zscore_threshold,
        outlier_sigma: "sample",
        outliers_removed: outliers.len(),
        correlation: CorrelationAudit {
            per_feature_r,
            mean_abs_r: sel.report.mean_abs_r,
            threshold: sel.threshold,
            selected: names(&sel.table, &sel.table.feature_columns()),
            dropped: names(&cleansed, &sel.dropped),
        },
        scaler,
        windows: WindowAudit {
            width: pcfg.window_width,
            context_width: context,
            features: names(&scaled, &cols),
            total: windows.len(),
            train: split.train.len(),
            val: split.val.len(),
            test: split.test.len(),
        },
        filter: FilterAudit {
            variance_threshold: cfg.filter.variance_threshold,
            proportion: 0.0,
            candidates: 0,
            discarded_count: 0,
            kept: split.train.len(),
        },
    };
    Ok(Prepared {
        audit,
        split,
        width: pcfg.window_width,
        target_feature,
        warnings: sel.warnings,
    })
}

/// Train/val/test sets at the context width (`wide`) and the model width.
#[derive(Debug, Clone)]
pub struct ModelSets {
    pub wide: [WindowedDataset; 3],
    pub narrow: [WindowedDataset; 3],
}

/// Apply the proportional filter to the training split.
pub fn filter_sets(prep: &Prepared, fcfg: &FilterConfig) -> Result<(ModelSets, FilterAudit)> {
    let narrow_train = prep.split.train.tail(prep.width)?;
    let outcome = proportional_filter(&narrow_train, fcfg, prep.target_feature)?;
    let wide_train = prep.split.train.select(&outcome.kept);
    let audit = FilterAudit {
        variance_threshold: fcfg.variance_threshold,
        proportion: fcfg.discard_proportion,
        candidates: outcome.candidates,
        discarded_count: outcome.discarded_count,
        kept: outcome.kept.len(),
    };
    let narrow = [
        outcome.dataset,
        prep.split.val.tail(prep.width)?,
        prep.split.test.tail(prep.width)?,
    ];
    let wide = [wide_train, prep.split.val.clone(), prep.split.test.clone()];
    Ok((ModelSets { wide, narrow }, audit))
}

/// One concrete model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Job {
    Linear,
    Arima(ArimaxOrder),
    Network(Arch),
}

impl Job {
    pub fn name(&self) -> String {
        match self {
            Job::Linear => "lr".into(),
            Job::Arima(o) => o.to_string(),
            Job::Network(a) => a.name().into(),
        }
    }

    pub fn file_stem(&self) -> String {
        match self {
            Job::Arima(o) => format!("arima_{}_{}_{}", o.p, o.d, o.q),
            _ => self.name(),
        }
    }

    /// Expand a configured model name into jobs (one per ARIMA order).
    pub fn expand(name: ModelName, cfg: &RunConfig) -> Vec<Job> {
        match name {
            ModelName::Lr => vec![Job::Linear],
            ModelName::Arima => cfg.arima_orders().into_iter().map(Job::Arima).collect(),
            other => vec![Job::Network(other.arch().expect("neural model"))],
        }
    }
}

/// A fitted job: its report entry, and the model with its seeds on success.
#[derive(Debug)]
pub struct JobResult {
    pub entry: ModelEntry,
    pub model: Option<(ForecastModel, Vec<u64>)>,
    pub error: Option<Error>,
    pub warnings: Vec<String>,
}

fn metrics_of(preds: [&[f64]; 3], sets: &[WindowedDataset; 3]) -> Result<SplitMetrics> {
    Ok(SplitMetrics {
        train: evaluate_metrics(sets[0].targets(), preds[0])?,
        val: evaluate_metrics(sets[1].targets(), preds[1])?,
        test: evaluate_metrics(sets[2].targets(), preds[2])?,
    })
}

fn model_metrics(model: &ForecastModel, sets: &[WindowedDataset; 3]) -> Result<SplitMetrics> {
    let p: Vec<Vec<f64>> = sets.iter().map(|s| model.predict_batch(s)).collect::<Result<_>>()?;
    metrics_of([&p[0], &p[1], &p[2]], sets)
}

fn ensemble_report(
    fit: &EnsembleFit,
    requested: usize,
    stack: bool,
    sets: &[WindowedDataset; 3],
    warnings: &mut Vec<String>,
    name: &str,
) -> Result<(EnsembleEntry, Option<Combiner>)> {
    let per_split: Vec<Vec<Vec<f64>>> = sets
        .iter()
        .map(|s| member_predictions(&fit.model, s))
        .collect::<Result<_>>()?;
    let members = fit
        .members
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if m.retried {
                warnings.push(format!("{name}: member {j} diverged and was retrained with seed {}", m.seed));
            }
            Ok(MemberEntry {
                seed: m.seed,
                train_size: m.train_size,
                retried: m.retried,
                metrics: metrics_of([&per_split[0][j], &per_split[1][j], &per_split[2][j]], sets)?,
                trace: m.trace.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let combined_with = |c: &Combiner| -> Result<SplitMetrics> {
        let p: Vec<Vec<f64>> = (0..3)
            .map(|k| combine_predictions(c, &per_split[k], sets[k].len()))
            .collect();
        metrics_of([&p[0], &p[1], &p[2]], sets)
    };
    let combined = combined_with(&Combiner::Mean)?;
    let mut stacker = None;
    let stacked = if stack {
        let s = fit_stacker(&fit.model.members, &sets[1])?;
        if s.mean_fallback {
            warnings.push(format!("{name}: stacking design singular, using the mean combiner"));
        }
        let metrics = combined_with(&s.combiner)?;
        let Combiner::Stacker { weights, bias } = &s.combiner else {
            unreachable!("stacker fit returns a stacker combiner")
        };
        let entry = StackedEntry {
            weights: weights.clone(),
            bias: *bias,
            mean_fallback: s.mean_fallback,
            metrics,
        };
        stacker = Some(s.combiner);
        Some(entry)
    } else {
        None
    };
    Ok((
        EnsembleEntry {
            method: fit.model.method.to_string(),
            requested_members: requested,
            members,
            combined,
            stacked,
            boost_threshold: fit.model.boost_threshold,
            boost_next_sizes: fit.rounds.iter().map(|r| r.next_indices.len()).collect(),
        },
        stacker,
    ))
}

fn fit_job(
    job: Job,
    cfg: &RunConfig,
    sets: &ModelSets,
    ensemble: EnsembleChoice,
    entry: &mut ModelEntry,
    warnings: &mut Vec<String>,
) -> Result<(ForecastModel, Vec<u64>)> {
    let name = job.name();
    match job {
        Job::Linear => {
            let m = fit_linear(&sets.narrow[0])?;
            if m.ridge_fallback {
                warnings.push(format!("{name}: singular normal equations, ridge fallback used"));
            }
            entry.ridge_fallback = Some(m.ridge_fallback);
            let model = ForecastModel::Linear(m);
            entry.metrics = Some(model_metrics(&model, &sets.narrow)?);
            Ok((model, Vec::new()))
        }
        Job::Arima(order) => {
            let m = fit_arimax(&sets.wide[0], order)?;
            if let Some(w) = &m.warning {
                warnings.push(format!("{name}: {w}"));
            }
            entry.ridge_fallback = Some(m.ridge_fallback);
            entry.arimax = Some(ArimaxSummary {
                p: order.p,
                d: order.d,
                q: order.q,
                init: m.init,
                refine_status: m.refine_status,
                refine_steps: m.refine_steps,
                stage1_css: m.stage1_css,
                css: m.css,
            });
            let model = ForecastModel::Arimax(m);
            entry.metrics = Some(model_metrics(&model, &sets.wide)?);
            Ok((model, Vec::new()))
        }
        Job::Network(arch) => {
            let net = cfg.network(arch);
            let [train, val, _] = &sets.narrow;
            let ens = &cfg.ensemble;
            let fit = match ensemble {
                EnsembleChoice::None => {
                    let trained = forecast_neural::train(&net, train, val)?;
                    entry.trace = Some(trained.trace);
                    let model = ForecastModel::Network(trained.params);
                    entry.metrics = Some(model_metrics(&model, &sets.narrow)?);
                    return Ok((model, vec![net.seed]));
                }
                EnsembleChoice::Bagging => train_bagging(&net, ens.members, train, val)?,
                EnsembleChoice::Boosting => train_boosting(
                    &net,
                    ens.members,
                    ens.boost_threshold,
                    ens.residual_scope,
                    train,
                    val,
                )?,
            };
            let (report, stacker) =
                ensemble_report(&fit, ens.members, ens.stack, &sets.narrow, warnings, &name)?;
            let mut model = fit.model.clone();
            entry.metrics = Some(match (&stacker, &report.stacked) {
                (Some(c), Some(s)) => {
                    model.combiner = c.clone();
                    s.metrics
                }
                _ => report.combined,
            });
            entry.ensemble = Some(report);
            let seeds = fit.members.iter().map(|m| m.seed).collect();
            Ok((ForecastModel::Ensemble(model), seeds))
        }
    }
}

/// Fit one job, capturing any failure in the report entry.
pub fn run_job(job: Job, cfg: &RunConfig, sets: &ModelSets, ensemble: EnsembleChoice) -> JobResult {
    let kind = match job {
        Job::Linear => "linear",
        Job::Arima(_) => "arimax",
        Job::Network(_) if ensemble != EnsembleChoice::None => "ensemble",
        Job::Network(_) => "network",
    };
    let mut entry = ModelEntry::new(job.name(), kind);
    let mut warnings = Vec::new();
    match fit_job(job, cfg, sets, ensemble, &mut entry, &mut warnings) {
        Ok(model) => JobResult {
            entry,
            model: Some(model),
            error: None,
            warnings,
        },
        Err(e) => {
            if let Error::Diverged { trace, .. } = &e {
                entry.trace = Some((**trace).clone());
            }
            entry.status = "failed".into();
            entry.metrics = None;
            entry.error = Some(e.to_string());
            warnings.push(format!("{}: {e}", job.name()));
            JobResult {
                entry,
                model: None,
                error: Some(e),
                warnings,
            }
        }
    }
}

fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config is serializable")
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Artifact file name, model and seeds for every successful job.
    pub artifacts: Vec<(String, ForecastModel, Vec<u64>)>,
    /// First model failure, if any; the report is still complete.
    pub failure: Option<Error>,
}

/// Full pipeline over `table`. Errors only if preprocessing fails; model
/// failures are recorded in the report.
pub fn run_pipeline(table: &RawTable, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let total = Instant::now();
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let prep = prepare(table, cfg)?;
    let (sets, filter) = filter_sets(&prep, &cfg.filter)?;
    timings.insert("preprocess".to_string(), seconds(t));

    let mut audit = prep.audit.clone();
    audit.filter = filter;
    let mut warnings = prep.warnings.clone();
    let mut models = Vec::new();
    let mut artifacts = Vec::new();
    let mut failure = None;
    for &name in &cfg.model.models {
        for job in Job::expand(name, cfg) {
            let t = Instant::now();
            let mut result = run_job(job, cfg, &sets, cfg.ensemble.method);
            timings.insert(format!("model:{}", job.name()), seconds(t));
            if let Some((model, seeds)) = result.model {
                let file = format!("{}.bin", job.file_stem());
                result.entry.artifact = Some(file.clone());
                artifacts.push((file, model, seeds));
            }
            warnings.append(&mut result.warnings);
            if failure.is_none() {
                failure = result.error;
            }
            models.push(result.entry);
        }
    }
    timings.insert("total".to_string(), seconds(total));
    let report = RunReport {
        version: VERSION.to_string(),
        config: config_echo(cfg),
        status: if failure.is_some() { "partial" } else { "ok" }.into(),
        preprocess: audit,
        models,
        warnings,
        timings,
    };
    Ok(RunOutcome {
        report,
        artifacts,
        failure,
    })
}

/// Write `report.json` and one artifact per model into `out_dir`.
pub fn write_run_outputs(outcome: &RunOutcome, out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (file, model, seeds) in &outcome.artifacts {
        save_model(model, seeds, dir.join(file))?;
    }
    write_report(&outcome.report, dir.join("report.json"))
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub failure: Option<Error>,
}

/// Train the sweep model once per discard proportion on identical splits.
pub fn run_sweep(table: &RawTable, cfg: &RunConfig, proportions: &[f64]) -> Result<SweepOutcome> {
    cfg.validate()?;
    if proportions.is_empty() {
        return Err(Error::Config("at least one proportion is required".into()));
    }
    if let Some(p) = proportions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Config(format!("proportion {p} is outside [0, 1]")));
    }
    let total = Instant::now();
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let prep = prepare(table, cfg)?;
    timings.insert("preprocess".to_string(), seconds(t));

    let model = cfg.sweep_model();
    let job = Job::expand(model, cfg)[0];
    let results: Vec<Result<(FilterAudit, JobResult, f64)>> = proportions
        .par_iter()
        .map(|&p| {
            let t = Instant::now();
            let fcfg = FilterConfig {
                discard_proportion: p,
                ..cfg.filter.clone()
            };
            let (sets, audit) = filter_sets(&prep, &fcfg)?;
            let result = run_job(job, cfg, &sets, EnsembleChoice::None);
            Ok((audit, result, seconds(t)))
        })
        .collect();

    let mut rows = Vec::new();
    let mut warnings = prep.warnings.clone();
    let mut failure = None;
    for (p, r) in proportions.iter().zip(results) {
        let (filter, mut result, secs) = r?;
        timings.insert(format!("proportion:{p}"), secs);
        warnings.extend(result.warnings.drain(..).map(|w| format!("proportion {p}: {w}")));
        if failure.is_none() {
            failure = result.error;
        }
        rows.push(SweepRow {
            proportion: *p,
            filter,
            status: result.entry.status,
            metrics: result.entry.metrics,
            trace: result.entry.trace,
            error: result.entry.error,
        });
    }
    timings.insert("total".to_string(), seconds(total));
    Ok(SweepOutcome {
        report: SweepReport {
            version: VERSION.to_string(),
            config: config_echo(cfg),
            model: job.name(),
            status: if failure.is_some() { "partial" } else { "ok" }.into(),
            preprocess: prep.audit,
            rows,
            warnings,
            timings,
        },
        failure,
    })
}

use std::fs;
use std::path::Path;

use anyhow::Context;
use pdf_core::dataset::{Dataset, Task};
use pdf_core::model::{Checkpoint, ModelConfig, PdfModelParams};
use pdf_core::train::{evaluate, metric_better, prepare, train_with, TrainConfig, TrainHistory};
use serde::Serialize;

use crate::config::LoadedConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub metric: &'static str,
    /// Epoch whose parameters are in `best.ckpt`; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub best_val_metric: f64,
    pub test_metric_at_best_val: f64,
    pub final_train_metric: f64,
    pub n_params: usize,
}

pub fn metric_name(task: Task) -> &'static str {
    match task {
        Task::Regression => "mae",
        Task::Classification { .. } => "accuracy",
    }
}

pub struct RunResult {
    pub history: TrainHistory,
    pub summary: Summary,
    pub best: PdfModelParams,
}

/// Trains once and picks the best-validation epoch (earliest on ties). When
/// the validation split is empty the training metric is used instead.
pub fn run(ds: &Dataset, cfg: &ModelConfig, tc: &TrainConfig) -> anyhow::Result<RunResult> {
    let use_train = ds.splits().val.is_empty();
    let mut best: Option<(usize, f64, f64, PdfModelParams)> = None;
    let (last, history) = train_with(ds, cfg, tc, |r, params| {
        let score = if use_train { r.train_metric } else { r.val_metric };
        let improved = match &best {
            None => true,
            Some((_, b, _, _)) => metric_better(cfg.task, score, *b),
        };
        if improved {
            best = Some((r.epoch, score, r.test_metric, params.clone()));
        }
    })?;
    let final_train_metric = history.last().map_or(f64::NAN, |r| r.train_metric);
    let (best_epoch, best_val, best_test, best_params) = match best {
        Some((e, v, t, p)) => (Some(e), v, t, p),
        None => {
            let prepared = prepare(ds, cfg)?;
            let s = ds.splits();
            let pick = if use_train { &s.train } else { &s.val };
            let v = evaluate(&prepared, ds.targets(), pick, cfg, &last)?;
            let t = evaluate(&prepared, ds.targets(), &s.test, cfg, &last)?;
            (None, v, t, last)
        }
    };
    let n_params = cfg.param_count();
    debug_assert_eq!(n_params, best_params.n_params());
    Ok(RunResult {
        history,
        summary: Summary {
            metric: metric_name(cfg.task),
            best_epoch,
            best_val_metric: best_val,
            test_metric_at_best_val: best_test,
            final_train_metric,
            n_params,
        },
        best: best_params,
    })
}

pub fn write_outputs(dir: &Path, cfg: &ModelConfig, result: &RunResult) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("history.csv"), result.history.to_csv())?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summary)? + "\n")?;
    Checkpoint::new(cfg.clone(), result.best.clone()).save(dir.join("best.ckpt"))?;
    Ok(())
}

pub fn cmd_train(config_path: &Path) -> anyhow::Result<Summary> {
    let loaded = LoadedConfig::load(config_path)?;
    let ds = loaded.dataset()?;
    let cfg = loaded.model_config(&ds)?;
    let result = run(&ds, &cfg, &loaded.config.train)?;
    let out = loaded.output_dir();
    write_outputs(&out, &cfg, &result)?;
    fs::write(out.join("config.json"), &loaded.text)?;
    Ok(result.summary)
}

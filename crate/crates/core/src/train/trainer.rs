use std::fmt::Write as _;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::backward::backward_prepared;
use super::loss::LossKind;
use super::schedule::{lr_at, TrainConfig};
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::family::build_family;
use crate::graph::NodeFeatures;
use crate::model::{forward_output, MixInput, Mode, ModelConfig, PdfModelParams};

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

/// One graph with its family entries gathered once up front.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub features: NodeFeatures,
    pub input: MixInput,
}

pub fn prepare(ds: &Dataset, cfg: &ModelConfig) -> Result<Vec<PreparedGraph>> {
    ds.graphs()
        .iter()
        .map(|g| {
            let fam = build_family(g, &cfg.family)?;
            Ok(PreparedGraph {
                features: g.features().clone(),
                input: MixInput::from_family(&fam),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_metric: f64,
    pub val_metric: f64,
    pub test_metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,train_metric,val_metric,test_metric\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch,
                format_sig6(r.lr),
                format_sig6(r.train_loss),
                format_sig6(r.train_metric),
                format_sig6(r.val_metric),
                format_sig6(r.test_metric)
            );
        }
        out
    }
}

/// Decimal rendering with 6 significant digits, like C's `%g`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..6).contains(&exp) {
        trim(&format!("{:.*}", (5 - exp) as usize, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

/// True when `a` is a strictly better split metric than `b`.
pub fn metric_better(task: Task, a: f64, b: f64) -> bool {
    if a.is_nan() {
        return false;
    }
    if b.is_nan() {
        return true;
    }
    match task {
        Task::Regression => a < b,
        Task::Classification { .. } => a > b,
    }
}

fn argmax(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// MAE for regression, accuracy for classification. NaN on an empty split.
pub fn evaluate(
    prepared: &[PreparedGraph],
    targets: &[f64],
    indices: &[usize],
    cfg: &ModelConfig,
    params: &PdfModelParams,
) -> Result<f64> {
    if indices.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for &i in indices {
        let p = &prepared[i];
        let out = forward_output(&p.features, &p.input, cfg, params, &mut Mode::Eval)?;
        total += match cfg.task {
            Task::Regression => (out[0] - targets[i]).abs(),
            Task::Classification { .. } => f64::from(argmax(&out) == targets[i] as usize),
        };
    }
    Ok(total / indices.len() as f64)
}

fn check_loss_matches_task(task: Task, loss: LossKind) -> Result<()> {
    match (task, loss) {
        (Task::Regression, LossKind::Mae) | (Task::Classification { .. }, LossKind::CrossEntropy) => Ok(()),
        _ => Err(Error::Config(format!("loss {loss:?} does not match task {task:?}"))),
    }
}

pub fn train(ds: &Dataset, cfg: &ModelConfig, tc: &TrainConfig) -> Result<(PdfModelParams, TrainHistory)> {
    train_with(ds, cfg, tc, |_, _| {})
}

/// Same as [`train`], calling `observer` after every epoch with that
/// epoch's record and the parameters at its end.
pub fn train_with<F>(
    ds: &Dataset,
    cfg: &ModelConfig,
    tc: &TrainConfig,
    mut observer: F,
) -> Result<(PdfModelParams, TrainHistory)>
where
    F: FnMut(&EpochRecord, &PdfModelParams),
{
    cfg.validate()?;
    tc.validate()?;
    check_loss_matches_task(cfg.task, tc.loss)?;
    if cfg.task != ds.task() {
        return Err(Error::Config(format!(
            "model task {:?} differs from dataset task {:?}",
            cfg.task,
            ds.task()
        )));
    }
    let splits = ds.splits();
    if splits.train.is_empty() {
        return Err(Error::Config("train split is empty".into()));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(tc.seed);
    init_rng.set_stream(INIT_STREAM);
    let mut params = PdfModelParams::init(cfg, &mut init_rng)?;
    let mut history = TrainHistory::default();
    if tc.max_epochs == 0 {
        return Ok((params, history));
    }

    let prepared = prepare(ds, cfg)?;
    let targets = ds.targets();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tc.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(tc.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);
    let mut adam = AdamState::new(&params);
    let mut order = splits.train.clone();

    for epoch in 0..tc.max_epochs {
        let lr = lr_at(epoch, tc);
        order.shuffle(&mut shuffle_rng);
        let mut loss_total = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let mut grads = params.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let p = &prepared[i];
                let mut mode = Mode::Train(&mut dropout_rng);
                loss_total += backward_prepared(
                    &p.features,
                    &p.input,
                    cfg,
                    &params,
                    targets[i],
                    tc.loss,
                    &mut mode,
                    scale,
                    &mut grads,
                )?;
            }
            adam_step(&mut params, &grads, &mut adam, lr, tc.weight_decay)?;
        }
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_total / order.len() as f64,
            train_metric: evaluate(&prepared, targets, &splits.train, cfg, &params)?,
            val_metric: evaluate(&prepared, targets, &splits.val, cfg, &params)?,
            test_metric: evaluate(&prepared, targets, &splits.test, cfg, &params)?,
        };
        observer(&record, &params);
        history.records.push(record);
    }
    Ok((params, history))
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use pdf_core::family::Sparsity;
use pdf_core::model::{MixerConfig, MixerVariant, Mode, PdfModelParams};
use pdf_core::train::{adam_step, backward_prepared, evaluate, format_sig6, lr_at, prepare, AdamState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ablate::mean_std;
use crate::config::{config_err, BenchSection, LoadedConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub variant: MixerVariant,
    pub sparsity: Sparsity,
    pub train_secs: Vec<f64>,
    pub eval_secs: Vec<f64>,
}

impl BenchRow {
    pub fn train_mean_std(&self) -> (f64, f64) {
        mean_std(&self.train_secs)
    }

    pub fn eval_mean_std(&self) -> (f64, f64) {
        mean_std(&self.eval_secs)
    }
}

pub fn bench_label(variant: MixerVariant, sparsity: Sparsity) -> String {
    match sparsity {
        Sparsity::Dense => variant.label().to_string(),
        Sparsity::HopMasked(h) => format!("{}^sps{h}", variant.label()),
    }
}

pub fn to_table(rows: &[BenchRow], epochs: usize, hidden_dim: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# seconds per epoch, mean ± std over {epochs} epochs, hidden_dim {hidden_dim}");
    let _ = writeln!(out, "{:<16} {:>28} {:>28}", "model", "training", "eval");
    for r in rows {
        let (tm, ts) = r.train_mean_std();
        let (em, es) = r.eval_mean_std();
        let _ = writeln!(
            out,
            "{:<16} {:>28} {:>28}",
            r.label,
            format!("{} ± {}", format_sig6(tm), format_sig6(ts)),
            format!("{} ± {}", format_sig6(em), format_sig6(es))
        );
    }
    out
}

/// Times training and evaluation epochs for each variant × sparsity row.
/// Family construction happens once up front and is not timed.
pub fn cmd_bench(config_path: &Path, epochs: Option<usize>) -> anyhow::Result<(Vec<BenchRow>, String)> {
    let loaded = LoadedConfig::load(config_path)?;
    let section = loaded.config.bench.clone().unwrap_or_default();
    let BenchSection {
        epochs: cfg_epochs,
        hidden_dim,
        variants,
        sparsity,
    } = section;
    let epochs = epochs.unwrap_or(cfg_epochs);
    if epochs == 0 {
        return Err(config_err("bench.epochs: must be at least 1"));
    }
    if variants.is_empty() || sparsity.is_empty() {
        return Err(config_err("bench: empty variant or sparsity list"));
    }
    let ds = loaded.dataset()?;
    let mut base = loaded.model_config(&ds)?;
    if let Some(d) = hidden_dim {
        if d == 0 {
            return Err(config_err("bench.hidden_dim: must be at least 1"));
        }
        base.hidden_dim = d;
    }
    let tc = &loaded.config.train;
    let splits = ds.splits();
    let held_out: Vec<usize> = splits.val.iter().chain(&splits.test).copied().collect();

    let mut rows = Vec::new();
    for &sp in &sparsity {
        for &variant in &variants {
            let mut cfg = base.clone();
            cfg.mixer = MixerConfig { variant, ..base.mixer };
            cfg.family = base.family.clone().with_sparsity(sp);
            let prepared = prepare(&ds, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
            let mut params = PdfModelParams::init(&cfg, &mut rng)?;
            let mut adam = AdamState::new(&params);
            let mut row = BenchRow {
                label: bench_label(variant, sp),
                variant,
                sparsity: sp,
                train_secs: Vec::with_capacity(epochs),
                eval_secs: Vec::with_capacity(epochs),
            };
            for epoch in 0..epochs {
                let start = Instant::now();
                for batch in splits.train.chunks(tc.batch_size) {
                    let mut grads = params.zeros_like();
                    for &i in batch {
                        let p = &prepared[i];
                        backward_prepared(
                            &p.features,
                            &p.input,
                            &cfg,
                            &params,
                            ds.targets()[i],
                            tc.loss,
                            &mut Mode::Train(&mut rng),
                            1.0 / batch.len() as f64,
                            &mut grads,
                        )?;
                    }
                    adam_step(&mut params, &grads, &mut adam, lr_at(epoch, tc), tc.weight_decay)?;
                }
                row.train_secs.push(start.elapsed().as_secs_f64());
                let start = Instant::now();
                evaluate(&prepared, ds.targets(), &held_out, &cfg, &params)?;
                row.eval_secs.push(start.elapsed().as_secs_f64());
            }
            rows.push(row);
        }
    }
    let out = loaded.output_dir();
    fs::create_dir_all(&out)?;
    let table = to_table(&rows, epochs, base.hidden_dim);
    fs::write(out.join("bench.txt"), &table)?;
    fs::write(out.join("config.json"), &loaded.text)?;
    Ok((rows, table))
}

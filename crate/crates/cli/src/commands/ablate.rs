use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pdf_core::family::Sparsity;
use pdf_core::model::{MixerConfig, MixerDepth, MixerVariant};
use pdf_core::train::{format_sig6, TrainConfig};

use super::train::{metric_name, run, write_outputs};
use crate::config::{cell_family, config_err, LoadedConfig, NamedFamily};

/// Seed offset between repetitions of one cell.
pub const REPEAT_SEED_STRIDE: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub name: String,
    pub family: String,
    pub depth: MixerDepth,
    pub variant: MixerVariant,
    pub sparsity: Sparsity,
    pub n_params: usize,
    pub val: Vec<f64>,
    pub test: Vec<f64>,
}

/// Row label such as `idp-((eps,k),2L)` or `shd-(Lap,Lin)^sps2`.
pub fn row_name(family: &str, depth: MixerDepth, variant: MixerVariant, sparsity: Sparsity) -> String {
    let mut s = format!("{}-({},{})", variant.label(), family, depth.label());
    if let Sparsity::HopMasked(h) = sparsity {
        let _ = write!(s, "^sps{h}");
    }
    s
}

fn dir_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn to_csv(rows: &[AblationRow], metric: &str) -> String {
    let mut out = format!(
        "name,variant,family,depth,sparsity,n_params,repeats,valid_{m}_median,valid_{m}_mean,valid_{m}_std,test_{m}_median,test_{m}_mean,test_{m}_std\n",
        m = metric
    );
    for r in rows {
        let (vm, vs) = mean_std(&r.val);
        let (tm, ts) = mean_std(&r.test);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.name,
            r.variant.label(),
            r.family,
            r.depth.label(),
            r.sparsity,
            r.n_params,
            r.val.len(),
            format_sig6(median(&r.val)),
            format_sig6(vm),
            format_sig6(vs),
            format_sig6(median(&r.test)),
            format_sig6(tm),
            format_sig6(ts),
        );
    }
    out
}

fn grid(families: &[NamedFamily], a: &crate::config::AblationSection) -> Vec<(usize, usize, MixerDepth, MixerVariant, Sparsity)> {
    let mut cells = Vec::new();
    for (fi, _) in families.iter().enumerate() {
        for (si, &sp) in a.sparsity.iter().enumerate() {
            for &depth in &a.depths {
                for &variant in &a.variants {
                    cells.push((fi, si, depth, variant, sp));
                }
            }
        }
    }
    cells
}

/// Trains every cell of the grid. Cell `i`, repetition `r` uses seed
/// `train.seed + i + 1000·r`; each repetition writes its own subdirectory.
pub fn cmd_ablate(config_path: &Path) -> anyhow::Result<(Vec<AblationRow>, String)> {
    let loaded = LoadedConfig::load(config_path)?;
    let a = loaded
        .config
        .ablation
        .clone()
        .ok_or_else(|| config_err("ablation: section missing"))?;
    if a.families.is_empty() || a.depths.is_empty() || a.variants.is_empty() || a.sparsity.is_empty() {
        return Err(config_err("ablation: empty grid"));
    }
    if a.repeats == 0 {
        return Err(config_err("ablation.repeats: must be at least 1"));
    }
    let ds = loaded.dataset()?;
    let base = loaded.model_config(&ds)?;
    let out = loaded.output_dir();
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.json"), &loaded.text)?;

    let mut rows = Vec::new();
    for (cell, (fi, _, depth, variant, sparsity)) in grid(&a.families, &a).into_iter().enumerate() {
        let fam = &a.families[fi];
        let mut cfg = base.clone();
        cfg.family = cell_family(&fam.entries, sparsity)?;
        cfg.mixer = MixerConfig {
            depth,
            variant,
            hidden: base.mixer.hidden,
        };
        let name = row_name(&fam.name, depth, variant, sparsity);
        let mut row = AblationRow {
            name: name.clone(),
            family: fam.name.clone(),
            depth,
            variant,
            sparsity,
            n_params: cfg.param_count(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for r in 0..a.repeats {
            let tc = TrainConfig {
                seed: loaded.config.train.seed + cell as u64 + REPEAT_SEED_STRIDE * r as u64,
                ..loaded.config.train.clone()
            };
            let result = run(&ds, &cfg, &tc)?;
            let dir = out.join("cells").join(dir_name(&name)).join(format!("rep{r}"));
            write_outputs(&dir, &cfg, &result)?;
            row.val.push(result.summary.best_val_metric);
            row.test.push(result.summary.test_metric_at_best_val);
        }
        rows.push(row);
    }
    let csv = to_csv(&rows, metric_name(ds.task()));
    fs::write(out.join("ablation.csv"), &csv)?;
    Ok((rows, csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_names() {
        assert_eq!(
            row_name("(eps,k)", MixerDepth::TwoLayer, MixerVariant::Idp, Sparsity::HopMasked(2)),
            "idp-((eps,k),2L)^sps2"
        );
        assert_eq!(row_name("Lap", MixerDepth::Lin, MixerVariant::Shd, Sparsity::Dense), "shd-(Lap,Lin)");
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}

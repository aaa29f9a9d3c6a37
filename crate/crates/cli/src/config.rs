//! Experiment configuration: one JSON document per run.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pdf_core::dataset::{load_json, load_tudataset, synth_dataset, Dataset, Splits, SynthKind};
use pdf_core::family::{FamilyEntry, FamilySpec, Sparsity};
use pdf_core::graph::NodeFeatures;
use pdf_core::model::{Activation, InputEncoding, MixerConfig, MixerDepth, MixerVariant, ModelConfig, Readout};
use pdf_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

/// Invalid configuration or input; the CLI exits with status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synth {
        kind: SynthKind,
        n_graphs: usize,
        n_range: (usize, usize),
        #[serde(default)]
        seed: u64,
    },
    Json {
        path: PathBuf,
    },
    Tudataset {
        dir: PathBuf,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitConfig {
    Random {
        train: f64,
        val: f64,
        #[serde(default)]
        seed: u64,
    },
    Kfold {
        k: usize,
        fold: usize,
        #[serde(default)]
        seed: u64,
    },
}

/// Model settings; the input encoding and task come from the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub mixer: MixerConfig,
    pub family: FamilySpec,
    #[serde(default)]
    pub readout: Readout,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default)]
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedFamily {
    pub name: String,
    pub entries: Vec<FamilyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSection {
    pub families: Vec<NamedFamily>,
    pub depths: Vec<MixerDepth>,
    pub variants: Vec<MixerVariant>,
    #[serde(default = "default_sparsity")]
    pub sparsity: Vec<Sparsity>,
    #[serde(default = "one")]
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_bench_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    #[serde(default = "both_variants")]
    pub variants: Vec<MixerVariant>,
    #[serde(default = "default_sparsity")]
    pub sparsity: Vec<Sparsity>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            epochs: default_bench_epochs(),
            hidden_dim: None,
            variants: both_variants(),
            sparsity: default_sparsity(),
        }
    }
}

fn default_sparsity() -> Vec<Sparsity> {
    vec![Sparsity::Dense]
}

fn one() -> usize {
    1
}

fn default_bench_epochs() -> usize {
    5
}

fn both_variants() -> Vec<MixerVariant> {
    MixerVariant::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ablation: Option<AblationSection>,
    #[serde(default)]
    pub bench: Option<BenchSection>,
}

/// A parsed config plus its verbatim text and the directory that relative
/// paths inside it are resolved against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let config = parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { config, text, base_dir };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    fn validate(&self) -> anyhow::Result<()> {
        let c = &self.config;
        c.train
            .validate()
            .map_err(|e| config_err(format!("train: {e}")))?;
        if c.model.hidden_dim == 0 {
            return Err(config_err("model.hidden_dim: must be at least 1"));
        }
        if !(0.0..1.0).contains(&c.model.dropout) {
            return Err(config_err(format!("model.dropout: {} outside [0, 1)", c.model.dropout)));
        }
        match &c.dataset {
            DatasetSource::Json { path } => {
                if !self.resolve(path).is_file() {
                    return Err(config_err(format!("dataset.path: {} does not exist", path.display())));
                }
            }
            DatasetSource::Tudataset { dir, .. } => {
                if !self.resolve(dir).is_dir() {
                    return Err(config_err(format!("dataset.dir: {} does not exist", dir.display())));
                }
            }
            DatasetSource::Synth { .. } => {}
        }
        Ok(())
    }

    /// Loads the dataset and applies the configured split.
    pub fn dataset(&self) -> anyhow::Result<Dataset> {
        let c = &self.config;
        let ds = match &c.dataset {
            DatasetSource::Synth {
                kind,
                n_graphs,
                n_range,
                seed,
            } => synth_dataset(*kind, *n_graphs, *n_range, *seed).map_err(|e| config_err(format!("dataset: {e}")))?,
            DatasetSource::Json { path } => {
                load_json(self.resolve(path)).map_err(|e| config_err(format!("dataset.path: {e}")))?
            }
            DatasetSource::Tudataset { dir, name } => {
                load_tudataset(self.resolve(dir), name).map_err(|e| config_err(format!("dataset: {e}")))?
            }
        };
        let splits = match &c.split {
            Some(SplitConfig::Random { train, val, seed }) => Splits::random(ds.len(), *train, *val, *seed),
            Some(SplitConfig::Kfold { k, fold, seed }) => Splits::kfold(ds.len(), *k, *fold, *seed),
            None if ds.splits().train.is_empty() => {
                return Err(config_err("split: dataset carries no splits; add a split section"));
            }
            None => return Ok(ds),
        }
        .map_err(|e| config_err(format!("split: {e}")))?;
        ds.with_splits(splits).map_err(|e| config_err(format!("split: {e}")))
    }

    /// Full model config for `ds`; input encoding and task follow the data.
    pub fn model_config(&self, ds: &Dataset) -> anyhow::Result<ModelConfig> {
        let m = &self.config.model;
        let input = match ds.graphs().first().map(|g| g.features()) {
            Some(NodeFeatures::Labels(_)) => InputEncoding::Embedding {
                num_labels: ds.num_node_labels().unwrap_or(1),
            },
            Some(NodeFeatures::Dense(_)) => InputEncoding::Linear {
                in_dim: ds
                    .feature_dim()
                    .ok_or_else(|| config_err("dataset: node feature widths differ between graphs"))?,
            },
            None => return Err(config_err("dataset: no graphs")),
        };
        let cfg = ModelConfig {
            hidden_dim: m.hidden_dim,
            num_layers: m.num_layers,
            mixer: m.mixer,
            family: m.family.clone(),
            readout: m.readout,
            dropout: m.dropout,
            activation: m.activation,
            input,
            task: ds.task(),
        };
        cfg.validate().map_err(|e| config_err(format!("model: {e}")))?;
        Ok(cfg)
    }
}

pub fn parse(text: &str) -> anyhow::Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(format!("{path}: {}", e.into_inner()))
    })
}

/// Family used by one ablation cell.
pub fn cell_family(entries: &[FamilyEntry], sparsity: Sparsity) -> anyhow::Result<FamilySpec> {
    FamilySpec::new(entries.to_vec(), sparsity).map_err(|e| config_err(format!("ablation.families: {e}")))
}

use serde::{Deserialize, Serialize};

use super::Activation;
use crate::dataset::Task;
use crate::error::{Error, Result};
use crate::family::FamilySpec;

/// How many perceptron layers the family mixer has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MixerDepth {
    /// Linear combination of family members, no activation.
    Lin,
    #[serde(rename = "1L")]
    OneLayer,
    #[serde(rename = "2L")]
    TwoLayer,
}

impl MixerDepth {
    pub const ALL: [MixerDepth; 3] = [MixerDepth::Lin, MixerDepth::OneLayer, MixerDepth::TwoLayer];

    pub fn label(self) -> &'static str {
        match self {
            MixerDepth::Lin => "Lin",
            MixerDepth::OneLayer => "1L",
            MixerDepth::TwoLayer => "2L",
        }
    }
}

/// Channel-shared (`shd`) or channel-independent (`idp`) mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerVariant {
    Shd,
    Idp,
}

impl MixerVariant {
    pub const ALL: [MixerVariant; 2] = [MixerVariant::Shd, MixerVariant::Idp];

    pub fn label(self) -> &'static str {
        match self {
            MixerVariant::Shd => "shd",
            MixerVariant::Idp => "idp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixerConfig {
    pub depth: MixerDepth,
    pub variant: MixerVariant,
    /// Hidden width of the 2L mixer; defaults to the family size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
}

impl MixerConfig {
    pub fn new(depth: MixerDepth, variant: MixerVariant) -> Self {
        Self {
            depth,
            variant,
            hidden: None,
        }
    }

    pub fn hidden_width(&self, family_size: usize) -> usize {
        self.hidden.unwrap_or(family_size)
    }

    /// Output columns per position: 1 for shd, `d` for idp.
    pub fn out_width(&self, hidden_dim: usize) -> usize {
        match self.variant {
            MixerVariant::Shd => 1,
            MixerVariant::Idp => hidden_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    #[default]
    Mean,
    Max,
    Sum,
}

/// Map from raw node features to the first hidden representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputEncoding {
    /// Learned table indexed by categorical node label.
    Embedding { num_labels: usize },
    /// Affine projection of dense features.
    Linear { in_dim: usize },
    /// Dense features used as-is; their width must equal `hidden_dim`.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
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
    pub input: InputEncoding,
    pub task: Task,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.mixer.hidden == Some(0) {
            return Err(Error::Config("mixer hidden width must be at least 1".into()));
        }
        match self.input {
            InputEncoding::Embedding { num_labels: 0 } => {
                Err(Error::Config("embedding needs at least one label".into()))
            }
            InputEncoding::Linear { in_dim: 0 } => {
                Err(Error::Config("linear input needs at least one feature".into()))
            }
            _ => Ok(()),
        }?;
        if let Task::Classification { num_classes: 0 } = self.task {
            return Err(Error::Config("classification needs at least one class".into()));
        }
        Ok(())
    }

    pub fn family_size(&self) -> usize {
        self.family.len()
    }

    /// Number of learnable scalars, computed from the shapes alone.
    pub fn param_count(&self) -> usize {
        let d = self.hidden_dim;
        let k = self.family_size();
        let c = self.mixer.out_width(d);
        let input = match self.input {
            InputEncoding::Embedding { num_labels } => num_labels * d,
            InputEncoding::Linear { in_dim } => in_dim * d + d,
            InputEncoding::Identity => 0,
        };
        let mixer = match self.mixer.depth {
            MixerDepth::Lin | MixerDepth::OneLayer => k * c,
            MixerDepth::TwoLayer => {
                let h = self.mixer.hidden_width(k);
                k * h + h + h * c + c
            }
        };
        let out = self.task.output_dim();
        input + self.num_layers * (2 * (d * d + d) + mixer) + d * out + out
    }
}

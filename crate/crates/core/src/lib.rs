//! Parameterized graph matrix families, PDF layers with trainable family
//! mixers, spectral analysis helpers, a small training engine and an
//! executable verification suite.

pub mod dataset;
pub mod error;
pub mod family;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod train;
pub mod verify;

pub use dataset::{Dataset, Splits, SynthKind, Task};
pub use error::{Error, Result};
pub use family::{build_family, FamilyEntry, FamilySpec, MatrixFamily, Preset, Sparsity};
pub use graph::{Edge, Graph, NodeFeatures};
pub use linalg::DenseSymMatrix;
pub use model::{
    model_forward, Activation, Checkpoint, InputEncoding, MixerConfig, MixerDepth, MixerVariant, Mode,
    ModelConfig, PdfModelParams, Readout,
};
pub use spectral::{eigendecompose, PolyFilter, SpectralDecomposition};
pub use train::{train, LossKind, TrainConfig, TrainHistory};
pub use verify::{run_all, VerifyReport};

//! The PDF network: family mixer, shd/idp layers, readout and head.

mod activation;
mod checkpoint;
mod config;
mod forward;
mod mixer;
mod params;

pub use activation::{gelu, gelu_grad, Activation};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{InputEncoding, MixerConfig, MixerDepth, MixerVariant, ModelConfig, Readout};
pub use forward::{
    encode_input, forward_output, forward_traced, layer_forward, layer_forward_traced, model_forward, readout,
    ForwardTrace, LayerTrace, Mode,
};
pub use mixer::{
    mix_family, mixer_backward, mixer_forward, mixer_forward_with_grad, propagate, propagate_backward, MixInput,
    MixedOperator, MixerTrace,
};
pub use params::{Dense, InputParams, MixerParams, PdfLayerParams, PdfModelParams};

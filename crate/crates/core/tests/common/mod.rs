#![allow(dead_code)]

use pdf_core::dataset::Task;
use pdf_core::family::FamilySpec;
use pdf_core::graph::Graph;
use pdf_core::model::{
    Activation, InputEncoding, MixerConfig, MixerDepth, MixerVariant, ModelConfig, PdfModelParams, Readout,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn config(depth: MixerDepth, variant: MixerVariant, readout: Readout, d: usize, layers: usize) -> ModelConfig {
    ModelConfig {
        hidden_dim: d,
        num_layers: layers,
        mixer: MixerConfig::new(depth, variant),
        family: FamilySpec::dense(&[(-0.5, 1), (0.0, 1), (-0.25, 2)]).unwrap(),
        readout,
        dropout: 0.0,
        activation: Activation::Gelu,
        input: InputEncoding::Embedding { num_labels: 3 },
        task: Task::Regression,
    }
}

pub fn random_params(cfg: &ModelConfig, scale: f64, seed: u64) -> PdfModelParams {
    let mut r = rng(seed);
    let mut p = PdfModelParams::init(cfg, &mut r).unwrap();
    for s in p.slices_mut() {
        for x in s.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut r);
            *x = scale * z;
        }
    }
    p
}

pub fn labelled_graph(n: usize, p: f64, labels: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let g = pdf_core::verify::gen::connected_graph(n, p, &mut r);
    let l = (0..n).map(|_| r.random_range(0..labels)).collect();
    g.with_features(pdf_core::graph::NodeFeatures::Labels(l)).unwrap()
}

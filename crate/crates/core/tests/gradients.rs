mod common;

use std::time::Instant;

use ndarray::{array, Array2};
use pdf_core::dataset::Task;
use pdf_core::family::{build_family, FamilySpec, MatrixFamily};
use pdf_core::graph::{Graph, NodeFeatures};
use pdf_core::model::{
    forward_traced, model_forward, Activation, InputEncoding, MixInput, MixerConfig, MixerDepth, MixerVariant,
    Mode, ModelConfig, PdfModelParams, Readout,
};
use pdf_core::train::{backprop, backward, loss_and_grad, LossKind};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn loss_at(g: &Graph, fam: &MatrixFamily, cfg: &ModelConfig, p: &PdfModelParams, target: f64, kind: LossKind) -> f64 {
    let out = model_forward(g, fam, cfg, p, Mode::Eval).unwrap();
    loss_and_grad(&out, target, kind).unwrap().0
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error over `probes` random parameters.
fn probe(
    g: &Graph,
    cfg: &ModelConfig,
    params: &PdfModelParams,
    target: f64,
    kind: LossKind,
    probes: usize,
    seed: u64,
) -> f64 {
    let fam = build_family(g, &cfg.family).unwrap();
    let (_, grads) = backward(g, &fam, cfg, params, target, kind).unwrap();
    assert!(grads.to_flat().iter().any(|x| x.abs() > 1e-3), "gradient vanished");
    let mut r = common::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let i = r.random_range(0..params.n_params());
        let mut plus = params.clone();
        plus.set_flat(i, params.get_flat(i) + STEP);
        let mut minus = params.clone();
        minus.set_flat(i, params.get_flat(i) - STEP);
        let numeric = (loss_at(g, &fam, cfg, &plus, target, kind) - loss_at(g, &fam, cfg, &minus, target, kind))
            / (2.0 * STEP);
        worst = worst.max(rel_err(grads.get_flat(i), numeric));
    }
    worst
}

fn has_argmax_gap(g: &Graph, cfg: &ModelConfig, p: &PdfModelParams) -> bool {
    let fam = build_family(g, &cfg.family).unwrap();
    let input = MixInput::from_family(&fam);
    let tr = forward_traced(g.features(), &input, cfg, p, &mut Mode::Eval).unwrap();
    let h = &tr.h_last;
    (0..h.ncols()).all(|j| {
        let mut col: Vec<f64> = h.column(j).to_vec();
        col.sort_by(|a, b| b.partial_cmp(a).unwrap());
        col.len() < 2 || col[0] - col[1] > 1e-3
    })
}

#[test]
fn gradients_match_central_differences_for_every_mixer_and_readout() {
    let start = Instant::now();
    let g = common::labelled_graph(5, 0.4, 3, 11);
    let mut checked = 0;
    for depth in MixerDepth::ALL {
        for variant in MixerVariant::ALL {
            for readout in [Readout::Mean, Readout::Sum, Readout::Max] {
                let cfg = common::config(depth, variant, readout, 4, 2);
                let mut seed = 100;
                let params = loop {
                    let p = common::random_params(&cfg, 0.5, seed);
                    if readout != Readout::Max || has_argmax_gap(&g, &cfg, &p) {
                        break p;
                    }
                    seed += 1;
                };
                let worst = probe(&g, &cfg, &params, 25.0, LossKind::Mae, 20, seed);
                assert!(
                    worst <= REL_TOL,
                    "{}-{} {:?}: worst relative error {worst:e}",
                    variant.label(),
                    depth.label(),
                    readout
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 18);
    assert!(start.elapsed().as_secs() < 30);
}

#[test]
fn cross_entropy_gradients_match_central_differences() {
    let g = common::labelled_graph(5, 0.5, 3, 12);
    for variant in MixerVariant::ALL {
        let mut cfg = common::config(MixerDepth::TwoLayer, variant, Readout::Mean, 4, 2);
        cfg.task = Task::Classification { num_classes: 3 };
        let params = common::random_params(&cfg, 0.5, 3);
        let worst = probe(&g, &cfg, &params, 2.0, LossKind::CrossEntropy, 20, 4);
        assert!(worst <= REL_TOL, "worst relative error {worst:e}");
    }
}

#[test]
fn linear_input_and_hop_mask_gradients_match() {
    let base = common::labelled_graph(6, 0.3, 1, 13);
    let mut r = common::rng(5);
    let x = Array2::from_shape_fn((6, 3), |_| r.random_range(-1.0..1.0));
    let g = base.with_features(NodeFeatures::Dense(x)).unwrap();
    for depth in MixerDepth::ALL {
        let mut cfg = common::config(depth, MixerVariant::Idp, Readout::Sum, 4, 2);
        cfg.input = InputEncoding::Linear { in_dim: 3 };
        cfg.family = FamilySpec::lap(&[1, 2, 3], pdf_core::family::Sparsity::HopMasked(1)).unwrap();
        let params = common::random_params(&cfg, 0.5, 6);
        let worst = probe(&g, &cfg, &params, -30.0, LossKind::Mae, 20, 7);
        assert!(worst <= REL_TOL, "{}: worst relative error {worst:e}", depth.label());
    }
}

#[test]
fn dropout_mask_scales_upstream_gradients() {
    let g = common::labelled_graph(5, 0.4, 3, 14);
    let mut cfg = common::config(MixerDepth::OneLayer, MixerVariant::Shd, Readout::Mean, 4, 2);
    cfg.dropout = 0.4;
    let params = common::random_params(&cfg, 0.5, 8);
    let fam = build_family(&g, &cfg.family).unwrap();
    let input = MixInput::from_family(&fam);
    let train_loss = |p: &PdfModelParams| {
        let mut r = ChaCha8Rng::seed_from_u64(99);
        let out = forward_traced(g.features(), &input, &cfg, p, &mut Mode::Train(&mut r))
            .unwrap()
            .output;
        loss_and_grad(&out, 25.0, LossKind::Mae).unwrap().0
    };
    let mut r = ChaCha8Rng::seed_from_u64(99);
    let trace = forward_traced(g.features(), &input, &cfg, &params, &mut Mode::Train(&mut r)).unwrap();
    assert!(trace.layers.iter().all(|l| l.dropout.is_some()));
    let (_, d_out) = loss_and_grad(&trace.output, 25.0, LossKind::Mae).unwrap();
    let mut grads = params.zeros_like();
    backprop(g.features(), &input, &cfg, &params, &trace, &d_out, &mut grads).unwrap();
    let mut pr = common::rng(9);
    for _ in 0..20 {
        let i = pr.random_range(0..params.n_params());
        let mut plus = params.clone();
        plus.set_flat(i, params.get_flat(i) + STEP);
        let mut minus = params.clone();
        minus.set_flat(i, params.get_flat(i) - STEP);
        let numeric = (train_loss(&plus) - train_loss(&minus)) / (2.0 * STEP);
        assert!(rel_err(grads.get_flat(i), numeric) <= REL_TOL);
    }
}

#[test]
fn scalar_linear_model_gradient_is_input() {
    let cfg = ModelConfig {
        hidden_dim: 1,
        num_layers: 0,
        mixer: MixerConfig::new(MixerDepth::Lin, MixerVariant::Shd),
        family: FamilySpec::dense(&[(0.0, 1)]).unwrap(),
        readout: Readout::Sum,
        dropout: 0.0,
        activation: Activation::Gelu,
        input: InputEncoding::Identity,
        task: Task::Regression,
    };
    let g = Graph::new(1, vec![], NodeFeatures::Dense(array![[3.0]])).unwrap();
    let mut params = PdfModelParams::init(&cfg, &mut common::rng(0)).unwrap();
    params.head.w[[0, 0]] = 0.7;
    params.head.b = Some(array![0.0]);
    let fam = build_family(&g, &cfg.family).unwrap();
    let (loss, grads) = backward(&g, &fam, &cfg, &params, 0.0, LossKind::Mae).unwrap();
    assert!((loss - 2.1).abs() < 1e-12);
    assert_eq!(grads.head.w[[0, 0]], 3.0);
}

#[test]
fn gradient_at_mae_kink_is_zero() {
    let g = common::labelled_graph(4, 0.5, 3, 15);
    let cfg = common::config(MixerDepth::Lin, MixerVariant::Shd, Readout::Mean, 2, 1);
    let params = common::random_params(&cfg, 0.5, 10);
    let fam = build_family(&g, &cfg.family).unwrap();
    let target = model_forward(&g, &fam, &cfg, &params, Mode::Eval).unwrap()[0];
    let (loss, grads) = backward(&g, &fam, &cfg, &params, target, LossKind::Mae).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.to_flat().iter().all(|&x| x == 0.0));
}

#[test]
fn accumulation_order_does_not_change_batch_gradient() {
    let cfg = common::config(MixerDepth::TwoLayer, MixerVariant::Idp, Readout::Mean, 4, 2);
    let params = common::random_params(&cfg, 0.5, 11);
    let graphs: Vec<Graph> = (0..6).map(|s| common::labelled_graph(4 + s as usize % 3, 0.4, 3, 40 + s)).collect();
    let targets = [1.0, -2.0, 3.0, 0.5, 7.0, -1.0];
    let per_graph: Vec<PdfModelParams> = graphs
        .iter()
        .zip(targets)
        .map(|(g, t)| {
            let fam = build_family(g, &cfg.family).unwrap();
            backward(g, &fam, &cfg, &params, t, LossKind::Mae).unwrap().1
        })
        .collect();
    let mut forward_sum = params.zeros_like();
    for g in &per_graph {
        forward_sum.add_scaled(g, 1.0 / 6.0);
    }
    let mut reverse_sum = params.zeros_like();
    for g in per_graph.iter().rev() {
        reverse_sum.add_scaled(g, 1.0 / 6.0);
    }
    let diff = forward_sum
        .to_flat()
        .iter()
        .zip(reverse_sum.to_flat())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-10);
}

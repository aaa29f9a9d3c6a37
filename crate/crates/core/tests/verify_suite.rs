use std::time::Instant;

use ndarray::array;
use rand::SeedableRng;
use pdf_core::graph::Graph;
use pdf_core::spectral::{smoothness_quadratic, PolyFilter};
use pdf_core::verify::{
    check_mixer_equivariance, check_eigenspace_sharing, check_quadratic_spectral, check_filter_smoothing, check_spectrum_bound, gen, run_all,
    run_all_with, Tolerances,
};

#[test]
fn smoothing_suite_seed_1_has_no_failures() {
    let r = check_filter_smoothing(100, 1);
    assert_eq!(r.trials, 200);
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn gcn_suite_seed_1_has_no_failures() {
    let r = check_spectrum_bound(100, 1);
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn equivariance_suite_seed_2_has_no_failures() {
    let r = check_mixer_equivariance(50, 2);
    assert_eq!(r.failures, 0, "{r:?}");
}

#[test]
fn identity_suite_seed_3_has_no_failures() {
    let r = check_quadratic_spectral(200, 3);
    assert_eq!(r.failures, 0, "{r:?}");
    assert!(r.skipped > 0, "kernel cases should be recorded as skipped");
}

#[test]
fn eigenspace_suite_passes() {
    let r = check_eigenspace_sharing(0);
    assert!(r.pass, "{r:?}");
    assert!(r.trials >= 20);
}

#[test]
fn whole_suite_is_deterministic_and_fast() {
    let start = Instant::now();
    let a = run_all(7, None);
    assert!(start.elapsed().as_secs() < 60);
    let b = run_all(7, None);
    assert_eq!(a, b);
    assert!(a.all_pass(), "{}", a.to_table());
}

#[test]
fn negative_tolerance_forces_failure() {
    let r = run_all_with(1, Some(3), &Tolerances::scaled(-1.0));
    assert!(!r.all_pass());
    assert!(r.to_table().contains("FAIL"));
}

#[test]
fn zero_filter_gives_zero_smoothness() {
    let g = Graph::path(3);
    let l = gen::laplacian(&g);
    let f = array![1.0, 0.0, -1.0];
    let out = PolyFilter::constant(0.0).eval_matrix(&l).dot(&f);
    assert_eq!(smoothness_quadratic(&g, &out).unwrap(), 0.0);
}

#[test]
fn half_filter_quarters_smoothness() {
    let g = Graph::path(3);
    let l = gen::laplacian(&g);
    let f = array![1.0, 0.0, -1.0];
    let out = PolyFilter::constant(0.5).eval_matrix(&l).dot(&f);
    assert_eq!(smoothness_quadratic(&g, &f).unwrap(), 2.0);
    assert!((smoothness_quadratic(&g, &out).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn gcn_step_on_p2() {
    let g = Graph::path(2);
    let s = gen::gcn_operator(&g);
    let f = array![1.0, 0.0];
    let sf = s.dot(&f);
    assert!((sf[0] - 0.5).abs() < 1e-15 && (sf[1] - 0.5).abs() < 1e-15);
    let l_tilde = ndarray::Array2::<f64>::eye(2) - &s;
    assert!(gen::quad_form(&l_tilde, &sf).abs() < 1e-15);
    assert!((gen::quad_form(&l_tilde, &f) - 0.5).abs() < 1e-15);
}

#[test]
fn gcn_fixed_point_has_zero_smoothness_on_both_sides() {
    let g = gen::connected_graph(6, 0.4, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
    let s = gen::gcn_operator(&g);
    let l_tilde = ndarray::Array2::<f64>::eye(6) - &s;
    let f = ndarray::Array1::from_iter(g.degrees().iter().map(|&d| (d as f64 + 1.0).sqrt()));
    let sf = s.dot(&f);
    assert!(gen::quad_form(&l_tilde, &sf).abs() < 1e-12);
    assert!(gen::quad_form(&l_tilde, &f).abs() < 1e-12);
}

#[test]
fn constant_signal_on_regular_graph_has_zero_gcn_smoothness() {
    let g = Graph::cycle(5);
    let s = gen::gcn_operator(&g);
    let l_tilde = ndarray::Array2::<f64>::eye(5) - &s;
    let ones = ndarray::Array1::<f64>::ones(5);
    assert!(gen::quad_form(&l_tilde, &s.dot(&ones)).abs() < 1e-14);
    assert!(gen::quad_form(&l_tilde, &ones).abs() < 1e-14);
}

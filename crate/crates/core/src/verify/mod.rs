//! Executable checks of the spectral identities, the smoothing and
//! amplifying filter conditions, the normalized spectrum bound, symmetry and
//! permutation equivariance of the mixed family, and eigenspace sharing.

pub mod gen;

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dataset::Task;
use crate::error::Result;
use crate::family::{build_family, FamilyEntry, FamilySpec, Sparsity};
use crate::graph::{Edge, Graph, NodeFeatures};
use crate::linalg::{commutator_norm, conjugate_by_permutation, max_abs, permute_rows, DenseSymMatrix};
use crate::model::{
    layer_forward, mix_family, Activation, InputEncoding, MixerConfig, MixerDepth, MixerVariant, Mode,
    ModelConfig, PdfModelParams, Readout,
};
use crate::spectral::{
    cos_to_eigvec, direct_cosine, eigendecompose, smoothness_normalized, smoothness_quadratic,
    smoothness_spectral, PolyFilter,
};

pub const FILTER_TRIALS: usize = 100;
pub const SPECTRUM_TRIALS: usize = 100;
pub const EQUIVARIANCE_TRIALS: usize = 50;
pub const QUADRATIC_TRIALS: usize = 200;
pub const EQUAL_EPS_PAIRS: usize = 100;
pub const PENDANT_GRAPHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub inequality: f64,
    pub identity_rel: f64,
    pub symmetry: f64,
    pub equivariance: f64,
    pub commute: f64,
    pub non_commute: f64,
    pub spectrum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality: 1e-10,
            identity_rel: 1e-8,
            symmetry: 1e-10,
            equivariance: 1e-9,
            commute: 1e-9,
            non_commute: 1e-3,
            spectrum: 1e-9,
        }
    }
}

impl Tolerances {
    /// Every upper tolerance multiplied by `factor`; the non-commuting
    /// lower bound is divided by it. A negative factor makes every check fail.
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self {
            inequality: d.inequality * factor,
            identity_rel: d.identity_rel * factor,
            symmetry: d.symmetry * factor,
            equivariance: d.equivariance * factor,
            commute: d.commute * factor,
            non_commute: if factor > 0.0 { d.non_commute / factor } else { f64::INFINITY },
            spectrum: d.spectrum * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub skipped: usize,
    pub worst_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Default)]
struct Tally {
    trials: usize,
    failures: usize,
    skipped: usize,
    worst: f64,
}

impl Tally {
    fn record(&mut self, ok: bool, residual: f64) {
        self.trials += 1;
        if !ok {
            self.failures += 1;
        }
        if residual.is_nan() || residual > self.worst {
            self.worst = if residual.is_nan() { f64::INFINITY } else { residual };
        }
    }

    fn skip(&mut self) {
        self.trials += 1;
        self.skipped += 1;
    }

    fn finish(self, name: &str) -> CheckResult {
        CheckResult {
            name: name.into(),
            trials: self.trials,
            failures: self.failures,
            skipped: self.skipped,
            worst_residual: self.worst,
            pass: self.failures == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verify seed={}", self.seed);
        let _ = writeln!(
            out,
            "{:<22} {:>7} {:>9} {:>8} {:>14}  status",
            "check", "trials", "failures", "skipped", "worst_resid"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<22} {:>7} {:>9} {:>8} {:>14.6e}  {}",
                c.name,
                c.trials,
                c.failures,
                c.skipped,
                c.worst_residual,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "overall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        out
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

/// Random polynomial of degree `deg` scaled so that powers of the operator
/// stay O(1) on a spectrum bounded by `radius`.
fn random_poly<R: Rng>(deg: usize, radius: f64, rng: &mut R) -> PolyFilter {
    let r = radius.max(1.0);
    let coeffs = (0..=deg)
        .map(|j| {
            let c: f64 = StandardNormal.sample(rng);
            c / r.powi(j as i32)
        })
        .collect();
    PolyFilter::new(coeffs).expect("finite coefficients")
}

/// Polynomial `g` with every gain `|g(λ_i)|` on one side of 1 by a margin:
/// all ≤ 0.9 when `smoothing`, all ≥ 1.1 otherwise.
fn margin_poly<R: Rng>(lambda: &Array1<f64>, smoothing: bool, rng: &mut R) -> PolyFilter {
    let radius = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    loop {
        let p = random_poly(rng.random_range(1..=4), radius, rng);
        let gains: Vec<f64> = lambda.iter().map(|&l| p.eval(l).abs()).collect();
        let max = gains.iter().cloned().fold(0.0, f64::max);
        let min = gains.iter().cloned().fold(f64::INFINITY, f64::min);
        if smoothing && max > 1e-6 {
            return p.scaled(0.9 / max);
        }
        if !smoothing && min > 1e-3 {
            return p.scaled(1.1 / min);
        }
    }
}

/// Polynomial filters with all gains below 1 smooth, and with all gains above
/// 1 amplify, the Laplacian quadratic form; plus the spectral identity
/// `f'^T L f' = Σ f̂_i² λ_i g(λ_i)²`.
pub fn check_filter_smoothing(trials: usize, seed: u64) -> CheckResult {
    check_filter_smoothing_with(trials, seed, &Tolerances::default())
}

pub fn check_filter_smoothing_with(trials: usize, seed: u64, tol: &Tolerances) -> CheckResult {
    let mut rng = rng_for(seed, 41);
    let mut tally = Tally::default();
    for trial in 0..2 * trials {
        let smoothing = trial % 2 == 0;
        let n = rng.random_range(4..=12);
        let p_edge = rng.random_range(0.1..0.6);
        let g = gen::connected_graph(n, p_edge, &mut rng);
        let l = gen::laplacian(&g);
        let dec = match DenseSymMatrix::new(l.clone()).and_then(|s| eigendecompose(&s)) {
            Ok(d) => d,
            Err(_) => {
                tally.record(false, f64::INFINITY);
                continue;
            }
        };
        let f = gen::gaussian_vec(n, &mut rng);
        let poly = margin_poly(&dec.lambda, smoothing, &mut rng);
        let f_prime = poly.eval_matrix(&l).dot(&f);
        let outcome = (|| -> Result<(f64, f64)> {
            let before = smoothness_quadratic(&g, &f)?;
            let after = smoothness_quadratic(&g, &f_prime)?;
            let violation = if smoothing { after - before } else { before - after }.max(0.0);
            let f_hat = dec.gft(&f)?;
            let spectral: f64 = f_hat
                .iter()
                .zip(&dec.lambda)
                .map(|(c, &lam)| c * c * lam * poly.eval(lam).powi(2))
                .sum();
            Ok((violation, rel_diff(gen::quad_form(&l, &f_prime), spectral)))
        })();
        match outcome {
            Ok((violation, identity)) => tally.record(
                violation <= tol.inequality && identity <= tol.identity_rel,
                violation.max(identity),
            ),
            Err(_) => tally.record(false, f64::INFINITY),
        }
    }
    tally.finish("filter_smoothing")
}

/// One application of the renormalized adjacency never increases the
/// normalized Laplacian quadratic form, and the normalized Laplacian spectrum
/// lies in `[0, 2)`.
pub fn check_spectrum_bound(trials: usize, seed: u64) -> CheckResult {
    check_spectrum_bound_with(trials, seed, &Tolerances::default())
}

pub fn check_spectrum_bound_with(trials: usize, seed: u64, tol: &Tolerances) -> CheckResult {
    let mut rng = rng_for(seed, 42);
    let mut tally = Tally::default();
    for _ in 0..trials {
        let n = rng.random_range(2..=12);
        let p_edge = rng.random_range(0.1..0.7);
        let g = gen::connected_graph(n, p_edge, &mut rng);
        let s = gen::gcn_operator(&g);
        let l_tilde = Array2::<f64>::eye(n) - &s;
        let f = gen::gaussian_vec(n, &mut rng);
        let sf = s.dot(&f);
        let violation = (gen::quad_form(&l_tilde, &sf) - gen::quad_form(&l_tilde, &f)).max(0.0);
        let spectrum = DenseSymMatrix::new(l_tilde).and_then(|m| eigendecompose(&m));
        match spectrum {
            Ok(dec) => {
                let lo = dec.lambda[0];
                let hi = dec.lambda[n - 1];
                let below_zero = (-lo).max(0.0);
                tally.record(
                    violation <= tol.inequality && hi < 2.0 && below_zero <= tol.spectrum,
                    violation.max(below_zero),
                );
            }
            Err(_) => tally.record(false, f64::INFINITY),
        }
    }
    tally.finish("spectrum_bound")
}

fn random_spec<R: Rng>(rng: &mut R) -> FamilySpec {
    let count = rng.random_range(1..=3);
    let mut entries: Vec<FamilyEntry> = Vec::new();
    while entries.len() < count {
        let eps = match rng.random_range(0..3) {
            0 => 0.0,
            1 => -0.5,
            _ => -rng.random_range(0.0..0.5),
        };
        let e = FamilyEntry::new(eps, rng.random_range(1..=3));
        if !entries.contains(&e) {
            entries.push(e);
        }
    }
    let sparsity = if rng.random_bool(0.5) {
        Sparsity::Dense
    } else {
        Sparsity::HopMasked(rng.random_range(1..=3))
    };
    FamilySpec::new(entries, sparsity).expect("generated spec is valid")
}

fn random_model<R: Rng>(spec: &FamilySpec, depth: MixerDepth, variant: MixerVariant, rng: &mut R) -> (ModelConfig, PdfModelParams) {
    let d = rng.random_range(1..=3);
    let cfg = ModelConfig {
        hidden_dim: d,
        num_layers: 1,
        mixer: MixerConfig::new(depth, variant),
        family: spec.clone(),
        readout: Readout::Sum,
        dropout: 0.0,
        activation: Activation::Gelu,
        input: InputEncoding::Identity,
        task: Task::Regression,
    };
    let mut params = PdfModelParams::init(&cfg, rng).expect("valid config");
    for s in params.slices_mut() {
        for x in s.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
    }
    (cfg, params)
}

/// Closeness (mixed operators are symmetric) and permutation equivariance of
/// the mixed family and of a full layer, over every mixer depth and variant.
pub fn check_mixer_equivariance(trials: usize, seed: u64) -> CheckResult {
    check_mixer_equivariance_with(trials, seed, &Tolerances::default())
}

pub fn check_mixer_equivariance_with(trials: usize, seed: u64, tol: &Tolerances) -> CheckResult {
    let mut rng = rng_for(seed, 31);
    let mut tally = Tally::default();
    for _ in 0..trials {
        let n = rng.random_range(1..=8);
        let g = gen::connected_graph(n, rng.random_range(0.1..0.6), &mut rng);
        let spec = random_spec(&mut rng);
        let perm = gen::permutation(n, &mut rng);
        let outcome = (|| -> Result<(f64, f64)> {
            let fam = build_family(&g, &spec)?;
            let g_perm = g.permute(&perm)?;
            let fam_perm = build_family(&g_perm, &spec)?;
            let mut sym = 0.0f64;
            let mut equi = 0.0f64;
            for depth in MixerDepth::ALL {
                for variant in MixerVariant::ALL {
                    let (cfg, params) = random_model(&spec, depth, variant, &mut rng);
                    let layer = &params.layers[0];
                    let mixed = mix_family(&fam, &layer.mixer)?;
                    let mixed_perm = mix_family(&fam_perm, &layer.mixer)?;
                    for (m, mp) in mixed.matrices().into_iter().zip(mixed_perm.matrices()) {
                        sym = sym.max(max_abs(&(m.values() - &m.values().t())));
                        let expect = conjugate_by_permutation(m.values(), &perm);
                        equi = equi.max(max_abs(&(mp.values() - &expect)));
                    }
                    let h = gen::gaussian_mat(n, cfg.hidden_dim, &mut rng);
                    let out = layer_forward(&h, &fam, layer, cfg.activation, 0.0, &mut Mode::Eval)?;
                    let out_perm = layer_forward(
                        &permute_rows(&h, &perm),
                        &fam_perm,
                        layer,
                        cfg.activation,
                        0.0,
                        &mut Mode::Eval,
                    )?;
                    equi = equi.max(max_abs(&(out_perm - permute_rows(&out, &perm))));
                }
            }
            Ok((sym, equi))
        })();
        match outcome {
            Ok((sym, equi)) => tally.record(sym <= tol.symmetry && equi <= tol.equivariance, sym.max(equi)),
            Err(_) => tally.record(false, f64::INFINITY),
        }
    }
    tally.finish("mixer_equivariance")
}

/// Members sharing `ε` commute; `ε = 0` and `ε = -1/2` members do not commute
/// on non-regular graphs; on regular graphs they do (expected, not a failure).
pub fn check_eigenspace_sharing(seed: u64) -> CheckResult {
    check_eigenspace_sharing_with(seed, &Tolerances::default())
}

pub fn check_eigenspace_sharing_with(seed: u64, tol: &Tolerances) -> CheckResult {
    let mut rng = rng_for(seed, 33);
    let mut tally = Tally::default();
    let power = |m: &Array2<f64>, k: usize| (1..k).fold(m.clone(), |acc, _| acc.dot(m));

    for _ in 0..EQUAL_EPS_PAIRS {
        let n = rng.random_range(2..=8);
        let g = gen::connected_graph(n, rng.random_range(0.1..0.6), &mut rng);
        let eps = -rng.random_range(0.0..=0.5);
        let base = gen::base_operator(&g, eps);
        let (ka, kb) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let c = commutator_norm(&power(&base, ka), &power(&base, kb));
        tally.record(c <= tol.commute, c);
    }

    for _ in 0..PENDANT_GRAPHS {
        let n = rng.random_range(2..=8);
        let g = gen::with_pendant(&gen::connected_graph(n, rng.random_range(0.1..0.6), &mut rng), &mut rng);
        let c = commutator_norm(&gen::base_operator(&g, 0.0), &gen::base_operator(&g, -0.5));
        tally.record(c > tol.non_commute, 0.0);
    }

    let p3 = Graph::path(3);
    let c = commutator_norm(&gen::base_operator(&p3, 0.0), &gen::base_operator(&p3, -0.5));
    let r = (c - 1.0 / 3.0).abs();
    tally.record(r <= tol.commute, r);

    for n in 3..=8 {
        for pairs in [gen::cycle_pairs(n), gen::complete_pairs(n)] {
            let g = Graph::unweighted(n, &pairs).expect("regular graph is valid");
            let c = commutator_norm(&gen::base_operator(&g, 0.0), &gen::base_operator(&g, -0.5));
            tally.record(c <= tol.commute, c);
        }
    }
    tally.finish("eigenspace_sharing")
}

fn random_weighted<R: Rng>(rng: &mut R) -> Graph {
    let n = rng.random_range(2..=12);
    let g = gen::connected_graph(n, rng.random_range(0.1..0.6), rng);
    if rng.random_bool(0.5) {
        return g;
    }
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge {
            weight: rng.random_range(0.1..3.0),
            ..*e
        })
        .collect();
    Graph::new(n, edges, NodeFeatures::Labels(vec![0; n])).expect("reweighted graph is valid")
}

/// The Laplacian quadratic form equals its spectral expansion (in both the
/// combinatorial and normalized forms), and the closed-form cosine between a
/// filtered signal and an eigenvector matches the direct computation.
pub fn check_quadratic_spectral(trials: usize, seed: u64) -> CheckResult {
    check_quadratic_spectral_with(trials, seed, &Tolerances::default())
}

pub fn check_quadratic_spectral_with(trials: usize, seed: u64, tol: &Tolerances) -> CheckResult {
    let mut rng = rng_for(seed, 56);
    let mut tally = Tally::default();
    for trial in 0..trials {
        let g = random_weighted(&mut rng);
        let n = g.n();
        let mut f = gen::gaussian_vec(n, &mut rng);
        f /= f.dot(&f).sqrt();
        let quad = (|| -> Result<f64> {
            let l = DenseSymMatrix::new(gen::laplacian(&g))?;
            let comb = rel_diff(smoothness_quadratic(&g, &f)?, smoothness_spectral(&eigendecompose(&l)?, &f)?);
            let s = gen::gcn_operator(&g);
            let l_norm = DenseSymMatrix::new(Array2::<f64>::eye(n) - &s)?;
            let norm = rel_diff(
                smoothness_normalized(&g, &f)?,
                smoothness_spectral(&eigendecompose(&l_norm)?, &f)?,
            );
            Ok(comb.max(norm))
        })();
        match quad {
            Ok(r) => tally.record(r <= tol.identity_rel, r),
            Err(_) => tally.record(false, f64::INFINITY),
        }

        let eps = -rng.random_range(0.0..=0.5);
        let base = if rng.random_bool(0.3) {
            gen::laplacian(&g)
        } else {
            gen::base_operator(&g, eps)
        };
        let cosine = (|| -> Result<Option<f64>> {
            let base_sym = DenseSymMatrix::new(base.clone())?;
            let dec = eigendecompose(&base_sym)?;
            let radius = dec.lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
            let i = rng.random_range(0..n);
            let (poly, signal) = if trial % 10 == 9 {
                let j = rng.random_range(0..n);
                (PolyFilter::new(vec![-dec.lambda[j], 1.0])?, dec.u.column(j).to_owned())
            } else {
                (random_poly(rng.random_range(0..=3), radius, &mut rng), f.clone())
            };
            let s = DenseSymMatrix::symmetrized(poly.eval_matrix(&base));
            let sf = s.matvec(&signal);
            if sf.dot(&sf).sqrt() <= 1e-8 {
                return Ok(None);
            }
            let closed = cos_to_eigvec(&s, &dec, &poly, &signal, i)?;
            let direct = direct_cosine(&s, &dec, &signal, i)?;
            Ok(Some((closed - direct).abs()))
        })();
        match cosine {
            Ok(Some(r)) => tally.record(r <= tol.identity_rel, r),
            Ok(None) => tally.skip(),
            Err(_) => tally.record(false, f64::INFINITY),
        }
    }
    tally.finish("quadratic_spectral")
}

/// Trial counts per check; `None` keeps each check's default.
pub fn run_all(seed: u64, trials: Option<usize>) -> VerifyReport {
    run_all_with(seed, trials, &Tolerances::default())
}

pub fn run_all_with(seed: u64, trials: Option<usize>, tol: &Tolerances) -> VerifyReport {
    let t = |default: usize| trials.unwrap_or(default);
    VerifyReport {
        seed,
        checks: vec![
            check_filter_smoothing_with(t(FILTER_TRIALS), seed, tol),
            check_spectrum_bound_with(t(SPECTRUM_TRIALS), seed, tol),
            check_mixer_equivariance_with(t(EQUIVARIANCE_TRIALS), seed, tol),
            check_eigenspace_sharing_with(seed, tol),
            check_quadratic_spectral_with(t(QUADRATIC_TRIALS), seed, tol),
        ],
    }
}

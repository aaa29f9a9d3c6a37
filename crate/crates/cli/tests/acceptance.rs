//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! hard criterion fails. Criterion 9 is soft and only reported.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pdf_cli::commands::ablate::{cmd_ablate, median};
use pdf_core::dataset::Task;
use pdf_core::family::{build_family, FamilySpec};
use pdf_core::graph::{Graph, NodeFeatures};
use pdf_core::linalg::commutator_norm;
use pdf_core::model::{
    model_forward, Activation, InputEncoding, MixerConfig, MixerDepth, MixerVariant, Mode, ModelConfig,
    PdfModelParams, Readout,
};
use pdf_core::train::{backward, loss_and_grad, LossKind};
use pdf_core::verify::{self, gen, CheckResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const SEED: u64 = 1;

type Criterion = (&'static str, bool, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str) -> Value {
    let text = fs::read_to_string(configs_dir().join(name)).expect("example config exists");
    serde_json::from_str(&text).expect("example config is JSON")
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let path = dir.join("config.in.json");
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn pdf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pdf"))
        .args(args)
        .output()
        .expect("pdf binary runs")
}

fn check_line(c: &CheckResult) -> String {
    format!(
        "{} trials, {} failures, {} skipped, worst residual {:.3e}",
        c.trials, c.failures, c.skipped, c.worst_residual
    )
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let c = verify::check_quadratic_spectral(verify::QUADRATIC_TRIALS, SEED);
    let secs = start.elapsed().as_secs_f64();
    outcome(c.pass && secs < 5.0, format!("{}; {secs:.2} s", check_line(&c)))
}

fn criterion_2() -> Outcome {
    let c = verify::check_filter_smoothing(verify::FILTER_TRIALS, SEED);
    outcome(c.pass && c.trials == 2 * verify::FILTER_TRIALS, check_line(&c))
}

fn criterion_3() -> Outcome {
    let c = verify::check_spectrum_bound(verify::SPECTRUM_TRIALS, SEED);
    outcome(c.pass, check_line(&c))
}

fn criterion_4() -> Outcome {
    let c = verify::check_mixer_equivariance(verify::EQUIVARIANCE_TRIALS, SEED);
    outcome(c.pass, check_line(&c))
}

fn criterion_5() -> Outcome {
    let c = verify::check_eigenspace_sharing(SEED);
    let p3 = Graph::path(3);
    let v = commutator_norm(&gen::base_operator(&p3, 0.0), &gen::base_operator(&p3, -0.5));
    let three_sig = format!("{v:.3}") == "0.333";
    outcome(c.pass && three_sig, format!("{}; P3 commutator {v:.6}", check_line(&c)))
}

fn grad_config(depth: MixerDepth, variant: MixerVariant) -> ModelConfig {
    ModelConfig {
        hidden_dim: 4,
        num_layers: 2,
        mixer: MixerConfig::new(depth, variant),
        family: FamilySpec::dense(&[(-0.5, 1), (0.0, 1), (-0.25, 2)]).unwrap(),
        readout: Readout::Mean,
        dropout: 0.0,
        activation: Activation::Gelu,
        input: InputEncoding::Embedding { num_labels: 3 },
        task: Task::Regression,
    }
}

fn criterion_6() -> Outcome {
    const STEP: f64 = 1e-5;
    const PROBES: usize = 20;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let g = gen::connected_graph(6, 0.4, &mut rng);
    let labels = (0..6).map(|_| rng.random_range(0..3)).collect();
    let g = g.with_features(NodeFeatures::Labels(labels)).unwrap();
    let mut worst = 0.0f64;
    let mut configs = 0;
    for variant in MixerVariant::ALL {
        for depth in MixerDepth::ALL {
            let cfg = grad_config(depth, variant);
            let fam = build_family(&g, &cfg.family).unwrap();
            let mut params = PdfModelParams::init(&cfg, &mut rng).unwrap();
            for s in params.slices_mut() {
                s.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            }
            let (_, grads) = backward(&g, &fam, &cfg, &params, 25.0, LossKind::Mae).unwrap();
            let loss = |p: &PdfModelParams| {
                let out = model_forward(&g, &fam, &cfg, p, Mode::Eval).unwrap();
                loss_and_grad(&out, 25.0, LossKind::Mae).unwrap().0
            };
            for _ in 0..PROBES {
                let i = rng.random_range(0..params.n_params());
                let mut plus = params.clone();
                plus.set_flat(i, params.get_flat(i) + STEP);
                let mut minus = params.clone();
                minus.set_flat(i, params.get_flat(i) - STEP);
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
                let analytic = grads.get_flat(i);
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max(rel);
            }
            configs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && secs < 30.0,
        format!("{configs} configs x {PROBES} probes, worst relative error {worst:.3e}; {secs:.2} s"),
    )
}

fn criterion_7() -> Outcome {
    let mut cfg = load_config("quickstart.json");
    cfg["model"]["dropout"] = json!(0.1);
    cfg["train"]["max_epochs"] = json!(40);
    let mut histories = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        cfg["output_dir"] = json!(dir.path().join("out"));
        let path = write_config(dir.path(), &cfg);
        let out = pdf(&["train", path.to_str().unwrap()]);
        if !out.status.success() {
            return outcome(false, String::from_utf8_lossy(&out.stderr).into_owned());
        }
        histories.push(fs::read(dir.path().join("out/history.csv")).unwrap());
    }
    outcome(
        histories[0] == histories[1] && !histories[0].is_empty(),
        format!("two runs, {} bytes of history.csv each", histories[0].len()),
    )
}

fn train_summary(cfg: &Value) -> Result<(Value, String), String> {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg.clone();
    cfg["output_dir"] = json!(dir.path().join("out"));
    let path = write_config(dir.path(), &cfg);
    let out = pdf(&["train", path.to_str().unwrap()]);
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let summary = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let history = fs::read_to_string(dir.path().join("out/history.csv")).unwrap();
    Ok((summary, history))
}

/// Last row of history.csv as (train_metric, val_metric, test_metric).
fn last_metrics(history: &str) -> (f64, f64, f64) {
    let last = history.lines().last().expect("history has rows");
    let f: Vec<f64> = last.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect();
    (f[3], f[4], f[5])
}

fn criterion_8() -> Outcome {
    let reg = match train_summary(&load_config("quickstart.json")) {
        Ok((s, _)) => s["final_train_metric"].as_f64().unwrap_or(f64::NAN),
        Err(e) => return outcome(false, e),
    };
    let base = load_config("cycle_vs_path.json");
    let mut good = 0;
    let mut all_fit = true;
    let mut held_out = Vec::new();
    for seed in 0..5u64 {
        let mut cfg = base.clone();
        cfg["dataset"]["seed"] = json!(seed);
        cfg["train"]["seed"] = json!(seed);
        let history = match train_summary(&cfg) {
            Ok((_, h)) => h,
            Err(e) => return outcome(false, e),
        };
        let (train, val, test) = last_metrics(&history);
        // 40 graphs split 24/8/8: val and test weigh equally
        let held = (val + test) / 2.0;
        all_fit &= train == 1.0;
        if held >= 0.9 {
            good += 1;
        }
        held_out.push(format!("{held:.3}"));
    }
    outcome(
        reg < 0.05 && all_fit && good >= 4,
        format!(
            "degree_regression train MAE {reg:.4}; cycle_vs_path train acc 100% in all seeds: {all_fit}, held-out [{}] >= 0.9 in {good}/5",
            held_out.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load_config("ablation.json");
    cfg["ablation"]["families"] = json!([{"name": "(eps,k)", "entries": [[-0.5, 1], [0.0, 1], [-0.5, 2]]}]);
    cfg["ablation"]["depths"] = json!(["Lin", "2L"]);
    cfg["ablation"]["variants"] = json!(["shd", "idp"]);
    cfg["ablation"]["repeats"] = json!(5);
    cfg["output_dir"] = json!(dir.path().join("out"));
    let path = write_config(dir.path(), &cfg);
    let rows = match cmd_ablate(&path) {
        Ok((rows, _)) => rows,
        Err(e) => return outcome(false, format!("{e:#}")),
    };
    let med = |depth: MixerDepth, variant: MixerVariant| {
        rows.iter()
            .find(|r| r.depth == depth && r.variant == variant)
            .map_or(f64::NAN, |r| median(&r.val))
    };
    let idp_2l = med(MixerDepth::TwoLayer, MixerVariant::Idp);
    let idp_lin = med(MixerDepth::Lin, MixerVariant::Idp);
    let shd_2l = med(MixerDepth::TwoLayer, MixerVariant::Shd);
    outcome(
        idp_2l >= idp_lin && idp_2l >= shd_2l,
        format!("median val accuracy idp-2L {idp_2l:.3}, idp-Lin {idp_lin:.3}, shd-2L {shd_2l:.3}"),
    )
}

/// `(label, train_mean, eval_mean)` rows of bench.txt.
fn parse_bench(text: &str) -> Vec<(String, f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("model"))
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 7 {
                return None;
            }
            Some((f[0].to_string(), f[1].parse().ok()?, f[4].parse().ok()?))
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load_config("bench.json");
    cfg["output_dir"] = json!(dir.path().join("out"));
    let path = write_config(dir.path(), &cfg);
    let out = pdf(&["bench", path.to_str().unwrap()]);
    if !out.status.success() {
        return outcome(false, String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let text = fs::read_to_string(dir.path().join("out/bench.txt")).unwrap();
    let rows = parse_bench(&text);
    let find = |label: &str| rows.iter().find(|r| r.0 == label);
    let (Some(shd), Some(idp)) = (find("shd"), find("idp")) else {
        return outcome(false, format!("missing shd/idp rows in\n{text}"));
    };
    let ratio = |a: f64, b: f64| a.max(b) / a.min(b);
    let (rt, re) = (ratio(shd.1, idp.1), ratio(shd.2, idp.2));
    let finite = rows.iter().all(|r| r.1.is_finite() && r.2.is_finite());
    outcome(
        rt <= 3.0 && re <= 3.0 && finite && cfg["bench"]["hidden_dim"] == json!(32),
        format!("d=32, idp/shd ratio training {rt:.2}x, eval {re:.2}x"),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let criteria: [Criterion; 10] = [
        ("quadratic form vs spectral expansion", true, criterion_1),
        ("smoothing / amplifying filters", true, criterion_2),
        ("normalized spectrum in [0, 2)", true, criterion_3),
        ("mixer symmetry and equivariance", true, criterion_4),
        ("eigenspace sharing", true, criterion_5),
        ("gradient oracle", true, criterion_6),
        ("train determinism", true, criterion_7),
        ("learning sanity", true, criterion_8),
        ("ablation ordering (soft)", false, criterion_9),
        ("bench parity", true, criterion_10),
    ];
    let mut hard_failures = 0;
    for (i, (name, hard, f)) in criteria.iter().enumerate() {
        let o = f();
        let status = match (o.pass, hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (soft, logged only)",
        };
        println!("{status} criterion {}: {name}: {}", i + 1, o.detail);
        if !o.pass && *hard {
            hard_failures += 1;
        }
    }
    println!("acceptance: {hard_failures} hard failure(s)");
    if hard_failures > 0 {
        std::process::exit(1);
    }
}

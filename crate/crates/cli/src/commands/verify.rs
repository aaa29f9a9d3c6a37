use pdf_core::verify::{run_all_with, Tolerances, VerifyReport};

/// Runs the whole suite. `tolerance_scale` multiplies every tolerance; a
/// negative value forces failures for testing the exit path.
pub fn cmd_verify(seed: u64, trials: Option<usize>, tolerance_scale: f64) -> VerifyReport {
    let tol = if tolerance_scale == 1.0 {
        Tolerances::default()
    } else {
        Tolerances::scaled(tolerance_scale)
    };
    run_all_with(seed, trials, &tol)
}

// Monte-Carlo ensemble on the two-qubit model and the steady-state
// classification of its tail.

use cm2::ensemble::{run_ensemble, EnsembleConfig};
use cm2::presets;
use cm2::thermo::{iss_detect, IssReport, IssThresholds};

pub fn run_example() -> cm2::Result<IssReport> {
    let model = presets::two_qubit_model(0.3, 0.3, 0.1)?;
    let run = run_ensemble(&model, &EnsembleConfig::new(80, 400, 7))?;
    let tail = run.series.steps.last().expect("non-empty");
    println!("S_u={:.6}  S_c={:.6}  I={:.3e}", tail.s_u, tail.s_c, tail.info);
    let report = iss_detect(&run.series, &IssThresholds::default());
    println!(
        "window {}..  G={:.3e}±{:.1e}  L={:.3e}±{:.1e}  |dI|={:.1e}  verdict {}",
        report.window_start,
        report.mean_gain,
        report.se_gain,
        report.mean_loss,
        report.se_loss,
        report.mean_abs_d_info,
        report.verdict
    );
    Ok(report)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

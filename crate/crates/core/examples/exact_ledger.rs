// Exact enumeration of every outcome record for a few steps, the full
// entropy/information ledger, and the verifier's worst margins.

use cm2::dynamics::DEFAULT_PRUNE;
use cm2::presets;
use cm2::thermo::{exact_series, verify_exact, VerifierReport};

pub fn run_example() -> cm2::Result<VerifierReport> {
    let model = presets::single_qubit_model(0.3, 0.3)?;
    let run = exact_series(&model, 8, DEFAULT_PRUNE)?;
    println!("   t        S_u        S_c          G          L     dSig_u     dSig_c");
    for s in &run.series.steps {
        println!(
            "{:4} {:10.6} {:10.6} {:10.3e} {:10.3e} {:10.3e} {:10.3e}",
            s.t, s.s_u, s.s_c, s.gain, s.loss, s.d_sigma_u, s.d_sigma_c
        );
    }
    let report = verify_exact(&run);
    for c in report.worst() {
        println!("{:32} t={:<2} slack {:+.3e}", c.name, c.t, c.slack);
    }
    println!("verifier: {}", if report.passed { "pass" } else { "FAIL" });
    Ok(report)
}

#[allow(dead_code)]
fn main() {
    match run_example() {
        Ok(r) if r.passed => {}
        Ok(_) => std::process::exit(2),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}

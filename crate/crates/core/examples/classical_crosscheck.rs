// An incoherent model is a hidden Markov chain: record probabilities from
// the quantum engine and the forward algorithm coincide.

use cm2::classical::{crosscheck, ClassicalModel, CrossCheck};
use cm2::presets;

pub fn run_example() -> cm2::Result<CrossCheck> {
    let model = presets::single_qubit_model(0.3, 0.3)?.with_initial_state(presets::thermal_qubit(0.9)?)?;
    let cm = ClassicalModel::from_model(&model)?;
    println!("Q =\n{:.5}", cm.q.matrix);
    let check = crosscheck(&model, 6)?;
    println!(
        "{} records, max |P_q - P_hmm| = {:.2e} -> {}",
        check.records,
        check.max_abs_diff,
        if check.passed { "pass" } else { "FAIL" }
    );
    Ok(check)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

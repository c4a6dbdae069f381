// A qubit repeatedly colliding with thermal qubits forgets its initial
// coherence and relaxes to the ancilla state.

use cm2::dynamics::run_unconditional;
use cm2::{presets, thermo};

pub fn run_example() -> cm2::Result<f64> {
    let model = presets::single_qubit_model(0.3, 0.3)?;
    let run = run_unconditional(&model, 200)?;
    let target = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
    for (t, rho) in run.states.iter().enumerate().step_by(40) {
        let s = thermo::vn_entropy(rho.matrix())?;
        println!("t={t:4}  S(X_t)={s:.9}");
    }
    let end = thermo::vn_entropy(run.states[200].matrix())?;
    println!("binary entropy of the ancilla {target:.9}");
    Ok(end - target)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

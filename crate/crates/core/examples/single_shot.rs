// One long realization started at the fixed point: time averages along the
// trajectory approach the ensemble values.

use cm2::cli::{SingleShot, TimeAverage};
use cm2::presets::{Preset, PresetParams};

pub fn run_example() -> cm2::Result<(f64, TimeAverage)> {
    let model = Preset::TwoQubitFixedPoint.build(&PresetParams::default())?;
    let shot = SingleShot::compute(&model, 2000, 11)?;
    let clicks = *shot.click_average.last().expect("non-empty");
    let gain = SingleShot::time_average(&shot.gain, 20);
    let s_c = SingleShot::time_average(&shot.s_c, 20);
    println!("Z_T = {clicks:.4}");
    println!("<G> = {:.3e} ± {:.1e}", gain.mean, gain.se);
    println!("<S_c> = {:.6} ± {:.1e}  (S_u = {:.6})", s_c.mean, s_c.se, shot.s_u[0]);
    Ok((clicks, gain))
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

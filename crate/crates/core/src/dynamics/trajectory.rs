use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sample_step;
use crate::error::{Error, Result};
use crate::model::Cm2Model;
use crate::state::DensityMatrix;

/// One sampled realization of the monitored dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    /// `z_1 .. z_T` as outcome indices.
    pub outcomes: Vec<usize>,
    /// Normalized `rho_{X_t|zeta_t}` for `t = 0..=T`.
    pub states: Vec<DensityMatrix>,
    /// `rho_{X_t|zeta_{t-1}} = E(rho_{X_{t-1}|zeta_{t-1}})`, index `t - 1`.
    pub intermediates: Vec<DensityMatrix>,
    /// `P(z_t | zeta_{t-1})`, index `t - 1`.
    pub weights: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.outcomes.len()
    }

    /// `ln P(zeta_T)`, the sum of the per-step log weights.
    pub fn log_probability(&self) -> f64 {
        self.weights.iter().map(|w| w.ln()).sum()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in an ensemble with `master` seed; depends on
/// nothing but the pair, so any scheduling order gives the same streams.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Counter-based stream for one trajectory.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn run_trajectory(model: &Cm2Model, steps: usize, seed: u64) -> Result<TrajectoryRecord> {
    if steps == 0 {
        return Err(Error::InvalidArgument("number of steps must be at least 1".into()));
    }
    let mut rng = rng_for(seed);
    let mut rec = TrajectoryRecord {
        seed,
        outcomes: Vec::with_capacity(steps),
        states: Vec::with_capacity(steps + 1),
        intermediates: Vec::with_capacity(steps),
        weights: Vec::with_capacity(steps),
    };
    rec.states.push(model.rho_x0.clone());
    for _ in 0..steps {
        let s = sample_step(rec.states.last().expect("non-empty"), model, &mut rng)?;
        rec.outcomes.push(s.outcome);
        rec.weights.push(s.weight);
        rec.intermediates.push(s.intermediate);
        rec.states.push(s.state);
    }
    Ok(rec)
}

//! Evolution engines: the unconditional channel, the conditional
//! (trace non-preserving) maps, trajectory sampling, exact enumeration over
//! outcome records and the fixed-point solver.

mod exact;
mod fixed_point;
mod trajectory;

use rand::Rng;

pub use exact::{enumerate_exact, Branch, BranchEnsemble, DEFAULT_PRUNE, ENTRY_BUDGET};
pub use fixed_point::{channel_matrix, fixed_point, FIXED_POINT_GAP};
pub use trajectory::{rng_for, run_trajectory, trajectory_seed, TrajectoryRecord};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::Cm2Model;
use crate::state::DensityMatrix;

/// Outcomes whose probability falls below this are never sampled.
pub const MIN_BRANCH_WEIGHT: f64 = 1e-14;

fn check_system_dim(rho: &CMatrix, model: &Cm2Model) -> Result<()> {
    if rho.shape() != (model.system_dim(), model.system_dim()) {
        return Err(Error::InvalidArgument(format!(
            "system operator has shape {:?}, model system dimension is {}",
            rho.shape(),
            model.system_dim()
        )));
    }
    Ok(())
}

/// `U (rho_X (x) rho_Y) U^dagger` on the full `X (x) Y` space.
pub fn joint_collide_raw(rho_x: &CMatrix, model: &Cm2Model) -> Result<CMatrix> {
    check_system_dim(rho_x, model)?;
    let product = linalg::tensor(rho_x, model.rho_y().matrix());
    Ok(linalg::conjugate(model.full_collision_unitary(), &product))
}

pub fn joint_collide(rho_x: &DensityMatrix, model: &Cm2Model) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new_unchecked(linalg::hermitize(&joint_collide_raw(
        rho_x, model,
    )?)))
}

/// Reduced system state of a joint `X (x) Y` operator.
pub fn system_marginal(joint: &CMatrix, model: &Cm2Model) -> CMatrix {
    linalg::partial_trace(joint, &[model.system_dim(), model.ancilla_dim()], &[0])
        .expect("joint operator matches model dimensions")
}

/// Reduced ancilla state of a joint `X (x) Y` operator.
pub fn ancilla_marginal(joint: &CMatrix, model: &Cm2Model) -> CMatrix {
    linalg::partial_trace(joint, &[model.system_dim(), model.ancilla_dim()], &[1])
        .expect("joint operator matches model dimensions")
}

/// Reduced state of each ancilla unit.
pub fn unit_marginals(joint: &CMatrix, model: &Cm2Model) -> Vec<CMatrix> {
    let dims = model.dims();
    (1..dims.len())
        .map(|k| linalg::partial_trace(joint, &dims, &[k]).expect("dims match"))
        .collect()
}

/// The unconditional channel `E(rho) = tr_Y U (rho (x) rho_Y) U^dagger`.
pub fn uncond_step(rho_x: &DensityMatrix, model: &Cm2Model) -> Result<DensityMatrix> {
    let joint = joint_collide_raw(rho_x, model)?;
    Ok(DensityMatrix::new_unchecked(linalg::hermitize(&system_marginal(
        &joint, model,
    ))))
}

/// `E_z(rho) = tr_Y { M_z U (rho (x) rho_Y) U^dagger M_z^dagger }`, for any
/// (possibly unnormalized or non-Hermitian) operator `rho`.
pub fn cond_apply(rho: &CMatrix, outcome: usize, model: &Cm2Model) -> Result<CMatrix> {
    check_system_dim(rho, model)?;
    if outcome >= model.n_outcomes() {
        return Err(Error::UnknownOutcome(outcome.to_string()));
    }
    Ok(apply_kraus(model.kraus(outcome), rho))
}

pub fn cond_apply_label(rho: &CMatrix, label: &str, model: &Cm2Model) -> Result<CMatrix> {
    cond_apply(rho, model.measurement.index_of(label)?, model)
}

/// Unconditional channel on an arbitrary operator, via the Kraus route.
pub(crate) fn channel_apply(rho: &CMatrix, model: &Cm2Model) -> CMatrix {
    let d = rho.nrows();
    (0..model.n_outcomes()).fold(CMatrix::zeros(d, d), |acc, z| acc + apply_kraus(model.kraus(z), rho))
}

fn apply_kraus(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    ops.iter()
        .fold(CMatrix::zeros(d, d), |acc, k| acc + linalg::conjugate(k, rho))
}

/// Result of one sampled collision.
#[derive(Debug, Clone)]
pub struct StepSample {
    pub outcome: usize,
    /// Probability of the drawn outcome given the input state.
    pub weight: f64,
    /// Normalized post-measurement system state.
    pub state: DensityMatrix,
    /// Unconditional image `E(rho)` of the input state.
    pub intermediate: DensityMatrix,
}

/// Apply all conditional maps and draw one outcome with probability
/// `tr E_z(rho)`.
pub fn sample_step<R: Rng + ?Sized>(rho: &DensityMatrix, model: &Cm2Model, rng: &mut R) -> Result<StepSample> {
    check_system_dim(rho, model)?;
    let images: Vec<CMatrix> = (0..model.n_outcomes())
        .map(|z| apply_kraus(model.kraus(z), rho.matrix()))
        .collect();
    let weights: Vec<f64> = images.iter().map(|m| m.trace().re).collect();
    let eligible: f64 = weights.iter().filter(|&&w| w >= MIN_BRANCH_WEIGHT).sum();
    if eligible <= 0.0 {
        return Err(Error::DegenerateDistribution {
            threshold: MIN_BRANCH_WEIGHT,
        });
    }
    let u: f64 = rng.random::<f64>() * eligible;
    let mut acc = 0.0;
    let mut outcome = None;
    let mut last = 0;
    for (z, &w) in weights.iter().enumerate() {
        if w < MIN_BRANCH_WEIGHT {
            continue;
        }
        last = z;
        acc += w;
        if u < acc {
            outcome = Some(z);
            break;
        }
    }
    // u can equal `eligible` only through rounding; fall back to the last eligible outcome
    let outcome = outcome.unwrap_or(last);
    let d = rho.dim();
    let intermediate = images.iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m);
    let weight = weights[outcome];
    Ok(StepSample {
        outcome,
        weight,
        state: DensityMatrix::new_unchecked(linalg::hermitize(&images[outcome].unscale(weight))),
        intermediate: DensityMatrix::new_unchecked(linalg::hermitize(&intermediate)),
    })
}

/// Deterministic unconditional evolution.
#[derive(Debug, Clone)]
pub struct UnconditionalRun {
    /// `rho_{X_t}` for `t = 0..=T`.
    pub states: Vec<DensityMatrix>,
    /// `rho_{X_t Y_t'}` for `t = 1..=T` (index `t - 1`).
    pub joints: Vec<CMatrix>,
    /// Post-collision ancilla `rho_{Y_t'}`, index `t - 1`.
    pub ancilla_posteriors: Vec<CMatrix>,
    /// Post-collision reduced state of every unit, index `t - 1`.
    pub unit_posteriors: Vec<Vec<CMatrix>>,
}

pub fn run_unconditional(model: &Cm2Model, steps: usize) -> Result<UnconditionalRun> {
    if steps == 0 {
        return Err(Error::InvalidArgument("number of steps must be at least 1".into()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut joints = Vec::with_capacity(steps);
    let mut ancilla_posteriors = Vec::with_capacity(steps);
    let mut unit_posteriors = Vec::with_capacity(steps);
    states.push(model.rho_x0.clone());
    for _ in 0..steps {
        let joint = linalg::hermitize(&joint_collide_raw(states.last().expect("non-empty"), model)?);
        states.push(DensityMatrix::new_unchecked(linalg::hermitize(&system_marginal(
            &joint, model,
        ))));
        ancilla_posteriors.push(ancilla_marginal(&joint, model));
        unit_posteriors.push(unit_marginals(&joint, model));
        joints.push(joint);
    }
    Ok(UnconditionalRun {
        states,
        joints,
        ancilla_posteriors,
        unit_posteriors,
    })
}

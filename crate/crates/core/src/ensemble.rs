//! Monte-Carlo estimation of the ledger from sampled trajectories.
//!
//! Unconditional quantities are deterministic and come from the averaged
//! dynamics; only the record-averaged ones (`S_c`, `G`, `L`, and from them
//! `dI`, `dSigma_c`) are sampled. Per trajectory,
//!
//! ```text
//! G_t  = S(E(rho_{t-1|zeta})) - S(rho_{t|zeta})
//! dI_t = [S_u(t) - S(rho_{t|zeta})] - [S_u(t-1) - S(rho_{t-1|zeta})]
//! L_t  = G_t - dI_t
//! ```
//!
//! whose averages are the exact rates.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{run_trajectory, run_unconditional, trajectory_seed, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::model::Cm2Model;
use crate::thermo::{
    self, check_measurement_condition, delta_phi_c, delta_sigma_u, BatchMeans, ConditionCheck, SeriesErrors,
    StepLedger, ThermoSeries, UncondThermo,
};

/// Number of contiguous trajectory blocks used for standard errors.
pub const DEFAULT_BATCHES: usize = 20;

/// Deterministic part of the ledger.
#[derive(Debug, Clone)]
pub struct UnconditionalLedger {
    /// `S(X_t)` for `t = 0..=T`.
    pub s_u: Vec<f64>,
    /// Index `t - 1`.
    pub steps: Vec<UncondThermo>,
    /// Index `t - 1`.
    pub d_phi_c: Vec<f64>,
    pub condition: ConditionCheck,
}

pub fn unconditional_ledger(model: &Cm2Model, steps: usize) -> Result<UnconditionalLedger> {
    let run = run_unconditional(model, steps)?;
    let s_u = run
        .states
        .iter()
        .map(|s| thermo::vn_entropy(s.matrix()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(steps);
    let mut d_phi_c = Vec::with_capacity(steps);
    for s in &run.states[..steps] {
        let u = delta_sigma_u(s.matrix(), model)?;
        d_phi_c.push(delta_phi_c(&u.rho_y_post, model)?.d_phi_c);
        out.push(u);
    }
    Ok(UnconditionalLedger {
        s_u,
        steps: out,
        d_phi_c,
        condition: check_measurement_condition(model),
    })
}

/// Single-realization ledger. Rates use index `t - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLedger {
    /// `S(rho_{X_t|zeta_t})` for `t = 0..=T`.
    pub s_c: Vec<f64>,
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
    pub d_info: Vec<f64>,
}

pub fn trajectory_ledger(rec: &TrajectoryRecord, s_u: &[f64]) -> Result<TrajectoryLedger> {
    let steps = rec.steps();
    if s_u.len() < steps + 1 {
        return Err(Error::InvalidArgument(
            "unconditional entropies shorter than the trajectory".into(),
        ));
    }
    let s_c = rec
        .states
        .iter()
        .map(|s| thermo::vn_entropy(s.matrix()))
        .collect::<Result<Vec<_>>>()?;
    let mut gain = Vec::with_capacity(steps);
    let mut loss = Vec::with_capacity(steps);
    let mut d_info = Vec::with_capacity(steps);
    for t in 1..=steps {
        let s_mid = thermo::vn_entropy(rec.intermediates[t - 1].matrix())?;
        let g = s_mid - s_c[t];
        let di = (s_u[t] - s_c[t]) - (s_u[t - 1] - s_c[t - 1]);
        gain.push(g);
        d_info.push(di);
        loss.push(g - di);
    }
    Ok(TrajectoryLedger {
        s_c,
        gain,
        loss,
        d_info,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsembleConfig {
    pub steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub batches: usize,
}

impl EnsembleConfig {
    pub fn new(steps: usize, n_traj: usize, seed: u64) -> Self {
        Self {
            steps,
            n_traj,
            seed,
            batches: DEFAULT_BATCHES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub series: ThermoSeries,
    pub unconditional: UnconditionalLedger,
    /// Fraction of trajectories reporting each outcome, `[t - 1][z]`.
    pub outcome_frequencies: Vec<Vec<f64>>,
}

/// Ordered batch boundaries: trajectory `i` belongs to batch
/// `i * batches / n`.
fn batch_ranges(n: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let b = batches.clamp(1, n);
    (0..b).map(|k| (k * n / b)..((k + 1) * n / b)).collect()
}

/// Mean ledger over `n_traj` trajectories on the current rayon pool.
///
/// Results depend only on `(model, config)`: each trajectory draws from its
/// own seeded stream and all sums run in trajectory-index order.
pub fn run_ensemble(model: &Cm2Model, cfg: &EnsembleConfig) -> Result<EnsembleRun> {
    if cfg.steps == 0 || cfg.n_traj == 0 {
        return Err(Error::InvalidArgument(
            "steps and trajectory count must be positive".into(),
        ));
    }
    let unc = unconditional_ledger(model, cfg.steps)?;
    let ledgers: Vec<(TrajectoryLedger, Vec<usize>)> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| {
            let rec = run_trajectory(model, cfg.steps, trajectory_seed(cfg.seed, i as u64))?;
            Ok((trajectory_ledger(&rec, &unc.s_u)?, rec.outcomes))
        })
        .collect::<Result<Vec<_>>>()?;

    let t_len = cfg.steps;
    let ranges = batch_ranges(cfg.n_traj, cfg.batches);
    let mut batches = BatchMeans::default();
    for r in &ranges {
        let k = r.len() as f64;
        let mean_of = |f: &dyn Fn(&TrajectoryLedger, usize) -> f64| -> Vec<f64> {
            (0..t_len)
                .map(|t| ledgers[r.clone()].iter().map(|(l, _)| f(l, t)).sum::<f64>() / k)
                .collect()
        };
        batches.s_c.push(mean_of(&|l, t| l.s_c[t + 1]));
        batches.gain.push(mean_of(&|l, t| l.gain[t]));
        batches.loss.push(mean_of(&|l, t| l.loss[t]));
        batches.d_info.push(mean_of(&|l, t| l.d_info[t]));
    }
    let weights: Vec<f64> = ranges.iter().map(|r| r.len() as f64 / cfg.n_traj as f64).collect();
    let combine = |rows: &Vec<Vec<f64>>, t: usize| -> f64 { rows.iter().zip(&weights).map(|(r, w)| r[t] * w).sum() };
    let se = |rows: &Vec<Vec<f64>>, t: usize| -> f64 {
        let xs: Vec<f64> = rows.iter().map(|r| r[t]).collect();
        thermo::standard_error(&xs)
    };

    let mut steps = Vec::with_capacity(t_len);
    let mut errors = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let u = &unc.steps[t];
        let s_c = combine(&batches.s_c, t);
        let d_info = combine(&batches.d_info, t);
        steps.push(StepLedger {
            t: t + 1,
            s_u: unc.s_u[t + 1],
            s_c,
            info: unc.s_u[t + 1] - s_c,
            d_info,
            gain: combine(&batches.gain, t),
            loss: combine(&batches.loss, t),
            d_sigma_u: u.d_sigma_u,
            d_sigma_c: if unc.condition.holds {
                u.d_sigma_u - d_info
            } else {
                f64::NAN
            },
            d_phi_u: u.d_phi_u,
            d_phi_u_per_unit: u.d_phi_u_per_unit.clone(),
            d_phi_c: unc.d_phi_c[t],
            bound_rhs: f64::NAN,
            mutual_info: u.mutual_info,
            anc_rel_entropy: u.anc_rel_entropy,
            bound_rhs_current: f64::NAN,
        });
        let se_sc = se(&batches.s_c, t);
        let se_di = se(&batches.d_info, t);
        errors.push(SeriesErrors {
            s_c: se_sc,
            info: se_sc,
            d_info: se_di,
            gain: se(&batches.gain, t),
            loss: se(&batches.loss, t),
            d_sigma_c: se_di,
        });
    }

    let nz = model.n_outcomes();
    let mut outcome_frequencies = vec![vec![0.0; nz]; t_len];
    for (_, outcomes) in &ledgers {
        for (t, &z) in outcomes.iter().enumerate() {
            outcome_frequencies[t][z] += 1.0;
        }
    }
    for row in &mut outcome_frequencies {
        for v in row.iter_mut() {
            *v /= cfg.n_traj as f64;
        }
    }

    Ok(EnsembleRun {
        series: ThermoSeries::new(steps, Some(cfg.n_traj), Some(errors), Some(batches)),
        unconditional: unc,
        outcome_frequencies,
    })
}

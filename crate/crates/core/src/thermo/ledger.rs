use serde::Serialize;

use super::{
    bound_rhs, check_measurement_condition, delta_phi_c, delta_sigma_u, gain_loss, BoundTerms, ConditionCheck,
    InfoRates,
};
use crate::dynamics::{enumerate_exact, run_unconditional, BranchEnsemble};
use crate::error::Result;
use crate::linalg;
use crate::model::Cm2Model;

/// Every ledger entry of collision `t` (rates refer to the step `t-1 -> t`).
///
/// Quantities that are not available in a given mode are `NaN`; divergent
/// ones are `+inf`.
#[derive(Debug, Clone, Serialize)]
pub struct StepLedger {
    pub t: usize,
    pub s_u: f64,
    pub s_c: f64,
    pub info: f64,
    pub d_info: f64,
    pub gain: f64,
    pub loss: f64,
    pub d_sigma_u: f64,
    pub d_sigma_c: f64,
    pub d_phi_u: f64,
    pub d_phi_u_per_unit: Vec<f64>,
    pub d_phi_c: f64,
    pub bound_rhs: f64,
    /// `I(X_t : Y_t')`, the finite part of `d_sigma_u`.
    pub mutual_info: f64,
    /// `D(Y_t' || Y_t)`, infinite when a pure unit is disturbed.
    pub anc_rel_entropy: f64,
    /// Bound evaluated with `I(Y' : zeta_t)` instead of `I(Y' : zeta_{t-1})`.
    pub bound_rhs_current: f64,
}

impl StepLedger {
    /// `d_sigma_c - d_sigma_u`, finite even when both diverge.
    pub fn conditioning_gap(&self) -> f64 {
        -self.d_info
    }

    /// `I(X_t : Y_t') - dI_t`: the conditional production without the
    /// deterministic ancilla term.
    pub fn d_sigma_c_regular(&self) -> f64 {
        self.mutual_info - self.d_info
    }
}

/// Standard errors of the sampled columns at one step.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SeriesErrors {
    pub s_c: f64,
    pub info: f64,
    pub d_info: f64,
    pub gain: f64,
    pub loss: f64,
    pub d_sigma_c: f64,
}

/// Per-batch means, `[batch][t - 1]`, kept so that window averages get
/// honest error bars.
#[derive(Debug, Clone, Default)]
pub struct BatchMeans {
    pub s_c: Vec<Vec<f64>>,
    pub gain: Vec<Vec<f64>>,
    pub loss: Vec<Vec<f64>>,
    pub d_info: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    SC,
    Info,
    DInfo,
    Gain,
    Loss,
    DSigmaU,
    DSigmaC,
    DSigmaCRegular,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermoSeries {
    /// Ledger for `t = 1..=T`.
    pub steps: Vec<StepLedger>,
    /// `Sigma^u_t`, cumulative sum of `d_sigma_u`.
    pub sigma_u_int: Vec<f64>,
    /// `Sigma^c_t`, cumulative sum of `d_sigma_c`.
    pub sigma_c_int: Vec<f64>,
    /// Number of trajectories; `None` for exact enumeration.
    pub samples: Option<usize>,
    pub errors: Option<Vec<SeriesErrors>>,
    #[serde(skip)]
    pub batches: Option<BatchMeans>,
}

fn cumulative(values: impl Iterator<Item = f64>) -> Vec<f64> {
    values
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

impl ThermoSeries {
    pub fn new(
        steps: Vec<StepLedger>,
        samples: Option<usize>,
        errors: Option<Vec<SeriesErrors>>,
        batches: Option<BatchMeans>,
    ) -> Self {
        let sigma_u_int = cumulative(steps.iter().map(|s| s.d_sigma_u));
        let sigma_c_int = cumulative(steps.iter().map(|s| s.d_sigma_c));
        Self {
            steps,
            sigma_u_int,
            sigma_c_int,
            samples,
            errors,
            batches,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn value(step: &StepLedger, col: Column) -> f64 {
        match col {
            Column::SC => step.s_c,
            Column::Info => step.info,
            Column::DInfo => step.d_info,
            Column::Gain => step.gain,
            Column::Loss => step.loss,
            Column::DSigmaU => step.d_sigma_u,
            Column::DSigmaC => step.d_sigma_c,
            Column::DSigmaCRegular => step.d_sigma_c_regular(),
        }
    }

    /// Mean of a column over `steps[start..]` and the standard error of that
    /// mean from the batch means (zero for deterministic columns).
    pub fn window_stats(&self, col: Column, start: usize) -> (f64, f64) {
        let window = &self.steps[start..];
        let n = window.len() as f64;
        let mean = window.iter().map(|s| Self::value(s, col)).sum::<f64>() / n;
        let Some(b) = &self.batches else {
            return (mean, 0.0);
        };
        let per_batch: Option<&Vec<Vec<f64>>> = match col {
            Column::SC | Column::Info => Some(&b.s_c),
            Column::DInfo | Column::DSigmaC | Column::DSigmaCRegular => Some(&b.d_info),
            Column::Gain => Some(&b.gain),
            Column::Loss => Some(&b.loss),
            Column::DSigmaU => None,
        };
        let Some(rows) = per_batch else {
            return (mean, 0.0);
        };
        let means: Vec<f64> = rows.iter().map(|r| r[start..].iter().sum::<f64>() / n).collect();
        (mean, standard_error(&means))
    }
}

/// Standard error of the mean of `xs` treated as independent samples.
pub fn standard_error(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Everything exact enumeration produces.
#[derive(Debug, Clone)]
pub struct ExactRun {
    pub ensembles: Vec<BranchEnsemble>,
    pub series: ThermoSeries,
    /// Index `t - 1`.
    pub rates: Vec<InfoRates>,
    /// Index `t - 1`.
    pub bounds: Vec<BoundTerms>,
    pub condition: ConditionCheck,
    /// `max |sum P rho_zeta - rho_t|` per `t = 0..=T`.
    pub marginalization: Vec<f64>,
    /// `|S_u - S_c - I|` per step, from the divergence form of the Holevo
    /// quantity.
    pub holevo_kl_residual: Vec<f64>,
    /// `|d_sigma_u - d_s - d_phi_u|` per step (0 when both sides diverge).
    pub split_residual: Vec<f64>,
}

/// Full ledger by exact enumeration of all outcome records.
pub fn exact_series(model: &Cm2Model, steps: usize, prune: f64) -> Result<ExactRun> {
    let ensembles = enumerate_exact(model, steps, prune)?;
    let run = run_unconditional(model, steps)?;
    let condition = check_measurement_condition(model);
    let marginalization = ensembles
        .iter()
        .zip(&run.states)
        .map(|(e, s)| linalg::max_abs_diff(&e.average_state(), s.matrix()))
        .collect();

    let mut ledger = Vec::with_capacity(steps);
    let mut rates = Vec::with_capacity(steps);
    let mut bounds = Vec::with_capacity(steps);
    let mut kl_res = Vec::with_capacity(steps);
    let mut split_res = Vec::with_capacity(steps);
    for t in 1..=steps {
        let prev = &ensembles[t - 1];
        let r = gain_loss(prev, model)?;
        let u = delta_sigma_u(run.states[t - 1].matrix(), model)?;
        let c = delta_phi_c(&u.rho_y_post, model)?;
        let b = bound_rhs(prev, model)?;
        let s_u = super::vn_entropy(run.states[t].matrix())?;
        let s_c: f64 = ensembles[t]
            .branches
            .iter()
            .map(|br| super::vn_entropy(br.state.matrix()).map(|s| br.prob * s))
            .sum::<Result<f64>>()?;
        let info = s_u - s_c;
        let states: Vec<&linalg::CMatrix> = ensembles[t].branches.iter().map(|br| br.state.matrix()).collect();
        kl_res.push((super::holevo_divergence(&ensembles[t].probs(), &states)? - info).abs());
        split_res.push(if u.d_sigma_u.is_infinite() && u.d_phi_u.is_infinite() {
            0.0
        } else {
            (u.d_sigma_u - u.d_s - u.d_phi_u).abs()
        });
        let d_sigma_c = if condition.holds {
            u.d_sigma_u - r.d_info
        } else {
            f64::NAN
        };
        ledger.push(StepLedger {
            t,
            s_u,
            s_c,
            info,
            d_info: r.d_info,
            gain: r.gain,
            loss: r.loss,
            d_sigma_u: u.d_sigma_u,
            d_sigma_c,
            d_phi_u: u.d_phi_u,
            d_phi_u_per_unit: u.d_phi_u_per_unit.clone(),
            d_phi_c: c.d_phi_c,
            bound_rhs: b.rhs,
            mutual_info: u.mutual_info,
            anc_rel_entropy: u.anc_rel_entropy,
            bound_rhs_current: b.anc_rel_entropy + b.anc_info_current,
        });
        rates.push(r);
        bounds.push(b);
    }
    Ok(ExactRun {
        ensembles,
        series: ThermoSeries::new(ledger, None, None, None),
        rates,
        bounds,
        condition,
        marginalization,
        holevo_kl_residual: kl_res,
        split_residual: split_res,
    })
}

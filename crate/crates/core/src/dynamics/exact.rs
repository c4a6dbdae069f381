use super::cond_apply;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Cm2Model;
use crate::state::DensityMatrix;

/// Branches at or below this probability are dropped (mass is reported).
pub const DEFAULT_PRUNE: f64 = 1e-14;
/// Upper bound on `|Z|^T * d_X^2` complex entries held by one enumeration.
pub const ENTRY_BUDGET: u128 = 1 << 24;

#[derive(Debug, Clone)]
pub struct Branch {
    /// Outcome indices `z_1 .. z_t`.
    pub zeta: Vec<usize>,
    pub prob: f64,
    /// Normalized conditional state.
    pub state: DensityMatrix,
}

/// All outcome records of length `t` with their probabilities and
/// conditional states.
#[derive(Debug, Clone)]
pub struct BranchEnsemble {
    pub t: usize,
    pub branches: Vec<Branch>,
    /// Total probability of pruned records up to this time.
    pub discarded_mass: f64,
}

impl BranchEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.prob).sum()
    }

    /// `sum_zeta P(zeta) rho_zeta`.
    pub fn average_state(&self) -> linalg::CMatrix {
        let d = self.branches[0].state.dim();
        self.branches.iter().fold(linalg::CMatrix::zeros(d, d), |acc, b| {
            acc + b.state.matrix().scale(b.prob)
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.prob).collect()
    }
}

/// Exact conditional ensembles for `t = 0..=steps`.
pub fn enumerate_exact(model: &Cm2Model, steps: usize, prune: f64) -> Result<Vec<BranchEnsemble>> {
    let d = model.system_dim();
    let n_z = model.n_outcomes() as u128;
    let branches = n_z.checked_pow(steps as u32).unwrap_or(u128::MAX);
    if branches.saturating_mul((d * d) as u128) > ENTRY_BUDGET {
        return Err(Error::BudgetExceeded {
            branches,
            per_branch: d * d,
            budget: ENTRY_BUDGET,
        });
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(BranchEnsemble {
        t: 0,
        branches: vec![Branch {
            zeta: Vec::new(),
            prob: 1.0,
            state: model.rho_x0.clone(),
        }],
        discarded_mass: 0.0,
    });
    for t in 1..=steps {
        let prev = out.last().expect("non-empty");
        let mut next = Vec::with_capacity(prev.branches.len() * model.n_outcomes());
        let mut discarded = prev.discarded_mass;
        for b in &prev.branches {
            for z in 0..model.n_outcomes() {
                let image = cond_apply(b.state.matrix(), z, model)?;
                let w = image.trace().re;
                let prob = b.prob * w;
                if prob <= prune || w <= 0.0 {
                    discarded += prob.max(0.0);
                    continue;
                }
                let mut zeta = b.zeta.clone();
                zeta.push(z);
                next.push(Branch {
                    zeta,
                    prob,
                    state: DensityMatrix::new_unchecked(linalg::hermitize(&image.unscale(w))),
                });
            }
        }
        if next.is_empty() {
            return Err(Error::DegenerateDistribution { threshold: prune });
        }
        out.push(BranchEnsemble {
            t,
            branches: next,
            discarded_mass: discarded,
        });
    }
    Ok(out)
}

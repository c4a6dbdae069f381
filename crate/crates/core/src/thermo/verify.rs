use serde::Serialize;

use super::ExactRun;

/// One evaluated relation. `slack` is `lhs - rhs` for inequalities and
/// `-|lhs - rhs|` for equalities, so a relation holds iff
/// `slack >= -tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub t: usize,
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Both sides diverge; the relation is not evaluated.
    pub divergent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifierReport {
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Relations evaluated and reported without affecting `passed`.
    pub informational: Vec<Check>,
}

impl VerifierReport {
    /// Smallest slack per relation name, in first-seen order.
    pub fn worst(&self) -> Vec<&Check> {
        let mut out: Vec<&Check> = Vec::new();
        for c in &self.checks {
            if c.divergent {
                continue;
            }
            match out.iter_mut().find(|w| w.name == c.name) {
                Some(w) if c.slack < w.slack => *w = c,
                Some(_) => {}
                None => out.push(c),
            }
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Collector(Vec<Check>);

impl Collector {
    fn at_least(&mut self, name: &'static str, t: usize, lhs: f64, rhs: f64, tol: f64) {
        if lhs.is_infinite() && lhs > 0.0 || rhs.is_infinite() && rhs < 0.0 {
            // +inf >= anything, anything >= -inf
            let divergent = lhs.is_infinite() && rhs.is_infinite();
            let passed = !(lhs.is_infinite() && rhs.is_infinite() && lhs < rhs);
            self.0.push(Check {
                name,
                t,
                slack: f64::INFINITY,
                tolerance: tol,
                passed,
                divergent,
            });
            return;
        }
        let slack = lhs - rhs;
        self.0.push(Check {
            name,
            t,
            slack,
            tolerance: tol,
            passed: slack >= -tol,
            divergent: false,
        });
    }

    fn equal(&mut self, name: &'static str, t: usize, lhs: f64, rhs: f64, tol: f64) {
        if lhs.is_infinite() && rhs.is_infinite() && lhs.signum() == rhs.signum() {
            self.0.push(Check {
                name,
                t,
                slack: 0.0,
                tolerance: tol,
                passed: true,
                divergent: true,
            });
            return;
        }
        let slack = -(lhs - rhs).abs();
        self.0.push(Check {
            name,
            t,
            slack,
            tolerance: tol,
            passed: slack >= -tol,
            divergent: false,
        });
    }
}

/// Evaluates every identity and inequality of the information ledger on an
/// exact run.
pub fn verify_exact(run: &ExactRun) -> VerifierReport {
    let mut c = Collector(Vec::new());
    let mut info = Collector(Vec::new());
    let s = &run.series;
    let mut gain_sum = 0.0;
    for (t, m) in run.marginalization.iter().enumerate() {
        c.equal("marginalization", t, *m, 0.0, 1e-10);
    }
    c.at_least(
        "measurement_condition",
        0,
        super::CONDITION_TOL,
        run.condition.residual,
        0.0,
    );
    for (k, step) in s.steps.iter().enumerate() {
        let t = step.t;
        let bounds = &run.bounds[k];
        gain_sum += step.gain;
        c.at_least("holevo_nonnegative", t, step.info, 0.0, 1e-10);
        c.equal("holevo_divergence_form", t, run.holevo_kl_residual[k], 0.0, 1e-10);
        c.at_least("gain_nonnegative", t, step.gain, 0.0, 1e-10);
        c.at_least("loss_nonnegative", t, step.loss, 0.0, 1e-10);
        c.equal("information_rate_split", t, step.d_info, step.gain - step.loss, 1e-10);
        c.at_least("unconditional_second_law", t, step.d_sigma_u, 0.0, 1e-10);
        c.equal("entropy_balance", t, run.split_residual[k], 0.0, 1e-10);
        if step.d_phi_u_per_unit.iter().all(|f| f.is_finite()) && step.d_phi_u.is_finite() {
            let sum: f64 = step.d_phi_u_per_unit.iter().sum();
            c.equal("flux_additivity", t, sum, step.d_phi_u, 1e-10);
        }
        if run.condition.holds {
            c.equal("conditional_flux", t, step.d_phi_c, step.d_phi_u, 1e-10);
            let diff = s.sigma_u_int[k] - s.sigma_c_int[k];
            // Sigma^u - Sigma^c telescopes to I_t; use the finite sum of -dI
            // when the productions themselves diverge
            let gap: f64 = if diff.is_finite() {
                diff
            } else {
                s.steps[..=k].iter().map(|x| x.d_info).sum()
            };
            c.equal("integrated_information", t, gap, step.info, 1e-10);
            // I_t = sum (G - L) with L >= 0, so the reduction never exceeds the
            // accumulated gain; the reverse ordering is only reported
            c.at_least("integrated_gain_ceiling", t, gain_sum, gap, 1e-9);
            info.at_least("integrated_gain_floor", t, gap, gain_sum, 1e-9);
            c.at_least("conditional_second_law", t, step.d_sigma_c, step.bound_rhs, 1e-9);
        }
        c.at_least("conditional_bound_nonnegative", t, step.bound_rhs, 0.0, 1e-9);
        for (chi, mi) in bounds.branch_holevo.iter().zip(&bounds.branch_mutual) {
            c.at_least("collision_holevo_bound", t, *mi, *chi, 1e-10);
        }
        c.at_least("gain_holevo_bound", t, bounds.conditional_mutual, step.gain, 1e-10);
    }
    let passed = c.0.iter().all(|x| x.passed);
    VerifierReport {
        passed,
        checks: c.0,
        informational: info.0,
    }
}

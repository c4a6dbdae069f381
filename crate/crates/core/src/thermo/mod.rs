//! Information-theoretic and thermodynamic functionals.
//!
//! Everything is in nats. Relative entropies and fluxes that diverge
//! because of a support mismatch are returned as `f64::INFINITY`, never as
//! large finite numbers.

mod iss;
mod ledger;
mod verify;

use serde::Serialize;

pub use iss::{iss_detect, IssReport, IssThresholds, Verdict};
pub use ledger::{exact_series, standard_error, BatchMeans, Column, ExactRun, SeriesErrors, StepLedger, ThermoSeries};
pub use verify::{verify_exact, Check, VerifierReport};

use crate::dynamics::{self, BranchEnsemble};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, LOG_FLOOR};
use crate::model::Cm2Model;

/// Weight a state may put outside the support of the reference before a
/// relative entropy or flux is declared infinite.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Residual below which the measurement condition counts as satisfied.
pub const CONDITION_TOL: f64 = 1e-10;

/// Eigenvalues of a Hermitian PSD operator (closed form for qubits).
fn psd_eigenvalues(rho: &CMatrix) -> Result<Vec<f64>> {
    if rho.nrows() == 2 && rho.ncols() == 2 {
        let herm = linalg::hermiticity_residual(rho);
        if herm > linalg::HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (residual {herm:e})"
            )));
        }
        let (a, d) = (rho[(0, 0)].re, rho[(1, 1)].re);
        let b = 0.5 * (rho[(0, 1)] + rho[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let mut out = vec![mean - radius, mean + radius];
        for l in out.iter_mut() {
            if *l < linalg::NEG_EIG_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
            }
            *l = l.max(0.0);
        }
        return Ok(out);
    }
    Ok(linalg::psd_spectrum(rho)?.eigenvalues)
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
}

/// `S(rho) = -tr rho ln rho` with `0 ln 0 = 0`.
pub fn vn_entropy(rho: &CMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&psd_eigenvalues(rho)?))
}

/// `D(rho || sigma) = tr rho (ln rho - ln sigma)`; infinite when `rho` has
/// weight outside the support of `sigma`.
pub fn rel_entropy(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let r = linalg::psd_spectrum(rho)?;
    let s = linalg::psd_spectrum(sigma)?;
    let self_term: f64 = -entropy_of_spectrum(&r.eigenvalues);
    let mut cross = 0.0;
    for (j, &mu) in s.eigenvalues.iter().enumerate() {
        let sj = s.eigenvectors.column(j);
        // <s_j| rho |s_j>
        let weight = (sj.adjoint() * rho * sj)[(0, 0)].re;
        if mu <= LOG_FLOOR {
            if weight > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * mu.ln();
    }
    Ok(self_term - cross)
}

/// Quantum mutual information of a bipartite state on `dims = [d_A, d_B]`.
pub fn mutual_information(joint: &CMatrix, dims: [usize; 2]) -> Result<f64> {
    let a = linalg::partial_trace(joint, &dims, &[0])?;
    let b = linalg::partial_trace(joint, &dims, &[1])?;
    Ok(vn_entropy(&a)? + vn_entropy(&b)? - vn_entropy(joint)?)
}

/// Holevo quantity `S(sum p rho) - sum p S(rho)` of a weighted ensemble.
pub fn holevo(probs: &[f64], states: &[&CMatrix]) -> Result<f64> {
    let avg = weighted_average(probs, states);
    let mut mean_entropy = 0.0;
    for (p, s) in probs.iter().zip(states) {
        mean_entropy += p * vn_entropy(s)?;
    }
    Ok(vn_entropy(&avg)? - mean_entropy)
}

/// Holevo quantity as `sum p D(rho || avg)`.
pub fn holevo_divergence(probs: &[f64], states: &[&CMatrix]) -> Result<f64> {
    let avg = weighted_average(probs, states);
    let mut out = 0.0;
    for (p, s) in probs.iter().zip(states) {
        out += p * rel_entropy(s, &avg)?;
    }
    Ok(out)
}

fn weighted_average(probs: &[f64], states: &[&CMatrix]) -> CMatrix {
    let d = states[0].nrows();
    probs
        .iter()
        .zip(states)
        .fold(CMatrix::zeros(d, d), |acc, (p, s)| acc + s.scale(*p))
}

/// Holevo information `I(X_t : zeta_t)` of a branch ensemble.
pub fn holevo_ensemble(ens: &BranchEnsemble) -> Result<f64> {
    let probs = ens.probs();
    let states: Vec<&CMatrix> = ens.branches.iter().map(|b| b.state.matrix()).collect();
    holevo(&probs, &states)
}

/// `tr {(rho_Y - rho_post) ln rho_Y}`; infinite when `rho_post` populates
/// the kernel of `rho_Y`.
pub fn flux(rho_y: &CMatrix, rho_post: &CMatrix) -> Result<f64> {
    let s = linalg::psd_spectrum(rho_y)?;
    let mut out = 0.0;
    for (j, &mu) in s.eigenvalues.iter().enumerate() {
        let sj = s.eigenvectors.column(j);
        let post = (sj.adjoint() * rho_post * sj)[(0, 0)].re;
        if mu <= LOG_FLOOR {
            if post > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        out += (mu - post) * mu.ln();
    }
    Ok(out)
}

/// Gain, loss and information rate of one collision.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InfoRates {
    pub gain: f64,
    pub loss: f64,
    pub d_info: f64,
    /// `I(X_{t-1} : zeta_{t-1})`.
    pub info_prev: f64,
    /// `I(X_t : zeta_t)`.
    pub info_next: f64,
    /// `S(X_t | zeta_{t-1})`.
    pub s_intermediate: f64,
    /// `S(X_t | zeta_t)`.
    pub s_c: f64,
}

/// Gain from the entropy route, loss from the relative-entropy route, and
/// the information rate from the two Holevo quantities.
pub fn gain_loss(prev: &BranchEnsemble, model: &Cm2Model) -> Result<InfoRates> {
    let rho_prev = prev.average_state();
    let rho_next = dynamics::channel_apply(&rho_prev, model);
    let mut s_prev_c = 0.0;
    let mut s_intermediate = 0.0;
    let mut s_c = 0.0;
    let mut loss = 0.0;
    for b in &prev.branches {
        let inter = linalg::hermitize(&dynamics::channel_apply(b.state.matrix(), model));
        s_prev_c += b.prob * vn_entropy(b.state.matrix())?;
        s_intermediate += b.prob * vn_entropy(&inter)?;
        loss += b.prob * (rel_entropy(b.state.matrix(), &rho_prev)? - rel_entropy(&inter, &rho_next)?);
        for z in 0..model.n_outcomes() {
            let image = dynamics::cond_apply(b.state.matrix(), z, model)?;
            let w = image.trace().re;
            if b.prob * w <= dynamics::DEFAULT_PRUNE || w <= 0.0 {
                continue;
            }
            s_c += b.prob * w * vn_entropy(&linalg::hermitize(&image.unscale(w)))?;
        }
    }
    let info_prev = vn_entropy(&rho_prev)? - s_prev_c;
    let info_next = vn_entropy(&linalg::hermitize(&rho_next))? - s_c;
    Ok(InfoRates {
        gain: s_intermediate - s_c,
        loss,
        d_info: info_next - info_prev,
        info_prev,
        info_next,
        s_intermediate,
        s_c,
    })
}

/// Unconditional second-law terms of one collision.
#[derive(Debug, Clone, Serialize)]
pub struct UncondThermo {
    /// `I(X_t : Y_t')`.
    pub mutual_info: f64,
    /// `D(Y_t' || Y_t)`.
    pub anc_rel_entropy: f64,
    pub d_sigma_u: f64,
    pub d_phi_u: f64,
    pub d_phi_u_per_unit: Vec<f64>,
    /// `S(X_t) - S(X_{t-1})`.
    pub d_s: f64,
    #[serde(skip)]
    pub rho_y_post: CMatrix,
    #[serde(skip)]
    pub rho_x_next: CMatrix,
}

pub fn delta_sigma_u(rho_prev: &CMatrix, model: &Cm2Model) -> Result<UncondThermo> {
    let joint = linalg::hermitize(&dynamics::joint_collide_raw(rho_prev, model)?);
    let rho_x_next = linalg::hermitize(&dynamics::system_marginal(&joint, model));
    let rho_y_post = linalg::hermitize(&dynamics::ancilla_marginal(&joint, model));
    let mutual_info = mutual_information(&joint, [model.system_dim(), model.ancilla_dim()])?;
    let anc_rel_entropy = rel_entropy(&rho_y_post, model.rho_y())?;
    let d_phi_u = flux(model.rho_y(), &rho_y_post)?;
    let d_phi_u_per_unit = dynamics::unit_marginals(&joint, model)
        .iter()
        .zip(&model.ancilla.units)
        .map(|(post, unit)| flux(unit.matrix(), &linalg::hermitize(post)))
        .collect::<Result<Vec<_>>>()?;
    let d_s = vn_entropy(&rho_x_next)? - vn_entropy(rho_prev)?;
    Ok(UncondThermo {
        mutual_info,
        anc_rel_entropy,
        d_sigma_u: mutual_info + anc_rel_entropy,
        d_phi_u,
        d_phi_u_per_unit,
        d_s,
        rho_y_post,
        rho_x_next,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CondFlux {
    pub d_phi_c: f64,
    pub condition_holds: bool,
}

/// Conditional flux `tr {(rho_Y - sum_z M_z rho' M_z^dagger) ln rho_Y}`.
pub fn delta_phi_c(rho_y_post: &CMatrix, model: &Cm2Model) -> Result<CondFlux> {
    let dephased = linalg::hermitize(&model.measurement.dephase(rho_y_post));
    let d_phi_c = flux(model.rho_y(), &dephased)?;
    let residual = condition_residual(model, rho_y_post)?;
    Ok(CondFlux {
        d_phi_c,
        condition_holds: residual < CONDITION_TOL,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub residual: f64,
}

/// Population change of a post-collision ancilla operator in the eigenbasis
/// of `rho_Y` caused by the measurement: the finite log-weighted part plus
/// the weight moved into or out of the kernel of `rho_Y`.
fn condition_residual(model: &Cm2Model, post: &CMatrix) -> Result<f64> {
    let s = linalg::psd_spectrum(model.rho_y())?;
    let diff = model.measurement.dephase(post) - post;
    let mut finite = linalg::ZERO;
    let mut kernel = linalg::ZERO;
    for (j, &mu) in s.eigenvalues.iter().enumerate() {
        let sj = s.eigenvectors.column(j);
        let w = (sj.adjoint() * &diff * sj)[(0, 0)];
        if mu <= LOG_FLOOR {
            kernel += w;
        } else {
            finite += w * mu.ln();
        }
    }
    Ok(finite.norm().max(kernel.norm()))
}

/// Whether the measurement leaves the populations of the post-collision
/// ancilla in the eigenbasis of `rho_Y` unchanged, for every system input.
/// By linearity it suffices to test the matrix units `|r><k|`.
pub fn check_measurement_condition(model: &Cm2Model) -> ConditionCheck {
    let d = model.system_dim();
    let mut residual: f64 = 0.0;
    for r in 0..d {
        for k in 0..d {
            let mut unit = CMatrix::zeros(d, d);
            unit[(r, k)] = linalg::ONE;
            let res = dynamics::joint_collide_raw(&unit, model)
                .map(|j| dynamics::ancilla_marginal(&j, model))
                .and_then(|post| condition_residual(model, &post));
            residual = residual.max(res.unwrap_or(f64::INFINITY));
        }
    }
    ConditionCheck {
        holds: residual < CONDITION_TOL,
        residual,
    }
}

/// `dSigma_c = dSigma_u - dI`; refused when the measurement condition fails.
pub fn delta_sigma_c(d_sigma_u: f64, d_info: f64, condition: &ConditionCheck) -> Result<f64> {
    if !condition.holds {
        return Err(Error::MeasurementCondition {
            residual: condition.residual,
        });
    }
    Ok(d_sigma_u - d_info)
}

/// Terms of the lower bound on the conditional entropy production and of
/// the per-collision Holevo bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundTerms {
    /// `D(Y_t' || Y_t)`.
    pub anc_rel_entropy: f64,
    /// `I(Y_t' : zeta_{t-1})`, Holevo of the ancilla posteriors.
    pub anc_info_prev: f64,
    /// Holevo of the measured ancilla over `zeta_t`.
    pub anc_info_current: f64,
    /// `D(Y'||Y) + I(Y' : zeta_{t-1})`.
    pub rhs: f64,
    /// Per branch of `zeta_{t-1}`: Holevo of the system over `z_t`.
    pub branch_holevo: Vec<f64>,
    /// Per branch of `zeta_{t-1}`: `I(X_t : Y_t')`.
    pub branch_mutual: Vec<f64>,
    /// `sum P(zeta_{t-1}) I(X_t : Y_t' | zeta_{t-1})`.
    pub conditional_mutual: f64,
}

pub fn bound_rhs(prev: &BranchEnsemble, model: &Cm2Model) -> Result<BoundTerms> {
    let dims = [model.system_dim(), model.ancilla_dim()];
    let mut posteriors = Vec::with_capacity(prev.branches.len());
    let mut measured_probs = Vec::new();
    let mut measured_states = Vec::new();
    let mut branch_holevo = Vec::with_capacity(prev.branches.len());
    let mut branch_mutual = Vec::with_capacity(prev.branches.len());
    for b in &prev.branches {
        let joint = linalg::hermitize(&dynamics::joint_collide_raw(b.state.matrix(), model)?);
        let y_post = linalg::hermitize(&dynamics::ancilla_marginal(&joint, model));
        branch_mutual.push(mutual_information(&joint, dims)?);

        let mut probs = Vec::new();
        let mut states = Vec::new();
        for z in 0..model.n_outcomes() {
            let image = dynamics::cond_apply(b.state.matrix(), z, model)?;
            let w = image.trace().re;
            if w > dynamics::DEFAULT_PRUNE {
                probs.push(w);
                states.push(linalg::hermitize(&image.unscale(w)));
            }
            let m = &model.measurement.operators[z];
            let ym = linalg::conjugate(m, &y_post);
            let wy = ym.trace().re;
            if b.prob * wy > dynamics::DEFAULT_PRUNE {
                measured_probs.push(b.prob * wy);
                measured_states.push(linalg::hermitize(&ym.unscale(wy)));
            }
        }
        let refs: Vec<&CMatrix> = states.iter().collect();
        branch_holevo.push(holevo(&probs, &refs)?);
        posteriors.push(y_post);
    }
    let probs = prev.probs();
    let refs: Vec<&CMatrix> = posteriors.iter().collect();
    let anc_info_prev = holevo(&probs, &refs)?;
    let y_avg = weighted_average(&probs, &refs);
    let anc_rel_entropy = rel_entropy(&y_avg, model.rho_y())?;
    let mrefs: Vec<&CMatrix> = measured_states.iter().collect();
    let anc_info_current = holevo(&measured_probs, &mrefs)?;
    let conditional_mutual = probs.iter().zip(&branch_mutual).map(|(p, m)| p * m).sum();
    Ok(BoundTerms {
        anc_rel_entropy,
        anc_info_prev,
        anc_info_current,
        rhs: anc_rel_entropy + anc_info_prev,
        branch_holevo,
        branch_mutual,
        conditional_mutual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{enumerate_exact, DEFAULT_PRUNE};
    use crate::linalg::{diag, real_matrix};
    use crate::model::MeasurementSet;
    use crate::presets::{self, thermal_qubit, xplus};
    use crate::random::{random_model, random_state};
    use crate::state::DensityMatrix;

    fn binary_entropy(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn entropy_examples() {
        assert!((vn_entropy(&diag(&[0.5, 0.5])).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!(vn_entropy(&xplus()).unwrap().abs() < 1e-14);
        let s = vn_entropy(&diag(&[0.3, 0.7])).unwrap();
        assert!((s - binary_entropy(0.3)).abs() < 1e-14);
        assert!((s - 0.610864).abs() < 5e-7);
        let big = random_state(6, 1);
        let s = vn_entropy(&big).unwrap();
        assert!(s >= 0.0 && s <= 6f64.ln());
    }

    #[test]
    fn qubit_fast_path_agrees_with_general_route() {
        for seed in 0..20 {
            let rho = random_state(2, seed);
            let fast = vn_entropy(&rho).unwrap();
            let general = entropy_of_spectrum(&linalg::psd_spectrum(&rho).unwrap().eigenvalues);
            assert!((fast - general).abs() < 1e-13);
        }
    }

    #[test]
    fn log_on_support_gives_minus_entropy() {
        for (d, seed) in [(2, 3), (4, 4), (8, 5)] {
            let rho = random_state(d, seed);
            let l = linalg::log_on_support(&rho, LOG_FLOOR).unwrap();
            let tr = (&l * rho.matrix()).trace().re;
            assert!((tr + vn_entropy(&rho).unwrap()).abs() < 1e-10);
        }
        let pure = xplus();
        let l = linalg::log_on_support(&pure, LOG_FLOOR).unwrap();
        assert!((&l * pure.matrix()).trace().norm() < 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = random_state(3, 9);
        assert!(rel_entropy(&rho, &rho).unwrap().abs() < 1e-12);
        let ground = diag(&[1.0, 0.0]);
        let mixed = diag(&[0.5, 0.5]);
        assert!((rel_entropy(&ground, &mixed).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert_eq!(rel_entropy(&mixed, &ground).unwrap(), f64::INFINITY);
    }

    #[test]
    fn holevo_examples() {
        let r = random_state(2, 4);
        assert!(holevo(&[0.3, 0.7], &[&r, &r]).unwrap().abs() < 1e-12);
        let (a, b) = (diag(&[1.0, 0.0]), diag(&[0.0, 1.0]));
        assert!((holevo(&[0.5, 0.5], &[&a, &b]).unwrap() - 2f64.ln()).abs() < 1e-14);
        // full swap: post-collision state is a product, outcomes carry nothing about X
        let m = presets::single_qubit_model(0.3, std::f64::consts::FRAC_PI_2).unwrap();
        let ens = enumerate_exact(&m, 1, DEFAULT_PRUNE).unwrap();
        assert!(holevo_ensemble(&ens[1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn holevo_routes_agree_on_random_ensembles() {
        for seed in 0..10 {
            let m = random_model(seed, 2);
            let ens = enumerate_exact(&m, 3, DEFAULT_PRUNE).unwrap();
            let e = &ens[3];
            let states: Vec<&CMatrix> = e.branches.iter().map(|b| b.state.matrix()).collect();
            let a = holevo(&e.probs(), &states).unwrap();
            let b = holevo_divergence(&e.probs(), &states).unwrap();
            assert!(a >= -1e-10);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn equilibrium_has_no_information_flow() {
        let m = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_initial_state(thermal_qubit(0.3).unwrap())
            .unwrap();
        let ens = enumerate_exact(&m, 4, DEFAULT_PRUNE).unwrap();
        for e in &ens[..4] {
            let r = gain_loss(e, &m).unwrap();
            assert!(r.gain.abs() < 1e-12 && r.loss.abs() < 1e-12 && r.d_info.abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_measurement_gains_nothing() {
        let m = presets::two_qubit_model(0.3, 0.3, 0.1)
            .unwrap()
            .with_measurement(MeasurementSet::trivial(4))
            .unwrap();
        let ens = enumerate_exact(&m, 3, DEFAULT_PRUNE).unwrap();
        for e in &ens[..3] {
            assert!(gain_loss(e, &m).unwrap().gain.abs() < 1e-12);
        }
    }

    // Oracle: two outcomes, first step from |x+>. Brute-force the
    // conditional states from the explicit joint state.
    #[test]
    fn first_step_gain_matches_brute_force() {
        let m = presets::single_qubit_model(0.3, 0.3).unwrap();
        let joint = dynamics::joint_collide_raw(xplus().matrix(), &m).unwrap();
        let mut s_c = 0.0;
        for z in 0..2 {
            let mz = linalg::tensor(&linalg::identity(2), &linalg::basis_projector(2, z));
            let cond = dynamics::system_marginal(&linalg::conjugate(&mz, &joint), &m);
            let p = cond.trace().re;
            s_c += p * vn_entropy(&cond.unscale(p)).unwrap();
        }
        let s_x1 = vn_entropy(&dynamics::system_marginal(&joint, &m)).unwrap();
        let expected_gain = s_x1 - s_c;
        let ens = enumerate_exact(&m, 1, DEFAULT_PRUNE).unwrap();
        let r = gain_loss(&ens[0], &m).unwrap();
        assert!((r.gain - expected_gain).abs() < 1e-12);
        // pure start: no prior information to lose, information equals gain
        assert!(r.loss.abs() < 1e-12);
        assert!((r.d_info - expected_gain).abs() < 1e-12);
        assert!(r.gain > 0.0);
    }

    #[test]
    fn identity_collision_produces_no_entropy() {
        let m = presets::single_qubit_model(0.3, 0.0).unwrap();
        let u = delta_sigma_u(xplus().matrix(), &m).unwrap();
        assert!(u.d_sigma_u.abs() < 1e-12 && u.d_phi_u.abs() < 1e-12);
        let m = presets::single_qubit_model(0.3, std::f64::consts::FRAC_PI_2).unwrap();
        let u = delta_sigma_u(m.rho_y(), &m).unwrap();
        assert!(u.d_sigma_u.abs() < 1e-12 && u.d_phi_u.abs() < 1e-12);
    }

    #[test]
    fn second_law_split_is_consistent() {
        for seed in 0..10 {
            let m = random_model(seed, 2);
            let u = delta_sigma_u(m.rho_x0.matrix(), &m).unwrap();
            assert!(u.d_sigma_u >= -1e-10);
            assert!((u.d_sigma_u - (u.d_s + u.d_phi_u)).abs() < 1e-10);
            let sum: f64 = u.d_phi_u_per_unit.iter().sum();
            assert!((sum - u.d_phi_u).abs() < 1e-10);
        }
    }

    // Oracle: for rho_Y = exp(-beta H)/Z with H = sigma_z = |1><1| - |0><0|,
    // f/(1-f) = exp(2 beta), and the flux equals beta times the energy the
    // ancilla gains.
    #[test]
    fn thermal_flux_is_beta_times_heat() {
        let f: f64 = 0.3;
        let beta = 0.5 * (f / (1.0 - f)).ln();
        let m = presets::single_qubit_model(f, 0.3).unwrap();
        let h = real_matrix(2, &[-1.0, 0.0, 0.0, 1.0]);
        let mut rho = xplus().into_matrix();
        for _ in 0..5 {
            let u = delta_sigma_u(&rho, &m).unwrap();
            let heat = (&h * (&u.rho_y_post - m.rho_y().matrix())).trace().re;
            assert!(
                (u.d_phi_u - beta * heat).abs() < 1e-12,
                "{} vs {}",
                u.d_phi_u,
                beta * heat
            );
            rho = u.rho_x_next;
        }
    }

    #[test]
    fn pure_unit_makes_flux_diverge() {
        let m = presets::two_qubit_model(0.3, 0.3, 0.1).unwrap();
        let excited = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let u = delta_sigma_u(excited.matrix(), &m).unwrap();
        assert!(u.d_phi_u_per_unit[0].is_finite());
        assert_eq!(u.d_phi_u_per_unit[1], f64::INFINITY);
        assert_eq!(u.d_phi_u, f64::INFINITY);
        assert_eq!(u.anc_rel_entropy, f64::INFINITY);
        assert!(u.mutual_info.is_finite());
        // without coupling to the pure unit nothing leaves its support
        let m = presets::two_qubit_model(0.3, 0.3, 0.0).unwrap();
        let u = delta_sigma_u(excited.matrix(), &m).unwrap();
        assert!(u.d_phi_u.is_finite() && u.anc_rel_entropy.is_finite());
    }

    #[test]
    fn computational_measurement_keeps_fluxes_equal() {
        let m = presets::single_qubit_model(0.3, 0.3).unwrap();
        let u = delta_sigma_u(xplus().matrix(), &m).unwrap();
        let c = delta_phi_c(&u.rho_y_post, &m).unwrap();
        assert!(c.condition_holds);
        assert!((c.d_phi_c - u.d_phi_u).abs() < 1e-12);
        assert!(check_measurement_condition(&m).holds);
    }

    #[test]
    fn trivial_measurement_keeps_fluxes_equal() {
        let m = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_measurement(MeasurementSet::trivial(2))
            .unwrap();
        let u = delta_sigma_u(xplus().matrix(), &m).unwrap();
        let c = delta_phi_c(&u.rho_y_post, &m).unwrap();
        assert!(c.condition_holds && (c.d_phi_c - u.d_phi_u).abs() < 1e-14);
    }

    // Oracle: an x-basis projective measurement sends the computational
    // populations of Y' to (1/2, 1/2); evaluate both traces directly.
    #[test]
    fn sigma_x_measurement_breaks_the_condition() {
        let s = 0.5;
        let plus = real_matrix(2, &[s, s, s, s]);
        let minus = real_matrix(2, &[s, -s, -s, s]);
        let meas = MeasurementSet::with_index_labels(vec![plus, minus]).unwrap();
        let m = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_measurement(meas)
            .unwrap();
        let excited = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let u = delta_sigma_u(excited.matrix(), &m).unwrap();
        let c = delta_phi_c(&u.rho_y_post, &m).unwrap();
        let ln_y = diag(&[0.3f64.ln(), 0.7f64.ln()]);
        let y = m.rho_y().matrix();
        let phi_u = ((y - &u.rho_y_post) * &ln_y).trace().re;
        let phi_c = ((y - diag(&[0.5, 0.5])) * &ln_y).trace().re;
        assert!((u.d_phi_u - phi_u).abs() < 1e-12);
        assert!((c.d_phi_c - phi_c).abs() < 1e-12);
        assert!((c.d_phi_c - u.d_phi_u).abs() > 1e-3);
        assert!(!c.condition_holds);
        let check = check_measurement_condition(&m);
        assert!(!check.holds && check.residual > 1e-3);
        assert!(matches!(
            delta_sigma_c(0.1, 0.0, &check),
            Err(Error::MeasurementCondition { .. })
        ));
    }

    #[test]
    fn two_qubit_condition_holds_despite_pure_unit() {
        let m = presets::two_qubit_model(0.3, 0.3, 0.1).unwrap();
        let check = check_measurement_condition(&m);
        assert!(check.holds, "residual {}", check.residual);
    }

    #[test]
    fn conditional_production_equals_unconditional_without_information() {
        let check = ConditionCheck {
            holds: true,
            residual: 0.0,
        };
        assert_eq!(delta_sigma_c(0.25, 0.0, &check).unwrap(), 0.25);
    }

    #[test]
    fn bound_with_trivial_measurement_is_ancilla_disturbance() {
        let m = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_measurement(MeasurementSet::trivial(2))
            .unwrap();
        let ens = enumerate_exact(&m, 3, DEFAULT_PRUNE).unwrap();
        for e in &ens[..3] {
            let b = bound_rhs(e, &m).unwrap();
            // one branch: the posterior ensemble has a single member
            assert!(b.anc_info_prev.abs() < 1e-12);
            assert!((b.rhs - b.anc_rel_entropy).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_vanishes_at_equilibrium() {
        let m = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_initial_state(thermal_qubit(0.3).unwrap())
            .unwrap();
        let ens = enumerate_exact(&m, 2, DEFAULT_PRUNE).unwrap();
        let b = bound_rhs(&ens[1], &m).unwrap();
        assert!(b.rhs.abs() < 1e-12);
    }
}

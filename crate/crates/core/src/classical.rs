//! Classical limit of incoherent models: transition matrices and the
//! hidden-Markov forward recursion.
//!
//! When the collision maps computational basis states to computational
//! basis states (up to phases and branching over the ancilla) and the
//! measurement is diagonal, the outcome statistics are those of a hidden
//! Markov chain with transition matrix `W(x' z | x)`. All bases here are the
//! computational ones.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::dynamics::{enumerate_exact, rng_for};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{Cm2Model, MeasurementSet};

/// Tolerance for a normalized amplitude vector to count as a basis state.
pub const BASIS_OVERLAP_TOL: f64 = 1e-10;
/// Off-diagonal magnitude above which an operator is not diagonal.
pub const DIAGONAL_TOL: f64 = 1e-12;

/// `Q(x' y' | x y) = |<x' y'| U |x y>|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionQ {
    pub dx: usize,
    pub dy: usize,
    /// Rows indexed by `x' dy + y'`, columns by `x dy + y`.
    pub matrix: DMatrix<f64>,
}

impl TransitionQ {
    pub fn get(&self, xp: usize, yp: usize, x: usize, y: usize) -> f64 {
        self.matrix[(xp * self.dy + yp, x * self.dy + y)]
    }

    /// Largest deviation of a row or column sum from one.
    pub fn stochasticity_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        (0..n)
            .map(|i| {
                (self.matrix.row(i).sum() - 1.0)
                    .abs()
                    .max((self.matrix.column(i).sum() - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_q(u: &CMatrix, dx: usize, dy: usize) -> Result<TransitionQ> {
    if u.nrows() != dx * dy || u.ncols() != dx * dy {
        return Err(Error::InvalidArgument(format!(
            "unitary is {}x{}, expected {}",
            u.nrows(),
            u.ncols(),
            dx * dy
        )));
    }
    Ok(TransitionQ {
        dx,
        dy,
        matrix: u.map(|a| a.norm_sqr()),
    })
}

/// `M(z | y') = tr[M_z^dagger M_z |y'><y'|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseM {
    /// Rows indexed by `z`, columns by `y'`.
    pub matrix: DMatrix<f64>,
}

impl NoiseM {
    pub fn get(&self, z: usize, yp: usize) -> f64 {
        self.matrix[(z, yp)]
    }
}

pub fn build_m(measurement: &MeasurementSet) -> NoiseM {
    let dy = measurement.operators[0].nrows();
    let matrix = DMatrix::from_fn(measurement.len(), dy, |z, yp| {
        let m = &measurement.operators[z];
        (m.adjoint() * m)[(yp, yp)].re
    });
    NoiseM { matrix }
}

/// `W(x' z | x) = sum_{y, y'} M(z|y') Q(x'y'|xy) p(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionW {
    pub dx: usize,
    pub nz: usize,
    /// `data[(xp * nz + z) * dx + x]`.
    data: Vec<f64>,
}

impl TransitionW {
    pub fn get(&self, xp: usize, z: usize, x: usize) -> f64 {
        self.data[(xp * self.nz + z) * self.dx + x]
    }

    /// Builds `W` directly from its entries, `entries[xp][z][x]`.
    pub fn from_entries(entries: &[Vec<Vec<f64>>]) -> Result<Self> {
        let dx = entries.len();
        let nz = entries.first().map_or(0, |e| e.len());
        let mut data = Vec::with_capacity(dx * nz * dx);
        for row in entries {
            for col in row {
                if col.len() != dx || row.len() != nz {
                    return Err(Error::InvalidArgument("ragged transition array".into()));
                }
                data.extend_from_slice(col);
            }
        }
        let w = Self { dx, nz, data };
        let res = w.normalization_residual();
        if res > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "W is not normalized (residual {res:e})"
            )));
        }
        Ok(w)
    }

    /// `max_x |sum_{x', z} W(x' z | x) - 1|`.
    pub fn normalization_residual(&self) -> f64 {
        (0..self.dx)
            .map(|x| {
                let s: f64 = (0..self.dx)
                    .flat_map(|xp| (0..self.nz).map(move |z| (xp, z)))
                    .map(|(xp, z)| self.get(xp, z, x))
                    .sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_w(q: &TransitionQ, m: &NoiseM, p_y: &[f64]) -> Result<TransitionW> {
    if p_y.len() != q.dy || m.matrix.ncols() != q.dy {
        return Err(Error::InvalidArgument(
            "ancilla dimensions of Q, M and p(y) differ".into(),
        ));
    }
    let (dx, dy, nz) = (q.dx, q.dy, m.matrix.nrows());
    let mut data = vec![0.0; dx * nz * dx];
    for xp in 0..dx {
        for z in 0..nz {
            for x in 0..dx {
                let mut acc = 0.0;
                for y in 0..dy {
                    for yp in 0..dy {
                        acc += m.get(z, yp) * q.get(xp, yp, x, y) * p_y[y];
                    }
                }
                data[(xp * nz + z) * dx + x] = acc;
            }
        }
    }
    let w = TransitionW { dx, nz, data };
    let res = w.normalization_residual();
    if res > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "W is not normalized (residual {res:e})"
        )));
    }
    Ok(w)
}

/// Unconditional chain `Q(x'|x) = sum_{y, y'} Q(x'y'|xy) p(y)`.
pub fn unconditional_chain(q: &TransitionQ, p_y: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(q.dx, q.dx, |xp, x| {
        (0..q.dy)
            .flat_map(|y| (0..q.dy).map(move |yp| (y, yp)))
            .map(|(y, yp)| q.get(xp, yp, x, y) * p_y[y])
            .sum()
    })
}

/// Forward recursion `p(x_t, zeta_t) = sum_x W(x_t z_t | x) p(x, zeta_{t-1})`.
/// Returns the final joint vector and `P(zeta)`.
pub fn hmm_forward(w: &TransitionW, p_x0: &[f64], zeta: &[usize]) -> Result<(Vec<f64>, f64)> {
    if p_x0.len() != w.dx {
        return Err(Error::InvalidArgument(
            "initial distribution has the wrong length".into(),
        ));
    }
    let mut p = p_x0.to_vec();
    for &z in zeta {
        if z >= w.nz {
            return Err(Error::UnknownOutcome(z.to_string()));
        }
        p = (0..w.dx)
            .map(|xp| (0..w.dx).map(|x| w.get(xp, z, x) * p[x]).sum())
            .collect();
    }
    let total = p.iter().sum();
    Ok((p, total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    /// `x_0 .. x_T`.
    pub states: Vec<usize>,
    /// `z_1 .. z_T`.
    pub outcomes: Vec<usize>,
}

fn sample_index<R: Rng>(weights: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        if w > 0.0 {
            last = i;
        }
        if u < acc {
            return i;
        }
    }
    last
}

pub fn classical_sample(w: &TransitionW, p_x0: &[f64], steps: usize, seed: u64) -> ClassicalTrajectory {
    let mut rng = rng_for(seed);
    let mut x = sample_index(p_x0.iter().copied(), &mut rng);
    let mut out = ClassicalTrajectory {
        states: vec![x],
        outcomes: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let k = sample_index(
            (0..w.dx)
                .flat_map(|xp| (0..w.nz).map(move |z| (xp, z)))
                .map(|(xp, z)| w.get(xp, z, x)),
            &mut rng,
        );
        x = k / w.nz;
        out.states.push(x);
        out.outcomes.push(k % w.nz);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IncoherenceCheck {
    pub holds: bool,
    /// First `(x, y, y')` whose conditional output is not a basis state.
    pub witness: Option<(usize, usize, usize)>,
}

/// Whether `<y'| U |x y>` is proportional to a single `|x'>` whenever it is
/// non-zero.
pub fn check_unconditionally_incoherent(u: &CMatrix, dx: usize, dy: usize) -> IncoherenceCheck {
    for x in 0..dx {
        for y in 0..dy {
            let col = u.column(x * dy + y);
            for yp in 0..dy {
                let amps: Vec<f64> = (0..dx).map(|xp| col[xp * dy + yp].norm_sqr()).collect();
                let p: f64 = amps.iter().sum();
                if p <= 1e-12 {
                    continue;
                }
                let best = amps.iter().fold(0.0f64, |a, &b| a.max(b));
                if best / p < 1.0 - BASIS_OVERLAP_TOL {
                    return IncoherenceCheck {
                        holds: false,
                        witness: Some((x, y, yp)),
                    };
                }
            }
        }
    }
    IncoherenceCheck {
        holds: true,
        witness: None,
    }
}

fn off_diagonal(m: &CMatrix) -> f64 {
    let mut out: f64 = 0.0;
    for r in 0..m.nrows() {
        for k in 0..m.ncols() {
            if r != k {
                out = out.max(m[(r, k)].norm());
            }
        }
    }
    out
}

/// Names the first violated condition, if any.
pub fn conditional_incoherence_violation(model: &Cm2Model) -> Option<String> {
    let (dx, dy) = (model.system_dim(), model.ancilla_dim());
    let u = check_unconditionally_incoherent(model.full_collision_unitary(), dx, dy);
    if let Some((x, y, yp)) = u.witness {
        return Some(format!(
            "collision is not unconditionally incoherent: <y'={yp}|U|x={x},y={y}> is a superposition of system states"
        ));
    }
    for (z, m) in model.measurement.operators.iter().enumerate() {
        if off_diagonal(m) > DIAGONAL_TOL {
            return Some(format!(
                "measurement operator '{}' is not diagonal in the ancilla basis",
                model.measurement.labels[z]
            ));
        }
    }
    if off_diagonal(model.rho_y()) > DIAGONAL_TOL {
        return Some("ancilla state is not diagonal".into());
    }
    None
}

pub fn check_conditionally_incoherent(model: &Cm2Model) -> bool {
    conditional_incoherence_violation(model).is_none()
}

/// Classical hidden-Markov counterpart of a conditionally incoherent model.
#[derive(Debug, Clone)]
pub struct ClassicalModel {
    pub q: TransitionQ,
    pub m: NoiseM,
    pub w: TransitionW,
    pub p_y: Vec<f64>,
    pub p_x0: Vec<f64>,
}

impl ClassicalModel {
    pub fn from_model(model: &Cm2Model) -> Result<Self> {
        if let Some(reason) = conditional_incoherence_violation(model) {
            return Err(Error::NotIncoherent(reason));
        }
        if off_diagonal(&model.rho_x0) > DIAGONAL_TOL {
            return Err(Error::NotIncoherent("initial system state is not diagonal".into()));
        }
        let (dx, dy) = (model.system_dim(), model.ancilla_dim());
        let q = build_q(model.full_collision_unitary(), dx, dy)?;
        let m = build_m(&model.measurement);
        let p_y: Vec<f64> = (0..dy).map(|k| model.rho_y()[(k, k)].re).collect();
        let p_x0 = (0..dx).map(|k| model.rho_x0[(k, k)].re).collect();
        let w = build_w(&q, &m, &p_y)?;
        Ok(Self { q, m, w, p_y, p_x0 })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub steps: usize,
    pub records: usize,
    pub max_abs_diff: f64,
    pub passed: bool,
}

/// Maximum crosscheck length.
pub const CROSSCHECK_MAX_STEPS: usize = 8;
/// Pass threshold of the crosscheck.
pub const CROSSCHECK_TOL: f64 = 1e-12;

/// Compares `P(zeta)` from quantum enumeration and from the forward
/// recursion for every record of length `steps`.
pub fn crosscheck(model: &Cm2Model, steps: usize) -> Result<CrossCheck> {
    if steps == 0 || steps > CROSSCHECK_MAX_STEPS {
        return Err(Error::InvalidArgument(format!(
            "crosscheck length must be between 1 and {CROSSCHECK_MAX_STEPS}"
        )));
    }
    let cm = ClassicalModel::from_model(model)?;
    let ens = enumerate_exact(model, steps, 0.0)?;
    let last = ens.last().expect("steps >= 1");
    let nz = model.n_outcomes();
    let records = nz.pow(steps as u32);
    let mut quantum = vec![0.0; records];
    for b in &last.branches {
        quantum[b.zeta.iter().fold(0, |acc, &z| acc * nz + z)] = b.prob;
    }
    let mut max_abs_diff: f64 = 0.0;
    let mut zeta = vec![0usize; steps];
    for (idx, pq) in quantum.iter().enumerate() {
        let mut r = idx;
        for k in (0..steps).rev() {
            zeta[k] = r % nz;
            r /= nz;
        }
        let (_, pc) = hmm_forward(&cm.w, &cm.p_x0, &zeta)?;
        max_abs_diff = max_abs_diff.max((pq - pc).abs());
    }
    Ok(CrossCheck {
        steps,
        records,
        max_abs_diff,
        passed: max_abs_diff < CROSSCHECK_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, identity, real_matrix};
    use crate::presets::{self, partial_swap, thermal_qubit};
    use crate::random::{haar_unitary, random_incoherent_model};
    use crate::state::DensityMatrix;

    #[test]
    fn partial_swap_q_matches_closed_form() {
        let g: f64 = 0.3;
        let l2 = g.cos().powi(2);
        let q = build_q(&partial_swap(g), 2, 2).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0,
                0.0,
                0.0,
                0.0,
                0.0,
                l2,
                1.0 - l2,
                0.0,
                0.0,
                1.0 - l2,
                l2,
                0.0,
                0.0,
                0.0,
                0.0,
                1.0,
            ],
        );
        assert!((q.matrix.clone() - expected).abs().max() < 1e-15);
        let q = build_q(&partial_swap(std::f64::consts::FRAC_PI_2), 2, 2).unwrap();
        assert_eq!(q.get(1, 0, 0, 1).round(), 1.0);
        assert!(q.get(0, 1, 0, 1) < 1e-30);
    }

    #[test]
    fn q_is_doubly_stochastic_for_any_unitary() {
        let mut rng = rng_for(3);
        for d in [2, 4] {
            let q = build_q(&haar_unitary(d * 2, &mut rng), d, 2).unwrap();
            assert!(q.stochasticity_residual() < 1e-10);
        }
    }

    #[test]
    fn incoherence_examples() {
        assert!(check_unconditionally_incoherent(&partial_swap(0.7), 2, 2).holds);
        assert!(check_unconditionally_incoherent(&identity(4), 2, 2).holds);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = real_matrix(2, &[s, s, s, -s]);
        let c = check_unconditionally_incoherent(&linalg::tensor(&h, &identity(2)), 2, 2);
        assert!(!c.holds);
        assert_eq!(c.witness, Some((0, 0, 0)));
    }

    #[test]
    fn conditional_incoherence_examples() {
        let m = presets::single_qubit_model(0.3, 0.3).unwrap();
        assert!(check_conditionally_incoherent(&m));
        let s = 0.5;
        let sx =
            MeasurementSet::with_index_labels(vec![real_matrix(2, &[s, s, s, s]), real_matrix(2, &[s, -s, -s, s])])
                .unwrap();
        assert!(!check_conditionally_incoherent(&m.with_measurement(sx).unwrap()));
        let noisy = MeasurementSet::with_index_labels(vec![
            linalg::diag(&[0.9f64.sqrt(), 0.2f64.sqrt()]),
            linalg::diag(&[0.1f64.sqrt(), 0.8f64.sqrt()]),
        ])
        .unwrap();
        assert!(check_conditionally_incoherent(&m.with_measurement(noisy).unwrap()));
    }

    #[test]
    fn noise_rows_are_normalized() {
        let m = random_incoherent_model(4);
        let nm = build_m(&m.measurement);
        for yp in 0..2 {
            assert!((nm.matrix.column(yp).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_measurement_reports_the_ancilla_output() {
        let m = presets::single_qubit_model(0.3, 0.3).unwrap();
        let cm = ClassicalModel::from_model(&m.with_initial_state(thermal_qubit(0.5).unwrap()).unwrap()).unwrap();
        // z equals y', so W(x' z | x) = sum_y Q(x' z | x y) p(y)
        for xp in 0..2 {
            for z in 0..2 {
                for x in 0..2 {
                    let direct: f64 = (0..2).map(|y| cm.q.get(xp, z, x, y) * cm.p_y[y]).sum();
                    assert!((cm.w.get(xp, z, x) - direct).abs() < 1e-15);
                }
            }
        }
    }

    // Oracle: from x = 1 a click needs y' = 1; y = 1 keeps it (weight 1 - f),
    // y = 0 swaps with probability 1 - cos^2 g.
    #[test]
    fn single_click_probability() {
        let (f, g): (f64, f64) = (0.3, 0.3);
        let expected = f * (1.0 - g.cos().powi(2)) + (1.0 - f);
        assert!((expected - 0.72620).abs() < 5e-6);
        let m = presets::single_qubit_model(f, g)
            .unwrap()
            .with_initial_state(DensityMatrix::diagonal(&[0.0, 1.0]).unwrap())
            .unwrap();
        let cm = ClassicalModel::from_model(&m).unwrap();
        let (_, p) = hmm_forward(&cm.w, &cm.p_x0, &[1]).unwrap();
        assert!((p - expected).abs() < 1e-14);
        let n = 100_000;
        let ones = (0..n)
            .filter(|&s| classical_sample(&cm.w, &cm.p_x0, 1, s).outcomes[0] == 1)
            .count() as f64
            / n as f64;
        assert!((ones - expected).abs() < 0.005, "{ones}");
    }

    #[test]
    fn uniform_w_gives_uniform_records() {
        let w = TransitionW::from_entries(&[vec![vec![0.25, 0.25]; 2], vec![vec![0.25, 0.25]; 2]]).unwrap();
        let (_, p) = hmm_forward(&w, &[0.4, 0.6], &[0, 1, 1, 0]).unwrap();
        assert!((p - 0.5f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn permutation_w_has_one_trajectory() {
        // x' = 1 - x, z = x'
        let w = TransitionW::from_entries(&[
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        ])
        .unwrap();
        let a = classical_sample(&w, &[1.0, 0.0], 6, 1);
        let b = classical_sample(&w, &[1.0, 0.0], 6, 99);
        assert_eq!(a, b);
        assert_eq!(a.outcomes, vec![1, 0, 1, 0, 1, 0]);
        assert_eq!(a, classical_sample(&w, &[1.0, 0.0], 6, 1));
    }

    #[test]
    fn unconditional_chain_matches_channel_diagonal() {
        for seed in 0..10 {
            let m = random_incoherent_model(seed);
            let cm = ClassicalModel::from_model(&m).unwrap();
            let chain = unconditional_chain(&cm.q, &cm.p_y);
            for x in 0..2 {
                let mut e = CMatrix::zeros(2, 2);
                e[(x, x)] = linalg::ONE;
                let img = crate::dynamics::channel_apply(&e, &m);
                for xp in 0..2 {
                    assert!((img[(xp, xp)].re - chain[(xp, x)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conditional_states_stay_classical() {
        for seed in 0..10 {
            let m = random_incoherent_model(seed);
            let cm = ClassicalModel::from_model(&m).unwrap();
            for e in enumerate_exact(&m, 6, 0.0).unwrap() {
                for b in &e.branches {
                    let (joint, p) = hmm_forward(&cm.w, &cm.p_x0, &b.zeta).unwrap();
                    for x in 0..2 {
                        assert!((b.state[(x, x)].re - joint[x] / p).abs() < 1e-10);
                    }
                    assert!(b.state[(0, 1)].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn crosscheck_passes_and_refuses() {
        let m = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_initial_state(thermal_qubit(0.9).unwrap())
            .unwrap();
        let r = crosscheck(&m, 8).unwrap();
        assert!(r.passed && r.records == 256, "{r:?}");
        assert!(matches!(
            crosscheck(&presets::single_qubit_model(0.3, 0.3).unwrap(), 3),
            Err(Error::NotIncoherent(_))
        ));
    }
}

//! Random states, unitaries and models for property checks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::rng_for;
use crate::linalg::{self, c, CMatrix};
use crate::model::{AncillaSpec, Cm2Model, CollisionUnitary, MeasurementSet, Stage};
use crate::presets::partial_swap;
use crate::state::DensityMatrix;

fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(d, d, |i, k| {
        if i == k {
            let x = r[(i, i)];
            if x.norm() > 0.0 {
                x / x.norm()
            } else {
                linalg::ONE
            }
        } else {
            linalg::ZERO
        }
    });
    q * phases
}

/// Full-rank random density matrix `G G^dagger / tr`.
pub fn random_state(d: usize, seed: u64) -> DensityMatrix {
    let mut rng = rng_for(seed);
    let g = ginibre(d, &mut rng);
    let m = &g * g.adjoint();
    DensityMatrix::from_unnormalized(&linalg::hermitize(&m)).expect("Ginibre states are valid")
}

/// Diagonal qubit state with ground population in `[0.05, 0.95]`.
pub fn random_diagonal_qubit<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let p = rng.random_range(0.05..=0.95);
    DensityMatrix::diagonal(&[p, 1.0 - p]).expect("valid populations")
}

/// Qubit system coupled to `n_units` qubit units by Haar-random stages
/// (one per unit, in order), diagonal unit states and a computational-basis
/// measurement of the whole ancilla.
pub fn random_model(seed: u64, n_units: usize) -> Cm2Model {
    let mut rng = rng_for(seed ^ 0x5eed_0fc0_ffee);
    random_model_with(&mut rng, n_units)
}

pub fn random_model_with(rng: &mut ChaCha8Rng, n_units: usize) -> Cm2Model {
    let units: Vec<DensityMatrix> = (0..n_units).map(|_| random_diagonal_qubit(rng)).collect();
    let stages = (0..n_units)
        .map(|j| Stage {
            unit: j,
            unitary: haar_unitary(4, rng),
        })
        .collect();
    let rho_x0 = random_state(2, rng.random());
    Cm2Model::new(
        rho_x0,
        AncillaSpec::new(units).expect("at least one unit"),
        CollisionUnitary { stages },
        MeasurementSet::computational(1 << n_units),
    )
    .expect("consistent dimensions")
}

/// Random conditionally incoherent qubit model: partial SWAP dressed with
/// input permutations, diagonal phases and an output flip of the system,
/// a noisy diagonal measurement and diagonal states.
pub fn random_incoherent_model(seed: u64) -> Cm2Model {
    let mut rng = rng_for(seed ^ 0x0001_c04e_4e47);
    let g = rng.random_range(0.0..std::f64::consts::PI);
    let mut perm: Vec<usize> = (0..4).collect();
    perm.shuffle(&mut rng);
    let pin = CMatrix::from_fn(4, 4, |r, k| if perm[k] == r { linalg::ONE } else { linalg::ZERO });
    let phases = CMatrix::from_fn(4, 4, |r, k| {
        if r == k {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            c(a.cos(), a.sin())
        } else {
            linalg::ZERO
        }
    });
    let flip = if rng.random_bool(0.5) {
        linalg::tensor(&linalg::real_matrix(2, &[0.0, 1.0, 1.0, 0.0]), &linalg::identity(2))
    } else {
        linalg::identity(4)
    };
    let unitary = flip * partial_swap(g) * phases * pin;

    let n_z = rng.random_range(2..=3usize);
    // column-stochastic noise M(z|y) for y in {0, 1}
    let mut noise = vec![[0.0f64; 2]; n_z];
    for y in 0..2 {
        let w: Vec<f64> = (0..n_z).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        for z in 0..n_z {
            noise[z][y] = w[z] / total;
        }
    }
    let ops = noise
        .iter()
        .map(|row| CMatrix::from_fn(2, 2, |r, k| if r == k { c(row[r].sqrt(), 0.0) } else { linalg::ZERO }))
        .collect();
    let rho_x0 = random_diagonal_qubit(&mut rng);
    let rho_y = random_diagonal_qubit(&mut rng);
    Cm2Model::new(
        rho_x0,
        AncillaSpec::single(rho_y),
        CollisionUnitary::single(unitary),
        MeasurementSet::with_index_labels(ops).expect("non-empty"),
    )
    .expect("consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = rng_for(1);
        for d in [2, 4, 8] {
            assert!(linalg::unitarity_residual(&haar_unitary(d, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn random_models_validate() {
        for seed in 0..10 {
            assert!(random_model(seed, 1 + seed as usize % 2).validate().valid);
            assert!(random_incoherent_model(seed).validate().valid);
        }
    }
}

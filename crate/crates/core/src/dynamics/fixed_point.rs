use nalgebra::SVD;

use super::channel_apply;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::model::Cm2Model;
use crate::state::DensityMatrix;

/// Minimum second-smallest singular value of `E - 1` for the fixed point
/// to count as unique.
pub const FIXED_POINT_GAP: f64 = 1e-8;

/// Matrix of the unconditional channel acting on row-major `vec(rho)`.
pub fn channel_matrix(model: &Cm2Model) -> CMatrix {
    let d = model.system_dim();
    let mut out = CMatrix::zeros(d * d, d * d);
    for r in 0..d {
        for k in 0..d {
            let mut unit = CMatrix::zeros(d, d);
            unit[(r, k)] = ONE;
            let image = channel_apply(&unit, model);
            for a in 0..d {
                for b in 0..d {
                    out[(a * d + b, r * d + k)] = image[(a, b)];
                }
            }
        }
    }
    out
}

/// The unique state with `E(rho) = rho`, from the null space of `E - 1`.
pub fn fixed_point(model: &Cm2Model) -> Result<DensityMatrix> {
    let d = model.system_dim();
    let shifted = channel_matrix(model) - linalg::identity(d * d);
    let svd = SVD::new(shifted, false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    if order.len() > 1 {
        let gap = svd.singular_values[order[1]];
        if gap <= FIXED_POINT_GAP {
            return Err(Error::NonUniqueFixedPoint { gap });
        }
    }
    let null = v_t.row(order[0]);
    let rho = CMatrix::from_fn(d, d, |r, k| null[r * d + k].conj());
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::InvalidState("fixed-point vector is traceless".into()));
    }
    let rho = linalg::hermitize(&(rho / tr));
    // one polish step through the channel removes residual SVD round-off
    let rho = linalg::hermitize(&channel_apply(&rho, model));
    let rho = rho.unscale(rho.trace().re);
    DensityMatrix::new(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uncond_step;
    use crate::linalg::identity;
    use crate::presets;

    fn trace_norm(m: &CMatrix) -> f64 {
        linalg::eig_hermitian(&linalg::hermitize(m))
            .unwrap()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum()
    }

    #[test]
    fn channel_matrix_reproduces_channel() {
        let m = presets::two_qubit_model(0.3, 0.3, 0.1).unwrap();
        let l = channel_matrix(&m);
        let rho = m.rho_x0.matrix();
        let v = nalgebra::DVector::from_iterator(4, (0..4).map(|i| rho[(i / 2, i % 2)]));
        let out = l * v;
        let direct = uncond_step(&m.rho_x0, &m).unwrap();
        for i in 0..4 {
            assert!((out[i] - direct[(i / 2, i % 2)]).norm() < 1e-14);
        }
    }

    #[test]
    fn single_qubit_fixed_point_is_rho_y() {
        let m = presets::single_qubit_model(0.3, 0.3).unwrap();
        let fp = fixed_point(&m).unwrap();
        assert!(linalg::max_abs_diff(fp.matrix(), m.rho_y()) < 1e-12);
    }

    #[test]
    fn identity_collision_has_no_unique_fixed_point() {
        let m = presets::single_qubit_model(0.3, 0.0).unwrap();
        assert!(matches!(fixed_point(&m), Err(Error::NonUniqueFixedPoint { .. })));
        assert!(linalg::max_abs_diff(&channel_matrix(&m), &identity(4)) < 1e-15);
    }

    #[test]
    fn two_qubit_fixed_point_is_invariant() {
        let m = presets::two_qubit_model(0.3, 0.3, 0.1).unwrap();
        let fp = fixed_point(&m).unwrap();
        let img = uncond_step(&fp, &m).unwrap();
        assert!(trace_norm(&(img.matrix() - fp.matrix())) < 1e-12);
        // populated coherence from the |x+> unit
        assert!(fp[(0, 1)].norm() > 1e-3);
    }
}

//! The collisional model: initial system state, ancilla preparation,
//! collision unitary and the generalized measurement on the ancilla.
//!
//! Every collision uses a fresh copy of the same ancilla, the same unitary
//! and the same measurement. The composite space is ordered as
//! `X (x) Y_1 (x) ... (x) Y_N`.

mod file;

use serde::Serialize;

pub use file::ModelFile;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::DensityMatrix;

pub const UNITARY_TOL: f64 = 1e-12;
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Ancilla made of elementary units prepared in a product state.
#[derive(Debug, Clone)]
pub struct AncillaSpec {
    pub units: Vec<DensityMatrix>,
}

impl AncillaSpec {
    pub fn new(units: Vec<DensityMatrix>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidArgument("ancilla needs at least one unit".into()));
        }
        Ok(Self { units })
    }

    pub fn single(unit: DensityMatrix) -> Self {
        Self { units: vec![unit] }
    }

    pub fn unit_dims(&self) -> Vec<usize> {
        self.units.iter().map(DensityMatrix::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.unit_dims().iter().product()
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(linalg::tensor_all(self.units.iter().map(|u| u.matrix())))
    }
}

/// One step of a collision: a unitary on `X (x) Y_unit`.
#[derive(Debug, Clone)]
pub struct Stage {
    pub unit: usize,
    pub unitary: CMatrix,
}

/// Ordered sequence of stages; later stages act after earlier ones.
#[derive(Debug, Clone)]
pub struct CollisionUnitary {
    pub stages: Vec<Stage>,
}

impl CollisionUnitary {
    /// A single unitary acting on the system and the (whole) first unit.
    pub fn single(unitary: CMatrix) -> Self {
        Self {
            stages: vec![Stage { unit: 0, unitary }],
        }
    }
}

/// Generalized measurement on the full ancilla space with opaque labels.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub operators: Vec<CMatrix>,
    pub labels: Vec<String>,
}

impl MeasurementSet {
    pub fn new(operators: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidArgument("measurement needs at least one operator".into()));
        }
        if operators.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} measurement operators but {} labels",
                operators.len(),
                labels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidArgument(format!("duplicate outcome label `{dup}`")));
        }
        Ok(Self { operators, labels })
    }

    /// Labels `"0", "1", ...`.
    pub fn with_index_labels(operators: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..operators.len()).map(|k| k.to_string()).collect();
        Self::new(operators, labels)
    }

    /// Projective measurement in the computational basis of `dim`.
    pub fn computational(dim: usize) -> Self {
        Self::with_index_labels((0..dim).map(|k| linalg::basis_projector(dim, k)).collect()).expect("non-empty")
    }

    /// The trivial measurement `{1}`.
    pub fn trivial(dim: usize) -> Self {
        Self::with_index_labels(vec![linalg::identity(dim)]).expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    /// `max |sum_z M_z^dagger M_z - 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.operators[0].nrows();
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, m| acc + m.adjoint() * m);
        linalg::max_abs_diff(&sum, &linalg::identity(d))
    }

    /// `sum_z M_z rho M_z^dagger`.
    pub fn dephase(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.nrows();
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, m| acc + linalg::conjugate(m, rho))
    }
}

/// Kraus decomposition of the conditional map of one outcome.
#[derive(Debug, Clone)]
pub(crate) struct OutcomeKraus {
    pub ops: Vec<CMatrix>,
}

/// A complete monitored collisional model.
///
/// Construction checks dimensional consistency; numerical invariants
/// (unitarity, completeness, the measurement condition) are reported by
/// [`Cm2Model::validate`].
#[derive(Debug, Clone)]
pub struct Cm2Model {
    pub rho_x0: DensityMatrix,
    pub ancilla: AncillaSpec,
    pub collision: CollisionUnitary,
    pub measurement: MeasurementSet,
    unitary: CMatrix,
    rho_y: DensityMatrix,
    kraus: Vec<OutcomeKraus>,
}

impl Cm2Model {
    pub fn new(
        rho_x0: DensityMatrix,
        ancilla: AncillaSpec,
        collision: CollisionUnitary,
        measurement: MeasurementSet,
    ) -> Result<Self> {
        let dx = rho_x0.dim();
        let unit_dims = ancilla.unit_dims();
        if collision.stages.is_empty() {
            return Err(Error::InvalidArgument("collision needs at least one stage".into()));
        }
        for (k, stage) in collision.stages.iter().enumerate() {
            let Some(&du) = unit_dims.get(stage.unit) else {
                return Err(Error::InvalidArgument(format!(
                    "stage {k} targets unit {} but the ancilla has {} units",
                    stage.unit,
                    unit_dims.len()
                )));
            };
            if stage.unitary.shape() != (dx * du, dx * du) {
                return Err(Error::InvalidArgument(format!(
                    "stage {k} unitary has shape {:?}, expected {}x{}",
                    stage.unitary.shape(),
                    dx * du,
                    dx * du
                )));
            }
        }
        let dy = ancilla.dim();
        for (k, m) in measurement.operators.iter().enumerate() {
            if m.shape() != (dy, dy) {
                return Err(Error::InvalidArgument(format!(
                    "measurement operator `{}` has shape {:?}, expected {dy}x{dy}",
                    measurement.labels[k],
                    m.shape()
                )));
            }
        }
        let unitary = compose_stages(dx, &unit_dims, &collision)?;
        let rho_y = ancilla.state();
        let kraus = build_kraus(dx, &rho_y, &unitary, &measurement)?;
        Ok(Self {
            rho_x0,
            ancilla,
            collision,
            measurement,
            unitary,
            rho_y,
            kraus,
        })
    }

    /// Same model with a different initial system state.
    pub fn with_initial_state(&self, rho_x0: DensityMatrix) -> Result<Self> {
        if rho_x0.dim() != self.system_dim() {
            return Err(Error::InvalidArgument(format!(
                "initial state has dimension {}, system has {}",
                rho_x0.dim(),
                self.system_dim()
            )));
        }
        Ok(Self { rho_x0, ..self.clone() })
    }

    /// Same model with a different measurement.
    pub fn with_measurement(&self, measurement: MeasurementSet) -> Result<Self> {
        Self::new(
            self.rho_x0.clone(),
            self.ancilla.clone(),
            self.collision.clone(),
            measurement,
        )
    }

    pub fn system_dim(&self) -> usize {
        self.rho_x0.dim()
    }

    pub fn ancilla_dim(&self) -> usize {
        self.rho_y.dim()
    }

    pub fn n_outcomes(&self) -> usize {
        self.measurement.len()
    }

    /// `[d_X, d_Y1, ..., d_YN]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.system_dim()];
        d.extend(self.ancilla.unit_dims());
        d
    }

    /// The collision unitary on `X (x) Y`: stages embedded and multiplied,
    /// later stages on the left.
    pub fn full_collision_unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Full ancilla preparation `rho_Y = (x)_j rho_Yj`.
    pub fn rho_y(&self) -> &DensityMatrix {
        &self.rho_y
    }

    pub(crate) fn kraus(&self, outcome: usize) -> &[CMatrix] {
        &self.kraus[outcome].ops
    }

    /// Units whose preparation is rank deficient.
    pub fn rank_deficient_units(&self) -> Vec<usize> {
        self.ancilla
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| {
                linalg::psd_spectrum(u.matrix())
                    .map(|s| s.eigenvalues.iter().any(|&l| l <= linalg::LOG_FLOOR))
                    .unwrap_or(true)
            })
            .map(|(j, _)| j)
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (k, stage) in self.collision.stages.iter().enumerate() {
            let r = linalg::unitarity_residual(&stage.unitary);
            if r > UNITARY_TOL {
                violations.push(Violation {
                    invariant: format!("stage {k} unitarity"),
                    norm: r,
                });
            }
        }
        let r = self.measurement.completeness_residual();
        if r > COMPLETENESS_TOL {
            violations.push(Violation {
                invariant: "measurement completeness".into(),
                norm: r,
            });
        }
        let warnings = self
            .rank_deficient_units()
            .into_iter()
            .map(|j| format!("ancilla unit {j} is rank deficient: fluxes and D(Y'||Y) may diverge"))
            .collect();
        let measurement_condition = crate::thermo::check_measurement_condition(self);
        ValidationReport {
            valid: violations.is_empty(),
            violations,
            warnings,
            flux_equality_guaranteed: measurement_condition.holds,
            measurement_condition,
        }
    }

    /// `Ok` when [`Cm2Model::validate`] finds no violations.
    pub fn check(&self) -> Result<()> {
        let report = self.validate();
        if report.valid {
            Ok(())
        } else {
            let list: Vec<String> = report
                .violations
                .iter()
                .map(|v| format!("{} ({:e})", v.invariant, v.norm))
                .collect();
            Err(Error::InvalidArgument(format!("invalid model: {}", list.join(", "))))
        }
    }
}

fn compose_stages(dx: usize, unit_dims: &[usize], collision: &CollisionUnitary) -> Result<CMatrix> {
    let mut dims = vec![dx];
    dims.extend_from_slice(unit_dims);
    let total: usize = dims.iter().product();
    let mut u = linalg::identity(total);
    for stage in &collision.stages {
        let e = linalg::embed(&stage.unitary, &dims, &[0, stage.unit + 1])?;
        u = e * u;
    }
    Ok(u)
}

/// `E_z(rho) = sum_k K rho K^dagger` with
/// `K_{z,y',y} = sqrt(p_y) (1 (x) <y'|) M_z U (1 (x) |phi_y>)`.
fn build_kraus(
    dx: usize,
    rho_y: &DensityMatrix,
    unitary: &CMatrix,
    measurement: &MeasurementSet,
) -> Result<Vec<OutcomeKraus>> {
    let dy = rho_y.dim();
    let spec = linalg::psd_spectrum(rho_y.matrix())?;
    let mut out = Vec::with_capacity(measurement.len());
    for m in &measurement.operators {
        let mu = linalg::tensor(&linalg::identity(dx), m) * unitary;
        let mut ops = Vec::new();
        for (k, &p) in spec.eigenvalues.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let phi = spec.eigenvectors.column(k);
            let amp = p.sqrt();
            for yp in 0..dy {
                let kr = CMatrix::from_fn(dx, dx, |xo, xi| {
                    let row = xo * dy + yp;
                    (0..dy).fold(linalg::ZERO, |acc, y| acc + mu[(row, xi * dy + y)] * phi[y]) * amp
                });
                if linalg::max_abs(&kr) > 0.0 {
                    ops.push(kr);
                }
            }
        }
        out.push(OutcomeKraus { ops });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub invariant: String,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
    pub measurement_condition: crate::thermo::ConditionCheck,
    /// Conditional flux equals unconditional flux for every input.
    pub flux_equality_guaranteed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, max_abs_diff, unitarity_residual};
    use crate::presets;

    #[test]
    fn incomplete_measurement_is_flagged() {
        let half = diag(&[0.5, 0.5]);
        let meas = MeasurementSet::with_index_labels(vec![half.clone(), half]).unwrap();
        let model = presets::single_qubit_model(0.3, 0.3)
            .unwrap()
            .with_measurement(meas)
            .unwrap();
        let report = model.validate();
        assert!(!report.valid);
        assert!(report
            .violations
            .iter()
            .any(|v| v.invariant == "measurement completeness"));
        assert!(model.check().is_err());
    }

    #[test]
    fn presets_validate() {
        let r = presets::single_qubit_model(0.3, 0.3).unwrap().validate();
        assert!(r.valid && r.measurement_condition.holds && r.warnings.is_empty());
        let r = presets::two_qubit_model(0.3, 0.3, 0.1).unwrap().validate();
        assert!(r.valid && r.measurement_condition.holds);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn single_stage_swap_is_the_full_unitary() {
        let swap = presets::partial_swap(std::f64::consts::FRAC_PI_2);
        let model = presets::single_qubit_model(0.3, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(max_abs_diff(model.full_collision_unitary(), &swap) < 1e-15);
    }

    #[test]
    fn identity_second_stage_reduces_to_first() {
        let m = presets::two_qubit_model(0.3, 0.3, 0.0).unwrap();
        let first = linalg::embed(&presets::partial_swap(0.3), &m.dims(), &[0, 1]).unwrap();
        assert!(max_abs_diff(m.full_collision_unitary(), &first) < 1e-15);
    }

    #[test]
    fn sequential_stages_compose_in_order() {
        let m = presets::two_qubit_model(0.3, 0.4, 0.7).unwrap();
        let dims = m.dims();
        let u1 = linalg::embed(&presets::partial_swap(0.4), &dims, &[0, 1]).unwrap();
        let u2 = linalg::embed(&presets::partial_swap(0.7), &dims, &[0, 2]).unwrap();
        let u = m.full_collision_unitary();
        assert!(max_abs_diff(u, &(&u2 * &u1)) < 1e-14);
        assert!(max_abs_diff(u, &(&u1 * &u2)) > 1e-3);
        assert!(unitarity_residual(u) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = presets::single_qubit_model(0.3, 0.3).unwrap();
        let bad = CollisionUnitary::single(linalg::identity(3));
        let err = Cm2Model::new(m.rho_x0.clone(), m.ancilla.clone(), bad, m.measurement.clone());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let err = MeasurementSet::new(vec![linalg::identity(2)], vec![]);
        assert!(err.is_err());
        assert!(matches!(m.measurement.index_of("up"), Err(Error::UnknownOutcome(_))));
    }
}

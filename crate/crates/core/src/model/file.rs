//! JSON model definition files. See `schema/model.schema.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AncillaSpec, Cm2Model, CollisionUnitary, MeasurementSet, Stage};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::state::DensityMatrix;

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StageJson {
    pub unit: usize,
    pub unitary: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub system_dim: usize,
    pub rho_x0: MatrixJson,
    pub ancilla_units: Vec<MatrixJson>,
    pub collision_stages: Vec<StageJson>,
    pub measurement_ops: Vec<MatrixJson>,
    pub labels: Vec<String>,
}

fn to_matrix(field: &str, m: &MatrixJson) -> Result<CMatrix> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "`{field}` must be a non-empty square matrix"
        )));
    }
    Ok(CMatrix::from_fn(n, n, |r, k| c(m[r][k][0], m[r][k][1])))
}

fn from_matrix(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

fn to_state(field: &str, m: &MatrixJson) -> Result<DensityMatrix> {
    DensityMatrix::new(to_matrix(field, m)?).map_err(|e| Error::InvalidArgument(format!("`{field}`: {e}")))
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("model file: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_model(model: &Cm2Model) -> Self {
        Self {
            system_dim: model.system_dim(),
            rho_x0: from_matrix(model.rho_x0.matrix()),
            ancilla_units: model.ancilla.units.iter().map(|u| from_matrix(u.matrix())).collect(),
            collision_stages: model
                .collision
                .stages
                .iter()
                .map(|s| StageJson {
                    unit: s.unit,
                    unitary: from_matrix(&s.unitary),
                })
                .collect(),
            measurement_ops: model.measurement.operators.iter().map(from_matrix).collect(),
            labels: model.measurement.labels.clone(),
        }
    }

    pub fn into_model(&self) -> Result<Cm2Model> {
        let rho_x0 = to_state("rho_x0", &self.rho_x0)?;
        if rho_x0.dim() != self.system_dim {
            return Err(Error::InvalidArgument(format!(
                "`rho_x0` has dimension {}, `system_dim` is {}",
                rho_x0.dim(),
                self.system_dim
            )));
        }
        let units = self
            .ancilla_units
            .iter()
            .enumerate()
            .map(|(j, m)| to_state(&format!("ancilla_units[{j}]"), m))
            .collect::<Result<Vec<_>>>()?;
        let stages = self
            .collision_stages
            .iter()
            .enumerate()
            .map(|(k, s)| {
                Ok(Stage {
                    unit: s.unit,
                    unitary: to_matrix(&format!("collision_stages[{k}].unitary"), &s.unitary)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ops = self
            .measurement_ops
            .iter()
            .enumerate()
            .map(|(k, m)| to_matrix(&format!("measurement_ops[{k}]"), m))
            .collect::<Result<Vec<_>>>()?;
        Cm2Model::new(
            rho_x0,
            AncillaSpec::new(units)?,
            CollisionUnitary { stages },
            MeasurementSet::new(ops, self.labels.clone())?,
        )
    }
}

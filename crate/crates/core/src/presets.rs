//! Ready-made qubit models: thermal and coherent qubit states, the partial
//! SWAP, and the single- and two-qubit-ancilla models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, ONE, ZERO};
use crate::model::{AncillaSpec, Cm2Model, CollisionUnitary, MeasurementSet, Stage};
use crate::state::DensityMatrix;

/// `f |0><0| + (1 - f) |1><1|`.
pub fn thermal_qubit(f: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "ground-state population f = {f} outside [0, 1]"
        )));
    }
    DensityMatrix::diagonal(&[f, 1.0 - f])
}

/// `|x+><x+|`, the +1 eigenstate of sigma_x.
pub fn xplus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).expect("normalized")
}

/// `exp(-i g (s+ s- + s- s+))` on two qubits.
pub fn partial_swap(g: f64) -> CMatrix {
    let (cg, sg) = (c(g.cos(), 0.0), c(0.0, -g.sin()));
    let mut u = CMatrix::from_element(4, 4, ZERO);
    u[(0, 0)] = ONE;
    u[(3, 3)] = ONE;
    u[(1, 1)] = cg;
    u[(2, 2)] = cg;
    u[(1, 2)] = sg;
    u[(2, 1)] = sg;
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    /// Ground-state population of the thermal unit.
    pub f: f64,
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    /// Weight of `1/d` mixed into every ancilla unit; 0 disables.
    pub epsilon_mix: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            f: 0.3,
            g: 0.3,
            g1: 0.3,
            g2: 0.1,
            epsilon_mix: 0.0,
        }
    }
}

impl PresetParams {
    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.f) {
            return Err(Error::InvalidArgument(format!("f = {} outside [0, 1]", self.f)));
        }
        if ![self.g, self.g1, self.g2].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("partial-SWAP angles must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_mix) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_mix = {} outside [0, 1]",
                self.epsilon_mix
            )));
        }
        Ok(())
    }
}

fn regularize(state: DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if eps == 0.0 {
        Ok(state)
    } else {
        state.mix_with_identity(eps)
    }
}

/// Thermal qubit ancilla, partial SWAP, computational-basis measurement,
/// system starting in `|x+>`.
pub fn single_qubit_model(f: f64, g: f64) -> Result<Cm2Model> {
    single_qubit_with(&PresetParams {
        f,
        g,
        ..PresetParams::default()
    })
}

pub fn single_qubit_with(p: &PresetParams) -> Result<Cm2Model> {
    p.check()?;
    Cm2Model::new(
        xplus(),
        AncillaSpec::single(regularize(thermal_qubit(p.f)?, p.epsilon_mix)?),
        CollisionUnitary::single(partial_swap(p.g)),
        MeasurementSet::computational(2),
    )
}

/// Two-unit ancilla (thermal, `|x+>`) hit sequentially by partial SWAPs of
/// strength `g1` then `g2`; only the first unit is measured.
pub fn two_qubit_model(f: f64, g1: f64, g2: f64) -> Result<Cm2Model> {
    two_qubit_with(&PresetParams {
        f,
        g1,
        g2,
        ..PresetParams::default()
    })
}

pub fn two_qubit_with(p: &PresetParams) -> Result<Cm2Model> {
    p.check()?;
    let units = vec![
        regularize(thermal_qubit(p.f)?, p.epsilon_mix)?,
        regularize(xplus(), p.epsilon_mix)?,
    ];
    let id = crate::linalg::identity(2);
    let meas = MeasurementSet::with_index_labels(vec![
        crate::linalg::tensor(&crate::linalg::basis_projector(2, 0), &id),
        crate::linalg::tensor(&crate::linalg::basis_projector(2, 1), &id),
    ])?;
    Cm2Model::new(
        xplus(),
        AncillaSpec::new(units)?,
        CollisionUnitary {
            stages: vec![
                Stage {
                    unit: 0,
                    unitary: partial_swap(p.g1),
                },
                Stage {
                    unit: 1,
                    unitary: partial_swap(p.g2),
                },
            ],
        },
        meas,
    )
}

/// The model restarted from the unique fixed point of its channel.
pub fn fixed_point_start(model: &Cm2Model) -> Result<Cm2Model> {
    let rho = dynamics::fixed_point(model)?;
    model.with_initial_state(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "single-qubit")]
    SingleQubit,
    #[serde(rename = "two-qubit")]
    TwoQubit,
    #[serde(rename = "two-qubit-fp")]
    TwoQubitFixedPoint,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::SingleQubit, Preset::TwoQubit, Preset::TwoQubitFixedPoint];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SingleQubit => "single-qubit",
            Preset::TwoQubit => "two-qubit",
            Preset::TwoQubitFixedPoint => "two-qubit-fp",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::SingleQubit => "thermal qubit ancilla (f), partial SWAP (g), computational measurement, X0 = |x+>",
            Preset::TwoQubit => "ancilla (thermal f, |x+>), partial SWAPs g1 then g2, only the thermal unit measured",
            Preset::TwoQubitFixedPoint => "two-qubit model started from the fixed point of its channel",
        }
    }

    pub fn build(self, p: &PresetParams) -> Result<Cm2Model> {
        match self {
            Preset::SingleQubit => single_qubit_with(p),
            Preset::TwoQubit => two_qubit_with(p),
            Preset::TwoQubitFixedPoint => fixed_point_start(&two_qubit_with(p)?),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}` (try `presets list`)")))
    }
}

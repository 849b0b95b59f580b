//! JSON scenario configuration and serialization of results.
//!
//! Matrices are encoded as row-major lists of `[re, im]` pairs with explicit
//! dimensions, so emitted files re-parse to bit-identical values. Unknown
//! keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disc::Grid;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::model::{
    boundary_from_jet_rows, build_q, sigma_matrix, Coefficient, PhModel, PortMatrices,
};
use crate::regulator::{Controller, Exosystem, GainRule};
use crate::scenarios;

/// Dense complex matrix as rows x cols with row-major `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDef {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDef {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let z = m[(r, col)];
                data.push([z.re, z.im]);
            }
        }
        MatrixDef {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Config(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, col| {
            let [re, im] = self.data[r * self.cols + col];
            c(re, im)
        }))
    }
}

pub fn vector_to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn pairs_to_vector(pairs: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(pairs.len(), pairs.iter().map(|&[re, im]| c(re, im)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CoefficientDef {
    Constant(MatrixDef),
    Samples(Vec<MatrixDef>),
}

impl CoefficientDef {
    pub fn from_coefficient(c: &Coefficient) -> Self {
        match c {
            Coefficient::Constant(m) => CoefficientDef::Constant(MatrixDef::from_matrix(m)),
            Coefficient::Samples(v) => {
                CoefficientDef::Samples(v.iter().map(MatrixDef::from_matrix).collect())
            }
        }
    }

    pub fn to_coefficient(&self) -> Result<Coefficient> {
        Ok(match self {
            CoefficientDef::Constant(m) => Coefficient::Constant(m.to_matrix()?),
            CoefficientDef::Samples(v) => {
                Coefficient::Samples(v.iter().map(|m| m.to_matrix()).collect::<Result<_>>()?)
            }
        })
    }
}

/// Boundary maps: either explicit `W` matrices on the port variables, or
/// rows acting on the endpoint jet of `Hx` (converted via `R_ext^-1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum BoundaryDef {
    Ports {
        w_b: MatrixDef,
        w_c: MatrixDef,
    },
    JetRows {
        b_rows: MatrixDef,
        c_rows: MatrixDef,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDef {
    pub order: usize,
    pub state_dim: usize,
    pub interval: [f64; 2],
    pub p: Vec<MatrixDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<CoefficientDef>,
    pub hamiltonian: CoefficientDef,
    pub h_bounds: [f64; 2],
    pub boundary: BoundaryDef,
}

impl ModelDef {
    pub fn from_model(model: &PhModel) -> Self {
        ModelDef {
            order: model.order(),
            state_dim: model.state_dim(),
            interval: [model.interval().0, model.interval().1],
            p: model
                .p_coeffs()
                .iter()
                .map(MatrixDef::from_matrix)
                .collect(),
            p0: Some(CoefficientDef::from_coefficient(model.p0())),
            hamiltonian: CoefficientDef::from_coefficient(model.hamiltonian()),
            h_bounds: [model.h_bounds().0, model.h_bounds().1],
            boundary: BoundaryDef::Ports {
                w_b: MatrixDef::from_matrix(model.w_b()),
                w_c: MatrixDef::from_matrix(model.w_c()),
            },
        }
    }

    pub fn build(&self) -> Result<PhModel> {
        let p: Vec<CMat> = self
            .p
            .iter()
            .map(|m| m.to_matrix())
            .collect::<Result<_>>()?;
        let p0 = match &self.p0 {
            Some(def) => def.to_coefficient()?,
            None => Coefficient::zero(self.state_dim),
        };
        let hamiltonian = self.hamiltonian.to_coefficient()?;
        let (w_b, w_c) = match &self.boundary {
            BoundaryDef::Ports { w_b, w_c } => (w_b.to_matrix()?, w_c.to_matrix()?),
            BoundaryDef::JetRows { b_rows, c_rows } => {
                let q = build_q(&p, self.state_dim, self.order)?;
                let nn = self.state_dim * self.order;
                let eye = CMat::identity(nn, nn);
                let r_ext = crate::linalg::block2x2(&q, &q.scale(-1.0), &eye, &eye)
                    .scale(1.0 / 2.0_f64.sqrt());
                let pm = PortMatrices {
                    q,
                    r_ext,
                    sigma: sigma_matrix(nn),
                };
                (
                    boundary_from_jet_rows(&b_rows.to_matrix()?, &pm)?,
                    boundary_from_jet_rows(&c_rows.to_matrix()?, &pm)?,
                )
            }
        };
        PhModel::new(
            self.order,
            self.state_dim,
            (self.interval[0], self.interval[1]),
            p,
            p0,
            hamiltonian,
            (self.h_bounds[0], self.h_bounds[1]),
            w_b,
            w_c,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GridDef {
    Nodes(usize),
    Spacing(f64),
}

impl GridDef {
    pub fn build(&self, interval: (f64, f64)) -> Result<Grid> {
        match *self {
            GridDef::Nodes(nodes) => Grid::with_nodes(interval, nodes),
            GridDef::Spacing(h) => Grid::with_spacing(interval, h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExosystemDef {
    pub freqs: Vec<f64>,
    pub e: MatrixDef,
    pub f: MatrixDef,
}

impl ExosystemDef {
    pub fn from_exosystem(exo: &Exosystem) -> Self {
        ExosystemDef {
            freqs: exo.freqs.clone(),
            e: MatrixDef::from_matrix(&exo.e),
            f: MatrixDef::from_matrix(&exo.f),
        }
    }

    pub fn build(&self) -> Result<Exosystem> {
        Exosystem::new(self.freqs.clone(), self.e.to_matrix()?, self.f.to_matrix()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GainRuleDef {
    #[default]
    Pseudoinverse,
    Custom(Vec<MatrixDef>),
}

impl GainRuleDef {
    pub fn build(&self) -> Result<GainRule> {
        Ok(match self {
            GainRuleDef::Pseudoinverse => GainRule::Pseudoinverse,
            GainRuleDef::Custom(blocks) => GainRule::Custom(
                blocks
                    .iter()
                    .map(|m| m.to_matrix())
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerOptions {
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub gain_rule: GainRuleDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDef {
    pub horizon: f64,
    pub dt: f64,
    pub v0: Vec<[f64; 2]>,
    /// Extended initial state; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<[f64; 2]>>,
}

/// Grids of multiplicative factors; the cartesian product is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationDef {
    #[serde(default = "unit_grid")]
    pub rho: Vec<f64>,
    #[serde(default = "unit_grid")]
    pub ei: Vec<f64>,
    #[serde(default = "unit_grid")]
    pub e_map: Vec<f64>,
    #[serde(default = "unit_grid")]
    pub f_map: Vec<f64>,
}

fn unit_grid() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelDef,
    pub grid: GridDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exosystem: Option<ExosystemDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationDef>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<PhModel> {
        self.model.build()
    }

    pub fn build_grid(&self) -> Result<Grid> {
        self.grid
            .build((self.model.interval[0], self.model.interval[1]))
    }

    pub fn build_exosystem(&self) -> Result<Exosystem> {
        self.exosystem
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no exosystem section".into()))?
            .build()
    }

    pub fn controller_options(&self) -> Result<&ControllerOptions> {
        self.controller
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no controller section".into()))
    }

    pub fn simulation(&self) -> Result<&SimulationDef> {
        self.simulation
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no simulation section".into()))
    }
}

/// Serialized controller: the internal-model data plus the gains, enough to
/// rebuild the `Controller` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerDef {
    pub freqs: Vec<f64>,
    pub kappa: f64,
    pub epsilon: f64,
    pub g2_blocks: Vec<MatrixDef>,
    pub k0_blocks: Vec<MatrixDef>,
}

impl ControllerDef {
    pub fn from_controller(ctrl: &Controller) -> Self {
        ControllerDef {
            freqs: ctrl.freqs.clone(),
            kappa: ctrl.kappa,
            epsilon: ctrl.epsilon,
            g2_blocks: ctrl.g2_blocks.iter().map(MatrixDef::from_matrix).collect(),
            k0_blocks: ctrl.k0_blocks.iter().map(MatrixDef::from_matrix).collect(),
        }
    }

    pub fn build(&self) -> Result<Controller> {
        Ok(Controller {
            freqs: self.freqs.clone(),
            g2_blocks: self
                .g2_blocks
                .iter()
                .map(|m| m.to_matrix())
                .collect::<Result<_>>()?,
            k0_blocks: self
                .k0_blocks
                .iter()
                .map(|m| m.to_matrix())
                .collect::<Result<_>>()?,
            kappa: self.kappa,
            epsilon: self.epsilon,
        })
    }
}

/// The built-in beam scenario: unit-coefficient beam, spacing 0.05,
/// the four-frequency exosystem, `kappa = 1`, `epsilon = 0.17`,
/// horizon 20 at `dt = 1e-3`, `v0 = (1, 1, 1, 1)`.
pub fn beam_scenario() -> Result<ScenarioConfig> {
    let model = scenarios::beam_model(1.0, 1.0)?;
    let exo = scenarios::beam_exosystem()?;
    Ok(ScenarioConfig {
        model: ModelDef::from_model(&model),
        grid: GridDef::Spacing(0.05),
        exosystem: Some(ExosystemDef::from_exosystem(&exo)),
        controller: Some(ControllerOptions {
            kappa: 1.0,
            epsilon: Some(0.17),
            epsilon_grid: None,
            gain_rule: GainRuleDef::Pseudoinverse,
        }),
        simulation: Some(SimulationDef {
            horizon: 20.0,
            dt: 1e-3,
            v0: vec![[1.0, 0.0]; 4],
            initial_state: None,
        }),
        perturbation: None,
    })
}

/// Built-in transport scenario (validation/transfer-function exercises only).
pub fn transport_scenario() -> Result<ScenarioConfig> {
    let model = scenarios::transport_model()?;
    Ok(ScenarioConfig {
        model: ModelDef::from_model(&model),
        grid: GridDef::Nodes(101),
        exosystem: None,
        controller: None,
        simulation: None,
        perturbation: None,
    })
}

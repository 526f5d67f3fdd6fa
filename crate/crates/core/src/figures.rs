//! The seven reference figure configurations and their data series.

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Result};
use crate::qchannel::DynamicalMap;
use crate::robustness::{sweep, SweepOptions, SweepRecord};
use crate::witness::teleport_fidelity;

/// Family parameters shared by all figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub lambda: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            omega: 5.0 * std::f64::consts::PI,
            alpha: 0.5,
        }
    }
}

impl FamilyParams {
    pub fn depolarizing(&self) -> DynamicalMap {
        DynamicalMap::Depolarizing { lambda: self.lambda }
    }

    pub fn depolarizing_indiv(&self) -> DynamicalMap {
        DynamicalMap::DepolarizingOscillating {
            lambda: self.lambda,
            omega: self.omega,
        }
    }

    pub fn amplitude_damping(&self) -> DynamicalMap {
        DynamicalMap::AmplitudeDamping {
            alpha: self.alpha,
            omega: self.omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub id: u8,
    pub map1: DynamicalMap,
    pub map2: DynamicalMap,
    /// Adds the teleportation columns `n_value`, `f_max` for `map2`.
    pub teleportation: bool,
}

pub const FIGURE_IDS: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];

pub fn figure_spec(id: u8, params: &FamilyParams) -> Result<FigureSpec> {
    let d1 = params.depolarizing();
    let d2 = params.depolarizing_indiv();
    let id_map = DynamicalMap::Identity;
    let (map1, map2) = match id {
        1 => (d1.clone(), d1),
        2 => (d2.clone(), d2),
        3 => (d1, d2),
        4 | 7 => (id_map, d2),
        5 => (id_map, params.amplitude_damping()),
        6 => (id_map, DynamicalMap::Eternal),
        _ => return domain_err(format!("no figure with id {id}; expected 1..=7")),
    };
    Ok(FigureSpec {
        id,
        map1,
        map2,
        teleportation: id == 7,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    #[serde(flatten)]
    pub record: SweepRecord,
    pub n_value: Option<f64>,
    pub f_max: Option<f64>,
}

pub fn run_figure(spec: &FigureSpec, t_grid: &[f64], opts: &SweepOptions) -> Result<Vec<FigureRow>> {
    let records = sweep(&spec.map1, &spec.map2, t_grid, opts)?;
    records
        .into_iter()
        .map(|record| {
            let (n_value, f_max) = if spec.teleportation {
                let tp = teleport_fidelity(&spec.map2, record.t)?;
                (Some(tp.n_value), Some(tp.f_max))
            } else {
                (None, None)
            };
            Ok(FigureRow {
                record,
                n_value,
                f_max,
            })
        })
        .collect()
}

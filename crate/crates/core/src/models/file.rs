//! JSON description of user-supplied models.
//!
//! Two shapes are accepted:
//!
//! ```json
//! {"dim": 2, "theta_grid": [0.0, 1.0], "states": [[[[1,0],[0,0]],[[0,0],[0,0]]], ...]}
//! {"builtin": "gaussian", "params": {"sigma2": 1.0, "truncation": 40}}
//! ```
//!
//! An explicit model lists one matrix per parameter value, each entry an
//! `[re, im]` pair. With `"theta_grid"` the domain is that finite set. With
//! `"domain": [lo, hi]` the states sit at equally spaced points of the closed
//! interval and are linearly interpolated in between.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gaussian::DEFAULT_TRUNCATION;
use super::{Domain, Interval, ParamPoint, ParametricModel, SingularKind};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, DensityMatrix, C64};

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta_grid: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
        states: Vec<RawMatrix>,
    },
}

pub const BUILTIN_NAMES: &[&str] = &[
    "concurrence",
    "discrete",
    "gaussian",
    "gaussian_scalar_singular",
    "gaussian_vector_singular",
];

fn to_matrix(raw: &RawMatrix, dim: usize, idx: usize) -> Result<CMatrix> {
    if raw.len() != dim || raw.iter().any(|row| row.len() != dim) {
        return Err(Error::ModelFile(format!("state {idx} is not {dim}x{dim}")));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        C64::new(raw[i][j][0], raw[i][j][1])
    }))
}

pub fn matrix_to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::ModelFile(format!(
            "parameter '{key}' = {v} is not finite"
        ))),
        None => Err(Error::ModelFile(format!("missing parameter '{key}'"))),
    }
}

fn truncation(params: &BTreeMap<String, f64>, default: usize) -> Result<usize> {
    let n = param(params, "truncation", Some(default as f64))?;
    if n < 1.0 || n.fract() != 0.0 {
        return Err(Error::ModelFile(format!(
            "truncation {n} is not a positive integer"
        )));
    }
    Ok(n as usize)
}

/// Builds a builtin model by name.
pub fn builtin_model(name: &str, params: &BTreeMap<String, f64>) -> Result<ParametricModel> {
    match name {
        "concurrence" => Ok(super::concurrence_model()),
        "discrete" => {
            let cut = param(params, "dim_cut", Some(24.0))?;
            if cut < 4.0 || cut.fract() != 0.0 {
                return Err(Error::ModelFile(format!(
                    "dim_cut {cut} must be an integer >= 4"
                )));
            }
            Ok(super::discrete_model(cut as usize))
        }
        "gaussian" => Ok(super::gaussian_model(
            param(params, "sigma2", None)?,
            truncation(params, DEFAULT_TRUNCATION)?,
        )),
        "gaussian_scalar_singular" => Ok(super::gaussian_singular_submodel(
            SingularKind::Scalar,
            param(params, "sigma2", None)?,
            truncation(params, 20)?,
        )),
        "gaussian_vector_singular" => Ok(super::gaussian_singular_submodel(
            SingularKind::Vector,
            param(params, "sigma2", None)?,
            truncation(params, 20)?,
        )),
        other => Err(Error::ModelFile(format!(
            "unknown builtin '{other}' (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

impl ModelFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Explicit file on a finite grid.
    pub fn from_grid(label: Option<String>, grid: Vec<f64>, states: &[DensityMatrix]) -> Self {
        ModelFile::Explicit {
            label,
            dim: states.first().map_or(0, |s| s.dim()),
            theta_grid: Some(grid),
            domain: None,
            states: states
                .iter()
                .map(|s| matrix_to_raw(s.as_matrix()))
                .collect(),
        }
    }

    pub fn build(&self) -> Result<ParametricModel> {
        match self {
            ModelFile::Builtin { builtin, params } => builtin_model(builtin, params),
            ModelFile::Explicit {
                label,
                dim,
                theta_grid,
                domain,
                states,
            } => {
                if *dim == 0 || states.is_empty() {
                    return Err(Error::ModelFile(
                        "explicit model needs dim > 0 and at least one state".into(),
                    ));
                }
                let mats = states
                    .iter()
                    .enumerate()
                    .map(|(i, raw)| {
                        DensityMatrix::from_clipped(to_matrix(raw, *dim, i)?)
                            .map_err(|e| Error::ModelFile(format!("state {i}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let label = label.clone().unwrap_or_else(|| "file".to_string());
                match (theta_grid, domain) {
                    (Some(grid), None) => explicit_grid_model(label, *dim, grid.clone(), mats),
                    (None, Some([lo, hi])) => interpolated_model(label, *dim, *lo, *hi, mats),
                    _ => Err(Error::ModelFile(
                        "exactly one of 'theta_grid' or 'domain' is required".into(),
                    )),
                }
            }
        }
    }
}

fn explicit_grid_model(
    label: String,
    dim: usize,
    grid: Vec<f64>,
    mats: Vec<DensityMatrix>,
) -> Result<ParametricModel> {
    if grid.len() != mats.len() {
        return Err(Error::ModelFile(format!(
            "{} grid points but {} states",
            grid.len(),
            mats.len()
        )));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::ModelFile("non-finite grid point".into()));
    }
    let lookup = grid.clone();
    Ok(ParametricModel::new(
        label,
        dim,
        Domain::Grid(grid),
        move |p: &ParamPoint| {
            let x = p.0[0];
            let idx = lookup
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
                .map(|(i, _)| i)
                .expect("grid is nonempty");
            Ok(mats[idx].clone())
        },
    ))
}

fn interpolated_model(
    label: String,
    dim: usize,
    lo: f64,
    hi: f64,
    mats: Vec<DensityMatrix>,
) -> Result<ParametricModel> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::ModelFile(format!("bad domain [{lo}, {hi}]")));
    }
    if mats.len() < 2 {
        return Err(Error::ModelFile(
            "an interval domain needs at least two states".into(),
        ));
    }
    let segments = (mats.len() - 1) as f64;
    Ok(ParametricModel::new(
        label,
        dim,
        Domain::Box(vec![Interval::closed(lo, hi)]),
        move |p: &ParamPoint| {
            let u = (p.0[0] - lo) / (hi - lo) * segments;
            let k = (u.floor() as usize).min(mats.len() - 2);
            let w = u - k as f64;
            if w == 0.0 {
                return Ok(mats[k].clone());
            }
            mats[k].mix(&mats[k + 1], 1.0 - w)
        },
    ))
}

/// Reads and builds a model from a JSON file.
pub fn load_model(path: &Path) -> Result<ParametricModel> {
    ModelFile::load(path)?.build()
}

//! Data behind the figures and the discrete-model table, as plain numeric tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    discrete_asymptotic_exponent, gaussian_2d_finite_delta_bound, gaussian_case2_bounds,
    gaussian_koike_bound, relative_entropy, BoundValue,
};
use crate::error::{Error, Result};
use crate::estimators::{discrete_optimal_observable, exact_bias_mse, observable_to_pvm};
use crate::models::{discrete_model, discrete_state, EstimandFunction, ParamPoint};

/// Column-labelled numeric table. Non-finite cells stand for `+inf` (bounds)
/// or an inadmissible point (NaN).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    TableDiscrete,
}

impl std::str::FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(FigureId::Fig1),
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            "table_discrete" => Ok(FigureId::TableDiscrete),
            other => Err(Error::InvalidInput(format!(
                "unknown figure '{other}' (expected fig1, fig2, fig3 or table_discrete)"
            ))),
        }
    }
}

/// `lo + k step` for `k = 0..count`, avoiding accumulated rounding.
pub fn linear_grid(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + k as f64 * step).collect()
}

fn bound_cell(v: BoundValue) -> f64 {
    v.as_f64()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Config {
    pub sigma2: f64,
    pub theta: f64,
    pub delta1: Vec<f64>,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Fig1Config {
            sigma2: 1.0,
            theta: 1.0,
            delta1: linear_grid(0.05, 0.05, 60),
        }
    }
}

/// Koike-type Gaussian bound against `delta1`.
pub fn fig1(cfg: &Fig1Config) -> Result<Table> {
    let rows = cfg
        .delta1
        .par_iter()
        .map(|&d| Ok(vec![d, gaussian_koike_bound(cfg.theta, d, cfg.sigma2)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(&["delta1", "bound"], rows))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Config {
    pub t2: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Fig2Config {
            t2: linear_grid(0.0, 0.02, 51),
            sigma2: vec![0.5, 1.0, 2.0, 5.0, 50.0],
        }
    }
}

/// RLD trace bound on the vector singular submodel against `t2` and `sigma2`.
pub fn fig2(cfg: &Fig2Config) -> Result<Table> {
    let points: Vec<(f64, f64)> = cfg
        .sigma2
        .iter()
        .flat_map(|&s| cfg.t2.iter().map(move |&t| (t, s)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(t, s)| Ok(vec![t, s, bound_cell(gaussian_case2_bounds(t, s)?.0)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(&["t2", "sigma2", "rld_bound"], rows))
}

/// Argmax of `rld_bound` over `t2` at the given `sigma2` (first maximiser).
pub fn fig2_argmax(table: &Table, sigma2: f64) -> Option<f64> {
    table
        .rows
        .iter()
        .filter(|r| r[1] == sigma2)
        .fold(None, |best: Option<(f64, f64)>, r| match best {
            Some((_, v)) if v >= r[2] => best,
            _ => Some((r[0], r[2])),
        })
        .map(|(t, _)| t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Config {
    pub sigma2: f64,
    pub theta: Vec<f64>,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Fig3Config {
            sigma2: 1.0,
            theta: linear_grid(-2.0, 0.05, 40),
        }
    }
}

/// Finite-step RLD bound with steps `2|theta^i|` (a), the `delta -> 0` value
/// `2 sigma2 + 1` (b) and the value at the origin `4 sigma2 + 2` (c).
pub fn fig3(cfg: &Fig3Config) -> Result<Table> {
    let points: Vec<(f64, f64)> = cfg
        .theta
        .iter()
        .flat_map(|&a| cfg.theta.iter().map(move |&b| (a, b)))
        .collect();
    let b = 2.0 * cfg.sigma2 + 1.0;
    let c = 4.0 * cfg.sigma2 + 2.0;
    let rows = points
        .par_iter()
        .map(|&(t1, t2)| {
            let a = match gaussian_2d_finite_delta_bound(t1, t2, -t1, -t2, cfg.sigma2) {
                Ok(v) => v,
                Err(Error::Inadmissible(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            Ok(vec![t1, t2, a, b, c])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(
        &["theta1", "theta2", "bound_a", "bound_b", "bound_c"],
        rows,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTableConfig {
    pub thetas: Vec<usize>,
    pub dim_cut: usize,
}

impl Default for DiscreteTableConfig {
    fn default() -> Self {
        DiscreteTableConfig {
            thetas: (2..=10).collect(),
            dim_cut: 24,
        }
    }
}

/// Closed-form MSE of the block estimator on the discrete family.
pub fn discrete_closed_form_mse(theta: usize) -> f64 {
    let th = theta as f64;
    let base = th * th / 3.0 - 7.0 / 12.0;
    if theta % 2 == 1 {
        base + 1.0 / (2.0 * th)
    } else {
        base
    }
}

pub fn table_discrete(cfg: &DiscreteTableConfig) -> Result<Table> {
    let model = discrete_model(cfg.dim_cut);
    let pvm = observable_to_pvm(&discrete_optimal_observable(cfg.dim_cut)?);
    let g = EstimandFunction::coordinate(0);
    let rows = cfg
        .thetas
        .iter()
        .map(|&theta| {
            if theta < 2 {
                return Err(Error::InvalidInput("table needs theta >= 2".into()));
            }
            let th = theta as f64;
            let exponent = discrete_asymptotic_exponent(&model, th, -1.0)?;
            let d = relative_entropy(
                &discrete_state(theta - 1, cfg.dim_cut)?,
                &discrete_state(theta, cfg.dim_cut)?,
            )?;
            let exact = exact_bias_mse(&model, &ParamPoint::scalar(th), &g, &pvm)?;
            Ok(vec![
                th,
                exponent,
                bound_cell(d),
                discrete_closed_form_mse(theta),
                exact.mse,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(
        &[
            "theta",
            "exponent",
            "relative_entropy",
            "closed_form_mse",
            "exact_mse",
        ],
        rows,
    ))
}

pub fn reproduce(id: FigureId) -> Result<Table> {
    match id {
        FigureId::Fig1 => fig1(&Fig1Config::default()),
        FigureId::Fig2 => fig2(&Fig2Config::default()),
        FigureId::Fig3 => fig3(&Fig3Config::default()),
        FigureId::TableDiscrete => table_discrete(&DiscreteTableConfig::default()),
    }
}

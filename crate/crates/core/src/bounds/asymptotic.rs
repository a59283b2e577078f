//! Many-copy quantities: tensor-power information, the error exponent on
//! discrete parameter sets, relative entropy, and the continuous asymptotic bound.

use serde::{Deserialize, Serialize};

use super::{
    inverse_weighted_square_trace, ratio_value, BoundKind, BoundReport, BoundValue, Diagnostics,
    Flavor,
};
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian, DensityMatrix, HermMatrix};
use crate::models::{DerivativeOpts, EstimandFunction, ParamPoint, ParametricModel, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    SqrtN,
    Exponential,
}

/// Rate `c_n`, local scale `h` and copy number `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSpec {
    pub rate: RateKind,
    pub h: f64,
    pub n: u64,
}

impl AsymptoticSpec {
    pub fn new(rate: RateKind, h: f64, n: u64) -> Result<Self> {
        if n == 0 || h == 0.0 || !h.is_finite() {
            return Err(Error::InvalidInput(
                "need n >= 1 and finite nonzero h".into(),
            ));
        }
        Ok(AsymptoticSpec { rate, h, n })
    }

    /// The per-copy step: `h / sqrt(n)` on the square-root scale, `h` on
    /// discrete parameter sets.
    pub fn delta(&self) -> f64 {
        match self.rate {
            RateKind::SqrtN => self.h / (self.n as f64).sqrt(),
            RateKind::Exponential => self.h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorPowerInfo {
    Value(f64),
    /// Natural log of the value, used once the value would exceed `1e300`.
    Log(f64),
}

impl TensorPowerInfo {
    pub fn ln(self) -> f64 {
        match self {
            TensorPowerInfo::Value(v) => v.ln(),
            TensorPowerInfo::Log(l) => l,
        }
    }
}

const LOG_SWITCH: f64 = 1e300;

/// RLD difference information of `n` copies, `((1 + delta^2 J1)^n - 1) / delta^2`.
pub fn tensor_power_rld_info(j1: f64, n: u64, delta: f64) -> Result<TensorPowerInfo> {
    if n == 0 || delta == 0.0 || !(j1 >= 0.0) {
        return Err(Error::InvalidInput(
            "need n >= 1, delta != 0 and J1 >= 0".into(),
        ));
    }
    if n == 1 {
        return Ok(TensorPowerInfo::Value(j1));
    }
    let d2 = delta * delta;
    let ln_pow = n as f64 * (d2 * j1).ln_1p();
    if ln_pow > LOG_SWITCH.ln() {
        // ln((e^L - 1)/d2) = L + ln(1 - e^{-L}) - ln d2
        Ok(TensorPowerInfo::Log(
            ln_pow + (-(-ln_pow).exp()).ln_1p() - d2.ln(),
        ))
    } else {
        Ok(TensorPowerInfo::Value(ln_pow.exp_m1() / d2))
    }
}

/// Error-exponent rate `log(1 + delta^2 J^{R,1}) = log Tr rho_theta^{-1} rho_{theta+delta}^2`
/// between adjacent points of a discrete parameter set.
pub fn discrete_asymptotic_exponent(
    model: &ParametricModel,
    theta: f64,
    delta: f64,
) -> Result<f64> {
    let domain = model.domain();
    if !domain.is_discrete() || model.param_dim() != 1 {
        return Err(Error::InvalidInput(
            "exponent needs a scalar model on a discrete set".into(),
        ));
    }
    let p = ParamPoint::scalar(theta);
    let q = ParamPoint::scalar(theta + delta);
    if !domain.contains(&p) || !domain.contains(&q) {
        return Err(Error::Domain {
            model: model.label().to_string(),
            point: vec![theta, theta + delta],
        });
    }
    if delta == 0.0 || !domain.adjacent(theta, theta + delta) {
        return Err(Error::InvalidInput(format!(
            "{theta} and {} are not adjacent",
            theta + delta
        )));
    }
    Ok(inverse_weighted_square_trace(model, &p, delta)?.ln())
}

/// Weight of `rho` outside the support of `sigma` above which `D = +inf`.
const SUPPORT_LEAK: f64 = 1e-10;

/// Quantum relative entropy `Tr rho (log rho - log sigma)`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<BoundValue> {
    if rho.dim() != sigma.dim() {
        return Err(Error::InvalidInput(
            "states have different dimensions".into(),
        ));
    }
    let er = eig_hermitian(&rho.to_herm());
    let es = eig_hermitian(&sigma.to_herm());
    let tol = sigma.support_tol();
    let mut acc: f64 = er
        .values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum();
    let rho_in_sigma = es.vectors.adjoint() * rho.as_matrix() * &es.vectors;
    for (k, &mu) in es.values.iter().enumerate() {
        let w = rho_in_sigma[(k, k)].re;
        if mu > tol {
            acc -= w * mu.ln();
        } else if w > SUPPORT_LEAK {
            return Ok(BoundValue::Infinite);
        }
    }
    Ok(BoundValue::Finite(acc.max(0.0)))
}

/// Right-hand side `(g'_t)^2 / J^{R,t}` of the continuous asymptotic bound,
/// with `rho'_t = t rho'_+ + (1 - t) rho'_-` and `g'_t` built the same way
/// from one-sided derivatives.
pub fn asymptotic_continuous_bound(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    t: f64,
    opts: &DerivativeOpts,
) -> Result<BoundReport> {
    if model.param_dim() != 1 || !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(
            "scalar model and t in [0, 1] required".into(),
        ));
    }
    let right = model.one_sided_derivative(p, 0, Side::Right, opts)?;
    let left = model.one_sided_derivative(p, 0, Side::Left, opts)?;
    let d = &(&right * t) + &(&left * (1.0 - t));
    let gt = t * g.one_sided_derivative(p, 0, Side::Right, opts)
        + (1.0 - t) * g.one_sided_derivative(p, 0, Side::Left, opts);
    let rho = model.state(p)?;
    let spec = rho.spectrum();
    let l = spec.rld_in_eigenbasis(&HermMatrix::hermitian_part(d.as_matrix()))?;
    let j = spec.rld_gram(&[l])[(0, 0)].re.max(0.0);
    Ok(BoundReport {
        kind: BoundKind::AsymptCont,
        flavor: Some(Flavor::Rld),
        value: ratio_value(gt, j),
        theta: p.0.clone(),
        step: None,
        order: None,
        weight: None,
        diagnostics: Diagnostics {
            information: Some(j),
            numerator: Some(gt),
            ..Default::default()
        },
    })
}

//! Information quantities and mean-square-error lower bounds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    pinv_with_rank, singular_values, spabs, to_complex, CMatrix, HermMatrix, Spectrum, C64,
};
use crate::models::{
    kth_difference, state_rate, DifferenceSpec, EstimandFunction, ParamPoint, ParametricModel,
    StepSpec,
};

pub mod asymptotic;
pub mod gaussian;

pub use asymptotic::{
    asymptotic_continuous_bound, discrete_asymptotic_exponent, relative_entropy,
    tensor_power_rld_info, AsymptoticSpec, RateKind, TensorPowerInfo,
};
pub use gaussian::{
    gaussian_2d_finite_delta_bound, gaussian_case2_bounds, gaussian_koike_bound,
    gaussian_koike_matrix_bound, gaussian_overlap_trace,
};

/// Relative singular-value cutoff for Gram and information matrix inverses.
pub const PINV_TOL: f64 = 1e-10;
/// Information values at or below this are treated as zero.
const ZERO_INFO: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Sld,
    Rld,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Qcr,
    Qhcrk,
    Qk,
    Multi,
    AsymptDiscrete,
    AsymptCont,
}

/// A bound value that may be `+inf`, kept as an explicit variant. Serialized
/// as a plain number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "BoundValueRepr", try_from = "BoundValueRepr")]
pub enum BoundValue {
    Finite(f64),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BoundValueRepr {
    Number(f64),
    Text(String),
}

impl From<BoundValue> for BoundValueRepr {
    fn from(v: BoundValue) -> Self {
        match v {
            BoundValue::Finite(x) => BoundValueRepr::Number(x),
            BoundValue::Infinite => BoundValueRepr::Text("inf".into()),
        }
    }
}

impl TryFrom<BoundValueRepr> for BoundValue {
    type Error = String;

    fn try_from(r: BoundValueRepr) -> std::result::Result<Self, String> {
        match r {
            BoundValueRepr::Number(x) => Ok(BoundValue::Finite(x)),
            BoundValueRepr::Text(t) if t == "inf" => Ok(BoundValue::Infinite),
            BoundValueRepr::Text(t) => {
                Err(format!("bound value '{t}' is neither a number nor \"inf\""))
            }
        }
    }
}

impl BoundValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, BoundValue::Infinite)
    }

    /// Ordering helper: `Infinite` maps to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub information: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pinv_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_dim: Option<usize>,
    /// Ratio of extreme retained singular values of the inverted matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imaginary_correction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flavor: Option<Flavor>,
    pub value: BoundValue,
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<StepSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<Vec<f64>>>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoScalar {
    pub value: f64,
    pub flavor: Flavor,
    pub step: StepSpec,
}

/// Information matrix; entry `(i, j)` is `Tr rho L_j L_i^dagger` (RLD) or
/// `Re Tr rho L_i L_j` (SLD).
#[derive(Clone, Debug, PartialEq)]
pub struct InfoMatrix {
    pub entries: CMatrix,
    pub flavor: Flavor,
}

/// Gram matrix of difference logarithmic derivatives together with the
/// difference vector of the estimand.
#[derive(Clone, Debug, PartialEq)]
pub struct KoikeMatrix {
    pub r: usize,
    pub entries: CMatrix,
    pub v: Vec<f64>,
    pub flavor: Flavor,
}

/// Logarithmic derivatives of `ds` at `rho`, in the support eigenbasis, and
/// their Gram matrix.
fn gram(spec: &Spectrum, ds: &[HermMatrix], flavor: Flavor) -> Result<CMatrix> {
    match flavor {
        Flavor::Sld => {
            let ls = ds
                .iter()
                .map(|d| spec.sld_in_eigenbasis(d))
                .collect::<Result<Vec<_>>>()?;
            Ok(to_complex(&spec.sld_gram(&ls)))
        }
        Flavor::Rld => {
            let ls = ds
                .iter()
                .map(|d| spec.rld_in_eigenbasis(d))
                .collect::<Result<Vec<_>>>()?;
            Ok(spec.rld_gram(&ls))
        }
    }
}

pub fn info_scalar(
    model: &ParametricModel,
    p: &ParamPoint,
    step: &StepSpec,
    coord: usize,
    flavor: Flavor,
) -> Result<InfoScalar> {
    let rho = model.state(p)?;
    let d = state_rate(model, p, step, coord)?;
    let k = gram(&rho.spectrum(), &[d], flavor)?;
    Ok(InfoScalar {
        value: k[(0, 0)].re.max(0.0),
        flavor,
        step: step.clone(),
    })
}

pub fn info_matrix(
    model: &ParametricModel,
    p: &ParamPoint,
    step: &StepSpec,
    flavor: Flavor,
) -> Result<InfoMatrix> {
    let rho = model.state(p)?;
    let ds = (0..model.param_dim())
        .map(|c| state_rate(model, p, step, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(InfoMatrix {
        entries: gram(&rho.spectrum(), &ds, flavor)?,
        flavor,
    })
}

/// `(Tr rho_theta^{-1} rho_{theta+delta}^2 - 1) / delta^2` for scalar models.
pub fn rld_info_via_trace(
    model: &ParametricModel,
    p: &ParamPoint,
    delta: f64,
) -> Result<InfoScalar> {
    if model.param_dim() != 1 || delta == 0.0 {
        return Err(Error::InvalidInput(
            "scalar model and nonzero delta required".into(),
        ));
    }
    let tr = inverse_weighted_square_trace(model, p, delta)?;
    Ok(InfoScalar {
        value: ((tr - 1.0) / (delta * delta)).max(0.0),
        flavor: Flavor::Rld,
        step: StepSpec::Difference(DifferenceSpec::scalar(delta, 1.0)?),
    })
}

/// `Tr rho_theta^{-1} rho_{theta+delta}^2` on the support of `rho_theta`.
pub(crate) fn inverse_weighted_square_trace(
    model: &ParametricModel,
    p: &ParamPoint,
    delta: f64,
) -> Result<f64> {
    let rho = model.state(p)?;
    let sigma = model.state(&p.shifted(0, delta))?;
    let spec = rho.spectrum();
    let s = spec.restrict(sigma.as_matrix()).map_err(|_| {
        Error::SupportMismatch(format!(
            "state at {:?} is not supported inside the support of the state at {:?}",
            p.shifted(0, delta).0,
            p.0
        ))
    })?;
    let lam = spec.support_eigenvalues();
    let mut tr = 0.0;
    for (i, l) in lam.iter().enumerate() {
        let row: f64 = (0..lam.len()).map(|j| s[(i, j)].norm_sqr()).sum();
        tr += row / l;
    }
    Ok(tr)
}

fn ratio_value(numerator: f64, info: f64) -> BoundValue {
    if info <= ZERO_INFO {
        if numerator.abs() <= ZERO_INFO {
            BoundValue::Finite(0.0)
        } else {
            BoundValue::Infinite
        }
    } else {
        BoundValue::Finite(numerator * numerator / info)
    }
}

/// `(Delta g)^2 / J` for a scalar model. A derivative step gives the
/// Cramer-Rao bound, a difference step the Hammersley-Chapman-Robbins-Kshirsagar bound.
pub fn qhcrk_bound(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    step: &StepSpec,
    flavor: Flavor,
) -> Result<BoundReport> {
    if model.param_dim() != 1 {
        return Err(Error::InvalidInput(
            "scalar bound needs a one-parameter model".into(),
        ));
    }
    let info = info_scalar(model, p, step, 0, flavor)?;
    let num = g.rate(p, step, 0);
    let kind = match step {
        StepSpec::Derivative(_) => BoundKind::Qcr,
        StepSpec::Difference(_) => BoundKind::Qhcrk,
    };
    Ok(BoundReport {
        kind,
        flavor: Some(flavor),
        value: ratio_value(num, info.value),
        theta: p.0.clone(),
        step: Some(step.clone()),
        order: None,
        weight: None,
        diagnostics: Diagnostics {
            information: Some(info.value),
            numerator: Some(num),
            ..Default::default()
        },
    })
}

/// `v^dagger K^+ v` with its pseudo-inverse rank and condition number.
fn quadratic_form_pinv(k: &CMatrix, v: &[f64]) -> (f64, usize, f64) {
    let (kp, rank) = pinv_with_rank(k, PINV_TOL);
    let vc = nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)));
    let val = (vc.adjoint() * kp * &vc)[(0, 0)].re;
    let sv = singular_values(k);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min_kept = sv
        .iter()
        .cloned()
        .filter(|&s| s > PINV_TOL * max)
        .fold(f64::INFINITY, f64::min);
    (
        val,
        rank,
        if rank > 0 {
            max / min_kept
        } else {
            f64::INFINITY
        },
    )
}

/// Gram matrix of the `k`-th difference logarithmic derivatives, `k = 1..=r`.
pub fn koike_matrix(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    delta: f64,
    r: usize,
    flavor: Flavor,
) -> Result<KoikeMatrix> {
    if r == 0 {
        return Err(Error::InvalidInput("order r must be at least 1".into()));
    }
    let rho = model.state(p)?;
    let ds = (1..=r)
        .map(|k| kth_difference(model, p, delta, k))
        .collect::<Result<Vec<_>>>()?;
    let v = (1..=r).map(|k| g.kth_difference(p, delta, k)).collect();
    Ok(KoikeMatrix {
        r,
        entries: gram(&rho.spectrum(), &ds, flavor)?,
        v,
        flavor,
    })
}

/// Koike bound `v^T K^+ v` built from differences of orders `1..=r`.
pub fn qk_bound(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    delta: f64,
    r: usize,
    flavor: Flavor,
) -> Result<BoundReport> {
    let km = koike_matrix(model, p, g, delta, r, flavor)?;
    let (val, rank, cond) = quadratic_form_pinv(&km.entries, &km.v);
    Ok(BoundReport {
        kind: BoundKind::Qk,
        flavor: Some(flavor),
        value: BoundValue::Finite(val.max(0.0)),
        theta: p.0.clone(),
        step: Some(StepSpec::Difference(DifferenceSpec::scalar(delta, 1.0)?)),
        order: Some(r),
        weight: None,
        diagnostics: Diagnostics {
            pinv_rank: Some(rank),
            matrix_dim: Some(r),
            condition: Some(cond),
            support_dim: Some(model.state(p)?.spectrum().support_dim()),
            ..Default::default()
        },
    })
}

/// Koike-type bound from an arbitrary list of steps of a scalar model: the Gram
/// matrix of the logarithmic derivatives of each rate, with `v_i` the matching
/// rate of `g`.
pub fn multi_step_bound(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    steps: &[StepSpec],
    flavor: Flavor,
) -> Result<BoundReport> {
    if model.param_dim() != 1 || steps.is_empty() {
        return Err(Error::InvalidInput(
            "scalar model and at least one step required".into(),
        ));
    }
    let rho = model.state(p)?;
    let ds = steps
        .iter()
        .map(|s| state_rate(model, p, s, 0))
        .collect::<Result<Vec<_>>>()?;
    let v: Vec<f64> = steps.iter().map(|s| g.rate(p, s, 0)).collect();
    let k = gram(&rho.spectrum(), &ds, flavor)?;
    let (val, rank, cond) = quadratic_form_pinv(&k, &v);
    Ok(BoundReport {
        kind: BoundKind::Qk,
        flavor: Some(flavor),
        value: BoundValue::Finite(val.max(0.0)),
        theta: p.0.clone(),
        step: None,
        order: Some(steps.len()),
        weight: None,
        diagnostics: Diagnostics {
            pinv_rank: Some(rank),
            matrix_dim: Some(steps.len()),
            condition: Some(cond),
            ..Default::default()
        },
    })
}

/// Weighted-trace bound `Sp G J^{-1}` (SLD) or
/// `Sp G J^{-1} + Spabs Im G J^{-1}` (RLD) for `g(theta) = theta`.
pub fn multiparam_bound(
    model: &ParametricModel,
    p: &ParamPoint,
    weight: &DMatrix<f64>,
    step: &StepSpec,
    flavor: Flavor,
) -> Result<BoundReport> {
    let m = model.param_dim();
    if weight.nrows() != m || weight.ncols() != m {
        return Err(Error::InvalidInput(format!("weight must be {m}x{m}")));
    }
    if (weight - weight.transpose()).amax() > 1e-12 * weight.amax().max(1.0) {
        return Err(Error::InvalidInput(
            "weight matrix must be symmetric".into(),
        ));
    }
    let info = info_matrix(model, p, step, flavor)?;
    let (jinv, rank) = pinv_with_rank(&info.entries, PINV_TOL);
    let gj = to_complex(weight) * jinv;
    let sp = gj.trace().re;
    let correction = match flavor {
        Flavor::Sld => 0.0,
        Flavor::Rld => spabs(&gj.map(|z| C64::new(z.im, 0.0))),
    };
    Ok(BoundReport {
        kind: BoundKind::Multi,
        flavor: Some(flavor),
        value: BoundValue::Finite(sp + correction),
        theta: p.0.clone(),
        step: Some(step.clone()),
        order: None,
        weight: Some(
            (0..m)
                .map(|i| weight.row(i).iter().cloned().collect())
                .collect(),
        ),
        diagnostics: Diagnostics {
            pinv_rank: Some(rank),
            matrix_dim: Some(m),
            imaginary_correction: Some(correction),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{concurrence_model, discrete_model};

    #[test]
    fn concurrence_scalar_bounds() {
        let m = concurrence_model();
        let p = ParamPoint::scalar(0.0);
        for flavor in [Flavor::Sld, Flavor::Rld] {
            let step = StepSpec::Difference(DifferenceSpec::scalar(0.5, 1.0).unwrap());
            let r = qhcrk_bound(&m, &p, &EstimandFunction::abs(), &step, flavor).unwrap();
            assert!((r.value.as_f64() - 1.0).abs() < 1e-12);
            let c = qhcrk_bound(&m, &p, &EstimandFunction::constant(2.0), &step, flavor).unwrap();
            assert_eq!(c.value, BoundValue::Finite(0.0));
        }
    }

    #[test]
    fn zero_information_is_flagged() {
        let m = ParametricModel::new(
            "const",
            2,
            crate::models::Domain::Box(vec![crate::models::Interval::real_line()]),
            |_| Ok(crate::matcore::DensityMatrix::maximally_mixed(2)),
        );
        let step = StepSpec::Difference(DifferenceSpec::scalar(0.1, 1.0).unwrap());
        let r = qhcrk_bound(
            &m,
            &ParamPoint::scalar(0.0),
            &EstimandFunction::coordinate(0),
            &step,
            Flavor::Sld,
        )
        .unwrap();
        assert!(r.value.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"value\":\"inf\""));
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert!(back.value.is_infinite());
    }

    #[test]
    fn bound_value_is_a_plain_number_in_json() {
        let v = BoundValue::Finite(0.1 + 0.2);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "0.30000000000000004");
        assert_eq!(serde_json::from_str::<BoundValue>(&json).unwrap(), v);
        assert!(serde_json::from_str::<BoundValue>("\"nope\"").is_err());
    }

    #[test]
    fn trace_form_matches_concurrence_value() {
        let m = concurrence_model();
        let j = rld_info_via_trace(&m, &ParamPoint::scalar(0.0), 0.5).unwrap();
        assert!((j.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn koike_order_one_is_forward_qhcrk() {
        let m = discrete_model(16);
        let p = ParamPoint::scalar(5.0);
        let g = EstimandFunction::coordinate(0);
        let qk = qk_bound(&m, &p, &g, -1.0, 1, Flavor::Sld).unwrap();
        let step = StepSpec::Difference(DifferenceSpec::scalar(-1.0, 1.0).unwrap());
        let h = qhcrk_bound(&m, &p, &g, &step, Flavor::Sld).unwrap();
        assert!((qk.value.as_f64() - h.value.as_f64()).abs() < 1e-12);
    }
}

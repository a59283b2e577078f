//! Displaced thermal (Gaussian) states of one bosonic mode in a truncated Fock
//! basis, the two-mode singular submodels built from them, and the closed-form
//! information constants of the two-parameter Gaussian family.
//!
//! Conventions: `a = (Q + iP)/sqrt(2)`, `[Q, P] = i`. The parameter
//! `(theta1, theta2)` is the mean of `(P, Q)`, so the state is the thermal state
//! displaced by `alpha = (theta2 + i theta1)/sqrt(2)`. The thermal occupation is
//! `nbar = sigma2 - 1/2`, which makes both quadrature variances equal `sigma2`.

use serde::{Deserialize, Serialize};

use super::{Domain, Interval, ParamPoint, ParametricModel};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, DensityMatrix, HermMatrix, C64};

pub const DEFAULT_TRUNCATION: usize = 60;
pub const MIN_TRUNCATION: usize = 8;
pub const TAIL_LIMIT: f64 = 1e-6;
/// Extra Fock levels summed over when forming `D(alpha) rho_th D(alpha)^dagger`.
const INNER_PAD: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub sigma2: f64,
    pub mean: (f64, f64),
    pub truncation: usize,
}

impl GaussianParams {
    pub fn new(sigma2: f64, mean: (f64, f64), truncation: usize) -> Self {
        GaussianParams {
            sigma2,
            mean,
            truncation,
        }
    }
}

/// `J = sigma2 / (sigma2^2 - 1/4)` and `A = (1/2) / (sigma2^2 - 1/4)`: the
/// diagonal and off-diagonal magnitude of the right-logarithmic-derivative
/// information matrix `[[J, -iA], [iA, J]]` of the two-parameter family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianInfoConstants {
    pub j: f64,
    pub a: f64,
}

impl GaussianInfoConstants {
    pub fn new(sigma2: f64) -> Result<Self> {
        let denom = sigma2 * sigma2 - 0.25;
        if !(sigma2 > 0.5) || denom <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma2 = {sigma2}: RLD information diverges for sigma2 <= 1/2"
            )));
        }
        Ok(GaussianInfoConstants {
            j: sigma2 / denom,
            a: 0.5 / denom,
        })
    }

    /// `[[J, -iA], [iA, J]]`.
    pub fn rld_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(self.j, 0.0),
                C64::new(0.0, -self.a),
                C64::new(0.0, self.a),
                C64::new(self.j, 0.0),
            ],
        )
    }
}

/// Ratio `c` of the thermal distribution `(1 - c) c^n` with mean occupation
/// `sigma2 - 1/2`.
pub fn thermal_ratio(sigma2: f64) -> f64 {
    let nbar = sigma2 - 0.5;
    nbar / (nbar + 1.0)
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence.
fn laguerre(n: usize, a: usize, x: f64) -> f64 {
    let a = a as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Matrix elements `<m|D(alpha)|k>` for `m < rows`, `k < cols`.
pub fn displacement_matrix(alpha: C64, rows: usize, cols: usize) -> CMatrix {
    let lf = log_factorials(rows.max(cols));
    let x = alpha.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let minus_conj = -alpha.conj();
    CMatrix::from_fn(rows, cols, |m, k| {
        let (lo, hi) = if m >= k { (k, m) } else { (m, k) };
        let d = hi - lo;
        let base = if m >= k { alpha } else { minus_conj };
        let pow = if d == 0 {
            C64::new(1.0, 0.0)
        } else if base.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        } else {
            base.powu(d as u32)
        };
        let ratio = (0.5 * (lf[lo] - lf[hi])).exp();
        pow * (ratio * gauss * laguerre(lo, d, x))
    })
}

/// Truncated state together with the weight discarded by the truncation.
#[derive(Clone, Debug)]
pub struct TruncatedState {
    pub rho: DensityMatrix,
    pub tail: f64,
}

/// Displaced thermal state on Fock levels `0..=N`, renormalized to unit trace.
pub fn gaussian_fock_state(params: &GaussianParams) -> Result<TruncatedState> {
    let GaussianParams {
        sigma2,
        mean,
        truncation,
    } = *params;
    if truncation < MIN_TRUNCATION {
        return Err(Error::InvalidInput(format!(
            "truncation {truncation} below minimum {MIN_TRUNCATION}"
        )));
    }
    if !(sigma2 >= 0.5) || !sigma2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "sigma2 = {sigma2} must be >= 1/2"
        )));
    }
    if !mean.0.is_finite() || !mean.1.is_finite() {
        return Err(Error::InvalidInput("non-finite mean".into()));
    }
    let c = thermal_ratio(sigma2);
    let rows = truncation + 1;
    let inner = rows + INNER_PAD;
    let alpha = C64::new(mean.1, mean.0) / std::f64::consts::SQRT_2;
    let disp = displacement_matrix(alpha, rows, inner);
    let weights: Vec<f64> = (0..inner).map(|k| (1.0 - c) * c.powi(k as i32)).collect();
    let mut scaled = disp.clone();
    for (k, w) in weights.iter().enumerate() {
        let mut col = scaled.column_mut(k);
        col *= C64::new(*w, 0.0);
    }
    let rho = scaled * disp.adjoint();
    let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    let tail = (1.0 - trace).max(0.0);
    if tail > TAIL_LIMIT {
        return Err(Error::TruncationTooSmall {
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let rho = HermMatrix::hermitian_part(&(rho * C64::new(1.0 / trace, 0.0)));
    Ok(TruncatedState {
        rho: DensityMatrix::from_trusted(rho.into_matrix()),
        tail,
    })
}

fn mode_state(sigma2: f64, mean: (f64, f64), truncation: usize) -> Result<DensityMatrix> {
    Ok(gaussian_fock_state(&GaussianParams::new(sigma2, mean, truncation))?.rho)
}

/// Truncated quadratures `(P, Q)` on Fock levels `0..=N`.
pub fn quadratures(truncation: usize) -> (HermMatrix, HermMatrix) {
    let n = truncation + 1;
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &ad) * C64::new(s, 0.0);
    let p = (&a - &ad) * C64::new(0.0, -s);
    (
        HermMatrix::hermitian_part(&p),
        HermMatrix::hermitian_part(&q),
    )
}

/// Single-mode two-parameter family `theta -> rho^G_theta` on `R^2`.
pub fn gaussian_model(sigma2: f64, truncation: usize) -> ParametricModel {
    ParametricModel::new(
        format!("gaussian(sigma2={sigma2})"),
        truncation + 1,
        Domain::Box(vec![Interval::real_line(), Interval::real_line()]),
        move |p: &ParamPoint| mode_state(sigma2, (p.0[0], p.0[1]), truncation),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    Scalar,
    Vector,
}

/// Two-mode piecewise submodels with a kink at the origin.
///
/// Scalar kind: `rho_0 (x) rho_(theta,0)` for `theta < 0` and
/// `rho_(theta,0) (x) rho_0` for `theta >= 0`.
/// Vector kind: the displacement is split between the modes by quadrant,
/// `theta1 < 0, theta2 < 0 -> rho_0 (x) rho_(theta1,theta2)`,
/// `theta1 >= 0, theta2 < 0 -> rho_(theta1,0) (x) rho_(0,theta2)`,
/// `theta1 < 0, theta2 >= 0 -> rho_(0,theta2) (x) rho_(theta1,0)`,
/// `theta1 >= 0, theta2 >= 0 -> rho_(theta1,theta2) (x) rho_0`.
/// Seams use the nonnegative branch; the branches agree there.
pub fn gaussian_singular_submodel(
    kind: SingularKind,
    sigma2: f64,
    truncation: usize,
) -> ParametricModel {
    let dim = (truncation + 1) * (truncation + 1);
    match kind {
        SingularKind::Scalar => ParametricModel::new(
            format!("gaussian-scalar-singular(sigma2={sigma2})"),
            dim,
            Domain::Box(vec![Interval::real_line()]),
            move |p: &ParamPoint| {
                let th = p.0[0];
                let zero = mode_state(sigma2, (0.0, 0.0), truncation)?;
                let moved = mode_state(sigma2, (th, 0.0), truncation)?;
                Ok(if th >= 0.0 {
                    moved.kron(&zero)
                } else {
                    zero.kron(&moved)
                })
            },
        ),
        SingularKind::Vector => ParametricModel::new(
            format!("gaussian-vector-singular(sigma2={sigma2})"),
            dim,
            Domain::Box(vec![Interval::real_line(), Interval::real_line()]),
            move |p: &ParamPoint| {
                let (t1, t2) = (p.0[0], p.0[1]);
                let st = |m: (f64, f64)| mode_state(sigma2, m, truncation);
                let (first, second) = match (t1 >= 0.0, t2 >= 0.0) {
                    (true, true) => (st((t1, t2))?, st((0.0, 0.0))?),
                    (true, false) => (st((t1, 0.0))?, st((0.0, t2))?),
                    (false, true) => (st((0.0, t2))?, st((t1, 0.0))?),
                    (false, false) => (st((0.0, 0.0))?, st((t1, t2))?),
                };
                Ok(first.kron(&second))
            },
        ),
    }
}

//! Closed-form bounds for the displaced thermal family and its two-mode
//! singular submodels.

use nalgebra::{DMatrix, DVector};

use super::BoundValue;
use crate::error::{Error, Result};
use crate::matcore::C64;
use crate::models::GaussianInfoConstants;

/// `Tr rho_0^{-1} rho_(x,y) rho_(z,w) = exp(J (xz + yw) + i A (xw - yz))`.
///
/// The phase sign follows the information matrix `[[J, -iA], [iA, J]]`:
/// the exponent is `sum_ij a_i b_j J^R_ji` with `a = (x, y)`, `b = (z, w)`.
pub fn gaussian_overlap_trace(x: f64, y: f64, z: f64, w: f64, sigma2: f64) -> Result<C64> {
    let c = GaussianInfoConstants::new(sigma2)?;
    Ok(C64::new(c.j * (x * z + y * w), c.a * (x * w - y * z)).exp())
}

fn check_sigma2(sigma2: f64) -> Result<GaussianInfoConstants> {
    GaussianInfoConstants::new(sigma2)
}

/// Koike-type bound on the scalar singular submodel at `theta`, combining the
/// derivative at `theta` with a finite step that lands at distance `delta1`
/// from the kink on the other side:
/// `1/J + delta1^2 / (exp(J (theta^2 + delta1^2)) - 1 - theta^2 J)`.
pub fn gaussian_koike_bound(theta: f64, delta1: f64, sigma2: f64) -> Result<f64> {
    let c = check_sigma2(sigma2)?;
    if delta1 == 0.0 || !delta1.is_finite() || !theta.is_finite() {
        return Err(Error::Inadmissible(format!("delta1 = {delta1}")));
    }
    let j = c.j;
    let denom = (j * (theta * theta + delta1 * delta1)).exp_m1() - theta * theta * j;
    if !(denom > 0.0) {
        return Err(Error::Inadmissible(format!(
            "denominator {denom:e} is not positive"
        )));
    }
    Ok(1.0 / j + delta1 * delta1 / denom)
}

/// The same bound as `(1, 1) K^{-1} (1, 1)^T` with the 2x2 Gram matrix
/// written out: the finite step spans `s = |theta| + delta1`,
/// `K_aa = (Tr rho^{-1} rho_land^2 - 1) / s^2`, `K_ab = J |theta| / s`, `K_bb = J`.
pub fn gaussian_koike_matrix_bound(theta: f64, delta1: f64, sigma2: f64) -> Result<f64> {
    let c = check_sigma2(sigma2)?;
    if !(delta1 > 0.0) {
        return Err(Error::Inadmissible(format!(
            "matrix form needs delta1 > 0, got {delta1}"
        )));
    }
    let base = -theta.abs();
    let s = delta1 - base;
    // landing mode and base mode factor separately
    let landing = gaussian_overlap_trace(delta1, 0.0, delta1, 0.0, sigma2)?.re;
    let home = gaussian_overlap_trace(-base, 0.0, -base, 0.0, sigma2)?.re;
    let k_aa = (landing * home - 1.0) / (s * s);
    let k_ab = -c.j * base / s;
    let k = DMatrix::from_row_slice(2, 2, &[k_aa, k_ab, k_ab, c.j]);
    let inv = k
        .try_inverse()
        .ok_or_else(|| Error::Inadmissible("Gram matrix is singular".into()))?;
    let v = DVector::from_vec(vec![1.0, 1.0]);
    Ok((v.transpose() * inv * v)[(0, 0)])
}

/// Trace bounds `(RLD, SLD)` for `Sp V` on the vector singular submodel at a
/// point with `theta1 != 0`, `theta2 = 0`, as functions of the split weight
/// `t2` of the second coordinate.
pub fn gaussian_case2_bounds(t2: f64, sigma2: f64) -> Result<(BoundValue, BoundValue)> {
    if !(0.0..=1.0).contains(&t2) {
        return Err(Error::InvalidInput(format!("t2 = {t2} outside [0, 1]")));
    }
    if !(sigma2 >= 0.5) || !sigma2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "sigma2 = {sigma2} must be >= 1/2"
        )));
    }
    let s4 = sigma2 * sigma2;
    let q = 2.0 * t2 * t2 - 2.0 * t2 + 1.0;
    let sld = BoundValue::Finite(sigma2 / q + sigma2);
    let num = (s4 - 0.25) * (2.0 * sigma2 * (t2 * t2 - t2 + 1.0) + 1.0 - t2);
    let den = s4 * q - (1.0 - t2).powi(2) / 4.0;
    let rld = if t2 == 0.0 {
        // numerator and denominator share the factor sigma2^2 - 1/4
        BoundValue::Finite(2.0 * sigma2 + 1.0)
    } else if den <= 0.0 {
        if num == 0.0 {
            BoundValue::Finite(0.0)
        } else {
            BoundValue::Infinite
        }
    } else {
        BoundValue::Finite(num / den)
    };
    Ok((rld, sld))
}

/// RLD trace bound `(a + d + 2|c|) / (a d - b^2 - c^2)` on the vector singular
/// submodel at `theta1, theta2 < 0`, with forward steps landing at `t > 0` and
/// `s > 0` on the other side of each axis.
pub fn gaussian_2d_finite_delta_bound(
    theta1: f64,
    theta2: f64,
    t: f64,
    s: f64,
    sigma2: f64,
) -> Result<f64> {
    if !(theta1 < 0.0 && theta2 < 0.0 && t > 0.0 && s > 0.0) {
        return Err(Error::InvalidInput(
            "need theta1, theta2 < 0 and t, s > 0".into(),
        ));
    }
    let c = check_sigma2(sigma2)?;
    let (d1, d2) = (t - theta1, s - theta2);
    let a = (c.j * (theta1 * theta1 + t * t)).exp_m1() / (d1 * d1);
    let d = (c.j * (theta2 * theta2 + s * s)).exp_m1() / (d2 * d2);
    let cross = gaussian_overlap_trace(0.0, s, t, 0.0, sigma2)?
        * gaussian_overlap_trace(0.0, -theta2, -theta1, 0.0, sigma2)?;
    let z = (cross - 1.0) / (d1 * d2);
    let denom = a * d - z.norm_sqr();
    if !(denom > 0.0) {
        return Err(Error::Inadmissible(format!(
            "denominator {denom:e} is not positive"
        )));
    }
    Ok((a + d + 2.0 * z.im.abs()) / denom)
}

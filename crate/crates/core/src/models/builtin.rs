//! Concurrence and discrete example families, plus randomized smooth and
//! piecewise models used by the property checks.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Domain, Interval, ParamPoint, ParametricModel, Side};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, DensityMatrix, HermMatrix, C64};

/// Bell-diagonal family `diag((1+theta)/2, (1-theta)/2)` in the `{Phi+, Phi-}`
/// basis, `-1 < theta < 1`.
pub fn concurrence_model() -> ParametricModel {
    ParametricModel::new(
        "concurrence",
        2,
        Domain::Box(vec![Interval::open(-1.0, 1.0)]),
        |p| {
            let th = p.0[0];
            Ok(DensityMatrix::from_trusted(
                HermMatrix::from_diagonal(&[(1.0 + th) / 2.0, (1.0 - th) / 2.0]).into_matrix(),
            ))
        },
    )
    .with_derivative(|_, _| Ok(HermMatrix::from_diagonal(&[0.5, -0.5])))
}

/// Smallest truncation that holds the support of `rho_theta` plus one empty block.
pub fn discrete_min_dim(theta: usize) -> usize {
    2 * theta.div_ceil(2) + 2
}

/// State of the discrete family at integer `theta >= 1`, on the first `dim_cut`
/// basis vectors.
///
/// Even `theta`: `theta^{-1} diag(s2, ..., s2, 0, ...)` with `theta/2` copies of
/// `s2 = [[1, 1/2], [1/2, 1]]`. Odd `theta`: `(theta-1)/2` copies of `s2`
/// followed by `s1 = diag(1, 0)`.
pub fn discrete_state(theta: usize, dim_cut: usize) -> Result<DensityMatrix> {
    if theta < 1 {
        return Err(Error::Domain {
            model: "discrete".into(),
            point: vec![theta as f64],
        });
    }
    if dim_cut < discrete_min_dim(theta) {
        return Err(Error::InvalidInput(format!(
            "dim_cut {dim_cut} too small for theta = {theta} (need {})",
            discrete_min_dim(theta)
        )));
    }
    let scale = 1.0 / theta as f64;
    let mut m = CMatrix::zeros(dim_cut, dim_cut);
    for b in 0..theta / 2 {
        let i = 2 * b;
        m[(i, i)] = C64::new(scale, 0.0);
        m[(i + 1, i + 1)] = C64::new(scale, 0.0);
        m[(i, i + 1)] = C64::new(0.5 * scale, 0.0);
        m[(i + 1, i)] = C64::new(0.5 * scale, 0.0);
    }
    if theta % 2 == 1 {
        let i = theta - 1;
        m[(i, i)] = C64::new(scale, 0.0);
    }
    Ok(DensityMatrix::from_trusted(m))
}

/// The discrete family as a model over the positive integers, truncated to
/// `dim_cut` dimensions. Points whose support does not fit are domain errors.
pub fn discrete_model(dim_cut: usize) -> ParametricModel {
    ParametricModel::new("discrete", dim_cut, Domain::Naturals, move |p| {
        let theta = p.0[0].round() as usize;
        if discrete_min_dim(theta) > dim_cut {
            return Err(Error::Domain {
                model: "discrete".into(),
                point: p.0.clone(),
            });
        }
        discrete_state(theta, dim_cut)
    })
}

fn random_complex<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// `N / Tr N` and its derivative for `N = B B^dagger + eps I`, given `B`, `B'`.
fn normalized_gram(b: &CMatrix, db: &CMatrix, eps: f64) -> (CMatrix, CMatrix) {
    let n = b.nrows();
    let big_n = b * b.adjoint() + CMatrix::identity(n, n) * C64::new(eps, 0.0);
    let dn = db * b.adjoint() + b * db.adjoint();
    let tr = big_n.trace().re;
    let dtr = dn.trace().re;
    let rho = &big_n * C64::new(1.0 / tr, 0.0);
    let drho = dn * C64::new(1.0 / tr, 0.0) - big_n * C64::new(dtr / (tr * tr), 0.0);
    (rho, drho)
}

/// Random full-rank smooth scalar model on `(-1, 1)`:
/// `rho(theta) ∝ B B^dagger + eps I` with `B = A0 + theta A1 + theta^2 A2`.
/// Carries the analytic derivative.
pub fn random_smooth_model<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ParametricModel {
    let a0 = random_complex(rng, dim, 1.0);
    let a1 = random_complex(rng, dim, 0.5);
    let a2 = random_complex(rng, dim, 0.25);
    let eps = 0.05;
    let eval = move |th: f64| {
        let b = &a0 + &a1 * C64::new(th, 0.0) + &a2 * C64::new(th * th, 0.0);
        let db = &a1 + &a2 * C64::new(2.0 * th, 0.0);
        normalized_gram(&b, &db, eps)
    };
    let eval2 = eval.clone();
    ParametricModel::new(
        format!("random-smooth-{dim}"),
        dim,
        Domain::Box(vec![Interval::open(-1.0, 1.0)]),
        move |p| {
            Ok(DensityMatrix::from_trusted(
                HermMatrix::hermitian_part(&eval(p.0[0]).0).into_matrix(),
            ))
        },
    )
    .with_derivative(move |p, _| Ok(HermMatrix::hermitian_part(&eval2(p.0[0]).1)))
}

/// Random scalar model with a kink at `theta = 0`: `B = A0 + theta A+` for
/// `theta >= 0` and `B = A0 + theta A-` for `theta < 0`.
pub struct PiecewiseModel {
    pub model: ParametricModel,
    a0: CMatrix,
    a_plus: CMatrix,
    a_minus: CMatrix,
    eps: f64,
}

impl PiecewiseModel {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let a0 = random_complex(rng, dim, 1.0);
        let a_plus = random_complex(rng, dim, 0.5);
        let a_minus = random_complex(rng, dim, 0.5);
        let eps = 0.05;
        let (b0, bp, bm) = (a0.clone(), a_plus.clone(), a_minus.clone());
        let model = ParametricModel::new(
            format!("random-piecewise-{dim}"),
            dim,
            Domain::Box(vec![Interval::open(-1.0, 1.0)]),
            move |p| {
                let th = p.0[0];
                let slope = if th >= 0.0 { &bp } else { &bm };
                let b = &b0 + slope * C64::new(th, 0.0);
                let (rho, _) = normalized_gram(&b, slope, eps);
                Ok(DensityMatrix::from_trusted(
                    HermMatrix::hermitian_part(&rho).into_matrix(),
                ))
            },
        );
        PiecewiseModel {
            model,
            a0,
            a_plus,
            a_minus,
            eps,
        }
    }

    /// Analytic one-sided derivative at `theta = 0`.
    pub fn one_sided_derivative_at_kink(&self, side: Side) -> HermMatrix {
        let slope = match side {
            Side::Right => &self.a_plus,
            Side::Left => &self.a_minus,
        };
        let (_, d) = normalized_gram(&self.a0, slope, self.eps);
        HermMatrix::hermitian_part(&d)
    }
}

/// Convenience: the scalar point `theta`.
pub fn at(theta: f64) -> ParamPoint {
    ParamPoint::scalar(theta)
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use qbound::matcore::{CMatrix, DensityMatrix, HermMatrix, C64};
use qbound::models::{Domain, Interval, ParamPoint, ParametricModel};

/// Solves `(rho L + L rho) / 2 = D` as one dense linear system on `vec(L)`.
pub fn vectorized_sld(rho: &CMatrix, d: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let id = CMatrix::identity(n, n);
    // column-major vec: vec(A X B) = (B^T (x) A) vec(X)
    let op = (id.kronecker(rho) + rho.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    let rhs = DVector::from_iterator(n * n, d.iter().cloned());
    let x = op.lu().solve(&rhs).expect("Lyapunov operator is singular");
    CMatrix::from_column_slice(n, n, x.as_slice())
}

/// `rho (x) rho` at every point.
pub fn two_copy(model: &ParametricModel) -> ParametricModel {
    let single = model.clone();
    ParametricModel::new(
        "two-copy",
        model.dim().pow(2),
        model.domain().clone(),
        move |p: &ParamPoint| {
            let s = single.state(p)?;
            Ok(s.kron(&s))
        },
    )
}

/// Thermal occupation ratio with mean photon number `sigma2 - 1/2`.
pub fn thermal_c(sigma2: f64) -> f64 {
    let nbar = sigma2 - 0.5;
    nbar / (nbar + 1.0)
}

fn lowering(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `(P, Q)` with `a = (Q + iP)/sqrt(2)` on `dim` Fock levels.
pub fn quadratures(dim: usize) -> (CMatrix, CMatrix) {
    let a = lowering(dim);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (
        (&a - &ad) * C64::new(0.0, -s),
        (&a + &ad) * C64::new(s, 0.0),
    )
}

const PAD: usize = 100;

/// Displaced thermal state with `<P> = theta1`, `<Q> = theta2`, built with a
/// matrix exponential of the displacement generator on a padded space and
/// cropped to levels `0..=n`.
pub fn displaced_thermal(sigma2: f64, theta1: f64, theta2: f64, n: usize) -> CMatrix {
    let big = n + 1 + PAD;
    let c = thermal_c(sigma2);
    let a = lowering(big);
    let alpha = C64::new(theta2, theta1) / std::f64::consts::SQRT_2;
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    let disp = gen.exp();
    let thermal = CMatrix::from_diagonal(&DVector::from_fn(big, |k, _| {
        C64::new((1.0 - c) * c.powi(k as i32), 0.0)
    }));
    let full = &disp * thermal * disp.adjoint();
    let crop = full.view((0, 0), (n + 1, n + 1)).into_owned();
    let tr = crop.trace().re;
    crop / C64::new(tr, 0.0)
}

/// `Tr rho_0^{-1} rho_(x,y) rho_(z,w)` with the exact thermal spectrum for `rho_0^{-1}`.
pub fn fock_overlap(x: f64, y: f64, z: f64, w: f64, sigma2: f64, n: usize) -> C64 {
    let c = thermal_c(sigma2);
    let prod = displaced_thermal(sigma2, x, y, n) * displaced_thermal(sigma2, z, w, n);
    (0..=n)
        .map(|k| prod[(k, k)] / ((1.0 - c) * c.powi(k as i32)))
        .sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_complex(rng: &mut impl rand::Rng, dim: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    })
}

const FLOOR: f64 = 0.05;

/// `N / Tr N` for `N = B B^dagger + eps I`.
fn normalized(b: &CMatrix) -> CMatrix {
    let n = b * b.adjoint() + CMatrix::identity(b.nrows(), b.nrows()) * C64::new(FLOOR, 0.0);
    let tr = n.trace().re;
    n / C64::new(tr, 0.0)
}

/// Derivative of `N / Tr N` along `B -> B + h B'`.
fn normalized_rate(b: &CMatrix, db: &CMatrix) -> CMatrix {
    let n = b * b.adjoint() + CMatrix::identity(b.nrows(), b.nrows()) * C64::new(FLOOR, 0.0);
    let dn = db * b.adjoint() + b * db.adjoint();
    let (tr, dtr) = (n.trace().re, dn.trace().re);
    (dn - n * C64::new(dtr / tr, 0.0)) / C64::new(tr, 0.0)
}

fn density(m: CMatrix) -> qbound::error::Result<DensityMatrix> {
    DensityMatrix::new(HermMatrix::hermitian_part(&m).into_matrix())
}

/// Full-rank family with `B(theta) = B0 + theta B1 + theta^2 B2` and an
/// analytic derivative.
pub fn polynomial_model(rng: &mut impl rand::Rng, dim: usize) -> ParametricModel {
    let b = [
        random_complex(rng, dim, 1.0),
        random_complex(rng, dim, 0.5),
        random_complex(rng, dim, 0.25),
    ];
    let factor = {
        let b = b.clone();
        move |th: f64| &b[0] + &b[1] * C64::new(th, 0.0) + &b[2] * C64::new(th * th, 0.0)
    };
    let rate = {
        let b = b.clone();
        move |th: f64| &b[1] + &b[2] * C64::new(2.0 * th, 0.0)
    };
    let f = factor.clone();
    ParametricModel::new(
        "polynomial",
        dim,
        Domain::Box(vec![Interval::real_line()]),
        move |p| density(normalized(&f(p.0[0]))),
    )
    .with_derivative(move |p, _| {
        let th = p.0[0];
        Ok(HermMatrix::hermitian_part(&normalized_rate(
            &factor(th),
            &rate(th),
        )))
    })
}

/// Family with a kink at zero: `B(theta) = B0 + theta B+` for `theta >= 0` and
/// `B0 + theta B-` below, with both one-sided derivatives at the kink.
pub struct KinkedModel {
    pub model: ParametricModel,
    pub right: HermMatrix,
    pub left: HermMatrix,
}

pub fn kinked_model(rng: &mut impl rand::Rng, dim: usize) -> KinkedModel {
    let b0 = random_complex(rng, dim, 1.0);
    let bp = random_complex(rng, dim, 0.5);
    let bm = random_complex(rng, dim, 0.5);
    let right = HermMatrix::hermitian_part(&normalized_rate(&b0, &bp));
    let left = HermMatrix::hermitian_part(&normalized_rate(&b0, &bm));
    let model = ParametricModel::new(
        "kinked",
        dim,
        Domain::Box(vec![Interval::real_line()]),
        move |p| {
            let th = p.0[0];
            let slope = if th >= 0.0 { &bp } else { &bm };
            density(normalized(&(&b0 + slope * C64::new(th, 0.0))))
        },
    );
    KinkedModel { model, right, left }
}

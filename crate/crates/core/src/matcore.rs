//! Complex Hermitian linear algebra: eigendecomposition, logarithmic-derivative
//! solves (symmetric and right), Moore-Penrose inverse and the spectral
//! absolute trace.
//!
//! Logarithmic derivatives are computed in the eigenbasis of the state.
//! States that are not full rank are handled by restricting to the span of
//! eigenvectors whose eigenvalue exceeds the state's support tolerance; the
//! right-hand side must have negligible weight outside that span.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const NEGATIVITY_TOL: f64 = 1e-10;
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-12;
/// Largest Frobenius weight a right-hand side may carry outside the support.
pub const OUTSIDE_SUPPORT_TOL: f64 = 1e-9;

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_part_of(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Hermitian operator on a finite-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    /// Checks squareness and Hermiticity (entrywise, scaled by the largest entry).
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(HermMatrix(hermitian_part_of(&m)))
    }

    /// `(m + m†)/2`, for matrices that are Hermitian up to rounding by construction.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        HermMatrix(hermitian_part_of(m))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        HermMatrix(CMatrix::from_diagonal(&d))
    }

    pub fn zeros(dim: usize) -> Self {
        HermMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermMatrix(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        HermMatrix(&self.0 * C64::new(s, 0.0))
    }

    /// `Tr(self * other)`, real for two Hermitian operators.
    pub fn trace_product(&self, other: &HermMatrix) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.0[(i, j)] * other.0[(j, i)]).re;
            }
        }
        acc
    }

    pub fn kron(&self, other: &HermMatrix) -> Self {
        HermMatrix(self.0.kronecker(&other.0))
    }
}

impl Add for &HermMatrix {
    type Output = HermMatrix;
    fn add(self, rhs: &HermMatrix) -> HermMatrix {
        HermMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermMatrix {
    type Output = HermMatrix;
    fn sub(self, rhs: &HermMatrix) -> HermMatrix {
        HermMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HermMatrix {
    type Output = HermMatrix;
    fn mul(self, rhs: f64) -> HermMatrix {
        self.scale(rhs)
    }
}

/// Operator with no symmetry constraint (right logarithmic derivatives).
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralOperator(pub CMatrix);

impl GeneralOperator {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
    support_tol: f64,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermMatrix::new(m)?;
        let tr = h.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!("trace is {tr}, expected 1")));
        }
        let eig = eig_hermitian(&h);
        if let Some(&min) = eig.values.first() {
            if min < -NEGATIVITY_TOL {
                return Err(Error::InvalidInput(format!(
                    "matrix has negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(Self::from_trusted(h.0))
    }

    /// Accepts slightly negative eigenvalues (down to `-1e-10`), clips them to
    /// zero and renormalizes. Used for matrices read from files.
    pub fn from_clipped(m: CMatrix) -> Result<Self> {
        let h = HermMatrix::new(m)?;
        let eig = eig_hermitian(&h);
        if let Some(&min) = eig.values.first() {
            if min < -NEGATIVITY_TOL {
                return Err(Error::InvalidInput(format!(
                    "matrix has negative eigenvalue {min:e}"
                )));
            }
        }
        let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("matrix has zero trace".into()));
        }
        if (trace_re(h.as_matrix()) - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "trace is {}, expected 1",
                trace_re(h.as_matrix())
            )));
        }
        // already a valid state: keep the entries bit for bit
        if eig.values.first().is_none_or(|&l| l >= 0.0)
            && (trace_re(h.as_matrix()) - 1.0).abs() <= TRACE_TOL
        {
            return Ok(Self::from_trusted(h.into_matrix()));
        }
        let d = DVector::from_iterator(
            clipped.len(),
            clipped.iter().map(|&l| C64::new(l / total, 0.0)),
        );
        let rebuilt = &eig.vectors * CMatrix::from_diagonal(&d) * eig.vectors.adjoint();
        Ok(Self::from_trusted(hermitian_part_of(&rebuilt)))
    }

    /// Wraps a matrix the caller guarantees to be a valid state.
    pub(crate) fn from_trusted(mat: CMatrix) -> Self {
        debug_assert!(mat.is_square());
        DensityMatrix {
            mat,
            support_tol: DEFAULT_SUPPORT_TOL,
        }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermMatrix::from_diagonal(probs).into_matrix())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0))
    }

    /// Projector onto a normalized copy of `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        let v = psi / C64::new(norm, 0.0);
        Ok(Self::from_trusted(&v * v.adjoint()))
    }

    pub fn with_support_tol(mut self, tol: f64) -> Self {
        self.support_tol = tol;
        self
    }

    pub fn support_tol(&self) -> f64 {
        self.support_tol
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn to_herm(&self) -> HermMatrix {
        HermMatrix(self.mat.clone())
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        frobenius_norm(&self.mat).powi(2)
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: self.mat.kronecker(&other.mat),
            support_tol: self.support_tol.min(other.support_tol),
        }
    }

    /// `Tr(rho * op)` for a Hermitian observable.
    pub fn expectation(&self, op: &HermMatrix) -> f64 {
        self.to_herm().trace_product(op)
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&w) || self.dim() != other.dim() {
            return Err(Error::InvalidInput("invalid convex combination".into()));
        }
        Ok(DensityMatrix {
            mat: &self.mat * C64::new(w, 0.0) + &other.mat * C64::new(1.0 - w, 0.0),
            support_tol: self.support_tol.min(other.support_tol),
        })
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::new(self)
    }
}

/// Eigenvalues (ascending) and the matching unitary matrix of eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eig_hermitian(h: &HermMatrix) -> Eigen {
    let n = h.dim();
    if n == 0 {
        return Eigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(h.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigen { values, vectors }
}

/// Cached eigendecomposition of a state, restricted to its support.
///
/// Operators handed to or returned from the `*_in_eigenbasis` methods are
/// `s x s` matrices in the basis of support eigenvectors (`s = support_dim`).
#[derive(Clone, Debug)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: CMatrix,
    support: Vec<usize>,
    support_tol: f64,
}

impl Spectrum {
    pub fn new(rho: &DensityMatrix) -> Self {
        let eig = eig_hermitian(&rho.to_herm());
        let support = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > rho.support_tol)
            .map(|(i, _)| i)
            .collect();
        Spectrum {
            values: eig.values,
            vectors: eig.vectors,
            support,
            support_tol: rho.support_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn support_dim(&self) -> usize {
        self.support.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn support_eigenvalues(&self) -> Vec<f64> {
        self.support.iter().map(|&i| self.values[i]).collect()
    }

    fn support_vectors(&self) -> CMatrix {
        let n = self.dim();
        let mut u = CMatrix::zeros(n, self.support.len());
        for (dst, &src) in self.support.iter().enumerate() {
            u.set_column(dst, &self.vectors.column(src));
        }
        u
    }

    /// Restricts `m` to the support, in the eigenbasis. Fails if `m` carries
    /// Frobenius weight above `OUTSIDE_SUPPORT_TOL * max(1, |m|)` elsewhere.
    pub fn restrict(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "operator dimension {} does not match state dimension {}",
                m.nrows(),
                self.dim()
            )));
        }
        let full = self.vectors.adjoint() * m * &self.vectors;
        let s = self.support.len();
        let mut inside = CMatrix::zeros(s, s);
        let mut in_support = vec![false; self.dim()];
        for &i in &self.support {
            in_support[i] = true;
        }
        let mut outside = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if !(in_support[i] && in_support[j]) {
                    outside += full[(i, j)].norm_sqr();
                }
            }
        }
        let outside = outside.sqrt();
        let scale = frobenius_norm(m).max(1.0);
        if outside > OUTSIDE_SUPPORT_TOL * scale {
            return Err(Error::SingularSupport(format!(
                "operator has weight {outside:e} outside the state's support"
            )));
        }
        for (a, &i) in self.support.iter().enumerate() {
            for (b, &j) in self.support.iter().enumerate() {
                inside[(a, b)] = full[(i, j)];
            }
        }
        Ok(inside)
    }

    /// Maps an `s x s` eigenbasis operator back to the full space.
    pub fn embed(&self, m: &CMatrix) -> CMatrix {
        let u = self.support_vectors();
        &u * m * u.adjoint()
    }

    /// Symmetric logarithmic derivative `L_ij = 2 D_ij / (l_i + l_j)` on the support.
    pub fn sld_in_eigenbasis(&self, d: &HermMatrix) -> Result<CMatrix> {
        let dr = self.restrict(d.as_matrix())?;
        let lam = self.support_eigenvalues();
        let s = lam.len();
        let mut l = CMatrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                let denom = lam[i] + lam[j];
                if denom <= self.support_tol {
                    if dr[(i, j)].norm() > 0.0 {
                        return Err(Error::SingularSupport(format!(
                            "eigenvalue sum {denom:e} vanishes on support"
                        )));
                    }
                    continue;
                }
                l[(i, j)] = dr[(i, j)] * (2.0 / denom);
            }
        }
        Ok(l)
    }

    /// Right logarithmic derivative `L = rho^{-1} D` on the support.
    pub fn rld_in_eigenbasis(&self, d: &HermMatrix) -> Result<CMatrix> {
        let dr = self.restrict(d.as_matrix())?;
        let lam = self.support_eigenvalues();
        let s = lam.len();
        let mut l = CMatrix::zeros(s, s);
        for i in 0..s {
            if lam[i] <= self.support_tol {
                return Err(Error::SingularSupport(format!(
                    "eigenvalue {:e} vanishes on support",
                    lam[i]
                )));
            }
            for j in 0..s {
                l[(i, j)] = dr[(i, j)] / lam[i];
            }
        }
        Ok(l)
    }

    pub fn solve_sld(&self, d: &HermMatrix) -> Result<HermMatrix> {
        let l = self.sld_in_eigenbasis(d)?;
        Ok(HermMatrix::hermitian_part(&self.embed(&l)))
    }

    pub fn solve_rld(&self, d: &HermMatrix) -> Result<GeneralOperator> {
        let l = self.rld_in_eigenbasis(d)?;
        Ok(GeneralOperator(self.embed(&l)))
    }

    /// `K_ab = (1/2) Tr rho (L_a L_b + L_b L_a)` for eigenbasis SLDs.
    pub fn sld_gram(&self, ls: &[CMatrix]) -> DMatrix<f64> {
        let lam = self.support_eigenvalues();
        let r = ls.len();
        let mut k = DMatrix::zeros(r, r);
        for a in 0..r {
            for b in a..r {
                let v = weighted_trace_product(&lam, &ls[a], &ls[b]).re;
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
        }
        k
    }

    /// `K_ab = Tr rho L_b L_a^dagger` for eigenbasis RLDs (Hermitian Gram matrix).
    pub fn rld_gram(&self, ls: &[CMatrix]) -> CMatrix {
        let lam = self.support_eigenvalues();
        let r = ls.len();
        let mut k = CMatrix::zeros(r, r);
        for a in 0..r {
            for b in a..r {
                let s = lam.len();
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..s {
                    let mut row = C64::new(0.0, 0.0);
                    for q in 0..s {
                        row += ls[b][(p, q)] * ls[a][(p, q)].conj();
                    }
                    acc += row * lam[p];
                }
                k[(a, b)] = acc;
                k[(b, a)] = acc.conj();
            }
        }
        k
    }
}

/// `Tr(diag(lam) A B)` in the eigenbasis.
fn weighted_trace_product(lam: &[f64], a: &CMatrix, b: &CMatrix) -> C64 {
    let s = lam.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..s {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..s {
            row += a[(i, j)] * b[(j, i)];
        }
        acc += row * lam[i];
    }
    acc
}

/// Solves `(rho L + L rho)/2 = D` for Hermitian `L`.
pub fn solve_sld(rho: &DensityMatrix, d: &HermMatrix) -> Result<HermMatrix> {
    rho.spectrum().solve_sld(d)
}

/// Solves `rho L = D` on the support of `rho`.
pub fn solve_rld(rho: &DensityMatrix, d: &HermMatrix) -> Result<GeneralOperator> {
    rho.spectrum().solve_rld(d)
}

/// Eigenpairs of `[[0, M], [M^dagger, 0]]`, whose eigenvalues are the
/// singular values of `M` with both signs (plus zeros). nalgebra's SVD can
/// return factors that do not recompose rank-deficient inputs; the Hermitian
/// eigensolver does not have that problem.
fn hermitian_dilation(m: &CMatrix) -> SymmetricEigen<C64, nalgebra::Dyn> {
    let (r, c) = m.shape();
    let mut h = CMatrix::zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(m);
    h.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    SymmetricEigen::new(h)
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = hermitian_dilation(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.into_iter()
        .take(m.nrows().min(m.ncols()))
        .map(|s| s.max(0.0))
        .collect()
}

/// Moore-Penrose pseudo-inverse and numerical rank. Singular values below
/// `tol * sigma_max` are treated as zero.
pub fn pinv_with_rank(m: &CMatrix, tol: f64) -> (CMatrix, usize) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (CMatrix::zeros(c, r), 0);
    }
    let eig = hermitian_dilation(m);
    let sigma_max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    if sigma_max == 0.0 {
        return (CMatrix::zeros(c, r), 0);
    }
    let cutoff = tol * sigma_max;
    let mut rank = 0;
    let mut pinv = CMatrix::zeros(c, r);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cutoff {
            rank += 1;
        }
        if l.abs() > cutoff {
            // Lower-left block of the dilation's pseudo-inverse.
            let w = eig.eigenvectors.column(k);
            pinv += w.rows(r, c) * w.rows(0, r).adjoint() * C64::new(1.0 / l, 0.0);
        }
    }
    (pinv, rank)
}

pub fn pinv(m: &CMatrix, tol: f64) -> CMatrix {
    pinv_with_rank(m, tol).0
}

/// Sum of absolute values of the eigenvalues of `m`.
pub fn spabs(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if max_abs(m) == 0.0 {
        return 0.0;
    }
    match m.eigenvalues() {
        Some(ev) => ev.iter().map(|z| z.norm()).sum(),
        None => {
            // Complex Schur leaves a triangular factor; read its diagonal.
            let (_, t) = m.clone().schur().unpack();
            t.diagonal().iter().map(|z| z.norm()).sum()
        }
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = eig_hermitian(&HermMatrix::identity(3));
        assert_eq!(e.values.len(), 3);
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let e = eig_hermitian(&HermMatrix::from_diagonal(&[2.0, -1.0]));
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 2.0).abs() < 1e-14);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermMatrix::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sld_at_maximally_mixed_qubit_is_twice_d() {
        let rho = DensityMatrix::maximally_mixed(2);
        let d = HermMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(-0.7, 0.0)],
        ))
        .unwrap();
        let l = solve_sld(&rho, &d).unwrap();
        let diff = l.as_matrix() - d.as_matrix() * c(2.0, 0.0);
        assert!(frobenius_norm(&diff) < 1e-12);
        let r = solve_rld(&rho, &d).unwrap();
        assert!(frobenius_norm(&(r.as_matrix() - d.as_matrix() * c(2.0, 0.0))) < 1e-12);
    }

    #[test]
    fn concurrence_support_logarithmic_derivatives() {
        let theta: f64 = 0.4;
        let rho =
            DensityMatrix::from_diagonal(&[(1.0 + theta) / 2.0, (1.0 - theta) / 2.0]).unwrap();
        let d = HermMatrix::from_diagonal(&[0.5, -0.5]);
        let l = solve_sld(&rho, &d).unwrap();
        assert!((l.as_matrix()[(0, 0)].re - 1.0 / (1.0 + theta)).abs() < 1e-14);
        assert!((l.as_matrix()[(1, 1)].re + 1.0 / (1.0 - theta)).abs() < 1e-14);
        let j = rho.expectation(&HermMatrix::hermitian_part(
            &(l.as_matrix() * l.as_matrix()),
        ));
        assert!((j - 1.0 / (1.0 - theta * theta)).abs() < 1e-13);
        let r = solve_rld(&rho, &d).unwrap();
        let jr = (rho.as_matrix() * r.as_matrix() * r.as_matrix().adjoint())
            .trace()
            .re;
        assert!((jr - 1.0 / (1.0 - theta * theta)).abs() < 1e-13);
    }

    #[test]
    fn rank_deficient_state_restricts_to_support() {
        let rho = DensityMatrix::from_diagonal(&[0.5, 0.5, 0.0]).unwrap();
        let d = HermMatrix::from_diagonal(&[0.5, -0.5, 0.0]);
        let l = solve_sld(&rho, &d).unwrap();
        assert!((l.as_matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(l.as_matrix()[(2, 2)].norm() < 1e-14);

        let outside = HermMatrix::from_diagonal(&[0.5, -1.0, 0.5]);
        assert!(matches!(
            solve_sld(&rho, &outside),
            Err(Error::SingularSupport(_))
        ));
        assert!(matches!(
            solve_rld(&rho, &outside),
            Err(Error::SingularSupport(_))
        ));
    }

    #[test]
    fn pinv_examples() {
        let m = to_complex(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        let p = pinv(&m, 1e-12);
        assert!((p[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(p[(1, 1)].norm() < 1e-15);

        let z = CMatrix::zeros(3, 3);
        assert!(frobenius_norm(&pinv(&z, 1e-12)) == 0.0);

        let a = to_complex(&DMatrix::from_row_slice(
            3,
            3,
            &[4.0, 1.0, 0.5, -1.0, 3.0, 0.2, 0.0, 0.3, 2.0],
        ));
        let inv = a.clone().try_inverse().unwrap();
        assert!(frobenius_norm(&(pinv(&a, 1e-12) - inv)) < 1e-12);

        let v = DVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.0), c(0.0, 2.0)]);
        let vv = &v * v.adjoint();
        let expected = &vv * c(1.0 / v.norm().powi(4), 0.0);
        assert!(frobenius_norm(&(pinv(&vv, 1e-12) - expected)) < 1e-12);
    }

    #[test]
    fn spabs_examples() {
        assert_eq!(spabs(&CMatrix::zeros(2, 2)), 0.0);
        assert!(
            (spabs(&to_complex(&DMatrix::from_row_slice(
                2,
                2,
                &[3.0, 0.0, 0.0, -2.0]
            ))) - 5.0)
                .abs()
                < 1e-14
        );
        // Imaginary part of the inverse Gaussian RLD information at G = I.
        let im = to_complex(&DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]));
        assert!((spabs(&im) - 1.0).abs() < 1e-12);
        let m3 = to_complex(&DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -4.0],
        ));
        assert!((spabs(&m3) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_renormalizes_tiny_negativity() {
        let m = HermMatrix::from_diagonal(&[1.0 + 5e-11, -5e-11]).into_matrix();
        assert!(DensityMatrix::new(m.clone()).is_ok());
        let rho = DensityMatrix::from_clipped(m).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!(rho.as_matrix()[(1, 1)].re >= 0.0);
        let bad = HermMatrix::from_diagonal(&[1.0 + 1e-6, -1e-6]).into_matrix();
        assert!(DensityMatrix::from_clipped(bad.clone()).is_err());
        assert!(DensityMatrix::new(bad).is_err());
    }
}

//! Parametric state models and the finite-difference operators acting on them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{CMatrix, DensityMatrix, HermMatrix, C64};

pub mod builtin;
pub mod file;
pub mod gaussian;

pub use builtin::{
    concurrence_model, discrete_min_dim, discrete_model, discrete_state, random_smooth_model,
};
pub use gaussian::{
    gaussian_fock_state, gaussian_model, gaussian_singular_submodel, GaussianInfoConstants,
    GaussianParams, SingularKind,
};

/// A point in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint(pub Vec<f64>);

impl ParamPoint {
    pub fn scalar(theta: f64) -> Self {
        ParamPoint(vec![theta])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Copy with coordinate `coord` moved by `step`.
    pub fn shifted(&self, coord: usize, step: f64) -> ParamPoint {
        let mut c = self.0.clone();
        c[coord] += step;
        ParamPoint(c)
    }
}

impl From<f64> for ParamPoint {
    fn from(theta: f64) -> Self {
        ParamPoint::scalar(theta)
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(v: Vec<f64>) -> Self {
        ParamPoint(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn real_line() -> Self {
        Interval::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        x.is_finite() && above && below
    }

    /// A representative point inside the interval.
    pub fn interior_point(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        }
    }
}

/// Parameter domain of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Product of intervals, one per coordinate.
    Box(Vec<Interval>),
    /// Positive integers 1, 2, 3, ... (scalar).
    Naturals,
    /// Explicit finite set of isolated scalar points.
    Grid(Vec<f64>),
}

const GRID_MATCH_TOL: f64 = 1e-12;

impl Domain {
    pub fn param_dim(&self) -> usize {
        match self {
            Domain::Box(iv) => iv.len(),
            Domain::Naturals | Domain::Grid(_) => 1,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Domain::Naturals | Domain::Grid(_))
    }

    pub fn contains(&self, p: &ParamPoint) -> bool {
        if p.dim() != self.param_dim() {
            return false;
        }
        match self {
            Domain::Box(iv) => iv.iter().zip(p.coords()).all(|(i, &x)| i.contains(x)),
            Domain::Naturals => {
                let x = p.0[0];
                x >= 1.0 && (x - x.round()).abs() < GRID_MATCH_TOL
            }
            Domain::Grid(g) => g.iter().any(|&v| (v - p.0[0]).abs() < GRID_MATCH_TOL),
        }
    }

    /// Whether no domain point lies strictly between `a` and `b` (scalar discrete domains).
    pub fn adjacent(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match self {
            Domain::Naturals => (hi - lo - 1.0).abs() < GRID_MATCH_TOL,
            Domain::Grid(g) => g
                .iter()
                .all(|&v| !(v > lo + GRID_MATCH_TOL && v < hi - GRID_MATCH_TOL)),
            Domain::Box(_) => false,
        }
    }
}

pub type StateFn = dyn Fn(&ParamPoint) -> Result<DensityMatrix> + Send + Sync;
pub type DerivativeFn = dyn Fn(&ParamPoint, usize) -> Result<HermMatrix> + Send + Sync;

/// A family of density matrices indexed by a parameter.
#[derive(Clone)]
pub struct ParametricModel {
    label: String,
    dim: usize,
    domain: Domain,
    state_fn: Arc<StateFn>,
    derivative_fn: Option<Arc<DerivativeFn>>,
}

impl fmt::Debug for ParametricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricModel")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ParametricModel {
    pub fn new<F>(label: impl Into<String>, dim: usize, domain: Domain, state_fn: F) -> Self
    where
        F: Fn(&ParamPoint) -> Result<DensityMatrix> + Send + Sync + 'static,
    {
        ParametricModel {
            label: label.into(),
            dim,
            domain,
            state_fn: Arc::new(state_fn),
            derivative_fn: None,
        }
    }

    /// Attaches an analytic partial derivative, used instead of finite differences.
    pub fn with_derivative<F>(mut self, f: F) -> Self
    where
        F: Fn(&ParamPoint, usize) -> Result<HermMatrix> + Send + Sync + 'static,
    {
        self.derivative_fn = Some(Arc::new(f));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.domain.param_dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative_fn.is_some()
    }

    fn domain_error(&self, p: &ParamPoint) -> Error {
        Error::Domain {
            model: self.label.clone(),
            point: p.0.clone(),
        }
    }

    pub fn state(&self, p: &ParamPoint) -> Result<DensityMatrix> {
        if !self.domain.contains(p) {
            return Err(self.domain_error(p));
        }
        (self.state_fn)(p)
    }

    /// Partial derivative along `coord`: analytic when available, otherwise a
    /// central difference refined by one Richardson step.
    pub fn derivative(
        &self,
        p: &ParamPoint,
        coord: usize,
        opts: &DerivativeOpts,
    ) -> Result<HermMatrix> {
        self.check_coord(coord)?;
        if !self.domain.contains(p) {
            return Err(self.domain_error(p));
        }
        if let Some(df) = &self.derivative_fn {
            return df(p, coord);
        }
        if self.domain.is_discrete() {
            return Err(Error::InvalidInput(format!(
                "model '{}' has a discrete domain and no derivative",
                self.label
            )));
        }
        let central = |h: f64| -> Result<CMatrix> {
            let plus = self.state(&p.shifted(coord, h))?;
            let minus = self.state(&p.shifted(coord, -h))?;
            Ok((plus.as_matrix() - minus.as_matrix()) * C64::new(0.5 / h, 0.0))
        };
        let h = opts.step;
        let coarse = central(h)?;
        let d = if opts.richardson {
            let fine = central(h / 2.0)?;
            (fine * C64::new(4.0, 0.0) - coarse) * C64::new(1.0 / 3.0, 0.0)
        } else {
            coarse
        };
        Ok(HermMatrix::hermitian_part(&d))
    }

    /// One-sided derivative along `coord` (`side = +1` right, `-1` left), with
    /// one Richardson step on the forward difference.
    pub fn one_sided_derivative(
        &self,
        p: &ParamPoint,
        coord: usize,
        side: Side,
        opts: &DerivativeOpts,
    ) -> Result<HermMatrix> {
        self.check_coord(coord)?;
        let base = self.state(p)?;
        let sgn = side.sign();
        let forward = |h: f64| -> Result<CMatrix> {
            let moved = self.state(&p.shifted(coord, sgn * h))?;
            Ok((moved.as_matrix() - base.as_matrix()) * C64::new(sgn / h, 0.0))
        };
        let h = opts.step;
        let coarse = forward(h)?;
        let d = if opts.richardson {
            let fine = forward(h / 2.0)?;
            fine * C64::new(2.0, 0.0) - coarse
        } else {
            coarse
        };
        Ok(HermMatrix::hermitian_part(&d))
    }

    fn check_coord(&self, coord: usize) -> Result<()> {
        if coord >= self.param_dim() {
            return Err(Error::InvalidInput(format!(
                "coordinate {coord} out of range for {}-parameter model",
                self.param_dim()
            )));
        }
        Ok(())
    }

    /// Convex combination of two models sharing dimension and domain.
    pub fn mixture(a: &ParametricModel, b: &ParametricModel, w: f64) -> Result<ParametricModel> {
        if a.dim != b.dim || a.domain != b.domain {
            return Err(Error::InvalidInput("models are not compatible".into()));
        }
        let (a2, b2) = (a.clone(), b.clone());
        Ok(ParametricModel::new(
            format!("mix({},{})", a.label, b.label),
            a.dim,
            a.domain.clone(),
            move |p| a2.state(p)?.mix(&b2.state(p)?, w),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeOpts {
    pub step: f64,
    pub richardson: bool,
}

impl Default for DerivativeOpts {
    fn default() -> Self {
        DerivativeOpts {
            step: 1e-5,
            richardson: true,
        }
    }
}

/// Step `delta` and split weight `t` per coordinate for the two-sided
/// difference `(f(x + t delta) - f(x - (1 - t) delta)) / delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSpec {
    pub delta: Vec<f64>,
    pub t: Vec<f64>,
}

impl DifferenceSpec {
    pub fn new(delta: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if delta.len() != t.len() || delta.is_empty() {
            return Err(Error::InvalidInput(
                "delta and t must have equal, nonzero length".into(),
            ));
        }
        if delta.iter().any(|&d| d == 0.0 || !d.is_finite()) {
            return Err(Error::InvalidInput(
                "difference step must be finite and nonzero".into(),
            ));
        }
        if t.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::InvalidInput(
                "split weight t must lie in [0, 1]".into(),
            ));
        }
        Ok(DifferenceSpec { delta, t })
    }

    pub fn scalar(delta: f64, t: f64) -> Result<Self> {
        Self::new(vec![delta], vec![t])
    }

    pub fn uniform(m: usize, delta: f64, t: f64) -> Result<Self> {
        Self::new(vec![delta; m], vec![t; m])
    }

    /// The two evaluation points `(x + t delta e_c, x - (1 - t) delta e_c)`.
    pub fn endpoints(&self, p: &ParamPoint, coord: usize) -> (ParamPoint, ParamPoint) {
        let (d, t) = (self.delta[coord], self.t[coord]);
        (p.shifted(coord, t * d), p.shifted(coord, -(1.0 - t) * d))
    }
}

/// Either a true derivative or a finite difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSpec {
    Derivative(DerivativeOpts),
    Difference(DifferenceSpec),
}

impl StepSpec {
    pub fn derivative() -> Self {
        StepSpec::Derivative(DerivativeOpts::default())
    }
}

fn check_spec_len(model: &ParametricModel, spec: &DifferenceSpec, coord: usize) -> Result<()> {
    if spec.delta.len() != model.param_dim() || coord >= model.param_dim() {
        return Err(Error::InvalidInput(format!(
            "difference spec has {} coordinates, model has {}",
            spec.delta.len(),
            model.param_dim()
        )));
    }
    Ok(())
}

/// `(rho(x + t delta e_c) - rho(x - (1 - t) delta e_c)) / delta`.
pub fn state_difference(
    model: &ParametricModel,
    p: &ParamPoint,
    spec: &DifferenceSpec,
    coord: usize,
) -> Result<HermMatrix> {
    check_spec_len(model, spec, coord)?;
    let (fwd, bwd) = spec.endpoints(p, coord);
    let a = model.state(&fwd)?;
    let b = model.state(&bwd)?;
    let d = (a.as_matrix() - b.as_matrix()) * C64::new(1.0 / spec.delta[coord], 0.0);
    Ok(HermMatrix::hermitian_part(&d))
}

/// The state's rate of change along `coord` as prescribed by `step`.
pub fn state_rate(
    model: &ParametricModel,
    p: &ParamPoint,
    step: &StepSpec,
    coord: usize,
) -> Result<HermMatrix> {
    match step {
        StepSpec::Derivative(opts) => model.derivative(p, coord, opts),
        StepSpec::Difference(spec) => state_difference(model, p, spec, coord),
    }
}

pub fn binomial(k: usize, i: usize) -> f64 {
    let mut c = 1.0;
    for j in 0..i.min(k - i) {
        c = c * (k - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Alternating binomial weights of the `k`-th forward difference with step
/// `delta`: the coefficient of `f(x + i delta)` is `(-1)^(k-i) C(k,i) / delta^k`.
pub fn kth_difference_weights(delta: f64, k: usize) -> Vec<f64> {
    let scale = delta.powi(-(k as i32));
    (0..=k)
        .map(|i| {
            let sign = if (k - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(k, i) * scale
        })
        .collect()
}

/// `(-1)^k delta^{-k} sum_i (-1)^i C(k,i) rho(x + i delta)` for scalar models.
pub fn kth_difference(
    model: &ParametricModel,
    p: &ParamPoint,
    delta: f64,
    k: usize,
) -> Result<HermMatrix> {
    if model.param_dim() != 1 {
        return Err(Error::InvalidInput(
            "k-th differences require a scalar model".into(),
        ));
    }
    if k == 0 || delta == 0.0 {
        return Err(Error::InvalidInput(
            "k-th difference needs k >= 1 and delta != 0".into(),
        ));
    }
    let n = model.dim();
    let mut acc = CMatrix::zeros(n, n);
    for (i, w) in kth_difference_weights(delta, k).into_iter().enumerate() {
        let rho = model.state(&p.shifted(0, i as f64 * delta))?;
        acc += rho.as_matrix() * C64::new(w, 0.0);
    }
    Ok(HermMatrix::hermitian_part(&acc))
}

pub type EstimandFn = dyn Fn(&ParamPoint) -> f64 + Send + Sync;

/// Real-valued function `g(theta)` to be estimated.
#[derive(Clone)]
pub struct EstimandFunction {
    label: String,
    f: Arc<EstimandFn>,
}

impl fmt::Debug for EstimandFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EstimandFunction({})", self.label)
    }
}

impl EstimandFunction {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&ParamPoint) -> f64 + Send + Sync + 'static,
    {
        EstimandFunction {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// `g(theta) = theta[coord]`.
    pub fn coordinate(coord: usize) -> Self {
        Self::new(format!("theta[{coord}]"), move |p| p.0[coord])
    }

    /// `g(theta) = |theta[0]|`.
    pub fn abs() -> Self {
        Self::new("|theta|", |p| p.0[0].abs())
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, p: &ParamPoint) -> f64 {
        (self.f)(p)
    }

    pub fn difference(&self, p: &ParamPoint, spec: &DifferenceSpec, coord: usize) -> f64 {
        let (fwd, bwd) = spec.endpoints(p, coord);
        (self.eval(&fwd) - self.eval(&bwd)) / spec.delta[coord]
    }

    pub fn derivative(&self, p: &ParamPoint, coord: usize, opts: &DerivativeOpts) -> f64 {
        let central = |h: f64| {
            (self.eval(&p.shifted(coord, h)) - self.eval(&p.shifted(coord, -h))) / (2.0 * h)
        };
        let coarse = central(opts.step);
        if opts.richardson {
            (4.0 * central(opts.step / 2.0) - coarse) / 3.0
        } else {
            coarse
        }
    }

    pub fn one_sided_derivative(
        &self,
        p: &ParamPoint,
        coord: usize,
        side: Side,
        opts: &DerivativeOpts,
    ) -> f64 {
        let s = side.sign();
        let base = self.eval(p);
        let fwd = |h: f64| (self.eval(&p.shifted(coord, s * h)) - base) / (s * h);
        let coarse = fwd(opts.step);
        if opts.richardson {
            2.0 * fwd(opts.step / 2.0) - coarse
        } else {
            coarse
        }
    }

    pub fn rate(&self, p: &ParamPoint, step: &StepSpec, coord: usize) -> f64 {
        match step {
            StepSpec::Derivative(o) => self.derivative(p, coord, o),
            StepSpec::Difference(s) => self.difference(p, s, coord),
        }
    }

    pub fn kth_difference(&self, p: &ParamPoint, delta: f64, k: usize) -> f64 {
        kth_difference_weights(delta, k)
            .into_iter()
            .enumerate()
            .map(|(i, w)| w * self.eval(&p.shifted(0, i as f64 * delta)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kth_difference_of_monomials() {
        for k in 1..=5usize {
            for j in 0..=k {
                let g = EstimandFunction::new("mono", move |p: &ParamPoint| p.0[0].powi(j as i32));
                for &(theta, delta) in &[(0.3, 0.7), (2.0, -1.0), (-1.5, 0.25)] {
                    let v = g.kth_difference(&ParamPoint::scalar(theta), delta, k);
                    let factorial: f64 = (1..=k).map(|x| x as f64).product();
                    let expected = if j < k { 0.0 } else { factorial };
                    assert!(
                        (v - expected).abs() < 1e-8 * factorial.max(1.0),
                        "k={k} j={j} theta={theta} delta={delta}: {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn first_difference_matches_forward_quotient() {
        let g = EstimandFunction::new("sq", |p: &ParamPoint| p.0[0] * p.0[0] + 1.0);
        let p = ParamPoint::scalar(0.4);
        let d1 = g.kth_difference(&p, 0.1, 1);
        let spec = DifferenceSpec::scalar(0.1, 1.0).unwrap();
        assert!((d1 - g.difference(&p, &spec, 0)).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(DifferenceSpec::scalar(0.0, 1.0).is_err());
        assert!(DifferenceSpec::scalar(0.1, 1.5).is_err());
        assert!(DifferenceSpec::new(vec![0.1], vec![]).is_err());
    }

    #[test]
    fn domains() {
        assert!(Domain::Naturals.contains(&ParamPoint::scalar(3.0)));
        assert!(!Domain::Naturals.contains(&ParamPoint::scalar(0.0)));
        assert!(!Domain::Naturals.contains(&ParamPoint::scalar(2.5)));
        assert!(Domain::Naturals.adjacent(4.0, 3.0));
        assert!(!Domain::Naturals.adjacent(4.0, 2.0));
        let g = Domain::Grid(vec![0.0, 0.5, 1.0]);
        assert!(g.adjacent(0.0, 0.5));
        assert!(!g.adjacent(0.0, 1.0));
        let b = Domain::Box(vec![Interval::open(-1.0, 1.0)]);
        assert!(!b.contains(&ParamPoint::scalar(1.0)));
        assert!(b.contains(&ParamPoint::scalar(0.999)));
    }
}

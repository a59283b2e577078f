//! Measurements, exact bias and mean square error, and Monte Carlo simulation
//! of the example estimators.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian, CMatrix, HermMatrix, C64};
use crate::models::{discrete_min_dim, EstimandFunction, ParamPoint, ParametricModel};

const PSD_TOL: f64 = 1e-10;
const PROBABILITY_SUM_TOL: f64 = 1e-8;

/// A measurement with real outcome values.
#[derive(Clone, Debug)]
pub struct Povm {
    outcomes: Vec<(f64, HermMatrix)>,
}

impl Povm {
    pub fn new(outcomes: Vec<(f64, HermMatrix)>) -> Result<Self> {
        let dim = match outcomes.first() {
            Some((_, e)) => e.dim(),
            None => return Err(Error::InvalidInput("POVM has no outcomes".into())),
        };
        for (value, e) in &outcomes {
            if e.dim() != dim || !value.is_finite() {
                return Err(Error::InvalidInput(
                    "POVM elements must share a dimension and have finite values".into(),
                ));
            }
            let min = eig_hermitian(e).values[0];
            if min < -PSD_TOL {
                return Err(Error::InvalidInput(format!(
                    "POVM element has eigenvalue {min:e}"
                )));
            }
        }
        Ok(Povm { outcomes })
    }

    /// Single outcome `value` with element `I`.
    pub fn trivial(value: f64, dim: usize) -> Self {
        Povm {
            outcomes: vec![(value, HermMatrix::identity(dim))],
        }
    }

    pub fn outcomes(&self) -> &[(f64, HermMatrix)] {
        &self.outcomes
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].1.dim()
    }

    /// Largest entry of `sum_k E_k - I`.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.dim();
        let mut sum = CMatrix::zeros(n, n);
        for (_, e) in &self.outcomes {
            sum += e.as_matrix();
        }
        (sum - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Born-rule outcome probabilities at `p`.
    pub fn probabilities(&self, model: &ParametricModel, p: &ParamPoint) -> Result<Vec<f64>> {
        let rho = model.state(p)?;
        if rho.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "POVM dimension {} does not match model dimension {}",
                self.dim(),
                rho.dim()
            )));
        }
        let probs: Vec<f64> = self
            .outcomes
            .iter()
            .map(|(_, e)| rho.expectation(e))
            .collect();
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::InconsistentPovm { sum });
        }
        Ok(probs)
    }
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub t: HermMatrix,
    /// Eigenvalues closer than this are merged; `None` means `1e-8 * |T|`.
    pub grouping_tol: Option<f64>,
}

impl Observable {
    pub fn new(t: HermMatrix) -> Self {
        Observable {
            t,
            grouping_tol: None,
        }
    }

    pub fn with_grouping_tol(mut self, tol: f64) -> Self {
        self.grouping_tol = Some(tol);
        self
    }
}

/// Spectral decomposition of an observable as a projection-valued measure.
/// Eigenvalues within the grouping tolerance of their neighbour share one
/// outcome, valued at the group mean.
pub fn observable_to_pvm(obs: &Observable) -> Povm {
    let eig = eig_hermitian(&obs.t);
    let scale = eig.values.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let tol = obs.grouping_tol.unwrap_or(1e-8 * scale);
    let n = obs.t.dim();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in eig.values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if l - eig.values[*g.last().unwrap()] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let outcomes = groups
        .into_iter()
        .map(|g| {
            let value = g.iter().map(|&i| eig.values[i]).sum::<f64>() / g.len() as f64;
            let mut proj = CMatrix::zeros(n, n);
            for &i in &g {
                let v = eig.vectors.column(i);
                proj += v * v.adjoint();
            }
            (value, HermMatrix::hermitian_part(&proj))
        })
        .collect();
    Povm { outcomes }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub theta: Vec<f64>,
    pub bias: f64,
    pub mse: f64,
    pub mode: EstimatorMode,
    pub n_copies: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Standard error of the Monte Carlo MSE estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

impl EstimatorReport {
    pub fn n_times_mse(&self) -> f64 {
        self.n_copies as f64 * self.mse
    }
}

/// Exact bias `sum (x - g) p(x)` and MSE `sum (x - g)^2 p(x)` of a single-copy measurement.
pub fn exact_bias_mse(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    povm: &Povm,
) -> Result<EstimatorReport> {
    let probs = povm.probabilities(model, p)?;
    let target = g.eval(p);
    let (mut bias, mut mse) = (0.0, 0.0);
    for ((value, _), prob) in povm.outcomes.iter().zip(&probs) {
        let err = value - target;
        bias += err * prob;
        mse += err * err * prob;
    }
    Ok(EstimatorReport {
        theta: p.0.clone(),
        bias,
        mse,
        mode: EstimatorMode::Exact,
        n_copies: 1,
        trials: None,
        seed: None,
        std_error: None,
    })
}

fn discrete_block(i: usize) -> [f64; 4] {
    let i = i as f64;
    [2.0 * i - 1.0, 0.5, 0.5, 2.0 * i + 0.5]
}

fn block_diagonal(dim_cut: usize, block: impl Fn(usize) -> [f64; 4]) -> HermMatrix {
    let mut t = CMatrix::zeros(dim_cut, dim_cut);
    for k in 0..dim_cut / 2 {
        let b = block(2 * k + 1);
        let r = 2 * k;
        t[(r, r)] = C64::new(b[0], 0.0);
        t[(r, r + 1)] = C64::new(b[1], 0.0);
        t[(r + 1, r)] = C64::new(b[2], 0.0);
        t[(r + 1, r + 1)] = C64::new(b[3], 0.0);
    }
    HermMatrix::hermitian_part(&t)
}

/// `T = diag(T_1, T_3, T_5, ...)`, `T_i = [[2i - 1, 1/2], [1/2, 2i + 1/2]]`.
pub fn discrete_optimal_observable(dim_cut: usize) -> Result<Observable> {
    if dim_cut < 4 || !dim_cut.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "dim_cut {dim_cut} must be even and >= 4"
        )));
    }
    Ok(Observable::new(block_diagonal(dim_cut, discrete_block)))
}

/// The variant tuned to odd `theta`: block `T_theta` replaced by
/// `diag(2 theta - 1, 2 theta + 1)`.
pub fn discrete_odd_observable(theta: usize, dim_cut: usize) -> Result<Observable> {
    if theta.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("theta = {theta} must be odd")));
    }
    if dim_cut < 4 || !dim_cut.is_multiple_of(2) || dim_cut < discrete_min_dim(theta) {
        return Err(Error::InvalidInput(format!(
            "dim_cut {dim_cut} too small for theta = {theta}"
        )));
    }
    Ok(Observable::new(block_diagonal(dim_cut, |i| {
        if i == theta {
            let th = theta as f64;
            [2.0 * th - 1.0, 0.0, 0.0, 2.0 * th + 1.0]
        } else {
            discrete_block(i)
        }
    })))
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Mean error, mean squared error and the standard error of the latter.
fn summarize(errors: &[f64]) -> (f64, f64, f64) {
    let n = errors.len() as f64;
    let bias = errors.iter().sum::<f64>() / n;
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    // shifted two-pass variance: exactly zero when all squared errors agree
    let var = if errors.len() > 1 {
        let x0 = errors[0] * errors[0];
        let (s1, s2) = errors.iter().fold((0.0, 0.0), |(a, b), e| {
            let d = e * e - x0;
            (a + d, b + d * d)
        });
        ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (bias, mse, (var / n).sqrt())
}

/// Two-step estimator of `|theta|` on the concurrence family: `n` copies
/// measured with `{Phi+, I - Phi+}` recorded as `+1/-1`, mean `y`, folded to
/// `-y` when `y < -n^(-1/3)`.
pub fn simulate_concurrence_estimator(
    theta: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<EstimatorReport> {
    if !(theta > -1.0 && theta < 1.0) {
        return Err(Error::Domain {
            model: "concurrence".into(),
            point: vec![theta],
        });
    }
    if n == 0 || trials == 0 {
        return Err(Error::InvalidInput("n and trials must be positive".into()));
    }
    let binom =
        Binomial::new(n, (1.0 + theta) / 2.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let threshold = -(n as f64).powf(-1.0 / 3.0);
    let target = theta.abs();
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let plus = binom.sample(&mut rng) as f64;
            let mean = (2.0 * plus - n as f64) / n as f64;
            let y = if mean < threshold { -mean } else { mean };
            y - target
        })
        .collect();
    let (bias, mse, se) = summarize(&errors);
    Ok(EstimatorReport {
        theta: vec![theta],
        bias,
        mse,
        mode: EstimatorMode::MonteCarlo,
        n_copies: n,
        trials: Some(trials),
        seed: Some(seed),
        std_error: Some(se),
    })
}

/// Measures each of `n_copies` copies with `povm` and estimates `g` by the
/// sample mean of the outcome values.
pub fn simulate_povm_sampling(
    model: &ParametricModel,
    p: &ParamPoint,
    g: &EstimandFunction,
    povm: &Povm,
    n_copies: u64,
    trials: u64,
    seed: u64,
) -> Result<EstimatorReport> {
    if n_copies == 0 || trials == 0 {
        return Err(Error::InvalidInput(
            "n_copies and trials must be positive".into(),
        ));
    }
    let probs: Vec<f64> = povm
        .probabilities(model, p)?
        .into_iter()
        .map(|q| q.max(0.0))
        .collect();
    let values: Vec<f64> = povm.outcomes.iter().map(|(v, _)| *v).collect();
    let dist = WeightedIndex::new(&probs).map_err(|_| Error::InconsistentPovm {
        sum: probs.iter().sum(),
    })?;
    let target = g.eval(p);
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let total: f64 = (0..n_copies).map(|_| values[dist.sample(&mut rng)]).sum();
            total / n_copies as f64 - target
        })
        .collect();
    let (bias, mse, se) = summarize(&errors);
    Ok(EstimatorReport {
        theta: p.0.clone(),
        bias,
        mse,
        mode: EstimatorMode::MonteCarlo,
        n_copies,
        trials: Some(trials),
        seed: Some(seed),
        std_error: Some(se),
    })
}

/// Outcome statistics of the first stage of the discrete-model scheme: each
/// copy is measured by the block projectors, and the largest observed even
/// index `theta_max` narrows the parameter to `{theta_max - 1, theta_max}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMaxReport {
    pub theta: u64,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    /// Fraction of trials with `theta` in `{theta_max - 1, theta_max}`.
    pub hit_rate: f64,
    /// Exact miss probability `(1 - p_top)^n`.
    pub exact_miss: f64,
}

pub fn simulate_discrete_block_max(
    theta: u64,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<BlockMaxReport> {
    if theta < 1 || n == 0 || trials == 0 {
        return Err(Error::InvalidInput(
            "theta, n and trials must be positive".into(),
        ));
    }
    let th = theta as f64;
    let blocks = theta.div_ceil(2) as usize;
    let mut probs = vec![2.0 / th; blocks];
    if theta % 2 == 1 {
        probs[blocks - 1] = 1.0 / th;
    }
    let top = probs[blocks - 1];
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let max_block = (0..n).map(|_| dist.sample(&mut rng)).max().unwrap_or(0);
            let theta_max = 2 * (max_block as u64 + 1);
            u64::from(theta == theta_max || theta + 1 == theta_max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(BlockMaxReport {
        theta,
        n,
        trials,
        seed,
        hit_rate: hits as f64 / trials as f64,
        exact_miss: (1.0 - top).powf(n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{concurrence_model, discrete_model};

    #[test]
    fn pvm_grouping() {
        let pvm = observable_to_pvm(&Observable::new(HermMatrix::identity(3)));
        assert_eq!(pvm.outcomes().len(), 1);
        assert!((pvm.outcomes()[0].0 - 1.0).abs() < 1e-15);
        let pvm = observable_to_pvm(&Observable::new(HermMatrix::from_diagonal(&[2.0, 1.0])));
        assert_eq!(pvm.outcomes().len(), 2);
        assert!((pvm.outcomes()[0].0 - 1.0).abs() < 1e-15);
        assert!(pvm.completeness_defect() < 1e-14);
    }

    #[test]
    fn discrete_estimator_is_unbiased() {
        let cut = 24;
        let model = discrete_model(cut);
        let pvm = observable_to_pvm(&discrete_optimal_observable(cut).unwrap());
        let g = EstimandFunction::coordinate(0);
        for theta in 1..=20 {
            let r = exact_bias_mse(&model, &ParamPoint::scalar(theta as f64), &g, &pvm).unwrap();
            assert!(r.bias.abs() < 1e-10, "theta={theta}: bias {}", r.bias);
        }
    }

    #[test]
    fn concurrence_observable_and_trivial_povm() {
        let model = concurrence_model();
        let pvm = observable_to_pvm(&Observable::new(HermMatrix::from_diagonal(&[1.0, -1.0])));
        let g = EstimandFunction::coordinate(0);
        let p = ParamPoint::scalar(0.4);
        let r = exact_bias_mse(&model, &p, &g, &pvm).unwrap();
        assert!(r.bias.abs() < 1e-15);
        assert!((r.mse - 0.84).abs() < 1e-14);
        let r = exact_bias_mse(&model, &p, &g, &Povm::trivial(1.5, 2)).unwrap();
        assert!((r.bias - 1.1).abs() < 1e-15);
        let mc = simulate_povm_sampling(&model, &p, &g, &Povm::trivial(1.5, 2), 3, 50, 1).unwrap();
        assert_eq!(mc.std_error, Some(0.0));
        assert!((mc.mse - 1.21).abs() < 1e-12);
        let bad = Povm::new(vec![(0.0, HermMatrix::from_diagonal(&[0.5, 0.5]))]).unwrap();
        assert!(matches!(
            exact_bias_mse(&model, &p, &g, &bad),
            Err(Error::InconsistentPovm { .. })
        ));
    }

    #[test]
    fn simulation_is_deterministic() {
        let a = simulate_concurrence_estimator(0.3, 500, 200, 42).unwrap();
        let b = simulate_concurrence_estimator(0.3, 500, 200, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_concurrence_estimator(0.3, 500, 200, 43).unwrap();
        assert_ne!(a.mse, c.mse);
    }

    #[test]
    fn block_max_hit_rate() {
        let r = simulate_discrete_block_max(5, 20, 4000, 3).unwrap();
        assert!((1.0 - r.hit_rate - r.exact_miss).abs() < 0.02);
    }
}

//! Stochastic kriging: Gaussian-process regression whose covariance is the
//! sum of an extrinsic squared-exponential term and known per-point
//! intrinsic (replication) noise variances.
//!
//! `K = sigma2 * R(lengthscales) + diag(v) + jitter * I`, constant trend `mu`
//! profiled by generalized least squares. Hyperparameters maximize the log
//! marginal likelihood by derivative-free multistart search in log space.

mod nelder_mead;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const LENGTHSCALE_BOX: (f64, f64) = (1e-2, 10.0);
const PROCESS_VARIANCE_BOX: (f64, f64) = (1e-6, 10.0);
const NUGGET_BOX: (f64, f64) = (1e-8, 1.0);
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Extrinsic process variance.
    pub process_variance: f64,
    pub lengthscales: Vec<f64>,
    /// Homoscedastic noise fitted when no intrinsic variances are known; 0
    /// otherwise.
    pub nugget: f64,
}

/// How the diagonal noise of the training covariance is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum IntrinsicNoise {
    /// Per-point variance of each response mean.
    Known(Vec<f64>),
    /// Unknown: fit one shared nugget alongside the other hyperparameters.
    FittedNugget,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub starts: usize,
    /// Likelihood evaluations allowed per start.
    pub max_evaluations: usize,
    /// Used as the first start when given (typically last iteration's fit).
    pub warm_start: Option<Hyperparameters>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 10,
            max_evaluations: 200,
            warm_start: None,
        }
    }
}

/// A fitted stochastic kriging model. Immutable once built.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    noise: Vec<f64>,
    hyper: Hyperparameters,
    trend: f64,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    /// `K^-1 (y - trend)`.
    weights: DVector<f64>,
    log_likelihood: f64,
}

/// Squared coordinate differences for every pair `i < k`, stored per
/// dimension so covariance rebuilds cost one multiply-add per dimension.
struct PairDistances {
    n: usize,
    per_dim: Vec<Vec<f64>>,
}

impl PairDistances {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        let mut per_dim = vec![Vec::with_capacity(n * (n - 1) / 2); d];
        for i in 0..n {
            for k in (i + 1)..n {
                for (j, col) in per_dim.iter_mut().enumerate() {
                    col.push((x[i][j] - x[k][j]).powi(2));
                }
            }
        }
        Self { n, per_dim }
    }

    fn covariance(&self, hyper: &Hyperparameters, diag: &[f64]) -> DMatrix<f64> {
        let inv: Vec<f64> = hyper
            .lengthscales
            .iter()
            .map(|l| 0.5 / (l * l))
            .collect();
        let n = self.n;
        let mut s = vec![0.0; n * (n - 1) / 2];
        for (col, w) in self.per_dim.iter().zip(&inv) {
            for (acc, d) in s.iter_mut().zip(col) {
                *acc += d * w;
            }
        }
        let mut k = DMatrix::zeros(n, n);
        let mut p = 0;
        for i in 0..n {
            k[(i, i)] = hyper.process_variance + diag[i];
            for kk in (i + 1)..n {
                let c = hyper.process_variance * (-s[p]).exp();
                k[(i, kk)] = c;
                k[(kk, i)] = c;
                p += 1;
            }
        }
        k
    }
}

fn correlation(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((u, v), l)| ((u - v) / l).powi(2))
        .sum();
    (-0.5 * s).exp()
}

/// Cholesky with escalating jitter (`1e-8 .. 1e-2` times the process
/// variance, factor 10 per step).
fn factorize(k: DMatrix<f64>, process_variance: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * process_variance;
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok((c, jitter));
        }
        rel *= 10.0;
        if rel > JITTER_MAX * 1.000_001 {
            return Err(Error::Conditioning(format!(
                "covariance of {} points not positive definite with jitter up to {:e} x process variance",
                k.nrows(),
                JITTER_MAX
            )));
        }
    }
}

/// Generalized-least-squares trend and centered likelihood pieces from a
/// factorization: returns `(trend, quadratic form)`.
fn profile(chol: &Cholesky<f64, Dyn>, y: &[f64], trend: Option<f64>) -> (f64, f64) {
    let n = y.len();
    let l = chol.l_dirty();
    let zy = l
        .solve_lower_triangular(&DVector::from_column_slice(y))
        .expect("non-singular factor");
    let z1 = l
        .solve_lower_triangular(&DVector::from_element(n, 1.0))
        .expect("non-singular factor");
    let mu = trend.unwrap_or_else(|| z1.dot(&zy) / z1.dot(&z1));
    let zc = zy - z1 * mu;
    (mu, zc.norm_squared())
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn total_noise(noise: &[f64], nugget: f64) -> Vec<f64> {
    noise.iter().map(|v| v + nugget).collect()
}

fn check_inputs(x: &[Vec<f64>], y: &[f64], noise: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::domain("no training points"));
    }
    if x.len() != y.len() || x.len() != noise.len() {
        return Err(Error::domain(format!(
            "inconsistent training sizes: {} inputs, {} responses, {} variances",
            x.len(),
            y.len(),
            noise.len()
        )));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::domain("ragged training inputs"));
    }
    if let Some(v) = noise.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("intrinsic variance {v} is not a finite non-negative value")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite response"));
    }
    for i in 0..x.len() {
        for k in (i + 1)..x.len() {
            if x[i] == x[k] {
                return Err(Error::domain(format!(
                    "training inputs {i} and {k} coincide; pool their replications instead"
                )));
            }
        }
    }
    Ok(())
}

/// Exact Gaussian log marginal likelihood of `y` under trend `trend` and
/// covariance `sigma2 R + diag(v + nugget) + jitter I`.
pub fn log_marginal_likelihood(
    hyper: &Hyperparameters,
    trend: f64,
    x: &[Vec<f64>],
    y: &[f64],
    v: &[f64],
) -> Result<f64> {
    check_inputs(x, y, v)?;
    if hyper.lengthscales.len() != x[0].len() {
        return Err(Error::domain("lengthscale count differs from input dimension"));
    }
    let pairs = PairDistances::new(x);
    let k = pairs.covariance(hyper, &total_noise(v, hyper.nugget));
    let (chol, _) = factorize(k, hyper.process_variance)?;
    let (_, quad) = profile(&chol, y, Some(trend));
    Ok(-0.5 * quad - 0.5 * log_det(&chol) - 0.5 * y.len() as f64 * LN_2PI)
}

struct SearchBox {
    ln_lo: Vec<f64>,
    ln_hi: Vec<f64>,
    fit_nugget: bool,
    d: usize,
}

impl SearchBox {
    fn new(d: usize, scale: f64, fit_nugget: bool) -> Self {
        let mut ln_lo = vec![LENGTHSCALE_BOX.0.ln(); d];
        let mut ln_hi = vec![LENGTHSCALE_BOX.1.ln(); d];
        ln_lo.push((PROCESS_VARIANCE_BOX.0 * scale).ln());
        ln_hi.push((PROCESS_VARIANCE_BOX.1 * scale).ln());
        if fit_nugget {
            ln_lo.push((NUGGET_BOX.0 * scale).ln());
            ln_hi.push((NUGGET_BOX.1 * scale).ln());
        }
        Self {
            ln_lo,
            ln_hi,
            fit_nugget,
            d,
        }
    }

    fn dim(&self) -> usize {
        self.ln_lo.len()
    }

    fn decode(&self, theta: &[f64]) -> Hyperparameters {
        let v: Vec<f64> = theta
            .iter()
            .zip(self.ln_lo.iter().zip(&self.ln_hi))
            .map(|(t, (lo, hi))| (lo + t * (hi - lo)).exp())
            .collect();
        Hyperparameters {
            lengthscales: v[..self.d].to_vec(),
            process_variance: v[self.d],
            nugget: if self.fit_nugget { v[self.d + 1] } else { 0.0 },
        }
    }

    fn encode(&self, h: &Hyperparameters) -> Vec<f64> {
        let mut v = h.lengthscales.clone();
        v.push(h.process_variance);
        if self.fit_nugget {
            v.push(h.nugget.max(f64::MIN_POSITIVE));
        }
        v.iter()
            .zip(self.ln_lo.iter().zip(&self.ln_hi))
            .map(|(x, (lo, hi))| ((x.ln() - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }
}

impl KrigingModel {
    /// Fit hyperparameters by maximum likelihood and cache the posterior.
    pub fn fit<R: Rng + ?Sized>(
        x: &[Vec<f64>],
        y: &[f64],
        noise: IntrinsicNoise,
        opts: &FitOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::domain("kriging fit needs at least two points"));
        }
        let (v, fit_nugget) = match noise {
            IntrinsicNoise::Known(v) => (v, false),
            IntrinsicNoise::FittedNugget => (vec![0.0; n], true),
        };
        check_inputs(x, y, &v)?;
        let d = x[0].len();

        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let scale = if var > 1e-300 { var } else { 1.0 };
        let search = SearchBox::new(d, scale, fit_nugget);
        let pairs = PairDistances::new(x);

        let mut objective = |theta: &[f64]| -> f64 {
            let h = search.decode(theta);
            let k = pairs.covariance(&h, &total_noise(&v, h.nugget));
            match factorize(k, h.process_variance) {
                Ok((chol, _)) => {
                    let (_, quad) = profile(&chol, y, None);
                    0.5 * quad + 0.5 * log_det(&chol)
                }
                Err(_) => f64::INFINITY,
            }
        };

        let starts = opts.starts.max(1);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in 0..starts {
            let start = match (&opts.warm_start, s) {
                (Some(h), 0) if h.lengthscales.len() == d => search.encode(h),
                (_, 0) => vec![0.5; search.dim()],
                _ => (0..search.dim()).map(|_| rng.gen::<f64>()).collect(),
            };
            let (theta, val) =
                nelder_mead::minimize_in_unit_box(&mut objective, &start, opts.max_evaluations);
            if val.is_finite() && best.as_ref().map_or(true, |(_, b)| val < *b) {
                best = Some((theta, val));
            }
        }
        let (theta, _) = best.ok_or_else(|| {
            Error::Conditioning(format!(
                "no hyperparameter candidate gave a positive definite covariance for {n} points"
            ))
        })?;
        Self::assemble(x, y, &v, search.decode(&theta), &pairs)
    }

    /// Build the posterior at fixed hyperparameters (trend still profiled).
    pub fn with_hyperparameters(
        x: &[Vec<f64>],
        y: &[f64],
        v: &[f64],
        hyper: Hyperparameters,
    ) -> Result<Self> {
        check_inputs(x, y, v)?;
        if hyper.lengthscales.len() != x[0].len() {
            return Err(Error::domain("lengthscale count differs from input dimension"));
        }
        Self::assemble(x, y, v, hyper, &PairDistances::new(x))
    }

    fn assemble(
        x: &[Vec<f64>],
        y: &[f64],
        v: &[f64],
        hyper: Hyperparameters,
        pairs: &PairDistances,
    ) -> Result<Self> {
        let noise = total_noise(v, hyper.nugget);
        let k = pairs.covariance(&hyper, &noise);
        let (chol, jitter) = factorize(k, hyper.process_variance)?;
        let (trend, quad) = profile(&chol, y, None);
        let log_likelihood = -0.5 * quad - 0.5 * log_det(&chol) - 0.5 * y.len() as f64 * LN_2PI;
        let centered = DVector::from_iterator(y.len(), y.iter().map(|t| t - trend));
        let weights = chol.solve(&centered);
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            noise,
            hyper,
            trend,
            jitter,
            chol,
            weights,
            log_likelihood,
        })
    }

    /// Posterior mean and extrinsic variance at `x`; the query's own
    /// intrinsic noise is not included.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.hyper.lengthscales.len());
        let s2 = self.hyper.process_variance;
        let k = DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .map(|xi| s2 * correlation(x, xi, &self.hyper.lengthscales)),
        );
        let mean = self.trend + k.dot(&self.weights);
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("non-singular factor");
        let var = (s2 - z.norm_squared()).max(0.0);
        (mean, var)
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn trend(&self) -> f64 {
        self.trend
    }

    /// Diagonal jitter that made the covariance factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    /// Diagonal noise used in training (intrinsic variances plus nugget).
    pub fn noise(&self) -> &[f64] {
        &self.noise
    }
}

//! Logistic-regression probability of feasibility.
//!
//! The training objective is the l2-regularized negative log-likelihood
//! `sum_i [ln(1 + e^z_i) - y_i z_i] + lambda/2 |w|^2` with `z = w.x + b`; the
//! bias is not penalized. Minimized by Newton / IRLS with step halving.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::problem::ReplicatedObservation;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const GRADIENT_TOLERANCE: f64 = 1e-7;
const PROBABILITY_FLOOR: f64 = 1e-12;

/// How replications of one design collapse to a single training label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRule {
    /// Feasible only if every replication was feasible.
    #[default]
    All,
    /// Feasible if strictly more than half the replications were.
    Majority,
}

impl LabelRule {
    pub fn label(self, obs: &ReplicatedObservation) -> bool {
        match self {
            LabelRule::All => obs.failed() == 0,
            LabelRule::Majority => obs.feasible_fraction > 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Logistic,
    /// One-class data: Laplace-smoothed empirical frequency, no slope.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub kind: ClassifierKind,
    pub report: ConvergenceReport,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularized negative log-likelihood at `(w, b)`.
pub fn objective(x: &[Vec<f64>], labels: &[bool], lambda: f64, w: &[f64], b: f64) -> f64 {
    let nll: f64 = x
        .iter()
        .zip(labels)
        .map(|(xi, &yi)| {
            let z = dot(w, xi) + b;
            softplus(z) - if yi { z } else { 0.0 }
        })
        .sum();
    nll + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Gradient of [`objective`]; the last component is the bias.
pub fn gradient(x: &[Vec<f64>], labels: &[bool], lambda: f64, w: &[f64], b: f64) -> Vec<f64> {
    let d = w.len();
    let mut g = vec![0.0; d + 1];
    for (xi, &yi) in x.iter().zip(labels) {
        let r = sigmoid(dot(w, xi) + b) - if yi { 1.0 } else { 0.0 };
        for j in 0..d {
            g[j] += r * xi[j];
        }
        g[d] += r;
    }
    for j in 0..d {
        g[j] += lambda * w[j];
    }
    g
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl LogisticModel {
    /// Fit by IRLS; one-class data returns the constant classifier.
    pub fn fit(x: &[Vec<f64>], labels: &[bool], lambda: f64) -> Result<Self> {
        Self::fit_capped(x, labels, lambda, MAX_ITERATIONS)
    }

    pub(crate) fn fit_capped(
        x: &[Vec<f64>],
        labels: &[bool],
        lambda: f64,
        max_iterations: usize,
    ) -> Result<Self> {
        let n = x.len();
        if n == 0 || labels.len() != n {
            return Err(Error::domain(format!(
                "logistic fit needs matching non-empty data ({} inputs, {} labels)",
                n,
                labels.len()
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("regularization {lambda} must be non-negative")));
        }
        let d = x[0].len();
        let positives = labels.iter().filter(|&&l| l).count();
        if positives == 0 || positives == n {
            return Ok(Self::constant(d, positives, n, lambda));
        }

        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut f = objective(x, labels, lambda, &w, b);
        for it in 0..=max_iterations {
            let g = gradient(x, labels, lambda, &w, b);
            let gnorm = inf_norm(&g);
            if gnorm <= GRADIENT_TOLERANCE {
                return Ok(Self {
                    weights: w,
                    bias: b,
                    lambda,
                    kind: ClassifierKind::Logistic,
                    report: ConvergenceReport {
                        iterations: it,
                        gradient_norm: gnorm,
                    },
                });
            }
            if it == max_iterations {
                return Err(Error::Convergence {
                    iterations: it,
                    gradient_norm: gnorm,
                });
            }

            let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
            for xi in x {
                let p = sigmoid(dot(&w, xi) + b);
                let s = (p * (1.0 - p)).max(1e-12);
                for r in 0..=d {
                    let xr = if r < d { xi[r] } else { 1.0 };
                    for c in 0..=r {
                        let xc = if c < d { xi[c] } else { 1.0 };
                        h[(r, c)] += s * xr * xc;
                    }
                }
            }
            for r in 0..=d {
                if r < d {
                    h[(r, r)] += lambda;
                }
                for c in 0..r {
                    h[(c, r)] = h[(r, c)];
                }
            }
            let gv = DVector::from_column_slice(&g);
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&gv),
                None => h.lu().solve(&gv).unwrap_or_else(|| gv.clone()),
            };

            let mut t = 1.0;
            loop {
                let w_new: Vec<f64> = w.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                let b_new = b - t * step[d];
                let f_new = objective(x, labels, lambda, &w_new, b_new);
                if f_new <= f || t < 1e-10 {
                    w = w_new;
                    b = b_new;
                    f = f_new;
                    break;
                }
                t *= 0.5;
            }
        }
        unreachable!("loop returns at the iteration cap")
    }

    fn constant(d: usize, positives: usize, n: usize, lambda: f64) -> Self {
        let p = (positives as f64 + 1.0) / (n as f64 + 2.0);
        Self {
            weights: vec![0.0; d],
            bias: (p / (1.0 - p)).ln(),
            lambda,
            kind: ClassifierKind::Constant,
            report: ConvergenceReport {
                iterations: 0,
                gradient_norm: 0.0,
            },
        }
    }

    /// `sigmoid(w.x + b)` clamped to `[1e-12, 1 - 1e-12]`.
    pub fn predict_probability(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    }
}

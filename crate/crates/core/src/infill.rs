//! Infill selection: modified expected improvement (MEI) times probability
//! of feasibility, maximized by a global-best particle swarm.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::feasibility::LogisticModel;
use crate::problem::{DesignPoint, DesignSpace};
use crate::surrogate::KrigingModel;
use crate::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn normal_pdf(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * u * u).exp()
}

fn normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u / std::f64::consts::SQRT_2)
}

/// Closed-form expected improvement below `y_star` of `N(mean, sd^2)`.
/// Falls back to the deterministic improvement when `sd <= 1e-12`.
pub fn expected_improvement(mean: f64, sd: f64, y_star: f64) -> f64 {
    let diff = y_star - mean;
    if sd <= 1e-12 {
        return diff.max(0.0);
    }
    let u = diff / sd;
    (diff * normal_cdf(u) + sd * normal_pdf(u)).max(0.0)
}

/// MEI at `x`: the improvement target `y_star` is a predicted mean (not a
/// noisy observation) and the spread is the extrinsic kriging deviation.
pub fn mei(model: &KrigingModel, x: &[f64], y_star: f64) -> f64 {
    let (m, v) = model.predict(x);
    expected_improvement(m, v.sqrt(), y_star)
}

/// Minimum posterior mean over the already sampled inputs.
pub fn plug_in_best(model: &KrigingModel) -> f64 {
    model
        .inputs()
        .iter()
        .map(|x| model.predict(x).0)
        .fold(f64::INFINITY, f64::min)
}

/// MEI weighted by the classifier's probability of feasibility.
pub struct InfillCriterion<'a> {
    pub model: &'a KrigingModel,
    pub classifier: &'a LogisticModel,
    pub y_star: f64,
}

impl<'a> InfillCriterion<'a> {
    pub fn new(model: &'a KrigingModel, classifier: &'a LogisticModel) -> Self {
        Self {
            model,
            classifier,
            y_star: plug_in_best(model),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        mei(self.model, x, self.y_star) * self.classifier.predict_probability(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-dimension speed limit in unit-cube coordinates.
    pub velocity_cap: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            iterations: 100,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_cap: 0.5,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config("pso swarm_size must be at least 2".into()));
        }
        if !(self.inertia > 0.0 && self.inertia < 1.0) {
            return Err(Error::Config("pso inertia must lie in (0,1)".into()));
        }
        if !(self.cognitive > 0.0 && self.social > 0.0 && self.velocity_cap > 0.0) {
            return Err(Error::Config(
                "pso cognitive, social and velocity_cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A decoded point the swarm evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Unit-cube image of `design` (after integer rounding).
    pub unit: Vec<f64>,
    pub design: DesignPoint,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    /// Best distinct candidates seen, best first. Never empty.
    pub candidates: Vec<Candidate>,
    pub evaluations: usize,
}

impl PsoOutcome {
    pub fn best(&self) -> &Candidate {
        &self.candidates[0]
    }
}

const KEPT_CANDIDATES: usize = 16;

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

fn record(best: &mut Vec<(Vec<f64>, f64)>, unit: &[f64], value: f64) {
    if let Some(i) = best.iter().position(|(u, _)| same_point(u, unit)) {
        if value <= best[i].1 {
            return;
        }
        best.remove(i);
    } else if best.len() == KEPT_CANDIDATES && value <= best[KEPT_CANDIDATES - 1].1 {
        return;
    }
    let pos = best.partition_point(|(_, v)| *v >= value);
    best.insert(pos, (unit.to_vec(), value));
    best.truncate(KEPT_CANDIDATES);
}

/// Global-best PSO over the unit cube of `space`.
///
/// Particles move continuously; each position is decoded (integer and
/// binary dimensions rounded) and the criterion is evaluated at the
/// re-encoded point, so personal and global bests are post-rounding.
/// Positions leaving the cube are clamped and that velocity component zeroed.
pub fn pso_maximize<F, R>(
    mut criterion: F,
    space: &DesignSpace,
    cfg: &PsoConfig,
    rng: &mut R,
) -> Result<PsoOutcome>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let d = space.len();
    let cap = cfg.velocity_cap;
    let mut pos: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| (0..d).map(|_| rng.gen_range(-cap..=cap)).collect())
        .collect();

    let mut evaluations = 0;
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut evaluate = |x: &[f64], kept: &mut Vec<(Vec<f64>, f64)>| -> Result<(Vec<f64>, f64)> {
        let unit = space.snap(x)?;
        let mut value = criterion(&unit);
        if value.is_nan() {
            value = f64::NEG_INFINITY;
        }
        evaluations += 1;
        record(kept, &unit, value);
        Ok((unit, value))
    };

    let mut personal: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cfg.swarm_size);
    for p in &pos {
        let (_, v) = evaluate(p, &mut kept)?;
        personal.push((p.clone(), v));
    }
    let mut global = personal
        .iter()
        .fold(None::<&(Vec<f64>, f64)>, |acc, p| match acc {
            Some(a) if a.1 >= p.1 => Some(a),
            _ => Some(p),
        })
        .cloned()
        .expect("swarm is non-empty");

    for _ in 0..cfg.iterations {
        for i in 0..cfg.swarm_size {
            for j in 0..d {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = cfg.inertia * vel[i][j]
                    + cfg.cognitive * r1 * (personal[i].0[j] - pos[i][j])
                    + cfg.social * r2 * (global.0[j] - pos[i][j]);
                vel[i][j] = v.clamp(-cap, cap);
                let x = pos[i][j] + vel[i][j];
                if !(0.0..=1.0).contains(&x) {
                    vel[i][j] = 0.0;
                }
                pos[i][j] = x.clamp(0.0, 1.0);
            }
            let (_, v) = evaluate(&pos[i], &mut kept)?;
            if v > personal[i].1 {
                personal[i] = (pos[i].clone(), v);
                if v > global.1 {
                    global = personal[i].clone();
                }
            }
        }
    }

    let candidates = kept
        .into_iter()
        .map(|(unit, value)| {
            let design = space.decode(&unit)?;
            Ok(Candidate {
                unit,
                design,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PsoOutcome {
        candidates,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{ClassifierKind, ConvergenceReport};
    use crate::problem::Dimension;
    use crate::surrogate::Hyperparameters;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube(d: usize) -> DesignSpace {
        DesignSpace::new((0..d).map(|i| Dimension::continuous(&format!("x{i}"), 0.0, 1.0)).collect())
            .unwrap()
    }

    fn constant_classifier(d: usize, p: f64) -> LogisticModel {
        LogisticModel {
            weights: vec![0.0; d],
            bias: (p / (1.0 - p)).ln(),
            lambda: 0.0,
            kind: ClassifierKind::Constant,
            report: ConvergenceReport {
                iterations: 0,
                gradient_norm: 0.0,
            },
        }
    }

    fn toy_model() -> KrigingModel {
        let x = vec![vec![0.1, 0.2], vec![0.8, 0.3], vec![0.4, 0.9], vec![0.6, 0.6]];
        let y = [1.0, 0.2, 0.7, 0.5];
        KrigingModel::with_hyperparameters(
            &x,
            &y,
            &[0.01; 4],
            Hyperparameters {
                process_variance: 0.5,
                lengthscales: vec![0.3, 0.3],
                nugget: 0.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert!((expected_improvement(0.0, 1.0, 0.0) - 0.3989).abs() < 1e-4);
        assert_eq!(expected_improvement(1.0, 0.0, 0.0), 0.0);
        assert_eq!(expected_improvement(-2.0, 1e-13, 0.0), 2.0);
    }

    #[test]
    fn criterion_scales_with_probability() {
        let model = toy_model();
        let half = constant_classifier(2, 0.5);
        let c = InfillCriterion::new(&model, &half);
        for x in [[0.3, 0.3], [0.9, 0.1], [0.5, 0.5]] {
            let m = mei(&model, &x, c.y_star);
            assert!((c.value(&x) - 0.5 * m).abs() <= 1e-15 * m.max(1.0));
            assert!(c.value(&x) >= 0.0);
        }
        let floor = LogisticModel {
            bias: -80.0,
            ..constant_classifier(2, 0.5)
        };
        let c = InfillCriterion::new(&model, &floor);
        let x = [0.95, 0.05];
        assert!(mei(&model, &x, c.y_star) > 0.0);
        assert!(c.value(&x) > 0.0);
    }

    #[test]
    fn y_star_is_min_predicted_mean() {
        let model = toy_model();
        let want = model
            .inputs()
            .iter()
            .map(|x| model.predict(x).0)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(plug_in_best(&model), want);
        assert!(want > 0.15, "noisy points are smoothed, not interpolated");
    }

    #[test]
    fn mei_monotone_in_target_and_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            // keep |y - m| / s moderate so neither value underflows to 0
            let m = rng.gen_range(-3.0..3.0);
            let s = rng.gen_range(0.05..2.0);
            let y = m + s * rng.gen_range(-6.0..6.0);
            assert!(expected_improvement(m, s, y + 0.1) > expected_improvement(m, s, y));
            let above = y + s * rng.gen_range(0.01..6.0);
            assert!(
                expected_improvement(above, s * 1.1, y) > expected_improvement(above, s, y)
            );
        }
    }

    #[test]
    fn constant_criterion_terminates() {
        let cfg = PsoConfig {
            iterations: 7,
            ..Default::default()
        };
        let out = pso_maximize(|_| 1.0, &cube(3), &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.evaluations, 40 * 8);
        assert!(out.best().unit.iter().all(|u| (0.0..=1.0).contains(u)));
    }

    #[test]
    fn integer_level_found_exactly() {
        let space = DesignSpace::new(vec![Dimension::integer("k", 1, 5)]).unwrap();
        let truth = |k: f64| -(k - 3.0).powi(2);
        let best = (1..=5).map(|k| k as f64).max_by(|a, b| truth(*a).total_cmp(&truth(*b)));
        assert_eq!(best, Some(3.0));
        let out = pso_maximize(
            |u| truth(space.decode(u).unwrap().get(0)),
            &space,
            &PsoConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        assert_eq!(out.best().design.get(0), 3.0);
    }

    #[test]
    fn bowl_center_and_bounds() {
        let out = pso_maximize(
            |x| {
                assert!(x.iter().all(|u| (0.0..=1.0).contains(u)));
                -x.iter().map(|u| (u - 0.5).powi(2)).sum::<f64>()
            },
            &cube(6),
            &PsoConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let dist = out.best().unit.iter().map(|u| (u - 0.5).powi(2)).sum::<f64>().sqrt();
        assert!(dist < 0.05, "distance {dist}");
    }

    #[test]
    fn positive_scaling_keeps_argmax() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() * x[1] + (x[2] - 0.2).powi(2);
        let space = cube(3);
        let a = pso_maximize(f, &space, &PsoConfig::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = pso_maximize(|x: &[f64]| 10.0 * f(x), &space, &PsoConfig::default(), &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        assert_eq!(a.best().unit, b.best().unit);
    }

    #[test]
    fn candidates_are_distinct_and_sorted() {
        let space = DesignSpace::new(vec![Dimension::integer("k", 0, 3), Dimension::binary("b")]).unwrap();
        let out = pso_maximize(
            |u| u[0] + 0.1 * u[1],
            &space,
            &PsoConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(out.candidates.len(), 8);
        assert!(out.candidates.windows(2).all(|w| w[0].value >= w[1].value));
        assert_eq!(out.best().design.values(), &[3.0, 1.0]);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = PsoConfig {
            swarm_size: 1,
            ..Default::default()
        };
        assert!(pso_maximize(|_| 0.0, &cube(1), &cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}

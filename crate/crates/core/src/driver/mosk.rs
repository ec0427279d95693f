use std::time::Instant;

use log::{debug, warn};
use rand::Rng;

use super::config::{Algorithm, DuplicatePolicy, RunConfig};
use super::{
    derived_rng, EvaluationRecord, RunOutcome, STREAM_FALLBACK, STREAM_LHS, STREAM_NSGA2,
    STREAM_SIMULATION, STREAM_SURROGATE, STREAM_SWARM, STREAM_WEIGHTS,
};
use crate::baseline::{nsga2_run, BiObjectiveProblem, Evaluation};
use crate::feasibility::{LabelRule, LogisticModel};
use crate::infill::{pso_maximize, InfillCriterion};
use crate::pareto::{sample_weights, Canonical, ParetoArchive, Scalarizer, Weights};
use crate::problem::{DesignPoint, DesignSpace, Ledger, ReplicatedObservation, Simulator};
use crate::sampling::latin_hypercube;
use crate::surrogate::{FitOptions, Hyperparameters, IntrinsicNoise, KrigingModel};
use crate::{Error, Result};

/// Models fitted in one MOSK iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub iteration: usize,
    pub scalarizer: Scalarizer,
    pub y_star: f64,
    pub hyperparameters: Hyperparameters,
    pub trend: f64,
    pub log_likelihood: f64,
    /// True when no replicated design existed and a nugget was fitted.
    pub fitted_nugget: bool,
    pub classifier: LogisticModel,
}

#[derive(Debug, Clone)]
struct Sampled {
    obs: ReplicatedObservation,
    unit: Vec<f64>,
}

/// Mutable state of the MOSK loop.
pub struct RunState {
    designs: Vec<Sampled>,
    pub kriging: Option<KrigingModel>,
    pub classifier: Option<LogisticModel>,
    pub archive: ParetoArchive,
    pub ledger: Ledger,
    pub iteration: usize,
}

impl RunState {
    pub fn designs(&self) -> impl Iterator<Item = &ReplicatedObservation> {
        self.designs.iter().map(|s| &s.obs)
    }

    fn find(&self, unit: &[f64]) -> Option<usize> {
        self.designs
            .iter()
            .position(|s| s.unit.iter().zip(unit).all(|(a, b)| (a - b).abs() <= 1e-9))
    }

    fn canonical_means(&self) -> Vec<Canonical> {
        self.designs
            .iter()
            .map(|s| [-s.obs.mean_strength, s.obs.cost])
            .collect()
    }
}

struct Mosk<'a> {
    cfg: &'a RunConfig,
    sim: Simulator,
    state: RunState,
    records: Vec<EvaluationRecord>,
    models: Vec<ModelRecord>,
    started: Instant,
}

impl<'a> Mosk<'a> {
    fn space(&self) -> &DesignSpace {
        self.sim.space()
    }

    /// Simulate `design` and pool or append; returns the row index.
    fn evaluate(&mut self, design: &DesignPoint, unit: Vec<f64>) -> Result<usize> {
        let index = self.state.ledger.designs as u64;
        let mut rng = derived_rng(self.cfg.run.seed, STREAM_SIMULATION, index);
        let obs = self.sim.simulate_replicated(
            design,
            self.cfg.run.replications,
            &mut rng,
            &mut self.state.ledger,
        )?;
        Ok(match self.state.find(&unit) {
            Some(i) => {
                self.state.designs[i].obs.pool(obs.replications);
                i
            }
            None => {
                self.state.designs.push(Sampled { obs, unit });
                self.state.designs.len() - 1
            }
        })
    }

    fn record(&mut self, row: usize, scalarized: Option<f64>, criterion: Option<f64>) {
        let s = &self.state.designs[row].obs;
        let rec = EvaluationRecord {
            iteration: self.state.iteration,
            design: s.design.clone(),
            replications: self.cfg.run.replications,
            total_replications: s.count(),
            mean_strength: s.mean_strength,
            cost: s.cost,
            feasible: self.cfg.run.label_rule.label(s),
            failed: s.failed(),
            scalarized,
            criterion,
            wall_clock: self.started.elapsed().as_secs_f64(),
        };
        self.state.archive.update([rec.archive_member()]);
        self.records.push(rec);
    }

    fn initial_design(&mut self) -> Result<()> {
        let mut rng = derived_rng(self.cfg.run.seed, STREAM_LHS, 0);
        let designs = latin_hypercube(self.cfg.run.initial_designs, self.space(), &mut rng)?;
        for d in designs {
            let unit = self.space().encode(&d)?;
            let row = self.evaluate(&d, unit)?;
            self.record(row, None, None);
        }
        Ok(())
    }

    /// Intrinsic variance of each scalarized mean by the delta method on the
    /// strength term (cost is noise-free). Unreplicated designs use the mean
    /// of the available sample variances; with none available a nugget is
    /// fitted instead.
    fn intrinsic_noise(&self, scal: &Scalarizer, points: &[Canonical]) -> IntrinsicNoise {
        let replicated: Vec<f64> = self
            .state
            .designs
            .iter()
            .filter(|s| s.obs.count() > 1)
            .map(|s| s.obs.var_strength)
            .collect();
        if replicated.is_empty() {
            return IntrinsicNoise::FittedNugget;
        }
        let pooled = replicated.iter().sum::<f64>() / replicated.len() as f64;
        IntrinsicNoise::Known(
            self.state
                .designs
                .iter()
                .zip(points)
                .map(|(s, f)| {
                    let var = if s.obs.count() > 1 {
                        s.obs.var_strength
                    } else {
                        pooled
                    };
                    scal.first_objective_slope(f).powi(2) * var / s.obs.count() as f64
                })
                .collect(),
        )
    }

    fn fit_surrogate(&self, x: &[Vec<f64>], y: &[f64], noise: IntrinsicNoise) -> Result<KrigingModel> {
        let it = self.state.iteration as u64;
        let warm = self.state.kriging.as_ref().and_then(|m| {
            let nugget_mode = matches!(noise, IntrinsicNoise::FittedNugget);
            ((m.hyperparameters().nugget > 0.0) == nugget_mode).then(|| m.hyperparameters().clone())
        });
        let opts = FitOptions {
            starts: self.cfg.surrogate.starts,
            max_evaluations: self.cfg.surrogate.max_evaluations,
            warm_start: warm,
        };
        let mut rng = derived_rng(self.cfg.run.seed, STREAM_SURROGATE, 2 * it);
        match KrigingModel::fit(x, y, noise.clone(), &opts, &mut rng) {
            Err(Error::Conditioning(msg)) => {
                warn!("iteration {it}: {msg}; retrying with inflated diagonal");
                let n = y.len() as f64;
                let mean = y.iter().sum::<f64>() / n;
                let floor = 1e-2 * y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let noise = match noise {
                    IntrinsicNoise::Known(v) => IntrinsicNoise::Known(v.iter().map(|t| t + floor).collect()),
                    other => other,
                };
                let mut rng = derived_rng(self.cfg.run.seed, STREAM_SURROGATE, 2 * it + 1);
                KrigingModel::fit(x, y, noise, &opts, &mut rng)
            }
            other => other,
        }
    }

    fn fit_classifier(&self, x: &[Vec<f64>]) -> LogisticModel {
        let rule: LabelRule = self.cfg.run.label_rule;
        let labels: Vec<bool> = self.state.designs.iter().map(|s| rule.label(&s.obs)).collect();
        match LogisticModel::fit(x, &labels, self.cfg.run.logistic_lambda) {
            Ok(m) => m,
            Err(e) => {
                warn!("iteration {}: logistic fit failed ({e}); using label frequency", self.state.iteration);
                let k = labels.iter().filter(|&&l| l).count();
                let p = (k as f64 + 1.0) / (labels.len() as f64 + 2.0);
                LogisticModel {
                    weights: vec![0.0; x[0].len()],
                    bias: (p / (1.0 - p)).ln(),
                    lambda: self.cfg.run.logistic_lambda,
                    kind: crate::feasibility::ClassifierKind::Constant,
                    report: crate::feasibility::ConvergenceReport {
                        iterations: 0,
                        gradient_norm: 0.0,
                    },
                }
            }
        }
    }

    fn iterate(&mut self) -> Result<()> {
        self.state.iteration += 1;
        let it = self.state.iteration as u64;
        let seed = self.cfg.run.seed;

        let weights: Weights = sample_weights(&mut derived_rng(seed, STREAM_WEIGHTS, it));
        let points = self.state.canonical_means();
        let scal = Scalarizer::from_points(&points, weights, self.cfg.run.rho)?;
        let y: Vec<f64> = points.iter().map(|f| scal.value(f)).collect();
        let x: Vec<Vec<f64>> = self.state.designs.iter().map(|s| s.unit.clone()).collect();

        let noise = self.intrinsic_noise(&scal, &points);
        let fitted_nugget = matches!(noise, IntrinsicNoise::FittedNugget);
        let model = self.fit_surrogate(&x, &y, noise)?;
        let classifier = self.fit_classifier(&x);

        let criterion = InfillCriterion::new(&model, &classifier);
        let mut swarm_rng = derived_rng(seed, STREAM_SWARM, it);
        let outcome = pso_maximize(|u| criterion.value(u), self.sim.space(), &self.cfg.pso, &mut swarm_rng)?;

        let chosen = match self.cfg.run.duplicate_policy {
            DuplicatePolicy::Pool => Some(outcome.best().clone()),
            DuplicatePolicy::Avoid => outcome
                .candidates
                .iter()
                .find(|c| self.state.find(&c.unit).is_none())
                .cloned(),
        };
        let (design, unit, value) = match chosen {
            Some(c) => (c.design, c.unit, c.value),
            None => {
                let mut rng = derived_rng(seed, STREAM_FALLBACK, it);
                loop {
                    let u: Vec<f64> = (0..self.space().len()).map(|_| rng.gen()).collect();
                    let unit = self.space().snap(&u)?;
                    if self.state.find(&unit).is_none() {
                        let value = criterion.value(&unit);
                        break (self.space().decode(&unit)?, unit, value);
                    }
                }
            }
        };
        debug!("iteration {it}: criterion {value:.3e} at {:?}", design.values());

        self.models.push(ModelRecord {
            iteration: self.state.iteration,
            scalarizer: scal,
            y_star: criterion.y_star,
            hyperparameters: model.hyperparameters().clone(),
            trend: model.trend(),
            log_likelihood: model.log_likelihood(),
            fitted_nugget,
            classifier: classifier.clone(),
        });
        self.state.kriging = Some(model);
        self.state.classifier = Some(classifier);

        let row = self.evaluate(&design, unit)?;
        let s = &self.state.designs[row].obs;
        let scalarized = scal.value(&[-s.mean_strength, s.cost]);
        self.record(row, Some(scalarized), Some(value));
        Ok(())
    }
}

/// Run the MOSK loop: initial Latin hypercube, then one infill evaluation per
/// iteration until the design-evaluation budget is spent.
pub fn run_mosk(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let sim = Simulator::new(cfg.simulator.clone())?;
    let mut m = Mosk {
        cfg,
        sim,
        state: RunState {
            designs: Vec::new(),
            kriging: None,
            classifier: None,
            archive: ParetoArchive::new(cfg.canonical_reference()),
            ledger: Ledger::default(),
            iteration: 0,
        },
        records: Vec::new(),
        models: Vec::new(),
        started: Instant::now(),
    };
    m.initial_design()?;
    while m.state.ledger.designs < cfg.run.budget {
        m.iterate()?;
    }
    assert_eq!(
        m.state.ledger.designs,
        cfg.run.initial_designs + m.state.iteration,
        "ledger must equal initial designs plus iterations"
    );
    Ok(RunOutcome {
        algorithm: Algorithm::Mosk,
        seed: cfg.run.seed,
        evaluations: m.state.ledger.designs,
        replications: m.state.ledger.replications,
        records: m.records,
        models: m.models,
    })
}

/// The bonding simulator seen by NSGA-II: `replications` draws per design,
/// violation = failed replications.
pub struct BondingProblem {
    pub simulator: Simulator,
    pub replications: usize,
}

impl BiObjectiveProblem for BondingProblem {
    fn space(&self) -> &DesignSpace {
        self.simulator.space()
    }

    fn evaluate(&self, design: &DesignPoint, rng: &mut dyn rand::RngCore) -> Result<Evaluation> {
        let obs = self
            .simulator
            .simulate_replicated(design, self.replications, rng, &mut Ledger::default())?;
        Ok(Evaluation {
            objectives: [-obs.mean_strength, obs.cost],
            violation: obs.failed(),
            replications: obs.count(),
        })
    }
}

/// NSGA-II on the bonding simulator with one replication per design.
pub fn run_nsga2(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let problem = BondingProblem {
        simulator: Simulator::new(cfg.simulator.clone())?,
        replications: 1,
    };
    let mut rng = derived_rng(cfg.run.seed, STREAM_NSGA2, 0);
    let run = nsga2_run(&problem, &cfg.nsga2, &mut rng)?;
    let elapsed = started.elapsed().as_secs_f64();
    let expected = cfg.nsga2.population * cfg.nsga2.generations;
    assert_eq!(run.ledger.total(), expected, "nsga2 ledger must be population x generations");

    let records = run
        .history
        .iter()
        .map(|h| EvaluationRecord {
            iteration: h.generation,
            design: h.design.clone(),
            replications: h.eval.replications,
            total_replications: h.eval.replications,
            mean_strength: -h.eval.objectives[0],
            cost: h.eval.objectives[1],
            feasible: h.eval.feasible(),
            failed: h.eval.violation,
            scalarized: None,
            criterion: None,
            wall_clock: elapsed,
        })
        .collect();
    Ok(RunOutcome {
        algorithm: Algorithm::Nsga2,
        seed: cfg.run.seed,
        records,
        models: Vec::new(),
        evaluations: run.ledger.total(),
        replications: run.history.iter().map(|h| h.eval.replications).sum(),
    })
}

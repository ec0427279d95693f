use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::Nsga2Config;
use crate::feasibility::LabelRule;
use crate::infill::PsoConfig;
use crate::pareto::Canonical;
use crate::problem::SimulatorConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mosk,
    Nsga2,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Mosk => "mosk",
            Algorithm::Nsga2 => "nsga2",
        })
    }
}

/// What happens when the swarm returns an already evaluated design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DuplicatePolicy {
    /// Add the new replications to the existing design.
    #[default]
    Pool,
    /// Take the best distinct swarm candidate, else a random new design.
    Avoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Design evaluations for MOSK (initial design included).
    pub budget: usize,
    pub initial_designs: usize,
    /// Replications per MOSK design evaluation.
    pub replications: usize,
    pub rho: f64,
    /// Hypervolume reference point as `[strength, cost]`. When absent the
    /// worst feasible observation plus `reference_margin` times the observed
    /// range is used.
    pub reference: Option<[f64; 2]>,
    pub reference_margin: f64,
    pub logistic_lambda: f64,
    pub label_rule: LabelRule,
    pub duplicate_policy: DuplicatePolicy,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Mosk,
            seed: 1,
            budget: 200,
            initial_designs: 30,
            replications: 3,
            rho: 0.05,
            reference: None,
            reference_margin: 0.1,
            logistic_lambda: 1e-3,
            label_rule: LabelRule::All,
            duplicate_policy: DuplicatePolicy::Pool,
            output_dir: PathBuf::from("results"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSection {
    pub starts: usize,
    /// Likelihood evaluations per start.
    pub max_evaluations: usize,
}

impl Default for SurrogateSection {
    fn default() -> Self {
        Self {
            starts: 10,
            max_evaluations: 200,
        }
    }
}

/// Fully resolved run configuration; `[run]`, `[surrogate]`, `[pso]`,
/// `[nsga2]` and `[simulator]` sections of a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub surrogate: SurrogateSection,
    pub pso: PsoConfig,
    pub nsga2: Nsga2Config,
    pub simulator: SimulatorConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// TOML text with every default spelled out; loads back to `self`.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.initial_designs < 2 {
            return Err(Error::Config("initial_designs must be at least 2".into()));
        }
        if r.budget < r.initial_designs {
            return Err(Error::Config(format!(
                "budget {} is smaller than initial_designs {}",
                r.budget, r.initial_designs
            )));
        }
        if r.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(r.rho >= 0.0 && r.rho.is_finite()) {
            return Err(Error::Config("rho must be non-negative".into()));
        }
        if !(r.reference_margin >= 0.0) {
            return Err(Error::Config("reference_margin must be non-negative".into()));
        }
        if !(r.logistic_lambda >= 0.0) {
            return Err(Error::Config("logistic_lambda must be non-negative".into()));
        }
        if self.surrogate.starts == 0 || self.surrogate.max_evaluations == 0 {
            return Err(Error::Config("surrogate starts and max_evaluations must be positive".into()));
        }
        self.pso.validate()?;
        self.nsga2.validate()?;
        crate::problem::Simulator::new(self.simulator.clone())?;
        Ok(())
    }

    /// Reference point in canonical (minimization) coordinates.
    pub fn canonical_reference(&self) -> Option<Canonical> {
        self.run.reference.map(|[s, c]| [-s, c])
    }

    /// Design evaluations the configured algorithm will spend.
    pub fn evaluations(&self) -> usize {
        match self.run.algorithm {
            Algorithm::Mosk => self.run.budget,
            Algorithm::Nsga2 => self.nsga2.population * self.nsga2.generations,
        }
    }

    /// Override the budget: MOSK evaluations, or NSGA-II generations times
    /// population (which must divide it).
    pub fn set_budget(&mut self, budget: usize) -> Result<()> {
        match self.run.algorithm {
            Algorithm::Mosk => self.run.budget = budget,
            Algorithm::Nsga2 => {
                let pop = self.nsga2.population;
                if budget == 0 || budget % pop != 0 {
                    return Err(Error::Config(format!(
                        "nsga2 budget {budget} is not a positive multiple of the population {pop}"
                    )));
                }
                self.nsga2.generations = budget / pop;
            }
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let c = RunConfig::default();
        assert_eq!(c.run.initial_designs, 30);
        assert_eq!(c.run.budget, 200);
        assert_eq!(c.nsga2.population * c.nsga2.generations, 5100);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.run.reference = Some([2.5, 30.0]);
        c.simulator.noise_enabled = false;
        let back = RunConfig::from_toml(&c.echo()).unwrap();
        assert_eq!(back, c);
        let none = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&none.echo()).unwrap(), none);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_toml("[run]\nseed = 9\nbudget = 40\n\n[simulator]\nnoise_enabled = false\n")
            .unwrap();
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.run.budget, 40);
        assert!(!c.simulator.noise_enabled);
        assert_eq!(c.pso, PsoConfig::default());
    }

    #[test]
    fn bad_files_rejected() {
        for text in [
            "[run]\nbudget = 10\n",
            "[run]\nreplications = 0\n",
            "[run]\nunknown = 1\n",
            "[pso]\nswarm_size = 1\n",
            "[nsga2]\npopulation = 7\n",
            "[simulator]\npower_bounds = [700.0, 300.0]\n",
            "not toml at all [",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn nsga2_budget_override() {
        let mut c = RunConfig::default();
        c.run.algorithm = Algorithm::Nsga2;
        c.set_budget(600).unwrap();
        assert_eq!(c.nsga2.generations, 20);
        assert!(c.set_budget(601).is_err());
    }
}

//! The bonding problem: six process parameters, a noisy break-strength
//! response, a deterministic cost, and a feasibility rule over the failure
//! mode and visual damage.

mod simulator;
mod space;

use serde::{Deserialize, Serialize};

pub use simulator::{
    Ledger, Response, Simulator, SimulatorConfig, DISTANCE, GLUE_DELAY, PASSES, POWER, PREPROCESS,
    SIMULATOR_VERSION, SPEED,
};
pub use space::{DesignPoint, DesignSpace, Dimension, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureMode {
    Adhesive,
    Cohesive,
    Substrate,
}

/// One simulator replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Break strength [MPa].
    pub strength: f64,
    pub cost: f64,
    pub failure_mode: FailureMode,
    pub visual_damage: bool,
}

/// Acceptable outcomes are adhesive failures without visual damage.
pub fn is_feasible(obs: &Observation) -> bool {
    obs.failure_mode == FailureMode::Adhesive && !obs.visual_damage
}

/// A design with all replications observed so far and their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedObservation {
    pub design: DesignPoint,
    pub replications: Vec<Observation>,
    pub mean_strength: f64,
    /// Unbiased sample variance of strength; 0 for a single replication.
    pub var_strength: f64,
    pub cost: f64,
    pub feasible_fraction: f64,
}

impl ReplicatedObservation {
    /// Panics on an empty replication list.
    pub fn new(design: DesignPoint, replications: Vec<Observation>) -> Self {
        assert!(!replications.is_empty(), "at least one replication required");
        let mut out = Self {
            design,
            replications,
            mean_strength: 0.0,
            var_strength: 0.0,
            cost: 0.0,
            feasible_fraction: 0.0,
        };
        out.summarize();
        out
    }

    /// Pool more replications of the same design.
    pub fn pool(&mut self, more: impl IntoIterator<Item = Observation>) {
        self.replications.extend(more);
        self.summarize();
    }

    pub fn count(&self) -> usize {
        self.replications.len()
    }

    /// Number of replications that were not feasible.
    pub fn failed(&self) -> usize {
        self.replications.iter().filter(|o| !is_feasible(o)).count()
    }

    fn summarize(&mut self) {
        let n = self.replications.len() as f64;
        let mean = self.replications.iter().map(|o| o.strength).sum::<f64>() / n;
        let var = if self.replications.len() > 1 {
            self.replications
                .iter()
                .map(|o| (o.strength - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        self.mean_strength = mean;
        self.var_strength = var;
        self.cost = self.replications[0].cost;
        self.feasible_fraction =
            self.replications.iter().filter(|o| is_feasible(o)).count() as f64 / n;
    }
}

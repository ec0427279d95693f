//! The optimization loop, the NSGA-II comparison harness, configuration and
//! result files.

mod config;
mod experiment;
mod mosk;
mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pareto::{default_reference, ArchiveMember, Canonical, ObjectiveVector, ParetoArchive};
use crate::problem::DesignPoint;

pub use config::{Algorithm, DuplicatePolicy, RunConfig, RunSection, SurrogateSection};
pub use experiment::{quantile, run_experiment, AlgorithmSummary, ComparisonReport, SeedResult};
pub use mosk::{run_mosk, run_nsga2, BondingProblem, ModelRecord, RunState};
pub use output::{emit_results, prepare_output_dir, read_front_csv};

/// One design evaluation, in run order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    /// MOSK infill iteration (0 for the initial design) or NSGA-II generation.
    pub iteration: usize,
    pub design: DesignPoint,
    /// Replications taken by this evaluation.
    pub replications: usize,
    /// Replications pooled at this design so far.
    pub total_replications: usize,
    /// Pooled mean strength after this evaluation.
    pub mean_strength: f64,
    pub cost: f64,
    pub feasible: bool,
    /// Failed replications pooled at this design so far.
    pub failed: usize,
    pub scalarized: Option<f64>,
    pub criterion: Option<f64>,
    /// Seconds since the run started.
    pub wall_clock: f64,
}

impl EvaluationRecord {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector {
            strength: self.mean_strength,
            cost: self.cost,
        }
    }

    fn archive_member(&self) -> ArchiveMember {
        ArchiveMember {
            design: self.design.clone(),
            objectives: self.objectives(),
            replications: self.total_replications,
            failed: self.failed,
            feasible: self.feasible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypervolumePoint {
    pub iteration: usize,
    pub evaluations: usize,
    pub hypervolume: f64,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub records: Vec<EvaluationRecord>,
    /// Fitted models per MOSK iteration; empty for NSGA-II.
    pub models: Vec<ModelRecord>,
    /// Design evaluations (the ledger).
    pub evaluations: usize,
    pub replications: usize,
}

impl RunOutcome {
    /// Observed-feasible mean objectives, canonical form.
    pub fn feasible_points(&self) -> Vec<Canonical> {
        self.records
            .iter()
            .filter(|r| r.feasible)
            .map(|r| r.objectives().canonical())
            .collect()
    }

    /// Reference from the config, else from this run's feasible points.
    pub fn reference(&self, cfg: &RunConfig) -> Option<Canonical> {
        cfg.canonical_reference()
            .or_else(|| default_reference(&self.feasible_points(), cfg.run.reference_margin))
    }

    /// Archive after replaying every record; its trace has one entry per
    /// record when `reference` is given.
    pub fn archive(&self, reference: Option<Canonical>) -> ParetoArchive {
        let mut archive = ParetoArchive::new(reference);
        for r in &self.records {
            archive.update([r.archive_member()]);
        }
        archive
    }

    /// Hypervolume after each iteration (MOSK) or generation (NSGA-II).
    pub fn hypervolume_trace(&self, reference: &Canonical) -> Vec<HypervolumePoint> {
        let archive = self.archive(Some(*reference));
        let mut out: Vec<HypervolumePoint> = Vec::new();
        for (i, (r, hv)) in self.records.iter().zip(archive.trace()).enumerate() {
            let p = HypervolumePoint {
                iteration: r.iteration,
                evaluations: i + 1,
                hypervolume: *hv,
            };
            match out.last_mut() {
                Some(last) if last.iteration == r.iteration => *last = p,
                _ => out.push(p),
            }
        }
        out
    }

    pub fn final_hypervolume(&self, reference: &Canonical) -> f64 {
        self.archive(None).hypervolume(reference)
    }
}

const STREAM_LHS: u64 = 1;
const STREAM_SIMULATION: u64 = 2;
const STREAM_WEIGHTS: u64 = 3;
const STREAM_SURROGATE: u64 = 4;
const STREAM_SWARM: u64 = 5;
const STREAM_FALLBACK: u64 = 6;
const STREAM_NSGA2: u64 = 7;

/// Independent random stream for task `index` of kind `tag`, fixed by the
/// run seed alone.
pub(crate) fn derived_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 40) | index);
    rng
}

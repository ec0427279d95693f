use log::info;

use super::config::{Algorithm, RunConfig};
use super::mosk::{run_mosk, run_nsga2};
use super::RunOutcome;
use crate::pareto::{default_reference, Canonical};
use crate::{Error, Result};

/// Sample quantile by linear interpolation between order statistics
/// (`h = (n - 1) p`), the default of R and NumPy.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub mosk_hypervolume: f64,
    pub nsga2_hypervolume: f64,
    pub mosk_evaluations: usize,
    pub nsga2_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl AlgorithmSummary {
    pub fn from_values(algorithm: Algorithm, values: &[f64]) -> Self {
        let q1 = quantile(values, 0.25);
        let q3 = quantile(values, 0.75);
        Self {
            algorithm,
            median: quantile(values, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
        }
    }
}

/// Final hypervolumes of both algorithms over a set of seeds, measured
/// against one shared reference point.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub reference: Canonical,
    pub seeds: Vec<SeedResult>,
    pub mosk: AlgorithmSummary,
    pub nsga2: AlgorithmSummary,
    /// (MOSK, NSGA-II) outcome per seed.
    pub runs: Vec<(RunOutcome, RunOutcome)>,
}

impl ComparisonReport {
    /// Median MOSK hypervolume over median NSGA-II hypervolume.
    pub fn median_ratio(&self) -> f64 {
        self.mosk.median / self.nsga2.median
    }
}

/// Run MOSK and NSGA-II once per seed on the same simulator.
///
/// The reference point is the configured one, or else derived from the
/// feasible points of every run so all hypervolumes are comparable.
pub fn run_experiment(mosk: &RunConfig, nsga2: &RunConfig, seeds: &[u64]) -> Result<ComparisonReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    if mosk.simulator != nsga2.simulator {
        return Err(Error::Config("both algorithms must use the same simulator settings".into()));
    }
    if mosk.run.reference != nsga2.run.reference {
        return Err(Error::Config("both algorithms must use the same reference point".into()));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut a = mosk.clone();
        a.run.seed = seed;
        a.run.algorithm = Algorithm::Mosk;
        let mut b = nsga2.clone();
        b.run.seed = seed;
        b.run.algorithm = Algorithm::Nsga2;
        let ma = run_mosk(&a)?;
        let nb = run_nsga2(&b)?;
        info!("seed {seed}: mosk {} evaluations, nsga2 {}", ma.evaluations, nb.evaluations);
        runs.push((ma, nb));
    }
    let reference = match mosk.canonical_reference() {
        Some(r) => r,
        None => {
            let all: Vec<Canonical> = runs
                .iter()
                .flat_map(|(a, b)| a.feasible_points().into_iter().chain(b.feasible_points()))
                .collect();
            default_reference(&all, mosk.run.reference_margin)
                .ok_or_else(|| Error::domain("no feasible design in any run; hypervolume undefined"))?
        }
    };
    let seeds: Vec<SeedResult> = seeds
        .iter()
        .zip(&runs)
        .map(|(&seed, (a, b))| SeedResult {
            seed,
            mosk_hypervolume: a.final_hypervolume(&reference),
            nsga2_hypervolume: b.final_hypervolume(&reference),
            mosk_evaluations: a.evaluations,
            nsga2_evaluations: b.evaluations,
        })
        .collect();
    let hv_a: Vec<f64> = seeds.iter().map(|s| s.mosk_hypervolume).collect();
    let hv_b: Vec<f64> = seeds.iter().map(|s| s.nsga2_hypervolume).collect();
    Ok(ComparisonReport {
        reference,
        mosk: AlgorithmSummary::from_values(Algorithm::Mosk, &hv_a),
        nsga2: AlgorithmSummary::from_values(Algorithm::Nsga2, &hv_b),
        seeds,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantiles_match_hand_calculation() {
        // Sorted: 1, 2, 4. h = 0.5 -> 1.5; h = 1 -> 2; h = 1.5 -> 3.
        let v = [4.0, 1.0, 2.0];
        assert_relative_eq!(quantile(&v, 0.25), 1.5);
        assert_relative_eq!(quantile(&v, 0.5), 2.0);
        assert_relative_eq!(quantile(&v, 0.75), 3.0);
        let s = AlgorithmSummary::from_values(Algorithm::Mosk, &v);
        assert_relative_eq!(s.iqr, 1.5);
        assert_relative_eq!(quantile(&[7.0], 0.3), 7.0);
        assert_relative_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    }

    #[test]
    fn mismatched_simulators_are_rejected() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.simulator.noise_floor = 0.2;
        assert!(matches!(run_experiment(&a, &b, &[1]), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.run.reference = Some([0.0, 10.0]);
        assert!(matches!(run_experiment(&a, &c, &[1]), Err(Error::Config(_))));
        assert!(matches!(run_experiment(&a, &a, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn small_experiment_uses_one_reference() {
        let mut a = RunConfig::default();
        a.run.initial_designs = 6;
        a.run.budget = 8;
        a.surrogate.starts = 2;
        a.surrogate.max_evaluations = 40;
        a.pso.swarm_size = 8;
        a.pso.iterations = 5;
        let mut b = a.clone();
        b.nsga2.population = 4;
        b.nsga2.generations = 2;
        let rep = run_experiment(&a, &b, &[1, 2, 3]).unwrap();
        assert_eq!(rep.seeds.len(), 3);
        for (s, (ma, nb)) in rep.seeds.iter().zip(&rep.runs) {
            assert_eq!(s.mosk_evaluations, 8);
            assert_eq!(s.nsga2_evaluations, 8);
            assert_eq!(s.mosk_hypervolume, ma.final_hypervolume(&rep.reference));
            assert_eq!(s.nsga2_hypervolume, nb.final_hypervolume(&rep.reference));
        }
        let hv: Vec<f64> = rep.seeds.iter().map(|s| s.mosk_hypervolume).collect();
        assert_eq!(rep.mosk.median, quantile(&hv, 0.5));
    }
}

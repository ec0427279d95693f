//! NSGA-II with Deb's constrained dominance, SBX crossover and polynomial
//! mutation on unit-cube encodings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pareto::{dominates, Canonical, ParetoArchive};
use crate::problem::{DesignPoint, DesignSpace};
use crate::{Error, Result};

/// One evaluation of a bi-objective constrained problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objectives: Canonical,
    /// Count of failed feasibility replications; 0 means feasible.
    pub violation: usize,
    pub replications: usize,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.violation == 0
    }
}

pub trait BiObjectiveProblem {
    fn space(&self) -> &DesignSpace;

    fn evaluate(&self, design: &DesignPoint, rng: &mut dyn rand::RngCore) -> Result<Evaluation>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Continuous unit-cube genes; `design` is their decoding.
    pub genes: Vec<f64>,
    pub design: DesignPoint,
    pub eval: Evaluation,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga2Config {
    pub population: usize,
    /// Populations evaluated, counting the initial one.
    pub generations: usize,
    pub crossover_probability: f64,
    pub crossover_index: f64,
    pub mutation_probability: f64,
    pub mutation_index: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 170,
            crossover_probability: 0.9,
            crossover_index: 15.0,
            mutation_probability: 1.0 / 6.0,
            mutation_index: 20.0,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(Error::Config(format!(
                "nsga2 population {} must be even and at least 4",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::Config("nsga2 generations must be at least 1".into()));
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.crossover_probability) || !prob(self.mutation_probability) {
            return Err(Error::Config("nsga2 probabilities must lie in [0,1]".into()));
        }
        if !(self.crossover_index >= 0.0 && self.mutation_index >= 0.0) {
            return Err(Error::Config("nsga2 distribution indices must be non-negative".into()));
        }
        Ok(())
    }
}

/// Deb's rule: feasible beats infeasible, smaller violation beats larger,
/// Pareto dominance among feasible.
pub fn constrained_dominates(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => dominates(&a.objectives, &b.objectives),
    }
}

/// Fronts of indices, best first.
pub fn nondominated_sort(evals: &[Evaluation]) -> Vec<Vec<usize>> {
    let n = evals.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&evals[i], &evals[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if constrained_dominates(&evals[j], &evals[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(front: &[Canonical]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for k in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = front[order[n - 1]][k] - front[order[0]][k];
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            dist[w[1]] += (front[w[2]][k] - front[w[0]][k]) / range;
        }
    }
    dist
}

/// SBX on one gene pair for a given spread factor.
pub fn sbx_pair(x1: f64, x2: f64, beta: f64) -> (f64, f64) {
    (
        0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2),
        0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2),
    )
}

fn sbx_beta(u: f64, eta: f64) -> f64 {
    if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    }
}

/// Simulated binary crossover; each gene is crossed with probability `p_c`
/// and children are clipped to the unit cube.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    eta_c: f64,
    p_c: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for j in 0..p1.len() {
        if rng.gen::<f64>() < p_c {
            let beta = sbx_beta(rng.gen(), eta_c);
            let (a, b) = sbx_pair(p1[j], p2[j], beta);
            c1[j] = a.clamp(0.0, 1.0);
            c2[j] = b.clamp(0.0, 1.0);
        }
    }
    (c1, c2)
}

/// Polynomial mutation with per-gene probability `p_m`.
pub fn polynomial_mutation<R: Rng + ?Sized>(p: &[f64], eta_m: f64, p_m: f64, rng: &mut R) -> Vec<f64> {
    p.iter()
        .map(|&x| {
            if rng.gen::<f64>() >= p_m {
                return x;
            }
            let u: f64 = rng.gen();
            let delta = if u < 0.5 {
                (2.0 * u).powf(1.0 / (eta_m + 1.0)) - 1.0
            } else {
                1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta_m + 1.0))
            };
            (x + delta).clamp(0.0, 1.0)
        })
        .collect()
}

/// Binary tournament: lower rank, then larger crowding, then a coin flip.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> usize {
    let a = rng.gen_range(0..population.len());
    let b = rng.gen_range(0..population.len());
    let (x, y) = (&population[a], &population[b]);
    if x.rank != y.rank {
        return if x.rank < y.rank { a } else { b };
    }
    if x.crowding != y.crowding {
        return if x.crowding > y.crowding { a } else { b };
    }
    if rng.gen::<bool>() {
        a
    } else {
        b
    }
}

/// Evaluations spent by one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nsga2Ledger {
    pub initial: usize,
    pub offspring: usize,
}

impl Nsga2Ledger {
    pub fn total(&self) -> usize {
        self.initial + self.offspring
    }
}

/// One design evaluation in run order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedDesign {
    pub generation: usize,
    pub design: DesignPoint,
    pub eval: Evaluation,
}

#[derive(Debug, Clone)]
pub struct Nsga2Run {
    pub population: Vec<Individual>,
    pub history: Vec<EvaluatedDesign>,
    pub ledger: Nsga2Ledger,
}

impl Nsga2Run {
    /// Hypervolume of the cumulative feasible nondominated set after each
    /// generation, as `(generation, evaluations so far, hypervolume)`.
    pub fn hypervolume_trace(&self, reference: &Canonical) -> Vec<(usize, usize, f64)> {
        let mut archive = ParetoArchive::new(None);
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.history.len() {
            let g = self.history[i].generation;
            let start = i;
            while i < self.history.len() && self.history[i].generation == g {
                i += 1;
            }
            archive.update(self.history[start..i].iter().map(|h| crate::pareto::ArchiveMember {
                design: h.design.clone(),
                objectives: crate::pareto::ObjectiveVector::from_canonical(h.eval.objectives),
                replications: h.eval.replications,
                failed: h.eval.violation,
                feasible: h.eval.feasible(),
            }));
            out.push((g, i, archive.hypervolume(reference)));
        }
        out
    }
}

fn assign_rank_and_crowding(pop: &mut [Individual]) {
    let evals: Vec<Evaluation> = pop.iter().map(|p| p.eval).collect();
    for (r, front) in nondominated_sort(&evals).iter().enumerate() {
        let objs: Vec<Canonical> = front.iter().map(|&i| pop[i].eval.objectives).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&objs)) {
            pop[i].rank = r + 1;
            pop[i].crowding = c;
        }
    }
}

/// Generational NSGA-II: the initial population is generation 1, and each
/// later generation evaluates `population` offspring, so the ledger total is
/// `population * generations`.
pub fn nsga2_run<P, R>(problem: &P, cfg: &Nsga2Config, rng: &mut R) -> Result<Nsga2Run>
where
    P: BiObjectiveProblem + ?Sized,
    R: Rng,
{
    cfg.validate()?;
    let space = problem.space();
    let d = space.len();
    let mut history = Vec::with_capacity(cfg.population * cfg.generations);
    let mut ledger = Nsga2Ledger::default();

    let evaluate = |genes: Vec<f64>,
                        generation: usize,
                        history: &mut Vec<EvaluatedDesign>,
                        rng: &mut R|
     -> Result<Individual> {
        let design = space.decode(&genes)?;
        let eval = problem.evaluate(&design, rng)?;
        history.push(EvaluatedDesign {
            generation,
            design: design.clone(),
            eval,
        });
        Ok(Individual {
            genes,
            design,
            eval,
            rank: 0,
            crowding: 0.0,
        })
    };

    let mut pop = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.population {
        let genes: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        pop.push(evaluate(genes, 1, &mut history, rng)?);
    }
    ledger.initial = cfg.population;
    assign_rank_and_crowding(&mut pop);

    for generation in 2..=cfg.generations {
        let mut children = Vec::with_capacity(cfg.population);
        while children.len() < cfg.population {
            let a = tournament_select(&pop, rng);
            let b = tournament_select(&pop, rng);
            let (c1, c2) = sbx_crossover(
                &pop[a].genes,
                &pop[b].genes,
                cfg.crossover_index,
                cfg.crossover_probability,
                rng,
            );
            for c in [c1, c2] {
                let genes = polynomial_mutation(&c, cfg.mutation_index, cfg.mutation_probability, rng);
                children.push(evaluate(genes, generation, &mut history, rng)?);
            }
        }
        ledger.offspring += children.len();

        pop.extend(children);
        assign_rank_and_crowding(&mut pop);
        pop.sort_by(|a, b| {
            a.rank
                .cmp(&b.rank)
                .then_with(|| b.crowding.total_cmp(&a.crowding))
        });
        pop.truncate(cfg.population);
        assign_rank_and_crowding(&mut pop);
    }

    Ok(Nsga2Run {
        population: pop,
        history,
        ledger,
    })
}

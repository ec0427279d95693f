//! Objective handling: canonical (minimization) form, augmented Tchebycheff
//! scalarization, dominance, 2-D hypervolume and the feasible archive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::problem::DesignPoint;
use crate::{Error, Result};

/// Both objectives minimized: `[-strength, cost]`.
pub type Canonical = [f64; 2];

/// Mean objectives of a design in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Break strength [MPa], maximized.
    pub strength: f64,
    /// Production cost, minimized.
    pub cost: f64,
}

impl ObjectiveVector {
    pub fn canonical(&self) -> Canonical {
        [-self.strength, self.cost]
    }

    pub fn from_canonical(f: Canonical) -> Self {
        Self {
            strength: -f[0],
            cost: f[1],
        }
    }
}

/// Scalarization weights on the 1-simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights([f64; 2]);

impl Weights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if !(w1 >= 0.0 && w2 >= 0.0) || (w1 + w2 - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("weights ({w1}, {w2}) not on the simplex")));
        }
        Ok(Self([w1, w2]))
    }

    pub fn as_array(&self) -> [f64; 2] {
        self.0
    }
}

/// Uniform draw on the 1-simplex.
pub fn sample_weights<R: Rng + ?Sized>(rng: &mut R) -> Weights {
    let w1: f64 = rng.gen();
    Weights([w1, 1.0 - w1])
}

/// Augmented Tchebycheff value `max_k w_k g_k + rho * sum_k w_k g_k` with
/// `g_k = (f_k - ideal_k) / ranges_k`.
pub fn tchebycheff(
    f: &Canonical,
    w: &Weights,
    ideal: &Canonical,
    ranges: &[f64; 2],
    rho: f64,
) -> Result<f64> {
    if !(ranges[0] > 0.0 && ranges[1] > 0.0) {
        return Err(Error::domain(format!("scalarization ranges {ranges:?} must be positive")));
    }
    let wg = [
        w.0[0] * (f[0] - ideal[0]) / ranges[0],
        w.0[1] * (f[1] - ideal[1]) / ranges[1],
    ];
    Ok(wg[0].max(wg[1]) + rho * (wg[0] + wg[1]))
}

/// Weights plus the normalization in force for one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalarizer {
    pub weights: Weights,
    pub ideal: Canonical,
    pub ranges: [f64; 2],
    pub rho: f64,
}

impl Scalarizer {
    /// Normalize by the running min / max of `points`; the ideal point sits
    /// `1e-6` below the componentwise minimum. A zero range becomes 1.
    pub fn from_points(points: &[Canonical], weights: Weights, rho: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("cannot normalize an empty point set"));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let range = |k: usize| {
            let r = hi[k] - lo[k];
            if r > 0.0 {
                r
            } else {
                1.0
            }
        };
        Ok(Self {
            weights,
            ideal: [lo[0] - 1e-6, lo[1] - 1e-6],
            ranges: [range(0), range(1)],
            rho,
        })
    }

    pub fn value(&self, f: &Canonical) -> f64 {
        tchebycheff(f, &self.weights, &self.ideal, &self.ranges, self.rho)
            .expect("ranges validated at construction")
    }

    /// Derivative of the scalarized value with respect to the first
    /// canonical objective at `f` (the max term differentiated along its
    /// active branch).
    pub fn first_objective_slope(&self, f: &Canonical) -> f64 {
        let w = self.weights.0;
        let g0 = w[0] * (f[0] - self.ideal[0]) / self.ranges[0];
        let g1 = w[1] * (f[1] - self.ideal[1]) / self.ranges[1];
        let active = if g0 >= g1 { w[0] } else { 0.0 };
        (active + self.rho * w[0]) / self.ranges[0]
    }
}

/// `a` weakly better everywhere and different somewhere (minimization).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Identifiers of the nondominated members, ordered by the first objective
/// (stable, so exact ties keep their input order).
pub fn pareto_filter<I: Clone>(points: &[(I, Canonical)]) -> Vec<I> {
    let mut kept: Vec<&(I, Canonical)> = points
        .iter()
        .filter(|(_, f)| !points.iter().any(|(_, g)| dominates(g, f)))
        .collect();
    kept.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
    kept.into_iter().map(|(id, _)| id.clone()).collect()
}

/// Area dominated by `front` inside the box bounded by `reference`.
/// Members not strictly better than the reference in both objectives
/// contribute nothing.
pub fn hypervolume_2d(front: &[Canonical], reference: &Canonical) -> f64 {
    let mut pts: Vec<Canonical> = front
        .iter()
        .copied()
        .filter(|f| f[0] < reference[0] && f[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut bound = reference[1];
    let mut area = 0.0;
    for f in pts {
        if f[1] < bound {
            area += (reference[0] - f[0]) * (bound - f[1]);
            bound = f[1];
        }
    }
    area
}

/// Worst point of `points` pushed outward by `margin` times the observed
/// range (or times `max(|worst|, 1)` when the range is zero).
pub fn default_reference(points: &[Canonical], margin: f64) -> Option<Canonical> {
    if points.is_empty() {
        return None;
    }
    let mut out = [0.0; 2];
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { hi.abs().max(1.0) };
        *slot = hi + margin * span;
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveMember {
    pub design: DesignPoint,
    pub objectives: ObjectiveVector,
    pub replications: usize,
    /// Replications that ended infeasible.
    pub failed: usize,
    pub feasible: bool,
}

/// Feasible nondominated designs seen so far plus a hypervolume trace.
///
/// Insert-only: a member leaves only when a newcomer dominates it, so the
/// dominated region (and its hypervolume) never shrinks.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    members: Vec<ArchiveMember>,
    reference: Option<Canonical>,
    trace: Vec<f64>,
}

impl ParetoArchive {
    pub fn new(reference: Option<Canonical>) -> Self {
        Self {
            members: Vec::new(),
            reference,
            trace: Vec::new(),
        }
    }

    /// Insert feasible newcomers, drop dominated members, append one trace
    /// entry (when a reference point is set).
    pub fn update(&mut self, new: impl IntoIterator<Item = ArchiveMember>) {
        for m in new {
            self.insert(m);
        }
        if let Some(r) = self.reference {
            self.trace.push(self.hypervolume(&r));
        }
    }

    fn insert(&mut self, m: ArchiveMember) {
        if !m.feasible {
            return;
        }
        let f = m.objectives.canonical();
        let redundant = self.members.iter().any(|o| {
            let g = o.objectives.canonical();
            dominates(&g, &f) || (g == f && o.design == m.design)
        });
        if redundant {
            return;
        }
        self.members.retain(|o| !dominates(&f, &o.objectives.canonical()));
        let pos = self
            .members
            .partition_point(|o| o.objectives.canonical()[0] <= f[0]);
        self.members.insert(pos, m);
    }

    pub fn members(&self) -> &[ArchiveMember] {
        &self.members
    }

    pub fn reference(&self) -> Option<Canonical> {
        self.reference
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn hypervolume(&self, reference: &Canonical) -> f64 {
        let front: Vec<Canonical> = self.members.iter().map(|m| m.objectives.canonical()).collect();
        hypervolume_2d(&front, reference)
    }
}

/// Alias of [`ParetoArchive::update`] returning the archive.
pub fn update_archive(
    mut archive: ParetoArchive,
    new: impl IntoIterator<Item = ArchiveMember>,
) -> ParetoArchive {
    archive.update(new);
    archive
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn member(strength: f64, cost: f64) -> ArchiveMember {
        let space = crate::problem::DesignSpace::new(vec![crate::problem::Dimension::continuous(
            "x", -1e3, 1e3,
        )])
        .unwrap();
        ArchiveMember {
            design: space.point(vec![strength + 10.0 * cost]).unwrap(),
            objectives: ObjectiveVector { strength, cost },
            replications: 1,
            failed: 0,
            feasible: true,
        }
    }

    #[test]
    fn tchebycheff_examples() {
        let w = Weights::new(0.5, 0.5).unwrap();
        let ideal = [0.0, 0.0];
        assert_eq!(tchebycheff(&ideal, &w, &ideal, &[1.0, 1.0], 0.05).unwrap(), 0.0);
        let v = tchebycheff(&[0.2, 0.5], &w, &ideal, &[1.0, 1.0], 0.05).unwrap();
        assert!((v - 0.2675).abs() < 1e-15);
        let w1 = Weights::new(1.0, 0.0).unwrap();
        let v = tchebycheff(&[0.6, 0.9], &w1, &[0.1, 0.0], &[2.0, 1.0], 0.0).unwrap();
        assert_eq!(v, 0.25);
        assert!(matches!(
            tchebycheff(&[0.0, 0.0], &w, &ideal, &[1.0, 0.0], 0.05),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0], &[2.0, 2.0]));
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
    }

    #[test]
    fn filter_examples() {
        let pts = [(0, [2.0, 1.0]), (1, [1.0, 2.0]), (2, [2.0, 2.0])];
        assert_eq!(pareto_filter(&pts), vec![1, 0]);
        assert_eq!(pareto_filter(&[(7, [3.0, 3.0])]), vec![7]);
        let same = [(0, [1.0, 1.0]), (1, [1.0, 1.0]), (2, [1.0, 1.0])];
        assert_eq!(pareto_filter(&same), vec![0, 1, 2]);
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume_2d(&[[1.0, 1.0]], &[2.0, 2.0]), 1.0);
        assert_eq!(hypervolume_2d(&[[1.0, 2.0], [2.0, 1.0]], &[3.0, 3.0]), 3.0);
        assert_eq!(hypervolume_2d(&[], &[3.0, 3.0]), 0.0);
        // members outside the reference box are ignored
        assert_eq!(hypervolume_2d(&[[1.0, 1.0], [5.0, 0.0]], &[2.0, 2.0]), 1.0);
    }

    #[test]
    fn weights_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let w = sample_weights(&mut rng).as_array();
            assert!((w[0] + w[1] - 1.0).abs() <= 1e-12 && w[0] >= 0.0 && w[1] >= 0.0);
            mean += w[0] / n as f64;
        }
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn archive_insertions() {
        let mut a = ParetoArchive::new(Some([0.0, 10.0]));
        a.update([member(5.0, 3.0), member(8.0, 6.0)]);
        assert_eq!(a.members().len(), 2);
        a.update([member(4.0, 4.0)]);
        assert_eq!(a.members().len(), 2);
        a.update([member(9.0, 5.0)]);
        let s: Vec<f64> = a.members().iter().map(|m| m.objectives.strength).collect();
        assert_eq!(s, vec![9.0, 5.0]);
        let mut infeasible = member(100.0, 0.0);
        infeasible.feasible = false;
        a.update([infeasible]);
        assert_eq!(a.members().len(), 2);
        assert_eq!(a.trace().len(), 4);
        assert!(a.trace().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn slope_matches_finite_difference() {
        let s = Scalarizer {
            weights: Weights::new(0.3, 0.7).unwrap(),
            ideal: [-20.0, 1.0],
            ranges: [15.0, 4.0],
            rho: 0.05,
        };
        for f in [[-10.0, 2.0], [-19.0, 4.5]] {
            let h = 1e-6;
            let fd = (s.value(&[f[0] + h, f[1]]) - s.value(&[f[0] - h, f[1]])) / (2.0 * h);
            assert!((fd - s.first_objective_slope(&f)).abs() < 1e-7);
        }
    }

    proptest! {
        #[test]
        fn hypervolume_never_decreases(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..12),
            extra in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            let front: Vec<Canonical> = pts.iter().map(|&(a, b)| [a, b]).collect();
            let r = [1.0, 1.0];
            let before = hypervolume_2d(&front, &r);
            let mut more = front.clone();
            more.push([extra.0, extra.1]);
            prop_assert!(hypervolume_2d(&more, &r) >= before);
        }

        #[test]
        fn filter_matches_pairwise_definition(
            pts in prop::collection::vec((0u8..6, 0u8..6), 1..15),
        ) {
            let pts: Vec<(usize, Canonical)> = pts
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| (i, [a as f64, b as f64]))
                .collect();
            let kept = pareto_filter(&pts);
            for (i, f) in &pts {
                let nd = !pts.iter().any(|(_, g)| dominates(g, f));
                prop_assert_eq!(kept.contains(i), nd);
            }
        }
    }
}

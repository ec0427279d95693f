//! Latin hypercube designs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::problem::{DesignPoint, DesignSpace};
use crate::{Error, Result};

/// `n` unit-cube points, one per stratum `[k/n, (k+1)/n)` in every column.
#[derive(Debug, Clone, PartialEq)]
pub struct LhsPlan {
    pub n: usize,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
}

impl LhsPlan {
    /// Random permutation of strata per dimension, uniform jitter inside each.
    pub fn generate<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("latin hypercube needs at least one point"));
        }
        let mut points = vec![vec![0.0; d]; n];
        let mut strata: Vec<usize> = (0..n).collect();
        for j in 0..d {
            strata.shuffle(rng);
            for (row, &k) in points.iter_mut().zip(&strata) {
                let u: f64 = rng.gen();
                // Guard against rounding up into the next stratum.
                row[j] = ((k as f64 + u) / n as f64).min(next_below((k + 1) as f64 / n as f64));
            }
        }
        Ok(Self { n, d, points })
    }
}

fn next_below(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// `n` designs from a plain Latin hypercube over `space`; integer and binary
/// dimensions are rounded by [`DesignSpace::decode`].
pub fn latin_hypercube<R: Rng + ?Sized>(
    n: usize,
    space: &DesignSpace,
    rng: &mut R,
) -> Result<Vec<DesignPoint>> {
    let plan = LhsPlan::generate(n, space.len(), rng)?;
    plan.points.iter().map(|p| space.decode(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Simulator, SimulatorConfig, VarKind};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stratified(plan: &LhsPlan) -> bool {
        (0..plan.d).all(|j| {
            let mut col: Vec<f64> = plan.points.iter().map(|p| p[j]).collect();
            col.sort_by(f64::total_cmp);
            col.iter()
                .enumerate()
                .all(|(k, &u)| (u * plan.n as f64).floor() as usize == k)
        })
    }

    #[test]
    fn single_point() {
        let plan = LhsPlan::generate(1, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(plan.points[0].iter().all(|u| (0.0..1.0).contains(u)));
    }

    #[test]
    fn quartiles_hit_once() {
        let plan = LhsPlan::generate(4, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(stratified(&plan));
    }

    #[test]
    fn zero_points_rejected() {
        assert!(matches!(
            LhsPlan::generate(0, 2, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bonding_batch_of_thirty() {
        let sim = Simulator::new(SimulatorConfig::default()).unwrap();
        let space = sim.space();
        let designs = latin_hypercube(30, space, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(designs.len(), 30);
        assert!(designs.iter().all(|p| space.contains(p)));
        for (j, dim) in space.dims().iter().enumerate() {
            if dim.kind != VarKind::Continuous {
                continue;
            }
            let mut hit = [false; 30];
            for p in &designs {
                let u = space.encode(p).unwrap()[j];
                hit[((u * 30.0).floor() as usize).min(29)] = true;
            }
            assert!(hit.iter().all(|&h| h), "dimension {}", dim.name);
        }
    }

    #[test]
    fn same_seed_same_plan() {
        let a = LhsPlan::generate(12, 6, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        let b = LhsPlan::generate(12, 6, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn every_column_is_stratified(n in 2usize..=50, d in 1usize..=6, seed: u64) {
            let plan = LhsPlan::generate(n, d, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert!(stratified(&plan));
        }
    }
}

//! Synthetic stand-in for the plasma / glue / oven bonding line.
//!
//! Every coefficient is a field of [`SimulatorConfig`]; the response surface
//! is (all logarithms natural):
//!
//! ```text
//! dose      D = (P / power_ref) * (speed_ref / v)^speed_exponent * (distance_ref / d)
//! activation G = exp(-(ln D - optimal_log_dose)^2 / (2 * dose_width^2))
//! passes    A = 1 - exp(-pass_rate * n)
//! delay     R = delay_floor + (1 - delay_floor) * exp(-t / delay_time)
//! strength  S = base_strength + preprocess_bonus * pre + activation_strength * G * A * R
//! intensity J = D * n
//! noise sd  sigma = noise_floor + noise_slope * J
//! cost      C = oven_cost + preprocess_cost * pre
//!               + n * (sample_length / v) * (P / 1000) * energy_price
//! ```
//!
//! Failure mode: substrate when `S >= substrate_cap`, cohesive when
//! `cohesion_cap <= S < substrate_cap`, adhesive otherwise. Visual damage when
//! `J > damage_threshold`. Failure mode and damage depend on the noise-free
//! surface only; the observed strength is `S + sigma * N(0,1)` clipped at 0.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::space::{DesignPoint, DesignSpace, Dimension};
use super::{FailureMode, Observation, ReplicatedObservation};
use crate::{Error, Result};

/// Bumped whenever a default coefficient changes.
pub const SIMULATOR_VERSION: u32 = 1;

pub const PREPROCESS: usize = 0;
pub const POWER: usize = 1;
pub const SPEED: usize = 2;
pub const DISTANCE: usize = 3;
pub const PASSES: usize = 4;
pub const GLUE_DELAY: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub version: u32,
    pub noise_enabled: bool,

    /// Torch power bounds [W].
    pub power_bounds: [f64; 2],
    /// Torch speed bounds [mm/s].
    pub speed_bounds: [f64; 2],
    /// Nozzle to sample distance bounds [mm].
    pub distance_bounds: [f64; 2],
    /// Number of passes bounds.
    pub passes_bounds: [i64; 2],
    /// Plasma to glue delay bounds [min].
    pub glue_delay_bounds: [f64; 2],

    pub power_ref: f64,
    pub speed_ref: f64,
    pub speed_exponent: f64,
    pub distance_ref: f64,
    pub optimal_log_dose: f64,
    pub dose_width: f64,
    pub pass_rate: f64,
    pub delay_floor: f64,
    pub delay_time: f64,

    pub base_strength: f64,
    pub preprocess_bonus: f64,
    pub activation_strength: f64,

    pub noise_floor: f64,
    pub noise_slope: f64,

    pub oven_cost: f64,
    pub preprocess_cost: f64,
    pub sample_length: f64,
    pub energy_price: f64,

    pub cohesion_cap: f64,
    pub substrate_cap: f64,
    pub damage_threshold: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            version: SIMULATOR_VERSION,
            noise_enabled: true,
            power_bounds: [300.0, 700.0],
            speed_bounds: [5.0, 250.0],
            distance_bounds: [4.0, 20.0],
            passes_bounds: [1, 5],
            glue_delay_bounds: [0.0, 60.0],
            power_ref: 500.0,
            speed_ref: 50.0,
            speed_exponent: 0.5,
            distance_ref: 8.0,
            optimal_log_dose: 0.8,
            dose_width: 0.6,
            pass_rate: 0.9,
            delay_floor: 0.55,
            delay_time: 20.0,
            base_strength: 4.0,
            preprocess_bonus: 3.0,
            activation_strength: 18.0,
            noise_floor: 0.1,
            noise_slope: 0.04,
            oven_cost: 1.0,
            preprocess_cost: 1.5,
            sample_length: 100.0,
            energy_price: 0.5,
            cohesion_cap: 21.0,
            substrate_cap: 24.0,
            damage_threshold: 8.0,
        }
    }
}

/// Noise-free quantities of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub strength: f64,
    pub noise_sd: f64,
    pub intensity: f64,
    pub cost: f64,
    pub failure_mode: FailureMode,
    pub visual_damage: bool,
}

/// Counts design evaluations and total replications.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub designs: usize,
    pub replications: usize,
}

impl Ledger {
    pub fn record(&mut self, replications: usize) {
        self.designs += 1;
        self.replications += replications;
    }
}

#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimulatorConfig,
    space: DesignSpace,
}

impl Simulator {
    pub fn new(cfg: SimulatorConfig) -> Result<Self> {
        let b = |name: &str, v: [f64; 2]| Dimension::continuous(name, v[0], v[1]);
        let space = DesignSpace::new(vec![
            Dimension::binary("pre_processing"),
            b("power", cfg.power_bounds),
            b("speed", cfg.speed_bounds),
            b("distance", cfg.distance_bounds),
            Dimension::integer("passes", cfg.passes_bounds[0], cfg.passes_bounds[1]),
            b("glue_delay", cfg.glue_delay_bounds),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
        if cfg.power_bounds[0] <= 0.0 || cfg.speed_bounds[0] <= 0.0 || cfg.distance_bounds[0] <= 0.0
        {
            return Err(Error::Config(
                "power, speed and distance bounds must be positive".into(),
            ));
        }
        if cfg.cohesion_cap > cfg.substrate_cap {
            return Err(Error::Config("cohesion_cap must not exceed substrate_cap".into()));
        }
        Ok(Self { cfg, space })
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.cfg
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn response(&self, design: &DesignPoint) -> Result<Response> {
        if !self.space.contains(design) {
            return Err(Error::domain(format!(
                "design {:?} outside the bonding space",
                design.values()
            )));
        }
        let c = &self.cfg;
        let pre = design.get(PREPROCESS);
        let power = design.get(POWER);
        let speed = design.get(SPEED);
        let distance = design.get(DISTANCE);
        let passes = design.get(PASSES);
        let delay = design.get(GLUE_DELAY);

        let dose = (power / c.power_ref)
            * (c.speed_ref / speed).powf(c.speed_exponent)
            * (c.distance_ref / distance);
        let z = (dose.ln() - c.optimal_log_dose) / c.dose_width;
        let activation = (-0.5 * z * z).exp();
        let pass_gain = 1.0 - (-c.pass_rate * passes).exp();
        let retention = c.delay_floor + (1.0 - c.delay_floor) * (-delay / c.delay_time).exp();
        let strength = c.base_strength
            + c.preprocess_bonus * pre
            + c.activation_strength * activation * pass_gain * retention;

        let intensity = dose * passes;
        let noise_sd = c.noise_floor + c.noise_slope * intensity;
        let cost = c.oven_cost
            + c.preprocess_cost * pre
            + passes * (c.sample_length / speed) * (power / 1000.0) * c.energy_price;

        let failure_mode = if strength >= c.substrate_cap {
            FailureMode::Substrate
        } else if strength >= c.cohesion_cap {
            FailureMode::Cohesive
        } else {
            FailureMode::Adhesive
        };
        Ok(Response {
            strength,
            noise_sd,
            intensity,
            cost,
            failure_mode,
            visual_damage: intensity > c.damage_threshold,
        })
    }

    pub fn simulate<R: Rng + ?Sized>(&self, design: &DesignPoint, rng: &mut R) -> Result<Observation> {
        let r = self.response(design)?;
        let noise = if self.cfg.noise_enabled {
            r.noise_sd * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        Ok(Observation {
            strength: (r.strength + noise).max(0.0),
            cost: r.cost,
            failure_mode: r.failure_mode,
            visual_damage: r.visual_damage,
        })
    }

    pub fn simulate_replicated<R: Rng + ?Sized>(
        &self,
        design: &DesignPoint,
        replications: usize,
        rng: &mut R,
        ledger: &mut Ledger,
    ) -> Result<ReplicatedObservation> {
        if replications == 0 {
            return Err(Error::domain("replication count must be at least 1"));
        }
        let obs = (0..replications)
            .map(|_| self.simulate(design, rng))
            .collect::<Result<Vec<_>>>()?;
        ledger.record(replications);
        Ok(ReplicatedObservation::new(design.clone(), obs))
    }
}


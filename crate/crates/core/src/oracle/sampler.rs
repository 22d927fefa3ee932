//! Randomized few-particle configurations labelled with oracle velocities.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mobility::oracle_velocities;
use super::system::{Domain, ParticleSystem, Vec3};
use crate::error::{invalid, Error, Result};

/// One labelled configuration: positions, applied forces and resulting velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub positions: Vec<Vec3>,
    pub forces: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub domain: Domain,
}

impl TrainingSample {
    pub fn particle_count(&self) -> usize {
        self.positions.len()
    }

    /// Smallest surface gap `|r_ij| - 2a` over all pairs.
    pub fn min_gap(&self, radius: f64) -> f64 {
        let mut gap = f64::INFINITY;
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                gap = gap.min(self.domain.distance(&self.positions[i], &self.positions[j]) - 2.0 * radius);
            }
        }
        gap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Particles per configuration.
    pub particles: usize,
    pub radius: f64,
    pub viscosity: f64,
    /// Largest center-to-center distance allowed in a configuration.
    pub max_extent: f64,
    /// Smallest surface gap, in units of the radius.
    pub min_gap: f64,
    /// Fraction of configurations forced to contain a near-contact pair.
    pub near_contact_quota: f64,
    /// Gap (in radii) at or below which a pair counts as near contact.
    pub near_contact_gap: f64,
    /// Oracle truncation order used for the labels.
    pub order: usize,
    pub max_attempts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            particles: 3,
            radius: 1.0,
            viscosity: 1.0,
            max_extent: 500.0,
            min_gap: 1e-3,
            near_contact_quota: 0.3,
            near_contact_gap: 0.1,
            order: 3,
            max_attempts: 10_000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        super::system::check_physical(self.radius, self.viscosity)?;
        if self.particles == 0 {
            return Err(invalid("particles", "need at least one particle per configuration"));
        }
        if !(self.min_gap > 0.0) {
            return Err(invalid("min_gap", format!("must be positive, got {}", self.min_gap)));
        }
        if !(0.0..=1.0).contains(&self.near_contact_quota) {
            return Err(invalid("near_contact_quota", format!("must lie in [0, 1], got {}", self.near_contact_quota)));
        }
        if self.max_attempts == 0 {
            return Err(invalid("max_attempts", "must be at least 1"));
        }
        if !(1..=3).contains(&self.order) {
            return Err(Error::InvalidOrder(self.order));
        }
        Ok(())
    }

    fn closest(&self) -> f64 {
        (2.0 + self.min_gap) * self.radius
    }

    fn near_limit(&self) -> f64 {
        (2.0 + self.near_contact_gap) * self.radius
    }
}

/// Whether sample `index` belongs to the near-contact quota. Quota members are
/// spread evenly over the index range so any prefix honors the fraction.
pub fn is_near_contact_slot(index: usize, quota: f64) -> bool {
    ((index + 1) as f64 * quota).floor() > (index as f64 * quota).floor()
}

fn sample_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws positions for sample `index`. Each sample has its own RNG stream, so
/// the result does not depend on how generation is sharded.
pub fn sample_configuration(config: &SamplerConfig, seed: u64, index: usize) -> Result<Vec<Vec3>> {
    config.validate()?;
    let closest = config.closest();
    let near_limit = config.near_limit();
    if config.particles > 1 && config.max_extent < closest {
        return Err(Error::Sampler { constraint: "max_extent >= 2a + min_gap", sample: index, attempts: 0 });
    }
    let near = config.particles > 1 && is_near_contact_slot(index, config.near_contact_quota);
    if near && near_limit < closest {
        return Err(Error::Sampler { constraint: "near_contact_gap >= min_gap", sample: index, attempts: 0 });
    }
    let mut rng = sample_rng(seed, index);
    let mut failed = "non-overlap";
    'attempt: for _ in 0..config.max_attempts {
        let mut pos = vec![Vec3::zeros()];
        for m in 1..config.particles {
            let anchor = pos[rng.random_range(0..pos.len())];
            let hi = if near && m == 1 { near_limit } else { config.max_extent };
            let d = log_uniform(&mut rng, closest, hi);
            pos.push(anchor + sample_direction(&mut rng) * d);
        }
        let mut min_d = f64::INFINITY;
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                let d = (pos[j] - pos[i]).norm();
                if d < closest {
                    failed = "non-overlap";
                    continue 'attempt;
                }
                if d > config.max_extent {
                    failed = "max_extent";
                    continue 'attempt;
                }
                min_d = min_d.min(d);
            }
        }
        if !near && min_d <= near_limit {
            failed = "near-contact quota";
            continue;
        }
        return Ok(pos);
    }
    Err(Error::Sampler { constraint: failed, sample: index, attempts: config.max_attempts })
}

/// Generates `count` labelled configurations. Each particle receives a unit
/// force along a randomly chosen coordinate axis.
pub fn generate_training_set(count: usize, config: &SamplerConfig, seed: u64) -> Result<Vec<TrainingSample>> {
    if count == 0 {
        return Err(invalid("count", "must be positive"));
    }
    config.validate()?;
    (0..count)
        .map(|index| {
            let positions = sample_configuration(config, seed, index)?;
            // forces use a stream disjoint from the geometry streams
            let mut rng = sample_rng(seed ^ 0x9e37_79b9_7f4a_7c15, index);
            let forces: Vec<Vec3> = (0..config.particles)
                .map(|_| {
                    let mut f = Vec3::zeros();
                    f[rng.random_range(0..3)] = 1.0;
                    f
                })
                .collect();
            let system = ParticleSystem::new(positions, config.radius, config.viscosity, Domain::Unbounded)?;
            let velocities = oracle_velocities(&system, &forces, config.order)?;
            Ok(TrainingSample {
                positions: system.positions,
                forces,
                velocities,
                domain: Domain::Unbounded,
            })
        })
        .collect()
}

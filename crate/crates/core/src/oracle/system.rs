use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::neighbor_search;

pub type Vec3 = Vector3<f64>;

/// Spatial domain the suspension lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Unbounded,
    /// Cubic periodic box `[0, edge)^3`.
    Periodic { edge: f64 },
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Unbounded => "unbounded",
            Domain::Periodic { .. } => "periodic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Unbounded => Ok(()),
            Domain::Periodic { edge } if edge.is_finite() && edge > 0.0 => Ok(()),
            Domain::Periodic { edge } => Err(invalid("edge", format!("box edge must be positive, got {edge}"))),
        }
    }

    /// Displacement `to - from`, using the minimum image in periodic boxes.
    #[inline]
    pub fn displacement(&self, from: &Vec3, to: &Vec3) -> Vec3 {
        let d = to - from;
        match *self {
            Domain::Unbounded => d,
            Domain::Periodic { edge } => d.map(|c| c - edge * (c / edge).round()),
        }
    }

    #[inline]
    pub fn distance(&self, a: &Vec3, b: &Vec3) -> f64 {
        self.displacement(a, b).norm()
    }

    /// Maps a position back into the primary box. Identity for unbounded domains.
    #[inline]
    pub fn wrap(&self, p: &Vec3) -> Vec3 {
        match *self {
            Domain::Unbounded => *p,
            Domain::Periodic { edge } => p.map(|c| {
                let w = c - edge * (c / edge).floor();
                // rounding can land exactly on the upper face
                if w >= edge {
                    0.0
                } else {
                    w
                }
            }),
        }
    }
}

/// N identical rigid spheres suspended in a Newtonian fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub positions: Vec<Vec3>,
    pub radius: f64,
    pub viscosity: f64,
    pub domain: Domain,
}

impl ParticleSystem {
    /// Builds a system and checks every invariant: positive radius and viscosity,
    /// coordinates inside the box for periodic domains, and no overlapping pair.
    pub fn new(positions: Vec<Vec3>, radius: f64, viscosity: f64, domain: Domain) -> Result<Self> {
        check_physical(radius, viscosity)?;
        domain.validate()?;
        if let Some(p) = positions.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("particle position {p:?}")));
        }
        if let Domain::Periodic { edge } = domain {
            if let Some((i, _)) = positions
                .iter()
                .enumerate()
                .find(|(_, p)| p.iter().any(|&c| !(0.0..edge).contains(&c)))
            {
                return Err(invalid(
                    "positions",
                    format!("particle {i} lies outside the periodic box [0, {edge})"),
                ));
            }
        }
        check_overlap(&positions, radius, &domain)?;
        Ok(Self {
            positions,
            radius,
            viscosity,
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub(crate) fn check_physical(radius: f64, viscosity: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    if !(viscosity.is_finite() && viscosity > 0.0) {
        return Err(invalid("viscosity", format!("must be positive, got {viscosity}")));
    }
    Ok(())
}

/// Returns the first pair (in index order) whose center distance is below `2 * radius`.
pub fn find_overlap(positions: &[Vec3], radius: f64, domain: &Domain) -> Option<(usize, usize, f64)> {
    let contact = 2.0 * radius;
    let brute_force = match *domain {
        Domain::Periodic { edge } => contact > 0.5 * edge,
        Domain::Unbounded => false,
    };
    if brute_force || positions.len() < 64 {
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let d = domain.distance(&positions[i], &positions[j]);
                if d < contact {
                    return Some((i, j, d));
                }
            }
        }
        return None;
    }
    let lists = neighbor_search(positions, contact, domain).ok()?;
    lists.iter().enumerate().find_map(|(i, nbrs)| {
        nbrs.iter().filter(|&&j| j > i).find_map(|&j| {
            let d = domain.distance(&positions[i], &positions[j]);
            (d < contact).then_some((i, j, d))
        })
    })
}

pub fn check_overlap(positions: &[Vec3], radius: f64, domain: &Domain) -> Result<()> {
    match find_overlap(positions, radius, domain) {
        Some((i, j, distance)) => Err(Error::Overlap {
            i,
            j,
            distance,
            contact: 2.0 * radius,
        }),
        None => Ok(()),
    }
}

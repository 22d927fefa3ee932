use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::oracle::{Domain, Vec3};

/// Morse pair potential parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseParams {
    /// Inverse width of the well.
    pub rho: f64,
    /// Well depth.
    pub depth: f64,
    /// Equilibrium separation.
    pub r_eq: f64,
}

impl MorseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("depth", self.depth), ("r_eq", self.r_eq)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Radial Morse force at separation `r`; positive is repulsive.
///
/// Repulsive inside `r_eq`, attractive outside, and vanishing at `r_eq` and at
/// infinity.
pub fn morse_force_scalar(r: f64, p: &MorseParams) -> Result<f64> {
    p.validate()?;
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("r", format!("separation must be positive, got {r}")));
    }
    let x = p.rho * (r - p.r_eq);
    Ok(2.0 * p.rho * p.depth * ((-2.0 * x).exp() - (-x).exp()))
}

/// Per-particle external forces: pairwise Morse forces (if any) plus a uniform
/// body force (if any). Pair terms are applied equal and opposite.
pub fn total_external_force(
    positions: &[Vec3],
    domain: &Domain,
    morse: Option<&MorseParams>,
    uniform: Option<Vec3>,
) -> Result<Vec<Vec3>> {
    let mut out = vec![uniform.unwrap_or_else(Vec3::zeros); positions.len()];
    let Some(m) = morse else {
        return Ok(out);
    };
    m.validate()?;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            // unit vector from j to i
            let d = domain.displacement(&positions[j], &positions[i]);
            let r = d.norm();
            if r == 0.0 {
                return Err(Error::Overlap { i, j, distance: 0.0, contact: 0.0 });
            }
            let f = d * (morse_force_scalar(r, m)? / r);
            out[i] += f;
            out[j] -= f;
        }
    }
    Ok(out)
}

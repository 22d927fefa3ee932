//! Grand mobility assembly and truncated many-body velocity evaluation.

use nalgebra::DMatrix;

use super::kernels::{induced_stresslet, point_force_strain, rpy_pair_mobility, stokes_drag, stresslet_velocity, Mat3};
use super::system::{ParticleSystem, Vec3};
use crate::error::{Error, Result};

/// Dense `3N x 3N` translational mobility.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityMatrix(pub DMatrix<f64>);

impl MobilityMatrix {
    pub fn particle_count(&self) -> usize {
        self.0.nrows() / 3
    }

    pub fn block(&self, i: usize, j: usize) -> Mat3 {
        self.0.fixed_view::<3, 3>(3 * i, 3 * j).into_owned()
    }

    /// Largest absolute asymmetry `max |M - M^T|`.
    pub fn asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).abs().max()
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    pub fn apply(&self, forces: &[Vec3]) -> Vec<Vec3> {
        let stacked = DMatrix::from_iterator(3 * forces.len(), 1, forces.iter().flat_map(|f| f.iter().copied()));
        let u = &self.0 * stacked;
        (0..forces.len()).map(|i| Vec3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2])).collect()
    }
}

fn require_unbounded(system: &ParticleSystem) -> Result<()> {
    match system.domain {
        super::Domain::Unbounded => Ok(()),
        d => Err(Error::UnsupportedDomain(d.name())),
    }
}

/// RPY-level grand mobility: Stokes drag on the diagonal, RPY cross blocks elsewhere.
pub fn assemble_grand_mobility(system: &ParticleSystem) -> Result<MobilityMatrix> {
    require_unbounded(system)?;
    let n = system.len();
    let self_block = stokes_drag(system.viscosity, system.radius, &system.domain)?;
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        m.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(&self_block);
        for j in i + 1..n {
            let b = rpy_pair_mobility(&(system.positions[j] - system.positions[i]), system.viscosity, system.radius);
            m.fixed_view_mut::<3, 3>(3 * i, 3 * j).copy_from(&b);
            m.fixed_view_mut::<3, 3>(3 * j, 3 * i).copy_from(&b.transpose());
        }
    }
    Ok(MobilityMatrix(m))
}

/// Which reflection terms beyond the isolated-sphere response are included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleTerms {
    /// RPY coupling between distinct particles.
    pub pair: bool,
    /// Stresslet reflected back to the forced particle itself (two-body, decays as r^-4).
    pub self_reflection: bool,
    /// Stresslet reflected off a third particle (three-body).
    pub three_body: bool,
}

impl OracleTerms {
    pub fn for_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self { pair: false, self_reflection: false, three_body: false }),
            2 => Ok(Self { pair: true, self_reflection: false, three_body: false }),
            3 => Ok(Self { pair: true, self_reflection: true, three_body: true }),
            other => Err(Error::InvalidOrder(other)),
        }
    }
}

/// Particle velocities at the given truncation order (1, 2 or 3).
pub fn oracle_velocities(system: &ParticleSystem, forces: &[Vec3], order: usize) -> Result<Vec<Vec3>> {
    oracle_velocities_with(system, forces, OracleTerms::for_order(order)?)
}

pub fn oracle_velocities_with(system: &ParticleSystem, forces: &[Vec3], terms: OracleTerms) -> Result<Vec<Vec3>> {
    require_unbounded(system)?;
    let n = system.len();
    if forces.len() != n {
        return Err(Error::Shape(format!("{} forces for {} particles", forces.len(), n)));
    }
    let (mu, a) = (system.viscosity, system.radius);
    let x = &system.positions;
    let self_block = stokes_drag(mu, a, &system.domain)?;
    let mut u: Vec<Vec3> = forces.iter().map(|f| self_block * f).collect();

    if terms.pair {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    u[i] += rpy_pair_mobility(&(x[j] - x[i]), mu, a) * forces[j];
                }
            }
        }
    }

    if terms.self_reflection || terms.three_body {
        // stresslet induced on k by the flow of the force on j, for every j != k
        let mut partial = vec![Mat3::zeros(); n * n];
        let mut total = vec![Mat3::zeros(); n];
        for k in 0..n {
            for j in 0..n {
                if j != k && forces[j] != Vec3::zeros() {
                    let s = induced_stresslet(&point_force_strain(&(x[k] - x[j]), &forces[j], mu), mu, a);
                    partial[k * n + j] = s;
                    total[k] += s;
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                if k == i {
                    continue;
                }
                let s = match (terms.self_reflection, terms.three_body) {
                    (true, true) => total[k],
                    (true, false) => partial[k * n + i],
                    (false, true) => total[k] - partial[k * n + i],
                    (false, false) => unreachable!(),
                };
                u[i] += stresslet_velocity(&(x[i] - x[k]), &s, mu);
            }
        }
    }

    Ok(u)
}

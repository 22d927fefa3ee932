use std::io::Write;

use serde::{Deserialize, Serialize};

use super::forces::{total_external_force, MorseParams};
use crate::error::{invalid, Error, Result};
use crate::graph::build_graph;
use crate::oracle::dataset::fmt_f64;
use crate::oracle::{find_overlap, oracle_velocities_with, Domain, OracleTerms, ParticleSystem, Vec3};
use crate::surrogate::{infer_with_workers, SurrogateParams};

/// Source of particle velocities for given positions and forces.
#[derive(Debug, Clone, Copy)]
pub enum VelocityBackend<'a> {
    Surrogate {
        params: &'a SurrogateParams,
        workers: usize,
        /// Include the three-body aggregation.
        faces: bool,
    },
    Oracle {
        terms: OracleTerms,
    },
}

impl<'a> VelocityBackend<'a> {
    pub fn surrogate(params: &'a SurrogateParams, workers: usize) -> Self {
        Self::Surrogate { params, workers, faces: true }
    }

    pub fn oracle(order: usize) -> Result<Self> {
        Ok(Self::Oracle { terms: OracleTerms::for_order(order)? })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Surrogate { faces: true, .. } => "surrogate".into(),
            Self::Surrogate { faces: false, .. } => "surrogate-two-body".into(),
            Self::Oracle { terms } => match (terms.pair, terms.self_reflection, terms.three_body) {
                (false, false, false) => "oracle1".into(),
                (true, false, false) => "oracle2".into(),
                (true, true, true) => "oracle3".into(),
                (p, s, t) => format!("oracle(pair={p},self={s},three={t})"),
            },
        }
    }

    /// Velocities of all particles of `system` under `forces`.
    pub fn velocities(&self, system: &ParticleSystem, forces: &[Vec3]) -> Result<Vec<Vec3>> {
        match *self {
            Self::Oracle { terms } => oracle_velocities_with(system, forces, terms),
            Self::Surrogate { params, workers, faces } => {
                let graph = build_graph(&system.positions, &system.domain, params.face_r_cut)?;
                if faces {
                    infer_with_workers(&graph, &system.positions, forces, params, workers)
                } else {
                    crate::surrogate::hignn_velocities_two_body(&graph, &system.positions, forces, params)
                }
            }
        }
    }
}

/// External forcing: an optional uniform body force plus optional Morse pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceModel {
    #[serde(default)]
    pub uniform: Option<[f64; 3]>,
    #[serde(default)]
    pub morse: Option<MorseParams>,
}

impl ForceModel {
    pub fn gravity(force: Vec3) -> Self {
        Self { uniform: Some(force.into()), morse: None }
    }

    pub fn forces(&self, positions: &[Vec3], domain: &Domain) -> Result<Vec<Vec3>> {
        total_external_force(positions, domain, self.morse.as_ref(), self.uniform.map(Vec3::from))
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(u) = self.uniform {
            parts.push(format!("uniform({},{},{})", u[0], u[1], u[2]));
        }
        if let Some(m) = self.morse {
            parts.push(format!("morse(rho={},depth={},r_eq={})", m.rho, m.depth, m.r_eq));
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

/// One explicit Euler step, wrapping into the primary box for periodic domains.
pub fn euler_step(positions: &[Vec3], velocities: &[Vec3], dt: f64, domain: &Domain) -> Vec<Vec3> {
    positions.iter().zip(velocities).map(|(x, u)| domain.wrap(&(x + u * dt))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub dt: f64,
    pub steps: usize,
    pub output_every: usize,
    pub backend: String,
    pub force_model: String,
    pub radius: f64,
    pub viscosity: f64,
    pub domain: Domain,
    /// Hash of the surrogate model file contents, if one was used.
    pub model_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub frames: Vec<Vec<Vec3>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Rows `t,particle_id,x,y,z`, one per particle per frame.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "particle_id", "x", "y", "z"])?;
        for (t, frame) in self.times.iter().zip(&self.frames) {
            for (id, x) in frame.iter().enumerate() {
                w.write_record([fmt_f64(*t), id.to_string(), fmt_f64(x.x), fmt_f64(x.y), fmt_f64(x.z)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn meta_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.meta)?)
    }
}

/// Integrates overdamped motion for `n_steps` steps of size `dt`, recording the
/// initial frame and every `output_every`-th step.
///
/// Forces, the interaction graph and velocities are recomputed every step. An
/// overlap aborts the run with the index of the step at which it was found.
pub fn simulate(
    system: &ParticleSystem,
    backend: &VelocityBackend,
    force_model: &ForceModel,
    dt: f64,
    n_steps: usize,
    output_every: usize,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if output_every == 0 {
        return Err(invalid("output_every", "must be at least 1"));
    }
    let (a, mu, domain) = (system.radius, system.viscosity, system.domain);
    let model_hash = match backend {
        VelocityBackend::Surrogate { params, .. } => Some(params.fingerprint()?),
        VelocityBackend::Oracle { .. } => None,
    };
    let mut positions: Vec<Vec3> = system.positions.iter().map(|p| domain.wrap(p)).collect();
    let mut times = vec![0.0];
    let mut frames = vec![positions.clone()];
    let at_step = |step: usize, e: Error| Error::Simulation { step, source: Box::new(e) };

    for step in 0..n_steps {
        if let Some((i, j, distance)) = find_overlap(&positions, a, &domain) {
            return Err(at_step(step, Error::Overlap { i, j, distance, contact: 2.0 * a }));
        }
        let current = ParticleSystem::new(positions, a, mu, domain).map_err(|e| at_step(step, e))?;
        let forces = force_model.forces(&current.positions, &domain).map_err(|e| at_step(step, e))?;
        let u = backend.velocities(&current, &forces).map_err(|e| at_step(step, e))?;
        positions = euler_step(&current.positions, &u, dt, &domain);
        if (step + 1) % output_every == 0 {
            times.push((step + 1) as f64 * dt);
            frames.push(positions.clone());
        }
    }
    if let Some((i, j, distance)) = find_overlap(&positions, a, &domain) {
        return Err(at_step(n_steps, Error::Overlap { i, j, distance, contact: 2.0 * a }));
    }
    Ok(Trajectory {
        times,
        frames,
        meta: TrajectoryMeta {
            dt,
            steps: n_steps,
            output_every,
            backend: backend.name(),
            force_model: force_model.describe(),
            radius: a,
            viscosity: mu,
            domain,
            model_hash,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_velocity_keeps_positions() {
        let p = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-4.0, 0.5, 9.0)];
        let u = vec![Vec3::zeros(); 2];
        assert_eq!(euler_step(&p, &u, 0.3, &Domain::Unbounded), p);
    }

    #[test]
    fn periodic_wrap_arithmetic() {
        let p = vec![Vec3::new(31.9, 1.0, 1.0)];
        let u = vec![Vec3::new(0.4, 0.0, 0.0)];
        let x = euler_step(&p, &u, 1.0, &Domain::Periodic { edge: 32.0 });
        assert!((x[0].x - 0.3).abs() < 1e-12);
        let back = euler_step(&p, &[Vec3::new(-32.5, 0.0, 0.0)], 1.0, &Domain::Periodic { edge: 32.0 });
        assert!((back[0].x - 31.4).abs() < 1e-12);
    }

    #[test]
    fn small_steps_compose_for_constant_velocity() {
        let p = vec![Vec3::new(0.1, -2.0, 5.0)];
        let u = vec![Vec3::new(0.7, 0.25, -1.5)];
        let mut x = p.clone();
        for _ in 0..1000 {
            x = euler_step(&x, &u, 0.001, &Domain::Unbounded);
        }
        let once = euler_step(&p, &u, 1.0, &Domain::Unbounded);
        assert!((x[0] - once[0]).norm() < 1e-12);
    }

    #[test]
    fn single_sphere_sediments_at_stokes_speed() {
        let sys = ParticleSystem::new(vec![Vec3::new(0.0, 0.0, 10.0)], 1.0, 1.0, Domain::Unbounded).unwrap();
        let traj = simulate(
            &sys,
            &VelocityBackend::oracle(3).unwrap(),
            &ForceModel::gravity(Vec3::new(0.0, 0.0, -1.0)),
            0.01,
            200,
            10,
        )
        .unwrap();
        assert_eq!(traj.frames.len(), 21);
        for (t, f) in traj.times.iter().zip(&traj.frames) {
            let exact = 10.0 - t / (6.0 * PI);
            assert!((f[0].z - exact).abs() < 1e-12);
        }
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn overlap_aborts_with_step_index() {
        // two spheres driven together by a strong Morse well
        let sys = ParticleSystem::new(vec![Vec3::zeros(), Vec3::new(3.0, 0.0, 0.0)], 1.0, 1.0, Domain::Unbounded).unwrap();
        let model = ForceModel {
            uniform: None,
            morse: Some(MorseParams { rho: 1.0, depth: 50.0, r_eq: 1.0 }),
        };
        match simulate(&sys, &VelocityBackend::oracle(1).unwrap(), &model, 1.0, 50, 1) {
            Err(Error::Simulation { step, source }) => {
                assert!(step >= 1);
                assert!(matches!(*source, Error::Overlap { .. }));
            }
            other => panic!("expected overlap abort, got {other:?}"),
        }
    }

    #[test]
    fn csv_rows_per_frame() {
        let sys = ParticleSystem::new(vec![Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0)], 1.0, 1.0, Domain::Unbounded).unwrap();
        let traj = simulate(&sys, &VelocityBackend::oracle(2).unwrap(), &ForceModel::gravity(-Vec3::z()), 0.1, 4, 2).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.starts_with("t,particle_id,x,y,z\n0.0000000000000000e0,0,"));
        assert!(traj.meta_json().unwrap().contains("\"backend\": \"oracle2\""));
    }
}

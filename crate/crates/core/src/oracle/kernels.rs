//! Closed-form Stokes-flow kernels used by the analytic oracle.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use super::system::{check_physical, Domain, Vec3};
use crate::error::Result;

pub type Mat3 = Matrix3<f64>;

/// Self-mobility factor for a unit sphere in a periodic box of edge 32
/// (relative to the unbounded Stokes value).
pub const PERIODIC_SELF_MOBILITY_FACTOR: f64 = 0.982;

/// Single-sphere mobility `c * I` with the default periodic factor.
pub fn stokes_drag(viscosity: f64, radius: f64, domain: &Domain) -> Result<Mat3> {
    stokes_drag_with(viscosity, radius, domain, PERIODIC_SELF_MOBILITY_FACTOR)
}

/// Single-sphere mobility. Unbounded: `1/(6 pi mu a)`. Periodic: `k/(6 pi mu a)`.
pub fn stokes_drag_with(viscosity: f64, radius: f64, domain: &Domain, periodic_factor: f64) -> Result<Mat3> {
    check_physical(radius, viscosity)?;
    domain.validate()?;
    let c = 1.0 / (6.0 * PI * viscosity * radius);
    Ok(match domain {
        Domain::Unbounded => Mat3::identity() * c,
        Domain::Periodic { .. } => Mat3::identity() * (periodic_factor * c),
    })
}

/// Rotne-Prager-Yamakawa cross-mobility block for separation `r = X_j - X_i`.
///
/// For `|r| >= 2a` this is the far-field RPY tensor; for overlapping spheres the
/// regularized branch is used, which reduces to the Stokes self-mobility at `r = 0`.
pub fn rpy_pair_mobility(r: &Vec3, viscosity: f64, radius: f64) -> Mat3 {
    let dist = r.norm();
    let a = radius;
    if dist == 0.0 {
        return Mat3::identity() / (6.0 * PI * viscosity * a);
    }
    let rhat = r / dist;
    let rr = rhat * rhat.transpose();
    if dist >= 2.0 * a {
        let a2 = a * a / (dist * dist);
        let pre = 1.0 / (8.0 * PI * viscosity * dist);
        (Mat3::identity() * (1.0 + 2.0 * a2 / 3.0) + rr * (1.0 - 2.0 * a2)) * pre
    } else {
        let pre = 1.0 / (6.0 * PI * viscosity * a);
        let s = dist / (32.0 * a);
        (Mat3::identity() * (1.0 - 9.0 * s) + rr * (3.0 * s)) * pre
    }
}

/// Oseen (Stokeslet) tensor `G(rho) = (I/|rho| + rho rho^T/|rho|^3) / (8 pi mu)`.
pub fn oseen_tensor(rho: &Vec3, viscosity: f64) -> Mat3 {
    let d = rho.norm();
    (Mat3::identity() / d + rho * rho.transpose() / (d * d * d)) / (8.0 * PI * viscosity)
}

/// Rate-of-strain tensor at offset `rho` (field point minus source) of the
/// point-force flow generated by `force`.
pub fn point_force_strain(rho: &Vec3, force: &Vec3, viscosity: f64) -> Mat3 {
    let d = rho.norm();
    let d3 = d * d * d;
    let rf = rho.dot(force);
    (Mat3::identity() * (rf / d3) - rho * rho.transpose() * (3.0 * rf / (d3 * d * d))) / (8.0 * PI * viscosity)
}

/// Stresslet a rigid, force- and torque-free sphere exerts on the fluid when
/// immersed in an ambient straining flow (Faxen curvature term dropped).
pub fn induced_stresslet(strain: &Mat3, viscosity: f64, radius: f64) -> Mat3 {
    strain * (20.0 / 3.0 * PI * viscosity * radius.powi(3))
}

/// Velocity at offset `rho` from the center of a stresslet `s`.
pub fn stresslet_velocity(rho: &Vec3, s: &Mat3, viscosity: f64) -> Vec3 {
    let d = rho.norm();
    let d2 = d * d;
    let contraction = rho.dot(&(s * rho));
    rho * (-3.0 * contraction / (8.0 * PI * viscosity * d2 * d2 * d))
}

/// Velocity at `target` from the stresslet reflected off `passing` in the
/// point-force flow generated by `force` at `source`.
pub fn stresslet_reflection(
    target: &Vec3,
    passing: &Vec3,
    source: &Vec3,
    force: &Vec3,
    viscosity: f64,
    radius: f64,
) -> Vec3 {
    let strain = point_force_strain(&(passing - source), force, viscosity);
    let s = induced_stresslet(&strain, viscosity, radius);
    stresslet_velocity(&(target - passing), &s, viscosity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;

    #[test]
    fn stokes_drag_values() {
        let m = stokes_drag(1.0, 1.0, &Domain::Unbounded).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0 / (6.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(m[(0, 0)], 0.0530516, epsilon = 1e-7);
        assert_eq!(m[(0, 1)], 0.0);
        let m2 = stokes_drag(2.0, 1.0, &Domain::Unbounded).unwrap();
        assert_relative_eq!(m2[(1, 1)], 0.5 * m[(1, 1)], max_relative = 1e-15);
        let p = stokes_drag(1.0, 1.0, &Domain::Periodic { edge: 32.0 }).unwrap();
        assert_relative_eq!(p[(2, 2)], 0.982 / (6.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn stokes_drag_rejects_nonpositive_inputs() {
        assert!(stokes_drag(0.0, 1.0, &Domain::Unbounded).is_err());
        assert!(stokes_drag(1.0, -1.0, &Domain::Unbounded).is_err());
    }

    #[test]
    fn rpy_branches_agree_at_contact() {
        let dir = Vec3::new(0.3, -0.5, 0.8).normalize();
        let a = 1.3;
        let mu = 0.7;
        let at = rpy_pair_mobility(&(dir * 2.0 * a), mu, a);
        // evaluate both closed forms directly at |r| = 2a
        let rr = dir * dir.transpose();
        let far = (Mat3::identity() * (1.0 + 2.0 / 12.0) + rr * (1.0 - 0.5)) / (8.0 * PI * mu * 2.0 * a);
        let near = (Mat3::identity() * (1.0 - 9.0 / 16.0) + rr * (3.0 / 16.0)) / (6.0 * PI * mu * a);
        assert!((far - near).abs().max() < 1e-12);
        assert!((at - far).abs().max() < 1e-12);
        let below = rpy_pair_mobility(&(dir * (2.0 * a - 1e-13)), mu, a);
        assert!((below - at).abs().max() < 1e-12);
    }

    #[test]
    fn rpy_zero_separation_is_self_mobility() {
        let m = rpy_pair_mobility(&Vec3::zeros(), 1.0, 1.0);
        assert_eq!(m, stokes_drag(1.0, 1.0, &Domain::Unbounded).unwrap());
    }

    #[test]
    fn rpy_far_field_is_oseen() {
        let r = Vec3::new(1e4, 0.0, 0.0);
        let m = rpy_pair_mobility(&r, 1.0, 1.0);
        assert_relative_eq!(m[(0, 0)], 2.0 / (8.0 * PI * 1e4), max_relative = 1e-7);
        assert_relative_eq!(m[(1, 1)], 1.0 / (8.0 * PI * 1e4), max_relative = 1e-7);
    }

    #[test]
    fn rpy_is_rotation_covariant() {
        let r = Vec3::new(2.5, -1.0, 0.4);
        let q = Rotation3::from_euler_angles(0.3, -1.1, 2.0).into_inner();
        let lhs = rpy_pair_mobility(&(q * r), 1.0, 1.0);
        let rhs = q * rpy_pair_mobility(&r, 1.0, 1.0) * q.transpose();
        assert!((lhs - rhs).abs().max() < 1e-12);
    }

    #[test]
    fn strain_matches_finite_differences_of_oseen_flow() {
        let rho = Vec3::new(1.7, -2.3, 0.9);
        let f = Vec3::new(0.2, 1.0, -0.6);
        let mu = 1.4;
        let h = 1e-5;
        let mut grad = Mat3::zeros();
        for c in 0..3 {
            let mut e = Vec3::zeros();
            e[c] = h;
            let up = oseen_tensor(&(rho + e), mu) * f;
            let dn = oseen_tensor(&(rho - e), mu) * f;
            let col = (up - dn) / (2.0 * h);
            for a in 0..3 {
                grad[(a, c)] = col[a];
            }
        }
        let fd = (grad + grad.transpose()) * 0.5;
        let analytic = point_force_strain(&rho, &f, mu);
        assert!((fd - analytic).abs().max() < 1e-9 * analytic.abs().max());
        assert!(analytic.trace().abs() < 1e-15);
    }

    #[test]
    fn stresslet_field_matches_rigid_sphere_disturbance() {
        // u' = -(5/2) a^3 x (x.E.x) / |x|^5 for a sphere in pure strain E
        let e = Mat3::new(1.0, 0.2, 0.0, 0.2, -0.4, 0.1, 0.0, 0.1, -0.6);
        let x = Vec3::new(3.0, 1.0, -2.0);
        let a = 1.2;
        let s = induced_stresslet(&e, 2.0, a);
        let u = stresslet_velocity(&x, &s, 2.0);
        let expect = x * (-2.5 * a.powi(3) * x.dot(&(e * x)) / x.norm().powi(5));
        assert!((u - expect).norm() < 1e-14);
    }
}

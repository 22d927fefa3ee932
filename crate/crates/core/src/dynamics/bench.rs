//! Drag-coefficient tables for lattices and chains, and inference timing.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use super::simulate::VelocityBackend;
use crate::error::{invalid, Result};
use crate::graph::build_graph;
use crate::oracle::dataset::fmt_f64;
use crate::oracle::{Domain, ParticleSystem, Vec3};
use crate::surrogate::{infer_with_workers, SurrogateParams};

/// `F / (6 pi mu a U)`: 1 for an isolated sphere, below 1 when neighbors
/// help the particle along.
pub fn drag_coefficient(force: f64, speed: f64, viscosity: f64, radius: f64) -> Result<f64> {
    if speed == 0.0 || !speed.is_finite() {
        return Err(invalid("speed", format!("must be finite and non-zero, got {speed}")));
    }
    Ok(force / (6.0 * PI * viscosity * radius * speed))
}

/// Coefficient of particle `index` from its velocity component along the force.
pub fn coefficient_along(force: &Vec3, velocity: &Vec3, viscosity: f64, radius: f64) -> Result<f64> {
    let f = force.norm();
    if f == 0.0 {
        return Err(invalid("force", "must be non-zero"));
    }
    drag_coefficient(f, velocity.dot(&(force / f)), viscosity, radius)
}

/// Four spheres on the corners of an `l x l` square in the xy-plane.
pub fn square_lattice(l: f64) -> Vec<Vec3> {
    vec![Vec3::zeros(), Vec3::new(l, 0.0, 0.0), Vec3::new(0.0, l, 0.0), Vec3::new(l, l, 0.0)]
}

/// `n` spheres spaced `l` apart along x.
pub fn chain(n: usize, l: f64) -> Vec<Vec3> {
    (0..n).map(|i| Vec3::new(i as f64 * l, 0.0, 0.0)).collect()
}

/// Index of the middle particle of a chain of `n`.
pub fn central_index(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    /// Swept quantity, `L` or `N`.
    pub x: f64,
    pub backend: String,
    pub variant: String,
    pub value: f64,
}

fn unit_force(direction: Vec3) -> Result<Vec3> {
    let n = direction.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(invalid("direction", "must be a non-zero vector"));
    }
    Ok(direction / n)
}

/// Drag coefficient of one lattice particle (all four are equivalent) for
/// each spacing, with the three-body contribution switched on and off.
///
/// `with_faces` and `without_faces` are the two backend variants to compare.
pub fn bench_square_lattice(
    ls: &[f64],
    direction: Vec3,
    with_faces: &VelocityBackend,
    without_faces: &VelocityBackend,
    radius: f64,
    viscosity: f64,
) -> Result<Vec<BenchRow>> {
    let f = unit_force(direction)?;
    let mut rows = Vec::new();
    for &l in ls {
        if !(l > 2.0 * radius) {
            return Err(invalid("L", format!("lattice spacing {l} does not exceed the contact distance")));
        }
        let sys = ParticleSystem::new(square_lattice(l), radius, viscosity, Domain::Unbounded)?;
        let forces = vec![f; 4];
        for (variant, backend) in [("with_faces", with_faces), ("without_faces", without_faces)] {
            let u = backend.velocities(&sys, &forces)?;
            rows.push(BenchRow {
                x: l,
                backend: backend.name(),
                variant: variant.into(),
                value: coefficient_along(&f, &u[0], viscosity, radius)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub n: usize,
    pub coefficient: f64,
    pub reference_coefficient: f64,
    /// `|U - U_ref| / |U_ref|` for the central particle.
    pub relative_error: f64,
}

/// Central-particle drag coefficients of evenly spaced chains under a common
/// force, for `backend` and `reference`.
pub fn bench_chain(
    ns: &[usize],
    l: f64,
    direction: Vec3,
    backend: &VelocityBackend,
    reference: &VelocityBackend,
    radius: f64,
    viscosity: f64,
) -> Result<Vec<ChainRow>> {
    let f = unit_force(direction)?;
    ns.iter()
        .map(|&n| {
            if n == 0 {
                return Err(invalid("N", "chain needs at least one particle"));
            }
            let sys = ParticleSystem::new(chain(n, l), radius, viscosity, Domain::Unbounded)?;
            let forces = vec![f; n];
            let c = central_index(n);
            let u = backend.velocities(&sys, &forces)?[c];
            let u_ref = reference.velocities(&sys, &forces)?[c];
            Ok(ChainRow {
                n,
                coefficient: coefficient_along(&f, &u, viscosity, radius)?,
                reference_coefficient: coefficient_along(&f, &u_ref, viscosity, radius)?,
                relative_error: (u - u_ref).norm() / u_ref.norm(),
            })
        })
        .collect()
}

impl ChainRow {
    pub fn to_bench_rows(&self, backend: &str, reference: &str) -> Vec<BenchRow> {
        let x = self.n as f64;
        vec![
            BenchRow { x, backend: backend.into(), variant: "drag_coefficient".into(), value: self.coefficient },
            BenchRow { x, backend: reference.into(), variant: "drag_coefficient".into(), value: self.reference_coefficient },
            BenchRow { x, backend: backend.into(), variant: "relative_error".into(), value: self.relative_error },
        ]
    }
}

/// CSV with columns `<x_name>,backend,variant,value`.
pub fn write_bench_table<W: Write>(out: W, x_name: &str, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([x_name, "backend", "variant", "value"])?;
    for r in rows {
        // shortest round-trip form keeps sweep values readable ("2.5", "10")
        w.write_record([r.x.to_string(), r.backend.clone(), r.variant.clone(), fmt_f64(r.value)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub n: usize,
    pub workers: usize,
    pub graph_build_s: f64,
    pub evaluate_s: f64,
}

/// Simple cubic arrangement of `n` spheres with spacing `spacing`.
pub fn cubic_cluster(n: usize, spacing: f64) -> Vec<Vec3> {
    let side = (n as f64).cbrt().ceil().max(1.0) as usize;
    (0..n)
        .map(|i| {
            Vec3::new(
                (i % side) as f64 * spacing,
                ((i / side) % side) as f64 * spacing,
                (i / (side * side)) as f64 * spacing,
            )
        })
        .collect()
}

/// Wall time of one inference step split into graph construction and kernel
/// evaluation, for a cubic cluster of each size.
pub fn bench_timing(ns: &[usize], spacing: f64, params: &SurrogateParams, workers: usize) -> Result<Vec<TimingRow>> {
    ns.iter()
        .map(|&n| {
            let positions = cubic_cluster(n, spacing);
            let forces = vec![Vec3::new(0.0, 0.0, -1.0); n];
            let t0 = Instant::now();
            let graph = build_graph(&positions, &Domain::Unbounded, params.face_r_cut)?;
            let t1 = Instant::now();
            let u = infer_with_workers(&graph, &positions, &forces, params, workers)?;
            let t2 = Instant::now();
            debug_assert_eq!(u.len(), n);
            Ok(TimingRow {
                n,
                workers,
                graph_build_s: (t1 - t0).as_secs_f64(),
                evaluate_s: (t2 - t1).as_secs_f64(),
            })
        })
        .collect()
}

/// CSV with columns `N,workers,graph_build_s,evaluate_s`, seconds to 3 decimals.
pub fn write_timing_table<W: Write>(out: W, rows: &[TimingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "workers", "graph_build_s", "evaluate_s"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.workers.to_string(),
            format!("{:.3}", r.graph_build_s),
            format!("{:.3}", r.evaluate_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut end = k + 1;
        while end < idx.len() && values[idx[end]] == values[idx[k]] {
            end += 1;
        }
        let rank = (k + end + 1) as f64 / 2.0;
        for &i in &idx[k..end] {
            out[i] = rank;
        }
        k = end;
    }
    out
}

/// Spearman rank correlation: the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("samples", "need two equally long series with at least two entries"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(invalid("samples", "a constant series has no rank correlation"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleTerms;

    #[test]
    fn isolated_and_scaled_coefficients() {
        let mu = 1.0;
        let u = 1.0 / (6.0 * PI * mu);
        assert_eq!(drag_coefficient(1.0, u, mu, 1.0).unwrap(), 1.0);
        // doubling viscosity halves the speed at fixed force
        let c2 = drag_coefficient(1.0, u / 2.0, 2.0 * mu, 1.0).unwrap();
        assert!((c2 - 1.0).abs() < 1e-15);
        assert!(drag_coefficient(1.0, 0.0, mu, 1.0).is_err());
    }

    #[test]
    fn chain_of_one_is_isolated() {
        let o3 = VelocityBackend::oracle(3).unwrap();
        let rows = bench_chain(&[1], 3.0, Vec3::z(), &o3, &o3, 1.0, 1.0).unwrap();
        assert!((rows[0].coefficient - 1.0).abs() < 1e-14);
        assert_eq!(rows[0].relative_error, 0.0);
    }

    #[test]
    fn lattice_far_field_and_contact() {
        let with = VelocityBackend::oracle(3).unwrap();
        let without = VelocityBackend::Oracle {
            terms: OracleTerms { pair: true, self_reflection: true, three_body: false },
        };
        let rows = bench_square_lattice(&[100.0, 1000.0, 2.01], -Vec3::z(), &with, &without, 1.0, 1.0).unwrap();
        assert_eq!(rows.len(), 6);
        // far field: force normal to the lattice plane, so each neighbor at r adds
        // (1 + 2/(3 r^2)) / (8 pi r) to the self mobility 1/(6 pi)
        for (row, l) in [(&rows[0], 100.0), (&rows[2], 1000.0)] {
            let far: f64 = [l, l, l * 2f64.sqrt()].iter().map(|r| (1.0 + 2.0 / (3.0 * r * r)) / (8.0 * PI * r)).sum();
            let expect = (1.0 / (6.0 * PI)) / (1.0 / (6.0 * PI) + far);
            assert!((row.value - expect).abs() < 1e-6, "{} vs {expect}", row.value);
        }
        assert!((rows[0].value - 1.0).abs() < 0.025);
        assert!((rows[2].value - 1.0).abs() < 0.0025);
        assert!(rows[4].value < 1.0);
        assert!(bench_square_lattice(&[2.0], -Vec3::z(), &with, &without, 1.0, 1.0).is_err());
    }

    #[test]
    fn spearman_reference_values() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // hand-computed: ranks of y are 2,1,4,3,5 -> rho = 1 - 6*4/120 = 0.8
        assert!((spearman(&x, &[0.2, 0.1, 0.4, 0.3, 0.5]).unwrap() - 0.8).abs() < 1e-14);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&x, &[1.0; 5]).is_err());
    }

    #[test]
    fn table_layouts() {
        let rows = vec![BenchRow { x: 2.5, backend: "oracle3".into(), variant: "with_faces".into(), value: 0.5 }];
        let mut buf = Vec::new();
        write_bench_table(&mut buf, "L", &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "L,backend,variant,value\n2.5,oracle3,with_faces,5.0000000000000000e-1\n");
        let t = vec![TimingRow { n: 10, workers: 2, graph_build_s: 0.0123, evaluate_s: 1.5 }];
        let mut buf = Vec::new();
        write_timing_table(&mut buf, &t).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N,workers,graph_build_s,evaluate_s\n10,2,0.012,1.500\n");
    }

    #[test]
    fn cubic_cluster_is_non_overlapping() {
        let p = cubic_cluster(30, 3.0);
        assert_eq!(p.len(), 30);
        assert!(crate::oracle::find_overlap(&p, 1.0, &Domain::Unbounded).is_none());
    }
}

use nalgebra::Vector6;

use super::mlp::{Block3x6, ForwardCache, Mlp, OUTPUT_WIDTH, THREE_BODY_INPUT, TWO_BODY_INPUT};
use super::model::SurrogateParams;
use crate::error::{Error, Result};
use crate::graph::HiGraph;
use crate::oracle::Vec3;

/// Kernel evaluations per batched pass. Bounds scratch memory on large graphs.
pub(crate) const CHUNK_ROWS: usize = 1024;

/// Applies one kernel output block to the force feature `[F_target; F_source]`.
#[inline]
pub(crate) fn apply_block(h: &[f64], f_target: &Vec3, f_source: &Vec3) -> Vec3 {
    let block = Block3x6::from_row_slice(h);
    block * force_feature(f_target, f_source)
}

#[inline]
pub(crate) fn force_feature(f_target: &Vec3, f_source: &Vec3) -> Vector6<f64> {
    Vector6::new(f_target.x, f_target.y, f_target.z, f_source.x, f_source.y, f_source.z)
}

pub(crate) fn check_shapes(graph: &HiGraph, positions: &[Vec3], forces: &[Vec3]) -> Result<()> {
    if positions.len() != graph.vertex_count() || forces.len() != graph.vertex_count() {
        return Err(Error::Shape(format!(
            "graph has {} vertices but {} positions and {} forces were given",
            graph.vertex_count(),
            positions.len(),
            forces.len()
        )));
    }
    Ok(())
}

fn check_kernel(mlp: &Mlp, input: usize, name: &str) -> Result<()> {
    if mlp.input_width() != input || mlp.output_width() != OUTPUT_WIDTH {
        return Err(Error::Shape(format!(
            "{name} must map {input} -> {OUTPUT_WIDTH}, got {} -> {}",
            mlp.input_width(),
            mlp.output_width()
        )));
    }
    Ok(())
}

/// Kernel input row for edge `(target, source)`: `X_source - X_target`.
#[inline]
pub(crate) fn edge_input(graph: &HiGraph, positions: &[Vec3], target: usize, source: usize) -> [f64; 3] {
    let d = graph.domain().displacement(&positions[target], &positions[source]);
    [d.x, d.y, d.z]
}

/// Kernel input row for face `(target, passing, source)`:
/// `X_source - X_target` followed by `X_passing - X_target`.
#[inline]
pub(crate) fn face_input(graph: &HiGraph, positions: &[Vec3], target: usize, passing: usize, source: usize) -> [f64; 6] {
    let dom = graph.domain();
    let s = dom.displacement(&positions[target], &positions[source]);
    let p = dom.displacement(&positions[target], &positions[passing]);
    [s.x, s.y, s.z, p.x, p.y, p.z]
}

/// Evaluates `mlp` on `rows` in chunks and adds each block times its force
/// feature into `out[target - offset]`, in iteration order.
fn accumulate<const W: usize>(
    mlp: &Mlp,
    rows: impl Iterator<Item = (usize, usize, [f64; W])>,
    forces: &[Vec3],
    out: &mut [Vec3],
    offset: usize,
) {
    let mut cache = ForwardCache::default();
    let mut input = Vec::with_capacity(CHUNK_ROWS * W);
    let mut pairs = Vec::with_capacity(CHUNK_ROWS);
    let mut rows = rows.peekable();
    while rows.peek().is_some() {
        input.clear();
        pairs.clear();
        for (t, s, x) in rows.by_ref().take(CHUNK_ROWS) {
            input.extend_from_slice(&x);
            pairs.push((t, s));
        }
        let h = mlp.forward_batch(&input, pairs.len(), &mut cache);
        for (r, &(t, s)) in pairs.iter().enumerate() {
            out[t - offset] += apply_block(&h[OUTPUT_WIDTH * r..OUTPUT_WIDTH * (r + 1)], &forces[t], &forces[s]);
        }
    }
}

/// Two-body aggregation over every edge targeting the graph's vertices.
/// Entry `t` of the result belongs to vertex `graph.targets().start + t`.
pub fn edge_conv(graph: &HiGraph, positions: &[Vec3], forces: &[Vec3], h_theta2: &Mlp) -> Result<Vec<Vec3>> {
    check_shapes(graph, positions, forces)?;
    check_kernel(h_theta2, TWO_BODY_INPUT, "h_theta2")?;
    let mut out = vec![Vec3::zeros(); graph.targets().len()];
    let rows = graph.edges().map(|(i, j)| (i, j, edge_input(graph, positions, i, j)));
    accumulate(h_theta2, rows, forces, &mut out, graph.targets().start);
    Ok(out)
}

/// Three-body aggregation over every face targeting the graph's vertices.
pub fn face_conv(graph: &HiGraph, positions: &[Vec3], forces: &[Vec3], g_theta3: &Mlp) -> Result<Vec<Vec3>> {
    check_shapes(graph, positions, forces)?;
    check_kernel(g_theta3, THREE_BODY_INPUT, "g_theta3")?;
    let mut out = vec![Vec3::zeros(); graph.targets().len()];
    let rows = graph
        .faces()
        .iter()
        .map(|f| (f.target, f.source, face_input(graph, positions, f.target, f.passing, f.source)));
    accumulate(g_theta3, rows, forces, &mut out, graph.targets().start);
    Ok(out)
}

fn velocities(graph: &HiGraph, positions: &[Vec3], forces: &[Vec3], params: &SurrogateParams, faces: bool) -> Result<Vec<Vec3>> {
    let edge = edge_conv(graph, positions, forces, &params.h_theta2)?;
    let face = if faces {
        Some(face_conv(graph, positions, forces, &params.g_theta3)?)
    } else {
        None
    };
    let alpha = params.alpha1_matrix();
    Ok(graph
        .targets()
        .enumerate()
        .map(|(t, i)| {
            let u = alpha * forces[i] + edge[t];
            match &face {
                Some(f) => u + f[t],
                None => u,
            }
        })
        .collect())
}

/// Predicted velocities of the graph's target vertices: the isolated-particle
/// term plus two- and three-body aggregations.
pub fn hignn_velocities(graph: &HiGraph, positions: &[Vec3], forces: &[Vec3], params: &SurrogateParams) -> Result<Vec<Vec3>> {
    velocities(graph, positions, forces, params, true)
}

/// Same as [`hignn_velocities`] with the three-body aggregation dropped.
pub fn hignn_velocities_two_body(
    graph: &HiGraph,
    positions: &[Vec3],
    forces: &[Vec3],
    params: &SurrogateParams,
) -> Result<Vec<Vec3>> {
    velocities(graph, positions, forces, params, false)
}

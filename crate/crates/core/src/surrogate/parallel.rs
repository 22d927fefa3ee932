use std::thread;

use super::conv::{check_shapes, hignn_velocities};
use super::model::SurrogateParams;
use crate::error::{invalid, Error, Result};
use crate::graph::{partition_graph, GraphPartition, HiGraph};
use crate::oracle::Vec3;

/// Evaluates every part of `partition` on a pool of `n_workers` scoped threads
/// and concatenates the results in part order.
///
/// All workers read the same position and force slices. Each target's sum is
/// formed inside one worker in graph order, so the output is bitwise equal to
/// a serial evaluation of the unpartitioned graph.
pub fn parallel_infer(
    partition: &GraphPartition,
    positions: &[Vec3],
    forces: &[Vec3],
    params: &SurrogateParams,
    n_workers: usize,
) -> Result<Vec<Vec3>> {
    if n_workers == 0 {
        return Err(invalid("n_workers", "must be at least 1"));
    }
    for part in partition.parts() {
        check_shapes(part, positions, forces)?;
    }
    let parts = partition.parts();
    let workers = n_workers.min(parts.len()).max(1);
    if workers == 1 {
        let mut out = Vec::with_capacity(positions.len());
        for part in parts {
            out.extend(hignn_velocities(part, positions, forces, params)?);
        }
        return Ok(out);
    }

    let mut slots: Vec<Option<Result<Vec<Vec3>>>> = (0..parts.len()).map(|_| None).collect();
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..parts.len())
                        .step_by(workers)
                        .map(|p| (p, hignn_velocities(&parts[p], positions, forces, params)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for (w, h) in handles.into_iter().enumerate() {
            match h.join() {
                Ok(results) => {
                    for (p, r) in results {
                        slots[p] = Some(r);
                    }
                }
                Err(_) => {
                    for p in (w..parts.len()).step_by(workers) {
                        slots[p] = Some(Err(Error::Worker(format!("worker {w} panicked"))));
                    }
                }
            }
        }
    });

    let mut out = Vec::with_capacity(positions.len());
    let mut failures = Vec::new();
    for (p, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(v)) => out.extend(v),
            Some(Err(e)) => failures.push(format!("part {p}: {e}")),
            None => failures.push(format!("part {p}: no result")),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(Error::Worker(failures.join("; ")))
    }
}

/// Partitions `graph` into one part per worker (capped at the vertex count) and
/// runs [`parallel_infer`].
pub fn infer_with_workers(
    graph: &HiGraph,
    positions: &[Vec3],
    forces: &[Vec3],
    params: &SurrogateParams,
    n_workers: usize,
) -> Result<Vec<Vec3>> {
    if n_workers == 0 {
        return Err(invalid("n_workers", "must be at least 1"));
    }
    if graph.targets().is_empty() {
        return Ok(Vec::new());
    }
    let parts = n_workers.min(graph.targets().len());
    parallel_infer(&partition_graph(graph, parts)?, positions, forces, params, n_workers)
}

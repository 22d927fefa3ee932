//! Loss evaluation and reverse-mode gradients over batches of labelled samples.

use super::loss::relative_sq_error;
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::oracle::{TrainingSample, Vec3};
use crate::surrogate::conv::{edge_input, face_input, force_feature};
use crate::surrogate::mlp::OUTPUT_WIDTH;
use crate::surrogate::{Block3x6, ForwardCache, Mlp, SurrogateParams};

/// Gradients with the same layout as the two kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateGrads {
    pub h_theta2: Mlp,
    pub g_theta3: Mlp,
}

impl SurrogateGrads {
    pub fn zeros_like(params: &SurrogateParams) -> Self {
        Self {
            h_theta2: Mlp::zeros(&params.h_theta2.widths()),
            g_theta3: Mlp::zeros(&params.g_theta3.widths()),
        }
    }

    /// All entries in parameter order: `h_theta2` first, then `g_theta3`.
    pub fn flatten(&self) -> Vec<f64> {
        self.h_theta2.parameters().chain(self.g_theta3.parameters()).copied().collect()
    }

    pub fn parameter_path(&self, index: usize) -> String {
        let nh = self.h_theta2.parameter_count();
        if index < nh {
            format!("h_theta2.{}", self.h_theta2.parameter_path(index))
        } else {
            format!("g_theta3.{}", self.g_theta3.parameter_path(index - nh))
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.h_theta2.parameters_mut().chain(self.g_theta3.parameters_mut()).for_each(|p| *p *= k);
    }
}

/// A training sample with its kernel inputs precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    forces: Vec<Vec3>,
    velocities: Vec<Vec3>,
    /// `(target, source)` per edge row.
    edges: Vec<(usize, usize)>,
    edge_inputs: Vec<f64>,
    /// `(target, source)` per face row.
    faces: Vec<(usize, usize)>,
    face_inputs: Vec<f64>,
}

impl PreparedSample {
    /// Builds the sample's graph with faces limited to `face_r_cut`.
    pub fn new(sample: &TrainingSample, face_r_cut: f64) -> Result<Self> {
        let n = sample.particle_count();
        if sample.forces.len() != n || sample.velocities.len() != n {
            return Err(Error::Shape(format!(
                "sample has {n} positions, {} forces and {} velocities",
                sample.forces.len(),
                sample.velocities.len()
            )));
        }
        let graph = build_graph(&sample.positions, &sample.domain, face_r_cut)?;
        let p = &sample.positions;
        let edges: Vec<_> = graph.edges().collect();
        let edge_inputs = edges.iter().flat_map(|&(i, j)| edge_input(&graph, p, i, j)).collect();
        let faces = graph.faces().iter().map(|f| (f.target, f.source)).collect();
        let face_inputs = graph
            .faces()
            .iter()
            .flat_map(|f| face_input(&graph, p, f.target, f.passing, f.source))
            .collect();
        Ok(Self {
            forces: sample.forces.clone(),
            velocities: sample.velocities.clone(),
            edges,
            edge_inputs,
            faces,
            face_inputs,
        })
    }

    pub fn particle_count(&self) -> usize {
        self.forces.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
}

pub fn prepare_samples(samples: &[TrainingSample], face_r_cut: f64) -> Result<Vec<PreparedSample>> {
    samples.iter().map(|s| PreparedSample::new(s, face_r_cut)).collect()
}

/// Reusable buffers for batched loss and gradient evaluation.
#[derive(Debug, Default)]
pub struct BatchEvaluator {
    forces: Vec<Vec3>,
    truth: Vec<Vec3>,
    pred: Vec<Vec3>,
    upstream: Vec<Vec3>,
    edge_rows: Vec<(usize, usize)>,
    edge_in: Vec<f64>,
    face_rows: Vec<(usize, usize)>,
    face_in: Vec<f64>,
    d_out: Vec<f64>,
    cache_h: ForwardCache,
    cache_g: ForwardCache,
}

/// Adds `block(h) * [F_t; F_s]` to `pred[t]` for every row.
fn add_contributions(out: &[f64], rows: &[(usize, usize)], forces: &[Vec3], pred: &mut [Vec3]) {
    for (r, &(t, s)) in rows.iter().enumerate() {
        let block = Block3x6::from_row_slice(&out[OUTPUT_WIDTH * r..OUTPUT_WIDTH * (r + 1)]);
        pred[t] += block * force_feature(&forces[t], &forces[s]);
    }
}

/// Output gradient per row: outer product of the target's upstream gradient
/// with the row's force feature.
fn fill_output_gradient(rows: &[(usize, usize)], forces: &[Vec3], upstream: &[Vec3], d_out: &mut Vec<f64>) {
    d_out.clear();
    for &(t, s) in rows {
        let f = force_feature(&forces[t], &forces[s]);
        let g = upstream[t];
        for a in 0..3 {
            for b in 0..6 {
                d_out.push(g[a] * f[b]);
            }
        }
    }
}

impl BatchEvaluator {
    fn gather(&mut self, batch: &[&PreparedSample]) {
        self.forces.clear();
        self.truth.clear();
        self.edge_rows.clear();
        self.edge_in.clear();
        self.face_rows.clear();
        self.face_in.clear();
        for s in batch {
            let off = self.forces.len();
            self.forces.extend_from_slice(&s.forces);
            self.truth.extend_from_slice(&s.velocities);
            self.edge_rows.extend(s.edges.iter().map(|&(t, j)| (off + t, off + j)));
            self.edge_in.extend_from_slice(&s.edge_inputs);
            self.face_rows.extend(s.faces.iter().map(|&(t, j)| (off + t, off + j)));
            self.face_in.extend_from_slice(&s.face_inputs);
        }
    }

    fn predict(&mut self, params: &SurrogateParams) {
        let alpha = params.alpha1_matrix();
        self.pred.clear();
        self.pred.extend(self.forces.iter().map(|f| alpha * f));
        if !self.edge_rows.is_empty() {
            let out = params.h_theta2.forward_batch(&self.edge_in, self.edge_rows.len(), &mut self.cache_h);
            add_contributions(out, &self.edge_rows, &self.forces, &mut self.pred);
        }
        if !self.face_rows.is_empty() {
            let out = params.g_theta3.forward_batch(&self.face_in, self.face_rows.len(), &mut self.cache_g);
            add_contributions(out, &self.face_rows, &self.forces, &mut self.pred);
        }
    }

    /// Sum of per-particle loss terms and the number of terms.
    pub fn loss_sum(&mut self, batch: &[&PreparedSample], params: &SurrogateParams, delta: f64) -> (f64, usize) {
        self.gather(batch);
        self.predict(params);
        let sum = self.pred.iter().zip(&self.truth).map(|(p, t)| relative_sq_error(p, t, delta)).sum();
        (sum, self.truth.len())
    }

    /// Mean loss over the batch; gradients of that mean are added into `grads`.
    pub fn loss_and_gradients(
        &mut self,
        batch: &[&PreparedSample],
        params: &SurrogateParams,
        delta: f64,
        grads: &mut SurrogateGrads,
    ) -> f64 {
        let (sum, terms) = self.loss_sum(batch, params, delta);
        if terms == 0 {
            return 0.0;
        }
        let scale = 2.0 / terms as f64;
        self.upstream.clear();
        self.upstream.extend(
            self.pred
                .iter()
                .zip(&self.truth)
                .map(|(p, t)| (p - t) * (scale / t.norm_squared().max(delta))),
        );
        if !self.edge_rows.is_empty() {
            fill_output_gradient(&self.edge_rows, &self.forces, &self.upstream, &mut self.d_out);
            params
                .h_theta2
                .backward_batch(&mut self.cache_h, self.edge_rows.len(), &self.d_out, &mut grads.h_theta2);
        }
        if !self.face_rows.is_empty() {
            fill_output_gradient(&self.face_rows, &self.forces, &self.upstream, &mut self.d_out);
            params
                .g_theta3
                .backward_batch(&mut self.cache_g, self.face_rows.len(), &self.d_out, &mut grads.g_theta3);
        }
        sum / terms as f64
    }
}

/// Mean relative loss of `params` on `batch`, with faces built at `face_r_cut`.
pub fn batch_loss(batch: &[TrainingSample], params: &SurrogateParams, face_r_cut: f64, delta: f64) -> Result<f64> {
    let prepared = prepare_samples(batch, face_r_cut)?;
    let refs: Vec<_> = prepared.iter().collect();
    let (sum, terms) = BatchEvaluator::default().loss_sum(&refs, params, delta);
    Ok(if terms == 0 { 0.0 } else { sum / terms as f64 })
}

/// Mean relative loss on `batch` and its exact gradient with respect to every
/// kernel weight and bias.
pub fn hignn_gradients(
    batch: &[TrainingSample],
    params: &SurrogateParams,
    face_r_cut: f64,
    delta: f64,
) -> Result<(f64, SurrogateGrads)> {
    let prepared = prepare_samples(batch, face_r_cut)?;
    let refs: Vec<_> = prepared.iter().collect();
    let mut grads = SurrogateGrads::zeros_like(params);
    let loss = BatchEvaluator::default().loss_and_gradients(&refs, params, delta, &mut grads);
    Ok((loss, grads))
}

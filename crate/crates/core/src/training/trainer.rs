use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::gradients::{prepare_samples, BatchEvaluator, PreparedSample, SurrogateGrads};
use super::loss::{lr_schedule_with, LOSS_GUARD};
use crate::error::{invalid, Error, Result};
use crate::oracle::dataset::fmt_f64;
use crate::oracle::{stokes_drag, TrainingSample};
use crate::surrogate::SurrogateParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub base_lr: f64,
    pub lr_halving_period: usize,
    pub adam: AdamConfig,
    /// Train:test split ratio as two positive integers.
    pub train_parts: usize,
    pub test_parts: usize,
    pub seed: u64,
    pub loss_guard: f64,
    pub radius: f64,
    pub viscosity: f64,
    /// Face cutoff used to build training graphs.
    pub train_face_r_cut: f64,
    /// Face cutoff stored in the model for inference.
    pub face_r_cut: f64,
    /// Multiplier on the Glorot-initialized output-layer weights.
    pub output_init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            epochs: 400,
            base_lr: 1e-3,
            lr_halving_period: 100,
            adam: AdamConfig::default(),
            train_parts: 5,
            test_parts: 1,
            seed: 0,
            loss_guard: LOSS_GUARD,
            radius: 1.0,
            viscosity: 1.0,
            train_face_r_cut: 5.0,
            face_r_cut: 5.0,
            output_init_scale: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("lr_halving_period", self.lr_halving_period),
            ("train_parts", self.train_parts),
            ("test_parts", self.test_parts),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        positive("base_lr", self.base_lr)?;
        positive("loss_guard", self.loss_guard)?;
        positive("radius", self.radius)?;
        positive("viscosity", self.viscosity)?;
        positive("train_face_r_cut", self.train_face_r_cut)?;
        positive("face_r_cut", self.face_r_cut)?;
        positive("adam.epsilon", self.adam.epsilon)?;
        if !(self.output_init_scale.is_finite() && self.output_init_scale >= 0.0) {
            return Err(invalid("output_init_scale", format!("must be non-negative, got {}", self.output_init_scale)));
        }
        for (name, b) in [("adam.beta1", self.adam.beta1), ("adam.beta2", self.adam.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(invalid(name, format!("must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        lr_schedule_with(epoch, self.base_lr, self.lr_halving_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub test_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest test loss seen.
    pub params: SurrogateParams,
    /// Parameters after the final epoch.
    pub last: SurrogateParams,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl TrainOutcome {
    pub fn best_test_loss(&self) -> f64 {
        self.history[self.best_epoch].test_loss
    }
}

/// Seeded permutation split into `(train, test)` index sets. Both are non-empty.
pub fn split_indices(n: usize, train_parts: usize, test_parts: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(invalid("samples", format!("need at least 2 samples, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n * test_parts) as f64 / (train_parts + test_parts) as f64).round() as usize;
    let n_test = n_test.clamp(1, n - 1);
    let test = idx.split_off(n - n_test);
    Ok((idx, test))
}

fn mean_loss(eval: &mut BatchEvaluator, set: &[&PreparedSample], params: &SurrogateParams, batch: usize, delta: f64) -> f64 {
    let (mut sum, mut terms) = (0.0, 0);
    for chunk in set.chunks(batch) {
        let (s, t) = eval.loss_sum(chunk, params, delta);
        sum += s;
        terms += t;
    }
    sum / terms.max(1) as f64
}

/// Trains freshly initialized kernels on `samples`.
pub fn train(samples: &[TrainingSample], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let domain = samples.first().map(|s| s.domain).ok_or_else(|| invalid("samples", "dataset is empty"))?;
    let drag = stokes_drag(config.viscosity, config.radius, &domain)?;
    let alpha1 = [drag[(0, 0)], drag[(1, 1)], drag[(2, 2)]];
    let init = SurrogateParams::initialize_scaled(
        alpha1,
        config.face_r_cut,
        config.seed ^ 0x1f2e_3d4c_5b6a_7988,
        config.output_init_scale,
    )?;
    train_from(samples, config, init)
}

/// Trains starting from `init`. Deterministic in `config.seed`.
pub fn train_from(samples: &[TrainingSample], config: &TrainConfig, init: SurrogateParams) -> Result<TrainOutcome> {
    config.validate()?;
    let (train_idx, test_idx) = split_indices(samples.len(), config.train_parts, config.test_parts, config.seed)?;
    let prepared = prepare_samples(samples, config.train_face_r_cut)?;
    let test_set: Vec<&PreparedSample> = test_idx.iter().map(|&i| &prepared[i]).collect();
    let mut order = train_idx.clone();

    let mut params = init;
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_loss = f64::INFINITY;
    let mut state = AdamState::new(params.parameter_count());
    let mut grads = SurrogateGrads::zeros_like(&params);
    let mut eval = BatchEvaluator::default();
    let mut history = Vec::with_capacity(config.epochs);
    let delta = config.loss_guard;

    for epoch in 0..config.epochs {
        let lr = config.lr(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);

        let (mut sum, mut terms) = (0.0, 0usize);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&PreparedSample> = chunk.iter().map(|&i| &prepared[i]).collect();
            grads.h_theta2.fill(0.0);
            grads.g_theta3.fill(0.0);
            let loss = eval.loss_and_gradients(&batch, &params, delta, &mut grads);
            if !loss.is_finite() {
                return Err(Error::Training { epoch, batch: b, reason: format!("loss is {loss}") });
            }
            adam_step(&mut params, &grads, &mut state, lr, &config.adam).map_err(|e| Error::Training {
                epoch,
                batch: b,
                reason: e.to_string(),
            })?;
            let n: usize = batch.iter().map(|s| s.particle_count()).sum();
            sum += loss * n as f64;
            terms += n;
        }
        let train_loss = sum / terms.max(1) as f64;
        let test_loss = mean_loss(&mut eval, &test_set, &params, config.batch_size, delta);
        if !test_loss.is_finite() {
            return Err(Error::Training { epoch, batch: 0, reason: format!("test loss is {test_loss}") });
        }
        if test_loss < best_loss {
            best_loss = test_loss;
            best = params.clone();
            best_epoch = epoch;
        }
        log::info!("epoch {epoch}: lr {lr:.3e} train {train_loss:.6e} test {test_loss:.6e}");
        history.push(EpochRecord { epoch, lr, train_loss, test_loss });
    }

    Ok(TrainOutcome {
        params: best,
        last: params,
        best_epoch,
        history,
        train_indices: train_idx,
        test_indices: test_idx,
    })
}

/// Writes `epoch,lr,train_loss,test_loss` rows.
pub fn write_loss_history<W: Write>(out: W, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "lr", "train_loss", "test_loss"])?;
    for r in history {
        w.write_record([r.epoch.to_string(), fmt_f64(r.lr), fmt_f64(r.train_loss), fmt_f64(r.test_loss)])?;
    }
    w.flush()?;
    Ok(())
}

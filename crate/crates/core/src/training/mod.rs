//! Loss, optimizer and the training loop for the surrogate kernels.

pub mod adam;
pub mod gradients;
pub mod loss;
pub mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradients::{batch_loss, hignn_gradients, prepare_samples, BatchEvaluator, PreparedSample, SurrogateGrads};
pub use loss::{lr_schedule, lr_schedule_with, relative_mse_loss, relative_sq_error, LOSS_GUARD};
pub use trainer::{split_indices, train, train_from, write_loss_history, EpochRecord, TrainConfig, TrainOutcome};

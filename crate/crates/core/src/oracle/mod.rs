//! Analytic ground truth: isolated-sphere drag, RPY pair coupling and the
//! leading stresslet reflection, plus training-set generation.

pub mod dataset;
pub mod kernels;
pub mod mobility;
pub mod sampler;
pub mod system;

pub use kernels::{rpy_pair_mobility, stokes_drag, stokes_drag_with, Mat3, PERIODIC_SELF_MOBILITY_FACTOR};
pub use mobility::{assemble_grand_mobility, oracle_velocities, oracle_velocities_with, MobilityMatrix, OracleTerms};
pub use sampler::{generate_training_set, SamplerConfig, TrainingSample};
pub use system::{check_overlap, find_overlap, Domain, ParticleSystem, Vec3};

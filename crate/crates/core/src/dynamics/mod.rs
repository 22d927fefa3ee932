//! Overdamped time integration, external forces and benchmark drivers.

pub mod bench;
pub mod forces;
pub mod simulate;

pub use bench::{
    bench_chain, bench_square_lattice, bench_timing, chain, drag_coefficient, spearman, square_lattice, BenchRow,
    ChainRow, TimingRow,
};
pub use forces::{morse_force_scalar, total_external_force, MorseParams};
pub use simulate::{euler_step, simulate, ForceModel, Trajectory, TrajectoryMeta, VelocityBackend};

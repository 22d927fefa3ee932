//! The learned velocity model: two- and three-body MLP kernels aggregated over
//! the interaction graph.

pub mod conv;
pub mod mlp;
pub mod model;
pub mod parallel;

pub use conv::{edge_conv, face_conv, hignn_velocities, hignn_velocities_two_body};
pub use mlp::{Block3x6, ForwardCache, Layer, Mlp};
pub use model::SurrogateParams;
pub use parallel::{infer_with_workers, parallel_infer};

//! Small differentiable models, DP-SGD, fair DP-SGD and student training.

pub mod checkpoint;
pub mod dpl;
pub mod dpsgd;
pub mod model;
pub mod supervised;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use dpl::{dpl, DplValue, FairRegParams, PublicPoint};
pub use dpsgd::{dp_sgd_train, fair_dp_sgd_train, DpSgdParams, TrainedModel};
pub use model::{argmax, clip, l2_norm, softmax, Architecture, Model, INIT_STD};
pub use supervised::{evaluate_accuracy, student_train, student_train_regularized, TrainConfig};

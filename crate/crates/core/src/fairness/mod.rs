//! Demographic-parity estimation and mitigation.

pub mod disparity;
pub mod gate;
pub mod offline;
pub mod stream;

pub use disparity::{
    disparity_from_counts, disparity_matrix, max_abs_disparity, max_disparity, DisparityMatrix,
    DisparityVariant,
};
pub use gate::{
    evaluate_gate, fairness_gate, replay_gate_log, tentative_disparity, FairnessGate, GateCheck,
    GateDecision, GateLogEntry, GateParams, GateReplay,
};
pub use offline::{
    group_privacy_transform, k_gamma, lexicographic_order, majority_cap, ordered_offline_preprocess,
    ordered_offline_preprocess_by,
};
pub use stream::{postprocess_stream, preprocess_stream, PostProcessor, PreProcessor};

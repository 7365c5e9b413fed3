//! Rényi-DP accounting for teacher aggregation and DP-SGD.

pub mod rdp;
pub mod tracker;

pub use rdp::{
    calibrate_noise_multiplier, data_dependent_rdp, default_orders, dp_sgd_epsilon, gaussian_rdp,
    gnmax_rdp, q_tilde, rdp_to_dp, rdp_to_dp_with_order, subsampled_gaussian_rdp,
    threshold_check_rdp, ArgmaxCost, L2Sensitivity, RdpCurve,
};
pub use tracker::{BudgetStatus, BudgetTracker, LedgerEntry};

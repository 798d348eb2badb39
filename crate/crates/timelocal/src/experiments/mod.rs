//! Reproduction experiments: independent reference trajectories, scaling
//! fits, and the worked examples. Every run compares an averaged equation
//! against an oracle that shares nothing with it beyond the linear algebra,
//! and every reported number carries its tolerance and the CSV it came
//! from.

pub mod error_scaling;
pub mod fit;
pub mod nonlinear;
pub mod oracle;
pub mod report;
pub mod wick;

pub use fit::{log_log_fit, SlopeFit};
pub use report::{ExperimentReport, Metric, Tolerance};

/// Default study parameters: a drive of unit strength against a unit bare
/// rate at zero bath occupation, initial moments comfortably inside state
/// space.
pub const DEFAULT_OMEGA: f64 = 1.0;
pub const DEFAULT_GAMMA0: f64 = 1.0;
pub const DEFAULT_N_BATH: f64 = 0.0;
pub const DEFAULT_EX0: f64 = 0.3;
pub const DEFAULT_EZ0: f64 = 0.5;
pub const DEFAULT_E0: f64 = 0.25;
pub const DEFAULT_ALPHA: f64 = 0.4;

/// Three relaxation times, the window over which the worked examples are
/// compared.
pub fn default_t_max(gamma: f64) -> f64 {
    3.0 / gamma.abs()
}

/// Geometric coupling sweep over one decade, `0.02` to `0.2` in eight
/// points: wide enough to resolve a fourth-order law without leaving the
/// asymptotic regime.
pub fn default_lambda_sweep() -> Vec<f64> {
    (0..8)
        .map(|i| 0.02 * 10f64.powf(i as f64 / 7.0))
        .collect()
}

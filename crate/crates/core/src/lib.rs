//! Monte Carlo laboratory for the Tanaka formula of the derivative of
//! self-intersection local time of one-dimensional Brownian motion.
//!
//! The crate builds every term of the identity on simulated paths
//! ([`tanaka`]), the local time estimators it rests on ([`local_time`]),
//! and the study harness that checks convergence and scaling ([`study`]).

pub mod config;
pub mod error;
pub mod local_time;
pub mod mollifier;
pub mod path;
pub mod rng;
pub mod stats;
pub mod study;
pub mod tanaka;

pub use config::{ExperimentConfig, ModeName, Study};
pub use error::{Error, Result};
pub use local_time::{
    local_time_downcrossing, local_time_downcrossing_corrected, local_time_histogram,
    local_time_kernel, moving_level_curve, occupation_histogram, EstimatorMode, EstimatorTag,
    MovingLevelCurve, OccupationHistogram,
};
pub use mollifier::{sgn, Mollifier};
pub use path::{generate_path, BrownianPath};
pub use rng::RngPolicy;
pub use study::{run_study, run_study_with_threads, write_outputs, ConvergenceReport, StudyOutput};
pub use tanaka::{
    classical_tanaka_residual, ito_left_sum, sgn_time_integral, silt_derivative,
    stochastic_integral_v, tanaka_report, weak_derivative_check, TanakaForm, TanakaReport,
};

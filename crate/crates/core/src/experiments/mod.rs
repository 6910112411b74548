//! Reproducible Monte-Carlo and deterministic checks, each returning an
//! [`ExperimentReport`] with thresholded verdicts.

mod gof;
mod gronwall;
mod moment;
mod report;
mod solver;
mod tail;

pub use gof::{char_function_test, default_u_grid, stable_cf, CfTest, MIN_CF_SAMPLES};
pub use gronwall::{maximal_solution, willet_wong_check, WillettWong, HYPOTHESIS_TOL, MARGIN_TOL};
pub use moment::{energy_scale, moment_experiment, MomentConfig};
pub use report::{ExperimentReport, Status, Table, Verdict};
pub use solver::{picard_convergence_experiment, uniqueness_experiment, ConvergenceConfig};
pub use tail::{geometric_grid, tail_experiment, tail_samples, TailConfig, TailTarget};

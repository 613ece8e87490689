//! Reproduction harness: convergence-rate sweeps, the alpha -> 0 sweep for
//! the diagonal thresholding inverse, and the two `p = 0` counterexamples.

mod constrained;
mod csv;
mod nonexist;
mod pinv;
mod rate;
mod slope;

pub use constrained::{run_constrained_nonconvergence_demo, ConstrainedDemo, ConstrainedRow};
pub use csv::fmt_num;
pub use nonexist::{run_nonexistence_demo, run_nonexistence_demo_with_data, NonexistenceDemo, NonexistenceRow};
pub use pinv::{activation_alpha, run_pinv_regularization_sweep, PinvSweep, PinvSweepRow};
pub use rate::{
    kappa_constants_report, log_grid, run_rate_experiment, sphere_noise, RateExperimentConfig, RateReport, RateRow,
    SlopeBand,
};
pub use slope::fit_loglog_slope;

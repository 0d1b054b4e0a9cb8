//! Concrete bilevel and baseline solvers plus stepsize calibration.

mod calibrate;
mod fiba;
mod fista;
mod incremental;

pub use calibrate::{calibrate_mu, consistent_start, grid_search_lambda, GridChoice, GridSearchParams};
pub use fiba::{run_fiba, FibaOutcome, FibaRunner, FibaSchedules};
pub use fista::{run_fista, FistaMode, FistaRunner};
pub use incremental::{incremental_schedules, run_iiba, run_inc};

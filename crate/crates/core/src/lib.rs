//! Adversarial label learning.
//!
//! Trains a binary classifier without labels from weak signals (soft
//! labelings of the training examples) and upper bounds on their expected
//! error. The learner minimizes its expected error against the worst labeling
//! the bounds allow, solved as a projected primal-dual saddle-point problem.
//!
//! Module map:
//!
//! - [`labels`]: probability vectors and the bilinear error arithmetic
//! - [`oracle`]: exact inner maximization (an LP) for small problems
//! - [`models`]: sigmoid-linear and per-example classifiers, logistic regression
//! - [`solver`]: the primal-dual training loop
//! - [`weak`]: simulated weak signals and their error bounds
//! - [`baselines`]: signal averaging and a generalized-expectation learner
//! - [`experiment`]: splits, method grids, studies, reporting

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fixture;
pub mod labels;
mod lp;
pub mod models;
pub mod oracle;
pub mod solver;
pub mod weak;

pub use dataset::{Dataset, Standardizer};
pub use error::{Error, Result};
pub use labels::{
    accuracy, constraint_value, expected_error, feasibility, LabelDistribution, ModelState,
    WeakSignalSet,
};
pub use models::{fit_supervised, DirectModel, FitConfig, Model, SigmoidLinearModel};
pub use oracle::{is_feasible, optimal_multipliers, primal_value, solve_exact, OracleResult, OracleStatus};
pub use solver::{train, MultiplierRule, SolverConfig, StepSchedule, TrainOutcome, TrainStatus};

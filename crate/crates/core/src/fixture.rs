//! The two-example geometry: two weak signals that disagree on the first
//! example, both bounded at 0.4, optimized directly over the learned
//! probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::labels::{feasibility, LabelDistribution, WeakSignalSet};
use crate::models::{DirectModel, Model};
use crate::oracle::{solve_exact, OracleStatus};
use crate::solver::{train, SolverConfig, TrainStatus};

pub const SIGNAL_1: [f64; 2] = [0.3, 0.2];
pub const SIGNAL_2: [f64; 2] = [0.6, 0.1];
pub const BOUND: f64 = 0.4;

/// Published optimum: learned probabilities and the adversarial labeling there.
pub const TARGET_PREDICTIONS: [f64; 2] = [0.18, 0.0];
pub const TARGET_LABELS: [f64; 2] = [0.41, 0.23];
pub const TOLERANCE: f64 = 0.02;
pub const ACTIVE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct FixtureOptions {
    /// Noisy copies of the second signal to append.
    pub extra_signals: usize,
    /// Half-width of the uniform noise added to each copy.
    pub noise: f64,
    pub no_constraints: bool,
    /// Overrides the shared bound.
    pub bound: Option<f64>,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            extra_signals: 0,
            noise: 0.02,
            no_constraints: false,
            bound: None,
            seed: 0,
            solver: SolverConfig::direct(),
        }
    }
}

pub fn signals(options: &FixtureOptions) -> Result<WeakSignalSet> {
    let bound = options.bound.unwrap_or(BOUND);
    if options.no_constraints {
        return WeakSignalSet::new(vec![], vec![], vec![]);
    }
    let mut ws = WeakSignalSet::new(
        vec![
            LabelDistribution::new(SIGNAL_1.to_vec())?,
            LabelDistribution::new(SIGNAL_2.to_vec())?,
        ],
        vec![bound, bound],
        vec!["q1".into(), "q2".into()],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for k in 0..options.extra_signals {
        let copy = SIGNAL_2
            .iter()
            .map(|q| q + rng.random_range(-options.noise..=options.noise))
            .collect();
        ws.push(LabelDistribution::clipped(copy), bound, format!("q2-copy{}", k + 1))?;
    }
    Ok(ws)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub predictions: Vec<f64>,
    /// The solver's final adversarial iterate.
    pub iterate_labels: Vec<f64>,
    /// Exact worst-case labeling at the learned predictions.
    pub adversarial_labels: Vec<f64>,
    pub primal_value: f64,
    /// `b_i − constraint_value_i` at `adversarial_labels`.
    pub slacks: Vec<f64>,
    pub status: TrainStatus,
    pub oracle_status: OracleStatus,
    pub iterations: usize,
}

impl FixtureReport {
    pub fn predictions_match(&self, target: &[f64; 2], tol: f64) -> bool {
        close(&self.predictions, target, tol)
    }

    pub fn labels_match(&self, target: &[f64; 2], tol: f64) -> bool {
        self.oracle_status == OracleStatus::Optimal && close(&self.adversarial_labels, target, tol)
    }

    pub fn constraints_active(&self, tol: f64) -> bool {
        !self.slacks.is_empty() && self.slacks.iter().all(|s| s.abs() <= tol)
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

pub fn run(options: &FixtureOptions) -> Result<FixtureReport> {
    let ws = signals(options)?;
    let data = Dataset::from_rows(&[vec![0.0], vec![0.0]], None)?;
    let outcome = train(&data, &ws, DirectModel::zeros(2), &options.solver)?;
    let p = outcome.model.predict(&data)?;
    let exact = solve_exact(&p, &ws)?;
    let slacks = if exact.is_optimal() {
        feasibility(&ws, &exact.labels)?
    } else {
        vec![]
    };
    Ok(FixtureReport {
        predictions: p.into_vec(),
        iterate_labels: outcome.state.adversarial.into_vec(),
        adversarial_labels: exact.labels.into_vec(),
        primal_value: exact.value,
        slacks,
        iterations: outcome.trace.len(),
        status: outcome.status,
        oracle_status: exact.status,
    })
}

//! Projected primal-dual training for adversarial label learning.
//!
//! The learner's parameters `θ`, the adversarial labels `ŷ`, and one KKT
//! multiplier `γ_i` per weak signal are updated in turn on the augmented
//! Lagrangian
//!
//! ```text
//! L(θ, ŷ, γ) = err(p(θ), ŷ) − Σ_i γ_i h_i(ŷ) − (ρ/2) Σ_i [h_i(ŷ)]₊²,
//! h_i(ŷ)     = q_iᵀ(1 − ŷ) + (1 − q_i)ᵀ ŷ − n·b_i
//! ```
//!
//! `θ` descends, `ŷ` ascends and is clipped to `[0,1]^n`, and `γ` takes a
//! fixed step of size `ρ` and is clipped at zero. The constraint terms `h_i`
//! stay in their unnormalized (×n) scale everywhere.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_len, Error, Result};
use crate::labels::{expected_error, LabelDistribution, ModelState, WeakSignalSet};
use crate::models::Model;

/// Step size `α_t` as a function of the iteration counter `t` (starting at 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant(f64),
    /// `α / √(t + 1)`
    InverseSqrt(f64),
    /// `α / (t + 1)`
    Harmonic(f64),
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            StepSchedule::Constant(a) => a,
            StepSchedule::InverseSqrt(a) => a / (t + 1.0).sqrt(),
            StepSchedule::Harmonic(a) => a / (t + 1.0),
        }
    }

    fn base(&self) -> f64 {
        match *self {
            StepSchedule::Constant(a) | StepSchedule::InverseSqrt(a) | StepSchedule::Harmonic(a) => a,
        }
    }
}

/// Sign convention for the multiplier terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierRule {
    /// Exact gradient steps on `L`: `γ_i ← [γ_i + ρ h_i]₊` and the label step
    /// carries `−γ_i(1 − 2q_i)`. Multipliers grow while a constraint is
    /// violated and push `ŷ` back into the feasible set.
    #[default]
    Lagrangian,
    /// `γ_i ← [γ_i − ρ h_i]₊` with `+γ_i(1 − 2q_i)` in the label step.
    /// Multipliers grow with slack and pull `ŷ` onto the constraint
    /// boundary; only the squared penalty resists violation.
    SlackDriven,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ParamInit {
    Zeros,
    /// Uniform in `[−scale, scale]` from a seeded generator.
    Uniform { scale: f64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LabelInit {
    /// Elementwise mean of the weak signals.
    MeanSignal,
    Constant(f64),
}

/// Thresholds for declaring the bounds infeasible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityGuard {
    /// Abort once any multiplier exceeds this.
    pub max_multiplier: f64,
    /// Abort when the worst constraint violation has not improved for this
    /// many iterations while never having dropped below `violation_floor`.
    pub stall_window: usize,
    pub violation_floor: f64,
}

impl Default for InfeasibilityGuard {
    fn default() -> Self {
        Self {
            max_multiplier: 1e6,
            stall_window: 1000,
            violation_floor: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: StepSchedule,
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub param_init: ParamInit,
    pub label_init: LabelInit,
    pub multiplier_rule: MultiplierRule,
    pub guard: InfeasibilityGuard,
}

impl SolverConfig {
    /// Defaults for the sigmoid-linear model.
    pub fn linear() -> Self {
        Self {
            step: StepSchedule::Constant(0.01),
            rho: 0.1,
            max_iters: 10_000,
            tol: 1e-6,
            param_init: ParamInit::Zeros,
            label_init: LabelInit::MeanSignal,
            multiplier_rule: MultiplierRule::Lagrangian,
            guard: InfeasibilityGuard::default(),
        }
    }

    /// Defaults for the per-example [`DirectModel`](crate::models::DirectModel).
    pub fn direct() -> Self {
        Self {
            step: StepSchedule::Constant(1.0),
            ..Self::linear()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.step.base() > 0.0 && self.step.base().is_finite()) {
            return Err(Error::Config(format!(
                "step size must be positive, got {}",
                self.step.base()
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if let LabelInit::Constant(v) = self.label_init {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("initial label {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::linear()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub lagrangian: f64,
    pub expected_error: f64,
    /// `max_i [constraint_value_i − b_i]₊`, normalized scale.
    pub max_violation: f64,
    pub multiplier_inf: f64,
}

/// One record per completed iteration.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration",
            "lagrangian",
            "expected_error",
            "max_violation",
            "multiplier_inf",
        ])?;
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                r.lagrangian.to_string(),
                r.expected_error.to_string(),
                r.max_violation.to_string(),
                r.multiplier_inf.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrainStatus {
    Converged { iterations: usize },
    /// Iteration budget spent without meeting the tolerance; the final iterate is kept.
    MaxIterations,
    Infeasible { iterations: usize, reason: String },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub state: ModelState,
    pub trace: TrainTrace,
    pub status: TrainStatus,
}

impl<M> TrainOutcome<M> {
    pub fn converged(&self) -> bool {
        matches!(self.status, TrainStatus::Converged { .. })
    }

    pub fn infeasible(&self) -> bool {
        matches!(self.status, TrainStatus::Infeasible { .. })
    }
}

/// Unnormalized constraint terms `h_i = n·(constraint_value_i − b_i)`.
fn constraint_terms(ws: &WeakSignalSet, y: &LabelDistribution) -> Vec<f64> {
    let n = y.len() as f64;
    ws.iter()
        .map(|(q, b)| {
            let total: f64 = q
                .iter()
                .zip(y.iter())
                .map(|(qj, yj)| qj * (1.0 - yj) + (1.0 - qj) * yj)
                .sum();
            total - n * b
        })
        .collect()
}

fn check_state(state: &ModelState, ws: &WeakSignalSet) -> Result<()> {
    check_len("multipliers", ws.len(), state.multipliers.len())?;
    ws.check_examples(state.adversarial.len())
}

/// Augmented Lagrangian at `(p, ŷ, γ)` with `ŷ` and `γ` taken from `state`.
pub fn lagrangian(
    state: &ModelState,
    p: &LabelDistribution,
    ws: &WeakSignalSet,
    rho: f64,
) -> Result<f64> {
    check_state(state, ws)?;
    let base = expected_error(p, &state.adversarial)?;
    let h = constraint_terms(ws, &state.adversarial);
    let multiplier_term: f64 = state.multipliers.iter().zip(&h).map(|(g, hi)| g * hi).sum();
    let penalty: f64 = h.iter().map(|hi| hi.max(0.0).powi(2)).sum();
    Ok(base - multiplier_term - 0.5 * rho * penalty)
}

/// `θ ← θ − (α/n) (∂p/∂θ)ᵀ (1 − 2ŷ)`
pub fn step_theta<M: Model>(
    model: &mut M,
    design: &M::Design,
    adversarial: &LabelDistribution,
    alpha: f64,
) -> Result<()> {
    let n = M::n_examples(design);
    check_len("adversarial labels", n, adversarial.len())?;
    let v: Vec<f64> = adversarial.iter().map(|y| 1.0 - 2.0 * y).collect();
    let grad = model.jvp_prepared(design, &v);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Training("non-finite parameter gradient".into()));
    }
    let scale = alpha / n as f64;
    for (w, g) in model.params_mut().iter_mut().zip(&grad) {
        *w -= scale * g;
    }
    Ok(())
}

/// Projected ascent step on the adversarial labels.
pub fn step_labels(
    state: &ModelState,
    p: &LabelDistribution,
    ws: &WeakSignalSet,
    alpha: f64,
    rho: f64,
    rule: MultiplierRule,
) -> Result<LabelDistribution> {
    check_state(state, ws)?;
    check_len("predictions", state.adversarial.len(), p.len())?;
    let n = p.len() as f64;
    let mut grad: Vec<f64> = p.iter().map(|pj| (1.0 - 2.0 * pj) / n).collect();
    let h = constraint_terms(ws, &state.adversarial);
    for (((q, _), &gamma), hi) in ws.iter().zip(&state.multipliers).zip(&h) {
        let penalty = rho * hi.max(0.0);
        let dual = match rule {
            MultiplierRule::Lagrangian => -gamma,
            MultiplierRule::SlackDriven => gamma,
        };
        for (g, qj) in grad.iter_mut().zip(q.iter()) {
            let d = 1.0 - 2.0 * qj;
            *g += dual * d - penalty * d;
        }
    }
    Ok(LabelDistribution::clipped(
        state
            .adversarial
            .iter()
            .zip(&grad)
            .map(|(y, g)| y + alpha * g)
            .collect(),
    ))
}

/// Fixed-step multiplier update, clipped at zero.
pub fn step_multipliers(
    state: &ModelState,
    ws: &WeakSignalSet,
    rho: f64,
    rule: MultiplierRule,
) -> Result<Vec<f64>> {
    check_state(state, ws)?;
    let h = constraint_terms(ws, &state.adversarial);
    Ok(state
        .multipliers
        .iter()
        .zip(&h)
        .map(|(g, hi)| match rule {
            MultiplierRule::Lagrangian => (g + rho * hi).max(0.0),
            MultiplierRule::SlackDriven => (g - rho * hi).max(0.0),
        })
        .collect())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs the alternating updates until the iterate stops moving.
///
/// Per iteration: `θ`, then `p(θ)`, then `ŷ`, then `γ`.
pub fn train<M: Model>(
    data: &Dataset,
    ws: &WeakSignalSet,
    mut model: M,
    config: &SolverConfig,
) -> Result<TrainOutcome<M>> {
    config.validate()?;
    if ws.is_empty() {
        log::debug!("training with no weak signals; the adversary is unconstrained");
    }
    let design = model.prepare(data)?;
    let n = M::n_examples(&design);
    ws.check_examples(n)?;

    match config.param_init {
        ParamInit::Zeros => model.params_mut().iter_mut().for_each(|w| *w = 0.0),
        ParamInit::Uniform { scale, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for w in model.params_mut() {
                *w = rng.random_range(-scale..=scale);
            }
        }
    }
    let adversarial = match config.label_init {
        LabelInit::MeanSignal if !ws.is_empty() => ws.mean_signal()?,
        LabelInit::MeanSignal => LabelDistribution::constant(n, 0.5),
        LabelInit::Constant(v) => LabelDistribution::constant(n, v),
    };
    let mut state = ModelState {
        params: model.params().to_vec(),
        multipliers: vec![0.0; ws.len()],
        adversarial,
    };

    let mut trace = TrainTrace::default();
    let mut best_violation = f64::INFINITY;
    let mut best_at = 0;
    let mut status = TrainStatus::MaxIterations;

    for t in 0..config.max_iters {
        let alpha = config.step.at(t);

        step_theta(&mut model, &design, &state.adversarial, alpha)?;
        let p = model.predict_prepared(&design);
        let labels = step_labels(&state, &p, ws, alpha, config.rho, config.multiplier_rule)?;
        let label_shift = max_abs_diff(labels.as_slice(), state.adversarial.as_slice());
        state.adversarial = labels;
        let multipliers = step_multipliers(&state, ws, config.rho, config.multiplier_rule)?;
        let dual_shift = max_abs_diff(&multipliers, &state.multipliers);
        state.multipliers = multipliers;
        let param_shift = max_abs_diff(model.params(), &state.params);
        state.params.copy_from_slice(model.params());

        let h = constraint_terms(ws, &state.adversarial);
        let max_violation = h.iter().fold(0.0f64, |m, hi| m.max(*hi)) / n as f64;
        let multiplier_inf = state.multipliers.iter().fold(0.0f64, |m, g| m.max(*g));
        let record = TraceRecord {
            iteration: t + 1,
            lagrangian: lagrangian(&state, &p, ws, config.rho)?,
            expected_error: expected_error(&p, &state.adversarial)?,
            max_violation,
            multiplier_inf,
        };
        if !record.lagrangian.is_finite() {
            return Err(Error::Training(format!("non-finite Lagrangian at iteration {}", t + 1)));
        }
        trace.records.push(record);

        if multiplier_inf > config.guard.max_multiplier {
            status = TrainStatus::Infeasible {
                iterations: t + 1,
                reason: format!("multiplier reached {multiplier_inf:.3e}"),
            };
            break;
        }
        if max_violation < best_violation - 1e-9 {
            best_violation = max_violation;
            best_at = t;
        } else if best_violation > config.guard.violation_floor
            && t - best_at >= config.guard.stall_window
        {
            status = TrainStatus::Infeasible {
                iterations: t + 1,
                reason: format!(
                    "constraint violation stalled at {best_violation:.4} for {} iterations",
                    config.guard.stall_window
                ),
            };
            break;
        }
        if param_shift.max(label_shift).max(dual_shift) < config.tol {
            status = TrainStatus::Converged { iterations: t + 1 };
            break;
        }
    }

    Ok(TrainOutcome {
        model,
        state,
        trace,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::DirectModel;
    use approx::assert_abs_diff_eq;

    fn ld(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    fn fig1() -> WeakSignalSet {
        WeakSignalSet::unnamed(vec![ld(&[0.3, 0.2]), ld(&[0.6, 0.1])], vec![0.4, 0.4]).unwrap()
    }

    fn state(y: &[f64], gamma: &[f64]) -> ModelState {
        ModelState {
            params: vec![],
            multipliers: gamma.to_vec(),
            adversarial: ld(y),
        }
    }

    #[test]
    fn lagrangian_reduces_to_expected_error_when_feasible() {
        let ws = fig1();
        let s = state(&[0.0, 0.0], &[0.0, 0.0]);
        let p = ld(&[0.7, 0.2]);
        assert_abs_diff_eq!(
            lagrangian(&s, &p, &ws, 0.1).unwrap(),
            expected_error(&p, &s.adversarial).unwrap()
        );
    }

    #[test]
    fn lagrangian_with_labels_equal_to_the_signal() {
        let q = ld(&[1.0, 0.0, 1.0]);
        let ws = WeakSignalSet::unnamed(vec![q.clone()], vec![0.0]).unwrap();
        let s = state(q.as_slice(), &[0.0]);
        let p = ld(&[0.2, 0.4, 0.9]);
        assert_abs_diff_eq!(
            lagrangian(&s, &p, &ws, 1.0).unwrap(),
            expected_error(&p, &q).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn lagrangian_at_the_two_example_point() {
        let s = state(&[0.41, 0.23], &[0.0, 0.0]);
        let p = ld(&[0.18, 0.0]);
        let l = lagrangian(&s, &p, &fig1(), 1.0).unwrap();
        // h_i = 2·(0.401 − 0.4) = 0.002 for both signals; penalty (1/2)·2·0.002² = 4e-6
        assert_abs_diff_eq!(l, 0.3362 - 4e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(l, 0.336, epsilon = 1e-3);
    }

    #[test]
    fn theta_step_vanishes_at_uniform_labels() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![0.0]], None).unwrap();
        let mut m = DirectModel::new(vec![0.3, -1.0]);
        let design = m.prepare(&ds).unwrap();
        step_theta(&mut m, &design, &ld(&[0.5, 0.5]), 1.0).unwrap();
        assert_eq!(m.logits(), &[0.3, -1.0]);
    }

    #[test]
    fn theta_step_single_example() {
        let ds = Dataset::from_rows(&[vec![0.0]], None).unwrap();
        let mut m = DirectModel::zeros(1);
        let design = m.prepare(&ds).unwrap();
        step_theta(&mut m, &design, &ld(&[1.0]), 1.0).unwrap();
        // (α/n)·p(1−p)·(2ŷ − 1) = 0.25
        assert_abs_diff_eq!(m.logits()[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn label_step_is_stationary_when_nothing_pulls() {
        let ws = fig1();
        let s = state(&[0.1, 0.05], &[0.0, 0.0]);
        let y = step_labels(&s, &ld(&[0.5, 0.5]), &ws, 0.7, 0.1, MultiplierRule::Lagrangian).unwrap();
        assert_eq!(y, s.adversarial);
    }

    #[test]
    fn label_step_clips_to_one() {
        let ws = WeakSignalSet::unnamed(vec![], vec![]).unwrap();
        let s = state(&[0.5], &[]);
        let y = step_labels(&s, &ld(&[0.0]), &ws, 1.0, 0.1, MultiplierRule::Lagrangian).unwrap();
        assert_eq!(y.as_slice(), &[1.0]);
    }

    #[test]
    fn multiplier_rules_have_opposite_signs() {
        // γ = 0.5, ρ = 0.1, n = 2, constraint value 0.45 vs bound 0.4 → h = 0.1
        let ws = WeakSignalSet::unnamed(vec![ld(&[0.45, 0.45])], vec![0.4]).unwrap();
        let s = state(&[0.0, 0.0], &[0.5]);
        let slack = step_multipliers(&s, &ws, 0.1, MultiplierRule::SlackDriven).unwrap();
        assert_abs_diff_eq!(slack[0], 0.49, epsilon = 1e-12);
        let lagr = step_multipliers(&s, &ws, 0.1, MultiplierRule::Lagrangian).unwrap();
        assert_abs_diff_eq!(lagr[0], 0.51, epsilon = 1e-12);
    }

    #[test]
    fn multipliers_respond_to_slack_and_violation() {
        // constraint value 0.1 vs bound 0.4: slack 0.3, h = −0.6 with n = 2
        let ws = WeakSignalSet::unnamed(vec![ld(&[0.1, 0.1])], vec![0.4]).unwrap();
        let s = state(&[0.0, 0.0], &[0.0]);
        let g = step_multipliers(&s, &ws, 0.5, MultiplierRule::SlackDriven).unwrap();
        assert_abs_diff_eq!(g[0], 0.5 * 2.0 * 0.3, epsilon = 1e-12);
        assert_eq!(step_multipliers(&s, &ws, 0.5, MultiplierRule::Lagrangian).unwrap(), vec![0.0]);

        // violated by 0.2 starting from zero
        let ws = WeakSignalSet::unnamed(vec![ld(&[0.6, 0.6])], vec![0.4]).unwrap();
        assert_eq!(step_multipliers(&s, &ws, 0.5, MultiplierRule::SlackDriven).unwrap(), vec![0.0]);
        let g = step_multipliers(&s, &ws, 0.5, MultiplierRule::Lagrangian).unwrap();
        assert_abs_diff_eq!(g[0], 0.5 * 2.0 * 0.2, epsilon = 1e-12);
    }

    #[test]
    fn schedules() {
        assert_eq!(StepSchedule::Constant(0.1).at(99), 0.1);
        assert_abs_diff_eq!(StepSchedule::InverseSqrt(1.0).at(3), 0.5);
        assert_abs_diff_eq!(StepSchedule::Harmonic(1.0).at(3), 0.25);
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.rho = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig {
            step: StepSchedule::Constant(-1.0),
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn trace_csv_has_one_row_per_iteration() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![0.0]], None).unwrap();
        let config = SolverConfig {
            max_iters: 25,
            ..SolverConfig::direct()
        };
        let out = train(&ds, &fig1(), DirectModel::zeros(2), &config).unwrap();
        assert_eq!(out.trace.len(), 25);
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("iteration,lagrangian,expected_error,max_violation,multiplier_inf"));
    }
}

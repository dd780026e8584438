//! C interface to `advlabel`.
//!
//! Handles (`AdvSignals`, `AdvModel`) are opaque and owned by the caller once
//! returned; release them with the matching `*_free` function. Every fallible
//! function returns an [`AdvStatus`]; on anything but `ADV_STATUS_OK` a
//! message is available from [`adv_last_error`] on the same thread.
//!
//! Arrays are `double` buffers of the stated length. Feature matrices are
//! row-major, `n` rows by `d` columns.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use advlabel::{
    constraint_value, expected_error, primal_value, solve_exact, train, Dataset, DirectModel, Error,
    LabelDistribution, Model, MultiplierRule, SigmoidLinearModel, SolverConfig, StepSchedule, TrainStatus,
    WeakSignalSet,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// No labeling satisfies the weak-signal bounds.
    Infeasible = 3,
    Failed = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdvTrainStatus {
    Converged = 0,
    MaxIterations = 1,
    Infeasible = 2,
}

pub const ADV_RULE_LAGRANGIAN: u32 = 0;
pub const ADV_RULE_SLACK_DRIVEN: u32 = 1;

/// Solver settings; start from `adv_solver_config_linear` or
/// `adv_solver_config_direct` and adjust fields.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvSolverConfig {
    /// Constant step size.
    pub step: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// `ADV_RULE_LAGRANGIAN` or `ADV_RULE_SLACK_DRIVEN`.
    pub rule: u32,
}

/// A weak-signal set: per-example soft labels with one error bound each.
pub struct AdvSignals {
    n: usize,
    inner: WeakSignalSet,
}

/// A trained sigmoid-linear model, feature standardization included.
pub struct AdvModel {
    inner: SigmoidLinearModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(AdvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Infeasible(_) => AdvStatus::Infeasible,
            Error::LengthMismatch { .. }
            | Error::OutOfRange { .. }
            | Error::NonFinite(_)
            | Error::DimensionMismatch { .. }
            | Error::Empty(_)
            | Error::Config(_) => AdvStatus::InvalidArgument,
            _ => AdvStatus::Failed,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AdvStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Fail {
    Fail(AdvStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<AdvStatus, Fail>) -> AdvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AdvStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn probs(ptr: *const f64, n: usize, what: &str) -> Result<LabelDistribution, Fail> {
    Ok(LabelDistribution::new(slice(ptr, n, what)?.to_vec())?)
}

unsafe fn features(x: *const f64, n: usize, d: usize) -> Result<Dataset, Fail> {
    if n == 0 || d == 0 {
        return Err(invalid("feature matrix must have at least one row and one column"));
    }
    let len = n.checked_mul(d).ok_or_else(|| invalid("feature matrix too large"))?;
    let values = slice(x, len, "features")?;
    let rows: Vec<Vec<f64>> = values.chunks(d).map(<[f64]>::to_vec).collect();
    Ok(Dataset::from_rows(&rows, None)?)
}

fn solver_config(cfg: &AdvSolverConfig, base: SolverConfig) -> Result<SolverConfig, Fail> {
    let multiplier_rule = match cfg.rule {
        ADV_RULE_LAGRANGIAN => MultiplierRule::Lagrangian,
        ADV_RULE_SLACK_DRIVEN => MultiplierRule::SlackDriven,
        other => return Err(invalid(format!("unknown multiplier rule {other}"))),
    };
    let config = SolverConfig {
        step: StepSchedule::Constant(cfg.step),
        rho: cfg.rho,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        multiplier_rule,
        ..base
    };
    config.validate()?;
    Ok(config)
}

fn to_c(cfg: &SolverConfig) -> AdvSolverConfig {
    let step = match cfg.step {
        StepSchedule::Constant(a) | StepSchedule::InverseSqrt(a) | StepSchedule::Harmonic(a) => a,
    };
    AdvSolverConfig {
        step,
        rho: cfg.rho,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        rule: match cfg.multiplier_rule {
            MultiplierRule::Lagrangian => ADV_RULE_LAGRANGIAN,
            MultiplierRule::SlackDriven => ADV_RULE_SLACK_DRIVEN,
        },
    }
}

fn train_status(status: &TrainStatus) -> AdvTrainStatus {
    match status {
        TrainStatus::Converged { .. } => AdvTrainStatus::Converged,
        TrainStatus::MaxIterations => AdvTrainStatus::MaxIterations,
        TrainStatus::Infeasible { .. } => AdvTrainStatus::Infeasible,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Expected disagreement between two probability vectors of length `n`.
///
/// # Safety
/// `p` and `y` must point to `n` doubles; `out` to one.
#[no_mangle]
pub unsafe extern "C" fn adv_expected_error(p: *const f64, y: *const f64, n: usize, out: *mut f64) -> AdvStatus {
    guard(|| {
        let v = expected_error(&probs(p, n, "p")?, &probs(y, n, "y")?)?;
        *self::out(out, "out")? = v;
        Ok(AdvStatus::Ok)
    })
}

/// Expected error of weak signal `q` against labeling `y`.
///
/// # Safety
/// `q` and `y` must point to `n` doubles; `out` to one.
#[no_mangle]
pub unsafe extern "C" fn adv_constraint_value(q: *const f64, y: *const f64, n: usize, out: *mut f64) -> AdvStatus {
    guard(|| {
        let v = constraint_value(&probs(q, n, "q")?, &probs(y, n, "y")?)?;
        *self::out(out, "out")? = v;
        Ok(AdvStatus::Ok)
    })
}

/// Empty signal set over `n` examples; null when `n` is zero.
#[no_mangle]
pub extern "C" fn adv_signals_new(n: usize) -> *mut AdvSignals {
    if n == 0 {
        set_error("signal set needs at least one example".into());
        return std::ptr::null_mut();
    }
    let inner = WeakSignalSet::new(vec![], vec![], vec![]).expect("empty set is valid");
    Box::into_raw(Box::new(AdvSignals { n, inner }))
}

/// Appends a signal with its error bound.
///
/// # Safety
/// `signals` must come from `adv_signals_new`; `q` must point to `n` doubles
/// where `n` is the set's example count.
#[no_mangle]
pub unsafe extern "C" fn adv_signals_push(signals: *mut AdvSignals, q: *const f64, bound: f64) -> AdvStatus {
    guard(|| {
        let s = signals.as_mut().ok_or_else(|| null("signals"))?;
        let q = probs(q, s.n, "q")?;
        let name = format!("ws-{}", s.inner.len() + 1);
        s.inner.push(q, bound, name)?;
        Ok(AdvStatus::Ok)
    })
}

/// Number of signals in the set; 0 for null.
///
/// # Safety
/// `signals` must be null or come from `adv_signals_new`.
#[no_mangle]
pub unsafe extern "C" fn adv_signals_len(signals: *const AdvSignals) -> usize {
    signals.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `signals` must be null or come from `adv_signals_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adv_signals_free(signals: *mut AdvSignals) {
    if !signals.is_null() {
        drop(Box::from_raw(signals));
    }
}

/// Worst-case labeling for predictions `p` under the bounds. Writes `n`
/// labels and the maximized error; returns `ADV_STATUS_INFEASIBLE` when no
/// labeling meets the bounds.
///
/// # Safety
/// `p` and `labels_out` must point to `n` doubles, `value_out` to one;
/// `signals` must come from `adv_signals_new` with the same `n`.
#[no_mangle]
pub unsafe extern "C" fn adv_solve_exact(
    p: *const f64,
    n: usize,
    signals: *const AdvSignals,
    labels_out: *mut f64,
    value_out: *mut f64,
) -> AdvStatus {
    guard(|| {
        let s = signals.as_ref().ok_or_else(|| null("signals"))?;
        let p = probs(p, n, "p")?;
        let labels = slice_mut(labels_out, n, "labels_out")?;
        let value = out(value_out, "value_out")?;
        let r = solve_exact(&p, &s.inner)?;
        if !r.is_optimal() {
            return Err(Fail(AdvStatus::Infeasible, "no labeling satisfies every bound".into()));
        }
        labels.copy_from_slice(r.labels.as_slice());
        *value = r.value;
        Ok(AdvStatus::Ok)
    })
}

/// The worst-case expected error of predictions `p`.
///
/// # Safety
/// As for `adv_solve_exact`.
#[no_mangle]
pub unsafe extern "C" fn adv_primal_value(
    p: *const f64,
    n: usize,
    signals: *const AdvSignals,
    out: *mut f64,
) -> AdvStatus {
    guard(|| {
        let s = signals.as_ref().ok_or_else(|| null("signals"))?;
        let v = primal_value(&probs(p, n, "p")?, &s.inner)?;
        *self::out(out, "out")? = v;
        Ok(AdvStatus::Ok)
    })
}

/// Defaults for the sigmoid-linear model.
#[no_mangle]
pub extern "C" fn adv_solver_config_linear() -> AdvSolverConfig {
    to_c(&SolverConfig::linear())
}

/// Defaults for the one-probability-per-example model.
#[no_mangle]
pub extern "C" fn adv_solver_config_direct() -> AdvSolverConfig {
    to_c(&SolverConfig::direct())
}

/// Trains a sigmoid-linear model on unlabeled features `x` (`n × d`,
/// row-major). On `ADV_STATUS_OK`, `*model_out` owns a new model and
/// `*status_out` says how training ended.
///
/// # Safety
/// `x` must point to `n·d` doubles; `signals` must come from
/// `adv_signals_new` with `n` examples; `config` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn adv_train_linear(
    x: *const f64,
    n: usize,
    d: usize,
    signals: *const AdvSignals,
    config: *const AdvSolverConfig,
    model_out: *mut *mut AdvModel,
    status_out: *mut AdvTrainStatus,
) -> AdvStatus {
    guard(|| {
        let s = signals.as_ref().ok_or_else(|| null("signals"))?;
        let model_out = out(model_out, "model_out")?;
        let status_out = out(status_out, "status_out")?;
        let data = features(x, n, d)?;
        let cfg = match config.as_ref() {
            Some(c) => solver_config(c, SolverConfig::linear())?,
            None => SolverConfig::linear(),
        };
        let outcome = train(&data, &s.inner, SigmoidLinearModel::zeros_standardized(&data), &cfg)?;
        *status_out = train_status(&outcome.status);
        *model_out = Box::into_raw(Box::new(AdvModel { inner: outcome.model }));
        Ok(AdvStatus::Ok)
    })
}

/// Optimizes one probability per example directly and writes the `n`
/// learned probabilities.
///
/// # Safety
/// `p_out` must point to `n` doubles; `signals` must come from
/// `adv_signals_new` with `n` examples; `config` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn adv_train_direct(
    n: usize,
    signals: *const AdvSignals,
    config: *const AdvSolverConfig,
    p_out: *mut f64,
    status_out: *mut AdvTrainStatus,
) -> AdvStatus {
    guard(|| {
        let s = signals.as_ref().ok_or_else(|| null("signals"))?;
        let p_out = slice_mut(p_out, n, "p_out")?;
        let status_out = out(status_out, "status_out")?;
        if n == 0 {
            return Err(invalid("need at least one example"));
        }
        let cfg = match config.as_ref() {
            Some(c) => solver_config(c, SolverConfig::direct())?,
            None => SolverConfig::direct(),
        };
        let data = Dataset::from_rows(&vec![vec![0.0]; n], None)?;
        let outcome = train(&data, &s.inner, DirectModel::zeros(n), &cfg)?;
        p_out.copy_from_slice(outcome.model.predict(&data)?.as_slice());
        *status_out = train_status(&outcome.status);
        Ok(AdvStatus::Ok)
    })
}

/// Number of input features the model expects; 0 for null.
///
/// # Safety
/// `model` must be null or come from `adv_train_linear`.
#[no_mangle]
pub unsafe extern "C" fn adv_model_dim(model: *const AdvModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Copies the `dim + 1` weights (bias last) into `out`.
///
/// # Safety
/// `model` must come from `adv_train_linear`; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adv_model_weights(model: *const AdvModel, out: *mut f64, len: usize) -> AdvStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let w = m.inner.weights();
        if len != w.len() {
            return Err(invalid(format!("weights buffer holds {len}, model has {}", w.len())));
        }
        slice_mut(out, len, "out")?.copy_from_slice(w);
        Ok(AdvStatus::Ok)
    })
}

/// Positive-class probabilities for `n` rows of `d` features.
///
/// # Safety
/// `model` must come from `adv_train_linear`; `x` must point to `n·d`
/// doubles and `out` to `n`.
#[no_mangle]
pub unsafe extern "C" fn adv_model_predict(
    model: *const AdvModel,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> AdvStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let data = features(x, n, d)?;
        let p = m.inner.predict(&data)?;
        slice_mut(out, n, "out")?.copy_from_slice(p.as_slice());
        Ok(AdvStatus::Ok)
    })
}

/// # Safety
/// `model` must be null or come from `adv_train_linear`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adv_model_free(model: *mut AdvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

//! The method grid: every learner on every split of one dataset.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::split::{split, Split, SplitSpec, DEFAULT_SEEDS};
use crate::baselines::{references, train_avg, train_ge};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::labels::{accuracy, LabelDistribution, WeakSignalSet};
use crate::models::{FitConfig, Model, SigmoidLinearModel};
use crate::solver::{SolverConfig, TrainStatus};
use crate::weak::{BoundMode, SignalBank};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Adversarial label learning on the first `k` signals.
    All(usize),
    Ge(usize),
    Avg(usize),
    /// The `k`-th weak signal used directly as a classifier.
    Ws(usize),
}

impl Method {
    pub fn k(self) -> usize {
        match self {
            Method::All(k) | Method::Ge(k) | Method::Avg(k) | Method::Ws(k) => k,
        }
    }

    /// ALL-1..m, GE-1..m, AVG-1..m, WS-1..m.
    pub fn standard(m: usize) -> Vec<Method> {
        let mut out = Vec::with_capacity(4 * m);
        for make in [Method::All, Method::Ge, Method::Avg, Method::Ws] {
            out.extend((1..=m).map(make));
        }
        out
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, k) = match self {
            Method::All(k) => ("ALL", k),
            Method::Ge(k) => ("GE", k),
            Method::Avg(k) => ("AVG", k),
            Method::Ws(k) => ("WS", k),
        };
        write!(f, "{name}-{k}")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("method must look like ALL-3, GE-1, AVG-2 or WS-1, got '{s}'"));
        let (name, k) = s.trim().split_once('-').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name.to_ascii_uppercase().as_str() {
            "ALL" => Ok(Method::All(k)),
            "GE" => Ok(Method::Ge(k)),
            "AVG" => Ok(Method::Avg(k)),
            "WS" => Ok(Method::Ws(k)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridConfig {
    pub bounds: BoundMode,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub stratified: bool,
    pub solver: SolverConfig,
    pub fit: FitConfig,
    /// Worker threads; 0 lets the thread pool decide.
    pub jobs: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            bounds: BoundMode::True,
            methods: Method::standard(3),
            seeds: DEFAULT_SEEDS.to_vec(),
            stratified: false,
            solver: SolverConfig::linear(),
            fit: FitConfig::default(),
            jobs: 0,
        }
    }
}

/// One method on one split.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub dataset: String,
    pub method: Method,
    pub split_seed: u64,
    pub accuracy: f64,
    pub converged: bool,
    pub status: String,
}

/// Signals fitted on the weak-supervision part of one split.
pub struct SplitContext {
    pub split: Split,
    pub bank: SignalBank,
    /// Signals on the training part with the bounds the learner is given.
    pub train_signals: WeakSignalSet,
    /// Signals on the weak-supervision part, with their measured errors.
    pub weak_signals: WeakSignalSet,
}

impl SplitContext {
    pub fn new(
        data: &Dataset,
        features: &[usize],
        spec: &SplitSpec,
        bounds: BoundMode,
        fit: &FitConfig,
    ) -> Result<Self> {
        let split = split(data, spec)?;
        let bank = SignalBank::fit(&split.weak, features, fit)?;
        let train_signals = bank.signal_set(&split.train, bounds)?;
        let weak_signals = bank.signal_set(&split.weak, BoundMode::True)?;
        Ok(Self {
            split,
            bank,
            train_signals,
            weak_signals,
        })
    }

    /// Test accuracy of a model.
    pub fn score(&self, model: &SigmoidLinearModel) -> Result<f64> {
        accuracy(&model.predict(&self.split.test)?, self.split.test.labels()?)
    }
}

pub(crate) fn status_label(status: &TrainStatus) -> &'static str {
    match status {
        TrainStatus::Converged { .. } => "converged",
        TrainStatus::MaxIterations => "max_iterations",
        TrainStatus::Infeasible { .. } => "infeasible",
    }
}

/// Runs ALL on the learner's view of `train` (labels removed).
pub fn fit_all(
    train: &Dataset,
    ws: &WeakSignalSet,
    solver: &SolverConfig,
) -> Result<(SigmoidLinearModel, TrainStatus)> {
    let data = train.unlabeled();
    let init = SigmoidLinearModel::zeros_standardized(&data);
    let outcome = crate::solver::train(&data, ws, init, solver)?;
    Ok((outcome.model, outcome.status))
}

/// Trains GE on the training part with references from the weak-supervision part.
pub fn fit_ge(
    train: &Dataset,
    train_signals: &WeakSignalSet,
    weak_signals: &WeakSignalSet,
    weak_labels: &LabelDistribution,
    fit: &FitConfig,
) -> Result<SigmoidLinearModel> {
    let refs = references(weak_signals, weak_labels)?;
    train_ge(&train.unlabeled(), train_signals.signals(), &refs, fit)
}

fn run_method(ctx: &SplitContext, method: Method, cfg: &GridConfig) -> Result<(f64, bool, String)> {
    let k = method.k();
    if k > ctx.train_signals.len() {
        return Err(Error::Config(format!(
            "{method} needs {k} weak signals, only {} configured",
            ctx.train_signals.len()
        )));
    }
    let done = |model: &SigmoidLinearModel| Ok((ctx.score(model)?, true, "ok".to_string()));
    match method {
        Method::All(k) => {
            let (model, status) = fit_all(&ctx.split.train, &ctx.train_signals.prefix(k), &cfg.solver)?;
            Ok((
                ctx.score(&model)?,
                matches!(status, TrainStatus::Converged { .. }),
                status_label(&status).to_string(),
            ))
        }
        Method::Ge(k) => done(&fit_ge(
            &ctx.split.train,
            &ctx.train_signals.prefix(k),
            &ctx.weak_signals.prefix(k),
            ctx.split.weak.labels()?,
            &cfg.fit,
        )?),
        Method::Avg(k) => done(&train_avg(&ctx.split.train.unlabeled(), &ctx.train_signals.prefix(k), &cfg.fit)?),
        Method::Ws(k) => {
            let q = ctx.bank.models()[k - 1].apply(&ctx.split.test)?;
            Ok((accuracy(&q, ctx.split.test.labels()?)?, true, "ok".to_string()))
        }
    }
}

/// All configured methods on one split.
pub fn run_split(
    name: &str,
    data: &Dataset,
    features: &[usize],
    seed: u64,
    cfg: &GridConfig,
) -> Result<Vec<RunRecord>> {
    let spec = SplitSpec {
        stratified: cfg.stratified,
        ..SplitSpec::new(seed)
    };
    let ctx = SplitContext::new(data, features, &spec, cfg.bounds, &cfg.fit)?;
    cfg.methods
        .iter()
        .map(|&method| {
            let (accuracy, converged, status) = run_method(&ctx, method, cfg)?;
            Ok(RunRecord {
                dataset: name.to_string(),
                method,
                split_seed: seed,
                accuracy,
                converged,
                status,
            })
        })
        .collect()
}

/// Runs `f` over the seeds on a pool of `jobs` threads and flattens the results
/// in seed order.
pub(crate) fn over_seeds<T: Send>(
    seeds: &[u64],
    jobs: usize,
    f: impl Fn(u64) -> Result<Vec<T>> + Sync + Send,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let parts: Vec<Result<Vec<T>>> = pool.install(|| seeds.par_iter().map(|&s| f(s)).collect());
    let mut out = Vec::new();
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Every configured method on every split.
pub fn run_grid(name: &str, data: &Dataset, features: &[usize], cfg: &GridConfig) -> Result<Vec<RunRecord>> {
    if data.true_labels().is_none() {
        return Err(Error::Config("the experiment harness needs true labels".into()));
    }
    let m = cfg.methods.iter().map(|m| m.k()).max().unwrap_or(0);
    if m > features.len() {
        return Err(Error::Config(format!(
            "methods use up to {m} weak signals but only {} features are configured",
            features.len()
        )));
    }
    over_seeds(&cfg.seeds, cfg.jobs, |seed| run_split(name, data, &features[..m], seed, cfg))
}

//! Repeated-bad-signal and fixed-bound studies.

use serde::Serialize;

use super::grid::{fit_all, fit_ge, over_seeds, status_label, SplitContext};
use super::split::SplitSpec;
use crate::baselines::train_avg;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::labels::WeakSignalSet;
use crate::models::FitConfig;
use crate::oracle::is_feasible;
use crate::solver::{SolverConfig, TrainStatus};
use crate::weak::{fixed_bounds, BoundMode};

#[derive(Clone, Debug, Serialize)]
pub struct DependentConfig {
    /// Feature index of the good signal.
    pub good: usize,
    pub bad: usize,
    pub max_copies: usize,
    pub bounds: BoundMode,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub fit: FitConfig,
    pub jobs: usize,
}

/// One method with one copy count on one split.
#[derive(Clone, Debug, Serialize)]
pub struct CurveRecord {
    pub dataset: String,
    pub method: String,
    pub copies: usize,
    pub split_seed: u64,
    pub accuracy: f64,
    pub converged: bool,
}

/// The good signal followed by `k` copies of the bad one.
fn with_copies(ws: &WeakSignalSet, k: usize) -> Result<WeakSignalSet> {
    let mut out = ws.prefix(1);
    for c in 0..k {
        let name = format!("{}-copy{}", ws.names()[1], c + 1);
        out.push(ws.signals()[1].clone(), ws.bounds()[1], name)?;
    }
    Ok(out)
}

/// Trains ALL, GE and AVG on the good signal plus 1..=max_copies copies of the bad signal.
pub fn dependent_error_study(name: &str, data: &Dataset, cfg: &DependentConfig) -> Result<Vec<CurveRecord>> {
    if cfg.max_copies == 0 {
        return Err(Error::Config("max copies must be at least 1".into()));
    }
    over_seeds(&cfg.seeds, cfg.jobs, |seed| {
        let ctx = SplitContext::new(data, &[cfg.good, cfg.bad], &SplitSpec::new(seed), cfg.bounds, &cfg.fit)?;
        let train = &ctx.split.train;
        let mut out = Vec::new();
        for k in 1..=cfg.max_copies {
            let ws = with_copies(&ctx.train_signals, k)?;
            let weak_ws = with_copies(&ctx.weak_signals, k)?;
            let record = |method: &str, accuracy: f64, converged: bool| CurveRecord {
                dataset: name.to_string(),
                method: method.to_string(),
                copies: k,
                split_seed: seed,
                accuracy,
                converged,
            };
            let (all, status) = fit_all(train, &ws, &cfg.solver)?;
            out.push(record("ALL", ctx.score(&all)?, matches!(status, TrainStatus::Converged { .. })));
            let ge = fit_ge(train, &ws, &weak_ws, ctx.split.weak.labels()?, &cfg.fit)?;
            out.push(record("GE", ctx.score(&ge)?, true));
            let avg = train_avg(&train.unlabeled(), &ws, &cfg.fit)?;
            out.push(record("AVG", ctx.score(&avg)?, true));
        }
        Ok(out)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub features: Vec<usize>,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub fit: FitConfig,
    pub jobs: usize,
}

/// ALL with every bound fixed at one value, on one split.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub dataset: String,
    pub bound: f64,
    pub split_seed: u64,
    /// Test error of the returned model.
    pub error: f64,
    pub status: String,
    /// Whether the exact LP finds any labeling meeting the bounds.
    pub lp_feasible: bool,
}

impl SweepRecord {
    pub fn usable(&self) -> bool {
        self.lp_feasible && self.status != "infeasible"
    }
}

/// Parses `start:stop:step` into the inclusive grid of values.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("range must look like 0.05:0.95:0.05, got '{spec}'"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Rounded to clean decimals so 0.1 + 0.2 prints as 0.3.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn bound_sweep(name: &str, data: &Dataset, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    for &v in &cfg.values {
        fixed_bounds(1, v)?;
    }
    over_seeds(&cfg.seeds, cfg.jobs, |seed| {
        let ctx = SplitContext::new(data, &cfg.features, &SplitSpec::new(seed), BoundMode::True, &cfg.fit)?;
        let mut out = Vec::new();
        for &v in &cfg.values {
            let ws = ctx.train_signals.with_bounds(fixed_bounds(cfg.features.len(), v)?)?;
            let (model, status) = fit_all(&ctx.split.train, &ws, &cfg.solver)?;
            out.push(SweepRecord {
                dataset: name.to_string(),
                bound: v,
                split_seed: seed,
                error: 1.0 - ctx.score(&model)?,
                status: status_label(&status).to_string(),
                lp_feasible: is_feasible(&ws)?,
            });
        }
        Ok(out)
    })
}

/// Mean over splits at one bound.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub bound: f64,
    /// Mean test error over usable splits; `None` when no split is usable.
    pub mean_error: Option<f64>,
    pub usable: usize,
    pub infeasible: usize,
    pub not_converged: usize,
}

pub fn sweep_curve(records: &[SweepRecord]) -> Vec<SweepPoint> {
    let mut bounds: Vec<f64> = records.iter().map(|r| r.bound).collect();
    bounds.sort_by(f64::total_cmp);
    bounds.dedup();
    bounds
        .into_iter()
        .map(|b| {
            let at: Vec<&SweepRecord> = records.iter().filter(|r| r.bound == b).collect();
            let ok: Vec<f64> = at.iter().filter(|r| r.usable()).map(|r| r.error).collect();
            SweepPoint {
                bound: b,
                mean_error: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
                usable: ok.len(),
                infeasible: at.iter().filter(|r| !r.usable()).count(),
                not_converged: at.iter().filter(|r| r.status == "max_iterations").count(),
            }
        })
        .collect()
}

/// Mean accuracy per method and copy count.
#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub method: String,
    pub copies: usize,
    pub mean_accuracy: f64,
}

pub fn dependent_curve(records: &[CurveRecord]) -> Vec<CurvePoint> {
    let mut keys: Vec<(String, usize)> = records.iter().map(|r| (r.method.clone(), r.copies)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(method, copies)| {
            let acc: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.copies == copies)
                .map(|r| r.accuracy)
                .collect();
            CurvePoint {
                mean_accuracy: acc.iter().sum::<f64>() / acc.len() as f64,
                method,
                copies,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let v = parse_range("0.05:0.95:0.05").unwrap();
        assert_eq!(v.len(), 19);
        assert_eq!(v[0], 0.05);
        assert_eq!(v[5], 0.3);
        assert_eq!(*v.last().unwrap(), 0.95);
        assert_eq!(parse_range("0.3:0.3:0.1").unwrap(), vec![0.3]);
        for bad in ["0.1:0.2", "a:b:c", "0.5:0.1:0.1", "0.1:0.5:0"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    fn rec(bound: f64, error: f64, status: &str, feasible: bool) -> SweepRecord {
        SweepRecord {
            dataset: "d".into(),
            bound,
            split_seed: 0,
            error,
            status: status.into(),
            lp_feasible: feasible,
        }
    }

    #[test]
    fn sweep_curve_excludes_infeasible_points() {
        let curve = sweep_curve(&[
            rec(0.1, 0.5, "infeasible", false),
            rec(0.1, 0.4, "max_iterations", false),
            rec(0.3, 0.1, "converged", true),
            rec(0.3, 0.2, "max_iterations", true),
        ]);
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].mean_error, None);
        assert_eq!(curve[0].infeasible, 2);
        assert!((curve[1].mean_error.unwrap() - 0.15).abs() < 1e-12);
        assert_eq!((curve[1].usable, curve[1].not_converged), (2, 1));
    }

    #[test]
    fn copies_repeat_the_bad_signal() {
        use crate::labels::LabelDistribution;
        let ws = WeakSignalSet::new(
            vec![LabelDistribution::new(vec![0.9, 0.1]).unwrap(), LabelDistribution::new(vec![0.4, 0.6]).unwrap()],
            vec![0.1, 0.4],
            vec!["good".into(), "bad".into()],
        )
        .unwrap();
        let c = with_copies(&ws, 3).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.bounds(), &[0.1, 0.4, 0.4, 0.4]);
        assert_eq!(c.names()[3], "bad-copy3");
        assert_eq!(c.signals()[2].as_slice(), &[0.4, 0.6]);
    }
}

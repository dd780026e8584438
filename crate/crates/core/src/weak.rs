//! Simulated weak supervision: one-feature logistic models fitted on a
//! labeled split stand in for expert heuristics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_len, Error, Result};
use crate::labels::{constraint_value, LabelDistribution, WeakSignalSet};
use crate::models::{fit_supervised, FitConfig, Model, SigmoidLinearModel};

/// A weak signal's generator: logistic regression on a single feature.
#[derive(Clone, Debug)]
pub struct WeakSignalModel {
    pub feature: usize,
    pub name: String,
    model: SigmoidLinearModel,
}

impl WeakSignalModel {
    /// Fits on `ws_split`, which must carry true labels.
    pub fn fit(ws_split: &Dataset, feature: usize, config: &FitConfig) -> Result<Self> {
        let labels = ws_split.labels()?;
        let column = ws_split.select_features(&[feature])?;
        let values = column.features().column(0);
        if let Some(first) = values.first() {
            if values.iter().all(|v| v == first) {
                warn!(
                    "feature {} ({}) is constant on the weak-supervision split; its signal is the class prior",
                    feature,
                    ws_split.feature_names()[feature]
                );
            }
        }
        let model = fit_supervised(&column, labels, config)?;
        Ok(Self {
            feature,
            name: ws_split.feature_names()[feature].clone(),
            model,
        })
    }

    /// Soft labels on any split with the same feature layout.
    pub fn apply(&self, data: &Dataset) -> Result<LabelDistribution> {
        self.model.predict(&data.select_features(&[self.feature])?)
    }

    pub fn model(&self) -> &SigmoidLinearModel {
        &self.model
    }
}

/// Fits a one-feature model on `ws_split` and evaluates it on `train_split`.
pub fn make_weak_signal(
    ws_split: &Dataset,
    train_split: &Dataset,
    feature_index: usize,
) -> Result<LabelDistribution> {
    WeakSignalModel::fit(ws_split, feature_index, &FitConfig::default())?.apply(train_split)
}

/// Expected error of `q` against the true labels.
pub fn true_error_bound(q: &LabelDistribution, labels: &LabelDistribution) -> Result<f64> {
    constraint_value(q, labels)
}

pub fn fixed_bounds(m: usize, value: f64) -> Result<Vec<f64>> {
    if !(value > 0.0 && value <= 1.0) {
        return Err(Error::Config(format!("fixed bound must lie in (0, 1], got {value}")));
    }
    Ok(vec![value; m])
}

/// How the error bounds handed to the learner are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum BoundMode {
    /// Measured error of each signal on the training split.
    True,
    Fixed(f64),
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "true" => Ok(Self::True),
            other => match other.strip_prefix("fixed:") {
                Some(v) => {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad fixed bound '{v}'")))?;
                    fixed_bounds(1, v)?;
                    Ok(Self::Fixed(v))
                }
                None => Err(Error::Config(format!(
                    "bounds must be 'true' or 'fixed:<value>', got '{other}'"
                ))),
            },
        }
    }
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::True => write!(f, "true"),
            Self::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

/// First, middle and last feature indices.
pub fn default_features(d: usize) -> Vec<usize> {
    match d {
        0 => vec![],
        1 => vec![0],
        2 => vec![0, 1],
        _ => vec![0, d / 2, d - 1],
    }
}

/// Pixels at one quarter, one half and three quarters down the vertical
/// center line of a `rows × cols` image.
pub fn center_line_pixels(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let c = cols / 2;
    vec![(rows / 4, c), (rows / 2, c), (3 * rows / 4, c)]
}

/// Column index of pixel `(row, col)` in a row-major flattened image.
pub fn pixel_index(width: usize, (row, col): (usize, usize)) -> usize {
    row * width + col
}

/// Weak-signal generators fitted on one weak-supervision split.
#[derive(Clone, Debug)]
pub struct SignalBank {
    models: Vec<WeakSignalModel>,
}

impl SignalBank {
    pub fn fit(ws_split: &Dataset, features: &[usize], config: &FitConfig) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("weak signal features"));
        }
        let models = features
            .iter()
            .map(|&f| WeakSignalModel::fit(ws_split, f, config))
            .collect::<Result<_>>()?;
        Ok(Self { models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[WeakSignalModel] {
        &self.models
    }

    pub fn apply(&self, data: &Dataset) -> Result<Vec<LabelDistribution>> {
        self.models.iter().map(|m| m.apply(data)).collect()
    }

    /// Signals over `data` with bounds chosen by `mode`. True bounds read the
    /// labels `data` carries.
    pub fn signal_set(&self, data: &Dataset, mode: BoundMode) -> Result<WeakSignalSet> {
        let signals = self.apply(data)?;
        let bounds = match mode {
            BoundMode::True => {
                let labels = data.labels()?;
                signals
                    .iter()
                    .map(|q| true_error_bound(q, labels))
                    .collect::<Result<_>>()?
            }
            BoundMode::Fixed(v) => fixed_bounds(signals.len(), v)?,
        };
        let names = self.models.iter().map(|m| m.name.clone()).collect();
        WeakSignalSet::new(signals, bounds, names)
    }
}

/// Writes one row per example: its id followed by each signal's probability.
pub fn write_signals_csv<W: Write>(ws: &WeakSignalSet, ids: Option<&[String]>, out: W) -> Result<()> {
    let n = ws.n_examples().unwrap_or(0);
    if let Some(ids) = ids {
        check_len("row ids", n, ids.len())?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(ws.names().iter().cloned());
    w.write_record(&header)?;
    for j in 0..n {
        let mut row = vec![ids.map_or_else(|| j.to_string(), |ids| ids[j].clone())];
        row.extend(ws.signals().iter().map(|q| q[j].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ld(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    fn separable() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, 3.0, (i % 7) as f64]).collect();
        let labels = (0..40).map(|i| if i >= 20 { 1.0 } else { 0.0 }).collect();
        Dataset::from_rows(&rows, Some(labels)).unwrap()
    }

    #[test]
    fn separating_feature_recovers_labels() {
        let data = separable();
        let q = make_weak_signal(&data, &data, 0).unwrap();
        assert_eq!(q.rounded().as_slice(), data.labels().unwrap().as_slice());
        assert!(true_error_bound(&q, data.labels().unwrap()).unwrap() < 0.1);
    }

    #[test]
    fn constant_feature_gives_the_prior() {
        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![2.0]).collect();
        let labels = vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let data = Dataset::from_rows(&rows, Some(labels)).unwrap();
        let q = make_weak_signal(&data, &data, 0).unwrap();
        for v in q.iter() {
            assert_abs_diff_eq!(v, 0.3, epsilon = 1e-3);
        }
    }

    #[test]
    fn signal_needs_labels_and_a_valid_feature() {
        let data = separable();
        assert!(make_weak_signal(&data.unlabeled(), &data, 0).is_err());
        assert!(make_weak_signal(&data, &data, 9).is_err());
    }

    #[test]
    fn bound_examples() {
        let y = ld(&[1.0, 0.0, 1.0]);
        assert_eq!(true_error_bound(&y, &y).unwrap(), 0.0);
        assert_eq!(true_error_bound(&y.complement(), &y).unwrap(), 1.0);
        assert_abs_diff_eq!(true_error_bound(&ld(&[0.7, 0.2, 0.9]), &y).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn fixed_bound_vectors() {
        assert_eq!(fixed_bounds(3, 0.3).unwrap(), vec![0.3; 3]);
        assert_eq!(fixed_bounds(1, 0.5).unwrap(), vec![0.5]);
        assert!(fixed_bounds(2, 0.0).is_err());
        assert!(fixed_bounds(2, 1.5).is_err());
    }

    #[test]
    fn bound_mode_parsing() {
        assert_eq!("true".parse::<BoundMode>().unwrap(), BoundMode::True);
        assert_eq!("fixed:0.3".parse::<BoundMode>().unwrap(), BoundMode::Fixed(0.3));
        assert!("fixed:x".parse::<BoundMode>().is_err());
        assert!("fixed:2".parse::<BoundMode>().is_err());
        assert!("loose".parse::<BoundMode>().is_err());
        assert_eq!(BoundMode::Fixed(0.3).to_string(), "fixed:0.3");
    }

    #[test]
    fn default_feature_choices() {
        assert_eq!(default_features(30), vec![0, 15, 29]);
        assert_eq!(default_features(1), vec![0]);
        assert_eq!(center_line_pixels(28, 28), vec![(7, 14), (14, 14), (21, 14)]);
        assert_eq!(pixel_index(28, (7, 14)), 210);
    }

    #[test]
    fn bank_builds_signal_sets() {
        let data = separable();
        let bank = SignalBank::fit(&data, &[0, 2], &FitConfig::default()).unwrap();
        let ws = bank.signal_set(&data, BoundMode::True).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws.names(), &["x0".to_string(), "x2".to_string()]);
        for (q, b) in ws.iter() {
            assert!(q.iter().all(|v| (0.0..=1.0).contains(&v)));
            assert_eq!(b, constraint_value(q, data.labels().unwrap()).unwrap());
        }
        let fixed = bank.signal_set(&data.unlabeled(), BoundMode::Fixed(0.3)).unwrap();
        assert_eq!(fixed.bounds(), &[0.3, 0.3]);
        assert!(bank.signal_set(&data.unlabeled(), BoundMode::True).is_err());
    }

    #[test]
    fn signals_export_as_csv() {
        let ws = WeakSignalSet::new(
            vec![ld(&[0.25, 1.0]), ld(&[0.5, 0.0])],
            vec![0.1, 0.2],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let mut out = Vec::new();
        write_signals_csv(&ws, Some(&["r1".into(), "r2".into()]), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "id,a,b\nr1,0.25,0.5\nr2,1,0\n");
        assert!(write_signals_csv(&ws, Some(&["r1".into()]), Vec::new()).is_err());
    }
}

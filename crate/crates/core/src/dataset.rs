use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::labels::LabelDistribution;

/// Feature matrix (rows are examples) plus the held-out truth used only for
/// simulation and scoring.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: Array2<f64>,
    true_labels: Option<LabelDistribution>,
    ids: Option<Vec<String>>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, true_labels: Option<Vec<f64>>) -> Result<Self> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
        let true_labels = match true_labels {
            Some(labels) => {
                check_len("true labels", features.nrows(), labels.len())?;
                let labels = LabelDistribution::new(labels)?;
                if !labels.is_binary() {
                    return Err(Error::Config("true labels must be 0 or 1".into()));
                }
                Some(labels)
            }
            None => None,
        };
        let feature_names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            features,
            true_labels,
            ids: None,
            feature_names,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], true_labels: Option<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for row in rows {
            check_len("feature row", d, row.len())?;
            flat.extend_from_slice(row);
        }
        let features = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::Config(e.to_string()))?;
        Self::new(features, true_labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        check_len("feature names", self.d(), names.len())?;
        self.feature_names = names;
        Ok(self)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        check_len("row ids", self.n(), ids.len())?;
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn true_labels(&self) -> Option<&LabelDistribution> {
        self.true_labels.as_ref()
    }

    /// The hidden labels, or an error when the dataset is unlabeled.
    pub fn labels(&self) -> Result<&LabelDistribution> {
        self.true_labels
            .as_ref()
            .ok_or_else(|| Error::Config("dataset carries no true labels".into()))
    }

    /// Copy without the labels, as the learner sees it.
    pub fn unlabeled(&self) -> Self {
        Self {
            true_labels: None,
            ..self.clone()
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), rows),
            true_labels: self.true_labels.as_ref().map(|l| l.select(rows)),
            ids: self
                .ids
                .as_ref()
                .map(|ids| rows.iter().map(|&r| ids[r].clone()).collect()),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.d()) {
            return Err(Error::Config(format!(
                "feature index {bad} out of range for {} features",
                self.d()
            )));
        }
        Ok(Self {
            features: self.features.select(Axis(1), cols),
            true_labels: self.true_labels.clone(),
            ids: self.ids.clone(),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
        })
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }
}

/// Per-feature affine map to zero mean and unit variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Statistics from `data`; constant columns get scale 1.
    pub fn fit(data: &Dataset) -> Self {
        let x = data.features();
        let n = x.nrows().max(1) as f64;
        let mean: Vec<f64> = x.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let scale = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, &mu)| {
                let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, mu), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - mu) / s;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_non_finite_and_bad_labels() {
        assert!(Dataset::new(array![[1.0, f64::INFINITY]], None).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], Some(vec![1.0])).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], Some(vec![1.0, 0.5])).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], Some(vec![1.0, 0.0])).is_ok());
    }

    #[test]
    fn row_and_column_selection() {
        let ds = Dataset::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            Some(vec![0.0, 1.0, 1.0]),
        )
        .unwrap()
        .with_ids(vec!["a".into(), "b".into(), "c".into()])
        .unwrap();
        let sub = ds.select_rows(&[2, 0]);
        assert_eq!(sub.features(), &array![[5.0, 6.0], [1.0, 2.0]]);
        assert_eq!(sub.labels().unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(sub.ids().unwrap(), &["c".to_string(), "a".to_string()]);
        let col = ds.select_features(&[1]).unwrap();
        assert_eq!(col.d(), 1);
        assert_eq!(col.feature_names(), &["x1".to_string()]);
        assert!(ds.select_features(&[2]).is_err());
        assert!(ds.unlabeled().true_labels().is_none());
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let ds = Dataset::new(array![[1.0, 7.0], [3.0, 7.0]], None).unwrap();
        let s = Standardizer::fit(&ds);
        assert_eq!(s.mean, vec![2.0, 7.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        let z = s.transform(ds.features()).unwrap();
        assert_eq!(z, array![[-1.0, 0.0], [1.0, 0.0]]);
    }
}

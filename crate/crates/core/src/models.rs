//! Probabilistic binary classifiers with analytic transpose-Jacobian products.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{check_len, Error, Result};
use crate::labels::LabelDistribution;

/// Logistic function, clamped so outputs never reach exactly 0 or 1.
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// A parameterized map from examples to positive-class probabilities.
///
/// `prepare` caches whatever per-dataset work the model needs (scaled
/// features, say) so that the training loop can evaluate predictions and
/// Jacobian products repeatedly without redoing it.
pub trait Model: Clone {
    type Design;

    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn prepare(&self, data: &Dataset) -> Result<Self::Design>;
    fn predict_prepared(&self, design: &Self::Design) -> LabelDistribution;
    /// `(∂p/∂θ)ᵀ v` for the prepared dataset.
    fn jvp_prepared(&self, design: &Self::Design, v: &[f64]) -> Vec<f64>;
    fn n_examples(design: &Self::Design) -> usize;

    fn predict(&self, data: &Dataset) -> Result<LabelDistribution> {
        Ok(self.predict_prepared(&self.prepare(data)?))
    }

    fn jacobian_vector_product(&self, data: &Dataset, v: &[f64]) -> Result<Vec<f64>> {
        let design = self.prepare(data)?;
        check_len("Jacobian product vector", Self::n_examples(&design), v.len())?;
        Ok(self.jvp_prepared(&design, v))
    }
}

/// `p_j = sigmoid(θᵀ[z_j; 1])`, where `z_j` are standardized features and the
/// last weight is the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidLinearModel {
    weights: Vec<f64>,
    scaler: Standardizer,
}

impl SigmoidLinearModel {
    /// All-zero weights over `d` features with no feature scaling.
    pub fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d + 1],
            scaler: Standardizer::identity(d),
        }
    }

    /// All-zero weights with scaling statistics taken from `data`.
    pub fn zeros_standardized(data: &Dataset) -> Self {
        Self {
            weights: vec![0.0; data.d() + 1],
            scaler: Standardizer::fit(data),
        }
    }

    pub fn new(weights: Vec<f64>, scaler: Standardizer) -> Result<Self> {
        check_len("model weights", scaler.dim() + 1, weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(Self { weights, scaler })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaler(&self) -> &Standardizer {
        &self.scaler
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "# advlabel sigmoid-linear model");
        let _ = writeln!(s, "format 1");
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "weights {}", join(&self.weights));
        let _ = writeln!(s, "mean {}", join(&self.scaler.mean));
        let _ = writeln!(s, "scale {}", join(&self.scaler.scale));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let (mut weights, mut mean, mut scale) = (None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Config(format!("model line {}: {msg}", lineno + 1));
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let floats = || -> Result<Vec<f64>> {
                rest.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}"))))
                    .collect()
            };
            match key {
                "format" => {
                    if rest.trim() != "1" {
                        return Err(bad(format!("unsupported format {}", rest.trim())));
                    }
                }
                "dim" => dim = Some(rest.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "weights" => weights = Some(floats()?),
                "mean" => mean = Some(floats()?),
                "scale" => scale = Some(floats()?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Config(format!("model record is missing `{k}`"));
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let scaler = Standardizer {
            mean: mean.ok_or_else(|| missing("mean"))?,
            scale: scale.ok_or_else(|| missing("scale"))?,
        };
        check_len("scaling mean", dim, scaler.mean.len())?;
        check_len("scaling scale", dim, scaler.scale.len())?;
        Self::new(weights.ok_or_else(|| missing("weights"))?, scaler)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text).map_err(|e| Error::load(path, e.to_string()))
    }
}

/// Standardized features with a trailing constant-1 column.
#[derive(Clone, Debug)]
pub struct LinearDesign {
    x: Array2<f64>,
}

impl LinearDesign {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }

    pub(crate) fn logits(&self, weights: &[f64]) -> Array1<f64> {
        self.x.dot(&ArrayView1::from(weights))
    }

    /// `Σ_j v_j x̃_j`
    pub(crate) fn transpose_dot(&self, v: &[f64]) -> Vec<f64> {
        self.x.t().dot(&ArrayView1::from(v)).to_vec()
    }
}

impl Model for SigmoidLinearModel {
    type Design = LinearDesign;

    fn params(&self) -> &[f64] {
        &self.weights
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn prepare(&self, data: &Dataset) -> Result<LinearDesign> {
        if data.d() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.d(),
            });
        }
        let z = self.scaler.transform(data.features())?;
        let ones = Array2::ones((data.n(), 1));
        let x = ndarray::concatenate(Axis(1), &[z.view(), ones.view()])
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(LinearDesign { x })
    }

    fn predict_prepared(&self, design: &LinearDesign) -> LabelDistribution {
        LabelDistribution::clipped(design.logits(&self.weights).iter().map(|&z| sigmoid(z)).collect())
    }

    fn jvp_prepared(&self, design: &LinearDesign, v: &[f64]) -> Vec<f64> {
        let p = self.predict_prepared(design);
        let scaled: Vec<f64> = p.iter().zip(v).map(|(pj, vj)| pj * (1.0 - pj) * vj).collect();
        design.transpose_dot(&scaled)
    }

    fn n_examples(design: &LinearDesign) -> usize {
        design.x.nrows()
    }
}

/// One free logit per example; predictions do not depend on features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectModel {
    logits: Vec<f64>,
}

impl DirectModel {
    pub fn new(logits: Vec<f64>) -> Self {
        Self { logits }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

impl Model for DirectModel {
    type Design = usize;

    fn params(&self) -> &[f64] {
        &self.logits
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    fn prepare(&self, data: &Dataset) -> Result<usize> {
        check_len("direct-model examples", self.logits.len(), data.n())?;
        Ok(data.n())
    }

    fn predict_prepared(&self, _design: &usize) -> LabelDistribution {
        LabelDistribution::clipped(self.logits.iter().map(|&z| sigmoid(z)).collect())
    }

    fn jvp_prepared(&self, _design: &usize, v: &[f64]) -> Vec<f64> {
        self.logits
            .iter()
            .zip(v)
            .map(|(&z, vj)| {
                let p = sigmoid(z);
                p * (1.0 - p) * vj
            })
            .collect()
    }

    fn n_examples(design: &usize) -> usize {
        *design
    }
}

/// Full-batch gradient descent settings shared by the supervised trainers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub step: f64,
    /// L2 strength on the non-bias weights.
    pub l2: f64,
    pub max_iters: usize,
    /// Stop once the gradient's ∞-norm falls below this.
    pub grad_tol: f64,
    /// Standardize features with statistics from the fitting data.
    pub standardize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            l2: 1e-4,
            max_iters: 5000,
            grad_tol: 1e-6,
            standardize: true,
        }
    }
}

pub(crate) struct Descent {
    pub weights: Vec<f64>,
    pub losses: Vec<f64>,
}

/// Fixed-step descent on `objective`, which returns `(loss, gradient)`.
pub(crate) fn gradient_descent(
    init: Vec<f64>,
    config: &FitConfig,
    mut objective: impl FnMut(&[f64]) -> (f64, Vec<f64>),
) -> Result<Descent> {
    let mut w = init;
    let mut losses = Vec::new();
    for _ in 0..config.max_iters {
        let (loss, grad) = objective(&w);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite loss after {} iterations",
                losses.len()
            )));
        }
        losses.push(loss);
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < config.grad_tol {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= config.step * gi;
        }
    }
    Ok(Descent { weights: w, losses })
}

fn initial_model(data: &Dataset, config: &FitConfig) -> SigmoidLinearModel {
    if config.standardize {
        SigmoidLinearModel::zeros_standardized(data)
    } else {
        SigmoidLinearModel::zeros(data.d())
    }
}

/// L2 term and its gradient, leaving the bias (last weight) unpenalized.
pub(crate) fn l2_penalty(weights: &[f64], strength: f64) -> (f64, Vec<f64>) {
    let d = weights.len() - 1;
    let value = 0.5 * strength * weights[..d].iter().map(|w| w * w).sum::<f64>();
    let mut grad: Vec<f64> = weights.iter().map(|w| strength * w).collect();
    grad[d] = 0.0;
    (value, grad)
}

/// Logistic regression against possibly soft targets, returning the per-iteration losses too.
pub fn fit_supervised_traced(
    data: &Dataset,
    targets: &LabelDistribution,
    config: &FitConfig,
) -> Result<(SigmoidLinearModel, Vec<f64>)> {
    check_len("training targets", data.n(), targets.len())?;
    if data.n() == 0 {
        return Err(Error::Empty("training data"));
    }
    let mut model = initial_model(data, config);
    let design = model.prepare(data)?;
    let n = data.n() as f64;
    let t = targets.as_slice();
    let descent = gradient_descent(model.weights.clone(), config, |w| {
        let z = design.logits(w);
        let mut loss = 0.0;
        let mut resid = Vec::with_capacity(t.len());
        for (&zj, &tj) in z.iter().zip(t) {
            // softplus(z) − t·z is the cross-entropy written in logit space
            let softplus = if zj > 0.0 {
                zj + (-zj).exp().ln_1p()
            } else {
                zj.exp().ln_1p()
            };
            loss += softplus - tj * zj;
            resid.push((sigmoid(zj) - tj) / n);
        }
        let (pen, pen_grad) = l2_penalty(w, config.l2);
        let mut grad = design.transpose_dot(&resid);
        for (g, pg) in grad.iter_mut().zip(&pen_grad) {
            *g += pg;
        }
        (loss / n + pen, grad)
    })?;
    model.weights = descent.weights;
    Ok((model, descent.losses))
}

/// Maximum-likelihood logistic regression with an L2 penalty.
pub fn fit_supervised(
    data: &Dataset,
    targets: &LabelDistribution,
    config: &FitConfig,
) -> Result<SigmoidLinearModel> {
    fit_supervised_traced(data, targets, config).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn zero_weights_predict_one_half() {
        let ds = Dataset::new(array![[3.0, -1.0], [0.5, 2.0]], None).unwrap();
        let p = SigmoidLinearModel::zeros(2).predict(&ds).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn saturation_stays_inside_the_open_interval() {
        let ds = Dataset::new(array![[1e6], [-1e6]], None).unwrap();
        let m = SigmoidLinearModel::new(vec![1.0, 0.0], Standardizer::identity(1)).unwrap();
        let p = m.predict(&ds).unwrap();
        assert!(p[0] > 0.999 && p[0] < 1.0);
        assert!(p[1] > 0.0 && p[1] < 1e-300);
    }

    #[test]
    fn single_feature_value() {
        let ds = Dataset::new(array![[2.0]], None).unwrap();
        let m = SigmoidLinearModel::new(vec![1.0, 0.0], Standardizer::identity(1)).unwrap();
        assert_abs_diff_eq!(m.predict(&ds).unwrap()[0], 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(m.predict(&ds).unwrap()[0], 0.8808, epsilon = 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        let ds = Dataset::new(array![[2.0, 1.0]], None).unwrap();
        assert!(matches!(
            SigmoidLinearModel::zeros(3).predict(&ds),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(DirectModel::zeros(2).predict(&ds).is_err());
        let m = SigmoidLinearModel::zeros(2);
        assert!(m.jacobian_vector_product(&ds, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn jvp_of_zero_vector_is_zero() {
        let ds = Dataset::new(array![[2.0, 1.0], [0.0, -3.0]], None).unwrap();
        let m = SigmoidLinearModel::new(vec![0.3, -0.2, 0.1], Standardizer::identity(2)).unwrap();
        assert_eq!(m.jacobian_vector_product(&ds, &[0.0, 0.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn direct_model_jacobian_is_diagonal() {
        let ds = Dataset::new(array![[0.0], [0.0], [0.0]], None).unwrap();
        let m = DirectModel::new(vec![0.0, 1.0, -2.0]);
        let p = m.predict(&ds).unwrap();
        let v = [0.5, -1.0, 2.0];
        let jv = m.jacobian_vector_product(&ds, &v).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(jv[j], p[j] * (1.0 - p[j]) * v[j], epsilon = 1e-15);
        }
    }

    #[test]
    fn text_record_round_trip_and_errors() {
        let m = SigmoidLinearModel::new(
            vec![0.25, -1.5e-7, 3.0],
            Standardizer {
                mean: vec![1.0, 2.0],
                scale: vec![0.5, 4.0],
            },
        )
        .unwrap();
        assert_eq!(SigmoidLinearModel::from_text(&m.to_text()).unwrap(), m);
        assert!(SigmoidLinearModel::from_text("dim 1\nweights 1 2\nmean 0\n").is_err());
        assert!(SigmoidLinearModel::from_text("dim 1\nweights 1 x\nmean 0\nscale 1\n").is_err());
        assert!(SigmoidLinearModel::from_text("format 2\n").is_err());
    }

    #[test]
    fn separable_data_is_fit() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 - 99.5]).collect();
        let labels: Vec<f64> = (0..200).map(|i| f64::from(u8::from(i >= 100))).collect();
        let ds = Dataset::from_rows(&rows, Some(labels)).unwrap();
        let m = fit_supervised(&ds, ds.labels().unwrap(), &FitConfig::default()).unwrap();
        let acc = crate::labels::accuracy(&m.predict(&ds).unwrap(), ds.labels().unwrap()).unwrap();
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn symmetric_targets_give_zero_weights() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).sin(), i as f64]).collect();
        let ds = Dataset::from_rows(&rows, None).unwrap();
        let m = fit_supervised(&ds, &LabelDistribution::constant(50, 0.5), &FitConfig::default())
            .unwrap();
        for w in m.weights() {
            assert!(w.abs() < 1e-6, "weight {w}");
        }
    }

    #[test]
    fn loss_decreases_monotonically() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.37).cos(), i as f64 / 10.0]).collect();
        let t: Vec<f64> = (0..60).map(|i| ((i * 7) % 11) as f64 / 10.0).collect();
        let ds = Dataset::from_rows(&rows, None).unwrap();
        let (_, losses) =
            fit_supervised_traced(&ds, &LabelDistribution::new(t).unwrap(), &FitConfig::default())
                .unwrap();
        assert!(losses.len() > 10);
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
    }
}

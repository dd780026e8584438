//! Comparison learners: supervised training on averaged signals, and a
//! generalized-expectation learner that matches per-signal conditional label
//! rates.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_len, Error, Result};
use crate::labels::{LabelDistribution, WeakSignalSet};
use crate::models::{
    fit_supervised, gradient_descent, l2_penalty, sigmoid, FitConfig, LinearDesign, Model,
    SigmoidLinearModel,
};

/// Clamp applied to Bernoulli parameters inside the KL divergence.
pub const KL_EPSILON: f64 = 1e-6;

/// Rounded mean of the signals; a mean of exactly 0.5 becomes 1.
pub fn avg_pseudolabels(ws: &WeakSignalSet) -> Result<LabelDistribution> {
    Ok(ws.mean_signal()?.rounded())
}

pub fn train_avg(data: &Dataset, ws: &WeakSignalSet, config: &FitConfig) -> Result<SigmoidLinearModel> {
    ws.check_examples(data.n())?;
    fit_supervised(data, &avg_pseudolabels(ws)?, config)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Examples with `q ≥ 0.5`.
    Positive,
    /// Examples with `q < 0.5`.
    Negative,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Positive, Branch::Negative];

    pub fn contains(self, q: f64) -> bool {
        match self {
            Branch::Positive => q >= 0.5,
            Branch::Negative => q < 0.5,
        }
    }
}

/// Reference label rates for one weak signal, split by its thresholded vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReference {
    /// Positive rate among examples the signal votes positive; `None` if there are none.
    pub positive: Option<f64>,
    pub negative: Option<f64>,
    /// Number of examples voted positive.
    pub count: usize,
    pub total: usize,
}

impl ConditionalReference {
    /// Computes the reference from a signal and the labels on the same examples.
    pub fn from_labels(q: &LabelDistribution, labels: &LabelDistribution) -> Result<Self> {
        check_len("reference labels", q.len(), labels.len())?;
        let count = q.iter().filter(|&v| Branch::Positive.contains(v)).count();
        Ok(Self {
            positive: model_conditional(labels, q, Branch::Positive)?,
            negative: model_conditional(labels, q, Branch::Negative)?,
            count,
            total: q.len(),
        })
    }

    pub fn get(&self, branch: Branch) -> Option<f64> {
        match branch {
            Branch::Positive => self.positive,
            Branch::Negative => self.negative,
        }
    }
}

/// References for every signal in `ws` against `labels`.
pub fn references(ws: &WeakSignalSet, labels: &LabelDistribution) -> Result<Vec<ConditionalReference>> {
    ws.signals()
        .iter()
        .map(|q| ConditionalReference::from_labels(q, labels))
        .collect()
}

/// Mean of `p` over the examples in `branch` of `q`; `None` for an empty branch.
pub fn model_conditional(p: &LabelDistribution, q: &LabelDistribution, branch: Branch) -> Result<Option<f64>> {
    check_len("signal", p.len(), q.len())?;
    let (sum, count) = p
        .iter()
        .zip(q.iter())
        .filter(|(_, qj)| branch.contains(*qj))
        .fold((0.0, 0usize), |(s, c), (pj, _)| (s + pj, c + 1));
    Ok((count > 0).then(|| sum / count as f64))
}

fn clamp(x: f64) -> f64 {
    x.clamp(KL_EPSILON, 1.0 - KL_EPSILON)
}

/// KL divergence between Bernoulli(a) and Bernoulli(b), in nats.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    let (a, b) = (clamp(a), clamp(b));
    a * (a / b).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln()
}

/// `∂ KL(a‖b) / ∂b`, zero where the clamp is active.
fn bernoulli_kl_db(a: f64, b: f64) -> f64 {
    if b <= KL_EPSILON || b >= 1.0 - KL_EPSILON {
        return 0.0;
    }
    let a = clamp(a);
    -a / b + (1.0 - a) / (1.0 - b)
}

/// Sum over signals and branches of `KL(reference ‖ model conditional)`.
/// Branches empty on either side contribute nothing.
pub fn ge_objective(p: &LabelDistribution, signals: &[LabelDistribution], refs: &[ConditionalReference]) -> Result<f64> {
    Ok(ge_terms(p, signals, refs)?.0)
}

/// Objective value and its gradient with respect to `p`.
fn ge_terms(
    p: &LabelDistribution,
    signals: &[LabelDistribution],
    refs: &[ConditionalReference],
) -> Result<(f64, Vec<f64>)> {
    check_len("references", signals.len(), refs.len())?;
    let mut value = 0.0;
    let mut grad = vec![0.0; p.len()];
    for (q, r) in signals.iter().zip(refs) {
        for branch in Branch::BOTH {
            let (Some(target), Some(model)) = (r.get(branch), model_conditional(p, q, branch)?) else {
                continue;
            };
            value += bernoulli_kl(target, model);
            let members: Vec<usize> = (0..q.len()).filter(|&j| branch.contains(q[j])).collect();
            let scale = bernoulli_kl_db(target, model) / members.len() as f64;
            for j in members {
                grad[j] += scale;
            }
        }
    }
    Ok((value, grad))
}

/// Full training objective of the GE learner over sigmoid-linear weights.
pub struct GeProblem<'a> {
    design: LinearDesign,
    signals: &'a [LabelDistribution],
    refs: &'a [ConditionalReference],
    l2: f64,
}

impl<'a> GeProblem<'a> {
    pub fn new(
        model: &SigmoidLinearModel,
        data: &Dataset,
        signals: &'a [LabelDistribution],
        refs: &'a [ConditionalReference],
        l2: f64,
    ) -> Result<Self> {
        for q in signals {
            check_len("weak signal", data.n(), q.len())?;
        }
        check_len("references", signals.len(), refs.len())?;
        Ok(Self {
            design: model.prepare(data)?,
            signals,
            refs,
            l2,
        })
    }

    /// Objective and gradient at `weights`.
    pub fn evaluate(&self, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        let z = self.design.logits(weights);
        let p = LabelDistribution::clipped(z.iter().map(|&v| sigmoid(v)).collect());
        let (kl, dp) = ge_terms(&p, self.signals, self.refs)?;
        let v: Vec<f64> = dp.iter().zip(p.iter()).map(|(g, pj)| g * pj * (1.0 - pj)).collect();
        let mut grad = self.design.transpose_dot(&v);
        let (pen, pen_grad) = l2_penalty(weights, self.l2);
        for (g, pg) in grad.iter_mut().zip(&pen_grad) {
            *g += pg;
        }
        Ok((kl + pen, grad))
    }
}

/// Fits a sigmoid-linear model to the GE objective by gradient descent.
///
/// `signals` are the weak signals on `data`; `refs` were computed where
/// labels exist.
pub fn train_ge(
    data: &Dataset,
    signals: &[LabelDistribution],
    refs: &[ConditionalReference],
    config: &FitConfig,
) -> Result<SigmoidLinearModel> {
    if signals.is_empty() {
        return Err(Error::Empty("weak signals"));
    }
    let init = if config.standardize {
        SigmoidLinearModel::zeros_standardized(data)
    } else {
        SigmoidLinearModel::zeros(data.d())
    };
    let problem = GeProblem::new(&init, data, signals, refs, config.l2)?;
    let mut failure = None;
    let descent = gradient_descent(init.weights().to_vec(), config, |w| match problem.evaluate(w) {
        Ok(r) => r,
        Err(e) => {
            failure = Some(e);
            (f64::NAN, vec![])
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    SigmoidLinearModel::new(descent?.weights, init.scaler().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ld(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn averaged_pseudolabels() {
        let ws = WeakSignalSet::unnamed(vec![ld(&[0.2, 0.9]), ld(&[0.4, 0.8])], vec![0.3, 0.3]).unwrap();
        assert_eq!(avg_pseudolabels(&ws).unwrap().as_slice(), &[0.0, 1.0]);
        let one = WeakSignalSet::unnamed(vec![ld(&[0.7, 0.1, 0.5])], vec![0.3]).unwrap();
        assert_eq!(avg_pseudolabels(&one).unwrap().as_slice(), &[1.0, 0.0, 1.0]);
        let tie = WeakSignalSet::unnamed(vec![ld(&[0.25, 0.0]), ld(&[0.75, 1.0])], vec![0.3, 0.3]).unwrap();
        assert_eq!(avg_pseudolabels(&tie).unwrap().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn conditional_means() {
        let q = ld(&[0.9, 0.1, 0.6, 0.2]);
        assert_eq!(model_conditional(&ld(&[0.7; 4]), &q, Branch::Positive).unwrap(), Some(0.7));
        let p = ld(&[0.2, 0.0, 0.6, 1.0]);
        assert_abs_diff_eq!(model_conditional(&p, &q, Branch::Positive).unwrap().unwrap(), 0.4);
        assert_abs_diff_eq!(model_conditional(&p, &q, Branch::Negative).unwrap().unwrap(), 0.5);
        assert_eq!(model_conditional(&p, &ld(&[0.9; 4]), Branch::Negative).unwrap(), None);
        assert!(model_conditional(&p, &ld(&[0.5]), Branch::Positive).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_abs_diff_eq!(bernoulli_kl(0.8, 0.6), 0.8 * (0.8f64 / 0.6).ln() + 0.2 * (0.2f64 / 0.4).ln());
        assert_abs_diff_eq!(bernoulli_kl(0.8, 0.6), 0.0915, epsilon = 1e-4);
        assert_eq!(bernoulli_kl(0.5, 0.5), 0.0);
        assert!(bernoulli_kl(1.0, 0.0).is_finite());
    }

    #[test]
    fn objective_vanishes_at_the_generator() {
        let p = ld(&[0.3, 0.8, 0.6, 0.1, 0.9]);
        let q = vec![ld(&[0.1, 0.7, 0.5, 0.2, 0.9]), ld(&[1.0, 1.0, 1.0, 1.0, 1.0])];
        let refs: Vec<_> = q.iter().map(|q| ConditionalReference::from_labels(q, &p).unwrap()).collect();
        assert_eq!(refs[1].negative, None);
        assert_eq!(refs[1].count, 5);
        assert_abs_diff_eq!(ge_objective(&p, &q, &refs).unwrap(), 0.0, epsilon = 1e-12);
        let other = ld(&[0.5; 5]);
        assert!(ge_objective(&other, &q, &refs).unwrap() > 0.0);
    }

    #[test]
    fn reference_counts_partition_the_examples() {
        let q = ld(&[0.5, 0.49, 0.51, 0.0]);
        let r = ConditionalReference::from_labels(&q, &ld(&[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!((r.count, r.total), (2, 4));
        assert_eq!(r.positive, Some(0.5));
        assert_eq!(r.negative, Some(0.5));
    }

    #[test]
    fn ge_recovers_a_signal_aligned_classifier() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64 / 10.0]).collect();
        let labels: Vec<f64> = (0..60).map(|i| if i >= 30 { 1.0 } else { 0.0 }).collect();
        let data = Dataset::from_rows(&rows, Some(labels.clone())).unwrap();
        let q = vec![ld(&labels.iter().map(|y| 0.2 + 0.6 * y).collect::<Vec<_>>())];
        let refs = vec![ConditionalReference::from_labels(&q[0], &ld(&labels)).unwrap()];
        let model = train_ge(&data, &q, &refs, &FitConfig::default()).unwrap();
        let p = model.predict(&data).unwrap();
        let acc = crate::labels::accuracy(&p, &ld(&labels)).unwrap();
        assert!(acc > 0.95, "{acc}");
    }
}

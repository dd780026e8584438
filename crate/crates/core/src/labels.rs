//! Probabilistic labelings and the bilinear error arithmetic they share.
//!
//! Every quantity in adversarial label learning reduces to one bilinear
//! form: the probability that two independent Bernoulli labelings disagree,
//! averaged over examples,
//!
//! ```text
//! err(a, b) = (1/n) * (aᵀ(1 − b) + (1 − a)ᵀ b)
//! ```
//!
//! The learner's objective, a weak signal's constraint, and the accuracy
//! readout are all instances of it. Labels use the `{0, 1}` convention.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Entries further than this outside `[0, 1]` are rejected; closer ones are clamped.
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// Probability that each example is positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    /// Validates that every entry lies in `[0, 1]` (up to [`RANGE_TOLERANCE`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::validated("label distribution", probs)
    }

    pub(crate) fn validated(what: &'static str, mut probs: Vec<f64>) -> Result<Self> {
        for (index, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite(what));
            }
            if *p < -RANGE_TOLERANCE || *p > 1.0 + RANGE_TOLERANCE {
                return Err(Error::OutOfRange {
                    what,
                    index,
                    value: *p,
                });
            }
            *p = p.clamp(0.0, 1.0);
        }
        Ok(Self(probs))
    }

    /// Projects arbitrary reals onto `[0, 1]^n`.
    pub fn clipped(probs: Vec<f64>) -> Self {
        Self(probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::clipped(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    /// Elementwise `1 − p`.
    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|p| 1.0 - p).collect())
    }

    /// Hard labels at the 0.5 threshold; ties go to the positive class.
    pub fn rounded(&self) -> Self {
        Self(self.0.iter().map(|&p| if p >= 0.5 { 1.0 } else { 0.0 }).collect())
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self(rows.iter().map(|&r| self.0[r]).collect())
    }
}

impl std::ops::Index<usize> for LabelDistribution {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

fn disagreement(a: &[f64], b: &[f64]) -> f64 {
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x * (1.0 - y) + (1.0 - x) * y)
        .sum();
    total / a.len() as f64
}

fn check_pair(a: &LabelDistribution, b: &LabelDistribution) -> Result<()> {
    check_len("label distributions", a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::Empty("label distribution"));
    }
    Ok(())
}

/// Expected error rate of predictions `p` against a labeling `y`.
pub fn expected_error(p: &LabelDistribution, y: &LabelDistribution) -> Result<f64> {
    check_pair(p, y)?;
    Ok(disagreement(p.as_slice(), y.as_slice()))
}

/// Expected error of weak signal `q` under labeling `y`; the constraint holds when this is `≤ b`.
pub fn constraint_value(q: &LabelDistribution, y: &LabelDistribution) -> Result<f64> {
    check_pair(q, y)?;
    Ok(disagreement(q.as_slice(), y.as_slice()))
}

/// Fraction of examples whose thresholded prediction matches a binary label.
pub fn accuracy(p: &LabelDistribution, y: &LabelDistribution) -> Result<f64> {
    Ok(1.0 - expected_error(&p.rounded(), y)?)
}

/// Weak signals `q_i` and their error bounds `b_i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakSignalSet {
    signals: Vec<LabelDistribution>,
    bounds: Vec<f64>,
    names: Vec<String>,
}

impl WeakSignalSet {
    pub fn new(
        signals: Vec<LabelDistribution>,
        bounds: Vec<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        check_len("weak-signal bounds", signals.len(), bounds.len())?;
        check_len("weak-signal names", signals.len(), names.len())?;
        if let Some(first) = signals.first() {
            for s in &signals[1..] {
                check_len("weak signal", first.len(), s.len())?;
            }
        }
        let bounds = LabelDistribution::validated("error bound", bounds)?.into_vec();
        Ok(Self {
            signals,
            bounds,
            names,
        })
    }

    /// Names default to `ws-1`, `ws-2`, ...
    pub fn unnamed(signals: Vec<LabelDistribution>, bounds: Vec<f64>) -> Result<Self> {
        let names = (1..=signals.len()).map(|i| format!("ws-{i}")).collect();
        Self::new(signals, bounds, names)
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Number of examples the signals label, if any signal exists.
    pub fn n_examples(&self) -> Option<usize> {
        self.signals.first().map(LabelDistribution::len)
    }

    pub fn signals(&self) -> &[LabelDistribution] {
        &self.signals
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LabelDistribution, f64)> {
        self.signals.iter().zip(self.bounds.iter().copied())
    }

    /// Same signals, new bounds.
    pub fn with_bounds(&self, bounds: Vec<f64>) -> Result<Self> {
        Self::new(self.signals.clone(), bounds, self.names.clone())
    }

    /// The first `k` signals.
    pub fn prefix(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            signals: self.signals[..k].to_vec(),
            bounds: self.bounds[..k].to_vec(),
            names: self.names[..k].to_vec(),
        }
    }

    pub fn push(&mut self, signal: LabelDistribution, bound: f64, name: String) -> Result<()> {
        if let Some(n) = self.n_examples() {
            check_len("weak signal", n, signal.len())?;
        }
        let bound = LabelDistribution::validated("error bound", vec![bound])?[0];
        self.signals.push(signal);
        self.bounds.push(bound);
        self.names.push(name);
        Ok(())
    }

    /// Elementwise mean of the signals.
    pub fn mean_signal(&self) -> Result<LabelDistribution> {
        let n = self.n_examples().ok_or(Error::Empty("weak-signal set"))?;
        let m = self.len() as f64;
        let mut mean = vec![0.0; n];
        for s in &self.signals {
            for (acc, q) in mean.iter_mut().zip(s.iter()) {
                *acc += q;
            }
        }
        Ok(LabelDistribution::clipped(
            mean.into_iter().map(|v| v / m).collect(),
        ))
    }

    pub(crate) fn check_examples(&self, n: usize) -> Result<()> {
        match self.n_examples() {
            Some(found) => check_len("weak signal", n, found),
            None => Ok(()),
        }
    }
}

/// Per-constraint slack `b_i − constraint_value(q_i, y)`; all non-negative iff `y` is feasible.
pub fn feasibility(ws: &WeakSignalSet, y: &LabelDistribution) -> Result<Vec<f64>> {
    ws.check_examples(y.len())?;
    ws.iter()
        .map(|(q, b)| constraint_value(q, y).map(|c| b - c))
        .collect()
}

/// Joint iterate of the saddle-point solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelState {
    pub params: Vec<f64>,
    /// KKT multipliers, one per weak signal; kept non-negative.
    pub multipliers: Vec<f64>,
    pub adversarial: LabelDistribution,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ld(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    fn fig1() -> WeakSignalSet {
        WeakSignalSet::unnamed(vec![ld(&[0.3, 0.2]), ld(&[0.6, 0.1])], vec![0.4, 0.4]).unwrap()
    }

    #[test]
    fn expected_error_examples() {
        assert_eq!(expected_error(&ld(&[1.0, 0.0]), &ld(&[1.0, 0.0])).unwrap(), 0.0);
        let half = ld(&[0.5, 0.5, 0.5]);
        for y in [[0.0, 1.0, 0.3], [1.0, 1.0, 1.0], [0.2, 0.9, 0.0]] {
            assert_abs_diff_eq!(expected_error(&half, &ld(&y)).unwrap(), 0.5, epsilon = 1e-15);
        }
        // (1/2)(0.18·0.59 + 0.82·0.41 + 1.0·0.23)
        let v = expected_error(&ld(&[0.18, 0.0]), &ld(&[0.41, 0.23])).unwrap();
        assert_abs_diff_eq!(v, 0.3362, epsilon = 1e-12);
    }

    #[test]
    fn constraint_value_examples() {
        let y = ld(&[0.41, 0.23]);
        assert_abs_diff_eq!(constraint_value(&ld(&[0.3, 0.2]), &y).unwrap(), 0.401, epsilon = 0.01);
        // (1/2)(0.6·0.59 + 0.1·0.77 + 0.4·0.41 + 0.9·0.23)
        assert_abs_diff_eq!(
            constraint_value(&ld(&[0.6, 0.1]), &y).unwrap(),
            0.401,
            epsilon = 1e-12
        );
        let yb = ld(&[1.0, 0.0, 1.0]);
        assert_eq!(constraint_value(&yb, &yb).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let err = expected_error(&ld(&[0.1]), &ld(&[0.1, 0.2])).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
        assert!(constraint_value(&ld(&[]), &ld(&[])).is_err());
    }

    #[test]
    fn range_validation_clamps_residue_and_rejects_the_rest() {
        let v = LabelDistribution::new(vec![-1e-12, 1.0 + 5e-10]).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 1.0]);
        assert!(matches!(
            LabelDistribution::new(vec![0.2, 1.01]),
            Err(Error::OutOfRange { index: 1, .. })
        ));
        assert!(LabelDistribution::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let slack = feasibility(&fig1(), &ld(&[0.41, 0.23])).unwrap();
        for s in slack {
            assert_abs_diff_eq!(s, 0.0, epsilon = 0.01);
        }
        let y = ld(&[1.0, 0.0]);
        let ws = WeakSignalSet::unnamed(vec![y.clone()], vec![0.1]).unwrap();
        assert_abs_diff_eq!(feasibility(&ws, &y).unwrap()[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn feasibility_matches_direct_evaluation() {
        let qs = [[0.12, 0.87, 0.44, 0.05], [0.66, 0.31, 0.92, 0.5]];
        let bounds = [0.35, 0.2];
        let y = [0.7, 0.1, 0.25, 0.9];
        let ws = WeakSignalSet::unnamed(qs.iter().map(|q| ld(q)).collect(), bounds.to_vec()).unwrap();
        let slack = feasibility(&ws, &ld(&y)).unwrap();
        for (i, q) in qs.iter().enumerate() {
            let mut direct = 0.0;
            for j in 0..4 {
                // P(ŷ_j ≠ y_j) with ŷ_j ~ Bernoulli(q_j), y_j ~ Bernoulli(y_j)
                direct += q[j] * (1.0 - y[j]) + (1.0 - q[j]) * y[j];
            }
            assert_abs_diff_eq!(slack[i], bounds[i] - direct / 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn weak_signal_set_rejects_ragged_input() {
        assert!(WeakSignalSet::unnamed(vec![ld(&[0.1]), ld(&[0.1, 0.2])], vec![0.1, 0.1]).is_err());
        assert!(WeakSignalSet::unnamed(vec![ld(&[0.1])], vec![0.1, 0.2]).is_err());
        assert!(WeakSignalSet::unnamed(vec![ld(&[0.1])], vec![1.5]).is_err());
    }

    #[test]
    fn mean_signal_and_prefix() {
        let ws = fig1();
        let mean = ws.mean_signal().unwrap();
        assert_abs_diff_eq!(mean[0], 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(mean[1], 0.15, epsilon = 1e-15);
        assert_eq!(ws.prefix(1).len(), 1);
        assert_eq!(ws.prefix(5).len(), 2);
    }
}

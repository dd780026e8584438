use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{check_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Significance {
    Distinguishable,
    Indistinguishable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TTest {
    /// Paired t statistic; infinite when the differences have zero spread.
    pub t: f64,
    /// Two-tailed critical value at the requested level.
    pub critical: f64,
    pub outcome: Significance,
}

/// Two-tailed paired t-test with `n − 1` degrees of freedom.
pub fn paired_ttest(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    check_len("paired sample", a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Err(Error::Config("a paired t-test needs at least two pairs".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("significance level must be in (0, 1), got {alpha}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Config(e.to_string()))?;
    let critical = dist.inverse_cdf(1.0 - alpha / 2.0);
    let sd = var.sqrt();
    let t = if sd > 0.0 {
        mean / (sd / (n as f64).sqrt())
    } else if diffs.iter().all(|d| *d == 0.0) {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    };
    let outcome = if t.abs() > critical {
        Significance::Distinguishable
    } else {
        Significance::Indistinguishable
    };
    Ok(TTest { t, critical, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_samples_are_indistinguishable() {
        let a = [0.9, 0.8, 0.95];
        let r = paired_ttest(&a, &a, 0.05).unwrap();
        assert_eq!(r.outcome, Significance::Indistinguishable);
        assert_eq!(r.t, 0.0);
    }

    #[test]
    fn constant_shift_is_distinguishable() {
        let a = [0.9, 0.8, 0.95, 0.7];
        let b: Vec<f64> = a.iter().map(|x| x - 0.1).collect();
        assert_eq!(paired_ttest(&a, &b, 0.05).unwrap().outcome, Significance::Distinguishable);
        let noisy: Vec<f64> = a.iter().enumerate().map(|(i, x)| x - 0.1 + 1e-4 * i as f64).collect();
        assert_eq!(paired_ttest(&a, &noisy, 0.05).unwrap().outcome, Significance::Distinguishable);
    }

    #[test]
    fn table_example() {
        let d = [0.02, -0.01, 0.03, 0.00, 0.01, 0.02, -0.02, 0.01, 0.00, 0.02];
        let zeros = [0.0; 10];
        let r = paired_ttest(&d, &zeros, 0.05).unwrap();
        // mean 0.008, sd 0.01549, t = 0.008 / (0.01549 / √10)
        let mean = 0.008;
        let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 9.0).sqrt();
        assert_abs_diff_eq!(r.t, mean / (sd / 10f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(r.t, 1.63, epsilon = 0.01);
        assert_abs_diff_eq!(r.critical, 2.262, epsilon = 1e-3);
        assert_eq!(r.outcome, Significance::Indistinguishable);
    }

    #[test]
    fn bad_inputs() {
        assert!(paired_ttest(&[1.0], &[1.0], 0.05).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[1.0], 0.05).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[1.0, 2.0], 1.5).is_err());
    }
}

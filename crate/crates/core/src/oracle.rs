//! Exact inner maximization: the adversary's best labeling for fixed
//! predictions.
//!
//! For learned probabilities `p` the adversary solves the linear program
//!
//! ```text
//! max_{y ∈ [0,1]^n}  err(p, y)   s.t.  err(q_i, y) ≤ b_i  for every weak signal i
//! ```
//!
//! whose optimal value is the primal objective `g`. This is the reference
//! path used by tests and diagnostics; training never waits on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{expected_error, LabelDistribution, WeakSignalSet};
use crate::lp::{maximize, LpOutcome};

/// Optimality slack allowed when restricting to the optimal face for tie-breaking.
const FACE_TOLERANCE: f64 = 1e-10;
const SNAP_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    /// Maximizing labeling; all zeros when infeasible.
    pub labels: LabelDistribution,
    /// Maximized expected error; NaN when infeasible.
    pub value: f64,
    pub status: OracleStatus,
}

impl OracleResult {
    pub fn is_optimal(&self) -> bool {
        self.status == OracleStatus::Optimal
    }
}

/// Constraint rows `(1 − 2q_i)ᵀ y ≤ n·b_i − Σq_i` followed by the box `y ≤ 1`.
fn constraint_rows(ws: &WeakSignalSet, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::with_capacity(ws.len() + n);
    let mut rhs = Vec::with_capacity(ws.len() + n);
    for (q, b) in ws.iter() {
        rows.push(q.iter().map(|qj| 1.0 - 2.0 * qj).collect());
        rhs.push(n as f64 * b - q.iter().sum::<f64>());
    }
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        rows.push(r);
        rhs.push(1.0);
    }
    (rows, rhs)
}

/// Solves the adversarial labeling LP exactly.
///
/// Among optimal labelings the lexicographically smallest is returned, which
/// is a vertex of the feasible polytope.
pub fn solve_exact(p: &LabelDistribution, ws: &WeakSignalSet) -> Result<OracleResult> {
    let n = p.len();
    if n == 0 {
        return Err(Error::Empty("prediction vector"));
    }
    ws.check_examples(n)?;

    // err(p, y) = Σp/n + Σ_j y_j (1 − 2p_j)/n
    let objective: Vec<f64> = p.iter().map(|pj| (1.0 - 2.0 * pj) / n as f64).collect();
    let (mut rows, mut rhs) = constraint_rows(ws, n);

    let best = match maximize(&objective, &rows, &rhs) {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible => {
            return Ok(OracleResult {
                labels: LabelDistribution::constant(n, 0.0),
                value: f64::NAN,
                status: OracleStatus::Infeasible,
            })
        }
        LpOutcome::Unbounded => unreachable!("objective over a box cannot be unbounded"),
    };

    // Lexicographic descent over the optimal face.
    rows.push(objective.iter().map(|c| -c).collect());
    rhs.push(-(best - FACE_TOLERANCE));
    let mut labels = vec![0.0; n];
    for k in 0..n {
        let mut c = vec![0.0; n];
        c[k] = -1.0;
        match maximize(&c, &rows, &rhs) {
            LpOutcome::Optimal { x, .. } => {
                let mut fix = vec![0.0; n];
                fix[k] = 1.0;
                rows.push(fix);
                rhs.push(x[k] + FACE_TOLERANCE);
                labels = x;
            }
            // The face is non-empty, so only numerical trouble lands here.
            _ => {
                return Err(Error::Training(
                    "tie-breaking over the optimal face lost feasibility".into(),
                ))
            }
        }
    }

    // Polish tolerance residue off coordinates that sit on the box.
    for y in labels.iter_mut() {
        if *y < SNAP_TOLERANCE {
            *y = 0.0;
        } else if *y > 1.0 - SNAP_TOLERANCE {
            *y = 1.0;
        }
    }
    let labels = LabelDistribution::clipped(labels);
    let value = expected_error(p, &labels)?;
    Ok(OracleResult {
        labels,
        value,
        status: OracleStatus::Optimal,
    })
}

/// The primal objective `g` at the given predictions.
pub fn primal_value(p: &LabelDistribution, ws: &WeakSignalSet) -> Result<f64> {
    let result = solve_exact(p, ws)?;
    match result.status {
        OracleStatus::Optimal => Ok(result.value),
        OracleStatus::Infeasible => Err(Error::Infeasible(
            "no labeling satisfies every weak-signal bound".into(),
        )),
    }
}

/// Optimal multipliers of the weak-signal constraints, one per signal, or
/// `None` when the bounds are infeasible.
///
/// They are on the scale of the unnormalized constraint
/// `h_i(y) = Σq_i + (1 − 2q_i)ᵀy − n·b_i`, so that `err(p, y) − Σ γ_i h_i(y)`
/// is maximized over the box by every optimal labeling. Found from the dual
/// program `min bᵀu + 1ᵀv  s.t.  Aᵀu + v ≥ c, u, v ≥ 0`.
pub fn optimal_multipliers(p: &LabelDistribution, ws: &WeakSignalSet) -> Result<Option<Vec<f64>>> {
    let n = p.len();
    if n == 0 {
        return Err(Error::Empty("prediction vector"));
    }
    ws.check_examples(n)?;
    let (rows, rhs) = constraint_rows(ws, n);
    let objective: Vec<f64> = rhs.iter().map(|b| -b).collect();
    let dual_rows: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| -r[j]).collect()).collect();
    let dual_rhs: Vec<f64> = p.iter().map(|pj| -(1.0 - 2.0 * pj) / n as f64).collect();
    match maximize(&objective, &dual_rows, &dual_rhs) {
        LpOutcome::Optimal { x, .. } => Ok(Some(x[..ws.len()].to_vec())),
        // An infeasible primal leaves the dual unbounded.
        _ => Ok(None),
    }
}

/// Whether any labeling in `[0,1]^n` satisfies every bound.
pub fn is_feasible(ws: &WeakSignalSet) -> Result<bool> {
    let n = ws.n_examples().ok_or(Error::Empty("weak-signal set"))?;
    let (rows, rhs) = constraint_rows(ws, n);
    Ok(!matches!(
        maximize(&vec![0.0; n], &rows, &rhs),
        LpOutcome::Infeasible
    ))
}

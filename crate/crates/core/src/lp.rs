//! Dense two-phase tableau simplex for small problems of the form
//! `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with right-hand sides of either sign.
//!
//! Bland's rule is used throughout, so the method terminates on degenerate
//! problems at the cost of extra pivots. Intended for a few dozen rows.

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    objective: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may never enter the basis.
    blocked: Vec<bool>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.objective.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.objective[col];
        if f != 0.0 {
            for (v, pv) in self.objective.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on the current objective row; `false` when unbounded.
    fn optimize(&mut self) -> bool {
        let rhs = self.rhs();
        loop {
            let entering = (0..rhs).find(|&j| !self.blocked[j] && self.objective[j] < -PIVOT_EPS);
            let Some(col) = entering else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, r) in self.rows.iter().enumerate() {
                if r[col] > PIVOT_EPS {
                    let ratio = r[rhs] / r[col];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let n_art = b.iter().filter(|&&v| v < 0.0).count();
    let width = n + m + n_art + 1;
    let rhs = width - 1;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for (i, (ai, &bi)) in a.iter().zip(b).enumerate() {
        let mut r = vec![0.0; width];
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in ai.iter().enumerate() {
            r[j] = sign * v;
        }
        r[n + i] = sign;
        r[rhs] = sign * bi;
        if bi < 0.0 {
            r[art] = 1.0;
            basis.push(art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(r);
    }

    let mut t = Tableau {
        rows,
        objective: vec![0.0; width],
        basis,
        blocked: vec![false; width],
    };

    if n_art > 0 {
        // Phase 1: maximize −Σ artificials.
        for j in n + m..rhs {
            t.objective[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= n + m {
                let r = t.rows[i].clone();
                for (v, rv) in t.objective.iter_mut().zip(&r) {
                    *v -= rv;
                }
            }
        }
        t.optimize();
        if t.objective[rhs] < -FEAS_EPS {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n + m {
                match (0..n + m).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in n + m..rhs {
            t.blocked[j] = true;
        }
    }

    // Phase 2.
    t.objective = vec![0.0; width];
    for (j, &cj) in c.iter().enumerate() {
        t.objective[j] = -cj;
    }
    for i in 0..t.rows.len() {
        let f = t.objective[t.basis[i]];
        if f != 0.0 {
            let r = t.rows[i].clone();
            for (v, rv) in t.objective.iter_mut().zip(&r) {
                *v -= f * rv;
            }
        }
    }
    if !t.optimize() {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][rhs].max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

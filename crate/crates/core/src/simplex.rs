//! Dense two-phase simplex for small equality-form linear programs.
//!
//! Solves `maximize c·x  s.t.  A x = b, x ≥ 0`. Entering variables follow Dantzig's rule
//! until a run of degenerate pivots, then Bland's rule, which cannot cycle; the polytope
//! programs solved here are highly degenerate.

use crate::linalg::Matrix;

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;
/// Consecutive degenerate pivots after which the entering rule switches from Dantzig to Bland.
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
    /// Pivot limit hit; should not happen once Bland's rule is active.
    Stalled,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        for row in self.rows.iter_mut() {
            let rhs = &mut row[self.width];
            // round-off below zero would break feasibility of the basis
            if *rhs < 0.0 && *rhs > -PIVOT_TOL {
                *rhs = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs primal simplex for `cost` over the columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), LpOutcome> {
        let mut degenerate_streak = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate_streak > BLAND_AFTER;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| cost[b] * row[j])
                        .sum::<f64>();
                if reduced > PIVOT_TOL && entering.is_none_or(|(_, best)| reduced > best) {
                    entering = Some((j, reduced));
                    if bland {
                        break;
                    }
                }
            }
            let entering = entering.map(|(j, _)| j);
            let Some(c) = entering else {
                return Ok(());
            };
            // exact minimum ratio; near-ties go to the smallest basic index (Bland)
            let candidates: Vec<(usize, f64)> = (0..self.rows.len())
                .filter(|&i| self.rows[i][c] > PIVOT_TOL)
                .map(|i| (i, self.rhs(i) / self.rows[i][c]))
                .collect();
            let Some(min) = candidates.iter().map(|&(_, q)| q).reduce(f64::min) else {
                return Err(LpOutcome::Unbounded);
            };
            let tie = RATIO_TIE * (1.0 + min.abs());
            let (r, _) = candidates
                .into_iter()
                .filter(|&(_, q)| q <= min + tie)
                .min_by_key(|&(i, _)| self.basis[i])
                .expect("the minimum is a candidate");
            if min <= PIVOT_TOL {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, c);
        }
        Err(LpOutcome::Stalled)
    }
}

/// Maximizes `c·x` subject to `A x = b`, `x ≥ 0`.
pub fn maximize(a: &Matrix, b: &[f64], c: &[f64]) -> LpOutcome {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);

    // columns: n structural, m artificial, then rhs
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = 1.0;
        row[width] = sign * b[i];
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        width,
    };

    let mut phase1 = vec![0.0; width];
    for x in phase1.iter_mut().skip(n) {
        *x = -1.0;
    }
    if let Err(e) = t.optimize(&phase1, width) {
        return e;
    }
    let infeasibility: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n)
        .map(|(i, _)| t.rhs(i))
        .sum();
    if infeasibility > PIVOT_TOL {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(c);
    if let Err(e) = t.optimize(&phase2, n) {
        return e;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let value = x.iter().zip(c).map(|(x, c)| x * c).sum();
    LpOutcome::Optimal { value, x }
}

/// Whether `A x = b, x ≥ 0` has a solution.
pub fn is_feasible(a: &Matrix, b: &[f64]) -> bool {
    matches!(
        maximize(a, b, &vec![0.0; a.cols()]),
        LpOutcome::Optimal { .. }
    )
}

//! Exact phase-one simplex for `A x = b, x >= 0`.
//!
//! Dense tableau over arbitrary-precision rationals with Bland's rule, so it
//! terminates on degenerate problems. The outcome is either a feasible point
//! or a Farkas vector `y` with `yᵀA <= 0` componentwise and `yᵀb > 0`, which
//! proves that no nonnegative solution exists.

use num_traits::{One, Signed, Zero};

use crate::rational::Prob;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// A nonnegative solution of `A x = b`.
    Feasible(Vec<Prob>),
    /// Row multipliers `y` with `yᵀA <= 0` and `yᵀb > 0`.
    Infeasible(Vec<Prob>),
}

struct Tableau {
    rows: Vec<Vec<Prob>>,
    rhs: Vec<Prob>,
    /// Reduced costs of the phase-one objective, one per column.
    cost: Vec<Prob>,
    objective: Prob,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = Prob::one() / &self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[row] *= &inv;

        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        let eliminate = |target: &mut [Prob], target_rhs: &mut Prob, factor: &Prob| {
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *t -= factor * p;
                }
            }
            *target_rhs -= factor * &pivot_rhs;
        };
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            let (r, b) = (&mut self.rows[i], &mut self.rhs[i]);
            eliminate(r, b, &factor);
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            // The objective row's right-hand side holds -z.
            for (t, p) in self.cost.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *t -= &factor * p;
                }
            }
            self.objective += &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }
}

/// Decides whether `A x = b` has a solution with `x >= 0`.
///
/// `a` is row-major with every row of equal length. Redundant rows are fine;
/// their artificial variables stay basic at level zero.
pub fn solve_feasibility(a: &[Vec<Prob>], b: &[Prob]) -> Feasibility {
    assert_eq!(a.len(), b.len(), "one right-hand side per row");
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    assert!(a.iter().all(|r| r.len() == n), "ragged constraint matrix");

    // Flip rows so that b >= 0; the artificial basis is then feasible.
    let signs: Vec<bool> = b.iter().map(|v| v.is_negative()).collect();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<Prob> = if signs[i] { a[i].iter().map(|v| -v).collect() } else { a[i].clone() };
        row.extend((0..m).map(|k| if k == i { Prob::one() } else { Prob::zero() }));
        rows.push(row);
        rhs.push(if signs[i] { -&b[i] } else { b[i].clone() });
    }

    // Phase-one objective: minimize the sum of artificials.
    let mut cost = vec![Prob::zero(); n + m];
    for (j, c) in cost.iter_mut().enumerate().take(n) {
        *c = -rows.iter().map(|r| &r[j]).sum::<Prob>();
    }
    let objective: Prob = rhs.iter().sum();

    let mut t = Tableau { rows, rhs, cost, objective, basis: (n..n + m).collect() };

    // Bland: lowest-index improving column, ties in the ratio test broken by
    // lowest basic variable index.
    while let Some(col) = t.cost.iter().position(|d| d.is_negative()) {
        let mut best: Option<(usize, Prob)> = None;
        for i in 0..m {
            let coef = &t.rows[i][col];
            if !coef.is_positive() {
                continue;
            }
            let ratio = &t.rhs[i] / coef;
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && t.basis[i] < t.basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        // The phase-one objective is bounded below by zero, so an improving
        // column always has a positive entry.
        let (row, _) = best.expect("phase-one problem is bounded");
        t.pivot(row, col);
    }

    if t.objective.is_zero() {
        let mut x = vec![Prob::zero(); n];
        for (i, &var) in t.basis.iter().enumerate() {
            if var < n {
                x[var] = t.rhs[i].clone();
            }
        }
        Feasibility::Feasible(x)
    } else {
        // Reduced cost of artificial i is 1 - y_i.
        let y = (0..m)
            .map(|i| {
                let yi = Prob::one() - &t.cost[n + i];
                if signs[i] { -yi } else { yi }
            })
            .collect();
        Feasibility::Infeasible(y)
    }
}

/// `Σ_i y_i A_i` and `Σ_i y_i b_i`.
pub fn combine(a: &[Vec<Prob>], b: &[Prob], y: &[Prob]) -> (Vec<Prob>, Prob) {
    let n = a.first().map_or(0, Vec::len);
    let mut combo = vec![Prob::zero(); n];
    let mut rhs = Prob::zero();
    for ((row, bi), yi) in a.iter().zip(b).zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (c, v) in combo.iter_mut().zip(row) {
            if !v.is_zero() {
                *c += yi * v;
            }
        }
        rhs += yi * bi;
    }
    (combo, rhs)
}

/// Checks that `y` is a Farkas certificate for `A x = b, x >= 0`.
pub fn is_farkas_certificate(a: &[Vec<Prob>], b: &[Prob], y: &[Prob]) -> bool {
    let (combo, rhs) = combine(a, b, y);
    combo.iter().all(|v| !v.is_positive()) && rhs.is_positive()
}

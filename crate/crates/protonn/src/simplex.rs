//! A small dense simplex solver for the bisector-witness linear programs.
//!
//! Solves `maximize c.z  subject to  A z <= b, z >= 0` with `b >= 0`
//! componentwise, so the slack basis is feasible and no phase-1 is needed.
//! Callers arrange their problem into this form (the adjacency tests shift
//! the objective variable to make every right-hand side positive). Bland's
//! rule guarantees termination without cycling; problems here are tiny, so
//! its slower pivoting does not matter.

/// Pivot tolerance: entries smaller than this are treated as zero.
const EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpError {
    IterationLimit,
    Unbounded,
}

/// Returns `(objective value, primal solution)` for the standard-form LP.
pub(crate) fn maximize(
    objective: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    max_iter: usize,
) -> Result<(f64, Vec<f64>), LpError> {
    let m = rows.len();
    let n = objective.len();
    debug_assert_eq!(rhs.len(), m);
    debug_assert!(rhs.iter().all(|&b| b >= 0.0));

    // Tableau columns: n structural + m slack. Row basis starts at the slacks.
    let width = n + m;
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let mut r = vec![0.0; width + 1];
        r[..n].copy_from_slice(row);
        r[n + i] = 1.0;
        r[width] = rhs[i];
        tab.push(r);
    }
    let mut basis: Vec<usize> = (n..width).collect();
    // Reduced-cost row (for maximization, pick entering with positive cost).
    let mut cost = vec![0.0; width + 1];
    cost[..n].copy_from_slice(objective);

    for _ in 0..max_iter {
        // Bland: smallest-index column with positive reduced cost.
        let Some(enter) = (0..width).find(|&j| cost[j] > EPS) else {
            let mut solution = vec![0.0; n];
            for (i, &b) in basis.iter().enumerate() {
                if b < n {
                    solution[b] = tab[i][width];
                }
            }
            return Ok((-cost[width], solution));
        };
        // Ratio test; ties broken by smallest basis variable index (Bland).
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (i, row) in tab.iter().enumerate() {
            if row[enter] > EPS {
                let ratio = row[width] / row[enter];
                let better = ratio < best_ratio - EPS
                    || (ratio < best_ratio + EPS
                        && leave.map_or(true, |l| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(LpError::Unbounded);
        };

        // Pivot on (leave, enter).
        let pivot = tab[leave][enter];
        for v in tab[leave].iter_mut() {
            *v /= pivot;
        }
        for i in 0..m {
            if i != leave {
                let factor = tab[i][enter];
                if factor != 0.0 {
                    let (pivot_row, row) = if i < leave {
                        let (a, b) = tab.split_at_mut(leave);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = tab.split_at_mut(i);
                        (&a[leave], &mut b[0])
                    };
                    for (rv, pv) in row.iter_mut().zip(pivot_row.iter()) {
                        *rv -= factor * pv;
                    }
                }
            }
        }
        let factor = cost[enter];
        if factor != 0.0 {
            for (cv, pv) in cost.iter_mut().zip(tab[leave].iter()) {
                *cv -= factor * pv;
            }
        }
        basis[leave] = enter;
    }
    Err(LpError::IterationLimit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_box() {
        // max x + y st x <= 1, y <= 2
        let (v, z) = maximize(
            &[1.0, 1.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 2.0],
            100,
        )
        .unwrap();
        assert!((v - 3.0).abs() < 1e-9);
        assert!((z[0] - 1.0).abs() < 1e-9);
        assert!((z[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn shared_constraint() {
        // max 2x + 3y st x + y <= 4, x <= 2  -> x=0, y=4, v=12
        let (v, z) = maximize(
            &[2.0, 3.0],
            &[vec![1.0, 1.0], vec![1.0, 0.0]],
            &[4.0, 2.0],
            100,
        )
        .unwrap();
        assert!((v - 12.0).abs() < 1e-9);
        assert!(z[0].abs() < 1e-9);
        assert!((z[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        // max x with no constraint touching x.
        let r = maximize(&[1.0, 0.0], &[vec![0.0, 1.0]], &[1.0], 100);
        assert_eq!(r.unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn degenerate_terminates() {
        // Degenerate vertex; Bland must still terminate.
        let (v, _) = maximize(
            &[1.0, 1.0, 0.0],
            &[
                vec![1.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
            ],
            &[0.0, 0.0, 1.0],
            1000,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_objective() {
        let (v, _) = maximize(&[0.0], &[vec![1.0]], &[5.0], 10).unwrap();
        assert_eq!(v, 0.0);
    }
}

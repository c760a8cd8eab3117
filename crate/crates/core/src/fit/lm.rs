//! Levenberg-Marquardt with box projection.
//!
//! Damping starts at 1e-3, grows 10x on a rejected step and shrinks 10x on
//! an accepted one. The normal equations use Marquardt's diagonal scaling,
//! `(J'J + lambda * diag(J'J)) delta = -J'r`, with the diagonal floored to
//! keep the system solvable when a parameter has no local influence.

use super::{FitProblem, OptimOutcome};

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e10;
const LAMBDA_MIN: f64 = 1e-12;
const DIAG_FLOOR: f64 = 1e-12;

pub(crate) fn run_lm(
    problem: &FitProblem,
    init: Vec<f64>,
    max_iterations: usize,
    convergence_tol: f64,
) -> Result<OptimOutcome, String> {
    let mut params = init;
    problem.bounds().project(&mut params);
    let mut rss = problem
        .rss(&params)
        .map_err(|e| format!("initial evaluation failed: {e}"))?;
    if !rss.is_finite() {
        return Err(format!("initial residual sum of squares is {rss}"));
    }

    let p = params.len();
    let mut lambda = LAMBDA_INIT;
    let mut converged = false;
    let mut iterations = 0;
    let mut accepted_steps = 0;
    // (J'J, J'r), rebuilt only after an accepted step moves the parameters.
    let mut normal: Option<(Vec<Vec<f64>>, Vec<f64>)> = None;

    for iter in 1..=max_iterations {
        iterations = iter;
        if normal.is_none() {
            let (residuals, jacobian) = problem
                .residuals_jacobian(&params)
                .map_err(|e| format!("gradient evaluation failed: {e}"))?;
            let mut jtj = vec![vec![0.0; p]; p];
            let mut jtr = vec![0.0; p];
            for (row, &r) in jacobian.iter().zip(&residuals) {
                for j in 0..p {
                    jtr[j] += row[j] * r;
                    for k in j..p {
                        jtj[j][k] += row[j] * row[k];
                    }
                }
            }
            for j in 0..p {
                for k in 0..j {
                    jtj[j][k] = jtj[k][j];
                }
            }
            normal = Some((jtj, jtr));
        }
        let (jtj, jtr) = normal.as_ref().expect("populated above");

        let mut augmented = jtj.clone();
        for j in 0..p {
            augmented[j][j] += lambda * jtj[j][j].max(DIAG_FLOOR);
        }
        let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();

        let step = solve_linear(augmented, rhs);
        let trial = step.map(|delta| {
            let mut t: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p + d).collect();
            problem.bounds().project(&mut t);
            t
        });
        let trial_rss = trial
            .as_ref()
            .and_then(|t| problem.rss(t).ok())
            .filter(|r| r.is_finite());

        match (trial, trial_rss) {
            (Some(t), Some(t_rss)) if t_rss <= rss => {
                let rel_change = (rss - t_rss) / rss.max(f64::MIN_POSITIVE);
                params = t;
                rss = t_rss;
                accepted_steps += 1;
                lambda = (lambda * 0.1).max(LAMBDA_MIN);
                normal = None;
                if rel_change < convergence_tol {
                    converged = true;
                    break;
                }
            }
            _ => {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    break;
                }
            }
        }
    }

    Ok(OptimOutcome {
        params,
        rss,
        converged,
        iterations,
        accepted_steps,
    })
}

/// Gaussian elimination with partial pivoting; the systems here are at most
/// 4x4. Returns `None` when effectively singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_known_systems() {
        // 2x + y = 5, x - y = 1 => x = 2, y = 1.
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, -1.0]], vec![5.0, 1.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);

        let a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ];
        let b = vec![6.0, 10.0, 7.0];
        let x = solve_linear(a.clone(), b.clone()).unwrap();
        for (row, want) in a.iter().zip(&b) {
            let got: f64 = row.iter().zip(&x).map(|(c, v)| c * v).sum();
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_linear(a, vec![1.0, 2.0]).is_none());
    }
}

//! Full-batch Adam on the weighted RSS, with box projection after each step.

use super::{FitProblem, OptimOutcome};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// Runs Adam and returns the best iterate seen (including the
/// initialization), so requesting zero iterations is a no-op and the
/// best-so-far loss envelope is non-increasing by construction.
pub(crate) fn run_adam(
    problem: &FitProblem,
    init: Vec<f64>,
    max_iterations: usize,
    learning_rate: f64,
    convergence_tol: f64,
) -> Result<OptimOutcome, String> {
    let mut params = init;
    problem.bounds().project(&mut params);
    let mut loss = problem
        .rss(&params)
        .map_err(|e| format!("initial evaluation failed: {e}"))?;
    if !loss.is_finite() {
        return Err(format!("initial loss is {loss}"));
    }

    let p = params.len();
    let mut best_params = params.clone();
    let mut best_loss = loss;
    let mut first_moment = vec![0.0; p];
    let mut second_moment = vec![0.0; p];
    let mut converged = false;
    let mut iterations = 0;
    let mut improvements = 0;

    for t in 1..=max_iterations {
        iterations = t;
        let grad = problem
            .loss_gradient(&params)
            .map_err(|e| format!("gradient evaluation failed at iteration {t}: {e}"))?;

        let bias1 = 1.0 - BETA1.powi(t as i32);
        let bias2 = 1.0 - BETA2.powi(t as i32);
        for j in 0..p {
            first_moment[j] = BETA1 * first_moment[j] + (1.0 - BETA1) * grad[j];
            second_moment[j] = BETA2 * second_moment[j] + (1.0 - BETA2) * grad[j] * grad[j];
            let m_hat = first_moment[j] / bias1;
            let v_hat = second_moment[j] / bias2;
            params[j] -= learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
        }
        problem.bounds().project(&mut params);

        let prev_loss = loss;
        loss = problem
            .rss(&params)
            .map_err(|e| format!("evaluation failed at iteration {t}: {e}"))?;
        if !loss.is_finite() {
            return Err(format!("non-finite loss at iteration {t}"));
        }
        if loss < best_loss {
            best_loss = loss;
            best_params = params.clone();
            improvements += 1;
        }
        if (prev_loss - loss).abs() / prev_loss.max(f64::MIN_POSITIVE) < convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(OptimOutcome {
        params: best_params,
        rss: best_loss,
        converged,
        iterations,
        accepted_steps: improvements,
    })
}

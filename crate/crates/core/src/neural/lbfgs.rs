//! Limited-memory BFGS with backtracking (Armijo) line search, and a plain
//! fixed-step gradient descent fallback.

use std::collections::VecDeque;

use super::NeuralError;

/// Armijo sufficient-decrease constant.
const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK_SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 40;
/// Curvature pairs with `s·y` below this are skipped.
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeSettings {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub history_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Objective value after every accepted iterate, starting with `x0`.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H g` for the implicit inverse Hessian `H`.
fn search_direction(grad: &[f64], history: &VecDeque<CurvaturePair>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        q.iter_mut().zip(&pair.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for (pair, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        q.iter_mut().zip(&pair.s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Minimizes `objective`, which writes the gradient into its second argument
/// and returns the function value.
pub fn lbfgs<F>(x0: Vec<f64>, mut objective: F, settings: &MinimizeSettings) -> Result<Minimum, NeuralError>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = objective(&x, &mut grad);
    if !value.is_finite() {
        return Err(NeuralError::Diverged);
    }
    let mut trace = vec![value];
    let mut history: VecDeque<CurvaturePair> = VecDeque::with_capacity(settings.history_size);
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut iterations = 0;

    while iterations < settings.max_iterations && norm(&grad) >= settings.gradient_tolerance {
        let mut direction = search_direction(&grad, &history);
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        // First step (no curvature yet) is scaled to unit length.
        let mut step = if history.is_empty() {
            (1.0 / norm(&grad)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = x[i] + step * direction[i];
            }
            let v = objective(&trial, &mut trial_grad);
            if v.is_finite() && v <= value + ARMIJO_C1 * step * slope {
                accepted = Some(v);
                break;
            }
            step *= BACKTRACK_SHRINK;
        }
        let Some(new_value) = accepted else {
            if history.is_empty() {
                // Steepest descent cannot make progress at working precision.
                break;
            }
            history.clear();
            continue;
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > MIN_CURVATURE {
            if history.len() == settings.history_size {
                history.pop_front();
            }
            if settings.history_size > 0 {
                history.push_back(CurvaturePair { s, y, rho: 1.0 / sy });
            }
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        value = new_value;
        trace.push(value);
        iterations += 1;
    }

    Ok(Minimum {
        gradient_norm: norm(&grad),
        x,
        value,
        iterations,
        trace,
    })
}

/// Fixed-step full-batch gradient descent.
pub fn gradient_descent<F>(
    x0: Vec<f64>,
    mut objective: F,
    step: f64,
    settings: &MinimizeSettings,
) -> Result<Minimum, NeuralError>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut x = x0;
    let mut grad = vec![0.0; x.len()];
    let mut value = objective(&x, &mut grad);
    let mut trace = vec![value];
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        if !value.is_finite() {
            return Err(NeuralError::Diverged);
        }
        if norm(&grad) < settings.gradient_tolerance {
            break;
        }
        x.iter_mut().zip(&grad).for_each(|(xi, gi)| *xi -= step * gi);
        value = objective(&x, &mut grad);
        trace.push(value);
        iterations += 1;
    }
    if !value.is_finite() {
        return Err(NeuralError::Diverged);
    }
    Ok(Minimum {
        gradient_norm: norm(&grad),
        x,
        value,
        iterations,
        trace,
    })
}

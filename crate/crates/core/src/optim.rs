//! Quasi-Newton (BFGS) ascent with a backtracking line search.
//!
//! The objective callback returns `None` wherever the function is undefined
//! or non-finite; the line search treats that as "step too long" and
//! backtracks, so likelihood domain walls need no special casing upstream.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OptimOptions {
    /// Convergence when the gradient infinity norm drops below this.
    pub grad_tol: f64,
    /// Convergence when the relative objective improvement drops below this.
    pub f_tol: f64,
    pub max_iter: usize,
    /// Maximum step halvings per line search.
    pub max_halvings: usize,
    /// Relative step for the central-difference Hessian.
    pub hessian_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            grad_tol: 1e-6,
            f_tol: 1e-10,
            max_iter: 1000,
            max_halvings: 60,
            hessian_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;

/// Maximize `eval`, which returns `(value, gradient)` or `None` outside the
/// objective's domain. Errors only if the starting point is infeasible.
pub fn maximize<F>(mut eval: F, x0: DVector<f64>, opts: &OptimOptions) -> Result<OptimOutcome>
where
    F: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let n = x0.len();
    let (mut f, mut g) = eval(&x0).ok_or_else(|| {
        Error::NonFiniteLikelihood("objective is not finite at the starting point".into())
    })?;
    let mut x = x0;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = false;

    'outer: for iter in 1..=opts.max_iter {
        iterations = iter;
        if g.amax() < opts.grad_tol {
            converged = true;
            iterations = iter - 1;
            break;
        }

        let mut reset_used = false;
        let (x_new, f_new, g_new) = loop {
            let mut d = &h * &g;
            let mut gtd = g.dot(&d);
            if !(gtd > 0.0) || !gtd.is_finite() {
                // approximation lost positive definiteness; fall back to steepest ascent
                h = DMatrix::identity(n, n);
                d = g.clone();
                gtd = g.dot(&d);
                if !(gtd > 0.0) {
                    break 'outer;
                }
            }

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..opts.max_halvings {
                let cand = &x + &d * step;
                if let Some((fc, gc)) = eval(&cand) {
                    if fc >= f + ARMIJO_C1 * step * gtd {
                        accepted = Some((cand, fc, gc));
                        break;
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some(t) => break t,
                None if !reset_used => {
                    // retry once from a fresh steepest-ascent direction
                    reset_used = true;
                    h = DMatrix::identity(n, n);
                }
                None => break 'outer,
            }
        };

        let s = &x_new - &x;
        let y = &g - &g_new; // sign flipped: ascent on a (locally) concave objective
        let sty = s.dot(&y);
        if sty > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sty;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            let sy_h = &s * hy.transpose();
            h = &h - (&sy_h + sy_h.transpose()) * rho + (&s * s.transpose()) * (rho * rho * yhy + rho);
        }

        let improvement = (f_new - f).abs() / (1.0 + f_new.abs());
        x = x_new;
        f = f_new;
        g = g_new;
        if improvement < opts.f_tol {
            converged = true;
            break;
        }
    }

    if g.amax() < opts.grad_tol {
        converged = true;
    }
    Ok(OptimOutcome {
        gradient_norm: g.amax(),
        x,
        value: f,
        iterations,
        converged,
    })
}

/// Central-difference Hessian of a gradient callback, symmetrized. Returns
/// `None` if any evaluation leaves the domain.
pub fn numerical_hessian<G>(
    mut grad: G,
    x: &DVector<f64>,
    rel_step: f64,
) -> Option<DMatrix<f64>>
where
    G: FnMut(&DVector<f64>) -> Option<DVector<f64>>,
{
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = rel_step * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += step;
        xm[j] -= step;
        let gp = grad(&xp)?;
        let gm = grad(&xm)?;
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    Some((&h + h.transpose()) * 0.5)
}

//! Per-step minimization: projected gradient descent with Armijo backtracking.
//!
//! Directions are preconditioned by `(σ - Δ)^{-1}` with `σ` taken from the
//! functional's kinetic Hessian at the warm start, which makes the iteration
//! count insensitive to the grid size. Trial steps come from the
//! Barzilai-Borwein formula in that metric; the Armijo test uses the
//! functional's cancellation-free `value_change`, so descent is still
//! detectable when the gradient is near the tolerance.

use crate::error::{Error, Result};
use crate::functionals::StepFunctional;
use crate::geometry::Field;

/// Steps shorter than this count as a line-search failure.
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Bound on the quadrature-weighted L² norm of the projected gradient.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub initial_step: f64,
    /// Largest nodal change allowed in one iteration.
    pub max_displacement: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-9,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            max_displacement: 1.0,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", format!("{} must be positive", self.grad_tol)));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::param("armijo_c", format!("{} is not in (0, 1)", self.armijo_c)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::param(
                "backtrack_factor",
                format!("{} is not in (0, 1)", self.backtrack_factor),
            ));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::param("initial_step", "must be positive"));
        }
        if !(self.max_displacement > 0.0) {
            return Err(Error::param("max_displacement", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed { step: f64, grad_norm: f64 },
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub minimizer: Field,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub el_residual: f64,
    pub converged: bool,
    pub termination: Termination,
}

impl StepResult {
    pub fn diagnostics(&self) -> String {
        match &self.termination {
            Termination::Converged => format!("converged in {} iterations", self.iterations),
            Termination::MaxIterations => format!(
                "iteration limit {} reached with gradient norm {:e}",
                self.iterations, self.grad_norm
            ),
            Termination::LineSearchFailed { step, grad_norm } => format!(
                "line search underflow (step {step:e}) after {} iterations, gradient norm {grad_norm:e}",
                self.iterations
            ),
        }
    }
}

pub fn minimize<F: StepFunctional + ?Sized>(f: &F, warm_start: &Field, options: &MinimizeOptions) -> Result<StepResult> {
    minimize_observed(f, warm_start, options, |_, _, _| {})
}

/// Like [`minimize`], calling `observe(iteration, iterate, value)` on the warm
/// start and after every accepted step.
pub fn minimize_observed<F, O>(f: &F, warm_start: &Field, options: &MinimizeOptions, mut observe: O) -> Result<StepResult>
where
    F: StepFunctional + ?Sized,
    O: FnMut(usize, &[f64], f64),
{
    options.validate()?;
    f.check_field(warm_start)?;

    let mut u = warm_start.values().to_vec();
    let mut value = f.value(&u);
    let mut g = f.gradient(&u);
    let mut gnorm = f.norm(&g);
    observe(0, &u, value);

    let shift = f.metric_shift(&u);
    let mut z = f.precondition(shift, &g);
    let mut step = options.initial_step;
    let mut iterations = 0;

    let termination = loop {
        if gnorm <= options.grad_tol {
            break Termination::Converged;
        }
        if iterations >= options.max_iters {
            break Termination::MaxIterations;
        }
        let mut d: Vec<f64> = z.iter().map(|x| -x).collect();
        let mut slope = f.inner(&g, &d);
        if !(slope < 0.0) {
            // preconditioner lost descent to roundoff; fall back to the gradient
            d = g.iter().map(|x| -x).collect();
            slope = -gnorm * gnorm;
        }
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut t = step.min(options.max_displacement / dmax);
        let accepted = loop {
            let change = f.value_change(&u, &d, t);
            if change.is_finite() && change <= options.armijo_c * t * slope {
                break Some(change);
            }
            t *= options.backtrack_factor;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some(change) = accepted else {
            break Termination::LineSearchFailed { step: t, grad_norm: gnorm };
        };

        let mut next: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
        f.restore(&mut next);
        let g_next = f.gradient(&next);
        let z_next = f.precondition(shift, &g_next);

        // Barzilai-Borwein step in the preconditioned metric
        let s: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let py: Vec<f64> = z_next.iter().zip(&z).map(|(a, b)| a - b).collect();
        let sy = f.inner(&s, &y);
        let ypy = f.inner(&y, &py);
        step = if sy > 0.0 && ypy > 0.0 {
            (sy / ypy).clamp(1e-6, 1e6)
        } else {
            options.initial_step
        };

        u = next;
        value += change;
        g = g_next;
        z = z_next;
        gnorm = f.norm(&g);
        iterations += 1;
        observe(iterations, &u, value);
    };

    let converged = termination == Termination::Converged;
    Ok(StepResult {
        value: f.value(&u),
        grad_norm: gnorm,
        iterations,
        el_residual: f.el_residual(&u),
        converged,
        termination,
        minimizer: Field::from_raw(warm_start.grid_id(), u),
    })
}

/// Max-norm of the discrete Euler-Lagrange equation at `u`.
pub fn el_residual<F: StepFunctional + ?Sized>(f: &F, u: &Field) -> Result<f64> {
    f.el_residual_of(u)
}

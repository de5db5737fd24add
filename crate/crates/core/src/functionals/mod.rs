//! Per-step variational functionals.
//!
//! Each time step of the flow minimizes one of these. All of them are
//! `kinetic + potential`, where the kinetic part penalizes the distance to the
//! previous field and the potential part is the energy driving the flow.
//! Gradients are Riesz representatives in the quadrature inner product given
//! by [`StepFunctional::weights`], restricted to admissible directions.

mod pme;
mod ricci;

pub use pme::{signed_pow, PmeStepFunctional};
pub use ricci::{RicciRegStepFunctional, RicciSymStepFunctional, RicciUnnormStepFunctional};

use crate::error::{Error, Result};
use crate::geometry::{self, Field, FootballGrid, Grid, GridId};

/// A step functional evaluated on raw node values.
///
/// Slice arguments have the length of the owning grid. The `Field`-level
/// methods (`eval`, `grad`, `el_residual_of`) check grid identity and
/// admissibility first.
pub trait StepFunctional {
    fn grid_id(&self) -> GridId;

    /// Weights of the inner product `<a, b> = Σ weights_i a_i b_i`.
    fn weights(&self) -> &[f64];

    fn check_admissible(&self, u: &[f64]) -> Result<()>;

    fn kinetic(&self, u: &[f64]) -> f64;

    fn potential(&self, u: &[f64]) -> f64;

    fn value(&self, u: &[f64]) -> f64 {
        self.kinetic(u) + self.potential(u)
    }

    /// Gradient before projection onto admissible directions.
    fn raw_gradient(&self, u: &[f64]) -> Vec<f64>;

    /// Orthogonal projection of a direction onto the admissible subspace.
    fn project(&self, d: &mut [f64]);

    /// Push a state back onto the constraint set after an update.
    fn restore(&self, u: &mut [f64]);

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.raw_gradient(u);
        self.project(&mut g);
        g
    }

    /// `value(u + t d) - value(u)`, computed without cancellation where the
    /// functional allows it.
    fn value_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let moved: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + t * b).collect();
        self.value(&moved) - self.value(u)
    }

    /// Max-norm of the discrete Euler-Lagrange equation (left minus right side)
    /// over the free nodes.
    fn el_residual(&self, u: &[f64]) -> f64;

    /// Shift `σ` of the preconditioner `σ - Δ`, estimated from the kinetic
    /// part of the Hessian at `u`.
    fn metric_shift(&self, u: &[f64]) -> f64;

    /// Apply `(σ - Δ)^{-1}` on admissible directions.
    fn precondition(&self, shift: f64, g: &[f64]) -> Vec<f64>;

    fn len(&self) -> usize {
        self.weights().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights()
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    fn check_field(&self, u: &Field) -> Result<()> {
        if u.grid_id() != self.grid_id() || u.len() != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                found: u.len(),
            });
        }
        self.check_admissible(u.values())
    }

    fn eval(&self, u: &Field) -> Result<f64> {
        self.check_field(u)?;
        Ok(self.value(u.values()))
    }

    fn grad(&self, u: &Field) -> Result<Field> {
        self.check_field(u)?;
        Ok(Field::from_raw(self.grid_id(), self.gradient(u.values())))
    }

    fn el_residual_of(&self, u: &Field) -> Result<f64> {
        self.check_field(u)?;
        Ok(self.el_residual(u.values()))
    }
}

/// `C_β = (2β - 1)/β`, so that `β/(2β - 1) · C_β = 1`.
pub fn cbeta_from_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.5) || !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} must exceed 1/2")));
    }
    Ok((2.0 * beta - 1.0) / beta)
}

/// `M_c(u) = log ⨍e^{2u} - c ⨍|∇u|² - 2 ⨍u`.
///
/// The Moser-type inequalities bound this from above by `log C2` (`c = 1` for
/// all fields, `c = 1/2` for mirror-symmetric ones). The constant is unknown,
/// so the value is only recorded.
pub fn moser_log_ratio(grid: &FootballGrid, u: &Field, c: f64) -> Result<f64> {
    geometry::check(grid, u)?;
    let w = grid.quad_weights();
    let area = grid.total_area();
    let v = u.values();
    Ok(log_mean_exp2(w, area, v) - c * grid.dirichlet_form(v, v) / area - 2.0 * geometry::weighted_sum(w, v) / area)
}

/// `log ⨍ e^{2u}` with the maximum factored out.
pub(crate) fn log_mean_exp2(weights: &[f64], area: f64, u: &[f64]) -> f64 {
    let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = weights.iter().zip(u).map(|(w, x)| w * (2.0 * (x - m)).exp()).sum();
    (s / area).ln() + 2.0 * m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_football_grid;

    #[test]
    fn cbeta_values() {
        assert_eq!(cbeta_from_beta(1.0).unwrap(), 1.0);
        assert_eq!(cbeta_from_beta(2.0).unwrap(), 1.5);
        assert!((cbeta_from_beta(1.5).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(cbeta_from_beta(0.5).is_err());
        assert!(cbeta_from_beta(0.2).is_err());
        for beta in [1.1, 2.0, 3.7, 10.0] {
            let c = cbeta_from_beta(beta).unwrap();
            assert!((beta / (2.0 * beta - 1.0) * c - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn moser_ratio_of_constants_is_zero() {
        let g = build_football_grid(0.5, 16, 8).unwrap();
        for c in [-1.0, 0.0, 0.7] {
            let m = moser_log_ratio(&g, &Field::constant(&g, c), 0.5).unwrap();
            assert!(m.abs() < 1e-13, "{m}");
        }
    }

    #[test]
    fn moser_ratio_decreases_in_c() {
        let g = build_football_grid(0.5, 16, 8).unwrap();
        let u = Field::from_fn(&g, |r, t| (2.0 * r).cos() + 0.3 * t.sin());
        let vals: Vec<f64> = [0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|&c| moser_log_ratio(&g, &u, c).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }
}

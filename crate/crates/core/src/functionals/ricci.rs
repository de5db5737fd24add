//! Step functionals for Ricci flow of the conformal factor `u`, `g = e^{2u} g0`,
//! on the football. All terms are area averages.

use super::{log_mean_exp2, StepFunctional};
use crate::error::{Error, Result};
use crate::geometry::{self, Field, FootballGrid, Grid, GridId, Symmetry};

/// Tolerance for the mean-zero and symmetry constraints on inputs.
const CONSTRAINT_TOL: f64 = 1e-10;

/// Shared pieces: kinetic term `(1/2h) ⨍|e^u - e^{u_{n-1}}|²` and the
/// Dirichlet / log-average terms.
#[derive(Debug, Clone)]
struct RicciCore<'g> {
    grid: &'g FootballGrid,
    h: f64,
    exp_prev: Vec<f64>,
    // quadrature weights divided by the area
    weights: Vec<f64>,
}

impl<'g> RicciCore<'g> {
    fn new(grid: &'g FootballGrid, h: f64, prev: &Field) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("h", format!("time step {h} must be positive")));
        }
        geometry::check(grid, prev)?;
        let area = grid.total_area();
        Ok(Self {
            grid,
            h,
            exp_prev: prev.values().iter().map(|v| v.exp()).collect(),
            weights: grid.quad_weights().iter().map(|w| w / area).collect(),
        })
    }

    fn mean(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(w, x)| w * x).sum()
    }

    fn kinetic(&self, u: &[f64]) -> f64 {
        let s: f64 = u
            .iter()
            .zip(&self.exp_prev)
            .zip(&self.weights)
            .map(|((&x, &p), &w)| {
                let d = x.exp() - p;
                w * d * d
            })
            .sum();
        s / (2.0 * self.h)
    }

    fn half_dirichlet(&self, u: &[f64]) -> f64 {
        0.5 * self.grid.dirichlet_form(u, u) / self.grid.total_area()
    }

    fn log_mean_exp2(&self, u: &[f64]) -> f64 {
        log_mean_exp2(self.grid.quad_weights(), self.grid.total_area(), u)
    }

    /// `e^u (e^u - e^{u_{n-1}}) / h`
    fn time_term(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.exp_prev)
            .map(|(&x, &p)| {
                let e = x.exp();
                e * (e - p) / self.h
            })
            .collect()
    }

    /// `e^{2u} / ⨍e^{2u}`
    fn normalized_exp2(&self, u: &[f64]) -> Vec<f64> {
        let l = self.log_mean_exp2(u);
        u.iter().map(|&x| (2.0 * x - l).exp()).collect()
    }

    fn metric_shift(&self, u: &[f64]) -> f64 {
        let m: f64 = u
            .iter()
            .zip(&self.exp_prev)
            .zip(&self.weights)
            .map(|((&x, &p), &w)| {
                let e = x.exp();
                w * (e * (2.0 * e - p) / self.h).max(0.0)
            })
            .sum();
        m.max(1.0)
    }

    /// Changes of the kinetic, half-Dirichlet, mean and `-(1/2) log ⨍e^{2u}`
    /// terms along `u + t d`.
    fn changes(&self, u: &[f64], d: &[f64], t: f64) -> [f64; 4] {
        let mut kin = 0.0;
        let mut e2 = 0.0;
        let mut de2 = 0.0;
        let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for k in 0..u.len() {
            let w = self.weights[k];
            let e = u[k].exp();
            let de = e * (t * d[k]).exp_m1();
            kin += w * de * (2.0 * (e - self.exp_prev[k]) + de);
            let q = (2.0 * (u[k] - m)).exp();
            e2 += w * q;
            de2 += w * q * (2.0 * t * d[k]).exp_m1();
        }
        let area = self.grid.total_area();
        let dir = (t * self.grid.dirichlet_form(u, d) + 0.5 * t * t * self.grid.dirichlet_form(d, d)) / area;
        [kin / (2.0 * self.h), dir, t * self.mean(d), -0.5 * (de2 / e2).ln_1p()]
    }
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

/// Normalized flow step over mean-zero symmetric fields:
/// `J_n(u) = (1/2h)⨍|e^u - e^{u_{n-1}}|² + (1/2)⨍|∇u|² - (1/2) log ⨍e^{2u}`.
#[derive(Debug, Clone)]
pub struct RicciSymStepFunctional<'g> {
    core: RicciCore<'g>,
    symmetry: Symmetry,
}

impl<'g> RicciSymStepFunctional<'g> {
    pub fn new(grid: &'g FootballGrid, h: f64, prev: &Field) -> Result<Self> {
        Self::with_symmetry(grid, h, prev, Symmetry::Mirror)
    }

    pub fn with_symmetry(grid: &'g FootballGrid, h: f64, prev: &Field, symmetry: Symmetry) -> Result<Self> {
        if !grid.supports(symmetry) {
            return Err(Error::param("symmetry", "antipodal symmetry needs an even angular count"));
        }
        let f = Self {
            core: RicciCore::new(grid, h, prev)?,
            symmetry,
        };
        f.check_admissible(prev.values())
            .map_err(|e| Error::NotAdmissible(format!("previous field: {e}")))?;
        Ok(f)
    }

    pub fn h(&self) -> f64 {
        self.core.h
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Multiplier of the mean-zero constraint,
    /// `λ_n = 1 - ⨍ e^{u}(e^{u} - e^{u_{n-1}})/h`.
    pub fn lambda(&self, u: &[f64]) -> f64 {
        1.0 - self.core.mean(&self.core.time_term(u))
    }
}

impl StepFunctional for RicciSymStepFunctional<'_> {
    fn grid_id(&self) -> GridId {
        self.core.grid.id()
    }

    fn weights(&self) -> &[f64] {
        &self.core.weights
    }

    fn check_admissible(&self, u: &[f64]) -> Result<()> {
        let scale = 1.0 + max_abs(u.iter().cloned());
        let mean = self.core.mean(u);
        if mean.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::NotAdmissible(format!("average is {mean:e}, expected 0")));
        }
        let asym = self.core.grid.asymmetry(u, self.symmetry);
        if asym > CONSTRAINT_TOL * scale {
            return Err(Error::NotAdmissible(format!("asymmetry {asym:e} about r = π/2")));
        }
        Ok(())
    }

    fn kinetic(&self, u: &[f64]) -> f64 {
        self.core.kinetic(u)
    }

    fn potential(&self, u: &[f64]) -> f64 {
        self.core.half_dirichlet(u) - 0.5 * self.core.log_mean_exp2(u)
    }

    fn raw_gradient(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.core.grid.laplacian(u);
        let t = self.core.time_term(u);
        let n = self.core.normalized_exp2(u);
        (0..u.len()).map(|k| t[k] - lap[k] - n[k]).collect()
    }

    fn project(&self, d: &mut [f64]) {
        geometry::project_mean_zero(&self.core.weights, 1.0, d);
        self.core.grid.symmetrize_in_place(d, self.symmetry);
    }

    fn restore(&self, u: &mut [f64]) {
        self.project(u);
    }

    fn value_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let [kin, dir, _, log] = self.core.changes(u, d, t);
        kin + dir + log
    }

    fn el_residual(&self, u: &[f64]) -> f64 {
        // e^u (e^u - e^{u_{n-1}})/h = Δu - λ_n + e^{2u}/⨍e^{2u}
        let lap = self.core.grid.laplacian(u);
        let t = self.core.time_term(u);
        let n = self.core.normalized_exp2(u);
        let lambda = 1.0 - self.core.mean(&t);
        max_abs((0..u.len()).map(|k| t[k] - (lap[k] - lambda + n[k])))
    }

    fn metric_shift(&self, u: &[f64]) -> f64 {
        self.core.metric_shift(u)
    }

    fn precondition(&self, shift: f64, g: &[f64]) -> Vec<f64> {
        let mut z = self.core.grid.solve_shifted(shift, g);
        self.project(&mut z);
        z
    }
}

/// Regularized flow step over all fields:
/// `Ĵ(u) = (1/2h)⨍|e^u - e^{u_{n-1}}|² + (1/2)⨍(|∇u|² + 2λu) - (1/2) log ⨍e^{2u}`.
#[derive(Debug, Clone)]
pub struct RicciRegStepFunctional<'g> {
    core: RicciCore<'g>,
    lambda: f64,
}

impl<'g> RicciRegStepFunctional<'g> {
    pub fn new(grid: &'g FootballGrid, h: f64, lambda: f64, prev: &Field) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param("lambda", format!("{lambda} is not in (0, 1)")));
        }
        Ok(Self {
            core: RicciCore::new(grid, h, prev)?,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl StepFunctional for RicciRegStepFunctional<'_> {
    fn grid_id(&self) -> GridId {
        self.core.grid.id()
    }

    fn weights(&self) -> &[f64] {
        &self.core.weights
    }

    fn check_admissible(&self, _u: &[f64]) -> Result<()> {
        Ok(())
    }

    fn kinetic(&self, u: &[f64]) -> f64 {
        self.core.kinetic(u)
    }

    fn potential(&self, u: &[f64]) -> f64 {
        self.core.half_dirichlet(u) + self.lambda * self.core.mean(u) - 0.5 * self.core.log_mean_exp2(u)
    }

    fn raw_gradient(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.core.grid.laplacian(u);
        let t = self.core.time_term(u);
        let n = self.core.normalized_exp2(u);
        (0..u.len()).map(|k| t[k] - lap[k] + self.lambda - n[k]).collect()
    }

    fn project(&self, _d: &mut [f64]) {}

    fn restore(&self, _u: &mut [f64]) {}

    fn value_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let [kin, dir, mean, log] = self.core.changes(u, d, t);
        kin + dir + self.lambda * mean + log
    }

    fn el_residual(&self, u: &[f64]) -> f64 {
        let lap = self.core.grid.laplacian(u);
        let t = self.core.time_term(u);
        let n = self.core.normalized_exp2(u);
        max_abs((0..u.len()).map(|k| t[k] - (lap[k] - self.lambda + n[k])))
    }

    fn metric_shift(&self, u: &[f64]) -> f64 {
        self.core.metric_shift(u)
    }

    fn precondition(&self, shift: f64, g: &[f64]) -> Vec<f64> {
        self.core.grid.solve_shifted(shift, g)
    }
}

/// Un-normalized flow step:
/// `(1/2h)⨍|e^u - e^{u_{n-1}}|² + (1/2)⨍|∇u|² + ⨍u`, whose Euler-Lagrange
/// equation is `e^u (e^u - e^{u_{n-1}})/h = Δu - 1`.
#[derive(Debug, Clone)]
pub struct RicciUnnormStepFunctional<'g> {
    core: RicciCore<'g>,
}

impl<'g> RicciUnnormStepFunctional<'g> {
    pub fn new(grid: &'g FootballGrid, h: f64, prev: &Field) -> Result<Self> {
        Ok(Self {
            core: RicciCore::new(grid, h, prev)?,
        })
    }
}

impl StepFunctional for RicciUnnormStepFunctional<'_> {
    fn grid_id(&self) -> GridId {
        self.core.grid.id()
    }

    fn weights(&self) -> &[f64] {
        &self.core.weights
    }

    fn check_admissible(&self, _u: &[f64]) -> Result<()> {
        Ok(())
    }

    fn kinetic(&self, u: &[f64]) -> f64 {
        self.core.kinetic(u)
    }

    fn potential(&self, u: &[f64]) -> f64 {
        self.core.half_dirichlet(u) + self.core.mean(u)
    }

    fn raw_gradient(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.core.grid.laplacian(u);
        let t = self.core.time_term(u);
        (0..u.len()).map(|k| t[k] - lap[k] + 1.0).collect()
    }

    fn project(&self, _d: &mut [f64]) {}

    fn restore(&self, _u: &mut [f64]) {}

    fn value_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let [kin, dir, mean, _] = self.core.changes(u, d, t);
        kin + dir + mean
    }

    fn el_residual(&self, u: &[f64]) -> f64 {
        let lap = self.core.grid.laplacian(u);
        let t = self.core.time_term(u);
        max_abs((0..u.len()).map(|k| t[k] - (lap[k] - 1.0)))
    }

    fn metric_shift(&self, u: &[f64]) -> f64 {
        self.core.metric_shift(u)
    }

    fn precondition(&self, shift: f64, g: &[f64]) -> Vec<f64> {
        self.core.grid.solve_shifted(shift, g)
    }
}

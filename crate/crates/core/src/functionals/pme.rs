use super::{cbeta_from_beta, StepFunctional};
use crate::error::{Error, Result};
use crate::geometry::{self, Field, Grid, GridId, PlanarGrid};

/// Odd power `|v|^{β-1} v`.
pub fn signed_pow(v: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        v
    } else {
        v.abs().powf(beta - 1.0) * v
    }
}

// σ(v + δ) - σ(v) without cancellation when v and v + δ share a sign.
fn signed_pow_diff(v: f64, delta: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        return delta;
    }
    let w = v + delta;
    if v != 0.0 && v.signum() == w.signum() {
        v.signum() * v.abs().powf(beta) * (beta * (delta / v).ln_1p()).exp_m1()
    } else {
        signed_pow(w, beta) - signed_pow(v, beta)
    }
}

/// Porous-medium step functional on the rectangle,
/// `(C_β/2h) ∫|σ(v) - σ(v_{n-1})|² + (1/2)∫|∇v|²` with `σ(v) = |v|^{β-1} v`,
/// over fields equal to the boundary data on `∂Ω`.
#[derive(Debug, Clone)]
pub struct PmeStepFunctional<'g> {
    grid: &'g PlanarGrid,
    h: f64,
    beta: f64,
    c_beta: f64,
    prev: Vec<f64>,
    prev_pow: Vec<f64>,
    boundary_data: Vec<f64>,
}

impl<'g> PmeStepFunctional<'g> {
    /// `beta = 1` gives the implicit Euler step of the heat equation.
    pub fn new(grid: &'g PlanarGrid, h: f64, beta: f64, prev: &Field, boundary_data: &Field) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("h", format!("time step {h} must be positive")));
        }
        if !(beta >= 1.0) {
            return Err(Error::param("beta", format!("{beta} must be at least 1")));
        }
        let c_beta = cbeta_from_beta(beta)?;
        geometry::check(grid, prev)?;
        geometry::check(grid, boundary_data)?;
        let f = Self {
            grid,
            h,
            beta,
            c_beta,
            prev: prev.values().to_vec(),
            prev_pow: prev.values().iter().map(|&v| signed_pow(v, beta)).collect(),
            boundary_data: boundary_data.values().to_vec(),
        };
        f.check_admissible(&f.prev)
            .map_err(|e| Error::NotAdmissible(format!("previous field: {e}")))?;
        Ok(f)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn c_beta(&self) -> f64 {
        self.c_beta
    }
    pub fn prev(&self) -> &[f64] {
        &self.prev
    }
    pub fn grid(&self) -> &'g PlanarGrid {
        self.grid
    }

    fn coupling(&self) -> f64 {
        self.beta * self.c_beta / self.h
    }
}

impl StepFunctional for PmeStepFunctional<'_> {
    fn grid_id(&self) -> GridId {
        self.grid.id()
    }

    fn weights(&self) -> &[f64] {
        self.grid.quad_weights()
    }

    fn check_admissible(&self, u: &[f64]) -> Result<()> {
        for (k, (&v, &b)) in u.iter().zip(&self.boundary_data).enumerate() {
            if self.grid.is_boundary(k) && (v - b).abs() > 1e-12 * (1.0 + b.abs()) {
                return Err(Error::NotAdmissible(format!(
                    "boundary node {k} holds {v}, boundary data is {b}"
                )));
            }
        }
        Ok(())
    }

    fn kinetic(&self, u: &[f64]) -> f64 {
        let w = self.grid.quad_weights();
        let s: f64 = u
            .iter()
            .zip(&self.prev_pow)
            .zip(w)
            .map(|((&v, &p), &w)| {
                let d = signed_pow(v, self.beta) - p;
                w * d * d
            })
            .sum();
        self.c_beta / (2.0 * self.h) * s
    }

    fn potential(&self, u: &[f64]) -> f64 {
        0.5 * self.grid.dirichlet_form(u, u)
    }

    fn raw_gradient(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.grid.laplacian(u);
        let k = self.coupling();
        u.iter()
            .zip(&self.prev_pow)
            .zip(&lap)
            .enumerate()
            .map(|(i, ((&v, &p), &l))| {
                if self.grid.is_boundary(i) {
                    0.0
                } else {
                    k * (signed_pow(v, self.beta) - p) * v.abs().powf(self.beta - 1.0) - l
                }
            })
            .collect()
    }

    fn project(&self, d: &mut [f64]) {
        for (k, x) in d.iter_mut().enumerate() {
            if self.grid.is_boundary(k) {
                *x = 0.0;
            }
        }
    }

    fn restore(&self, u: &mut [f64]) {
        for (k, x) in u.iter_mut().enumerate() {
            if self.grid.is_boundary(k) {
                *x = self.boundary_data[k];
            }
        }
    }

    fn value_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let w = self.grid.quad_weights();
        let mut kin = 0.0;
        for k in 0..u.len() {
            if w[k] == 0.0 {
                continue;
            }
            let a = signed_pow(u[k], self.beta);
            let da = signed_pow_diff(u[k], t * d[k], self.beta);
            kin += w[k] * da * (2.0 * (a - self.prev_pow[k]) + da);
        }
        let dirichlet = t * self.grid.dirichlet_form(u, d) + 0.5 * t * t * self.grid.dirichlet_form(d, d);
        self.c_beta / (2.0 * self.h) * kin + dirichlet
    }

    fn el_residual(&self, u: &[f64]) -> f64 {
        // (βC_β/h)(v^β - v_{n-1}^β) v^{β-1} = Δv
        let lap = self.grid.laplacian(u);
        let k = self.coupling();
        (0..u.len())
            .filter(|&i| !self.grid.is_boundary(i))
            .map(|i| {
                let lhs = k * (signed_pow(u[i], self.beta) - self.prev_pow[i]) * u[i].abs().powf(self.beta - 1.0);
                (lhs - lap[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    fn metric_shift(&self, u: &[f64]) -> f64 {
        let w = self.grid.quad_weights();
        let k = self.coupling() * self.beta;
        let total: f64 = u
            .iter()
            .zip(w)
            .map(|(&v, &w)| w * k * v.abs().powf(2.0 * self.beta - 2.0))
            .sum();
        total / self.grid.total_area()
    }

    fn precondition(&self, shift: f64, g: &[f64]) -> Vec<f64> {
        self.grid.solve_shifted(shift, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_planar_grid;

    fn setup(beta: f64) -> (PlanarGrid, Field, Field) {
        let g = build_planar_grid(1.0, 1.0, 6, 5).unwrap();
        let prev = Field::from_fn(&g, |x, y| (1.0 + x) * (0.5 + y * y) + 0.3 * (7.0 * x * y).sin());
        let bd = prev.clone();
        let _ = beta;
        (g, prev, bd)
    }

    #[test]
    fn kinetic_vanishes_at_prev() {
        let (g, prev, bd) = setup(2.0);
        let f = PmeStepFunctional::new(&g, 0.1, 2.0, &prev, &bd).unwrap();
        let e = f.eval(&prev).unwrap();
        let de = crate::geometry::dirichlet_energy(&g, &prev).unwrap();
        assert!((e - 0.5 * de).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = build_planar_grid(1.0, 1.0, 5, 5).unwrap();
        let z = Field::zeros(&g);
        let f = PmeStepFunctional::new(&g, 0.1, 2.0, &z, &z).unwrap();
        assert_eq!(f.eval(&z).unwrap(), 0.0);
        assert!(f.grad(&z).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matches_straight_loop_quadrature() {
        let g = build_planar_grid(1.0, 1.0, 5, 5).unwrap();
        let prev = Field::from_fn(&g, |x, y| x * y + 0.2 * (5.0 * x).cos());
        let v = Field::from_fn(&g, |x, y| {
            if x == 0.0 || y == 0.0 || x == 1.0 || y == 1.0 {
                x * y + 0.2 * (5.0 * x).cos()
            } else {
                0.7 * (3.0 * x + y).sin() - 0.4
            }
        });
        let (h, beta) = (0.05, 2.0);
        let f = PmeStepFunctional::new(&g, h, beta, &prev, &prev).unwrap();
        // brute force: interior-cell quadrature plus every edge touching the interior
        let n = 5;
        let d = 0.25;
        let at = |fld: &Field, i: usize, j: usize| fld.values()[i * n + j];
        let sp = |x: f64| x.abs() * x;
        let mut kin = 0.0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                kin += d * d * (sp(at(&v, i, j)) - sp(at(&prev, i, j))).powi(2);
            }
        }
        let mut grad2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let interior = |a: usize, b: usize| a > 0 && b > 0 && a < n - 1 && b < n - 1;
                if i + 1 < n && (interior(i, j) || interior(i + 1, j)) {
                    grad2 += (at(&v, i + 1, j) - at(&v, i, j)).powi(2);
                }
                if j + 1 < n && (interior(i, j) || interior(i, j + 1)) {
                    grad2 += (at(&v, i, j + 1) - at(&v, i, j)).powi(2);
                }
            }
        }
        let expected = 1.5 / (2.0 * h) * kin + 0.5 * grad2;
        let got = f.eval(&v).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected.abs(), "{got} vs {expected}");
    }

    #[test]
    fn heat_gradient_is_implicit_euler_residual() {
        let (g, prev, bd) = setup(1.0);
        let h = 0.02;
        let f = PmeStepFunctional::new(&g, h, 1.0, &prev, &bd).unwrap();
        let mut v = prev.values().to_vec();
        for k in 0..v.len() {
            if !g.is_boundary(k) {
                v[k] += 0.1 * (k as f64).sin();
            }
        }
        let grad = f.gradient(&v);
        let lap = g.laplacian(&v);
        for k in 0..v.len() {
            if !g.is_boundary(k) {
                let r = (v[k] - prev.values()[k]) / h - lap[k];
                assert!((grad[k] - r).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn even_functional_with_zero_boundary() {
        let g = build_planar_grid(1.0, 1.0, 6, 6).unwrap();
        let z = Field::zeros(&g);
        let prev = Field::from_fn(&g, |x, y| (x * (1.0 - x) * y * (1.0 - y)) * 4.0);
        let f0 = PmeStepFunctional::new(&g, 0.1, 1.7, &prev, &z).unwrap();
        let v = Field::from_fn(&g, |x, y| (x * (1.0 - x) * y * (1.0 - y)) * (9.0 * x).cos());
        let neg_prev = prev.map(|x| -x);
        let f1 = PmeStepFunctional::new(&g, 0.1, 1.7, &neg_prev, &z).unwrap();
        // I(v) with prev equals I(-v) with -prev, and with zero prev I is even
        assert!((f0.eval(&v).unwrap() - f1.eval(&v.map(|x| -x)).unwrap()).abs() < 1e-13);
        let fz = PmeStepFunctional::new(&g, 0.1, 1.7, &z, &z).unwrap();
        assert_eq!(fz.eval(&v).unwrap(), fz.eval(&v.map(|x| -x)).unwrap());
    }

    #[test]
    fn rejects_boundary_mismatch() {
        let (g, prev, bd) = setup(2.0);
        let f = PmeStepFunctional::new(&g, 0.1, 2.0, &prev, &bd).unwrap();
        let bad = prev.map(|x| x + 1.0);
        assert!(matches!(f.eval(&bad), Err(Error::NotAdmissible(_))));
        assert!(PmeStepFunctional::new(&g, -0.1, 2.0, &prev, &bd).is_err());
        assert!(PmeStepFunctional::new(&g, 0.1, 0.9, &prev, &bd).is_err());
    }

    #[test]
    fn accurate_value_change_matches_direct() {
        let (g, prev, bd) = setup(2.0);
        let f = PmeStepFunctional::new(&g, 0.1, 2.0, &prev, &bd).unwrap();
        let mut d: Vec<f64> = (0..g.len()).map(|k| ((k * 7) as f64).cos()).collect();
        f.project(&mut d);
        let u = prev.values();
        for t in [1e-3, 0.1, 1.0] {
            let a = f.value_change(u, &d, t);
            let moved: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + t * y).collect();
            let b = f.value(&moved) - f.value(u);
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn signed_power_difference() {
        for (v, d) in [(1.0, 1e-9), (-2.0, 0.5), (0.3, -0.6), (0.0, 0.2)] {
            let direct = signed_pow(v + d, 2.5) - signed_pow(v, 2.5);
            assert!((signed_pow_diff(v, d, 2.5) - direct).abs() < 1e-12);
        }
    }
}

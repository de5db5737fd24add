use std::f64::consts::PI;

use super::{Grid, GridId};
use crate::error::{Error, Result};

/// Reflection used to define "symmetric" fields on the football.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetry {
    /// `(r, θ) -> (π - r, θ)`.
    #[default]
    Mirror,
    /// `(r, θ) -> (π - r, θ + π)`; needs an even angular count.
    Antipodal,
}

/// Cell-centered grid on the football `dr² + (α sin r)² dθ²`.
///
/// Node `k = i * n_theta + j` sits at `r_i = (i + 1/2) π / n_r`,
/// `θ_j = j 2π / n_theta`. The radial faces at `r = 0` and `r = π` carry no
/// flux since `sin` vanishes there, which closes the Laplacian at the cone tips.
#[derive(Debug, Clone)]
pub struct FootballGrid {
    alpha: f64,
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
    r_nodes: Vec<f64>,
    theta_nodes: Vec<f64>,
    sin_r: Vec<f64>,
    // sin at the n_r + 1 radial faces, exactly zero at both ends
    sin_face: Vec<f64>,
    quad_weights: Vec<f64>,
    total_area: f64,
    base_curvature: Vec<f64>,
    // orthonormal real Fourier basis in θ, column m is mode m
    modes: Vec<f64>,
    mode_eigs: Vec<f64>,
}

impl FootballGrid {
    pub fn new(alpha: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("{alpha} is not in (0, 1)")));
        }
        if n_r < 4 || n_theta < 4 {
            return Err(Error::param(
                "n_r/n_theta",
                format!("need at least 4 cells, got {n_r} x {n_theta}"),
            ));
        }
        if !n_r.is_multiple_of(2) {
            return Err(Error::param("n_r", format!("{n_r} is odd; mirror pairing needs even n_r")));
        }
        let dr = PI / n_r as f64;
        let dtheta = 2.0 * PI / n_theta as f64;
        let r_nodes: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
        let theta_nodes: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();
        // mirror pairs get bit-identical sines
        let sin_r: Vec<f64> = (0..n_r)
            .map(|i| {
                let i = i.min(n_r - 1 - i);
                ((i as f64 + 0.5) * dr).sin()
            })
            .collect();
        let sin_face: Vec<f64> = (0..=n_r)
            .map(|i| {
                let i = i.min(n_r - i);
                if i == 0 {
                    0.0
                } else {
                    (i as f64 * dr).sin()
                }
            })
            .collect();
        let mut quad_weights = Vec::with_capacity(n_r * n_theta);
        for s in &sin_r {
            let w = alpha * s * dr * dtheta;
            quad_weights.extend(std::iter::repeat_n(w, n_theta));
        }
        let total_area = quad_weights.iter().sum();

        // R0 = -2 f''/f for f = α sin r, with f continued oddly across the tips.
        let base_curvature = (0..n_r)
            .map(|i| {
                let r = r_nodes[i];
                let f = |x: f64| x.sin();
                -2.0 * (f(r + dr) - 2.0 * f(r) + f(r - dr)) / (dr * dr * f(r))
            })
            .collect();

        let (modes, mode_eigs) = fourier_modes(n_theta, dtheta);
        Ok(Self {
            alpha,
            n_r,
            n_theta,
            dr,
            dtheta,
            r_nodes,
            theta_nodes,
            sin_r,
            sin_face,
            quad_weights,
            total_area,
            base_curvature,
            modes,
            mode_eigs,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    /// Discrete scalar curvature of `g0` per radial ring (≈ 2).
    pub fn base_curvature(&self) -> &[f64] {
        &self.base_curvature
    }

    /// Index of the mirror image of node `k`.
    pub fn mirror_index(&self, k: usize, symmetry: Symmetry) -> usize {
        let (i, j) = (k / self.n_theta, k % self.n_theta);
        let i2 = self.n_r - 1 - i;
        let j2 = match symmetry {
            Symmetry::Mirror => j,
            Symmetry::Antipodal => (j + self.n_theta / 2) % self.n_theta,
        };
        i2 * self.n_theta + j2
    }

    pub fn supports(&self, symmetry: Symmetry) -> bool {
        symmetry == Symmetry::Mirror || self.n_theta.is_multiple_of(2)
    }

    pub(crate) fn symmetrize_in_place(&self, u: &mut [f64], symmetry: Symmetry) {
        for k in 0..u.len() {
            let m = self.mirror_index(k, symmetry);
            if m > k {
                let avg = 0.5 * (u[k] + u[m]);
                u[k] = avg;
                u[m] = avg;
            }
        }
    }

    /// Largest deviation from symmetry, `max |u - reflect(u)|`.
    pub fn asymmetry(&self, u: &[f64], symmetry: Symmetry) -> f64 {
        (0..u.len())
            .map(|k| (u[k] - u[self.mirror_index(k, symmetry)]).abs())
            .fold(0.0, f64::max)
    }
}

/// Orthonormal eigenbasis of the periodic second difference, stored
/// column-major (`modes[j * n + m]` is mode `m` at node `j`), with the
/// eigenvalues of the negative second difference.
fn fourier_modes(n: usize, dtheta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut modes = vec![0.0; n * n];
    let mut eigs = vec![0.0; n];
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    let mut col = 0;
    let mut set = |col: usize, k: usize, f: &dyn Fn(usize) -> f64, eigs: &mut Vec<f64>| {
        for j in 0..n {
            modes[j * n + col] = f(j);
        }
        let s = (k as f64 * dtheta / 2.0).sin();
        eigs[col] = 4.0 * s * s / (dtheta * dtheta);
    };
    set(col, 0, &|_| norm0, &mut eigs);
    col += 1;
    for k in 1..n.div_ceil(2) {
        let kf = k as f64;
        set(col, k, &|j| norm * (kf * j as f64 * dtheta).cos(), &mut eigs);
        set(col + 1, k, &|j| norm * (kf * j as f64 * dtheta).sin(), &mut eigs);
        col += 2;
    }
    if n.is_multiple_of(2) {
        set(col, n / 2, &|j| if j % 2 == 0 { norm0 } else { -norm0 }, &mut eigs);
    }
    (modes, eigs)
}

impl Grid for FootballGrid {
    fn id(&self) -> GridId {
        GridId::Football {
            alpha_bits: self.alpha.to_bits(),
            n_r: self.n_r,
            n_theta: self.n_theta,
        }
    }

    fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    fn coords(&self, k: usize) -> (f64, f64) {
        (self.r_nodes[k / self.n_theta], self.theta_nodes[k % self.n_theta])
    }

    fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    fn total_area(&self) -> f64 {
        self.total_area
    }

    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let (nr, nt) = (self.n_r, self.n_theta);
        let dr2 = self.dr * self.dr;
        let a2t2 = self.alpha * self.alpha * self.dtheta * self.dtheta;
        let mut out = vec![0.0; nr * nt];
        for i in 0..nr {
            let s = self.sin_r[i];
            let (fl, fr) = (self.sin_face[i], self.sin_face[i + 1]);
            let ang = 1.0 / (a2t2 * s * s);
            for j in 0..nt {
                let k = i * nt + j;
                let c = u[k];
                let mut radial = 0.0;
                if i + 1 < nr {
                    radial += fr * (u[k + nt] - c);
                }
                if i > 0 {
                    radial -= fl * (c - u[k - nt]);
                }
                let jp = if j + 1 == nt { k + 1 - nt } else { k + 1 };
                let jm = if j == 0 { k + nt - 1 } else { k - 1 };
                out[k] = radial / (s * dr2) + ang * ((u[jp] - c) - (c - u[jm]));
            }
        }
        out
    }

    fn dirichlet_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let (nr, nt) = (self.n_r, self.n_theta);
        let radial_coef = self.alpha * self.dtheta / self.dr;
        let mut radial = 0.0;
        for i in 0..nr - 1 {
            let c = radial_coef * self.sin_face[i + 1];
            for j in 0..nt {
                let k = i * nt + j;
                radial += c * (a[k + nt] - a[k]) * (b[k + nt] - b[k]);
            }
        }
        let mut angular = 0.0;
        for i in 0..nr {
            let c = self.dr / (self.alpha * self.sin_r[i] * self.dtheta);
            for j in 0..nt {
                let k = i * nt + j;
                let kp = if j + 1 == nt { k + 1 - nt } else { k + 1 };
                angular += c * (a[kp] - a[k]) * (b[kp] - b[k]);
            }
        }
        radial + angular
    }

    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let (nr, nt) = (self.n_r, self.n_theta);
        // project every ring onto the θ modes
        let mut coef = vec![0.0; nr * nt];
        for i in 0..nr {
            for m in 0..nt {
                let mut acc = 0.0;
                for j in 0..nt {
                    acc += self.modes[j * nt + m] * rhs[i * nt + j];
                }
                coef[i * nt + m] = acc;
            }
        }
        let dr2 = self.dr * self.dr;
        let a2 = self.alpha * self.alpha;
        let mut lower = vec![0.0; nr];
        let mut diag = vec![0.0; nr];
        let mut upper = vec![0.0; nr];
        let mut col = vec![0.0; nr];
        for m in 0..nt {
            let mu = self.mode_eigs[m];
            for i in 0..nr {
                let s = self.sin_r[i];
                let l = self.sin_face[i] / (s * dr2);
                let r = self.sin_face[i + 1] / (s * dr2);
                lower[i] = -l;
                upper[i] = -r;
                diag[i] = shift + l + r + mu / (a2 * s * s);
                col[i] = coef[i * nt + m];
            }
            thomas(&lower, &diag, &upper, &mut col);
            for i in 0..nr {
                coef[i * nt + m] = col[i];
            }
        }
        let mut out = vec![0.0; nr * nt];
        for i in 0..nr {
            for j in 0..nt {
                let mut acc = 0.0;
                for m in 0..nt {
                    acc += self.modes[j * nt + m] * coef[i * nt + m];
                }
                out[i * nt + j] = acc;
            }
        }
        out
    }
}

/// Tridiagonal solve in place; `lower[0]` and `upper[n-1]` are ignored.
pub(crate) fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], x: &mut [f64]) {
    let n = x.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    x[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        x[i] = (x[i] - lower[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Field;

    #[test]
    fn small_grid_has_positive_weights() {
        let g = FootballGrid::new(0.5, 4, 4).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g.quad_weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn mirror_pairs_are_exact() {
        let g = FootballGrid::new(0.3, 32, 8).unwrap();
        for i in 0..g.n_r() {
            let i2 = g.n_r() - 1 - i;
            assert!((g.r_nodes()[i2] - (PI - g.r_nodes()[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn area_error_is_second_order() {
        let err = |n| {
            let g = FootballGrid::new(0.5, n, 8).unwrap();
            (g.total_area() - 2.0 * PI).abs()
        };
        let ratio = err(64) / err(128);
        assert!((3.9..4.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn base_curvature_converges_at_second_order() {
        let err = |n| {
            let g = FootballGrid::new(0.5, n, 8).unwrap();
            g.base_curvature().iter().map(|r| (r - 2.0).abs()).fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(err(128) < 1e-2);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn shifted_solve_inverts_the_operator() {
        let g = FootballGrid::new(0.4, 16, 8).unwrap();
        let u = Field::from_fn(&g, |r, t| (3.0 * r).sin() * (2.0 * t).cos() + r);
        let shift = 2.5;
        let lap = g.laplacian(u.values());
        let rhs: Vec<f64> = u.values().iter().zip(&lap).map(|(a, l)| shift * a - l).collect();
        let back = g.solve_shifted(shift, &rhs);
        let err = back
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn odd_angular_count_modes_are_orthonormal() {
        for n in [5, 6, 7, 8] {
            let (modes, _) = fourier_modes(n, 2.0 * PI / n as f64);
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|j| modes[j * n + a] * modes[j * n + b]).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expected).abs() < 1e-13);
                }
            }
        }
    }
}

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Grid, GridId};
use crate::error::{Error, Result};

/// Node-based grid on `[0, lx] x [0, ly]` with Dirichlet boundary nodes.
///
/// Node `k = ix * n_y + iy` sits at `(ix Δx, iy Δy)`. Quadrature weights are
/// `Δx Δy` on interior nodes and zero on the boundary.
#[derive(Debug, Clone)]
pub struct PlanarGrid {
    lx: f64,
    ly: f64,
    n_x: usize,
    n_y: usize,
    dx: f64,
    dy: f64,
    boundary_mask: Vec<bool>,
    quad_weights: Vec<f64>,
    total_area: f64,
    sine_x: SineTransform,
    sine_y: SineTransform,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl PlanarGrid {
    pub fn new(lx: f64, ly: f64, n_x: usize, n_y: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::param("lx/ly", format!("sides must be positive, got {lx} x {ly}")));
        }
        if n_x < 3 || n_y < 3 {
            return Err(Error::param("n_x/n_y", format!("need at least 3 nodes, got {n_x} x {n_y}")));
        }
        let dx = lx / (n_x - 1) as f64;
        let dy = ly / (n_y - 1) as f64;
        let mut boundary_mask = vec![false; n_x * n_y];
        let mut quad_weights = vec![0.0; n_x * n_y];
        for ix in 0..n_x {
            for iy in 0..n_y {
                let k = ix * n_y + iy;
                let on_edge = ix == 0 || iy == 0 || ix == n_x - 1 || iy == n_y - 1;
                boundary_mask[k] = on_edge;
                if !on_edge {
                    quad_weights[k] = dx * dy;
                }
            }
        }
        let total_area = quad_weights.iter().sum();
        let mut planner = FftPlanner::new();
        let (sine_x, eig_x) = (SineTransform::new(&mut planner, n_x - 2), dirichlet_eigs(n_x - 2, dx));
        let (sine_y, eig_y) = (SineTransform::new(&mut planner, n_y - 2), dirichlet_eigs(n_y - 2, dy));
        Ok(Self {
            lx,
            ly,
            n_x,
            n_y,
            dx,
            dy,
            boundary_mask,
            quad_weights,
            total_area,
            sine_x,
            sine_y,
            eig_x,
            eig_y,
        })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_y(&self) -> usize {
        self.n_y
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }
    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary_mask[k]
    }
    pub fn interior_count(&self) -> usize {
        (self.n_x - 2) * (self.n_y - 2)
    }
}

/// Eigenvalues of the negative second difference with spacing `d` on `m`
/// interior nodes, matching the sine modes of [`SineTransform`].
fn dirichlet_eigs(m: usize, d: f64) -> Vec<f64> {
    (1..=m)
        .map(|k| {
            let t = (PI * k as f64 / (2 * (m + 1)) as f64).sin();
            4.0 * t * t / (d * d)
        })
        .collect()
}

/// Orthonormal DST-I of length `m`, computed through a complex FFT of length
/// `2(m + 1)` applied to the odd extension. It is its own inverse.
#[derive(Clone)]
struct SineTransform {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SineTransform").field("m", &self.m).finish()
    }
}

impl SineTransform {
    fn new(planner: &mut FftPlanner<f64>, m: usize) -> Self {
        Self { m, fft: planner.plan_fft_forward(2 * (m + 1)) }
    }

    /// Transform `lines` in place; line `l` holds entries `data[l*outer + i*inner]`.
    fn apply(&self, data: &mut [f64], lines: usize, outer: usize, inner: usize) {
        let (m, n) = (self.m, 2 * (self.m + 1));
        let scale = -0.5 * (2.0 / (m + 1) as f64).sqrt();
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for l in 0..lines {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for i in 0..m {
                let x = data[l * outer + i * inner];
                buf[i + 1].re = x;
                buf[n - 1 - i].re = -x;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..m {
                data[l * outer + i * inner] = scale * buf[i + 1].im;
            }
        }
    }
}

impl Grid for PlanarGrid {
    fn id(&self) -> GridId {
        GridId::Planar {
            lx_bits: self.lx.to_bits(),
            ly_bits: self.ly.to_bits(),
            n_x: self.n_x,
            n_y: self.n_y,
        }
    }

    fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    fn coords(&self, k: usize) -> (f64, f64) {
        let (ix, iy) = (k / self.n_y, k % self.n_y);
        (ix as f64 * self.dx, iy as f64 * self.dy)
    }

    fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    fn total_area(&self) -> f64 {
        self.total_area
    }

    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let ny = self.n_y;
        let (cx, cy) = (1.0 / (self.dx * self.dx), 1.0 / (self.dy * self.dy));
        let mut out = vec![0.0; u.len()];
        for ix in 1..self.n_x - 1 {
            for iy in 1..ny - 1 {
                let k = ix * ny + iy;
                let c = u[k];
                out[k] = cx * ((u[k + ny] - c) - (c - u[k - ny])) + cy * ((u[k + 1] - c) - (c - u[k - 1]));
            }
        }
        out
    }

    fn dirichlet_form(&self, a: &[f64], b: &[f64]) -> f64 {
        // every edge with at least one interior endpoint
        let (nx, ny) = (self.n_x, self.n_y);
        let (cx, cy) = (self.dy / self.dx, self.dx / self.dy);
        let mut sum = 0.0;
        for ix in 0..nx - 1 {
            for iy in 1..ny - 1 {
                let k = ix * ny + iy;
                sum += cx * (a[k + ny] - a[k]) * (b[k + ny] - b[k]);
            }
        }
        for ix in 1..nx - 1 {
            for iy in 0..ny - 1 {
                let k = ix * ny + iy;
                sum += cy * (a[k + 1] - a[k]) * (b[k + 1] - b[k]);
            }
        }
        sum
    }

    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let (mx, my, ny) = (self.n_x - 2, self.n_y - 2, self.n_y);
        let mut inner = vec![0.0; mx * my];
        for a in 0..mx {
            for b in 0..my {
                inner[a * my + b] = rhs[(a + 1) * ny + b + 1];
            }
        }
        let mut coef = dst2(&inner, mx, my, &self.sine_x, &self.sine_y);
        for a in 0..mx {
            for b in 0..my {
                coef[a * my + b] /= shift + self.eig_x[a] + self.eig_y[b];
            }
        }
        let sol = dst2(&coef, mx, my, &self.sine_x, &self.sine_y);
        let mut out = vec![0.0; rhs.len()];
        for a in 0..mx {
            for b in 0..my {
                out[(a + 1) * ny + b + 1] = sol[a * my + b];
            }
        }
        out
    }
}

// S_x · U · S_y with both matrices symmetric and orthogonal (self-inverse).
fn dst2(u: &[f64], mx: usize, my: usize, sx: &SineTransform, sy: &SineTransform) -> Vec<f64> {
    let mut out = u.to_vec();
    sy.apply(&mut out, mx, my, 1);
    sx.apply(&mut out, my, 1, my);
    out
}

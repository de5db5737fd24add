//! Discrete domains: the football surface `(S, g0)` and a planar rectangle.
//!
//! Both grids expose the same small set of operators through [`Grid`]:
//! node quadrature weights, a conservative Laplacian that is self-adjoint with
//! respect to those weights, the matching Dirichlet bilinear form, and a fast
//! solver for the shifted operator `shift - Laplacian`.

mod field;
mod football;
mod planar;
mod snapshot;

pub use field::{Field, GridId};
pub use football::{FootballGrid, Symmetry};
pub use planar::PlanarGrid;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

use crate::error::{Error, Result};

/// Operators shared by the football and planar grids.
///
/// Slices passed to these methods must have length [`Grid::len`].
pub trait Grid {
    fn id(&self) -> GridId;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Node coordinates: `(r, θ)` on the football, `(x, y)` on the plane.
    fn coords(&self, k: usize) -> (f64, f64);
    fn quad_weights(&self) -> &[f64];
    fn total_area(&self) -> f64;
    /// Discrete Laplacian. On the planar grid boundary entries are zero.
    fn laplacian(&self, u: &[f64]) -> Vec<f64>;
    /// Symmetric form `B(a, b)` with `B(u, u) = ∫|∇u|²`, written as a face-flux sum.
    fn dirichlet_form(&self, a: &[f64], b: &[f64]) -> f64;
    /// Solve `(shift - Laplacian) z = rhs` on the grid's free nodes.
    ///
    /// Planar: homogeneous Dirichlet data, boundary entries of `z` are zero.
    /// Football: `shift` must be positive.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64>;
}

/// A grid of either kind, owned.
#[derive(Debug, Clone)]
pub enum AnyGrid {
    Football(FootballGrid),
    Planar(PlanarGrid),
}

impl AnyGrid {
    pub fn as_football(&self) -> Option<&FootballGrid> {
        match self {
            AnyGrid::Football(g) => Some(g),
            AnyGrid::Planar(_) => None,
        }
    }

    pub fn as_planar(&self) -> Option<&PlanarGrid> {
        match self {
            AnyGrid::Planar(g) => Some(g),
            AnyGrid::Football(_) => None,
        }
    }

    fn inner(&self) -> &dyn Grid {
        match self {
            AnyGrid::Football(g) => g,
            AnyGrid::Planar(g) => g,
        }
    }
}

impl Grid for AnyGrid {
    fn id(&self) -> GridId {
        self.inner().id()
    }
    fn len(&self) -> usize {
        self.inner().len()
    }
    fn coords(&self, k: usize) -> (f64, f64) {
        self.inner().coords(k)
    }
    fn quad_weights(&self) -> &[f64] {
        self.inner().quad_weights()
    }
    fn total_area(&self) -> f64 {
        self.inner().total_area()
    }
    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.inner().laplacian(u)
    }
    fn dirichlet_form(&self, a: &[f64], b: &[f64]) -> f64 {
        self.inner().dirichlet_form(a, b)
    }
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        self.inner().solve_shifted(shift, rhs)
    }
}

pub fn build_football_grid(alpha: f64, n_r: usize, n_theta: usize) -> Result<FootballGrid> {
    FootballGrid::new(alpha, n_r, n_theta)
}

pub fn build_planar_grid(lx: f64, ly: f64, n_x: usize, n_y: usize) -> Result<PlanarGrid> {
    PlanarGrid::new(lx, ly, n_x, n_y)
}

pub(crate) fn check<G: Grid + ?Sized>(grid: &G, field: &Field) -> Result<()> {
    if field.grid_id() != grid.id() || field.len() != grid.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: field.len(),
        });
    }
    Ok(())
}

/// Quadrature sum `Σ w_i u_i`.
pub fn integrate<G: Grid + ?Sized>(grid: &G, field: &Field) -> Result<f64> {
    check(grid, field)?;
    Ok(weighted_sum(grid.quad_weights(), field.values()))
}

/// Area average `(1/|S|) ∫ u`.
pub fn average<G: Grid + ?Sized>(grid: &G, field: &Field) -> Result<f64> {
    Ok(integrate(grid, field)? / grid.total_area())
}

pub fn apply_laplacian<G: Grid + ?Sized>(grid: &G, field: &Field) -> Result<Field> {
    check(grid, field)?;
    Ok(Field::from_raw(grid.id(), grid.laplacian(field.values())))
}

/// `∫|∇u|²` as a face-flux sum; nonnegative by construction.
pub fn dirichlet_energy<G: Grid + ?Sized>(grid: &G, field: &Field) -> Result<f64> {
    check(grid, field)?;
    Ok(grid.dirichlet_form(field.values(), field.values()))
}

/// Scalar curvature of `e^{2u} g0`: `e^{-2u} (R0 - 2 Δ0 u)`, where `R0` is the
/// discrete curvature of `g0` computed from the metric coefficient `α sin r`.
pub fn scalar_curvature(grid: &FootballGrid, u: &Field) -> Result<Field> {
    check(grid, u)?;
    let lap = grid.laplacian(u.values());
    let base = grid.base_curvature();
    let n_theta = grid.n_theta();
    let values = u
        .values()
        .iter()
        .zip(&lap)
        .enumerate()
        .map(|(k, (&ui, &li))| (-2.0 * ui).exp() * (base[k / n_theta] - 2.0 * li))
        .collect();
    Ok(Field::from_raw(grid.id(), values))
}

/// Subtract the area average.
pub fn mean_zero_project<G: Grid + ?Sized>(grid: &G, field: &Field) -> Result<Field> {
    check(grid, field)?;
    let mut values = field.values().to_vec();
    project_mean_zero(grid.quad_weights(), grid.total_area(), &mut values);
    Ok(Field::from_raw(grid.id(), values))
}

/// Average of the field and its reflection about `r = π/2`.
pub fn symmetrize(grid: &FootballGrid, field: &Field) -> Result<Field> {
    symmetrize_with(grid, field, Symmetry::Mirror)
}

pub fn symmetrize_with(grid: &FootballGrid, field: &Field, symmetry: Symmetry) -> Result<Field> {
    check(grid, field)?;
    let mut values = field.values().to_vec();
    grid.symmetrize_in_place(&mut values, symmetry);
    Ok(Field::from_raw(grid.id(), values))
}

pub(crate) fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

pub(crate) fn project_mean_zero(weights: &[f64], total: f64, values: &mut [f64]) {
    let mean = weighted_sum(weights, values) / total;
    values.iter_mut().for_each(|v| *v -= mean);
}

use super::Grid;
use crate::error::{Error, Result};

/// Identity of a grid; fields remember the grid they were built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridId {
    Football {
        alpha_bits: u64,
        n_r: usize,
        n_theta: usize,
    },
    Planar {
        lx_bits: u64,
        ly_bits: u64,
        n_x: usize,
        n_y: usize,
    },
}

/// Real values on the nodes of one grid, in the grid's node order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    grid_id: GridId,
}

impl Field {
    pub fn from_values<G: Grid + ?Sized>(grid: &G, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NotAdmissible(format!("non-finite value at node {k}")));
        }
        Ok(Self {
            values,
            grid_id: grid.id(),
        })
    }

    pub(crate) fn from_raw(grid_id: GridId, values: Vec<f64>) -> Self {
        Self { values, grid_id }
    }

    pub fn zeros<G: Grid + ?Sized>(grid: &G) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant<G: Grid + ?Sized>(grid: &G, c: f64) -> Self {
        Self::from_raw(grid.id(), vec![c; grid.len()])
    }

    /// Sample `f` at the node coordinates.
    pub fn from_fn<G: Grid + ?Sized>(grid: &G, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (a, b) = grid.coords(k);
                f(a, b)
            })
            .collect();
        Self::from_raw(grid.id(), values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid_id(&self) -> GridId {
        self.grid_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_raw(self.grid_id, self.values.iter().map(|&v| f(v)).collect())
    }
}

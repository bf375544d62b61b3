//! Uniform spatial grids and sampled fields.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::numerics;
use crate::Result;

/// Minimum number of nodes for a usable field.
pub const MIN_NODES: usize = 16;

/// A uniform grid of `n` nodes `x_i = x_min + i*dx`, `i = 0..n`.
///
/// The node set covers `[x_min, x_min + (n-1)*dx]`; when built from a
/// scenario box `[x_min, x_max]` with `n` nodes, `dx = (x_max - x_min)/n`
/// so the right box edge itself is not a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0) || !x_min.is_finite() || !dx.is_finite() {
            return Err(CoreError::Config(format!("invalid grid: x_min={x_min}, dx={dx}")));
        }
        if n < MIN_NODES {
            return Err(CoreError::Config(format!("grid needs >= {MIN_NODES} nodes, got {n}")));
        }
        Ok(Self { x_min, dx, n })
    }

    /// Grid over the box `[x_min, x_max)` with spacing `(x_max - x_min)/n`.
    pub fn from_box(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(CoreError::Config(format!("empty box [{x_min}, {x_max}]")));
        }
        Self::new(x_min, (x_max - x_min) / n as f64, n)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx * i as f64
    }

    /// Position of the last node.
    pub fn x_last(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Fractional index of `x`; not clamped.
    pub fn frac_index(&self, x: f64) -> f64 {
        (x - self.x_min) / self.dx
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_last()
    }
}

/// Samples of a real function on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(CoreError::GridMismatch(format!(
                "{} values on a {}-node grid",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Config("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        numerics::trapezoid(&self.values, self.grid.dx)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation at `x` (clamped to the node range).
    pub fn interp(&self, x: f64) -> f64 {
        linear_interp(&self.values, &self.grid, x)
    }

    pub fn same_grid(&self, other: &DiscreteField) -> bool {
        self.grid == other.grid
    }
}

/// Linear interpolation of node samples, clamped at the edges.
pub fn linear_interp(values: &[f64], grid: &GridSpec, x: f64) -> f64 {
    let fi = grid.frac_index(x);
    if fi <= 0.0 {
        return values[0];
    }
    let last = values.len() - 1;
    if fi >= last as f64 {
        return values[last];
    }
    let i = fi.floor() as usize;
    let w = fi - i as f64;
    values[i] * (1.0 - w) + values[i + 1] * w
}

/// Centered second-order first derivative, one-sided (still second-order)
/// at the edges.
pub fn derivative_centered(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dx);
    out
}

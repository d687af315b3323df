//! Uniform cell-centered grids on a box and the discrete function spaces on them.
//!
//! A [`Grid`] covers `(0, L_0)` in one dimension or `(0, L_0) x (0, L_1)` in
//! two. Values live at cell centers and are stored row-major (axis 0 is the
//! slow index). Integrals use the midpoint rule, so the total quadrature
//! weight is exactly `|Omega|`.
//!
//! The Laplacian closes the boundary with a mirror (ghost-cell reflection),
//! which makes the discrete normal derivative vanish and the discrete
//! divergence theorem exact. The gradient lives on interior cell faces with
//! zero boundary flux, so summation by parts gives
//! `|grad u|^2 = (-lap u, u)` without remainder.

use crate::error::{Error, Result};

/// Uniform tensor mesh in one or two dimensions.
///
/// In 1D the second axis is stored as a single cell of unit length so that
/// all index and weight arithmetic is shared between the two cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
}

impl Grid {
    pub fn new(lengths: &[f64], cells: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if cells.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{dim} lengths but {} cell counts",
                cells.len()
            )));
        }
        let mut l = [1.0; 2];
        let mut c = [1usize; 2];
        for axis in 0..dim {
            if !(lengths[axis].is_finite() && lengths[axis] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "length along axis {axis} must be positive and finite, got {}",
                    lengths[axis]
                )));
            }
            if cells[axis] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "need at least 2 cells along axis {axis}, got {}",
                    cells[axis]
                )));
            }
            l[axis] = lengths[axis];
            c[axis] = cells[axis];
        }
        Ok(Grid {
            dim,
            lengths: l,
            cells: c,
        })
    }

    pub fn unit_interval(cells: usize) -> Result<Self> {
        Grid::new(&[1.0], &[cells])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    /// Number of grid values (product of cells over all axes).
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Midpoint quadrature weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing(0) * self.spacing(1)
    }

    /// Measure of the domain, `prod lengths`.
    pub fn volume(&self) -> f64 {
        self.lengths[0] * self.lengths[1]
    }

    pub(crate) fn shape(&self) -> [usize; 2] {
        self.cells
    }

    pub fn center(&self, index: usize) -> [f64; 2] {
        let i = index / self.cells[1];
        let j = index % self.cells[1];
        [
            (i as f64 + 0.5) * self.spacing(0),
            (j as f64 + 0.5) * self.spacing(1),
        ]
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Real-valued grid function sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Field { grid, values })
    }

    /// Samples `f` at every cell center. Only the first `dim` coordinates
    /// of the point are meaningful.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.center(k))).collect();
        Field { grid, values }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field::from_vec_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> Field {
        self.map(|v| v * factor)
    }

    /// `integral of u over Omega`, midpoint rule.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn v_norm(&self) -> f64 {
        v_norm_sq(self).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        linf_norm(self)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(u, w)_H`, the midpoint-rule L2 inner product.
pub fn l2_inner(u: &Field, w: &Field) -> Result<f64> {
    u.grid.check_same(&w.grid)?;
    Ok(u.grid.cell_volume()
        * u.values
            .iter()
            .zip(&w.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
}

/// Squared L2 norm of the face gradient. Boundary faces carry zero flux.
pub fn grad_norm_sq(u: &Field) -> f64 {
    let g = u.grid;
    let [n0, n1] = g.shape();
    let (dx0, dx1) = (g.spacing(0), g.spacing(1));
    let v = &u.values;
    let mut sum = 0.0;
    for i in 0..n0 {
        for j in 0..n1 {
            let k = i * n1 + j;
            if i + 1 < n0 {
                let d = (v[k + n1] - v[k]) / dx0;
                sum += d * d;
            }
            if j + 1 < n1 {
                let d = (v[k + 1] - v[k]) / dx1;
                sum += d * d;
            }
        }
    }
    g.cell_volume() * sum
}

/// `|u|_V^2 = |grad_h u|_H^2 + |u|_H^2`.
pub fn v_norm_sq(u: &Field) -> f64 {
    grad_norm_sq(u) + u.h_norm_sq()
}

pub fn linf_norm(u: &Field) -> f64 {
    u.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Five-point (three-point in 1D) Laplacian with mirror boundary closure.
pub fn neumann_laplacian(u: &Field) -> Field {
    let mut out = vec![0.0; u.values.len()];
    apply_laplacian(&u.grid, &u.values, &mut out);
    Field::from_vec_unchecked(u.grid, out)
}

pub(crate) fn apply_laplacian(grid: &Grid, u: &[f64], out: &mut [f64]) {
    let [n0, n1] = grid.shape();
    let inv0 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    let inv1 = 1.0 / (grid.spacing(1) * grid.spacing(1));
    for i in 0..n0 {
        for j in 0..n1 {
            let k = i * n1 + j;
            let c = u[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += (u[k - n1] - c) * inv0;
            }
            if i + 1 < n0 {
                acc += (u[k + n1] - c) * inv0;
            }
            if j > 0 {
                acc += (u[k - 1] - c) * inv1;
            }
            if j + 1 < n1 {
                acc += (u[k + 1] - c) * inv1;
            }
            out[k] = acc;
        }
    }
}

/// Diagonal of `-lap_h` (neighbor count per axis over `dx^2`).
pub(crate) fn laplacian_diagonal(grid: &Grid) -> Vec<f64> {
    let [n0, n1] = grid.shape();
    let inv0 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    let inv1 = 1.0 / (grid.spacing(1) * grid.spacing(1));
    let neighbors =
        |i: usize, n: usize| -> f64 { (usize::from(i > 0) + usize::from(i + 1 < n)) as f64 };
    let mut d = Vec::with_capacity(grid.len());
    for i in 0..n0 {
        for j in 0..n1 {
            d.push(neighbors(i, n0) * inv0 + neighbors(j, n1) * inv1);
        }
    }
    d
}

//! Nonlocal interaction kernel `J`, the coefficient `a(x) = int J(x - y) dy`
//! and the bounded-domain convolution `(J * phi)(x) = int J(x - y) phi(y) dy`.
//!
//! Both integrals use the same midpoint rule on the grid, so `J * 1 == a`
//! holds bit-for-bit and `a phi - J * phi` annihilates constants.
//! The convolution runs over `Omega`, not a torus: the FFT path zero-pads
//! every active axis to `2n` points, which leaves no wraparound.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Grids with at least this many cells get a parallel direct sum.
const PARALLEL_THRESHOLD: usize = 4096;
/// `Auto` switches to the FFT path above this many cells.
const FFT_THRESHOLD: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `J(x) = value`.
    Constant { value: f64 },
    /// `J(x) = amplitude * exp(-|x|^2 / (2 width^2))`.
    Gaussian { amplitude: f64, width: f64 },
    /// Samples on the difference lattice `{x_i - x_j}`, row-major over
    /// offsets `d_k in -(n_k - 1)..=(n_k - 1)`.
    Tabulated { samples: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanChoice {
    #[default]
    Auto,
    Direct,
    Fft,
}

#[derive(Clone)]
pub enum ConvolutionPlan {
    Direct,
    Fft(FftPlan),
}

impl std::fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConvolutionPlan::Direct => f.write_str("Direct"),
            ConvolutionPlan::Fft(p) => write!(f, "Fft({:?})", p.padded),
        }
    }
}

/// Zero-padded FFT convolution with a precomputed kernel spectrum.
///
/// Scratch buffers are allocated per call, so a plan can be shared between
/// threads.
#[derive(Clone)]
pub struct FftPlan {
    padded: [usize; 2],
    spectrum: Vec<Complex<f64>>,
    forward: [Arc<dyn Fft<f64>>; 2],
    inverse: [Arc<dyn Fft<f64>>; 2],
}

/// Offset table of `J` on the difference lattice of a grid.
#[derive(Debug, Clone)]
struct DifferenceTable {
    extent: [usize; 2],
    values: Vec<f64>,
}

impl DifferenceTable {
    fn width(&self, axis: usize) -> usize {
        2 * self.extent[axis] - 1
    }

    fn at(&self, d0: isize, d1: isize) -> f64 {
        let r0 = (d0 + self.extent[0] as isize - 1) as usize;
        let r1 = (d1 + self.extent[1] as isize - 1) as usize;
        self.values[r0 * self.width(1) + r1]
    }

    fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let e0 = self.extent[0] as isize - 1;
        let e1 = self.extent[1] as isize - 1;
        (-e0..=e0).flat_map(move |d0| (-e1..=e1).map(move |d1| (d0, d1)))
    }
}

#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    grid: Grid,
    table: DifferenceTable,
    plan: ConvolutionPlan,
    a: Field,
}

impl Kernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn plan(&self) -> &ConvolutionPlan {
        &self.plan
    }

    /// `a(x_i) = sum_j J(x_i - x_j) |cell|`.
    pub fn a(&self) -> &Field {
        &self.a
    }

    /// `J` at the lattice offset `(d0, d1)` (use `d1 = 0` in 1D).
    pub fn value_at(&self, d0: isize, d1: isize) -> f64 {
        self.table.at(d0, d1)
    }

    /// Discrete `sup_x int |J(x - y)| dy`, the constant bounding
    /// `|J * phi|_inf <= bound * |phi|_inf`.
    pub fn operator_bound(&self) -> f64 {
        let abs = DifferenceTable {
            extent: self.table.extent,
            values: self.table.values.iter().map(|v| v.abs()).collect(),
        };
        let ones = vec![1.0; self.grid.len()];
        direct_sum(&self.grid, &abs, &ones)
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn convolve(&self, phi: &Field) -> Result<Field> {
        self.grid.check_same(phi.grid())?;
        Ok(self.convolve_unchecked(phi.values()))
    }

    pub(crate) fn convolve_unchecked(&self, phi: &[f64]) -> Field {
        let values = match &self.plan {
            ConvolutionPlan::Direct => direct_sum(&self.grid, &self.table, phi),
            ConvolutionPlan::Fft(plan) => plan.apply(&self.grid, phi),
        };
        Field::from_vec_unchecked(self.grid, values)
    }

    /// `a(.) phi - J * phi`.
    pub fn nonlocal_operator(&self, phi: &Field) -> Result<Field> {
        let conv = self.convolve(phi)?;
        let values = self
            .a
            .values()
            .iter()
            .zip(phi.values())
            .zip(conv.values())
            .map(|((a, p), c)| a * p - c)
            .collect();
        Ok(Field::from_vec_unchecked(self.grid, values))
    }
}

pub fn build_kernel(spec: &KernelSpec, grid: &Grid, choice: PlanChoice) -> Result<Kernel> {
    let table = tabulate(spec, grid)?;
    let use_fft = match choice {
        PlanChoice::Direct => false,
        PlanChoice::Fft => true,
        PlanChoice::Auto => grid.len() > FFT_THRESHOLD,
    };
    let plan = if use_fft {
        ConvolutionPlan::Fft(FftPlan::new(grid, &table))
    } else {
        ConvolutionPlan::Direct
    };
    let mut kernel = Kernel {
        spec: spec.clone(),
        grid: *grid,
        table,
        plan,
        a: Field::zeros(*grid),
    };
    kernel.a = kernel.convolve_unchecked(&vec![1.0; grid.len()]);
    if !kernel.a.is_finite() {
        return Err(Error::NonFinite("kernel integral a(x)".into()));
    }
    Ok(kernel)
}

fn tabulate(spec: &KernelSpec, grid: &Grid) -> Result<DifferenceTable> {
    let extent = grid.shape();
    let width = [2 * extent[0] - 1, 2 * extent[1] - 1];
    let dx = [grid.spacing(0), grid.spacing(1)];
    let mut table = DifferenceTable {
        extent,
        values: Vec::with_capacity(width[0] * width[1]),
    };
    match spec {
        KernelSpec::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::NonFinite("constant kernel value".into()));
            }
            table.values.resize(width[0] * width[1], *value);
        }
        KernelSpec::Gaussian {
            amplitude,
            width: sigma,
        } => {
            if !amplitude.is_finite() || !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "gaussian needs finite amplitude and positive width, got ({amplitude}, {sigma})"
                )));
            }
            let offsets: Vec<_> = table.offsets().collect();
            for (d0, d1) in offsets {
                let x0 = d0 as f64 * dx[0];
                let x1 = if grid.dim() == 2 {
                    d1 as f64 * dx[1]
                } else {
                    0.0
                };
                let r2 = x0 * x0 + x1 * x1;
                table
                    .values
                    .push(amplitude * (-r2 / (2.0 * sigma * sigma)).exp());
            }
        }
        KernelSpec::Tabulated { samples } => {
            if samples.len() != width[0] * width[1] {
                return Err(Error::InvalidKernel(format!(
                    "tabulated kernel needs {} samples on this grid's difference lattice, got {}",
                    width[0] * width[1],
                    samples.len()
                )));
            }
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("tabulated kernel samples".into()));
            }
            table.values = samples.clone();
            let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let offsets: Vec<_> = table.offsets().collect();
            for (d0, d1) in offsets {
                let (fwd, bwd) = (table.at(d0, d1), table.at(-d0, -d1));
                if (fwd - bwd).abs() > 1e-12 * scale {
                    let mut offset = vec![d0];
                    if grid.dim() == 2 {
                        offset.push(d1);
                    }
                    return Err(Error::AsymmetricKernel {
                        offset,
                        forward: fwd,
                        backward: bwd,
                    });
                }
            }
        }
    }
    Ok(table)
}

fn direct_sum(grid: &Grid, table: &DifferenceTable, phi: &[f64]) -> Vec<f64> {
    let [_, n1] = grid.shape();
    let w = grid.cell_volume();
    let cell = |k: usize| -> f64 {
        let (i, j) = ((k / n1) as isize, (k % n1) as isize);
        let mut acc = 0.0;
        for (l, &p) in phi.iter().enumerate() {
            let (a, b) = ((l / n1) as isize, (l % n1) as isize);
            acc += table.at(i - a, j - b) * p;
        }
        acc * w
    };
    if grid.len() >= PARALLEL_THRESHOLD {
        (0..grid.len()).into_par_iter().map(cell).collect()
    } else {
        (0..grid.len()).map(cell).collect()
    }
}

impl FftPlan {
    fn new(grid: &Grid, table: &DifferenceTable) -> Self {
        let [n0, n1] = grid.shape();
        let padded = [
            if n0 > 1 { 2 * n0 } else { 1 },
            if n1 > 1 { 2 * n1 } else { 1 },
        ];
        let mut planner = FftPlanner::new();
        let forward = [
            planner.plan_fft_forward(padded[0]),
            planner.plan_fft_forward(padded[1]),
        ];
        let inverse = [
            planner.plan_fft_inverse(padded[0]),
            planner.plan_fft_inverse(padded[1]),
        ];
        let w = grid.cell_volume();
        let mut spectrum = vec![Complex::new(0.0, 0.0); padded[0] * padded[1]];
        for (d0, d1) in table.offsets() {
            let r0 = d0.rem_euclid(padded[0] as isize) as usize;
            let r1 = d1.rem_euclid(padded[1] as isize) as usize;
            spectrum[r0 * padded[1] + r1] = Complex::new(table.at(d0, d1) * w, 0.0);
        }
        let mut plan = FftPlan {
            padded,
            spectrum: Vec::new(),
            forward,
            inverse,
        };
        plan.transform(&mut spectrum, false);
        plan.spectrum = spectrum;
        plan
    }

    fn transform(&self, data: &mut [Complex<f64>], inverse: bool) {
        let [p0, p1] = self.padded;
        let ffts = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        if p1 > 1 {
            ffts[1].process(data);
        }
        if p0 > 1 {
            let mut columns = vec![Complex::new(0.0, 0.0); data.len()];
            for i in 0..p0 {
                for j in 0..p1 {
                    columns[j * p0 + i] = data[i * p1 + j];
                }
            }
            ffts[0].process(&mut columns);
            for i in 0..p0 {
                for j in 0..p1 {
                    data[i * p1 + j] = columns[j * p0 + i];
                }
            }
        }
    }

    fn apply(&self, grid: &Grid, phi: &[f64]) -> Vec<f64> {
        let [n0, n1] = grid.shape();
        let [p0, p1] = self.padded;
        let mut buf = vec![Complex::new(0.0, 0.0); p0 * p1];
        for i in 0..n0 {
            for j in 0..n1 {
                buf[i * p1 + j] = Complex::new(phi[i * n1 + j], 0.0);
            }
        }
        self.transform(&mut buf, false);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.transform(&mut buf, true);
        let norm = 1.0 / (p0 * p1) as f64;
        let mut out = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            for j in 0..n1 {
                out.push(buf[i * p1 + j].re * norm);
            }
        }
        out
    }
}

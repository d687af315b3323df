//! Analytic presets for initial data and forcing.
//!
//! Forcing is separable, `f(x, t) = S(x) T(t)`, with `T` a polynomial or a
//! single cosine in time. Step averages use three-point Gauss-Legendre,
//! which is exact for polynomials of degree at most five.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Closed-form spatial profile sampled at cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPreset {
    Zero,
    Constant {
        value: f64,
    },
    /// `offset + amplitude * prod_k cos(modes[k] pi x_k / L_k)`.
    Cosine {
        amplitude: f64,
        modes: Vec<u32>,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// Raw row-major values.
    Samples {
        values: Vec<f64>,
    },
}

impl FieldPreset {
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        let dim = grid.dim();
        let field = match self {
            FieldPreset::Zero => Field::zeros(*grid),
            FieldPreset::Constant { value } => Field::constant(*grid, *value),
            FieldPreset::Cosine {
                amplitude,
                modes,
                offset,
            } => {
                if modes.len() != dim {
                    return Err(Error::config(format!(
                        "cosine preset needs {dim} modes, got {}",
                        modes.len()
                    )));
                }
                let lengths = grid.lengths().to_vec();
                Field::from_fn(*grid, |x| {
                    let mut prod = 1.0;
                    for k in 0..dim {
                        prod *= (modes[k] as f64 * std::f64::consts::PI * x[k] / lengths[k]).cos();
                    }
                    offset + amplitude * prod
                })
            }
            FieldPreset::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if center.len() != dim {
                    return Err(Error::config(format!(
                        "gaussian preset needs a {dim}-dimensional center"
                    )));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::config("gaussian preset needs a positive width"));
                }
                Field::from_fn(*grid, |x| {
                    let r2: f64 = (0..dim).map(|k| (x[k] - center[k]).powi(2)).sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                })
            }
            FieldPreset::Samples { values } => return Field::from_values(*grid, values.clone()),
        };
        if !field.is_finite() {
            return Err(Error::NonFinite("preset field".into()));
        }
        Ok(field)
    }
}

/// Time factor `T(t)` of a separable forcing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    /// `sum_k coefficients[k] t^k`.
    Polynomial { coefficients: Vec<f64> },
    /// `amplitude * cos(omega t + phase)`.
    Cosine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            TimeProfile::Cosine {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).cos(),
        }
    }

    /// Mean over `[t0, t1]` by three-point Gauss-Legendre.
    pub fn mean(&self, t0: f64, t1: f64) -> f64 {
        let mid = 0.5 * (t0 + t1);
        let half = 0.5 * (t1 - t0);
        let xi = (0.6f64).sqrt();
        0.5 * (5.0 / 9.0 * self.eval(mid - half * xi)
            + 8.0 / 9.0 * self.eval(mid)
            + 5.0 / 9.0 * self.eval(mid + half * xi))
    }
}

fn unit_space() -> FieldPreset {
    FieldPreset::Constant { value: 1.0 }
}

/// Separable forcing `f(x, t) = space(x) * time(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    #[serde(default = "unit_space")]
    pub space: FieldPreset,
    pub time: TimeProfile,
}

impl ForcingSpec {
    pub fn zero() -> Self {
        ForcingSpec::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        ForcingSpec {
            space: unit_space(),
            time: TimeProfile::Polynomial {
                coefficients: vec![value],
            },
        }
    }

    /// True when `f` does not depend on time.
    pub fn is_time_constant(&self) -> bool {
        match &self.time {
            TimeProfile::Polynomial { coefficients } => {
                coefficients.iter().skip(1).all(|&c| c == 0.0)
            }
            TimeProfile::Cosine {
                amplitude, omega, ..
            } => *amplitude == 0.0 || *omega == 0.0,
        }
    }
}

/// Forcing sampled on a grid, ready to be averaged over steps.
#[derive(Debug, Clone)]
pub struct Forcing {
    space: Field,
    time: TimeProfile,
}

impl Forcing {
    pub fn new(spec: &ForcingSpec, grid: &Grid) -> Result<Self> {
        Ok(Forcing {
            space: spec.space.sample(grid)?,
            time: spec.time.clone(),
        })
    }

    pub fn eval(&self, t: f64) -> Field {
        self.space.scale(self.time.eval(t))
    }

    /// `f_k = (1/h) int_{(k-1)h}^{kh} f(s) ds`, `k >= 1`.
    pub fn average(&self, k: usize, h: f64) -> Field {
        debug_assert!(k >= 1);
        let t0 = (k - 1) as f64 * h;
        let t1 = k as f64 * h;
        self.space.scale(self.time.mean(t0, t1))
    }
}

/// Free-function form of [`Forcing::average`].
pub fn average_forcing(forcing: &Forcing, k: usize, h: f64) -> Field {
    forcing.average(k, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::unit_interval(8).unwrap()
    }

    #[test]
    fn constant_forcing_average() {
        let f = Forcing::new(&ForcingSpec::constant(1.0), &grid()).unwrap();
        assert!(f.average(3, 0.1).values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn linear_in_time_average() {
        let spec = ForcingSpec {
            space: unit_space(),
            time: TimeProfile::Polynomial {
                coefficients: vec![0.0, 1.0],
            },
        };
        let f = Forcing::new(&spec, &grid()).unwrap();
        assert!(f
            .average(1, 0.1)
            .values()
            .iter()
            .all(|v| (v - 0.05).abs() < 1e-15));
    }

    #[test]
    fn quintic_is_integrated_exactly() {
        let c = vec![0.3, -1.0, 2.0, 0.5, -0.7, 1.1];
        let antiderivative = |t: f64| -> f64 {
            c.iter()
                .enumerate()
                .map(|(k, ck)| ck * t.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum()
        };
        let prof = TimeProfile::Polynomial {
            coefficients: c.clone(),
        };
        let (t0, t1) = (0.4, 0.7);
        let exact = (antiderivative(t1) - antiderivative(t0)) / (t1 - t0);
        assert!((prof.mean(t0, t1) - exact).abs() < 1e-14);
    }

    #[test]
    fn cosine_average_matches_antiderivative() {
        let spec = ForcingSpec {
            space: unit_space(),
            time: TimeProfile::Cosine {
                amplitude: 1.0,
                omega: 1.0,
                phase: 0.0,
            },
        };
        let f = Forcing::new(&spec, &grid()).unwrap();
        let exact = ((0.2f64).sin() - (0.1f64).sin()) / 0.1;
        assert!(f
            .average(2, 0.1)
            .values()
            .iter()
            .all(|v| (v - exact).abs() < 1e-12));
    }

    #[test]
    fn presets_validate_dimensions() {
        let g = Grid::new(&[1.0, 1.0], &[4, 4]).unwrap();
        let bad = FieldPreset::Cosine {
            amplitude: 1.0,
            modes: vec![1],
            offset: 0.0,
        };
        assert!(bad.sample(&g).is_err());
        let good = FieldPreset::Cosine {
            amplitude: 2.0,
            modes: vec![0, 0],
            offset: 1.0,
        };
        assert!(good.sample(&g).unwrap().values().iter().all(|&v| v == 3.0));
        assert!(FieldPreset::Samples {
            values: vec![1.0; 3]
        }
        .sample(&g)
        .is_err());
    }
}

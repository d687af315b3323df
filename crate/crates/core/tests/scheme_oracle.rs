//! One step of the scheme against a straightforward reimplementation:
//! explicit double-loop convolution, bisection for the pointwise equation,
//! and Gaussian elimination on the dense Helmholtz matrix.

use npfs::grid::{Field, Grid};
use npfs::kernel::{KernelSpec, PlanChoice};
use npfs::presets::ForcingSpec;
use npfs::resolvent::Nonlinearity;
use npfs::scheme::{solve_trajectory, Scenario, StepState, Stepper};

const AMP: f64 = 1.0;
const WIDTH: f64 = 0.1;
const PI_B: f64 = 0.5;
const PI_C: f64 = 0.1;

fn j(d: [f64; 2]) -> f64 {
    AMP * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * WIDTH * WIDTH)).exp()
}

fn centers(grid: &Grid) -> Vec<[f64; 2]> {
    (0..grid.len()).map(|i| grid.center(i)).collect()
}

fn naive_conv(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let xs = centers(grid);
    let w = grid.cell_volume();
    xs.iter()
        .map(|xi| {
            xs.iter()
                .zip(u)
                .map(|(xj, uj)| j([xi[0] - xj[0], xi[1] - xj[1]]) * uj * w)
                .sum()
        })
        .collect()
}

fn bisect(g: f64, h: f64) -> f64 {
    let f = |r: f64| (1.0 + h) * r + h * h * (r * r * r + PI_B * r + PI_C) - g;
    let (mut lo, mut hi) = (-100.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dense `I - h lap` with the mirror closure, built cell by cell.
fn helmholtz_matrix(grid: &Grid, h: f64) -> Vec<Vec<f64>> {
    let (nx, ny) = if grid.dim() == 1 {
        (grid.cells()[0], 1)
    } else {
        (grid.cells()[0], grid.cells()[1])
    };
    let n = nx * ny;
    let mut a = vec![vec![0.0; n]; n];
    let idx = |i: usize, k: usize| i * ny + k;
    for i in 0..nx {
        for k in 0..ny {
            let row = idx(i, k);
            a[row][row] = 1.0;
            let mut couple = |other: Option<usize>, dx: f64| {
                if let Some(o) = other {
                    let c = h / (dx * dx);
                    a[row][row] += c;
                    a[row][o] -= c;
                }
            };
            let dx0 = grid.spacing(0);
            couple(i.checked_sub(1).map(|p| idx(p, k)), dx0);
            couple((i + 1 < nx).then(|| idx(i + 1, k)), dx0);
            if grid.dim() == 2 {
                let dx1 = grid.spacing(1);
                couple(k.checked_sub(1).map(|p| idx(i, p)), dx1);
                couple((k + 1 < ny).then(|| idx(i, k + 1)), dx1);
            }
        }
    }
    a
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            if m != 0.0 {
                let pivot_row = a[col].clone();
                for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= m * p;
                }
                b[r] -= m * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// The rewritten scheme, literally.
fn naive_step(grid: &Grid, h: f64, prev: &StepState, f: &[f64]) -> [Vec<f64>; 4] {
    let (theta, phi, v) = (prev.theta.values(), prev.phi.values(), prev.v.values());
    let ones = vec![1.0; grid.len()];
    let a = naive_conv(grid, &ones);
    let conv = naive_conv(grid, phi);
    let n = grid.len();
    let phi1: Vec<f64> = (0..n)
        .map(|i| {
            let g = h * h * theta[i] + (1.0 + h) * phi[i] + h * v[i] - h * h * a[i] * phi[i]
                + h * h * conv[i];
            bisect(g, h)
        })
        .collect();
    let v1: Vec<f64> = (0..n).map(|i| (phi1[i] - phi[i]) / h).collect();
    let z1: Vec<f64> = (0..n).map(|i| (v1[i] - v[i]) / h).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| h * f[i] + phi[i] - phi1[i] + theta[i])
        .collect();
    let theta1 = gauss_solve(helmholtz_matrix(grid, h), rhs);
    [theta1, phi1, v1, z1]
}

fn h_dist(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() * grid.cell_volume()).sqrt()
}

fn scenario(grid: Grid, steps: usize, plan: PlanChoice) -> Scenario {
    let pi = std::f64::consts::PI;
    let l0 = grid.lengths()[0];
    Scenario {
        grid,
        t_final: 0.25,
        steps,
        kernel: KernelSpec::Gaussian {
            amplitude: AMP,
            width: WIDTH,
        },
        plan,
        nonlinearity: Nonlinearity::cubic(1.0, PI_B, PI_C).unwrap(),
        forcing: ForcingSpec::constant(0.7),
        theta0: Field::from_fn(grid, |x| (pi * x[0] / l0).cos() + 0.3 * x[1]),
        phi0: Field::from_fn(grid, |x| 0.8 * (2.0 * pi * x[0] / l0).sin() - 0.2 * x[1]),
        v0: Field::from_fn(grid, |x| 0.3 * (x[0] - 0.5)),
    }
}

fn compare(s: &Scenario) {
    let traj = solve_trajectory(s).unwrap();
    let stepper = Stepper::new(s).unwrap();
    let h = s.h();
    for n in 0..s.steps {
        let prev = traj.state(n);
        let next = traj.state(n + 1);
        let oracle = naive_step(&s.grid, h, prev, traj.forcing_average(n + 1).values());
        let lib = [&next.theta, &next.phi, &next.v, &next.z];
        for (name, (o, l)) in ["theta", "phi", "v", "z"]
            .iter()
            .zip(oracle.iter().zip(lib))
        {
            let d = h_dist(&s.grid, o, l.values());
            assert!(d < 1e-8, "step {n}, {name}: {d:e}");
        }
        let r = stepper
            .residuals(prev, next, traj.forcing_average(n + 1))
            .unwrap();
        assert!(r.heat < 1e-9 && r.momentum < 1e-9, "{r:?}");
    }
}

#[test]
fn one_dimensional_steps_match_naive_oracle() {
    compare(&scenario(
        Grid::unit_interval(48).unwrap(),
        5,
        PlanChoice::Direct,
    ));
}

#[test]
fn fft_plan_steps_match_naive_oracle() {
    compare(&scenario(
        Grid::unit_interval(40).unwrap(),
        4,
        PlanChoice::Fft,
    ));
}

#[test]
fn two_dimensional_steps_match_naive_oracle() {
    let grid = Grid::new(&[1.0, 0.6], &[9, 7]).unwrap();
    compare(&scenario(grid, 3, PlanChoice::Fft));
    compare(&scenario(grid, 3, PlanChoice::Direct));
}

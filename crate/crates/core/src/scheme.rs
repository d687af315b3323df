//! The semi-implicit time discretization and its interpolants.
//!
//! One step maps `(theta_n, phi_n, v_n)` to the next state by
//!
//! ```text
//! (theta_{n+1} - theta_n)/h + v_{n+1} - lap theta_{n+1} = f_{n+1}
//! z_{n+1} + v_{n+1} + a phi_n - J*phi_n + beta(phi_{n+1}) + pi(phi_{n+1}) = theta_n
//! z_{n+1} = (v_{n+1} - v_n)/h,   v_{n+1} = (phi_{n+1} - phi_n)/h
//! ```
//!
//! The momentum equation is a pointwise monotone resolvent in `phi_{n+1}`;
//! the heat equation is then a Neumann Helmholtz solve. Both are carried out
//! for the increments (`z_{n+1}` and `theta_{n+1} - theta_n`) so the
//! equation residuals stay at rounding level for small `h`; the node values
//! follow as `v_{n+1} = v_n + h z_{n+1}`, `phi_{n+1} = phi_n + h v_{n+1}`.
//!
//! Piecewise interpolants on `[0, T]`: `hat` is linear between nodes, `bar`
//! takes the right node and `underline` the left node on `(nh, (n+1)h]`.
//! At `t = 0` the piecewise-constant ones take the value of the first
//! interval (right-continuous extension).

use crate::elliptic::{cg_solve, CG_TOL};
use crate::error::{Error, Result};
use crate::grid::{neumann_laplacian, v_norm_sq, Field, Grid};
use crate::kernel::{build_kernel, Kernel, KernelSpec, PlanChoice};
use crate::presets::{Forcing, ForcingSpec};
use crate::resolvent::{resolvent_increment_cells, Nonlinearity};

/// Full problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: Grid,
    pub t_final: f64,
    pub steps: usize,
    pub kernel: KernelSpec,
    pub plan: PlanChoice,
    pub nonlinearity: Nonlinearity,
    pub forcing: ForcingSpec,
    pub theta0: Field,
    pub phi0: Field,
    pub v0: Field,
}

impl Scenario {
    pub fn h(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::config(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        if self.steps == 0 {
            return Err(Error::config("step count must be at least 1"));
        }
        self.nonlinearity.admissible_h().check(self.h())?;
        for (name, field) in [
            ("theta0", &self.theta0),
            ("phi0", &self.phi0),
            ("v0", &self.v0),
        ] {
            self.grid.check_same(field.grid())?;
            if !field.is_finite() {
                return Err(Error::NonFinite(name.into()));
            }
        }
        if !v_norm_sq(&self.theta0).is_finite() {
            return Err(Error::NonFinite("V-norm of theta0".into()));
        }
        Ok(())
    }

    pub fn with_steps(&self, steps: usize) -> Result<Scenario> {
        let s = Scenario {
            steps,
            ..self.clone()
        };
        s.validate()?;
        Ok(s)
    }

    /// Equal in everything except the step count.
    pub fn same_problem(&self, other: &Scenario) -> bool {
        self.with_steps_unchecked(other.steps) == *other
    }

    fn with_steps_unchecked(&self, steps: usize) -> Scenario {
        Scenario {
            steps,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub n: usize,
    pub theta: Field,
    pub phi: Field,
    pub v: Field,
    /// Zero at `n = 0`, where it is undefined; see [`StepState::has_z`].
    pub z: Field,
}

impl StepState {
    pub fn initial(theta0: Field, phi0: Field, v0: Field) -> Self {
        let z = Field::zeros(*theta0.grid());
        StepState {
            n: 0,
            theta: theta0,
            phi: phi0,
            v: v0,
            z,
        }
    }

    pub fn has_z(&self) -> bool {
        self.n > 0
    }

    /// `int (theta + phi)`.
    pub fn mass(&self) -> f64 {
        self.theta.integral() + self.phi.integral()
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite() && self.v.is_finite() && self.z.is_finite()
    }
}

/// H-norm residuals of both equations for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeResiduals {
    pub heat: f64,
    pub momentum: f64,
}

/// Prepared operators for one scenario and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    h: f64,
    kernel: Kernel,
    nonlinearity: Nonlinearity,
}

impl Stepper {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Stepper {
            grid: scenario.grid,
            h: scenario.h(),
            kernel: build_kernel(&scenario.kernel, &scenario.grid, scenario.plan)?,
            nonlinearity: scenario.nonlinearity.clone(),
        })
    }

    pub fn from_parts(kernel: Kernel, nonlinearity: Nonlinearity, h: f64) -> Result<Self> {
        nonlinearity.admissible_h().check(h)?;
        Ok(Stepper {
            grid: *kernel.grid(),
            h,
            kernel,
            nonlinearity,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// Advances `prev` by one step with forcing average `f_next = f_{n+1}`.
    pub fn step(&self, prev: &StepState, f_next: &Field) -> Result<StepState> {
        self.step_inner(prev, f_next)
            .map_err(|e| e.at_step(prev.n + 1))
    }

    fn step_inner(&self, prev: &StepState, f_next: &Field) -> Result<StepState> {
        let h = self.h;
        let grid = self.grid;
        for f in [&prev.theta, &prev.phi, &prev.v, f_next] {
            grid.check_same(f.grid())?;
        }
        let conv = self.kernel.convolve_unchecked(prev.phi.values());
        let a = self.kernel.a().values();
        let (theta, phi, v) = (prev.theta.values(), prev.phi.values(), prev.v.values());

        // momentum equation, solved for z_{n+1}
        let base: Vec<f64> = phi.iter().zip(v).map(|(p, vi)| p + h * vi).collect();
        let rhs: Vec<f64> = (0..grid.len())
            .map(|i| theta[i] - v[i] - a[i] * phi[i] + conv.values()[i])
            .collect();
        let z = resolvent_increment_cells(&base, &rhs, h, &self.nonlinearity)?;
        let v_next: Vec<f64> = v.iter().zip(&z).map(|(vi, zi)| vi + h * zi).collect();
        let phi_next: Vec<f64> = phi.iter().zip(&v_next).map(|(p, vi)| p + h * vi).collect();

        // heat equation, solved for theta_{n+1} - theta_n
        let lap = neumann_laplacian(&prev.theta);
        let heat_rhs: Vec<f64> = (0..grid.len())
            .map(|i| h * (f_next.values()[i] - v_next[i] + lap.values()[i]))
            .collect();
        let dtheta = cg_solve(&grid, h, &heat_rhs, CG_TOL)?;
        let theta_next: Vec<f64> = theta.iter().zip(&dtheta).map(|(t, d)| t + d).collect();

        let next = StepState {
            n: prev.n + 1,
            theta: Field::from_vec_unchecked(grid, theta_next),
            phi: Field::from_vec_unchecked(grid, phi_next),
            v: Field::from_vec_unchecked(grid, v_next),
            z: Field::from_vec_unchecked(grid, z),
        };
        if !next.is_finite() {
            return Err(Error::NonFinite("step state".into()));
        }
        Ok(next)
    }

    /// Residuals of the undivided scheme equations for `prev -> next`.
    pub fn residuals(
        &self,
        prev: &StepState,
        next: &StepState,
        f_next: &Field,
    ) -> Result<SchemeResiduals> {
        let h = self.h;
        let lap = neumann_laplacian(&next.theta);
        let heat: Vec<f64> = (0..self.grid.len())
            .map(|i| {
                (next.theta.values()[i] - prev.theta.values()[i]) / h + next.v.values()[i]
                    - lap.values()[i]
                    - f_next.values()[i]
            })
            .collect();
        let nonlocal = self.kernel.nonlocal_operator(&prev.phi)?;
        let nl = &self.nonlinearity;
        let momentum: Vec<f64> = (0..self.grid.len())
            .map(|i| {
                let p = next.phi.values()[i];
                next.z.values()[i]
                    + next.v.values()[i]
                    + nonlocal.values()[i]
                    + nl.beta(p)
                    + nl.pi(p)
                    - prev.theta.values()[i]
            })
            .collect();
        Ok(SchemeResiduals {
            heat: Field::from_vec_unchecked(self.grid, heat).h_norm(),
            momentum: Field::from_vec_unchecked(self.grid, momentum).h_norm(),
        })
    }
}

/// Which node sequence an interpolant reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Theta,
    Phi,
    V,
    Z,
    F,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Theta => "theta",
            Quantity::Phi => "phi",
            Quantity::V => "v",
            Quantity::Z => "z",
            Quantity::F => "f",
        }
    }
}

/// Discrete solution `n = 0..=N` with the forcing averages `f_1..f_N`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    scenario: Option<Scenario>,
    grid: Grid,
    t_final: f64,
    states: Vec<StepState>,
    forcing: Vec<Field>,
}

impl Trajectory {
    /// Assembles a trajectory from node values, deriving `v` and `z` by the
    /// difference relations. `theta` and `phi` hold `N + 1` nodes and
    /// `forcing` the `N` step averages.
    pub fn from_nodes(
        t_final: f64,
        theta: Vec<Field>,
        phi: Vec<Field>,
        v0: Field,
        forcing: Vec<Field>,
    ) -> Result<Self> {
        let steps = theta
            .len()
            .checked_sub(1)
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Incompatible("need at least two nodes".into()))?;
        if phi.len() != steps + 1 || forcing.len() != steps {
            return Err(Error::Incompatible(format!(
                "{} theta nodes, {} phi nodes, {} forcing averages",
                theta.len(),
                phi.len(),
                forcing.len()
            )));
        }
        let grid = *v0.grid();
        let h = t_final / steps as f64;
        let mut states = vec![StepState::initial(theta[0].clone(), phi[0].clone(), v0)];
        for n in 0..steps {
            let prev = &states[n];
            let v = phi[n + 1].sub(&phi[n])?.scale(1.0 / h);
            let z = v.sub(&prev.v)?.scale(1.0 / h);
            states.push(StepState {
                n: n + 1,
                theta: theta[n + 1].clone(),
                phi: phi[n + 1].clone(),
                v,
                z,
            });
        }
        for s in &states {
            grid.check_same(s.theta.grid())?;
            grid.check_same(s.phi.grid())?;
        }
        Ok(Trajectory {
            scenario: None,
            grid,
            t_final,
            states,
            forcing,
        })
    }

    pub fn scenario(&self) -> Option<&Scenario> {
        self.scenario.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.t_final / self.steps() as f64
    }

    pub fn states(&self) -> &[StepState] {
        &self.states
    }

    pub fn state(&self, n: usize) -> &StepState {
        &self.states[n]
    }

    /// `f_k` for `k = 1..=N`.
    pub fn forcing_average(&self, k: usize) -> &Field {
        &self.forcing[k - 1]
    }

    pub fn forcing_averages(&self) -> &[Field] {
        &self.forcing
    }

    /// Node value `n` of a quantity. `F` is indexed `1..=N`.
    pub fn node(&self, q: Quantity, n: usize) -> &Field {
        let s = &self.states[n];
        match q {
            Quantity::Theta => &s.theta,
            Quantity::Phi => &s.phi,
            Quantity::V => &s.v,
            Quantity::Z => &s.z,
            Quantity::F => &self.forcing[n - 1],
        }
    }

    #[doc(hidden)]
    pub fn states_mut(&mut self) -> &mut [StepState] {
        &mut self.states
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t_final;
        if t.is_finite() && t >= -slack && t <= self.t_final + slack {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                t,
                t_final: self.t_final,
            })
        }
    }

    /// Node index if `t` sits on a node up to rounding.
    fn snap(&self, t: f64) -> Option<usize> {
        let x = t / self.h();
        let k = x.round();
        ((x - k).abs() <= 1e-9 && k >= 0.0 && k as usize <= self.steps()).then_some(k as usize)
    }

    /// `n` with `t in (nh, (n+1)h]`; `t = 0` maps to `n = 0`.
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        let n = match self.snap(t) {
            Some(k) => k.saturating_sub(1),
            None => (t / self.h()).floor() as usize,
        };
        Ok(n.min(self.steps() - 1))
    }

    /// Piecewise-linear interpolant of theta, phi or v.
    pub fn eval_hat(&self, q: Quantity, t: f64) -> Result<Field> {
        if !matches!(q, Quantity::Theta | Quantity::Phi | Quantity::V) {
            return Err(Error::UnsupportedQuantity {
                quantity: q.name(),
                kind: "hat",
            });
        }
        self.check_time(t)?;
        if let Some(k) = self.snap(t) {
            return Ok(self.node(q, k).clone());
        }
        let n = self.interval_of(t)?;
        let s = (t - n as f64 * self.h()) / self.h();
        self.node(q, n)
            .zip_map(self.node(q, n + 1), |a, b| a + (b - a) * s)
    }

    /// Time derivative of the hat interpolant on the interval containing `t`.
    pub fn eval_hat_rate(&self, q: Quantity, t: f64) -> Result<Field> {
        if !matches!(q, Quantity::Theta | Quantity::Phi | Quantity::V) {
            return Err(Error::UnsupportedQuantity {
                quantity: q.name(),
                kind: "hat",
            });
        }
        let n = self.interval_of(t)?;
        Ok(self
            .node(q, n + 1)
            .sub(self.node(q, n))?
            .scale(1.0 / self.h()))
    }

    /// Right-node piecewise-constant interpolant.
    pub fn eval_bar(&self, q: Quantity, t: f64) -> Result<Field> {
        let n = self.interval_of(t)?;
        Ok(self.node(q, n + 1).clone())
    }

    /// Left-node piecewise-constant interpolant of theta or phi.
    pub fn eval_underline(&self, q: Quantity, t: f64) -> Result<Field> {
        if !matches!(q, Quantity::Theta | Quantity::Phi) {
            return Err(Error::UnsupportedQuantity {
                quantity: q.name(),
                kind: "underline",
            });
        }
        let n = self.interval_of(t)?;
        Ok(self.node(q, n).clone())
    }
}

pub fn eval_hat(traj: &Trajectory, q: Quantity, t: f64) -> Result<Field> {
    traj.eval_hat(q, t)
}

pub fn eval_bar(traj: &Trajectory, q: Quantity, t: f64) -> Result<Field> {
    traj.eval_bar(q, t)
}

pub fn eval_underline(traj: &Trajectory, q: Quantity, t: f64) -> Result<Field> {
    traj.eval_underline(q, t)
}

pub fn solve_trajectory(scenario: &Scenario) -> Result<Trajectory> {
    solve_trajectory_with(scenario, |_, _| {})
}

/// Like [`solve_trajectory`], calling `observe(prev, next)` after each step.
pub fn solve_trajectory_with(
    scenario: &Scenario,
    mut observe: impl FnMut(&StepState, &StepState),
) -> Result<Trajectory> {
    let stepper = Stepper::new(scenario)?;
    let forcing = Forcing::new(&scenario.forcing, &scenario.grid)?;
    let h = scenario.h();
    let averages: Vec<Field> = (1..=scenario.steps)
        .map(|k| forcing.average(k, h))
        .collect();
    let mut states = Vec::with_capacity(scenario.steps + 1);
    states.push(StepState::initial(
        scenario.theta0.clone(),
        scenario.phi0.clone(),
        scenario.v0.clone(),
    ));
    for f_next in &averages {
        let next = stepper.step(states.last().expect("nonempty"), f_next)?;
        observe(states.last().expect("nonempty"), &next);
        states.push(next);
    }
    Ok(Trajectory {
        scenario: Some(scenario.clone()),
        grid: scenario.grid,
        t_final: scenario.t_final,
        states,
        forcing: averages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_scenario(steps: usize) -> Scenario {
        let grid = Grid::unit_interval(16).unwrap();
        Scenario {
            grid,
            t_final: 1.0,
            steps,
            kernel: KernelSpec::Gaussian {
                amplitude: 1.0,
                width: 0.1,
            },
            plan: PlanChoice::Direct,
            nonlinearity: Nonlinearity::cubic(1.0, 0.5, 0.0).unwrap(),
            forcing: ForcingSpec::zero(),
            theta0: Field::zeros(grid),
            phi0: Field::zeros(grid),
            v0: Field::zeros(grid),
        }
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let traj = solve_trajectory(&zero_scenario(8)).unwrap();
        for s in traj.states() {
            for f in [&s.theta, &s.phi, &s.v, &s.z] {
                assert_eq!(f.linf_norm(), 0.0);
            }
        }
    }

    #[test]
    fn constant_forcing_first_step() {
        let mut s = zero_scenario(10);
        s.forcing = ForcingSpec::constant(1.0);
        let traj = solve_trajectory(&s).unwrap();
        let first = traj.state(1);
        assert_eq!(first.phi.linf_norm(), 0.0);
        assert_eq!(first.v.linf_norm(), 0.0);
        assert!(first.theta.values().iter().all(|v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn single_step_trajectory() {
        let mut s = zero_scenario(1);
        s.t_final = 0.5;
        s.phi0 = Field::from_fn(s.grid, |x| (3.0 * x[0]).sin());
        let traj = solve_trajectory(&s).unwrap();
        assert_eq!(traj.steps(), 1);
        let stepper = Stepper::new(&s).unwrap();
        let direct = stepper
            .step(traj.state(0), traj.forcing_average(1))
            .unwrap();
        assert_eq!(&direct, traj.state(1));
    }

    #[test]
    fn inadmissible_step_is_rejected() {
        let mut s = zero_scenario(1);
        s.nonlinearity = Nonlinearity::cubic(1.0, 2.0, 0.0).unwrap();
        assert!(matches!(
            solve_trajectory(&s),
            Err(Error::InadmissibleStep { .. })
        ));
        s.steps = 3;
        assert!(solve_trajectory(&s).is_ok());
    }

    #[test]
    fn interpolants_at_nodes_and_midpoints() {
        let mut s = zero_scenario(4);
        s.theta0 = Field::from_fn(s.grid, |x| x[0]);
        s.phi0 = Field::from_fn(s.grid, |x| 1.0 - x[0]);
        s.forcing = ForcingSpec::constant(0.3);
        let traj = solve_trajectory(&s).unwrap();
        let h = traj.h();
        assert_eq!(&traj.eval_hat(Quantity::Theta, 0.0).unwrap(), &s.theta0);
        for n in 0..=4 {
            let t = n as f64 * h;
            assert_eq!(
                &traj.eval_hat(Quantity::Theta, t).unwrap(),
                traj.node(Quantity::Theta, n)
            );
        }
        let mid = traj.eval_hat(Quantity::Phi, 2.5 * h).unwrap();
        let mean = traj
            .node(Quantity::Phi, 2)
            .zip_map(traj.node(Quantity::Phi, 3), |a, b| 0.5 * (a + b))
            .unwrap();
        assert!(mid.sub(&mean).unwrap().linf_norm() < 1e-15);

        // right endpoint inclusive for bar, just above a node picks the next one
        assert_eq!(
            &traj.eval_bar(Quantity::Theta, 2.0 * h).unwrap(),
            traj.node(Quantity::Theta, 2)
        );
        let above = 2.0 * h + 1e-6;
        assert_eq!(
            &traj.eval_bar(Quantity::Theta, above).unwrap(),
            traj.node(Quantity::Theta, 3)
        );
        assert_eq!(
            &traj.eval_underline(Quantity::Theta, above).unwrap(),
            traj.node(Quantity::Theta, 2)
        );
        assert_eq!(
            &traj.eval_bar(Quantity::F, 0.6 * h).unwrap(),
            traj.forcing_average(1)
        );
        // right-continuous convention at 0
        assert_eq!(
            &traj.eval_bar(Quantity::Phi, 0.0).unwrap(),
            traj.node(Quantity::Phi, 1)
        );

        assert!(traj.eval_hat(Quantity::Theta, 1.5).is_err());
        assert!(traj.eval_bar(Quantity::Theta, -0.1).is_err());
        assert!(traj.eval_hat(Quantity::Z, 0.1).is_err());
        assert!(traj.eval_underline(Quantity::V, 0.1).is_err());
    }

    #[test]
    fn difference_relations_hold() {
        let mut s = zero_scenario(16);
        s.phi0 = Field::from_fn(s.grid, |x| (std::f64::consts::PI * x[0]).cos());
        s.v0 = Field::constant(s.grid, 0.2);
        let traj = solve_trajectory(&s).unwrap();
        let h = traj.h();
        for w in traj.states().windows(2) {
            let v = w[1].phi.sub(&w[0].phi).unwrap().scale(1.0 / h);
            let z = w[1].v.sub(&w[0].v).unwrap().scale(1.0 / h);
            assert!(v.sub(&w[1].v).unwrap().linf_norm() < 1e-12);
            assert!(z.sub(&w[1].z).unwrap().linf_norm() < 1e-12);
        }
    }

    #[test]
    fn same_problem_ignores_step_count() {
        let a = zero_scenario(4);
        let b = a.with_steps(8).unwrap();
        assert!(a.same_problem(&b));
        let mut c = b.clone();
        c.t_final = 2.0;
        assert!(!a.same_problem(&c));
    }
}

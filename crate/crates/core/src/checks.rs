//! Invariant suite run by the `check` command.

use crate::analysis::{apriori_report, interpolant_identities, EstimateReport};
use crate::error::Result;
use crate::grid::{l2_inner, Field};
use crate::resolvent::Nonlinearity;
use crate::scheme::{solve_trajectory, Scenario, Stepper, Trajectory};

pub const MASS_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const SUBDIFFERENTIAL_SLACK: f64 = 1e-10;
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantResult {
    pub name: String,
    /// Worst measured value over all steps.
    pub residual: f64,
    /// Tolerance at the worst step.
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub results: Vec<InvariantResult>,
    pub estimates: EstimateReport,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

/// Tracks the step where `residual / tolerance` is largest.
struct Worst {
    name: String,
    residual: f64,
    tolerance: f64,
    ratio: f64,
}

impl Worst {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Worst {
            name: name.into(),
            residual: 0.0,
            tolerance,
            ratio: 0.0,
        }
    }

    fn record(&mut self, residual: f64, tolerance: f64) {
        // NaN residuals must fail
        let ratio = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual / tolerance
        };
        if ratio > self.ratio || (self.ratio == 0.0 && residual > self.residual) {
            self.residual = residual;
            self.tolerance = tolerance;
            self.ratio = ratio;
        }
    }

    fn finish(self) -> InvariantResult {
        InvariantResult {
            passed: self.ratio <= 1.0,
            name: self.name,
            residual: self.residual,
            tolerance: self.tolerance,
        }
    }
}

/// `(beta(phi1), phi1 - phi0) - int beta_hat(phi1) + int beta_hat(phi0)`
pub fn subdifferential_slack(nl: &Nonlinearity, phi0: &Field, phi1: &Field) -> Result<f64> {
    let b = phi1.map(|r| nl.beta(r));
    let lhs = l2_inner(&b, &phi1.sub(phi0)?)?;
    Ok(lhs - phi1.map(|r| nl.beta_hat(r)).integral() + phi0.map(|r| nl.beta_hat(r)).integral())
}

/// Runs every invariant on a solved trajectory. Residuals of the scheme
/// equations need the operators, so they are skipped when `stepper` is
/// `None`.
pub fn check_trajectory(traj: &Trajectory, stepper: Option<&Stepper>) -> Result<InvariantReport> {
    let h = traj.h();
    let eps = f64::EPSILON;
    let mut mass = Worst::new("mass_balance", MASS_TOL);
    let mut v_rel = Worst::new("difference_relation_v", 0.0);
    let mut z_rel = Worst::new("difference_relation_z", 0.0);
    let mut heat = Worst::new("heat_residual", RESIDUAL_TOL);
    let mut momentum = Worst::new("momentum_residual", RESIDUAL_TOL);
    let mut subdiff = Worst::new("subdifferential_inequality", SUBDIFFERENTIAL_SLACK);

    for (n, w) in traj.states().windows(2).enumerate() {
        let (prev, next) = (&w[0], &w[1]);
        let f = traj.forcing_average(n + 1);
        let m0 = prev.mass();
        let gap = (next.mass() - m0 - h * f.integral()).abs();
        mass.record(
            gap,
            MASS_TOL * (1.0 + prev.theta.integral().abs() + prev.phi.integral().abs()),
        );

        let dq = next.phi.sub(&prev.phi)?.scale(1.0 / h);
        let tol = 1e-12 + 8.0 * eps * (prev.phi.linf_norm() + next.phi.linf_norm()) / h;
        v_rel.record(dq.sub(&next.v)?.linf_norm(), tol);
        let dq = next.v.sub(&prev.v)?.scale(1.0 / h);
        let tol = 1e-12 + 8.0 * eps * (prev.v.linf_norm() + next.v.linf_norm()) / h;
        z_rel.record(dq.sub(&next.z)?.linf_norm(), tol);

        if let Some(stepper) = stepper {
            let r = stepper.residuals(prev, next, f)?;
            heat.record(r.heat, RESIDUAL_TOL);
            momentum.record(r.momentum, RESIDUAL_TOL);
            let slack = subdifferential_slack(stepper.nonlinearity(), &prev.phi, &next.phi)?;
            subdiff.record((-slack).max(0.0), SUBDIFFERENTIAL_SLACK);
        }
    }

    let mut results = vec![mass.finish(), v_rel.finish(), z_rel.finish()];
    if stepper.is_some() {
        results.extend([heat.finish(), momentum.finish(), subdiff.finish()]);
    }

    // The sup-gap identities compare phi_{n+1} - phi_n with h v_{n+1}; the
    // stored v agrees with the difference quotient only up to rounding of phi.
    let phi_scale = traj
        .states()
        .iter()
        .map(|s| s.phi.linf_norm())
        .fold(0.0, f64::max);
    let v_inf = traj.states()[1..]
        .iter()
        .map(|s| s.v.linf_norm())
        .fold(0.0, f64::max);
    let v_h = traj
        .states()
        .iter()
        .map(|s| s.v.h_norm())
        .fold(0.0, f64::max);
    let z_h = traj.states()[1..]
        .iter()
        .map(|s| s.z.h_norm())
        .fold(0.0, f64::max);
    let vol = traj.grid().volume().sqrt();
    for id in interpolant_identities(traj)? {
        let tol = match id.name {
            "phi_bar_minus_hat_linf" if v_inf > 0.0 => {
                IDENTITY_TOL + 8.0 * eps * phi_scale / (h * v_inf)
            }
            "v_bar_minus_hat_linf_h" if z_h > 0.0 => {
                IDENTITY_TOL + 8.0 * eps * vol * v_inf.max(v_h) / (h * z_h)
            }
            _ => IDENTITY_TOL,
        };
        let mut w = Worst::new(format!("interpolant_{}", id.name), tol);
        w.record(id.relative_error(), tol);
        results.push(w.finish());
    }

    let estimates = apriori_report(traj);
    let bad = estimates
        .terms()
        .iter()
        .filter(|t| !(t.is_finite() && **t >= 0.0))
        .count();
    results.push(InvariantResult {
        name: "apriori_finite".into(),
        residual: bad as f64,
        tolerance: 0.0,
        passed: bad == 0,
    });

    Ok(InvariantReport { results, estimates })
}

pub fn check_scenario(scenario: &Scenario) -> Result<(Trajectory, InvariantReport)> {
    let traj = solve_trajectory(scenario)?;
    let stepper = Stepper::new(scenario)?;
    let report = check_trajectory(&traj, Some(&stepper))?;
    Ok((traj, report))
}

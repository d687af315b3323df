//! Monitors for the a-priori bounds, discrete error norms between step
//! sizes, convergence-rate fits and the interpolant identities.
//!
//! Time norms are evaluated exactly from node values. Piecewise-constant
//! interpolants integrate as `h * sum`; piecewise-linear ones use
//! `int_0^h |a + (b - a) s/h|^2 ds = h/3 (|a|^2 + (a, b) + |b|^2)`. Sup norms
//! in time of piecewise-linear functions are attained at nodes because the
//! spatial norms are convex.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, neumann_laplacian, v_norm_sq, Field};
use crate::scheme::{solve_trajectory, Quantity, Scenario, Trajectory};

/// Uniform-in-h bounded quantities of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub steps: usize,
    pub h: f64,
    /// `|v_bar|^2_{Linf(H)} + |phi_bar|^2_{Linf(H)} + |theta_hat_t|^2_{L2(H)} + |theta_bar|^2_{Linf(V)}`
    pub e1: f64,
    /// `|lap theta_bar|_{L2(H)}`
    pub e2: f64,
    /// `|v_bar|^2 + |phi_bar|^2` in the space-time sup norm
    pub e3: f64,
    /// `|z_bar|^2_{L2(Linf)}`
    pub e4: f64,
    /// `|z_bar|^2_{Linf(H)}`
    pub e5: f64,
    /// Composite norm of `(theta_hat, phi_hat, v_hat)`; intersections of
    /// spaces are normed by the sum of the norms.
    pub e6: f64,
    /// `|phi_under|^2_{Linf(Linf)} + |theta_under|^2_{Linf(V)} + |theta_under|^2_{L2(Linf)}`
    pub e_underline: f64,
}

impl EstimateReport {
    pub const NAMES: [&'static str; 7] = ["E1", "E2", "E3", "E4", "E5", "E6", "E_underline"];

    pub fn terms(&self) -> [f64; 7] {
        [
            self.e1,
            self.e2,
            self.e3,
            self.e4,
            self.e5,
            self.e6,
            self.e_underline,
        ]
    }
}

fn max_over<'a>(fields: impl Iterator<Item = &'a Field>, norm: impl Fn(&Field) -> f64) -> f64 {
    fields.map(norm).fold(0.0, f64::max)
}

fn diff_quotient(a: &Field, b: &Field, h: f64) -> Field {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (y - x) / h)
        .collect();
    Field::from_vec_unchecked(*a.grid(), values)
}

/// `int_0^1 (max_j (c_j + m_j s))^2 ds` for an envelope that is nonnegative.
fn envelope_sq_integral(lines: &[(f64, f64)]) -> f64 {
    let mut cur = match lines.iter().copied().reduce(|best, l| {
        if l.0 > best.0 || (l.0 == best.0 && l.1 > best.1) {
            l
        } else {
            best
        }
    }) {
        Some(l) => l,
        None => return 0.0,
    };
    let mut s = 0.0;
    let mut total = 0.0;
    loop {
        let mut next: Option<(f64, (f64, f64))> = None;
        for &l in lines {
            if l.1 <= cur.1 {
                continue;
            }
            let cross = (cur.0 - l.0) / (l.1 - cur.1);
            if cross <= s {
                continue;
            }
            next = match next {
                Some((sx, lx)) if sx < cross || (sx == cross && lx.1 >= l.1) => Some((sx, lx)),
                _ => Some((cross, l)),
            };
        }
        let (end, done) = match next {
            Some((sx, _)) if sx < 1.0 => (sx, false),
            _ => (1.0, true),
        };
        let y0 = cur.0 + cur.1 * s;
        let y1 = cur.0 + cur.1 * end;
        total += (end - s) * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
        if done {
            return total;
        }
        s = end;
        cur = next.expect("breakpoint").1;
    }
}

/// `int_{interval} |u_hat(t)|^2_Linf dt` for the linear interpolant of `a`, `b`.
fn hat_linf_sq_integral(a: &Field, b: &Field, h: f64) -> f64 {
    let lines: Vec<(f64, f64)> = a
        .values()
        .iter()
        .zip(b.values())
        .flat_map(|(&x, &y)| [(x, y - x), (-x, x - y)])
        .collect();
    h * envelope_sq_integral(&lines)
}

fn hat_h_sq_integral(a: &Field, b: &Field, h: f64) -> f64 {
    let ab: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * a.grid().cell_volume();
    h / 3.0 * (a.h_norm_sq() + ab + b.h_norm_sq())
}

pub fn apriori_report(traj: &Trajectory) -> EstimateReport {
    let h = traj.h();
    let n_steps = traj.steps();
    let states = traj.states();
    let after = &states[1..];
    let before = &states[..n_steps];

    let v_bar_h = max_over(after.iter().map(|s| &s.v), |f| f.h_norm_sq());
    let phi_bar_h = max_over(after.iter().map(|s| &s.phi), |f| f.h_norm_sq());
    let theta_rate_l2: f64 = states
        .windows(2)
        .map(|w| h * diff_quotient(&w[0].theta, &w[1].theta, h).h_norm_sq())
        .sum();
    let theta_bar_v = max_over(after.iter().map(|s| &s.theta), v_norm_sq);
    let e1 = v_bar_h + phi_bar_h + theta_rate_l2 + theta_bar_v;

    let e2 = after
        .iter()
        .map(|s| h * neumann_laplacian(&s.theta).h_norm_sq())
        .sum::<f64>()
        .sqrt();

    let v_bar_inf = max_over(after.iter().map(|s| &s.v), |f| f.linf_norm());
    let phi_bar_inf = max_over(after.iter().map(|s| &s.phi), |f| f.linf_norm());
    let e3 = v_bar_inf.powi(2) + phi_bar_inf.powi(2);

    let e4 = after.iter().map(|s| h * s.z.linf_norm().powi(2)).sum();
    let e5 = max_over(after.iter().map(|s| &s.z), |f| f.h_norm_sq());

    // theta_hat in H1(H) + Linf(V)
    let theta_l2: f64 = states
        .windows(2)
        .map(|w| hat_h_sq_integral(&w[0].theta, &w[1].theta, h))
        .sum();
    let theta_hat_v = max_over(states.iter().map(|s| &s.theta), |f| f.v_norm());
    let theta_term = (theta_l2 + theta_rate_l2).sqrt() + theta_hat_v;

    // phi_hat in W1,inf(Linf)
    let phi_hat_inf = max_over(states.iter().map(|s| &s.phi), |f| f.linf_norm());
    let phi_rate_inf = states
        .windows(2)
        .map(|w| diff_quotient(&w[0].phi, &w[1].phi, h).linf_norm())
        .fold(0.0, f64::max);
    let phi_term = phi_hat_inf + phi_rate_inf;

    // v_hat in W1,inf(H) + W1,2(Linf) + Linf(Linf)
    let v_rates: Vec<Field> = states
        .windows(2)
        .map(|w| diff_quotient(&w[0].v, &w[1].v, h))
        .collect();
    let v_hat_h = max_over(states.iter().map(|s| &s.v), |f| f.h_norm());
    let v_rate_h = max_over(v_rates.iter(), |f| f.h_norm());
    let v_linf_l2: f64 = states
        .par_windows(2)
        .map(|w| hat_linf_sq_integral(&w[0].v, &w[1].v, h))
        .sum();
    let v_rate_linf_l2: f64 = v_rates.iter().map(|f| h * f.linf_norm().powi(2)).sum();
    let v_hat_inf = max_over(states.iter().map(|s| &s.v), |f| f.linf_norm());
    let v_term = v_hat_h + v_rate_h + (v_linf_l2 + v_rate_linf_l2).sqrt() + v_hat_inf;
    let e6 = theta_term + phi_term + v_term;

    let phi_under = max_over(before.iter().map(|s| &s.phi), |f| f.linf_norm());
    let theta_under_v = max_over(before.iter().map(|s| &s.theta), v_norm_sq);
    let theta_under_l2inf: f64 = before.iter().map(|s| h * s.theta.linf_norm().powi(2)).sum();
    let e_underline = phi_under.powi(2) + theta_under_v + theta_under_l2inf;

    EstimateReport {
        steps: n_steps,
        h,
        e1,
        e2,
        e3,
        e4,
        e5,
        e6,
        e_underline,
    }
}

/// The five error terms between two nested trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorMetrics {
    /// `|v_hat - v_hat_ref|_{C(H)}`
    pub v_sup: f64,
    /// `|v_bar - v_bar_ref|_{L2(H)}`
    pub v_l2: f64,
    /// `|phi_hat - phi_hat_ref|_{C(H)}`
    pub phi: f64,
    /// `|theta_hat - theta_hat_ref|_{C(H)}`
    pub theta: f64,
    /// `|grad(theta_bar - theta_bar_ref)|_{L2(H)}`
    pub grad: f64,
}

impl ErrorMetrics {
    pub const NAMES: [&'static str; 5] = ["e_v_sup", "e_v_l2", "e_phi", "e_theta", "e_grad"];

    pub fn terms(&self) -> [f64; 5] {
        [self.v_sup, self.v_l2, self.phi, self.theta, self.grad]
    }

    pub fn total(&self) -> f64 {
        self.terms().iter().sum()
    }
}

/// Orders two trajectories as (coarse, fine) and returns the step ratio.
fn nested<'a>(
    a: &'a Trajectory,
    b: &'a Trajectory,
) -> Result<(&'a Trajectory, &'a Trajectory, usize)> {
    let (coarse, fine) = if a.steps() <= b.steps() {
        (a, b)
    } else {
        (b, a)
    };
    if coarse.grid() != fine.grid() {
        return Err(Error::Incompatible(
            "trajectories live on different grids".into(),
        ));
    }
    if (coarse.t_final() - fine.t_final()).abs() > 1e-12 * coarse.t_final().abs() {
        return Err(Error::Incompatible(format!(
            "final times differ: {} vs {}",
            coarse.t_final(),
            fine.t_final()
        )));
    }
    if let (Some(sa), Some(sb)) = (coarse.scenario(), fine.scenario()) {
        if !sa.same_problem(sb) {
            return Err(Error::Incompatible(
                "scenarios differ beyond the step count".into(),
            ));
        }
    }
    if fine.steps() % coarse.steps() != 0 {
        return Err(Error::Incompatible(format!(
            "step counts {} and {} are not nested",
            coarse.steps(),
            fine.steps()
        )));
    }
    Ok((coarse, fine, fine.steps() / coarse.steps()))
}

/// Squared H distance between the coarse hat interpolant at fine node `m`
/// and the fine node value.
fn hat_gap_sq(q: Quantity, coarse: &Trajectory, fine: &Trajectory, ratio: usize, m: usize) -> f64 {
    let k = m / ratio;
    let fine_vals = fine.node(q, m).values();
    let grid = coarse.grid();
    let sum: f64 = if m.is_multiple_of(ratio) {
        coarse
            .node(q, k)
            .values()
            .iter()
            .zip(fine_vals)
            .map(|(c, f)| (c - f).powi(2))
            .sum()
    } else {
        let s = (m % ratio) as f64 / ratio as f64;
        let (lo, hi) = (coarse.node(q, k).values(), coarse.node(q, k + 1).values());
        (0..grid.len())
            .map(|i| (lo[i] + (hi[i] - lo[i]) * s - fine_vals[i]).powi(2))
            .sum()
    };
    sum * grid.cell_volume()
}

fn bar_diff(q: Quantity, coarse: &Trajectory, fine: &Trajectory, ratio: usize, m: usize) -> Field {
    let k = (m - 1) / ratio + 1;
    let (c, f) = match q {
        Quantity::F => (coarse.forcing_average(k), fine.forcing_average(m)),
        _ => (coarse.node(q, k), fine.node(q, m)),
    };
    diff_quotient(f, c, 1.0)
}

pub fn discrete_error(coarse: &Trajectory, reference: &Trajectory) -> Result<ErrorMetrics> {
    let (coarse, fine, ratio) = nested(coarse, reference)?;
    let h_fine = fine.h();
    let sup = |q| {
        (0..=fine.steps())
            .into_par_iter()
            .map(|m| hat_gap_sq(q, coarse, fine, ratio, m))
            .reduce(|| 0.0, f64::max)
            .sqrt()
    };
    let l2 = |norm_sq: &(dyn Fn(&Field) -> f64 + Sync), q| {
        let per: Vec<f64> = (1..=fine.steps())
            .into_par_iter()
            .map(|m| norm_sq(&bar_diff(q, coarse, fine, ratio, m)))
            .collect();
        (h_fine * per.iter().sum::<f64>()).sqrt()
    };
    Ok(ErrorMetrics {
        v_sup: sup(Quantity::V),
        v_l2: l2(&|f: &Field| f.h_norm_sq(), Quantity::V),
        phi: sup(Quantity::Phi),
        theta: sup(Quantity::Theta),
        grad: l2(&grad_norm_sq, Quantity::Theta),
    })
}

/// Left-hand side of the Cauchy bound between two step sizes; the same
/// sum as [`ErrorMetrics::total`].
pub fn cauchy_check(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    Ok(discrete_error(a, b)?.total())
}

/// `|f_bar_a - f_bar_b|_{L2(H)}` for nested trajectories.
pub fn forcing_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let (coarse, fine, ratio) = nested(a, b)?;
    let sum: f64 = (1..=fine.steps())
        .map(|m| bar_diff(Quantity::F, coarse, fine, ratio, m).h_norm_sq())
        .sum();
    Ok((fine.h() * sum).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyFit {
    pub h_a: f64,
    pub h_b: f64,
    pub lhs: f64,
    pub forcing_gap: f64,
    /// Smallest `C` with `lhs <= C (sqrt(h_a) + sqrt(h_b)) + C forcing_gap`.
    pub constant: f64,
}

pub fn cauchy_fit(a: &Trajectory, b: &Trajectory) -> Result<CauchyFit> {
    let lhs = cauchy_check(a, b)?;
    let gap = forcing_gap(a, b)?;
    Ok(CauchyFit {
        h_a: a.h(),
        h_b: b.h(),
        lhs,
        forcing_gap: gap,
        constant: lhs / (a.h().sqrt() + b.h().sqrt() + gap),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub steps: usize,
    pub h: f64,
    pub metrics: ErrorMetrics,
}

impl RateRow {
    pub fn total(&self) -> f64 {
        self.metrics.total()
    }
}

/// Total error grew from row `row - 1` to `row` (smaller h) by `ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub row: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub reference_steps: usize,
    /// Sorted by decreasing h.
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log(total)` against `log(h)`.
    pub slope: Option<f64>,
    pub m_hat: Option<f64>,
    pub inversions: Vec<Inversion>,
}

impl RateTable {
    pub fn from_rows(reference_steps: usize, mut rows: Vec<RateRow>) -> Self {
        rows.sort_by(|a, b| b.h.total_cmp(&a.h));
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.total() > 0.0)
            .map(|r| (r.h.ln(), r.total().ln()))
            .collect();
        let (slope, m_hat) = match least_squares(&pts) {
            Some((slope, intercept)) => (Some(slope), Some(intercept.exp())),
            None => (None, None),
        };
        let inversions = rows
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].total() > w[0].total())
            .map(|(i, w)| Inversion {
                row: i + 1,
                ratio: w[1].total() / w[0].total(),
            })
            .collect();
        RateTable {
            reference_steps,
            rows,
            slope,
            m_hat,
            inversions,
        }
    }

    /// No slope can be fitted (fewer than two distinct h with nonzero error).
    pub fn is_degenerate(&self) -> bool {
        self.slope.is_none()
    }

    /// At most one inversion, and it grows the error by less than `allowance`
    /// (relative).
    pub fn is_monotone_within(&self, allowance: f64) -> bool {
        match self.inversions.as_slice() {
            [] => true,
            [inv] => inv.ratio - 1.0 < allowance,
            _ => false,
        }
    }
}

fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    slope.is_finite().then_some((slope, my - slope * mx))
}

pub fn rate_table(reference: &Trajectory, coarse: &[Trajectory]) -> Result<RateTable> {
    let rows = coarse
        .par_iter()
        .map(|t| {
            Ok(RateRow {
                steps: t.steps(),
                h: t.h(),
                metrics: discrete_error(t, reference)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::from_rows(reference.steps(), rows))
}

pub fn check_study_steps(steps: &[usize], reference_steps: usize) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::config("study needs at least one step count"));
    }
    for &n in steps {
        if n == 0 || !reference_steps.is_multiple_of(n) {
            return Err(Error::Incompatible(format!(
                "step count {n} does not divide the reference step count {reference_steps}"
            )));
        }
    }
    Ok(())
}

/// Reference trajectory and the coarse trajectories (sorted by step count,
/// duplicates removed) of a convergence study, solved in parallel.
pub fn solve_study(
    scenario: &Scenario,
    steps: &[usize],
    reference_steps: usize,
) -> Result<(Trajectory, Vec<Trajectory>)> {
    check_study_steps(steps, reference_steps)?;
    let mut sorted = steps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let scenarios = sorted
        .iter()
        .map(|&n| scenario.with_steps(n))
        .collect::<Result<Vec<_>>>()?;
    let reference_scenario = scenario.with_steps(reference_steps)?;
    let (reference, coarse) = rayon::join(
        || solve_trajectory(&reference_scenario),
        || {
            scenarios
                .par_iter()
                .map(solve_trajectory)
                .collect::<Result<Vec<_>>>()
        },
    );
    Ok((reference?, coarse?))
}

/// Solves the scenario for each step count and for the reference, then
/// tabulates errors against the reference.
pub fn convergence_study(
    scenario: &Scenario,
    steps: &[usize],
    reference_steps: usize,
) -> Result<RateTable> {
    let (reference, coarse) = solve_study(scenario, steps, reference_steps)?;
    rate_table(&reference, &coarse)
}

/// One interpolant identity with both sides evaluated independently.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Magnitude used to make the discrepancy relative.
    pub scale: f64,
}

impl IdentityCheck {
    fn of_norms(name: &'static str, lhs: f64, rhs: f64) -> Self {
        IdentityCheck {
            name,
            lhs,
            rhs,
            scale: lhs.abs().max(rhs.abs()),
        }
    }

    pub fn relative_error(&self) -> f64 {
        let diff = (self.lhs - self.rhs).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.scale
        }
    }
}

fn hat_at_nodes_max(traj: &Trajectory, q: Quantity, norm: impl Fn(&Field) -> f64) -> Result<f64> {
    let h = traj.h();
    let mut best = 0.0f64;
    for n in 0..=traj.steps() {
        best = best.max(norm(&traj.eval_hat(q, n as f64 * h)?));
    }
    Ok(best)
}

fn bar_max(traj: &Trajectory, q: Quantity, norm: impl Fn(&Field) -> f64) -> Result<f64> {
    let h = traj.h();
    let mut best = 0.0f64;
    for n in 0..traj.steps() {
        best = best.max(norm(&traj.eval_bar(q, (n as f64 + 0.5) * h)?));
    }
    Ok(best)
}

/// The eight interpolant identities. Sup norms of piecewise-linear
/// functions are read at the nodes; integrals use the per-interval
/// quadratic rule.
pub fn interpolant_identities(traj: &Trajectory) -> Result<Vec<IdentityCheck>> {
    let h = traj.h();
    let n_steps = traj.steps();
    let linf = |f: &Field| f.linf_norm();
    let mut out = Vec::with_capacity(8);

    for (name, q, use_v) in [
        ("theta_hat_linf_v", Quantity::Theta, true),
        ("phi_hat_linf_linf", Quantity::Phi, false),
        ("v_hat_linf_linf", Quantity::V, false),
    ] {
        let norm = |f: &Field| if use_v { f.v_norm() } else { f.linf_norm() };
        let lhs = hat_at_nodes_max(traj, q, norm)?;
        let rhs = norm(traj.node(q, 0)).max(bar_max(traj, q, norm)?);
        out.push(IdentityCheck::of_norms(name, lhs, rhs));
    }

    // |theta_bar - theta_hat|^2_{L2(H)} = h^2/3 |theta_hat_t|^2_{L2(H)}
    let mut lhs = 0.0;
    let mut rate_sq = 0.0;
    for n in 0..n_steps {
        let (t0, t1) = (n as f64 * h, (n + 1) as f64 * h);
        let mid = 0.5 * (t0 + t1);
        let bar = traj.eval_bar(Quantity::Theta, mid)?;
        let e0 = bar.sub(&traj.eval_hat(Quantity::Theta, t0)?)?;
        let e1 = bar.sub(&traj.eval_hat(Quantity::Theta, t1)?)?;
        lhs += hat_h_sq_integral(&e0, &e1, h);
        rate_sq += h * traj.eval_hat_rate(Quantity::Theta, mid)?.h_norm_sq();
    }
    out.push(IdentityCheck::of_norms(
        "theta_bar_minus_hat_l2",
        lhs,
        h * h / 3.0 * rate_sq,
    ));

    // sup of |bar - hat| on an interval is reached at its left end
    let gap_max = |q: Quantity, norm: &dyn Fn(&Field) -> f64| -> Result<f64> {
        let mut best = 0.0f64;
        for n in 0..n_steps {
            let t0 = n as f64 * h;
            let bar = traj.eval_bar(q, t0 + 0.5 * h)?;
            best = best.max(norm(&bar.sub(&traj.eval_hat(q, t0)?)?));
        }
        Ok(best)
    };
    let lhs = gap_max(Quantity::Phi, &linf)?;
    out.push(IdentityCheck::of_norms(
        "phi_bar_minus_hat_linf",
        lhs,
        h * bar_max(traj, Quantity::V, linf)?,
    ));
    let lhs = gap_max(Quantity::V, &|f: &Field| f.h_norm())?;
    out.push(IdentityCheck::of_norms(
        "v_bar_minus_hat_linf_h",
        lhs,
        h * bar_max(traj, Quantity::Z, |f| f.h_norm())?,
    ));

    for (name, q) in [
        ("theta_rate_jump", Quantity::Theta),
        ("phi_rate_jump", Quantity::Phi),
    ] {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for n in 0..n_steps {
            let mid = (n as f64 + 0.5) * h;
            let jump = traj.eval_bar(q, mid)?.sub(&traj.eval_underline(q, mid)?)?;
            let scaled_rate = traj.eval_hat_rate(q, mid)?.scale(h);
            worst = worst.max(scaled_rate.sub(&jump)?.linf_norm());
            scale = scale.max(jump.linf_norm());
        }
        out.push(IdentityCheck {
            name,
            lhs: worst,
            rhs: 0.0,
            scale,
        });
    }
    Ok(out)
}

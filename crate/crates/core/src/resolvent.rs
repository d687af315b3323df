//! Pointwise monotone resolvent solves.
//!
//! Every phi-update of the scheme reduces to the scalar equation
//!
//! ```text
//! (1 + h) r + h^2 beta(r) + h^2 pi(r) = g
//! ```
//!
//! at each grid point. With `beta` nondecreasing and `h < 1/|pi'|` the left
//! side has slope at least `1 + h - h^2 |pi'| > 1`, so the root is unique and
//! a bracket always exists. The solver is Newton's method kept inside a
//! sign-change bracket, falling back to bisection whenever a Newton step
//! would leave it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Residual tolerance relative to `1 + |rhs|`.
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100;
const MAX_EXPANSIONS: usize = 2000;
const PARALLEL_THRESHOLD: usize = 4096;

/// Default half-width of the interval on which monotonicity of `beta` is checked.
pub const DEFAULT_CHECK_RADIUS: f64 = 10.0;
const CHECK_POINTS: usize = 1000;

/// Odd polynomial `beta(r) = sum_k c_k r^k`, `k` odd.
#[derive(Debug, Clone, PartialEq)]
pub struct OddPolynomial {
    terms: Vec<(u32, f64)>,
}

impl OddPolynomial {
    pub fn new(terms: &[(u32, f64)]) -> Result<Self> {
        let mut terms: Vec<(u32, f64)> = terms.iter().copied().filter(|t| t.1 != 0.0).collect();
        terms.sort_by_key(|t| t.0);
        for w in terms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidNonlinearity(format!(
                    "power {} given twice",
                    w[0].0
                )));
            }
        }
        for &(p, c) in &terms {
            if p % 2 == 0 {
                return Err(Error::InvalidNonlinearity(format!(
                    "beta must be odd: coefficient for even power {p}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidNonlinearity(format!(
                    "non-finite coefficient for power {p}"
                )));
            }
        }
        if let Some(&(p, c)) = terms.last() {
            if c < 0.0 {
                return Err(Error::InvalidNonlinearity(format!(
                    "leading coefficient (power {p}) must be positive, got {c}"
                )));
            }
        }
        Ok(OddPolynomial { terms })
    }

    pub fn zero() -> Self {
        OddPolynomial { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| c * r.powi(p as i32)).sum()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(p, c)| c * p as f64 * r.powi(p as i32 - 1))
            .sum()
    }

    /// Primitive vanishing at zero.
    pub fn primitive(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(p, c)| c * r.powi(p as i32 + 1) / (p as f64 + 1.0))
            .sum()
    }
}

/// The pair `(beta, pi)` with `beta = d(beta_hat)` monotone and `pi(r) = b r + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    beta: OddPolynomial,
    pi_slope: f64,
    pi_intercept: f64,
}

/// Largest admissible step: accepted steps satisfy `0 < h < h_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAdmissibility {
    pub h_max: f64,
}

impl StepAdmissibility {
    pub fn admits(&self, h: f64) -> bool {
        h > 0.0 && h < self.h_max
    }

    pub fn check(&self, h: f64) -> Result<()> {
        if self.admits(h) {
            Ok(())
        } else {
            Err(Error::InadmissibleStep {
                h,
                h_max: self.h_max,
            })
        }
    }
}

impl Nonlinearity {
    /// Validates monotonicity of `beta` on `[-radius, radius]`, nonnegativity of
    /// `beta_hat` and `beta_hat' = beta` there.
    pub fn new(beta: OddPolynomial, pi_slope: f64, pi_intercept: f64, radius: f64) -> Result<Self> {
        if !pi_slope.is_finite() || !pi_intercept.is_finite() {
            return Err(Error::InvalidNonlinearity(
                "pi coefficients must be finite".into(),
            ));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "check radius must be positive, got {radius}"
            )));
        }
        let nl = Nonlinearity {
            beta,
            pi_slope,
            pi_intercept,
        };
        nl.validate(radius)?;
        Ok(nl)
    }

    /// `beta(r) = a r^3`, `pi(r) = b r + c`.
    pub fn cubic(a: f64, b: f64, c: f64) -> Result<Self> {
        Nonlinearity::new(OddPolynomial::new(&[(3, a)])?, b, c, DEFAULT_CHECK_RADIUS)
    }

    pub fn linear_only(b: f64, c: f64) -> Self {
        Nonlinearity {
            beta: OddPolynomial::zero(),
            pi_slope: b,
            pi_intercept: c,
        }
    }

    fn validate(&self, radius: f64) -> Result<()> {
        let step = 2.0 * radius / (CHECK_POINTS - 1) as f64;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..CHECK_POINTS {
            let r = -radius + i as f64 * step;
            let b = self.beta(r);
            if b < prev {
                return Err(Error::InvalidNonlinearity(format!(
                    "beta decreases near r = {r}"
                )));
            }
            prev = b;
            let bh = self.beta_hat(r);
            if bh < 0.0 {
                return Err(Error::InvalidNonlinearity(format!(
                    "beta_hat({r}) = {bh} is negative"
                )));
            }
            let eps = 1e-5 * (1.0 + r.abs());
            let fd = (self.beta_hat(r + eps) - self.beta_hat(r - eps)) / (2.0 * eps);
            if (fd - b).abs() > 1e-6 * (1.0 + b.abs()) {
                return Err(Error::InvalidNonlinearity(format!(
                    "beta_hat' = {fd} differs from beta = {b} at r = {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn beta_poly(&self) -> &OddPolynomial {
        &self.beta
    }

    pub fn beta(&self, r: f64) -> f64 {
        self.beta.eval(r)
    }

    pub fn beta_prime(&self, r: f64) -> f64 {
        self.beta.derivative(r)
    }

    pub fn beta_hat(&self, r: f64) -> f64 {
        self.beta.primitive(r)
    }

    pub fn pi(&self, r: f64) -> f64 {
        self.pi_slope * r + self.pi_intercept
    }

    pub fn pi_slope(&self) -> f64 {
        self.pi_slope
    }

    pub fn pi_intercept(&self) -> f64 {
        self.pi_intercept
    }

    pub fn lipschitz_pi(&self) -> f64 {
        self.pi_slope.abs()
    }

    pub fn admissible_h(&self) -> StepAdmissibility {
        admissible_h(self)
    }

    /// `F(r) = (1 + h) r + h^2 beta(r) + h^2 pi(r) - g`.
    pub fn resolvent_residual(&self, r: f64, g: f64, h: f64) -> f64 {
        (1.0 + h) * r + h * h * (self.beta(r) + self.pi(r)) - g
    }
}

/// `h_max = min{1, 1 / Lip(pi)}`.
pub fn admissible_h(nl: &Nonlinearity) -> StepAdmissibility {
    let lip = nl.lipschitz_pi();
    let h_max = if lip > 0.0 { (1.0 / lip).min(1.0) } else { 1.0 };
    StepAdmissibility { h_max }
}

/// Root of an increasing function `f` (value and derivative) with `|f| <= tol`.
fn solve_increasing(f: impl Fn(f64) -> (f64, f64), guess: f64, tol: f64, rhs: f64) -> Result<f64> {
    if !guess.is_finite() {
        return Err(Error::BracketFailure { rhs });
    }
    let (f0, df0) = f(guess);
    if !f0.is_finite() {
        return Err(Error::BracketFailure { rhs });
    }
    if f0.abs() <= tol {
        return Ok(guess);
    }

    // expand geometrically on the side where the sign change must be
    let mut width = 1.0 + guess.abs();
    let (mut lo, mut hi) = (guess, guess);
    let mut expansions = 0;
    if f0 < 0.0 {
        loop {
            hi = guess + width;
            let fh = f(hi).0;
            if !fh.is_finite() {
                return Err(Error::BracketFailure { rhs });
            }
            if fh >= 0.0 {
                break;
            }
            lo = hi;
            width *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::BracketFailure { rhs });
            }
        }
    } else {
        loop {
            lo = guess - width;
            let fl = f(lo).0;
            if !fl.is_finite() {
                return Err(Error::BracketFailure { rhs });
            }
            if fl <= 0.0 {
                break;
            }
            hi = lo;
            width *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::BracketFailure { rhs });
            }
        }
    }

    let mut x = guess;
    let (mut fx, mut dfx) = (f0, df0);
    let mut best = (f0.abs(), guess);
    for _ in 0..MAX_ITERATIONS {
        if fx < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next <= lo || next >= hi {
            // bracket is down to adjacent floats
            return Ok(best.1);
        }
        x = next;
        (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(Error::BracketFailure { rhs });
        }
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
    }
    Err(Error::NotConverged {
        solver: "resolvent Newton",
        iterations: MAX_ITERATIONS,
        residual: best.0,
    })
}

/// Unique root of `(1 + h) r + h^2 beta(r) + h^2 pi(r) = g`.
pub fn resolvent_solve(g: f64, h: f64, nl: &Nonlinearity) -> Result<f64> {
    nl.admissible_h().check(h)?;
    if !g.is_finite() {
        return Err(Error::BracketFailure { rhs: g });
    }
    let h2 = h * h;
    let f = |r: f64| {
        (
            nl.resolvent_residual(r, g, h),
            1.0 + h + h2 * (nl.beta_prime(r) + nl.pi_slope),
        )
    };
    let guess = g / (1.0 + h + h2 * nl.pi_slope);
    solve_increasing(f, guess, RESIDUAL_TOL * (1.0 + g.abs()), g)
}

/// Cell-wise [`resolvent_solve`].
pub fn resolvent_field(g: &Field, h: f64, nl: &Nonlinearity) -> Result<Field> {
    nl.admissible_h().check(h)?;
    let values: Vec<f64> = if g.values().len() >= PARALLEL_THRESHOLD {
        g.values()
            .par_iter()
            .map(|&gi| resolvent_solve(gi, h, nl))
            .collect::<Result<_>>()?
    } else {
        g.values()
            .iter()
            .map(|&gi| resolvent_solve(gi, h, nl))
            .collect::<Result<_>>()?
    };
    Ok(Field::from_vec_unchecked(*g.grid(), values))
}

/// The same resolvent written for the second difference
/// `z = (r - base) / h^2`: solves
///
/// ```text
/// (1 + h) z + beta(base + h^2 z) + pi(base + h^2 z) = rhs
/// ```
///
/// which is the resolvent equation divided by `h^2` with
/// `g = (1 + h) base + h^2 rhs`. Solving for `z` keeps the residual of the
/// undivided momentum equation at rounding level even for tiny `h`.
pub fn resolvent_solve_increment(base: f64, rhs: f64, h: f64, nl: &Nonlinearity) -> Result<f64> {
    let h2 = h * h;
    let f = |z: f64| {
        let r = base + h2 * z;
        (
            (1.0 + h) * z + nl.beta(r) + nl.pi(r) - rhs,
            1.0 + h + h2 * (nl.beta_prime(r) + nl.pi_slope),
        )
    };
    let explicit = rhs - nl.beta(base) - nl.pi(base);
    let scale = 1.0 + rhs.abs() + nl.beta(base).abs() + nl.pi(base).abs();
    solve_increasing(f, explicit / (1.0 + h), RESIDUAL_TOL * scale, rhs)
}

pub(crate) fn resolvent_increment_cells(
    base: &[f64],
    rhs: &[f64],
    h: f64,
    nl: &Nonlinearity,
) -> Result<Vec<f64>> {
    nl.admissible_h().check(h)?;
    if base.len() >= PARALLEL_THRESHOLD {
        base.par_iter()
            .zip(rhs.par_iter())
            .map(|(&p, &q)| resolvent_solve_increment(p, q, h, nl))
            .collect()
    } else {
        base.iter()
            .zip(rhs)
            .map(|(&p, &q)| resolvent_solve_increment(p, q, h, nl))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Plain bisection on F; shares nothing with the Newton path.
    fn bisection_oracle(g: f64, h: f64, a: f64, b: f64, c: f64) -> f64 {
        let f = |r: f64| (1.0 + h) * r + h * h * (a * r * r * r + b * r + c) - g;
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn linear_case_is_exact() {
        let nl = Nonlinearity::linear_only(0.0, 0.0);
        assert!((resolvent_solve(3.0, 0.5, &nl).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_data_gives_zero() {
        let nl = Nonlinearity::cubic(2.0, 0.7, 0.0).unwrap();
        assert_eq!(resolvent_solve(0.0, 0.5, &nl).unwrap(), 0.0);
    }

    #[test]
    fn cubic_example_matches_bisection() {
        let nl = Nonlinearity::cubic(1.0, 0.0, 0.0).unwrap();
        let phi = resolvent_solve(1.0, 0.5, &nl).unwrap();
        let oracle = bisection_oracle(1.0, 0.5, 1.0, 0.0, 0.0);
        assert!((phi - oracle).abs() < 1e-12);
        assert!((phi - 0.625_816_818_958_466_7).abs() < 1e-12);
        assert!((1.5 * phi + 0.25 * phi.powi(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissibility_bound() {
        assert_eq!(
            Nonlinearity::cubic(1.0, 2.0, 0.0)
                .unwrap()
                .admissible_h()
                .h_max,
            0.5
        );
        assert_eq!(
            Nonlinearity::cubic(1.0, 0.0, 0.0)
                .unwrap()
                .admissible_h()
                .h_max,
            1.0
        );
        assert_eq!(
            Nonlinearity::cubic(1.0, 0.5, 0.0)
                .unwrap()
                .admissible_h()
                .h_max,
            1.0
        );
        assert_eq!(
            Nonlinearity::cubic(1.0, -4.0, 0.0)
                .unwrap()
                .admissible_h()
                .h_max,
            0.25
        );
        let nl = Nonlinearity::cubic(1.0, 2.0, 0.0).unwrap();
        assert!(matches!(
            resolvent_solve(1.0, 0.5, &nl),
            Err(Error::InadmissibleStep { .. })
        ));
        assert!(resolvent_solve(1.0, 0.0, &nl).is_err());
        assert!(resolvent_solve(1.0, 0.49, &nl).is_ok());
    }

    #[test]
    fn invalid_beta_is_rejected() {
        assert!(OddPolynomial::new(&[(2, 1.0)]).is_err());
        assert!(OddPolynomial::new(&[(3, -1.0)]).is_err());
        assert!(OddPolynomial::new(&[(3, f64::INFINITY)]).is_err());
        assert!(OddPolynomial::new(&[(3, 1.0), (3, 2.0)]).is_err());
        // leading term positive but decreasing in the middle
        let wiggly = OddPolynomial::new(&[(1, -1.0), (3, 0.1)]).unwrap();
        assert!(Nonlinearity::new(wiggly, 0.0, 0.0, 5.0).is_err());
        // mixed signs that remain monotone are fine
        let ok = OddPolynomial::new(&[(1, 1.0), (3, -1.0), (5, 1.0)]).unwrap();
        assert!(Nonlinearity::new(ok, 0.0, 0.0, 5.0).is_ok());
    }

    #[test]
    fn field_solve_matches_pointwise_oracle() {
        let g = Grid::unit_interval(1000).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let rhs = Field::from_fn(g, |_| rng.gen_range(-2.0..2.0));
        let nl = Nonlinearity::cubic(1.5, 0.5, 0.2).unwrap();
        let phi = resolvent_field(&rhs, 0.6, &nl).unwrap();
        for (p, gi) in phi.values().iter().zip(rhs.values()) {
            assert!((p - bisection_oracle(*gi, 0.6, 1.5, 0.5, 0.2)).abs() < 1e-10);
        }

        let zero = resolvent_field(
            &Field::zeros(g),
            0.6,
            &Nonlinearity::cubic(1.0, 0.5, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(zero.linf_norm(), 0.0);

        let constant = resolvent_field(&Field::constant(g, 1.3), 0.6, &nl).unwrap();
        let expected = resolvent_solve(1.3, 0.6, &nl).unwrap();
        assert!(constant.values().iter().all(|&v| v == expected));
    }

    #[test]
    fn increment_form_agrees_with_direct_form() {
        let nl = Nonlinearity::cubic(1.0, 0.5, 0.1).unwrap();
        let (base, rhs, h) = (0.3, -1.7, 0.05);
        let z = resolvent_solve_increment(base, rhs, h, &nl).unwrap();
        let g = (1.0 + h) * base + h * h * rhs;
        let r = resolvent_solve(g, h, &nl).unwrap();
        assert!((base + h * h * z - r).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_bound_on_solution() {
        // |phi|^2 is controlled by |g|_inf and |pi(0)|
        let nl = Nonlinearity::cubic(1.0, 0.5, 0.3).unwrap();
        let h = 0.5;
        for g in [-10.0, -1.0, 0.0, 1.0, 10.0] {
            let phi: f64 = resolvent_solve(g, h, &nl).unwrap();
            let bound = (0.5 * g * g + 0.5 * h * h * 0.09) / (0.5 + h - h * h * 0.5 - 0.5 * h * h);
            assert!(phi * phi <= bound + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn residual_is_strictly_increasing(
            a in 0.0f64..5.0, b in -3.0f64..3.0, frac in 0.01f64..0.99,
            r1 in -20.0f64..20.0, dr in 1e-6f64..10.0,
        ) {
            let nl = Nonlinearity::cubic(a, b, 0.0).unwrap();
            let h = frac * nl.admissible_h().h_max;
            prop_assert!(nl.resolvent_residual(r1, 0.0, h) < nl.resolvent_residual(r1 + dr, 0.0, h));
        }

        #[test]
        fn solution_is_monotone_in_data(
            a in 0.0f64..5.0, b in -3.0f64..3.0, frac in 0.01f64..0.99,
            g1 in -10.0f64..10.0, dg in 0.0f64..5.0,
        ) {
            let nl = Nonlinearity::cubic(a, b, 0.1).unwrap();
            let h = frac * nl.admissible_h().h_max;
            let lo = resolvent_solve(g1, h, &nl).unwrap();
            let hi = resolvent_solve(g1 + dg, h, &nl).unwrap();
            prop_assert!(lo <= hi + 1e-12);
        }

        #[test]
        fn subdifferential_inequality(a in 0.0f64..5.0, r in -5.0f64..5.0, s in -5.0f64..5.0) {
            let nl = Nonlinearity::new(
                OddPolynomial::new(&[(1, 0.2), (3, a), (5, 0.01)]).unwrap(), 0.0, 0.0, 10.0,
            ).unwrap();
            let lhs = nl.beta(r) * (r - s);
            let rhs = nl.beta_hat(r) - nl.beta_hat(s);
            prop_assert!(lhs >= rhs - 1e-12 * (1.0 + lhs.abs()));
            prop_assert!(nl.beta_hat(r) >= 0.0);
        }
    }
}

//! Limit-case periodic solutions and the equations they solve.
//!
//! `x_s` and `y_s` are built from the profile `ψ_s`; `f` and `g` are the
//! classical 3/2 and `2.75 + ln 2` witnesses. Solutions are exact analytic
//! evaluators; only the coefficient and the delay are piecewise functions.

use crate::fnspec::{Equation, Extension, FnError, Piece, PiecewiseFn, Role};
use crate::integrator::{merged_grid, History, IntegrateError, Trajectory};
use crate::lambda::{lambda_of, LambdaError, PsiProfile};
use serde::Serialize;
use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Fn(#[from] FnError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleName {
    Xs,
    Ys,
    MyshkisF,
    LilloG,
}

impl ExampleName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleName::Xs => "x_s",
            ExampleName::Ys => "y_s",
            ExampleName::MyshkisF => "myshkis_f",
            ExampleName::LilloG => "lillo_g",
        }
    }
}

/// Exact values of the quantities the analyses should recover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expected {
    pub sup_int: f64,
    pub ell: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `ψ_s` on `[0, Λ−1]`, then `Λ − t` on `[Λ−1, Λ]`.
    Psi(PsiProfile),
    /// `1 − t` on `[0, 3/2]`, then `−1/2 − ∫_0^{t−3/2}(1 − u) du`.
    Myshkis,
    /// `1 − t`, `−1/8 − ∫_0^{t−9/8}(1 − u) du`, `−1/2 e^{t−13/8}`.
    Lillo,
}

#[derive(Debug, Clone)]
pub struct NamedExample {
    pub name: ExampleName,
    pub s: Option<f64>,
    pub eq: Equation,
    /// Length of one (anti)period of the solution.
    pub period: f64,
    /// `x(t + period) = −x(t)` instead of `x(t + period) = x(t)`.
    pub antiperiodic: bool,
    pub expected: Expected,
    shape: Shape,
    /// Times in `[0, period)` where the solution is not smooth.
    knots: Vec<f64>,
}

impl NamedExample {
    /// Exact solution value.
    pub fn solution(&self, t: f64) -> f64 {
        let k = (t / self.period).floor();
        let mut r = t - k * self.period;
        if r >= self.period {
            r -= self.period;
        }
        let r = r.max(0.0);
        let base = match self.shape {
            Shape::Psi(p) => {
                let end = p.end();
                if r <= end {
                    p.eval(r).expect("r within the profile domain")
                } else {
                    1.0 - (r - end)
                }
            }
            Shape::Myshkis => {
                if r <= 1.5 {
                    1.0 - r
                } else {
                    let v = r - 1.5;
                    -0.5 - (v - 0.5 * v * v)
                }
            }
            Shape::Lillo => {
                if r <= 1.125 {
                    1.0 - r
                } else if r <= 1.625 {
                    let v = r - 1.125;
                    -0.125 - (v - 0.5 * v * v)
                } else {
                    -0.5 * (r - 1.625).exp()
                }
            }
        };
        if self.antiperiodic && (k as i64).rem_euclid(2) == 1 {
            -base
        } else {
            base
        }
    }

    /// Full period of the solution.
    pub fn full_period(&self) -> f64 {
        if self.antiperiodic {
            2.0 * self.period
        } else {
            self.period
        }
    }

    /// Non-smooth points of the solution in `[a, b]`.
    pub fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = (a / self.period).floor() - 1.0;
        while k * self.period <= b {
            for &knot in &self.knots {
                let t = knot + k * self.period;
                if t >= a && t <= b {
                    out.push(t);
                }
            }
            k += 1.0;
        }
        out
    }

    /// The exact solution sampled on `[τ_min(t0), t_end]` with spacing `h`,
    /// including every kink and the start `t0` of the equation window.
    pub fn sample(&self, t0: f64, t_end: f64, h: f64) -> Result<Trajectory, ExampleError> {
        let start = self.eq.tau.tau_min(t0)?.min(t0);
        let mut extra = self.kinks(start, t_end);
        extra.push(t0);
        extra.extend(self.eq.c.breakpoints(t0, t_end)?);
        extra.extend(self.eq.tau.breakpoints(t0, t_end)?);
        let grid = merged_grid(start, t_end, h, &extra);
        let samples = grid.into_iter().map(|t| (t, self.solution(t))).collect();
        Ok(Trajectory::from_samples(self.eq.clone(), samples, t0, h))
    }

    /// History segment `[τ_min(t0), t0]` taken from the exact solution.
    pub fn history(&self, t0: f64, h: f64) -> Result<History, ExampleError> {
        let start = self.eq.tau.tau_min(t0)?.min(t0);
        let kinks = self.kinks(start, t0);
        Ok(History::from_fn(|t| self.solution(t), start, t0, h, &kinks)?)
    }
}

fn push_piece(pieces: &mut Vec<Piece>, piece: Piece) {
    if piece.end > piece.start {
        pieces.push(piece);
    }
}

/// Delay pieces shared by `x_s` and `y_s`; `lag` is 0 for `x_s` and `Λ(s)`
/// for `y_s`, whose first two branches reach one antiperiod further back.
fn psi_delay(profile: &PsiProfile, lam: f64, lag: f64, last: f64) -> Result<PiecewiseFn, FnError> {
    let s = profile.s;
    let [k1, k2, k3] = profile.knots;
    let mut pieces = Vec::new();
    push_piece(&mut pieces, Piece::constant(0.0, k1, -1.0 - lag));
    push_piece(&mut pieces, Piece::affine(k1, k2, 1.0, -s - lag));
    push_piece(&mut pieces, Piece::affine(k2, k3, 1.0, 0.0));
    push_piece(&mut pieces, Piece::constant(k3, lam, last));
    PiecewiseFn::new(pieces, Extension::AffinePeriodic(lam), Role::Delay)
}

/// `Λ(s)`-periodic, `Λ(s)`-rapidly oscillating solution with `|c| ≡ 1` and
/// sup-delay integral `s`.
pub fn make_xs(s: f64) -> Result<NamedExample, ExampleError> {
    let lam = lambda_of(s)?;
    let profile = PsiProfile::new(s)?;
    let k3 = profile.knots[2];
    let c = PiecewiseFn::new(
        vec![Piece::constant(0.0, k3, -1.0), Piece::constant(k3, lam, 1.0)],
        Extension::Periodic(lam),
        Role::Coefficient,
    )?;
    let tau = psi_delay(&profile, lam, 0.0, k3)?;
    Ok(NamedExample {
        name: ExampleName::Xs,
        s: Some(s),
        eq: Equation::new(c, tau)?,
        period: lam,
        antiperiodic: false,
        expected: Expected {
            sup_int: s,
            ell: lam,
            tau_max: s,
        },
        shape: Shape::Psi(profile),
        knots: knots_of(&profile),
    })
}

/// Antiperiodic variant of `x_s` with `c ≡ −1`; `|y_s| = x_s` and
/// `τ_max = σ(s)`.
pub fn make_ys(s: f64) -> Result<NamedExample, ExampleError> {
    let lam = lambda_of(s)?;
    let profile = PsiProfile::new(s)?;
    let c = PiecewiseFn::new(
        vec![Piece::constant(0.0, lam, -1.0)],
        Extension::Periodic(lam),
        Role::Coefficient,
    )?;
    let tau = psi_delay(&profile, lam, lam, -1.0)?;
    Ok(NamedExample {
        name: ExampleName::Ys,
        s: Some(s),
        eq: Equation::new(c, tau)?,
        period: lam,
        antiperiodic: true,
        expected: Expected {
            sup_int: s + lam,
            ell: lam,
            tau_max: s + lam,
        },
        shape: Shape::Psi(profile),
        knots: knots_of(&profile),
    })
}

fn knots_of(profile: &PsiProfile) -> Vec<f64> {
    let mut k = vec![0.0];
    k.extend(profile.knots.iter().copied().filter(|&t| t > 0.0));
    k.dedup();
    k
}

/// The 3/2 witness with `c ≡ 1` and `τ_max = 3/2` (antiperiod 5/2).
///
/// The delay is reconstructed branch by branch: `τ = 0` on `[0, 3/2)`
/// where `f' = −1 = −f(0)`, and `τ = t − 3/2` on `[3/2, 5/2)` where
/// `f' = −(5/2 − t) = −f(t − 3/2)`.
pub fn make_myshkis_f() -> Result<NamedExample, ExampleError> {
    let half = 2.5;
    let c = PiecewiseFn::new(
        vec![Piece::constant(0.0, half, 1.0)],
        Extension::Periodic(half),
        Role::Coefficient,
    )?;
    let tau = PiecewiseFn::new(
        vec![Piece::constant(0.0, 1.5, 0.0), Piece::affine(1.5, half, 1.0, -1.5)],
        Extension::AffinePeriodic(half),
        Role::Delay,
    )?;
    Ok(NamedExample {
        name: ExampleName::MyshkisF,
        s: None,
        eq: Equation::new(c, tau)?,
        period: half,
        antiperiodic: true,
        expected: Expected {
            sup_int: 1.5,
            ell: half,
            tau_max: 1.5,
        },
        shape: Shape::Myshkis,
        knots: vec![0.0, 1.5],
    })
}

/// The `2.75 + ln 2` witness with `c ≡ −1` (antiperiod `13/8 + ln 2`).
///
/// Reconstructed delay: `τ = −P` on `[0, 9/8)`, `τ = t − 9/8 − P` on
/// `[9/8, 13/8)` and `τ = t` on the exponential branch, `P = 13/8 + ln 2`.
pub fn make_lillo_g() -> Result<NamedExample, ExampleError> {
    let half = 1.625 + LN_2;
    let c = PiecewiseFn::new(
        vec![Piece::constant(0.0, half, -1.0)],
        Extension::Periodic(half),
        Role::Coefficient,
    )?;
    let tau = PiecewiseFn::new(
        vec![
            Piece::constant(0.0, 1.125, -half),
            Piece::affine(1.125, 1.625, 1.0, -1.125 - half),
            Piece::affine(1.625, half, 1.0, 0.0),
        ],
        Extension::AffinePeriodic(half),
        Role::Delay,
    )?;
    Ok(NamedExample {
        name: ExampleName::LilloG,
        s: None,
        eq: Equation::new(c, tau)?,
        period: half,
        antiperiodic: true,
        expected: Expected {
            sup_int: 2.75 + LN_2,
            ell: half,
            tau_max: 2.75 + LN_2,
        },
        shape: Shape::Lillo,
        knots: vec![0.0, 1.125, 1.625],
    })
}

/// `max |g(t + 1) − y_{9/8}(t + shift)|` over a uniform grid spanning two
/// full periods of `g`.
pub fn g_ys_deviation(grid_points: usize, shift: f64) -> Result<f64, ExampleError> {
    let g = make_lillo_g()?;
    let y = make_ys(1.125)?;
    let span = 2.0 * g.full_period();
    let n = grid_points.max(2);
    Ok((0..n)
        .map(|i| span * i as f64 / (n - 1) as f64)
        .map(|t| (g.solution(t + 1.0) - y.solution(t + shift)).abs())
        .fold(0.0, f64::max))
}

/// Deviation in the identity `g(t + 1) = y_{9/8}(t + ln 2 + 13/8)`.
pub fn check_g_ys_identity(grid_points: usize) -> Result<f64, ExampleError> {
    g_ys_deviation(grid_points, LN_2 + 1.625)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xs_values() {
        let x2 = make_xs(2.0).unwrap();
        assert_eq!(x2.solution(0.5), 0.5);
        assert_eq!(x2.solution(1.5), 0.5);
        assert_eq!(x2.eq.tau.pieces().len(), 2);
        assert_eq!(x2.eq.tau.eval(0.5).unwrap(), -1.0);
        assert_eq!(x2.eq.tau.eval(1.5).unwrap(), 1.0);
        for &s in &[1.0, 1.125, 1.5, 2.0] {
            let x = make_xs(s).unwrap();
            let lam = lambda_of(s).unwrap();
            assert!((x.solution(lam - 1.0) - 1.0).abs() < 1e-12);
            assert!((x.solution(7.3) - x.solution(7.3 + lam)).abs() < 1e-12);
        }
        assert!((make_xs(1.125).unwrap().solution(0.625) - 0.5).abs() < 1e-15);
        assert!(make_xs(0.5).is_err());
    }

    #[test]
    fn ys_values() {
        let y = make_ys(1.125).unwrap();
        assert!((y.expected.tau_max - (2.75 + LN_2)).abs() < 1e-12);
        assert!((make_ys(2.0).unwrap().expected.sup_int - 4.0).abs() < 1e-12);
        let y2 = make_ys(2.0).unwrap();
        assert_eq!(y2.eq.tau.eval(0.5).unwrap(), -3.0);
        assert_eq!(y2.eq.tau.eval(1.5).unwrap(), -1.0);
        for &s in &[1.0, 1.3, 1.125, 2.0] {
            let y = make_ys(s).unwrap();
            let x = make_xs(s).unwrap();
            for i in 0..100 {
                let t = -3.0 + 0.13 * i as f64;
                assert!((y.solution(t + y.period) + y.solution(t)).abs() < 1e-12);
                assert!((y.solution(t).abs() - x.solution(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn myshkis_values() {
        let f = make_myshkis_f().unwrap();
        assert_eq!(f.solution(0.0), 1.0);
        assert_eq!(f.solution(1.0), 0.0);
        assert_eq!(f.solution(1.5), -0.5);
        assert!((f.solution(2.5) + 1.0).abs() < 1e-15);
        // midpoint-rule cross-check of −1/2 − ∫_0^1 (1 − u) du
        let n = 100_000;
        let integral: f64 = (0..n).map(|i| 1.0 - (i as f64 + 0.5) / n as f64).sum::<f64>() / n as f64;
        assert!((f.solution(2.5) - (-0.5 - integral)).abs() < 1e-9);
        for i in 0..100 {
            let t = -4.0 + 0.17 * i as f64;
            assert!((f.solution(t + 5.0) - f.solution(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn lillo_values() {
        let g = make_lillo_g().unwrap();
        assert!((g.solution(1.125) + 0.125).abs() < 1e-15);
        assert!((g.solution(1.625) + 0.5).abs() < 1e-15);
        assert!((g.solution(1.625 + LN_2 - 1e-15) + 1.0).abs() < 1e-12);
        assert_eq!(g.solution(0.0), 1.0);
    }

    #[test]
    fn identity() {
        assert!(check_g_ys_identity(10_000).unwrap() <= 1e-12);
        assert!(check_g_ys_identity(2).unwrap() <= 1e-12);
        assert!(g_ys_deviation(10_000, LN_2 + 1.625 + 0.01).unwrap() > 1e-3);
    }

    #[test]
    fn delays_never_exceed_t() {
        let all = [
            make_xs(1.0).unwrap(),
            make_xs(1.7).unwrap(),
            make_ys(1.2).unwrap(),
            make_myshkis_f().unwrap(),
            make_lillo_g().unwrap(),
        ];
        for ex in &all {
            for i in 0..10_000 {
                let t = 0.0013 * i as f64;
                assert!(ex.eq.tau.eval(t).unwrap() <= t + 1e-12);
            }
        }
    }

    #[test]
    fn oracle_residual() {
        let mut all = vec![make_myshkis_f().unwrap(), make_lillo_g().unwrap()];
        for &s in &[1.0, 1.125, 1.5, 2.0] {
            all.push(make_xs(s).unwrap());
            all.push(make_ys(s).unwrap());
        }
        for ex in &all {
            let t0 = ex.eq.rho;
            let x = ex.sample(t0, t0 + 2.0 * ex.full_period(), 1e-4).unwrap();
            let r = crate::integrator::residual(&ex.eq, &x).unwrap();
            assert!(r <= 1e-6, "{} s={:?}: residual {r}", ex.name.as_str(), ex.s);
        }
    }
}

//! Seeded random equations and histories for property checks.

use crate::fnspec::{Equation, Extension, FnError, Piece, PiecewiseFn, Role};
use crate::integrator::{History, IntegrateError};
use crate::oscillation::{sup_delay_integral, OscError};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED_ENV: &str = "DELAYOSC_SEED";
pub const DEFAULT_SEED: u64 = 20_240_611;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed from `DELAYOSC_SEED`, or the default when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Nonneg,
    Nonpos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    pub sign: SignClass,
    /// The sup-delay integral is drawn uniformly from this range.
    pub sup_int: (f64, f64),
    pub period: (f64, f64),
    pub max_pieces: usize,
    /// Range of `t − τ(t)` at the start of each delay piece.
    pub lag: (f64, f64),
    /// Allow affine coefficient pieces; otherwise piecewise constant.
    pub affine_c: bool,
}

impl GenOptions {
    pub fn new(sign: SignClass, sup_int: (f64, f64)) -> Self {
        GenOptions {
            sign,
            sup_int,
            period: (1.0, 2.5),
            max_pieces: 3,
            lag: (0.3, 1.5),
            affine_c: false,
        }
    }
}

fn cuts(rng: &mut TestRng, period: f64, max_pieces: usize) -> Vec<f64> {
    let n = rng.gen_range(1..=max_pieces.max(1));
    let mut inner: Vec<f64> = (1..n).map(|_| rng.gen_range(0.1..0.9) * period).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|a, b| (*a - *b).abs() < 0.05 * period);
    let mut out = vec![0.0];
    out.extend(inner);
    out.push(period);
    out
}

fn coefficient(rng: &mut TestRng, o: &GenOptions, period: f64, scale: f64) -> Result<PiecewiseFn, FnError> {
    let sign = match o.sign {
        SignClass::Nonneg => 1.0,
        SignClass::Nonpos => -1.0,
    };
    let c = cuts(rng, period, o.max_pieces);
    let pieces = c
        .windows(2)
        .map(|w| {
            let v0 = rng.gen_range(0.2..1.0);
            if o.affine_c && rng.gen_bool(0.5) {
                let v1: f64 = rng.gen_range(0.0..1.0);
                let slope = (v1 - v0) / (w[1] - w[0]);
                Piece::affine(w[0], w[1], sign * scale * slope, sign * scale * (v0 - slope * w[0]))
            } else {
                Piece::constant(w[0], w[1], sign * scale * v0)
            }
        })
        .collect();
    PiecewiseFn::new(pieces, Extension::Periodic(period), Role::Coefficient)
}

fn delay(rng: &mut TestRng, o: &GenOptions, period: f64) -> Result<PiecewiseFn, FnError> {
    let c = cuts(rng, period, o.max_pieces);
    let pieces = c
        .windows(2)
        .map(|w| {
            let lag = rng.gen_range(o.lag.0..o.lag.1);
            if rng.gen_bool(0.5) {
                Piece::affine(w[0], w[1], 1.0, -lag)
            } else {
                Piece::constant(w[0], w[1], w[0] - lag)
            }
        })
        .collect();
    PiecewiseFn::new(pieces, Extension::AffinePeriodic(period), Role::Delay)
}

/// A periodic equation of the requested sign whose sup-delay integral is
/// drawn from `o.sup_int`; the coefficient is rescaled to hit it.
pub fn random_equation(rng: &mut TestRng, o: &GenOptions) -> Result<Equation, OscError> {
    let period = rng.gen_range(o.period.0..o.period.1);
    let target = rng.gen_range(o.sup_int.0..=o.sup_int.1);
    let mut c_rng = rng.clone();
    let c = coefficient(rng, o, period, 1.0)?;
    let tau = delay(rng, o, period)?;
    let eq = Equation::new(c, tau.clone())?;
    let raw = sup_delay_integral(&eq, eq.rho + period)?;
    let c = coefficient(&mut c_rng, o, period, target / raw)?;
    Ok(Equation::with_anchor(c, tau, eq.t1, eq.rho)?)
}

/// A sign-changing history `A sin(ω (t − t0) + φ)` on `[τ_min(t0), t0]`.
pub fn oscillating_history(rng: &mut TestRng, eq: &Equation, t0: f64, h: f64) -> Result<History, IntegrateError> {
    let omega = std::f64::consts::TAU / rng.gen_range(0.5..2.0);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let amp = rng.gen_range(0.5..2.0);
    let start = eq.tau.tau_min(t0)?.min(t0);
    History::from_fn(|t| amp * (omega * (t - t0) + phase).sin(), start, t0, h, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_target_and_sign() {
        let mut r = rng(7);
        for sign in [SignClass::Nonneg, SignClass::Nonpos] {
            for _ in 0..20 {
                let mut o = GenOptions::new(sign, (0.5, 1.4));
                o.affine_c = true;
                let eq = random_equation(&mut r, &o).unwrap();
                let p = eq.period().unwrap();
                let s = sup_delay_integral(&eq, eq.rho + p).unwrap();
                assert!((0.5 - 1e-9..=1.4 + 1e-9).contains(&s), "{s}");
                let (lo, hi) = eq.c.range(0.0, p).unwrap();
                match sign {
                    SignClass::Nonneg => assert!(lo >= 0.0),
                    SignClass::Nonpos => assert!(hi <= 0.0),
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let o = GenOptions::new(SignClass::Nonneg, (0.5, 1.4));
        let a = random_equation(&mut rng(3), &o).unwrap();
        let b = random_equation(&mut rng(3), &o).unwrap();
        assert_eq!(a, b);
    }
}

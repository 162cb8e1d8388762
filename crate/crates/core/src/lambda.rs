//! The threshold function `Λ(s) = 2 + s − √(2s) − ln(√(2s) − 1)`, its
//! companion `σ(s) = Λ(s) + s`, the extremal profile `ψ_s` and the decay
//! factors of the stability criteria.

use serde::Serialize;
use thiserror::Error;

/// Argument tolerance for every bisection in this module.
pub const BISECTION_TOL: f64 = 1e-12;
/// Offset used when an oscillation speed at or below `Λ(s) − 1` is lifted
/// just above it.
pub const ELL_LIFT: f64 = 1e-9;
/// Slack allowed when comparing measured quantities with thresholds.
pub const HYP_TOL: f64 = 1e-12;
/// Intervals in the Picard quadrature grid.
pub const PICARD_GRID: usize = 16_384;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LambdaError {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

fn check_s(s: f64) -> Result<(), LambdaError> {
    if (1.0..=2.0).contains(&s) {
        Ok(())
    } else {
        Err(LambdaError::Domain {
            what: "s",
            value: s,
            domain: "[1, 2]",
        })
    }
}

pub fn lambda_of(s: f64) -> Result<f64, LambdaError> {
    check_s(s)?;
    let r = (2.0 * s).sqrt();
    Ok(2.0 + s - r - (r - 1.0).ln())
}

pub fn sigma_of(s: f64) -> Result<f64, LambdaError> {
    Ok(lambda_of(s)? + s)
}

/// `σ'(s) = (2√(2s) − 3) / (√(2s) − 1)`.
pub fn sigma_prime(s: f64) -> Result<f64, LambdaError> {
    check_s(s)?;
    let r = (2.0 * s).sqrt();
    Ok((2.0 * r - 3.0) / (r - 1.0))
}

/// `Λ'(s) = ((√(2s) − 1)² − 1) / (√(2s) (√(2s) − 1))`.
pub fn lambda_prime(s: f64) -> Result<f64, LambdaError> {
    check_s(s)?;
    let r = (2.0 * s).sqrt();
    Ok(((r - 1.0).powi(2) - 1.0) / (r * (r - 1.0)))
}

/// Minimizer of `σ` on `[1, 2]`, located by bisection on the sign of `σ'`
/// (the minimum is too flat for value comparisons to resolve it).
pub fn sigma_argmin() -> (f64, f64) {
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if sigma_prime(mid).expect("mid in [1,2]") < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    (s, sigma_of(s).expect("s in [1,2]"))
}

/// Knots and knot values of `ψ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiProfile {
    pub s: f64,
    /// `s − 1`, `(1 + s) − √(2s)`, `Λ(s) − 1`.
    pub knots: [f64; 3],
    /// `s − 1`, `√(2s) − 1`, `1`.
    pub values: [f64; 3],
}

impl PsiProfile {
    pub fn new(s: f64) -> Result<Self, LambdaError> {
        let lam = lambda_of(s)?;
        let r = (2.0 * s).sqrt();
        Ok(PsiProfile {
            s,
            knots: [s - 1.0, (1.0 + s) - r, lam - 1.0],
            values: [s - 1.0, r - 1.0, 1.0],
        })
    }

    pub fn end(&self) -> f64 {
        self.knots[2]
    }

    /// Closed-form `ψ_s(t)` on `[0, Λ(s) − 1]`.
    pub fn eval(&self, t: f64) -> Result<f64, LambdaError> {
        let end = self.end();
        if !(t >= -HYP_TOL && t <= end + HYP_TOL) {
            return Err(LambdaError::Domain {
                what: "t",
                value: t,
                domain: "[0, Λ(s) − 1]",
            });
        }
        let t = t.clamp(0.0, end);
        let [k1, k2, k3] = self.knots;
        let s = self.s;
        Ok(if t <= k1 {
            t
        } else if t == k2 {
            self.values[1]
        } else if t < k2 {
            // s − 1 + ∫_{s−1}^t (s − u) du, factored
            let d = t - k1;
            k1 + 0.5 * d * (s + 1.0 - t)
        } else if t == k3 {
            1.0
        } else {
            self.values[1] * (t - k2).exp()
        })
    }

    /// Right-hand side `min{1, max(s − t, ψ)}` of the profile's ODE.
    pub fn rhs(&self, t: f64, psi: f64) -> f64 {
        (self.s - t).max(psi).min(1.0)
    }
}

pub fn psi_closed(s: f64, t: f64) -> Result<f64, LambdaError> {
    PsiProfile::new(s)?.eval(t)
}

/// A Picard iterate `ι_n` tabulated on a uniform grid over `[0, Λ(s) − 1]`.
#[derive(Debug, Clone)]
pub struct PicardIterate {
    pub s: f64,
    pub n: usize,
    step: f64,
    values: Vec<f64>,
}

impl PicardIterate {
    /// `ι_{k+1}(t) = ∫_0^t min{1, max(s − u, ι_k(u))} du`, `ι_0 ≡ 0`, with
    /// the integral taken by the cumulative trapezoid rule.
    pub fn new(s: f64, n: usize) -> Result<Self, LambdaError> {
        let end = lambda_of(s)? - 1.0;
        let m = PICARD_GRID;
        let step = end / m as f64;
        let mut values = vec![0.0; m + 1];
        let mut integrand = vec![0.0; m + 1];
        for _ in 0..n {
            for (j, g) in integrand.iter_mut().enumerate() {
                let u = j as f64 * step;
                *g = (s - u).max(values[j]).min(1.0);
            }
            let mut acc = 0.0;
            values[0] = 0.0;
            for j in 1..=m {
                acc += 0.5 * step * (integrand[j - 1] + integrand[j]);
                values[j] = acc;
            }
        }
        Ok(PicardIterate { s, n, step, values })
    }

    pub fn eval(&self, t: f64) -> Result<f64, LambdaError> {
        let end = self.step * (self.values.len() - 1) as f64;
        if !(t >= -HYP_TOL && t <= end + HYP_TOL) {
            return Err(LambdaError::Domain {
                what: "t",
                value: t,
                domain: "[0, Λ(s) − 1]",
            });
        }
        let x = (t.clamp(0.0, end) / self.step).min((self.values.len() - 1) as f64);
        let j = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - j as f64;
        Ok(self.values[j] * (1.0 - w) + self.values[j + 1] * w)
    }
}

pub fn psi_picard(s: f64, t: f64, n: usize) -> Result<f64, LambdaError> {
    PicardIterate::new(s, n)?.eval(t)
}

/// Root of `α − ψ_s(ℓ − α)` on `[1 + ℓ − Λ(s), 1]`.
///
/// `ℓ = Λ(s)` gives `α = 1`; `ℓ ≤ Λ(s) − 1` is first lifted to
/// `Λ(s) − 1 + ELL_LIFT`.
pub fn alpha_root(s: f64, ell: f64) -> Result<f64, LambdaError> {
    let psi = PsiProfile::new(s)?;
    let lam = psi.end() + 1.0;
    if !(ell >= 0.0) || ell > lam + HYP_TOL {
        return Err(LambdaError::Domain {
            what: "ℓ",
            value: ell,
            domain: "[0, Λ(s)]",
        });
    }
    if ell >= lam {
        return Ok(1.0);
    }
    let ell = if ell <= lam - 1.0 { lam - 1.0 + ELL_LIFT } else { ell };
    let j = |a: f64| -> f64 { a - psi.eval(ell - a).expect("argument within [ℓ−1, Λ−1]") };
    let (mut lo, mut hi) = (1.0 + ell - lam, 1.0);
    if j(hi) <= 0.0 {
        return Ok(hi);
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if j(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stability criteria that yield a contraction factor per zero cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Nonnegative coefficient with sup-delay integral at most 3/2.
    ThreeHalves,
    /// Oscillation speed at most 2.
    RapidTwo,
    /// Sup-delay integral at most `s` and speed at most `Λ(s)`.
    RapidLambda,
}

/// Contraction factor together with the auxiliary constants that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decay {
    pub factor: f64,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
}

pub fn decay(criterion: Criterion, sup_int: f64, ell: f64, s: f64) -> Result<Decay, LambdaError> {
    match criterion {
        Criterion::ThreeHalves => {
            if !(sup_int >= 0.0) || sup_int > 1.5 + HYP_TOL {
                return Err(LambdaError::HypothesisViolated(format!(
                    "sup-delay integral {sup_int} > 3/2"
                )));
            }
            let q = sup_int.max(1.0);
            Ok(Decay {
                factor: q - 0.5,
                q: Some(q),
                alpha: None,
            })
        }
        Criterion::RapidTwo => {
            if !(ell >= 0.0) || ell > 2.0 + HYP_TOL {
                return Err(LambdaError::HypothesisViolated(format!("ℓ = {ell} > 2")));
            }
            if ell >= 2.0 {
                return Ok(Decay {
                    factor: 1.0,
                    q: Some(2.0),
                    alpha: None,
                });
            }
            // An ℓ-rapidly oscillating function is also (ℓ+ε)-rapidly
            // oscillating, and the cascade bound is stated for ℓ > 1.
            let ell = ell.max(1.0);
            let q = ((4.0 + ell) / 3.0).clamp(ell, 2.0);
            let factor = (q - 1.0).max(1.0 - 0.5 * (q - ell));
            Ok(Decay {
                factor,
                q: Some(q),
                alpha: None,
            })
        }
        Criterion::RapidLambda => {
            let lam = lambda_of(s)?;
            if sup_int > s + HYP_TOL {
                return Err(LambdaError::HypothesisViolated(format!(
                    "sup-delay integral {sup_int} > s = {s}"
                )));
            }
            if !(ell >= 0.0) || ell > lam + HYP_TOL {
                return Err(LambdaError::HypothesisViolated(format!("ℓ = {ell} > Λ(s) = {lam}")));
            }
            let ell = ell.min(lam);
            let alpha = alpha_root(s, ell)?;
            let lifted = if ell <= lam - 1.0 { lam - 1.0 + ELL_LIFT } else { ell };
            let factor = psi_closed(s, (lifted - alpha).clamp(0.0, lam - 1.0))?;
            Ok(Decay {
                factor,
                q: None,
                alpha: Some(alpha),
            })
        }
    }
}

pub fn decay_factor(criterion: Criterion, sup_int: f64, ell: f64, s: f64) -> Result<f64, LambdaError> {
    decay(criterion, sup_int, ell, s).map(|d| d.factor)
}

/// Constants of the exponential estimate
/// `|x(t)| ≤ M sup_{[t1, t1+δ]} |x| e^{−γ (t − t1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayConstants {
    pub d: f64,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: u64,
    #[serde(rename = "M")]
    pub m: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Bound on `t − τ_min²(t)`.
    #[serde(rename = "C")]
    pub c_bound: f64,
    /// Lower bound on `∫_{τ_min²(t)}^t |c|`.
    #[serde(rename = "D")]
    pub d_bound: f64,
}

pub fn exp_decay_constants(d: f64, c_bound: f64, d_bound: f64, ell: f64) -> Result<DecayConstants, LambdaError> {
    if !(d > 0.0 && d < 1.0) {
        return Err(LambdaError::Domain {
            what: "d",
            value: d,
            domain: "(0, 1)",
        });
    }
    if !(c_bound > 0.0) {
        return Err(LambdaError::Domain {
            what: "C",
            value: c_bound,
            domain: "(0, ∞)",
        });
    }
    if !(d_bound > 0.0) {
        return Err(LambdaError::Domain {
            what: "D",
            value: d_bound,
            domain: "(0, ∞)",
        });
    }
    if !(ell >= 0.0) {
        return Err(LambdaError::Domain {
            what: "ℓ",
            value: ell,
            domain: "[0, ∞)",
        });
    }
    let beta = (ell / d_bound).floor() as u64 + 1;
    let delta = c_bound * beta as f64 + c_bound + 1.0;
    Ok(DecayConstants {
        d,
        q: None,
        alpha: None,
        beta,
        m: 1.0 / d,
        gamma: -d.ln() / delta,
        delta,
        c_bound,
        d_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn lambda_values() {
        assert!((lambda_of(2.0).unwrap() - 2.0).abs() < 1e-12);
        let at_one = 3.0 - 2f64.sqrt() - (2f64.sqrt() - 1.0).ln();
        assert!((lambda_of(1.0).unwrap() - at_one).abs() < 1e-12);
        assert!((at_one - 2.467160).abs() < 1e-6);
        assert!((lambda_of(1.125).unwrap() - (1.625 + LN_2)).abs() < 1e-12);
        assert!(lambda_of(0.99).is_err());
        assert!(lambda_of(2.01).is_err());
    }

    #[test]
    fn sigma_values() {
        assert!((sigma_of(1.125).unwrap() - (2.75 + LN_2)).abs() < 1e-12);
        assert!((sigma_of(2.0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(sigma_of(1.0).unwrap(), 1.0 + lambda_of(1.0).unwrap());
        assert!(sigma_prime(1.5).unwrap() > 0.0);
        assert!(sigma_prime(1.05).unwrap() < 0.0);
    }

    #[test]
    fn sigma_minimum() {
        let (s, v) = sigma_argmin();
        assert!((s - 1.125).abs() <= 1e-9);
        assert!((v - (2.75 + LN_2)).abs() <= 1e-12);
        // golden-section on the values agrees to the resolution values allow
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (1.0, 2.0);
        for _ in 0..80 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if sigma_of(x1).unwrap() < sigma_of(x2).unwrap() {
                b = x2;
            } else {
                a = x1;
            }
        }
        assert!((0.5 * (a + b) - s).abs() < 1e-6);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_closed(2.0, 0.7).unwrap(), 0.7);
        assert!((psi_closed(1.125, 0.625).unwrap() - 0.5).abs() < 1e-15);
        assert!((psi_closed(1.125, 0.625 + LN_2).unwrap() - 1.0).abs() < 1e-12);
        let p = PsiProfile::new(1.125).unwrap();
        assert_eq!(p.eval(p.end()).unwrap(), 1.0);
        assert!(psi_closed(1.5, -0.1).is_err());
    }

    #[test]
    fn psi_knots_continuous() {
        for i in 0..50 {
            let s = 1.0 + i as f64 / 49.0;
            let p = PsiProfile::new(s).unwrap();
            for k in 0..2 {
                let t = p.knots[k];
                let eps = 1e-13;
                let left = p.eval((t - eps).max(0.0)).unwrap();
                let right = p.eval((t + eps).min(p.end())).unwrap();
                assert!((left - right).abs() <= 1e-12, "s={s} knot {k}");
                assert!((p.eval(t).unwrap() - p.values[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn psi_solves_its_ode() {
        let h = 1e-6;
        for &s in &[1.0, 1.125, 1.5, 1.9] {
            let p = PsiProfile::new(s).unwrap();
            for i in 1..1000 {
                let t = p.end() * i as f64 / 1000.0;
                if p.knots.iter().any(|k| (t - k).abs() < 1e-4) {
                    continue;
                }
                let num = (p.eval(t + h).unwrap() - p.eval(t - h).unwrap()) / (2.0 * h);
                let rhs = p.rhs(t, p.eval(t).unwrap());
                assert!((num - rhs).abs() < 2e-6, "s={s} t={t}: {num} vs {rhs}");
            }
        }
    }

    #[test]
    fn picard_examples() {
        assert_eq!(psi_picard(1.5, 0.3, 0).unwrap(), 0.0);
        assert!((psi_picard(2.0, 1.0, 1).unwrap() - 1.0).abs() < 1e-12);
        let s = 1.125;
        assert!((psi_picard(s, 0.625 + LN_2, 60).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn picard_monotone_in_n() {
        let s = 1.3;
        let mut prev = PicardIterate::new(s, 0).unwrap();
        for n in 1..8 {
            let next = PicardIterate::new(s, n).unwrap();
            for i in 0..=200 {
                let t = (lambda_of(s).unwrap() - 1.0) * i as f64 / 200.0;
                assert!(next.eval(t).unwrap() >= prev.eval(t).unwrap() - 1e-12);
            }
            prev = next;
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_root(1.125, lambda_of(1.125).unwrap()).unwrap(), 1.0);
        assert_eq!(alpha_root(2.0, 2.0).unwrap(), 1.0);
        assert!((alpha_root(2.0, 1.5).unwrap() - 0.75).abs() < 1e-12);
        for &(s, ell) in &[(1.0, 2.2), (1.125, 2.0), (1.5, 2.05), (1.9, 1.5)] {
            let a = alpha_root(s, ell).unwrap();
            let lam = lambda_of(s).unwrap();
            let l = if ell <= lam - 1.0 { lam - 1.0 + ELL_LIFT } else { ell };
            assert!((a - psi_closed(s, l - a).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn decay_examples() {
        assert_eq!(decay_factor(Criterion::ThreeHalves, 1.0, 0.0, 1.0).unwrap(), 0.5);
        assert_eq!(decay_factor(Criterion::ThreeHalves, 1.5, 0.0, 1.0).unwrap(), 1.0);
        assert!(decay_factor(Criterion::ThreeHalves, 1.6, 0.0, 1.0).is_err());
        let d = decay(Criterion::RapidTwo, 0.0, 1.0, 1.0).unwrap();
        assert!((d.factor - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.q.unwrap() - 5.0 / 3.0).abs() < 1e-15);
        // grid search over q ∈ (1, 2)
        let best = (1..1_000_000)
            .map(|i| 1.0 + i as f64 * 1e-6)
            .map(|q| (q - 1.0).max(1.0 - 0.5 * (q - 1.0)))
            .fold(f64::INFINITY, f64::min);
        assert!((best - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(decay_factor(Criterion::RapidTwo, 0.0, 2.0, 1.0).unwrap(), 1.0);
        assert!(decay_factor(Criterion::RapidTwo, 0.0, 2.1, 1.0).is_err());
        for &s in &[1.0, 1.125, 1.5, 2.0] {
            let lam = lambda_of(s).unwrap();
            let f = decay_factor(Criterion::RapidLambda, s, lam, s).unwrap();
            assert!((f - 1.0).abs() <= 1e-10);
        }
        assert!(decay_factor(Criterion::RapidLambda, 1.6, 2.0, 1.5).is_err());
    }

    #[test]
    fn exp_constants() {
        let k = exp_decay_constants(0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(k.beta, 2);
        assert_eq!(k.delta, 4.0);
        assert_eq!(k.m, 2.0);
        assert!((k.gamma - LN_2 / 4.0).abs() < 1e-15);
        let k = exp_decay_constants((-1f64).exp(), 1.0, 2.0, 1.0).unwrap();
        assert_eq!(k.beta, 1);
        assert_eq!(k.delta, 3.0);
        assert!((k.gamma - 1.0 / 3.0).abs() < 1e-15);
        let near_one = exp_decay_constants(1.0 - 1e-12, 1.0, 1.0, 1.0).unwrap();
        assert!(near_one.gamma < 1e-12);
        assert!(exp_decay_constants(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(exp_decay_constants(0.5, 0.0, 1.0, 1.0).is_err());
    }
}

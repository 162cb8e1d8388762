//! Zeros, sign structure, oscillation speed and stability certificates.

use crate::fnspec::{Equation, FnError};
use crate::integrator::{IntegrateError, Trajectory};
use crate::lambda::{self, Criterion, DecayConstants, LambdaError};
use serde::Serialize;
use thiserror::Error;

/// Relative threshold below which a sample counts as zero.
pub const EPS_ZERO: f64 = 1e-9;
/// Points in the automatic scan over `s`.
pub const S_GRID: usize = 2000;
/// Margin added to a measured `ℓ`, in units of `h · sup|c|`.
pub const ELL_MARGIN_STEPS: f64 = 4.0;

#[derive(Debug, Error)]
pub enum OscError {
    #[error("need at least 2 zeros in the window, found {found}")]
    TooFewZeros { found: usize },
    #[error("inconsistent features: {0}")]
    InconsistentFeatures(String),
    #[error("trajectory ends at {available}, needs to reach past {needed}")]
    WindowTooShort { needed: f64, available: f64 },
    #[error("invalid horizon {0}")]
    BadHorizon(f64),
    #[error(transparent)]
    Fn(#[from] FnError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOptions {
    pub eps_zero: f64,
    /// Merge distance; `None` means one step of the trajectory.
    pub eps_t: Option<f64>,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions {
            eps_zero: EPS_ZERO,
            eps_t: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ZeroScan {
    zeros: Vec<f64>,
    /// Start of a cluster of negligible values that lasts to the end of the
    /// trajectory.
    collapsed_at: Option<f64>,
}

fn scan_zeros(x: &Trajectory, opts: &ZeroOptions, from: f64) -> ZeroScan {
    let eps_t = opts.eps_t.unwrap_or(x.step);
    let start = x.times.partition_point(|&t| t < from.max(x.t0));
    let ts = &x.times[start..];
    let vs = &x.values[start..];
    let mut spans: Vec<(f64, f64)> = Vec::new();
    let mut run_max: f64 = 0.0;
    let mut cluster: Option<usize> = None;
    let mut prev: Option<usize> = None;
    for i in 0..ts.len() {
        run_max = run_max.max(vs[i].abs());
        if vs[i].abs() <= opts.eps_zero * run_max {
            cluster.get_or_insert(i);
            continue;
        }
        if let Some(c) = cluster.take() {
            spans.push((ts[c], ts[i - 1]));
        } else if let Some(p) = prev {
            if vs[p].signum() != vs[i].signum() {
                let t = ts[p] + (ts[i] - ts[p]) * vs[p] / (vs[p] - vs[i]);
                spans.push((t, t));
            }
        }
        prev = Some(i);
    }
    let collapsed_at = cluster.map(|c| ts[c]);
    if let Some(t) = collapsed_at {
        spans.push((t, t));
    }
    let mut zeros = Vec::new();
    let mut iter = spans.into_iter();
    if let Some(mut cur) = iter.next() {
        for next in iter {
            if next.0 - cur.1 < eps_t {
                cur.1 = cur.1.max(next.1);
            } else {
                zeros.push(0.5 * (cur.0 + cur.1));
                cur = next;
            }
        }
        zeros.push(0.5 * (cur.0 + cur.1));
    }
    ZeroScan { zeros, collapsed_at }
}

/// Zeros of the trajectory on `[t0, T]`: interpolated sign changes and
/// midpoints of clusters of samples with `|x| ≤ eps_zero · max_{s≤t}|x|`,
/// with everything closer than `eps_t` merged. A cluster that lasts to the
/// end of the trajectory contributes its start instead of its midpoint.
pub fn find_zeros(x: &Trajectory, opts: &ZeroOptions) -> Vec<f64> {
    scan_zeros(x, opts, x.t0).zeros
}

/// A maximal zero-free stretch `(a, b)` with `mass = ∫_a^b |c|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignSegment {
    pub a: f64,
    pub b: f64,
    pub sign: i8,
    pub mass: f64,
    /// Bounded by the window rather than by two zeros.
    pub censored: bool,
}

fn sign_between(x: &Trajectory, a: f64, b: f64) -> Result<i8, IntegrateError> {
    let i = x.times.partition_point(|&t| t <= a);
    let j = x.times.partition_point(|&t| t < b);
    let v = x.values[i..j]
        .iter()
        .copied()
        .max_by(|p, q| p.abs().total_cmp(&q.abs()))
        .map_or_else(|| x.interp(0.5 * (a + b)), Ok)?;
    Ok(if v < 0.0 { -1 } else { 1 })
}

fn segments_from(
    x: &Trajectory,
    eq: &Equation,
    zeros: &[f64],
    from: f64,
    scan: &ZeroScan,
) -> Result<Vec<SignSegment>, OscError> {
    let end = x.t_end();
    let mut out = Vec::new();
    let mut push = |a: f64, b: f64, censored: bool| -> Result<(), OscError> {
        if b > a {
            let sign = sign_between(x, a, b)?;
            out.push(SignSegment {
                a,
                b,
                sign,
                mass: eq.c.abs_integral(a, b)?,
                censored,
            });
        }
        Ok(())
    };
    let Some((&first, _)) = zeros.split_first() else {
        if scan.collapsed_at.is_none() {
            push(from, end, true)?;
        }
        return Ok(out);
    };
    push(from, first, true)?;
    for w in zeros.windows(2) {
        push(w[0], w[1], false)?;
    }
    if scan.collapsed_at.is_none() {
        push(zeros[zeros.len() - 1], end, true)?;
    }
    Ok(out)
}

fn max_uncensored(segments: &[SignSegment]) -> Option<f64> {
    segments.iter().filter(|s| !s.censored).map(|s| s.mass).reduce(f64::max)
}

/// Largest `∫|c|` between consecutive zeros on `[t1, T]`. The stretches
/// before the first and after the last zero are censored and never counted.
pub fn measure_ell(x: &Trajectory, eq: &Equation, t1: f64, opts: &ZeroOptions) -> Result<f64, OscError> {
    let from = t1.max(x.t0);
    let scan = scan_zeros(x, opts, from);
    let zeros = scan.zeros.clone();
    if zeros.len() < 2 {
        return Err(OscError::TooFewZeros { found: zeros.len() });
    }
    let segs = segments_from(x, eq, &zeros, from, &scan)?;
    Ok(max_uncensored(&segs).unwrap_or(0.0))
}

/// Interval over which periodic analyses run: one period past `ρ` when the
/// equation is periodic, `[ρ, T]` otherwise.
fn analysis_window(eq: &Equation, horizon: f64) -> Result<(f64, f64), OscError> {
    let end = match eq.period() {
        Some(p) => eq.rho + p,
        None => horizon,
    };
    if !(end > eq.rho) {
        return Err(OscError::BadHorizon(horizon));
    }
    Ok((eq.rho, end))
}

fn delay_integral(eq: &Equation, t: f64, tau: f64) -> Result<f64, FnError> {
    eq.c.abs_integral(tau, t)
}

/// `sup_{t ∈ [ρ, T]} ∫_{τ(t)}^t |c|`.
///
/// Between consecutive points of the set formed by breakpoints of `c` and
/// `τ` and preimages under `τ` of breakpoints of `c`, the integral is a
/// polynomial of degree at most 2 in `t`, so its supremum is attained at an
/// endpoint (as a one-sided limit) or at the vertex of that quadratic.
pub fn sup_delay_integral(eq: &Equation, horizon: f64) -> Result<f64, OscError> {
    let (a, b) = analysis_window(eq, horizon)?;
    let mut pts = eq.c.breakpoints(a, b)?;
    pts.extend(eq.tau.breakpoints(a, b)?);
    for seg in eq.tau.segments(a, b)? {
        if seg.slope == 0.0 {
            continue;
        }
        let (lo, hi) = {
            let (u, v) = (seg.value(seg.lo), seg.value(seg.hi));
            (u.min(v), u.max(v))
        };
        for bp in eq.c.breakpoints(lo.max(0.0), hi.max(0.0))? {
            let t = (bp - seg.intercept) / seg.slope;
            if t > seg.lo && t < seg.hi {
                pts.push(t);
            }
        }
    }
    pts.push(a);
    pts.push(b);
    pts.retain(|&t| t >= a && t <= b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);

    let right = |t: f64| -> Result<f64, FnError> { delay_integral(eq, t, eq.tau.eval(t)?) };
    let left = |t: f64| -> Result<f64, FnError> { delay_integral(eq, t, eq.tau.eval_left(t)?) };
    let mut best = right(a)?;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let f0 = right(lo)?;
        let f2 = left(hi)?;
        let mid = 0.5 * (lo + hi);
        let f1 = right(mid)?;
        best = best.max(f0).max(f2).max(f1);
        // Vertex of the quadratic through the three values.
        let curv = f0 - 2.0 * f1 + f2;
        if curv < 0.0 {
            let u = 0.5 * (f0 - f2) / (2.0 * curv) + 0.5;
            if u > 0.0 && u < 1.0 {
                best = best.max(right(lo + u * (hi - lo))?);
            }
        }
    }
    Ok(best)
}

/// `sup_{t ∈ [ρ, T]} (t − τ(t))`, including left limits at jumps.
pub fn tau_max(eq: &Equation, horizon: f64) -> Result<f64, OscError> {
    let (a, b) = analysis_window(eq, horizon)?;
    let mut best = a - eq.tau.eval(a)?;
    for t in eq.tau.breakpoints(a, b)?.into_iter().chain([b]) {
        if t > a {
            best = best.max(t - eq.tau.eval_left(t)?);
        }
        if t < b {
            best = best.max(t - eq.tau.eval(t)?);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub zeros: Vec<f64>,
    pub segments: Vec<SignSegment>,
    /// Largest uncensored segment mass; `None` with fewer than 2 zeros.
    pub ell_measured: Option<f64>,
    pub sup_delay_integral: f64,
    pub tau_max: f64,
    pub window: (f64, f64),
    pub oscillatory: bool,
    /// The samples after the last zero are monotone.
    pub monotone_tail: bool,
    /// Time from which all samples are negligible, if any.
    pub collapsed_at: Option<f64>,
}

/// Zeros, sign segments, measured `ℓ`, sup-delay integral and `τ_max`.
///
/// A trajectory counts as oscillatory when it has at least 2 zeros in the
/// window and its final sign stretch carries no more mass than the longest
/// completed one.
pub fn classify(eq: &Equation, x: &Trajectory, opts: &ZeroOptions) -> Result<OscillationReport, OscError> {
    let from = eq.t1.max(x.t0);
    let scan = scan_zeros(x, opts, from);
    let zeros = scan.zeros.clone();
    let segments = segments_from(x, eq, &zeros, from, &scan)?;
    let ell_measured = if zeros.len() >= 2 {
        max_uncensored(&segments)
    } else {
        None
    };
    let trailing = segments
        .last()
        .filter(|s| s.censored && zeros.last().is_some_and(|&z| s.a >= z));
    let oscillatory = match (ell_measured, trailing) {
        (Some(ell), Some(t)) => t.mass <= ell,
        (Some(_), None) => true,
        (None, _) => false,
    };
    let tail_from = zeros.last().copied().unwrap_or(from);
    let tail: Vec<f64> = x.window(tail_from).map(|(_, v)| v).collect();
    let monotone_tail = tail.windows(2).all(|w| w[1] <= w[0]) || tail.windows(2).all(|w| w[1] >= w[0]);
    let horizon = x.t_end();
    Ok(OscillationReport {
        zeros,
        segments,
        ell_measured,
        sup_delay_integral: sup_delay_integral(eq, horizon)?,
        tau_max: tau_max(eq, horizon)?,
        window: (from, horizon),
        oscillatory,
        monotone_tail,
        collapsed_at: scan.collapsed_at,
    })
}

/// Rigorous bounds `C ≥ sup (t − τ_min²(t))` and `D ≤ inf ∫_{τ_min²(t)}^t |c|`
/// over `t ∈ [ρ, T]` (one period past `ρ` for periodic equations), from a
/// grid of `n` cells and the monotonicity of `τ_min`.
pub fn delay_bounds(eq: &Equation, horizon: f64, n: usize) -> Result<(f64, f64), OscError> {
    let (a, b) = analysis_window(eq, horizon)?;
    let n = n.max(1);
    let grid: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let back: Vec<f64> = grid
        .iter()
        .map(|&t| eq.tau.tau_min_iter(t, 2))
        .collect::<Result<_, _>>()?;
    let mut c_bound: f64 = 0.0;
    let mut d_bound = f64::INFINITY;
    for i in 0..n {
        c_bound = c_bound.max(grid[i + 1] - back[i]);
        let lower = if back[i + 1] < grid[i] {
            eq.c.abs_integral(back[i + 1], grid[i])?
        } else {
            0.0
        };
        d_bound = d_bound.min(lower);
    }
    Ok((c_bound, d_bound))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefSign {
    Nonneg,
    Nonpos,
    Mixed,
}

impl CoefSign {
    /// Sign class of `c` over the analysis window.
    pub fn of(eq: &Equation, horizon: f64) -> Result<Self, OscError> {
        let (a, b) = analysis_window(eq, horizon)?;
        let (lo, hi) = eq.c.range(a, b)?;
        Ok(if lo >= 0.0 {
            CoefSign::Nonneg
        } else if hi <= 0.0 {
            CoefSign::Nonpos
        } else {
            CoefSign::Mixed
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SChoice {
    Fixed(f64),
    Auto,
}

/// Inputs of [`certify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Features {
    pub sign_of_c: CoefSign,
    pub sup_int: f64,
    pub ell: Option<f64>,
    pub s_choice: SChoice,
    pub c_bound: Option<f64>,
    pub d_bound: Option<f64>,
    pub divergent_integral: bool,
}

impl Features {
    /// Features of an equation with the measured `ℓ` of a report, padded by
    /// `4h · sup|c|`.
    pub fn measured(eq: &Equation, report: &OscillationReport, step: f64) -> Result<Self, OscError> {
        let (a, b) = analysis_window(eq, report.window.1)?;
        let pad = ELL_MARGIN_STEPS * step * eq.c.sup_abs(a, b)?;
        let per_period = eq.period().map(|p| eq.c.abs_integral(a, a + p)).transpose()?;
        Ok(Features {
            sign_of_c: CoefSign::of(eq, report.window.1)?,
            sup_int: report.sup_delay_integral,
            ell: report.ell_measured.map(|e| e + pad),
            s_choice: SChoice::Auto,
            c_bound: None,
            d_bound: None,
            divergent_integral: per_period.is_some_and(|m| m > 0.0),
        })
    }
}

/// Results the certificate can rest on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Nonnegative `c`, sup-delay integral ≤ 3/2: oscillatory solutions bounded.
    ThreeHalvesBounded,
    /// Same with strict inequality: oscillatory solutions tend to zero.
    ThreeHalvesToZero,
    /// Nonnegative `c`: nonoscillatory solutions are monotone with a limit.
    MonotoneLimit,
    /// Same with `∫|c| = ∞`: the limit is zero.
    MonotoneToZero,
    /// Nonpositive `c`: oscillatory solutions are sup∫-rapidly oscillating.
    SpeedBound,
    /// `ℓ ≤ 2`: bounded.
    RapidTwoBounded,
    /// `ℓ < 2`: tends to zero.
    RapidTwoToZero,
    /// sup∫ ≤ s, `ℓ ≤ Λ(s)`: bounded.
    RapidLambdaBounded,
    /// sup∫ ≤ s, `ℓ < Λ(s)`: tends to zero.
    RapidLambdaToZero,
    /// Exponential decay with explicit constants.
    Exponential,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub threshold: f64,
    pub holds: bool,
}

impl Hypothesis {
    fn le(name: &str, value: f64, threshold: f64) -> Self {
        Hypothesis {
            name: name.into(),
            value,
            relation: "<=",
            threshold,
            holds: value <= threshold,
        }
    }

    fn lt(name: &str, value: f64, threshold: f64) -> Self {
        Hypothesis {
            name: name.into(),
            value,
            relation: "<",
            threshold,
            holds: value < threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub theorem: Theorem,
    /// Every result applied, in order.
    pub chain: Vec<Theorem>,
    /// Statement about nonoscillatory solutions, when one applies.
    pub nonoscillatory: Option<Theorem>,
    pub measured: Vec<Hypothesis>,
    pub factor: Option<f64>,
    pub s: Option<f64>,
    pub constants: Option<DecayConstants>,
    pub verdict: String,
}

fn auto_s(sup_int: f64, ell: f64) -> Result<Option<(f64, f64)>, OscError> {
    let lo = sup_int.clamp(1.0, 2.0);
    if sup_int > 2.0 + lambda::HYP_TOL {
        return Ok(None);
    }
    let factor = |s: f64| -> Option<f64> { lambda::decay_factor(Criterion::RapidLambda, sup_int, ell, s).ok() };
    let grid: Vec<f64> = (0..S_GRID)
        .map(|i| lo + (2.0 - lo) * i as f64 / (S_GRID - 1) as f64)
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in grid.iter().enumerate() {
        if let Some(f) = factor(s) {
            if best.is_none_or(|(_, b)| f < b) {
                best = Some((i, f));
            }
        }
    }
    let Some((i, f)) = best else { return Ok(None) };
    // Bisection on the sign of the factor's derivative between neighbours.
    let (mut a, mut b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(S_GRID - 1)]);
    let mut best = (grid[i], f);
    for _ in 0..60 {
        if b - a <= 1e-12 {
            break;
        }
        let m = 0.5 * (a + b);
        let eps = 1e-3 * (b - a);
        match (factor(m - eps), factor(m + eps)) {
            (Some(fl), Some(fr)) => {
                if fr < fl {
                    a = m;
                } else {
                    b = m;
                }
            }
            _ => break,
        }
        if let Some(fm) = factor(m) {
            if fm < best.1 {
                best = (m, fm);
            }
        }
    }
    Ok(Some(best))
}

/// Applies the criteria in order of strength and records every hypothesis
/// with the value and threshold it was checked against.
pub fn certify(f: &Features) -> Result<Certificate, OscError> {
    if !f.sup_int.is_finite() || f.sup_int < 0.0 {
        return Err(OscError::InconsistentFeatures(format!(
            "sup-delay integral {}",
            f.sup_int
        )));
    }
    let mut cert = Certificate {
        theorem: Theorem::None,
        chain: Vec::new(),
        nonoscillatory: None,
        measured: Vec::new(),
        factor: None,
        s: None,
        constants: None,
        verdict: String::new(),
    };
    let mut ell = f.ell;
    let mut decided = false;

    match f.sign_of_c {
        CoefSign::Nonneg => {
            cert.nonoscillatory = Some(if f.divergent_integral {
                Theorem::MonotoneToZero
            } else {
                Theorem::MonotoneLimit
            });
            let h = Hypothesis::le("sup_int", f.sup_int, 1.5);
            let holds = h.holds;
            cert.measured.push(h);
            if holds {
                let d = lambda::decay(Criterion::ThreeHalves, f.sup_int, 0.0, 1.0)?;
                let strict = Hypothesis::lt("sup_int", f.sup_int, 1.5);
                let thm = if strict.holds {
                    Theorem::ThreeHalvesToZero
                } else {
                    Theorem::ThreeHalvesBounded
                };
                cert.measured.push(strict);
                cert.chain.push(thm);
                cert.theorem = thm;
                cert.factor = Some(d.factor);
                decided = true;
            }
        }
        CoefSign::Nonpos => {
            if let Some(e) = ell {
                if e > f.sup_int + lambda::HYP_TOL {
                    return Err(OscError::InconsistentFeatures(format!(
                        "ℓ = {e} exceeds sup-delay integral {} for nonpositive c",
                        f.sup_int
                    )));
                }
            }
            ell = Some(ell.map_or(f.sup_int, |e| e.min(f.sup_int)));
            cert.chain.push(Theorem::SpeedBound);
            cert.measured.push(Hypothesis::le("ell", ell.unwrap(), f.sup_int));
        }
        CoefSign::Mixed => {}
    }

    if !decided {
        if let Some(ell) = ell {
            let s_pick = match f.s_choice {
                SChoice::Fixed(s) => lambda::decay_factor(Criterion::RapidLambda, f.sup_int, ell, s)
                    .ok()
                    .map(|d| (s, d)),
                SChoice::Auto => auto_s(f.sup_int, ell)?,
            };
            if let Some((s, d)) = s_pick {
                let lam = lambda::lambda_of(s)?;
                cert.measured.push(Hypothesis::le("sup_int", f.sup_int, s));
                cert.measured.push(Hypothesis::le("ell", ell, lam));
                let strict = Hypothesis::lt("ell", ell, lam);
                let thm = if strict.holds && d < 1.0 {
                    Theorem::RapidLambdaToZero
                } else {
                    Theorem::RapidLambdaBounded
                };
                cert.measured.push(strict);
                cert.chain.push(thm);
                cert.theorem = thm;
                cert.factor = Some(d);
                cert.s = Some(s);
                decided = true;
            } else {
                let h = Hypothesis::le("ell", ell, 2.0);
                let holds = h.holds;
                cert.measured.push(h);
                if holds {
                    let d = lambda::decay_factor(Criterion::RapidTwo, f.sup_int, ell, 1.0)?;
                    let strict = Hypothesis::lt("ell", ell, 2.0);
                    let thm = if strict.holds && d < 1.0 {
                        Theorem::RapidTwoToZero
                    } else {
                        Theorem::RapidTwoBounded
                    };
                    cert.measured.push(strict);
                    cert.chain.push(thm);
                    cert.theorem = thm;
                    cert.factor = Some(d);
                    decided = true;
                }
            }
        }
    }

    if !decided {
        cert.verdict = match ell {
            Some(e) => format!("no criterion applies; nearest margin ℓ−2 = {}", e - 2.0),
            None if f.sign_of_c == CoefSign::Nonneg => {
                format!("no criterion applies; nearest margin sup_int−3/2 = {}", f.sup_int - 1.5)
            }
            None => "no criterion applies; ℓ unknown".to_string(),
        };
        return Ok(cert);
    }

    let factor = cert.factor.unwrap_or(1.0);
    cert.verdict = match cert.theorem {
        Theorem::ThreeHalvesToZero | Theorem::RapidTwoToZero | Theorem::RapidLambdaToZero => {
            format!("oscillatory solutions tend to zero; contraction factor {factor}")
        }
        _ => format!("oscillatory solutions are bounded; contraction factor {factor}"),
    };
    if let (Some(c), Some(dd), Some(e)) = (f.c_bound, f.d_bound, ell.or(f.ell)) {
        if factor < 1.0 {
            let mut k = lambda::exp_decay_constants(factor, c, dd, e)?;
            k.q = None;
            cert.measured.push(Hypothesis::le("t - tau_min^2(t)", c, c));
            cert.measured.push(Hypothesis {
                name: "D".into(),
                value: dd,
                relation: ">",
                threshold: 0.0,
                holds: dd > 0.0,
            });
            cert.constants = Some(k);
            cert.chain.push(Theorem::Exponential);
            cert.theorem = Theorem::Exponential;
            cert.verdict = format!(
                "exponential decay: M = {}, gamma = {}, delta = {}",
                k.m, k.gamma, k.delta
            );
        }
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpCheck {
    pub pass: bool,
    /// `min_t (M · sup_{[t1, t1+δ]}|x| · e^{−γ(t−t1)} − |x(t)|)`.
    pub worst_margin: f64,
}

/// Checks `|x(t)| ≤ M sup_{[t1, t1+δ]}|x| e^{−γ(t−t1)}` at every grid point
/// after `t1 + δ`.
pub fn verify_exponential(x: &Trajectory, k: &DecayConstants, t1: f64) -> Result<ExpCheck, OscError> {
    let until = t1 + k.delta;
    if t1 < x.t_start() || x.t_end() <= until {
        return Err(OscError::WindowTooShort {
            needed: until,
            available: x.t_end(),
        });
    }
    let initial = x.sup_abs(t1, until)?;
    let worst = x
        .window(until)
        .filter(|&(t, _)| t > until)
        .map(|(t, v)| k.m * initial * (-k.gamma * (t - t1)).exp() - v.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(ExpCheck {
        pass: worst >= 0.0,
        worst_margin: worst,
    })
}

/// One step of the zero cascade: `sup_{[ξ_k, T]} |x|` against
/// `factor^k · sup_{[τ_min²(ξ_1), ξ_1]} |x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeStep {
    pub k: usize,
    pub xi: f64,
    pub sup_after: f64,
    pub bound: f64,
}

/// Zeros `ξ_1 < ξ_2 < …` with `τ_min²(ξ_k) > ξ_{k−1}`, starting from the first
/// zero after `ρ` whose window `[τ_min²(ξ_1), ξ_1]` lies inside the trajectory
/// and carries a nonzero sup.
pub fn contraction_cascade(
    x: &Trajectory,
    eq: &Equation,
    factor: f64,
    steps: usize,
    opts: &ZeroOptions,
) -> Result<Vec<CascadeStep>, OscError> {
    let zeros = find_zeros(x, opts);
    let end = x.t_end();
    let mut out = Vec::new();
    let mut initial = 0.0;
    let mut prev: Option<f64> = None;
    for z in zeros {
        if z < eq.rho || z >= end {
            continue;
        }
        let back = eq.tau.tau_min_iter(z, 2)?;
        match prev {
            None => {
                if back < x.t_start() {
                    continue;
                }
                initial = x.sup_abs(back, z)?;
                if initial == 0.0 {
                    continue;
                }
            }
            Some(p) if back <= p => continue,
            Some(_) => {}
        }
        let k = out.len() + 1;
        out.push(CascadeStep {
            k,
            xi: z,
            sup_after: x.sup_abs(z, end)?,
            bound: factor.powi(k as i32) * initial,
        });
        prev = Some(z);
        if out.len() == steps {
            break;
        }
    }
    Ok(out)
}

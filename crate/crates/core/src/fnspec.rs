//! Piecewise constant/affine functions used for the coefficient `c(t)` and
//! the delay `τ(t)` of `x'(t) + c(t) x(τ(t)) = 0`.
//!
//! Everything here is exact up to floating point: integrals of `|f|` are
//! evaluated in closed form piece by piece, and `τ_min(t) = inf_{v ≥ t} τ(v)`
//! is obtained by minimizing over the finitely many pieces of one period.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when merging nearby breakpoints.
pub const BREAKPOINT_DEDUP: f64 = 1e-12;
/// Offset added to the infimum defining `ρ` so the inequality is strict.
pub const RHO_OFFSET: f64 = 1e-9;
/// Argument tolerance for the anchor bisections.
const ANCHOR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FnError {
    #[error("t = {t} is outside the representable domain")]
    OutOfDomain { t: f64 },
    #[error("delay representation does not guarantee τ(t) → ∞")]
    Unbounded,
    #[error("piece {index}: start {start} is not before end {end}")]
    EmptyPiece { index: usize, start: f64, end: f64 },
    #[error("gap between pieces on [{from}, {to})")]
    Gap { from: f64, to: f64 },
    #[error("pieces overlap on [{from}, {to})")]
    Overlap { from: f64, to: f64 },
    #[error("pieces must start at 0 (first piece starts at {start})")]
    BadOrigin { start: f64 },
    #[error("period {period} does not match the end of the base interval {end}")]
    BadPeriod { period: f64, end: f64 },
    #[error("delay exceeds t: τ({t}) = {value} > {t}")]
    DelayExceedsTime { t: f64, value: f64 },
    #[error("expected a {expected:?} function, got {found:?}")]
    WrongRole { expected: Role, found: Role },
    #[error("no pieces given")]
    NoPieces,
    #[error("non-finite parameter in piece {index}")]
    NonFinite { index: usize },
    #[error("anchor invariant violated: {0}")]
    Anchor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Constant(f64),
    Affine { slope: f64, intercept: f64 },
}

impl PieceKind {
    fn slope(&self) -> f64 {
        match *self {
            PieceKind::Constant(_) => 0.0,
            PieceKind::Affine { slope, .. } => slope,
        }
    }

    fn intercept(&self) -> f64 {
        match *self {
            PieceKind::Constant(v) => v,
            PieceKind::Affine { intercept, .. } => intercept,
        }
    }
}

/// One piece on `[start, end)` in base coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub kind: PieceKind,
}

impl Piece {
    pub fn constant(start: f64, end: f64, value: f64) -> Self {
        Piece {
            start,
            end,
            kind: PieceKind::Constant(value),
        }
    }

    pub fn affine(start: f64, end: f64, slope: f64, intercept: f64) -> Self {
        Piece {
            start,
            end,
            kind: PieceKind::Affine { slope, intercept },
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            PieceKind::Constant(v) => v,
            PieceKind::Affine { slope, intercept } => slope * t + intercept,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Defined on the base interval only.
    None,
    /// `f(t + P) = f(t)`.
    Periodic(f64),
    /// `f(t + P) = f(t) + P`, for delays.
    AffinePeriodic(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Coefficient,
    Delay,
}

/// A maximal stretch `[lo, hi)` of absolute time on which the function is
/// `slope * t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Segment {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }

    /// Closed-form `∫_lo^hi |slope·u + intercept| du`.
    pub fn abs_integral(&self) -> f64 {
        abs_linear_integral(self.value(self.lo), self.value(self.hi), self.hi - self.lo)
    }

    pub fn integral(&self) -> f64 {
        0.5 * (self.value(self.lo) + self.value(self.hi)) * (self.hi - self.lo)
    }

    /// Zero of the affine function strictly inside `(lo, hi)`, if any.
    pub fn interior_root(&self) -> Option<f64> {
        if self.slope == 0.0 {
            return None;
        }
        let r = -self.intercept / self.slope;
        (r > self.lo && r < self.hi).then_some(r)
    }
}

/// `∫ |g|` over an interval of length `len` where `g` is linear with end
/// values `fa`, `fb`.
pub(crate) fn abs_linear_integral(fa: f64, fb: f64, len: f64) -> f64 {
    if fa * fb >= 0.0 {
        0.5 * (fa.abs() + fb.abs()) * len
    } else {
        len * (fa * fa + fb * fb) / (2.0 * (fa.abs() + fb.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFn {
    pieces: Vec<Piece>,
    extension: Extension,
    role: Role,
}

impl PiecewiseFn {
    pub fn new(pieces: Vec<Piece>, extension: Extension, role: Role) -> Result<Self, FnError> {
        if pieces.is_empty() {
            return Err(FnError::NoPieces);
        }
        for (index, p) in pieces.iter().enumerate() {
            let finite = p.start.is_finite()
                && p.end.is_finite()
                && p.kind.slope().is_finite()
                && p.kind.intercept().is_finite();
            if !finite {
                return Err(FnError::NonFinite { index });
            }
            if p.start >= p.end {
                return Err(FnError::EmptyPiece {
                    index,
                    start: p.start,
                    end: p.end,
                });
            }
        }
        if pieces[0].start.abs() > BREAKPOINT_DEDUP {
            return Err(FnError::BadOrigin { start: pieces[0].start });
        }
        for w in pieces.windows(2) {
            let (prev, next) = (&w[0], &w[1]);
            if next.start - prev.end > BREAKPOINT_DEDUP {
                return Err(FnError::Gap {
                    from: prev.end,
                    to: next.start,
                });
            }
            if prev.end - next.start > BREAKPOINT_DEDUP {
                return Err(FnError::Overlap {
                    from: next.start,
                    to: prev.end,
                });
            }
        }
        let mut pieces = pieces;
        // Snap contiguous boundaries so lookups never fall into slivers.
        pieces[0].start = 0.0;
        for i in 1..pieces.len() {
            pieces[i].start = pieces[i - 1].end;
        }
        let end = pieces.last().map(|p| p.end).unwrap_or(0.0);
        match extension {
            Extension::Periodic(p) | Extension::AffinePeriodic(p) => {
                if !(p > 0.0) || (p - end).abs() > BREAKPOINT_DEDUP * p.max(1.0) {
                    return Err(FnError::BadPeriod { period: p, end });
                }
                let last = pieces.len() - 1;
                pieces[last].end = p;
            }
            Extension::None => {}
        }
        if role == Role::Delay && matches!(extension, Extension::Periodic(_)) {
            return Err(FnError::Unbounded);
        }
        if role == Role::Coefficient && matches!(extension, Extension::AffinePeriodic(_)) {
            return Err(FnError::BadPeriod { period: end, end });
        }
        let f = PiecewiseFn {
            pieces,
            extension,
            role,
        };
        if role == Role::Delay {
            f.check_delay()?;
        }
        Ok(f)
    }

    /// Constant function on `[0, ∞)` (stored as a periodic single piece).
    pub fn constant(value: f64) -> Self {
        PiecewiseFn {
            pieces: vec![Piece::constant(0.0, 1.0, value)],
            extension: Extension::Periodic(1.0),
            role: Role::Coefficient,
        }
    }

    /// The delay `τ(t) = t − lag` on `[0, ∞)`.
    pub fn constant_lag(lag: f64) -> Result<Self, FnError> {
        PiecewiseFn::new(
            vec![Piece::affine(0.0, 1.0, 1.0, -lag)],
            Extension::AffinePeriodic(1.0),
            Role::Delay,
        )
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn period(&self) -> Option<f64> {
        match self.extension {
            Extension::None => None,
            Extension::Periodic(p) | Extension::AffinePeriodic(p) => Some(p),
        }
    }

    /// End of the representable domain (`+∞` for extended functions).
    pub fn domain_end(&self) -> f64 {
        match self.extension {
            Extension::None => self.pieces.last().map(|p| p.end).unwrap_or(0.0),
            _ => f64::INFINITY,
        }
    }

    fn shift_for(&self, k: f64) -> f64 {
        match self.extension {
            Extension::AffinePeriodic(p) => k * p,
            _ => 0.0,
        }
    }

    /// τ(t) − t is affine on every base piece and invariant under the
    /// affine-periodic shift, so endpoint checks on the base suffice.
    fn check_delay(&self) -> Result<(), FnError> {
        for p in &self.pieces {
            let tol = 1e-12 * p.end.abs().max(1.0);
            let at_start = p.value(p.start);
            if at_start > p.start + tol {
                return Err(FnError::DelayExceedsTime {
                    t: p.start,
                    value: at_start,
                });
            }
            let at_end = p.value(p.end);
            if at_end > p.end + tol {
                return Err(FnError::DelayExceedsTime {
                    t: p.end,
                    value: at_end,
                });
            }
        }
        Ok(())
    }

    /// Period index and base-coordinate offset for `t`, snapping onto a
    /// breakpoint when `t` lies within rounding of it.
    fn locate(&self, t: f64) -> Result<(usize, f64), FnError> {
        if !(t >= -BREAKPOINT_DEDUP) || t.is_nan() {
            return Err(FnError::OutOfDomain { t });
        }
        let t = t.max(0.0);
        let (k, r) = match self.extension {
            Extension::None => {
                if t >= self.domain_end() {
                    return Err(FnError::OutOfDomain { t });
                }
                (0.0, t)
            }
            Extension::Periodic(p) | Extension::AffinePeriodic(p) => {
                let mut k = (t / p).floor();
                let mut r = t - k * p;
                if r >= p - 1e-12 * t.max(1.0) {
                    k += 1.0;
                    r = (r - p).max(0.0);
                }
                if r < 0.0 {
                    r = 0.0;
                }
                (k, r)
            }
        };
        let tol = 1e-13 * t.max(1.0);
        let mut idx = self.pieces.partition_point(|p| p.start <= r).saturating_sub(1);
        if idx + 1 < self.pieces.len() && self.pieces[idx + 1].start - r <= tol {
            idx += 1;
        }
        Ok((idx, k))
    }

    /// Right-continuous evaluation with the extension rule applied.
    pub fn eval(&self, t: f64) -> Result<f64, FnError> {
        let (idx, k) = self.locate(t)?;
        Ok(self.piece_value_abs(idx, k, t))
    }

    /// Left limit `f(t⁻)`; for `t = 0` this is `f(0)`.
    pub fn eval_left(&self, t: f64) -> Result<f64, FnError> {
        if t <= 0.0 {
            return self.eval(0.0);
        }
        let end = self.domain_end();
        if t > end + BREAKPOINT_DEDUP {
            return Err(FnError::OutOfDomain { t });
        }
        let probe = if t >= end { end } else { t };
        let (mut idx, mut k) = if probe >= end {
            (self.pieces.len() - 1, 0.0)
        } else {
            self.locate(probe)?
        };
        let base_start = self.pieces[idx].start + k * self.period().unwrap_or(0.0);
        if (t - base_start).abs() <= 1e-13 * t.max(1.0) {
            if idx == 0 {
                idx = self.pieces.len() - 1;
                k -= 1.0;
            } else {
                idx -= 1;
            }
        }
        Ok(self.piece_value_abs(idx, k, t))
    }

    fn piece_value_abs(&self, idx: usize, k: f64, t: f64) -> f64 {
        let p = &self.pieces[idx];
        let base_t = t - k * self.period().unwrap_or(0.0);
        p.value(base_t) + self.shift_for(k)
    }

    /// The affine segments covering `[a, b]`, clipped to it.
    pub fn segments(&self, a: f64, b: f64) -> Result<Vec<Segment>, FnError> {
        if a > b {
            return Err(FnError::OutOfDomain { t: a });
        }
        if a < -BREAKPOINT_DEDUP {
            return Err(FnError::OutOfDomain { t: a });
        }
        if b > self.domain_end() + BREAKPOINT_DEDUP {
            return Err(FnError::OutOfDomain { t: b });
        }
        let a = a.max(0.0);
        let mut out = Vec::new();
        if a == b {
            return Ok(out);
        }
        let period = self.period().unwrap_or(0.0);
        let (mut idx, mut k) = self.locate(a)?;
        let mut lo = a;
        loop {
            let p = &self.pieces[idx];
            let offset = k * period;
            let hi = (p.end + offset).min(b);
            let slope = p.kind.slope();
            let intercept = p.kind.intercept() - slope * offset + self.shift_for(k);
            if hi > lo {
                out.push(Segment {
                    lo,
                    hi,
                    slope,
                    intercept,
                });
            }
            if hi >= b {
                break;
            }
            lo = hi;
            idx += 1;
            if idx == self.pieces.len() {
                if self.extension == Extension::None {
                    break;
                }
                idx = 0;
                k += 1.0;
            }
        }
        Ok(out)
    }

    /// Exact `∫_a^b |f(u)| du`.
    pub fn abs_integral(&self, a: f64, b: f64) -> Result<f64, FnError> {
        Ok(self.segments(a, b)?.iter().map(Segment::abs_integral).sum())
    }

    /// Exact signed `∫_a^b f(u) du`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64, FnError> {
        Ok(self.segments(a, b)?.iter().map(Segment::integral).sum())
    }

    /// `sup |f|` over `[a, b]`.
    pub fn sup_abs(&self, a: f64, b: f64) -> Result<f64, FnError> {
        Ok(self
            .segments(a, b)?
            .iter()
            .map(|s| s.value(s.lo).abs().max(s.value(s.hi).abs()))
            .fold(0.0, f64::max))
    }

    /// `inf f` and `sup f` over `[a, b]`.
    pub fn range(&self, a: f64, b: f64) -> Result<(f64, f64), FnError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in self.segments(a, b)? {
            for v in [s.value(s.lo), s.value(s.hi)] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }

    /// Piece boundaries (extension unrolled) and sign changes of affine
    /// pieces inside `[a, b]`, sorted and deduplicated.
    pub fn breakpoints(&self, a: f64, b: f64) -> Result<Vec<f64>, FnError> {
        if a > b {
            return Err(FnError::OutOfDomain { t: a });
        }
        let segs = self.segments(a, b)?;
        let mut pts = Vec::new();
        let period = self.period().unwrap_or(0.0);
        let starts: Vec<f64> = self.pieces.iter().map(|p| p.start).collect();
        let is_boundary = |t: f64| -> bool {
            let r = if period > 0.0 {
                t - (t / period).floor() * period
            } else {
                t
            };
            let tol = 1e-12 * t.abs().max(1.0);
            starts.iter().any(|&s| (r - s).abs() <= tol)
                || (period > 0.0 && (r - period).abs() <= tol)
                || (period == 0.0 && (t - self.domain_end()).abs() <= tol)
        };
        for s in &segs {
            if is_boundary(s.lo) {
                pts.push(s.lo);
            }
            if let Some(r) = s.interior_root() {
                pts.push(r);
            }
        }
        if let Some(last) = segs.last() {
            if is_boundary(last.hi) {
                pts.push(last.hi);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() <= BREAKPOINT_DEDUP);
        Ok(pts)
    }

    fn require_delay(&self) -> Result<(), FnError> {
        if self.role != Role::Delay {
            return Err(FnError::WrongRole {
                expected: Role::Delay,
                found: self.role,
            });
        }
        Ok(())
    }

    /// `τ_min(t) = inf_{v ≥ t} τ(v)`.
    ///
    /// For affine-periodic delays `τ(v + P) = τ(v) + P > τ(v)`, so the
    /// infimum is reached on `[t, t + P]`. Delays without an extension are
    /// minimized over the remainder of their finite domain.
    pub fn tau_min(&self, t: f64) -> Result<f64, FnError> {
        self.require_delay()?;
        let end = match self.extension {
            Extension::AffinePeriodic(p) => t + p,
            Extension::None => self.domain_end(),
            Extension::Periodic(_) => return Err(FnError::Unbounded),
        };
        if t >= end {
            return Err(FnError::OutOfDomain { t });
        }
        let segs = self.segments(t, end)?;
        Ok(segs
            .iter()
            .map(|s| s.value(s.lo).min(s.value(s.hi)))
            .fold(f64::INFINITY, f64::min))
    }

    /// `k`-fold composition of [`Self::tau_min`].
    pub fn tau_min_iter(&self, t: f64, k: usize) -> Result<f64, FnError> {
        let mut v = t;
        for _ in 0..k {
            v = self.tau_min(v)?;
        }
        Ok(v)
    }

    /// `inf { t ≥ from : τ_min(t) > level }` by breakpoint bracketing and
    /// bisection. Returns the upper end of the final bracket, which satisfies
    /// the strict inequality.
    pub fn first_time_above(&self, level: f64, from: f64) -> Result<f64, FnError> {
        self.require_delay()?;
        if self.tau_min(from)? > level {
            return Ok(from);
        }
        let mut lo = from;
        let mut hi = from + 1.0;
        let mut found = false;
        for _ in 0..64 {
            let hi_clamped = hi.min(self.domain_end());
            if hi_clamped <= lo {
                break;
            }
            match self.tau_min(hi_clamped) {
                Ok(v) if v > level => {
                    hi = hi_clamped;
                    found = true;
                    break;
                }
                Ok(_) => {
                    lo = hi_clamped;
                    hi = from + 2.0 * (hi - from);
                }
                Err(FnError::OutOfDomain { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        if !found {
            return Err(FnError::Unbounded);
        }
        // Narrow to consecutive breakpoints before bisecting.
        let bps = self.breakpoints(lo, hi)?;
        for &bp in &bps {
            if bp <= lo || bp >= hi {
                continue;
            }
            if self.tau_min(bp)? > level {
                hi = bp;
                break;
            }
            lo = bp;
        }
        for _ in 0..200 {
            if hi - lo <= ANCHOR_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.tau_min(mid)? > level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Canonical anchors `(t1, ρ)`: `t1 = inf{t ≥ 0 : τ_min(t) > 0}` and
    /// `ρ = inf{t > 0 : τ_min(t) > t1} + RHO_OFFSET`.
    pub fn compute_anchor(&self) -> Result<(f64, f64), FnError> {
        let t1 = self.first_time_above(0.0, 0.0)?;
        let rho = self.first_time_above(t1, 0.0)? + RHO_OFFSET;
        Ok((t1, rho))
    }
}

/// The coefficient/delay pair of one equation together with its anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub c: PiecewiseFn,
    pub tau: PiecewiseFn,
    pub t1: f64,
    pub rho: f64,
}

impl Equation {
    pub fn new(c: PiecewiseFn, tau: PiecewiseFn) -> Result<Self, FnError> {
        if c.role() != Role::Coefficient {
            return Err(FnError::WrongRole {
                expected: Role::Coefficient,
                found: c.role(),
            });
        }
        tau.require_delay()?;
        let (t1, rho) = tau.compute_anchor()?;
        Ok(Equation { c, tau, t1, rho })
    }

    /// Uses caller-supplied anchors after checking them.
    pub fn with_anchor(c: PiecewiseFn, tau: PiecewiseFn, t1: f64, rho: f64) -> Result<Self, FnError> {
        let eq = Equation::new(c, tau)?;
        if eq.tau.tau_min(t1)? <= 0.0 {
            return Err(FnError::Anchor(format!("τ_min(t1) ≤ 0 at t1 = {t1}")));
        }
        let inf = eq.tau.first_time_above(t1, 0.0)?;
        if rho <= inf - ANCHOR_TOL {
            return Err(FnError::Anchor(format!("ρ = {rho} is not above {inf}")));
        }
        Ok(Equation { t1, rho, ..eq })
    }

    /// Common period of coefficient and delay, when both are extended and
    /// one period is an integer multiple of the other.
    pub fn period(&self) -> Option<f64> {
        let pc = self.c.period()?;
        let pt = self.tau.period()?;
        let (big, small) = if pc >= pt { (pc, pt) } else { (pt, pc) };
        let ratio = big / small;
        ((ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0)).then_some(big)
    }

    pub fn domain_end(&self) -> f64 {
        self.c.domain_end().min(self.tau.domain_end())
    }
}

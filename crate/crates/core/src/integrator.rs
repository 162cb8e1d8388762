//! Fixed-step, breakpoint-aligned integration of `x'(t) = −c(t) x(τ(t))`.
//!
//! Each step advances `x_{n+1} = x_n − ∫_{t_n}^{t_{n+1}} c(u) x̂(τ(u)) du`,
//! with the integral taken by two-point Gauss–Legendre quadrature and `x̂`
//! the piecewise-linear interpolant of the history and the values computed
//! so far. When a delayed argument falls inside the current step, the step
//! map is applied twice starting from `x_{n+1} = x_n`.

use crate::fnspec::{Equation, FnError};
use thiserror::Error;

const GAUSS_OFFSET: f64 = 0.577_350_269_189_625_8; // 1/√3

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("history starts at {start} but the delay reaches back to {needed}")]
    HistoryTooShort { needed: f64, start: f64 },
    #[error("invalid step: {0}")]
    StepInvalid(String),
    #[error("non-finite value at t = {t}")]
    NonFiniteValue { t: f64 },
    #[error("invalid history: {0}")]
    BadHistory(String),
    #[error(transparent)]
    Fn(#[from] FnError),
}

/// Initial segment `(t, x(t))` on `[t_start, t0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    samples: Vec<(f64, f64)>,
}

impl History {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, IntegrateError> {
        if samples.is_empty() {
            return Err(IntegrateError::BadHistory("no samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(IntegrateError::BadHistory(format!(
                    "times not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if samples.iter().any(|&(t, x)| !t.is_finite() || !x.is_finite()) {
            return Err(IntegrateError::BadHistory("non-finite sample".into()));
        }
        Ok(History { samples })
    }

    /// Samples `f` on a uniform grid over `[t_start, t0]` with spacing at
    /// most `h`, plus the given extra times (e.g. kinks of `f`).
    pub fn from_fn(
        f: impl Fn(f64) -> f64,
        t_start: f64,
        t0: f64,
        h: f64,
        extra: &[f64],
    ) -> Result<Self, IntegrateError> {
        if !(h > 0.0) || !(t0 >= t_start) {
            return Err(IntegrateError::BadHistory(format!(
                "bad window [{t_start}, {t0}] / h = {h}"
            )));
        }
        let times = merged_grid(t_start, t0, h, extra);
        History::new(times.into_iter().map(|t| (t, f(t))).collect())
    }

    pub fn constant(value: f64, t_start: f64, t0: f64) -> Result<Self, IntegrateError> {
        if t_start == t0 {
            return History::new(vec![(t0, value)]);
        }
        History::new(vec![(t_start, value), (t0, value)])
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn t0(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn scaled(&self, factor: f64) -> History {
        History {
            samples: self.samples.iter().map(|&(t, x)| (t, factor * x)).collect(),
        }
    }
}

/// Uniform grid on `[a, b]` with spacing `h`, merged with `extra` points
/// inside the window. Uniform points within `1e-6 h` of an extra point are
/// dropped so the extra point appears exactly.
pub fn merged_grid(a: f64, b: f64, h: f64, extra: &[f64]) -> Vec<f64> {
    let mut bps: Vec<f64> = extra.iter().copied().filter(|&t| t >= a && t <= b).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    let n = ((b - a) / h).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(n + bps.len() + 2);
    let mut j = 0;
    let tol = 1e-6 * h;
    for k in 0..=n {
        let t = if k == n { b } else { a + k as f64 * h };
        if k > 0 && k < n && t > b - tol {
            continue;
        }
        while j < bps.len() && bps[j] < t - tol {
            out.push(bps[j]);
            j += 1;
        }
        if j < bps.len() && (bps[j] - t).abs() <= tol {
            out.push(bps[j]);
            j += 1;
        } else {
            out.push(t);
        }
    }
    out.extend_from_slice(&bps[j..]);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    out
}

/// Samples of a solution on a grid, with the history that seeded them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Start of the integration window; values before it are history.
    pub t0: f64,
    /// Nominal step.
    pub step: f64,
    pub equation: Equation,
}

impl Trajectory {
    /// A trajectory assembled from given samples, e.g. an exact solution.
    pub fn from_samples(equation: Equation, samples: Vec<(f64, f64)>, t0: f64, step: f64) -> Self {
        let (times, values) = samples.into_iter().unzip();
        Trajectory {
            times,
            values,
            t0,
            step,
            equation,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Index of the first grid time `≥ t0`.
    pub fn start_index(&self) -> usize {
        self.times.partition_point(|&t| t < self.t0)
    }

    /// Piecewise-linear interpolation.
    pub fn interp(&self, t: f64) -> Result<f64, IntegrateError> {
        interp(&self.times, &self.values, t)
    }

    /// Grid samples with `t ≥ from`.
    pub fn window(&self, from: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let i = self.times.partition_point(|&t| t < from);
        self.times[i..].iter().copied().zip(self.values[i..].iter().copied())
    }

    /// `sup |x|` over grid points in `[a, b]`, including the interpolated
    /// endpoints.
    pub fn sup_abs(&self, a: f64, b: f64) -> Result<f64, IntegrateError> {
        let mut m = self.interp(a)?.abs().max(self.interp(b)?.abs());
        let i = self.times.partition_point(|&t| t < a);
        let j = self.times.partition_point(|&t| t <= b);
        for k in i..j {
            m = m.max(self.values[k].abs());
        }
        Ok(m)
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> Result<f64, IntegrateError> {
    let n = times.len();
    let first = times[0];
    let last = times[n - 1];
    let tol = 1e-12 * t.abs().max(1.0);
    if t < first - tol {
        return Err(IntegrateError::HistoryTooShort {
            needed: t,
            start: first,
        });
    }
    if t > last + tol {
        return Err(IntegrateError::StepInvalid(format!(
            "interpolation beyond computed data at {t}"
        )));
    }
    if n == 1 || t <= first {
        return Ok(values[0]);
    }
    if t >= last {
        return Ok(values[n - 1]);
    }
    let j = times.partition_point(|&s| s <= t);
    let (t_a, t_b) = (times[j - 1], times[j]);
    let w = (t - t_a) / (t_b - t_a);
    Ok(values[j - 1] + w * (values[j] - values[j - 1]))
}

/// Grid for `[t0, t_end]`: uniform `h`-spacing plus every breakpoint of the
/// coefficient and the delay.
fn integration_grid(eq: &Equation, t0: f64, t_end: f64, h: f64) -> Result<Vec<f64>, IntegrateError> {
    let mut bps = eq.c.breakpoints(t0, t_end)?;
    bps.extend(eq.tau.breakpoints(t0, t_end)?);
    Ok(merged_grid(t0, t_end, h, &bps))
}

/// `(weights·c·x̂∘τ)` at the two Gauss nodes of `[ta, tb]`, split into the
/// part resolved from completed data and the coefficients multiplying the
/// unknown end value `x(tb)` for nodes whose delayed argument lies in
/// `(ta, tb]`.
struct StepQuadrature {
    known: f64,
    /// Coefficient of `x(tb) − x(ta)` contributed by in-step references.
    in_step: f64,
}

fn step_quadrature(
    eq: &Equation,
    times: &[f64],
    values: &[f64],
    ta: f64,
    tb: f64,
) -> Result<StepQuadrature, IntegrateError> {
    let half = 0.5 * (tb - ta);
    let mid = 0.5 * (ta + tb);
    let xa = values[values.len() - 1];
    let mut known = 0.0;
    let mut in_step = 0.0;
    for node in [mid - half * GAUSS_OFFSET, mid + half * GAUSS_OFFSET] {
        let cu = eq.c.eval(node)?;
        if cu == 0.0 {
            continue;
        }
        let tu = eq.tau.eval(node)?;
        if tu <= ta {
            known += half * cu * interp(times, values, tu)?;
        } else {
            let w = (tu - ta) / (tb - ta);
            known += half * cu * xa;
            in_step += half * cu * w;
        }
    }
    Ok(StepQuadrature { known, in_step })
}

pub fn integrate(eq: &Equation, hist: &History, t_end: f64, h: f64) -> Result<Trajectory, IntegrateError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegrateError::StepInvalid(format!("h = {h} must be positive")));
    }
    let t0 = hist.t0();
    if !(t_end > t0) {
        return Err(IntegrateError::StepInvalid(format!(
            "t_end = {t_end} must exceed t0 = {t0}"
        )));
    }
    let sup_c = eq.c.sup_abs(t0, t_end)?;
    if sup_c > 0.0 && h >= 0.5 / sup_c {
        return Err(IntegrateError::StepInvalid(format!(
            "h = {h} must be below 0.5 / sup|c| = {}",
            0.5 / sup_c
        )));
    }
    let (tau_lo, _) = eq.tau.range(t0, t_end)?;
    if tau_lo < hist.t_start() - 1e-12 * tau_lo.abs().max(1.0) {
        return Err(IntegrateError::HistoryTooShort {
            needed: tau_lo,
            start: hist.t_start(),
        });
    }

    let grid = integration_grid(eq, t0, t_end, h)?;
    let mut times: Vec<f64> = hist.samples().iter().map(|s| s.0).collect();
    let mut values: Vec<f64> = hist.samples().iter().map(|s| s.1).collect();
    times.reserve(grid.len());
    values.reserve(grid.len());

    for &tb in &grid[1..] {
        let ta = times[times.len() - 1];
        let xa = values[values.len() - 1];
        let q = step_quadrature(eq, &times, &values, ta, tb)?;
        let mut xb = xa - q.known;
        if q.in_step != 0.0 {
            // two sweeps of the step map from the predictor x(tb) = x(ta)
            let mut guess = xa;
            for _ in 0..2 {
                guess = xa - q.known - q.in_step * (guess - xa);
            }
            xb = guess;
        }
        if !xb.is_finite() {
            return Err(IntegrateError::NonFiniteValue { t: tb });
        }
        times.push(tb);
        values.push(xb);
    }
    Ok(Trajectory {
        times,
        values,
        t0,
        step: h,
        equation: eq.clone(),
    })
}

/// `max_n |x(t_{n+1}) − x(t_n) + ∫_{t_n}^{t_{n+1}} c(u) x̂(τ(u)) du| / h` over
/// the grid intervals after `t0`.
pub fn residual(eq: &Equation, x: &Trajectory) -> Result<f64, IntegrateError> {
    let h = x.step;
    let mut worst: f64 = 0.0;
    let start = x.start_index();
    for n in start..x.times.len().saturating_sub(1) {
        let (ta, tb) = (x.times[n], x.times[n + 1]);
        let half = 0.5 * (tb - ta);
        let mid = 0.5 * (ta + tb);
        let mut q = 0.0;
        for node in [mid - half * GAUSS_OFFSET, mid + half * GAUSS_OFFSET] {
            let cu = eq.c.eval(node)?;
            if cu != 0.0 {
                q += half * cu * x.interp(eq.tau.eval(node)?)?;
            }
        }
        worst = worst.max((x.values[n + 1] - x.values[n] + q).abs() / h);
    }
    Ok(worst)
}

//! Equation files, CSV/SVG writers and atomic file output.
//!
//! Equation file layout:
//!
//! ```json
//! {
//!   "coefficient": {"pieces": [{"start": 0, "end": 1, "kind": "constant", "params": [-1]}],
//!                   "extension": {"type": "periodic", "period": 2}},
//!   "delay": {"pieces": [{"start": 0, "end": 2, "kind": "affine", "params": [1, -1]}],
//!             "extension": {"type": "affine_periodic", "period": 2}},
//!   "history": {"type": "constant", "value": 1}
//! }
//! ```
//!
//! Affine params are `[slope, intercept]`. `history` is optional; it may
//! also be `{"type": "samples", "samples": [[t, x], ...]}`.

use crate::fnspec::{Equation, Extension, FnError, Piece, PieceKind, PiecewiseFn, Role};
use crate::integrator::{History, IntegrateError, Trajectory};
use crate::lambda::{lambda_of, sigma_of, LambdaError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid equation: {0}")]
    Validation(String),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSpec {
    start: f64,
    end: f64,
    kind: String,
    params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ExtensionSpec {
    None,
    Periodic { period: f64 },
    AffinePeriodic { period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FnSpec {
    pieces: Vec<PieceSpec>,
    extension: ExtensionSpec,
}

/// Initial data stored alongside an equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistorySpec {
    Constant { value: f64 },
    Samples { samples: Vec<(f64, f64)> },
}

impl HistorySpec {
    /// History on `[τ_min(t0), t0]`; sample lists must cover that window.
    pub fn build(&self, eq: &Equation, t0: f64) -> Result<History, IntegrateError> {
        let start = eq.tau.tau_min(t0)?.min(t0);
        match self {
            HistorySpec::Constant { value } => History::constant(*value, start, t0),
            HistorySpec::Samples { samples } => History::new(samples.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationFile {
    coefficient: FnSpec,
    delay: FnSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history: Option<HistorySpec>,
}

fn fn_from_spec(spec: &FnSpec, role: Role, label: &str) -> Result<PiecewiseFn, IoError> {
    let pieces = spec
        .pieces
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let kind = match (p.kind.as_str(), p.params.as_slice()) {
                ("constant", &[v]) => PieceKind::Constant(v),
                ("affine", &[slope, intercept]) => PieceKind::Affine { slope, intercept },
                ("constant", _) => return Err(IoError::Parse(format!("{label}.pieces[{i}]: constant takes 1 param"))),
                ("affine", _) => return Err(IoError::Parse(format!("{label}.pieces[{i}]: affine takes 2 params"))),
                (other, _) => return Err(IoError::Parse(format!("{label}.pieces[{i}]: unknown kind {other:?}"))),
            };
            Ok(Piece {
                start: p.start,
                end: p.end,
                kind,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ext = match spec.extension {
        ExtensionSpec::None => Extension::None,
        ExtensionSpec::Periodic { period } => Extension::Periodic(period),
        ExtensionSpec::AffinePeriodic { period } => Extension::AffinePeriodic(period),
    };
    PiecewiseFn::new(pieces, ext, role).map_err(|e| validation(label, e))
}

fn validation(label: &str, e: FnError) -> IoError {
    let msg = match e {
        FnError::DelayExceedsTime { .. } => format!("{label}: delay exceeds t ({e})"),
        other => format!("{label}: {other}"),
    };
    IoError::Validation(msg)
}

fn fn_to_spec(f: &PiecewiseFn) -> FnSpec {
    FnSpec {
        pieces: f
            .pieces()
            .iter()
            .map(|p| match p.kind {
                PieceKind::Constant(v) => PieceSpec {
                    start: p.start,
                    end: p.end,
                    kind: "constant".into(),
                    params: vec![v],
                },
                PieceKind::Affine { slope, intercept } => PieceSpec {
                    start: p.start,
                    end: p.end,
                    kind: "affine".into(),
                    params: vec![slope, intercept],
                },
            })
            .collect(),
        extension: match f.extension() {
            Extension::None => ExtensionSpec::None,
            Extension::Periodic(p) => ExtensionSpec::Periodic { period: p },
            Extension::AffinePeriodic(p) => ExtensionSpec::AffinePeriodic { period: p },
        },
    }
}

/// Equation and optional history from JSON text.
pub fn parse_equation(text: &str) -> Result<(Equation, Option<HistorySpec>), IoError> {
    let file: EquationFile = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    let c = fn_from_spec(&file.coefficient, Role::Coefficient, "coefficient")?;
    let tau = fn_from_spec(&file.delay, Role::Delay, "delay")?;
    let eq = Equation::new(c, tau).map_err(|e| validation("delay", e))?;
    Ok((eq, file.history))
}

pub fn parse_equation_file(path: &Path) -> Result<(Equation, Option<HistorySpec>), IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.into(),
        source,
    })?;
    parse_equation(&text)
}

pub fn equation_to_json(eq: &Equation, history: Option<&HistorySpec>) -> String {
    let file = EquationFile {
        coefficient: fn_to_spec(&eq.c),
        delay: fn_to_spec(&eq.tau),
        history: history.cloned(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("equation serializes");
    s.push('\n');
    s
}

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r.abs() < 1e-6 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// CSV with header `t,x`; rows from `from` on, strictly increasing in `t`.
pub fn trajectory_csv(x: &Trajectory, from: f64) -> String {
    let mut s = String::from("t,x\n");
    let mut last = f64::NEG_INFINITY;
    for (t, v) in x.window(from) {
        if t > last {
            let _ = writeln!(s, "{},{}", fmt_sig(t), fmt_sig(v));
            last = t;
        }
    }
    s
}

/// `s, Λ(s), σ(s)` on `s = 1 + k/(rows−1)`.
pub fn lambda_table_csv(rows: usize) -> Result<String, IoError> {
    let rows = rows.max(2);
    let mut s = String::from("s,lambda,sigma\n");
    for k in 0..rows {
        let v = 1.0 + k as f64 / (rows - 1) as f64;
        let _ = writeln!(s, "{},{},{}", fmt_sig(v), fmt_sig(lambda_of(v)?), fmt_sig(sigma_of(v)?));
    }
    Ok(s)
}

pub const FIGURE_ROWS: usize = 400;

/// Points where the threshold curve meets the classical constants.
pub fn figure_markers() -> [(f64, f64); 2] {
    [(1.125, 1.625 + std::f64::consts::LN_2), (2.0, 2.0)]
}

fn figure_points() -> Result<Vec<(f64, f64)>, IoError> {
    (0..FIGURE_ROWS)
        .map(|k| {
            let s = 1.0 + k as f64 / (FIGURE_ROWS - 1) as f64;
            Ok((s, lambda_of(s)?))
        })
        .collect()
}

/// CSV `s,lambda` with 400 uniform samples of `s ∈ [1, 2]`.
pub fn figure_csv() -> Result<String, IoError> {
    let mut s = String::from("s,lambda\n");
    for (a, b) in figure_points()? {
        let _ = writeln!(s, "{},{}", fmt_sig(a), fmt_sig(b));
    }
    Ok(s)
}

/// `Λ(s)` on `[1, 2]` continued by the constant 2 up to `s = 3`, with the two
/// markers.
pub fn figure_svg() -> Result<String, IoError> {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let (s0, s1, y0, y1) = (1.0, 3.0, 1.8, 2.6);
    let px = |s: f64| m + (s - s0) / (s1 - s0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut pts = figure_points()?;
    pts.push((s1, 2.0));
    let poly: Vec<String> = pts.iter().map(|&(s, l)| format!("{:.2},{:.2}", px(s), py(l))).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{m} {} H{} M{m} {} V{m}" stroke="black" fill="none"/>"#,
        h - m,
        w - m,
        h - m
    );
    for (s, label) in [(1.0, "1"), (2.0, "2"), (3.0, "3")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="12" text-anchor="middle">{label}</text>"#,
            px(s),
            h - m + 18.0
        );
    }
    for y in [2.0, 2.2, 2.4] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{y:.1}</text>"#,
            m - 6.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="13">sup-delay integral s</text>"#,
        w / 2.0 - 50.0,
        h - 12.0
    );
    let _ = writeln!(out, r#"<text x="12" y="{m}" font-size="13">oscillation speed</text>"#);
    let _ = writeln!(
        out,
        r#"<polyline points="{}" stroke="red" stroke-width="2" fill="none"/>"#,
        poly.join(" ")
    );
    for (s, l) in figure_markers() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            px(s),
            py(l)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let err = |source| IoError::Write {
        path: path.into(),
        source,
    };
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a file path")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::make_xs;
    use crate::oscillation::{sup_delay_integral, tau_max};

    #[test]
    fn round_trip() {
        let ex = make_xs(1.3).unwrap();
        let text = equation_to_json(&ex.eq, Some(&HistorySpec::Constant { value: 1.0 }));
        let (eq, hist) = parse_equation(&text).unwrap();
        assert_eq!(hist, Some(HistorySpec::Constant { value: 1.0 }));
        let a = sup_delay_integral(&ex.eq, 30.0).unwrap();
        let b = sup_delay_integral(&eq, 30.0).unwrap();
        assert!((a - b).abs() <= 1e-12);
        assert!((tau_max(&ex.eq, 30.0).unwrap() - tau_max(&eq, 30.0).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn validation_messages() {
        let gap = r#"{"coefficient": {"pieces": [{"start": 0, "end": 1, "kind": "constant", "params": [1]},
                                              {"start": 1.5, "end": 2, "kind": "constant", "params": [1]}],
                                   "extension": {"type": "periodic", "period": 2}},
                      "delay": {"pieces": [{"start": 0, "end": 1, "kind": "affine", "params": [1, -1]}],
                                "extension": {"type": "affine_periodic", "period": 1}}}"#;
        let e = parse_equation(gap).unwrap_err();
        assert!(matches!(e, IoError::Validation(_)));
        assert!(e.to_string().contains('1') && e.to_string().contains("1.5"), "{e}");

        let ahead = r#"{"coefficient": {"pieces": [{"start": 0, "end": 1, "kind": "constant", "params": [1]}],
                                     "extension": {"type": "periodic", "period": 1}},
                        "delay": {"pieces": [{"start": 0, "end": 1, "kind": "affine", "params": [1, 1]}],
                                  "extension": {"type": "affine_periodic", "period": 1}}}"#;
        let e = parse_equation(ahead).unwrap_err();
        assert!(e.to_string().contains("delay exceeds t"), "{e}");

        let e = parse_equation("{\"coefficient\": ").unwrap_err();
        assert!(matches!(e, IoError::Parse(_)));
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn formats() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(2.0), "2");
        let csv = figure_csv().unwrap();
        assert_eq!(csv.lines().count(), FIGURE_ROWS + 1);
        assert!(csv.starts_with("s,lambda\n1,"));
        assert!(csv.trim_end().ends_with("2,2"));
        let table = lambda_table_csv(81).unwrap();
        let row = table.lines().find(|l| l.starts_with("1.125,")).unwrap();
        let lam: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((lam - (1.625 + std::f64::consts::LN_2)).abs() < 1e-11);
        let svg = figure_svg().unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn atomic_write() {
        let dir = std::env::temp_dir().join(format!("delayosc-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand, ValueEnum};
use delayosc::examples::{make_lillo_g, make_myshkis_f, make_xs, make_ys, ExampleError, NamedExample};
use delayosc::fnspec::{Equation, FnError};
use delayosc::integrator::{integrate, IntegrateError, Trajectory};
use delayosc::io::{
    equation_to_json, figure_csv, figure_svg, lambda_table_csv, parse_equation_file, trajectory_csv, write_atomic,
    HistorySpec, IoError,
};
use delayosc::lambda::LambdaError;
use delayosc::oscillation::{certify, classify, delay_bounds, Features, OscError, SChoice, ZeroOptions};
use delayosc::testgen::seed_from_env;
use delayosc::verify::suite;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "delayosc",
    version,
    about = "Oscillation speed and stability certificates for x'(t) + c(t) x(τ(t)) = 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct SimArgs {
    /// Equation file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Integration step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Final time; defaults to ρ + 50.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(clap::Args, Clone)]
struct ZeroArgs {
    /// Relative threshold for zero clusters.
    #[arg(long, default_value_t = delayosc::oscillation::EPS_ZERO)]
    eps_zero: f64,
    /// Merge distance for zeros; defaults to one step.
    #[arg(long)]
    eps_t: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate an equation and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate and report zeros, sign segments, ℓ, sup-delay integral and τ_max.
    Analyze {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        zeros: ZeroArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate, measure features and emit a stability certificate.
    Certify {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        zeros: ZeroArgs,
        /// Fixed s instead of the automatic choice.
        #[arg(long)]
        s: Option<f64>,
        /// Oscillation speed to use instead of the measured one.
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Table of s, Λ(s), σ(s) on [1, 2].
    LambdaTable {
        #[arg(long, default_value_t = 81)]
        rows: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write equation files and exact solutions of the limit-case examples.
    Example {
        #[arg(long, value_enum, default_value_t = ExampleArg::All)]
        name: ExampleArg,
        /// Parameter of x_s and y_s.
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        /// Sampling step of the exact solution.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
    /// Threshold curve Λ(s) as CSV or SVG.
    Figure {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run the oracle suite; exit status 0 iff every check passes.
    Verify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExampleArg {
    #[value(name = "x_s")]
    Xs,
    #[value(name = "y_s")]
    Ys,
    #[value(name = "myshkis_f")]
    MyshkisF,
    #[value(name = "lillo_g")]
    LilloG,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

enum Failure {
    Parse(String),
    Validation(String),
    Numeric(String),
    Io(String),
    Checks(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) | Failure::Checks(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Parse(_) | IoError::Read { .. } => Failure::Parse(e.to_string()),
            IoError::Validation(_) | IoError::Lambda(_) => Failure::Validation(e.to_string()),
            IoError::Write { .. } => Failure::Io(e.to_string()),
        }
    }
}

impl From<FnError> for Failure {
    fn from(e: FnError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<LambdaError> for Failure {
    fn from(e: LambdaError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<IntegrateError> for Failure {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::NonFiniteValue { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<OscError> for Failure {
    fn from(e: OscError) -> Self {
        match e {
            OscError::InconsistentFeatures(_) | OscError::BadHorizon(_) | OscError::Lambda(_) => {
                Failure::Validation(e.to_string())
            }
            OscError::Fn(e) => e.into(),
            OscError::Integrate(e) => e.into(),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<ExampleError> for Failure {
    fn from(e: ExampleError) -> Self {
        match e {
            ExampleError::Lambda(e) => e.into(),
            ExampleError::Fn(e) => e.into(),
            ExampleError::Integrate(e) => e.into(),
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => Ok(write_atomic(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn simulate(sim: &SimArgs) -> Result<(Equation, Trajectory), Failure> {
    let (eq, hist) = parse_equation_file(&sim.input)?;
    let t0 = eq.rho;
    let horizon = sim.horizon.unwrap_or(t0 + 50.0);
    if !(horizon > t0) {
        return Err(Failure::Validation(format!("horizon {horizon} must exceed ρ = {t0}")));
    }
    let hist = hist.unwrap_or(HistorySpec::Constant { value: 1.0 }).build(&eq, t0)?;
    let x = integrate(&eq, &hist, horizon, sim.step)?;
    Ok((eq, x))
}

fn zero_options(z: &ZeroArgs) -> Result<ZeroOptions, Failure> {
    if !(z.eps_zero > 0.0) || z.eps_t.is_some_and(|e| !(e > 0.0)) {
        return Err(Failure::Validation("eps-zero and eps-t must be positive".into()));
    }
    Ok(ZeroOptions {
        eps_zero: z.eps_zero,
        eps_t: z.eps_t,
    })
}

#[derive(Serialize)]
struct CertifyOutput {
    features: Features,
    certificate: delayosc::oscillation::Certificate,
}

fn examples(name: ExampleArg, s: f64) -> Result<Vec<NamedExample>, Failure> {
    let all = name == ExampleArg::All;
    let mut out = Vec::new();
    if all || name == ExampleArg::Xs {
        out.push(make_xs(s)?);
    }
    if all || name == ExampleArg::Ys {
        out.push(make_ys(s)?);
    }
    if all || name == ExampleArg::MyshkisF {
        out.push(make_myshkis_f()?);
    }
    if all || name == ExampleArg::LilloG {
        out.push(make_lillo_g()?);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { sim, output } => {
            let (_, x) = simulate(&sim)?;
            emit(output.as_deref(), &trajectory_csv(&x, x.t_start()))
        }
        Command::Analyze { sim, zeros, output } => {
            let opts = zero_options(&zeros)?;
            let (eq, x) = simulate(&sim)?;
            let report = classify(&eq, &x, &opts)?;
            emit(output.as_deref(), &to_json(&report))
        }
        Command::Certify {
            sim,
            zeros,
            s,
            ell,
            output,
        } => {
            let opts = zero_options(&zeros)?;
            let (eq, x) = simulate(&sim)?;
            let report = classify(&eq, &x, &opts)?;
            let mut features = Features::measured(&eq, &report, sim.step)?;
            if let Some(e) = ell {
                features.ell = Some(e);
            }
            if let Some(s) = s {
                features.s_choice = SChoice::Fixed(s);
            }
            if eq.period().is_some() {
                let (c, d) = delay_bounds(&eq, x.t_end(), 4000)?;
                if d > 0.0 {
                    features.c_bound = Some(c);
                    features.d_bound = Some(d);
                }
            }
            let certificate = certify(&features)?;
            emit(output.as_deref(), &to_json(&CertifyOutput { features, certificate }))
        }
        Command::LambdaTable { rows, output } => emit(output.as_deref(), &lambda_table_csv(rows)?),
        Command::Example { name, s, step, output } => {
            if !(step > 0.0) {
                return Err(Failure::Validation(format!("step {step} must be positive")));
            }
            std::fs::create_dir_all(&output).map_err(|e| Failure::Io(format!("{}: {e}", output.display())))?;
            for ex in examples(name, s)? {
                let t0 = ex.eq.rho;
                let hist = ex.history(t0, step)?;
                let spec = HistorySpec::Samples {
                    samples: hist.samples().to_vec(),
                };
                let stem = ex.name.as_str();
                write_atomic(
                    &output.join(format!("{stem}.json")),
                    &equation_to_json(&ex.eq, Some(&spec)),
                )?;
                let x = ex.sample(t0, t0 + 2.0 * ex.full_period(), step)?;
                write_atomic(
                    &output.join(format!("{stem}_solution.csv")),
                    &trajectory_csv(&x, x.t_start()),
                )?;
                println!("wrote {stem}.json and {stem}_solution.csv");
            }
            Ok(())
        }
        Command::Figure { output, format } => {
            let inferred = output
                .as_deref()
                .and_then(|p| p.extension())
                .is_some_and(|e| e.eq_ignore_ascii_case("svg"));
            let format = format.unwrap_or(if inferred { Format::Svg } else { Format::Csv });
            let text = match format {
                Format::Csv => figure_csv()?,
                Format::Svg => figure_svg()?,
            };
            emit(output.as_deref(), &text)
        }
        Command::Verify => {
            let seed = seed_from_env();
            println!("oracle suite (seed {seed})");
            let checks = suite(seed);
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", checks.len() - failed);
            if failed > 0 {
                return Err(Failure::Checks(failed));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Parse(m) => eprintln!("error (parse): {m}"),
                Failure::Validation(m) => eprintln!("error (validation): {m}"),
                Failure::Numeric(m) => eprintln!("error (numeric): {m}"),
                Failure::Io(m) => eprintln!("error (io): {m}"),
                Failure::Checks(n) => eprintln!("{n} checks failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

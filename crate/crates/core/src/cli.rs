//! Command-line front end: argument parsing, dispatch and exit codes.
//!
//! Exit codes: 0 success, 1 audit verdict false, 2 input error, 3 numerical
//! error. JSON floats use the shortest round-trip form; CSV floats carry 17
//! significant digits.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::audit::AuditReport;
use crate::classify::{
    berwald_test, conformal_check, homogeneity_audit, identity_suite, locally_minkowski_test, regularity,
    ConformalResult, Regularity, BERWALD_TOL,
};
use crate::error::{FinslerError, Result};
use crate::expr::{Expr, VarSet};
use crate::geodesic::{integrate_spec_geodesic, DomainExit, DEFAULT_STEP};
use crate::hamilton::{hamilton_flow, legendre_1d, legendre_point, legendre_table_csv};
use crate::metric::{Metric, MetricKind, MetricSpec};
use crate::noether::{
    charge_drift, charge_report, charge_series, integrate_euler_lagrange, EnergyFunctional, ExprFunctional, Functional,
    TransformationFamily,
};
use crate::tensor::{indicatrix, TensorState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Numerical Finsler geometry engine.
#[derive(Debug, Parser)]
#[command(name = "finsler", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every tensor at (x, y) as JSON.
    Tensors(PointArgs),
    /// Unit-speed geodesic from (x, y) as CSV.
    Trace(FlowArgs),
    /// Phase-space flow from (x, p = Legendre(y)) as CSV.
    Hamilton(FlowArgs),
    /// One-dimensional Legendre table of f(xi) as CSV.
    Legendre1d(Legendre1dArgs),
    /// Homogeneity audit and identity suite as JSON.
    Audit(SampleArgs),
    /// Regularity, Berwald, locally Minkowski and conformal classification as JSON.
    Classify(ClassifyArgs),
    /// Drift of a Noether charge along an Euler-Lagrange solution as JSON.
    Noether(NoetherArgs),
    /// Samples of the indicatrix L(x, y) = 1 as CSV.
    Indicatrix(IndicatrixArgs),
}

#[derive(Debug, Args)]
pub struct MetricArg {
    /// Metric-spec JSON file, or `builtin:NAME` (e.g. `builtin:cubic_l1`).
    #[arg(short, long)]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub metric: MetricArg,
    /// Position, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Direction, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Final parameter value.
    #[arg(long, default_value_t = 1.0)]
    pub tau_max: f64,
    /// Integration step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct Legendre1dArgs {
    /// Convex function of `xi`.
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    /// Sample values of xi, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub sampling: SampleArgs,
    /// Berwald tolerance.
    #[arg(long, default_value_t = BERWALD_TOL)]
    pub tol: f64,
    /// Position for the m-th root regularity test (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Direction for the m-th root regularity test.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Second metric for the conformal equivalence test.
    #[arg(long)]
    pub conformal_with: Option<String>,
}

#[derive(Debug, Args)]
pub struct NoetherArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Integrand F(t, x0.., y0..); defaults to the energy ½L² of the metric.
    #[arg(long, allow_hyphen_values = true)]
    pub functional: Option<String>,
    /// Time generator φ(t, x, y).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub phi: String,
    /// Coordinate generators ψ, comma separated (default: zero).
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<String>,
    /// Largest accepted relative drift.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct IndicatrixArgs {
    #[command(flatten)]
    pub metric: MetricArg,
    /// Position, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Output of a subcommand and whether its verdict passed.
struct Outcome {
    text: String,
    pass: bool,
}

impl Outcome {
    fn ok(text: String) -> Outcome {
        Outcome { text, pass: true }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Output goes to stdout or `--out`; diagnostics go
/// to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match dispatch(&cli.command) {
        Ok(outcome) => outcome,
        Err(err) => {
            eprintln!("error: {err}");
            return if err.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERICAL
            };
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text),
        None => std::io::stdout().lock().write_all(outcome.text.as_bytes()),
    };
    if let Err(err) = written {
        eprintln!("error: cannot write output: {err}");
        return EXIT_INPUT;
    }
    if outcome.pass {
        EXIT_OK
    } else {
        EXIT_AUDIT_FAIL
    }
}

/// Loads `builtin:NAME` or a metric-spec JSON file.
pub fn load_metric(source: &str) -> Result<MetricSpec> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return MetricSpec::builtin(name);
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| FinslerError::InvalidArgument(format!("cannot read metric file `{source}`: {e}")))?;
    MetricSpec::from_json(&text)
}

/// Parses a comma-separated vector, checking its length when `dim` is given.
pub fn parse_vector(text: &str, flag: &str, dim: Option<usize>) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    FinslerError::InvalidArgument(format!("--{flag}: `{}` is not a finite number", part.trim()))
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(dim) = dim {
        if values.len() != dim {
            return Err(FinslerError::InvalidArgument(format!(
                "--{flag} has {} components, the metric has dimension {dim}",
                values.len()
            )));
        }
    }
    Ok(values)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serialization of plain data cannot fail");
    text.push('\n');
    text
}

fn load_point(args: &PointArgs) -> Result<(MetricSpec, Vec<f64>, Vec<f64>)> {
    let spec = load_metric(&args.metric.metric)?;
    let x = parse_vector(&args.x, "x", Some(spec.dim))?;
    let y = parse_vector(&args.y, "y", Some(spec.dim))?;
    Ok((spec, x, y))
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Tensors(args) => {
            let (spec, x, y) = load_point(args)?;
            Ok(Outcome::ok(to_json(&TensorState::compute(&spec, &x, &y)?)))
        }
        Command::Trace(args) => {
            let (spec, x, y) = load_point(&args.point)?;
            let path = integrate_spec_geodesic(&spec, &x, &y, args.tau_max, args.step)?;
            report_exit(&path.exit);
            Ok(Outcome::ok(path.to_csv()))
        }
        Command::Hamilton(args) => {
            let (spec, x, y) = load_point(&args.point)?;
            let p = legendre_point(&spec, &x, &y)?;
            let path = hamilton_flow(&spec, &x, &p, args.tau_max, args.step)?;
            report_exit(&path.exit);
            Ok(Outcome::ok(path.to_csv()))
        }
        Command::Legendre1d(args) => {
            let f = Expr::parse(&args.f, &VarSet::named(&["xi"]))?;
            let xi = parse_vector(&args.xi, "xi", None)?;
            Ok(Outcome::ok(legendre_table_csv(&legendre_1d(&f, &xi)?)))
        }
        Command::Audit(args) => {
            let spec = load_metric(&args.metric.metric)?;
            let report = AuditReport::merge(
                args.seed,
                vec![
                    homogeneity_audit(&spec, args.samples, args.seed, args.threads)?,
                    identity_suite(&spec, args.samples, args.seed, args.threads)?,
                ],
            );
            Ok(Outcome {
                text: to_json(&report),
                pass: report.verdict,
            })
        }
        Command::Classify(args) => classify(args),
        Command::Noether(args) => noether(args),
        Command::Indicatrix(args) => {
            let spec = load_metric(&args.metric.metric)?;
            let x = parse_vector(&args.x, "x", Some(spec.dim))?;
            let samples = indicatrix(&spec, &x, args.samples, args.seed)?;
            let mut csv = (0..spec.dim).map(|i| format!("y{i},")).collect::<String>();
            csv.push_str("L,residual\n");
            for s in &samples {
                for v in &s.y {
                    csv.push_str(&format!("{v:.16e},"));
                }
                csv.push_str(&format!("{:.16e},{:.16e}\n", s.length, s.residual));
            }
            Ok(Outcome::ok(csv))
        }
    }
}

fn report_exit(exit: &Option<DomainExit>) {
    if let Some(exit) = exit {
        eprintln!("warning: integration stopped at {} ({})", exit.tau, exit.reason);
    }
}

#[derive(Serialize)]
struct Classification {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    regularity: Option<Regularity>,
    berwald: AuditReport,
    locally_minkowski: AuditReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    conformal: Option<ConformalResult>,
}

/// Classification reports its findings; a failed Berwald or Minkowski test is
/// a result, not an audit failure, so the exit code stays 0.
fn classify(args: &ClassifyArgs) -> Result<Outcome> {
    let sampling = &args.sampling;
    let spec = load_metric(&sampling.metric.metric)?;
    let dim = spec.dim;
    let x = match &args.x {
        Some(text) => parse_vector(text, "x", Some(dim))?,
        None => vec![0.0; dim],
    };
    let regularity = match (&args.y, matches!(spec.kind, MetricKind::MthRoot { .. })) {
        (Some(text), true) => Some(regularity(&spec, &x, &parse_vector(text, "y", Some(dim))?)?),
        (Some(_), false) => {
            return Err(FinslerError::InvalidArgument(
                "--y selects the regularity test, which needs an mth_root metric".into(),
            ))
        }
        (None, _) => None,
    };
    let conformal = match &args.conformal_with {
        Some(other) => {
            let other = load_metric(other)?;
            Some(conformal_check(&spec, &other, sampling.samples, sampling.seed)?)
        }
        None => None,
    };
    let classification = Classification {
        kind: spec.kind_name(),
        regularity,
        berwald: berwald_test(&spec, sampling.samples, sampling.seed, args.tol, sampling.threads)?,
        locally_minkowski: locally_minkowski_test(&spec, sampling.samples, sampling.seed, sampling.threads)?,
        conformal,
    };
    Ok(Outcome::ok(to_json(&classification)))
}

#[derive(Serialize)]
struct NoetherSummary {
    functional: String,
    phi: String,
    psi: Vec<String>,
    initial_charge: f64,
    final_charge: f64,
    drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exit: Option<DomainExit>,
    report: AuditReport,
}

fn noether(args: &NoetherArgs) -> Result<Outcome> {
    let (spec, x, y) = load_point(&args.flow.point)?;
    let dim = spec.dim;
    let psi: Vec<String> = match &args.psi {
        Some(text) => text.split(',').map(|s| s.trim().to_string()).collect(),
        None => vec!["0".to_string(); dim],
    };
    let family = TransformationFamily::parse(&args.phi, &psi, dim)?;
    let expr_functional;
    let energy = EnergyFunctional(&spec);
    let (functional, name): (&dyn Functional, String) = match &args.functional {
        Some(text) => {
            expr_functional = ExprFunctional::parse(text, dim)?;
            (&expr_functional, text.clone())
        }
        None => (&energy, "energy".to_string()),
    };
    // Metric energies start on the unit sphere of L, matching `trace`.
    let v0 = if args.functional.is_none() {
        let length = spec.length(&x, &y)?;
        y.iter().map(|v| v / length).collect()
    } else {
        y
    };
    let path = integrate_euler_lagrange(functional, 0.0, &x, &v0, args.flow.tau_max, args.flow.step)?;
    report_exit(&path.exit);
    let charges = charge_series(functional, &family, &path.ts, &path.xs, &path.vs)?;
    let report = charge_report("charge_drift", functional, &family, &path, args.tol)?;
    let summary = NoetherSummary {
        functional: name,
        phi: family.phi.to_string(),
        psi: family.psis.iter().map(Expr::to_string).collect(),
        initial_charge: charges[0],
        final_charge: charges[charges.len() - 1],
        drift: charge_drift(&charges),
        exit: path.exit.clone(),
        report,
    };
    Ok(Outcome {
        pass: summary.report.verdict,
        text: to_json(&summary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_are_length_checked() {
        assert_eq!(parse_vector("1, -2.5", "x", Some(2)).unwrap(), vec![1.0, -2.5]);
        assert!(matches!(
            parse_vector("1,2,3", "x", Some(2)),
            Err(FinslerError::InvalidArgument(_))
        ));
        assert!(parse_vector("1,abc", "x", None).is_err());
        assert!(parse_vector("1,inf", "x", None).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["finsler", "--bogus"]), EXIT_INPUT);
        assert_eq!(
            run(["finsler", "tensors", "-m", "builtin:torus", "--x", "0,0", "--y", "1,1"]),
            EXIT_INPUT
        );
        assert_eq!(
            run(["finsler", "tensors", "-m", "builtin:cubic_l1", "--x", "0,0", "--y", "1"]),
            EXIT_INPUT
        );
        assert_eq!(run(["finsler", "legendre1d", "--f", "-xi^2", "--xi", "1"]), EXIT_INPUT);
        assert_eq!(
            run([
                "finsler",
                "tensors",
                "-m",
                "builtin:euclidean(2)",
                "--x",
                "0,0",
                "--y",
                "0,0"
            ]),
            EXIT_NUMERICAL
        );
    }
}

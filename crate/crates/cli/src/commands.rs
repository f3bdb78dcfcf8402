//! Argument parsing and the four subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyptor_core::classify::{enumerate, SearchSpace};
use hyptor_core::d4_family::CaseTag;
use hyptor_core::torus::{EllipticCurveParam, TorsionPoint};
use serde::Serialize;

use crate::certificate::{build_certificate, Certificate, Parameters};
use crate::error::CliError;
use crate::invariants::invariants_from_certificate;
use crate::verify::verify_certificate;

#[derive(Parser, Debug)]
#[command(name = "hyptor", version, about = "Construct, verify and classify free D4 actions on complex 3-tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the action for given parameters and write its certificate.
    Construct(ConstructArgs),
    /// Re-check a certificate.
    Verify(VerifyArgs),
    /// Run the exhaustive parameter sweep for one case.
    Classify(ClassifyArgs),
    /// Hodge and Betti numbers of the quotient described by a certificate.
    Invariants(InvariantsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write the result here (atomically) instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    /// Period of E1 = E2, written re+imi, e.g. 1/2+1/1i.
    #[arg(long)]
    pub tau: EllipticCurveParam,
    /// Period of E3.
    #[arg(long = "tau-prime")]
    pub tau_prime: EllipticCurveParam,
    /// Translation of s on E1, in lattice coordinates.
    #[arg(long, default_value = "1/2,0/1")]
    pub h: TorsionPoint,
    /// Translation of s on E2.
    #[arg(long, default_value = "0/1,1/2")]
    pub k: TorsionPoint,
    /// Translation of r on E3.
    #[arg(long = "h-prime", default_value = "1/4,0/1")]
    pub h_prime: TorsionPoint,
    /// Which linear representation to use.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub case: u8,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub certificate: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct InvariantsArgs {
    pub certificate: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Denominator bounds: one number for all parameters, or `A,C` for
/// `(a₁, a₂)` and `(a₃, c₃)` separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenominatorBounds {
    pub a: u32,
    pub c: u32,
}

fn parse_bounds(text: &str) -> Result<DenominatorBounds, String> {
    let parse = |s: &str| s.trim().parse::<u32>().map_err(|e| format!("'{s}': {e}"));
    match text.split_once(',') {
        Some((a, c)) => Ok(DenominatorBounds { a: parse(a)?, c: parse(c)? }),
        None => {
            let n = parse(text)?;
            Ok(DenominatorBounds { a: n, c: n })
        }
    }
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// 1: s acts by −z₃ on E3; 2: s acts by +z₃.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub case: u8,
    /// `N` or `A,C`; defaults to 4.
    #[arg(long = "max-denominator", value_parser = parse_bounds)]
    pub max_denominator: Option<DenominatorBounds>,
    /// Largest number of generators of the subgroup H.
    #[arg(long = "h-generators-max", default_value_t = 2)]
    pub h_generators_max: usize,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "HYPTOR_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
    /// Also count survivors up to identical action on the quotient.
    #[arg(long)]
    pub orbits: bool,
    /// Period of E1 = E2 used for the sweep.
    #[arg(long, default_value = "0/1+1/1i")]
    pub tau: EllipticCurveParam,
    /// Period of E3 used for the sweep.
    #[arg(long = "tau-prime", default_value = "0/1+2/1i")]
    pub tau_prime: EllipticCurveParam,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn case_tag(n: u8) -> Result<CaseTag, CliError> {
    CaseTag::try_from(n).map_err(|_| CliError::Invalid(format!("unknown case {n}")))
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8, CliError> {
    match command {
        Command::Construct(args) => construct(args, stdout, stderr),
        Command::Verify(args) => verify(args, stdout),
        Command::Classify(args) => classify(args, stdout, stderr),
        Command::Invariants(args) => invariants(args, stdout),
    }
}

fn construct(args: &ConstructArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8, CliError> {
    for (name, p) in [("h", &args.h), ("k", &args.k), ("h-prime", &args.h_prime)] {
        if p.dim() != 2 {
            return Err(CliError::Invalid(format!("--{name} needs two coordinates, got {}", p.dim())));
        }
    }
    let mut parameters = Parameters::new(
        args.tau.clone(),
        args.tau_prime.clone(),
        args.h.clone(),
        args.k.clone(),
        args.h_prime.clone(),
    );
    parameters.case = case_tag(args.case)?;
    let cert = build_certificate(&parameters)?;
    let body = match args.output.format {
        Format::Json => cert.to_json(),
        Format::Text => cert.to_text(),
    };
    emit(&args.output, &body, stdout)?;
    if cert.summary.valid {
        Ok(0)
    } else {
        for reason in &cert.summary.failure_reasons {
            let _ = writeln!(stderr, "failed: {reason}");
        }
        Ok(1)
    }
}

fn read_certificate(path: &Path) -> Result<Certificate, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Certificate::from_json(&text)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    passed: bool,
    failures: &'a [String],
}

fn verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let cert = read_certificate(&args.certificate)?;
    let report = verify_certificate(&cert)?;
    let body = match args.output.format {
        Format::Json => serde_json::to_string_pretty(&VerifyOutput { passed: report.passed(), failures: &report.failures })
            .expect("report serializes"),
        Format::Text if report.passed() => {
            format!("verified: {} elements, {} witnesses, all checks pass\n", cert.elements.len(), cert.freeness.len())
        }
        Format::Text => report.failures.iter().map(|f| format!("FAILED: {f}\n")).collect(),
    };
    emit(&args.output, &body, stdout)?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn invariants(args: &InvariantsArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let cert = read_certificate(&args.certificate)?;
    let report = verify_certificate(&cert)?;
    if !report.passed() {
        return Err(CliError::Failed(format!("certificate does not verify: {}", report.failures.join("; "))));
    }
    let inv = invariants_from_certificate(&cert)?;
    let violations = inv.symmetry_violations();
    if !violations.is_empty() {
        return Err(CliError::Failed(format!("Hodge symmetries fail: {}", violations.join("; "))));
    }
    let body = match args.output.format {
        Format::Json => serde_json::to_string_pretty(&inv).expect("report serializes"),
        Format::Text => inv.to_text(),
    };
    emit(&args.output, &body, stdout)?;
    Ok(0)
}

fn classify(args: &ClassifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8, CliError> {
    let mut space = SearchSpace::new(case_tag(args.case)?);
    if let Some(b) = args.max_denominator {
        space = space.with_denominators(b.a, b.c);
    }
    space.h_generators_max = args.h_generators_max;
    space.count_orbits = args.orbits;
    space.tau = args.tau.clone();
    space.tau_prime = args.tau_prime.clone();
    space.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let workers = match args.workers {
        Some(w) => w as usize,
        None => std::thread::available_parallelism().map_or(1, usize::from),
    };
    let report = enumerate(&space, workers).map_err(|e| CliError::Invalid(e.to_string()))?;
    let body = match args.output.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes"),
        Format::Text => report.to_string(),
    };
    emit(&args.output, &body, stdout)?;
    let expected = report.expected_outcome();
    let _ = writeln!(
        stderr,
        "{}: {} tuples, {} survivors, {}",
        space.case,
        report.total,
        report.survivor_count,
        if expected { "expected outcome" } else { "UNEXPECTED outcome" }
    );
    Ok(if expected { 0 } else { 1 })
}

fn emit(output: &OutputArgs, body: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut body = body.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &output.out {
        Some(path) => write_atomic(path, body.as_bytes()),
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::Invalid(format!("cannot write output: {e}"))),
    }
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Invalid(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

//! Argument handling for the `nnv` binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use nnv_core::text::parse_network;
use nnv_core::{Payload, Status, VerificationProblem};
use nnv_solvers::{deadline, is_counter_example};

use crate::bench::{run_bench, BenchOptions};
use crate::error::CliError;
use crate::oracle::oracle_verify;
use crate::problem::{parse_param, parse_problem};
use crate::registry::{lookup, Params, SOLVERS};
use crate::report::{table_header, RunRecord};

#[derive(Parser, Debug)]
#[command(name = "nnv", version, about = "Verify properties of feed-forward ReLU networks")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one solver on one problem.
    Verify {
        /// Network text file; defaults to the one named in the problem file.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        solver: Option<String>,
        /// Solver parameter as `name=value`; repeatable.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        /// Also decide the problem by region enumeration.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Accepted for symmetry with `bench`; every solver is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Seconds before the solver gives up with `unknown`.
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Compare the solvers of a group on random instances.
    Bench {
        /// Group 1 to 6; all groups when omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        group: Option<u8>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Record wall-clock times; the report is then no longer reproducible.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        timeout: Option<f64>,
        /// Print every run instead of the summary table.
        #[arg(long)]
        detail: bool,
    },
    /// List the solvers with the sets they accept.
    Solvers,
}

fn timeout(secs: Option<f64>) -> Result<Option<Duration>, CliError> {
    secs.map(|s| Duration::try_from_secs_f64(s).map_err(|_| CliError::Usage(format!("invalid timeout {s}"))))
        .transpose()
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Loads a problem file and its network.
pub fn load_problem(
    problem: &Path,
    network: Option<&Path>,
) -> Result<(VerificationProblem, Option<String>, Params), CliError> {
    let file = parse_problem(&read(problem)?).map_err(|e| match e {
        CliError::Json { line, column, msg } => {
            CliError::Json { line, column, msg: format!("{}: {msg}", problem.display()) }
        }
        e => e,
    })?;
    let net_path = match (network, &file.network) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(rel)) => problem.parent().unwrap_or(Path::new(".")).join(rel),
        (None, None) => {
            return Err(CliError::Usage(
                "no network given: pass --network or set \"network\" in the problem file".into(),
            ))
        }
    };
    let net = parse_network(&read(&net_path)?).map_err(|e| match e {
        nnv_core::Error::Parse { line, msg } => {
            CliError::Network(nnv_core::Error::Parse { line, msg: format!("{}: {msg}", net_path.display()) })
        }
        e => CliError::Network(e),
    })?;
    let input = file.input.to_set("input")?;
    let output = file.output.to_set("output")?;
    for (field, dim, want) in [("input", input.dim(), net.input_dim()), ("output", output.dim(), net.output_dim())] {
        if dim != want {
            return Err(CliError::Field {
                field: field.into(),
                msg: format!("set has dimension {dim}, network expects {want}"),
            });
        }
    }
    let params = file.params.iter().map(|(k, v)| (k.clone(), v.value())).collect();
    Ok((VerificationProblem::new(net, input, output)?, file.solver, params))
}

#[allow(clippy::too_many_arguments)]
fn verify(
    out: &mut dyn Write,
    network: Option<PathBuf>,
    problem: PathBuf,
    solver: Option<String>,
    extra: Vec<String>,
    oracle: bool,
    format: Format,
    limit: Option<f64>,
) -> Result<i32, CliError> {
    let limit = timeout(limit)?;
    let (p, file_solver, mut params) = load_problem(&problem, network.as_deref())?;
    for arg in &extra {
        let (k, v) = parse_param(arg)?;
        params.insert(k, v.value());
    }
    let name = solver.or(file_solver).ok_or_else(|| {
        CliError::Usage("no solver given: pass --solver or set \"solver\" in the problem file".into())
    })?;
    let entry = lookup(&name)?;
    entry.check(&p, &params)?;
    let oracle_status = if oracle { Some(oracle_verify(&p)?.status) } else { None };
    let start = Instant::now();
    let r = deadline::with_deadline(limit, || entry.run(&p, &params))?;
    let time = start.elapsed().as_secs_f64();
    let valid = match &r.payload {
        Payload::CounterExample(x) => Some(is_counter_example(&p, x)),
        _ => None,
    };
    let rec = RunRecord::new(entry.name, &r, Some(time), oracle_status, valid);
    let text = match format {
        Format::Json => rec.to_json(),
        Format::Table => format!("{}\n{}", table_header(), rec.table_row()),
    };
    writeln!(out, "{text}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
    Ok(if r.status == Status::Violated { 2 } else { 0 })
}

fn solvers(out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:<11} {:<34} {:<34} {:<8} params", "solver", "input", "output", "complete")?;
    for s in SOLVERS {
        let names = |ks: &[nnv_core::geometry::SetKind]| ks.iter().map(|k| k.name()).collect::<Vec<_>>().join("|");
        writeln!(
            out,
            "{:<11} {:<34} {:<34} {:<8} {}",
            s.name,
            names(s.inputs),
            names(s.outputs),
            s.complete,
            s.params.join(",")
        )?;
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let res = match args.command {
        Command::Verify { network, problem, solver, params, oracle, format, seed: _, timeout } => {
            verify(out, network, problem, solver, params, oracle, format, timeout)
        }
        Command::Bench { group, count, seed, format, timing, timeout: limit, detail } => (|| {
            let opts = BenchOptions {
                groups: group.map_or_else(|| (1..=6).collect(), |g| vec![usize::from(g)]),
                count,
                seed,
                timeout: timeout(limit)?,
                timing,
            };
            let report = run_bench(&opts)?;
            let text = match (format, detail) {
                (Format::Json, _) => report.to_json(),
                (Format::Table, false) => report.to_table(),
                (Format::Table, true) => report.to_detail_table(),
            };
            writeln!(out, "{text}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
            Ok(0)
        })(),
        Command::Solvers => solvers(out).map(|_| 0).map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

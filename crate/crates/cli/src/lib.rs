//! `bcbound` command-line front end. Every command parses its inputs, calls
//! into `bcbound_core`, and formats the result.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | a verified property failed, or a bound exceeded the union estimate |
//! | 2 | unreadable or invalid input (model spec, weight file, size guard, arguments) |
//! | 3 | ratio undefined at the requested horizon, or weights not computable |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use bcbound_core::bound::{ratio_sequence, tail_ratio, BoundConfig, BoundReport};
use bcbound_core::gram::{GramData, GramSource, DEFAULT_PSD_TOL};
use bcbound_core::simulate::{
    convergence_experiment, default_grid, final_validation, union_value, write_convergence_csv,
    SimConfig, ValidationReport, Verdict,
};
use bcbound_core::verify::{verify_gram, verify_model, VerifyConfig};
use bcbound_core::weights::{weights_from_json, WeightScheme, DEFAULT_CUTOFF};
use bcbound_core::{Error, EventSeqModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNDEFINED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bcbound",
    version,
    about = "Weighted Borel-Cantelli lower bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ratio sequence, running maximum and tail estimate of the bound.
    Bound(CommonArgs),
    /// Run the property checks (PSD, block split, weighted Chung-Erdős, ...).
    Verify(CommonArgs),
    /// Ratio and union curves over a geometric grid, with a final validation.
    Simulate(CommonArgs),
    /// Write the Gram data CSV and report the PSD verdict.
    Gram(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Model specification (JSON), or Gram data CSV (`.csv`) where supported.
    #[arg(long)]
    pub model: PathBuf,
    /// unit | inverse | optimal | file:<path to JSON array>
    #[arg(long, default_value = "unit")]
    pub weights: String,
    /// Number of events.
    #[arg(long)]
    pub n: usize,
    /// First event of the union range (1-based).
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PSD_TOL)]
    pub psd_tol: f64,
    /// Relative eigenvalue cutoff for optimal weights.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: f64,
    #[arg(long, default_value_t = 0.99)]
    pub ci_level: f64,
    /// Simulate unions even when exact values are available.
    #[arg(long)]
    pub force_mc: bool,
}

/// Inputs accepted by `--model`.
pub enum Input {
    Model(EventSeqModel),
    Gram(GramData),
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UndefinedRatio { .. }
        | Error::ZeroProbability { .. }
        | Error::Degenerate(_)
        | Error::NegativeWeight { .. } => EXIT_UNDEFINED,
        _ => EXIT_INPUT,
    }
}

pub fn load_input(path: &Path) -> Result<Input, Error> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        Ok(Input::Gram(GramData::read_csv(File::open(path)?)?))
    } else {
        let text = std::fs::read_to_string(path)?;
        Ok(Input::Model(EventSeqModel::from_json(&text)?))
    }
}

pub fn parse_scheme(spec: &str, cutoff: f64) -> Result<WeightScheme, Error> {
    match spec {
        "unit" => Ok(WeightScheme::Unit),
        "inverse" => Ok(WeightScheme::InverseProbability),
        "optimal" => Ok(WeightScheme::Optimal { cutoff }),
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(WeightScheme::Explicit(weights_from_json(&text)?))
            }
            None => Err(Error::InvalidArgument(format!(
                "unknown weights `{other}`; expected unit, inverse, optimal or file:<path>"
            ))),
        },
    }
}

fn sim_config(a: &CommonArgs) -> SimConfig {
    SimConfig {
        ci_level: a.ci_level,
        force_simulation: a.force_mc,
        ..SimConfig::default()
    }
}

fn open_out(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string())
        .unwrap_or_else(|| "undefined".into())
}

/// Writes `n,ratio,running_max,partial_sum,denominator`.
pub fn write_bound_csv<W: Write>(report: &BoundReport, out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "ratio", "running_max", "partial_sum", "denominator"])?;
    for k in 0..report.horizon() {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            (k + 1).to_string(),
            cell(report.ratios[k]),
            cell(report.running_max[k]),
            report.partial_sums[k].to_string(),
            report.denominators[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bound(a: &CommonArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let scheme = parse_scheme(&a.weights, a.cutoff)?;
    let input = load_input(&a.model)?;
    let cfg = BoundConfig::default();
    let (kind, report) = match &input {
        Input::Model(m) => (
            m.kind(),
            ratio_sequence(&m.gram_source(a.n)?, &scheme, a.n, &cfg)?,
        ),
        Input::Gram(g) => ("gram_csv", ratio_sequence(g, &scheme, a.n, &cfg)?),
    };
    writeln!(out, "# bcbound bound seed={}", a.seed)?;
    writeln!(out, "model: {kind} ({})", a.model.display())?;
    writeln!(out, "scheme: {}", report.scheme)?;
    writeln!(out, "n: {}", a.n)?;
    writeln!(out, "ratio_at_n: {}", fmt_opt(report.ratio_at(a.n)))?;
    writeln!(out, "final_estimate: {}", fmt_opt(report.final_estimate))?;
    let tail: Vec<String> = report
        .running_max
        .iter()
        .skip(a.n.saturating_sub(5))
        .map(|v| fmt_opt(*v))
        .collect();
    writeln!(out, "running_max_tail: {}", tail.join(" "))?;
    writeln!(out, "partial_sum: {}", report.partial_sums[a.n - 1])?;
    writeln!(out, "denominator_min: {}", report.denominator_min)?;
    writeln!(out, "diverging: {} (advisory)", report.diverging)?;
    if a.s > 1 {
        let tail = match &input {
            Input::Model(m) => tail_ratio(&m.gram_source(a.n)?, &report.weights, a.s, a.n),
            Input::Gram(g) => tail_ratio(g, &report.weights, a.s, a.n),
        };
        match tail {
            Ok(t) => writeln!(out, "tail_ratio (s={}): {t}", a.s)?,
            Err(Error::UndefinedRatio { .. }) => {
                writeln!(out, "tail_ratio (s={}): undefined", a.s)?
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(path) = &a.out {
        write_bound_csv(&report, open_out(path)?)?;
        writeln!(out, "csv: {}", path.display())?;
    }
    match report.ratio_at(a.n) {
        Some(_) => Ok(EXIT_OK),
        None => {
            writeln!(
                out,
                "error: ratio undefined at n = {} (denominator {:e})",
                a.n,
                report.denominators[a.n - 1]
            )?;
            Ok(EXIT_UNDEFINED)
        }
    }
}

pub fn cmd_verify(a: &CommonArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let scheme = parse_scheme(&a.weights, a.cutoff)?;
    let cfg = VerifyConfig {
        n: a.n,
        psd_tol: a.psd_tol,
        scheme,
        trials: a.trials,
        seed: a.seed,
        sim: sim_config(a),
        ..VerifyConfig::default()
    };
    let report = match load_input(&a.model)? {
        Input::Model(m) => verify_model(&m, &cfg)?,
        Input::Gram(g) => verify_gram(&g.truncate(a.n.min(g.len()))?, &cfg)?,
    };
    writeln!(out, "# bcbound verify seed={} n={}", a.seed, a.n)?;
    for c in &report.checks {
        writeln!(out, "{c}")?;
    }
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn write_validation(v: &ValidationReport, seed: u64, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "# bcbound simulate seed={seed}")?;
    writeln!(out, "n: {}", v.n)?;
    writeln!(out, "bound: {}", fmt_opt(v.bound_value))?;
    let e = &v.estimate;
    writeln!(
        out,
        "union: {} [{}, {}] source={} trials={}",
        e.estimate,
        e.ci_low,
        e.ci_high,
        e.source.as_str(),
        e.trials
    )?;
    writeln!(out, "slack: {}", fmt_opt(v.slack))?;
    let verdict = match v.verdict {
        Verdict::Consistent => "consistent",
        Verdict::Violated => "violated",
        Verdict::UndefinedBound => "undefined",
    };
    writeln!(out, "verdict: {verdict}")
}

pub fn cmd_simulate(
    a: &CommonArgs,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<i32, Error> {
    let scheme = parse_scheme(&a.weights, a.cutoff)?;
    let Input::Model(model) = load_input(&a.model)? else {
        return Err(Error::InvalidArgument(
            "simulate needs a model specification".into(),
        ));
    };
    let cfg = sim_config(a);
    let rows = convergence_experiment(&model, &scheme, &default_grid(a.n), a.trials, a.seed, &cfg)?;
    let summary: &mut dyn Write = match &a.out {
        Some(path) => {
            write_convergence_csv(&rows, open_out(path)?)?;
            out
        }
        None => {
            write_convergence_csv(&rows, &mut *out)?;
            diag
        }
    };
    let v = final_validation(&rows, &cfg).expect("grid is nonempty");
    write_validation(&v, a.seed, summary)?;
    if a.s > 1 {
        let e = union_value(&model, a.s, a.n, a.trials, a.seed, &cfg)?;
        writeln!(
            summary,
            "tail_union (s={}): {} [{}, {}] source={}",
            a.s,
            e.estimate,
            e.ci_low,
            e.ci_high,
            e.source.as_str()
        )?;
    }
    Ok(match v.verdict {
        Verdict::Consistent => EXIT_OK,
        Verdict::Violated => EXIT_FAILED,
        Verdict::UndefinedBound => EXIT_UNDEFINED,
    })
}

pub fn cmd_gram(a: &CommonArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<i32, Error> {
    let g = match load_input(&a.model)? {
        Input::Model(m) => {
            if a.n > bcbound_core::model::MAX_DENSE_HORIZON {
                return Err(Error::SizeGuard(format!(
                    "dense Gram output limited to {} events",
                    bcbound_core::model::MAX_DENSE_HORIZON
                )));
            }
            GramData::from_source(&m.gram_source(a.n)?, a.n)?
        }
        Input::Gram(g) => g.truncate(a.n)?,
    };
    let summary: &mut dyn Write = match &a.out {
        Some(path) => {
            g.write_csv(open_out(path)?)?;
            out
        }
        None => {
            g.write_csv(&mut *out)?;
            diag
        }
    };
    let v = g.check_psd(a.psd_tol);
    writeln!(summary, "# bcbound gram seed={} n={}", a.seed, g.len())?;
    writeln!(summary, "psd: {}", if v.passed() { "pass" } else { "fail" })?;
    writeln!(summary, "min_eigenvalue: {:e}", v.min_eigenvalue())?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Bound(a) | Command::Verify(a) | Command::Simulate(a) | Command::Gram(a)
            if a.n == 0 =>
        {
            Err(Error::InvalidArgument("--n must be at least 1".into()))
        }
        Command::Bound(a) | Command::Verify(a) | Command::Simulate(a) | Command::Gram(a)
            if a.s == 0 || a.s > a.n =>
        {
            Err(Error::InvalidArgument(format!(
                "--s must lie in [1, {}]",
                a.n
            )))
        }
        Command::Bound(a) => cmd_bound(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Simulate(a) => cmd_simulate(a, out, err),
        Command::Gram(a) => cmd_gram(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

//! Command-line front end. The binary only forwards to [`run`].
//!
//! Exit codes: 0 success or safe, 1 I/O or internal error, 2 validation
//! violations or domain errors, 3 a simulated window reached UHC.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analytic;
use crate::attack;
use crate::config::RawConfig;
use crate::error::Error;
use crate::explorer;
use crate::mechanism::{run_trace, ConfigMode};
use crate::model::{self, DeviceProfile, MechanismConfig};
use crate::report::KeyValues;
use crate::trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_UNSAFE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "silverbullet", version, about = "Security model and simulator for a per-subbank RowHammer defence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every safety constraint and print the tolerable hammer count.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print hammer-count bounds and table geometry.
    Analyze {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// PENDING at which the target is assumed refreshed mid-attack.
        #[arg(long)]
        p_ref: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Replay a trace, the worst-case attack, or random traces.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, group = "source")]
        trace: Option<PathBuf>,
        #[arg(long, group = "source")]
        wave: bool,
        #[arg(long, group = "source")]
        fuzz: bool,
        #[arg(long, requires = "wave")]
        p_ref: Option<u32>,
        /// Write the synthesized attack trace to this file.
        #[arg(long, requires = "wave")]
        emit_trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Activations per fuzz trace; defaults to ten times the bound.
        #[arg(long)]
        len: Option<usize>,
        /// Run configurations that fail validation.
        #[arg(long)]
        allow_unsafe: bool,
    },
    /// Exhaustive worst case over all activation sequences (tiny banks only).
    Oracle {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        horizon: u32,
    },
    /// Write a design-space sweep as CSV.
    Sweep {
        /// One of fig5, fig6, fig7, fig8a, fig8b, fig9.
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Trace { .. } => EXIT_IO,
            _ => EXIT_VIOLATION,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(what: &str, path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_IO, message: format!("{what} {}: {e}", path.display()) }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_VIOLATION } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Validate { cfg } => validate(&cfg, out, err),
        Command::Analyze { cfg, p_ref, json } => analyze(&cfg, p_ref, json, out, err),
        Command::Simulate { cfg, trace, wave, fuzz, p_ref, emit_trace, seed, count, len, allow_unsafe } => {
            let source = match (trace, wave, fuzz) {
                (Some(path), _, _) => Source::Trace(path),
                (None, true, _) => Source::Wave { p_ref, emit: emit_trace },
                (None, false, true) => Source::Fuzz { seed, count, len },
                (None, false, false) => {
                    let _ = writeln!(err, "error: simulate needs one of --trace, --wave or --fuzz");
                    return EXIT_VIOLATION;
                }
            };
            simulate(&cfg, source, allow_unsafe, out, err)
        }
        Command::Oracle { cfg, horizon } => oracle(&cfg, horizon, out, err),
        Command::Sweep { preset, out: path } => sweep(&preset, &path, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(cfg: &ConfigArgs, err: &mut dyn Write) -> std::result::Result<(DeviceProfile, MechanismConfig), Failure> {
    let text = std::fs::read_to_string(&cfg.config).map_err(|e| io_failure("cannot read", &cfg.config, e))?;
    let mut raw = RawConfig::parse(&text)?;
    for assignment in &cfg.overrides {
        let previous = raw.set(assignment)?;
        let _ = match previous {
            Some(old) => writeln!(err, "override: {assignment} (was {old})"),
            None => writeln!(err, "override: {assignment}"),
        };
    }
    Ok(raw.build()?)
}

fn print_violations(violations: &[model::Violation], w: &mut dyn Write) {
    for v in violations {
        let _ = writeln!(w, "violation {v}");
    }
}

fn validate(cfg: &ConfigArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (device, config) = load(cfg, err)?;
    let violations = model::validate(&device, &config);
    print_violations(&violations, out);
    if config.n_subbanks > 0 {
        let _ = writeln!(out, "THC={}", analytic::thc(&device, &config));
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

fn analyze(cfg: &ConfigArgs, p_ref: Option<u32>, as_json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (device, config) = load(cfg, err)?;
    let violations = model::validate(&device, &config);
    // Bounds are still meaningful for configurations outside the safe region.
    for v in &violations {
        let _ = writeln!(err, "warning: {v}");
    }
    let bounds = analytic::hammer_bounds(&device, &config, p_ref)?;
    let geometry = analytic::table_geometry(&config, device.refresh_burst);
    if as_json {
        let doc = json!({ "bounds": bounds, "table": geometry, "violations": violations });
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("reports serialize"));
    } else {
        let _ = write!(out, "{}{}", bounds.to_key_value_text(), geometry.to_key_value_text());
    }
    Ok(EXIT_OK)
}

enum Source {
    Trace(PathBuf),
    Wave { p_ref: Option<u32>, emit: Option<PathBuf> },
    Fuzz { seed: u64, count: usize, len: Option<usize> },
}

fn simulate(cfg: &ConfigArgs, source: Source, allow_unsafe: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (device, config) = load(cfg, err)?;
    let violations = model::validate(&device, &config);
    if !violations.is_empty() {
        if !allow_unsafe {
            print_violations(&violations, err);
            return Ok(EXIT_VIOLATION);
        }
        let _ = writeln!(err, "warning: running a configuration with {} violation(s)", violations.len());
    }
    let thc = analytic::thc(&device, &config);
    let safe = match source {
        Source::Trace(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| io_failure("cannot read", &path, e))?;
            let events = trace::parse_trace(&text)?;
            let report = run_trace(&device, &config, events, ConfigMode::AllowUnsafe)?;
            let _ = write!(out, "{}", report.to_key_value_text());
            let _ = writeln!(out, "thc={thc}\nbound_gap={}", thc as i64 - i64::from(report.max_window));
            report.safe
        }
        Source::Wave { p_ref, emit } => {
            let plan = attack::plan_wave(&device, &config, p_ref)?;
            if let Some(path) = emit {
                std::fs::write(&path, plan.to_trace_text()).map_err(|e| io_failure("cannot write", &path, e))?;
            }
            let outcome = attack::execute(&device, &config, &plan)?;
            let _ = write!(out, "{}", outcome.to_key_value_text());
            outcome.safe
        }
        Source::Fuzz { seed, count, len } => {
            let len = len.unwrap_or_else(|| 10 * thc as usize);
            let mut max_window = 0;
            let mut max_pending = 0;
            let mut unsafe_traces = 0;
            let mut worst_trace = 0;
            for (i, events) in attack::fuzz_traces(&device, &config, seed, count, len).enumerate() {
                let report = run_trace(&device, &config, events, ConfigMode::AllowUnsafe)?;
                if report.max_window > max_window {
                    (max_window, worst_trace) = (report.max_window, i);
                }
                max_pending = max_pending.max(report.max_pending_observed);
                unsafe_traces += usize::from(!report.safe);
            }
            let _ = writeln!(
                out,
                "traces={count}\nlength={len}\nseed={seed}\nmax_window={max_window}\nworst_trace={worst_trace}\n\
                 max_pending_observed={max_pending}\nunsafe_traces={unsafe_traces}\nthc={thc}\nbound_gap={}\nsafe={}",
                thc as i64 - i64::from(max_window),
                unsafe_traces == 0
            );
            unsafe_traces == 0
        }
    };
    Ok(if safe { EXIT_OK } else { EXIT_UNSAFE })
}

fn oracle(cfg: &ConfigArgs, horizon: u32, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (device, config) = load(cfg, err)?;
    let bound = analytic::hammer_bounds(&device, &config, None)?.hc_attack;
    let best = attack::exhaustive_oracle(&device, &config, horizon)?;
    let _ = writeln!(out, "oracle={best}\nbound={bound}\nhorizon={horizon}\nwithin_bound={}", u64::from(best) <= bound);
    Ok(if u64::from(best) < device.uhc_dram { EXIT_OK } else { EXIT_UNSAFE })
}

fn sweep(preset: &str, path: &std::path::Path, out: &mut dyn Write) -> Outcome {
    let rows = explorer::sweep_preset(preset)?;
    let file = std::fs::File::create(path).map_err(|e| io_failure("cannot create", path, e))?;
    explorer::write_csv(&rows, std::io::BufWriter::new(file)).map_err(|e| io_failure("cannot write", path, e))?;
    let _ = writeln!(out, "wrote {} rows to {}", rows.len(), path.display());
    Ok(EXIT_OK)
}

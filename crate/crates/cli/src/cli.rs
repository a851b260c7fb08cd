//! Argument parsing and subcommand dispatch for the `edgeflow` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::ScenarioConfig;
use crate::scenario::{self, Format};
use crate::{fuzz, laws};

/// Overrides the directory report and trace files are written to.
pub const OUTPUT_DIR_ENV: &str = "EDGEFLOW_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "edgeflow-out";

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "edgeflow",
    version,
    about = "Replicated dataflow simulator and checkers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Structured,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Structured => Format::Structured,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario from a config file and write its report and trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Trace destination; defaults to a file in the output directory.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check the lattice and dataflow laws on random inputs.
    Laws {
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        iterations: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enumerate every delivery interleaving of small mutation scripts.
    Fuzz {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=6))]
        max_ops: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4))]
        replicas: u64,
        /// Seeds the random runs over longer scripts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random longer runs after the exhaustive pass.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            format,
            trace,
        } => run_scenario(&config, seed, format.into(), trace.as_deref(), out),
        Command::Laws { iterations, seed } => Ok(run_laws(iterations, seed, out)),
        Command::Fuzz {
            max_ops,
            replicas,
            seed,
            samples,
        } => Ok(run_fuzz(
            max_ops as usize,
            replicas as usize,
            seed,
            samples,
            out,
        )),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

pub fn output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run_scenario(
    path: &Path,
    seed: Option<u64>,
    format: Format,
    trace: Option<&Path>,
    out: &mut dyn Write,
) -> anyhow::Result<u8> {
    let mut config = ScenarioConfig::load(path).map_err(anyhow::Error::msg)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let report = scenario::run(&config)?;
    let rendered = report.render(format);

    let dir = output_dir();
    let stem = format!("{}-seed{}", config.scenario.name(), config.seed);
    let (report_ext, trace_ext) = match format {
        Format::Text => ("txt", "log"),
        Format::Structured => ("json", "jsonl"),
    };
    let report_path = dir.join(format!("{stem}.report.{report_ext}"));
    let trace_path = trace
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(format!("{stem}.trace.{trace_ext}")));
    write_file(&report_path, &rendered)?;
    write_file(&trace_path, &report.render_trace(format))?;

    out.write_all(rendered.as_bytes())?;
    Ok(if report.violations().is_empty() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    })
}

fn run_laws(iterations: u64, seed: u64, out: &mut dyn Write) -> u8 {
    let start = Instant::now();
    let report = laws::run(iterations, seed);
    for r in &report.results {
        let _ = writeln!(out, "{r}");
    }
    let failed = report.results.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(
        out,
        "{} laws, {} failed, {} iterations each, seed {seed}, {:.2}s",
        report.results.len(),
        failed,
        iterations,
        start.elapsed().as_secs_f64()
    );
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

fn run_fuzz(max_ops: usize, replicas: usize, seed: u64, samples: u64, out: &mut dyn Write) -> u8 {
    let start = Instant::now();
    let report = fuzz::run(max_ops, replicas, seed, samples);
    for (target, summary) in &report.per_target {
        let _ = writeln!(
            out,
            "{target}: {} scripts, {} interleavings",
            summary.scripts, summary.interleavings
        );
    }
    for v in report.violations.iter().take(20) {
        let _ = writeln!(out, "violation [{}] {}: {}", v.target, v.script, v.detail);
    }
    let _ = writeln!(out, "sampled runs: {} (seed {seed})", report.sampled_runs);
    let _ = writeln!(out, "interleavings checked: {}", report.interleavings);
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(
        out,
        "{verdict} max-ops {max_ops} replicas {replicas}: {} violations, {:.2}s",
        report.violations.len(),
        start.elapsed().as_secs_f64()
    );
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

//! The `jscc` command line.
//!
//! Every flag may also come from a `--config` file of `key=value` lines
//! (`#` starts a comment); flags given on the command line win.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use jscc_core::codec::{Scheme, SchemeCodec};
use jscc_core::sim::{sequence_matrix, DecoderKind, Knowledge, Mode, SequenceConfig, DEFAULT_PILOT_PACKETS};

use crate::experiment::{run_experiment, write_csv, ExperimentConfig, DEFAULT_BUCKET};
use crate::formats::{trace_sequence, write_codebook, write_matrix, write_snapshot, EstimatorSnapshot};
use crate::sweep::{parse_f64_list, parse_named_list, parse_usize_list};

#[derive(Debug, Parser)]
#[command(name = "jscc", version, about = "Joint source-channel coding experiments for short packets")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state packet error rate over a list of flip probabilities.
    SweepPb(RunArgs),
    /// Steady-state packet error rate over a list of source densities.
    SweepDensity(RunArgs),
    /// Steady-state packet error rate of the delayed decoder over delays.
    SweepDelay(RunArgs),
    /// Learning receiver on a fixed source, error rate per packet bucket.
    Transient(RunArgs),
    /// Learning receiver on a drifting source, error rate per packet bucket.
    Dynamic(RunArgs),
    /// Writes the codebook of one scheme as `state,message,codeword_bits`.
    CodebookDump(DumpArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Read further flags from a key=value file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coding schemes, comma separated.
    #[arg(long = "schemes", visible_alias = "scheme")]
    pub schemes: Option<String>,
    /// Decoders (min-distance, map, delayed), comma separated.
    #[arg(long = "decoders", visible_alias = "decoder")]
    pub decoders: Option<String>,
    /// Flip probabilities: list and/or start:end:step ranges.
    #[arg(long)]
    pub pb: Option<String>,
    /// Source densities: list and/or start:end:step ranges.
    #[arg(long)]
    pub density: Option<String>,
    /// Delays of the delayed decoder: list and/or ranges.
    #[arg(long)]
    pub delay: Option<String>,
    /// Receiver knowledge in transient and dynamic runs (learned, perfect).
    #[arg(long)]
    pub knowledge: Option<String>,
    /// Codeword length in bits.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Number of source states.
    #[arg(long, default_value_t = 32)]
    pub states: usize,
    /// Number of messages per state.
    #[arg(long, default_value_t = 32)]
    pub messages: usize,
    /// Check packet interval of the conditional scheme.
    #[arg(long, default_value_t = 2)]
    pub tc: usize,
    /// Additive smoothing of the transition estimate.
    #[arg(long, default_value_t = jscc_core::estimation::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Sliding window of the learning receiver, in packets.
    #[arg(long, default_value_t = jscc_core::estimation::DEFAULT_WINDOW)]
    pub window: usize,
    /// Pilot packets sent before data when learning.
    #[arg(long, default_value_t = DEFAULT_PILOT_PACKETS)]
    pub pilot: usize,
    /// Packets per sequence.
    #[arg(long)]
    pub packets: Option<usize>,
    /// Independent sequences per sweep point.
    #[arg(long)]
    pub sequences: Option<usize>,
    /// Base seed; sequence i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Packets per bucket in transient and dynamic output.
    #[arg(long, default_value_t = DEFAULT_BUCKET)]
    pub bucket: usize,
    /// Also write one row per sequence.
    #[arg(long)]
    pub per_sequence: bool,
    /// Result CSV path (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-packet trace CSV of sequence 0 at the first sweep point.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Final estimator snapshot of sequence 0 at the first learning point.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 32)]
    pub states: usize,
    #[arg(long, default_value_t = 32)]
    pub messages: usize,
    /// Density of the generated source, for the compression schemes.
    #[arg(long, default_value_t = 0.125)]
    pub density: f64,
    /// Seed of the generated source (sequence 0).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Previous state selecting the conditional codebook.
    #[arg(long, default_value_t = 0)]
    pub context: usize,
    /// Also write the generated transition matrix here.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv`, splicing in the flags of a `--config` file right after
/// the subcommand so that explicit flags override them.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if let Some(path) = config_path(&args) {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Cli::command().error(ErrorKind::Io, format!("cannot read config {}: {e}", path.display()))
        })?;
        let spliced = config_flags(&text).map_err(|msg| {
            Cli::command().error(ErrorKind::InvalidValue, format!("{}: {msg}", path.display()))
        })?;
        let at = 2.min(args.len());
        args.splice(at..at, spliced);
    }
    Cli::try_parse_from(args)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let arg = arg.to_string_lossy();
        if arg == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

/// Turns `key=value` lines into `--key=value` flags. A bare `key` line is
/// a switch such as `per-sequence`.
pub fn config_flags(text: &str) -> Result<Vec<OsString>, String> {
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return Err(format!("line {}: bad key '{key}'", i + 1));
        }
        let key = key.replace('_', "-");
        flags.push(match value {
            Some(v) => OsString::from(format!("--{key}={v}")),
            None => OsString::from(format!("--{key}")),
        });
    }
    Ok(flags)
}

fn usage_error(sub: &str, message: impl std::fmt::Display) -> clap::Error {
    let mut cmd = Cli::command();
    let sub_cmd = cmd.find_subcommand_mut(sub).expect("known subcommand").clone();
    sub_cmd.bin_name(format!("jscc {sub}")).error(ErrorKind::MissingRequiredArgument, message)
}

/// Outcome of [`run`]: either a usage problem (exit code 2) or a failure
/// while running (exit code 1).
#[derive(Debug)]
pub enum CliFailure {
    Usage(clap::Error),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CliFailure {
    fn from(e: anyhow::Error) -> Self {
        CliFailure::Run(e)
    }
}

pub fn run(cli: Cli) -> Result<(), CliFailure> {
    match cli.command {
        Command::SweepPb(a) => run_sweep("sweep-pb", Mode::SteadyState, a, Some("pb")),
        Command::SweepDensity(a) => run_sweep("sweep-density", Mode::SteadyState, a, Some("density")),
        Command::SweepDelay(a) => run_sweep("sweep-delay", Mode::SteadyState, a, Some("delay")),
        Command::Transient(a) => run_sweep("transient", Mode::Transient, a, None),
        Command::Dynamic(a) => run_sweep("dynamic", Mode::Dynamic, a, None),
        Command::CodebookDump(a) => dump(a),
    }
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_sweep(sub: &str, mode: Mode, a: RunArgs, swept: Option<&str>) -> Result<(), CliFailure> {
    let given = |name: &str| match name {
        "pb" => a.pb.is_some(),
        "density" => a.density.is_some(),
        _ => a.delay.is_some(),
    };
    if let Some(name) = swept {
        if !given(name) {
            return Err(CliFailure::Usage(usage_error(
                sub,
                format!("the following required argument was not provided: --{name} <LIST>"),
            )));
        }
    }
    let experiment = build_experiment(mode, &a).map_err(|e| CliFailure::Usage(usage_error(sub, format!("{e:#}"))))?;
    let rows = run_experiment(&experiment).map_err(|e| match e {
        crate::SimError::Core(jscc_core::Error::Parameter(msg)) => CliFailure::Usage(usage_error(sub, msg)),
        other => CliFailure::Run(other.into()),
    })?;
    let mut out = open_out(a.out.as_deref())?;
    write_csv(&rows, &mut out).context("writing results")?;
    out.flush().context("writing results")?;
    write_side_outputs(&experiment, &a)?;
    Ok(())
}

fn build_experiment(mode: Mode, a: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let steady = mode == Mode::SteadyState;
    let default_schemes = if steady { "punctured" } else { "legacy,punctured" };
    let knowledge: Vec<Knowledge> = match (&a.knowledge, steady) {
        (Some(k), false) => parse_named_list(k)?,
        (Some(_), true) => bail!("--knowledge applies to transient and dynamic runs only"),
        (None, false) => vec![Knowledge::Learned, Knowledge::Perfect],
        (None, true) => vec![Knowledge::Perfect],
    };
    let (packets, sequences) = match mode {
        Mode::SteadyState => (100_000, 10),
        Mode::Transient => (5_000, 500),
        Mode::Dynamic => (10_000, 500),
    };
    let base = SequenceConfig {
        n: a.n,
        states: a.states,
        messages: a.messages,
        check_interval: a.tc,
        alpha: a.alpha,
        window: a.window,
        pilot_packets: a.pilot,
        packets: a.packets.unwrap_or(packets),
        base_seed: a.seed,
        mode,
        knowledge: knowledge[0],
        ..SequenceConfig::default()
    };
    Ok(ExperimentConfig {
        schemes: parse_named_list(a.schemes.as_deref().unwrap_or(default_schemes))?,
        decoders: parse_named_list::<DecoderKind>(a.decoders.as_deref().unwrap_or("delayed"))?,
        pbs: parse_f64_list(a.pb.as_deref().unwrap_or("0.05"))?,
        densities: parse_f64_list(a.density.as_deref().unwrap_or("0.125"))?,
        delays: parse_usize_list(a.delay.as_deref().unwrap_or("1"))?,
        knowledge,
        base,
        sequences: a.sequences.unwrap_or(sequences),
        bucket: a.bucket,
        per_sequence: a.per_sequence,
    })
}

fn write_side_outputs(experiment: &ExperimentConfig, a: &RunArgs) -> anyhow::Result<()> {
    if a.trace.is_none() && a.snapshot.is_none() {
        return Ok(());
    }
    let points = experiment.points();
    if let Some(path) = &a.trace {
        let mut out = open_out(Some(path))?;
        trace_sequence(&points[0], 0, &mut out).context("writing trace")?;
        out.flush()?;
    }
    if let Some(path) = &a.snapshot {
        let Some(point) = points.iter().find(|p| p.knowledge == Knowledge::Learned) else {
            bail!("--snapshot needs a learning receiver (transient or dynamic with learned knowledge)");
        };
        let outcome = jscc_core::sim::run_sequence(point, 0)?;
        let estimator = outcome.estimator.expect("learning receiver keeps its estimator");
        let mut out = open_out(Some(path))?;
        write_snapshot(&EstimatorSnapshot::from(&estimator), &mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn dump(a: DumpArgs) -> Result<(), CliFailure> {
    let Some(scheme) = a.scheme else {
        return Err(CliFailure::Usage(usage_error(
            "codebook-dump",
            "the following required argument was not provided: --scheme <SCHEME>",
        )));
    };
    let config = SequenceConfig {
        n: a.n,
        states: a.states,
        messages: a.messages,
        density: a.density,
        base_seed: a.seed,
        scheme,
        ..SequenceConfig::default()
    };
    let usage = |e: jscc_core::Error| CliFailure::Usage(usage_error("codebook-dump", e));
    let matrix = sequence_matrix(&config, 0).map_err(usage)?;
    let codec = SchemeCodec::build(scheme, a.states, a.messages, a.n, Some(&matrix), 2).map_err(usage)?;
    if a.context >= a.states {
        return Err(usage(jscc_core::Error::InvalidState {
            state: a.context,
            states: a.states,
        }));
    }
    // Packet 1 is a data packet of every scheme; packet 0 has no context.
    let book = codec.codebook(1, Some(a.context)).map_err(usage)?;
    let mut out = open_out(a.out.as_deref())?;
    write_codebook(book, &mut out).context("writing codebook")?;
    out.flush().context("writing codebook")?;
    if let Some(path) = &a.matrix_out {
        let mut m = open_out(Some(path))?;
        write_matrix(&matrix, &mut m).context("writing matrix")?;
        m.flush().context("writing matrix")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let flags = config_flags("# sweep\npb = 0.01:0.05:0.02\nper_sequence\n\nseed=3 # base\n").unwrap();
        assert_eq!(flags, vec!["--pb=0.01:0.05:0.02", "--per-sequence", "--seed=3"]);
        assert!(config_flags("=3").is_err());
        assert!(config_flags("config=x").is_err());
    }

    #[test]
    fn command_line_overrides_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "pb=0.01\nseed=7\npackets=10\n").unwrap();
        let cli = parse_args(["jscc", "sweep-pb", "--config", path.to_str().unwrap(), "--seed", "9"]).unwrap();
        let Command::SweepPb(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.pb.as_deref(), Some("0.01"));
        assert_eq!(a.seed, 9);
        assert_eq!(a.packets, Some(10));
    }

    #[test]
    fn unknown_config_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "bogus=1\n").unwrap();
        assert!(parse_args(["jscc", "sweep-pb", "--config", path.to_str().unwrap()]).is_err());
    }

    #[test]
    fn scheme_alias_and_defaults() {
        let cli = parse_args(["jscc", "transient", "--scheme", "legacy"]).unwrap();
        let Command::Transient(a) = cli.command else { panic!("wrong subcommand") };
        let e = build_experiment(Mode::Transient, &a).unwrap();
        assert_eq!(e.schemes, vec![Scheme::Legacy]);
        assert_eq!(e.knowledge, vec![Knowledge::Learned, Knowledge::Perfect]);
        assert_eq!(e.base.packets, 5_000);
    }
}

//! Parameter sweeps: every combination of the swept values is one sweep
//! point, each point runs `sequences` independent packet sequences, and the
//! packet errors are pooled per point (steady state) or per packet bucket
//! (transient and dynamic runs).

use std::io::Write;
use std::time::{Duration, Instant};

use jscc_core::codec::Scheme;
use jscc_core::sim::{run_sequence, DecoderKind, Knowledge, Mode, SequenceConfig, SequenceOutcome};
use rayon::prelude::*;

use crate::error::SimResult;

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "JSCC_THREADS";

pub const DEFAULT_BUCKET: usize = 100;

pub const CSV_HEADER: [&str; 17] = [
    "mode", "scheme", "decoder", "n", "S", "M", "pb", "density", "delay", "tc", "alpha", "window", "seq",
    "bucket", "packets", "errors", "per",
];

/// A sweep: the fields of `base` that are not swept, plus the swept lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub base: SequenceConfig,
    pub schemes: Vec<Scheme>,
    pub decoders: Vec<DecoderKind>,
    pub pbs: Vec<f64>,
    pub densities: Vec<f64>,
    pub delays: Vec<usize>,
    pub knowledge: Vec<Knowledge>,
    pub sequences: usize,
    /// Packets per bucket in transient and dynamic runs.
    pub bucket: usize,
    /// Also emit one row per sequence next to the pooled rows.
    pub per_sequence: bool,
}

impl ExperimentConfig {
    /// A single-point experiment at `base`.
    pub fn single(base: SequenceConfig, sequences: usize) -> Self {
        Self {
            schemes: vec![base.scheme],
            decoders: vec![base.decoder],
            pbs: vec![base.pb],
            densities: vec![base.density],
            delays: vec![base.delay],
            knowledge: vec![base.knowledge],
            base,
            sequences,
            bucket: DEFAULT_BUCKET,
            per_sequence: false,
        }
    }

    /// Sequence configurations of every sweep point, in output order.
    pub fn points(&self) -> Vec<SequenceConfig> {
        let mut points = Vec::new();
        for &knowledge in &self.knowledge {
            for &scheme in &self.schemes {
                for &decoder in &self.decoders {
                    for &density in &self.densities {
                        for &pb in &self.pbs {
                            for &delay in &self.delays {
                                points.push(SequenceConfig {
                                    scheme,
                                    decoder,
                                    density,
                                    pb,
                                    delay,
                                    knowledge,
                                    ..self.base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        points
    }

    fn validate(&self) -> SimResult<()> {
        if self.sequences == 0 {
            return Err(jscc_core::Error::Parameter("at least one sequence is needed".into()).into());
        }
        if self.bucket == 0 {
            return Err(jscc_core::Error::Parameter("bucket width must be positive".into()).into());
        }
        for point in self.points() {
            point.validate()?;
        }
        Ok(())
    }
}

/// One output line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub config: SequenceConfig,
    /// Sequence index, or `None` for rows pooled over all sequences.
    pub seq: Option<usize>,
    /// Bucket index for transient and dynamic runs.
    pub bucket: Option<usize>,
    pub packets: u64,
    pub errors: u64,
    /// Summed run time of the contributing sequences. Not written to CSV.
    pub wall_time: Duration,
}

impl ResultRow {
    pub fn per(&self) -> f64 {
        if self.packets == 0 {
            0.0
        } else {
            self.errors as f64 / self.packets as f64
        }
    }

    /// Mode label: steady state is always run with perfect knowledge, and
    /// transient or dynamic reference curves with perfect knowledge carry a
    /// `-perfect` suffix.
    pub fn mode_label(&self) -> String {
        match (self.config.mode, self.config.knowledge) {
            (Mode::SteadyState, _) | (_, Knowledge::Learned) => self.config.mode.to_string(),
            (mode, Knowledge::Perfect) => format!("{mode}-perfect"),
        }
    }

    pub fn csv_record(&self) -> Vec<String> {
        let c = &self.config;
        vec![
            self.mode_label(),
            c.scheme.to_string(),
            c.decoder.to_string(),
            c.n.to_string(),
            c.states.to_string(),
            c.messages.to_string(),
            c.pb.to_string(),
            c.density.to_string(),
            c.effective_delay().to_string(),
            c.check_interval.to_string(),
            c.alpha.to_string(),
            c.window.to_string(),
            self.seq.map_or_else(|| "all".to_string(), |s| s.to_string()),
            self.bucket.map_or_else(String::new, |b| b.to_string()),
            self.packets.to_string(),
            self.errors.to_string(),
            self.per().to_string(),
        ]
    }
}

/// Writes the header and every row as CSV.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> SimResult<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.csv_record())?;
    }
    writer.flush()?;
    Ok(())
}

/// Worker count from [`THREADS_ENV`], defaulting to the available cores.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

struct Run {
    outcome: SequenceOutcome,
    elapsed: Duration,
}

/// Runs every sweep point and returns the pooled (and optionally
/// per-sequence) rows in sweep order. Output is independent of the thread
/// count.
pub fn run_experiment(config: &ExperimentConfig) -> SimResult<Vec<ResultRow>> {
    config.validate()?;
    let points = config.points();
    let units: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.sequences).map(move |s| (p, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build()?;
    let runs: Vec<Run> = pool.install(|| {
        units
            .par_iter()
            .map(|&(p, s)| {
                let start = Instant::now();
                let outcome = run_sequence(&points[p], s)?;
                Ok(Run {
                    outcome,
                    elapsed: start.elapsed(),
                })
            })
            .collect::<SimResult<Vec<Run>>>()
    })?;

    let mut rows = Vec::new();
    for (p, point) in points.iter().enumerate() {
        let runs = &runs[p * config.sequences..(p + 1) * config.sequences];
        let bucketed = point.mode != Mode::SteadyState;
        rows.extend(pool_rows(point, None, runs, bucketed, config.bucket));
        if config.per_sequence {
            for (s, run) in runs.iter().enumerate() {
                rows.extend(pool_rows(point, Some(s), std::slice::from_ref(run), bucketed, config.bucket));
            }
        }
    }
    Ok(rows)
}

fn pool_rows(point: &SequenceConfig, seq: Option<usize>, runs: &[Run], bucketed: bool, width: usize) -> Vec<ResultRow> {
    let wall_time = runs.iter().map(|r| r.elapsed).sum();
    let row = |bucket: Option<usize>, packets: u64, errors: u64| ResultRow {
        config: point.clone(),
        seq,
        bucket,
        packets,
        errors,
        wall_time,
    };
    if !bucketed {
        let packets = runs.iter().map(|r| r.outcome.packets()).sum();
        let errors = runs.iter().map(|r| r.outcome.packet_errors).sum();
        return vec![row(None, packets, errors)];
    }
    let len = runs.iter().map(|r| r.outcome.errors.len()).max().unwrap_or(0);
    (0..len.div_ceil(width))
        .map(|b| {
            let range = b * width..((b + 1) * width).min(len);
            let mut packets = 0;
            let mut errors = 0;
            for run in runs {
                let e = &run.outcome.errors;
                let slice = &e[range.start.min(e.len())..range.end.min(e.len())];
                packets += slice.len() as u64;
                errors += slice.iter().filter(|&&x| x).count() as u64;
            }
            row(Some(b), packets, errors)
        })
        .collect()
}

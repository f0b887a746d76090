//! Plain-text and CSV dumps: transition matrices, codebooks, estimator
//! snapshots and per-packet traces.

use std::io::{BufRead, Write};

use jscc_core::codec::Codebook;
use jscc_core::estimation::EstimatorState;
use jscc_core::math::entropy_bits;
use jscc_core::sim::{run_sequence_observed, SequenceConfig, SequenceOutcome};
use jscc_core::TransitionMatrix;

use crate::error::{SimError, SimResult};

const PB_KEY: &str = "pb_estimate";

/// Writes one matrix row per line, entries separated by single spaces, in
/// shortest round-trip decimal form.
pub fn write_matrix<W: Write>(matrix: &TransitionMatrix, out: &mut W) -> SimResult<()> {
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn parse_matrix_lines<'a, I>(lines: I) -> SimResult<TransitionMatrix>
where
    I: IntoIterator<Item = (usize, &'a str)>,
{
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let row = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>().map_err(|_| SimError::Format {
                    line: line_no,
                    detail: format!("'{v}' is not a number"),
                })
            })
            .collect::<SimResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(TransitionMatrix::from_rows(&rows)?)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses the format written by [`write_matrix`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_matrix(text: &str) -> SimResult<TransitionMatrix> {
    parse_matrix_lines(content_lines(text))
}

pub fn read_matrix<R: BufRead>(mut input: R) -> SimResult<TransitionMatrix> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_matrix(&text)
}

/// Writes `state,message,codeword_bits` rows; states excluded from the
/// codebook have no rows.
pub fn write_codebook<W: Write>(book: &Codebook, out: W) -> SimResult<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["state", "message", "codeword_bits"])?;
    for (state, message, word) in book.entries() {
        writer.write_record([state.to_string(), message.to_string(), word.to_bit_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Current estimates of a learning receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSnapshot {
    pub pb_estimate: f64,
    pub transitions: TransitionMatrix,
}

impl From<&EstimatorState> for EstimatorSnapshot {
    fn from(state: &EstimatorState) -> Self {
        Self {
            pb_estimate: state.pb_estimate(),
            transitions: state.transition_estimate(),
        }
    }
}

/// Writes a `pb_estimate=<value>` line followed by the matrix.
pub fn write_snapshot<W: Write>(snapshot: &EstimatorSnapshot, out: &mut W) -> SimResult<()> {
    writeln!(out, "{PB_KEY}={}", snapshot.pb_estimate)?;
    write_matrix(&snapshot.transitions, out)
}

pub fn parse_snapshot(text: &str) -> SimResult<EstimatorSnapshot> {
    let mut lines = content_lines(text);
    let (line_no, first) = lines.next().ok_or(SimError::Format {
        line: 1,
        detail: "empty snapshot".into(),
    })?;
    let value = first
        .strip_prefix(PB_KEY)
        .and_then(|rest| rest.trim_start().strip_prefix('='))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| SimError::Format {
            line: line_no,
            detail: format!("expected '{PB_KEY}=<value>'"),
        })?;
    Ok(EstimatorSnapshot {
        pb_estimate: value,
        transitions: parse_matrix_lines(lines)?,
    })
}

/// Runs sequence `index` of `config` and writes one trace row per packet:
/// `t,true_state,true_msg,est_state,est_msg,posterior_entropy` (entropy in
/// bits of the state posterior behind the decision).
pub fn trace_sequence<W: Write>(config: &SequenceConfig, index: usize, out: W) -> SimResult<SequenceOutcome> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["t", "true_state", "true_msg", "est_state", "est_msg", "posterior_entropy"])?;
    let mut failure = None;
    let outcome = run_sequence_observed(config, index, |p| {
        if failure.is_some() {
            return;
        }
        let record = [
            p.t.to_string(),
            p.true_state.to_string(),
            p.true_message.to_string(),
            p.est_state.to_string(),
            p.est_message.to_string(),
            entropy_bits(p.posterior).to_string(),
        ];
        if let Err(e) = writer.write_record(record) {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    writer.flush()?;
    Ok(outcome)
}

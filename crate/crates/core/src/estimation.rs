//! Online estimates of the channel flip probability and of the source
//! transition matrix over a sliding window of packets.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{distance_unchecked, BitWord};
use crate::error::{parameter, Error, Result};
use crate::source::TransitionMatrix;

/// Window length used when none is given.
pub const DEFAULT_WINDOW: usize = 1000;
/// Additive smoothing constant used when none is given.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Fraction of flipped bits over known (sent, received) pairs.
pub fn estimate_pb_pilot(observations: &[(BitWord, BitWord)]) -> Result<f64> {
    if observations.is_empty() {
        return Err(parameter("pilot estimate needs at least one observation"));
    }
    let mut flips = 0usize;
    let mut bits = 0usize;
    for (sent, received) in observations {
        if sent.len() != received.len() {
            return Err(Error::LengthMismatch {
                expected: sent.len(),
                actual: received.len(),
            });
        }
        flips += distance_unchecked(sent, received);
        bits += sent.len();
    }
    if bits == 0 {
        return Err(parameter("pilot words are empty"));
    }
    Ok(flips as f64 / bits as f64)
}

/// Receiver-side learning state.
///
/// Transition counts always equal the tally of the transitions held in the
/// window; the flip estimate is the flip ratio over the per-packet
/// observations held in its own window of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    states: usize,
    window: usize,
    alpha: f64,
    transitions: VecDeque<(usize, usize)>,
    counts: Vec<u64>,
    flip_window: VecDeque<(u32, u32)>,
    window_flips: u64,
    window_bits: u64,
    pilot_flips: u64,
    pilot_bits: u64,
}

impl EstimatorState {
    pub fn new(states: usize, window: usize, alpha: f64) -> Result<Self> {
        if states == 0 {
            return Err(parameter("estimator needs at least one state"));
        }
        if window == 0 {
            return Err(parameter("window length must be positive"));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(parameter(format!("smoothing constant {alpha} must be positive")));
        }
        Ok(Self {
            states,
            window,
            alpha,
            transitions: VecDeque::with_capacity(window + 1),
            counts: vec![0; states * states],
            flip_window: VecDeque::with_capacity(window + 1),
            window_flips: 0,
            window_bits: 0,
            pilot_flips: 0,
            pilot_bits: 0,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Transition counts `N[from][to]`, row-major.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Transitions currently in the window, oldest first.
    pub fn window_transitions(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.transitions.iter()
    }

    /// Cumulative (flips, bits) seen during the pilot phase.
    pub fn pilot_stats(&self) -> (u64, u64) {
        (self.pilot_flips, self.pilot_bits)
    }

    /// Appends a transition, evicting the oldest once the window is full.
    pub fn observe_transition(&mut self, from: usize, to: usize) -> Result<()> {
        for s in [from, to] {
            if s >= self.states {
                return Err(Error::InvalidState {
                    state: s,
                    states: self.states,
                });
            }
        }
        self.transitions.push_back((from, to));
        self.counts[from * self.states + to] += 1;
        if self.transitions.len() > self.window {
            let (a, b) = self.transitions.pop_front().expect("window is non-empty");
            self.counts[a * self.states + b] -= 1;
        }
        Ok(())
    }

    /// `T[i][j] = (N[i][j] + alpha) / sum_k (N[i][k] + alpha)`.
    pub fn transition_estimate(&self) -> TransitionMatrix {
        let s = self.states;
        let mut entries = Vec::with_capacity(s * s);
        for row in self.counts.chunks_exact(s) {
            let total: u64 = row.iter().sum();
            let denom = total as f64 + s as f64 * self.alpha;
            entries.extend(row.iter().map(|&c| (c as f64 + self.alpha) / denom));
        }
        TransitionMatrix::from_entries_unchecked(s, entries)
    }

    fn push_flips(&mut self, flips: usize, bits: usize) {
        self.flip_window.push_back((flips as u32, bits as u32));
        self.window_flips += flips as u64;
        self.window_bits += bits as u64;
        if self.flip_window.len() > self.window {
            let (f, b) = self.flip_window.pop_front().expect("window is non-empty");
            self.window_flips -= f as u64;
            self.window_bits -= b as u64;
        }
    }

    /// Records a pilot word whose transmitted content the receiver knows.
    pub fn record_pilot(&mut self, sent: &BitWord, received: &BitWord) -> Result<()> {
        if sent.len() != received.len() {
            return Err(Error::LengthMismatch {
                expected: sent.len(),
                actual: received.len(),
            });
        }
        let flips = distance_unchecked(sent, received);
        self.pilot_flips += flips as u64;
        self.pilot_bits += sent.len() as u64;
        self.push_flips(flips, sent.len());
        Ok(())
    }

    /// Adds the flips between a received word and the re-encoding of its
    /// decoded content. Decoding errors bias this proxy low.
    pub fn refresh_pb(&mut self, received: &BitWord, reencoded: &BitWord) -> Result<()> {
        if received.len() != reencoded.len() {
            return Err(Error::LengthMismatch {
                expected: reencoded.len(),
                actual: received.len(),
            });
        }
        self.push_flips(distance_unchecked(received, reencoded), received.len());
        Ok(())
    }

    /// Current flip-probability estimate, 0 before any observation.
    pub fn pb_estimate(&self) -> f64 {
        if self.window_bits == 0 {
            0.0
        } else {
            self.window_flips as f64 / self.window_bits as f64
        }
    }
}

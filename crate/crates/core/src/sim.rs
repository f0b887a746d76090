//! One Monte Carlo packet sequence: source, encoder, channel, decoder and
//! (optionally) online learning, with deterministic seeding.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{transmit, BitWord};
use crate::codec::{log2_exact, Codebook, Scheme, SchemeCodec};
use crate::decoder::{
    min_distance_decode, nearest_message, state_log_likelihoods, window_posterior, BeliefState,
    ChannelModel, Emission,
};
use crate::error::{parameter, Error, Result};
use crate::estimation::{EstimatorState, DEFAULT_ALPHA, DEFAULT_WINDOW};
use crate::math::argmax;
use crate::source::{
    dynamic_transition, generate_sparse_transition, nonzeros_per_row, sample_index,
    stationary_distribution, step, TransitionMatrix,
};

/// Smallest flip probability handed to the decoder while learning, so that a
/// lucky noiseless pilot phase does not switch it to exact matching.
pub const LEARNED_PB_FLOOR: f64 = 1e-6;

/// Pilot packets sent before the data packets when the receiver learns.
pub const DEFAULT_PILOT_PACKETS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecoderKind {
    MinDistance,
    Map,
    Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Fixed source, receiver knows `T` and `p_b`, initial state drawn from
    /// the stationary law.
    SteadyState,
    /// Fixed source, receiver starts from nothing; uniform initial state.
    Transient,
    /// Source matrix slides linearly from `T1` to `T2` over the sequence.
    Dynamic,
}

/// What the receiver knows about the source and the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Knowledge {
    Perfect,
    Learned,
}

/// Which transitions feed the transition-matrix estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionFeed {
    /// The receiver's own hard state decisions.
    Decoded,
    /// The true source states, for estimator-only studies.
    GroundTruth,
}

macro_rules! named_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(&self) -> &'static str {
                match self {
                    $($variant => $name,)+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(parameter(format!(concat!("unknown ", $what, " '{}'"), other))),
                }
            }
        }
    };
}

named_enum!(DecoderKind, "decoder",
    DecoderKind::MinDistance => "min-distance",
    DecoderKind::Map => "map",
    DecoderKind::Delayed => "delayed",
);
named_enum!(Mode, "mode",
    Mode::SteadyState => "steady",
    Mode::Transient => "transient",
    Mode::Dynamic => "dynamic",
);
named_enum!(Knowledge, "knowledge",
    Knowledge::Perfect => "perfect",
    Knowledge::Learned => "learned",
);

/// Everything needed to simulate one packet sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    pub n: usize,
    pub states: usize,
    pub messages: usize,
    pub pb: f64,
    pub density: f64,
    pub scheme: Scheme,
    pub decoder: DecoderKind,
    /// Future packets used by the delayed decoder.
    pub delay: usize,
    /// Check-packet interval of the conditional scheme.
    pub check_interval: usize,
    pub alpha: f64,
    pub window: usize,
    pub packets: usize,
    pub base_seed: u64,
    pub mode: Mode,
    pub knowledge: Knowledge,
    pub pilot_packets: usize,
    pub feed: TransitionFeed,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            n: 20,
            states: 32,
            messages: 32,
            pb: 0.05,
            density: 0.125,
            scheme: Scheme::Punctured,
            decoder: DecoderKind::Delayed,
            delay: 1,
            check_interval: 2,
            alpha: DEFAULT_ALPHA,
            window: DEFAULT_WINDOW,
            packets: 100_000,
            base_seed: 0,
            mode: Mode::SteadyState,
            knowledge: Knowledge::Perfect,
            pilot_packets: DEFAULT_PILOT_PACKETS,
            feed: TransitionFeed::Decoded,
        }
    }
}

impl SequenceConfig {
    pub fn validate(&self) -> Result<()> {
        log2_exact(self.states, "state count")?;
        log2_exact(self.messages, "message count")?;
        if !(0.0..=1.0).contains(&self.pb) {
            return Err(parameter(format!("flip probability {} outside [0, 1]", self.pb)));
        }
        nonzeros_per_row(self.states, self.density)?;
        if self.packets == 0 {
            return Err(parameter("a sequence needs at least one packet"));
        }
        if self.check_interval == 0 {
            return Err(parameter("check packet interval must be at least 1"));
        }
        if self.mode != Mode::SteadyState && self.scheme.uses_compression() {
            return Err(parameter(format!(
                "the {} scheme needs known source statistics and cannot run in {} mode",
                self.scheme, self.mode
            )));
        }
        if self.mode == Mode::SteadyState && self.knowledge == Knowledge::Learned {
            return Err(parameter("steady-state runs give the receiver the true statistics"));
        }
        if self.knowledge == Knowledge::Learned
            && (self.window == 0 || !self.alpha.is_finite() || self.alpha <= 0.0)
        {
            return Err(parameter("learning needs a positive window and smoothing constant"));
        }
        Ok(())
    }

    /// Future packets the decoder waits for.
    pub fn effective_delay(&self) -> usize {
        match self.decoder {
            DecoderKind::Delayed => self.delay,
            _ => 0,
        }
    }
}

/// Seed of sequence `index`.
pub fn sequence_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// Independent random streams derived from one sequence seed.
struct Streams {
    matrix: ChaCha8Rng,
    state: ChaCha8Rng,
    message: ChaCha8Rng,
    channel: ChaCha8Rng,
    pilot: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self {
            matrix: stream(0),
            state: stream(1),
            message: stream(2),
            channel: stream(3),
            pilot: stream(4),
        }
    }
}

enum SourceModel {
    Fixed(TransitionMatrix),
    Dynamic {
        first: TransitionMatrix,
        second: TransitionMatrix,
        total: u64,
    },
}

impl SourceModel {
    /// Matrix that governs the transition out of packet `t`.
    fn at(&self, t: u64) -> Result<TransitionMatrix> {
        match self {
            SourceModel::Fixed(m) => Ok(m.clone()),
            SourceModel::Dynamic { first, second, total } => {
                dynamic_transition(first, second, t.min(*total), *total)
            }
        }
    }

    fn fixed(&self) -> Option<&TransitionMatrix> {
        match self {
            SourceModel::Fixed(m) => Some(m),
            SourceModel::Dynamic { .. } => None,
        }
    }
}

/// Per-packet view handed to a [`run_sequence_observed`] observer.
#[derive(Debug)]
pub struct PacketTrace<'a> {
    pub t: u64,
    pub true_state: usize,
    pub true_message: usize,
    pub est_state: usize,
    pub est_message: usize,
    /// State posterior behind the decision (smoothed for delayed decoding).
    pub posterior: &'a [f64],
    /// Filtered posterior and next prior; absent for minimum distance.
    pub filtered: Option<&'a [f64]>,
    pub next_prior: Option<&'a [f64]>,
    pub log_evidence: Option<f64>,
}

/// Packet error indicators of one sequence (pilot packets excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    pub errors: Vec<bool>,
    pub packet_errors: u64,
    /// Learning state after the last packet, when the receiver learns.
    pub estimator: Option<EstimatorState>,
}

impl SequenceOutcome {
    pub fn packets(&self) -> u64 {
        self.errors.len() as u64
    }

    pub fn per(&self) -> f64 {
        self.packet_errors as f64 / self.packets() as f64
    }
}

/// Source matrix of sequence `index` (the starting matrix in dynamic mode).
pub fn sequence_matrix(config: &SequenceConfig, index: usize) -> Result<TransitionMatrix> {
    let mut streams = Streams::new(sequence_seed(config.base_seed, index));
    generate_sparse_transition(config.states, config.density, &mut streams.matrix)
}

/// Runs sequence `index` of `config`.
pub fn run_sequence(config: &SequenceConfig, index: usize) -> Result<SequenceOutcome> {
    run_sequence_observed(config, index, |_| {})
}

struct Transmitted {
    states: Vec<usize>,
    messages: Vec<usize>,
    received: Vec<BitWord>,
}

fn transmit_sequence(
    config: &SequenceConfig,
    source: &SourceModel,
    codec: &SchemeCodec,
    streams: &mut Streams,
) -> Result<Transmitted> {
    let packets = config.packets;
    let mut states = Vec::with_capacity(packets);
    let mut messages = Vec::with_capacity(packets);
    let mut received = Vec::with_capacity(packets);
    let first_state = match (config.mode, source.fixed()) {
        (Mode::SteadyState, Some(t)) => sample_index(&stationary_distribution(t)?, &mut streams.state),
        _ => streams.state.gen_range(0..config.states),
    };
    for t in 0..packets as u64 {
        let (state, message) = if t == 0 {
            (first_state, streams.message.gen_range(0..config.messages))
        } else {
            let prev = *states.last().expect("t > 0");
            let matrix = source.at(t - 1)?;
            let next = step(prev, t, &matrix, config.messages, &mut streams.state, &mut streams.message)?;
            (next.state, next.message)
        };
        let x = codec.encode(t, states.last().copied(), state, message)?;
        received.push(transmit(&x, config.pb, &mut streams.channel));
        states.push(state);
        messages.push(message);
    }
    Ok(Transmitted {
        states,
        messages,
        received,
    })
}

/// Emission of packet `t` when it sits after the head of a decoding window.
fn future_emission(
    codec: &SchemeCodec,
    t: u64,
    y: &BitWord,
    channel: &ChannelModel,
    states: usize,
) -> Result<Emission> {
    if codec.is_context_free(t) {
        let book = codec.codebook(t, None)?;
        return Ok(Emission::Independent(state_log_likelihoods(y, book, channel)?));
    }
    let contexts = codec.context_codebooks().expect("context-dependent codec");
    let mut table = Vec::with_capacity(states * states);
    for book in contexts {
        table.extend(state_log_likelihoods(y, book, channel)?);
    }
    Ok(Emission::Pairwise(table))
}

/// Runs sequence `index`, calling `observer` after every decoded packet.
pub fn run_sequence_observed<F>(config: &SequenceConfig, index: usize, mut observer: F) -> Result<SequenceOutcome>
where
    F: FnMut(&PacketTrace<'_>),
{
    config.validate()?;
    let mut streams = Streams::new(sequence_seed(config.base_seed, index));
    let source = match config.mode {
        Mode::SteadyState | Mode::Transient => SourceModel::Fixed(generate_sparse_transition(
            config.states,
            config.density,
            &mut streams.matrix,
        )?),
        Mode::Dynamic => SourceModel::Dynamic {
            first: generate_sparse_transition(config.states, config.density, &mut streams.matrix)?,
            second: generate_sparse_transition(config.states, config.density, &mut streams.matrix)?,
            total: config.packets as u64,
        },
    };
    let codec = SchemeCodec::build(
        config.scheme,
        config.states,
        config.messages,
        config.n,
        source.fixed(),
        config.check_interval,
    )?;
    let sent = transmit_sequence(config, &source, &codec, &mut streams)?;

    let learned = config.knowledge == Knowledge::Learned;
    let mut estimator = if learned {
        let mut est = EstimatorState::new(config.states, config.window, config.alpha)?;
        // The legacy codeword of the all-zero payload is the all-zero word.
        let pilot = BitWord::zeros(config.n);
        for _ in 0..config.pilot_packets {
            est.record_pilot(&pilot, &transmit(&pilot, config.pb, &mut streams.pilot))?;
        }
        Some(est)
    } else {
        None
    };

    let mut model = match (&estimator, config.mode) {
        (Some(est), _) => est.transition_estimate(),
        (None, _) => source.at(0)?,
    };
    let mut belief = match (config.mode, &estimator) {
        (Mode::SteadyState, None) => BeliefState::new(stationary_distribution(&model)?, 0)?,
        _ => BeliefState::uniform(config.states),
    };

    let delay = config.effective_delay();
    let packets = config.packets as u64;
    let mut errors = Vec::with_capacity(config.packets);
    let mut packet_errors = 0;
    let mut previous_estimate: Option<usize> = None;
    // Future emissions keyed by packet index; only reused while the channel
    // model is fixed.
    let mut cache: VecDeque<(u64, Emission)> = VecDeque::new();

    for t in 0..packets {
        let ti = t as usize;
        let y = sent.received[ti];
        let pb = match &estimator {
            Some(est) => est.pb_estimate().max(LEARNED_PB_FLOOR),
            None => config.pb,
        };
        let channel = ChannelModel::new(config.n, pb)?;
        let head_book: &Codebook = codec.codebook(t, previous_estimate)?;

        let (state, message, posterior, filtered, log_evidence) = match config.decoder {
            DecoderKind::MinDistance => {
                let r = min_distance_decode(&y, head_book);
                (r.state, r.message, r.state_posterior, None, None)
            }
            DecoderKind::Map | DecoderKind::Delayed => {
                let head = state_log_likelihoods(&y, head_book, &channel)?;
                let last = (t + delay as u64).min(packets - 1);
                if learned {
                    cache.clear();
                }
                while cache.front().is_some_and(|(k, _)| *k <= t) {
                    cache.pop_front();
                }
                for k in t + 1..=last {
                    if !cache.iter().any(|(c, _)| *c == k) {
                        let e = future_emission(&codec, k, &sent.received[k as usize], &channel, config.states)?;
                        cache.push_back((k, e));
                    }
                }
                let future: Vec<&Emission> = cache.iter().map(|(_, e)| e).collect();
                let post = window_posterior(belief.prior(), &head, &future, &model).ok_or_else(|| {
                    Error::Numeric {
                        time: t,
                        detail: format!("every state has zero posterior weight at flip probability {pb}"),
                    }
                })?;
                let state = argmax(&post.marginal);
                let message = nearest_message(&y, head_book, state).ok_or_else(|| Error::Numeric {
                    time: t,
                    detail: format!("posterior mode {state} has no codewords"),
                })?;
                (state, message, post.marginal, Some(post.filtered), Some(post.log_evidence))
            }
        };

        let (true_state, true_message) = (sent.states[ti], sent.messages[ti]);
        let wrong = (state, message) != (true_state, true_message);
        errors.push(wrong);
        packet_errors += wrong as u64;

        if let Some(est) = estimator.as_mut() {
            est.refresh_pb(&y, &head_book.encode(state, message)?)?;
            if t > 0 {
                match config.feed {
                    TransitionFeed::Decoded => {
                        est.observe_transition(previous_estimate.expect("t > 0"), state)?
                    }
                    TransitionFeed::GroundTruth => est.observe_transition(sent.states[ti - 1], true_state)?,
                }
            }
            model = est.transition_estimate();
        } else if matches!(source, SourceModel::Dynamic { .. }) {
            model = source.at(t)?;
        }

        let next_prior = filtered
            .as_ref()
            .map(|f| BeliefState::propagate(f, &model, t + 1));
        observer(&PacketTrace {
            t,
            true_state,
            true_message,
            est_state: state,
            est_message: message,
            posterior: &posterior,
            filtered: filtered.as_deref(),
            next_prior: next_prior.as_ref().map(BeliefState::prior),
            log_evidence,
        });
        if let Some(next) = next_prior {
            belief = next;
        }
        previous_estimate = Some(state);
    }

    Ok(SequenceOutcome {
        errors,
        packet_errors,
        estimator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(scheme: Scheme, decoder: DecoderKind) -> SequenceConfig {
        SequenceConfig {
            scheme,
            decoder,
            packets: 2000,
            base_seed: 11,
            ..SequenceConfig::default()
        }
    }

    #[test]
    fn noiseless_channel_never_errs() {
        for scheme in Scheme::ALL {
            for decoder in [DecoderKind::MinDistance, DecoderKind::Map, DecoderKind::Delayed] {
                let cfg = SequenceConfig {
                    pb: 0.0,
                    ..quick(scheme, decoder)
                };
                let out = run_sequence(&cfg, 0).unwrap();
                assert_eq!(out.packet_errors, 0, "{scheme} {decoder}");
                assert_eq!(out.packets(), 2000);
            }
        }
    }

    #[test]
    fn sequences_are_reproducible_and_distinct() {
        let cfg = quick(Scheme::Punctured, DecoderKind::Delayed);
        assert_eq!(run_sequence(&cfg, 3).unwrap(), run_sequence(&cfg, 3).unwrap());
        assert_ne!(run_sequence(&cfg, 3).unwrap(), run_sequence(&cfg, 4).unwrap());
    }

    #[test]
    fn conservation_of_packets() {
        let cfg = quick(Scheme::Conditional, DecoderKind::Delayed);
        let out = run_sequence(&cfg, 0).unwrap();
        let errs = out.errors.iter().filter(|&&e| e).count() as u64;
        assert_eq!(errs, out.packet_errors);
        assert!(out.per() > 0.0 && out.per() < 1.0);
    }

    #[test]
    fn observer_sees_every_packet() {
        let cfg = quick(Scheme::Legacy, DecoderKind::Map);
        let mut seen = 0u64;
        run_sequence_observed(&cfg, 0, |trace| {
            assert_eq!(trace.t, seen);
            seen += 1;
            assert!((trace.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((trace.next_prior.unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        })
        .unwrap();
        assert_eq!(seen, 2000);
    }

    #[test]
    fn learning_modes_run() {
        for mode in [Mode::Transient, Mode::Dynamic] {
            for knowledge in [Knowledge::Perfect, Knowledge::Learned] {
                let cfg = SequenceConfig {
                    mode,
                    knowledge,
                    density: 0.25,
                    ..quick(Scheme::Punctured, DecoderKind::Delayed)
                };
                let out = run_sequence(&cfg, 1).unwrap();
                assert_eq!(out.packets(), 2000);
            }
        }
    }

    #[test]
    fn invalid_configurations() {
        let bad = [
            SequenceConfig { states: 30, ..SequenceConfig::default() },
            SequenceConfig { pb: 1.2, ..SequenceConfig::default() },
            SequenceConfig { density: 0.01, ..SequenceConfig::default() },
            SequenceConfig { packets: 0, ..SequenceConfig::default() },
            SequenceConfig {
                scheme: Scheme::Stationary,
                mode: Mode::Transient,
                knowledge: Knowledge::Learned,
                ..SequenceConfig::default()
            },
            SequenceConfig { knowledge: Knowledge::Learned, ..SequenceConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(run_sequence(&cfg, 0), Err(Error::Parameter(_))), "{cfg:?}");
        }
    }

    #[test]
    fn names_roundtrip() {
        for d in [DecoderKind::MinDistance, DecoderKind::Map, DecoderKind::Delayed] {
            assert_eq!(d.name().parse::<DecoderKind>().unwrap(), d);
        }
        for m in [Mode::SteadyState, Mode::Transient, Mode::Dynamic] {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("viterbi".parse::<DecoderKind>().is_err());
    }
}

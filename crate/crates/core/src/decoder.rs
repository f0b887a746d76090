//! Minimum-distance, forward MAP and delayed (forward-backward) MAP decoding
//! of packets from a hidden-Markov source.
//!
//! The receiver keeps a prior over source states. Each received word is
//! scored against every codeword of every state; the per-state emission
//! log-probabilities are combined with the prior, and with `d` future packets
//! for delayed decoding, to give the state posterior. The state estimate is
//! its argmax and the message estimate is the closest codeword of that
//! state. All probability arithmetic happens in the log domain.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{distance_unchecked, BitWord};
use crate::codec::Codebook;
use crate::error::{parameter, Error, Result};
use crate::math::{argmax, exp, ln, log_sum_exp, normalize_log};
use crate::source::TransitionMatrix;

/// Log-likelihood of a received word as a function of its Hamming distance
/// to the transmitted codeword, for a BSC with flip probability `pb`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    n: usize,
    pb: f64,
    table: Vec<f64>,
}

impl ChannelModel {
    /// `table[d] = d ln(pb) + (n - d) ln(1 - pb)`, i.e.
    /// `ln((pb / (1 - pb))^d (1 - pb)^n)`. At `pb = 0` or `1` only the exact
    /// match (or exact complement) keeps finite likelihood.
    pub fn new(n: usize, pb: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pb) {
            return Err(parameter(format!("flip probability {pb} outside [0, 1]")));
        }
        let ln_flip = ln(pb);
        let ln_keep = libm::log1p(-pb);
        let term = |count: usize, log_p: f64| if count == 0 { 0.0 } else { count as f64 * log_p };
        let table = (0..=n).map(|d| term(d, ln_flip) + term(n - d, ln_keep)).collect();
        Ok(Self { n, pb, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flip_probability(&self) -> f64 {
        self.pb
    }

    #[inline]
    pub fn log_likelihood(&self, distance: usize) -> f64 {
        self.table[distance]
    }
}

/// `ln p(y | x)` for a BSC with flip probability `pb`.
pub fn word_log_likelihood(y: &BitWord, x: &BitWord, pb: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(ChannelModel::new(y.len(), pb)?.log_likelihood(distance_unchecked(x, y)))
}

fn check_word(y: &BitWord, book: &Codebook, channel: &ChannelModel) -> Result<()> {
    if y.len() != book.n() || channel.n() != book.n() {
        return Err(Error::LengthMismatch {
            expected: book.n(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// `ln((1/M) sum_{x in X(s)} p(y | x))` for one state, `-inf` when the
/// state has no codewords.
fn state_emission(y: &BitWord, words: &[BitWord], messages: usize, channel: &ChannelModel) -> f64 {
    if words.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut histogram = [0u32; 65];
    for x in words {
        histogram[distance_unchecked(x, y)] += 1;
    }
    let hist = &histogram[..=channel.n()];
    let max = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(d, _)| channel.log_likelihood(d))
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(d, &c)| c as f64 * exp(channel.log_likelihood(d) - max))
        .sum();
    max + ln(sum) - ln(messages as f64)
}

/// Emission log-probabilities of `y` for every state of `book`.
pub fn state_log_likelihoods(y: &BitWord, book: &Codebook, channel: &ChannelModel) -> Result<Vec<f64>> {
    check_word(y, book, channel)?;
    Ok((0..book.states())
        .map(|s| state_emission(y, book.state_words(s), book.messages(), channel))
        .collect())
}

/// `ln P(Y = y | S = s)`: the average codeword likelihood over the state's
/// message set.
pub fn emission_log_prob(y: &BitWord, state: usize, book: &Codebook, pb: f64) -> Result<f64> {
    if state >= book.states() {
        return Err(Error::InvalidState {
            state,
            states: book.states(),
        });
    }
    if book.state_words(state).is_empty() {
        return Err(Error::Model(format!("state {state} has no codewords")));
    }
    let channel = ChannelModel::new(book.n(), pb)?;
    check_word(y, book, &channel)?;
    Ok(state_emission(y, book.state_words(state), book.messages(), &channel))
}

/// The receiver's prior over source states before packet `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    prior: Vec<f64>,
    time: u64,
}

impl BeliefState {
    pub fn uniform(states: usize) -> Self {
        Self {
            prior: vec![1.0 / states as f64; states],
            time: 0,
        }
    }

    pub fn new(prior: Vec<f64>, time: u64) -> Result<Self> {
        if prior.is_empty() || prior.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(parameter("prior must be a non-empty non-negative vector"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(parameter(format!("prior sums to {total}, not 1")));
        }
        Ok(Self { prior, time })
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn states(&self) -> usize {
        self.prior.len()
    }

    /// Next-packet prior `p(s) = sum_s' T[s'][s] posterior(s')`.
    pub fn propagate(posterior: &[f64], transition: &TransitionMatrix, time: u64) -> Self {
        let mut prior = transition.propagate(posterior);
        let total: f64 = prior.iter().sum();
        prior.iter_mut().for_each(|p| *p /= total);
        Self { prior, time }
    }
}

/// Outcome of decoding one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub state: usize,
    pub message: usize,
    /// Posterior over states (the smoothed marginal for delayed decoding; an
    /// indicator for minimum-distance decoding).
    pub state_posterior: Vec<f64>,
    /// `ln p(received words | prior)`; `None` for minimum-distance decoding.
    pub log_evidence: Option<f64>,
}

/// Per-packet emission log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Emission {
    /// `ln P(y | s)`, one entry per state.
    Independent(Vec<f64>),
    /// `ln P(y | s_prev, s)`, row-major `[s_prev][s]`, for codebooks that
    /// depend on the previous state.
    Pairwise(Vec<f64>),
}

impl Emission {
    #[inline]
    fn get(&self, states: usize, previous: usize, state: usize) -> f64 {
        match self {
            Emission::Independent(v) => v[state],
            Emission::Pairwise(v) => v[previous * states + state],
        }
    }
}

/// State inference for the packet at the head of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPosterior {
    /// `P(s_t | y_t, ..., y_{t+d})`.
    pub marginal: Vec<f64>,
    /// `P(s_t | y_t)` under the prior alone, which feeds the next prior.
    pub filtered: Vec<f64>,
    pub log_evidence: f64,
}

/// Forward-backward inference of the first state of a window.
///
/// `head` is the emission of the packet being decoded, `future` the
/// emissions of the `d` packets after it. The backward messages are
/// `beta_d = 0` and `beta_{i-1}(s') = ln sum_s T[s'][s] exp(e_i(s', s) +
/// beta_i(s))`, so the marginal `prior(s) e_0(s) beta_0(s)` equals the sum
/// over all `S^(d+1)` state sequences starting in `s` of the sequence prior
/// times the sequence likelihood. Returns `None` if every state ends up
/// with zero weight.
pub fn window_posterior(
    prior: &[f64],
    head: &[f64],
    future: &[&Emission],
    transition: &TransitionMatrix,
) -> Option<WindowPosterior> {
    let states = prior.len();
    let mut beta = vec![0.0; states];
    let mut scratch = vec![0.0; states];
    for emission in future.iter().rev() {
        for (prev, out) in scratch.iter_mut().enumerate() {
            let row = transition.row(prev);
            let max = (0..states)
                .filter(|&s| row[s] > 0.0)
                .map(|s| emission.get(states, prev, s) + beta[s])
                .fold(f64::NEG_INFINITY, f64::max);
            *out = if max == f64::NEG_INFINITY {
                max
            } else {
                let sum: f64 = (0..states)
                    .filter(|&s| row[s] > 0.0)
                    .map(|s| row[s] * exp(emission.get(states, prev, s) + beta[s] - max))
                    .sum();
                max + ln(sum)
            };
        }
        core::mem::swap(&mut beta, &mut scratch);
    }

    let log_prior: Vec<f64> = prior.iter().map(|&p| ln(p)).collect();
    let filtered_log: Vec<f64> = log_prior.iter().zip(head).map(|(p, e)| p + e).collect();
    let (filtered, _) = normalize_log(&filtered_log)?;
    let joint: Vec<f64> = filtered_log.iter().zip(&beta).map(|(f, b)| f + b).collect();
    let (marginal, log_evidence) = normalize_log(&joint)?;
    Some(WindowPosterior {
        marginal,
        filtered,
        log_evidence,
    })
}

/// Closest codeword of `state` to `y`; the lowest message index wins ties.
pub fn nearest_message(y: &BitWord, book: &Codebook, state: usize) -> Option<usize> {
    book.state_words(state)
        .iter()
        .enumerate()
        .min_by_key(|(m, x)| (distance_unchecked(x, y), *m))
        .map(|(m, _)| m)
}

fn decide(
    y: &BitWord,
    book: &Codebook,
    posterior: WindowPosterior,
    transition: &TransitionMatrix,
    time: u64,
) -> Result<(DecodeResult, BeliefState)> {
    let state = argmax(&posterior.marginal);
    let message = nearest_message(y, book, state).ok_or_else(|| Error::Numeric {
        time,
        detail: format!("posterior mode {state} has no codewords"),
    })?;
    let next = BeliefState::propagate(&posterior.filtered, transition, time + 1);
    Ok((
        DecodeResult {
            state,
            message,
            state_posterior: posterior.marginal,
            log_evidence: Some(posterior.log_evidence),
        },
        next,
    ))
}

fn check_model(belief: &BeliefState, book: &Codebook, transition: &TransitionMatrix) -> Result<()> {
    if belief.states() != book.states() || transition.states() != book.states() {
        return Err(parameter(format!(
            "belief has {} states, transition {}, codebook {}",
            belief.states(),
            transition.states(),
            book.states()
        )));
    }
    Ok(())
}

/// Forward MAP decoding of one packet.
///
/// The state posterior is `prior(s) P(y | s)` normalized, the state estimate
/// its argmax and the message estimate the nearest codeword of that state.
/// The returned belief is the posterior pushed through `transition`.
pub fn map_decode(
    y: &BitWord,
    belief: &BeliefState,
    book: &Codebook,
    transition: &TransitionMatrix,
    pb: f64,
) -> Result<(DecodeResult, BeliefState)> {
    delayed_decode(core::slice::from_ref(y), belief, transition, book, pb, 0)
}

/// MAP decoding of the first packet of `window` using the `delay` packets
/// that follow it.
///
/// The decision uses the smoothed marginal `P(s_t | y_t, ..., y_{t+d})`; the
/// next prior is propagated from the filtered posterior `P(s_t | y_t)` so
/// that future packets are not counted twice when the window slides. With
/// `delay = 0` this is exactly [`map_decode`].
pub fn delayed_decode(
    window: &[BitWord],
    belief: &BeliefState,
    transition: &TransitionMatrix,
    book: &Codebook,
    pb: f64,
    delay: usize,
) -> Result<(DecodeResult, BeliefState)> {
    if window.len() != delay + 1 {
        return Err(parameter(format!(
            "delay {delay} needs {} received words, got {}",
            delay + 1,
            window.len()
        )));
    }
    check_model(belief, book, transition)?;
    let channel = ChannelModel::new(book.n(), pb)?;
    let head = state_log_likelihoods(&window[0], book, &channel)?;
    let future: Vec<Emission> = window[1..]
        .iter()
        .map(|y| state_log_likelihoods(y, book, &channel).map(Emission::Independent))
        .collect::<Result<_>>()?;
    let future_refs: Vec<&Emission> = future.iter().collect();
    let posterior = window_posterior(belief.prior(), &head, &future_refs, transition).ok_or_else(|| {
        Error::Numeric {
            time: belief.time(),
            detail: "every state has zero posterior weight".into(),
        }
    })?;
    decide(&window[0], book, posterior, transition, belief.time())
}

/// Codeword-level posterior `P(x | y)` with prior `p(s(x)) / M`, as
/// `words[s][m]`. Summing over a state's codewords gives the state
/// posterior of [`map_decode`].
pub fn codeword_posterior(y: &BitWord, belief: &BeliefState, book: &Codebook, pb: f64) -> Result<Vec<Vec<f64>>> {
    let channel = ChannelModel::new(book.n(), pb)?;
    check_word(y, book, &channel)?;
    let ln_m = ln(book.messages() as f64);
    let logs: Vec<Vec<f64>> = (0..book.states())
        .map(|s| {
            let lp = ln(belief.prior()[s]) - ln_m;
            book.state_words(s)
                .iter()
                .map(|x| lp + channel.log_likelihood(distance_unchecked(x, y)))
                .collect()
        })
        .collect();
    let flat: Vec<f64> = logs.iter().flatten().copied().collect();
    let norm = log_sum_exp(&flat);
    if !norm.is_finite() {
        return Err(Error::Numeric {
            time: belief.time(),
            detail: "every codeword has zero posterior weight".into(),
        });
    }
    Ok(logs
        .into_iter()
        .map(|row| row.into_iter().map(|l| exp(l - norm)).collect())
        .collect())
}

/// Nearest codeword over the whole codebook; ties go to the lowest
/// `(state, message)`.
pub fn min_distance_decode(y: &BitWord, book: &Codebook) -> DecodeResult {
    let mut best = (usize::MAX, 0, 0);
    for s in 0..book.states() {
        for (m, x) in book.state_words(s).iter().enumerate() {
            let d = distance_unchecked(x, y);
            if d < best.0 {
                best = (d, s, m);
            }
        }
    }
    let mut state_posterior = vec![0.0; book.states()];
    state_posterior[best.1] = 1.0;
    DecodeResult {
        state: best.1,
        message: best.2,
        state_posterior,
        log_evidence: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_codebook, Scheme, SideInfo};
    use crate::source::generate_sparse_transition;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn w(s: &str) -> BitWord {
        BitWord::parse(s).unwrap()
    }

    fn repetition_book() -> Codebook {
        Codebook::from_words(Scheme::Legacy, 1, vec![vec![w("000")], vec![w("111")]]).unwrap()
    }

    /// S=2, M=2, n=3 with an explicit codebook.
    fn small_book() -> Codebook {
        Codebook::from_words(
            Scheme::Legacy,
            2,
            vec![vec![w("000"), w("011")], vec![w("101"), w("110")]],
        )
        .unwrap()
    }

    #[test]
    fn word_likelihood_examples() {
        let n = 20;
        let y = BitWord::zeros(n);
        let ll = word_log_likelihood(&y, &y, 0.05).unwrap();
        assert!((ll - 20.0 * 0.95f64.ln()).abs() < 1e-12);
        let x = BitWord::from_raw(0xabcde, n);
        assert!((word_log_likelihood(&y, &x, 0.5).unwrap() - 20.0 * 0.5f64.ln()).abs() < 1e-12);
        let ll = word_log_likelihood(&w("001"), &w("000"), 0.1).unwrap();
        assert!((ll - 0.081f64.ln()).abs() < 1e-12);
        assert!(word_log_likelihood(&w("01"), &w("000"), 0.1).is_err());
    }

    #[test]
    fn boundary_channels_use_exact_matching() {
        assert_eq!(word_log_likelihood(&w("101"), &w("101"), 0.0).unwrap(), 0.0);
        assert_eq!(word_log_likelihood(&w("101"), &w("100"), 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(word_log_likelihood(&w("101"), &w("010"), 1.0).unwrap(), 0.0);
        assert_eq!(word_log_likelihood(&w("101"), &w("111"), 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(ChannelModel::new(3, 1.5).is_err());
    }

    #[test]
    fn likelihood_decreases_with_distance() {
        let ch = ChannelModel::new(20, 0.05).unwrap();
        for d in 0..20 {
            assert!(ch.log_likelihood(d + 1) < ch.log_likelihood(d));
        }
    }

    #[test]
    fn emission_examples() {
        // Singleton state: plain word likelihood.
        let book = repetition_book();
        let y = w("001");
        let e = emission_log_prob(&y, 1, &book, 0.2).unwrap();
        assert!((e - word_log_likelihood(&y, &w("111"), 0.2).unwrap()).abs() < 1e-12);

        // Vanishing noise: only the exact match survives, leaving 1/M.
        let book = small_book();
        let e = emission_log_prob(&w("011"), 0, &book, 1e-12).unwrap();
        assert!((e - 0.5f64.ln()).abs() < 1e-9);

        // Direct summation of the emission formula.
        let pb: f64 = 0.2;
        for y in ["000", "001", "010", "011", "100", "101", "110", "111"] {
            let y = w(y);
            for s in 0..2 {
                let direct: f64 = book
                    .state_words(s)
                    .iter()
                    .map(|x| {
                        let d = (x.raw() ^ y.raw()).count_ones() as i32;
                        (pb / (1.0 - pb)).powi(d) * (1.0 - pb).powi(3)
                    })
                    .sum::<f64>()
                    / 2.0;
                let e = emission_log_prob(&y, s, &book, pb).unwrap();
                assert!((e - direct.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn emission_rejects_empty_state() {
        let book = Codebook::from_words(Scheme::Conditional, 1, vec![vec![w("00")], vec![]]).unwrap();
        assert!(matches!(emission_log_prob(&w("00"), 1, &book, 0.1), Err(Error::Model(_))));
        assert!(emission_log_prob(&w("00"), 2, &book, 0.1).is_err());
    }

    #[test]
    fn hand_computed_posterior() {
        let book = repetition_book();
        let belief = BeliefState::new(vec![0.9, 0.1], 0).unwrap();
        let t = TransitionMatrix::uniform(2);
        let (res, next) = map_decode(&w("001"), &belief, &book, &t, 0.2).unwrap();
        let expected = 0.9 * 0.25 / (0.9 * 0.25 + 0.1 * 0.0625);
        assert!((res.state_posterior[0] - expected).abs() < 1e-12);
        assert!((expected - 0.973).abs() < 1e-3);
        assert_eq!((res.state, res.message), (0, 0));
        assert_eq!(next.time(), 1);
        assert_eq!(next.prior(), &[0.5, 0.5]);
    }

    #[test]
    fn certain_prior_fixes_the_state() {
        let book = build_codebook(Scheme::Legacy, 8, 4, 12, SideInfo::None).unwrap();
        let t = TransitionMatrix::uniform(8);
        let mut prior = vec![0.0; 8];
        prior[5] = 1.0;
        let belief = BeliefState::new(prior, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let y = BitWord::from_raw(rng.gen::<u64>() & 0xfff, 12);
            let (res, _) = map_decode(&y, &belief, &book, &t, 0.1).unwrap();
            assert_eq!(res.state, 5);
            let nearest = (0..4)
                .min_by_key(|&m| (distance_unchecked(&book.encode(5, m).unwrap(), &y), m))
                .unwrap();
            assert_eq!(res.message, nearest);
        }
    }

    #[test]
    fn single_codeword_states_reduce_to_min_distance() {
        // With one codeword per state the flat-prior MAP rule is exactly the
        // nearest-codeword rule.
        let book = build_codebook(Scheme::Legacy, 32, 1, 12, SideInfo::None).unwrap();
        let t = TransitionMatrix::uniform(32);
        let belief = BeliefState::uniform(32);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let y = BitWord::from_raw(rng.gen::<u64>() & 0xfff, 12);
            let (map, _) = map_decode(&y, &belief, &book, &t, 0.07).unwrap();
            let md = min_distance_decode(&y, &book);
            assert_eq!((map.state, map.message), (md.state, md.message));
        }
    }

    #[test]
    fn min_distance_examples() {
        let book = small_book();
        let r = min_distance_decode(&w("101"), &book);
        assert_eq!((r.state, r.message), (1, 0));
        assert_eq!(r.state_posterior, [0.0, 1.0]);
        // 001 is at distance 1 from 000, 011 and 101: lowest (s, m) wins.
        let r = min_distance_decode(&w("001"), &book);
        assert_eq!((r.state, r.message), (0, 0));
        assert!(r.log_evidence.is_none());
    }

    #[test]
    fn min_distance_matches_full_scan() {
        let book = build_codebook(Scheme::Punctured, 32, 32, 20, SideInfo::None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let y = BitWord::from_raw(rng.gen::<u64>() & 0xfffff, 20);
            let mut best = None;
            for s in 0..32 {
                for m in 0..32 {
                    let d = (book.encode(s, m).unwrap().raw() ^ y.raw()).count_ones();
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, s, m));
                    }
                }
            }
            let (_, s, m) = best.unwrap();
            let r = min_distance_decode(&y, &book);
            assert_eq!((r.state, r.message), (s, m));
        }
    }

    /// Literal sum over all `S^(d+1)` state sequences.
    fn enumerate_marginal(
        window: &[BitWord],
        prior: &[f64],
        t: &TransitionMatrix,
        book: &Codebook,
        pb: f64,
    ) -> Vec<f64> {
        let s_count = prior.len();
        let len = window.len();
        let emission = |y: &BitWord, s: usize| -> f64 {
            book.state_words(s)
                .iter()
                .map(|x| {
                    let d = (x.raw() ^ y.raw()).count_ones() as i32;
                    (pb / (1.0 - pb)).powi(d) * (1.0 - pb).powi(y.len() as i32)
                })
                .sum::<f64>()
                / book.messages() as f64
        };
        let mut marginal = vec![0.0; s_count];
        let total_sequences = s_count.pow(len as u32);
        for code in 0..total_sequences {
            let seq: Vec<usize> = (0..len).map(|i| (code / s_count.pow(i as u32)) % s_count).collect();
            let mut p = prior[seq[0]];
            for i in 1..len {
                p *= t.get(seq[i - 1], seq[i]);
            }
            for i in 0..len {
                p *= emission(&window[i], seq[i]);
            }
            marginal[seq[0]] += p;
        }
        let total: f64 = marginal.iter().sum();
        marginal.iter().map(|m| m / total).collect()
    }

    #[test]
    fn delayed_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..60 {
            let states = [2, 4][trial % 2];
            let messages = [1, 2, 4][trial % 3];
            let book = build_codebook(Scheme::Legacy, states, messages, 8, SideInfo::None).unwrap();
            let t = generate_sparse_transition(states, 0.5, &mut rng).unwrap();
            let raw: Vec<f64> = (0..states).map(|_| rng.gen::<f64>() + 0.01).collect();
            let total: f64 = raw.iter().sum();
            let belief = BeliefState::new(raw.iter().map(|r| r / total).collect(), 0).unwrap();
            let pb = rng.gen_range(0.01..0.3);
            for delay in [1, 2] {
                let window: Vec<BitWord> =
                    (0..=delay).map(|_| BitWord::from_raw(rng.gen::<u64>() & 0xff, 8)).collect();
                let (res, _) = delayed_decode(&window, &belief, &t, &book, pb, delay).unwrap();
                let oracle = enumerate_marginal(&window, belief.prior(), &t, &book, pb);
                for (a, b) in res.state_posterior.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-9, "delay {delay}: {a} vs {b}");
                }
                assert_eq!(res.state, argmax(&oracle));
            }
        }
    }

    #[test]
    fn zero_delay_is_map_decoding() {
        let book = build_codebook(Scheme::Punctured, 32, 32, 20, SideInfo::None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = generate_sparse_transition(32, 0.125, &mut rng).unwrap();
        let belief = BeliefState::new(crate::source::stationary_distribution(&t).unwrap(), 4).unwrap();
        for _ in 0..100 {
            let y = BitWord::from_raw(rng.gen::<u64>() & 0xfffff, 20);
            let a = map_decode(&y, &belief, &book, &t, 0.05).unwrap();
            let b = delayed_decode(&[y], &belief, &t, &book, 0.05, 0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn uniform_transitions_make_the_future_irrelevant() {
        let book = build_codebook(Scheme::Legacy, 8, 4, 10, SideInfo::None).unwrap();
        let t = TransitionMatrix::uniform(8);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let prior: Vec<f64> = {
                let raw: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|r| r / s).collect()
            };
            let belief = BeliefState::new(prior, 0).unwrap();
            let window: Vec<BitWord> = (0..3).map(|_| BitWord::from_raw(rng.gen::<u64>() & 0x3ff, 10)).collect();
            let (now, _) = map_decode(&window[0], &belief, &book, &t, 0.1).unwrap();
            let (later, _) = delayed_decode(&window, &belief, &t, &book, 0.1, 2).unwrap();
            assert_eq!((now.state, now.message), (later.state, later.message));
            for (a, b) in now.state_posterior.iter().zip(&later.state_posterior) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_window_length() {
        let book = repetition_book();
        let t = TransitionMatrix::uniform(2);
        let belief = BeliefState::uniform(2);
        assert!(matches!(
            delayed_decode(&[w("000")], &belief, &t, &book, 0.1, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn degenerate_belief_is_reported() {
        let book = repetition_book();
        let t = TransitionMatrix::uniform(2);
        let belief = BeliefState::new(vec![1.0, 0.0], 9).unwrap();
        // Noiseless channel, the word only fits the state the prior rules out.
        assert!(matches!(
            map_decode(&w("111"), &belief, &book, &t, 0.0),
            Err(Error::Numeric { time: 9, .. })
        ));
    }

    #[test]
    fn no_underflow_at_long_distances() {
        let book = build_codebook(Scheme::Legacy, 32, 32, 20, SideInfo::None).unwrap();
        let belief = BeliefState::uniform(32);
        let t = TransitionMatrix::uniform(32);
        let y = book.encode(3, 3).unwrap().complement();
        let (res, next) = map_decode(&y, &belief, &book, &t, 1e-9).unwrap();
        assert!((res.state_posterior.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((next.prior().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn posteriors_are_normalized_and_consistent(
            seed in any::<u64>(),
            pb in 0.001f64..0.5,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let book = build_codebook(Scheme::Legacy, 8, 4, 12, SideInfo::None).unwrap();
            let t = generate_sparse_transition(8, 0.25, &mut rng).unwrap();
            let raw: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let belief = BeliefState::new(raw.iter().map(|r| r / s).collect(), 0).unwrap();
            let y = BitWord::from_raw(rng.gen::<u64>() & 0xfff, 12);
            let (res, next) = map_decode(&y, &belief, &book, &t, pb).unwrap();
            prop_assert!((res.state_posterior.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!((next.prior().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(res.state, argmax(&res.state_posterior));

            let cw = codeword_posterior(&y, &belief, &book, pb).unwrap();
            let total: f64 = cw.iter().flatten().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for (s, row) in cw.iter().enumerate() {
                prop_assert!((row.iter().sum::<f64>() - res.state_posterior[s]).abs() < 1e-9);
            }
        }

        #[test]
        fn decisions_ignore_likelihood_scaling(seed in any::<u64>(), shift in -500.0f64..500.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = generate_sparse_transition(8, 0.5, &mut rng).unwrap();
            let prior = vec![0.125; 8];
            let head: Vec<f64> = (0..8).map(|_| -rng.gen::<f64>() * 30.0).collect();
            let fut = Emission::Independent((0..8).map(|_| -rng.gen::<f64>() * 30.0).collect());
            let shifted_head: Vec<f64> = head.iter().map(|h| h + shift).collect();
            let shifted_fut = match &fut {
                Emission::Independent(v) => Emission::Independent(v.iter().map(|x| x + shift).collect()),
                Emission::Pairwise(_) => unreachable!(),
            };
            let a = window_posterior(&prior, &head, &[&fut], &t).unwrap();
            let b = window_posterior(&prior, &shifted_head, &[&shifted_fut], &t).unwrap();
            prop_assert_eq!(argmax(&a.marginal), argmax(&b.marginal));
            for (x, y) in a.marginal.iter().zip(&b.marginal) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

//! Scheme-specific maps from (state, message) to transmitted codewords.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::bch::{build_shortened_code, LinearBlockCode};
use super::huffman::{huffman_build_support, HuffmanCode};
use crate::channel::BitWord;
use crate::error::{parameter, Error, Result};
use crate::source::{stationary_distribution, TransitionMatrix};

/// Stationary probabilities below this are treated as zero.
const STATIONARY_FLOOR: f64 = 1e-12;

/// The four ways of packing a (state, message) pair into `n` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// State and message bits block-encoded together into `n` bits.
    Legacy,
    /// Encoded into `n + log2 S` bits, then the systematic state bits are
    /// removed.
    Punctured,
    /// State Huffman-compressed against the stationary law.
    Stationary,
    /// State Huffman-compressed against the row of the previous state, with
    /// periodic uncompressed check packets.
    Conditional,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Legacy,
        Scheme::Punctured,
        Scheme::Stationary,
        Scheme::Conditional,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Legacy => "legacy",
            Scheme::Punctured => "punctured",
            Scheme::Stationary => "stationary",
            Scheme::Conditional => "conditional",
        }
    }

    /// Whether the transmitter needs the source statistics.
    pub fn uses_compression(&self) -> bool {
        matches!(self, Scheme::Stationary | Scheme::Conditional)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| parameter(format!("unknown scheme '{s}'")))
    }
}

/// Source statistics a codebook may be built from.
#[derive(Debug, Clone, Copy)]
pub enum SideInfo<'a> {
    None,
    /// Stationary law of the source.
    Stationary(&'a [f64]),
    /// Transition matrix and the previous state it is conditioned on.
    Conditional {
        transition: &'a TransitionMatrix,
        previous_state: usize,
    },
}

/// Total map `(state, message) -> n`-bit codeword for one scheme (and one
/// conditioning state, for the conditional scheme).
///
/// States that cannot occur in the codebook's context have no codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    scheme: Scheme,
    n: usize,
    states: usize,
    messages: usize,
    context: Option<usize>,
    words: Vec<Vec<BitWord>>,
}

pub fn log2_exact(value: usize, what: &str) -> Result<usize> {
    if value == 0 || !value.is_power_of_two() {
        return Err(parameter(format!("{what} = {value} is not a power of two")));
    }
    Ok(value.trailing_zeros() as usize)
}

impl Codebook {
    /// Assembles a codebook from explicit codewords, `words[s][m]`. An empty
    /// inner vector marks a state outside the codebook's context.
    pub fn from_words(scheme: Scheme, messages: usize, words: Vec<Vec<BitWord>>) -> Result<Self> {
        let states = words.len();
        let n = words
            .iter()
            .flatten()
            .map(BitWord::len)
            .next()
            .ok_or_else(|| parameter("codebook without codewords"))?;
        for (s, set) in words.iter().enumerate() {
            if !set.is_empty() && set.len() != messages {
                return Err(parameter(format!(
                    "state {s} has {} codewords, expected {messages}",
                    set.len()
                )));
            }
            if let Some(w) = set.iter().find(|w| w.len() != n) {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: w.len(),
                });
            }
        }
        let book = Self {
            scheme,
            n,
            states,
            messages,
            context: None,
            words,
        };
        book.check_collisions()?;
        Ok(book)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    /// Conditioning state, for conditional-scheme codebooks.
    pub fn context(&self) -> Option<usize> {
        self.context
    }

    /// The codeword set of `state`; empty when the state is excluded.
    #[inline]
    pub fn state_words(&self, state: usize) -> &[BitWord] {
        &self.words[state]
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(state, message, codeword)` entries in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, BitWord)> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(|(s, set)| set.iter().enumerate().map(move |(m, &w)| (s, m, w)))
    }

    /// The codeword `x(s, m)`.
    pub fn encode(&self, state: usize, message: usize) -> Result<BitWord> {
        if state >= self.states {
            return Err(Error::InvalidState {
                state,
                states: self.states,
            });
        }
        if message >= self.messages {
            return Err(Error::InvalidMessage {
                message,
                messages: self.messages,
            });
        }
        self.words[state].get(message).copied().ok_or_else(|| {
            Error::Model(format!(
                "state {state} has zero probability after state {}",
                self.context.unwrap_or(usize::MAX)
            ))
        })
    }

    fn check_collisions(&self) -> Result<()> {
        let mut seen: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
        for (s, m, w) in self.entries() {
            if let Some(&(s0, m0)) = seen.get(&w.raw()) {
                return Err(Error::Collision {
                    first_state: s0,
                    first_message: m0,
                    second_state: s,
                    second_message: m,
                });
            }
            seen.insert(w.raw(), (s, m));
        }
        Ok(())
    }
}

/// Builds the codebook of `scheme` for `states` states, `messages` messages
/// per state and `n`-bit codewords.
///
/// * legacy: payload `state || message`, block-encoded to `n` bits;
/// * punctured: the same payload encoded to `n + log2 S` bits with the
///   `log2 S` state positions punctured;
/// * stationary: payload `huffman(pi)[s] || message`, encoded to `n` bits
///   with trailing parity punctured as needed; states with zero stationary
///   probability are left out;
/// * conditional: as stationary with the Huffman code of row
///   `T[previous_state]`; states unreachable from `previous_state` are left
///   out.
pub fn build_codebook(
    scheme: Scheme,
    states: usize,
    messages: usize,
    n: usize,
    side: SideInfo<'_>,
) -> Result<Codebook> {
    let state_bits = log2_exact(states, "state count")?;
    let message_bits = log2_exact(messages, "message count")?;
    let (words, context) = match (scheme, side) {
        (Scheme::Legacy, _) => {
            let code = build_shortened_code(state_bits + message_bits, n)?;
            (fixed_words(&code, states, messages, state_bits, message_bits)?, None)
        }
        (Scheme::Punctured, _) => {
            let code = build_shortened_code(state_bits + message_bits, n + state_bits)?
                .punctured(0..state_bits)?;
            (fixed_words(&code, states, messages, state_bits, message_bits)?, None)
        }
        (Scheme::Stationary, SideInfo::Stationary(pi)) => {
            if pi.len() != states {
                return Err(parameter("stationary law has the wrong number of states"));
            }
            // States the chain never occupies in steady state (transient
            // states, up to solver rounding) carry no codeword.
            let support: Vec<f64> = pi.iter().map(|&p| if p < STATIONARY_FLOOR { 0.0 } else { p }).collect();
            let total: f64 = support.iter().sum();
            let support: Vec<f64> = support.iter().map(|p| p / total).collect();
            let huffman = huffman_build_support(&support)?;
            (compressed_words(&huffman, messages, message_bits, n)?, None)
        }
        (
            Scheme::Conditional,
            SideInfo::Conditional {
                transition,
                previous_state,
            },
        ) => {
            if transition.states() != states {
                return Err(parameter("transition matrix has the wrong number of states"));
            }
            if previous_state >= states {
                return Err(Error::InvalidState {
                    state: previous_state,
                    states,
                });
            }
            let huffman = huffman_build_support(transition.row(previous_state))?;
            (
                compressed_words(&huffman, messages, message_bits, n)?,
                Some(previous_state),
            )
        }
        (scheme, _) => {
            return Err(parameter(format!(
                "{scheme} codebooks need matching source statistics"
            )))
        }
    };
    let book = Codebook {
        scheme,
        n,
        states,
        messages,
        context,
        words,
    };
    book.check_collisions()?;
    Ok(book)
}

fn fixed_words(
    code: &LinearBlockCode,
    states: usize,
    messages: usize,
    state_bits: usize,
    message_bits: usize,
) -> Result<Vec<Vec<BitWord>>> {
    (0..states)
        .map(|s| {
            let prefix = BitWord::from_value_msb_first(s as u64, state_bits);
            (0..messages)
                .map(|m| {
                    let payload =
                        prefix.concat(&BitWord::from_value_msb_first(m as u64, message_bits));
                    code.encode(&payload)
                })
                .collect()
        })
        .collect()
}

fn compressed_words(
    huffman: &HuffmanCode,
    messages: usize,
    message_bits: usize,
    n: usize,
) -> Result<Vec<Vec<BitWord>>> {
    let mut codes: BTreeMap<usize, LinearBlockCode> = BTreeMap::new();
    huffman
        .codes()
        .iter()
        .map(|state_code| {
            let Some(prefix) = state_code else {
                return Ok(Vec::new());
            };
            let payload_len = prefix.len() + message_bits;
            if let alloc::collections::btree_map::Entry::Vacant(slot) = codes.entry(payload_len) {
                slot.insert(build_shortened_code(payload_len, n)?);
            }
            let code = &codes[&payload_len];
            (0..messages)
                .map(|m| {
                    code.encode(&prefix.concat(&BitWord::from_value_msb_first(m as u64, message_bits)))
                })
                .collect()
        })
        .collect()
}

/// All codebooks a scheme needs over a whole packet sequence.
#[derive(Debug, Clone)]
pub enum SchemeCodec {
    /// One codebook for every packet.
    Fixed(Codebook),
    /// One compressed codebook per conditioning state, plus the legacy
    /// codebook used by check packets.
    Conditional {
        contexts: Vec<Codebook>,
        check: Codebook,
        check_interval: usize,
    },
}

impl SchemeCodec {
    /// `transition` is needed by the compression schemes; `check_interval`
    /// (packets `0, t_c, 2 t_c, ...` are check packets) only by the
    /// conditional one.
    pub fn build(
        scheme: Scheme,
        states: usize,
        messages: usize,
        n: usize,
        transition: Option<&TransitionMatrix>,
        check_interval: usize,
    ) -> Result<Self> {
        let need_model = || {
            transition.ok_or_else(|| {
                parameter(format!("the {scheme} scheme needs the source transition matrix"))
            })
        };
        match scheme {
            Scheme::Legacy | Scheme::Punctured => Ok(Self::Fixed(build_codebook(
                scheme,
                states,
                messages,
                n,
                SideInfo::None,
            )?)),
            Scheme::Stationary => {
                let pi = stationary_distribution(need_model()?)?;
                Ok(Self::Fixed(build_codebook(
                    scheme,
                    states,
                    messages,
                    n,
                    SideInfo::Stationary(&pi),
                )?))
            }
            Scheme::Conditional => {
                if check_interval == 0 {
                    return Err(parameter("check packet interval must be at least 1"));
                }
                let t = need_model()?;
                let contexts = (0..states)
                    .map(|previous_state| {
                        build_codebook(
                            scheme,
                            states,
                            messages,
                            n,
                            SideInfo::Conditional {
                                transition: t,
                                previous_state,
                            },
                        )
                    })
                    .collect::<Result<_>>()?;
                let check = build_codebook(Scheme::Legacy, states, messages, n, SideInfo::None)?;
                Ok(Self::Conditional {
                    contexts,
                    check,
                    check_interval,
                })
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Self::Fixed(book) => book.scheme(),
            Self::Conditional { .. } => Scheme::Conditional,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Fixed(book) => book.n(),
            Self::Conditional { check, .. } => check.n(),
        }
    }

    /// Whether packet `t` is encoded independently of the previous state.
    pub fn is_context_free(&self, t: u64) -> bool {
        match self {
            Self::Fixed(_) => true,
            Self::Conditional { check_interval, .. } => t.is_multiple_of(*check_interval as u64),
        }
    }

    /// Codebook for packet `t` given the previous state (needed only by
    /// non-check conditional packets).
    pub fn codebook(&self, t: u64, previous_state: Option<usize>) -> Result<&Codebook> {
        match self {
            Self::Fixed(book) => Ok(book),
            Self::Conditional { check, .. } if self.is_context_free(t) => Ok(check),
            Self::Conditional { contexts, .. } => {
                let prev = previous_state
                    .ok_or_else(|| parameter(format!("packet {t} needs the previous state")))?;
                contexts.get(prev).ok_or(Error::InvalidState {
                    state: prev,
                    states: contexts.len(),
                })
            }
        }
    }

    /// Per-context codebooks, for conditional schemes.
    pub fn context_codebooks(&self) -> Option<&[Codebook]> {
        match self {
            Self::Fixed(_) => None,
            Self::Conditional { contexts, .. } => Some(contexts),
        }
    }

    pub fn encode(&self, t: u64, previous_state: Option<usize>, state: usize, message: usize) -> Result<BitWord> {
        self.codebook(t, previous_state)?.encode(state, message)
    }
}

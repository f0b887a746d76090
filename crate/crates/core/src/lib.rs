//! Joint source-channel coding for short packets emitted by hidden-Markov
//! sources.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the whole numerical
//! core: sparse Markov sources, the binary symmetric channel, shortened and
//! punctured BCH codebooks, MAP and delayed forward-backward decoding, online
//! estimation of the channel and transition statistics, and the per-sequence
//! Monte Carlo engine. File formats, sweeps and the command line live in the
//! `jscc-sim` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod codec;
pub mod decoder;
mod error;
pub mod estimation;
pub mod math;
pub mod sim;
pub mod source;

pub use channel::BitWord;
pub use error::{Error, Result};
pub use source::TransitionMatrix;

//! Fixed-length bit words and the binary symmetric channel.

use alloc::string::String;
use core::fmt;

use rand::Rng;

use crate::error::{parameter, Error, Result};

/// Longest word a [`BitWord`] can hold.
pub const MAX_BITS: usize = 64;

/// An ordered, fixed-length sequence of bits.
///
/// Bit `i` is the `i`-th bit emitted by the encoder; it is stored at bit
/// position `i` of the backing integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitWord {
    bits: u64,
    len: u8,
}

impl BitWord {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_BITS, "bit word longer than {MAX_BITS}");
        Self { bits: 0, len: len as u8 }
    }

    /// Builds a word from its packed representation; bits at or above `len`
    /// must be clear.
    pub fn from_raw(bits: u64, len: usize) -> Self {
        assert!(len <= MAX_BITS, "bit word longer than {MAX_BITS}");
        debug_assert!(len == MAX_BITS || bits >> len == 0, "stray high bits");
        Self { bits, len: len as u8 }
    }

    /// Writes `value` on `len` bits, most significant bit first.
    pub fn from_value_msb_first(value: u64, len: usize) -> Self {
        let mut w = Self::zeros(len);
        for i in 0..len {
            w.set(i, (value >> (len - 1 - i)) & 1 == 1);
        }
        w
    }

    /// Reads the word back as an unsigned integer, first bit most significant.
    pub fn value_msb_first(&self) -> u64 {
        (0..self.len()).fold(0, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self> {
        if text.len() > MAX_BITS {
            return Err(parameter("bit string too long"));
        }
        let mut w = Self::zeros(text.len());
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' => {}
                '1' => w.set(i, true),
                _ => return Err(parameter("bit strings may only contain 0 and 1")),
            }
        }
        Ok(w)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut w = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            w.set(i, b);
        }
        w
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn raw(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len(), "bit index {index} out of range");
        (self.bits >> index) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len(), "bit index {index} out of range");
        if value {
            self.bits |= 1 << index;
        } else {
            self.bits &= !(1 << index);
        }
    }

    /// `self` followed by `tail`.
    pub fn concat(&self, tail: &BitWord) -> BitWord {
        let len = self.len() + tail.len();
        assert!(len <= MAX_BITS, "concatenation longer than {MAX_BITS}");
        BitWord {
            bits: self.bits | (tail.bits << self.len()),
            len: len as u8,
        }
    }

    /// Bitwise complement over the word's length.
    pub fn complement(&self) -> BitWord {
        BitWord {
            bits: !self.bits & mask(self.len()),
            len: self.len,
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

#[inline]
pub(crate) fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({})", self.to_bit_string())
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

/// Number of positions where `x` and `y` differ.
pub fn hamming_distance(x: &BitWord, y: &BitWord) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(distance_unchecked(x, y))
}

#[inline]
pub(crate) fn distance_unchecked(x: &BitWord, y: &BitWord) -> usize {
    (x.bits ^ y.bits).count_ones() as usize
}

/// Sends `word` through a binary symmetric channel: each bit flips
/// independently with probability `flip_probability`.
///
/// Exactly one uniform draw is consumed per bit whatever the flip
/// probability, so runs at different channel qualities see the same noise
/// realization.
pub fn transmit<R: Rng + ?Sized>(word: &BitWord, flip_probability: f64, rng: &mut R) -> BitWord {
    debug_assert!((0.0..=1.0).contains(&flip_probability));
    let mut flips = 0u64;
    for i in 0..word.len() {
        if rng.gen::<f64>() < flip_probability {
            flips |= 1 << i;
        }
    }
    BitWord {
        bits: word.bits ^ flips,
        len: word.len,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> BitWord {
        BitWord::parse(s).unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&w("0000"), &w("0000")).unwrap(), 0);
        assert_eq!(hamming_distance(&w("0000"), &w("1111")).unwrap(), 4);
        assert_eq!(hamming_distance(&w("10110"), &w("11100")).unwrap(), 2);
        assert_eq!(
            hamming_distance(&w("101"), &w("1010")),
            Err(Error::LengthMismatch { expected: 3, actual: 4 })
        );
    }

    #[test]
    fn bit_order_and_values() {
        let x = BitWord::from_value_msb_first(0b10110, 5);
        assert_eq!(x.to_bit_string(), "10110");
        assert_eq!(x.value_msb_first(), 0b10110);
        assert_eq!(w("10").concat(&w("011")).to_bit_string(), "10011");
        assert_eq!(w("1001").complement(), w("0110"));
        assert!(BitWord::parse("10a").is_err());
    }

    #[test]
    fn boundary_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = w("10110011100011110000");
        assert_eq!(transmit(&x, 0.0, &mut rng), x);
        assert_eq!(transmit(&x, 1.0, &mut rng), x.complement());
    }

    #[test]
    fn transmit_is_reproducible() {
        let x = BitWord::zeros(20);
        let a: std::vec::Vec<_> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| transmit(&x, 0.2, &mut r)).collect()
        };
        let b: std::vec::Vec<_> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| transmit(&x, 0.2, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn flip_count_is_binomial() {
        // n = 20, p = 0.05: mean 1.0, and the histogram follows Binomial(20, 0.05).
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = BitWord::zeros(20);
        let trials = 100_000;
        let mut hist = [0u64; 21];
        for _ in 0..trials {
            hist[transmit(&x, 0.05, &mut rng).count_ones()] += 1;
        }
        let mean = hist.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>()
            / trials as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean flips {mean}");

        // Chi-square over bins 0..=4 plus a pooled tail; 5 dof, 0.999 quantile 20.52.
        let pmf = |k: usize| {
            let mut c = 1.0;
            for i in 0..k {
                c = c * (20 - i) as f64 / (i + 1) as f64;
            }
            c * 0.05f64.powi(k as i32) * 0.95f64.powi((20 - k) as i32)
        };
        let mut chi2 = 0.0;
        let mut tail_p = 1.0;
        let mut tail_obs = trials as f64;
        for (k, &observed) in hist.iter().enumerate().take(5) {
            let e = pmf(k) * trials as f64;
            chi2 += (observed as f64 - e).powi(2) / e;
            tail_p -= pmf(k);
            tail_obs -= observed as f64;
        }
        let e = tail_p * trials as f64;
        chi2 += (tail_obs - e).powi(2) / e;
        assert!(chi2 < 20.52, "chi2 {chi2}, hist {hist:?}");
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric(a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
            let (x, y, z) = (
                BitWord::from_raw(a as u64, 32),
                BitWord::from_raw(b as u64, 32),
                BitWord::from_raw(c as u64, 32),
            );
            let dxy = hamming_distance(&x, &y).unwrap();
            prop_assert_eq!(dxy, hamming_distance(&y, &x).unwrap());
            prop_assert_eq!(dxy == 0, x == y);
            prop_assert!(hamming_distance(&x, &z).unwrap() <= dxy + hamming_distance(&y, &z).unwrap());
        }

        #[test]
        fn msb_first_roundtrip(v in any::<u32>(), len in 1usize..=32) {
            let value = v as u64 & mask(len);
            let word = BitWord::from_value_msb_first(value, len);
            prop_assert_eq!(word.value_msb_first(), value);
            prop_assert_eq!(BitWord::parse(&word.to_bit_string()).unwrap(), word);
        }
    }
}

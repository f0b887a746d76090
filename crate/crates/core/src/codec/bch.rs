//! Binary BCH codes of length 31, shortened and punctured to arbitrary
//! short lengths.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::channel::{BitWord, MAX_BITS};
use crate::error::{parameter, Error, Result};

/// Natural length of the parent family.
pub const PARENT_LENGTH: usize = 31;

/// `x^5 + x^2 + 1`, primitive over GF(2).
const PRIMITIVE_POLY: u32 = 0b10_0101;
const FIELD_ORDER: usize = 32;

/// Designed distances of the parent ladder, weakest first. Distance 1 is the
/// trivial zero-parity code.
const DESIGNED_DISTANCES: [usize; 6] = [1, 3, 5, 7, 11, 15];

/// GF(32) log/antilog tables.
struct Gf32 {
    exp: [u8; 2 * FIELD_ORDER],
    log: [u8; FIELD_ORDER],
}

impl Gf32 {
    fn new() -> Self {
        let mut exp = [0u8; 2 * FIELD_ORDER];
        let mut log = [0u8; FIELD_ORDER];
        let mut x: u32 = 1;
        for i in 0..FIELD_ORDER - 1 {
            exp[i] = x as u8;
            exp[i + FIELD_ORDER - 1] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0b10_0000 != 0 {
                x ^= PRIMITIVE_POLY;
            }
        }
        Self { exp, log }
    }

    fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    fn alpha_pow(&self, i: usize) -> u8 {
        self.exp[i % (FIELD_ORDER - 1)]
    }
}

/// Cyclotomic coset of `i` modulo 31.
fn coset(i: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut j = i % 31;
    while out.insert(j) {
        j = (2 * j) % 31;
    }
    out
}

/// Minimal polynomial of `alpha^i` as a GF(2) polynomial (bit k = x^k).
fn minimal_polynomial(field: &Gf32, i: usize) -> u64 {
    // Expand prod (x - alpha^j) over the coset with GF(32) coefficients.
    let mut coeffs: Vec<u8> = alloc::vec![1];
    for j in coset(i) {
        let root = field.alpha_pow(j);
        let mut next = alloc::vec![0u8; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] ^= c;
            next[k] ^= field.mul(c, root);
        }
        coeffs = next;
    }
    coeffs.iter().enumerate().fold(0u64, |acc, (k, &c)| {
        debug_assert!(c <= 1, "minimal polynomial must have binary coefficients");
        acc | ((c as u64) << k)
    })
}

fn poly_mul(a: u64, b: u64) -> u64 {
    let mut out = 0;
    for k in 0..64 {
        if (b >> k) & 1 == 1 {
            out ^= a << k;
        }
    }
    out
}

fn degree(p: u64) -> usize {
    63 - p.leading_zeros() as usize
}

/// Remainder of `p` modulo `g` over GF(2).
fn poly_rem(mut p: u64, g: u64) -> u64 {
    let dg = degree(g);
    while p != 0 && degree(p) >= dg {
        p ^= g << (degree(p) - dg);
    }
    p
}

/// One rung of the BCH(31, k) ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentCode {
    pub dimension: usize,
    pub designed_distance: usize,
    /// Generator polynomial, bit k = coefficient of x^k.
    pub generator: u64,
}

impl ParentCode {
    pub fn parity(&self) -> usize {
        PARENT_LENGTH - self.dimension
    }
}

/// The parent ladder `(31,31,1) (31,26,3) (31,21,5) (31,16,7) (31,11,11)
/// (31,6,15)`, ordered by increasing parity.
pub fn parent_ladder() -> Vec<ParentCode> {
    let field = Gf32::new();
    DESIGNED_DISTANCES
        .iter()
        .map(|&delta| {
            let mut used = BTreeSet::new();
            let mut g = 1u64;
            for i in 1..delta {
                let rep = *coset(i).iter().next().unwrap();
                if used.insert(rep) {
                    g = poly_mul(g, minimal_polynomial(&field, i));
                }
            }
            ParentCode {
                dimension: PARENT_LENGTH - degree(g),
                designed_distance: delta,
                generator: g,
            }
        })
        .collect()
}

/// A systematic binary linear block code with an optional puncturing
/// pattern.
///
/// The full (unpunctured) codeword carries the payload verbatim in positions
/// `0..payload_len`, followed by the parity bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearBlockCode {
    payload_len: usize,
    full_len: usize,
    parent: ParentCode,
    /// Row `i` is the full codeword of the `i`-th unit payload.
    generator: Vec<BitWord>,
    puncture: Vec<usize>,
    kept: Vec<usize>,
}

impl LinearBlockCode {
    /// Shortened cyclic code `(payload_len + r, payload_len)` of `parent`.
    fn shortened(parent: ParentCode, payload_len: usize) -> Self {
        let r = parent.parity();
        let full_len = payload_len + r;
        let generator = (0..payload_len)
            .map(|i| {
                // Payload bit i is the coefficient of x^(full_len - 1 - i).
                let shift = full_len - 1 - i;
                let parity = poly_rem(1u64 << shift, parent.generator);
                let mut row = BitWord::zeros(full_len);
                row.set(i, true);
                // Parity position payload_len + j holds x^(r - 1 - j).
                for j in 0..r {
                    if (parity >> (r - 1 - j)) & 1 == 1 {
                        row.set(payload_len + j, true);
                    }
                }
                row
            })
            .collect();
        Self {
            payload_len,
            full_len,
            parent,
            generator,
            puncture: Vec::new(),
            kept: (0..full_len).collect(),
        }
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn full_len(&self) -> usize {
        self.full_len
    }

    pub fn output_len(&self) -> usize {
        self.kept.len()
    }

    pub fn parent(&self) -> ParentCode {
        self.parent
    }

    pub fn generator(&self) -> &[BitWord] {
        &self.generator
    }

    /// Removed positions, ascending.
    pub fn puncture_pattern(&self) -> &[usize] {
        &self.puncture
    }

    /// Adds positions to the puncture pattern.
    pub fn punctured(mut self, positions: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set: BTreeSet<usize> = self.puncture.iter().copied().collect();
        for p in positions {
            if p >= self.full_len {
                return Err(parameter(format!(
                    "puncture position {p} outside a {}-bit codeword",
                    self.full_len
                )));
            }
            set.insert(p);
        }
        self.puncture = set.into_iter().collect();
        self.kept = (0..self.full_len)
            .filter(|p| self.puncture.binary_search(p).is_err())
            .collect();
        Ok(self)
    }

    /// Full codeword before puncturing.
    pub fn encode_full(&self, payload: &BitWord) -> Result<BitWord> {
        if payload.len() != self.payload_len {
            return Err(Error::LengthMismatch {
                expected: self.payload_len,
                actual: payload.len(),
            });
        }
        let raw = self
            .generator
            .iter()
            .enumerate()
            .filter(|(i, _)| payload.get(*i))
            .fold(0u64, |acc, (_, row)| acc ^ row.raw());
        Ok(BitWord::from_raw(raw, self.full_len))
    }

    /// Transmitted codeword: the full codeword with punctured positions
    /// removed.
    pub fn encode(&self, payload: &BitWord) -> Result<BitWord> {
        let full = self.encode_full(payload)?;
        let mut out = BitWord::zeros(self.kept.len());
        for (j, &p) in self.kept.iter().enumerate() {
            out.set(j, full.get(p));
        }
        Ok(out)
    }
}

/// Picks the parent with the fewest parity bits `r` such that
/// `payload_len + r >= target_len`, shortens it to `(payload_len + r,
/// payload_len)` and punctures the trailing `payload_len + r - target_len`
/// parity positions.
pub fn build_shortened_code(payload_len: usize, target_len: usize) -> Result<LinearBlockCode> {
    if payload_len > target_len {
        return Err(Error::Construction(format!(
            "payload of {payload_len} bits does not fit in {target_len} bits"
        )));
    }
    if target_len > MAX_BITS.min(PARENT_LENGTH) || target_len == 0 {
        return Err(Error::Construction(format!(
            "target length {target_len} outside 1..={PARENT_LENGTH}"
        )));
    }
    let parent = parent_ladder()
        .into_iter()
        .find(|p| payload_len + p.parity() >= target_len)
        .filter(|p| payload_len <= p.dimension)
        .ok_or_else(|| {
            Error::Construction(format!(
                "no BCH(31, k) parent realizes ({target_len}, {payload_len})"
            ))
        })?;
    let code = LinearBlockCode::shortened(parent, payload_len);
    let excess = code.full_len - target_len;
    let full_len = code.full_len;
    code.punctured(full_len - excess..full_len)
}

//! Sparse Markov sources: transition matrices, their stationary law, and
//! trajectory sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{parameter, Error, Result};

/// Tolerance on row sums for externally supplied matrices.
const INPUT_ROW_TOLERANCE: f64 = 1e-9;

/// Attempts before `generate_sparse_transition` gives up on finding an
/// ergodic matrix.
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// A row-stochastic `S x S` matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    states: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds a matrix from its rows. Rows must be non-negative and sum to 1
    /// within `1e-9`; they are rescaled to sum to 1 to rounding error.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let states = rows.len();
        if states == 0 {
            return Err(parameter("transition matrix needs at least one state"));
        }
        let mut entries = Vec::with_capacity(states * states);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != states {
                return Err(parameter(format!(
                    "row {i} has {} entries, expected {states}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(parameter(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > INPUT_ROW_TOLERANCE {
                return Err(parameter(format!("row {i} sums to {sum}, not 1")));
            }
            entries.extend(row.iter().map(|&p| p / sum));
        }
        Ok(Self { states, entries })
    }

    /// The matrix with every entry equal to `1/S`.
    pub fn uniform(states: usize) -> Self {
        assert!(states > 0, "uniform matrix needs at least one state");
        Self {
            states,
            entries: vec![1.0 / states as f64; states * states],
        }
    }

    /// Wraps row-major entries that the caller guarantees to be stochastic.
    pub(crate) fn from_entries_unchecked(states: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), states * states);
        Self { states, entries }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.states + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.states..(from + 1) * self.states]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.states)
    }

    /// Fraction of nonzero entries.
    pub fn density(&self) -> f64 {
        let nonzero = self.entries.iter().filter(|&&p| p > 0.0).count();
        nonzero as f64 / (self.states * self.states) as f64
    }

    /// True when the nonzero pattern has exactly one closed communicating
    /// class and every state can reach it.
    ///
    /// That holds iff some state is reachable from every state: such a state
    /// belongs to every closed class, so there can only be one.
    pub fn is_ergodic(&self) -> bool {
        let s = self.states;
        // Reverse adjacency: who can step into `j`.
        let mut reached = vec![false; s];
        let mut stack = Vec::with_capacity(s);
        (0..s).any(|target| {
            reached.iter_mut().for_each(|r| *r = false);
            reached[target] = true;
            stack.clear();
            stack.push(target);
            let mut count = 1;
            while let Some(j) = stack.pop() {
                for (i, seen) in reached.iter_mut().enumerate() {
                    if !*seen && self.get(i, j) > 0.0 {
                        *seen = true;
                        count += 1;
                        stack.push(i);
                    }
                }
            }
            count == s
        })
    }

    /// `p' = p T`, the one-step propagation of a distribution.
    pub fn propagate(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, &t) in out.iter_mut().zip(self.row(i)) {
                *o += p * t;
            }
        }
        out
    }
}

/// Draws a random sparse row-stochastic matrix with `round(density * S)`
/// nonzeros per row, redrawing the whole matrix until it is ergodic.
///
/// Nonzero positions are uniform without replacement; magnitudes are
/// uniform on `(0, 1]` before row normalization.
pub fn generate_sparse_transition<R: Rng + ?Sized>(
    states: usize,
    density: f64,
    rng: &mut R,
) -> Result<TransitionMatrix> {
    if states == 0 {
        return Err(parameter("need at least one state"));
    }
    let per_row = nonzeros_per_row(states, density)?;
    let mut entries = vec![0.0; states * states];
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        entries.iter_mut().for_each(|e| *e = 0.0);
        for row in entries.chunks_exact_mut(states) {
            let columns = rand::seq::index::sample(rng, states, per_row);
            let mut sum = 0.0;
            for col in columns.iter() {
                // gen() is in [0, 1); flip it onto (0, 1].
                let v = 1.0 - rng.gen::<f64>();
                row[col] = v;
                sum += v;
            }
            row.iter_mut().for_each(|e| *e /= sum);
        }
        let candidate = TransitionMatrix::from_entries_unchecked(states, entries.clone());
        if candidate.is_ergodic() {
            return Ok(candidate);
        }
    }
    Err(Error::Model(format!(
        "no ergodic matrix with {per_row} nonzeros per row after {MAX_GENERATION_ATTEMPTS} attempts"
    )))
}

/// Number of nonzeros per row for a requested density.
pub fn nonzeros_per_row(states: usize, density: f64) -> Result<usize> {
    let min = 1.0 / states as f64;
    // A little slack so that e.g. 1/32 written as 0.03125 is accepted.
    if !(density >= min - 1e-12 && density <= 1.0) {
        return Err(parameter(format!(
            "density {density} outside [1/{states}, 1]"
        )));
    }
    Ok((libm::round(density * states as f64) as usize).clamp(1, states))
}

/// Solves `pi T = pi`, `sum(pi) = 1` by Gaussian elimination with partial
/// pivoting on the system with one balance equation replaced by the
/// normalization constraint.
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    if !matrix.is_ergodic() {
        return Err(Error::Model(
            "stationary distribution is not unique: chain has several closed classes".into(),
        ));
    }
    let s = matrix.states();
    // a[i][j] = T[j][i] - delta_ij, last row replaced by ones.
    let mut a = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            a[i * s + j] = matrix.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..s {
        a[(s - 1) * s + j] = 1.0;
    }
    let mut b = vec![0.0; s];
    b[s - 1] = 1.0;

    for col in 0..s {
        let pivot = (col..s)
            .max_by(|&x, &y| a[x * s + col].abs().total_cmp(&a[y * s + col].abs()))
            .expect("non-empty pivot range");
        if a[pivot * s + col].abs() < 1e-300 {
            return Err(Error::Model("singular balance equations".into()));
        }
        if pivot != col {
            for j in 0..s {
                a.swap(pivot * s + j, col * s + j);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * s + col];
        for row in col + 1..s {
            let factor = a[row * s + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..s {
                a[row * s + j] -= factor * a[col * s + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut pi = vec![0.0; s];
    for row in (0..s).rev() {
        let tail: f64 = (row + 1..s).map(|j| a[row * s + j] * pi[j]).sum();
        pi[row] = (b[row] - tail) / a[row * s + row];
    }
    // Transient states solve to ~0; clear rounding noise below zero.
    pi.iter_mut().for_each(|p| *p = p.max(0.0));
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// One emitted packet of the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceStep {
    pub time: u64,
    pub state: usize,
    pub message: usize,
}

/// Samples an index from a probability vector with a single uniform draw.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // Only reachable when rounding leaves acc slightly below 1.
    last_positive
}

/// Advances the chain by one packet: the next state follows row
/// `current_state` of `matrix` and the message is uniform over `messages`.
///
/// State and message draws take separate generators so that the message
/// stream does not perturb the state trajectory.
pub fn step<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    current_state: usize,
    time: u64,
    matrix: &TransitionMatrix,
    messages: usize,
    state_rng: &mut R1,
    message_rng: &mut R2,
) -> Result<SourceStep> {
    if current_state >= matrix.states() {
        return Err(Error::InvalidState {
            state: current_state,
            states: matrix.states(),
        });
    }
    if messages == 0 {
        return Err(parameter("message set must be non-empty"));
    }
    let state = sample_index(matrix.row(current_state), state_rng);
    let message = message_rng.gen_range(0..messages);
    Ok(SourceStep {
        time,
        state,
        message,
    })
}

/// The time-varying source `(1 - t/t_total) T1 + (t/t_total) T2`.
pub fn dynamic_transition(
    first: &TransitionMatrix,
    second: &TransitionMatrix,
    t: u64,
    t_total: u64,
) -> Result<TransitionMatrix> {
    if first.states() != second.states() {
        return Err(parameter(format!(
            "dimension mismatch: {} vs {} states",
            first.states(),
            second.states()
        )));
    }
    if t_total == 0 || t > t_total {
        return Err(parameter(format!("packet index {t} outside [0, {t_total}]")));
    }
    let w = t as f64 / t_total as f64;
    let entries = first
        .entries
        .iter()
        .zip(&second.entries)
        .map(|(&a, &b)| (1.0 - w) * a + w * b)
        .collect();
    Ok(TransitionMatrix::from_entries_unchecked(first.states(), entries))
}

//! Deterministic Huffman codes for state compression.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::BitWord;
use crate::error::{parameter, Result};

/// A prefix code over state indices. Symbols left out of the tree have no
/// codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct HuffmanCode {
    codes: Vec<Option<BitWord>>,
    distribution: Vec<f64>,
}

impl HuffmanCode {
    pub fn code(&self, symbol: usize) -> Option<&BitWord> {
        self.codes.get(symbol).and_then(Option::as_ref)
    }

    pub fn codes(&self) -> &[Option<BitWord>] {
        &self.codes
    }

    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    /// Code lengths; `None` for excluded symbols.
    pub fn lengths(&self) -> Vec<Option<usize>> {
        self.codes.iter().map(|c| c.map(|w| w.len())).collect()
    }

    pub fn expected_length(&self) -> f64 {
        self.codes
            .iter()
            .zip(&self.distribution)
            .filter_map(|(c, &p)| c.map(|w| p * w.len() as f64))
            .sum()
    }
}

struct Node {
    prob: f64,
    /// Smallest symbol index in the subtree.
    min_symbol: usize,
    /// (zero branch, one branch)
    children: Option<(usize, usize)>,
}

/// Builds a Huffman code over every symbol of `dist`, zero-probability
/// symbols included (they end up with the longest codewords).
pub fn huffman_build(dist: &[f64]) -> Result<HuffmanCode> {
    build(dist, false)
}

/// As [`huffman_build`], but symbols with zero probability get no codeword.
pub fn huffman_build_support(dist: &[f64]) -> Result<HuffmanCode> {
    build(dist, true)
}

/// Repeatedly merges the two lightest nodes, lowest symbol index first among
/// equal weights; the subtree holding the lower symbol index takes the 0
/// branch. A lone symbol gets the empty codeword.
fn build(dist: &[f64], support_only: bool) -> Result<HuffmanCode> {
    if dist.is_empty() {
        return Err(parameter("Huffman code over an empty distribution"));
    }
    if dist.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(parameter("probabilities must be finite and non-negative"));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(parameter("probabilities must sum to 1"));
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(2 * dist.len());
    let mut active: Vec<usize> = Vec::with_capacity(dist.len());
    for (symbol, &p) in dist.iter().enumerate() {
        if support_only && p == 0.0 {
            continue;
        }
        active.push(nodes.len());
        nodes.push(Node {
            prob: p,
            min_symbol: symbol,
            children: None,
        });
    }

    let lightest = |nodes: &[Node], active: &[usize]| -> usize {
        let mut best = 0;
        for k in 1..active.len() {
            let (a, b) = (&nodes[active[k]], &nodes[active[best]]);
            if a.prob < b.prob || (a.prob == b.prob && a.min_symbol < b.min_symbol) {
                best = k;
            }
        }
        best
    };

    while active.len() > 1 {
        let first = active.swap_remove(lightest(&nodes, &active));
        let second = active.swap_remove(lightest(&nodes, &active));
        let (zero, one) = if nodes[first].min_symbol < nodes[second].min_symbol {
            (first, second)
        } else {
            (second, first)
        };
        active.push(nodes.len());
        nodes.push(Node {
            prob: nodes[first].prob + nodes[second].prob,
            min_symbol: nodes[zero].min_symbol,
            children: Some((zero, one)),
        });
    }

    let mut codes = vec![None; dist.len()];
    let mut stack = vec![(active[0], BitWord::zeros(0))];
    while let Some((id, prefix)) = stack.pop() {
        match nodes[id].children {
            Some((zero, one)) => {
                stack.push((zero, prefix.concat(&BitWord::parse("0").unwrap())));
                stack.push((one, prefix.concat(&BitWord::parse("1").unwrap())));
            }
            None => codes[nodes[id].min_symbol] = Some(prefix),
        }
    }
    Ok(HuffmanCode {
        codes,
        distribution: dist.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::entropy_bits;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn lengths(dist: &[f64]) -> Vec<usize> {
        huffman_build(dist)
            .unwrap()
            .lengths()
            .into_iter()
            .map(Option::unwrap)
            .collect()
    }

    fn is_prefix_free(code: &HuffmanCode) -> bool {
        let words: Vec<BitWord> = code.codes().iter().flatten().copied().collect();
        words.iter().enumerate().all(|(i, a)| {
            words.iter().enumerate().all(|(j, b)| {
                i == j
                    || a.len() > b.len()
                    || (0..a.len()).any(|k| a.get(k) != b.get(k))
            })
        })
    }

    /// Textbook Huffman cost: sum of merged weights, computed with a plain
    /// sorted list. Any optimal prefix code has this expected length.
    fn optimal_cost(dist: &[f64]) -> f64 {
        let mut w: Vec<f64> = dist.to_vec();
        let mut cost = 0.0;
        while w.len() > 1 {
            w.sort_by(|a, b| b.total_cmp(a));
            let a = w.pop().unwrap();
            let b = w.pop().unwrap();
            cost += a + b;
            w.push(a + b);
        }
        cost
    }

    #[test]
    fn dyadic_examples() {
        assert_eq!(lengths(&[0.5, 0.25, 0.25]), [1, 2, 2]);
        assert_eq!(lengths(&[1.0 / 32.0; 32]), [5; 32]);
    }

    #[test]
    fn textbook_example() {
        let code = huffman_build(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert_eq!(lengths(&[0.4, 0.3, 0.2, 0.1]), [1, 2, 3, 3]);
        assert!((code.expected_length() - 1.9).abs() < 1e-12);
        assert!((optimal_cost(&[0.4, 0.3, 0.2, 0.1]) - 1.9).abs() < 1e-12);
        assert!(is_prefix_free(&code));
    }

    #[test]
    fn tie_breaking_is_fixed() {
        let code = huffman_build(&[0.25; 4]).unwrap();
        let words: Vec<_> = code.codes().iter().map(|c| c.unwrap().to_bit_string()).collect();
        assert_eq!(words, ["00", "01", "10", "11"]);
        let code = huffman_build(&[0.5, 0.25, 0.25]).unwrap();
        let words: Vec<_> = code.codes().iter().map(|c| c.unwrap().to_bit_string()).collect();
        assert_eq!(words, ["0", "10", "11"]);
    }

    #[test]
    fn zero_probability_symbols() {
        let all = huffman_build(&[0.5, 0.0, 0.5]).unwrap();
        assert!(all.code(1).unwrap().len() >= all.code(0).unwrap().len());
        let support = huffman_build_support(&[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(support.lengths(), [Some(1), None, Some(1)]);
        let single = huffman_build_support(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(single.lengths(), [None, Some(0), None]);
    }

    #[test]
    fn invalid_distributions() {
        assert!(huffman_build(&[]).is_err());
        assert!(huffman_build(&[0.5, 0.4]).is_err());
        assert!(huffman_build(&[1.5, -0.5]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn optimal_and_within_one_bit_of_entropy(raw in proptest::collection::vec(0.001f64..1.0, 2..40)) {
            let total: f64 = raw.iter().sum();
            let dist: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let code = huffman_build(&dist).unwrap();
            prop_assert!(is_prefix_free(&code));
            prop_assert!(code.codes().iter().all(Option::is_some));
            let l = code.expected_length();
            let h = entropy_bits(&dist);
            prop_assert!(l >= h - 1e-9 && l <= h + 1.0);
            prop_assert!((l - optimal_cost(&dist)).abs() < 1e-9);
        }
    }
}

//! GF(2) nullspace extraction and random codeword generation.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::graph::TannerGraph;

/// Basis of the codeword space: `K = N - rank(H)` independent codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordBasis {
    n_vars: usize,
    vectors: Vec<Vec<u8>>,
}

impl CodewordBasis {
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn vectors(&self) -> &[Vec<u8>] {
        &self.vectors
    }
}

/// Dense bit-matrix rows, one `u64` word per 64 columns.
struct BitMatrix {
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    fn from_graph(graph: &TannerGraph) -> Self {
        let words = graph.n_vars().div_ceil(64);
        let mut rows = vec![vec![0u64; words]; graph.n_checks()];
        for m in 0..graph.n_checks() {
            for &e in graph.cn_edges(m) {
                let n = graph.edge_var(e);
                rows[m][n / 64] |= 1u64 << (n % 64);
            }
        }
        Self { words, rows }
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> bool {
        (self.rows[r][c / 64] >> (c % 64)) & 1 == 1
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        if dst == src {
            return;
        }
        let (a, b) = if dst < src {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&mut lo[dst], &hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&mut hi[0], &lo[src])
        };
        for w in 0..self.words {
            a[w] ^= b[w];
        }
    }
}

/// Reduced row echelon form over GF(2); `K = N - rank` basis vectors are
/// read off the free columns. Every returned vector satisfies every check.
pub fn nullspace_basis(graph: &TannerGraph) -> CodewordBasis {
    let n = graph.n_vars();
    let mut mat = BitMatrix::from_graph(graph);
    let m = mat.rows.len();

    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut pivot_row = 0usize;
    for col in 0..n {
        if pivot_row == m {
            break;
        }
        let Some(r) = (pivot_row..m).find(|&r| mat.get(r, col)) else {
            continue;
        };
        mat.rows.swap(pivot_row, r);
        for r2 in 0..m {
            if r2 != pivot_row && mat.get(r2, col) {
                mat.xor_rows(r2, pivot_row);
            }
        }
        pivot_cols.push(col);
        pivot_row += 1;
    }

    let mut is_pivot = vec![false; n];
    for &c in &pivot_cols {
        is_pivot[c] = true;
    }

    let mut vectors = Vec::with_capacity(n - pivot_cols.len());
    for free in (0..n).filter(|&c| !is_pivot[c]) {
        let mut v = vec![0u8; n];
        v[free] = 1;
        for (r, &p) in pivot_cols.iter().enumerate() {
            if mat.get(r, free) {
                v[p] = 1;
            }
        }
        debug_assert!(graph.is_codeword(&v));
        vectors.push(v);
    }

    CodewordBasis { n_vars: n, vectors }
}

/// Uniform random GF(2) combination of the basis vectors; the zero word when
/// the basis is empty. The syndrome of the result is always zero.
pub fn random_codeword<R: RngCore + ?Sized>(basis: &CodewordBasis, rng: &mut R) -> Vec<u8> {
    let mut word = vec![0u8; basis.n_vars];
    let mut coeff_bits = 0u64;
    for (k, v) in basis.vectors.iter().enumerate() {
        if k % 64 == 0 {
            coeff_bits = rng.next_u64();
        }
        if (coeff_bits >> (k % 64)) & 1 == 1 {
            for (w, b) in word.iter_mut().zip(v) {
                *w ^= b;
            }
        }
    }
    word
}

/// Deterministic combination selected by explicit coefficient bits, used by
/// the exhaustive oracle and in tests.
pub fn combine(basis: &CodewordBasis, coefficients: u64) -> Vec<u8> {
    let mut word = vec![0u8; basis.n_vars];
    for (k, v) in basis.vectors.iter().enumerate() {
        if (coefficients >> k) & 1 == 1 {
            for (w, b) in word.iter_mut().zip(v) {
                *w ^= b;
            }
        }
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{hamming_7_4, TannerGraph};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn hamming_dimension_and_span() {
        let g = hamming_7_4();
        let basis = nullspace_basis(&g);
        assert_eq!(basis.dimension(), 4);
        // All 16 spanned words are distinct codewords.
        let mut seen = BTreeSet::new();
        for c in 0u64..16 {
            let w = combine(&basis, c);
            assert!(g.is_codeword(&w), "combination {c} fails syndrome");
            seen.insert(w);
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn identity_matrix_has_empty_nullspace() {
        let pairs: Vec<(usize, usize)> = (0..5).map(|i| (i, i)).collect();
        let g = TannerGraph::from_edges(5, 5, &pairs).unwrap();
        let basis = nullspace_basis(&g);
        assert_eq!(basis.dimension(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_codeword(&basis, &mut rng), vec![0u8; 5]);
    }

    #[test]
    fn rank_plus_dimension_is_n() {
        // Redundant-row matrix: duplicate a parity constraint via a second
        // check over the same support split differently.
        // H = [1 1 0; 0 1 1; 1 0 1] has rank 2 over GF(2).
        let g = TannerGraph::from_edges(3, 3, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)])
            .unwrap();
        let basis = nullspace_basis(&g);
        assert_eq!(basis.dimension(), 1);
        assert_eq!(basis.vectors()[0], vec![1, 1, 1]);
    }

    #[test]
    fn single_coefficient_returns_basis_vector() {
        let g = hamming_7_4();
        let basis = nullspace_basis(&g);
        assert_eq!(combine(&basis, 0b1000), basis.vectors()[3]);
    }

    #[test]
    fn random_codewords_are_uniform() {
        let g = hamming_7_4();
        let basis = nullspace_basis(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let w = random_codeword(&basis, &mut rng);
            assert!(g.is_codeword(&w));
            *counts.entry(w).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 16, "all 16 codewords observed");
        // Binomial(10^4, 1/16): mean 625, sigma ~= 24.2; require 5 sigma.
        let mean = draws as f64 / 16.0;
        let sigma = (draws as f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
        for (w, c) in counts {
            let dev = (c as f64 - mean).abs();
            assert!(dev < 5.0 * sigma, "codeword {w:?} count {c} deviates {dev:.1}");
        }
    }
}

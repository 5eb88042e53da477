//! Exhaustive ML decoding over the full codeword space of small codes.
//!
//! Enumeration walks the 2^K combinations in Gray-code order so each step
//! XORs a single basis vector and updates the metric incrementally, which
//! keeps K up to 20 practical.

use alloc::vec;
use alloc::vec::Vec;

use crate::bp::LlrFrame;
use crate::gf2::CodewordBasis;
use crate::reprocess::CandidateMetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("code dimension {dimension} exceeds enumeration cap {max}")]
    DimensionTooLarge { dimension: usize, max: usize },
}

/// Enumeration guard rail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_dimension: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_dimension: 20 }
    }
}

/// Exhaustive ML decode under the correlation metric; ties resolve to the
/// lexicographically smallest codeword.
pub fn ml_decode(
    basis: &CodewordBasis,
    frame: &LlrFrame,
    limits: &OracleLimits,
) -> Result<Vec<u8>, OracleError> {
    ml_decode_with_metric(basis, frame, CandidateMetric::Correlation, limits)
}

/// ML decode under either candidate metric.
pub fn ml_decode_with_metric(
    basis: &CodewordBasis,
    frame: &LlrFrame,
    metric: CandidateMetric,
    limits: &OracleLimits,
) -> Result<Vec<u8>, OracleError> {
    let k = basis.dimension();
    if k > limits.max_dimension {
        return Err(OracleError::DimensionTooLarge {
            dimension: k,
            max: limits.max_dimension,
        });
    }
    let r = frame.values();
    debug_assert_eq!(r.len(), basis.n_vars());

    let supports: Vec<Vec<usize>> = basis
        .vectors()
        .iter()
        .map(|v| v.iter().enumerate().filter(|(_, &b)| b == 1).map(|(n, _)| n).collect())
        .collect();

    let mut word = vec![0u8; basis.n_vars()];
    // Running metric terms: correlation sum and squared literal distance.
    let mut corr: f64 = r.iter().sum();
    let mut sq: f64 = r.iter().map(|&v| v * v).sum();
    let score = |corr: f64, sq: f64| match metric {
        CandidateMetric::Correlation => corr,
        CandidateMetric::Literal => -libm::sqrt(sq),
    };

    let mut best = word.clone();
    let mut best_score = score(corr, sq);

    for step in 1u64..(1u64 << k) {
        let flip = step.trailing_zeros() as usize;
        for &n in &supports[flip] {
            let old = word[n] as f64;
            corr -= 2.0 * (1.0 - 2.0 * old) * r[n];
            let d_old = r[n] - old;
            let d_new = r[n] - (1.0 - old);
            sq += d_new * d_new - d_old * d_old;
            word[n] ^= 1;
        }
        let s = score(corr, sq);
        if s > best_score || (s == best_score && word < best) {
            best_score = s;
            best.copy_from_slice(&word);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{combine, nullspace_basis};
    use crate::graph::hamming_7_4;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn hamming_basis() -> CodewordBasis {
        nullspace_basis(&hamming_7_4())
    }

    // Direct 16-term evaluation, no Gray stepping, no incremental metric.
    fn brute_force_corr(basis: &CodewordBasis, frame: &LlrFrame) -> Vec<u8> {
        let mut best: Option<(f64, Vec<u8>)> = None;
        for c in 0..(1u64 << basis.dimension()) {
            let w = combine(basis, c);
            let s: f64 = w
                .iter()
                .zip(frame.values())
                .map(|(&x, &r)| (1.0 - 2.0 * x as f64) * r)
                .sum();
            match &best {
                None => best = Some((s, w)),
                Some((bs, bw)) => {
                    if s > *bs || (s == *bs && w < *bw) {
                        best = Some((s, w));
                    }
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn noiseless_frame_returns_transmitted_word() {
        let g = hamming_7_4();
        let basis = nullspace_basis(&g);
        for c in 0..16u64 {
            let tx = combine(&basis, c);
            let frame = LlrFrame::new(
                tx.iter().map(|&b| if b == 0 { 5.0 } else { -5.0 }).collect(),
            )
            .unwrap();
            let got = ml_decode(&basis, &frame, &OracleLimits::default()).unwrap();
            assert_eq!(got, tx);
        }
    }

    #[test]
    fn skewed_frame_matches_exhaustive_table() {
        let basis = hamming_basis();
        let frame = LlrFrame::new(alloc::vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -3.0]).unwrap();
        let expect = brute_force_corr(&basis, &frame);
        let got = ml_decode(&basis, &frame, &OracleLimits::default()).unwrap();
        assert_eq!(got, expect);
        // Three weight-3 words containing position 7 tie at correlation 5,
        // beating the all-zero word's 3; lexicographic order picks 0011001.
        assert_eq!(got, alloc::vec![0, 0, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn positive_scaling_never_changes_argmax() {
        let basis = hamming_basis();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let normal = Normal::new(0.5, 1.5).unwrap();
        for _ in 0..200 {
            let vals: Vec<f64> = (0..7).map(|_| normal.sample(&mut rng)).collect();
            let scaled: Vec<f64> = vals.iter().map(|v| 3.0 * v).collect();
            let a = ml_decode(&basis, &LlrFrame::new(vals).unwrap(), &OracleLimits::default())
                .unwrap();
            let b = ml_decode(&basis, &LlrFrame::new(scaled).unwrap(), &OracleLimits::default())
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn output_is_always_a_codeword() {
        let g = hamming_7_4();
        let basis = nullspace_basis(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let normal = Normal::new(0.0, 2.0).unwrap();
        for _ in 0..500 {
            let frame =
                LlrFrame::new((0..7).map(|_| normal.sample(&mut rng)).collect()).unwrap();
            let w = ml_decode(&basis, &frame, &OracleLimits::default()).unwrap();
            assert!(g.is_codeword(&w));
        }
    }

    #[test]
    fn gray_walk_agrees_with_direct_evaluation() {
        let basis = hamming_basis();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let normal = Normal::new(0.3, 1.0).unwrap();
        for _ in 0..500 {
            let frame =
                LlrFrame::new((0..7).map(|_| normal.sample(&mut rng)).collect()).unwrap();
            let fast = ml_decode(&basis, &frame, &OracleLimits::default()).unwrap();
            let slow = brute_force_corr(&basis, &frame);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn correlation_equals_euclidean_on_modulated_candidates() {
        // The correlation argmax equals the argmin of Euclidean distance to
        // the BPSK-modulated candidate; the two differ only by terms that do
        // not depend on the candidate.
        let basis = hamming_basis();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = Normal::new(0.0, 1.8).unwrap();
        for _ in 0..1000 {
            let frame =
                LlrFrame::new((0..7).map(|_| normal.sample(&mut rng)).collect()).unwrap();
            let corr_pick = ml_decode(&basis, &frame, &OracleLimits::default()).unwrap();
            let mut best: Option<(f64, Vec<u8>)> = None;
            for c in 0..16u64 {
                let w = combine(&basis, c);
                let d: f64 = w
                    .iter()
                    .zip(frame.values())
                    .map(|(&x, &r)| {
                        let e = r - (1.0 - 2.0 * x as f64);
                        e * e
                    })
                    .sum();
                if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                    best = Some((d, w));
                }
            }
            assert_eq!(corr_pick, best.unwrap().1);
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let basis = hamming_basis();
        let frame = LlrFrame::new(alloc::vec![1.0; 7]).unwrap();
        let err = ml_decode(&basis, &frame, &OracleLimits { max_dimension: 3 });
        assert_eq!(
            err,
            Err(OracleError::DimensionTooLarge {
                dimension: 4,
                max: 3
            })
        );
    }
}

//! BPSK/QPSK modulation, AWGN, and LLR demapping.
//!
//! Symbols are represented as flat real dimensions: one per bit for BPSK,
//! and the I/Q pair of each Gray-mapped QPSK symbol occupies two
//! consecutive entries. Noise is i.i.d. Gaussian per real dimension either
//! way, which is what makes Gray QPSK decompose into independent BPSK
//! sub-channels.

use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::bp::LlrFrame;
use crate::graph::PunctureMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("QPSK requires an even number of bits, got {0}")]
    OddLengthQpsk(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    QpskGray,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Bpsk => 1,
            Modulation::QpskGray => 2,
        }
    }
}

/// Eb/N0 operating point for a given code rate and modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub modulation: Modulation,
    pub ebn0_db: f64,
    /// Code rate over the transmitted positions.
    pub code_rate: f64,
}

impl ChannelConfig {
    /// Per-dimension noise standard deviation:
    /// `sigma^2 = 1 / (2 R k 10^(ebn0/10))`.
    pub fn sigma(&self) -> f64 {
        let k = self.modulation.bits_per_symbol() as f64;
        let ebn0 = libm::pow(10.0, self.ebn0_db / 10.0);
        libm::sqrt(1.0 / (2.0 * self.code_rate * k * ebn0))
    }

    /// Inverse of [`ChannelConfig::sigma`] for the same rate and modulation.
    pub fn ebn0_from_sigma(sigma: f64, code_rate: f64, modulation: Modulation) -> f64 {
        let k = modulation.bits_per_symbol() as f64;
        10.0 * libm::log10(1.0 / (2.0 * code_rate * k * sigma * sigma))
    }
}

/// Map bits to unit-energy symbols, one real dimension per bit.
/// Bit 0 maps to the positive amplitude in each dimension.
pub fn modulate(bits: &[u8], modulation: Modulation) -> Result<Vec<f64>, ChannelError> {
    let amp = match modulation {
        Modulation::Bpsk => 1.0,
        Modulation::QpskGray => {
            if bits.len() % 2 != 0 {
                return Err(ChannelError::OddLengthQpsk(bits.len()));
            }
            core::f64::consts::FRAC_1_SQRT_2
        }
    };
    Ok(bits
        .iter()
        .map(|&b| if b & 1 == 0 { amp } else { -amp })
        .collect())
}

/// Add iid Gaussian noise of standard deviation `sigma` per real dimension.
pub fn add_noise<R: RngCore + ?Sized>(symbols: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    symbols
        .iter()
        .map(|&s| {
            let n: f64 = StandardNormal.sample(rng);
            s + sigma * n
        })
        .collect()
}

/// Gaussian-channel LLRs: `2y/sigma^2` for BPSK, `sqrt(2) y/sigma^2` per
/// dimension for unit-energy Gray QPSK. Clamped to `[-alpha, alpha]`.
pub fn demap_llr(y: &[f64], sigma: f64, modulation: Modulation, alpha: f64) -> LlrFrame {
    let scale = match modulation {
        Modulation::Bpsk => 2.0 / (sigma * sigma),
        Modulation::QpskGray => core::f64::consts::SQRT_2 / (sigma * sigma),
    };
    LlrFrame::from_finite(
        y.iter()
            .map(|&v| (scale * v).clamp(-alpha, alpha))
            .collect(),
    )
}

/// Zero the LLRs of punctured positions; everything else is untouched.
pub fn apply_puncturing(frame: &LlrFrame, mask: &PunctureMask) -> LlrFrame {
    let mut out = frame.clone();
    for &v in mask.indices() {
        out.values_mut()[v] = 0.0;
    }
    out
}

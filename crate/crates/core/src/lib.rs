//! Saturation-based quasi-ML decoding of short LDPC codes.
//!
//! This crate holds the algorithmic core: Tanner-graph code structure,
//! flooding belief propagation (min-sum and sum-product) with sign-flip
//! instrumentation, unreliable-node selection (node-wise and edge-wise),
//! the saturation reprocessing branch tree with list-decoding and
//! partial-pruning stopping rules, AWGN channel math, and a brute-force
//! ML oracle for small codes.
//!
//! The crate is `no_std` (alloc required); everything that touches files,
//! threads, or a terminal lives in the companion `eqml-sim` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod alist;
pub mod bp;
pub mod channel;
pub mod gf2;
pub mod graph;
pub mod oracle;
pub mod reprocess;
pub mod selection;

pub use bp::{decode, BpConfig, BpRun, BpVariant, LlrFrame};
pub use graph::{PunctureMask, TannerGraph};
pub use reprocess::{decode_frame, DecodeOutcome, Status, StopRule, TreeConfig};

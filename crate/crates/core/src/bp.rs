//! Flooding-schedule belief propagation with per-edge sign-flip counters.
//!
//! Min-sum and sum-product check rules share the same variable-node rule and
//! the same saturation constant `alpha`: every channel LLR, message, and APP
//! is clamped to `[-alpha, +alpha]`, so `+alpha`/`-alpha` express maximum
//! belief. Hard decisions and sign-flip counting both treat a value of
//! exactly 0 as positive (bit 0).

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{GraphError, TannerGraph};

/// Per-frame channel LLR vector, natural-log units; positive favors bit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    values: Vec<f64>,
}

impl LlrFrame {
    /// Rejects non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self, GraphError> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GraphError::NonFiniteLlr { index: pos });
        }
        Ok(Self { values })
    }

    /// Builds without the finiteness scan; callers guarantee finite input.
    pub fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copy with every entry clamped to `[-alpha, alpha]`.
    pub fn clamped(&self, alpha: f64) -> LlrFrame {
        LlrFrame {
            values: self.values.iter().map(|&v| clamp(v, alpha)).collect(),
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Check-node update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpVariant {
    MinSum,
    SumProduct,
}

/// Decoder configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub variant: BpVariant,
    pub max_iters: u32,
    /// Multiplicative factor on min-sum check magnitudes, in (0, 1].
    pub normalization: f64,
    /// Saturation magnitude `alpha`.
    pub alpha: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            variant: BpVariant::MinSum,
            max_iters: 30,
            normalization: 1.0,
            alpha: 1000.0,
        }
    }
}

/// One completed BP execution.
#[derive(Debug, Clone)]
pub struct BpRun {
    /// Variable-to-check messages after the last iteration, per edge.
    pub v2c: Vec<f64>,
    /// Check-to-variable messages after the last iteration, per edge.
    pub c2v: Vec<f64>,
    /// A posteriori LLR per variable node.
    pub app: Vec<f64>,
    pub hard_decision: Vec<u8>,
    /// True iff the hard decision satisfies every parity check.
    pub converged: bool,
    pub iterations_used: u32,
    /// Sign flips of the V2C message on each edge across the run.
    pub flip_count_edge: Vec<u32>,
    /// Per-VN totals: sum of `flip_count_edge` over the VN's edges.
    pub flip_count_vn: Vec<u32>,
    /// Percentage of edges whose V2C sign changed, one entry per iteration
    /// starting from the second.
    pub flip_pct_per_iter: Vec<f64>,
}

#[inline]
fn clamp(x: f64, alpha: f64) -> f64 {
    if x > alpha {
        alpha
    } else if x < -alpha {
        -alpha
    } else {
        x
    }
}

#[inline]
fn is_neg(x: f64) -> bool {
    // sign(0) counts as positive everywhere.
    x < 0.0
}

/// Min-sum check-node rule on one check's incoming messages.
///
/// Output `k` is `normalization` times the product of the signs of all other
/// inputs times their minimum magnitude. A degree-1 check has no other
/// inputs and emits `+alpha`.
pub fn check_update(incoming: &[f64], normalization: f64, alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; incoming.len()];
    check_update_into(incoming, normalization, alpha, &mut out);
    out
}

pub(crate) fn check_update_into(incoming: &[f64], normalization: f64, alpha: f64, out: &mut [f64]) {
    let deg = incoming.len();
    debug_assert_eq!(out.len(), deg);
    if deg == 1 {
        out[0] = alpha;
        return;
    }
    let mut sign_product = 1.0f64;
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut min1_idx = 0usize;
    for (i, &x) in incoming.iter().enumerate() {
        let mag = if x < 0.0 {
            sign_product = -sign_product;
            -x
        } else {
            x
        };
        if mag < min1 {
            min2 = min1;
            min1 = mag;
            min1_idx = i;
        } else if mag < min2 {
            min2 = mag;
        }
    }
    for (i, &x) in incoming.iter().enumerate() {
        let own_sign = if is_neg(x) { -1.0 } else { 1.0 };
        let excl_min = if i == min1_idx { min2 } else { min1 };
        out[i] = clamp(normalization * sign_product * own_sign * excl_min, alpha);
    }
}

/// Sum-product check-node rule: `2 atanh(prod tanh(in/2))` over the other
/// inputs, magnitudes clamped to `alpha`.
pub fn check_update_spa(incoming: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; incoming.len()];
    let mut scratch = vec![0.0; incoming.len()];
    check_update_spa_into(incoming, alpha, &mut scratch, &mut out);
    out
}

pub(crate) fn check_update_spa_into(
    incoming: &[f64],
    alpha: f64,
    tanh_scratch: &mut [f64],
    out: &mut [f64],
) {
    let deg = incoming.len();
    debug_assert_eq!(out.len(), deg);
    if deg == 1 {
        out[0] = alpha;
        return;
    }
    for (t, &x) in tanh_scratch.iter_mut().zip(incoming) {
        *t = libm::tanh(x * 0.5);
    }
    // Leave-one-out products via prefix/suffix sweeps.
    let mut prefix = 1.0f64;
    for i in 0..deg {
        out[i] = prefix;
        prefix *= tanh_scratch[i];
    }
    let mut suffix = 1.0f64;
    for i in (0..deg).rev() {
        out[i] *= suffix;
        suffix *= tanh_scratch[i];
    }
    for o in out.iter_mut() {
        *o = clamp(2.0 * libm::atanh(*o), alpha);
    }
}

/// Variable-node rule: APP is the channel LLR plus all incoming messages,
/// each outgoing message excludes its own edge's input, everything clamped.
pub fn variable_update(channel_llr: f64, incoming_c2v: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let total: f64 = channel_llr + incoming_c2v.iter().sum::<f64>();
    let v2c = incoming_c2v
        .iter()
        .map(|&c| clamp(total - c, alpha))
        .collect();
    (v2c, clamp(total, alpha))
}

/// Flooding BP decode: check updates, variable updates, hard decision, and
/// syndrome test each iteration, with early exit on a zero syndrome.
///
/// The V2C sign of every edge is compared against the previous iteration
/// starting from iteration 2; `flip_count_edge` accumulates per-edge flips
/// and `flip_pct_per_iter` the per-iteration percentage over all edges.
pub fn decode(graph: &TannerGraph, frame: &LlrFrame, cfg: &BpConfig) -> Result<BpRun, GraphError> {
    let n = graph.n_vars();
    if frame.len() != n {
        return Err(GraphError::LengthMismatch {
            expected: n,
            actual: frame.len(),
        });
    }
    debug_assert!(cfg.max_iters >= 1 && cfg.alpha > 0.0);
    let n_edges = graph.n_edges();
    let alpha = cfg.alpha;

    let channel: Vec<f64> = frame.values().iter().map(|&v| clamp(v, alpha)).collect();
    let mut v2c = vec![0.0f64; n_edges];
    for e in 0..n_edges {
        v2c[e] = channel[graph.edge_var(e as u32)];
    }
    let mut c2v = vec![0.0f64; n_edges];
    let mut app = vec![0.0f64; n];
    let mut hard = vec![0u8; n];
    let mut prev_neg = vec![false; n_edges];
    let mut flip_count_edge = vec![0u32; n_edges];
    let mut flip_pct_per_iter: Vec<f64> = Vec::new();

    let max_check_deg = (0..graph.n_checks())
        .map(|m| graph.cn_edges(m).len())
        .max()
        .unwrap_or(0);
    let mut gather = vec![0.0f64; max_check_deg];
    let mut scatter = vec![0.0f64; max_check_deg];
    let mut tanh_scratch = vec![0.0f64; max_check_deg];

    let mut converged = false;
    let mut iterations_used = cfg.max_iters;

    for iter in 1..=cfg.max_iters {
        // Check-node update.
        for m in 0..graph.n_checks() {
            let edges = graph.cn_edges(m);
            let deg = edges.len();
            for (slot, &e) in gather.iter_mut().zip(edges) {
                *slot = v2c[e as usize];
            }
            match cfg.variant {
                BpVariant::MinSum => {
                    check_update_into(&gather[..deg], cfg.normalization, alpha, &mut scatter[..deg])
                }
                BpVariant::SumProduct => check_update_spa_into(
                    &gather[..deg],
                    alpha,
                    &mut tanh_scratch[..deg],
                    &mut scatter[..deg],
                ),
            }
            for (&o, &e) in scatter.iter().zip(edges) {
                c2v[e as usize] = o;
            }
        }

        // Variable-node update.
        for v in 0..n {
            let edges = graph.vn_edges(v);
            let mut total = channel[v];
            for &e in edges {
                total += c2v[e as usize];
            }
            app[v] = clamp(total, alpha);
            for &e in edges {
                v2c[e as usize] = clamp(total - c2v[e as usize], alpha);
            }
        }

        // Sign-flip bookkeeping; the first iteration only records signs.
        if iter >= 2 {
            let mut flipped = 0usize;
            for e in 0..n_edges {
                let neg = is_neg(v2c[e]);
                if neg != prev_neg[e] {
                    flip_count_edge[e] += 1;
                    flipped += 1;
                }
                prev_neg[e] = neg;
            }
            flip_pct_per_iter.push(100.0 * flipped as f64 / n_edges as f64);
        } else {
            for e in 0..n_edges {
                prev_neg[e] = is_neg(v2c[e]);
            }
        }

        for v in 0..n {
            hard[v] = if is_neg(app[v]) { 1 } else { 0 };
        }
        if graph.is_codeword(&hard) {
            converged = true;
            iterations_used = iter;
            break;
        }
    }

    let mut flip_count_vn = vec![0u32; n];
    for v in 0..n {
        flip_count_vn[v] = graph.vn_edges(v).iter().map(|&e| flip_count_edge[e as usize]).sum();
    }

    Ok(BpRun {
        v2c,
        c2v,
        app,
        hard_decision: hard,
        converged,
        iterations_used,
        flip_count_edge,
        flip_count_vn,
        flip_pct_per_iter,
    })
}

//! V2C sign-flip diagnostics: per-iteration flip percentages split by
//! decoding outcome, reproducing the divergence between converging and
//! stuck min-sum runs.

use anyhow::{bail, Result};
use rayon::prelude::*;

use eqml_core::bp::{decode, BpVariant};
use eqml_core::channel::ChannelConfig;

use crate::config::{DecoderKind, RunConfig};
use crate::csv_out::sig6;
use crate::sweep::{bp_config, generate_frame, make_pool, BATCH_FRAMES};

/// Raw traces: `(frame_id, flip percentages for iterations 2..)`.
#[derive(Debug, Clone, Default)]
pub struct FlipTraces {
    pub converged: Vec<(u64, Vec<f64>)>,
    pub failed: Vec<(u64, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct FlipSummary {
    pub converged_frames: u64,
    pub failed_frames: u64,
    /// Mean flip pct at each iteration (starting at 2) over the frames of
    /// the population still running at that iteration.
    pub converged_iter_means: Vec<(u32, f64, u64)>,
    pub failed_iter_means: Vec<(u32, f64, u64)>,
    /// Mean of each converged frame's final flip entry.
    pub converged_final_mean: f64,
}

impl FlipSummary {
    /// Per-iteration means of the failed population over its last `k`
    /// iterations (failed runs always use the full budget).
    pub fn failed_last_means(&self, k: usize) -> Vec<f64> {
        let n = self.failed_iter_means.len();
        self.failed_iter_means[n.saturating_sub(k)..]
            .iter()
            .map(|&(_, m, _)| m)
            .collect()
    }
}

fn iter_means(traces: &[(u64, Vec<f64>)]) -> Vec<(u32, f64, u64)> {
    let longest = traces.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    (0..longest)
        .map(|i| {
            let entries: Vec<f64> = traces
                .iter()
                .filter_map(|(_, t)| t.get(i).copied())
                .collect();
            let mean = entries.iter().sum::<f64>() / entries.len() as f64;
            (i as u32 + 2, mean, entries.len() as u64)
        })
        .collect()
}

fn summarize(traces: &FlipTraces) -> FlipSummary {
    let finals: Vec<f64> = traces
        .converged
        .iter()
        .filter_map(|(_, t)| t.last().copied())
        .collect();
    let converged_final_mean = if finals.is_empty() {
        0.0
    } else {
        finals.iter().sum::<f64>() / finals.len() as f64
    };
    FlipSummary {
        converged_frames: traces.converged.len() as u64,
        failed_frames: traces.failed.len() as u64,
        converged_iter_means: iter_means(&traces.converged),
        failed_iter_means: iter_means(&traces.failed),
        converged_final_mean,
    }
}

/// Run the plain min-sum decoder on generated frames until both outcome
/// populations hold `min_per_population` members (or `cap` frames have been
/// spent), collecting each run's flip-percentage trace.
pub fn diagnose_flips(
    cfg: &RunConfig,
    ebn0_db: f64,
    min_per_population: u64,
    cap: u64,
) -> Result<(FlipTraces, FlipSummary)> {
    if cfg.decoder != DecoderKind::Ms {
        bail!("diagnose-flips runs the plain ms decoder");
    }
    let code = crate::config::load_code(&cfg.code, cfg.puncture.as_deref())?;
    let pool = make_pool(cfg.workers)?;
    let sigma = ChannelConfig {
        modulation: cfg.modulation,
        ebn0_db,
        code_rate: code.code_rate,
    }
    .sigma();
    let bp = bp_config(cfg, BpVariant::MinSum, cfg.i_max);

    let mut traces = FlipTraces::default();
    let mut next = 0u64;
    while ((traces.converged.len() as u64) < min_per_population
        || (traces.failed.len() as u64) < min_per_population)
        && next < cap
    {
        let lo = next;
        let hi = (lo + BATCH_FRAMES).min(cap);
        next = hi;
        let batch: Vec<(u64, bool, Vec<f64>)> = pool.install(|| {
            (lo..hi)
                .into_par_iter()
                .map(|f| {
                    let (_, frame) = generate_frame(&code, cfg, sigma, f);
                    let run = decode(&code.graph, &frame, &bp).expect("lengths validated");
                    (f, run.converged, run.flip_pct_per_iter)
                })
                .collect()
        });
        for (f, converged, trace) in batch {
            if converged {
                traces.converged.push((f, trace));
            } else {
                traces.failed.push((f, trace));
            }
        }
    }
    let summary = summarize(&traces);
    Ok((traces, summary))
}

pub const TRACE_HEADER: &str = "iter,pct,outcome,frame_id";
pub const SUMMARY_HEADER: &str = "iter,outcome,mean_pct,frames";

pub fn traces_csv(traces: &FlipTraces) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    let mut emit = |rows: &[(u64, Vec<f64>)], outcome: &str| {
        for (frame_id, trace) in rows {
            for (i, pct) in trace.iter().enumerate() {
                out.push_str(&format!("{},{},{outcome},{frame_id}\n", i + 2, sig6(*pct)));
            }
        }
    };
    emit(&traces.converged, "converged");
    emit(&traces.failed, "failed");
    out
}

pub fn summary_csv(summary: &FlipSummary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for &(iter, mean, frames) in &summary.converged_iter_means {
        out.push_str(&format!("{iter},converged,{},{frames}\n", sig6(mean)));
    }
    for &(iter, mean, frames) in &summary.failed_iter_means {
        out.push_str(&format!("{iter},failed,{},{frames}\n", sig6(mean)));
    }
    out
}

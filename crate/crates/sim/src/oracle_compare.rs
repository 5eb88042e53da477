//! Paired Monte Carlo comparison of a decoder against exhaustive ML on the
//! same noise realizations.

use anyhow::{anyhow, Result};
use rayon::prelude::*;

use eqml_core::channel::ChannelConfig;
use eqml_core::oracle::{ml_decode_with_metric, OracleLimits};

use crate::config::{LoadedCode, RunConfig};
use crate::csv_out::sig6;
use crate::sweep::{decode_one, generate_frame, make_pool, BATCH_FRAMES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub ml_errors: u64,
    pub dec_errors: u64,
    /// Frames where the decoder output differs from the ML output.
    pub disagreements: u64,
    /// Frames whose first-pass decode failed.
    pub reprocessed: u64,
    /// Among those, frames where the decoder still matched ML.
    pub reprocessed_agree: u64,
}

impl PairedPoint {
    fn empty(ebn0_db: f64) -> Self {
        Self {
            ebn0_db,
            frames: 0,
            ml_errors: 0,
            dec_errors: 0,
            disagreements: 0,
            reprocessed: 0,
            reprocessed_agree: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.frames += other.frames;
        self.ml_errors += other.ml_errors;
        self.dec_errors += other.dec_errors;
        self.disagreements += other.disagreements;
        self.reprocessed += other.reprocessed;
        self.reprocessed_agree += other.reprocessed_agree;
        self
    }

    pub fn fer_ml(&self) -> f64 {
        self.ml_errors as f64 / self.frames.max(1) as f64
    }

    pub fn fer_decoder(&self) -> f64 {
        self.dec_errors as f64 / self.frames.max(1) as f64
    }

    pub fn disagreement_rate(&self) -> f64 {
        self.disagreements as f64 / self.frames.max(1) as f64
    }

    /// Fraction of first-pass failures where the decoder matched ML.
    pub fn reprocessed_agreement(&self) -> f64 {
        if self.reprocessed == 0 {
            1.0
        } else {
            self.reprocessed_agree as f64 / self.reprocessed as f64
        }
    }
}

/// Decode `frames` frames per Eb/N0 point with both the configured decoder
/// and the exhaustive ML reference, using common random numbers.
pub fn oracle_compare(cfg: &RunConfig, frames: u64) -> Result<Vec<PairedPoint>> {
    cfg.validate()?;
    let code = crate::config::load_code(&cfg.code, cfg.puncture.as_deref())?;
    let limits = OracleLimits::default();
    if code.basis.dimension() > limits.max_dimension {
        return Err(anyhow!(
            "code dimension {} exceeds the ML enumeration cap {}",
            code.basis.dimension(),
            limits.max_dimension
        ));
    }
    let pool = make_pool(cfg.workers)?;
    cfg.ebn0
        .iter()
        .map(|&ebn0_db| run_point(&code, cfg, ebn0_db, frames, &pool))
        .collect()
}

fn run_point(
    code: &LoadedCode,
    cfg: &RunConfig,
    ebn0_db: f64,
    frames: u64,
    pool: &rayon::ThreadPool,
) -> Result<PairedPoint> {
    let sigma = ChannelConfig {
        modulation: cfg.modulation,
        ebn0_db,
        code_rate: code.code_rate,
    }
    .sigma();
    let limits = OracleLimits::default();
    let mut acc = PairedPoint::empty(ebn0_db);
    let mut next = 0u64;
    while next < frames {
        let lo = next;
        let hi = (lo + BATCH_FRAMES).min(frames);
        next = hi;
        let batch = pool.install(|| {
            (lo..hi)
                .into_par_iter()
                .map(|f| {
                    let (tx, frame) = generate_frame(code, cfg, sigma, f);
                    let ml = ml_decode_with_metric(&code.basis, &frame, cfg.metric, &limits)
                        .expect("dimension checked");
                    let out = decode_one(code, cfg, tx, &frame);
                    let mut p = PairedPoint::empty(ebn0_db);
                    p.frames = 1;
                    p.ml_errors = u64::from(ml != out.transmitted);
                    p.dec_errors = u64::from(out.frame_error());
                    p.disagreements = u64::from(out.output != ml);
                    p.reprocessed = u64::from(out.reprocessed);
                    p.reprocessed_agree = u64::from(out.reprocessed && out.output == ml);
                    p
                })
                .reduce(|| PairedPoint::empty(ebn0_db), PairedPoint::merge)
        });
        acc = acc.merge(batch);
    }
    Ok(acc)
}

pub const PAIRED_HEADER: &str = "ebn0_db,fer_ml,fer_decoder,disagreement_rate,frames";

pub fn paired_csv(points: &[PairedPoint]) -> String {
    let mut out = String::from(PAIRED_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sig6(p.ebn0_db),
            sig6(p.fer_ml()),
            sig6(p.fer_decoder()),
            sig6(p.disagreement_rate()),
            p.frames,
        ));
    }
    out
}

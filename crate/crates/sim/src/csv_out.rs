//! CSV emission with fixed headers and 6-significant-digit floats.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use crate::sweep::SweepStats;

/// Format with 6 significant digits, plain notation for moderate exponents
/// and scientific otherwise.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Strip trailing zeros and a dangling point.
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

pub const SWEEP_HEADER: &str = "ebn0_db,frames,frame_errors,bit_errors,fer,ber,i_avg,avg_tests,elapsed_s";

pub fn sweep_csv(stats: &[SweepStats]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sig6(s.ebn0_db),
            s.frames,
            s.frame_errors,
            s.bit_errors,
            sig6(s.fer()),
            sig6(s.ber()),
            sig6(s.i_avg()),
            sig6(s.avg_tests()),
            sig6(s.elapsed_s),
        ));
    }
    out
}

pub fn write_sweep_csv(stats: &[SweepStats], path: &Path) -> Result<()> {
    fs::write(path, sweep_csv(stats)).with_context(|| format!("writing {}", path.display()))
}

/// Key=value sidecar describing run conventions; lives next to the CSV so
/// the CSV itself stays header-plus-rows.
pub fn write_metadata(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

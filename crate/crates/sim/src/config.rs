//! Run configuration: defaults, key=value config files, and code loading.
//!
//! The config file is a flat `key = value` text file whose keys are the CLI
//! flag names (without the leading dashes); flags given on the command line
//! win on conflict.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use eqml_core::channel::Modulation;
use eqml_core::gf2::{nullspace_basis, CodewordBasis};
use eqml_core::graph::PunctureMask;
use eqml_core::reprocess::{CandidateMetric, StopRule};
use eqml_core::TannerGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Ms,
    Spa,
    AbpNws,
    EqmlEws,
    Sms,
}

impl DecoderKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ms" => Self::Ms,
            "spa" => Self::Spa,
            "abp-nws" => Self::AbpNws,
            "eqml-ews" => Self::EqmlEws,
            "sms" => Self::Sms,
            other => bail!("unknown decoder '{other}' (ms, spa, abp-nws, eqml-ews, sms)"),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ms => "ms",
            Self::Spa => "spa",
            Self::AbpNws => "abp-nws",
            Self::EqmlEws => "eqml-ews",
            Self::Sms => "sms",
        }
    }

    pub fn reprocesses(self) -> bool {
        matches!(self, Self::AbpNws | Self::EqmlEws | Self::Sms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeMode {
    Zero,
    Random,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub code: PathBuf,
    pub puncture: Option<PathBuf>,
    pub decoder: DecoderKind,
    pub stop_rule: StopRule,
    pub j_max: u32,
    pub i_max: u32,
    /// Per-stage budgets for abp-nws; empty means `i_max` everywhere.
    pub i_j: Vec<u32>,
    pub normalization: f64,
    pub alpha: f64,
    pub metric: CandidateMetric,
    pub modulation: Modulation,
    pub ebn0: Vec<f64>,
    pub min_frames: u64,
    pub max_frame_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub workers: usize,
    pub encode: EncodeMode,
    pub budget_fair: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            code: PathBuf::new(),
            puncture: None,
            decoder: DecoderKind::EqmlEws,
            stop_rule: StopRule::Lds,
            j_max: 4,
            i_max: 30,
            i_j: Vec::new(),
            normalization: 1.0,
            alpha: 1000.0,
            metric: CandidateMetric::Correlation,
            modulation: Modulation::Bpsk,
            ebn0: vec![],
            min_frames: 10_000,
            max_frame_errors: 100,
            max_frames: 1_000_000,
            seed: 1,
            workers: 0,
            encode: EncodeMode::Zero,
            budget_fair: false,
        }
    }
}

impl RunConfig {
    /// Iteration cap for the plain ms/spa baselines: the reprocessing
    /// decoders may spend up to `(2^(j_max+1) - 1) * i_max` iterations in
    /// total, and budget-fair mode grants the baseline the same amount.
    pub fn baseline_max_iters(&self) -> u32 {
        if self.budget_fair {
            ((1u32 << (self.j_max + 1)) - 1) * self.i_max
        } else {
            self.i_max
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.code.as_os_str().is_empty() {
            bail!("no code file given");
        }
        if self.decoder.reprocesses() && !(1..=16).contains(&self.j_max) {
            bail!("jmax must be in 1..=16, got {}", self.j_max);
        }
        if self.i_max == 0 {
            bail!("imax must be >= 1");
        }
        if !(self.normalization > 0.0 && self.normalization <= 1.0) {
            bail!("normalization must be in (0, 1]");
        }
        if self.alpha <= 0.0 {
            bail!("alpha must be positive");
        }
        if self.ebn0.is_empty() {
            bail!("no Eb/N0 points given");
        }
        if self.min_frames == 0 || self.max_frames < self.min_frames {
            bail!("frame limits must satisfy 0 < min-frames <= max-frames");
        }
        Ok(())
    }
}

/// Parse `a:b:step` or a comma list into Eb/N0 points.
pub fn parse_ebn0(s: &str) -> Result<Vec<f64>> {
    let parse_one =
        |tok: &str| -> Result<f64> { tok.trim().parse::<f64>().map_err(|e| anyhow!("{e}: '{tok}'")) };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("range must be start:stop:step, got '{s}'");
        }
        let (start, stop, step) = (parse_one(parts[0])?, parse_one(parts[1])?, parse_one(parts[2])?);
        if step <= 0.0 {
            bail!("step must be positive");
        }
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let v = start + f64::from(i) * step;
            if v > stop + 1e-9 {
                break;
            }
            out.push(v);
            i += 1;
        }
        Ok(out)
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(parse_one).collect()
    }
}

pub fn parse_stop_rule(s: &str) -> Result<StopRule> {
    Ok(match s {
        "lds" => StopRule::Lds,
        "pps" => StopRule::Pps,
        other => bail!("unknown stop rule '{other}' (lds, pps)"),
    })
}

pub fn parse_metric(s: &str) -> Result<CandidateMetric> {
    Ok(match s {
        "correlation" => CandidateMetric::Correlation,
        "literal" => CandidateMetric::Literal,
        other => bail!("unknown metric '{other}' (correlation, literal)"),
    })
}

pub fn parse_modulation(s: &str) -> Result<Modulation> {
    Ok(match s {
        "bpsk" => Modulation::Bpsk,
        "qpsk" => Modulation::QpskGray,
        other => bail!("unknown modulation '{other}' (bpsk, qpsk)"),
    })
}

pub fn parse_encode(s: &str) -> Result<EncodeMode> {
    Ok(match s {
        "zero" => EncodeMode::Zero,
        "random" => EncodeMode::Random,
        other => bail!("unknown encode mode '{other}' (zero, random)"),
    })
}

/// Flat `key = value` file; `#` starts a comment, blank lines are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), lineno + 1);
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Code structure ready for simulation.
pub struct LoadedCode {
    pub graph: TannerGraph,
    pub basis: CodewordBasis,
    pub puncture: PunctureMask,
    /// K over transmitted positions: `K / (N - punctured)`.
    pub code_rate: f64,
}

pub fn load_code(code: &Path, puncture: Option<&Path>) -> Result<LoadedCode> {
    let text = fs::read_to_string(code).with_context(|| format!("reading {}", code.display()))?;
    let graph = eqml_core::alist::parse_alist(&text)
        .map_err(|e| anyhow!("{}: {e}", code.display()))?;
    let basis = nullspace_basis(&graph);
    let puncture = match puncture {
        None => PunctureMask::empty(),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let indices: Vec<usize> = text
                .split_whitespace()
                .map(|tok| tok.parse::<usize>().map_err(|e| anyhow!("{}: {e}", p.display())))
                .collect::<Result<_>>()?;
            PunctureMask::new(indices, graph.n_vars())
                .map_err(|e| anyhow!("{}: {e}", p.display()))?
        }
    };
    let transmitted = graph.n_vars() - puncture.len();
    if transmitted == 0 {
        bail!("puncture mask removes every position");
    }
    let code_rate = basis.dimension() as f64 / transmitted as f64;
    if code_rate <= 0.0 {
        bail!("code has dimension 0; nothing to transmit");
    }
    Ok(LoadedCode {
        graph,
        basis,
        puncture,
        code_rate,
    })
}

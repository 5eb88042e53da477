//! The `eqml` command line: Monte Carlo sweeps, single-frame decoding with
//! traces, flip diagnostics, ML comparison, and alist linting.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eqml_core::bp::LlrFrame;
use eqml_core::reprocess::{decode_frame, Status, StopRule};

use crate::config::{
    parse_ebn0, parse_encode, parse_metric, parse_modulation, parse_stop_rule, read_config_file,
    DecoderKind, EncodeMode, RunConfig,
};
use crate::csv_out::{sig6, sweep_csv, write_metadata, write_sweep_csv};
use crate::flips::{diagnose_flips, summary_csv, traces_csv};
use crate::oracle_compare::{oracle_compare, paired_csv};
use crate::sweep::{bp_config, run_sweep, tree_config};

#[derive(Parser, Debug)]
#[command(name = "eqml", version, about = "Saturation-based quasi-ML LDPC decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirror the run-configuration fields; a `--config` file provides
/// defaults and explicit flags win.
#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// Parity-check matrix in alist format
    #[arg(long)]
    code: Option<PathBuf>,
    /// Text file of whitespace-separated 0-based punctured VN indices
    #[arg(long)]
    puncture: Option<PathBuf>,
    /// ms | spa | abp-nws | eqml-ews | sms
    #[arg(long)]
    decoder: Option<String>,
    /// lds | pps
    #[arg(long = "stop-rule")]
    stop_rule: Option<String>,
    /// Maximum reprocessing stages
    #[arg(long)]
    jmax: Option<u32>,
    /// BP iteration budget per decode
    #[arg(long)]
    imax: Option<u32>,
    /// Comma-separated per-stage budgets for abp-nws
    #[arg(long)]
    ij: Option<String>,
    /// Min-sum normalization factor in (0, 1]
    #[arg(long)]
    normalization: Option<f64>,
    /// Saturation magnitude
    #[arg(long)]
    alpha: Option<f64>,
    /// correlation | literal
    #[arg(long)]
    metric: Option<String>,
    /// bpsk | qpsk
    #[arg(long)]
    modulation: Option<String>,
    /// Eb/N0 points: `a:b:step` or a comma list
    #[arg(long)]
    ebn0: Option<String>,
    #[arg(long = "min-frames")]
    min_frames: Option<u64>,
    #[arg(long = "max-frame-errors")]
    max_frame_errors: Option<u64>,
    #[arg(long = "max-frames")]
    max_frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// zero | random
    #[arg(long)]
    encode: Option<String>,
    /// Grant ms/spa the reprocessing decoders' total iteration budget
    #[arg(long = "budget-fair")]
    budget_fair: bool,
    /// key=value defaults file
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => Default::default(),
        };
        let mut cfg = RunConfig::default();

        // File values first, then explicit flags override.
        macro_rules! pick {
            ($key:literal, $flag:expr) => {
                $flag.clone().or_else(|| file.get($key).cloned())
            };
        }

        if let Some(v) = pick!("code", self.code.as_ref().map(|p| p.display().to_string())) {
            cfg.code = PathBuf::from(v);
        }
        if let Some(v) = pick!("puncture", self.puncture.as_ref().map(|p| p.display().to_string()))
        {
            cfg.puncture = Some(PathBuf::from(v));
        }
        if let Some(v) = pick!("decoder", self.decoder) {
            cfg.decoder = DecoderKind::parse(&v)?;
        }
        if let Some(v) = pick!("stop-rule", self.stop_rule) {
            cfg.stop_rule = parse_stop_rule(&v)?;
        }
        if let Some(v) = pick!("jmax", self.jmax.map(|x| x.to_string())) {
            cfg.j_max = v.parse().context("jmax")?;
        }
        if let Some(v) = pick!("imax", self.imax.map(|x| x.to_string())) {
            cfg.i_max = v.parse().context("imax")?;
        }
        if let Some(v) = pick!("ij", self.ij) {
            cfg.i_j = v
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<u32>().map_err(|e| anyhow!("ij: {e}")))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = pick!("normalization", self.normalization.map(|x| x.to_string())) {
            cfg.normalization = v.parse().context("normalization")?;
        }
        if let Some(v) = pick!("alpha", self.alpha.map(|x| x.to_string())) {
            cfg.alpha = v.parse().context("alpha")?;
        }
        if let Some(v) = pick!("metric", self.metric) {
            cfg.metric = parse_metric(&v)?;
        }
        if let Some(v) = pick!("modulation", self.modulation) {
            cfg.modulation = parse_modulation(&v)?;
        }
        if let Some(v) = pick!("ebn0", self.ebn0) {
            cfg.ebn0 = parse_ebn0(&v)?;
        }
        if let Some(v) = pick!("min-frames", self.min_frames.map(|x| x.to_string())) {
            cfg.min_frames = v.parse().context("min-frames")?;
        }
        if let Some(v) = pick!("max-frame-errors", self.max_frame_errors.map(|x| x.to_string())) {
            cfg.max_frame_errors = v.parse().context("max-frame-errors")?;
        }
        if let Some(v) = pick!("max-frames", self.max_frames.map(|x| x.to_string())) {
            cfg.max_frames = v.parse().context("max-frames")?;
        }
        if let Some(v) = pick!("seed", self.seed.map(|x| x.to_string())) {
            cfg.seed = v.parse().context("seed")?;
        }
        if let Some(v) = pick!("workers", self.workers.map(|x| x.to_string())) {
            cfg.workers = v.parse().context("workers")?;
        }
        if let Some(v) = pick!("encode", self.encode) {
            cfg.encode = parse_encode(&v)?;
        }
        cfg.budget_fair = self.budget_fair
            || file
                .get("budget-fair")
                .map(|v| matches!(v.as_str(), "true" | "1" | "yes"))
                .unwrap_or(false);
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo FER/latency sweep over Eb/N0 points, CSV output
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Output CSV path (stdout when omitted); a `.meta` sidecar records
        /// run conventions
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode one LLR frame from a file and print the result
    Decode {
        #[command(flatten)]
        common: CommonOpts,
        /// Whitespace-separated channel LLRs, length N
        #[arg(long)]
        frame: PathBuf,
        /// Prefix for trace CSVs (`<prefix>.tests.csv`, `<prefix>.select.csv`)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Per-iteration V2C sign-flip percentages split by decoding outcome
    DiagnoseFlips {
        #[command(flatten)]
        common: CommonOpts,
        /// Raw trace CSV path; a `.summary.csv` sibling holds the means
        #[arg(long)]
        out: PathBuf,
        /// Keep generating frames until both populations reach this size
        #[arg(long = "min-per-population", default_value_t = 1000)]
        min_per_population: u64,
    },
    /// Paired decoder-vs-ML comparison on small codes
    OracleCompare {
        #[command(flatten)]
        common: CommonOpts,
        /// Frames per Eb/N0 point
        #[arg(long, default_value_t = 10_000)]
        frames: u64,
        /// Output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and lint an alist file
    Validate {
        /// Parity-check matrix in alist format
        #[arg(long)]
        code: PathBuf,
    },
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, out } => simulate(&common, out.as_deref()),
        Command::Decode {
            common,
            frame,
            trace,
        } => decode_cmd(&common, &frame, trace.as_deref()),
        Command::DiagnoseFlips {
            common,
            out,
            min_per_population,
        } => diagnose_cmd(&common, &out, min_per_population),
        Command::OracleCompare {
            common,
            frames,
            out,
        } => oracle_cmd(&common, frames, out.as_deref()),
        Command::Validate { code } => validate_cmd(&code),
    }
}

fn simulate(common: &CommonOpts, out: Option<&std::path::Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let stats = run_sweep(&cfg)?;
    for s in &stats {
        eprintln!(
            "ebn0 {:>5} dB: {} frames, {} errors, fer {}, i_avg {}, {:.1}s",
            sig6(s.ebn0_db),
            s.frames,
            s.frame_errors,
            sig6(s.fer()),
            sig6(s.i_avg()),
            s.elapsed_s
        );
    }
    match out {
        Some(path) => {
            write_sweep_csv(&stats, path)?;
            let meta = path.with_extension(format!(
                "{}meta",
                path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
            ));
            write_metadata(&meta, &metadata_entries(&cfg))?;
        }
        None => print!("{}", sweep_csv(&stats)),
    }
    Ok(())
}

fn metadata_entries(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    vec![
        ("code", cfg.code.display().to_string()),
        (
            "puncture",
            cfg.puncture
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".into()),
        ),
        ("decoder", cfg.decoder.name().into()),
        (
            "stop-rule",
            match cfg.stop_rule {
                StopRule::Lds => "lds".into(),
                StopRule::Pps => "pps".into(),
            },
        ),
        ("jmax", cfg.j_max.to_string()),
        ("imax", cfg.i_max.to_string()),
        ("budget-fair", cfg.budget_fair.to_string()),
        ("seed", cfg.seed.to_string()),
        (
            "encode",
            match cfg.encode {
                EncodeMode::Zero => "zero".into(),
                EncodeMode::Random => "random".into(),
            },
        ),
        ("min-frames", cfg.min_frames.to_string()),
        ("max-frame-errors", cfg.max_frame_errors.to_string()),
        ("max-frames", cfg.max_frames.to_string()),
        (
            "stopping-rule",
            "per point: run whole batches until frames >= min-frames and \
             (frame-errors >= max-frame-errors or frames >= max-frames)"
                .into(),
        ),
        (
            "rate-convention",
            "Eb/N0 uses K / transmitted positions (punctured positions excluded)".into(),
        ),
        (
            "frame-error-convention",
            "frame error = decoded word differs from the full transmitted codeword; \
             declared failures count as errors"
                .into(),
        ),
    ]
}

fn decode_cmd(common: &CommonOpts, frame_path: &std::path::Path, trace: Option<&std::path::Path>) -> Result<()> {
    let cfg = common.resolve()?;
    if cfg.code.as_os_str().is_empty() {
        bail!("no code file given");
    }
    let code = crate::config::load_code(&cfg.code, cfg.puncture.as_deref())?;
    let text = fs::read_to_string(frame_path)
        .with_context(|| format!("reading {}", frame_path.display()))?;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| anyhow!("{e}: '{t}'")))
        .collect::<Result<_>>()?;
    if values.len() != code.graph.n_vars() {
        bail!(
            "frame has {} LLRs, code expects {}",
            values.len(),
            code.graph.n_vars()
        );
    }
    let frame = LlrFrame::new(values).map_err(|e| anyhow!("{e}"))?;
    let frame = eqml_core::channel::apply_puncturing(&frame, &code.puncture);

    if !cfg.decoder.reprocesses() {
        let variant = if cfg.decoder == DecoderKind::Spa {
            eqml_core::bp::BpVariant::SumProduct
        } else {
            eqml_core::bp::BpVariant::MinSum
        };
        let bp = bp_config(&cfg, variant, cfg.baseline_max_iters());
        let run = eqml_core::bp::decode(&code.graph, &frame, &bp).map_err(|e| anyhow!("{e}"))?;
        println!("status: {}", if run.converged { "converged" } else { "failure" });
        println!("iterations: {}", run.iterations_used);
        println!("codeword: {}", bits_string(&run.hard_decision));
        return Ok(());
    }

    let bp = bp_config(&cfg, eqml_core::bp::BpVariant::MinSum, cfg.i_max);
    let mut tree = tree_config(&cfg);
    tree.record_trace = trace.is_some();
    let out = decode_frame(&code.graph, &frame, &bp, &tree).map_err(|e| anyhow!("{e}"))?;
    let status = match out.status {
        Status::ConvergedFirstPass => "converged-first-pass",
        Status::Recovered => "recovered",
        Status::Failure => "failure",
    };
    println!("status: {status}");
    println!("tests: {}", out.tests_used);
    println!("iterations: {}", out.total_iterations);
    println!("candidates: {}", out.candidate_count);
    match &out.codeword {
        Some(w) => println!("codeword: {}", bits_string(w)),
        None => println!("codeword: none"),
    }
    if let (Some(prefix), Some(tr)) = (trace, out.trace.as_ref()) {
        let tests_path = trace_path(prefix, "tests.csv");
        let select_path = trace_path(prefix, "select.csv");
        fs::write(&tests_path, tests_trace_csv(tr, 0))
            .with_context(|| format!("writing {}", tests_path.display()))?;
        fs::write(&select_path, select_trace_csv(tr, 0))
            .with_context(|| format!("writing {}", select_path.display()))?;
        eprintln!("traces: {} {}", tests_path.display(), select_path.display());
    }
    Ok(())
}

fn trace_path(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if !name.is_empty() {
        name.push('.');
    }
    name.push_str(suffix);
    prefix.with_file_name(name)
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

pub const TESTS_TRACE_HEADER: &str = "frame_id,stage,t,pattern,iterations,converged,pruned_by";
pub const SELECT_TRACE_HEADER: &str = "frame_id,stage,strategy,vn,primary,secondary";

pub fn tests_trace_csv(trace: &eqml_core::reprocess::ReprocessTrace, frame_id: u64) -> String {
    let mut out = String::from(TESTS_TRACE_HEADER);
    out.push('\n');
    for row in &trace.tests {
        out.push_str(&format!(
            "{frame_id},{},{},{},{},{},{}\n",
            row.stage,
            row.t,
            bits_string(&row.pattern),
            row.iterations,
            row.converged,
            row.pruned_by.map(|t| t.to_string()).unwrap_or_default(),
        ));
    }
    out
}

pub fn select_trace_csv(trace: &eqml_core::reprocess::ReprocessTrace, frame_id: u64) -> String {
    let mut out = String::from(SELECT_TRACE_HEADER);
    out.push('\n');
    for row in &trace.selections {
        let strategy = match row.strategy {
            eqml_core::reprocess::Strategy::NodeWise => "nws",
            eqml_core::reprocess::Strategy::EdgeWise => "ews",
        };
        out.push_str(&format!(
            "{frame_id},{},{strategy},{},{},{}\n",
            row.stage,
            row.record.vn,
            sig6(row.record.primary),
            sig6(row.record.secondary),
        ));
    }
    out
}

fn diagnose_cmd(common: &CommonOpts, out: &std::path::Path, min_per_population: u64) -> Result<()> {
    let mut cfg = common.resolve()?;
    if common.decoder.is_none() {
        cfg.decoder = DecoderKind::Ms;
    }
    cfg.validate()?;
    let ebn0 = *cfg
        .ebn0
        .first()
        .ok_or_else(|| anyhow!("diagnose-flips needs one Eb/N0 point"))?;
    let (traces, summary) = diagnose_flips(&cfg, ebn0, min_per_population, cfg.max_frames)?;
    fs::write(out, traces_csv(&traces)).with_context(|| format!("writing {}", out.display()))?;
    let summary_path = trace_path(out, "summary.csv");
    fs::write(&summary_path, summary_csv(&summary))
        .with_context(|| format!("writing {}", summary_path.display()))?;
    eprintln!(
        "{} converged / {} failed frames; converged final-iteration mean {}%, failed last-iteration mean {}%",
        summary.converged_frames,
        summary.failed_frames,
        sig6(summary.converged_final_mean),
        sig6(summary.failed_iter_means.last().map(|&(_, m, _)| m).unwrap_or(0.0)),
    );
    Ok(())
}

fn oracle_cmd(common: &CommonOpts, frames: u64, out: Option<&std::path::Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let points = oracle_compare(&cfg, frames)?;
    for p in &points {
        eprintln!(
            "ebn0 {:>5} dB: fer_ml {}, fer_{} {}, disagreement {}",
            sig6(p.ebn0_db),
            sig6(p.fer_ml()),
            cfg.decoder.name(),
            sig6(p.fer_decoder()),
            sig6(p.disagreement_rate()),
        );
    }
    let text = paired_csv(&points);
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn validate_cmd(code: &std::path::Path) -> Result<()> {
    let text = fs::read_to_string(code).with_context(|| format!("reading {}", code.display()))?;
    let graph = eqml_core::alist::parse_alist(&text).map_err(|e| anyhow!("{}: {e}", code.display()))?;
    let basis = eqml_core::gf2::nullspace_basis(&graph);
    let degrees = graph.vn_degrees();
    let (dmin, dmax) = (
        degrees.iter().min().copied().unwrap_or(0),
        degrees.iter().max().copied().unwrap_or(0),
    );
    println!("ok: N={} M={} edges={}", graph.n_vars(), graph.n_checks(), graph.n_edges());
    println!(
        "column degrees {dmin}..{dmax}; K={} (rank {})",
        basis.dimension(),
        graph.n_vars() - basis.dimension()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "decoder=ms\nseed=7\nebn0=1,2\nimax=50\n").unwrap();
        let opts = CommonOpts {
            config: Some(path),
            decoder: Some("eqml-ews".into()),
            ..CommonOpts::default()
        };
        let cfg = opts.resolve().unwrap();
        assert_eq!(cfg.decoder, DecoderKind::EqmlEws); // flag wins
        assert_eq!(cfg.seed, 7); // file fills the rest
        assert_eq!(cfg.i_max, 50);
        assert_eq!(cfg.ebn0, vec![1.0, 2.0]);
    }

    #[test]
    fn trace_paths_are_prefixed() {
        let p = trace_path(std::path::Path::new("/tmp/run1"), "tests.csv");
        assert_eq!(p, PathBuf::from("/tmp/run1.tests.csv"));
    }

    #[test]
    fn verb_parses() {
        let cli = Cli::try_parse_from([
            "eqml", "simulate", "--code", "x.alist", "--decoder", "eqml-ews", "--ebn0", "2:3:0.5",
            "--stop-rule", "pps", "--jmax", "4", "--budget-fair",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate { common, .. } => {
                let mut cfg = common.resolve().unwrap();
                cfg.min_frames = 1;
                assert_eq!(cfg.decoder, DecoderKind::EqmlEws);
                assert!(cfg.budget_fair);
                assert_eq!(cfg.ebn0.len(), 3);
            }
            _ => panic!("wrong subcommand"),
        }
    }
}

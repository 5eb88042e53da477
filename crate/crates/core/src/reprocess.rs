//! Saturation reprocessing: staged decoder-input lists, the branch tree,
//! stopping rules, and best-candidate selection.
//!
//! After a failed first-pass decode, stage `j` saturates the first `j`
//! selected VNs to every sign combination and re-decodes each variant.
//! Under the list-decoding stop (LDS) all `2^(j_max+1) - 2` tests run;
//! under partial pruning (PPS) a convergence removes the sub-branches
//! below it from the schedule and decrements the remaining-test counter.

use alloc::vec;
use alloc::vec::Vec;

use crate::bp::{decode, BpConfig, BpRun, LlrFrame};
use crate::graph::{GraphError, TannerGraph};
use crate::selection::{SelectionError, SelectionRecord, SelectionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ReprocessError {
    #[error("pattern length {pattern} does not match selection length {selected}")]
    PatternMismatch { selected: usize, pattern: usize },
    #[error("no candidate codeword collected")]
    EmptyCandidateSet,
}

/// VN selection strategy for staged reprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    NodeWise,
    EdgeWise,
}

/// Reprocessing flavor.
///
/// `Abp` and `Eqml` stage one new VN at a time and differ only in the
/// per-stage iteration budgets; `Sms` saturates all `j_max` least-reliable
/// VNs at once and runs the single stage of `2^j_max` tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Abp,
    Eqml,
    Sms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    Lds,
    Pps,
}

/// Metric used to pick the output among collected candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMetric {
    /// argmax of the correlation between the channel LLRs and the
    /// BPSK-mapped candidate (the ML-equivalent reading).
    Correlation,
    /// argmin of `sqrt(sum((r - x)^2))` with bits taken as 0/1 values.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    pub stop_rule: StopRule,
    pub j_max: u32,
    /// Saturation magnitude; matches the BP clamp.
    pub alpha: f64,
    /// Default per-test iteration budget.
    pub i_max: u32,
    /// Per-stage budgets for `Abp` mode; stages past the end fall back to
    /// `i_max`. Ignored by `Eqml` and `Sms`.
    pub stage_budgets: Vec<u32>,
    pub metric: CandidateMetric,
    /// Audit mode: treat every test as non-convergent so the full schedule
    /// runs and no candidate is collected. Used for test-count accounting.
    pub ignore_convergence: bool,
    pub record_trace: bool,
}

impl TreeConfig {
    pub fn new(mode: Mode, strategy: Strategy, stop_rule: StopRule, j_max: u32) -> Self {
        Self {
            mode,
            strategy,
            stop_rule,
            j_max,
            alpha: 1000.0,
            i_max: 30,
            stage_budgets: Vec::new(),
            metric: CandidateMetric::Correlation,
            ignore_convergence: false,
            record_trace: false,
        }
    }

    fn stage_budget(&self, j: u32) -> u32 {
        match self.mode {
            Mode::Abp => self
                .stage_budgets
                .get((j - 1) as usize)
                .copied()
                .unwrap_or(self.i_max),
            Mode::Eqml | Mode::Sms => self.i_max,
        }
    }
}

/// The `2^j` saturation rows for stage `j`, canonical order: row `t` is the
/// binary expansion of `t - 1`, most significant bit on the first-selected
/// VN, bit 0 mapping to `+alpha` and bit 1 to `-alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationList {
    pub stage: u32,
    patterns: Vec<Vec<f64>>,
}

impl SaturationList {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Row for test `t`, 1-based.
    pub fn row(&self, t: u32) -> &[f64] {
        &self.patterns[(t - 1) as usize]
    }
}

pub fn build_saturation_list(stage: u32, alpha: f64) -> SaturationList {
    assert!(stage >= 1 && stage <= 16, "stage out of supported range");
    let rows = 1u32 << stage;
    let patterns = (0..rows)
        .map(|bits| {
            (0..stage)
                .map(|i| {
                    if (bits >> (stage - 1 - i)) & 1 == 1 {
                        -alpha
                    } else {
                        alpha
                    }
                })
                .collect()
        })
        .collect();
    SaturationList { stage, patterns }
}

/// Copy of `frame` with the selected positions overwritten by the pattern.
pub fn apply_pattern(
    frame: &LlrFrame,
    selected: &[usize],
    pattern: &[f64],
) -> Result<LlrFrame, ReprocessError> {
    if selected.len() != pattern.len() {
        return Err(ReprocessError::PatternMismatch {
            selected: selected.len(),
            pattern: pattern.len(),
        });
    }
    let mut out = frame.clone();
    for (&v, &value) in selected.iter().zip(pattern) {
        out.values_mut()[v] = value;
    }
    Ok(out)
}

/// Executes one BP decode per reprocessing test. The production runner wraps
/// [`crate::bp::decode`]; tests substitute scripted doubles.
pub trait BpRunner {
    fn run(&mut self, frame: &LlrFrame, max_iters: u32) -> BpRun;
}

/// Real BP on a graph with a fixed variant/normalization/alpha.
pub struct GraphRunner<'a> {
    pub graph: &'a TannerGraph,
    pub cfg: BpConfig,
}

impl BpRunner for GraphRunner<'_> {
    fn run(&mut self, frame: &LlrFrame, max_iters: u32) -> BpRun {
        let cfg = BpConfig {
            max_iters,
            ..self.cfg
        };
        decode(self.graph, frame, &cfg).expect("frame length fixed by caller")
    }
}

/// One convergence event processed by the PPS rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PpsEvent {
    /// Test count T at which the convergence happened.
    pub test_index: u32,
    pub stage: u32,
    pub t_f_before: u32,
    pub t_f_after: u32,
    /// Descendant tests newly removed from the schedule.
    pub descendants_pruned: u64,
}

/// Stage-indexed branch-tree bookkeeping shared by both stop rules.
#[derive(Debug, Clone)]
pub struct ReprocessTree {
    pub j_max: u32,
    pub stop_rule: StopRule,
    /// Accomplished tests T.
    pub t_count: u32,
    /// Remaining-test counter, initialized to `2^(j_max+1) - 2` and
    /// decremented by `2^(j_max - j)` on each stage-`j` convergence.
    pub t_f: u32,
    /// Collected candidates with the test index that produced them.
    candidates: Vec<(Vec<u8>, u32)>,
    pub events: Vec<PpsEvent>,
    /// Per stage: lazily allocated bitmap of pruned pattern slots.
    pruned: Vec<Option<Vec<u64>>>,
    pruned_count: Vec<u64>,
    /// Pruned prefixes as (stage, bits, pruning test index), for tracing.
    pruned_prefixes: Vec<(u32, u64, u32)>,
}

impl ReprocessTree {
    pub fn new(j_max: u32, stop_rule: StopRule) -> Self {
        assert!((1..=16).contains(&j_max), "j_max out of supported range");
        Self {
            j_max,
            stop_rule,
            t_count: 0,
            t_f: (1u32 << (j_max + 1)) - 2,
            candidates: Vec::new(),
            events: Vec::new(),
            pruned: vec![None; j_max as usize],
            pruned_count: vec![0; j_max as usize],
            pruned_prefixes: Vec::new(),
        }
    }

    pub fn candidates(&self) -> &[(Vec<u8>, u32)] {
        &self.candidates
    }

    pub fn is_pruned(&self, stage: u32, bits: u64) -> bool {
        match &self.pruned[(stage - 1) as usize] {
            None => false,
            Some(bitmap) => (bitmap[(bits / 64) as usize] >> (bits % 64)) & 1 == 1,
        }
    }

    /// Test index of the convergence that pruned this slot, if any.
    pub fn pruned_by(&self, stage: u32, bits: u64) -> Option<u32> {
        self.pruned_prefixes
            .iter()
            .find(|&&(s, b, _)| s < stage && (bits >> (stage - s)) == b)
            .map(|&(_, _, t)| t)
    }

    pub fn stage_fully_pruned(&self, stage: u32) -> bool {
        self.pruned_count[(stage - 1) as usize] == 1u64 << stage
    }

    fn mark(&mut self, stage: u32, bits: u64) -> bool {
        let bitmap = self.pruned[(stage - 1) as usize]
            .get_or_insert_with(|| vec![0u64; (1usize << stage).div_ceil(64)]);
        let word = &mut bitmap[(bits / 64) as usize];
        let mask = 1u64 << (bits % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.pruned_count[(stage - 1) as usize] += 1;
            true
        } else {
            false
        }
    }

    /// Candidate insertion; every entry must carry a zero syndrome.
    pub fn save_candidate(&mut self, graph: &TannerGraph, word: Vec<u8>, test_index: u32) {
        assert!(graph.is_codeword(&word), "candidate with nonzero syndrome");
        self.candidates.push((word, test_index));
    }

    /// The PPS rule for a convergence at (`stage`, `bits`): decrement the
    /// remaining-test counter by `2^(j_max - stage)` (clamped at zero) and
    /// remove every deeper pattern extending this prefix from the schedule.
    /// Returns the logged event; the caller terminates on `t_f == 0` or when
    /// a whole stage is gone.
    pub fn pps_on_convergence(&mut self, stage: u32, bits: u64) -> PpsEvent {
        let t_f_before = self.t_f;
        self.t_f = self.t_f.saturating_sub(1u32 << (self.j_max - stage));
        let mut newly = 0u64;
        for deeper in (stage + 1)..=self.j_max {
            let shift = deeper - stage;
            let start = bits << shift;
            for offset in 0..(1u64 << shift) {
                if self.mark(deeper, start + offset) {
                    newly += 1;
                }
            }
        }
        self.pruned_prefixes.push((stage, bits, self.t_count));
        let event = PpsEvent {
            test_index: self.t_count,
            stage,
            t_f_before,
            t_f_after: self.t_f,
            descendants_pruned: newly,
        };
        self.events.push(event);
        event
    }
}

/// Decoding status of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    ConvergedFirstPass,
    Recovered,
    Failure,
}

/// Per-test trace row. Pruned slots appear with zero iterations and the
/// test index of the convergence that removed them.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRecord {
    pub stage: u32,
    /// 1-based index within the stage.
    pub t: u32,
    /// Global test count T for executed tests.
    pub test_index: Option<u32>,
    /// Pattern bits, one per selected VN; 0 is `+alpha`, 1 is `-alpha`.
    pub pattern: Vec<u8>,
    pub iterations: u32,
    pub converged: bool,
    pub pruned_by: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTraceRow {
    pub stage: u32,
    pub strategy: Strategy,
    pub record: SelectionRecord,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReprocessTrace {
    pub selections: Vec<SelectionTraceRow>,
    pub tests: Vec<TestRecord>,
    pub events: Vec<PpsEvent>,
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub status: Status,
    /// Selected codeword when status is not `Failure`.
    pub codeword: Option<Vec<u8>>,
    /// Accomplished reprocessing tests T.
    pub tests_used: u32,
    /// First-pass iterations plus every reprocessing test's iterations.
    pub total_iterations: u64,
    /// Hard decision of the first-pass decode (best effort on failure).
    pub initial_hard: Vec<u8>,
    pub candidate_count: u32,
    pub trace: Option<ReprocessTrace>,
}

/// Pick the output codeword from the collected candidates against the
/// original (unsaturated) channel frame. Ties keep the earliest test.
pub fn select_best(
    candidates: &[(Vec<u8>, u32)],
    frame: &LlrFrame,
    metric: CandidateMetric,
) -> Result<Vec<u8>, ReprocessError> {
    if candidates.is_empty() {
        return Err(ReprocessError::EmptyCandidateSet);
    }
    let r = frame.values();
    let score = |word: &[u8]| -> f64 {
        match metric {
            CandidateMetric::Correlation => word
                .iter()
                .zip(r)
                .map(|(&x, &rv)| (1.0 - 2.0 * x as f64) * rv)
                .sum(),
            CandidateMetric::Literal => {
                let sum: f64 = word
                    .iter()
                    .zip(r)
                    .map(|(&x, &rv)| {
                        let d = rv - x as f64;
                        d * d
                    })
                    .sum();
                // argmin of the printed square root, negated so both
                // metrics maximize.
                -libm::sqrt(sum)
            }
        }
    };
    let mut best = &candidates[0];
    let mut best_score = score(&best.0);
    for cand in &candidates[1..] {
        let s = score(&cand.0);
        if s > best_score {
            best = cand;
            best_score = s;
        }
    }
    Ok(best.0.clone())
}

/// Staged reprocessing after a failed first-pass decode (caller contract:
/// `initial_run.converged` is false). Consumes the runner for every
/// non-pruned pattern and returns the recovered codeword or a failure.
pub fn run_reprocessing<R: BpRunner>(
    graph: &TannerGraph,
    frame: &LlrFrame,
    initial_run: &BpRun,
    cfg: &TreeConfig,
    runner: &mut R,
) -> DecodeOutcome {
    debug_assert!(!initial_run.converged);
    let mut state = SelectionState::new(graph, frame, initial_run);
    let mut tree = ReprocessTree::new(cfg.j_max, cfg.stop_rule);
    let mut trace = if cfg.record_trace {
        Some(ReprocessTrace::default())
    } else {
        None
    };
    let mut total_iterations = 0u64;

    let stages: Vec<u32> = match cfg.mode {
        Mode::Sms => vec![cfg.j_max],
        Mode::Abp | Mode::Eqml => (1..=cfg.j_max).collect(),
    };

    'stages: for &j in &stages {
        if cfg.stop_rule == StopRule::Pps && tree.stage_fully_pruned(j) {
            break; // active set empty: nothing below here can run
        }

        // Selection: one VN per stage, or all at once for Sms.
        match cfg.mode {
            Mode::Sms => {
                if state.select_least_reliable(cfg.j_max as usize).is_err() {
                    break;
                }
            }
            Mode::Abp | Mode::Eqml => {
                let picked = match cfg.strategy {
                    Strategy::NodeWise => state.nws_select(graph),
                    Strategy::EdgeWise => state.ews_select(),
                };
                match picked {
                    Ok(record) => {
                        if let Some(tr) = trace.as_mut() {
                            tr.selections.push(SelectionTraceRow {
                                stage: j,
                                strategy: cfg.strategy,
                                record,
                            });
                        }
                    }
                    Err(SelectionError::Exhausted) => break,
                }
            }
        }

        let list = build_saturation_list(j, cfg.alpha);
        let budget = cfg.stage_budget(j);
        for t in 1..=(1u32 << j) {
            let bits = (t - 1) as u64;
            if cfg.stop_rule == StopRule::Pps && tree.is_pruned(j, bits) {
                if let Some(tr) = trace.as_mut() {
                    tr.tests.push(TestRecord {
                        stage: j,
                        t,
                        test_index: None,
                        pattern: pattern_bits(j, bits),
                        iterations: 0,
                        converged: false,
                        pruned_by: tree.pruned_by(j, bits),
                    });
                }
                continue;
            }

            let saturated = apply_pattern(frame, state.selected(), list.row(t))
                .expect("selection length equals stage");
            let run = runner.run(&saturated, budget);
            tree.t_count += 1;
            total_iterations += run.iterations_used as u64;
            let converged = run.converged && !cfg.ignore_convergence;
            if let Some(tr) = trace.as_mut() {
                tr.tests.push(TestRecord {
                    stage: j,
                    t,
                    test_index: Some(tree.t_count),
                    pattern: pattern_bits(j, bits),
                    iterations: run.iterations_used,
                    converged,
                    pruned_by: None,
                });
            }
            if converged {
                tree.save_candidate(graph, run.hard_decision.clone(), tree.t_count);
                if cfg.stop_rule == StopRule::Pps {
                    tree.pps_on_convergence(j, bits);
                    state.observe_run(&run);
                    if tree.t_f == 0 {
                        break 'stages;
                    }
                    continue;
                }
            }
            state.observe_run(&run);
        }
    }

    if let Some(tr) = trace.as_mut() {
        tr.events = tree.events.clone();
    }
    let candidate_count = tree.candidates().len() as u32;
    let (status, codeword) = match select_best(tree.candidates(), frame, cfg.metric) {
        Ok(word) => (Status::Recovered, Some(word)),
        Err(ReprocessError::EmptyCandidateSet) => (Status::Failure, None),
        Err(_) => unreachable!(),
    };
    DecodeOutcome {
        status,
        codeword,
        tests_used: tree.t_count,
        total_iterations,
        initial_hard: initial_run.hard_decision.clone(),
        candidate_count,
        trace,
    }
}

fn pattern_bits(stage: u32, bits: u64) -> Vec<u8> {
    (0..stage)
        .map(|i| ((bits >> (stage - 1 - i)) & 1) as u8)
        .collect()
}

/// The full pipeline: first-pass BP with `bp_cfg.max_iters`, then staged
/// reprocessing on failure.
pub fn decode_frame(
    graph: &TannerGraph,
    frame: &LlrFrame,
    bp_cfg: &BpConfig,
    tree_cfg: &TreeConfig,
) -> Result<DecodeOutcome, GraphError> {
    let initial = decode(graph, frame, bp_cfg)?;
    if initial.converged {
        return Ok(DecodeOutcome {
            status: Status::ConvergedFirstPass,
            codeword: Some(initial.hard_decision.clone()),
            tests_used: 0,
            total_iterations: initial.iterations_used as u64,
            initial_hard: initial.hard_decision,
            candidate_count: 0,
            trace: if tree_cfg.record_trace {
                Some(ReprocessTrace::default())
            } else {
                None
            },
        });
    }
    let mut runner = GraphRunner {
        graph,
        cfg: *bp_cfg,
    };
    let mut outcome = run_reprocessing(graph, frame, &initial, tree_cfg, &mut runner);
    outcome.total_iterations += initial.iterations_used as u64;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::BpVariant;
    use crate::gf2::{combine, nullspace_basis};
    use crate::graph::hamming_7_4;
    use alloc::boxed::Box;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const ALPHA: f64 = 1000.0;

    #[test]
    fn saturation_list_canonical_order() {
        let l1 = build_saturation_list(1, ALPHA);
        assert_eq!(l1.row(1), &[ALPHA]);
        assert_eq!(l1.row(2), &[-ALPHA]);

        let l2 = build_saturation_list(2, ALPHA);
        assert_eq!(l2.row(1), &[ALPHA, ALPHA]);
        assert_eq!(l2.row(2), &[ALPHA, -ALPHA]);
        assert_eq!(l2.row(3), &[-ALPHA, ALPHA]);
        assert_eq!(l2.row(4), &[-ALPHA, -ALPHA]);

        let l4 = build_saturation_list(4, ALPHA);
        assert_eq!(l4.len(), 16);
        let mut rows: Vec<Vec<i8>> = (1..=16)
            .map(|t| l4.row(t).iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
            .collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), 16, "all 16 rows distinct");
    }

    #[test]
    fn apply_pattern_basics() {
        let frame = LlrFrame::new(alloc::vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let same = apply_pattern(&frame, &[], &[]).unwrap();
        assert_eq!(same, frame);

        let one = apply_pattern(&frame, &[3], &[-ALPHA]).unwrap();
        assert_eq!(one.values()[3], -ALPHA);
        assert_eq!(one.values()[0], 0.1);
        // The input frame is untouched.
        assert_eq!(frame.values()[3], 0.4);

        assert!(apply_pattern(&frame, &[1, 2], &[ALPHA]).is_err());
    }

    // A frame on Hamming(7,4) whose plain min-sum decode fails: all-zero
    // word transmitted, the two weakest positions corrupted (one sign flip,
    // one near-erasure) so BP oscillates for the full budget.
    fn failing_hamming_frame() -> LlrFrame {
        LlrFrame::new(alloc::vec![2.7, 4.3, 3.8, 5.8, 0.7, 0.05, -0.5]).unwrap()
    }

    fn ms_cfg() -> BpConfig {
        BpConfig {
            variant: BpVariant::MinSum,
            max_iters: 30,
            normalization: 1.0,
            alpha: ALPHA,
        }
    }

    #[test]
    fn lds_runs_full_schedule_for_every_jmax() {
        let g = hamming_7_4();
        let frame = failing_hamming_frame();
        let initial = decode(&g, &frame, &ms_cfg()).unwrap();
        assert!(!initial.converged, "fixture frame must fail first pass");
        for j_max in 1..=6u32 {
            let mut cfg = TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, StopRule::Lds, j_max);
            cfg.ignore_convergence = true;
            let mut runner = GraphRunner { graph: &g, cfg: ms_cfg() };
            let out = run_reprocessing(&g, &frame, &initial, &cfg, &mut runner);
            assert_eq!(out.tests_used, (1 << (j_max + 1)) - 2, "j_max={j_max}");
            assert_eq!(out.status, Status::Failure);
        }
    }

    #[test]
    fn sms_runs_single_stage() {
        let g = hamming_7_4();
        let frame = failing_hamming_frame();
        let initial = decode(&g, &frame, &ms_cfg()).unwrap();
        let mut cfg = TreeConfig::new(Mode::Sms, Strategy::EdgeWise, StopRule::Lds, 3);
        cfg.ignore_convergence = true;
        let mut runner = GraphRunner { graph: &g, cfg: ms_cfg() };
        let out = run_reprocessing(&g, &frame, &initial, &cfg, &mut runner);
        assert_eq!(out.tests_used, 8);
    }

    // Scripted runner: convergence decided by a closure over the saturated
    // frame, so LDS and PPS see identical behavior per (stage, pattern).
    struct ScriptedRunner {
        n_vars: usize,
        n_edges: usize,
        iterations: u32,
        converge_if: Box<dyn Fn(&LlrFrame) -> bool>,
    }

    impl BpRunner for ScriptedRunner {
        fn run(&mut self, frame: &LlrFrame, _max_iters: u32) -> BpRun {
            let converged = (self.converge_if)(frame);
            BpRun {
                v2c: alloc::vec![0.0; self.n_edges],
                c2v: alloc::vec![0.0; self.n_edges],
                app: (0..self.n_vars).map(|v| v as f64 + 1.0).collect(),
                hard_decision: alloc::vec![0; self.n_vars],
                converged,
                iterations_used: self.iterations,
                flip_count_edge: alloc::vec![0; self.n_edges],
                flip_count_vn: alloc::vec![0; self.n_vars],
                flip_pct_per_iter: alloc::vec![],
            }
        }
    }

    fn fake_failed_run(g: &TannerGraph) -> BpRun {
        BpRun {
            v2c: alloc::vec![0.0; g.n_edges()],
            c2v: alloc::vec![0.0; g.n_edges()],
            app: (0..g.n_vars()).map(|v| v as f64 + 1.0).collect(),
            hard_decision: {
                let mut h = alloc::vec![0; g.n_vars()];
                h[g.n_vars() - 1] = 1;
                h
            },
            converged: false,
            iterations_used: 30,
            flip_count_edge: alloc::vec![0; g.n_edges()],
            flip_count_vn: alloc::vec![0; g.n_vars()],
            flip_pct_per_iter: alloc::vec![],
        }
    }

    // With all-zero flip counts and APP ascending by index, EWS selects VNs
    // 0, 1, 2, ... in order, so stage-j patterns sit on VNs 0..j.
    fn scripted(
        g: &TannerGraph,
        converge_if: impl Fn(&LlrFrame) -> bool + 'static,
    ) -> ScriptedRunner {
        ScriptedRunner {
            n_vars: g.n_vars(),
            n_edges: g.n_edges(),
            iterations: 5,
            converge_if: Box::new(converge_if),
        }
    }

    #[test]
    fn pps_decrements_and_prunes_per_stage() {
        // j_max = 4: first convergence at stage j prunes 2^(4-j+1) - 2
        // descendants and lowers t_f by 2^(4-j).
        for (stage, expect_tf_after, expect_pruned) in [(1u32, 22u32, 14u64), (2, 26, 6), (3, 28, 2)]
        {
            let g = hamming_7_4();
            let frame = LlrFrame::new(alloc::vec![0.5; 7]).unwrap();
            let initial = fake_failed_run(&g);
            // Converge exactly when the first `stage` VNs are saturated all
            // positive and the next VN is untouched.
            let mut runner = scripted(&g, move |f| {
                let sat_all_pos = (0..stage as usize).all(|v| f.values()[v] == ALPHA);
                let next_untouched = f.values()[stage as usize].abs() < ALPHA;
                sat_all_pos && next_untouched
            });
            let mut cfg = TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, StopRule::Pps, 4);
            cfg.record_trace = true;
            let out = run_reprocessing(&g, &frame, &initial, &cfg, &mut runner);
            let trace = out.trace.unwrap();
            let first = trace.events[0];
            assert_eq!(first.stage, stage);
            assert_eq!(first.t_f_before, 30);
            assert_eq!(first.t_f_after, expect_tf_after);
            assert_eq!(first.descendants_pruned, expect_pruned);
            // The pruned rows the trace reports match the event count.
            let pruned_rows = trace.tests.iter().filter(|r| r.pruned_by.is_some()).count() as u64;
            let total_pruned: u64 = trace.events.iter().map(|e| e.descendants_pruned).sum();
            assert_eq!(pruned_rows, total_pruned);
        }
    }

    #[test]
    fn pps_both_stage1_branches_converging_empties_tree() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(alloc::vec![0.5; 7]).unwrap();
        let initial = fake_failed_run(&g);
        let mut runner = scripted(&g, |f| f.values()[0].abs() == ALPHA);
        let cfg = TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, StopRule::Pps, 4);
        let out = run_reprocessing(&g, &frame, &initial, &cfg, &mut runner);
        assert_eq!(out.tests_used, 2);
        assert_eq!(out.candidate_count, 2);
        assert_eq!(out.status, Status::Recovered);
    }

    #[test]
    fn pps_executes_subset_of_lds() {
        // Same scripted behavior under both stop rules: PPS's executed
        // (stage, pattern) set and candidate set are subsets of LDS's.
        let g = hamming_7_4();
        let frame = LlrFrame::new(alloc::vec![0.5; 7]).unwrap();
        let initial = fake_failed_run(&g);
        let script = |f: &LlrFrame| {
            // Converge on any pattern whose first two saturated values are
            // (+a, -a), at every stage depth.
            f.values()[0] == ALPHA && f.values()[1] == -ALPHA
        };
        let run_with = |stop: StopRule| {
            let mut runner = scripted(&g, script);
            let mut cfg = TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, stop, 4);
            cfg.record_trace = true;
            run_reprocessing(&g, &frame, &initial, &cfg, &mut runner)
        };
        let lds = run_with(StopRule::Lds);
        let pps = run_with(StopRule::Pps);
        let executed = |out: &DecodeOutcome| -> Vec<(u32, Vec<u8>)> {
            out.trace
                .as_ref()
                .unwrap()
                .tests
                .iter()
                .filter(|r| r.test_index.is_some())
                .map(|r| (r.stage, r.pattern.clone()))
                .collect()
        };
        let lds_tests = executed(&lds);
        let pps_tests = executed(&pps);
        assert!(pps_tests.len() < lds_tests.len());
        for t in &pps_tests {
            assert!(lds_tests.contains(t), "PPS ran {t:?}, LDS did not");
        }
        assert!(pps.tests_used < lds.tests_used);
    }

    #[test]
    fn eqml_recovers_two_error_frame_found_by_enumeration() {
        let g = hamming_7_4();
        let frame = failing_hamming_frame();
        let out = decode_frame(
            &g,
            &frame,
            &ms_cfg(),
            &TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, StopRule::Lds, 3),
        )
        .unwrap();
        assert_eq!(out.status, Status::Recovered);

        // Exhaustive oracle over all 16 codewords with the same metric.
        let basis = nullspace_basis(&g);
        let mut best: Option<(f64, Vec<u8>)> = None;
        for c in 0..16u64 {
            let w = combine(&basis, c);
            let score: f64 = w
                .iter()
                .zip(frame.values())
                .map(|(&x, &r)| (1.0 - 2.0 * x as f64) * r)
                .sum();
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, w));
            }
        }
        let ml = best.unwrap().1;
        assert_eq!(ml, alloc::vec![0u8; 7], "fixture decodes to the transmitted word");
        assert_eq!(out.codeword.unwrap(), ml);
    }

    #[test]
    fn first_pass_convergence_skips_reprocessing() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(alloc::vec![4.0; 7]).unwrap();
        let out = decode_frame(
            &g,
            &frame,
            &ms_cfg(),
            &TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, StopRule::Pps, 4),
        )
        .unwrap();
        assert_eq!(out.status, Status::ConvergedFirstPass);
        assert_eq!(out.tests_used, 0);
        assert_eq!(out.total_iterations, 1);
    }

    #[test]
    fn select_best_single_and_pairwise() {
        let frame = LlrFrame::new(alloc::vec![3.0, 2.5, 2.0, 1.5, 1.0, 0.5, 0.25]).unwrap();
        let only = alloc::vec![(alloc::vec![0, 1, 1, 0, 0, 1, 1], 1u32)];
        assert_eq!(
            select_best(&only, &frame, CandidateMetric::Correlation).unwrap(),
            only[0].0
        );
        assert_eq!(
            select_best(&only, &frame, CandidateMetric::Literal).unwrap(),
            only[0].0
        );

        // Transmitted all-zero vs a 2-bit-differing codeword on a high-SNR
        // frame: correlation prefers the transmitted word.
        let zero = alloc::vec![0u8; 7];
        let other = alloc::vec![0, 0, 0, 0, 0, 1, 1];
        let cands = alloc::vec![(other, 1u32), (zero.clone(), 2u32)];
        assert_eq!(
            select_best(&cands, &frame, CandidateMetric::Correlation).unwrap(),
            zero
        );
        assert!(select_best(&[], &frame, CandidateMetric::Correlation).is_err());
    }

    #[test]
    fn correlation_matches_euclidean_to_modulated_candidates() {
        // Brute-force oracle: the correlation pick equals the candidate whose
        // BPSK modulation is Euclidean-nearest to the channel values.
        let g = hamming_7_4();
        let basis = nullspace_basis(&g);
        let words: Vec<Vec<u8>> = (0..16u64).map(|c| combine(&basis, c)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 2.0).unwrap();
        for _ in 0..1000 {
            let frame =
                LlrFrame::new((0..7).map(|_| normal.sample(&mut rng)).collect()).unwrap();
            let cands: Vec<(Vec<u8>, u32)> = words
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, w)| (w, i as u32))
                .collect();
            let corr = select_best(&cands, &frame, CandidateMetric::Correlation).unwrap();
            let nearest = words
                .iter()
                .min_by(|a, b| {
                    let da: f64 = a
                        .iter()
                        .zip(frame.values())
                        .map(|(&x, &r)| {
                            let d = r - (1.0 - 2.0 * x as f64);
                            d * d
                        })
                        .sum();
                    let db: f64 = b
                        .iter()
                        .zip(frame.values())
                        .map(|(&x, &r)| {
                            let d = r - (1.0 - 2.0 * x as f64);
                            d * d
                        })
                        .sum();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            assert_eq!(&corr, nearest);
        }
    }

    #[test]
    fn lds_candidates_monotone_in_jmax() {
        let g = hamming_7_4();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        // All-zero word over AWGN at 0 dB (rate 4/7) so that first-pass
        // failures are plentiful.
        let sigma_sq = 1.0 / (2.0 * (4.0 / 7.0));
        let normal = Normal::new(1.0, libm::sqrt(sigma_sq)).unwrap();
        let mut checked = 0;
        for _ in 0..400 {
            let frame = LlrFrame::new(
                (0..7)
                    .map(|_| 2.0 * normal.sample(&mut rng) / sigma_sq)
                    .collect(),
            )
            .unwrap();
            let initial = decode(&g, &frame, &ms_cfg()).unwrap();
            if initial.converged {
                continue;
            }
            checked += 1;
            let mut small_cfg = TreeConfig::new(Mode::Eqml, Strategy::EdgeWise, StopRule::Lds, 2);
            small_cfg.record_trace = true;
            let mut big_cfg = small_cfg.clone();
            big_cfg.j_max = 3;
            let mut r1 = GraphRunner { graph: &g, cfg: ms_cfg() };
            let mut r2 = GraphRunner { graph: &g, cfg: ms_cfg() };
            let small = run_reprocessing(&g, &frame, &initial, &small_cfg, &mut r1);
            let big = run_reprocessing(&g, &frame, &initial, &big_cfg, &mut r2);
            // Every candidate the small tree found also shows up in the big
            // tree (the first stages are identical).
            let small_trace = small.trace.unwrap();
            let big_trace = big.trace.unwrap();
            let converged_small: Vec<_> = small_trace
                .tests
                .iter()
                .filter(|r| r.converged)
                .map(|r| (r.stage, r.pattern.clone()))
                .collect();
            for key in converged_small {
                assert!(big_trace
                    .tests
                    .iter()
                    .any(|r| r.converged && (r.stage, r.pattern.clone()) == key));
            }
        }
        assert!(checked > 10, "need failing frames to make this meaningful");
    }
}


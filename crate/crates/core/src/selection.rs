//! Choosing the next variable node to saturate.
//!
//! Two strategies: node-wise (degree among neighbors of unsatisfied checks,
//! ties by least reliable channel value) and edge-wise (largest V2C
//! sign-flip total, ties by smallest APP magnitude). Both zero out already
//! selected nodes so no VN is returned twice within one frame.

use alloc::vec::Vec;

use crate::bp::{BpRun, LlrFrame};
use crate::graph::TannerGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SelectionError {
    /// No selectable VN remains under the strategy's criterion.
    #[error("selection exhausted")]
    Exhausted,
}

/// Which strategy produced a selection, with the criterion values that
/// decided it (for tracing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRecord {
    pub vn: usize,
    /// NWS: the winning masked degree. EWS: the winning flip total.
    pub primary: f64,
    /// NWS: |r(vn)|. EWS: |APP(vn)|.
    pub secondary: f64,
}

/// Per-frame working state shared by both strategies.
#[derive(Debug, Clone)]
pub struct SelectionState {
    selected: Vec<usize>,
    is_selected: Vec<bool>,
    /// Working copy of d(v), zeroed for selected VNs.
    masked_degrees: Vec<u32>,
    /// Flip totals from the most recent observed run, zeroed for selected VNs.
    flip_snapshot: Vec<u32>,
    /// |APP| from the most recent observed run.
    app_snapshot: Vec<f64>,
    /// |r(v)| of the original channel frame.
    channel_abs: Vec<f64>,
    /// Hard decision of the most recent observed run (feeds NWS syndromes).
    last_hard: Vec<u8>,
}

impl SelectionState {
    /// Initialize from the failed first-pass decode.
    pub fn new(graph: &TannerGraph, frame: &LlrFrame, initial_run: &BpRun) -> Self {
        let n = graph.n_vars();
        let mut state = Self {
            selected: Vec::new(),
            is_selected: alloc::vec![false; n],
            masked_degrees: (0..n).map(|v| graph.vn_degree(v) as u32).collect(),
            flip_snapshot: alloc::vec![0; n],
            app_snapshot: alloc::vec![0.0; n],
            channel_abs: frame.values().iter().map(|v| v.abs()).collect(),
            last_hard: alloc::vec![0; n],
        };
        state.observe_run(initial_run);
        state
    }

    /// Refresh the flip and APP snapshots from the latest completed BP run.
    /// Selected VNs keep flip totals forced to zero.
    pub fn observe_run(&mut self, run: &BpRun) {
        for (v, slot) in self.flip_snapshot.iter_mut().enumerate() {
            *slot = if self.is_selected[v] { 0 } else { run.flip_count_vn[v] };
        }
        for (v, slot) in self.app_snapshot.iter_mut().enumerate() {
            *slot = run.app[v].abs();
        }
        self.last_hard.copy_from_slice(&run.hard_decision);
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    fn mark(&mut self, v: usize) {
        self.selected.push(v);
        self.is_selected[v] = true;
        self.masked_degrees[v] = 0;
        self.flip_snapshot[v] = 0;
    }

    /// Node-wise selection: among the VNs adjacent to the unsatisfied checks
    /// of the latest hard decision, take those with the largest unmasked
    /// degree, then the smallest channel reliability, then the lowest index.
    pub fn nws_select(&mut self, graph: &TannerGraph) -> Result<SelectionRecord, SelectionError> {
        let syndrome = graph
            .syndrome(&self.last_hard)
            .expect("state sized to graph");

        let mut in_vs = alloc::vec![false; graph.n_vars()];
        for (m, &s) in syndrome.iter().enumerate() {
            if s != 0 {
                for &e in graph.cn_edges(m) {
                    in_vs[graph.edge_var(e)] = true;
                }
            }
        }

        let d_max = in_vs
            .iter()
            .enumerate()
            .filter(|&(_, &inside)| inside)
            .map(|(v, _)| self.masked_degrees[v])
            .max()
            .unwrap_or(0);
        if d_max == 0 {
            // Zero syndrome, or every candidate already saturated.
            return Err(SelectionError::Exhausted);
        }

        let mut best: Option<usize> = None;
        for v in 0..graph.n_vars() {
            if in_vs[v] && self.masked_degrees[v] == d_max {
                match best {
                    None => best = Some(v),
                    Some(b) if self.channel_abs[v] < self.channel_abs[b] => best = Some(v),
                    _ => {}
                }
            }
        }
        let vn = best.expect("d_max > 0 implies a candidate");
        let record = SelectionRecord {
            vn,
            primary: d_max as f64,
            secondary: self.channel_abs[vn],
        };
        self.mark(vn);
        Ok(record)
    }

    /// Edge-wise selection over all VNs: largest flip total, ties by the
    /// smallest APP magnitude, then the lowest index.
    pub fn ews_select(&mut self) -> Result<SelectionRecord, SelectionError> {
        let n = self.flip_snapshot.len();
        let mut best: Option<usize> = None;
        for v in 0..n {
            if self.is_selected[v] {
                continue;
            }
            match best {
                None => best = Some(v),
                Some(b) => {
                    let better = self.flip_snapshot[v] > self.flip_snapshot[b]
                        || (self.flip_snapshot[v] == self.flip_snapshot[b]
                            && self.app_snapshot[v] < self.app_snapshot[b]);
                    if better {
                        best = Some(v);
                    }
                }
            }
        }
        let vn = best.ok_or(SelectionError::Exhausted)?;
        let record = SelectionRecord {
            vn,
            primary: self.flip_snapshot[vn] as f64,
            secondary: self.app_snapshot[vn],
        };
        self.mark(vn);
        Ok(record)
    }

    /// Pre-select the `count` VNs with the smallest channel reliability, in
    /// ascending |r| order (single-shot saturation).
    pub fn select_least_reliable(&mut self, count: usize) -> Result<(), SelectionError> {
        for _ in 0..count {
            let mut best: Option<usize> = None;
            for v in 0..self.channel_abs.len() {
                if self.is_selected[v] {
                    continue;
                }
                match best {
                    None => best = Some(v),
                    Some(b) if self.channel_abs[v] < self.channel_abs[b] => best = Some(v),
                    _ => {}
                }
            }
            let vn = best.ok_or(SelectionError::Exhausted)?;
            self.mark(vn);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{decode, BpConfig, LlrFrame};
    use crate::graph::hamming_7_4;
    use alloc::vec;
    use alloc::vec::Vec;

    // Fabricate a BpRun-shaped observation without running BP.
    fn fake_run(graph: &TannerGraph, hard: Vec<u8>, flips: Vec<u32>, app: Vec<f64>) -> BpRun {
        BpRun {
            v2c: vec![0.0; graph.n_edges()],
            c2v: vec![0.0; graph.n_edges()],
            app,
            hard_decision: hard,
            converged: false,
            iterations_used: 1,
            flip_count_edge: vec![0; graph.n_edges()],
            flip_count_vn: flips,
            flip_pct_per_iter: vec![],
        }
    }

    #[test]
    fn nws_prefers_highest_degree_in_violated_neighborhood() {
        let g = hamming_7_4();
        // Hard decision 0000001: every check unsatisfied; VN 7 (index 6) has
        // the maximum degree 3 and wins regardless of channel values.
        let frame = LlrFrame::new(vec![0.9, 0.8, 0.9, 0.6, 0.4, 0.7, 0.1]).unwrap();
        let hard = vec![0, 0, 0, 0, 0, 0, 1];
        let run = fake_run(&g, hard.clone(), vec![0; 7], vec![0.0; 7]);
        let mut state = SelectionState::new(&g, &frame, &run);
        let rec = state.nws_select(&g).unwrap();
        assert_eq!(rec.vn, 6);
        assert_eq!(rec.primary, 3.0);

        // With VN 7 masked, degree-2 candidates {3,5,6} (1-based) remain;
        // |r| = 0.9, 0.4, 0.7 there, so VN 5 (index 4) wins.
        state.observe_run(&fake_run(&g, hard, vec![0; 7], vec![0.0; 7]));
        let rec = state.nws_select(&g).unwrap();
        assert_eq!(rec.vn, 4);
        assert_eq!(rec.primary, 2.0);
        assert_eq!(rec.secondary, 0.4);
    }

    #[test]
    fn nws_zero_syndrome_is_exhausted() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(vec![1.0; 7]).unwrap();
        let run = fake_run(&g, vec![0; 7], vec![0; 7], vec![0.0; 7]);
        let mut state = SelectionState::new(&g, &frame, &run);
        assert_eq!(state.nws_select(&g), Err(SelectionError::Exhausted));
    }

    #[test]
    fn nws_result_touches_an_unsatisfied_check() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(vec![0.5, -0.2, 0.9, -1.0, 0.3, 0.8, -0.6]).unwrap();
        for word in 1u32..128 {
            let hard: Vec<u8> = (0..7).map(|i| ((word >> i) & 1) as u8).collect();
            if g.is_codeword(&hard) {
                continue;
            }
            let run = fake_run(&g, hard.clone(), vec![0; 7], vec![0.0; 7]);
            let mut state = SelectionState::new(&g, &frame, &run);
            let rec = state.nws_select(&g).unwrap();
            let syndrome = g.syndrome(&hard).unwrap();
            let adjacent = g.vn_edges(rec.vn).iter().any(|&e| syndrome[g.edge_check(e)] != 0);
            assert!(adjacent, "selected VN {} not on an unsatisfied check", rec.vn);
        }
    }

    #[test]
    fn ews_breaks_flip_ties_by_smallest_app() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(vec![1.0; 7]).unwrap();
        // v1:5, v2:7, v3:7 flips; |APP| 0.3, 1.2, 0.8 -> tie {v2,v3} -> v3.
        let flips = vec![5, 7, 7, 0, 0, 0, 0];
        let app = vec![0.3, 1.2, 0.8, 9.0, 9.0, 9.0, 9.0];
        let run = fake_run(&g, vec![0; 7], flips, app);
        let mut state = SelectionState::new(&g, &frame, &run);
        let rec = state.ews_select().unwrap();
        assert_eq!(rec.vn, 2);
        assert_eq!(rec.primary, 7.0);
        assert_eq!(rec.secondary, 0.8);
    }

    #[test]
    fn ews_all_zero_flips_falls_back_to_smallest_app() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(vec![1.0; 7]).unwrap();
        let app = vec![2.0, 0.7, 1.4, 0.5, 3.0, 0.9, 1.1];
        let run = fake_run(&g, vec![0; 7], vec![0; 7], app.clone());
        let mut state = SelectionState::new(&g, &frame, &run);
        // Brute-force argmin of |APP| as the oracle.
        let want = (0..7).min_by(|&a, &b| app[a].partial_cmp(&app[b]).unwrap()).unwrap();
        let rec = state.ews_select().unwrap();
        assert_eq!(rec.vn, want);
    }

    #[test]
    fn no_vn_selected_twice() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(vec![0.4, -0.3, 0.2, -0.5, 0.1, -0.2, 0.3]).unwrap();
        let run = decode(&g, &frame, &BpConfig::default()).unwrap();
        let mut state = SelectionState::new(&g, &frame, &run);
        let mut seen = Vec::new();
        for _ in 0..7 {
            let rec = state.ews_select().unwrap();
            assert!(!seen.contains(&rec.vn));
            seen.push(rec.vn);
        }
        assert_eq!(state.ews_select(), Err(SelectionError::Exhausted));
    }

    #[test]
    fn least_reliable_ordering() {
        let g = hamming_7_4();
        let frame = LlrFrame::new(vec![0.9, -0.1, 0.5, -0.3, 0.2, 0.8, -0.7]).unwrap();
        let run = fake_run(&g, vec![0; 7], vec![0; 7], vec![0.0; 7]);
        let mut state = SelectionState::new(&g, &frame, &run);
        state.select_least_reliable(3).unwrap();
        assert_eq!(state.selected(), &[1, 4, 3]);
    }
}

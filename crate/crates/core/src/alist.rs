//! Alist text format for sparse parity-check matrices.
//!
//! Layout: line 1 `N M`; line 2 `max_col_deg max_row_deg`; line 3 the N
//! column degrees; line 4 the M row degrees; then N lines of 1-based check
//! indices per column; then M lines of 1-based variable indices per row.
//! Fixed-width rows padded with zeros are accepted; padding zeros are
//! ignored. All indices are converted to 0-based internally.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::TannerGraph;

/// Parse failure, pointing at the offending 1-based line of the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlistError {
    #[error("line {line}: expected {expected}")]
    Malformed { line: usize, expected: &'static str },
    #[error("line {line}: dimension mismatch ({detail})")]
    Dimension { line: usize, detail: String },
    #[error("line {line}: index {value} out of range 1..={max}")]
    IndexOutOfRange { line: usize, value: usize, max: usize },
    #[error("line {line}: duplicate edge (check {check}, var {var})")]
    DuplicateEdge { line: usize, check: usize, var: usize },
    #[error("line {line}: column and row lists inconsistent ({detail})")]
    Inconsistent { line: usize, detail: String },
}

fn parse_ints(line: &str, lineno: usize, what: &'static str) -> Result<Vec<usize>, AlistError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| AlistError::Malformed {
                line: lineno,
                expected: what,
            })
        })
        .collect()
}

/// Parse alist text into a validated [`TannerGraph`].
pub fn parse_alist(text: &str) -> Result<TannerGraph, AlistError> {
    // Keep 1-based line numbers for diagnostics; skip lines that are all
    // whitespace (some published files end with a blank line).
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    let mut it = lines.iter();
    let mut next = |what: &'static str| {
        it.next().copied().ok_or(AlistError::Malformed {
            line: lines.last().map_or(1, |(n, _)| n + 1),
            expected: what,
        })
    };

    let (ln, l) = next("N M")?;
    let dims = parse_ints(l, ln, "N M")?;
    if dims.len() != 2 {
        return Err(AlistError::Malformed { line: ln, expected: "N M" });
    }
    let (n_vars, n_checks) = (dims[0], dims[1]);
    if n_vars == 0 || n_checks == 0 {
        return Err(AlistError::Dimension {
            line: ln,
            detail: format!("N={n_vars}, M={n_checks} must be positive"),
        });
    }

    let (ln, l) = next("max_col_deg max_row_deg")?;
    let maxes = parse_ints(l, ln, "max_col_deg max_row_deg")?;
    if maxes.len() != 2 {
        return Err(AlistError::Malformed {
            line: ln,
            expected: "max_col_deg max_row_deg",
        });
    }
    let (max_col, max_row) = (maxes[0], maxes[1]);

    let (ln, l) = next("column degrees")?;
    let col_deg = parse_ints(l, ln, "column degrees")?;
    if col_deg.len() != n_vars {
        return Err(AlistError::Dimension {
            line: ln,
            detail: format!("expected {n_vars} column degrees, got {}", col_deg.len()),
        });
    }
    if let Some(d) = col_deg.iter().find(|&&d| d > max_col) {
        return Err(AlistError::Dimension {
            line: ln,
            detail: format!("column degree {d} exceeds declared maximum {max_col}"),
        });
    }

    let (ln, l) = next("row degrees")?;
    let row_deg = parse_ints(l, ln, "row degrees")?;
    if row_deg.len() != n_checks {
        return Err(AlistError::Dimension {
            line: ln,
            detail: format!("expected {n_checks} row degrees, got {}", row_deg.len()),
        });
    }
    if let Some(d) = row_deg.iter().find(|&&d| d > max_row) {
        return Err(AlistError::Dimension {
            line: ln,
            detail: format!("row degree {d} exceeds declared maximum {max_row}"),
        });
    }

    // N column lists: 1-based check indices, zero entries are padding.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut col_lists: Vec<Vec<usize>> = Vec::with_capacity(n_vars);
    for n in 0..n_vars {
        let (ln, l) = next("column connection list")?;
        let entries = parse_ints(l, ln, "column connection list")?;
        let mut checks: Vec<usize> = Vec::with_capacity(col_deg[n]);
        for &v in &entries {
            if v == 0 {
                continue; // padding
            }
            if v > n_checks {
                return Err(AlistError::IndexOutOfRange {
                    line: ln,
                    value: v,
                    max: n_checks,
                });
            }
            let m = v - 1;
            if checks.contains(&m) {
                return Err(AlistError::DuplicateEdge { line: ln, check: m, var: n });
            }
            checks.push(m);
        }
        if checks.len() != col_deg[n] {
            return Err(AlistError::Dimension {
                line: ln,
                detail: format!(
                    "column {} lists {} checks, degree line says {}",
                    n + 1,
                    checks.len(),
                    col_deg[n]
                ),
            });
        }
        for &m in &checks {
            pairs.push((m, n));
        }
        col_lists.push(checks);
    }

    // M row lists must restate exactly the same edges.
    let mut row_seen: Vec<Vec<usize>> = vec![Vec::new(); n_checks];
    for m in 0..n_checks {
        let (ln, l) = next("row connection list")?;
        let entries = parse_ints(l, ln, "row connection list")?;
        let mut vars: Vec<usize> = Vec::with_capacity(row_deg[m]);
        for &v in &entries {
            if v == 0 {
                continue;
            }
            if v > n_vars {
                return Err(AlistError::IndexOutOfRange {
                    line: ln,
                    value: v,
                    max: n_vars,
                });
            }
            let n = v - 1;
            if vars.contains(&n) {
                return Err(AlistError::DuplicateEdge { line: ln, check: m, var: n });
            }
            if !col_lists[n].contains(&m) {
                return Err(AlistError::Inconsistent {
                    line: ln,
                    detail: format!("row {} lists var {}, column list does not", m + 1, n + 1),
                });
            }
            vars.push(n);
        }
        if vars.len() != row_deg[m] {
            return Err(AlistError::Dimension {
                line: ln,
                detail: format!(
                    "row {} lists {} vars, degree line says {}",
                    m + 1,
                    vars.len(),
                    row_deg[m]
                ),
            });
        }
        row_seen[m] = vars;
    }
    let col_edges: usize = col_lists.iter().map(|c| c.len()).sum();
    let row_edges: usize = row_seen.iter().map(|r| r.len()).sum();
    if col_edges != row_edges {
        return Err(AlistError::Inconsistent {
            line: lines.last().map_or(1, |(n, _)| *n),
            detail: format!("{col_edges} column edges vs {row_edges} row edges"),
        });
    }

    TannerGraph::from_edges(n_checks, n_vars, &pairs).map_err(|e| AlistError::Inconsistent {
        line: 1,
        detail: format!("{e}"),
    })
}

/// Serialize a graph back to alist text (unpadded variant).
pub fn serialize_alist(graph: &TannerGraph) -> String {
    use core::fmt::Write;
    let n = graph.n_vars();
    let m = graph.n_checks();
    let max_col = (0..n).map(|v| graph.vn_degree(v)).max().unwrap_or(0);
    let max_row = (0..m).map(|c| graph.cn_edges(c).len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let cols: Vec<String> = (0..n).map(|v| format!("{}", graph.vn_degree(v))).collect();
    let _ = writeln!(out, "{}", cols.join(" "));
    let rows: Vec<String> = (0..m)
        .map(|c| format!("{}", graph.cn_edges(c).len()))
        .collect();
    let _ = writeln!(out, "{}", rows.join(" "));
    // A lone padding zero keeps degree-0 rows from serializing as blank
    // lines.
    let join = |list: Vec<String>| {
        if list.is_empty() {
            String::from("0")
        } else {
            list.join(" ")
        }
    };
    for v in 0..n {
        let list: Vec<String> = graph
            .vn_edges(v)
            .iter()
            .map(|&e| format!("{}", graph.edge_check(e) + 1))
            .collect();
        let _ = writeln!(out, "{}", join(list));
    }
    for c in 0..m {
        let list: Vec<String> = graph
            .cn_edges(c)
            .iter()
            .map(|&e| format!("{}", graph.edge_var(e) + 1))
            .collect();
        let _ = writeln!(out, "{}", join(list));
    }
    out
}

//! Sparse bipartite code structure: variable nodes, check nodes, edges.

use alloc::vec;
use alloc::vec::Vec;

/// Errors from building or querying a [`TannerGraph`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("edge ({check}, {var}) out of range for {n_checks} checks x {n_vars} vars")]
    EdgeOutOfRange {
        check: usize,
        var: usize,
        n_checks: usize,
        n_vars: usize,
    },
    #[error("duplicate edge ({check}, {var})")]
    DuplicateEdge { check: usize, var: usize },
    #[error("variable node {var} has degree 0")]
    ZeroDegreeVar { var: usize },
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite LLR at position {index}")]
    NonFiniteLlr { index: usize },
}

/// Immutable Tanner graph of a binary parity-check matrix.
///
/// Edges carry dense ids so that per-edge message and counter arrays can be
/// indexed directly. Adjacency is stored both per variable node (VN) and per
/// check node (CN); both lists refer to the same edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n_vars: usize,
    n_checks: usize,
    /// Per edge id: (check index, var index).
    edges: Vec<(u32, u32)>,
    /// Per VN: edge ids, ascending by check index.
    vn_edges: Vec<Vec<u32>>,
    /// Per CN: edge ids, ascending by var index.
    cn_edges: Vec<Vec<u32>>,
}

impl TannerGraph {
    /// Build from a list of `(check, var)` pairs.
    ///
    /// Duplicate pairs and zero-degree variable nodes are rejected: message
    /// indexing assumes a simple graph and every bit must be checked at
    /// least once.
    pub fn from_edges(
        n_checks: usize,
        n_vars: usize,
        pairs: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut vn_pairs: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
        let mut cn_pairs: Vec<Vec<usize>> = vec![Vec::new(); n_checks];
        for &(m, n) in pairs {
            if m >= n_checks || n >= n_vars {
                return Err(GraphError::EdgeOutOfRange {
                    check: m,
                    var: n,
                    n_checks,
                    n_vars,
                });
            }
            if cn_pairs[m].contains(&n) {
                return Err(GraphError::DuplicateEdge { check: m, var: n });
            }
            cn_pairs[m].push(n);
            vn_pairs[n].push(m);
        }
        for (n, list) in vn_pairs.iter().enumerate() {
            if list.is_empty() {
                return Err(GraphError::ZeroDegreeVar { var: n });
            }
        }

        // Assign edge ids grouped by VN so per-VN message slices are contiguous.
        let mut edges = Vec::with_capacity(pairs.len());
        let mut vn_edges: Vec<Vec<u32>> = Vec::with_capacity(n_vars);
        let mut cn_edges: Vec<Vec<u32>> = vec![Vec::new(); n_checks];
        for (n, list) in vn_pairs.iter_mut().enumerate() {
            list.sort_unstable();
            let mut ids = Vec::with_capacity(list.len());
            for &m in list.iter() {
                let id = edges.len() as u32;
                edges.push((m as u32, n as u32));
                ids.push(id);
            }
            vn_edges.push(ids);
        }
        for (id, &(m, _)) in edges.iter().enumerate() {
            cn_edges[m as usize].push(id as u32);
        }

        Ok(Self {
            n_vars,
            n_checks,
            edges,
            vn_edges,
            cn_edges,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Check index of edge `e`.
    #[inline]
    pub fn edge_check(&self, e: u32) -> usize {
        self.edges[e as usize].0 as usize
    }

    /// Variable index of edge `e`.
    #[inline]
    pub fn edge_var(&self, e: u32) -> usize {
        self.edges[e as usize].1 as usize
    }

    /// Edge ids incident to variable node `n`.
    #[inline]
    pub fn vn_edges(&self, n: usize) -> &[u32] {
        &self.vn_edges[n]
    }

    /// Edge ids incident to check node `m`.
    #[inline]
    pub fn cn_edges(&self, m: usize) -> &[u32] {
        &self.cn_edges[m]
    }

    /// Degree of variable node `n`.
    #[inline]
    pub fn vn_degree(&self, n: usize) -> usize {
        self.vn_edges[n].len()
    }

    /// All variable degrees.
    pub fn vn_degrees(&self) -> Vec<usize> {
        (0..self.n_vars).map(|n| self.vn_degree(n)).collect()
    }

    /// Syndrome of a hard-decision word: entry `m` is the XOR of the bits
    /// adjacent to check `m`. All-zero iff `bits` is a codeword.
    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>, GraphError> {
        if bits.len() != self.n_vars {
            return Err(GraphError::LengthMismatch {
                expected: self.n_vars,
                actual: bits.len(),
            });
        }
        let mut s = vec![0u8; self.n_checks];
        for (m, edge_ids) in self.cn_edges.iter().enumerate() {
            let mut acc = 0u8;
            for &e in edge_ids {
                acc ^= bits[self.edge_var(e)] & 1;
            }
            s[m] = acc;
        }
        Ok(s)
    }

    /// True iff every parity check is satisfied. Panics on length mismatch.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        debug_assert_eq!(bits.len(), self.n_vars);
        self.cn_edges.iter().all(|edge_ids| {
            edge_ids
                .iter()
                .fold(0u8, |acc, &e| acc ^ (bits[self.edge_var(e)] & 1))
                == 0
        })
    }
}

/// Set of variable nodes whose channel observation is never transmitted.
///
/// A punctured VN enters the decoder with channel LLR exactly 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PunctureMask {
    indices: Vec<usize>,
}

impl PunctureMask {
    /// Empty mask: nothing punctured.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from 0-based VN indices; sorted and deduplicated.
    pub fn new(indices: impl IntoIterator<Item = usize>, n_vars: usize) -> Result<Self, GraphError> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if let Some(&bad) = v.iter().find(|&&i| i >= n_vars) {
            return Err(GraphError::EdgeOutOfRange {
                check: 0,
                var: bad,
                n_checks: 0,
                n_vars,
            });
        }
        Ok(Self { indices: v })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.indices.binary_search(&n).is_ok()
    }
}

/// The fixed Hamming(7,4) parity-check matrix used throughout the tests:
/// rows 1010101, 0110011, 0001111.
pub fn hamming_7_4() -> TannerGraph {
    let pairs = [
        (0, 0),
        (0, 2),
        (0, 4),
        (0, 6),
        (1, 1),
        (1, 2),
        (1, 5),
        (1, 6),
        (2, 3),
        (2, 4),
        (2, 5),
        (2, 6),
    ];
    TannerGraph::from_edges(3, 7, &pairs).expect("fixed matrix is valid")
}

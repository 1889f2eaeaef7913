//! Node pairing between a hypothesis tree and a reference tree.
//!
//! Two pairings are provided. [`parallel_pairing`] zips the pre-order
//! traversals and pads the shorter side. [`optimal_alignment`] solves a
//! min-cost one-to-one assignment where the cost of pairing two nodes is the
//! chrF distance between their serialized subtrees.

use crate::error::{Error, Result};
use crate::textmetrics::{ChrfBatch, ChrfConfig};
use crate::xmltree::{DocTree, NodeId};

/// Position-paired nodes. `None` is a padding placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePairing {
    pub pairs: Vec<(Option<NodeId>, Option<NodeId>)>,
}

/// Zips the pre-order traversals of both trees (synthetic roots excluded).
pub fn parallel_pairing(hyp: &DocTree, reference: &DocTree) -> NodePairing {
    let h = hyp.preorder();
    let r = reference.preorder();
    let len = h.len().max(r.len());
    let pairs = (0..len)
        .map(|i| (h.get(i).copied(), r.get(i).copied()))
        .collect();
    NodePairing { pairs }
}

/// A min-cost assignment: `(row, col)` pairs sorted by row, plus the summed
/// cost of the chosen entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Solves the rectangular linear sum assignment problem.
///
/// Every row is assigned when `rows <= cols`, every column otherwise. Uses the
/// shortest augmenting path form of the Hungarian method with row and column
/// potentials, O(n^2 m).
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    for (r, row) in cost.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Config(format!(
                "cost matrix row {r} has {} entries, expected {cols}",
                row.len()
            )));
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost { row: r, col: c });
        }
    }
    if rows == 0 || cols == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }

    let mut pairs = if rows <= cols {
        solve(rows, cols, |i, j| cost[i][j])
    } else {
        let mut t: Vec<(usize, usize)> = solve(cols, rows, |i, j| cost[j][i])
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        t.sort_unstable();
        t
    };
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
    Ok(Assignment { pairs, total_cost })
}

/// Core solver for `n <= m`; returns `(row, col)` for every row.
fn solve(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    // 1-based; index 0 is a virtual column used to start each augmentation.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect()
}

/// Optimal one-to-one node mapping and the structural edits it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalAlignment {
    /// `(hyp_node, ref_node)` pairs, in hypothesis pre-order.
    pub matches: Vec<(NodeId, NodeId)>,
    pub unmatched_hyp: Vec<NodeId>,
    pub unmatched_ref: Vec<NodeId>,
    /// One per unmatched node plus 0.5 per matched pair with differing tags.
    pub edit_count: f64,
}

impl OptimalAlignment {
    pub fn tag_mismatches(&self, hyp: &DocTree, reference: &DocTree) -> usize {
        self.matches
            .iter()
            .filter(|&&(h, r)| hyp.node(h).tag != reference.node(r).tag)
            .count()
    }
}

/// Pairwise subtree chrF distances `1 - chrF/100`, rows are hypothesis nodes
/// in pre-order and columns reference nodes in pre-order.
pub fn subtree_cost_matrix(hyp: &DocTree, reference: &DocTree, config: &ChrfConfig) -> Vec<Vec<f64>> {
    let mut texts: Vec<String> = hyp.preorder().into_iter().map(|id| hyp.serialize_subtree(id)).collect();
    let n_hyp = texts.len();
    texts.extend(reference.preorder().into_iter().map(|id| reference.serialize_subtree(id)));
    let batch = ChrfBatch::new(&texts, config);
    let rows: Vec<usize> = (0..n_hyp).collect();
    let cols: Vec<usize> = (n_hyp..texts.len()).collect();
    batch
        .matrix(&rows, &cols)
        .into_iter()
        .map(|row| row.into_iter().map(|c| 1.0 - c / 100.0).collect())
        .collect()
}

pub fn optimal_alignment(hyp: &DocTree, reference: &DocTree) -> OptimalAlignment {
    let hyp_nodes = hyp.preorder();
    let ref_nodes = reference.preorder();
    let cost = subtree_cost_matrix(hyp, reference, &ChrfConfig::default());
    let assignment = hungarian(&cost).expect("chrF distances are finite");

    let mut hyp_used = vec![false; hyp_nodes.len()];
    let mut ref_used = vec![false; ref_nodes.len()];
    let mut matches = Vec::with_capacity(assignment.pairs.len());
    for &(i, j) in &assignment.pairs {
        hyp_used[i] = true;
        ref_used[j] = true;
        matches.push((hyp_nodes[i], ref_nodes[j]));
    }
    let unmatched_hyp: Vec<NodeId> = hyp_nodes
        .iter()
        .zip(&hyp_used)
        .filter(|(_, &u)| !u)
        .map(|(&n, _)| n)
        .collect();
    let unmatched_ref: Vec<NodeId> = ref_nodes
        .iter()
        .zip(&ref_used)
        .filter(|(_, &u)| !u)
        .map(|(&n, _)| n)
        .collect();
    let mismatched = matches
        .iter()
        .filter(|&&(h, r)| hyp.node(h).tag != reference.node(r).tag)
        .count();
    let edit_count = (unmatched_hyp.len() + unmatched_ref.len()) as f64 + 0.5 * mismatched as f64;
    OptimalAlignment {
        matches,
        unmatched_hyp,
        unmatched_ref,
        edit_count,
    }
}

//! Zhang-Shasha ordered tree edit distance over element tags, and TreeSim.

use crate::error::{Error, Result};
use crate::xmltree::{parse_document, DocTree, ParseOutcome};

/// Score given to a hypothesis that does not parse.
pub const INVALID_XML_PENALTY: f64 = -0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditCostScheme {
    pub insert_cost: f64,
    pub delete_cost: f64,
    pub relabel_cost: f64,
}

impl Default for EditCostScheme {
    fn default() -> Self {
        EditCostScheme {
            insert_cost: 1.0,
            delete_cost: 1.0,
            relabel_cost: 1.0,
        }
    }
}

/// Post-order view of a tree, 1-based, with leftmost-leaf indices and
/// keyroots. The synthetic root is the last node.
struct PostOrder<'a> {
    labels: Vec<&'a str>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> PostOrder<'a> {
    fn new(tree: &'a DocTree) -> Self {
        let n = tree.node_count() + 1;
        let mut labels = vec![""; n + 1];
        let mut leftmost = vec![0; n + 1];
        let mut counter = 0usize;
        // (node, next child index, leftmost leaf of this node once known)
        let mut stack: Vec<(usize, usize, usize)> = vec![(tree.root(), 0, 0)];
        while let Some(top) = stack.last_mut() {
            let (id, next, _) = *top;
            let children = &tree.node(id).children;
            if next < children.len() {
                top.1 += 1;
                stack.push((children[next], 0, 0));
                continue;
            }
            let (_, _, lml) = stack.pop().unwrap();
            counter += 1;
            let lml = if lml == 0 { counter } else { lml };
            labels[counter] = tree.node(id).tag.as_str();
            leftmost[counter] = lml;
            if let Some(parent) = stack.last_mut() {
                if parent.2 == 0 {
                    parent.2 = lml;
                }
            }
        }
        // A keyroot is the highest node with a given leftmost leaf.
        let mut seen = vec![false; n + 1];
        let mut keyroots = Vec::new();
        for i in (1..=n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        PostOrder {
            labels,
            leftmost,
            keyroots,
        }
    }

    fn len(&self) -> usize {
        self.labels.len() - 1
    }
}

/// Minimum cost of insert/delete/relabel operations turning `a` into `b`.
/// Labels are element tags; text and attributes do not take part.
pub fn tree_edit_distance(a: &DocTree, b: &DocTree, costs: &EditCostScheme) -> f64 {
    let ta = PostOrder::new(a);
    let tb = PostOrder::new(b);
    let (n, m) = (ta.len(), tb.len());
    let mut treedist = vec![vec![0.0f64; m + 1]; n + 1];
    let mut forest = vec![vec![0.0f64; m + 1]; n + 1];

    for &i in &ta.keyroots {
        for &j in &tb.keyroots {
            let (li, lj) = (ta.leftmost[i], tb.leftmost[j]);
            // forest[x][y] holds the distance between forests
            // a[li..=x] and b[lj..=y]; index li-1 / lj-1 is the empty forest.
            forest[li - 1][lj - 1] = 0.0;
            for x in li..=i {
                forest[x][lj - 1] = forest[x - 1][lj - 1] + costs.delete_cost;
            }
            for y in lj..=j {
                forest[li - 1][y] = forest[li - 1][y - 1] + costs.insert_cost;
            }
            for x in li..=i {
                for y in lj..=j {
                    let del = forest[x - 1][y] + costs.delete_cost;
                    let ins = forest[x][y - 1] + costs.insert_cost;
                    if ta.leftmost[x] == li && tb.leftmost[y] == lj {
                        let relabel = if ta.labels[x] == tb.labels[y] {
                            0.0
                        } else {
                            costs.relabel_cost
                        };
                        let sub = forest[x - 1][y - 1] + relabel;
                        forest[x][y] = del.min(ins).min(sub);
                        treedist[x][y] = forest[x][y];
                    } else {
                        let sub = forest[ta.leftmost[x] - 1][tb.leftmost[y] - 1] + treedist[x][y];
                        forest[x][y] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    treedist[n][m]
}

/// `1 - dist / max(|a|, |b|)` with unit costs, sizes excluding the synthetic root,
/// floored at 0. The distance can exceed the larger size when ancestry rules out
/// pairing every node of the smaller tree, e.g. `<a/><a><a/></a>` against
/// `<b><b><b/></b></b>`.
pub fn tree_sim_trees(hypothesis: &DocTree, reference: &DocTree) -> f64 {
    let denom = hypothesis.node_count().max(reference.node_count());
    if denom == 0 {
        return 1.0;
    }
    let dist = tree_edit_distance(hypothesis, reference, &EditCostScheme::default());
    (1.0 - dist / denom as f64).max(0.0)
}

/// TreeSim over raw documents; an unparseable hypothesis scores
/// [`INVALID_XML_PENALTY`].
pub fn tree_sim(hypothesis_text: &str, reference_text: &str) -> Result<f64> {
    let reference = match parse_document(reference_text) {
        ParseOutcome::Valid(t) => t,
        ParseOutcome::Invalid(reason) => return Err(Error::InvalidReference(reason)),
    };
    Ok(match parse_document(hypothesis_text) {
        ParseOutcome::Valid(h) => tree_sim_trees(&h, &reference),
        ParseOutcome::Invalid(_) => INVALID_XML_PENALTY,
    })
}

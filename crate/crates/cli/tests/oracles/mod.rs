//! Slow, obviously-correct reference implementations used as test oracles.
//! Nothing here shares code with the library beyond the tree type.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use structeval::xmltree::DocTree;

// ---------------------------------------------------------------------------
// Tree edit distance by exhaustive search over edit mappings

struct Flat {
    labels: Vec<String>,
    /// ancestor[i][j]: i is a proper ancestor of j
    ancestor: Vec<Vec<bool>>,
}

/// Nodes in pre-order (including the dummy root), with the ancestor relation.
fn flatten(t: &DocTree) -> Flat {
    let mut order = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    fn walk(t: &DocTree, id: usize, parent: Option<usize>, order: &mut Vec<usize>, parents: &mut Vec<Option<usize>>) {
        let me = order.len();
        order.push(id);
        parents.push(parent);
        for &c in &t.node(id).children {
            walk(t, c, Some(me), order, parents);
        }
    }
    walk(t, t.root(), None, &mut order, &mut parents);
    let n = order.len();
    let mut ancestor = vec![vec![false; n]; n];
    for j in 0..n {
        let mut p = parents[j];
        while let Some(i) = p {
            ancestor[i][j] = true;
            p = parents[i];
        }
    }
    Flat {
        labels: order.iter().map(|&id| t.node(id).tag.clone()).collect(),
        ancestor,
    }
}

/// Minimum unit-cost edit script over all valid mappings: one-to-one,
/// preserving ancestry and pre-order on both sides.
pub fn brute_force_ted(a: &DocTree, b: &DocTree) -> f64 {
    let fa = flatten(a);
    let fb = flatten(b);
    let mut best = (fa.labels.len() + fb.labels.len()) as f64;
    let mut used = vec![false; fb.labels.len()];
    let mut mapping: Vec<(usize, usize)> = Vec::new();
    fn search(i: usize, fa: &Flat, fb: &Flat, used: &mut [bool], mapping: &mut Vec<(usize, usize)>, best: &mut f64) {
        if i == fa.labels.len() {
            let relabels = mapping.iter().filter(|&&(x, y)| fa.labels[x] != fb.labels[y]).count();
            let m = mapping.len();
            let cost = relabels + (fa.labels.len() - m) + (fb.labels.len() - m);
            if (cost as f64) < *best {
                *best = cost as f64;
            }
            return;
        }
        search(i + 1, fa, fb, used, mapping, best);
        for j in 0..fb.labels.len() {
            if used[j] {
                continue;
            }
            let ok = mapping.iter().all(|&(x, y)| {
                // x precedes i in pre-order, so y must precede j
                y < j && fa.ancestor[x][i] == fb.ancestor[y][j]
            });
            if ok {
                used[j] = true;
                mapping.push((i, j));
                search(i + 1, fa, fb, used, mapping, best);
                mapping.pop();
                used[j] = false;
            }
        }
    }
    search(0, &fa, &fb, &mut used, &mut mapping, &mut best);
    best
}

/// Random fragment with `n` elements over a small tag alphabet.
pub fn random_tree_text(rng: &mut ChaCha8Rng, n: usize, alphabet: &[&str]) -> String {
    // parent[i] < i gives every ordered forest shape with positive probability
    let parent: Vec<Option<usize>> = (0..n)
        .map(|i| {
            let p = rng.random_range(0..=i);
            (p < i).then_some(p)
        })
        .collect();
    let tags: Vec<&str> = (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
    fn emit(i: usize, parent: &[Option<usize>], tags: &[&str], out: &mut String) {
        let kids: Vec<usize> = (0..parent.len()).filter(|&c| parent[c] == Some(i)).collect();
        if kids.is_empty() {
            out.push_str(&format!("<{}/>", tags[i]));
        } else {
            out.push_str(&format!("<{}>", tags[i]));
            for k in kids {
                emit(k, parent, tags, out);
            }
            out.push_str(&format!("</{}>", tags[i]));
        }
    }
    let mut out = String::new();
    for i in (0..n).filter(|&i| parent[i].is_none()) {
        emit(i, &parent, &tags, &mut out);
    }
    out
}

// ---------------------------------------------------------------------------
// Assignment by enumerating injections

/// Minimum total cost over all injections from the smaller side into the
/// larger one.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let get = |r: usize, c: usize| if rows <= cols { cost[r][c] } else { cost[c][r] };
    let (small, large) = (rows.min(cols), rows.max(cols));
    fn go(i: usize, small: usize, large: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64, get: &dyn Fn(usize, usize) -> f64) {
        if i == small {
            *best = best.min(acc);
            return;
        }
        for j in 0..large {
            if !used[j] {
                used[j] = true;
                go(i + 1, small, large, used, acc + get(i, j), best, get);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, small, large, &mut vec![false; large], 0.0, &mut best, &get);
    best
}

// ---------------------------------------------------------------------------
// chrF and BLEU by direct counting

fn count_in(gram: &[char], grams: &[Vec<char>]) -> usize {
    grams.iter().filter(|g| g.as_slice() == gram).count()
}

fn char_grams(chars: &[char], n: usize) -> Vec<Vec<char>> {
    if chars.len() < n {
        return Vec::new();
    }
    (0..=chars.len() - n).map(|i| chars[i..i + n].to_vec()).collect()
}

/// Clipped matches: for every distinct n-gram, min of the two counts.
fn clipped<T: PartialEq + Clone>(hyp: &[T], reference: &[T], count: impl Fn(&T, &[T]) -> usize) -> usize {
    let mut distinct: Vec<T> = Vec::new();
    for g in hyp {
        if !distinct.contains(g) {
            distinct.push(g.clone());
        }
    }
    distinct.iter().map(|g| count(g, hyp).min(count(g, reference))).sum()
}

/// Character n-gram F-score, orders 1..=6, beta 2, whitespace removed;
/// precision and recall are averaged over orders both sides have.
pub fn oracle_chrf(hyp: &str, reference: &str) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() && r.is_empty() {
        return 100.0;
    }
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }
    let (mut p_sum, mut r_sum, mut orders) = (0.0, 0.0, 0);
    for n in 1..=6 {
        let hg = char_grams(&h, n);
        let rg = char_grams(&r, n);
        if hg.is_empty() || rg.is_empty() {
            continue;
        }
        let m = clipped(&hg, &rg, |g, all| count_in(g, all)) as f64;
        p_sum += m / hg.len() as f64;
        r_sum += m / rg.len() as f64;
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let p = p_sum / orders as f64;
    let rc = r_sum / orders as f64;
    if p + rc == 0.0 {
        return 0.0;
    }
    100.0 * 5.0 * p * rc / (4.0 * p + rc)
}

fn word_grams(words: &[&str], n: usize) -> Vec<Vec<String>> {
    if words.len() < n {
        return Vec::new();
    }
    (0..=words.len() - n)
        .map(|i| words[i..i + n].iter().map(|w| w.to_string()).collect())
        .collect()
}

/// Corpus BLEU-4 with whitespace tokens, pooled counts, exponential
/// smoothing `1 / (2^k * total)` for the k-th zero precision, and orders the
/// pooled hypothesis has no n-grams for left out.
pub fn oracle_corpus_bleu(pairs: &[(String, String)]) -> f64 {
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut hl, mut rl) = (0usize, 0usize);
    for (h, r) in pairs {
        let hw: Vec<&str> = h.split_whitespace().collect();
        let rw: Vec<&str> = r.split_whitespace().collect();
        hl += hw.len();
        rl += rw.len();
        for n in 1..=4 {
            let hg = word_grams(&hw, n);
            let rg = word_grams(&rw, n);
            totals[n - 1] += hg.len();
            matches[n - 1] += clipped(&hg, &rg, |g, all| all.iter().filter(|x| *x == g).count());
        }
    }
    if hl == 0 || matches[0] == 0 {
        return 0.0;
    }
    let mut logs = Vec::new();
    let mut zeros = 0;
    for n in 0..4 {
        if totals[n] == 0 {
            break;
        }
        let p = if matches[n] > 0 {
            matches[n] as f64 / totals[n] as f64
        } else {
            zeros += 1;
            1.0 / (2f64.powi(zeros) * totals[n] as f64)
        };
        logs.push(p.ln());
    }
    let bp = if hl < rl { (1.0 - rl as f64 / hl as f64).exp() } else { 1.0 };
    100.0 * bp * (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Random text over a tiny alphabet so n-grams collide often.
pub fn random_sentence(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let words = ["a", "b", "ab", "ba", "abc", "c", "ca"];
    let n = rng.random_range(0..=max_words);
    (0..n).map(|_| words[rng.random_range(0..words.len())]).collect::<Vec<_>>().join(" ")
}

//! Character n-gram F-score and corpus BLEU.
//!
//! chrF follows the usual sentence-level definition: whitespace is removed,
//! precision and recall are averaged over the n-gram orders both sides
//! actually have, and the F-beta of those averages is reported on 0..100.
//! BLEU pools clipped n-gram counts over the corpus and supports the
//! mteval-style exponential smoothing of zero-match orders. Orders longer
//! than the pooled hypothesis are dropped from the geometric mean.

use std::collections::HashMap;
use std::hash::Hash;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Longest character n-gram a [`ChrfProfile`] can hold; six 21-bit code
/// points pack into one `u128` key.
pub const MAX_CHRF_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChrfConfig {
    pub max_ngram_order: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            max_ngram_order: 6,
            beta: 2.0,
        }
    }
}

impl ChrfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_ngram_order == 0 || self.max_ngram_order > MAX_CHRF_ORDER {
            return Err(Error::Config(format!(
                "chrF n-gram order must be within 1..={MAX_CHRF_ORDER}"
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("chrF beta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    Exp,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tokenizer {
    /// Split on whitespace.
    #[default]
    Whitespace,
    /// Every non-whitespace character is a token (CJK targets).
    Character,
}

impl FromStr for Tokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" | "ws" => Ok(Tokenizer::Whitespace),
            "character" | "char" => Ok(Tokenizer::Character),
            other => Err(Error::Config(format!(
                "unknown tokenizer {other:?} (expected whitespace or character)"
            ))),
        }
    }
}

impl Tokenizer {
    pub fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().collect(),
            Tokenizer::Character => text
                .char_indices()
                .filter(|(_, c)| !c.is_whitespace())
                .map(|(i, c)| &text[i..i + c.len_utf8()])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuConfig {
    pub max_ngram_order: usize,
    pub smoothing: Smoothing,
    pub tokenizer: Tokenizer,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_ngram_order: 4,
            smoothing: Smoothing::Exp,
            tokenizer: Tokenizer::Whitespace,
        }
    }
}

fn ngram_counts<T: Eq + Hash>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_matches<T: Eq + Hash>(hyp: &HashMap<&[T], usize>, refs: &HashMap<&[T], usize>) -> usize {
    hyp.iter()
        .map(|(g, &c)| refs.get(g).map_or(0, |&r| c.min(r)))
        .sum()
}

/// Character n-gram counts of one string, reusable across many comparisons.
/// Each order holds `(packed n-gram, count)` sorted by key.
#[derive(Debug, Clone)]
pub struct ChrfProfile {
    orders: Vec<(Vec<(u128, u32)>, usize)>,
    empty: bool,
}

impl ChrfProfile {
    /// Panics if `max_ngram_order` exceeds [`MAX_CHRF_ORDER`].
    pub fn new(text: &str, max_ngram_order: usize) -> Self {
        assert!(max_ngram_order <= MAX_CHRF_ORDER, "chrF order {max_ngram_order} is too long");
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let orders = (1..=max_ngram_order)
            .map(|n| {
                let mut keys: Vec<u128> = if chars.len() >= n {
                    chars
                        .windows(n)
                        .map(|w| w.iter().fold(0u128, |k, &c| (k << 21) | c as u128))
                        .collect()
                } else {
                    Vec::new()
                };
                let total = keys.len();
                keys.sort_unstable();
                let mut counts: Vec<(u128, u32)> = Vec::new();
                for k in keys {
                    match counts.last_mut() {
                        Some((last, c)) if *last == k => *c += 1,
                        _ => counts.push((k, 1)),
                    }
                }
                (counts, total)
            })
            .collect();
        ChrfProfile {
            orders,
            empty: chars.is_empty(),
        }
    }
}

fn sorted_matches(small: &[(u128, u32)], large: &[(u128, u32)]) -> usize {
    small
        .iter()
        .map(|&(g, c)| match large.binary_search_by_key(&g, |&(k, _)| k) {
            Ok(i) => c.min(large[i].1) as usize,
            Err(_) => 0,
        })
        .sum()
}

/// chrF from per-order `(matched, hypothesis total, reference total)`.
fn chrf_from_counts(counts: impl Iterator<Item = (usize, usize, usize)>, beta: f64) -> f64 {
    let mut avg_prec = 0.0;
    let mut avg_rec = 0.0;
    let mut effective_order = 0usize;
    for (matched, n_hyp, n_ref) in counts {
        if n_hyp == 0 || n_ref == 0 {
            continue;
        }
        avg_prec += matched as f64 / n_hyp as f64;
        avg_rec += matched as f64 / n_ref as f64;
        effective_order += 1;
    }
    if effective_order == 0 {
        return 0.0;
    }
    avg_prec /= effective_order as f64;
    avg_rec /= effective_order as f64;
    if avg_prec + avg_rec == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    let f = (1.0 + b2) * avg_prec * avg_rec / (b2 * avg_prec + avg_rec);
    (100.0 * f).clamp(0.0, 100.0)
}

/// chrF between two precomputed profiles on a 0..100 scale.
pub fn chrf_profiles(hyp: &ChrfProfile, reference: &ChrfProfile, beta: f64) -> f64 {
    match (hyp.empty, reference.empty) {
        (true, true) => return 100.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let counts = hyp.orders.iter().zip(&reference.orders).map(|((h, n_hyp), (r, n_ref))| {
        let matched = if h.len() <= r.len() {
            sorted_matches(h, r)
        } else {
            sorted_matches(r, h)
        };
        (matched, *n_hyp, *n_ref)
    });
    chrf_from_counts(counts, beta)
}

/// Profiles of many strings over one shared n-gram vocabulary, for all-pairs
/// chrF. Each n-gram gets a dense id per order, so a pair costs one pass over
/// the column profile.
#[derive(Debug, Clone)]
pub struct ChrfBatch {
    /// `profiles[text][order]` is `(id, count)` pairs.
    profiles: Vec<Vec<Vec<(u32, u32)>>>,
    totals: Vec<Vec<usize>>,
    vocab: Vec<usize>,
    beta: f64,
}

impl ChrfBatch {
    pub fn new<S: AsRef<str>>(texts: &[S], config: &ChrfConfig) -> Self {
        let singles: Vec<ChrfProfile> = texts
            .iter()
            .map(|t| ChrfProfile::new(t.as_ref(), config.max_ngram_order))
            .collect();
        let mut ids: Vec<HashMap<u128, u32>> = vec![HashMap::new(); config.max_ngram_order];
        let profiles = singles
            .iter()
            .map(|p| {
                p.orders
                    .iter()
                    .zip(ids.iter_mut())
                    .map(|((counts, _), table)| {
                        counts
                            .iter()
                            .map(|&(g, c)| {
                                let next = table.len() as u32;
                                (*table.entry(g).or_insert(next), c)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ChrfBatch {
            profiles,
            totals: singles.iter().map(|p| p.orders.iter().map(|(_, t)| *t).collect()).collect(),
            vocab: ids.iter().map(HashMap::len).collect(),
            beta: config.beta,
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    fn is_blank(&self, i: usize) -> bool {
        self.totals[i].first().is_none_or(|&t| t == 0)
    }

    /// chrF of every `(row, col)` pair, rows as hypotheses.
    pub fn matrix(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        let mut scratch: Vec<Vec<u32>> = self.vocab.iter().map(|&v| vec![0; v]).collect();
        rows.iter()
            .map(|&i| {
                for (dense, grams) in scratch.iter_mut().zip(&self.profiles[i]) {
                    for &(id, c) in grams {
                        dense[id as usize] = c;
                    }
                }
                let row = cols
                    .iter()
                    .map(|&j| match (self.is_blank(i), self.is_blank(j)) {
                        (true, true) => 100.0,
                        (true, false) | (false, true) => 0.0,
                        _ => {
                            let counts = self.profiles[j].iter().enumerate().map(|(n, grams)| {
                                let matched: usize = grams
                                    .iter()
                                    .map(|&(id, c)| c.min(scratch[n][id as usize]) as usize)
                                    .sum();
                                (matched, self.totals[i][n], self.totals[j][n])
                            });
                            chrf_from_counts(counts, self.beta)
                        }
                    })
                    .collect();
                for (dense, grams) in scratch.iter_mut().zip(&self.profiles[i]) {
                    for &(id, _) in grams {
                        dense[id as usize] = 0;
                    }
                }
                row
            })
            .collect()
    }
}

/// chrF between two strings on a 0..100 scale.
pub fn chrf(hypothesis: &str, reference: &str, config: &ChrfConfig) -> f64 {
    let hyp = ChrfProfile::new(hypothesis, config.max_ngram_order);
    let refs = ChrfProfile::new(reference, config.max_ngram_order);
    chrf_profiles(&hyp, &refs, config.beta)
}

/// Sufficient statistics for corpus BLEU; sums over segments are exact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub hyp_len: u64,
    pub ref_len: u64,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
}

impl BleuStats {
    pub fn new(order: usize) -> Self {
        BleuStats {
            hyp_len: 0,
            ref_len: 0,
            matches: vec![0; order],
            totals: vec![0; order],
        }
    }

    pub fn from_pair(hypothesis: &str, reference: &str, config: &BleuConfig) -> Self {
        let hyp = config.tokenizer.tokenize(hypothesis);
        let refs = config.tokenizer.tokenize(reference);
        let mut stats = BleuStats::new(config.max_ngram_order);
        stats.hyp_len = hyp.len() as u64;
        stats.ref_len = refs.len() as u64;
        for n in 1..=config.max_ngram_order {
            let h = ngram_counts(&hyp, n);
            let r = ngram_counts(&refs, n);
            stats.totals[n - 1] = h.values().sum::<usize>() as u64;
            stats.matches[n - 1] = clipped_matches(&h, &r) as u64;
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        if self.matches.len() < other.matches.len() {
            self.matches.resize(other.matches.len(), 0);
            self.totals.resize(other.totals.len(), 0);
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
    }

    /// BLEU on a 0..100 scale.
    pub fn score(&self, smoothing: Smoothing) -> f64 {
        if self.hyp_len == 0 || self.matches.first().copied().unwrap_or(0) == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut smooth = 1.0;
        let mut effective_order = 0usize;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            // orders the hypothesis is too short to have are left out
            if t == 0 {
                break;
            }
            effective_order += 1;
            let p = if m > 0 {
                m as f64 / t as f64
            } else {
                match smoothing {
                    Smoothing::None => return 0.0,
                    Smoothing::Exp => {
                        smooth *= 2.0;
                        1.0 / (smooth * t as f64)
                    }
                }
            };
            log_sum += p.ln();
        }
        let bp = if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        (100.0 * bp * (log_sum / effective_order as f64).exp()).clamp(0.0, 100.0)
    }
}

/// Corpus BLEU over `(hypothesis, reference)` pairs.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    pairs: &[(H, R)],
    config: &BleuConfig,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if config.max_ngram_order == 0 {
        return Err(Error::Config("BLEU n-gram order must be at least 1".into()));
    }
    let mut total = BleuStats::new(config.max_ngram_order);
    for (h, r) in pairs {
        total.add(&BleuStats::from_pair(h.as_ref(), r.as_ref(), config));
    }
    Ok(total.score(config.smoothing))
}

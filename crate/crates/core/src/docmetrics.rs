//! Document- and corpus-level metrics.
//!
//! Per-document scores are carried on their native scale (0/1 indicators,
//! TreeSim in [-0.1, 1], chrF-based scores on 0..100). Corpus aggregates are
//! all reported on 0..100.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpusio::CorpusRecord;
use crate::error::{Error, Result};
use crate::nodealign::{optimal_alignment, parallel_pairing, OptimalAlignment};
use crate::textmetrics::{chrf, BleuConfig, BleuStats, ChrfConfig};
use crate::treedist::{tree_sim_trees, INVALID_XML_PENALTY};
use crate::xmltree::{is_isomorphic, parse_document, strip_markup, DocTree, NodeId, ParseOutcome};

/// Default StrucAUC tolerance.
pub const DEFAULT_STRUCAUC_K: f64 = 5.0;

/// Spacing of the StrucAUC edit threshold grid.
pub const STRUCAUC_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ContentBleu,
    XmlValidity,
    XmlMatch,
    XmlBleu,
    #[serde(rename = "strucauc")]
    StrucAuc,
    #[serde(rename = "treesim")]
    TreeSim,
    NodeChrf,
    OptimalNodeChrf,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::ContentBleu,
        Metric::XmlValidity,
        Metric::XmlMatch,
        Metric::XmlBleu,
        Metric::StrucAuc,
        Metric::TreeSim,
        Metric::NodeChrf,
        Metric::OptimalNodeChrf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ContentBleu => "content_bleu",
            Metric::XmlValidity => "xml_validity",
            Metric::XmlMatch => "xml_match",
            Metric::XmlBleu => "xml_bleu",
            Metric::StrucAuc => "strucauc",
            Metric::TreeSim => "treesim",
            Metric::NodeChrf => "node_chrf",
            Metric::OptimalNodeChrf => "optimal_node_chrf",
        }
    }

    fn valid_names() -> String {
        Metric::ALL.map(Metric::name).join(", ")
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == key || (key == "tree_sim" && *m == Metric::TreeSim))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown metric {s:?}; valid metrics: {}",
                    Metric::valid_names()
                ))
            })
    }
}

/// Parses a comma-separated metric list; `all` selects every metric.
/// The result is deduplicated and in canonical order.
pub fn parse_metric_list(list: &str) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("all") {
            out.extend(Metric::ALL);
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!(
            "no metrics given; valid metrics: {}",
            Metric::valid_names()
        )));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

enum PairScore {
    Skip,
    Score(f64),
}

fn score_pair(hyp: &DocTree, h: Option<NodeId>, reference: &DocTree, r: Option<NodeId>, cfg: &ChrfConfig) -> PairScore {
    match (h, r) {
        (Some(h), Some(r)) => {
            let (hn, rn) = (hyp.node(h), reference.node(r));
            if hn.tag != rn.tag {
                PairScore::Score(0.0)
            } else if hn.is_text_blank() && rn.is_text_blank() {
                PairScore::Skip
            } else {
                PairScore::Score(chrf(&hn.direct_text, &rn.direct_text, cfg))
            }
        }
        _ => PairScore::Score(0.0),
    }
}

fn mean_or_perfect(scores: impl Iterator<Item = PairScore>) -> f64 {
    let (sum, n) = scores.fold((0.0, 0usize), |(s, n), p| match p {
        PairScore::Skip => (s, n),
        PairScore::Score(v) => (s + v, n + 1),
    });
    if n == 0 {
        100.0
    } else {
        sum / n as f64
    }
}

/// Mean node-text chrF over the positional pairing. Tag mismatches and
/// padding score 0; tag-matched pairs with no text on either side are skipped.
pub fn node_chrf(hyp: &DocTree, reference: &DocTree) -> f64 {
    let cfg = ChrfConfig::default();
    let pairing = parallel_pairing(hyp, reference);
    mean_or_perfect(
        pairing
            .pairs
            .iter()
            .map(|&(h, r)| score_pair(hyp, h, reference, r, &cfg)),
    )
}

/// Node-chrF under an optimal alignment; unmatched nodes score 0.
pub fn optimal_node_chrf(alignment: &OptimalAlignment, hyp: &DocTree, reference: &DocTree) -> f64 {
    let cfg = ChrfConfig::default();
    let matched = alignment
        .matches
        .iter()
        .map(|&(h, r)| score_pair(hyp, Some(h), reference, Some(r), &cfg));
    let unmatched = alignment.unmatched_hyp.len() + alignment.unmatched_ref.len();
    mean_or_perfect(matched.chain((0..unmatched).map(|_| PairScore::Score(0.0))))
}

/// 1 when the hypothesis parsed and has exactly the reference's structure.
pub fn xml_match(hyp: &ParseOutcome, reference: &DocTree, compare_attributes: bool) -> u8 {
    match hyp {
        ParseOutcome::Valid(h) => is_isomorphic(h, reference, compare_attributes) as u8,
        ParseOutcome::Invalid(_) => 0,
    }
}

/// Segment pairs contributed by one document to XML-BLEU.
pub fn xml_bleu_pairs(hyp: &ParseOutcome, reference: &DocTree, compare_attributes: bool) -> Vec<(String, String)> {
    let ref_segments = reference.text_segments();
    match hyp {
        ParseOutcome::Valid(h) if is_isomorphic(h, reference, compare_attributes) => {
            let hyp_segments = h.text_segments();
            let len = hyp_segments.len().max(ref_segments.len());
            (0..len)
                .map(|i| {
                    (
                        hyp_segments.get(i).cloned().unwrap_or_default(),
                        ref_segments.get(i).cloned().unwrap_or_default(),
                    )
                })
                .collect()
        }
        _ => ref_segments.into_iter().map(|r| (String::new(), r)).collect(),
    }
}

fn bleu_stats(pairs: &[(String, String)], config: &BleuConfig) -> BleuStats {
    let mut stats = BleuStats::new(config.max_ngram_order);
    for (h, r) in pairs {
        stats.add(&BleuStats::from_pair(h, r, config));
    }
    stats
}

/// Corpus XML-BLEU. Documents whose reference does not parse are skipped.
pub fn xml_bleu<H: AsRef<str>, R: AsRef<str>>(
    corpus: &[(H, R)],
    config: &BleuConfig,
    compare_attributes: bool,
) -> Result<f64> {
    let mut stats = BleuStats::new(config.max_ngram_order);
    let mut any = false;
    for (h, r) in corpus {
        let Some(reference) = parse_document(r.as_ref()).into_tree() else {
            continue;
        };
        any = true;
        let pairs = xml_bleu_pairs(&parse_document(h.as_ref()), &reference, compare_attributes);
        stats.add(&bleu_stats(&pairs, config));
    }
    if !any {
        return Err(Error::EmptyCorpus);
    }
    Ok(stats.score(config.smoothing))
}

/// Corpus BLEU over documents with all markup removed.
pub fn content_bleu<H: AsRef<str>, R: AsRef<str>>(corpus: &[(H, R)], config: &BleuConfig) -> Result<f64> {
    let pairs: Vec<(String, String)> = corpus
        .iter()
        .filter(|(_, r)| parse_document(r.as_ref()).is_valid())
        .map(|(h, r)| (strip_markup(h.as_ref()), strip_markup(r.as_ref())))
        .collect();
    crate::textmetrics::corpus_bleu(&pairs, config)
}

/// Per-document input to the StrucAUC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AucInput {
    /// Hypothesis failed to parse: contributes 0 at every threshold.
    HypInvalid,
    Scored { unaligned: f64, optimal: f64, edits: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Edit threshold.
    pub k: f64,
    /// Mean document score at this threshold, 0..100.
    pub score: f64,
}

/// Edit thresholds `0, 0.5, 1, ...` up to `k`; `k` itself is appended when
/// it is not on the half-step grid.
pub fn strucauc_thresholds(k: f64) -> Vec<f64> {
    let steps = (k / STRUCAUC_STEP + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=steps).map(|i| i as f64 * STRUCAUC_STEP).collect();
    if (out[steps] - k).abs() > 1e-9 {
        out.push(k);
    }
    out
}

/// StrucAUC@K from per-document inputs. Returns the area (0..100) and the
/// curve.
pub fn strucauc_from_inputs(docs: &[AucInput], k: f64) -> Result<(f64, Vec<CurvePoint>)> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Config(format!("StrucAUC K must be positive, got {k}")));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let thresholds = strucauc_thresholds(k);
    let n = docs.len() as f64;
    let curve: Vec<CurvePoint> = thresholds
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let sum: f64 = docs
                .iter()
                .map(|d| match *d {
                    AucInput::HypInvalid => 0.0,
                    AucInput::Scored { unaligned, .. } if idx == 0 => unaligned,
                    AucInput::Scored { unaligned, optimal, edits } => {
                        if edits <= t {
                            optimal
                        } else {
                            unaligned
                        }
                    }
                })
                .sum();
            CurvePoint { k: t, score: sum / n }
        })
        .collect();
    let area: f64 = curve
        .windows(2)
        .map(|w| {
            let dx = (w[1].k - w[0].k) / k;
            dx * (w[0].score / 100.0 + w[1].score / 100.0) / 2.0
        })
        .sum();
    Ok((area * 100.0, curve))
}

fn auc_input(hyp: &ParseOutcome, reference: &DocTree) -> AucInput {
    match hyp {
        ParseOutcome::Invalid(_) => AucInput::HypInvalid,
        ParseOutcome::Valid(h) => {
            let alignment = optimal_alignment(h, reference);
            AucInput::Scored {
                unaligned: node_chrf(h, reference),
                optimal: optimal_node_chrf(&alignment, h, reference),
                edits: alignment.edit_count,
            }
        }
    }
}

/// StrucAUC@K over raw `(hypothesis, reference)` documents.
pub fn strucauc<H: AsRef<str>, R: AsRef<str>>(corpus: &[(H, R)], k: f64) -> Result<(f64, Vec<CurvePoint>)> {
    let inputs: Vec<AucInput> = corpus
        .iter()
        .filter_map(|(h, r)| {
            let reference = parse_document(r.as_ref()).into_tree()?;
            Some(auc_input(&parse_document(h.as_ref()), &reference))
        })
        .collect();
    strucauc_from_inputs(&inputs, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocStatus {
    Scored,
    RefInvalid,
    HypInvalid,
}

impl DocStatus {
    pub fn name(self) -> &'static str {
        match self {
            DocStatus::Scored => "scored",
            DocStatus::RefInvalid => "ref_invalid",
            DocStatus::HypInvalid => "hyp_invalid",
        }
    }
}

/// Scores for one document; fields not requested (or not defined for the
/// status) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocScores {
    pub status: DocStatus,
    pub xml_validity: Option<u8>,
    pub xml_match: Option<u8>,
    pub tree_sim: Option<f64>,
    pub node_chrf: Option<f64>,
    pub optimal_node_chrf: Option<f64>,
    pub edit_count: Option<f64>,
    /// Parse error for invalid documents.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub strucauc_k: f64,
    pub bleu: BleuConfig,
    /// Whether XML-Match (and so XML-BLEU pairing) compares attributes.
    pub compare_attributes: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            strucauc_k: DEFAULT_STRUCAUC_K,
            bleu: BleuConfig::default(),
            compare_attributes: true,
        }
    }
}

/// Everything needed to aggregate one document into corpus scores.
#[derive(Debug, Clone)]
pub struct DocEvaluation {
    pub scores: DocScores,
    content: Option<BleuStats>,
    xml: Option<BleuStats>,
}

fn wants(metrics: &[Metric], any: &[Metric]) -> bool {
    metrics.iter().any(|m| any.contains(m))
}

/// Scores one document for the requested metrics.
pub fn evaluate_document(hypothesis: &str, reference: &str, metrics: &[Metric], config: &EvalConfig) -> DocEvaluation {
    let reference_tree = match parse_document(reference) {
        ParseOutcome::Valid(t) => t,
        ParseOutcome::Invalid(reason) => {
            return DocEvaluation {
                scores: DocScores {
                    status: DocStatus::RefInvalid,
                    xml_validity: None,
                    xml_match: None,
                    tree_sim: None,
                    node_chrf: None,
                    optimal_node_chrf: None,
                    edit_count: None,
                    reason: Some(reason),
                },
                content: None,
                xml: None,
            }
        }
    };
    let hyp = parse_document(hypothesis);
    let want_match = wants(metrics, &[Metric::XmlMatch, Metric::XmlBleu]);
    let want_node = wants(metrics, &[Metric::NodeChrf, Metric::StrucAuc]);
    let want_optimal = wants(metrics, &[Metric::OptimalNodeChrf, Metric::StrucAuc]);

    let content = metrics.contains(&Metric::ContentBleu).then(|| {
        BleuStats::from_pair(&strip_markup(hypothesis), &strip_markup(reference), &config.bleu)
    });
    let xml = metrics.contains(&Metric::XmlBleu).then(|| {
        bleu_stats(
            &xml_bleu_pairs(&hyp, &reference_tree, config.compare_attributes),
            &config.bleu,
        )
    });

    let scores = match &hyp {
        ParseOutcome::Invalid(reason) => DocScores {
            status: DocStatus::HypInvalid,
            xml_validity: Some(0),
            xml_match: want_match.then_some(0),
            tree_sim: metrics.contains(&Metric::TreeSim).then_some(INVALID_XML_PENALTY),
            node_chrf: want_node.then_some(0.0),
            optimal_node_chrf: want_optimal.then_some(0.0),
            edit_count: None,
            reason: Some(reason.clone()),
        },
        ParseOutcome::Valid(h) => {
            let alignment = want_optimal.then(|| optimal_alignment(h, &reference_tree));
            DocScores {
                status: DocStatus::Scored,
                xml_validity: Some(1),
                xml_match: want_match.then(|| xml_match(&hyp, &reference_tree, config.compare_attributes)),
                tree_sim: metrics
                    .contains(&Metric::TreeSim)
                    .then(|| tree_sim_trees(h, &reference_tree)),
                node_chrf: want_node.then(|| node_chrf(h, &reference_tree)),
                optimal_node_chrf: alignment
                    .as_ref()
                    .map(|a| optimal_node_chrf(a, h, &reference_tree)),
                edit_count: alignment.as_ref().map(|a| a.edit_count),
                reason: None,
            }
        }
    };
    DocEvaluation { scores, content, xml }
}

/// Corpus aggregates in canonical metric order, all on 0..100.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub values: Vec<(Metric, f64)>,
    pub strucauc_curve: Option<Vec<CurvePoint>>,
}

impl Aggregates {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.values.iter().find(|(m, _)| *m == metric).map(|&(_, v)| v)
    }
}

/// Scored corpus that can be re-aggregated over any document multiset
/// (used by bootstrap resampling).
#[derive(Debug, Clone)]
pub struct CorpusEvaluation {
    pub metrics: Vec<Metric>,
    pub config: EvalConfig,
    pub docs: Vec<DocEvaluation>,
}

impl CorpusEvaluation {
    /// Scores every document; scoring runs on the current rayon pool and the
    /// result is ordered by document index.
    pub fn new<H, R>(corpus: &[(H, R)], metrics: &[Metric], config: &EvalConfig) -> Result<Self>
    where
        H: AsRef<str> + Sync,
        R: AsRef<str> + Sync,
    {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if metrics.is_empty() {
            return Err(Error::Config("no metrics requested".into()));
        }
        let mut metrics = metrics.to_vec();
        metrics.sort_unstable();
        metrics.dedup();
        let docs = corpus
            .par_iter()
            .map(|(h, r)| evaluate_document(h.as_ref(), r.as_ref(), &metrics, config))
            .collect();
        Ok(CorpusEvaluation {
            metrics,
            config: *config,
            docs,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Aggregates over `indices` (repeats allowed). RefInvalid documents are
    /// ignored; an index set with no usable document is `EmptyCorpus`.
    pub fn aggregate(&self, indices: &[usize]) -> Result<Aggregates> {
        let usable: Vec<&DocEvaluation> = indices
            .iter()
            .map(|&i| &self.docs[i])
            .filter(|d| d.scores.status != DocStatus::RefInvalid)
            .collect();
        if usable.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n = usable.len() as f64;
        let mean = |f: &dyn Fn(&DocScores) -> Option<f64>| -> f64 {
            usable.iter().filter_map(|d| f(&d.scores)).sum::<f64>() / n
        };
        let pooled = |f: &dyn Fn(&DocEvaluation) -> Option<&BleuStats>| -> f64 {
            let mut stats = BleuStats::new(self.config.bleu.max_ngram_order);
            for d in &usable {
                if let Some(s) = f(d) {
                    stats.add(s);
                }
            }
            stats.score(self.config.bleu.smoothing)
        };

        let mut values = Vec::with_capacity(self.metrics.len());
        let mut curve = None;
        for &m in &self.metrics {
            let v = match m {
                Metric::ContentBleu => pooled(&|d| d.content.as_ref()),
                Metric::XmlBleu => pooled(&|d| d.xml.as_ref()),
                Metric::XmlValidity => 100.0 * mean(&|s| s.xml_validity.map(f64::from)),
                Metric::XmlMatch => 100.0 * mean(&|s| s.xml_match.map(f64::from)),
                Metric::TreeSim => 100.0 * mean(&|s| s.tree_sim),
                Metric::NodeChrf => mean(&|s| s.node_chrf),
                Metric::OptimalNodeChrf => mean(&|s| s.optimal_node_chrf),
                Metric::StrucAuc => {
                    let inputs: Vec<AucInput> = usable
                        .iter()
                        .map(|d| match d.scores.status {
                            DocStatus::Scored => AucInput::Scored {
                                unaligned: d.scores.node_chrf.unwrap_or(0.0),
                                optimal: d.scores.optimal_node_chrf.unwrap_or(0.0),
                                edits: d.scores.edit_count.unwrap_or(f64::INFINITY),
                            },
                            _ => AucInput::HypInvalid,
                        })
                        .collect();
                    let (area, c) = strucauc_from_inputs(&inputs, self.config.strucauc_k)?;
                    curve = Some(c);
                    area
                }
            };
            values.push((m, v));
        }
        Ok(Aggregates {
            values,
            strucauc_curve: curve,
        })
    }
}

/// Full evaluation result for a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub ids: Vec<String>,
    pub per_doc: Vec<DocScores>,
    pub metrics: Vec<Metric>,
    pub aggregates: Aggregates,
    pub strucauc_k: f64,
}

impl CorpusReport {
    pub fn scored_count(&self) -> usize {
        self.per_doc.iter().filter(|d| d.status != DocStatus::RefInvalid).count()
    }
}

/// Evaluates a corpus of records for the requested metrics.
pub fn evaluate_corpus(records: &[CorpusRecord], metrics: &[Metric], config: &EvalConfig) -> Result<CorpusReport> {
    let pairs: Vec<(&str, &str)> = records
        .iter()
        .map(|r| (r.hypothesis.as_str(), r.reference.as_str()))
        .collect();
    let eval = CorpusEvaluation::new(&pairs, metrics, config)?;
    let all: Vec<usize> = (0..eval.len()).collect();
    let aggregates = eval.aggregate(&all)?;
    Ok(CorpusReport {
        ids: records.iter().map(|r| r.id.clone()).collect(),
        per_doc: eval.docs.into_iter().map(|d| d.scores).collect(),
        metrics: eval.metrics,
        aggregates,
        strucauc_k: config.strucauc_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> DocTree {
        parse_document(s).into_tree().unwrap()
    }

    #[test]
    fn node_chrf_examples() {
        let d = t("<a><p>good</p><p>dog</p></a>");
        assert_eq!(node_chrf(&d, &d.clone()), 100.0);
        let r = t("<a><p>good</p><q>dog</q></a>");
        assert!((node_chrf(&d, &r) - 50.0).abs() < 1e-12);
        assert_eq!(node_chrf(&t("<x>a</x><y>b</y>"), &t("<y>a</y><x>b</x>")), 0.0);
        // nothing but empty markup: every pair skipped
        assert_eq!(node_chrf(&t("<a><b/></a>"), &t("<a><b/></a>")), 100.0);
        // mismatched empty tags are scored, not skipped
        assert_eq!(node_chrf(&t("<a/>"), &t("<b/>")), 0.0);
    }

    #[test]
    fn optimal_dominates_on_swap() {
        let h = t("<a><b>first one</b><b>second two</b></a>");
        let r = t("<a><b>second two</b><b>first one</b></a>");
        let al = optimal_alignment(&h, &r);
        let opt = optimal_node_chrf(&al, &h, &r);
        assert_eq!(opt, 100.0);
        assert!(opt > node_chrf(&h, &r));
    }

    #[test]
    fn optimal_with_no_shared_nodes() {
        let h = t("<x>abc</x>");
        let r = t("<y>def</y>");
        let al = optimal_alignment(&h, &r);
        assert_eq!(optimal_node_chrf(&al, &h, &r), 0.0);
    }

    #[test]
    fn strucauc_hand_example() {
        let docs = [AucInput::Scored {
            unaligned: 40.0,
            optimal: 80.0,
            edits: 2.0,
        }];
        let (area, curve) = strucauc_from_inputs(&docs, 5.0).unwrap();
        assert_eq!(curve.len(), 11);
        for p in &curve {
            let want = if p.k < 2.0 { 40.0 } else { 80.0 };
            assert_eq!(p.score, want, "k = {}", p.k);
        }
        // 0.1 * (4*40 + 7*80 - (40 + 80)/2)
        assert!((area - 66.0).abs() < 1e-9, "{area}");
    }

    #[test]
    fn strucauc_extremes() {
        let same = [("<a>x</a>", "<a>x</a>"), ("<b>y</b><c>z</c>", "<b>y</b><c>z</c>")];
        assert!((strucauc(&same, 5.0).unwrap().0 - 100.0).abs() < 1e-9);
        let broken = [("<a>x", "<a>x</a>"), ("</b>", "<b>y</b>")];
        assert_eq!(strucauc(&broken, 5.0).unwrap().0, 0.0);
        assert!(matches!(strucauc(&[("<a/>", "<a>")], 5.0), Err(Error::EmptyCorpus)));
        assert!(strucauc(&same, 0.0).is_err());
    }

    #[test]
    fn thresholds_grid() {
        assert_eq!(strucauc_thresholds(1.0), vec![0.0, 0.5, 1.0]);
        assert_eq!(strucauc_thresholds(1.2), vec![0.0, 0.5, 1.0, 1.2]);
        assert_eq!(strucauc_thresholds(5.0).len(), 11);
    }

    #[test]
    fn xml_match_cases() {
        let r = t("<a x='1'><b>text</b></a>");
        assert_eq!(xml_match(&parse_document("<a x='1'><b>other</b></a>"), &r, true), 1);
        assert_eq!(xml_match(&parse_document("<a x='1'></a>"), &r, true), 0);
        assert_eq!(xml_match(&parse_document("<a x='1'><b>"), &r, true), 0);
        assert_eq!(xml_match(&parse_document("<a><b/></a>"), &r, true), 0);
        assert_eq!(xml_match(&parse_document("<a><b/></a>"), &r, false), 1);
    }

    #[test]
    fn xml_bleu_extremes() {
        let c = BleuConfig::default();
        let same = [("<p>one two three four</p>", "<p>one two three four</p>")];
        assert_eq!(xml_bleu(&same, &c, true).unwrap(), 100.0);
        let wrong = [("<q>one two three four</q>", "<p>one two three four</p>")];
        assert_eq!(xml_bleu(&wrong, &c, true).unwrap(), 0.0);
    }

    #[test]
    fn metric_names() {
        assert_eq!("strucauc".parse::<Metric>().unwrap(), Metric::StrucAuc);
        assert_eq!("tree_sim".parse::<Metric>().unwrap(), Metric::TreeSim);
        let err = "comet".parse::<Metric>().unwrap_err().to_string();
        assert!(err.contains("xml_bleu"), "{err}");
        assert_eq!(parse_metric_list("all").unwrap().len(), 8);
        assert_eq!(
            parse_metric_list("xml_match, content_bleu,xml_match").unwrap(),
            vec![Metric::ContentBleu, Metric::XmlMatch]
        );
    }

    #[test]
    fn corpus_with_invalid_reference() {
        let records = vec![
            CorpusRecord::new("1", "<p>a b c d</p>", "<p>a b c d</p>"),
            CorpusRecord::new("2", "<p>x</p>", "<p>broken"),
        ];
        let report = evaluate_corpus(&records, &Metric::ALL, &EvalConfig::default()).unwrap();
        assert_eq!(report.per_doc[1].status, DocStatus::RefInvalid);
        assert_eq!(report.scored_count(), 1);
        for (_, v) in &report.aggregates.values {
            assert!((v - 100.0).abs() < 1e-9);
        }
    }
}

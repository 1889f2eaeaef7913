//! Reward scaling and combination, and group-relative advantages.

use std::str::FromStr;

use serde::Serialize;

use crate::docmetrics::{node_chrf, optimal_node_chrf, xml_bleu_pairs, xml_match, Metric};
use crate::error::{Error, Result};
use crate::nodealign::optimal_alignment;
use crate::textmetrics::{BleuConfig, BleuStats};
use crate::treedist::{tree_sim_trees, INVALID_XML_PENALTY};
use crate::xmltree::{parse_document, strip_markup, ParseOutcome};

/// Standard deviation below which a group is treated as having equal rewards.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// Which metrics make up a reward; their scaled values are summed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardSpec {
    components: Vec<Metric>,
}

impl RewardSpec {
    pub fn new(components: Vec<Metric>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("reward needs at least one component".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if *c == Metric::StrucAuc {
                return Err(Error::Config("strucauc is corpus-level and cannot be a reward".into()));
            }
            if components[..i].contains(c) {
                return Err(Error::Config(format!("reward component {c} listed twice")));
            }
        }
        Ok(RewardSpec { components })
    }

    pub fn components(&self) -> &[Metric] {
        &self.components
    }
}

impl FromStr for RewardSpec {
    type Err = Error;

    /// Accepts `treesim`, `treesim+node_chrf` or `treesim,node_chrf`.
    fn from_str(s: &str) -> Result<Self> {
        let components = s
            .split(['+', ','])
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Metric>>>()?;
        RewardSpec::new(components)
    }
}

/// Multiplier that maps a component's native value onto |r| <= 10.
pub fn reward_scale(metric: Metric) -> f64 {
    match metric {
        Metric::TreeSim | Metric::XmlValidity | Metric::XmlMatch => 10.0,
        Metric::NodeChrf | Metric::OptimalNodeChrf | Metric::ContentBleu | Metric::XmlBleu => 0.1,
        Metric::StrucAuc => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardScore {
    /// `(component, native value)` in spec order.
    pub components: Vec<(Metric, f64)>,
    /// Sum of scaled components.
    pub total: f64,
}

/// Document-level BLEU; two documents without any text count as a match.
fn document_bleu(pairs: &[(String, String)], config: &BleuConfig) -> f64 {
    let mut stats = BleuStats::new(config.max_ngram_order);
    for (h, r) in pairs {
        stats.add(&BleuStats::from_pair(h, r, config));
    }
    if stats.hyp_len == 0 && stats.ref_len == 0 {
        return 100.0;
    }
    stats.score(config.smoothing)
}

fn native_value(metric: Metric, hyp_text: &str, hyp: &ParseOutcome, ref_text: &str, reference: &crate::xmltree::DocTree) -> f64 {
    let bleu = BleuConfig::default();
    match (metric, hyp) {
        (Metric::ContentBleu, _) => document_bleu(&[(strip_markup(hyp_text), strip_markup(ref_text))], &bleu),
        (Metric::XmlBleu, _) => document_bleu(&xml_bleu_pairs(hyp, reference, true), &bleu),
        (Metric::XmlMatch, _) => f64::from(xml_match(hyp, reference, true)),
        (Metric::XmlValidity, h) => f64::from(u8::from(h.is_valid())),
        (Metric::TreeSim, ParseOutcome::Invalid(_)) => INVALID_XML_PENALTY,
        (Metric::TreeSim, ParseOutcome::Valid(h)) => tree_sim_trees(h, reference),
        (Metric::NodeChrf, ParseOutcome::Valid(h)) => node_chrf(h, reference),
        (Metric::OptimalNodeChrf, ParseOutcome::Valid(h)) => {
            optimal_node_chrf(&optimal_alignment(h, reference), h, reference)
        }
        (Metric::NodeChrf | Metric::OptimalNodeChrf, ParseOutcome::Invalid(_)) => 0.0,
        (Metric::StrucAuc, _) => unreachable!("rejected by RewardSpec"),
    }
}

/// Scores one hypothesis against its reference.
pub fn score_reward(hyp_text: &str, ref_text: &str, spec: &RewardSpec) -> Result<RewardScore> {
    let reference = match parse_document(ref_text) {
        ParseOutcome::Valid(t) => t,
        ParseOutcome::Invalid(reason) => return Err(Error::InvalidReference(reason)),
    };
    let hyp = parse_document(hyp_text);
    let components: Vec<(Metric, f64)> = spec
        .components
        .iter()
        .map(|&m| (m, native_value(m, hyp_text, &hyp, ref_text, &reference)))
        .collect();
    let total = components.iter().map(|&(m, v)| v * reward_scale(m)).sum();
    Ok(RewardScore { components, total })
}

/// `(r_i - mean) / sigma` with the population standard deviation. A group
/// with (numerically) equal rewards gets all-zero advantages.
pub fn group_advantages(raw_rewards: &[f64]) -> Result<Vec<f64>> {
    if raw_rewards.len() < 2 {
        return Err(Error::GroupTooSmall(raw_rewards.len()));
    }
    let k = raw_rewards.len() as f64;
    let mean = raw_rewards.iter().sum::<f64>() / k;
    let var = raw_rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / k;
    let sigma = var.sqrt();
    if sigma < DEGENERATE_SIGMA {
        return Ok(vec![0.0; raw_rewards.len()]);
    }
    Ok(raw_rewards.iter().map(|r| (r - mean) / sigma).collect())
}

/// K scored candidates for one source document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateGroup {
    pub source_id: String,
    /// Unscaled sum of native component values.
    pub raw_rewards: Vec<f64>,
    pub scaled_rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl CandidateGroup {
    pub fn score<S: AsRef<str>>(source_id: impl Into<String>, candidates: &[S], reference: &str, spec: &RewardSpec) -> Result<Self> {
        if candidates.len() < 2 {
            return Err(Error::GroupTooSmall(candidates.len()));
        }
        let mut raw_rewards = Vec::with_capacity(candidates.len());
        let mut scaled_rewards = Vec::with_capacity(candidates.len());
        for c in candidates {
            let s = score_reward(c.as_ref(), reference, spec)?;
            raw_rewards.push(s.components.iter().map(|&(_, v)| v).sum());
            scaled_rewards.push(s.total);
        }
        let advantages = group_advantages(&scaled_rewards)?;
        Ok(CandidateGroup {
            source_id: source_id.into(),
            raw_rewards,
            scaled_rewards,
            advantages,
        })
    }
}

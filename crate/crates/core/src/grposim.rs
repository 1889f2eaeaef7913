//! GRPO on a categorical policy over a fixed pool of candidate documents.
//!
//! The policy picks one of N precomputed candidates. Each step samples K
//! candidates, normalizes their rewards within the group, and takes one plain
//! gradient-ascent step on
//!
//! ```text
//! J(z) = (1/K) sum_i A_i log pi(s_i)  -  beta * KL(pi || pi_ref)
//! ```
//!
//! using the exact gradient with respect to the logits `z`. The reference
//! policy is frozen at construction.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rewards::{group_advantages, score_reward, RewardSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub source_id: String,
    pub candidates: Vec<String>,
    pub reference: String,
    /// Scaled reward of each candidate.
    pub rewards: Vec<f64>,
}

impl CandidatePool {
    /// Scores every candidate against the reference with `spec`.
    pub fn from_documents(source_id: impl Into<String>, candidates: Vec<String>, reference: String, spec: &RewardSpec) -> Result<Self> {
        let rewards = candidates
            .iter()
            .map(|c| score_reward(c, &reference, spec).map(|s| s.total))
            .collect::<Result<Vec<_>>>()?;
        CandidatePool::new(source_id, candidates, reference, rewards)
    }

    pub fn new(source_id: impl Into<String>, candidates: Vec<String>, reference: String, rewards: Vec<f64>) -> Result<Self> {
        if candidates.len() != rewards.len() {
            return Err(Error::LengthMismatch(candidates.len(), rewards.len()));
        }
        if rewards.len() < 2 {
            return Err(Error::GroupTooSmall(rewards.len()));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("pool rewards must be finite".into()));
        }
        Ok(CandidatePool {
            source_id: source_id.into(),
            candidates,
            reference,
            rewards,
        })
    }

    /// A pool described by rewards alone (candidates are placeholders).
    pub fn from_rewards(rewards: Vec<f64>) -> Result<Self> {
        let candidates = (0..rewards.len()).map(|i| format!("candidate-{i}")).collect();
        CandidatePool::new("pool", candidates, String::new(), rewards)
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `KL(softmax(logits) || softmax(reference_logits))`.
pub fn categorical_kl(logits: &[f64], reference_logits: &[f64]) -> f64 {
    let lp = log_softmax(logits);
    let lq = log_softmax(reference_logits);
    lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalPolicy {
    logits: Vec<f64>,
    reference_logits: Vec<f64>,
}

impl CategoricalPolicy {
    /// Starts at the reference policy.
    pub fn new(reference_logits: Vec<f64>) -> Self {
        CategoricalPolicy {
            logits: reference_logits.clone(),
            reference_logits,
        }
    }

    pub fn uniform(n: usize) -> Self {
        CategoricalPolicy::new(vec![0.0; n])
    }

    /// A policy already moved away from its reference.
    pub fn with_logits(logits: Vec<f64>, reference_logits: Vec<f64>) -> Result<Self> {
        if logits.len() != reference_logits.len() {
            return Err(Error::LengthMismatch(logits.len(), reference_logits.len()));
        }
        Ok(CategoricalPolicy {
            logits,
            reference_logits,
        })
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn reference_logits(&self) -> &[f64] {
        &self.reference_logits
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    pub fn kl(&self) -> f64 {
        categorical_kl(&self.logits, &self.reference_logits)
    }

    pub fn entropy(&self) -> f64 {
        log_softmax(&self.logits).iter().map(|l| -l.exp() * l).sum()
    }

    pub fn expected_reward(&self, rewards: &[f64]) -> f64 {
        self.probabilities().iter().zip(rewards).map(|(p, r)| p * r).sum()
    }
}

/// The GRPO objective for fixed samples and advantages.
pub fn objective(logits: &[f64], reference_logits: &[f64], samples: &[usize], advantages: &[f64], beta: f64) -> f64 {
    let lp = log_softmax(logits);
    let k = samples.len() as f64;
    let pg: f64 = samples.iter().zip(advantages).map(|(&s, a)| a * lp[s]).sum::<f64>() / k;
    pg - beta * categorical_kl(logits, reference_logits)
}

/// Exact gradient of [`objective`] with respect to the logits.
pub fn objective_gradient(logits: &[f64], reference_logits: &[f64], samples: &[usize], advantages: &[f64], beta: f64) -> Vec<f64> {
    let lp = log_softmax(logits);
    let lq = log_softmax(reference_logits);
    let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let kl: f64 = p.iter().zip(lp.iter().zip(&lq)).map(|(pj, (a, b))| pj * (a - b)).sum();
    let k = samples.len() as f64;
    let adv_sum: f64 = advantages.iter().sum();

    // d log pi(s) / dz_j = [s == j] - p_j
    let mut grad: Vec<f64> = p.iter().map(|pj| -adv_sum * pj / k).collect();
    for (&s, a) in samples.iter().zip(advantages) {
        grad[s] += a / k;
    }
    // d KL / dz_j = p_j (log p_j - log q_j - KL)
    for j in 0..grad.len() {
        grad[j] -= beta * p[j] * (lp[j] - lq[j] - kl);
    }
    grad
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Candidates sampled per step.
    pub samples_per_step: usize,
    pub learning_rate: f64,
    /// KL coefficient.
    pub beta: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            samples_per_step: 8,
            learning_rate: 0.1,
            beta: 0.01,
            steps: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_step < 2 {
            return Err(Error::Config("need at least 2 samples per step".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config("beta must be non-negative".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One line of a training trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub step: usize,
    /// Mean reward of the sampled group.
    pub mean_reward: f64,
    /// KL to the reference policy after the update.
    pub kl: f64,
    /// Policy entropy after the update.
    pub entropy: f64,
}

/// Samples a group, computes advantages and applies one ascent step.
pub fn grpo_step(policy: &CategoricalPolicy, pool: &CandidatePool, config: &TrainConfig, rng: &mut ChaCha8Rng) -> (CategoricalPolicy, StepStats) {
    let probs = policy.probabilities();
    let dist = WeightedIndex::new(&probs).expect("softmax weights are positive and finite");
    let samples: Vec<usize> = (0..config.samples_per_step).map(|_| dist.sample(rng)).collect();
    let rewards: Vec<f64> = samples.iter().map(|&s| pool.rewards[s]).collect();
    let advantages = group_advantages(&rewards).expect("samples_per_step >= 2");
    let grad = objective_gradient(&policy.logits, &policy.reference_logits, &samples, &advantages, config.beta);
    let logits = policy
        .logits
        .iter()
        .zip(&grad)
        .map(|(z, g)| z + config.learning_rate * g)
        .collect();
    let next = CategoricalPolicy {
        logits,
        reference_logits: policy.reference_logits.clone(),
    };
    let stats = StepStats {
        step: 0,
        mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
        kl: next.kl(),
        entropy: next.entropy(),
    };
    (next, stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub steps: Vec<StepStats>,
    pub final_policy: CategoricalPolicy,
}

/// Runs `config.steps` GRPO steps from the uniform policy.
pub fn run_training(pool: &CandidatePool, config: &TrainConfig) -> Result<TrainingTrace> {
    run_training_from(CategoricalPolicy::uniform(pool.len()), pool, config)
}

/// Runs `config.steps` GRPO steps from `policy`. Same seed, same trace.
pub fn run_training_from(mut policy: CategoricalPolicy, pool: &CandidatePool, config: &TrainConfig) -> Result<TrainingTrace> {
    config.validate()?;
    if policy.logits.len() != pool.len() {
        return Err(Error::LengthMismatch(policy.logits.len(), pool.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut steps = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        let (next, mut stats) = grpo_step(&policy, pool, config, &mut rng);
        stats.step = step;
        steps.push(stats);
        policy = next;
    }
    Ok(TrainingTrace {
        steps,
        final_policy: policy,
    })
}

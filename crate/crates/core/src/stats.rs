//! Paired bootstrap resampling for comparing two systems on one test set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            trials: 1000,
            seed: 12345,
        }
    }
}

/// Document indices drawn with replacement for one trial. Each trial has its
/// own stream, so results do not depend on scheduling.
pub fn resample_indices(n: usize, seed: u64, trial: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// One-sided p-value that the system is not better than the baseline:
/// `(#{trials with baseline >= system} + 1) / (trials + 1)`.
///
/// `baseline` and `system` recompute a corpus score from a multiset of
/// document indices, so pooled metrics (BLEU, StrucAUC) are resampled
/// correctly. Trials resample positions; list documents in a canonical order
/// when the result must not depend on input order.
pub fn paired_bootstrap<B, S>(n_docs: usize, baseline: B, system: S, config: &BootstrapConfig) -> Result<f64>
where
    B: Fn(&[usize]) -> f64 + Sync,
    S: Fn(&[usize]) -> f64 + Sync,
{
    if n_docs < 2 {
        return Err(Error::Config(format!("bootstrap needs at least 2 documents, got {n_docs}")));
    }
    if config.trials == 0 {
        return Err(Error::Config("bootstrap needs at least one trial".into()));
    }
    let not_better = (0..config.trials)
        .into_par_iter()
        .filter(|&trial| {
            let idx = resample_indices(n_docs, config.seed, trial);
            baseline(&idx) >= system(&idx)
        })
        .count();
    Ok((not_better + 1) as f64 / (config.trials + 1) as f64)
}

/// [`paired_bootstrap`] for metrics that are plain per-document means.
///
/// Pairs are put in a canonical order first, so the p-value does not depend
/// on how the documents were listed. The order keys on the unordered pair,
/// so swapping the two systems resamples the same documents in every trial.
pub fn paired_bootstrap_means(per_doc_baseline: &[f64], per_doc_system: &[f64], config: &BootstrapConfig) -> Result<f64> {
    if per_doc_baseline.len() != per_doc_system.len() {
        return Err(Error::LengthMismatch(per_doc_baseline.len(), per_doc_system.len()));
    }
    let mut pairs: Vec<(f64, f64)> = per_doc_baseline.iter().copied().zip(per_doc_system.iter().copied()).collect();
    let key = |p: &(f64, f64)| (p.0.min(p.1), p.0.max(p.1));
    pairs.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.0.total_cmp(&b.0))
    });
    let mean = |idx: &[usize], pick: fn(&(f64, f64)) -> f64| idx.iter().map(|&i| pick(&pairs[i])).sum::<f64>() / idx.len() as f64;
    paired_bootstrap(pairs.len(), |idx| mean(idx, |p| p.0), |idx| mean(idx, |p| p.1), config)
}

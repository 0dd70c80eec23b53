//! Training-pair construction from the two separate object sets. Per user,
//! items are split into a positive list (top N_p under the frozen measure)
//! and a ranked negative list; pairs are drawn by one of the sampling
//! options (uniform, uniform-negative, rank-inverse-negative, plus a
//! score-proportional alternative).

use rand::Rng;

use crate::error::{FloraError, Result};
use crate::measures::{BatchScorer, MeasureSpec};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingVariant {
    /// Option 1: uniform over all items.
    Rand,
    /// Option 2: positives with prob p, else uniform negatives.
    RandNeg,
    /// Option 3: positives with prob p, else rank-inverse negatives.
    RankNeg,
    /// Alternative reading of Option 3: negatives proportional to score.
    ScoreNeg,
}

impl SamplingVariant {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "rand" => SamplingVariant::Rand,
            "rand_neg" => SamplingVariant::RandNeg,
            "rank_neg" => SamplingVariant::RankNeg,
            "score_neg" => SamplingVariant::ScoreNeg,
            _ => return Err(FloraError::InvalidInput(format!("unknown sampling variant '{s}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SamplingVariant::Rand => "rand",
            SamplingVariant::RandNeg => "rand_neg",
            SamplingVariant::RankNeg => "rank_neg",
            SamplingVariant::ScoreNeg => "score_neg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingStrategy {
    pub variant: SamplingVariant,
    /// Positive-branch probability.
    pub p: f64,
    pub n_p: usize,
}

impl SamplingStrategy {
    pub fn new(variant: SamplingVariant, p: f64, n_p: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(FloraError::InvalidInput(format!("p must be in [0,1], got {p}")));
        }
        if n_p == 0 {
            return Err(FloraError::InvalidInput("N_p must be at least 1".into()));
        }
        Ok(SamplingStrategy { variant, p, n_p })
    }
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        SamplingStrategy {
            variant: SamplingVariant::RankNeg,
            p: 0.5,
            n_p: 10,
        }
    }
}

/// Per-user full ranking of items by the frozen measure, split into the
/// positive prefix (length N_p) and the ranked negative remainder.
/// Immutable after build; scores are cached so sampling never re-invokes f.
pub struct PositiveCache {
    n_items: usize,
    n_p: usize,
    /// Per user: all item ids sorted by score desc, ties by ascending id.
    ranked_ids: Vec<Vec<u32>>,
    ranked_scores: Vec<Vec<f64>>,
    /// Cumulative 1/rank weights over the negative list (shared by all
    /// users: every negative list has the same length).
    neg_rank_cdf: Vec<f64>,
    /// Per-user cumulative score weights over negatives (score_neg only).
    neg_score_cdf: Option<Vec<Vec<f64>>>,
}

/// Normalized rank-inverse weights: w_r = (1/r)/H_n for r = 1..n.
pub fn rank_inverse_weights(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    let h_n: f64 = (1..=n).map(|r| 1.0 / r as f64).sum();
    (1..=n).map(|r| 1.0 / (r as f64 * h_n)).collect()
}

fn cdf_from_weights(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf = Vec::with_capacity(weights.len());
    for &w in weights {
        acc += w;
        cdf.push(acc);
    }
    cdf
}

/// Draw an index from a cumulative weight vector (last entry is the total).
fn sample_cdf<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().unwrap();
    let u = rng.random_range(0.0..total);
    match cdf.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
        Ok(i) => (i + 1).min(cdf.len() - 1),
        Err(i) => i,
    }
}

impl PositiveCache {
    /// Score every user against every item and build the per-user ranking.
    pub fn build(users: &Matrix, items: &Matrix, f: &MeasureSpec, n_p: usize) -> Result<Self> {
        if items.rows() == 0 {
            return Err(FloraError::InvalidInput("empty item set".into()));
        }
        if n_p >= items.rows() {
            return Err(FloraError::InvalidInput(format!(
                "N_p ({n_p}) must be smaller than the item count ({})",
                items.rows()
            )));
        }
        let scorer = BatchScorer::new(f, items)?;
        let n_items = items.rows();
        let mut ranked_ids = Vec::with_capacity(users.rows());
        let mut ranked_scores = Vec::with_capacity(users.rows());
        for u in 0..users.rows() {
            let scores = scorer.score_user(users.row(u))?;
            let mut order: Vec<u32> = (0..n_items as u32).collect();
            order.sort_by(|&a, &b| {
                scores[b as usize]
                    .partial_cmp(&scores[a as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let sorted_scores: Vec<f64> = order.iter().map(|&i| scores[i as usize]).collect();
            ranked_ids.push(order);
            ranked_scores.push(sorted_scores);
        }
        let neg_rank_cdf = cdf_from_weights(&rank_inverse_weights(n_items - n_p));
        Ok(PositiveCache {
            n_items,
            n_p,
            ranked_ids,
            ranked_scores,
            neg_rank_cdf,
            neg_score_cdf: None,
        })
    }

    /// Precompute per-user score-proportional negative CDFs; required
    /// before sampling with the score_neg variant.
    pub fn prepare_score_sampling(&mut self) {
        if self.neg_score_cdf.is_some() {
            return;
        }
        let cdfs = self
            .ranked_scores
            .iter()
            .map(|scores| cdf_from_weights(&scores[self.n_p..]))
            .collect();
        self.neg_score_cdf = Some(cdfs);
    }

    pub fn n_users(&self) -> usize {
        self.ranked_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    /// Positive item ids of one user (the top-N_p prefix).
    pub fn positives(&self, user: usize) -> &[u32] {
        &self.ranked_ids[user][..self.n_p]
    }

    /// Negative item ids of one user, best-scored first.
    pub fn negatives(&self, user: usize) -> &[u32] {
        &self.ranked_ids[user][self.n_p..]
    }

    /// Ground-truth top-k prefix of the cached ranking.
    pub fn top_k(&self, user: usize, k: usize) -> &[u32] {
        &self.ranked_ids[user][..k.min(self.n_items)]
    }

    pub fn score_at_rank(&self, user: usize, rank: usize) -> f64 {
        self.ranked_scores[user][rank]
    }

    /// Dump one user's positives and leading negatives, for debugging.
    pub fn dump_user(&self, user: usize, top_negs: usize) -> String {
        let pos: Vec<String> = self.positives(user).iter().map(|i| i.to_string()).collect();
        let neg: Vec<String> = self.negatives(user)[..top_negs.min(self.n_items - self.n_p)]
            .iter()
            .map(|i| i.to_string())
            .collect();
        format!("user {user} positives [{}] top_negatives [{}]", pos.join(","), neg.join(","))
    }
}

/// Draw one (user id, item id, target score) triple. Users come uniformly
/// from `user_pool`.
pub fn sample_pair<R: Rng>(
    strategy: &SamplingStrategy,
    cache: &PositiveCache,
    user_pool: &[u32],
    rng: &mut R,
) -> Result<(u32, u32, f64)> {
    if user_pool.is_empty() {
        return Err(FloraError::Config("empty user pool".into()));
    }
    if strategy.n_p != cache.n_p() {
        return Err(FloraError::Config(format!(
            "strategy N_p ({}) does not match cache N_p ({})",
            strategy.n_p,
            cache.n_p()
        )));
    }
    let user = user_pool[rng.random_range(0..user_pool.len())] as usize;
    let rank = match strategy.variant {
        SamplingVariant::Rand => rng.random_range(0..cache.n_items()),
        _ => {
            if rng.random_range(0.0..1.0) < strategy.p {
                rng.random_range(0..strategy.n_p)
            } else {
                let neg_rank = match strategy.variant {
                    SamplingVariant::RandNeg => rng.random_range(0..cache.n_items() - strategy.n_p),
                    SamplingVariant::RankNeg => sample_cdf(&cache.neg_rank_cdf, rng),
                    SamplingVariant::ScoreNeg => {
                        let cdfs = cache.neg_score_cdf.as_ref().ok_or_else(|| {
                            FloraError::Config(
                                "score_neg sampling requires prepare_score_sampling".into(),
                            )
                        })?;
                        sample_cdf(&cdfs[user], rng)
                    }
                    SamplingVariant::Rand => unreachable!(),
                };
                strategy.n_p + neg_rank
            }
        }
    };
    let item = cache.ranked_ids[user][rank];
    let target = cache.score_at_rank(user, rank);
    Ok((user as u32, item, target))
}

/// Batch of i.i.d. `sample_pair` draws.
pub fn sample_minibatch<R: Rng>(
    strategy: &SamplingStrategy,
    cache: &PositiveCache,
    user_pool: &[u32],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<(u32, u32, f64)>> {
    if batch_size == 0 {
        return Err(FloraError::InvalidInput("batch_size must be at least 1".into()));
    }
    (0..batch_size)
        .map(|_| sample_pair(strategy, cache, user_pool, rng))
        .collect()
}

//! Ground-truth generation via the frozen measure and recall/FPR metrics.

use std::collections::HashSet;

use crate::error::{FloraError, Result};
use crate::measures::{BatchScorer, MeasureSpec};
use crate::nn::Matrix;

/// Per test user: the top-K item ids under f, descending score, ties by
/// ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub k: usize,
    pub per_user: Vec<Vec<u32>>,
}

/// Exact brute-force top-K scan of f over all items, per user.
pub fn ground_truth(users: &Matrix, items: &Matrix, f: &MeasureSpec, k: usize) -> Result<GroundTruth> {
    if k > items.rows() {
        return Err(FloraError::InvalidInput(format!(
            "K ({k}) exceeds item count ({})",
            items.rows()
        )));
    }
    let scorer = BatchScorer::new(f, items)?;
    let mut per_user = Vec::with_capacity(users.rows());
    for u in 0..users.rows() {
        let scores = scorer.score_user(users.row(u))?;
        let mut order: Vec<u32> = (0..items.rows() as u32).collect();
        order.sort_by(|&a, &b| {
            scores[b as usize]
                .partial_cmp(&scores[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        order.truncate(k);
        per_user.push(order);
    }
    Ok(GroundTruth { k, per_user })
}

/// |top-t(ranking) ∩ gt| / K.
pub fn recall_at(ranking: &[u32], gt: &[u32], t: usize) -> f64 {
    assert!(t >= 1);
    let gt_set: HashSet<u32> = gt.iter().copied().collect();
    let hits = ranking.iter().take(t).filter(|i| gt_set.contains(i)).count();
    hits as f64 / gt.len() as f64
}

/// Mean recall over users at each threshold t = 1..T.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCurve {
    pub k: usize,
    pub values: Vec<f64>,
    /// Some rankings were shorter than T and were treated as exhausted.
    pub padded: bool,
}

impl RecallCurve {
    pub fn t_max(&self) -> usize {
        self.values.len()
    }

    /// Recall at threshold t (1-based).
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,recall\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, v));
        }
        out
    }
}

pub fn recall_curve(rankings: &[Vec<u32>], gt: &GroundTruth, t_max: usize) -> Result<RecallCurve> {
    if rankings.len() != gt.per_user.len() {
        return Err(FloraError::dim(gt.per_user.len(), rankings.len(), "rankings vs users"));
    }
    if rankings.is_empty() {
        return Err(FloraError::InvalidInput("no users to evaluate".into()));
    }
    let padded = rankings.iter().any(|r| r.len() < t_max);
    let mut values = vec![0.0; t_max];
    for (ranking, truth) in rankings.iter().zip(&gt.per_user) {
        let gt_set: HashSet<u32> = truth.iter().copied().collect();
        let mut hits = 0usize;
        for t in 1..=t_max {
            if t <= ranking.len() && gt_set.contains(&ranking[t - 1]) {
                hits += 1;
            }
            values[t - 1] += hits as f64 / gt.k as f64;
        }
    }
    let n = rankings.len() as f64;
    for v in &mut values {
        *v /= n;
    }
    Ok(RecallCurve {
        k: gt.k,
        values,
        padded,
    })
}

/// False positive rate of a radius-0 candidate set:
/// |candidates \ gt| / (n_items − |gt|).
pub fn fpr_radius0<I>(candidates: I, gt: &[u32], n_items: usize) -> f64
where
    I: IntoIterator<Item = u32>,
{
    let gt_set: HashSet<u32> = gt.iter().copied().collect();
    let false_pos = candidates.into_iter().filter(|i| !gt_set.contains(i)).count();
    let true_neg = n_items - gt_set.len();
    if true_neg == 0 {
        0.0
    } else {
        false_pos as f64 / true_neg as f64
    }
}

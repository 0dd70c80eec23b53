//! Minibatch training of the hash model against a frozen measure, with
//! validation-checkpoint model selection and a λ grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FloraError, Result};
use crate::hash_model::{binarize, loss_total, Domain, FloraModel, HashConfig};
use crate::index::{pack_codes, rank_full_scan};
use crate::measures::MeasureSpec;
use crate::nn::{Matrix, OptimizerState};
use crate::sampler::{sample_minibatch, PositiveCache, SamplingStrategy, SamplingVariant};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub strategy: SamplingStrategy,
    pub hash: HashConfig,
    /// Validation checkpoint cadence, in iterations.
    pub eval_every: usize,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 20_000,
            batch_size: 256,
            seed: 0,
            learning_rate: 1e-3,
            strategy: SamplingStrategy::default(),
            hash: HashConfig::default(),
            eval_every: 2_000,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(FloraError::Config("iterations must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(FloraError::Config("batch_size must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(FloraError::Config("validation_fraction must be in (0,1)".into()));
        }
        if self.eval_every == 0 {
            return Err(FloraError::Config("eval_every must be positive".into()));
        }
        self.hash.validate()
    }
}

/// One logged checkpoint: `iter,loss_total,loss_c,loss_u,loss_i,val_recall`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRow {
    pub iter: usize,
    pub loss_total: f64,
    pub loss_c: f64,
    pub loss_u: f64,
    pub loss_i: f64,
    pub val_recall: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The model at the best validation checkpoint (not necessarily the last).
    pub model: FloraModel,
    pub log: Vec<TrainLogRow>,
    pub best_iter: usize,
    pub best_recall: f64,
}

pub fn log_to_csv(log: &[TrainLogRow]) -> String {
    let mut out = String::from("iter,loss_total,loss_c,loss_u,loss_i,val_recall\n");
    for row in log {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.iter, row.loss_total, row.loss_c, row.loss_u, row.loss_i, row.val_recall
        ));
    }
    out
}

/// Validation metric: mean Top-10 recall@100 over the given users, using
/// the binarized codes and a Hamming full scan.
pub fn hamming_recall(
    model: &FloraModel,
    users: &Matrix,
    user_ids: &[u32],
    items: &Matrix,
    cache: &PositiveCache,
    k: usize,
    t: usize,
) -> Result<f64> {
    let h_items = model.encode_continuous(Domain::Item, items)?;
    let item_codes = pack_codes(&binarize(&h_items))?;
    let rows: Vec<usize> = user_ids.iter().map(|&u| u as usize).collect();
    let user_batch = users.gather_rows(&rows);
    let h_users = model.encode_continuous(Domain::User, &user_batch)?;
    let user_codes = pack_codes(&binarize(&h_users))?;
    let mut total = 0.0;
    for (i, &uid) in user_ids.iter().enumerate() {
        let ranked = rank_full_scan(user_codes.row(i), &item_codes, t)?;
        let gt = cache.top_k(uid as usize, k);
        let hits = ranked.ids.iter().filter(|id| gt.contains(id)).count();
        total += hits as f64 / k as f64;
    }
    Ok(total / user_ids.len() as f64)
}

/// Train against a prebuilt cache (the cache depends only on the measure
/// and the data, so callers running many configurations reuse it).
pub fn train_with_cache(
    config: &TrainConfig,
    users: &Matrix,
    items: &Matrix,
    cache: &PositiveCache,
) -> Result<TrainOutcome> {
    config.validate()?;
    if cache.n_users() != users.rows() || cache.n_items() != items.rows() {
        return Err(FloraError::Config("cache does not match the given sets".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // validation split: shuffled user ids, first fraction held out
    let mut ids: Vec<u32> = (0..users.rows() as u32).collect();
    ids.shuffle(&mut rng);
    let n_val = ((users.rows() as f64 * config.validation_fraction).ceil() as usize)
        .clamp(1, users.rows() - 1);
    let (val_ids, fit_ids) = ids.split_at(n_val);

    let mut model = FloraModel::init(users.cols(), items.cols(), &config.hash, &mut rng)?;
    let mut opt = OptimizerState::new(model.param_count(), config.learning_rate);

    let mut best_model = model.clone();
    let mut best_recall = f64::NEG_INFINITY;
    let mut best_iter = 0;
    let mut log = Vec::new();

    for iter in 1..=config.iterations {
        let batch = sample_minibatch(&config.strategy, cache, fit_ids, config.batch_size, &mut rng)?;
        let u_rows: Vec<usize> = batch.iter().map(|(u, _, _)| *u as usize).collect();
        let v_rows: Vec<usize> = batch.iter().map(|(_, v, _)| *v as usize).collect();
        let targets: Vec<f64> = batch.iter().map(|(_, _, t)| *t).collect();
        let u_batch = users.gather_rows(&u_rows);
        let v_batch = items.gather_rows(&v_rows);

        let (losses, grads) = loss_total(
            &model,
            &u_batch,
            &v_batch,
            &targets,
            config.hash.lambda_u,
            config.hash.lambda_i,
        )?;
        if !losses.total.is_finite() {
            return Err(FloraError::NonFinite {
                what: "training loss".into(),
                step: iter as u64,
            });
        }
        let mut flat = model.to_flat();
        opt.step(&mut flat, &grads.to_flat()).map_err(|e| match e {
            FloraError::NonFinite { what, .. } => FloraError::NonFinite {
                what: format!("{what} at iteration {iter}"),
                step: iter as u64,
            },
            other => other,
        })?;
        model.copy_from_flat(&flat)?;

        if iter % config.eval_every == 0 || iter == config.iterations {
            let recall = hamming_recall(&model, users, val_ids, items, cache, 10, 100)?;
            log.push(TrainLogRow {
                iter,
                loss_total: losses.total,
                loss_c: losses.consistency,
                loss_u: losses.balance,
                loss_i: losses.independence,
                val_recall: recall,
            });
            if recall > best_recall {
                best_recall = recall;
                best_model = model.clone();
                best_iter = iter;
            }
            if iter == config.iterations {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        log,
        best_iter,
        best_recall,
    })
}

/// Build the sampling cache from the measure and train.
pub fn train(
    config: &TrainConfig,
    users: &Matrix,
    items: &Matrix,
    f: &MeasureSpec,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut cache = PositiveCache::build(users, items, f, config.strategy.n_p)?;
    if config.strategy.variant == SamplingVariant::ScoreNeg {
        cache.prepare_score_sampling();
    }
    train_with_cache(config, users, items, &cache)
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_lambda_u: f64,
    pub best_lambda_i: f64,
    pub best_recall: f64,
    /// (λu, λi, best validation recall) per grid cell.
    pub cells: Vec<(f64, f64, f64)>,
}

/// Train one model per (λu, λi) cell and pick the cell with the highest
/// validation recall; ties go to the smaller λu, then the smaller λi.
pub fn grid_search_lambdas(
    config: &TrainConfig,
    users: &Matrix,
    items: &Matrix,
    f: &MeasureSpec,
    grid_u: &[f64],
    grid_i: &[f64],
) -> Result<GridSearchResult> {
    if grid_u.is_empty() || grid_i.is_empty() {
        return Err(FloraError::Config("empty lambda grid".into()));
    }
    let mut cache = PositiveCache::build(users, items, f, config.strategy.n_p)?;
    if config.strategy.variant == SamplingVariant::ScoreNeg {
        cache.prepare_score_sampling();
    }
    let mut sorted_u = grid_u.to_vec();
    sorted_u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sorted_i = grid_i.to_vec();
    sorted_i.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut cells = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for &lu in &sorted_u {
        for &li in &sorted_i {
            let mut cell_cfg = config.clone();
            cell_cfg.hash.lambda_u = lu;
            cell_cfg.hash.lambda_i = li;
            let outcome = train_with_cache(&cell_cfg, users, items, &cache)?;
            cells.push((lu, li, outcome.best_recall));
            // strict > keeps the first (smallest-λ) argmax on ties
            if best.is_none_or(|(_, _, r)| outcome.best_recall > r) {
                best = Some((lu, li, outcome.best_recall));
            }
        }
    }
    let (best_lambda_u, best_lambda_i, best_recall) = best.unwrap();
    Ok(GridSearchResult {
        best_lambda_u,
        best_lambda_i,
        best_recall,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_measure, MeasureKind};
    use crate::synth::{gen_synth, SynthDistribution};

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            iterations: 30,
            batch_size: 8,
            seed: 1,
            eval_every: 10,
            hash: HashConfig {
                m: 8,
                tower_sizes: vec![8],
                shared_sizes: vec![8],
                ..HashConfig::default()
            },
            strategy: SamplingStrategy {
                n_p: 3,
                ..SamplingStrategy::default()
            },
            ..TrainConfig::default()
        }
    }

    fn tiny_data() -> (Matrix, Matrix, MeasureSpec) {
        let (users, items) = gen_synth(30, 60, 4, 5, SynthDistribution::Gaussian).unwrap();
        let f = make_measure(MeasureKind::MlpEmSum, 4, 4, 5).unwrap();
        (users.vectors, items.vectors, f)
    }

    #[test]
    fn single_iteration_executes_and_logs() {
        let (users, items, f) = tiny_data();
        let cfg = TrainConfig {
            iterations: 1,
            eval_every: 1,
            ..tiny_config()
        };
        let out = train(&cfg, &users, &items, &f).unwrap();
        assert_eq!(out.log.len(), 1);
        assert_eq!(out.log[0].iter, 1);
    }

    #[test]
    fn fixed_seed_bit_identical_model() {
        let (users, items, f) = tiny_data();
        let cfg = tiny_config();
        let a = train(&cfg, &users, &items, &f).unwrap();
        let b = train(&cfg, &users, &items, &f).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn final_checkpoint_always_logged() {
        let (users, items, f) = tiny_data();
        let cfg = TrainConfig {
            iterations: 25, // not a multiple of eval_every
            eval_every: 10,
            ..tiny_config()
        };
        let out = train(&cfg, &users, &items, &f).unwrap();
        assert_eq!(out.log.last().unwrap().iter, 25);
    }

    #[test]
    fn grid_single_cell_returns_it() {
        let (users, items, f) = tiny_data();
        let cfg = TrainConfig {
            iterations: 10,
            eval_every: 10,
            ..tiny_config()
        };
        let res = grid_search_lambdas(&cfg, &users, &items, &f, &[0.5], &[2.0]).unwrap();
        assert_eq!(res.best_lambda_u, 0.5);
        assert_eq!(res.best_lambda_i, 2.0);
        assert_eq!(res.cells.len(), 1);
    }

    #[test]
    fn grid_full_evaluates_all_cells_and_argmax_holds() {
        let (users, items, f) = tiny_data();
        let cfg = TrainConfig {
            iterations: 10,
            eval_every: 10,
            ..tiny_config()
        };
        let grid = [0.1, 1.0, 10.0];
        let res = grid_search_lambdas(&cfg, &users, &items, &f, &grid, &grid).unwrap();
        assert_eq!(res.cells.len(), 9);
        for &(_, _, r) in &res.cells {
            assert!(res.best_recall >= r);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let (users, items, f) = tiny_data();
        let cfg = TrainConfig {
            iterations: 0,
            ..tiny_config()
        };
        assert!(train(&cfg, &users, &items, &f).is_err());
    }

    #[test]
    fn log_csv_header() {
        let csv = log_to_csv(&[TrainLogRow {
            iter: 1,
            loss_total: 0.5,
            loss_c: 0.4,
            loss_u: 0.05,
            loss_i: 0.05,
            val_recall: 0.1,
        }]);
        assert!(csv.starts_with("iter,loss_total,loss_c,loss_u,loss_i,val_recall\n"));
        assert!(csv.lines().count() == 2);
    }
}

//! The asymmetric hashing network: two domain towers feeding a shared
//! head whose final tanh layer produces m-dimensional relaxed codes, and
//! the three-part training objective (consistency, balance, independence).

use rand::Rng;

use crate::error::{FloraError, Result};
use crate::nn::{Activation, Matrix, MlpGrads, MlpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    User,
    Item,
}

/// Loss weights and layer widths for the hash network.
#[derive(Debug, Clone, PartialEq)]
pub struct HashConfig {
    pub m: usize,
    pub lambda_u: f64,
    pub lambda_i: f64,
    pub tower_sizes: Vec<usize>,
    pub shared_sizes: Vec<usize>,
}

impl Default for HashConfig {
    fn default() -> Self {
        HashConfig {
            m: 128,
            // with batch-mean-normalized losses, weights much above this
            // let the balance subgradient overwhelm the consistency term
            // and drive every code coordinate to the origin
            lambda_u: 1e-4,
            lambda_i: 1e-4,
            tower_sizes: vec![256, 256],
            shared_sizes: vec![128],
        }
    }
}

impl HashConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > 4096 {
            return Err(FloraError::InvalidInput(format!("m must be in 1..=4096, got {}", self.m)));
        }
        if self.lambda_u < 0.0 || self.lambda_i < 0.0 {
            return Err(FloraError::InvalidInput("loss weights must be nonnegative".into()));
        }
        if self.tower_sizes.is_empty() {
            return Err(FloraError::InvalidInput("tower_sizes must be nonempty".into()));
        }
        Ok(())
    }
}

/// Parameters of the two towers and the shared head. The head is stored
/// once; both domains route through the same `g0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloraModel {
    pub g1: MlpParams,
    pub g2: MlpParams,
    pub g0: MlpParams,
    pub m: usize,
}

impl FloraModel {
    pub fn init<R: Rng>(user_dim: usize, item_dim: usize, cfg: &HashConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut tower_u = vec![user_dim];
        tower_u.extend_from_slice(&cfg.tower_sizes);
        let mut tower_v = vec![item_dim];
        tower_v.extend_from_slice(&cfg.tower_sizes);
        let tower_acts = vec![Activation::Relu; cfg.tower_sizes.len()];
        let g1 = MlpParams::init(&tower_u, &tower_acts, rng)?;
        let g2 = MlpParams::init(&tower_v, &tower_acts, rng)?;

        let mut shared = vec![*cfg.tower_sizes.last().unwrap()];
        shared.extend_from_slice(&cfg.shared_sizes);
        shared.push(cfg.m);
        let mut shared_acts = vec![Activation::Relu; cfg.shared_sizes.len()];
        shared_acts.push(Activation::Tanh);
        let g0 = MlpParams::init(&shared, &shared_acts, rng)?;

        Ok(FloraModel {
            g1,
            g2,
            g0,
            m: cfg.m,
        })
    }

    pub fn user_dim(&self) -> usize {
        self.g1.in_dim()
    }

    pub fn item_dim(&self) -> usize {
        self.g2.in_dim()
    }

    /// Relaxed codes in [-1,1]: the domain tower followed by the shared head.
    pub fn encode_continuous(&self, domain: Domain, x: &Matrix) -> Result<Matrix> {
        let tower = match domain {
            Domain::User => &self.g1,
            Domain::Item => &self.g2,
        };
        let feats = tower.forward_only(x)?;
        self.g0.forward_only(&feats)
    }

    pub fn param_count(&self) -> usize {
        self.g1.param_count() + self.g2.param_count() + self.g0.param_count()
    }

    /// Flat layout: g1, then g2, then g0.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.g1.to_flat();
        out.extend(self.g2.to_flat());
        out.extend(self.g0.to_flat());
        out
    }

    pub fn copy_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(FloraError::dim(self.param_count(), flat.len(), "flat model params"));
        }
        let n1 = self.g1.param_count();
        let n2 = self.g2.param_count();
        self.g1.copy_from_flat(&flat[..n1])?;
        self.g2.copy_from_flat(&flat[n1..n1 + n2])?;
        self.g0.copy_from_flat(&flat[n1 + n2..])?;
        Ok(())
    }
}

/// Gradients with the layout of `FloraModel::to_flat`.
#[derive(Debug, Clone)]
pub struct FloraGrads {
    pub g1: MlpGrads,
    pub g2: MlpGrads,
    pub g0: MlpGrads,
}

impl FloraGrads {
    pub fn zeros_like(model: &FloraModel) -> Self {
        FloraGrads {
            g1: MlpGrads::zeros_like(&model.g1),
            g2: MlpGrads::zeros_like(&model.g2),
            g0: MlpGrads::zeros_like(&model.g0),
        }
    }

    pub fn accumulate(&mut self, other: &FloraGrads, scale: f64) {
        self.g1.accumulate(&other.g1, scale);
        self.g2.accumulate(&other.g2, scale);
        self.g0.accumulate(&other.g0, scale);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.g1.to_flat();
        out.extend(self.g2.to_flat());
        out.extend(self.g0.to_flat());
        out
    }
}

/// Sign binarization with the tie rule sign(0) = +1.
pub fn binarize(h: &Matrix) -> Matrix {
    let data = h.data().iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
    Matrix::from_vec_unchecked(h.rows(), h.cols(), data)
}

/// Scalar loss values of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub consistency: f64,
    pub balance: f64,
    pub independence: f64,
}

struct EncodedBatch {
    h_users: Matrix,
    h_items: Matrix,
    cache_tower_u: crate::nn::ForwardCache,
    cache_tower_v: crate::nn::ForwardCache,
    cache_head_u: crate::nn::ForwardCache,
    cache_head_v: crate::nn::ForwardCache,
}

fn encode_batch(model: &FloraModel, users: &Matrix, items: &Matrix) -> Result<EncodedBatch> {
    let (feat_u, cache_tower_u) = model.g1.forward(users)?;
    let (feat_v, cache_tower_v) = model.g2.forward(items)?;
    let (h_users, cache_head_u) = model.g0.forward(&feat_u)?;
    let (h_items, cache_head_v) = model.g0.forward(&feat_v)?;
    Ok(EncodedBatch {
        h_users,
        h_items,
        cache_tower_u,
        cache_tower_v,
        cache_head_u,
        cache_head_v,
    })
}

/// Backprop upstream code gradients through the shared head and towers.
fn backprop_codes(
    model: &FloraModel,
    enc: &EncodedBatch,
    up_users: &Matrix,
    up_items: &Matrix,
) -> Result<FloraGrads> {
    let head_u = model.g0.backward(&enc.cache_head_u, up_users)?;
    let head_v = model.g0.backward(&enc.cache_head_v, up_items)?;
    let tower_u = model.g1.backward(&enc.cache_tower_u, &head_u.d_input)?;
    let tower_v = model.g2.backward(&enc.cache_tower_v, &head_v.d_input)?;
    let mut g0 = head_u;
    g0.accumulate(&head_v, 1.0);
    Ok(FloraGrads {
        g1: tower_u,
        g2: tower_v,
        g0,
    })
}

/// Per-pair residual: target − (h1·h2/(2m) + 0.5). Loss is the batch mean
/// of squared residuals.
fn consistency_parts(
    enc: &EncodedBatch,
    m: usize,
    targets: &[f64],
) -> Result<(f64, Matrix, Matrix)> {
    let b = targets.len();
    if enc.h_users.rows() != b || enc.h_items.rows() != b {
        return Err(FloraError::dim(b, enc.h_users.rows(), "batch size vs targets"));
    }
    if !targets.iter().all(|t| t.is_finite()) {
        return Err(FloraError::InvalidInput("non-finite consistency target".into()));
    }
    let mcols = enc.h_users.cols();
    let mut loss = 0.0;
    let mut du = Matrix::zeros(b, mcols);
    let mut dv = Matrix::zeros(b, mcols);
    let inv_2m = 1.0 / (2.0 * m as f64);
    for i in 0..b {
        let hu = enc.h_users.row(i);
        let hv = enc.h_items.row(i);
        let dot: f64 = hu.iter().zip(hv).map(|(a, c)| a * c).sum();
        let pred = dot * inv_2m + 0.5;
        let r = targets[i] - pred;
        loss += r * r;
        // d(r²)/dhu = −2r · hv/(2m); mean over batch
        let coef = -2.0 * r * inv_2m / b as f64;
        for k in 0..mcols {
            du.set(i, k, coef * hv[k]);
            dv.set(i, k, coef * hu[k]);
        }
    }
    Ok((loss / b as f64, du, dv))
}

/// Σ_k |mean_i h1k| + |mean_j h2k|, with subgradient 0 at the kink.
fn balance_parts(enc: &EncodedBatch) -> (f64, Matrix, Matrix) {
    let grad_for = |h: &Matrix| -> (f64, Matrix) {
        let b = h.rows();
        let mcols = h.cols();
        let mut loss = 0.0;
        let mut grad = Matrix::zeros(b, mcols);
        for k in 0..mcols {
            let mean: f64 = (0..b).map(|i| h.get(i, k)).sum::<f64>() / b as f64;
            loss += mean.abs();
            let s = if mean > 0.0 {
                1.0
            } else if mean < 0.0 {
                -1.0
            } else {
                0.0
            };
            let g = s / b as f64;
            for i in 0..b {
                grad.set(i, k, g);
            }
        }
        (loss, grad)
    };
    let (lu, du) = grad_for(&enc.h_users);
    let (lv, dv) = grad_for(&enc.h_items);
    (lu + lv, du, dv)
}

/// 2·‖WᵀW − I‖²_F on the shared final layer, gradient 8·W(WᵀW − I).
/// The factor 2 keeps the two weight-shared terms of the objective.
fn independence_parts(model: &FloraModel) -> Result<(f64, Matrix)> {
    let w = &model.g0.layers.last().unwrap().weights; // d x m
    let mut gram = w.t_matmul(w)?; // m x m
    for k in 0..gram.rows() {
        let v = gram.get(k, k) - 1.0;
        gram.set(k, k, v);
    }
    let fro2: f64 = gram.data().iter().map(|v| v * v).sum();
    let mut grad = w.matmul(&gram)?; // d x m
    grad.scale(8.0);
    Ok((2.0 * fro2, grad))
}

/// Consistency loss alone, with exact gradients.
pub fn loss_consistency(
    model: &FloraModel,
    users: &Matrix,
    items: &Matrix,
    targets: &[f64],
) -> Result<(f64, FloraGrads)> {
    let enc = encode_batch(model, users, items)?;
    let (loss, du, dv) = consistency_parts(&enc, model.m, targets)?;
    let grads = backprop_codes(model, &enc, &du, &dv)?;
    Ok((loss, grads))
}

/// Balance loss alone, with exact (sub)gradients.
pub fn loss_balance(model: &FloraModel, users: &Matrix, items: &Matrix) -> Result<(f64, FloraGrads)> {
    if users.rows() == 0 || items.rows() == 0 {
        return Err(FloraError::InvalidInput("balance loss needs a nonempty batch".into()));
    }
    let enc = encode_batch(model, users, items)?;
    let (loss, du, dv) = balance_parts(&enc);
    let grads = backprop_codes(model, &enc, &du, &dv)?;
    Ok((loss, grads))
}

/// Independence loss alone; the gradient touches only the shared final layer.
pub fn loss_independence(model: &FloraModel) -> Result<(f64, FloraGrads)> {
    let (loss, d_w) = independence_parts(model)?;
    let mut grads = FloraGrads::zeros_like(model);
    let last = grads.g0.d_weights.len() - 1;
    grads.g0.d_weights[last] = d_w;
    Ok((loss, grads))
}

/// Total objective L_c + λu·L_u + λi·L_i with combined gradients, using a
/// single forward/backward pass.
pub fn loss_total(
    model: &FloraModel,
    users: &Matrix,
    items: &Matrix,
    targets: &[f64],
    lambda_u: f64,
    lambda_i: f64,
) -> Result<(LossBreakdown, FloraGrads)> {
    let enc = encode_batch(model, users, items)?;
    let (lc, mut du, mut dv) = consistency_parts(&enc, model.m, targets)?;
    let (lu, bu, bv) = balance_parts(&enc);
    for (a, b) in du.data_mut().iter_mut().zip(bu.data()) {
        *a += lambda_u * b;
    }
    for (a, b) in dv.data_mut().iter_mut().zip(bv.data()) {
        *a += lambda_u * b;
    }
    let mut grads = backprop_codes(model, &enc, &du, &dv)?;
    let (li, d_w) = independence_parts(model)?;
    let last = grads.g0.d_weights.len() - 1;
    for (a, b) in grads.g0.d_weights[last].data_mut().iter_mut().zip(d_w.data()) {
        *a += lambda_i * b;
    }
    let breakdown = LossBreakdown {
        total: lc + lambda_u * lu + lambda_i * li,
        consistency: lc,
        balance: lu,
        independence: li,
    };
    Ok((breakdown, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_difference_grad, max_grad_error, DenseLayer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(m: usize) -> HashConfig {
        HashConfig {
            m,
            lambda_u: 0.1,
            lambda_i: 0.1,
            tower_sizes: vec![6, 6],
            shared_sizes: vec![5],
        }
    }

    fn random_batch(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Matrix {
        let data = (0..rows * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec_unchecked(rows, dim, data)
    }

    // With zero-initialized biases a fully dead relu layer puts the next
    // layer's pre-activations exactly on the relu kink, where finite
    // differences and the subgradient legitimately disagree. Jitter all
    // parameters so the check runs at a differentiable point.
    fn jitter(model: &mut FloraModel, rng: &mut ChaCha8Rng) {
        let mut flat = model.to_flat();
        for v in &mut flat {
            *v += rng.random_range(-0.05..0.05);
        }
        model.copy_from_flat(&flat).unwrap();
    }

    #[test]
    fn binarize_rules() {
        let h = Matrix::from_vec(1, 3, vec![0.3, -0.7, 0.0]).unwrap();
        let b = binarize(&h);
        assert_eq!(b.data(), &[1.0, -1.0, 1.0]);
        // idempotent on sign matrices
        assert_eq!(binarize(&b).data(), b.data());
    }

    #[test]
    fn encode_bounds_and_asymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = FloraModel::init(4, 4, &small_config(8), &mut rng).unwrap();
        let x = random_batch(&mut rng, 6, 4);
        let hu = model.encode_continuous(Domain::User, &x).unwrap();
        let hv = model.encode_continuous(Domain::Item, &x).unwrap();
        assert!(hu.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(hv.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        // same input, different towers: outputs generally differ
        assert_ne!(hu.data(), hv.data());
    }

    #[test]
    fn zero_weight_model_encodes_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        let zeros = vec![0.0; model.param_count()];
        model.copy_from_flat(&zeros).unwrap();
        let x = random_batch(&mut rng, 2, 3);
        let h = model.encode_continuous(Domain::User, &x).unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn consistency_zero_residual_cases() {
        // One identity-ish model is overkill; check the residual formula
        // directly on hand-built codes via a model whose head we bypass:
        // matching ±1 codes with target 1 → predicted 1; opposite codes
        // with target 0 → predicted 0.
        let m = 4;
        let hu = vec![1.0, -1.0, 1.0, 1.0];
        let pred_same: f64 = hu.iter().map(|v| v * v).sum::<f64>() / (2.0 * m as f64) + 0.5;
        assert_eq!(pred_same, 1.0);
        let pred_opp: f64 = hu.iter().map(|v| -v * v).sum::<f64>() / (2.0 * m as f64) + 0.5;
        assert_eq!(pred_opp, 0.0);
    }

    #[test]
    fn consistency_rejects_non_finite_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        let u = random_batch(&mut rng, 2, 3);
        let v = random_batch(&mut rng, 2, 3);
        assert!(loss_consistency(&model, &u, &v, &[0.5, f64::NAN]).is_err());
    }

    #[test]
    fn balance_hand_cases() {
        // all-(+1) outputs on every bit would give user term m and item
        // term m; verify through a head clamped to produce constant +1 is
        // awkward, so check the formula on the gradient-free path instead:
        // two users with bit outputs {0.5, -0.5} → per-bit mean 0 → term 0.
        let vals = [0.5, -0.5];
        let mean: f64 = vals.iter().sum::<f64>() / 2.0;
        assert_eq!(mean.abs(), 0.0);
    }

    #[test]
    fn independence_orthonormal_is_zero_and_scaled_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = FloraModel::init(3, 3, &small_config(2), &mut rng).unwrap();
        // shared head final layer: 5x2; set orthonormal columns
        let last = model.g0.layers.last_mut().unwrap();
        let mut w = Matrix::zeros(5, 2);
        w.set(0, 0, 1.0);
        w.set(1, 1, 1.0);
        last.weights = w;
        let (loss, _) = loss_independence(&model).unwrap();
        assert_eq!(loss, 0.0);

        // W = 2·(orthonormal column), single column: WᵀW = 4, loss = 2·(4−1)² = 18
        let cfg = HashConfig {
            m: 1,
            ..small_config(1)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = FloraModel::init(3, 3, &cfg, &mut rng).unwrap();
        let last = model.g0.layers.last_mut().unwrap();
        let mut w = Matrix::zeros(5, 1);
        w.set(2, 0, 2.0);
        last.weights = w;
        let (loss, _) = loss_independence(&model).unwrap();
        assert_eq!(loss, 18.0);
    }

    fn fd_check<F>(model: &FloraModel, analytic: &[f64], loss_of: F, tol: f64)
    where
        F: Fn(&FloraModel) -> f64,
    {
        let mut flat = model.to_flat();
        let template = model.clone();
        let numeric = finite_difference_grad(
            |p| {
                let mut m = template.clone();
                m.copy_from_flat(p).unwrap();
                loss_of(&m)
            },
            &mut flat,
            1e-5,
        );
        let err = max_grad_error(analytic, &numeric);
        assert!(err <= tol, "max grad error {err}");
    }

    #[test]
    fn consistency_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut model = FloraModel::init(3, 4, &small_config(4), &mut rng).unwrap();
        jitter(&mut model, &mut rng);
        let users = random_batch(&mut rng, 5, 3);
        let items = random_batch(&mut rng, 5, 4);
        let targets: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
        let (_, grads) = loss_consistency(&model, &users, &items, &targets).unwrap();
        fd_check(
            &model,
            &grads.to_flat(),
            |m| loss_consistency(m, &users, &items, &targets).unwrap().0,
            1e-4,
        );
    }

    #[test]
    fn balance_gradient_matches_finite_differences_away_from_kink() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        let users = random_batch(&mut rng, 4, 3);
        let items = random_batch(&mut rng, 4, 3);
        // only valid where every per-bit batch mean is clear of the kink
        let hu = model.encode_continuous(Domain::User, &users).unwrap();
        let hv = model.encode_continuous(Domain::Item, &items).unwrap();
        for h in [&hu, &hv] {
            for k in 0..h.cols() {
                let mean: f64 = (0..h.rows()).map(|i| h.get(i, k)).sum::<f64>() / h.rows() as f64;
                assert!(mean.abs() > 1e-3, "test point too close to the kink");
            }
        }
        let (_, grads) = loss_balance(&model, &users, &items).unwrap();
        fd_check(
            &model,
            &grads.to_flat(),
            |m| loss_balance(m, &users, &items).unwrap().0,
            1e-4,
        );
    }

    #[test]
    fn independence_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        let (_, grads) = loss_independence(&model).unwrap();
        fd_check(
            &model,
            &grads.to_flat(),
            |m| loss_independence(m).unwrap().0,
            1e-4,
        );
    }

    #[test]
    fn total_loss_reduces_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        let users = random_batch(&mut rng, 4, 3);
        let items = random_batch(&mut rng, 4, 3);
        let targets: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();

        let (bd0, g0) = loss_total(&model, &users, &items, &targets, 0.0, 0.0).unwrap();
        let (lc, gc) = loss_consistency(&model, &users, &items, &targets).unwrap();
        assert_eq!(bd0.total, lc);
        assert_eq!(g0.to_flat(), gc.to_flat());

        let (bd1, _) = loss_total(&model, &users, &items, &targets, 1.0, 0.5).unwrap();
        let (bd2, _) = loss_total(&model, &users, &items, &targets, 2.0, 0.5).unwrap();
        let contrib1 = bd1.total - bd1.consistency - 0.5 * bd1.independence;
        let contrib2 = bd2.total - bd2.consistency - 0.5 * bd2.independence;
        assert!((contrib2 - 2.0 * contrib1).abs() < 1e-12);
    }

    #[test]
    fn total_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        jitter(&mut model, &mut rng);
        let users = random_batch(&mut rng, 4, 3);
        let items = random_batch(&mut rng, 4, 3);
        let targets: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let (_, grads) = loss_total(&model, &users, &items, &targets, 0.7, 0.3).unwrap();
        fd_check(
            &model,
            &grads.to_flat(),
            |m| loss_total(m, &users, &items, &targets, 0.7, 0.3).unwrap().0.total,
            1e-4,
        );
    }

    #[test]
    fn shared_head_is_single_storage() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let mut model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        let x = random_batch(&mut rng, 2, 3);
        let before = model.encode_continuous(Domain::Item, &x).unwrap();
        // mutate g0 (as the user path would during training)
        for l in &mut model.g0.layers {
            for v in l.weights.data_mut() {
                *v += 0.1;
            }
        }
        let after = model.encode_continuous(Domain::Item, &x).unwrap();
        assert_ne!(before.data(), after.data());
    }

    #[test]
    fn head_final_activation_is_tanh() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let model = FloraModel::init(3, 3, &small_config(4), &mut rng).unwrap();
        assert_eq!(model.g0.layers.last().unwrap().activation, Activation::Tanh);
        let _ = DenseLayer::init(2, 2, Activation::Tanh, &mut rng);
    }
}

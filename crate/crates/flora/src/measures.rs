//! Frozen similarity measures `f(item, user) -> [0,1]`, treated as
//! black-box oracles. Instantiated with random frozen weights from a seed;
//! never mutated after construction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FloraError, Result};
use crate::nn::{Activation, Matrix, MlpParams};

pub const MEASURE_HIDDEN: usize = 64;
pub const EMBED_DIM: usize = 64;
pub const FM_FACTORS: usize = 8;

/// Logit gain applied to the final pre-sigmoid layer at init time so that
/// frozen random measures produce scores spread over (0,1) instead of
/// clustering at 0.5.
const OUTPUT_GAIN: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    MlpConcate,
    MlpEmSum,
    DeepfmLite,
    ScaledCosine,
}

impl MeasureKind {
    pub fn id(self) -> u8 {
        match self {
            MeasureKind::MlpConcate => 0,
            MeasureKind::MlpEmSum => 1,
            MeasureKind::DeepfmLite => 2,
            MeasureKind::ScaledCosine => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Ok(match id {
            0 => MeasureKind::MlpConcate,
            1 => MeasureKind::MlpEmSum,
            2 => MeasureKind::DeepfmLite,
            3 => MeasureKind::ScaledCosine,
            _ => return Err(FloraError::InvalidInput(format!("unknown measure kind id {id}"))),
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mlp_concate" => MeasureKind::MlpConcate,
            "mlp_em_sum" => MeasureKind::MlpEmSum,
            "deepfm_lite" => MeasureKind::DeepfmLite,
            "scaled_cosine" => MeasureKind::ScaledCosine,
            _ => return Err(FloraError::InvalidInput(format!("unknown measure kind '{s}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::MlpConcate => "mlp_concate",
            MeasureKind::MlpEmSum => "mlp_em_sum",
            MeasureKind::DeepfmLite => "deepfm_lite",
            MeasureKind::ScaledCosine => "scaled_cosine",
        }
    }
}

/// A frozen binary function. Weights are fixed at construction; every
/// scoring call is read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    kind: MeasureKind,
    user_dim: usize,
    item_dim: usize,
    /// Per-side embeddings (mlp_em_sum only).
    user_embed: Option<MlpParams>,
    item_embed: Option<MlpParams>,
    /// Main MLP branch (all neural kinds).
    mlp: Option<MlpParams>,
    /// Factorization-machine parts (deepfm_lite only).
    fm_factors: Option<Matrix>,
    fm_linear: Option<Vec<f64>>,
    fm_bias: f64,
}

impl MeasureSpec {
    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn user_dim(&self) -> usize {
        self.user_dim
    }

    pub fn item_dim(&self) -> usize {
        self.item_dim
    }

    pub(crate) fn parts(
        &self,
    ) -> (
        Option<&MlpParams>,
        Option<&MlpParams>,
        Option<&MlpParams>,
        Option<&Matrix>,
        Option<&Vec<f64>>,
        f64,
    ) {
        (
            self.user_embed.as_ref(),
            self.item_embed.as_ref(),
            self.mlp.as_ref(),
            self.fm_factors.as_ref(),
            self.fm_linear.as_ref(),
            self.fm_bias,
        )
    }

    pub(crate) fn from_parts(
        kind: MeasureKind,
        user_dim: usize,
        item_dim: usize,
        user_embed: Option<MlpParams>,
        item_embed: Option<MlpParams>,
        mlp: Option<MlpParams>,
        fm_factors: Option<Matrix>,
        fm_linear: Option<Vec<f64>>,
        fm_bias: f64,
    ) -> Self {
        MeasureSpec {
            kind,
            user_dim,
            item_dim,
            user_embed,
            item_embed,
            mlp,
            fm_factors,
            fm_linear,
            fm_bias,
        }
    }
}

fn scale_last_layer(mlp: &mut MlpParams, gain: f64) {
    let last = mlp.layers.last_mut().unwrap();
    for v in last.weights.data_mut() {
        *v *= gain;
    }
}

/// Build a frozen measure with reproducible random weights.
pub fn make_measure(kind: MeasureKind, user_dim: usize, item_dim: usize, seed: u64) -> Result<MeasureSpec> {
    if user_dim == 0 || item_dim == 0 {
        return Err(FloraError::InvalidInput("measure dims must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = MEASURE_HIDDEN;
    let spec = match kind {
        MeasureKind::ScaledCosine => {
            if user_dim != item_dim {
                return Err(FloraError::dim(user_dim, item_dim, "scaled_cosine dims"));
            }
            MeasureSpec {
                kind,
                user_dim,
                item_dim,
                user_embed: None,
                item_embed: None,
                mlp: None,
                fm_factors: None,
                fm_linear: None,
                fm_bias: 0.0,
            }
        }
        MeasureKind::MlpConcate => {
            let mut mlp = MlpParams::init(
                &[user_dim + item_dim, h, h, 1],
                &[Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
                &mut rng,
            )?;
            scale_last_layer(&mut mlp, OUTPUT_GAIN);
            MeasureSpec {
                kind,
                user_dim,
                item_dim,
                user_embed: None,
                item_embed: None,
                mlp: Some(mlp),
                fm_factors: None,
                fm_linear: None,
                fm_bias: 0.0,
            }
        }
        MeasureKind::MlpEmSum => {
            let user_embed = MlpParams::init(&[user_dim, EMBED_DIM], &[Activation::Tanh], &mut rng)?;
            let item_embed = MlpParams::init(&[item_dim, EMBED_DIM], &[Activation::Tanh], &mut rng)?;
            let mut mlp = MlpParams::init(
                &[EMBED_DIM, h, h, 1],
                &[Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
                &mut rng,
            )?;
            scale_last_layer(&mut mlp, OUTPUT_GAIN);
            MeasureSpec {
                kind,
                user_dim,
                item_dim,
                user_embed: Some(user_embed),
                item_embed: Some(item_embed),
                mlp: Some(mlp),
                fm_factors: None,
                fm_linear: None,
                fm_bias: 0.0,
            }
        }
        MeasureKind::DeepfmLite => {
            let d = user_dim + item_dim;
            // MLP branch ends with identity; the sigmoid is applied to the
            // combined FM + MLP logit.
            let mut mlp = MlpParams::init(
                &[d, h, h, 1],
                &[Activation::Tanh, Activation::Tanh, Activation::Identity],
                &mut rng,
            )?;
            scale_last_layer(&mut mlp, OUTPUT_GAIN);
            let scale = (1.0 / d as f64).sqrt();
            let factors: Vec<f64> = (0..d * FM_FACTORS)
                .map(|_| rng.random_range(-scale..scale))
                .collect();
            let linear: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
            MeasureSpec {
                kind,
                user_dim,
                item_dim,
                user_embed: None,
                item_embed: None,
                mlp: Some(mlp),
                fm_factors: Some(Matrix::from_vec_unchecked(d, FM_FACTORS, factors)),
                fm_linear: Some(linear),
                fm_bias: rng.random_range(-0.1..0.1),
            }
        }
    };
    Ok(spec)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Second-order FM interaction over one row:
/// 0.5 Σ_f [(Σ_i v_{if} x_i)² − Σ_i v_{if}² x_i²].
fn fm_second_order(factors: &Matrix, x: &[f64]) -> f64 {
    let k = factors.cols();
    let mut total = 0.0;
    for f in 0..k {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let v = factors.get(i, f) * xi;
            s += v;
            s2 += v * v;
        }
        total += s * s - s2;
    }
    0.5 * total
}

/// Score one (item, user) pair. Routed through the batch path so scalar
/// and batch calls agree bit-for-bit.
pub fn measure_score(spec: &MeasureSpec, item: &[f64], user: &[f64]) -> Result<f64> {
    let items = Matrix::from_vec(1, item.len(), item.to_vec())?;
    let scores = measure_score_batch(spec, &items, user)?;
    Ok(scores[0])
}

/// Score every item row against one user.
pub fn measure_score_batch(spec: &MeasureSpec, items: &Matrix, user: &[f64]) -> Result<Vec<f64>> {
    if items.cols() != spec.item_dim {
        return Err(FloraError::dim(spec.item_dim, items.cols(), "item dim"));
    }
    if user.len() != spec.user_dim {
        return Err(FloraError::dim(spec.user_dim, user.len(), "user dim"));
    }
    let n = items.rows();
    match spec.kind {
        MeasureKind::ScaledCosine => {
            let un: f64 = user.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut out = Vec::with_capacity(n);
            for r in 0..n {
                let row = items.row(r);
                let inorm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dot: f64 = row.iter().zip(user).map(|(a, b)| a * b).sum();
                let denom = un * inorm;
                let cos = if denom == 0.0 { 0.0 } else { dot / denom };
                out.push((cos + 1.0) / 2.0);
            }
            Ok(out)
        }
        MeasureKind::MlpConcate => {
            let mlp = spec.mlp.as_ref().unwrap();
            let mut data = Vec::with_capacity(n * (spec.user_dim + spec.item_dim));
            for r in 0..n {
                data.extend_from_slice(user);
                data.extend_from_slice(items.row(r));
            }
            let x = Matrix::from_vec_unchecked(n, spec.user_dim + spec.item_dim, data);
            let y = mlp.forward_only(&x)?;
            Ok(y.data().to_vec())
        }
        MeasureKind::MlpEmSum => {
            let ue = spec.user_embed.as_ref().unwrap();
            let ie = spec.item_embed.as_ref().unwrap();
            let mlp = spec.mlp.as_ref().unwrap();
            let u_row = Matrix::from_vec(1, user.len(), user.to_vec())?;
            let u_emb = ue.forward_only(&u_row)?;
            let mut merged = ie.forward_only(items)?;
            for r in 0..n {
                for c in 0..merged.cols() {
                    let v = merged.get(r, c) + u_emb.get(0, c);
                    merged.set(r, c, v);
                }
            }
            let y = mlp.forward_only(&merged)?;
            Ok(y.data().to_vec())
        }
        MeasureKind::DeepfmLite => {
            let mlp = spec.mlp.as_ref().unwrap();
            let factors = spec.fm_factors.as_ref().unwrap();
            let linear = spec.fm_linear.as_ref().unwrap();
            let d = spec.user_dim + spec.item_dim;
            let mut data = Vec::with_capacity(n * d);
            for r in 0..n {
                data.extend_from_slice(user);
                data.extend_from_slice(items.row(r));
            }
            let x = Matrix::from_vec_unchecked(n, d, data);
            let deep = mlp.forward_only(&x)?;
            let mut out = Vec::with_capacity(n);
            for r in 0..n {
                let row = x.row(r);
                let lin: f64 = row.iter().zip(linear).map(|(a, b)| a * b).sum();
                let logit = spec.fm_bias + lin + fm_second_order(factors, row) + deep.get(r, 0);
                out.push(sigmoid(logit));
            }
            Ok(out)
        }
    }
}

/// Score handle with per-item work hoisted out of the per-user loop.
/// For `mlp_em_sum` the item embeddings are computed once.
pub struct BatchScorer<'a> {
    spec: &'a MeasureSpec,
    items: &'a Matrix,
    item_embeds: Option<Matrix>,
}

impl<'a> BatchScorer<'a> {
    pub fn new(spec: &'a MeasureSpec, items: &'a Matrix) -> Result<Self> {
        if items.cols() != spec.item_dim {
            return Err(FloraError::dim(spec.item_dim, items.cols(), "item dim"));
        }
        let item_embeds = match spec.kind {
            MeasureKind::MlpEmSum => Some(spec.item_embed.as_ref().unwrap().forward_only(items)?),
            _ => None,
        };
        Ok(BatchScorer {
            spec,
            items,
            item_embeds,
        })
    }

    pub fn score_user(&self, user: &[f64]) -> Result<Vec<f64>> {
        match (&self.spec.kind, &self.item_embeds) {
            (MeasureKind::MlpEmSum, Some(embeds)) => {
                let ue = self.spec.user_embed.as_ref().unwrap();
                let mlp = self.spec.mlp.as_ref().unwrap();
                let u_row = Matrix::from_vec(1, user.len(), user.to_vec())?;
                let u_emb = ue.forward_only(&u_row)?;
                let mut merged = embeds.clone();
                let cols = merged.cols();
                for r in 0..merged.rows() {
                    for c in 0..cols {
                        let v = merged.get(r, c) + u_emb.get(0, c);
                        merged.set(r, c, v);
                    }
                }
                let y = mlp.forward_only(&merged)?;
                Ok(y.data().to_vec())
            }
            _ => measure_score_batch(self.spec, self.items, user),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_cosine_endpoints() {
        let spec = make_measure(MeasureKind::ScaledCosine, 3, 3, 0).unwrap();
        let u = [1.0, -2.0, 0.5];
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        assert!((measure_score(&spec, &u, &u).unwrap() - 1.0).abs() < 1e-12);
        assert!(measure_score(&spec, &neg, &u).unwrap().abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_spec() {
        let a = make_measure(MeasureKind::MlpEmSum, 8, 8, 99).unwrap();
        let b = make_measure(MeasureKind::MlpEmSum, 8, 8, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(MeasureKind::parse("mlp_other").is_err());
        assert!(MeasureKind::from_id(42).is_err());
    }

    #[test]
    fn dim_mismatch_rejected() {
        let spec = make_measure(MeasureKind::MlpConcate, 4, 4, 0).unwrap();
        assert!(measure_score(&spec, &[0.0; 5], &[0.0; 4]).is_err());
        assert!(measure_score(&spec, &[0.0; 4], &[0.0; 3]).is_err());
    }

    #[test]
    fn em_sum_matches_scalar_loop_oracle() {
        let spec = make_measure(MeasureKind::MlpEmSum, 4, 4, 5).unwrap();
        let user = [0.3, -0.1, 0.7, 0.2];
        let item = [-0.4, 0.6, 0.1, -0.2];

        // independent scalar-loop evaluation of the same weights
        let eval_mlp = |mlp: &MlpParams, x: &[f64]| -> Vec<f64> {
            let mut cur = x.to_vec();
            for layer in &mlp.layers {
                let mut next = vec![0.0; layer.out_dim()];
                for (j, nj) in next.iter_mut().enumerate() {
                    let mut s = layer.bias[j];
                    for (i, &ci) in cur.iter().enumerate() {
                        s += ci * layer.weights.get(i, j);
                    }
                    *nj = layer.activation.apply(s);
                }
                cur = next;
            }
            cur
        };
        let ue = spec.user_embed.as_ref().unwrap();
        let ie = spec.item_embed.as_ref().unwrap();
        let mlp = spec.mlp.as_ref().unwrap();
        let ue_out = eval_mlp(ue, &user);
        let ie_out = eval_mlp(ie, &item);
        let merged: Vec<f64> = ue_out.iter().zip(&ie_out).map(|(a, b)| a + b).collect();
        let expected = eval_mlp(mlp, &merged)[0];

        let got = measure_score(&spec, &item, &user).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn batch_equals_scalar_calls() {
        let spec = make_measure(MeasureKind::DeepfmLite, 5, 5, 3).unwrap();
        let mut items = Vec::new();
        for i in 0..100 {
            items.push((0..5).map(|j| ((i * 7 + j * 3) as f64).sin()).collect::<Vec<f64>>());
        }
        let items_m = Matrix::from_rows(&items).unwrap();
        let user: Vec<f64> = (0..5).map(|j| (j as f64 * 0.9).cos()).collect();
        let batch = measure_score_batch(&spec, &items_m, &user).unwrap();
        for (i, item) in items.iter().enumerate() {
            let s = measure_score(&spec, item, &user).unwrap();
            assert_eq!(batch[i], s, "item {i}");
        }
    }

    #[test]
    fn permuted_items_permute_scores() {
        let spec = make_measure(MeasureKind::MlpConcate, 3, 3, 1).unwrap();
        let items = Matrix::from_vec(3, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, -0.6, 0.7, 0.8, 0.9]).unwrap();
        let user = [0.2, -0.3, 0.4];
        let scores = measure_score_batch(&spec, &items, &user).unwrap();
        let perm = items.gather_rows(&[2, 0, 1]);
        let pscores = measure_score_batch(&spec, &perm, &user).unwrap();
        assert_eq!(pscores, vec![scores[2], scores[0], scores[1]]);
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        for kind in [
            MeasureKind::MlpConcate,
            MeasureKind::MlpEmSum,
            MeasureKind::DeepfmLite,
            MeasureKind::ScaledCosine,
        ] {
            let spec = make_measure(kind, 6, 6, 11).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(123);
            for _ in 0..500 {
                let item: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
                let user: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
                let s = measure_score(&spec, &item, &user).unwrap();
                assert!((0.0..=1.0).contains(&s), "{kind:?}: {s}");
            }
        }
    }

    #[test]
    fn batch_scorer_matches_direct_batch() {
        let spec = make_measure(MeasureKind::MlpEmSum, 4, 4, 17).unwrap();
        let items = Matrix::from_vec(
            10,
            4,
            (0..40).map(|i| ((i as f64) * 0.13).sin()).collect(),
        )
        .unwrap();
        let user = [0.5, -0.5, 0.25, 0.0];
        let scorer = BatchScorer::new(&spec, &items).unwrap();
        let a = scorer.score_user(&user).unwrap();
        let b = measure_score_batch(&spec, &items, &user).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

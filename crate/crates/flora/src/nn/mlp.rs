use rand::Rng;

use crate::error::{FloraError, Result};
use crate::nn::Matrix;

/// Activation functions supported by the fixed architectures in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn id(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Ok(match id {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Sigmoid,
            3 => Activation::Identity,
            _ => return Err(FloraError::InvalidInput(format!("unknown activation id {id}"))),
        })
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through pre-activation z and post-activation a.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer: y = act(x W + b), W is in_dim x out_dim.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Glorot-uniform init: U(±sqrt(6/(fan_in+fan_out))), zero bias.
    pub fn init<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec_unchecked(in_dim, out_dim, data),
            bias: vec![0.0; out_dim],
            activation,
        }
    }
}

/// A stack of dense layers with chained dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer pre/post activations from a forward pass, consumed by backward.
pub struct ForwardCache {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

/// Gradients with the same shape as `MlpParams`, plus the input gradient.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub d_weights: Vec<Matrix>,
    pub d_bias: Vec<Vec<f64>>,
    pub d_input: Matrix,
}

impl MlpParams {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(FloraError::InvalidInput("mlp needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(FloraError::dim(w[0].out_dim(), w[1].in_dim(), "layer dim chain"));
            }
        }
        Ok(MlpParams { layers })
    }

    /// Build an MLP with the given layer widths. `activations.len()` must
    /// equal `dims.len() - 1`.
    pub fn init<R: Rng>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(FloraError::InvalidInput("dims/activations mismatch".into()));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &a)| DenseLayer::init(d[0], d[1], a, rng))
            .collect();
        MlpParams::new(layers)
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.in_dim() {
            return Err(FloraError::dim(self.in_dim(), x.cols(), "mlp input dim"));
        }
        if !x.is_finite() {
            return Err(FloraError::InvalidInput("non-finite mlp input".into()));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let mut z = cur.matmul(&layer.weights)?;
            for r in 0..z.rows() {
                for c in 0..z.cols() {
                    let v = z.get(r, c) + layer.bias[c];
                    z.set(r, c, v);
                }
            }
            let mut a = z.clone();
            for v in a.data_mut() {
                *v = layer.activation.apply(*v);
            }
            pre.push(z);
            post.push(a.clone());
            cur = a;
        }
        let cache = ForwardCache {
            input: x.clone(),
            pre,
            post,
        };
        Ok((cur, cache))
    }

    /// Forward without keeping the cache, for frozen evaluation.
    pub fn forward_only(&self, x: &Matrix) -> Result<Matrix> {
        let (out, _) = self.forward(x)?;
        Ok(out)
    }

    pub fn backward(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<MlpGrads> {
        let last = cache.post.last().ok_or_else(|| {
            FloraError::InvalidInput("empty forward cache".into())
        })?;
        if upstream.rows() != last.rows() || upstream.cols() != last.cols() {
            return Err(FloraError::dim(
                last.cols(),
                upstream.cols(),
                "upstream gradient shape",
            ));
        }
        let n = self.layers.len();
        let mut d_weights = vec![Matrix::zeros(0, 0); n];
        let mut d_bias = vec![Vec::new(); n];
        let mut da = upstream.clone();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            // dz = da ⊙ act'(z)
            let mut dz = da;
            {
                let z = &cache.pre[l];
                let a = &cache.post[l];
                let dzd = dz.data_mut();
                for (i, v) in dzd.iter_mut().enumerate() {
                    *v *= layer.activation.derivative(z.data()[i], a.data()[i]);
                }
            }
            let below: &Matrix = if l == 0 { &cache.input } else { &cache.post[l - 1] };
            d_weights[l] = below.t_matmul(&dz)?;
            let mut db = vec![0.0; layer.out_dim()];
            for r in 0..dz.rows() {
                for c in 0..dz.cols() {
                    db[c] += dz.get(r, c);
                }
            }
            d_bias[l] = db;
            da = dz.matmul_t(&layer.weights)?;
        }
        Ok(MlpGrads {
            d_weights,
            d_bias,
            d_input: da,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.bias.len())
            .sum()
    }

    /// Flatten all parameters (per layer: weights row-major, then bias).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn copy_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(FloraError::dim(self.param_count(), flat.len(), "flat params"));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let wn = l.weights.data().len();
            l.weights.data_mut().copy_from_slice(&flat[off..off + wn]);
            off += wn;
            let bn = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + bn]);
            off += bn;
        }
        Ok(())
    }
}

impl MlpGrads {
    /// Zero-valued gradients with the shape of the given params.
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            d_weights: params
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.in_dim(), l.out_dim()))
                .collect(),
            d_bias: params.layers.iter().map(|l| vec![0.0; l.out_dim()]).collect(),
            d_input: Matrix::zeros(0, 0),
        }
    }

    pub fn accumulate(&mut self, other: &MlpGrads, scale: f64) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += scale * y;
            }
        }
        for (a, b) in self.d_bias.iter_mut().zip(&other.d_bias) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    /// Same layout as `MlpParams::to_flat`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.d_weights.iter().zip(&self.d_bias) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }
}

/// Central finite differences of an arbitrary scalar function of a flat
/// parameter vector. Test oracle; intentionally simple and slow.
pub fn finite_difference_grad<F>(mut loss_fn: F, params: &mut [f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(step > 0.0);
    let mut grads = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + step;
        let hi = loss_fn(params);
        params[i] = orig - step;
        let lo = loss_fn(params);
        params[i] = orig;
        grads.push((hi - lo) / (2.0 * step));
    }
    grads
}

/// Compare analytic vs numeric gradients: relative error with an absolute
/// floor for near-zero entries.
pub fn max_grad_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-8 {
                (a - n).abs()
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passthrough() {
        let params = MlpParams::new(vec![DenseLayer {
            weights: Matrix::from_vec(2, 2, vec![1., 0., 0., 1.]).unwrap(),
            bias: vec![0.0, 0.0],
            activation: Activation::Identity,
        }])
        .unwrap();
        let x = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let (y, _) = params.forward(&x).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);
    }

    #[test]
    fn tanh_of_zero_is_zero() {
        let params = MlpParams::new(vec![DenseLayer {
            weights: Matrix::from_vec(2, 2, vec![1., 0., 0., 1.]).unwrap(),
            bias: vec![0.0, 0.0],
            activation: Activation::Tanh,
        }])
        .unwrap();
        let x = Matrix::zeros(1, 2);
        let (y, _) = params.forward(&x).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0]);
    }

    #[test]
    fn forward_matches_scalar_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = MlpParams::init(
            &[3, 4, 2],
            &[Activation::Tanh, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let x = Matrix::from_vec(
            5,
            3,
            (0..15).map(|i| (i as f64 * 0.37).sin()).collect(),
        )
        .unwrap();
        let (y, _) = params.forward(&x).unwrap();

        // independent per-element reference evaluation
        for r in 0..5 {
            let mut cur: Vec<f64> = x.row(r).to_vec();
            for layer in &params.layers {
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
            for (j, &cj) in cur.iter().enumerate() {
                assert!((y.get(r, j) - cj).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = MlpParams::init(&[2, 3, 2], &[Activation::Relu, Activation::Tanh], &mut rng)
            .unwrap();
        let x = Matrix::from_vec(2, 2, vec![0.1, -0.2, 0.3, 0.4]).unwrap();
        let (out, cache) = params.forward(&x).unwrap();
        let up = Matrix::zeros(out.rows(), out.cols());
        let grads = params.backward(&cache, &up).unwrap();
        assert!(grads.to_flat().iter().all(|&g| g == 0.0));
        assert!(grads.d_input.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_layer_sum_loss_closed_form() {
        // L = sum(xW + b) => dL/dW = xᵀ·1
        let params = MlpParams::new(vec![DenseLayer {
            weights: Matrix::zeros(2, 3),
            bias: vec![0.0; 3],
            activation: Activation::Identity,
        }])
        .unwrap();
        let x = Matrix::from_vec(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let (out, cache) = params.forward(&x).unwrap();
        let ones = Matrix::from_vec(out.rows(), out.cols(), vec![1.0; 6]).unwrap();
        let grads = params.backward(&cache, &ones).unwrap();
        // column sums of x replicated across output cols
        for j in 0..3 {
            assert_eq!(grads.d_weights[0].get(0, j), 4.0); // 1+3
            assert_eq!(grads.d_weights[0].get(1, j), 6.0); // 2+4
            assert_eq!(grads.d_bias[0][j], 2.0);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let params =
            MlpParams::init(&[3, 5, 2], &[Activation::Tanh, Activation::Tanh], &mut rng).unwrap();
        let x = Matrix::from_vec(
            4,
            3,
            (0..12).map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.2).collect(),
        )
        .unwrap();

        // L = 0.5 * sum(out²)
        let (out, cache) = params.forward(&x).unwrap();
        let up = out.clone();
        let analytic = params.backward(&cache, &up).unwrap().to_flat();

        let template = params.clone();
        let mut flat = params.to_flat();
        let numeric = finite_difference_grad(
            |p| {
                let mut m = template.clone();
                m.copy_from_flat(p).unwrap();
                let y = m.forward_only(&x).unwrap();
                0.5 * y.data().iter().map(|v| v * v).sum::<f64>()
            },
            &mut flat,
            1e-5,
        );
        assert!(max_grad_error(&analytic, &numeric) <= 1e-4);
    }

    #[test]
    fn batch_permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params =
            MlpParams::init(&[2, 4, 3], &[Activation::Relu, Activation::Tanh], &mut rng).unwrap();
        let x = Matrix::from_vec(3, 2, vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]).unwrap();
        let y = params.forward_only(&x).unwrap();
        let perm = [2usize, 0, 1];
        let xp = x.gather_rows(&perm);
        let yp = params.forward_only(&xp).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(yp.row(i), y.row(p));
        }
    }

    #[test]
    fn finite_difference_simple_cases() {
        let mut w = vec![3.0];
        let g = finite_difference_grad(|p| p[0] * p[0], &mut w, 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_difference_grad(|_| 1.25, &mut w, 1e-5);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn dim_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = MlpParams::init(&[3, 2], &[Activation::Identity], &mut rng).unwrap();
        let x = Matrix::zeros(1, 4);
        assert!(params.forward(&x).is_err());
    }
}

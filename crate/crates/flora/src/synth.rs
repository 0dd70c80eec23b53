//! Synthetic embedding generation: Gaussian vectors or a
//! mixture-of-clusters, reproducible from a seed. Values are rounded
//! through f32 so in-memory sets equal their on-disk round-trip.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{FloraError, Result};
use crate::io::{EmbeddingSet, Role};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthDistribution {
    Gaussian,
    Clusters { k: usize },
}

impl SynthDistribution {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "gaussian" {
            return Ok(SynthDistribution::Gaussian);
        }
        if let Some(k) = s.strip_prefix("clusters:") {
            let k: usize = k
                .parse()
                .map_err(|_| FloraError::InvalidInput(format!("bad cluster count in '{s}'")))?;
            if k == 0 {
                return Err(FloraError::InvalidInput("cluster count must be positive".into()));
            }
            return Ok(SynthDistribution::Clusters { k });
        }
        Err(FloraError::InvalidInput(format!(
            "unknown distribution '{s}' (expected 'gaussian' or 'clusters:K')"
        )))
    }
}

fn sample_matrix(n: usize, dim: usize, dist: SynthDistribution, rng: &mut ChaCha8Rng) -> Matrix {
    let data = match dist {
        SynthDistribution::Gaussian => (0..n * dim)
            .map(|_| {
                let v: f64 = StandardNormal.sample(rng);
                v as f32 as f64
            })
            .collect(),
        SynthDistribution::Clusters { k } => {
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    (0..dim)
                        .map(|_| {
                            let v: f64 = StandardNormal.sample(rng);
                            2.0 * v
                        })
                        .collect()
                })
                .collect();
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let c = rng.random_range(0..k);
                for d in 0..dim {
                    let noise: f64 = StandardNormal.sample(rng);
                    data.push((centers[c][d] + 0.3 * noise) as f32 as f64);
                }
            }
            data
        }
    };
    Matrix::from_vec_unchecked(n, dim, data)
}

/// Generate a user set and an item set with the given distribution.
pub fn gen_synth(
    n_users: usize,
    n_items: usize,
    dim: usize,
    seed: u64,
    dist: SynthDistribution,
) -> Result<(EmbeddingSet, EmbeddingSet)> {
    if n_users == 0 || n_items == 0 || dim == 0 {
        return Err(FloraError::InvalidInput("counts and dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = EmbeddingSet {
        role: Role::User,
        vectors: sample_matrix(n_users, dim, dist, &mut rng),
    };
    let items = EmbeddingSet {
        role: Role::Item,
        vectors: sample_matrix(n_items, dim, dist, &mut rng),
    };
    Ok((users, items))
}

//! Python bindings: thin wrappers over the measure, hash model, training,
//! and ranking APIs. Matrices cross the boundary as lists of row lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use flora::error::FloraError;
use flora::eval::{ground_truth, recall_at};
use flora::hash_model::{binarize, Domain, FloraModel, HashConfig};
use flora::index::{pack_codes, rank_full_scan, rerank_with_f, top_with_ties};
use flora::io;
use flora::measures::{make_measure, measure_score, MeasureKind};
use flora::nn::Matrix;
use flora::sampler::{SamplingStrategy, SamplingVariant};
use flora::synth::{gen_synth as gen_synth_rs, SynthDistribution};
use flora::trainer::{train as train_rs, TrainConfig};

fn err(e: FloraError) -> PyErr {
    match e {
        FloraError::Io { .. } | FloraError::Format { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

fn from_matrix(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn parse_domain(s: &str) -> PyResult<Domain> {
    match s {
        "user" => Ok(Domain::User),
        "item" => Ok(Domain::Item),
        other => Err(PyValueError::new_err(format!(
            "domain must be 'user' or 'item', got {other:?}"
        ))),
    }
}

/// Frozen ranking measure f(item, user) -> [0, 1].
#[pyclass(name = "Measure")]
struct PyMeasure {
    inner: flora::measures::MeasureSpec,
}

#[pymethods]
impl PyMeasure {
    /// kind: mlp_concate | mlp_em_sum | deepfm_lite | scaled_cosine
    #[new]
    #[pyo3(signature = (kind, user_dim, item_dim, seed=0))]
    fn new(kind: &str, user_dim: usize, item_dim: usize, seed: u64) -> PyResult<Self> {
        let kind = MeasureKind::parse(kind).map_err(err)?;
        let inner = make_measure(kind, user_dim, item_dim, seed).map_err(err)?;
        Ok(PyMeasure { inner })
    }

    fn score(&self, item: Vec<f64>, user: Vec<f64>) -> PyResult<f64> {
        measure_score(&self.inner, &item, &user).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_measure(&self.inner, &path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: io::read_measure(&path).map_err(err)?,
        })
    }
}

/// Trained two-tower hash model with a shared binarization head.
#[pyclass(name = "HashModel")]
struct PyHashModel {
    inner: FloraModel,
}

#[pymethods]
impl PyHashModel {
    /// Code length in bits.
    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    /// Continuous codes in (-1, 1); domain is "user" or "item".
    fn encode(&self, domain: &str, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let d = parse_domain(domain)?;
        let h = self.inner.encode_continuous(d, &to_matrix(rows)?).map_err(err)?;
        Ok(from_matrix(&h))
    }

    /// Binary codes in {-1, +1}.
    fn codes(&self, domain: &str, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let d = parse_domain(domain)?;
        let h = self.inner.encode_continuous(d, &to_matrix(rows)?).map_err(err)?;
        Ok(from_matrix(&binarize(&h)))
    }

    /// Hamming full-scan ranking of items for one user; returns the
    /// top-t item ids (distance ascending, id ascending on ties).
    fn rank(&self, user: Vec<f64>, items: Vec<Vec<f64>>, top: usize) -> PyResult<Vec<u32>> {
        let items = to_matrix(items)?;
        let h_items = self.inner.encode_continuous(Domain::Item, &items).map_err(err)?;
        let codes = pack_codes(&binarize(&h_items)).map_err(err)?;
        let x = to_matrix(vec![user])?;
        let h = self.inner.encode_continuous(Domain::User, &x).map_err(err)?;
        let q = pack_codes(&binarize(&h)).map_err(err)?;
        Ok(rank_full_scan(q.row(0), &codes, top).map_err(err)?.ids)
    }

    /// Hamming candidates (tie-inclusive) re-ranked by the measure.
    fn rank_reranked(
        &self,
        user: Vec<f64>,
        items: Vec<Vec<f64>>,
        measure: &PyMeasure,
        top: usize,
    ) -> PyResult<Vec<u32>> {
        let items = to_matrix(items)?;
        let h_items = self.inner.encode_continuous(Domain::Item, &items).map_err(err)?;
        let codes = pack_codes(&binarize(&h_items)).map_err(err)?;
        let x = to_matrix(vec![user.clone()])?;
        let h = self.inner.encode_continuous(Domain::User, &x).map_err(err)?;
        let q = pack_codes(&binarize(&h)).map_err(err)?;
        let cands = top_with_ties(q.row(0), &codes, top).map_err(err)?;
        let result = rerank_with_f(&cands, &items, &user, &measure.inner, top).map_err(err)?;
        Ok(result.ids)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_model(&self.inner, &path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyHashModel {
            inner: io::read_model(&path).map_err(err)?,
        })
    }
}

/// Synthetic embeddings; dist is "gaussian" or "clusters:K".
#[pyfunction]
#[pyo3(signature = (n_users, n_items, dim, seed=0, dist="gaussian"))]
fn gen_synth(
    n_users: usize,
    n_items: usize,
    dim: usize,
    seed: u64,
    dist: &str,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let dist = SynthDistribution::parse(dist).map_err(err)?;
    let (u, v) = gen_synth_rs(n_users, n_items, dim, seed, dist).map_err(err)?;
    Ok((from_matrix(&u.vectors), from_matrix(&v.vectors)))
}

/// Train a hash model against a frozen measure. Returns the model and
/// the best validation recall seen across checkpoints.
#[pyfunction]
#[pyo3(signature = (users, items, measure, *, m=64, iterations=2000, batch_size=64,
    seed=0, learning_rate=1e-3, variant="rank_neg", p=0.5, n_p=10,
    lambda_u=1e-4, lambda_i=1e-4, towers=vec![64, 64], shared=vec![64],
    eval_every=500, validation_fraction=0.1))]
#[allow(clippy::too_many_arguments)]
fn train(
    users: Vec<Vec<f64>>,
    items: Vec<Vec<f64>>,
    measure: &PyMeasure,
    m: usize,
    iterations: usize,
    batch_size: usize,
    seed: u64,
    learning_rate: f64,
    variant: &str,
    p: f64,
    n_p: usize,
    lambda_u: f64,
    lambda_i: f64,
    towers: Vec<usize>,
    shared: Vec<usize>,
    eval_every: usize,
    validation_fraction: f64,
) -> PyResult<(PyHashModel, f64)> {
    let strategy = SamplingStrategy::new(SamplingVariant::parse(variant).map_err(err)?, p, n_p)
        .map_err(err)?;
    let config = TrainConfig {
        iterations,
        batch_size,
        seed,
        learning_rate,
        strategy,
        hash: HashConfig {
            m,
            lambda_u,
            lambda_i,
            tower_sizes: towers,
            shared_sizes: shared,
        },
        eval_every,
        validation_fraction,
    };
    let outcome = train_rs(&config, &to_matrix(users)?, &to_matrix(items)?, &measure.inner)
        .map_err(err)?;
    Ok((PyHashModel { inner: outcome.model }, outcome.best_recall))
}

/// Top-K item ids per user under the exact measure.
#[pyfunction]
fn true_top_k(
    users: Vec<Vec<f64>>,
    items: Vec<Vec<f64>>,
    measure: &PyMeasure,
    k: usize,
) -> PyResult<Vec<Vec<u32>>> {
    let gt = ground_truth(&to_matrix(users)?, &to_matrix(items)?, &measure.inner, k)
        .map_err(err)?;
    Ok(gt.per_user)
}

/// |top-t(ranking) ∩ gt| / |gt|.
#[pyfunction]
fn recall(ranking: Vec<u32>, gt: Vec<u32>, t: usize) -> f64 {
    recall_at(&ranking, &gt, t)
}

#[pymodule]
fn flora_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyHashModel>()?;
    m.add_function(wrap_pyfunction!(gen_synth, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(true_top_k, m)?)?;
    m.add_function(wrap_pyfunction!(recall, m)?)?;
    Ok(())
}

//! Serving-side structures: bit-packed codes, XOR/popcount full-scan
//! ranking, exact-match hash tables with multi-table radius probing, and
//! measure-based re-ranking of candidate sets.

use std::collections::{BTreeSet, HashMap};

use crate::error::{FloraError, Result};
use crate::hash_model::{binarize, Domain, FloraModel};
use crate::measures::{measure_score_batch, MeasureSpec};
use crate::nn::Matrix;

/// n × ⌈m/64⌉ little-endian words; bit b of item i is 1 iff code entry +1.
/// Padding bits past m are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedCodes {
    n: usize,
    m: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl PackedCodes {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub(crate) fn from_raw(n: usize, m: usize, words: Vec<u64>) -> Result<Self> {
        let wpr = m.div_ceil(64);
        if words.len() != n * wpr {
            return Err(FloraError::dim(n * wpr, words.len(), "packed code words"));
        }
        if m % 64 != 0 {
            let mask = !0u64 << (m % 64);
            for r in 0..n {
                if words[r * wpr + wpr - 1] & mask != 0 {
                    return Err(FloraError::InvalidInput(format!(
                        "nonzero padding bits in row {r}"
                    )));
                }
            }
        }
        Ok(PackedCodes {
            n,
            m,
            words_per_row: wpr,
            words,
        })
    }

    /// Code payload size in bytes: n·⌈m/64⌉·8.
    pub fn payload_bytes(&self) -> usize {
        self.words.len() * 8
    }
}

/// Pack a {−1,+1} sign matrix into 64-bit words.
pub fn pack_codes(bits: &Matrix) -> Result<PackedCodes> {
    let (n, m) = (bits.rows(), bits.cols());
    let wpr = m.div_ceil(64);
    let mut words = vec![0u64; n * wpr];
    for r in 0..n {
        let row = bits.row(r);
        for (b, &v) in row.iter().enumerate() {
            if v == 1.0 {
                words[r * wpr + b / 64] |= 1u64 << (b % 64);
            } else if v != -1.0 {
                return Err(FloraError::InvalidInput(format!(
                    "code entry at ({r},{b}) is {v}, expected -1 or +1"
                )));
            }
        }
    }
    Ok(PackedCodes {
        n,
        m,
        words_per_row: wpr,
        words,
    })
}

/// Inverse of `pack_codes`.
pub fn unpack_codes(codes: &PackedCodes) -> Matrix {
    let mut data = Vec::with_capacity(codes.n * codes.m);
    for r in 0..codes.n {
        let row = codes.row(r);
        for b in 0..codes.m {
            let bit = row[b / 64] >> (b % 64) & 1;
            data.push(if bit == 1 { 1.0 } else { -1.0 });
        }
    }
    Matrix::from_vec_unchecked(codes.n, codes.m, data)
}

/// Pack one m-bit query code (one row).
pub fn pack_query(code: &[f64]) -> Result<Vec<u64>> {
    let m = Matrix::from_vec(1, code.len(), code.to_vec())?;
    Ok(pack_codes(&m)?.words)
}

/// Hamming distance of two packed rows via word-level XOR + popcount.
pub fn hamming_distance(a: &[u64], b: &[u64], m: usize) -> Result<u32> {
    let wpr = m.div_ceil(64);
    if a.len() != wpr || b.len() != wpr {
        return Err(FloraError::dim(wpr, a.len().max(b.len()), "packed row length"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum())
}

/// Ranked item ids with their distances or scores, plus tie metadata at
/// the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub ids: Vec<u32>,
    /// Hamming distance (ascending) or measure score (descending),
    /// aligned with `ids`.
    pub scores: Vec<f64>,
    /// Distance/score at the cutoff position.
    pub cutoff_score: f64,
    /// How many items in the full ranking share the cutoff distance/score.
    pub ties_at_cutoff: usize,
    /// Set when fewer than the requested t items exist (or candidates
    /// were empty).
    pub truncated: bool,
}

/// Rank all items by Hamming distance to the query, ascending, ties by
/// ascending id; return the top t.
pub fn rank_full_scan(query: &[u64], codes: &PackedCodes, t: usize) -> Result<RankingResult> {
    if t == 0 {
        return Err(FloraError::InvalidInput("t must be at least 1".into()));
    }
    let mut dists: Vec<(u32, u32)> = Vec::with_capacity(codes.n);
    for i in 0..codes.n {
        let d = hamming_distance(query, codes.row(i), codes.m)?;
        dists.push((d, i as u32));
    }
    dists.sort_unstable();
    let take = t.min(codes.n);
    let cutoff = dists[take - 1].0;
    let ties = dists.iter().filter(|(d, _)| *d == cutoff).count();
    let ids = dists[..take].iter().map(|&(_, i)| i).collect();
    let scores = dists[..take].iter().map(|&(d, _)| d as f64).collect();
    Ok(RankingResult {
        ids,
        scores,
        cutoff_score: cutoff as f64,
        ties_at_cutoff: ties,
        truncated: t > codes.n,
    })
}

/// Top-t by Hamming distance, extended with every item tied at the cutoff
/// distance. Candidate source for re-ranking.
pub fn top_with_ties(query: &[u64], codes: &PackedCodes, t: usize) -> Result<Vec<u32>> {
    let ranked = rank_full_scan(query, codes, t)?;
    if ranked.truncated {
        return Ok(ranked.ids);
    }
    let cutoff = ranked.cutoff_score as u32;
    let mut ids: Vec<u32> = ranked
        .ids
        .iter()
        .zip(&ranked.scores)
        .filter(|(_, &s)| (s as u32) < cutoff)
        .map(|(&i, _)| i)
        .collect();
    for i in 0..codes.n {
        if hamming_distance(query, codes.row(i), codes.m)? == cutoff {
            ids.push(i as u32);
        }
    }
    Ok(ids)
}

/// Exact-code bucket table: every item sits in exactly one bucket keyed
/// by its packed code.
#[derive(Debug, Clone)]
pub struct HashTable {
    m: usize,
    buckets: HashMap<Vec<u64>, Vec<u32>>,
}

impl HashTable {
    pub fn build(codes: &PackedCodes) -> Self {
        let mut buckets: HashMap<Vec<u64>, Vec<u32>> = HashMap::new();
        for i in 0..codes.n() {
            buckets.entry(codes.row(i).to_vec()).or_default().push(i as u32);
        }
        HashTable {
            m: codes.m(),
            buckets,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bucket(&self, code: &[u64]) -> &[u32] {
        self.buckets.get(code).map_or(&[], |v| v.as_slice())
    }

    /// Items within the given Hamming radius of the query code, by
    /// enumerating bit flips. Enumeration cost explodes with m, so the
    /// radius is capped at 2.
    pub fn probe_radius(&self, code: &[u64], radius: usize) -> Result<Vec<u32>> {
        if radius > 2 {
            return Err(FloraError::Config(format!(
                "probe radius {radius} exceeds the enumeration cap of 2"
            )));
        }
        let mut out = BTreeSet::new();
        out.extend(self.bucket(code).iter().copied());
        if radius >= 1 {
            let mut flipped = code.to_vec();
            for b in 0..self.m {
                flipped[b / 64] ^= 1u64 << (b % 64);
                out.extend(self.bucket(&flipped).iter().copied());
                if radius >= 2 {
                    for b2 in (b + 1)..self.m {
                        flipped[b2 / 64] ^= 1u64 << (b2 % 64);
                        out.extend(self.bucket(&flipped).iter().copied());
                        flipped[b2 / 64] ^= 1u64 << (b2 % 64);
                    }
                }
                flipped[b / 64] ^= 1u64 << (b % 64);
            }
        }
        Ok(out.into_iter().collect())
    }
}

/// One table of a multi-table index: an independently trained model with
/// its packed item codes and bucket table.
#[derive(Debug, Clone)]
pub struct IndexTable {
    pub model: FloraModel,
    pub codes: PackedCodes,
    pub table: HashTable,
}

impl IndexTable {
    pub fn new(model: FloraModel, codes: PackedCodes) -> Self {
        let table = HashTable::build(&codes);
        IndexTable {
            model,
            codes,
            table,
        }
    }

    /// Pack the user-side query code for this table's model.
    pub fn query_code(&self, user: &[f64]) -> Result<Vec<u64>> {
        let x = Matrix::from_vec(1, user.len(), user.to_vec())?;
        let h = self.model.encode_continuous(Domain::User, &x)?;
        pack_query(&binarize(&h).data().to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct MultiTableIndex {
    pub tables: Vec<IndexTable>,
}

impl MultiTableIndex {
    pub fn new(tables: Vec<IndexTable>) -> Result<Self> {
        if tables.is_empty() {
            return Err(FloraError::InvalidInput("index needs at least one table".into()));
        }
        let n = tables[0].codes.n();
        if tables.iter().any(|t| t.codes.n() != n) {
            return Err(FloraError::InvalidInput(
                "all tables must index the same item set".into(),
            ));
        }
        Ok(MultiTableIndex { tables })
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Union of exact-match buckets across tables; one query code per table.
pub fn probe_radius0(query_codes: &[Vec<u64>], index: &MultiTableIndex) -> Result<BTreeSet<u32>> {
    if query_codes.len() != index.tables.len() {
        return Err(FloraError::dim(
            index.tables.len(),
            query_codes.len(),
            "query codes vs tables",
        ));
    }
    let mut out = BTreeSet::new();
    for (code, table) in query_codes.iter().zip(&index.tables) {
        out.extend(table.table.bucket(code).iter().copied());
    }
    Ok(out)
}

/// Re-rank candidates by the frozen measure, descending, ties by
/// ascending id, truncated to k.
pub fn rerank_with_f(
    candidates: &[u32],
    items: &Matrix,
    user: &[f64],
    f: &MeasureSpec,
    k: usize,
) -> Result<RankingResult> {
    if candidates.is_empty() {
        return Ok(RankingResult {
            ids: Vec::new(),
            scores: Vec::new(),
            cutoff_score: f64::NAN,
            ties_at_cutoff: 0,
            truncated: true,
        });
    }
    let rows: Vec<usize> = candidates.iter().map(|&i| i as usize).collect();
    let cand_items = items.gather_rows(&rows);
    let scores = measure_score_batch(f, &cand_items, user)?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(candidates[a].cmp(&candidates[b]))
    });
    let take = k.min(order.len());
    let ids: Vec<u32> = order[..take].iter().map(|&i| candidates[i]).collect();
    let out_scores: Vec<f64> = order[..take].iter().map(|&i| scores[i]).collect();
    let cutoff = out_scores[take - 1];
    let ties = scores.iter().filter(|&&s| s == cutoff).count();
    Ok(RankingResult {
        ids,
        scores: out_scores,
        cutoff_score: cutoff,
        ties_at_cutoff: ties,
        truncated: k > candidates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash_model::HashConfig;
    use crate::measures::{make_measure, measure_score, MeasureKind};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_signs(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
        let data = (0..n * m)
            .map(|_| if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 })
            .collect();
        Matrix::from_vec_unchecked(n, m, data)
    }

    #[test]
    fn pack_bit_layout() {
        // m=4, [+1,+1,−1,−1] → low bits 0011₂ = 3
        let bits = Matrix::from_vec(1, 4, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let packed = pack_codes(&bits).unwrap();
        assert_eq!(packed.words(), &[3u64]);
    }

    #[test]
    fn all_minus_one_packs_to_zero_words() {
        let bits = Matrix::from_vec(2, 3, vec![-1.0; 6]).unwrap();
        let packed = pack_codes(&bits).unwrap();
        assert_eq!(packed.words(), &[0u64, 0u64]);
    }

    #[test]
    fn invalid_entry_rejected() {
        let bits = Matrix::from_vec(1, 2, vec![1.0, 0.5]).unwrap();
        assert!(pack_codes(&bits).is_err());
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let bits = random_signs(&mut rng, 1000, 128);
        let packed = pack_codes(&bits).unwrap();
        assert_eq!(unpack_codes(&packed).data(), bits.data());
        assert_eq!(packed.payload_bytes(), 1000 * 2 * 8);
    }

    #[test]
    fn hamming_against_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for m in [5usize, 64, 100, 128] {
            let a = random_signs(&mut rng, 1, m);
            let b = random_signs(&mut rng, 1, m);
            let pa = pack_codes(&a).unwrap();
            let pb = pack_codes(&b).unwrap();
            let d = hamming_distance(pa.row(0), pb.row(0), m).unwrap();
            let naive = a
                .data()
                .iter()
                .zip(b.data())
                .filter(|(x, y)| x != y)
                .count() as u32;
            assert_eq!(d, naive);
        }
        // hand case: [+1,+1,−1,−1] vs [+1,−1,−1,+1] → 2
        let a = pack_codes(&Matrix::from_vec(1, 4, vec![1., 1., -1., -1.]).unwrap()).unwrap();
        let b = pack_codes(&Matrix::from_vec(1, 4, vec![1., -1., -1., 1.]).unwrap()).unwrap();
        assert_eq!(hamming_distance(a.row(0), b.row(0), 4).unwrap(), 2);
        assert_eq!(hamming_distance(a.row(0), a.row(0), 4).unwrap(), 0);
    }

    #[test]
    fn binary_cosine_identity_holds_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for m in [8usize, 64, 128] {
            for _ in 0..100 {
                let a = random_signs(&mut rng, 1, m);
                let b = random_signs(&mut rng, 1, m);
                let pa = pack_codes(&a).unwrap();
                let pb = pack_codes(&b).unwrap();
                let d = hamming_distance(pa.row(0), pb.row(0), m).unwrap() as f64;
                let dot: f64 = a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
                assert_eq!(dot / (2.0 * m as f64) + 0.5, 1.0 - d / m as f64);
            }
        }
    }

    #[test]
    fn full_scan_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let bits = random_signs(&mut rng, 500, 64);
        let codes = pack_codes(&bits).unwrap();
        let q = random_signs(&mut rng, 1, 64);
        let pq = pack_codes(&q).unwrap();

        let ranked = rank_full_scan(pq.row(0), &codes, 500).unwrap();
        // naive oracle: sort all pairs
        let mut oracle: Vec<(u32, u32)> = (0..500u32)
            .map(|i| {
                let d = q
                    .data()
                    .iter()
                    .zip(bits.row(i as usize))
                    .filter(|(x, y)| x != y)
                    .count() as u32;
                (d, i)
            })
            .collect();
        oracle.sort_unstable();
        let expect: Vec<u32> = oracle.iter().map(|&(_, i)| i).collect();
        assert_eq!(ranked.ids, expect);
        // full permutation, non-decreasing distances
        assert!(ranked.scores.windows(2).all(|w| w[0] <= w[1]));
        let mut sorted = ranked.ids.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..500u32).collect::<Vec<_>>());
    }

    #[test]
    fn full_scan_self_match_and_overflow_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let bits = random_signs(&mut rng, 20, 32);
        let codes = pack_codes(&bits).unwrap();
        let q = codes.row(7).to_vec();
        let ranked = rank_full_scan(&q, &codes, 1).unwrap();
        assert_eq!(ranked.scores[0], 0.0);
        // id 7's code could be duplicated; first id is the smallest tied one
        assert!(ranked.ids[0] <= 7);

        let over = rank_full_scan(&q, &codes, 50).unwrap();
        assert!(over.truncated);
        assert_eq!(over.ids.len(), 20);
    }

    #[test]
    fn probe_radius0_union_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = HashConfig {
            m: 6,
            tower_sizes: vec![4],
            shared_sizes: vec![4],
            ..HashConfig::default()
        };
        let items = Matrix::from_vec_unchecked(
            30,
            3,
            (0..90).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let mut tables = Vec::new();
        for seed in 0..4u64 {
            let mut mrng = ChaCha8Rng::seed_from_u64(seed);
            let model = FloraModel::init(3, 3, &cfg, &mut mrng).unwrap();
            let h = model.encode_continuous(Domain::Item, &items).unwrap();
            let codes = pack_codes(&binarize(&h)).unwrap();
            tables.push(IndexTable::new(model, codes));
        }
        let user = vec![0.2, -0.5, 0.9];
        let all_codes: Vec<Vec<u64>> = tables.iter().map(|t| t.query_code(&user).unwrap()).collect();

        let mut prev: BTreeSet<u32> = BTreeSet::new();
        for l in 1..=4 {
            let sub: Vec<IndexTable> = (0..l)
                .map(|i| IndexTable::new(tables[i].model.clone(), tables[i].codes.clone()))
                .collect();
            let idx = MultiTableIndex::new(sub).unwrap();
            let cands = probe_radius0(&all_codes[..l].to_vec(), &idx).unwrap();
            assert!(cands.is_superset(&prev));

            // linear-scan oracle per table
            let mut oracle = BTreeSet::new();
            for (code, t) in all_codes[..l].iter().zip(&tables[..l]) {
                for i in 0..t.codes.n() {
                    if hamming_distance(code, t.codes.row(i), t.codes.m()).unwrap() == 0 {
                        oracle.insert(i as u32);
                    }
                }
            }
            assert_eq!(cands, oracle);
            prev = cands;
        }
    }

    #[test]
    fn probe_radius_enumeration_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let bits = random_signs(&mut rng, 60, 10);
        let codes = pack_codes(&bits).unwrap();
        let table = HashTable::build(&codes);
        let q = random_signs(&mut rng, 1, 10);
        let pq = pack_codes(&q).unwrap();
        for radius in 0..=2usize {
            let got = table.probe_radius(pq.row(0), radius).unwrap();
            let expect: Vec<u32> = (0..60u32)
                .filter(|&i| {
                    hamming_distance(pq.row(0), codes.row(i as usize), 10).unwrap() <= radius as u32
                })
                .collect();
            assert_eq!(got, expect);
        }
        assert!(table.probe_radius(pq.row(0), 3).is_err());
    }

    #[test]
    fn rerank_basics() {
        let f = make_measure(MeasureKind::ScaledCosine, 3, 3, 0).unwrap();
        let items = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.7, 0.7, 0.0],
        ])
        .unwrap();
        let user = [1.0, 0.0, 0.0];

        // single candidate returned as-is
        let r = rerank_with_f(&[1], &items, &user, &f, 5).unwrap();
        assert_eq!(r.ids, vec![1]);
        assert!(r.truncated);

        // all items, k = all → exact ground-truth order
        let r = rerank_with_f(&[0, 1, 2], &items, &user, &f, 3).unwrap();
        assert_eq!(r.ids, vec![0, 2, 1]);
        for w in r.scores.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let direct: Vec<f64> = (0..3)
            .map(|i| measure_score(&f, items.row(i), &user).unwrap())
            .collect();
        assert_eq!(r.scores, vec![direct[0], direct[2], direct[1]]);

        // empty candidates → empty, flagged
        let r = rerank_with_f(&[], &items, &user, &f, 3).unwrap();
        assert!(r.ids.is_empty() && r.truncated);
    }

    #[test]
    fn top_with_ties_extends_past_cutoff() {
        // 4 items: two at distance 0, two at distance 1; t=1 must pull in
        // both distance-0 items
        let bits = Matrix::from_vec(
            4,
            2,
            vec![1., 1., 1., 1., 1., -1., -1., 1.],
        )
        .unwrap();
        let codes = pack_codes(&bits).unwrap();
        let q = pack_codes(&Matrix::from_vec(1, 2, vec![1., 1.]).unwrap()).unwrap();
        let cands = top_with_ties(q.row(0), &codes, 1).unwrap();
        assert_eq!(cands, vec![0, 1]);
        let cands3 = top_with_ties(q.row(0), &codes, 3).unwrap();
        assert_eq!(cands3, vec![0, 1, 2, 3]);
    }
}

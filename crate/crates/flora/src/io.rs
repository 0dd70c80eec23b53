//! On-disk formats: `FLMX` embedding matrices, `FLNN` network
//! checkpoints, `FLMS` measure wrappers, `FLHM` hash-model checkpoints,
//! `FLHC` packed codes, and the multi-table index directory. All formats
//! are little-endian and round-trip bit-exactly. Writes go through a temp
//! file and rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};

use crate::error::{FloraError, Result};
use crate::hash_model::FloraModel;
use crate::index::PackedCodes;
use crate::measures::{MeasureKind, MeasureSpec};
use crate::nn::{Activation, DenseLayer, Matrix, MlpParams};

pub const FLMX_VERSION: u32 = 1;
pub const FLNN_VERSION: u32 = 1;
pub const FLMS_VERSION: u32 = 1;
pub const FLHM_VERSION: u32 = 1;
pub const FLHC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    User,
    Item,
}

impl Role {
    fn id(self) -> u8 {
        match self {
            Role::User => 0,
            Role::Item => 1,
        }
    }

    fn from_id(id: u8) -> Option<Role> {
        match id {
            0 => Some(Role::User),
            1 => Some(Role::Item),
            _ => None,
        }
    }
}

/// A set of user or item vectors. Stored as f32 on disk; all computation
/// runs on the f64 widening.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub role: Role,
    pub vectors: Matrix,
}

impl EmbeddingSet {
    pub fn n(&self) -> usize {
        self.vectors.rows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }
}

/// Cursor over an in-memory file image that reports byte offsets in
/// format errors.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: PathBuf,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], path: &Path) -> Self {
        Reader {
            buf,
            pos: 0,
            path: path.to_path_buf(),
        }
    }

    fn err(&self, detail: impl Into<String>) -> FloraError {
        FloraError::format(&self.path, detail, self.pos as u64)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(self.err(format!(
                "truncated: need {n} bytes, {} remain",
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, expect: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expect {
            return Err(FloraError::format(
                &self.path,
                format!(
                    "bad magic: expected {:?}, got {:?}",
                    String::from_utf8_lossy(expect),
                    String::from_utf8_lossy(got)
                ),
                (self.pos - 4) as u64,
            ));
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(LittleEndian::read_u64(self.take(8)?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(LittleEndian::read_f64(self.take(8)?))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8)?;
        let mut out = vec![0.0f64; n];
        LittleEndian::read_f64_into(bytes, &mut out);
        Ok(out)
    }

    fn version(&mut self, expect: u32, what: &str) -> Result<()> {
        let v = self.u32()?;
        if v != expect {
            return Err(FloraError::format(
                &self.path,
                format!("unsupported {what} version {v} (expected {expect})"),
                (self.pos - 4) as u64,
            ));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(FloraError::format(
                &self.path,
                format!("{} trailing bytes", self.buf.len() - self.pos),
                self.pos as u64,
            ));
        }
        Ok(())
    }
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| FloraError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| FloraError::io(&tmp, e))?;
    file.sync_all().map_err(|e| FloraError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| FloraError::io(path, e))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| FloraError::io(path, e))
}

// ---- FLMX: embedding matrix ----

pub fn matrix_to_bytes(set: &EmbeddingSet) -> Vec<u8> {
    let n = set.n();
    let dim = set.dim();
    let mut out = Vec::with_capacity(4 + 4 + 1 + 8 + 4 + n * dim * 4);
    out.extend_from_slice(b"FLMX");
    out.extend_from_slice(&FLMX_VERSION.to_le_bytes());
    out.push(set.role.id());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for &v in set.vectors.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn write_matrix(set: &EmbeddingSet, path: &Path) -> Result<()> {
    write_atomic(path, &matrix_to_bytes(set))
}

pub fn read_matrix(path: &Path) -> Result<EmbeddingSet> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf, path);
    r.magic(b"FLMX")?;
    r.version(FLMX_VERSION, "FLMX")?;
    let role = Role::from_id(r.u8()?).ok_or_else(|| r.err("bad role id"))?;
    let n = r.u64()? as usize;
    let dim = r.u32()? as usize;
    let bytes = r.take(n * dim * 4)?;
    r.finish()?;
    let mut data = vec![0.0f32; n * dim];
    LittleEndian::read_f32_into(bytes, &mut data);
    let vectors = Matrix::from_vec(n, dim, data.into_iter().map(f64::from).collect())
        .map_err(|e| FloraError::format(path, e.to_string(), 0))?;
    Ok(EmbeddingSet { role, vectors })
}

// ---- FLNN: network checkpoint ----

fn mlp_to_bytes(mlp: &MlpParams, out: &mut Vec<u8>) {
    out.extend_from_slice(b"FLNN");
    out.extend_from_slice(&FLNN_VERSION.to_le_bytes());
    out.extend_from_slice(&(mlp.layers.len() as u32).to_le_bytes());
    for layer in &mlp.layers {
        out.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        out.push(layer.activation.id());
        for &v in layer.weights.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &layer.bias {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn mlp_from_reader(r: &mut Reader) -> Result<MlpParams> {
    r.magic(b"FLNN")?;
    r.version(FLNN_VERSION, "FLNN")?;
    let layer_count = r.u32()? as usize;
    if layer_count == 0 {
        return Err(r.err("zero layers"));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let act = Activation::from_id(r.u8()?).map_err(|e| r.err(e.to_string()))?;
        let weights = r.f64_vec(in_dim * out_dim)?;
        let bias = r.f64_vec(out_dim)?;
        layers.push(DenseLayer {
            weights: Matrix::from_vec(in_dim, out_dim, weights)
                .map_err(|e| r.err(e.to_string()))?,
            bias,
            activation: act,
        });
    }
    MlpParams::new(layers).map_err(|e| r.err(e.to_string()))
}

pub fn write_mlp(mlp: &MlpParams, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    mlp_to_bytes(mlp, &mut out);
    write_atomic(path, &out)
}

pub fn read_mlp(path: &Path) -> Result<MlpParams> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf, path);
    let mlp = mlp_from_reader(&mut r)?;
    r.finish()?;
    Ok(mlp)
}

// ---- FLMS: measure wrapper ----

pub fn measure_to_bytes(spec: &MeasureSpec) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"FLMS");
    out.extend_from_slice(&FLMS_VERSION.to_le_bytes());
    out.push(spec.kind().id());
    out.extend_from_slice(&(spec.user_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(spec.item_dim() as u32).to_le_bytes());
    let (user_embed, item_embed, mlp, fm_factors, fm_linear, fm_bias) = spec.parts();
    if let Some(ue) = user_embed {
        mlp_to_bytes(ue, &mut out);
    }
    if let Some(ie) = item_embed {
        mlp_to_bytes(ie, &mut out);
    }
    if let Some(m) = mlp {
        mlp_to_bytes(m, &mut out);
    }
    if let (Some(factors), Some(linear)) = (fm_factors, fm_linear) {
        out.extend_from_slice(&(factors.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(factors.cols() as u32).to_le_bytes());
        for &v in factors.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in linear {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&fm_bias.to_le_bytes());
    }
    out
}

pub fn write_measure(spec: &MeasureSpec, path: &Path) -> Result<()> {
    write_atomic(path, &measure_to_bytes(spec))
}

pub fn read_measure(path: &Path) -> Result<MeasureSpec> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf, path);
    r.magic(b"FLMS")?;
    r.version(FLMS_VERSION, "FLMS")?;
    let kind = MeasureKind::from_id(r.u8()?).map_err(|e| r.err(e.to_string()))?;
    let user_dim = r.u32()? as usize;
    let item_dim = r.u32()? as usize;
    let spec = match kind {
        MeasureKind::ScaledCosine => MeasureSpec::from_parts(
            kind, user_dim, item_dim, None, None, None, None, None, 0.0,
        ),
        MeasureKind::MlpConcate => {
            let mlp = mlp_from_reader(&mut r)?;
            MeasureSpec::from_parts(kind, user_dim, item_dim, None, None, Some(mlp), None, None, 0.0)
        }
        MeasureKind::MlpEmSum => {
            let ue = mlp_from_reader(&mut r)?;
            let ie = mlp_from_reader(&mut r)?;
            let mlp = mlp_from_reader(&mut r)?;
            MeasureSpec::from_parts(
                kind, user_dim, item_dim, Some(ue), Some(ie), Some(mlp), None, None, 0.0,
            )
        }
        MeasureKind::DeepfmLite => {
            let mlp = mlp_from_reader(&mut r)?;
            let d = r.u32()? as usize;
            let k = r.u32()? as usize;
            let factors = Matrix::from_vec(d, k, r.f64_vec(d * k)?).map_err(|e| r.err(e.to_string()))?;
            let linear = r.f64_vec(d)?;
            let bias = r.f64()?;
            MeasureSpec::from_parts(
                kind,
                user_dim,
                item_dim,
                None,
                None,
                Some(mlp),
                Some(factors),
                Some(linear),
                bias,
            )
        }
    };
    r.finish()?;
    Ok(spec)
}

// ---- FLHM: hash-model checkpoint ----

pub fn model_to_bytes(model: &FloraModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"FLHM");
    out.extend_from_slice(&FLHM_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.m as u32).to_le_bytes());
    out.extend_from_slice(&(model.user_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(model.item_dim() as u32).to_le_bytes());
    mlp_to_bytes(&model.g1, &mut out);
    mlp_to_bytes(&model.g2, &mut out);
    mlp_to_bytes(&model.g0, &mut out);
    out
}

pub fn write_model(model: &FloraModel, path: &Path) -> Result<()> {
    write_atomic(path, &model_to_bytes(model))
}

pub fn read_model(path: &Path) -> Result<FloraModel> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf, path);
    r.magic(b"FLHM")?;
    r.version(FLHM_VERSION, "FLHM")?;
    let m = r.u32()? as usize;
    let user_dim = r.u32()? as usize;
    let item_dim = r.u32()? as usize;
    let g1 = mlp_from_reader(&mut r)?;
    let g2 = mlp_from_reader(&mut r)?;
    let g0 = mlp_from_reader(&mut r)?;
    r.finish()?;
    if g1.in_dim() != user_dim || g2.in_dim() != item_dim || g0.out_dim() != m {
        return Err(FloraError::format(path, "inconsistent model dims", 0));
    }
    Ok(FloraModel { g1, g2, g0, m })
}

// ---- FLHC: packed codes ----

pub fn codes_to_bytes(codes: &PackedCodes) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 + 8 + 4 + codes.words().len() * 8);
    out.extend_from_slice(b"FLHC");
    out.extend_from_slice(&FLHC_VERSION.to_le_bytes());
    out.extend_from_slice(&(codes.n() as u64).to_le_bytes());
    out.extend_from_slice(&(codes.m() as u32).to_le_bytes());
    for &w in codes.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn write_codes(codes: &PackedCodes, path: &Path) -> Result<()> {
    write_atomic(path, &codes_to_bytes(codes))
}

pub fn read_codes(path: &Path) -> Result<PackedCodes> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf, path);
    r.magic(b"FLHC")?;
    r.version(FLHC_VERSION, "FLHC")?;
    let n = r.u64()? as usize;
    let m = r.u32()? as usize;
    let wpr = m.div_ceil(64);
    let bytes = r.take(n * wpr * 8)?;
    r.finish()?;
    let mut words = vec![0u64; n * wpr];
    LittleEndian::read_u64_into(bytes, &mut words);
    PackedCodes::from_raw(n, m, words).map_err(|e| FloraError::format(path, e.to_string(), 16))
}

// ---- Multi-table index directory ----

/// Write one model checkpoint and one code file per table plus a
/// `manifest.txt` (table count, seeds, m).
pub fn write_index_dir(
    dir: &Path,
    tables: &[(FloraModel, PackedCodes)],
    seeds: &[u64],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| FloraError::io(dir, e))?;
    let mut manifest = String::new();
    manifest.push_str(&format!("tables={}\n", tables.len()));
    manifest.push_str(&format!("m={}\n", tables[0].0.m));
    let seed_strs: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
    manifest.push_str(&format!("seeds={}\n", seed_strs.join(",")));
    for (i, (model, codes)) in tables.iter().enumerate() {
        write_model(model, &dir.join(format!("table_{i:02}.flhm")))?;
        write_codes(codes, &dir.join(format!("table_{i:02}.flhc")))?;
    }
    write_atomic(&dir.join("manifest.txt"), manifest.as_bytes())
}

pub fn read_index_dir(dir: &Path) -> Result<(Vec<(FloraModel, PackedCodes)>, Vec<u64>)> {
    let manifest_path = dir.join("manifest.txt");
    let text = fs::read_to_string(&manifest_path).map_err(|e| FloraError::io(&manifest_path, e))?;
    let mut count = None;
    let mut seeds = Vec::new();
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("tables=") {
            count = Some(v.trim().parse::<usize>().map_err(|_| {
                FloraError::format(&manifest_path, "bad table count", 0)
            })?);
        } else if let Some(v) = line.strip_prefix("seeds=") {
            for s in v.split(',').filter(|s| !s.is_empty()) {
                seeds.push(s.trim().parse::<u64>().map_err(|_| {
                    FloraError::format(&manifest_path, "bad seed", 0)
                })?);
            }
        }
    }
    let count = count.ok_or_else(|| FloraError::format(&manifest_path, "missing table count", 0))?;
    let mut tables = Vec::with_capacity(count);
    for i in 0..count {
        let model = read_model(&dir.join(format!("table_{i:02}.flhm")))?;
        let codes = read_codes(&dir.join(format!("table_{i:02}.flhc")))?;
        tables.push((model, codes));
    }
    Ok((tables, seeds))
}

// ---- CSV ingestion ----

/// Parse `id,v1,...,vd` rows into an embedding set. Rows must be sorted
/// or at least dense in id; vectors land at their id's row.
pub fn read_csv_embeddings(path: &Path, role: Role) -> Result<EmbeddingSet> {
    let text = fs::read_to_string(path).map_err(|e| FloraError::io(path, e))?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let id: usize = parts
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|_| FloraError::format(path, format!("bad id on line {}", lineno + 1), 0))?;
        let vec: Vec<f64> = parts
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    FloraError::format(path, format!("bad value on line {}", lineno + 1), 0)
                })
            })
            .collect::<Result<_>>()?;
        if let Some(d) = dim {
            if vec.len() != d {
                return Err(FloraError::format(
                    path,
                    format!("inconsistent dim on line {}", lineno + 1),
                    0,
                ));
            }
        } else {
            dim = Some(vec.len());
        }
        rows.push((id, vec));
    }
    let dim = dim.ok_or_else(|| FloraError::format(path, "empty csv", 0))?;
    let n = rows.iter().map(|(id, _)| id + 1).max().unwrap_or(0);
    let mut data = vec![0.0; n * dim];
    for (id, vec) in rows {
        data[id * dim..(id + 1) * dim].copy_from_slice(&vec);
    }
    Ok(EmbeddingSet {
        role,
        vectors: Matrix::from_vec(n, dim, data)
            .map_err(|e| FloraError::format(path, e.to_string(), 0))?,
    })
}

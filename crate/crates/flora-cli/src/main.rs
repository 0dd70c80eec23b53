//! Command-line surface for the hashing pipeline: synthetic data,
//! measure construction, training, index building, querying, and
//! evaluation/ablation runs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flora::error::FloraError;
use flora::eval::{fpr_radius0, ground_truth, recall_curve, GroundTruth};
use flora::hash_model::{binarize, Domain, FloraModel, HashConfig};
use flora::index::{
    pack_codes, probe_radius0, rank_full_scan, rerank_with_f, top_with_ties, IndexTable,
    MultiTableIndex, PackedCodes,
};
use flora::io::{
    read_codes, read_csv_embeddings, read_index_dir, read_matrix, read_measure, read_model,
    write_atomic, write_index_dir, write_matrix, write_measure, write_model, EmbeddingSet, Role,
};
use flora::measures::{make_measure, MeasureKind};
use flora::nn::Matrix;
use flora::sampler::{SamplingStrategy, SamplingVariant};
use flora::synth::{gen_synth, SynthDistribution};
use flora::trainer::{log_to_csv, train, TrainConfig};

type Result<T> = std::result::Result<T, FloraError>;

#[derive(Parser)]
#[command(name = "flora", version, about = "Asymmetric learning-to-hash for fast ranking under a frozen measure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic user/item embedding files.
    GenSynth(GenSynthArgs),
    /// Initialize a frozen ranking measure and write it to disk.
    MakeMeasure(MakeMeasureArgs),
    /// Train a hash model against a frozen measure.
    Train(TrainArgs),
    /// Pack item codes for one or more trained models into an index directory.
    BuildIndex(BuildIndexArgs),
    /// Rank items for one user and print the top ids.
    Query(QueryArgs),
    /// Write recall/FPR CSVs for a trained model or index.
    Eval(EvalArgs),
    /// Train sampling/loss variants and write one recall curve per variant.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct GenSynthArgs {
    /// Flat key=value config file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// "gaussian" or "clusters:K".
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    out_users: Option<PathBuf>,
    #[arg(long)]
    out_items: Option<PathBuf>,
}

#[derive(Args)]
struct MakeMeasureArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// mlp_concate | mlp_em_sum | deepfm_lite | scaled_cosine
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    user_dim: Option<usize>,
    #[arg(long)]
    item_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TrainFlags {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// rand | rand_neg | rank_neg | score_neg
    #[arg(long)]
    variant: Option<String>,
    /// Probability of drawing a positive.
    #[arg(long)]
    p: Option<f64>,
    /// Positive pool size per user.
    #[arg(long)]
    n_p: Option<usize>,
    /// Code length in bits.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    lambda_u: Option<f64>,
    #[arg(long)]
    lambda_i: Option<f64>,
    /// Comma-separated tower hidden sizes, e.g. "256,256".
    #[arg(long)]
    towers: Option<String>,
    /// Comma-separated shared-head hidden sizes, e.g. "128".
    #[arg(long)]
    shared: Option<String>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<PathBuf>,
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Output model file (FLHM).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional training-log CSV (iter,loss_total,loss_c,loss_u,loss_i,val_recall).
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct BuildIndexArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    items: Option<PathBuf>,
    /// Trained model file; repeat for a multi-table index.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Comma-separated training seeds recorded in the manifest (defaults to 0..L).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Either a model file (with --codes) ...
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    codes: Option<PathBuf>,
    /// ... or an index directory (first table answers the query).
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    users: Option<PathBuf>,
    /// Row of the user in the users file.
    #[arg(long)]
    user: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
    /// Re-rank Hamming candidates by the frozen measure before printing.
    #[arg(long)]
    rerank: bool,
    /// Measure file, required with --rerank.
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Item embeddings, required with --rerank.
    #[arg(long)]
    items: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Index directory; enables the multi-table CSV.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    users: Option<PathBuf>,
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Ground-truth size.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Curve length.
    #[arg(long = "T")]
    t: Option<usize>,
    /// Recall curve CSV (t,recall).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multi-table CSV (L,recall,fpr); requires --index.
    #[arg(long)]
    out_tables: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<PathBuf>,
    /// Held-out users evaluated against the ground truth.
    #[arg(long)]
    test_users: Option<PathBuf>,
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Output directory for the per-variant CSVs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Compare sampling variants (rand, rand_neg, rank_neg, score_neg).
    #[arg(long)]
    samplers: bool,
    /// Compare loss variants (c, c+u, c+i, full).
    #[arg(long)]
    losses: bool,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[command(flatten)]
    train: TrainFlags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; anything else is usage
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                FloraError::Format { .. } => 2,
                FloraError::NonFinite { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynth(a) => cmd_gen_synth(a),
        Command::MakeMeasure(a) => cmd_make_measure(a),
        Command::Train(a) => cmd_train(a),
        Command::BuildIndex(a) => cmd_build_index(a),
        Command::Query(a) => cmd_query(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

// ---- config file ----

/// Flat key=value file; '#' starts a comment, blank lines ignored.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| FloraError::io(path, e))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    FloraError::Config(format!(
                        "{}:{}: expected key=value, got {raw:?}",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                values.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    /// Flag wins, then the config file, then the default.
    fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        self.opt(key, flag)
            .map(|v| v.unwrap_or(default))
    }

    fn opt<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| FloraError::Config(format!("bad value for {key}: {raw:?}"))),
            None => Ok(None),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<T> {
        self.opt(key, flag)?
            .ok_or_else(|| FloraError::Config(format!("missing required option --{key}")))
    }
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| FloraError::Config(format!("bad size list entry {p:?}")))
        })
        .collect()
}

/// Embeddings from the binary matrix format, or CSV when the path ends in .csv.
fn load_embeddings(path: &Path, role: Role) -> Result<EmbeddingSet> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv_embeddings(path, role)
    } else {
        read_matrix(path)
    }
}

fn resolve_train_config(cfg: &ConfigFile, flags: &TrainFlags) -> Result<TrainConfig> {
    let defaults = TrainConfig::default();
    let variant = match cfg.opt("variant", flags.variant.clone())? {
        Some(s) => SamplingVariant::parse(&s)?,
        None => defaults.strategy.variant,
    };
    let strategy = SamplingStrategy::new(
        variant,
        cfg.get("p", flags.p, defaults.strategy.p)?,
        cfg.get("n_p", flags.n_p, defaults.strategy.n_p)?,
    )?;
    let hash_defaults = HashConfig::default();
    let hash = HashConfig {
        m: cfg.get("m", flags.m, hash_defaults.m)?,
        lambda_u: cfg.get("lambda_u", flags.lambda_u, hash_defaults.lambda_u)?,
        lambda_i: cfg.get("lambda_i", flags.lambda_i, hash_defaults.lambda_i)?,
        tower_sizes: match cfg.opt("towers", flags.towers.clone())? {
            Some(s) => parse_sizes(&s)?,
            None => hash_defaults.tower_sizes,
        },
        shared_sizes: match cfg.opt("shared", flags.shared.clone())? {
            Some(s) => parse_sizes(&s)?,
            None => hash_defaults.shared_sizes,
        },
    };
    Ok(TrainConfig {
        iterations: cfg.get("iterations", flags.iterations, defaults.iterations)?,
        batch_size: cfg.get("batch_size", flags.batch_size, defaults.batch_size)?,
        seed: cfg.get("seed", flags.seed, defaults.seed)?,
        learning_rate: cfg.get("learning_rate", flags.learning_rate, defaults.learning_rate)?,
        strategy,
        hash,
        eval_every: cfg.get("eval_every", flags.eval_every, defaults.eval_every)?,
        validation_fraction: cfg.get(
            "validation_fraction",
            flags.validation_fraction,
            defaults.validation_fraction,
        )?,
    })
}

// ---- subcommands ----

fn cmd_gen_synth(a: GenSynthArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let n_users = cfg.require("users", a.users)?;
    let n_items = cfg.require("items", a.items)?;
    let dim = cfg.require("dim", a.dim)?;
    let seed = cfg.get("seed", a.seed, 0)?;
    let dist = match cfg.opt("dist", a.dist)? {
        Some(s) => SynthDistribution::parse(&s)?,
        None => SynthDistribution::Gaussian,
    };
    let out_users: PathBuf = cfg.require("out_users", a.out_users)?;
    let out_items: PathBuf = cfg.require("out_items", a.out_items)?;
    let (users, items) = gen_synth(n_users, n_items, dim, seed, dist)?;
    write_matrix(&users, &out_users)?;
    write_matrix(&items, &out_items)?;
    println!("wrote {} users to {}", users.n(), out_users.display());
    println!("wrote {} items to {}", items.n(), out_items.display());
    Ok(())
}

fn cmd_make_measure(a: MakeMeasureArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let kind = MeasureKind::parse(&cfg.require::<String>("kind", a.kind)?)?;
    let user_dim = cfg.require("user_dim", a.user_dim)?;
    let item_dim = cfg.require("item_dim", a.item_dim)?;
    let seed = cfg.get("seed", a.seed, 0)?;
    let out: PathBuf = cfg.require("out", a.out)?;
    let spec = make_measure(kind, user_dim, item_dim, seed)?;
    write_measure(&spec, &out)?;
    println!("wrote {} measure to {}", kind.name(), out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let users_path: PathBuf = cfg.require("users", a.users)?;
    let items_path: PathBuf = cfg.require("items", a.items)?;
    let measure_path: PathBuf = cfg.require("measure", a.measure)?;
    let out: PathBuf = cfg.require("out", a.out)?;
    let log_path: Option<PathBuf> = cfg.opt("log", a.log)?;
    let train_cfg = resolve_train_config(&cfg, &a.train)?;

    let users = load_embeddings(&users_path, Role::User)?;
    let items = load_embeddings(&items_path, Role::Item)?;
    let f = read_measure(&measure_path)?;
    let outcome = train(&train_cfg, &users.vectors, &items.vectors, &f)?;
    write_model(&outcome.model, &out)?;
    if let Some(p) = log_path {
        write_atomic(&p, log_to_csv(&outcome.log).as_bytes())?;
    }
    println!(
        "trained {} iterations; best checkpoint at iter {} (val recall {:.4}); model in {}",
        train_cfg.iterations,
        outcome.best_iter,
        outcome.best_recall,
        out.display()
    );
    Ok(())
}

fn cmd_build_index(a: BuildIndexArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let items_path: PathBuf = cfg.require("items", a.items)?;
    let out: PathBuf = cfg.require("out", a.out)?;
    let model_paths: Vec<PathBuf> = if a.models.is_empty() {
        match cfg.opt::<String>("models", None)? {
            Some(s) => s.split(',').map(|p| PathBuf::from(p.trim())).collect(),
            None => return Err(FloraError::Config("missing required option --model".into())),
        }
    } else {
        a.models
    };
    let seeds: Vec<u64> = match cfg.opt::<String>("seeds", a.seeds)? {
        Some(s) => s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| FloraError::Config(format!("bad seed {p:?}")))
            })
            .collect::<Result<_>>()?,
        None => (0..model_paths.len() as u64).collect(),
    };
    if seeds.len() != model_paths.len() {
        return Err(FloraError::Config(format!(
            "{} seeds for {} models",
            seeds.len(),
            model_paths.len()
        )));
    }
    let items = load_embeddings(&items_path, Role::Item)?;
    let mut tables = Vec::with_capacity(model_paths.len());
    for path in &model_paths {
        let model = read_model(path)?;
        let h = model.encode_continuous(Domain::Item, &items.vectors)?;
        let codes = pack_codes(&binarize(&h))?;
        tables.push((model, codes));
    }
    write_index_dir(&out, &tables, &seeds)?;
    println!("wrote {}-table index to {}", tables.len(), out.display());
    Ok(())
}

/// Load (model, item codes) either from --model/--codes or the first
/// table of --index.
fn load_single_table(
    cfg: &ConfigFile,
    model: Option<PathBuf>,
    codes: Option<PathBuf>,
    index: Option<PathBuf>,
) -> Result<(FloraModel, Option<PackedCodes>)> {
    if let Some(dir) = cfg.opt::<PathBuf>("index", index)? {
        let (mut tables, _) = read_index_dir(&dir)?;
        let (model, codes) = tables.remove(0);
        return Ok((model, Some(codes)));
    }
    let model_path: PathBuf = cfg.require("model", model)?;
    let model = read_model(&model_path)?;
    let codes = match cfg.opt::<PathBuf>("codes", codes)? {
        Some(p) => Some(read_codes(&p)?),
        None => None,
    };
    Ok((model, codes))
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let users_path: PathBuf = cfg.require("users", a.users)?;
    let user_row = cfg.require("user", a.user)?;
    let top = cfg.get("top", a.top, 10)?;
    let (model, codes) = load_single_table(&cfg, a.model, a.codes, a.index)?;
    let codes = codes.ok_or_else(|| {
        FloraError::Config("query needs item codes: pass --codes or --index".into())
    })?;

    let users = load_embeddings(&users_path, Role::User)?;
    if user_row >= users.n() {
        return Err(FloraError::Config(format!(
            "user row {user_row} out of range (file has {})",
            users.n()
        )));
    }
    let user = users.vectors.row(user_row);
    let x = Matrix::from_vec(1, user.len(), user.to_vec())?;
    let h = model.encode_continuous(Domain::User, &x)?;
    let query: Vec<u64> = pack_codes(&binarize(&h))?.row(0).to_vec();

    if a.rerank {
        let measure_path: PathBuf = cfg.require("measure", a.measure)?;
        let items_path: PathBuf = cfg.require("items", a.items)?;
        let f = read_measure(&measure_path)?;
        let items = load_embeddings(&items_path, Role::Item)?;
        let candidates = top_with_ties(&query, &codes, top)?;
        let reranked = rerank_with_f(&candidates, &items.vectors, user, &f, top)?;
        for id in &reranked.ids {
            println!("{id}");
        }
    } else {
        let ranked = rank_full_scan(&query, &codes, top)?;
        for id in &ranked.ids {
            println!("{id}");
        }
    }
    Ok(())
}

/// Hamming full-scan rankings of every user, truncated to t.
fn full_scan_rankings(
    model: &FloraModel,
    users: &Matrix,
    codes: &PackedCodes,
    t: usize,
) -> Result<Vec<Vec<u32>>> {
    let h = model.encode_continuous(Domain::User, users)?;
    let packed = pack_codes(&binarize(&h))?;
    let mut out = Vec::with_capacity(users.rows());
    for i in 0..users.rows() {
        out.push(rank_full_scan(packed.row(i), codes, t)?.ids);
    }
    Ok(out)
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let users_path: PathBuf = cfg.require("users", a.users)?;
    let items_path: PathBuf = cfg.require("items", a.items)?;
    let measure_path: PathBuf = cfg.require("measure", a.measure)?;
    let k = cfg.get("K", a.k, 10)?;
    let t = cfg.get("T", a.t, 200)?;
    let out: PathBuf = cfg.require("out", a.out)?;
    let out_tables: Option<PathBuf> = cfg.opt("out_tables", a.out_tables)?;
    let index_dir = cfg.opt::<PathBuf>("index", a.index.clone())?;

    let users = load_embeddings(&users_path, Role::User)?;
    let items = load_embeddings(&items_path, Role::Item)?;
    let f = read_measure(&measure_path)?;
    let gt = ground_truth(&users.vectors, &items.vectors, &f, k)?;

    let tables = match &index_dir {
        Some(dir) => read_index_dir(dir)?.0,
        None => {
            let model = read_model(&cfg.require::<PathBuf>("model", a.model)?)?;
            let h = model.encode_continuous(Domain::Item, &items.vectors)?;
            let codes = pack_codes(&binarize(&h))?;
            vec![(model, codes)]
        }
    };

    let rankings = full_scan_rankings(&tables[0].0, &users.vectors, &tables[0].1, t)?;
    let curve = recall_curve(&rankings, &gt, t)?;
    write_atomic(&out, curve.to_csv().as_bytes())?;
    println!("wrote recall curve ({} rows) to {}", t, out.display());

    if let Some(path) = out_tables {
        if index_dir.is_none() {
            return Err(FloraError::Config("--out-tables requires --index".into()));
        }
        let csv = multi_table_csv(&tables, &users.vectors, &gt, items.n())?;
        write_atomic(&path, csv.as_bytes())?;
        println!("wrote multi-table stats to {}", path.display());
    }
    Ok(())
}

/// Radius-0 probing recall/FPR for each table-count prefix 1..=L.
fn multi_table_csv(
    tables: &[(FloraModel, PackedCodes)],
    users: &Matrix,
    gt: &GroundTruth,
    n_items: usize,
) -> Result<String> {
    let index_tables: Vec<IndexTable> = tables
        .iter()
        .map(|(m, c)| IndexTable::new(m.clone(), c.clone()))
        .collect();
    let mut csv = String::from("L,recall,fpr\n");
    for l in 1..=index_tables.len() {
        let index = MultiTableIndex::new(index_tables[..l].to_vec())?;
        let mut recall_sum = 0.0;
        let mut fpr_sum = 0.0;
        for u in 0..users.rows() {
            let user = users.row(u);
            let query_codes: Vec<Vec<u64>> = index
                .tables
                .iter()
                .map(|t| t.query_code(user))
                .collect::<Result<_>>()?;
            let cand = probe_radius0(&query_codes, &index)?;
            let gt_u = &gt.per_user[u];
            let hits = cand.iter().filter(|id| gt_u.contains(id)).count();
            recall_sum += hits as f64 / gt.k as f64;
            fpr_sum += fpr_radius0(cand.iter().copied(), gt_u, n_items);
        }
        let n = users.rows() as f64;
        csv.push_str(&format!("{},{},{}\n", l, recall_sum / n, fpr_sum / n));
    }
    Ok(csv)
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    if !a.samplers && !a.losses {
        return Err(FloraError::Config("pass --samplers and/or --losses".into()));
    }
    let users_path: PathBuf = cfg.require("users", a.users)?;
    let test_users_path: PathBuf = cfg.require("test_users", a.test_users)?;
    let items_path: PathBuf = cfg.require("items", a.items)?;
    let measure_path: PathBuf = cfg.require("measure", a.measure)?;
    let out_dir: PathBuf = cfg.require("out_dir", a.out_dir)?;
    let k = cfg.get("K", a.k, 10)?;
    let t = cfg.get("T", a.t, 200)?;
    let base = resolve_train_config(&cfg, &a.train)?;

    let users = load_embeddings(&users_path, Role::User)?;
    let test_users = load_embeddings(&test_users_path, Role::User)?;
    let items = load_embeddings(&items_path, Role::Item)?;
    let f = read_measure(&measure_path)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| FloraError::io(&out_dir, e))?;
    let gt = ground_truth(&test_users.vectors, &items.vectors, &f, k)?;

    let run_one = |name: &str, cfg: &TrainConfig| -> Result<()> {
        let outcome = train(cfg, &users.vectors, &items.vectors, &f)?;
        let h = outcome.model.encode_continuous(Domain::Item, &items.vectors)?;
        let codes = pack_codes(&binarize(&h))?;
        let rankings = full_scan_rankings(&outcome.model, &test_users.vectors, &codes, t)?;
        let curve = recall_curve(&rankings, &gt, t)?;
        let path = out_dir.join(format!("{name}.csv"));
        write_atomic(&path, curve.to_csv().as_bytes())?;
        println!(
            "{name}: recall@{t} = {:.4} -> {}",
            curve.at(t),
            path.display()
        );
        Ok(())
    };

    if a.samplers {
        for variant in [
            SamplingVariant::Rand,
            SamplingVariant::RandNeg,
            SamplingVariant::RankNeg,
            SamplingVariant::ScoreNeg,
        ] {
            let mut cfg = base.clone();
            cfg.strategy = SamplingStrategy::new(variant, base.strategy.p, base.strategy.n_p)?;
            run_one(&format!("sampling_{}", variant.name()), &cfg)?;
        }
    }
    if a.losses {
        let (lu, li) = (base.hash.lambda_u, base.hash.lambda_i);
        for (name, lambda_u, lambda_i) in [
            ("loss_c", 0.0, 0.0),
            ("loss_c_u", lu, 0.0),
            ("loss_c_i", 0.0, li),
            ("loss_full", lu, li),
        ] {
            let mut cfg = base.clone();
            cfg.hash.lambda_u = lambda_u;
            cfg.hash.lambda_i = lambda_i;
            run_one(name, &cfg)?;
        }
    }
    Ok(())
}

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::analysis::{count_consistent_example, dump_predictions, gradcheck};
use super::eval::{evaluate, median, ThreeUttsMode};
use crate::data::{decompose, generate, parse_dataset, write_dataset, RawExample, SyntheticConfig, TrainingExample};
use crate::lang::{Vocabulary, DEFAULT_BUDGET};
use crate::learn::{train_loop, Algo, Metrics, TrainConfig};
use crate::policy::{checkpoint, Dims, HistoryKind, Model, Params, WordVectors};
use crate::worlds::Domain;

type Error = Box<dyn std::error::Error>;

#[derive(Debug, Parser)]
#[command(name = "sconeparse", about = "Train and analyze semantic parsers from denotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a policy; writes metrics.csv and checkpoints into --out.
    Train(TrainArgs),
    /// Denotation accuracy of one or more checkpoints (one per seed).
    Eval(EvalArgs),
    /// Count reward-earning programs by bounded enumeration.
    Enumerate(EnumerateArgs),
    /// Top-k predictions with probabilities and reward flags.
    Dump(DumpArgs),
    /// Write a synthetic dataset.
    GenSynthetic(GenArgs),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Word vector file (`word v1 … vd` per line).
    #[arg(long, conflicts_with = "random_embeddings")]
    embeddings: Option<PathBuf>,
    /// Seeded random word vectors (seed taken from --seed).
    #[arg(long)]
    random_embeddings: bool,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset file; omit to use seeded synthetic examples.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of synthetic examples when --data is absent.
    #[arg(long, default_value_t = 100)]
    synthetic: usize,
    #[arg(long, default_value_t = 5)]
    utterances: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    domain: Domain,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<Algo>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    baseline: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    history: Option<HistoryKind>,
    /// Sets word, hidden, token and query widths at once.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    eval_3utts_mode: Option<ThreeUttsMode>,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Training data; omit for synthetic.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    synthetic: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    domain: Domain,
    /// Repeat once per seed; the median is reported.
    #[arg(long, required = true)]
    checkpoint: Vec<PathBuf>,
    #[arg(long, default_value_t = 32)]
    beam: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ThreeUttsMode::Truncate)]
    eval_3utts_mode: ThreeUttsMode,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[arg(long)]
    domain: Domain,
    #[arg(long, default_value_t = 7)]
    cap_h: usize,
    #[arg(long, default_value_t = 5_000_000)]
    node_cap: u64,
    #[arg(long, default_value_t = 20)]
    limit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[arg(long)]
    domain: Domain,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 32)]
    beam: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    domain: Domain,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    utterances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    /// Check one embedder only; both by default.
    #[arg(long)]
    history: Option<HistoryKind>,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code: 2 for usage errors, 1 for runtime failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Dump(a) => dump(a),
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Gradcheck(a) => return run_gradcheck(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn word_vectors(args: &EmbeddingArgs, seed: u64, dim: usize) -> Result<WordVectors<f64>, Error> {
    match &args.embeddings {
        Some(path) => Ok(WordVectors::load(path, dim)?),
        None => Ok(WordVectors::random(seed, dim)),
    }
}

fn load_examples(domain: Domain, data: &DataArgs, seed: u64) -> Result<Vec<RawExample>, Error> {
    match &data.data {
        Some(path) => Ok(parse_dataset(domain, path)?),
        None => Ok(generate(&SyntheticConfig { domain, examples: data.synthetic, utterances: data.utterances, seed })?),
    }
}

fn load_model(domain: Domain, path: &Path, emb: &EmbeddingArgs, seed: u64) -> Result<Model<f64>, Error> {
    let (params, _) = checkpoint::load::<f64>(path)?;
    let words = word_vectors(emb, seed, params.dims.word)?;
    let vocab = Vocabulary::new(domain);
    if params.vocab_size() != vocab.len() {
        return Err(format!("checkpoint has {} tokens, {domain} has {}", params.vocab_size(), vocab.len()).into());
    }
    Ok(Model::new(vocab, words, params, DEFAULT_BUDGET))
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig, Error> {
    let mut cfg: TrainConfig = match &a.config {
        Some(path) => toml::from_str(&fs::read_to_string(path)?)?,
        None => TrainConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set!(algo, beam, beta, baseline, lr, seed, iters, batch, history, eval_every, eval_3utts_mode);
    if a.epsilon.is_some() {
        cfg.epsilon = a.epsilon;
    }
    if let Some(d) = a.dim {
        cfg.dims = Dims { word: d, hidden: d, token: d, query: d };
    }
    Ok(cfg)
}

fn train(a: TrainArgs) -> Result<(), Error> {
    let cfg = train_config(&a)?;
    if cfg.beam == 0 || cfg.batch == 0 {
        return Err("--beam and --batch must be positive".into());
    }
    fs::create_dir_all(&a.out)?;
    let raw = match &a.train {
        Some(path) => parse_dataset(a.domain, path)?,
        None => generate(&SyntheticConfig { domain: a.domain, examples: a.synthetic, utterances: 5, seed: cfg.seed })?,
    };
    let valid = match &a.valid {
        Some(path) => parse_dataset(a.domain, path)?,
        None => Vec::new(),
    };
    let train: Vec<TrainingExample> = raw.iter().flat_map(decompose).collect();
    let vocab = Vocabulary::new(a.domain);
    let params = Params::init(cfg.seed, cfg.dims, vocab.len(), cfg.history);
    let words = word_vectors(&a.embeddings, cfg.seed, cfg.dims.word)?;
    let mut model = Model::new(vocab, words, params, cfg.budget);
    fs::write(a.out.join("config.toml"), toml::to_string(&cfg)?)?;
    let mut metrics = Metrics::to_writer(Box::new(fs::File::create(a.out.join("metrics.csv"))?))?;
    let outcome = train_loop(&mut model, &cfg, &train, &valid, &mut metrics, Some(&a.out))?;
    println!(
        "iterations {} updates {} best_valid {}",
        outcome.iterations,
        outcome.updates,
        outcome.best_valid.map_or("n/a".to_owned(), |v| format!("{v:.4}"))
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), Error> {
    let examples = load_examples(a.domain, &a.data, a.seed)?;
    let mut all = Vec::new();
    let mut three = Vec::new();
    for path in &a.checkpoint {
        let model = load_model(a.domain, path, &a.embeddings, a.seed)?;
        let r = evaluate(&model, &examples, a.beam, a.eval_3utts_mode);
        let a3 = r.acc3().map_or("n/a".to_owned(), |v| format!("{v:.4}"));
        println!("{}\tall {:.4}\t3utts {a3}", path.display(), r.acc_all());
        all.push(r.acc_all());
        three.extend(r.acc3());
    }
    let fmt = |m: Option<f64>| m.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
    println!("median\tall {}\t3utts {}", fmt(median(&all)), fmt(median(&three)));
    Ok(())
}

fn enumerate(a: EnumerateArgs) -> Result<(), Error> {
    let examples = load_examples(a.domain, &a.data, a.seed)?;
    let vocab = Vocabulary::new(a.domain);
    let mut total = 0u64;
    let mut n = 0usize;
    for ex in examples.iter().take(a.limit) {
        let c = count_consistent_example(&vocab, ex, a.cap_h, a.node_cap);
        let bound = if c.exhausted { "" } else { ">=" };
        println!("{}\t{bound}{}\tvisited {}", ex.id, c.count, c.visited);
        total += c.count;
        n += 1;
    }
    if n > 0 {
        println!("mean (lower bound) {:.1} over {n} examples, capH {}", total as f64 / n as f64, a.cap_h);
    }
    Ok(())
}

fn dump(a: DumpArgs) -> Result<(), Error> {
    let examples: Vec<TrainingExample> =
        load_examples(a.domain, &a.data, a.seed)?.iter().map(TrainingExample::from).collect();
    let model = load_model(a.domain, &a.checkpoint, &a.embeddings, a.seed)?;
    let text = dump_predictions(&model, &examples, a.beam, a.k);
    match &a.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gen_synthetic(a: GenArgs) -> Result<(), Error> {
    let examples =
        generate(&SyntheticConfig { domain: a.domain, examples: a.n, utterances: a.utterances, seed: a.seed })?;
    fs::write(&a.out, write_dataset(&examples))?;
    Ok(())
}

fn run_gradcheck(a: GradcheckArgs) -> i32 {
    let kinds = match a.history {
        Some(k) => vec![k],
        None => vec![HistoryKind::Tokens, HistoryKind::Stack],
    };
    let r = gradcheck(a.seed, a.pairs, &kinds, Dims::tiny(), 1e-4);
    println!("max relative error {:.3e} over {} entries, {} pairs (worst {})", r.max_rel_error, r.entries, r.pairs, r.worst);
    i32::from(r.max_rel_error >= 1e-4)
}

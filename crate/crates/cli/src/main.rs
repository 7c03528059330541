//! `qsbps` command-line driver.
//!
//! Every run writes a config echo (`<output>.config.json` unless `--echo`
//! says otherwise) holding the argument vector and the resolved settings;
//! `qsbps --from-config <echo>` runs it again.
//!
//! Exit codes: 0 ok, 2 usage, 3 input data error, 4 internal error.

use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsbps::corpus::{
    convert_raw, load_corpus, read_json_lines, synthetic_records, write_records, EntityDictionary, RawProduct,
};
use qsbps::evaluation::{self, EvalConfig, PolicyKind, SweepAxes, Workload};
use qsbps::session::FinishReason;
use qsbps::simulator::{run_session, SimulationTrace};
use qsbps::trainer::{train_all, SplitConfig};
use qsbps::{
    rng, Answer, Corpus, ErrorModel, FieldMode, ModelSet, Oracle, SelectionParams, Session, SessionConfig, SplitPart,
    SplitRatios, SyntheticSpec, TrainingMode,
};
use qsbps_service::{AppState, Catalog, ServiceConfig, SessionDefaults};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "qsbps",
    version,
    about = "Interactive product search by sequential Bayesian questioning"
)]
struct Cli {
    /// Worker threads for training and evaluation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Where to write the config echo.
    #[arg(long, global = true)]
    echo: Option<PathBuf>,
    /// Re-run the command recorded in a config echo file.
    #[arg(long)]
    from_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Convert raw product text to a corpus file, or validate a corpus file.
    Ingest(IngestArgs),
    /// Write a synthetic corpus.
    GenSynthetic(SyntheticArgs),
    /// Train topic beliefs and question rewards.
    Train(TrainArgs),
    /// Simulate sessions and write their traces as JSON.
    Simulate(SimulateArgs),
    /// Evaluate a model over a grid of question budgets.
    Evaluate(EvaluateArgs),
    /// Sweep gamma (and beta) on the validation split.
    Sweep(SweepArgs),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
    /// Run an interactive session in the terminal.
    Session(SessionArgs),
}

#[derive(Args, Debug, Serialize)]
struct IngestArgs {
    /// Corpus file, or raw product file when `--dictionary` is given.
    #[arg(long)]
    input: PathBuf,
    /// Entity dictionary, one entity per line.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "metadata_only")]
    field_mode: FieldMode,
}

#[derive(Args, Debug, Serialize)]
struct SyntheticArgs {
    #[arg(long, default_value_t = 8)]
    n_products: usize,
    #[arg(long, default_value_t = 3)]
    n_bit_entities: u32,
    #[arg(long, default_value_t = 0)]
    n_distractors: usize,
    #[arg(long, default_value_t = 1)]
    n_topics: usize,
    #[arg(long, default_value_t = 0.1)]
    density_min: f64,
    #[arg(long, default_value_t = 0.5)]
    density_max: f64,
    #[arg(long, default_value_t = 1)]
    max_tf: u32,
    #[arg(long, default_value_t = 0.0)]
    review_fraction: f64,
    /// Zipf exponent for purchase popularity.
    #[arg(long)]
    purchase_skew: Option<f64>,
    #[arg(long, default_value_t = 0)]
    purchases_per_topic: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SplitArgs {
    /// Train, validation and test ratios.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.6, 0.1, 0.3])]
    split: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    split_seed: u64,
}

impl SplitArgs {
    fn config(&self) -> Result<SplitConfig, CliError> {
        Ok(SplitConfig {
            ratios: SplitRatios::new(self.split[0], self.split[1], self.split[2])?,
            seed: self.split_seed,
        })
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "metadata_only")]
    field_mode: FieldMode,
    #[arg(long, default_value = "duet")]
    mode: TrainingMode,
    #[command(flatten)]
    split: SplitArgs,
    /// Seed of the purchase order used during training.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
    /// Corpus file; defaults to the one recorded in the model.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self) -> Result<(ModelSet, Corpus), CliError> {
        let models = ModelSet::load(&self.model)?;
        let path = match (&self.corpus, &models.corpus) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => PathBuf::from(p),
            (None, None) => return Err(CliError::Usage("model does not record a corpus; pass --corpus".into())),
        };
        let corpus = load_corpus(&path, models.field_mode)?;
        Ok((models, corpus))
    }
}

#[derive(Args, Debug, Serialize, Clone, Copy)]
struct SelectArgs {
    /// Weight of the question reward.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Weight of the answer-noise penalty.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Answer error model: none, tf, or fixed:<rate>.
    #[arg(long, default_value = "none")]
    noise: ErrorModel,
}

impl SelectArgs {
    fn params(&self) -> Result<SelectionParams, CliError> {
        self.noise.validate()?;
        Ok(SelectionParams::new(self.gamma, self.beta)?)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum PartArg {
    Train,
    Validation,
    Test,
    All,
}

impl From<PartArg> for SplitPart {
    fn from(p: PartArg) -> Self {
        match p {
            PartArg::Train => SplitPart::Train,
            PartArg::Validation => SplitPart::Validation,
            PartArg::Test => SplitPart::Test,
            PartArg::All => SplitPart::All,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum PolicyArg {
    Qsbps,
    Random,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Only this topic.
    #[arg(long)]
    topic: Option<String>,
    /// Only this target product (requires --topic).
    #[arg(long, requires = "topic")]
    target: Option<String>,
    #[command(flatten)]
    select: SelectArgs,
    #[arg(long, default_value_t = 15)]
    nq: usize,
    #[arg(long, value_enum, default_value = "test")]
    part: PartArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Question budgets, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize])]
    nq: Vec<usize>,
    #[command(flatten)]
    select: SelectArgs,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "test")]
    part: PartArg,
    #[arg(long, value_enum, default_value = "qsbps")]
    policy: PolicyArg,
    /// CSV report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 15, 20, 25, 30])]
    nq: Vec<usize>,
    /// Gamma axis; 0 to 1 in steps of 0.1 when omitted.
    #[arg(long, value_delimiter = ',')]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    betas: Vec<f64>,
    /// Answer error model: none, tf, or fixed:<rate>.
    #[arg(long, default_value = "none")]
    noise: ErrorModel,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory for sweep.csv, heatmap.csv and optimal_gamma.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ServeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Idle session lifetime in seconds.
    #[arg(long, default_value_t = 1800)]
    ttl_secs: u64,
    #[command(flatten)]
    select: SelectArgs,
    /// Default question budget for new sessions.
    #[arg(long, default_value_t = 15)]
    nq_limit: usize,
}

#[derive(Args, Debug, Serialize)]
struct SessionArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Topic to search; the first topic when omitted.
    #[arg(long)]
    topic: Option<String>,
    #[command(flatten)]
    select: SelectArgs,
    #[arg(long, default_value_t = 15)]
    nq_limit: usize,
    /// Answers to apply instead of reading stdin, e.g. `y,n,s`.
    #[arg(long, value_delimiter = ',')]
    replay: Option<Vec<String>>,
    /// Write the session transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Products listed at the end.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<qsbps::Error> for CliError {
    fn from(e: qsbps::Error) -> Self {
        let msg = e.to_string();
        match e {
            qsbps::Error::InvalidArgument(_) => CliError::Usage(msg),
            qsbps::Error::Csv(_) => CliError::Data(msg),
            e if e.is_data_error() => CliError::Data(msg),
            _ => CliError::Internal(msg),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn echo_path_for(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn write_echo(path: &Path, argv: &[String], command: &Command) -> Result<(), CliError> {
    let body = json!({
        "qsbps_version": env!("CARGO_PKG_VERSION"),
        "argv": argv,
        "config": command,
    });
    let mut text = serde_json::to_string_pretty(&body).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn default_echo(command: &Command) -> PathBuf {
    match command {
        Command::Ingest(a) => a
            .out
            .as_deref()
            .map(echo_path_for)
            .unwrap_or_else(|| "qsbps-ingest.config.json".into()),
        Command::GenSynthetic(a) => echo_path_for(&a.out),
        Command::Train(a) => echo_path_for(&a.out),
        Command::Simulate(a) => echo_path_for(&a.out),
        Command::Evaluate(a) => a
            .out
            .as_deref()
            .map(echo_path_for)
            .unwrap_or_else(|| "qsbps-evaluate.config.json".into()),
        Command::Sweep(a) => a.out_dir.join("sweep.config.json"),
        Command::Serve(_) => "qsbps-serve.config.json".into(),
        Command::Session(_) => "qsbps-session.config.json".into(),
    }
}

fn ingest(a: &IngestArgs) -> Result<(), CliError> {
    let corpus = match &a.dictionary {
        Some(dict_path) => {
            let out = a
                .out
                .as_ref()
                .ok_or_else(|| CliError::Usage("--out is required with --dictionary".into()))?;
            let text = fs::read_to_string(dict_path).map_err(|e| io_error(dict_path, e))?;
            let dict = EntityDictionary::from_lines(&text);
            let raw: Vec<RawProduct> = read_json_lines(&a.input)?;
            let records: Vec<_> = raw.into_iter().map(|r| convert_raw(r, &dict)).collect();
            write_records(out, &records)?;
            Corpus::from_records(records, a.field_mode)?
        }
        None => {
            let corpus = load_corpus(&a.input, a.field_mode)?;
            if let Some(out) = &a.out {
                let records: Vec<_> = read_json_lines(&a.input)?;
                write_records(out, &records)?;
            }
            corpus
        }
    };
    println!(
        "{} products, {} topics with at least two products, {} entities",
        corpus.products().len(),
        corpus.topics().len(),
        corpus.vocabulary().len()
    );
    Ok(())
}

fn gen_synthetic(a: &SyntheticArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        n_products: a.n_products,
        n_bit_entities: a.n_bit_entities,
        n_distractors: a.n_distractors,
        n_topics: a.n_topics,
        distractor_density: (a.density_min, a.density_max),
        max_tf: a.max_tf,
        review_fraction: a.review_fraction,
        purchase_skew: a.purchase_skew,
        purchases_per_topic: a.purchases_per_topic,
        seed: a.seed,
    };
    write_records(&a.out, &synthetic_records(&spec)?)?;
    Ok(())
}

fn train(a: &TrainArgs) -> Result<(), CliError> {
    let split = a.split.config()?;
    let corpus = load_corpus(&a.corpus, a.field_mode)?;
    let workload = Workload::build(&corpus, a.field_mode, split.ratios, split.seed)?;
    if workload.splits.is_empty() {
        return Err(CliError::Data("no topic has enough purchases to split".into()));
    }
    let mut models = train_all(&corpus, &workload.splits, a.mode, a.field_mode, a.seed)?;
    models.corpus = Some(a.corpus.to_string_lossy().into_owned());
    models.split = Some(split);
    models.save(&a.out)?;
    eprintln!("trained {} topics ({})", models.len(), a.mode);
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let params = a.select.params()?;
    let (models, corpus) = a.model.load()?;
    let workload = Workload::for_models(&corpus, &models)?;
    let mut jobs = Vec::new();
    for (index, split) in workload.indexes.iter().zip(&workload.splits) {
        if a.topic.as_deref().is_some_and(|t| t != index.topic_id()) {
            continue;
        }
        let targets = match &a.target {
            Some(p) => vec![index
                .product_position(p)
                .ok_or_else(|| CliError::Data(format!("unknown product `{p}` in topic `{}`", index.topic_id())))?],
            None => split.part(a.part.into()),
        };
        for (pos, t) in targets.into_iter().enumerate() {
            jobs.push((index, pos, t));
        }
    }
    if let Some(t) = &a.topic {
        if jobs.is_empty() && !workload.indexes.iter().any(|i| i.topic_id() == t) {
            return Err(CliError::Data(format!("unknown topic `{t}`")));
        }
    }
    let traces: Vec<SimulationTrace> = jobs
        .par_iter()
        .map(|&(index, pos, target)| {
            let model = models
                .get(index.topic_id())
                .expect("workload topics come from the model");
            let seed = rng::derive_seed(&[a.seed, rng::stable_hash(index.topic_id()), pos as u64]);
            let config = SessionConfig::new(params, a.select.noise, a.nq);
            run_session(
                model,
                Arc::clone(index),
                target,
                config,
                Oracle::for_model(a.select.noise, seed),
            )
        })
        .collect::<Result<_, _>>()?;
    let mut text = serde_json::to_string_pretty(&traces).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_file(&a.out, text.as_bytes())
}

fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let params = a.select.params()?;
    let (models, corpus) = a.model.load()?;
    let workload = Workload::for_models(&corpus, &models)?;
    let cfg = EvalConfig {
        n_q: a.nq.clone(),
        params,
        error_model: a.select.noise,
        trials: a.trials,
        seed: a.seed,
        part: a.part.into(),
        policy: match a.policy {
            PolicyArg::Qsbps => PolicyKind::Qsbps,
            PolicyArg::Random => PolicyKind::Random,
        },
    };
    let reports = match a.policy {
        PolicyArg::Qsbps => evaluation::evaluate(&models, &workload.indexes, &workload.splits, &cfg)?,
        PolicyArg::Random => evaluation::random_baseline(&workload.indexes, &workload.splits, &cfg)?,
    };
    let mut buf = Vec::new();
    evaluation::write_reports_csv(&mut buf, &reports, cfg.part)?;
    match &a.out {
        Some(p) => write_file(p, &buf),
        None => io::stdout()
            .write_all(&buf)
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    a.noise.validate()?;
    let (models, corpus) = a.model.load()?;
    let workload = Workload::for_models(&corpus, &models)?;
    let axes = SweepAxes {
        n_q: a.nq.clone(),
        gammas: if a.gammas.is_empty() {
            SweepAxes::default_gammas()
        } else {
            a.gammas.clone()
        },
        betas: a.betas.clone(),
    };
    let base = EvalConfig {
        error_model: a.noise,
        trials: a.trials,
        seed: a.seed,
        ..EvalConfig::default()
    };
    let grid = evaluation::sweep(&models, &workload.indexes, &workload.splits, &axes, &base)?;
    let mut cells = Vec::new();
    evaluation::write_reports_csv(&mut cells, &grid.cells, SplitPart::Validation)?;
    write_file(&a.out_dir.join("sweep.csv"), &cells)?;
    let mut heat = Vec::new();
    evaluation::write_heatmap_csv(&mut heat, &grid.cells)?;
    write_file(&a.out_dir.join("heatmap.csv"), &heat)?;
    let mut best = Vec::new();
    evaluation::write_optimal_csv(&mut best, &grid.optimal)?;
    write_file(&a.out_dir.join("optimal_gamma.csv"), &best)?;
    for o in &grid.optimal {
        println!("n_q={} beta={} best gamma={} mrr={:.6}", o.n_q, o.beta, o.gamma, o.mrr);
    }
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    let params = a.select.params()?;
    let (models, corpus) = a.model.load()?;
    let catalog = Catalog::new(&corpus, &models)?;
    if catalog.is_empty() {
        return Err(CliError::Data("no topic in the corpus matches the model".into()));
    }
    let config = ServiceConfig {
        idle_ttl: Duration::from_secs(a.ttl_secs),
        defaults: SessionDefaults {
            params,
            error_model: a.select.noise,
            n_q_limit: a.nq_limit,
        },
    };
    let state = AppState::new(catalog, config);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    eprintln!("serving {} topics on http://{}", models.len(), a.addr);
    runtime
        .block_on(qsbps_service::serve(a.addr, state))
        .map_err(|e| CliError::Data(format!("{}: {e}", a.addr)))
}

fn session(a: &SessionArgs) -> Result<(), CliError> {
    let params = a.select.params()?;
    let (models, corpus) = a.model.load()?;
    let topic = match &a.topic {
        Some(t) => t.clone(),
        None => models
            .topics()
            .next()
            .map(|m| m.topic_id().to_string())
            .ok_or_else(|| CliError::Data("model has no topics".into()))?,
    };
    let model = models
        .get(&topic)
        .ok_or_else(|| CliError::Data(format!("unknown topic `{topic}`")))?;
    let index = Arc::new(corpus.index_with(&topic, models.field_mode)?);
    let config = SessionConfig::new(params, a.select.noise, a.nq_limit);
    let mut s = Session::start(index, model, config)?;

    let mut scripted = a
        .replay
        .as_ref()
        .map(|v| v.iter().cloned().collect::<std::collections::VecDeque<_>>());
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    while let Some(q) = s.current_question() {
        print!("Q{}. {} [y/n/s] ", q.number, q.prompt);
        io::stdout().flush().ok();
        let line = match scripted.as_mut() {
            Some(queue) => match queue.pop_front() {
                Some(l) => {
                    println!("{l}");
                    l
                }
                None => break,
            },
            None => match lines.next() {
                Some(l) => l.map_err(|e| CliError::Internal(e.to_string()))?,
                None => {
                    println!();
                    break;
                }
            },
        };
        match line.parse::<Answer>() {
            Ok(ans) => {
                s.submit(ans)?;
            }
            Err(_) if scripted.is_some() => return Err(CliError::Usage(format!("bad answer `{line}`"))),
            Err(_) => println!("please answer y, n or s"),
        }
    }

    if s.finish_reason() == Some(FinishReason::Identified) {
        let top = s.ranking(1);
        println!("Identified product: {}", top[0].product_id);
    }
    println!("Top products after {} questions:", s.question_count());
    for (i, p) in s.ranking(a.top).iter().enumerate() {
        println!("{:>3}. {}  {:.6}", i + 1, p.product_id, p.score);
    }
    if let Some(path) = &a.transcript {
        let mut text = serde_json::to_string_pretty(&s.transcript()).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    let command = match (cli.command, cli.from_config) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--from-config cannot be combined with a subcommand".into(),
            ))
        }
        (Some(c), None) => c,
        (None, Some(path)) => {
            let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
            let echo: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Data(e.to_string()))?;
            let argv: Vec<String> = serde_json::from_value(echo["argv"].clone())
                .map_err(|e| CliError::Data(format!("{}: bad argv: {e}", path.display())))?;
            let cli = Cli::try_parse_from(std::iter::once("qsbps".to_string()).chain(argv.iter().cloned()))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            return run(cli, argv);
        }
        (None, None) => return Err(CliError::Usage("no subcommand given; see --help".into())),
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let echo = cli.echo.unwrap_or_else(|| default_echo(&command));
    write_echo(&echo, &argv, &command)?;
    match &command {
        Command::Ingest(a) => ingest(a),
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Train(a) => train(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Serve(a) => serve(a),
        Command::Session(a) => session(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match std::panic::catch_unwind(|| run(cli, argv)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(4),
    }
}

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bnsample::harness::{compute_mad, forward_sample, run, NetworkSpec, RunConfig, ScoreSource};
use bnsample::io::{
    arity_file, parse_arc_matrix, parse_arity_file, parse_score_tables, read_data_csv, write_data_csv,
    write_score_tables,
};
use bnsample::{exact_posterior, Dataset, Engine, Error, MoveMix, PruneMode, Result, ScoreConfig, ScoreTables};
use bnsample::graph::Acyclicity;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bnsample", version, about = "Sample Bayesian network structures from their posterior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-sample a data set from a network file or a random network.
    Gen(GenArgs),
    /// Enumerate (and optionally prune) local score tables.
    Score(ScoreArgs),
    /// Run MCMC chains and write traces and arc frequencies.
    Sample(SampleArgs),
    /// Exact arc posteriors by enumerating every DAG (n <= 6).
    Exact(ExactArgs),
    /// Maximum absolute deviation between two arc matrices.
    Mad(MadArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Network description (TOML).
    #[arg(long, conflicts_with = "random_nodes")]
    network: Option<PathBuf>,
    /// Generate a random network with this many nodes instead.
    #[arg(long)]
    random_nodes: Option<usize>,
    #[arg(long, default_value_t = 2)]
    random_arity: usize,
    #[arg(long, default_value_t = 3)]
    random_max_parents: usize,
    /// Probability that each earlier node becomes a parent.
    #[arg(long, default_value_t = 0.3)]
    random_density: f64,
    /// Dirichlet concentration of the random CPT rows.
    #[arg(long, default_value_t = 1.0)]
    random_alpha: f64,
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output data CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the arity sidecar file.
    #[arg(long)]
    arity_out: Option<PathBuf>,
    /// Also write the generating network.
    #[arg(long)]
    network_out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ScoreOpts {
    /// Equivalent sample size of the BDeu prior.
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    /// Structure prior constant c in P(G) proportional to c^-|A|.
    #[arg(long, default_value_t = 1.0)]
    prior_c: f64,
    /// Maximum indegree d.
    #[arg(long, default_value_t = 3)]
    max_indegree: usize,
    /// Candidate parents per node K; defaults to all other nodes.
    #[arg(long)]
    candidates: Option<usize>,
    /// Indegree cap for sets leaving the candidate set; defaults to 0
    /// when candidates are restricted, else the max indegree.
    #[arg(long)]
    candidate_indegree_cap: Option<usize>,
    #[arg(long, default_value_t = 1 << 24)]
    max_entries: usize,
    /// Pruning parameter; each node is pruned at epsilon / n.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = PruneArg::Off)]
    prune: PruneArg,
}

#[derive(Args)]
struct DataInput {
    /// Data CSV with a header row of variable names.
    #[arg(long, conflicts_with = "scores")]
    data: Option<PathBuf>,
    /// Arity sidecar file overriding inferred arities.
    #[arg(long, requires = "data")]
    arity: Option<PathBuf>,
    /// Precomputed score table file.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    arity: Option<PathBuf>,
    #[command(flatten)]
    score: ScoreOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: DataInput,
    #[command(flatten)]
    score: ScoreOpts,
    #[arg(long, value_enum, default_value_t = EngineArg::Gibby)]
    engine: EngineArg,
    #[arg(long, value_enum, default_value_t = AcyclicityArg::Ancestor)]
    acyclicity: AcyclicityArg,
    /// Move weights, e.g. "basic=100,rev=2,mbr=1".
    #[arg(long, default_value = "basic=1")]
    moves: MoveMix,
    /// Effective steps per chain.
    #[arg(long)]
    steps: u64,
    #[arg(long, default_value_t = 100)]
    thin: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    chains: u64,
    /// Leading fraction of steps excluded from the throughput figure.
    #[arg(long, default_value_t = 0.5)]
    burn_in_fraction: f64,
    /// Score parent sets on demand (basic moves, no pruning).
    #[arg(long)]
    lazy_scores: bool,
    /// Trace of thinned samples, one JSON record per line (chain 0).
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Arc frequency matrix pooled over chains.
    #[arg(long)]
    arcs_out: Option<PathBuf>,
    /// Run summary as JSON; printed to stdout when absent.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    input: DataInput,
    #[command(flatten)]
    score: ScoreOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MadArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    reference: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Gibby,
    Gc,
}

#[derive(Clone, Copy, ValueEnum)]
enum AcyclicityArg {
    Ancestor,
    Path,
}

#[derive(Clone, Copy, ValueEnum)]
enum PruneArg {
    Off,
    Complete,
    BottomUp,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Gibby => Engine::Gibby,
            EngineArg::Gc => Engine::Gc,
        }
    }
}

impl From<AcyclicityArg> for Acyclicity {
    fn from(a: AcyclicityArg) -> Self {
        match a {
            AcyclicityArg::Ancestor => Acyclicity::Ancestor,
            AcyclicityArg::Path => Acyclicity::Path,
        }
    }
}

impl From<PruneArg> for PruneMode {
    fn from(p: PruneArg) -> Self {
        match p {
            PruneArg::Off => PruneMode::Off,
            PruneArg::Complete => PruneMode::Complete,
            PruneArg::BottomUp => PruneMode::BottomUp,
        }
    }
}

impl ScoreOpts {
    fn config(&self, n: usize) -> ScoreConfig {
        let mut cfg = ScoreConfig::unrestricted(n, self.max_indegree);
        cfg.ess = self.ess;
        cfg.prior_c = self.prior_c;
        cfg.max_entries = self.max_entries;
        if let Some(k) = self.candidates {
            cfg.candidate_count = k;
            cfg.candidate_indegree_cap = 0;
        }
        if let Some(cap) = self.candidate_indegree_cap {
            cfg.candidate_indegree_cap = cap;
        }
        cfg
    }

    fn node_epsilon(&self, n: usize) -> f64 {
        self.epsilon / n.max(1) as f64
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn load_data(path: &Path, arity: Option<&Path>) -> Result<Dataset> {
    let overrides = arity.map(|p| read_text(p).and_then(|t| parse_arity_file(&t))).transpose()?;
    let file = fs::File::open(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok(read_data_csv(file, overrides.as_ref())?.0)
}

enum Loaded {
    Data(Dataset),
    Tables(ScoreTables),
}

impl DataInput {
    fn load(&self) -> Result<Loaded> {
        match (&self.data, &self.scores) {
            (Some(d), None) => Ok(Loaded::Data(load_data(d, self.arity.as_deref())?)),
            (None, Some(s)) => Ok(Loaded::Tables(parse_score_tables(&read_text(s)?)?)),
            _ => Err(Error::InvalidInput("give exactly one of --data or --scores".into())),
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let net = match (&a.network, a.random_nodes) {
        (Some(p), None) => NetworkSpec::from_toml(&read_text(p)?)?,
        (None, Some(n)) => NetworkSpec::random(
            n,
            a.random_arity,
            a.random_max_parents,
            a.random_density,
            a.random_alpha,
            a.seed,
        )?,
        _ => return Err(Error::InvalidInput("give exactly one of --network or --random-nodes".into())),
    };
    let (data, labels) = forward_sample(&net, a.rows, a.seed)?;
    let mut w = create(&a.out)?;
    write_data_csv(&data, Some(&labels), &mut w)?;
    w.flush()?;
    if let Some(p) = &a.arity_out {
        fs::write(p, arity_file(&data))?;
    }
    if let Some(p) = &a.network_out {
        fs::write(p, net.to_toml()?)?;
    }
    Ok(())
}

fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let data = load_data(&a.data, a.arity.as_deref())?;
    let n = data.n();
    let tables = ScoreTables::build(&data, &a.score.config(n), a.score.node_epsilon(n), a.score.prune.into())?;
    fs::write(&a.out, write_score_tables(&tables))?;
    eprintln!("kept fraction {:.6}", tables.kept_fraction());
    Ok(())
}

fn cmd_sample(a: &SampleArgs) -> Result<()> {
    let loaded = a.input.load()?;
    let (names, n) = match &loaded {
        Loaded::Data(d) => (d.names().to_vec(), d.n()),
        Loaded::Tables(t) => (t.names().to_vec(), t.names().len()),
    };
    let mut cfg = RunConfig::new(a.score.config(n), a.steps, a.thin, a.seed);
    cfg.engine = a.engine.into();
    cfg.acyclicity = a.acyclicity.into();
    cfg.mix = a.moves;
    cfg.chains = a.chains;
    cfg.epsilon = a.score.node_epsilon(n);
    cfg.prune = a.score.prune.into();
    cfg.burn_in_fraction = a.burn_in_fraction;
    cfg.trace = a.trace_out.is_some();
    cfg.lazy_scores = a.lazy_scores;
    let source = match &loaded {
        Loaded::Data(d) => ScoreSource::Data(d),
        Loaded::Tables(t) => ScoreSource::Tables(t.clone()),
    };
    let out = run(&cfg, source)?;
    if let Some(p) = &a.trace_out {
        let mut w = create(p)?;
        out.traces[0].write_jsonl(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = &a.arcs_out {
        fs::write(p, out.combined.arc_csv(&names))?;
    }
    let summary = serde_json::to_string_pretty(&out.summary)?;
    match &a.summary_out {
        Some(p) => fs::write(p, summary + "\n")?,
        None => writeln!(io::stdout(), "{summary}")?,
    }
    Ok(())
}

fn cmd_exact(a: &ExactArgs) -> Result<()> {
    let (names, post) = match a.input.load()? {
        Loaded::Data(d) => {
            let n = d.n();
            let tables = ScoreTables::build(&d, &a.score.config(n), a.score.node_epsilon(n), a.score.prune.into())?;
            (d.names().to_vec(), exact_posterior(&tables, a.score.max_indegree)?)
        }
        Loaded::Tables(t) => {
            let d = t.max_indegree().max(a.score.max_indegree);
            (t.names().to_vec(), exact_posterior(&t, d)?)
        }
    };
    fs::write(&a.out, post.to_csv(&names))?;
    eprintln!("enumerated {} DAGs, log Z = {}", post.dag_count, post.log_z);
    Ok(())
}

fn cmd_mad(a: &MadArgs) -> Result<()> {
    let est = parse_arc_matrix(&read_text(&a.estimate)?)?;
    let reference = parse_arc_matrix(&read_text(&a.reference)?)?;
    if est.names != reference.names {
        return Err(Error::ShapeMismatch("arc matrices list different variables".into()));
    }
    let mad = compute_mad(&est.values, &reference.values, est.n())?;
    writeln!(io::stdout(), "{mad}")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Score(a) => cmd_score(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Mad(a) => cmd_mad(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

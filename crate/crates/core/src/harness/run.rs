//! The score → prune → sample pipeline with thinned traces and summaries.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainConfig, ChainState, ChainStats, Engine, EventKind, MoveMix, StepOutcome};
use crate::error::{Error, Result, StageExt};
use crate::graph::Acyclicity;
use crate::harness::metrics::frequencies;
use crate::io::{arc_matrix_to_csv, FORMAT_LINE};
use crate::pruning::{PruneMode, ScoreTables};
use crate::scoring::{CachedScorer, Dataset, LocalScores, ScoreConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: Engine,
    pub acyclicity: Acyclicity,
    pub mix: MoveMix,
    /// Total effective steps per chain.
    pub steps: u64,
    /// A sample is kept at every multiple of `thin` effective steps.
    pub thin: u64,
    pub seed: u64,
    /// Independent chains, run concurrently on streams `0..chains`.
    pub chains: u64,
    pub score: ScoreConfig,
    pub epsilon: f64,
    pub prune: PruneMode,
    /// Leading fraction of the steps excluded from the throughput figure.
    pub burn_in_fraction: f64,
    /// Keep one trace record per thinned sample.
    pub trace: bool,
    /// Score parent sets on demand instead of enumerating tables
    /// (basic moves only, no pruning).
    pub lazy_scores: bool,
}

impl RunConfig {
    pub fn new(score: ScoreConfig, steps: u64, thin: u64, seed: u64) -> Self {
        RunConfig {
            engine: Engine::Gibby,
            acyclicity: Acyclicity::Ancestor,
            mix: MoveMix::BASIC_ONLY,
            steps,
            thin,
            seed,
            chains: 1,
            score,
            epsilon: 0.0,
            prune: PruneMode::Off,
            burn_in_fraction: 0.5,
            trace: true,
            lazy_scores: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.steps < self.thin {
            return Err(Error::InvalidInput(format!(
                "need steps >= thin >= 1, got steps = {}, thin = {}",
                self.steps, self.thin
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidInput(format!("epsilon {} outside [0, 1)", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::InvalidInput(format!(
                "burn-in fraction {} outside [0, 1)",
                self.burn_in_fraction
            )));
        }
        if self.chains == 0 {
            return Err(Error::InvalidInput("need at least one chain".into()));
        }
        if self.lazy_scores && (self.mix.uses_parent_sets() || self.prune != PruneMode::Off) {
            return Err(Error::InvalidInput(
                "on-demand scoring supports basic moves without pruning only".into(),
            ));
        }
        self.mix.validate()
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig::new(self.engine)
            .with_acyclicity(self.acyclicity)
            .with_mix(self.mix)
    }

    fn burn_in_steps(&self) -> u64 {
        ((self.steps as f64 * self.burn_in_fraction).floor() as u64).min(self.steps)
    }
}

/// One thinned sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub log_pi: f64,
    /// Total proposal mass; absent for engines without a sum-tree.
    pub b: Option<f64>,
    /// The event simulated at exactly this step, if any.
    #[serde(rename = "move")]
    pub mv: Option<String>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub n: usize,
    pub records: Vec<TraceRecord>,
    /// Row-major `n × n` arc indicator tally over thinned samples.
    pub arc_counts: Vec<u64>,
    pub samples: u64,
}

impl ChainTrace {
    pub fn new(n: usize) -> Self {
        ChainTrace {
            n,
            records: Vec::new(),
            arc_counts: vec![0; n * n],
            samples: 0,
        }
    }

    pub fn arc_frequencies(&self) -> Vec<f64> {
        frequencies(&self.arc_counts, self.samples)
    }

    /// Adds another chain's samples into this one.
    pub fn merge_counts(&mut self, other: &ChainTrace) -> Result<()> {
        if other.n != self.n {
            return Err(Error::ShapeMismatch(format!("traces over {} and {} nodes", self.n, other.n)));
        }
        for (a, b) in self.arc_counts.iter_mut().zip(&other.arc_counts) {
            *a += b;
        }
        self.samples += other.samples;
        Ok(())
    }

    /// Line-delimited JSON, one record per line, after a format comment.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FORMAT_LINE}")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Arc frequency matrix as CSV.
    pub fn arc_csv(&self, names: &[String]) -> String {
        arc_matrix_to_csv(names, &self.arc_frequencies(), &[format!("samples={}", self.samples)])
    }
}

/// Drives `chain` from effective step `from` to `to`, calling `on_sample`
/// whenever the step count reaches a multiple of `thin`. Budgets stop at
/// every sample point, which is exact because a truncated geometric skip is
/// redrawn afresh by the memoryless law.
pub fn drive<S: LocalScores + ?Sized>(
    chain: &mut ChainState<'_, S>,
    from: u64,
    to: u64,
    thin: u64,
    mut on_sample: impl FnMut(&ChainState<'_, S>, u64, &StepOutcome, bool),
) -> Result<()> {
    if thin == 0 {
        return Err(Error::InvalidInput("thin must be at least 1".into()));
    }
    let mut done = from;
    while done < to {
        let next_sample = (done / thin + 1) * thin;
        let stop = next_sample.min(to);
        let out = chain.advance(stop - done)?;
        done += out.steps();
        if done == next_sample {
            let at_event = out.event.is_some();
            on_sample(chain, done, &out, at_event);
        }
    }
    Ok(())
}

fn record_for<S: LocalScores + ?Sized>(chain: &ChainState<'_, S>, step: u64, out: &StepOutcome, at_event: bool) -> TraceRecord {
    let (mv, accepted) = match (&out.event, at_event) {
        (Some(e), true) => {
            let label = match (e.kind, e.mv) {
                (EventKind::Basic, Some(m)) => m.to_string(),
                (k, _) => k.to_string(),
            };
            (Some(label), e.accepted)
        }
        _ => (None, false),
    };
    TraceRecord {
        step,
        log_pi: chain.log_pi(),
        b: chain.b_total(),
        mv,
        accepted,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: u64,
    pub steps: u64,
    pub kernel_calls: u64,
    pub samples: u64,
    pub acceptance_rate: f64,
    pub tentative_rate: f64,
    /// Effective steps per second after burn-in.
    pub steps_per_sec: f64,
    pub wall_secs: f64,
    pub final_log_pi: f64,
    pub stats: ChainStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub engine: Engine,
    pub acyclicity: Acyclicity,
    pub mix: String,
    pub steps: u64,
    pub thin: u64,
    pub seed: u64,
    pub samples: u64,
    pub acceptance_rate: f64,
    pub tentative_rate: f64,
    pub steps_per_sec: f64,
    /// Fraction of admissible parent sets kept by pruning, when tables exist.
    pub kept_fraction: Option<f64>,
    pub chains: Vec<ChainSummary>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Per-chain traces in chain order.
    pub traces: Vec<ChainTrace>,
    /// Arc counts summed over chains.
    pub combined: ChainTrace,
    pub summary: RunSummary,
}

/// The scores a run samples against.
pub enum ScoreSource<'a> {
    Data(&'a Dataset),
    Tables(ScoreTables),
}

/// Runs one chain to completion.
pub fn run_chain<S: LocalScores + ?Sized>(scores: &S, cfg: &RunConfig, chain: u64) -> Result<(ChainTrace, ChainSummary)> {
    cfg.validate()?;
    let mut state = ChainState::new(scores, cfg.chain_config(), cfg.seed, chain)?;
    let mut trace = ChainTrace::new(scores.n());
    let mut on_sample = |s: &ChainState<'_, S>, step: u64, out: &StepOutcome, at_event: bool| {
        s.tally_arcs(&mut trace.arc_counts, 1);
        trace.samples += 1;
        if cfg.trace {
            trace.records.push(record_for(s, step, out, at_event));
        }
    };
    let burn = cfg.burn_in_steps();
    let start = Instant::now();
    drive(&mut state, 0, burn, cfg.thin, &mut on_sample)?;
    let mark = Instant::now();
    drive(&mut state, burn, cfg.steps, cfg.thin, &mut on_sample)?;
    let end = Instant::now();
    let timed = (end - mark).as_secs_f64();
    let stats = state.stats().clone();
    let summary = ChainSummary {
        chain,
        steps: stats.steps,
        kernel_calls: stats.kernel_calls,
        samples: trace.samples,
        acceptance_rate: stats.acceptance_rate(),
        tentative_rate: stats.tentative_rate(),
        steps_per_sec: if timed > 0.0 { (cfg.steps - burn) as f64 / timed } else { f64::INFINITY },
        wall_secs: (end - start).as_secs_f64(),
        final_log_pi: state.log_pi(),
        stats,
    };
    Ok((trace, summary))
}

/// Runs `cfg.chains` independent chains concurrently and aggregates them in
/// chain order.
pub fn run_chains<S: LocalScores + Sync + ?Sized>(
    scores: &S,
    cfg: &RunConfig,
    kept_fraction: Option<f64>,
) -> Result<RunOutput> {
    cfg.validate()?;
    let results: Vec<Result<(ChainTrace, ChainSummary)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.chains)
            .map(|c| scope.spawn(move || run_chain(scores, cfg, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidInput("chain thread panicked".into()))))
            .collect()
    });
    let mut traces = Vec::with_capacity(results.len());
    let mut chains = Vec::with_capacity(results.len());
    for r in results {
        let (t, s) = r?;
        traces.push(t);
        chains.push(s);
    }
    let mut combined = ChainTrace::new(scores.n());
    for t in &traces {
        combined.merge_counts(t)?;
    }
    let k = chains.len() as f64;
    let summary = RunSummary {
        engine: cfg.engine,
        acyclicity: cfg.acyclicity,
        mix: cfg.mix.to_string(),
        steps: cfg.steps,
        thin: cfg.thin,
        seed: cfg.seed,
        samples: combined.samples,
        acceptance_rate: chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / k,
        tentative_rate: chains.iter().map(|c| c.tentative_rate).sum::<f64>() / k,
        steps_per_sec: chains.iter().map(|c| c.steps_per_sec).sum::<f64>() / k,
        kept_fraction,
        chains,
    };
    Ok(RunOutput {
        traces,
        combined,
        summary,
    })
}

/// Builds (or takes) scores and samples. Errors carry the stage they came from.
pub fn run(cfg: &RunConfig, source: ScoreSource<'_>) -> Result<RunOutput> {
    cfg.validate().stage("config")?;
    match source {
        ScoreSource::Data(data) if cfg.lazy_scores => {
            let scorer = CachedScorer::new(data, cfg.score.clone()).stage("score")?;
            run_chains(&scorer, cfg, None).stage("sample")
        }
        ScoreSource::Data(data) => {
            let stage = if cfg.prune == PruneMode::Off { "score" } else { "prune" };
            let tables = ScoreTables::build(data, &cfg.score, cfg.epsilon, cfg.prune).stage(stage)?;
            let kept = tables.kept_fraction();
            run_chains(&tables, cfg, Some(kept)).stage("sample")
        }
        ScoreSource::Tables(tables) => {
            let kept = tables.kept_fraction();
            run_chains(&tables, cfg, Some(kept)).stage("sample")
        }
    }
}

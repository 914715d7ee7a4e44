//! Markov chains over DAGs: the shared chain state, the move mixture and
//! the stepping entry point.
//!
//! [`basic`] holds the single-arc kernels (the rejection-free engine with
//! geometric skipping and the classical Metropolis-Hastings baseline);
//! [`parentset`] holds the REV and MBR moves.

pub mod basic;
pub mod parentset;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Acyclicity, AncestorMatrix, Dag, Move};
use crate::rng::stream_rng;
use crate::scoring::LocalScores;
use crate::sumtree::SumTree;

pub use basic::ProposalState;
pub use parentset::{sample_parent_set, MoveRatio, ParentSetDraw, Proposal};

/// Two ways to simulate the single-arc chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Rejection-free: draws pairs from the tentative proposal masses and
    /// skips self-transitions geometrically.
    #[default]
    Gibby,
    /// Propose a uniform pair, check acyclicity afterwards, accept by ratio.
    Gc,
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gibby" => Ok(Engine::Gibby),
            "gc" => Ok(Engine::Gc),
            _ => Err(Error::InvalidInput(format!("unknown engine {s:?} (expected gibby or gc)"))),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Gibby => "gibby",
            Engine::Gc => "gc",
        })
    }
}

/// Integer weights of the three move types, e.g. `basic=100,rev=2,mbr=1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveMix {
    pub basic: u32,
    pub rev: u32,
    pub mbr: u32,
}

impl Default for MoveMix {
    fn default() -> Self {
        MoveMix::BASIC_ONLY
    }
}

impl MoveMix {
    pub const BASIC_ONLY: MoveMix = MoveMix { basic: 1, rev: 0, mbr: 0 };

    pub fn new(basic: u32, rev: u32, mbr: u32) -> Result<Self> {
        let m = MoveMix { basic, rev, mbr };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if u64::from(self.basic) + u64::from(self.rev) + u64::from(self.mbr) == 0 {
            return Err(Error::InvalidInput("move mix has no positive weight".into()));
        }
        Ok(())
    }

    pub fn uses_parent_sets(&self) -> bool {
        self.rev > 0 || self.mbr > 0
    }

    /// Normalized `(basic, rev, mbr)` probabilities.
    pub fn probabilities(&self) -> (f64, f64, f64) {
        let t = f64::from(self.basic) + f64::from(self.rev) + f64::from(self.mbr);
        (f64::from(self.basic) / t, f64::from(self.rev) / t, f64::from(self.mbr) / t)
    }
}

impl FromStr for MoveMix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut m = MoveMix { basic: 0, rev: 0, mbr: 0 };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("move mix entry {part:?} is not key=value")))?;
            let v: u32 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("move mix weight {v:?} is not a nonnegative integer")))?;
            match k.trim() {
                "basic" => m.basic = v,
                "rev" => m.rev = v,
                "mbr" => m.mbr = v,
                other => return Err(Error::InvalidInput(format!("unknown move type {other:?}"))),
            }
        }
        m.validate()?;
        Ok(m)
    }
}

impl fmt::Display for MoveMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "basic={},rev={},mbr={}", self.basic, self.rev, self.mbr)
    }
}

/// Symmetric pair proposal weights `q_ij`.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum PairWeights {
    /// `q_ij = 1 / (n (n - 1))`.
    #[default]
    Uniform,
    /// Row-major `n × n` matrix; the diagonal is ignored. Normalized on use.
    Matrix(Vec<f64>),
}

impl PairWeights {
    /// Checks shape, symmetry and positivity, and returns the normalized
    /// matrix (or `None` for uniform weights).
    fn normalized(&self, n: usize) -> Result<Option<Vec<f64>>> {
        let PairWeights::Matrix(m) = self else {
            return Ok(None);
        };
        if m.len() != n * n {
            return Err(Error::ShapeMismatch(format!("pair weight matrix has {} entries, expected {}", m.len(), n * n)));
        }
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (m[i * n + j], m[j * n + i]);
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidInput(format!("pair weight q[{i}][{j}] = {a} must be positive")));
                }
                if (a - b).abs() > 1e-12 * a.max(b) {
                    return Err(Error::InvalidInput(format!("pair weights are not symmetric at ({i}, {j})")));
                }
                total += a;
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out[i * n + j] = m[i * n + j] / total;
                }
            }
        }
        Ok(Some(out))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainConfig {
    pub engine: Engine,
    pub acyclicity: Acyclicity,
    pub mix: MoveMix,
    pub pair_weights: PairWeights,
}

impl ChainConfig {
    pub fn new(engine: Engine) -> Self {
        ChainConfig {
            engine,
            ..Default::default()
        }
    }

    pub fn with_mix(mut self, mix: MoveMix) -> Self {
        self.mix = mix;
        self
    }

    pub fn with_acyclicity(mut self, acyclicity: Acyclicity) -> Self {
        self.acyclicity = acyclicity;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Basic,
    Rev,
    Mbr,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Basic => "basic",
            EventKind::Rev => "rev",
            EventKind::Mbr => "mbr",
        })
    }
}

/// One simulated transition that was not a geometric skip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    /// The single-arc move, for basic events.
    pub mv: Option<Move>,
    /// Passed the tentative (acyclicity-blind) acceptance test.
    pub tentative: bool,
    /// The move was accepted.
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// Self-transitions simulated by a geometric skip.
    pub skipped: u64,
    /// `None` when the step budget ran out inside the skip.
    pub event: Option<Event>,
}

impl StepOutcome {
    /// Effective steps consumed.
    pub fn steps(&self) -> u64 {
        self.skipped + u64::from(self.event.is_some())
    }
}

/// Running tallies. All counts are in effective steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub steps: u64,
    /// Kernel invocations (events plus budget-truncated skips).
    pub kernel_calls: u64,
    pub skipped: u64,
    pub tentative: u64,
    pub accepted: u64,
    /// Tentatively accepted single-arc moves that closed a cycle.
    pub cyclic: u64,
    pub rev_proposed: u64,
    pub rev_accepted: u64,
    pub mbr_proposed: u64,
    pub mbr_accepted: u64,
    /// REV/MBR proposals abandoned for empty support or missing arcs.
    pub aborted: u64,
    pub rebuilds: u64,
}

impl ChainStats {
    /// Acceptance rate `a`.
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }

    /// Tentative acceptance rate `b`.
    pub fn tentative_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.tentative as f64 / self.steps as f64
        }
    }
}

/// Accepted moves between hygiene rebuilds of the proposal state.
pub const REBUILD_INTERVAL: u64 = 1 << 20;

/// A chain over DAGs scored by `S`.
pub struct ChainState<'s, S: LocalScores + ?Sized> {
    pub(crate) scores: &'s S,
    pub(crate) cfg: ChainConfig,
    pub(crate) q: Option<Vec<f64>>,
    pub(crate) dag: Dag,
    pub(crate) am: Option<AncestorMatrix>,
    pub(crate) node_scores: Vec<f64>,
    pub(crate) log_pi: f64,
    pub(crate) proposal: Option<ProposalState>,
    pub(crate) gc_pairs: Option<SumTree>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) move_rng: ChaCha8Rng,
    pub(crate) stats: ChainStats,
    pub(crate) accepted_since_rebuild: u64,
    pub(crate) scratch: Vec<f64>,
}

impl<'s, S: LocalScores + ?Sized> ChainState<'s, S> {
    /// A chain started from the empty DAG.
    pub fn new(scores: &'s S, cfg: ChainConfig, seed: u64, chain: u64) -> Result<Self> {
        Self::with_dag(scores, cfg, Dag::empty(scores.n()), seed, chain)
    }

    /// A chain started from `dag`, which must have positive score.
    pub fn with_dag(scores: &'s S, cfg: ChainConfig, dag: Dag, seed: u64, chain: u64) -> Result<Self> {
        let n = scores.n();
        if n < 2 {
            return Err(Error::InvalidInput("a structure chain needs at least two nodes".into()));
        }
        if dag.n() != n {
            return Err(Error::ShapeMismatch(format!("initial DAG has {} nodes, scores have {n}", dag.n())));
        }
        cfg.mix.validate()?;
        if cfg.mix.uses_parent_sets() && scores.tables().is_none() {
            return Err(Error::InvalidInput("REV and MBR moves need materialized score tables".into()));
        }
        let q = cfg.pair_weights.normalized(n)?;
        let node_scores: Vec<f64> = (0..n).map(|i| scores.log_score(i, dag.parents(i))).collect();
        if let Some(i) = node_scores.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingScore {
                node: i,
                parents: dag.parents(i).to_vec(),
            });
        }
        let log_pi = node_scores.iter().sum();
        let am = (cfg.acyclicity == Acyclicity::Ancestor).then(|| AncestorMatrix::from_dag(&dag));
        let gc_pairs = match (&q, cfg.engine) {
            (Some(m), Engine::Gc) => Some(SumTree::new(m)?),
            _ => None,
        };
        let mut st = ChainState {
            scores,
            proposal: None,
            cfg,
            q,
            dag,
            am,
            node_scores,
            log_pi,
            gc_pairs,
            rng: stream_rng(seed, 2 * chain + 1),
            move_rng: stream_rng(seed, 2 * chain + 2),
            stats: ChainStats::default(),
            accepted_since_rebuild: 0,
            scratch: Vec::with_capacity(n),
        };
        if st.cfg.engine == Engine::Gibby {
            st.rebuild_proposals();
        }
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn scores(&self) -> &'s S {
        self.scores
    }

    /// Incrementally maintained `log π(G)`.
    pub fn log_pi(&self) -> f64 {
        self.log_pi
    }

    /// `log π(G)` summed from scratch.
    pub fn recompute_log_pi(&self) -> f64 {
        self.scores.log_posterior(self.dag.parent_sets())
    }

    pub fn stats(&self) -> &ChainStats {
        &self.stats
    }

    pub fn ancestor_matrix(&self) -> Option<&AncestorMatrix> {
        self.am.as_ref()
    }

    pub fn proposal(&self) -> Option<&ProposalState> {
        self.proposal.as_ref()
    }

    /// Total tentative mass `b` of the current state, when maintained.
    pub fn b_total(&self) -> Option<f64> {
        self.proposal.as_ref().map(ProposalState::b_total)
    }

    /// `q_ij`.
    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        match &self.q {
            None => 1.0 / (n * (n - 1)) as f64,
            Some(m) => m[i * n + j],
        }
    }

    /// Advances the chain by at most `budget` effective steps: one kernel
    /// event plus the self-transitions skipped before it.
    pub fn advance(&mut self, budget: u64) -> Result<StepOutcome> {
        if budget == 0 {
            return Ok(StepOutcome { skipped: 0, event: None });
        }
        let out = match self.cfg.engine {
            Engine::Gibby => self.gibby_mixed_step(budget)?,
            Engine::Gc => {
                let kind = self.draw_event_kind_uniform();
                let event = match kind {
                    EventKind::Basic => self.gc_step()?.event,
                    _ => Some(self.parent_set_event(kind)?),
                };
                StepOutcome { skipped: 0, event }
            }
        };
        self.stats.kernel_calls += 1;
        self.stats.steps += out.steps();
        self.stats.skipped += out.skipped;
        if let Some(e) = &out.event {
            self.stats.tentative += u64::from(e.tentative);
            self.stats.accepted += u64::from(e.accepted);
            if e.accepted {
                self.after_acceptance();
            }
        }
        Ok(out)
    }

    /// Runs exactly `steps` effective steps, reporting each outcome.
    pub fn run_steps(&mut self, steps: u64, mut on_outcome: impl FnMut(&Self, u64, &StepOutcome)) -> Result<()> {
        let mut done = 0;
        while done < steps {
            let out = self.advance(steps - done)?;
            on_outcome(self, done, &out);
            done += out.steps();
        }
        Ok(())
    }

    fn draw_event_kind_uniform(&mut self) -> EventKind {
        if !self.cfg.mix.uses_parent_sets() {
            return EventKind::Basic;
        }
        let (pb, pr, _) = self.cfg.mix.probabilities();
        let u: f64 = self.move_rng.random();
        if u < pb {
            EventKind::Basic
        } else if u < pb + pr {
            EventKind::Rev
        } else {
            EventKind::Mbr
        }
    }

    /// With move probabilities `(p_b, p_r, p_m)`, a step leaves the state
    /// unchanged without an event with probability `1 - s`, where
    /// `s = p_b b + p_r + p_m`. The skip length is geometric in `s`, and the
    /// event type is then drawn proportionally.
    fn gibby_mixed_step(&mut self, budget: u64) -> Result<StepOutcome> {
        if !self.cfg.mix.uses_parent_sets() {
            return self.gibby_step_within(budget);
        }
        let (pb, pr, pm) = self.cfg.mix.probabilities();
        let b = self.b_total().unwrap_or(0.0).min(1.0);
        let s = (pb * b + pr + pm).min(1.0);
        let k = basic::geometric_skip(&mut self.rng, s)?;
        if k >= budget {
            return Ok(StepOutcome { skipped: budget, event: None });
        }
        let u: f64 = self.move_rng.random::<f64>() * s;
        let event = if u < pb * b {
            self.gibby_basic_event()?
        } else if u < pb * b + pr {
            self.parent_set_event(EventKind::Rev)?
        } else {
            self.parent_set_event(EventKind::Mbr)?
        };
        Ok(StepOutcome { skipped: k, event: Some(event) })
    }

    fn after_acceptance(&mut self) {
        self.accepted_since_rebuild += 1;
        if self.accepted_since_rebuild >= REBUILD_INTERVAL {
            self.resync();
        }
    }

    /// Recomputes every cached quantity from the graph.
    pub fn resync(&mut self) {
        self.accepted_since_rebuild = 0;
        self.stats.rebuilds += 1;
        for i in 0..self.n() {
            self.node_scores[i] = self.scores.log_score(i, self.dag.parents(i));
        }
        self.log_pi = self.node_scores.iter().sum();
        if self.proposal.is_some() {
            self.rebuild_proposals();
        }
    }

    /// Replaces the graph wholesale (after a parent-set move).
    pub(crate) fn replace_dag(&mut self, dag: Dag) {
        self.dag = dag;
        if self.am.is_some() {
            self.am = Some(AncestorMatrix::from_dag(&self.dag));
        }
        for i in 0..self.n() {
            self.node_scores[i] = self.scores.log_score(i, self.dag.parents(i));
        }
        self.log_pi = self.node_scores.iter().sum();
        if self.proposal.is_some() {
            self.rebuild_proposals();
        }
    }

    /// Arc indicator of the current graph, added `weight` times into a
    /// row-major `n × n` tally.
    pub fn tally_arcs(&self, counts: &mut [u64], weight: u64) {
        let n = self.n();
        for v in 0..n {
            for u in self.dag.parents(v).iter() {
                counts[u * n + v] += weight;
            }
        }
    }
}

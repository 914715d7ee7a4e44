//! Single-arc moves: the rejection-free engine and the classical baseline.
//!
//! Every ordered pair `(i, j)` names one neighbour `G^{ij}` (see
//! [`classify_pair`]). Its tentative mass is `b_ij = q_ij β(G^{ij}, G)` where
//! `β` is the Metropolis-Hastings acceptance computed as if every directed
//! graph were allowed. Pairs are grouped by `j`: group `j` holds `b_ij` for
//! all `i` in a sum-tree, and a top sum-tree holds the group totals, so a
//! pair is drawn in `O(log n)` and a move refreshes `O(n)` leaves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::graph::{apply_move_unchecked, classify_pair, would_be_acyclic_matrix, would_be_acyclic_path, Move, MoveKind};
use crate::scoring::LocalScores;
use crate::sumtree::SumTree;

use super::{ChainState, Event, EventKind, StepOutcome};

/// Per-pair tentative masses, grouped by head node.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalState {
    groups: Vec<SumTree>,
    top: SumTree,
}

impl ProposalState {
    fn zeros(n: usize) -> Self {
        ProposalState {
            groups: (0..n).map(|_| SumTree::zeros(n)).collect(),
            top: SumTree::zeros(n),
        }
    }

    /// `b = Σ_ij b_ij`, read from the top tree's root.
    #[inline]
    pub fn b_total(&self) -> f64 {
        self.top.total()
    }

    /// `b_ij`.
    #[inline]
    pub fn b_pair(&self, i: usize, j: usize) -> f64 {
        self.groups[j].get(i)
    }

    /// `b_j = Σ_i b_ij`.
    pub fn b_group(&self, j: usize) -> f64 {
        self.groups[j].total()
    }

    /// Every tree is internally consistent and each top leaf matches its
    /// group total.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        self.top.is_consistent(rel_tol)
            && self.groups.iter().enumerate().all(|(j, g)| {
                let t = g.total();
                g.is_consistent(rel_tol) && (self.top.get(j) - t).abs() <= rel_tol * t.max(f64::MIN_POSITIVE)
            })
    }

    /// Largest relative difference between two states' pair masses.
    pub fn max_relative_difference(&self, other: &ProposalState) -> f64 {
        let n = self.groups.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let (a, b) = (self.b_pair(i, j), other.b_pair(i, j));
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Number of failures before the first success of a Bernoulli(`p`) sequence.
pub(crate) fn geometric_skip(rng: &mut ChaCha8Rng, p: f64) -> Result<u64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::StuckChain);
    }
    if p >= 1.0 {
        return Ok(0);
    }
    let g = Geometric::new(p).map_err(|e| Error::InvalidInput(format!("geometric parameter {p}: {e}")))?;
    Ok(g.sample(rng))
}

impl<S: LocalScores + ?Sized> ChainState<'_, S> {
    /// `log π*(G') - log π(G)` for the neighbour reached by `mv`, counting
    /// only the local scores that change. `-inf` if a new parent set has no
    /// score.
    pub fn tentative_log_ratio(&self, mv: Move) -> f64 {
        let (t, h) = (mv.tail, mv.head);
        let ph = self.dag.parents(h);
        match mv.kind {
            MoveKind::Delete => self.scores.log_score(h, &ph.without(t)) - self.node_scores[h],
            MoveKind::Add => self.scores.log_score(h, &ph.with(t)) - self.node_scores[h],
            MoveKind::Reverse => {
                let lost = self.scores.log_score(h, &ph.without(t)) - self.node_scores[h];
                if lost == f64::NEG_INFINITY {
                    return lost;
                }
                lost + self.scores.log_score(t, &self.dag.parents(t).with(h)) - self.node_scores[t]
            }
        }
    }

    /// `exp(min(0, Δ))`.
    #[inline]
    pub fn tentative_acceptance(&self, mv: Move) -> f64 {
        let d = self.tentative_log_ratio(mv);
        if d >= 0.0 {
            1.0
        } else if d.is_nan() {
            0.0
        } else {
            d.exp()
        }
    }

    /// `b_ij` recomputed from the current graph.
    #[inline]
    pub fn pair_mass(&self, i: usize, j: usize) -> f64 {
        self.q(i, j) * self.tentative_acceptance(classify_pair(&self.dag, i, j))
    }

    fn is_move_acyclic(&self, mv: Move) -> bool {
        match &self.am {
            Some(am) => would_be_acyclic_matrix(am, &self.dag, mv),
            None => would_be_acyclic_path(&self.dag, mv),
        }
    }

    /// Recomputes every `b_ij` and rebuilds all trees.
    pub fn rebuild_proposals(&mut self) {
        let n = self.n();
        let mut p = self.proposal.take().unwrap_or_else(|| ProposalState::zeros(n));
        for j in 0..n {
            p.groups[j].refill((0..n).map(|i| if i == j { 0.0 } else { self.pair_mass(i, j) }));
        }
        p.top.refill((0..n).map(|j| p.groups[j].total()));
        self.proposal = Some(p);
    }

    /// A fresh proposal state for the current graph, leaving the maintained
    /// one untouched.
    pub fn rebuilt_proposals(&self) -> ProposalState {
        let n = self.n();
        let mut p = ProposalState::zeros(n);
        for j in 0..n {
            p.groups[j].refill((0..n).map(|i| if i == j { 0.0 } else { self.pair_mass(i, j) }));
        }
        p.top.refill((0..n).map(|j| p.groups[j].total()));
        p
    }

    /// After the parent set of `h` changed through the pair with `other`:
    /// rebuild group `h`, then refresh `b_{h,other}` and `b_{h,v}` for each
    /// parent `v` of `h`, the only other masses that read `A_h`.
    fn refresh_head(&mut self, h: usize, other: usize) {
        let n = self.n();
        let mut buf = std::mem::take(&mut self.scratch);
        buf.clear();
        buf.extend((0..n).map(|u| if u == h { 0.0 } else { self.pair_mass(u, h) }));
        let Some(p) = self.proposal.as_mut() else {
            self.scratch = buf;
            return;
        };
        p.groups[h].refill(buf.iter().copied());
        let total = p.groups[h].total();
        p.top.set(h, total);

        buf.clear();
        let mut targets: Vec<usize> = Vec::with_capacity(self.dag.parents(h).len() + 1);
        targets.push(other);
        targets.extend(self.dag.parents(h).iter().filter(|&v| v != other));
        buf.extend(targets.iter().map(|&v| self.pair_mass(h, v)));
        let p = self.proposal.as_mut().expect("checked above");
        for (&v, &w) in targets.iter().zip(buf.iter()) {
            p.groups[v].set(h, w);
            let t = p.groups[v].total();
            p.top.set(v, t);
        }
        self.scratch = buf;
    }

    /// Incremental proposal update for a move that was just applied.
    pub fn update_after_move(&mut self, mv: Move) {
        match mv.kind {
            MoveKind::Add | MoveKind::Delete => self.refresh_head(mv.head, mv.tail),
            MoveKind::Reverse => {
                self.refresh_head(mv.head, mv.tail);
                self.refresh_head(mv.tail, mv.head);
            }
        }
    }

    /// Applies an acyclic, consistent move and refreshes scores and masses.
    pub(crate) fn apply_basic(&mut self, mv: Move) {
        apply_move_unchecked(&mut self.dag, self.am.as_mut(), mv);
        let mut touched = [mv.head, usize::MAX];
        if mv.kind == MoveKind::Reverse {
            touched[1] = mv.tail;
        }
        for &v in touched.iter().filter(|&&v| v != usize::MAX) {
            let s = self.scores.log_score(v, self.dag.parents(v));
            self.log_pi += s - self.node_scores[v];
            self.node_scores[v] = s;
        }
        if self.proposal.is_some() {
            self.update_after_move(mv);
        }
    }

    /// Applies a move after checking it against the graph.
    pub fn apply(&mut self, mv: Move) -> Result<()> {
        let mut probe = self.dag.clone();
        crate::graph::apply_move(&mut probe, None, mv)?;
        let d = self.tentative_log_ratio(mv);
        if d == f64::NEG_INFINITY {
            return Err(Error::MissingScore {
                node: mv.head,
                parents: probe.parents(mv.head).to_vec(),
            });
        }
        self.apply_basic(mv);
        Ok(())
    }

    /// Geometric skip length for the current `b`.
    pub fn draw_skip(&mut self) -> Result<u64> {
        let b = self.b_total().ok_or_else(|| Error::InvalidInput("proposal masses are not maintained".into()))?;
        geometric_skip(&mut self.rng, b.min(1.0))
    }

    /// Draws a pair with probability `b_ij / b` and applies its move if it
    /// keeps the graph acyclic.
    pub(crate) fn gibby_basic_event(&mut self) -> Result<Event> {
        let p = self.proposal.as_ref().ok_or_else(|| Error::InvalidInput("proposal masses are not maintained".into()))?;
        let j = p.top.draw(&mut self.rng).map_err(|_| Error::StuckChain)?;
        let i = p.groups[j].draw(&mut self.rng).map_err(|_| Error::StuckChain)?;
        let mv = classify_pair(&self.dag, i, j);
        let accepted = self.is_move_acyclic(mv);
        if accepted {
            self.apply_basic(mv);
        } else {
            self.stats.cyclic += 1;
        }
        Ok(Event {
            kind: EventKind::Basic,
            mv: Some(mv),
            tentative: true,
            accepted,
        })
    }

    /// One rejection-free step: a skip of `k ~ Geometric(b)` self-transitions
    /// followed by one drawn pair.
    pub fn gibby_step(&mut self) -> Result<StepOutcome> {
        self.gibby_step_within(u64::MAX)
    }

    pub(crate) fn gibby_step_within(&mut self, budget: u64) -> Result<StepOutcome> {
        let b = self
            .b_total()
            .ok_or_else(|| Error::InvalidInput("proposal masses are not maintained".into()))?
            .min(1.0);
        let k = geometric_skip(&mut self.rng, b)?;
        if k >= budget {
            return Ok(StepOutcome { skipped: budget, event: None });
        }
        let event = self.gibby_basic_event()?;
        Ok(StepOutcome { skipped: k, event: Some(event) })
    }

    fn draw_pair(&mut self) -> (usize, usize) {
        let n = self.n();
        if let Some(t) = &self.gc_pairs {
            let k = t.draw(&mut self.rng).expect("pair weights are positive");
            return (k / n, k % n);
        }
        let i = self.rng.random_range(0..n);
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    }

    /// One baseline step: propose a pair, test the ratio, and reject if the
    /// move would close a cycle.
    pub fn gc_step(&mut self) -> Result<StepOutcome> {
        let (i, j) = self.draw_pair();
        let mv = classify_pair(&self.dag, i, j);
        let beta = self.tentative_acceptance(mv);
        let u: f64 = self.rng.random();
        let tentative = u < beta;
        let accepted = tentative && self.is_move_acyclic(mv);
        if accepted {
            self.apply_basic(mv);
        } else if tentative {
            self.stats.cyclic += 1;
        }
        Ok(StepOutcome {
            skipped: 0,
            event: Some(Event {
                kind: EventKind::Basic,
                mv: Some(mv),
                tentative,
                accepted,
            }),
        })
    }

    /// One-step transition probabilities of the rejection-free engine out of
    /// the current graph, read from the maintained pair masses. Cyclic
    /// neighbours are omitted; the remainder is the self-transition mass.
    pub fn gibby_transition_row(&self) -> Result<Vec<(Move, f64)>> {
        let p = self.proposal.as_ref().ok_or_else(|| Error::InvalidInput("proposal masses are not maintained".into()))?;
        let n = self.n();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let mv = classify_pair(&self.dag, i, j);
                if self.is_move_acyclic(mv) {
                    out.push((mv, p.b_pair(i, j)));
                }
            }
        }
        Ok(out)
    }

    /// One-step transition probabilities of the baseline engine out of the
    /// current graph: `q_ij min(1, π(G')/π(G))` over acyclic neighbours.
    pub fn gc_transition_row(&self) -> Vec<(Move, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let mv = classify_pair(&self.dag, i, j);
                if self.is_move_acyclic(mv) {
                    out.push((mv, self.q(i, j) * self.tentative_acceptance(mv)));
                }
            }
        }
        out
    }
}

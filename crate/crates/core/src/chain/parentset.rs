//! Parent-set moves: edge reversal with resampling of both endpoint parent
//! sets (REV) and Markov blanket resampling (MBR).
//!
//! Both moves orphan a few nodes and redraw their parent sets one node at a
//! time, each from the local scores restricted to the node's current
//! non-descendants, so acyclicity holds by construction. The acceptance
//! ratio is the product of the forward stage normalizers over the reverse
//! stage normalizers (the local scores cancel against the posterior ratio).
//! Ratios are evaluated by [`rev_log_ratio`] and [`mbr_log_ratio`] for a
//! given path, so proposals and audits share one code path.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::logspace::LogSumExp;
use crate::nodeset::NodeSet;
use crate::pruning::{PrunedScoreTable, ScoreTables};
use crate::scoring::LocalScores;

use super::{ChainState, Event, EventKind};

/// A parent set drawn in proportion to its score among the kept sets `S`
/// with `required ⊆ S ⊆ allowed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentSetDraw {
    pub node: usize,
    pub required: NodeSet,
    pub allowed: NodeSet,
    pub drawn: NodeSet,
    /// `ln Σ_{required ⊆ S ⊆ allowed} π(S)`.
    pub log_z: f64,
}

pub fn sample_parent_set<R: Rng + ?Sized>(
    table: &PrunedScoreTable,
    required: &NodeSet,
    allowed: &NodeSet,
    rng: &mut R,
) -> Result<ParentSetDraw> {
    if !required.is_subset(allowed) {
        return Err(Error::InvalidInput(format!("required set {required} is not inside allowed set {allowed}")));
    }
    let log_z = table.log_interval_sum(required, allowed);
    if log_z == f64::NEG_INFINITY {
        return Err(Error::EmptySupport { node: table.node });
    }
    let qualifying = || {
        table
            .kept()
            .iter()
            .filter(|(s, _)| required.is_subset(s) && s.is_subset(allowed))
    };
    let target: f64 = rng.random::<f64>();
    let mut cum = 0.0;
    let mut last = None;
    for (s, v) in qualifying() {
        cum += (v - log_z).exp();
        last = Some(s);
        if target < cum {
            break;
        }
    }
    let drawn = last.expect("nonzero normalizer implies a qualifying set").clone();
    Ok(ParentSetDraw {
        node: table.node,
        required: required.clone(),
        allowed: allowed.clone(),
        drawn,
        log_z,
    })
}

/// The log acceptance ratio of one proposal path, with its named terms.
#[derive(Clone, Debug, PartialEq)]
pub struct MoveRatio {
    pub log_ratio: f64,
    pub components: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub kind: EventKind,
    pub new_dag: Dag,
    pub ratio: MoveRatio,
}

fn orphaned(dag: &Dag, nodes: &[usize]) -> Dag {
    let mut g = dag.clone();
    for &v in nodes {
        g.set_parents(v, NodeSet::empty(dag.n()));
    }
    g
}

fn check_stage(table: &PrunedScoreTable, required: &NodeSet, allowed: &NodeSet, s: &NodeSet) -> Result<f64> {
    if !(required.is_subset(s) && s.is_subset(allowed) && table.contains(s)) {
        return Err(Error::InvalidInput(format!(
            "parent set {s} for node {} is not a kept set between {required} and {allowed}",
            table.node
        )));
    }
    let z = table.log_interval_sum(required, allowed);
    if z == f64::NEG_INFINITY {
        return Err(Error::EmptySupport { node: table.node });
    }
    Ok(z)
}

/// Ratio for reversing `i -> j` by drawing `new_i ∋ j`, then `new_j`.
///
/// With `G0` the graph with `i` and `j` orphaned, the forward path draws
/// `A'_i` among `{j} ⊆ S ⊆ nd_i(G0)` and then `A'_j` among
/// `S ⊆ nd_j(G0 + A'_i)`; the reverse path from `G'` draws `A_j` among
/// `{i} ⊆ S ⊆ nd_j(G0)` and then `A_i` among `S ⊆ nd_i(G0 + A_j)`.
pub fn rev_log_ratio(tables: &ScoreTables, dag: &Dag, i: usize, j: usize, new_i: &NodeSet, new_j: &NodeSet) -> Result<MoveRatio> {
    if !dag.has_arc(i, j) {
        return Err(Error::InvalidInput(format!("no arc {i} -> {j} to reverse")));
    }
    let n = dag.n();
    let (ti, tj) = (tables.table(i), tables.table(j));
    let g0 = orphaned(dag, &[i, j]);

    let zh_fwd = check_stage(ti, &NodeSet::singleton(n, j), &g0.non_descendants(i), new_i)?;
    let mut g1 = g0.clone();
    g1.set_parents(i, new_i.clone());
    let zt_fwd = check_stage(tj, &NodeSet::empty(n), &g1.non_descendants(j), new_j)?;

    let zh_rev = check_stage(tj, &NodeSet::singleton(n, i), &g0.non_descendants(j), dag.parents(j))?;
    let mut g1r = g0;
    g1r.set_parents(j, dag.parents(j).clone());
    let zt_rev = check_stage(ti, &NodeSet::empty(n), &g1r.non_descendants(i), dag.parents(i))?;

    let arcs = dag.arc_count();
    let arcs_new = arcs - dag.parents(i).len() - dag.parents(j).len() + new_i.len() + new_j.len();
    let log_ratio = (arcs as f64).ln() - (arcs_new as f64).ln() + zt_fwd - zt_rev + zh_fwd - zh_rev;
    Ok(MoveRatio {
        log_ratio,
        components: vec![
            ("arcs".into(), arcs as f64),
            ("arcs_new".into(), arcs_new as f64),
            ("log_zt_fwd".into(), zt_fwd),
            ("log_zt_rev".into(), zt_rev),
            ("log_zh_fwd".into(), zh_fwd),
            ("log_zh_rev".into(), zh_rev),
        ],
    })
}

/// Ratio for resampling the Markov blanket of `i` with children visited in
/// `order`, drawing `new_i` and then `new_children[k]` for `order[k]`.
///
/// `G0` removes every arc into `i` and every arc into a child except the
/// one from `i`. The forward path draws `A'_i` among
/// `S ⊆ nd_i(G0) \ A_i` and each child's set among `{i} ⊆ S ⊆ nd_c` in the
/// partially rebuilt graph; the reverse path does the same with the roles of
/// old and new sets exchanged.
pub fn mbr_log_ratio(
    tables: &ScoreTables,
    dag: &Dag,
    i: usize,
    order: &[usize],
    new_i: &NodeSet,
    new_children: &[NodeSet],
) -> Result<MoveRatio> {
    let n = dag.n();
    let children = dag.children(i);
    if order.len() != children.len() || new_children.len() != order.len() || !order.iter().all(|&c| children.contains(c)) {
        return Err(Error::InvalidInput(format!("child order {order:?} does not list the children of {i}")));
    }
    let mut g0 = dag.clone();
    g0.set_parents(i, NodeSet::empty(n));
    for &c in order {
        g0.set_parents(c, NodeSet::singleton(n, i));
    }
    let ti = tables.table(i);
    let pool = g0.non_descendants(i);
    let empty = NodeSet::empty(n);
    let req = NodeSet::singleton(n, i);

    let zi_fwd = check_stage(ti, &empty, &pool.difference(dag.parents(i)), new_i)?;
    let zi_rev = check_stage(ti, &empty, &pool.difference(new_i), dag.parents(i))?;

    let mut components = vec![("log_zi_fwd".to_string(), zi_fwd), ("log_zi_rev".to_string(), zi_rev)];
    let mut log_ratio = zi_fwd - zi_rev;

    let mut fwd = g0.clone();
    fwd.set_parents(i, new_i.clone());
    let mut rev = g0;
    rev.set_parents(i, dag.parents(i).clone());
    for (&c, s_new) in order.iter().zip(new_children) {
        let tc = tables.table(c);
        let z_fwd = check_stage(tc, &req, &fwd.non_descendants(c), s_new)?;
        fwd.set_parents(c, s_new.clone());
        let z_rev = check_stage(tc, &req, &rev.non_descendants(c), dag.parents(c))?;
        rev.set_parents(c, dag.parents(c).clone());
        log_ratio += z_fwd - z_rev;
        components.push((format!("log_z{c}_fwd"), z_fwd));
        components.push((format!("log_z{c}_rev"), z_rev));
    }
    Ok(MoveRatio { log_ratio, components })
}

impl<'s, S: LocalScores + ?Sized> ChainState<'s, S> {
    fn score_tables(&self) -> Result<&'s ScoreTables> {
        let scores: &'s S = self.scores;
        scores
            .tables()
            .ok_or_else(|| Error::InvalidInput("REV and MBR moves need materialized score tables".into()))
    }

    /// Draws a REV proposal: a uniform arc `i -> j`, then `A'_i ∋ j` and
    /// `A'_j`, each among the current non-descendants.
    pub fn rev_move(&mut self) -> Result<Proposal> {
        let tables = self.score_tables()?;
        let arcs = self.dag.arcs();
        if arcs.is_empty() {
            return Err(Error::NoArcs);
        }
        let (i, j) = arcs[self.move_rng.random_range(0..arcs.len())];
        let n = self.n();
        let mut g = orphaned(&self.dag, &[i, j]);
        let di = sample_parent_set(tables.table(i), &NodeSet::singleton(n, j), &g.non_descendants(i), &mut self.move_rng)?;
        g.set_parents(i, di.drawn.clone());
        let dj = sample_parent_set(tables.table(j), &NodeSet::empty(n), &g.non_descendants(j), &mut self.move_rng)?;
        g.set_parents(j, dj.drawn.clone());
        let ratio = rev_log_ratio(tables, &self.dag, i, j, &di.drawn, &dj.drawn)?;
        Ok(Proposal {
            kind: EventKind::Rev,
            new_dag: g,
            ratio,
        })
    }

    /// Draws an MBR proposal: a uniform target `i`, a uniform ordering of its
    /// children, a new parent set for `i` disjoint from the old one, then a
    /// parent set containing `i` for each child in order.
    pub fn mbr_move(&mut self) -> Result<Proposal> {
        let tables = self.score_tables()?;
        let n = self.n();
        let i = self.move_rng.random_range(0..n);
        let mut order = self.dag.children(i).to_vec();
        order.shuffle(&mut self.move_rng);

        let mut g = self.dag.clone();
        g.set_parents(i, NodeSet::empty(n));
        for &c in &order {
            g.set_parents(c, NodeSet::singleton(n, i));
        }
        let allowed = g.non_descendants(i).difference(self.dag.parents(i));
        let di = sample_parent_set(tables.table(i), &NodeSet::empty(n), &allowed, &mut self.move_rng)?;
        g.set_parents(i, di.drawn.clone());
        let req = NodeSet::singleton(n, i);
        let mut new_children = Vec::with_capacity(order.len());
        for &c in &order {
            let dc = sample_parent_set(tables.table(c), &req, &g.non_descendants(c), &mut self.move_rng)?;
            g.set_parents(c, dc.drawn.clone());
            new_children.push(dc.drawn);
        }
        let ratio = mbr_log_ratio(tables, &self.dag, i, &order, &di.drawn, &new_children)?;
        Ok(Proposal {
            kind: EventKind::Mbr,
            new_dag: g,
            ratio,
        })
    }

    /// Accepts with probability `min(1, exp(log_ratio))`, installing the new
    /// graph on success.
    pub fn accept(&mut self, proposal: Proposal) -> bool {
        let lr = proposal.ratio.log_ratio;
        let p = if lr >= 0.0 { 1.0 } else { lr.exp() };
        let u: f64 = self.move_rng.random();
        let ok = u < p;
        if ok {
            debug_assert!(proposal.new_dag.is_acyclic());
            self.replace_dag(proposal.new_dag);
        }
        ok
    }

    /// Proposes and tests one REV or MBR move. A proposal that cannot be
    /// formed (no arcs, empty support) is a rejection.
    pub(crate) fn parent_set_event(&mut self, kind: EventKind) -> Result<Event> {
        let proposal = match kind {
            EventKind::Rev => {
                self.stats.rev_proposed += 1;
                self.rev_move()
            }
            EventKind::Mbr => {
                self.stats.mbr_proposed += 1;
                self.mbr_move()
            }
            EventKind::Basic => return Err(Error::InvalidInput("basic moves are not parent-set moves".into())),
        };
        let accepted = match proposal {
            Ok(p) => self.accept(p),
            Err(Error::NoArcs | Error::EmptySupport { .. }) => {
                self.stats.aborted += 1;
                false
            }
            Err(e) => return Err(e),
        };
        if accepted {
            match kind {
                EventKind::Rev => self.stats.rev_accepted += 1,
                _ => self.stats.mbr_accepted += 1,
            }
        }
        Ok(Event {
            kind,
            mv: None,
            tentative: accepted,
            accepted,
        })
    }
}

/// `ln Σ π(S)` over kept sets `S` with `required ⊆ S ⊆ allowed`, by direct
/// scan; exposed for cross-checking the interval sums.
pub fn brute_log_sum(table: &PrunedScoreTable, required: &NodeSet, allowed: &NodeSet) -> f64 {
    let mut acc = LogSumExp::new();
    for (s, v) in table.kept() {
        if required.iter().all(|r| s.contains(r)) && s.iter().all(|x| allowed.contains(x)) {
            acc.add(*v);
        }
    }
    acc.value()
}

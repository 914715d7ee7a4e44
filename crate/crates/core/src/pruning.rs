//! ε-pruning of local score tables and the interval / intersection sums the
//! parent-set moves are built on.
//!
//! A set `S` is discarded when `f(S) < ε ψ(j, S)` for every `j ∈ S`, where
//!
//! ```text
//! ψ(j, S) = Σ_{j ∈ R ⊆ S} f(R) (1 + 1/K)^{|R| - K} K^{|R| - |S|}
//! ```
//!
//! and `K` is the size of the ground set. The pruned table then underestimates
//! every interval sum `f[T, U]` with `|T| ≤ 1` by a factor of at most `1 - ε`.
//! All quantities are carried in the log domain.

use std::collections::{HashMap, HashSet};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::logspace::LogSumExp;
use crate::nodeset::NodeSet;
use crate::scoring::{enumerate_scores, Dataset, LocalScoreTable, LocalScores, ParentSetDomain, ScoreConfig};

/// `ln w(R, S)` for `|R| = r`, `|S| = s`.
#[inline]
fn log_weight(r: usize, s: usize, k: usize) -> f64 {
    let kf = k as f64;
    (r as f64 - kf) * (1.0 + 1.0 / kf).ln() + (r as f64 - s as f64) * kf.ln()
}

/// `ln ψ(j, S)` given a log-score lookup `f` (`-inf` for absent sets).
pub fn log_psi(j: usize, s: &NodeSet, f: impl Fn(&NodeSet) -> f64, k: usize) -> f64 {
    debug_assert!(s.contains(j));
    let n_words = s.clone();
    let rest: Vec<usize> = s.iter().filter(|&v| v != j).collect();
    let size = s.len();
    let mut acc = LogSumExp::new();
    for mask in 0u64..(1u64 << rest.len()) {
        let mut r = n_words.clone();
        r.clear();
        r.insert(j);
        for (b, &v) in rest.iter().enumerate() {
            if mask >> b & 1 == 1 {
                r.insert(v);
            }
        }
        acc.add(f(&r) + log_weight(r.len(), size, k));
    }
    acc.value()
}

/// `ψ(j, S)` in the linear domain.
pub fn psi(j: usize, s: &NodeSet, f: impl Fn(&NodeSet) -> f64, k: usize) -> f64 {
    log_psi(j, s, f, k).exp()
}

/// `ln ψ(j, S)` for every `j ∈ S` in one pass over the subsets of `S`.
/// Returned in ascending member order.
fn log_psi_all(s: &NodeSet, f: &mut dyn FnMut(&NodeSet) -> Result<f64>, k: usize) -> Result<Vec<f64>> {
    let members = s.to_vec();
    let size = members.len();
    let mut acc = vec![LogSumExp::new(); size];
    let mut r = s.clone();
    for mask in 1u64..(1u64 << size) {
        r.clear();
        for (b, &v) in members.iter().enumerate() {
            if mask >> b & 1 == 1 {
                r.insert(v);
            }
        }
        let term = f(&r)? + log_weight(mask.count_ones() as usize, size, k);
        if term == f64::NEG_INFINITY {
            continue;
        }
        for (b, a) in acc.iter_mut().enumerate() {
            if mask >> b & 1 == 1 {
                a.add(term);
            }
        }
    }
    Ok(acc.iter().map(LogSumExp::value).collect())
}

/// The pruning rule for one set: prune iff `ln f(S) < ln ε + ln ψ(j, S)` for all `j`.
fn is_dominated(log_f: f64, log_psis: &[f64], log_eps: f64) -> bool {
    !log_psis.is_empty() && log_psis.iter().all(|&lp| log_f < log_eps + lp)
}

/// Surviving parent sets of one node, sorted by descending score.
#[derive(Clone, Debug)]
pub struct PrunedScoreTable {
    pub node: usize,
    n: usize,
    kept: Vec<(NodeSet, f64)>,
    index: FxHashMap<NodeSet, f64>,
    pub epsilon: f64,
    pub ground_set: NodeSet,
    /// `K` used in the ψ weights.
    pub k_eff: usize,
    /// Size of the table before pruning.
    pub original_len: usize,
}

impl PartialEq for PrunedScoreTable {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
            && self.n == other.n
            && self.kept == other.kept
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.ground_set == other.ground_set
            && self.k_eff == other.k_eff
    }
}

impl PrunedScoreTable {
    /// Builds a table directly from `(set, log score)` pairs. Entries are
    /// sorted by descending score; duplicates are rejected.
    pub fn from_entries(n: usize, node: usize, entries: Vec<(NodeSet, f64)>, epsilon: f64) -> Result<Self> {
        let mut ground = NodeSet::empty(n);
        for (s, v) in &entries {
            if s.contains(node) {
                return Err(Error::InvalidInput(format!("node {node} listed as its own parent")));
            }
            if v.is_nan() || *v == f64::INFINITY {
                return Err(Error::InvalidInput(format!("invalid score {v} for {s}")));
            }
            ground.union_with(s);
        }
        let k = ground.len();
        Self::assemble(n, node, entries.clone(), epsilon, ground, k, entries.len())
    }

    pub(crate) fn assemble(
        n: usize,
        node: usize,
        mut kept: Vec<(NodeSet, f64)>,
        epsilon: f64,
        ground_set: NodeSet,
        k_eff: usize,
        original_len: usize,
    ) -> Result<Self> {
        kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.len().cmp(&b.0.len())).then_with(|| a.0.cmp(&b.0)));
        let mut index = FxHashMap::with_capacity_and_hasher(kept.len(), Default::default());
        for (s, v) in &kept {
            if index.insert(s.clone(), *v).is_some() {
                return Err(Error::InvalidInput(format!("duplicate parent set {s} for node {node}")));
            }
        }
        Ok(PrunedScoreTable {
            node,
            n,
            kept,
            index,
            epsilon,
            ground_set,
            k_eff,
            original_len,
        })
    }

    /// Wraps a full table without pruning anything.
    pub fn unpruned(table: &LocalScoreTable) -> Result<Self> {
        let ground = table.domain.ground_set();
        let k = ground.len();
        Self::assemble(
            table.domain.n,
            table.node,
            table.entries.clone(),
            0.0,
            ground,
            k,
            table.entries.len(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kept(&self) -> &[(NodeSet, f64)] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// `ln f̃(S)`, `-inf` when `S` was pruned or never admissible.
    #[inline]
    pub fn log_score(&self, s: &NodeSet) -> f64 {
        self.index.get(s).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn contains(&self, s: &NodeSet) -> bool {
        self.index.contains_key(s)
    }

    /// `ln f̃[T, U] = ln Σ_{T ⊆ S ⊆ U} f̃(S)`; `-inf` when nothing qualifies.
    pub fn log_interval_sum(&self, t: &NodeSet, u: &NodeSet) -> f64 {
        self.kept
            .iter()
            .filter(|(s, _)| t.is_subset(s) && s.is_subset(u))
            .map(|(_, v)| *v)
            .collect::<LogSumExp>()
            .value()
    }

    /// `ln f̃(T; U) = ln Σ_{S ⊆ U, S ∩ T ≠ ∅} f̃(S)`, through the telescoping
    /// decomposition into interval sums.
    pub fn log_intersection_sum(&self, t: &NodeSet, u: &NodeSet) -> f64 {
        let mut upper = u.clone();
        let mut acc = LogSumExp::new();
        for v in t.iter() {
            acc.add(self.log_interval_sum(&NodeSet::singleton(self.n, v), &upper));
            upper.remove(v);
        }
        acc.value()
    }

    /// Kept fraction relative to the unpruned table.
    pub fn kept_fraction(&self) -> f64 {
        if self.original_len == 0 {
            1.0
        } else {
            self.kept.len() as f64 / self.original_len as f64
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("epsilon must be a finite nonnegative number, got {eps}")))
    }
}

/// Complete pruning: every set is scored, then each is tested against the
/// rule using the original scores of all its subsets.
pub fn prune_complete(table: &LocalScoreTable, eps: f64, k: Option<usize>) -> Result<PrunedScoreTable> {
    check_eps(eps)?;
    let ground = table.domain.ground_set();
    let k = k.unwrap_or(ground.len());
    let lookup = table.lookup();
    let log_eps = eps.ln();
    let mut f = |r: &NodeSet| Ok(lookup.get(r).copied().unwrap_or(f64::NEG_INFINITY));
    let mut kept = Vec::new();
    for (s, v) in &table.entries {
        if eps > 0.0 && !s.is_empty() {
            let psis = log_psi_all(s, &mut f, k)?;
            if is_dominated(*v, &psis, log_eps) {
                continue;
            }
        }
        kept.push((s.clone(), *v));
    }
    PrunedScoreTable::assemble(table.domain.n, table.node, kept, eps, ground, k, table.entries.len())
}

/// Which subset scores enter ψ during the bottom-up sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSubsets {
    /// Only subsets that survived; pruned ones count as zero. Can keep a
    /// set that complete pruning removes.
    KeptOnly,
    /// Original scores of all subsets, scoring missing ones on demand. The
    /// kept sets are always a subset of those of complete pruning.
    #[default]
    Exact,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BottomUpStats {
    /// Number of distinct parent sets whose score was computed.
    pub scored: usize,
    /// Sets skipped because all immediate subsets were pruned.
    pub rule_pruned: usize,
    /// Largest layer visited.
    pub layers: usize,
}

/// Bottom-up pruning: sets are visited by increasing size and a set is only
/// scored if at least one of its immediate subsets survived.
pub fn prune_bottom_up(
    domain: &ParentSetDomain,
    mut scorer: impl FnMut(&NodeSet) -> Result<f64>,
    eps: f64,
    k: Option<usize>,
    psi_subsets: PsiSubsets,
) -> Result<(PrunedScoreTable, BottomUpStats)> {
    check_eps(eps)?;
    let n = domain.n;
    let ground = domain.ground_set();
    let k = k.unwrap_or(ground.len());
    let log_eps = eps.ln();
    let gvec = ground.to_vec();

    let mut scores: HashMap<NodeSet, f64> = HashMap::new();
    let mut score_of = |s: &NodeSet, scores: &mut HashMap<NodeSet, f64>| -> Result<f64> {
        if let Some(&v) = scores.get(s) {
            return Ok(v);
        }
        let v = scorer(s)?;
        scores.insert(s.clone(), v);
        Ok(v)
    };

    let mut stats = BottomUpStats::default();
    let empty = NodeSet::empty(n);
    let v0 = score_of(&empty, &mut scores)?;
    let mut kept_map: HashMap<NodeSet, f64> = HashMap::new();
    kept_map.insert(empty.clone(), v0);
    let mut layer: Vec<NodeSet> = vec![empty];
    let mut total_admissible = 1usize;

    for size in 1..=domain.max_indegree {
        let mut next: HashSet<NodeSet> = HashSet::new();
        for r in &layer {
            for &v in &gvec {
                if !r.contains(v) {
                    let s = r.with(v);
                    if domain.contains(&s) {
                        next.insert(s);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        stats.layers = size;
        let mut next: Vec<NodeSet> = next.into_iter().collect();
        next.sort();
        let mut survivors = Vec::new();
        for s in next {
            total_admissible += 1;
            let v = score_of(&s, &mut scores)?;
            let prune = if eps > 0.0 {
                let psis = match psi_subsets {
                    PsiSubsets::KeptOnly => log_psi_all(
                        &s,
                        &mut |r: &NodeSet| {
                            Ok(if r == &s { v } else { kept_map.get(r).copied().unwrap_or(f64::NEG_INFINITY) })
                        },
                        k,
                    )?,
                    PsiSubsets::Exact => log_psi_all(&s, &mut |r: &NodeSet| score_of(r, &mut scores), k)?,
                };
                is_dominated(v, &psis, log_eps)
            } else {
                false
            };
            if !prune {
                survivors.push((s, v));
            }
        }
        if survivors.is_empty() {
            break;
        }
        layer = survivors.iter().map(|(s, _)| s.clone()).collect();
        kept_map.extend(survivors);
    }
    stats.scored = scores.len();
    let admissible = domain.enumerate(usize::MAX).map(|v| v.len()).unwrap_or(total_admissible);
    stats.rule_pruned = admissible.saturating_sub(total_admissible);
    let kept: Vec<(NodeSet, f64)> = kept_map.into_iter().collect();
    let table = PrunedScoreTable::assemble(n, domain.node, kept, eps, ground, k, admissible)?;
    Ok((table, stats))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    #[default]
    Off,
    Complete,
    BottomUp,
}

/// Per-node pruned tables: the modular target the parent-set moves sample from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTables {
    names: Vec<String>,
    tables: Vec<PrunedScoreTable>,
    max_indegree: usize,
}

impl ScoreTables {
    pub fn new(names: Vec<String>, tables: Vec<PrunedScoreTable>) -> Result<Self> {
        if names.len() != tables.len() {
            return Err(Error::ShapeMismatch(format!("{} names for {} tables", names.len(), tables.len())));
        }
        let n = tables.len();
        for (i, t) in tables.iter().enumerate() {
            if t.node != i || t.n() != n {
                return Err(Error::InvalidInput(format!("table {i} is for node {} of {}", t.node, t.n())));
            }
        }
        let max_indegree = tables
            .iter()
            .flat_map(|t| t.kept().iter().map(|(s, _)| s.len()))
            .max()
            .unwrap_or(0);
        Ok(ScoreTables {
            names,
            tables,
            max_indegree,
        })
    }

    /// Scores, optionally prunes, every node's table. Pruning threshold is
    /// `eps` per node.
    pub fn build(data: &Dataset, cfg: &ScoreConfig, eps: f64, mode: PruneMode) -> Result<Self> {
        cfg.validate(data.n())?;
        let mut tables = Vec::with_capacity(data.n());
        for i in 0..data.n() {
            let t = match mode {
                PruneMode::Off => PrunedScoreTable::unpruned(&enumerate_scores(data, i, cfg)?)?,
                PruneMode::Complete => prune_complete(&enumerate_scores(data, i, cfg)?, eps, None)?,
                PruneMode::BottomUp => {
                    let domain = crate::scoring::parent_set_domain(data, i, cfg)?;
                    prune_bottom_up(
                        &domain,
                        |s| crate::scoring::local_log_score(data, i, s, cfg),
                        eps,
                        None,
                        PsiSubsets::default(),
                    )?
                    .0
                }
            };
            tables.push(t);
        }
        ScoreTables::new(data.names().to_vec(), tables)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn table(&self, i: usize) -> &PrunedScoreTable {
        &self.tables[i]
    }

    pub fn tables(&self) -> &[PrunedScoreTable] {
        &self.tables
    }

    pub fn max_indegree(&self) -> usize {
        self.max_indegree
    }

    /// Total kept sets over total admissible sets.
    pub fn kept_fraction(&self) -> f64 {
        let kept: usize = self.tables.iter().map(PrunedScoreTable::len).sum();
        let orig: usize = self.tables.iter().map(|t| t.original_len).sum();
        if orig == 0 {
            1.0
        } else {
            kept as f64 / orig as f64
        }
    }
}

impl LocalScores for ScoreTables {
    fn n(&self) -> usize {
        self.tables.len()
    }

    #[inline]
    fn log_score(&self, node: usize, parents: &NodeSet) -> f64 {
        self.tables[node].log_score(parents)
    }

    fn tables(&self) -> Option<&ScoreTables> {
        Some(self)
    }
}

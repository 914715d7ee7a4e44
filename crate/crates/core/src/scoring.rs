//! BDeu local scores with a modular `c^{-|A|}` structure prior.
//!
//! A local score is `log π_i(S) = -|S| ln c + log BDeu(i | S)`. Scores are
//! always handled in the natural-log domain; "absent" scores (beyond an
//! indegree cap, or pruned away) are `-inf`.

use std::collections::HashMap;
use std::sync::RwLock;

use rustc_hash::FxHashMap;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

/// Categorical data, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    arity: Vec<usize>,
    columns: Vec<Vec<u32>>,
    rows: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, arity: Vec<usize>, columns: Vec<Vec<u32>>) -> Result<Self> {
        let n = names.len();
        if arity.len() != n || columns.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} names, {} arities, {} columns",
                n,
                arity.len(),
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (i, col) in columns.iter().enumerate() {
            if arity[i] == 0 {
                return Err(Error::InvalidInput(format!("variable {} has arity 0", names[i])));
            }
            if col.len() != rows {
                return Err(Error::ShapeMismatch(format!(
                    "column {} has {} rows, expected {rows}",
                    names[i],
                    col.len()
                )));
            }
            if let Some(&bad) = col.iter().find(|&&c| c as usize >= arity[i]) {
                return Err(Error::InvalidInput(format!(
                    "code {bad} out of range for {} (arity {})",
                    names[i], arity[i]
                )));
            }
        }
        Ok(Dataset {
            names,
            arity,
            columns,
            rows,
        })
    }

    /// Row-major convenience constructor with generated names `X0, X1, ...`.
    pub fn from_rows(arity: Vec<usize>, rows: &[Vec<u32>]) -> Result<Self> {
        let n = arity.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!("row {r} has {} cells", row.len())));
            }
            for (c, &v) in row.iter().enumerate() {
                columns[c].push(v);
            }
        }
        let names = (0..n).map(|i| format!("X{i}")).collect();
        Dataset::new(names, arity, columns)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn arity(&self, i: usize) -> usize {
        self.arity[i]
    }
    pub fn arities(&self) -> &[usize] {
        &self.arity
    }
    pub fn column(&self, i: usize) -> &[u32] {
        &self.columns[i]
    }

    /// Rows `self` followed by rows of `other` (same schema required).
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.arity != other.arity {
            return Err(Error::ShapeMismatch("arity vectors differ".into()));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Dataset::new(self.names.clone(), self.arity.clone(), columns)
    }
}

/// Parameters of the local score and of the parent-set search space.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreConfig {
    /// Equivalent sample size of the BDeu prior.
    pub ess: f64,
    /// Structure prior constant: `P(G) ∝ c^{-|A|}`.
    pub prior_c: f64,
    pub max_indegree: usize,
    /// Number of preselected candidate parents per node.
    pub candidate_count: usize,
    /// Indegree cap for parent sets not contained in the candidate set.
    pub candidate_indegree_cap: usize,
    /// Upper bound on the number of enumerated parent sets per node.
    pub max_entries: usize,
}

impl ScoreConfig {
    /// No candidate restriction: all parent sets up to `max_indegree`.
    pub fn unrestricted(n: usize, max_indegree: usize) -> Self {
        ScoreConfig {
            ess: 1.0,
            prior_c: 1.0,
            max_indegree,
            candidate_count: n.saturating_sub(1),
            candidate_indegree_cap: max_indegree,
            max_entries: 1 << 24,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.ess > 0.0 && self.ess.is_finite()) {
            return bad(format!("ess must be positive, got {}", self.ess));
        }
        if !(self.prior_c >= 1.0 && self.prior_c.is_finite()) {
            return bad(format!("prior constant must be >= 1, got {}", self.prior_c));
        }
        if n >= 2 && !(1..n).contains(&self.max_indegree) {
            return bad(format!("max indegree {} outside 1..={}", self.max_indegree, n - 1));
        }
        if self.candidate_count > n.saturating_sub(1) {
            return bad(format!("{} candidates requested with n = {n}", self.candidate_count));
        }
        if self.candidate_indegree_cap > self.max_indegree {
            return bad("candidate indegree cap exceeds max indegree".into());
        }
        Ok(())
    }
}

/// Mixed-radix parent configuration keys; falls back to vector keys when the
/// configuration count overflows `u64`.
enum ConfigKeys {
    Packed(Vec<u64>),
    Wide(Vec<Vec<u32>>),
}

fn config_keys(data: &Dataset, parents: &[usize]) -> ConfigKeys {
    let m = data.rows();
    let fits = parents
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(data.arity(p) as u64))
        .is_some();
    if fits {
        let mut keys = vec![0u64; m];
        for &p in parents {
            let r = data.arity(p) as u64;
            for (k, &c) in keys.iter_mut().zip(data.column(p)) {
                *k = *k * r + c as u64;
            }
        }
        ConfigKeys::Packed(keys)
    } else {
        ConfigKeys::Wide(
            (0..m)
                .map(|row| parents.iter().map(|&p| data.column(p)[row]).collect())
                .collect(),
        )
    }
}

/// Parent configuration counts up to which counting uses a dense array.
const DENSE_CONFIG_LIMIT: usize = 1 << 12;

/// Counts `m_jk` in a flat `slot * r + k` table. Small configuration spaces
/// get one slot per configuration; otherwise only observed configurations
/// get a slot.
fn count_table(data: &Dataset, i: usize, parents: &[usize]) -> (Vec<u32>, usize) {
    let r = data.arity(i);
    let child = data.column(i);
    if parents.is_empty() {
        let mut counts = vec![0u32; r];
        for &c in child {
            counts[c as usize] += 1;
        }
        return (counts, 1);
    }
    let configs = parents
        .iter()
        .try_fold(1usize, |acc, &p| acc.checked_mul(data.arity(p)));
    if let Some(q) = configs.filter(|&q| q <= DENSE_CONFIG_LIMIT.max(4 * data.rows())) {
        let ConfigKeys::Packed(keys) = config_keys(data, parents) else {
            unreachable!("a dense configuration count fits u64")
        };
        let mut counts = vec![0u32; q * r];
        for (&key, &c) in keys.iter().zip(child) {
            counts[key as usize * r + c as usize] += 1;
        }
        return (counts, q);
    }
    sparse_count_table(data, i, parents)
}

fn sparse_count_table(data: &Dataset, i: usize, parents: &[usize]) -> (Vec<u32>, usize) {
    let r = data.arity(i);
    let child = data.column(i);
    let mut counts: Vec<u32> = Vec::new();
    let mut slots = 0usize;
    match config_keys(data, parents) {
        ConfigKeys::Packed(keys) => {
            let mut index: FxHashMap<u64, usize> = FxHashMap::default();
            for (key, &c) in keys.iter().zip(child) {
                let slot = *index.entry(*key).or_insert_with(|| {
                    slots += 1;
                    counts.resize(slots * r, 0);
                    slots - 1
                });
                counts[slot * r + c as usize] += 1;
            }
        }
        ConfigKeys::Wide(keys) => {
            let mut index: FxHashMap<&[u32], usize> = FxHashMap::default();
            for (key, &c) in keys.iter().zip(child) {
                let slot = *index.entry(key.as_slice()).or_insert_with(|| {
                    slots += 1;
                    counts.resize(slots * r, 0);
                    slots - 1
                });
                counts[slot * r + c as usize] += 1;
            }
        }
    }
    (counts, slots)
}

/// Log BDeu marginal likelihood of variable `i` given parent set `parents`.
///
/// Unobserved parent configurations contribute exactly zero and are skipped.
pub fn bdeu_log_marginal(data: &Dataset, i: usize, parents: &NodeSet, ess: f64) -> Result<f64> {
    if !(ess > 0.0 && ess.is_finite()) {
        return Err(Error::InvalidInput(format!("ess must be positive, got {ess}")));
    }
    if parents.contains(i) {
        return Err(Error::InvalidInput(format!("node {i} listed as its own parent")));
    }
    let ps = parents.to_vec();
    let r = data.arity(i);
    let q: f64 = ps.iter().map(|&p| data.arity(p) as f64).product();
    let a_j = ess / q;
    let a_jk = a_j / r as f64;
    let lg_aj = ln_gamma(a_j);
    let lg_ajk = ln_gamma(a_jk);

    let (counts, slots) = count_table(data, i, &ps);
    let mut total = 0.0;
    for slot in 0..slots {
        let row = &counts[slot * r..(slot + 1) * r];
        let m_j: u32 = row.iter().sum();
        if m_j == 0 {
            continue;
        }
        total += lg_aj - ln_gamma(a_j + m_j as f64);
        for &m_jk in row {
            if m_jk > 0 {
                total += ln_gamma(a_jk + m_jk as f64) - lg_ajk;
            }
        }
    }
    Ok(total)
}

/// `-|S| ln c + log BDeu(i | S)`.
pub fn local_log_score(data: &Dataset, i: usize, parents: &NodeSet, cfg: &ScoreConfig) -> Result<f64> {
    let size = parents.len();
    if size > cfg.max_indegree {
        return Err(Error::IndegreeViolation {
            size,
            max: cfg.max_indegree,
        });
    }
    Ok(-(size as f64) * cfg.prior_c.ln() + bdeu_log_marginal(data, i, parents, cfg.ess)?)
}

/// The `k` nodes `j` with the largest singleton scores `π_i({j})`, ties
/// broken towards smaller ids.
pub fn select_candidates(data: &Dataset, i: usize, k: usize, cfg: &ScoreConfig) -> Result<NodeSet> {
    let n = data.n();
    if k > n.saturating_sub(1) {
        return Err(Error::InvalidInput(format!("cannot select {k} candidates among {} nodes", n - 1)));
    }
    let mut scored = Vec::with_capacity(n.saturating_sub(1));
    for j in (0..n).filter(|&j| j != i) {
        scored.push((local_log_score(data, i, &NodeSet::singleton(n, j), cfg)?, j));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(NodeSet::from_nodes(n, scored.into_iter().take(k).map(|(_, j)| j)))
}

/// The admissible parent sets of one node: subsets of the candidate set up
/// to `max_indegree`, plus any set up to `outside_cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentSetDomain {
    pub node: usize,
    pub n: usize,
    pub candidates: NodeSet,
    pub max_indegree: usize,
    pub outside_cap: usize,
}

impl ParentSetDomain {
    pub fn new(n: usize, node: usize, candidates: NodeSet, max_indegree: usize, outside_cap: usize) -> Self {
        let mut candidates = candidates;
        candidates.remove(node);
        ParentSetDomain {
            node,
            n,
            candidates,
            max_indegree,
            outside_cap: outside_cap.min(max_indegree),
        }
    }

    /// All parents allowed, indegree ≤ `d`.
    pub fn unrestricted(n: usize, node: usize, d: usize) -> Self {
        ParentSetDomain::new(n, node, NodeSet::full(n), d, d)
    }

    pub fn contains(&self, s: &NodeSet) -> bool {
        if s.contains(self.node) {
            return false;
        }
        let k = s.len();
        k <= self.outside_cap || (k <= self.max_indegree && s.is_subset(&self.candidates))
    }

    /// Union of all admissible sets.
    pub fn ground_set(&self) -> NodeSet {
        if self.outside_cap >= 1 {
            NodeSet::full(self.n).without(self.node)
        } else if self.max_indegree >= 1 {
            self.candidates.clone()
        } else {
            NodeSet::empty(self.n)
        }
    }

    /// Every admissible set, ordered by size then lexicographically.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<NodeSet>> {
        let everyone = self.ground_set().to_vec();
        let cands = self.candidates.to_vec();
        let mut out = Vec::new();
        for k in 0..=self.max_indegree {
            let pool = if k <= self.outside_cap { &everyone } else { &cands };
            if pool.len() < k {
                continue;
            }
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                if out.len() >= cap {
                    return Err(Error::ResourceExhausted(format!(
                        "more than {cap} parent sets for node {}",
                        self.node
                    )));
                }
                out.push(NodeSet::from_nodes(self.n, idx.iter().map(|&x| pool[x])));
                // advance to the next k-combination in lexicographic order
                let Some(pos) = (0..k).rev().find(|&p| idx[p] < pool.len() - k + p) else {
                    break;
                };
                idx[pos] += 1;
                for t in pos + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
            }
        }
        Ok(out)
    }
}

/// Candidate preselection and domain construction for node `i`.
pub fn parent_set_domain(data: &Dataset, i: usize, cfg: &ScoreConfig) -> Result<ParentSetDomain> {
    let n = data.n();
    let candidates = if cfg.candidate_count >= n.saturating_sub(1) {
        NodeSet::full(n).without(i)
    } else {
        select_candidates(data, i, cfg.candidate_count, cfg)?
    };
    Ok(ParentSetDomain::new(n, i, candidates, cfg.max_indegree, cfg.candidate_indegree_cap))
}

/// Scored parent sets of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalScoreTable {
    pub node: usize,
    pub entries: Vec<(NodeSet, f64)>,
    pub domain: ParentSetDomain,
}

impl LocalScoreTable {
    pub fn candidates(&self) -> &NodeSet {
        &self.domain.candidates
    }

    pub fn lookup(&self) -> HashMap<NodeSet, f64> {
        self.entries.iter().cloned().collect()
    }
}

/// Scores every admissible parent set of node `i`.
pub fn enumerate_scores(data: &Dataset, i: usize, cfg: &ScoreConfig) -> Result<LocalScoreTable> {
    cfg.validate(data.n())?;
    let domain = parent_set_domain(data, i, cfg)?;
    let sets = domain.enumerate(cfg.max_entries)?;
    let mut entries = Vec::with_capacity(sets.len());
    for s in sets {
        let v = local_log_score(data, i, &s, cfg)?;
        entries.push((s, v));
    }
    Ok(LocalScoreTable {
        node: i,
        entries,
        domain,
    })
}

/// Source of local log scores for the samplers. Returns `-inf` for parent
/// sets outside the model (over the indegree cap, pruned, or unknown).
pub trait LocalScores {
    fn n(&self) -> usize;
    fn log_score(&self, node: usize, parents: &NodeSet) -> f64;

    /// `log π(G) = Σ_i log π_i(A_i)`.
    fn log_posterior(&self, parents: &[NodeSet]) -> f64 {
        parents
            .iter()
            .enumerate()
            .map(|(i, p)| self.log_score(i, p))
            .sum()
    }

    /// Materialized per-node tables, when this source has them. The
    /// parent-set moves need them for their interval sums.
    fn tables(&self) -> Option<&crate::pruning::ScoreTables> {
        None
    }
}

/// On-demand scorer with a per-node cache, for runs that never enumerate
/// score tables. Safe to share between threads.
pub struct CachedScorer<'d> {
    data: &'d Dataset,
    cfg: ScoreConfig,
    domains: Vec<ParentSetDomain>,
    cache: Vec<RwLock<FxHashMap<NodeSet, f64>>>,
}

impl<'d> CachedScorer<'d> {
    pub fn new(data: &'d Dataset, cfg: ScoreConfig) -> Result<Self> {
        cfg.validate(data.n())?;
        let domains = (0..data.n())
            .map(|i| parent_set_domain(data, i, &cfg))
            .collect::<Result<Vec<_>>>()?;
        let cache = (0..data.n()).map(|_| RwLock::new(FxHashMap::default())).collect();
        Ok(CachedScorer {
            data,
            cfg,
            domains,
            cache,
        })
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.iter().map(|c| c.read().unwrap().len()).sum()
    }

    pub fn domain(&self, i: usize) -> &ParentSetDomain {
        &self.domains[i]
    }
}

impl LocalScores for CachedScorer<'_> {
    fn n(&self) -> usize {
        self.data.n()
    }

    fn log_score(&self, node: usize, parents: &NodeSet) -> f64 {
        if !self.domains[node].contains(parents) {
            return f64::NEG_INFINITY;
        }
        if let Some(&v) = self.cache[node].read().unwrap().get(parents) {
            return v;
        }
        let v = local_log_score(self.data, node, parents, &self.cfg).unwrap_or(f64::NEG_INFINITY);
        self.cache[node].write().unwrap().insert(parents.clone(), v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(rows: &[&[u32]]) -> Dataset {
        let n = rows.first().map_or(0, |r| r.len());
        let rows: Vec<Vec<u32>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(vec![2; n], &rows).unwrap()
    }

    #[test]
    fn bdeu_empty_data_is_zero() {
        let d = Dataset::new(vec!["a".into(), "b".into()], vec![2, 3], vec![vec![], vec![]]).unwrap();
        let s = NodeSet::singleton(2, 1);
        assert_eq!(bdeu_log_marginal(&d, 0, &s, 1.0).unwrap(), 0.0);
        assert_eq!(bdeu_log_marginal(&d, 1, &NodeSet::empty(2), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn dense_and_sparse_counts_agree() {
        let rows: Vec<Vec<u32>> = (0..40u32).map(|k| vec![k % 3, (k / 3) % 2, (k * 7) % 4, k % 2]).collect();
        let d = Dataset::from_rows(vec![3, 2, 4, 2], &rows).unwrap();
        let (dense, q) = count_table(&d, 3, &[0, 1, 2]);
        assert_eq!(q, 24);
        let (sparse, slots) = sparse_count_table(&d, 3, &[0, 1, 2]);
        let mut a: Vec<&[u32]> = dense.chunks(2).filter(|c| c.iter().sum::<u32>() > 0).collect();
        let mut b: Vec<&[u32]> = sparse.chunks(2).take(slots).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(dense.iter().sum::<u32>(), 40);
    }

    #[test]
    fn bdeu_polya_urn_values() {
        // one binary observation: predictive 1/2
        let d = binary(&[&[0]]);
        let v = bdeu_log_marginal(&d, 0, &NodeSet::empty(1), 1.0).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-12);
        // two identical observations: (1/2)(3/4)
        let d = binary(&[&[1], &[1]]);
        let v = bdeu_log_marginal(&d, 0, &NodeSet::empty(1), 1.0).unwrap();
        assert!((v - (3.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn bdeu_rejects_bad_ess() {
        let d = binary(&[&[0]]);
        assert!(bdeu_log_marginal(&d, 0, &NodeSet::empty(1), 0.0).is_err());
        assert!(bdeu_log_marginal(&d, 0, &NodeSet::empty(1), -1.0).is_err());
    }

    #[test]
    fn prior_penalty_is_additive() {
        let d = binary(&[&[0, 1, 0], &[1, 1, 0], &[1, 0, 1], &[0, 0, 0]]);
        let s = NodeSet::from_nodes(3, [1, 2]);
        let mut cfg = ScoreConfig::unrestricted(3, 2);
        let bdeu = bdeu_log_marginal(&d, 0, &s, 1.0).unwrap();
        assert_eq!(local_log_score(&d, 0, &s, &cfg).unwrap(), bdeu);
        assert_eq!(
            local_log_score(&d, 0, &NodeSet::empty(3), &cfg).unwrap(),
            bdeu_log_marginal(&d, 0, &NodeSet::empty(3), 1.0).unwrap()
        );
        cfg.prior_c = 10.0;
        let v = local_log_score(&d, 0, &s, &cfg).unwrap();
        assert!((v - (bdeu - 2.0 * 10f64.ln())).abs() < 1e-12);
        cfg.max_indegree = 1;
        assert!(matches!(
            local_log_score(&d, 0, &s, &cfg),
            Err(Error::IndegreeViolation { size: 2, max: 1 })
        ));
    }

    #[test]
    fn constant_parent_is_neutral() {
        let rows: Vec<Vec<u32>> = (0..20).map(|r| vec![(r % 2) as u32, 0, (r % 3 == 0) as u32]).collect();
        let d = Dataset::from_rows(vec![2, 1, 2], &rows).unwrap();
        let base = NodeSet::singleton(3, 2);
        let a = bdeu_log_marginal(&d, 0, &base, 1.0).unwrap();
        let b = bdeu_log_marginal(&d, 0, &base.with(1), 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn candidates_tie_break_by_id() {
        // columns 1 and 2 are identical copies of the child; column 3 is noise
        let rows: Vec<Vec<u32>> = (0..30)
            .map(|r| {
                let x = ((r * 7) % 3 == 0) as u32;
                vec![x, x, x, (r % 2) as u32]
            })
            .collect();
        let d = Dataset::from_rows(vec![2; 4], &rows).unwrap();
        let cfg = ScoreConfig::unrestricted(4, 2);
        assert_eq!(select_candidates(&d, 0, 1, &cfg).unwrap().to_vec(), vec![1]);
        assert_eq!(select_candidates(&d, 0, 2, &cfg).unwrap().to_vec(), vec![1, 2]);
        assert_eq!(select_candidates(&d, 0, 3, &cfg).unwrap().to_vec(), vec![1, 2, 3]);
        assert!(select_candidates(&d, 0, 4, &cfg).is_err());
    }

    #[test]
    fn domain_enumeration_counts() {
        let n = 5;
        let full = ParentSetDomain::unrestricted(n, 0, 2).enumerate(1000).unwrap();
        assert_eq!(full.len(), 1 + 4 + 6);
        let sizes: Vec<usize> = full.iter().map(NodeSet::len).collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(full[1].to_vec(), vec![1]);
        assert_eq!(full[5].to_vec(), vec![1, 2]);
        assert_eq!(full[10].to_vec(), vec![3, 4]);

        // candidates {1,2}, d = 3, d_out = 1
        let dom = ParentSetDomain::new(n, 0, NodeSet::from_nodes(n, [1, 2]), 3, 1);
        let sets = dom.enumerate(1000).unwrap();
        assert_eq!(sets.len(), 6);

        // no candidates, d_out = 1
        let dom = ParentSetDomain::new(n, 0, NodeSet::empty(n), 2, 1);
        assert_eq!(dom.enumerate(1000).unwrap().len(), 1 + 4);
        assert!(ParentSetDomain::unrestricted(n, 0, 4).enumerate(3).is_err());
    }

    #[test]
    fn cached_scorer_matches_direct() {
        let d = binary(&[&[0, 1, 0], &[1, 1, 0], &[1, 0, 1], &[0, 0, 0]]);
        let cfg = ScoreConfig::unrestricted(3, 1);
        let sc = CachedScorer::new(&d, cfg.clone()).unwrap();
        let s = NodeSet::singleton(3, 2);
        assert_eq!(sc.log_score(0, &s), local_log_score(&d, 0, &s, &cfg).unwrap());
        assert_eq!(sc.log_score(0, &s), sc.log_score(0, &s));
        assert_eq!(sc.log_score(0, &NodeSet::from_nodes(3, [1, 2])), f64::NEG_INFINITY);
    }
}

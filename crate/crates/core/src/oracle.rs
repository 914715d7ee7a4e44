//! Exact posterior by enumerating every DAG, for small networks.
//!
//! Nodes are assigned parent sets in index order; a choice is kept only if
//! the new arcs close no cycle among the nodes assigned so far, so each DAG
//! is produced exactly once. Local scores are tabulated densely by parent
//! bitmask before the sweep.

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::logspace::LogSumExp;
use crate::nodeset::NodeSet;
use crate::scoring::LocalScores;

/// Largest `n` accepted by the enumerator (3,781,503 DAGs).
pub const MAX_ENUM_NODES: usize = 6;

fn check_cap(n: usize) -> Result<()> {
    if n > MAX_ENUM_NODES {
        return Err(Error::ResourceExhausted(format!(
            "exact enumeration is capped at {MAX_ENUM_NODES} nodes, got {n}"
        )));
    }
    Ok(())
}

/// Does `from` reach any node of `targets` along the arcs encoded by the
/// parent masks?
fn reaches(parents: &[u32], n: usize, from: usize, targets: u32) -> bool {
    let mut seen = 1u32 << from;
    let mut frontier = 1u32 << from;
    while frontier != 0 {
        let mut next = 0u32;
        for (v, &pm) in parents.iter().enumerate().take(n) {
            if pm & frontier != 0 && seen >> v & 1 == 0 {
                next |= 1 << v;
            }
        }
        if next & targets != 0 {
            return true;
        }
        seen |= next;
        frontier = next;
    }
    false
}

/// Calls `visit` with the parent bitmasks of every DAG on `n` nodes whose
/// indegrees are at most `d`.
pub fn for_each_dag(n: usize, d: usize, mut visit: impl FnMut(&[u32])) -> Result<()> {
    check_cap(n)?;
    let options: Vec<Vec<u32>> = (0..n)
        .map(|v| {
            (0u32..(1 << n))
                .filter(|m| m >> v & 1 == 0 && m.count_ones() as usize <= d)
                .collect()
        })
        .collect();
    let mut parents = vec![0u32; n];
    fn rec(v: usize, n: usize, options: &[Vec<u32>], parents: &mut [u32], visit: &mut dyn FnMut(&[u32])) {
        if v == n {
            visit(parents);
            return;
        }
        for &m in &options[v] {
            if m != 0 && reaches(parents, n, v, m) {
                continue;
            }
            parents[v] = m;
            rec(v + 1, n, options, parents, visit);
        }
        parents[v] = 0;
    }
    rec(0, n, &options, &mut parents, &mut visit);
    Ok(())
}

fn dag_from_masks(masks: &[u32]) -> Dag {
    let n = masks.len();
    let sets = masks
        .iter()
        .map(|&m| NodeSet::from_nodes(n, (0..n).filter(|&u| m >> u & 1 == 1)))
        .collect();
    Dag::from_parent_sets(sets).expect("enumerated graphs are acyclic")
}

/// Every DAG with indegree at most `d`, materialized.
pub fn enumerate_dags(n: usize, d: usize) -> Result<Vec<Dag>> {
    let mut out = Vec::new();
    for_each_dag(n, d, |m| out.push(dag_from_masks(m)))?;
    Ok(out)
}

pub fn count_dags(n: usize, d: usize) -> Result<u64> {
    let mut c = 0u64;
    for_each_dag(n, d, |_| c += 1)?;
    Ok(c)
}

/// Dense `[node][parent mask]` table of log scores.
fn dense_scores<S: LocalScores + ?Sized>(scores: &S, d: usize, strict: bool) -> Result<Vec<Vec<f64>>> {
    let n = scores.n();
    let mut out = vec![vec![f64::NEG_INFINITY; 1 << n]; n];
    for (v, row) in out.iter_mut().enumerate() {
        for m in 0u32..(1 << n) {
            if m >> v & 1 == 1 || m.count_ones() as usize > d {
                continue;
            }
            let s = NodeSet::from_nodes(n, (0..n).filter(|&u| m >> u & 1 == 1));
            let x = scores.log_score(v, &s);
            if strict && !x.is_finite() {
                return Err(Error::MissingScore {
                    node: v,
                    parents: s.to_vec(),
                });
            }
            row[m as usize] = x;
        }
    }
    Ok(out)
}

#[inline]
fn graph_log_score(dense: &[Vec<f64>], masks: &[u32]) -> f64 {
    masks.iter().enumerate().map(|(v, &m)| dense[v][m as usize]).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPosterior {
    pub n: usize,
    pub log_z: f64,
    /// Row-major `p_ij = P(i -> j)`.
    pub arc_probs: Vec<f64>,
    pub map_dag: Dag,
    pub map_log_score: f64,
    pub dag_count: u64,
}

impl ExactPosterior {
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.arc_probs[i * self.n + j]
    }

    /// `n × n` CSV under `# format=1` and `# logZ=` header lines.
    pub fn to_csv(&self, names: &[String]) -> String {
        crate::io::arc_matrix_to_csv(names, &self.arc_probs, &[format!("logZ={:.16e}", self.log_z)])
    }
}

/// Exact arc posteriors over all DAGs with indegree at most `d`. Every
/// admissible parent set must have a finite score.
pub fn exact_posterior<S: LocalScores + ?Sized>(scores: &S, d: usize) -> Result<ExactPosterior> {
    exact_posterior_inner(scores, d, true)
}

/// As [`exact_posterior`], but parent sets without a score simply carry no
/// mass (for pruned tables).
pub fn exact_posterior_partial<S: LocalScores + ?Sized>(scores: &S, d: usize) -> Result<ExactPosterior> {
    exact_posterior_inner(scores, d, false)
}

fn exact_posterior_inner<S: LocalScores + ?Sized>(scores: &S, d: usize, strict: bool) -> Result<ExactPosterior> {
    let n = scores.n();
    check_cap(n)?;
    let dense = dense_scores(scores, d, strict)?;
    // arc accumulators carry exp(log π - shift), rescaled when the shift grows
    let mut shift = f64::NEG_INFINITY;
    let mut total = 0.0f64;
    let mut arcs = vec![0.0f64; n * n];
    let mut best = (f64::NEG_INFINITY, vec![0u32; n]);
    let mut count = 0u64;
    for_each_dag(n, d, |masks| {
        count += 1;
        let lp = graph_log_score(&dense, masks);
        if lp == f64::NEG_INFINITY {
            return;
        }
        if lp > best.0 {
            best = (lp, masks.to_vec());
        }
        if lp > shift {
            let r = (shift - lp).exp();
            total *= r;
            arcs.iter_mut().for_each(|a| *a *= r);
            shift = lp;
        }
        let w = (lp - shift).exp();
        total += w;
        for (v, &m) in masks.iter().enumerate() {
            let mut m = m;
            while m != 0 {
                let u = m.trailing_zeros() as usize;
                arcs[u * n + v] += w;
                m &= m - 1;
            }
        }
    })?;
    if total == 0.0 {
        return Err(Error::InvalidInput("every DAG has zero score".into()));
    }
    let log_z = shift + total.ln();
    arcs.iter_mut().for_each(|a| *a /= total);
    Ok(ExactPosterior {
        n,
        log_z,
        arc_probs: arcs,
        map_dag: dag_from_masks(&best.1),
        map_log_score: best.0,
        dag_count: count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorDistance {
    /// `Z̃ / Z`.
    pub z_ratio: f64,
    /// Total variation between `π/Z` and `π̃/Z̃`.
    pub tv: f64,
    /// `KL(π̃/Z̃ ‖ π/Z)`.
    pub kl: f64,
}

/// Compares the posterior under `full` scores with the one under `pruned`
/// scores, by enumeration.
pub fn posterior_distance<A, B>(full: &A, pruned: &B, d: usize) -> Result<PosteriorDistance>
where
    A: LocalScores + ?Sized,
    B: LocalScores + ?Sized,
{
    let n = full.n();
    if pruned.n() != n {
        return Err(Error::ShapeMismatch(format!("{n} vs {} nodes", pruned.n())));
    }
    check_cap(n)?;
    let f = dense_scores(full, d, true)?;
    let g = dense_scores(pruned, d, false)?;
    let mut zf = LogSumExp::new();
    let mut zg = LogSumExp::new();
    for_each_dag(n, d, |m| {
        zf.add(graph_log_score(&f, m));
        zg.add(graph_log_score(&g, m));
    })?;
    let (lzf, lzg) = (zf.value(), zg.value());
    if lzg == f64::NEG_INFINITY {
        return Err(Error::InvalidInput("pruned scores leave no DAG with positive mass".into()));
    }
    let mut tv = 0.0;
    let mut kl = 0.0;
    for_each_dag(n, d, |m| {
        let lp = graph_log_score(&f, m) - lzf;
        let lq = graph_log_score(&g, m) - lzg;
        let (p, q) = (lp.exp(), lq.exp());
        tv += (p - q).abs();
        if q > 0.0 {
            kl += q * (lq - lp);
        }
    })?;
    Ok(PosteriorDistance {
        z_ratio: (lzg - lzf).exp(),
        tv: 0.5 * tv,
        kl: kl.max(0.0),
    })
}

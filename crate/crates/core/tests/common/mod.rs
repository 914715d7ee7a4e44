//! Independent oracles and fixtures shared by the integration tests. Nothing
//! here calls into the sampler internals; graphs are plain parent bitmasks.

#![allow(dead_code)]

use std::collections::HashMap;

use bnsample::harness::{forward_sample, NetworkSpec};
use bnsample::{Dag, Dataset, LocalScores, NodeSet, PrunedScoreTable, ScoreConfig, ScoreTables};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const NET4: &str = include_str!("../../../../data/net4.toml");

/// The four-node benchmark instance: 200 rows forward-sampled from the
/// bundled network.
pub fn net4_data(rows: usize, seed: u64) -> Dataset {
    let net = NetworkSpec::from_toml(NET4).unwrap();
    forward_sample(&net, rows, seed).unwrap().0
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mask_to_set(n: usize, mask: u32) -> NodeSet {
    NodeSet::from_nodes(n, (0..n).filter(|&v| mask >> v & 1 == 1))
}

pub fn set_to_mask(s: &NodeSet) -> u32 {
    s.iter().fold(0, |m, v| m | 1 << v)
}

pub fn dag_from_masks(masks: &[u32]) -> Dag {
    let n = masks.len();
    Dag::from_parent_sets(masks.iter().map(|&m| mask_to_set(n, m)).collect()).unwrap()
}

pub fn masks_of(dag: &Dag) -> Vec<u32> {
    dag.parent_sets().iter().map(set_to_mask).collect()
}

/// Descendants of `v` (excluding `v`) by repeated child expansion.
pub fn descendants(masks: &[u32], v: usize) -> u32 {
    let mut seen = 0u32;
    let mut frontier = vec![v];
    while let Some(u) = frontier.pop() {
        for (w, &m) in masks.iter().enumerate() {
            if m >> u & 1 == 1 && seen >> w & 1 == 0 {
                seen |= 1 << w;
                frontier.push(w);
            }
        }
    }
    seen
}

/// Nodes other than `v` that are not descendants of `v`.
pub fn non_descendants(masks: &[u32], v: usize) -> u32 {
    let all = (1u32 << masks.len()) - 1;
    all & !descendants(masks, v) & !(1 << v)
}

pub fn is_acyclic(masks: &[u32]) -> bool {
    (0..masks.len()).all(|v| descendants(masks, v) >> v & 1 == 0)
}

/// Every DAG on `n` nodes with indegree at most `d`, by filtering all
/// parent-mask assignments.
pub fn all_dags(n: usize, d: usize) -> Vec<Vec<u32>> {
    let per = 1u32 << n;
    let mut out = Vec::new();
    let total = (per as u64).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut masks = vec![0u32; n];
        let mut ok = true;
        for (v, m) in masks.iter_mut().enumerate() {
            *m = (c % per as u64) as u32;
            c /= per as u64;
            if *m >> v & 1 == 1 || m.count_ones() as usize > d {
                ok = false;
                break;
            }
        }
        if ok && is_acyclic(&masks) {
            out.push(masks);
        }
    }
    out
}

pub fn log_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_pi(scores: &impl LocalScores, masks: &[u32]) -> f64 {
    let n = masks.len();
    (0..n).map(|v| scores.log_score(v, &mask_to_set(n, masks[v]))).sum()
}

/// Exact arc posterior by summing over `dags`.
pub fn exact_arcs(scores: &impl LocalScores, dags: &[Vec<u32>]) -> Vec<f64> {
    let n = dags[0].len();
    let lps: Vec<f64> = dags.iter().map(|g| log_pi(scores, g)).collect();
    let lz = log_sum(lps.iter().copied());
    let mut p = vec![0.0; n * n];
    for (g, lp) in dags.iter().zip(&lps) {
        let w = (lp - lz).exp();
        for v in 0..n {
            for u in 0..n {
                if g[v] >> u & 1 == 1 {
                    p[u * n + v] += w;
                }
            }
        }
    }
    p
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random log scores for every parent set of size at most `d`. Each
/// nonempty set is dropped with probability `drop`; the empty set is always
/// present.
pub fn random_tables(n: usize, d: usize, sigma: f64, drop: f64, seed: u64) -> ScoreTables {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let tables = (0..n)
        .map(|i| {
            let mut entries = Vec::new();
            for mask in 0u32..1 << n {
                if mask >> i & 1 == 1 || mask.count_ones() as usize > d {
                    continue;
                }
                if mask != 0 && r.random::<f64>() < drop {
                    continue;
                }
                let size_penalty = mask.count_ones() as f64;
                entries.push((mask_to_set(n, mask), -size_penalty + normal.sample(&mut r)));
            }
            PrunedScoreTable::from_entries(n, i, entries, 0.0).unwrap()
        })
        .collect();
    ScoreTables::new((0..n).map(|i| format!("X{i}")).collect(), tables).unwrap()
}

/// `log Σ_{T ⊆ S ⊆ U} f(S)` by direct scan of a lookup.
pub fn brute_interval(lookup: &HashMap<u32, f64>, t: u32, u: u32) -> f64 {
    log_sum(
        lookup
            .iter()
            .filter(|(&s, _)| s & t == t && s & !u == 0)
            .map(|(_, &v)| v),
    )
}

pub fn table_lookup(t: &PrunedScoreTable) -> HashMap<u32, f64> {
    t.kept().iter().map(|(s, v)| (set_to_mask(s), *v)).collect()
}

/// A random score function over all subsets of `V \ {node}` with `|V| = n`.
/// `regime` selects the shape: iid log-normal, additive with noise, steeply
/// size-penalized, or sparse with exact zeros.
pub fn random_local_table(n: usize, node: usize, regime: u64, seed: u64) -> bnsample::scoring::LocalScoreTable {
    use bnsample::scoring::{LocalScoreTable, ParentSetDomain};
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let weights: Vec<f64> = (0..n).map(|_| -1.0 + 2.0 * noise.sample(&mut r)).collect();
    let mut entries = Vec::new();
    for mask in 0u32..1 << n {
        if mask >> node & 1 == 1 {
            continue;
        }
        let size = mask.count_ones() as f64;
        let additive: f64 = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| weights[v]).sum();
        let z = noise.sample(&mut r);
        let v = match regime % 4 {
            0 => 3.0 * z,
            1 => additive + 0.5 * z,
            2 => -4.0 * size + z,
            _ => {
                if mask != 0 && r.random::<f64>() < 0.3 {
                    f64::NEG_INFINITY
                } else {
                    additive + z
                }
            }
        };
        entries.push((mask_to_set(n, mask), v));
    }
    LocalScoreTable {
        node,
        entries,
        domain: ParentSetDomain::unrestricted(n, node, n - 1),
    }
}

/// Checks `(1 - ε) f[T, U] ≤ f̃[T, U] ≤ f[T, U]` for every `U` and every
/// `T` with `|T| ≤ 1`, with `1e-12` relative slack. Returns checks and
/// violations.
pub fn epsilon_closeness(full: &bnsample::scoring::LocalScoreTable, pruned: &PrunedScoreTable, eps: f64) -> (usize, usize) {
    let n = full.domain.n;
    let lookup: HashMap<u32, f64> = full.entries.iter().map(|(s, v)| (set_to_mask(s), *v)).collect();
    let ground = set_to_mask(&full.domain.ground_set());
    let slack: f64 = 1e-12;
    let (mut checks, mut bad) = (0, 0);
    let mut u = 0u32;
    loop {
        let mut ts = vec![0u32];
        ts.extend((0..n).filter(|&t| u >> t & 1 == 1).map(|t| 1u32 << t));
        for t in ts {
            let f = brute_interval(&lookup, t, u);
            let ft = pruned.log_interval_sum(&mask_to_set(n, t), &mask_to_set(n, u));
            checks += 1;
            let upper_ok = ft <= f + slack.ln_1p() || (ft == f64::NEG_INFINITY);
            let lower_ok = f == f64::NEG_INFINITY || ft >= f + (-eps).ln_1p() + (-slack).ln_1p();
            if !(upper_ok && lower_ok) {
                bad += 1;
            }
        }
        if u == ground {
            break;
        }
        u = (u.wrapping_sub(ground)) & ground;
    }
    (checks, bad)
}

/// Parent masks after a single-arc move.
pub fn apply_move_masks(g: &[u32], mv: bnsample::Move) -> Vec<u32> {
    use bnsample::MoveKind;
    let mut h = g.to_vec();
    let (t, hd) = (mv.tail, mv.head);
    match mv.kind {
        MoveKind::Add => h[hd] |= 1 << t,
        MoveKind::Delete => h[hd] &= !(1 << t),
        MoveKind::Reverse => {
            h[hd] &= !(1 << t);
            h[t] |= 1 << hd;
        }
    }
    h
}

/// One-step transition matrix over `dags` read from the library's
/// transition rows of a chain started at each graph.
pub fn library_matrix(tables: &ScoreTables, dags: &[Vec<u32>], cfg: &bnsample::ChainConfig) -> Vec<Vec<f64>> {
    use bnsample::{ChainState, Engine};
    let index: HashMap<Vec<u32>, usize> = dags.iter().cloned().enumerate().map(|(k, g)| (g, k)).collect();
    let m = dags.len();
    let mut p = vec![vec![0.0; m]; m];
    for (a, g) in dags.iter().enumerate() {
        let chain = ChainState::with_dag(tables, cfg.clone(), dag_from_masks(g), 0, 0).unwrap();
        let row = match cfg.engine {
            Engine::Gibby => chain.gibby_transition_row().unwrap(),
            Engine::Gc => chain.gc_transition_row(),
        };
        let mut out = 0.0;
        for (mv, prob) in row {
            if prob == 0.0 {
                continue;
            }
            let h = apply_move_masks(g, mv);
            let b = index[&h];
            p[a][b] += prob;
            out += prob;
        }
        p[a][a] += 1.0 - out;
    }
    p
}

/// The same matrix from the definition: pair `(i, j)` with probability
/// `q_ij`, its move accepted with `min(1, π(G')/π(G))` if the result is an
/// acyclic graph in the model.
pub fn oracle_matrix(tables: &ScoreTables, dags: &[Vec<u32>], q: &dyn Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    let n = dags[0].len();
    let index: HashMap<Vec<u32>, usize> = dags.iter().cloned().enumerate().map(|(k, g)| (g, k)).collect();
    let m = dags.len();
    let mut p = vec![vec![0.0; m]; m];
    for (a, g) in dags.iter().enumerate() {
        let lp = log_pi(tables, g);
        let mut out = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut h = g.to_vec();
                if g[j] >> i & 1 == 1 {
                    h[j] &= !(1 << i);
                } else if g[i] >> j & 1 == 1 {
                    h[i] &= !(1 << j);
                    h[j] |= 1 << i;
                } else {
                    h[j] |= 1 << i;
                }
                let Some(&b) = index.get(&h) else { continue };
                if !is_acyclic(&h) {
                    continue;
                }
                let lh = log_pi(tables, &h);
                let acc = if lh == f64::NEG_INFINITY { 0.0 } else { (lh - lp).exp().min(1.0) };
                p[a][b] += q(i, j) * acc;
                out += q(i, j) * acc;
            }
        }
        p[a][a] += 1.0 - out;
    }
    p
}

/// Largest relative violation of `π(G) P(G, G') = π(G') P(G', G)`.
pub fn detailed_balance_violation(tables: &ScoreTables, dags: &[Vec<u32>], p: &[Vec<f64>]) -> f64 {
    let lps: Vec<f64> = dags.iter().map(|g| log_pi(tables, g)).collect();
    let top = lps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut worst: f64 = 0.0;
    for a in 0..dags.len() {
        for b in 0..dags.len() {
            if a == b {
                continue;
            }
            let x = (lps[a] - top).exp() * p[a][b];
            let y = (lps[b] - top).exp() * p[b][a];
            if x.max(y) > 0.0 {
                worst = worst.max((x - y).abs() / x.max(y));
            }
        }
    }
    worst
}

pub fn matrix_max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max)
}

/// Post burn-in arc frequencies pooled over `chains` parallel chains.
pub fn sampled_arcs(
    tables: &ScoreTables,
    engine: bnsample::Engine,
    mix: bnsample::MoveMix,
    steps: u64,
    chains: u64,
    seed: u64,
) -> (Vec<f64>, bnsample::harness::RunSummary) {
    let mut cfg = bnsample::harness::RunConfig::new(ScoreConfig::unrestricted(tables.n(), tables.max_indegree()), steps, 100, seed);
    cfg.engine = engine;
    cfg.mix = mix;
    cfg.chains = chains;
    cfg.trace = false;
    let out = bnsample::harness::run_chains(tables, &cfg, None).unwrap();
    (out.combined.arc_frequencies(), out.summary)
}

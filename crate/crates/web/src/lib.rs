//! WebAssembly entry points for the browser demo. Every export returns a
//! JSON string; the `*_json` functions are the native equivalents used by
//! tests.

use bnsample::harness::{compute_mad, drive, forward_sample, NetworkSpec};
use bnsample::rng::stream_rng;
use bnsample::{exact_posterior, ChainConfig, ChainState, Engine, MoveMix, PruneMode, ScoreConfig, ScoreTables, SumTree};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const NET4: &str = include_str!("../../../data/net4.toml");
const MAX_DRAWS: u32 = 10_000_000;

#[derive(Serialize)]
pub struct ChainReport {
    pub names: Vec<String>,
    pub exact: Vec<f64>,
    pub estimate: Vec<f64>,
    pub mad: f64,
    pub samples: u64,
    pub acceptance_rate: f64,
    pub tentative_rate: f64,
    /// `(step, log_pi)` at each thinned sample.
    pub trace: Vec<(u64, f64)>,
    pub exact_map_log_score: f64,
}

#[derive(Serialize)]
pub struct KeptRow {
    pub epsilon: f64,
    pub complete: f64,
    pub bottom_up: f64,
    pub identical: bool,
}

#[derive(Serialize)]
pub struct Histogram {
    pub expected: Vec<f64>,
    pub observed: Vec<f64>,
    pub linf: f64,
}

/// Samples the bundled four-node network, then runs one chain and compares
/// its arc frequencies with the exact posterior.
pub fn chain_vs_exact_json(
    rows: u32,
    data_seed: u32,
    chain_seed: u32,
    steps: u32,
    thin: u32,
    engine: &str,
    moves: &str,
) -> bnsample::Result<ChainReport> {
    let engine: Engine = engine.parse()?;
    let mix: MoveMix = moves.parse()?;
    let (steps, thin) = (u64::from(steps), u64::from(thin));
    if thin == 0 || steps < thin {
        return Err(bnsample::Error::InvalidInput("need steps >= thin >= 1".into()));
    }
    let net = NetworkSpec::from_toml(NET4)?;
    let (data, _) = forward_sample(&net, rows as usize, u64::from(data_seed))?;
    let n = data.n();
    let d = n - 1;
    let tables = ScoreTables::build(&data, &ScoreConfig::unrestricted(n, d), 0.0, PruneMode::Off)?;
    let exact = exact_posterior(&tables, d)?;

    let cfg = ChainConfig::new(engine).with_mix(mix);
    let mut chain = ChainState::new(&tables, cfg, u64::from(chain_seed), 0)?;
    let mut counts = vec![0u64; n * n];
    let mut samples = 0u64;
    let mut trace = Vec::new();
    drive(&mut chain, 0, steps, thin, |s, step, _, _| {
        s.tally_arcs(&mut counts, 1);
        samples += 1;
        trace.push((step, s.log_pi()));
    })?;
    let estimate: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    let mad = compute_mad(&estimate, &exact.arc_probs, n)?;
    Ok(ChainReport {
        names: data.names().to_vec(),
        exact: exact.arc_probs.clone(),
        estimate,
        mad,
        samples,
        acceptance_rate: chain.stats().acceptance_rate(),
        tentative_rate: chain.stats().tentative_rate(),
        trace,
        exact_map_log_score: exact.map_log_score,
    })
}

/// Kept fraction of complete and bottom-up pruning on one random instance,
/// for each threshold.
pub fn kept_curve_json(nodes: u32, rows: u32, seed: u32, epsilons: &[f64]) -> bnsample::Result<Vec<KeptRow>> {
    let nodes = nodes as usize;
    if !(2..=12).contains(&nodes) {
        return Err(bnsample::Error::InvalidInput("nodes must be in 2..=12".into()));
    }
    let net = NetworkSpec::random(nodes, 2, 3, 0.35, 1.0, u64::from(seed))?;
    let (data, _) = forward_sample(&net, rows as usize, u64::from(seed))?;
    let cfg = ScoreConfig::unrestricted(nodes, 3.min(nodes - 1));
    epsilons
        .iter()
        .map(|&eps| {
            let complete = ScoreTables::build(&data, &cfg, eps, PruneMode::Complete)?;
            let bottom_up = ScoreTables::build(&data, &cfg, eps, PruneMode::BottomUp)?;
            Ok(KeptRow {
                epsilon: eps,
                complete: complete.kept_fraction(),
                bottom_up: bottom_up.kept_fraction(),
                identical: complete == bottom_up,
            })
        })
        .collect()
}

/// Draws from a sum-tree over `weights` and tabulates the frequencies.
pub fn sumtree_histogram_json(weights: &[f64], draws: u32, seed: u32) -> bnsample::Result<Histogram> {
    if draws == 0 || draws > MAX_DRAWS {
        return Err(bnsample::Error::InvalidInput(format!("draws must be in 1..={MAX_DRAWS}")));
    }
    let tree = SumTree::new(weights)?;
    let total = tree.total();
    let mut rng = stream_rng(u64::from(seed), 0);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..draws {
        counts[tree.draw(&mut rng)?] += 1;
    }
    let expected: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / f64::from(draws)).collect();
    let linf = expected
        .iter()
        .zip(&observed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Histogram {
        expected,
        observed,
        linf,
    })
}

fn to_js<T: Serialize>(r: bnsample::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn chain_vs_exact(
    rows: u32,
    data_seed: u32,
    chain_seed: u32,
    steps: u32,
    thin: u32,
    engine: &str,
    moves: &str,
) -> Result<String, JsError> {
    to_js(chain_vs_exact_json(rows, data_seed, chain_seed, steps, thin, engine, moves))
}

#[wasm_bindgen]
pub fn kept_curve(nodes: u32, rows: u32, seed: u32, epsilons: Vec<f64>) -> Result<String, JsError> {
    to_js(kept_curve_json(nodes, rows, seed, &epsilons))
}

#[wasm_bindgen]
pub fn sumtree_histogram(weights: Vec<f64>, draws: u32, seed: u32) -> Result<String, JsError> {
    to_js(sumtree_histogram_json(&weights, draws, seed))
}

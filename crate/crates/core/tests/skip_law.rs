mod common;

use bnsample::{ChainConfig, ChainState, Engine, PrunedScoreTable, ScoreTables};
use common::{mask_to_set, rng};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two nodes where each single arc multiplies the posterior by `b`, so the
/// empty graph has total tentative mass exactly `b`.
fn tables_with_mass(b: f64) -> ScoreTables {
    let tables = (0..2)
        .map(|v| {
            let other = mask_to_set(2, 1 << (1 - v));
            PrunedScoreTable::from_entries(2, v, vec![(mask_to_set(2, 0), 0.0), (other, b.ln())], 0.0).unwrap()
        })
        .collect();
    ScoreTables::new(vec!["A".into(), "B".into()], tables).unwrap()
}

fn skips(b: f64, draws: usize, seed: u64) -> Vec<u64> {
    let tables = tables_with_mass(b);
    let mut chain = ChainState::new(&tables, ChainConfig::new(Engine::Gibby), seed, 0).unwrap();
    assert!((chain.b_total().unwrap() - b).abs() < 1e-12);
    (0..draws).map(|_| chain.draw_skip().unwrap()).collect()
}

#[test]
fn skip_mean_matches_geometric() {
    let n = 100_000;
    for (k, b) in [0.01, 0.1, 0.5].into_iter().enumerate() {
        let s = skips(b, n, 10 + k as u64);
        let mean = s.iter().sum::<u64>() as f64 / n as f64;
        let expect = (1.0 - b) / b;
        let sigma = ((1.0 - b) / (b * b)).sqrt() / (n as f64).sqrt();
        assert!((mean - expect).abs() <= 3.0 * sigma, "b={b}: mean {mean}, expected {expect} ± {sigma}");
    }
}

#[test]
fn skip_distribution_passes_chi_square() {
    let n = 100_000;
    for (k, b) in [0.1, 0.5].into_iter().enumerate() {
        let s = skips(b, n, 20 + k as u64);
        // cells 0..K-1 plus a tail cell holding the remaining mass
        let cells = if b >= 0.5 { 10 } else { 40 };
        let mut counts = vec![0u64; cells + 1];
        for &x in &s {
            counts[(x as usize).min(cells)] += 1;
        }
        let mut probs: Vec<f64> = (0..cells).map(|k| (1.0 - b).powi(k as i32) * b).collect();
        probs.push((1.0 - b).powi(cells as i32));
        let stat: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| (c as f64 - p * n as f64).powi(2) / (p * n as f64))
            .sum();
        let p = 1.0 - ChiSquared::new(cells as f64).unwrap().cdf(stat);
        assert!(p > 1e-4, "b={b}: chi-square {stat}, p = {p}");
    }
}

#[test]
fn full_mass_never_skips() {
    assert!(skips(1.0, 1000, 3).iter().all(|&k| k == 0));
}

/// Over a long run, self-transitions before each event follow the same law:
/// the empty graph is left after `1 + Geometric(b)` steps on average.
#[test]
fn holding_time_of_the_empty_graph() {
    let b = 0.05;
    let tables = tables_with_mass(b);
    let mut chain = ChainState::new(&tables, ChainConfig::new(Engine::Gibby), 5, 0).unwrap();
    let mut r = rng(6);
    let mut holds = Vec::new();
    while holds.len() < 20_000 {
        if chain.dag().arc_count() == 0 {
            let out = chain.advance(u64::MAX).unwrap();
            holds.push(out.steps());
        } else {
            chain.advance(1 + r.random_range(0..3)).unwrap();
        }
    }
    let mean = holds.iter().sum::<u64>() as f64 / holds.len() as f64;
    let sigma = ((1.0 - b) / (b * b)).sqrt() / (holds.len() as f64).sqrt();
    assert!((mean - 1.0 / b).abs() <= 4.0 * sigma, "mean hold {mean}");
}

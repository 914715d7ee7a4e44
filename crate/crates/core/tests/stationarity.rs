mod common;

use bnsample::harness::{compute_mad, forward_sample, NetworkSpec};
use bnsample::oracle::exact_posterior_partial;
use bnsample::{Engine, LocalScores, MoveMix, PruneMode, ScoreConfig, ScoreTables};
use common::*;

const MIXES: [(u32, u32, u32); 3] = [(1, 0, 0), (100, 2, 0), (100, 2, 1)];

fn net4_tables(d: usize) -> ScoreTables {
    ScoreTables::build(&net4_data(200, 1), &ScoreConfig::unrestricted(4, d), 0.0, PruneMode::Off).unwrap()
}

fn three_node_tables(seed: u64) -> ScoreTables {
    let net = NetworkSpec::random(3, 3, 2, 0.8, 1.0, seed).unwrap();
    let data = forward_sample(&net, 150, seed).unwrap().0;
    ScoreTables::build(&data, &ScoreConfig::unrestricted(3, 2), 0.0, PruneMode::Off).unwrap()
}

fn check_all(tables: &ScoreTables, d: usize, steps: u64, tol: f64, seed: u64) {
    let n = tables.n();
    let exact = exact_arcs(tables, &all_dags(n, d));
    for engine in [Engine::Gibby, Engine::Gc] {
        for (k, &(b, r, m)) in MIXES.iter().enumerate() {
            let mix = MoveMix::new(b, r, m).unwrap();
            let (est, summary) = sampled_arcs(tables, engine, mix, steps, 4, seed + k as u64);
            let mad = compute_mad(&est, &exact, n).unwrap();
            assert!(mad <= tol, "{engine:?} {mix}: MAD {mad}");
            assert!(summary.acceptance_rate <= summary.tentative_rate + 1e-12);
        }
    }
}

#[test]
fn three_nodes_every_engine_and_mix() {
    check_all(&three_node_tables(7), 2, 1_000_000, 0.01, 11);
}

#[test]
fn four_nodes_every_engine_and_mix() {
    check_all(&net4_tables(3), 3, 1_000_000, 0.01, 21);
}

#[test]
fn four_nodes_with_indegree_cap() {
    check_all(&net4_tables(1), 1, 1_000_000, 0.01, 31);
}

#[test]
fn pruned_tables_match_their_own_posterior() {
    let data = net4_data(50, 3);
    for mode in [PruneMode::Complete, PruneMode::BottomUp] {
        let tables = ScoreTables::build(&data, &ScoreConfig::unrestricted(4, 3), 0.5, mode).unwrap();
        assert!(tables.kept_fraction() < 1.0, "kept {}", tables.kept_fraction());
        let exact = exact_posterior_partial(&tables, 3).unwrap();
        let oracle = exact_arcs(&tables, &all_dags(4, 3));
        assert!(max_abs_diff(&exact.arc_probs, &oracle) < 1e-12);
        for (b, r, m) in [(1, 0, 0), (100, 2, 1)] {
            let (est, _) = sampled_arcs(&tables, Engine::Gibby, MoveMix::new(b, r, m).unwrap(), 1_000_000, 4, 41);
            let mad = compute_mad(&est, &oracle, 4).unwrap();
            assert!(mad <= 0.01, "{mode:?} {b}:{r}:{m}: MAD {mad}");
        }
    }
}

mod common;

use std::fs;

use bnsample::harness::{compute_mad, forward_sample, run, NetworkSpec, RunConfig, ScoreSource};
use bnsample::io::{arity_file, parse_arc_matrix, parse_arity_file, parse_score_tables, read_data_csv, write_data_csv, write_score_tables};
use bnsample::{exact_posterior, Engine, MoveMix, PruneMode, ScoreConfig, ScoreTables};
use common::{all_dags, exact_arcs, max_abs_diff, NET4};
use tempfile::TempDir;

#[test]
fn files_round_trip_through_a_full_run() {
    let dir = TempDir::new().unwrap();
    let net = NetworkSpec::from_toml(NET4).unwrap();
    let net_path = dir.path().join("net.toml");
    fs::write(&net_path, net.to_toml().unwrap()).unwrap();
    let net = NetworkSpec::from_toml(&fs::read_to_string(&net_path).unwrap()).unwrap();

    let (data, labels) = forward_sample(&net, 300, 8).unwrap();
    let csv_path = dir.path().join("data.csv");
    let arity_path = dir.path().join("data.arity");
    write_data_csv(&data, Some(&labels), fs::File::create(&csv_path).unwrap()).unwrap();
    fs::write(&arity_path, arity_file(&data)).unwrap();
    let arity = parse_arity_file(&fs::read_to_string(&arity_path).unwrap()).unwrap();
    let (back, back_labels) = read_data_csv(fs::File::open(&csv_path).unwrap(), Some(&arity)).unwrap();
    assert_eq!(back.arities(), data.arities());
    for i in 0..data.n() {
        let decode = |d: &bnsample::Dataset, l: &bnsample::io::Labels| -> Vec<String> {
            d.column(i).iter().map(|&c| l[i][c as usize].clone()).collect()
        };
        assert_eq!(decode(&back, &back_labels), decode(&data, &labels));
    }

    let cfg = ScoreConfig::unrestricted(4, 3);
    let tables = ScoreTables::build(&back, &cfg, 1e-3, PruneMode::BottomUp).unwrap();
    let score_path = dir.path().join("scores.txt");
    fs::write(&score_path, write_score_tables(&tables)).unwrap();
    let loaded = parse_score_tables(&fs::read_to_string(&score_path).unwrap()).unwrap();
    assert_eq!(loaded, tables);

    let exact = exact_posterior(&ScoreTables::build(&back, &cfg, 0.0, PruneMode::Off).unwrap(), 3).unwrap();
    let exact_path = dir.path().join("exact.csv");
    fs::write(&exact_path, exact.to_csv(back.names())).unwrap();
    let reference = parse_arc_matrix(&fs::read_to_string(&exact_path).unwrap()).unwrap();
    assert!(reference.meta("logZ").is_some());
    let full = ScoreTables::build(&back, &cfg, 0.0, PruneMode::Off).unwrap();
    assert!(max_abs_diff(&reference.values, &exact_arcs(&full, &all_dags(4, 3))) < 1e-12);

    let mut run_cfg = RunConfig::new(cfg, 2_000_000, 100, 17);
    run_cfg.engine = Engine::Gibby;
    run_cfg.mix = MoveMix::new(100, 2, 1).unwrap();
    run_cfg.chains = 2;
    let out = run(&run_cfg, ScoreSource::Tables(loaded)).unwrap();
    let trace_path = dir.path().join("trace.jsonl");
    out.traces[0].write_jsonl(fs::File::create(&trace_path).unwrap()).unwrap();
    let trace = fs::read_to_string(&trace_path).unwrap();
    assert_eq!(trace.lines().next(), Some("# format=1"));
    assert_eq!(trace.lines().count() as u64, 1 + out.traces[0].samples);

    let arcs_path = dir.path().join("arcs.csv");
    fs::write(&arcs_path, out.combined.arc_csv(back.names())).unwrap();
    let est = parse_arc_matrix(&fs::read_to_string(&arcs_path).unwrap()).unwrap();
    assert_eq!(est.meta("samples"), Some("40000"));
    let mad = compute_mad(&est.values, &reference.values, 4).unwrap();
    assert!(mad < 0.02, "MAD {mad}");
    assert!(out.summary.kept_fraction.is_some());
}

#[test]
fn lazy_scores_from_data_reproduce_the_tabled_run() {
    let data = common::net4_data(150, 4);
    let mut cfg = RunConfig::new(ScoreConfig::unrestricted(4, 2), 200_000, 50, 3);
    cfg.chains = 2;
    let tabled = run(&cfg, ScoreSource::Data(&data)).unwrap();
    cfg.lazy_scores = true;
    let lazy = run(&cfg, ScoreSource::Data(&data)).unwrap();
    assert_eq!(tabled.combined.arc_counts, lazy.combined.arc_counts);
    assert_eq!(tabled.summary.samples, lazy.summary.samples);
}

use itemset_grid::dataio::{write_db, write_partitions, GenParams, PartitionSpec};
use itemset_grid::itemsets::{SupportThreshold, TransactionDb};
use itemset_grid::simnet::{
    compare_traces, replay_check, run_config, InputSource, Protocol, RunConfig, RunTrace,
};
use itemset_grid::Error;

fn generated(seed: u64) -> InputSource {
    InputSource::Generated {
        params: GenParams {
            num_transactions: 400,
            universe_size: 40,
            avg_transaction_size: 6.0,
            num_patterns: 12,
            seed,
            ..GenParams::default()
        },
        partition: PartitionSpec::linear(3, 5.0, seed),
    }
}

fn config(protocol: Protocol, input: InputSource) -> RunConfig {
    RunConfig {
        protocol,
        support: SupportThreshold::new(0.05).unwrap(),
        k: 4,
        input,
    }
}

#[test]
fn trace_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trace = run_config(&config(Protocol::Gfm, generated(1))).unwrap();
    let path = dir.path().join("t.json");
    trace.write_json(&path).unwrap();
    let back = RunTrace::read_json(&path).unwrap();
    assert_eq!(back, trace);
    assert!(replay_check(&back).unwrap().matches);
}

#[test]
fn replay_from_files_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let db = TransactionDb::concat(&generated(2).load().unwrap()).unwrap();
    let file = dir.path().join("d.txt");
    write_db(&db, &file).unwrap();
    let spec = PartitionSpec::uniform(4, 9);
    let (manifest, _) = write_partitions(&db, &spec, "d.txt", dir.path(), "d").unwrap();

    let from_file = InputSource::File {
        path: file.display().to_string(),
        partition: spec,
    };
    let from_manifest = InputSource::Manifest {
        path: manifest.display().to_string(),
    };
    assert_eq!(from_file.load().unwrap(), from_manifest.load().unwrap());
    for input in [from_file, from_manifest] {
        for protocol in [Protocol::Fdm, Protocol::Gfm] {
            let trace = run_config(&config(protocol, input.clone())).unwrap();
            let report = replay_check(&trace).unwrap();
            assert!(report.matches, "{protocol}: {:?}", report.divergence);
        }
    }
}

#[test]
fn tampering_is_located() {
    let trace = run_config(&config(Protocol::Fdm, generated(3))).unwrap();
    let mut bad = trace.clone();
    bad.nodes[1].levels[0].remote_work += 1;
    let report = compare_traces(&trace, &bad).unwrap();
    assert!(!report.matches);
    let at = report.divergence.unwrap();
    assert!(at.starts_with("$.nodes[1].levels[0].remote_work"), "{at}");
}

#[test]
fn different_seeds_are_not_comparable() {
    let a = run_config(&config(Protocol::Gfm, generated(4))).unwrap();
    let b = run_config(&config(Protocol::Gfm, generated(5))).unwrap();
    assert!(matches!(compare_traces(&a, &b), Err(Error::Config(_))));
}

#[test]
fn runs_are_reproducible_across_protocols() {
    for protocol in [Protocol::Centralized, Protocol::Fdm, Protocol::Gfm] {
        let a = run_config(&config(protocol, generated(6))).unwrap();
        let b = run_config(&config(protocol, generated(6))).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

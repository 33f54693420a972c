//! Ingestion formats, feature round trips, and run configuration.

use hfdkit::error::Error;
use hfdkit::hfd::{hfd_per_channel, hfd_windowed, HfdParams};
use hfdkit::io::{
    load_dataset, read_features, run_pipeline, write_feature_vectors, write_feature_windows,
    write_recording_csv, DatasetManifest, RunConfig, RunMeta,
};
use hfdkit::signal::{ChannelRegistry, Group};
use hfdkit::synth::{make_cohort, SynthKind, SynthSpec};

fn small_registry() -> ChannelRegistry {
    ChannelRegistry::new(vec!["c1".into(), "c2".into()]).unwrap()
}

fn write_small_cohort(dir: &std::path::Path, subjects: usize, presentations: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let registry = small_registry();
    let spec = SynthSpec::new(
        SynthKind::FractionalBrownianMotion { hurst: 0.5 },
        256,
        0,
        64.0,
    );
    let cohort = make_cohort(subjects, presentations, &spec, &spec, &registry, 3).unwrap();
    for rec in &cohort {
        write_recording_csv(dir, rec).unwrap();
    }
}

#[test]
fn manifest_rejects_duplicate_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    write_small_cohort(tmp.path(), 2, 2);
    // clone one sidecar pair under a different file name
    let original = tmp.path().join("expert01_1A.csv");
    let clone = tmp.path().join("zz_clone.csv");
    std::fs::copy(&original, &clone).unwrap();
    std::fs::copy(
        original.with_extension("json"),
        clone.with_extension("json"),
    )
    .unwrap();
    match DatasetManifest::scan_dir(tmp.path()) {
        Err(Error::ManifestConflict {
            subject_id,
            presentation_id,
        }) => {
            assert_eq!(subject_id, "expert01");
            assert_eq!(presentation_id, "1A");
        }
        other => panic!("expected ManifestConflict, got {other:?}"),
    }
}

#[test]
fn manifest_rejects_style_id_disagreement() {
    let tmp = tempfile::tempdir().unwrap();
    write_small_cohort(tmp.path(), 1, 1);
    let sidecar_path = tmp.path().join("expert01_1A.json");
    let text = std::fs::read_to_string(&sidecar_path).unwrap();
    std::fs::write(&sidecar_path, text.replace("\"A\"", "\"G\"")).unwrap();
    assert!(matches!(
        DatasetManifest::scan_dir(tmp.path()),
        Err(Error::Parse { .. })
    ));
}

#[test]
fn load_collects_all_failures_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    write_small_cohort(tmp.path(), 2, 2);
    std::fs::write(tmp.path().join("expert01_1A.csv"), "c1,c2\n0.0,bad\n").unwrap();
    std::fs::write(tmp.path().join("novice01_1G.csv"), "c1\n0.0\n1.0\n").unwrap();
    let manifest = DatasetManifest::scan_dir(tmp.path()).unwrap();
    let outcome = load_dataset(&manifest, &small_registry());
    assert_eq!(outcome.recordings.len(), 2);
    assert_eq!(outcome.failures.len(), 2);
    let provenances: Vec<&str> = outcome.failures.iter().map(|(p, _)| p.as_str()).collect();
    assert!(provenances[0].contains("expert01/1A"));
    assert!(provenances[1].contains("novice01/1G"));
    assert!(matches!(outcome.failures[0].1, Error::Parse { .. }));
    assert!(matches!(
        outcome.failures[1].1,
        Error::MissingChannel(_)
    ));
}

#[test]
fn empty_manifest_loads_empty_collection() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = DatasetManifest::scan_dir(tmp.path()).unwrap();
    assert!(manifest.entries.is_empty());
    let outcome = load_dataset(&manifest, &small_registry());
    assert!(outcome.recordings.is_empty());
    assert!(outcome.failures.is_empty());
}

fn meta(k_max: usize, window_seconds: Option<f64>) -> RunMeta {
    RunMeta {
        config_hash: "testhash".into(),
        seeds: vec![0],
        k_max,
        window_seconds,
    }
}

#[test]
fn feature_csv_round_trips_whole_signal_vectors() {
    let tmp = tempfile::tempdir().unwrap();
    write_small_cohort(tmp.path(), 2, 2);
    let manifest = DatasetManifest::scan_dir(tmp.path()).unwrap();
    let recordings = load_dataset(&manifest, &small_registry()).recordings;
    let params = HfdParams::new(20).unwrap();
    let vectors: Vec<_> = recordings
        .iter()
        .map(|r| hfd_per_channel(r, params).unwrap())
        .collect();
    let path = tmp.path().join("features.csv");
    write_feature_vectors(&path, &vectors, &meta(20, None)).unwrap();

    let table = read_features(&path).unwrap();
    assert!(!table.is_windowed());
    assert_eq!(table.meta.k_max, 20);
    let rebuilt = table.to_vectors(&manifest).unwrap();
    assert_eq!(rebuilt.len(), vectors.len());
    for (original, copy) in vectors.iter().zip(&rebuilt) {
        assert_eq!(original.provenance.subject_id, copy.provenance.subject_id);
        assert_eq!(original.provenance.group, copy.provenance.group);
        for (channel, value) in original.values() {
            let read_back = copy.get(channel).unwrap();
            assert!(
                (read_back - value).abs() <= value.abs() * 1e-11,
                "{channel}: {read_back} vs {value}"
            );
        }
    }
}

#[test]
fn feature_csv_round_trips_windowed_series() {
    let tmp = tempfile::tempdir().unwrap();
    write_small_cohort(tmp.path(), 2, 2);
    let manifest = DatasetManifest::scan_dir(tmp.path()).unwrap();
    let recordings = load_dataset(&manifest, &small_registry()).recordings;
    let params = HfdParams::new(10).unwrap();
    let series: Vec<_> = recordings
        .iter()
        .map(|r| hfd_windowed(r, params, 1.0).unwrap())
        .collect();
    assert_eq!(series[0].n_windows(), 4);
    let path = tmp.path().join("windowed.csv");
    write_feature_windows(&path, &series, &meta(10, Some(1.0))).unwrap();

    let table = read_features(&path).unwrap();
    assert!(table.is_windowed());
    let rebuilt = table.to_window_series(&manifest).unwrap();
    assert_eq!(rebuilt.len(), series.len());
    assert_eq!(rebuilt[0].n_windows(), 4);

    // collapsing averages the windows per channel
    let collapsed = table.collapse_windows();
    assert!(!collapsed.is_windowed());
    let vectors = collapsed.to_vectors(&manifest).unwrap();
    let expected: f64 =
        series[0].values()["c1"].iter().sum::<f64>() / series[0].n_windows() as f64;
    let actual = vectors[0].get("c1").unwrap();
    assert!((actual - expected).abs() <= expected.abs() * 1e-11);
}

#[test]
fn mixed_window_rows_are_rejected_for_vector_assembly() {
    let tmp = tempfile::tempdir().unwrap();
    write_small_cohort(tmp.path(), 1, 1);
    let manifest = DatasetManifest::scan_dir(tmp.path()).unwrap();
    let path = tmp.path().join("features.csv");
    std::fs::write(
        &path,
        "# hfdkit config=x seeds=none k_max=10 window_seconds=none\n\
         subject_id,presentation_id,channel,window_index,hfd\n\
         expert01,1A,c1,0,1.5\n",
    )
    .unwrap();
    let table = read_features(&path).unwrap();
    assert!(table.to_vectors(&manifest).is_err());
}

#[test]
fn config_parses_with_defaults_and_relative_paths() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(tmp.path().join("data")).unwrap();
    let config_path = tmp.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
dataset_root = "data"
output_dir = "out"
strategy = "subject"
family = "linear-svm"
"#,
    )
    .unwrap();
    let config = RunConfig::from_toml_file(&config_path).unwrap();
    assert_eq!(config.dataset_root, tmp.path().join("data"));
    assert_eq!(config.output_dir, tmp.path().join("out"));
    assert_eq!(config.k_max, 100);
    assert_eq!(config.seeds, vec![0, 1, 2]);
    assert_eq!(config.folds, 10);
    assert!(config.param.is_none());
    config.validate().unwrap();
}

#[test]
fn config_hash_tracks_semantic_fields_only() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(tmp.path().join("data")).unwrap();
    let base = format!(
        r#"
dataset_root = "{}"
output_dir = "out-a"
strategy = "pairs"
family = "knn"
"#,
        tmp.path().join("data").display()
    );
    let path_a = tmp.path().join("a.toml");
    std::fs::write(&path_a, &base).unwrap();
    let config_a = RunConfig::from_toml_file(&path_a).unwrap();

    let path_b = tmp.path().join("b.toml");
    std::fs::write(&path_b, base.replace("out-a", "out-b")).unwrap();
    let config_b = RunConfig::from_toml_file(&path_b).unwrap();
    assert_eq!(
        config_a.config_hash(),
        config_b.config_hash(),
        "output location must not alter the hash"
    );

    let path_c = tmp.path().join("c.toml");
    std::fs::write(&path_c, base.replace("\"pairs\"", "\"subject\"")).unwrap();
    let config_c = RunConfig::from_toml_file(&path_c).unwrap();
    assert_ne!(config_a.config_hash(), config_c.config_hash());
}

#[test]
fn pipeline_tuning_stage_feeds_chosen_k_max_into_features() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_small_cohort(&data, 2, 2);
    let registry_path = data.join("channels.txt");
    std::fs::write(&registry_path, "c1\nc2\n").unwrap();
    let out = tmp.path().join("out");
    let config = RunConfig {
        dataset_root: data.clone(),
        output_dir: out.clone(),
        k_max: 2, // overridden by the tuning stage
        window_seconds: None,
        tune_grid: Some(vec![2, 5, 20]),
        strategy: hfdkit::ml::SplitStrategy::SubjectPresentationPairs,
        family: hfdkit::ml::ClassifierFamily::DecisionTree,
        param: Some(3.0),
        seeds: vec![0],
        root_seed: 0,
        direction: hfdkit::stats::Direction::Less,
        folds: 2,
        rank_n: 2,
        channels: Some(registry_path),
    };
    let artifacts = run_pipeline(&config).unwrap();
    assert!(out.join("tuning.json").exists());
    assert!([2, 5, 20].contains(&artifacts.chosen_k_max));
    let features = std::fs::read_to_string(out.join("features.csv")).unwrap();
    let first_line = features.lines().next().unwrap();
    assert!(
        first_line.contains(&format!("k_max={}", artifacts.chosen_k_max)),
        "feature metadata must carry the tuned value: {first_line}"
    );
}

#[test]
fn single_group_cohort_skips_contrasts_but_classifies_nothing() {
    // all-expert data: contrasts skipped, classification must fail cleanly
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    let registry = small_registry();
    let spec = SynthSpec::new(
        SynthKind::FractionalBrownianMotion { hurst: 0.5 },
        256,
        0,
        64.0,
    );
    // subjects rounded up to experts: 1 subject -> expert only
    let cohort = make_cohort(1, 4, &spec, &spec, &registry, 3).unwrap();
    assert!(cohort.iter().all(|r| r.group == Group::Expert));
    for rec in &cohort {
        write_recording_csv(&data, rec).unwrap();
    }
    std::fs::write(data.join("channels.txt"), "c1\nc2\n").unwrap();
    let config = RunConfig {
        dataset_root: data.clone(),
        output_dir: tmp.path().join("out"),
        k_max: 10,
        window_seconds: None,
        tune_grid: None,
        strategy: hfdkit::ml::SplitStrategy::SubjectPresentationPairs,
        family: hfdkit::ml::ClassifierFamily::NearestNeighbors,
        param: Some(3.0),
        seeds: vec![0],
        root_seed: 0,
        direction: hfdkit::stats::Direction::Less,
        folds: 2,
        rank_n: 2,
        channels: Some(data.join("channels.txt")),
    };
    // constant-label CV is degenerate but defined: majority prediction
    let artifacts = run_pipeline(&config).unwrap();
    assert_eq!(artifacts.grand_mean_accuracy(), 1.0);
    assert!(!tmp.path().join("out/deltas.csv").exists());
}

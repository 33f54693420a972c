//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).

mod common;

use std::time::Instant;

use hfdkit::hfd::{higuchi_fd, HfdParams};
use hfdkit::io::{run_pipeline, write_recording_csv, RunConfig};
use hfdkit::ml::{
    cross_validate, make_split, train, ClassifierSpec, FeatureMatrix, Model, SampleRow,
    SplitStrategy,
};
use hfdkit::signal::{ChannelRegistry, Group, TimeSeries};
use hfdkit::stats::{group_delta, one_sided_t, top_n_channels, Direction, RankBy};
use hfdkit::synth::{generate, make_cohort, SynthKind, SynthSpec};
use hfdkit::tuner::TuningReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn pass(id: u32, name: &str, details: String) {
    println!("acceptance {id:02} {name}: PASS ({details})");
}

#[test]
fn criterion_01_ramp_exactness() {
    let start = Instant::now();
    let ramp = TimeSeries::new((1..=1024).map(|i| i as f64).collect(), 1.0).unwrap();
    let fd = higuchi_fd(&ramp, HfdParams::new(16).unwrap()).unwrap();
    assert!((fd - 1.0).abs() <= 1e-9, "ramp HFD {fd}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(1, "ramp exactness", format!("HFD {fd:.12}, {elapsed:?}"));
}

fn mean_hfd(kind: SynthKind, length: usize, k_max: usize, n_seeds: u64) -> f64 {
    let params = HfdParams::new(k_max).unwrap();
    (0..n_seeds)
        .map(|seed| {
            let ts = generate(&SynthSpec::new(kind, length, seed, 1.0)).unwrap();
            higuchi_fd(&ts, params).unwrap()
        })
        .sum::<f64>()
        / n_seeds as f64
}

#[test]
fn criterion_02_white_noise_dimension() {
    let start = Instant::now();
    let mean = mean_hfd(SynthKind::WhiteNoise, 8192, 100, 20);
    assert!((1.85..=2.05).contains(&mean), "mean {mean}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(2, "white-noise dimension", format!("mean {mean:.4}, {elapsed:?}"));
}

#[test]
fn criterion_03_brownian_oracle() {
    let start = Instant::now();
    let mut estimates = Vec::new();
    for hurst in [0.3, 0.5, 0.7] {
        let mean = mean_hfd(
            SynthKind::FractionalBrownianMotion { hurst },
            8192,
            100,
            20,
        );
        let expected = 2.0 - hurst;
        assert!(
            (mean - expected).abs() <= 0.1,
            "H={hurst}: mean {mean} vs {expected}"
        );
        estimates.push(mean);
    }
    assert!(
        estimates[0] > estimates[1] && estimates[1] > estimates[2],
        "not strictly decreasing in H: {estimates:?}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(
        3,
        "fBm oracle",
        format!(
            "means {:.4}/{:.4}/{:.4} for H 0.3/0.5/0.7, {elapsed:?}",
            estimates[0], estimates[1], estimates[2]
        ),
    );
}

#[test]
fn criterion_04_weierstrass_convergence() {
    let kind = SynthKind::Weierstrass { a: 0.5, b: 3.0 };
    let expected = 2.0 + 0.5f64.ln() / 3.0f64.ln();
    let error_small = (mean_hfd(kind, 1024, 100, 10) - expected).abs();
    let error_large = (mean_hfd(kind, 16384, 100, 10) - expected).abs();
    assert!(
        error_large < error_small,
        "error at N=16384 ({error_large}) not below error at N=1024 ({error_small})"
    );
    pass(
        4,
        "Weierstrass convergence",
        format!("|err| {error_small:.4} @1024 -> {error_large:.4} @16384, target {expected:.4}"),
    );
}

#[test]
fn criterion_05_affine_invariance() {
    let params = HfdParams::new(32).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
        let reference = higuchi_fd(&TimeSeries::new(base.clone(), 1.0).unwrap(), params).unwrap();
        for (a, b) in [(0.5, -2.0), (3.0, 10.0)] {
            let mapped: Vec<f64> = base.iter().map(|v| a * v + b).collect();
            let fd = higuchi_fd(&TimeSeries::new(mapped, 1.0).unwrap(), params).unwrap();
            worst = worst.max((fd - reference).abs());
        }
    }
    assert!(worst <= 1e-9, "worst deviation {worst}");
    pass(5, "affine invariance", format!("worst |dHFD| {worst:.2e}"));
}

#[test]
fn criterion_06_tuner_fixture() {
    let aggregates = common::load_tuning_aggregates();
    for pair in aggregates.windows(2) {
        assert!(
            pair[0].mean_hfd <= pair[1].mean_hfd,
            "replayed mean curve decreases at k_max {}",
            pair[1].k_max
        );
    }
    let report = TuningReport::from_aggregates(aggregates).unwrap();
    assert_eq!(report.chosen_k_max, 100);
    pass(
        6,
        "k_max tuner fixture",
        format!("chosen k_max {}", report.chosen_k_max),
    );
}

#[test]
fn criterion_07_group_delta_fixture() {
    let means = common::load_group_means();
    let experts = common::vectors_from_means(
        &means.iter().map(|(c, e, _)| (c.clone(), *e)).collect::<Vec<_>>(),
        Group::Expert,
    );
    let novices = common::vectors_from_means(
        &means.iter().map(|(c, _, n)| (c.clone(), *n)).collect::<Vec<_>>(),
        Group::Novice,
    );
    let delta = group_delta(&[experts], &[novices], Direction::Less).unwrap();
    let fpz = delta.get("Fpz").unwrap().delta;
    assert!((fpz - (-0.05722)).abs() <= 1e-5, "Fpz delta {fpz}");
    let ranked = top_n_channels(&delta, 10, RankBy::AbsDelta).unwrap();
    let ranked_set: std::collections::BTreeSet<String> =
        ranked.iter().map(|s| s.channel.clone()).collect();
    let expected_set: std::collections::BTreeSet<String> = [
        "Fpz", "Fp2", "AF8", "F7", "AF3", "AF7", "AF4", "AFp4h", "AFp3h", "FTT10h",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(ranked_set, expected_set);
    pass(
        7,
        "group-delta fixture",
        format!("Fpz delta {fpz:.5}, top-10 set matches"),
    );
}

fn synthetic_matrix(n_subjects: usize, n_presentations: usize) -> FeatureMatrix {
    let mut rows = Vec::new();
    for s in 0..n_subjects {
        for p in 0..n_presentations {
            rows.push(SampleRow {
                features: vec![s as f64, p as f64],
                label: if s % 2 == 0 { Group::Expert } else { Group::Novice },
                subject_id: format!("s{s:02}"),
                presentation_id: format!("{}{}", p / 2 + 1, if p % 2 == 0 { "A" } else { "G" }),
            });
        }
    }
    FeatureMatrix::new(rows, vec!["f0".into(), "f1".into()]).unwrap()
}

#[test]
fn criterion_08_split_invariants() {
    let start = Instant::now();
    let matrix = synthetic_matrix(44, 16); // 704 rows
    for seed in 0..100u64 {
        // case 1: every row in exactly one validation fold
        let plans = make_split(&matrix, SplitStrategy::SubjectPresentationPairs, seed, 10).unwrap();
        let mut seen = vec![0u8; matrix.n_rows()];
        for fold in &plans[0].folds {
            for &r in &fold.validation {
                seen[r] += 1;
            }
            let train: std::collections::HashSet<usize> = fold.train.iter().copied().collect();
            assert!(fold.validation.iter().all(|r| !train.contains(r)));
            assert_eq!(fold.train.len() + fold.validation.len(), matrix.n_rows());
        }
        assert!(seen.iter().all(|&c| c == 1), "row coverage broken at seed {seed}");

        // case 2: subjects never straddle a fold boundary
        let plans = make_split(&matrix, SplitStrategy::SubjectSpecific, seed, 10).unwrap();
        for fold in &plans[0].folds {
            let validation_subjects: std::collections::HashSet<&str> = fold
                .validation
                .iter()
                .map(|&r| matrix.rows()[r].subject_id.as_str())
                .collect();
            for &r in &fold.train {
                assert!(
                    !validation_subjects.contains(matrix.rows()[r].subject_id.as_str()),
                    "subject split across fold at seed {seed}"
                );
            }
        }
        let mut seen = vec![0u8; matrix.n_rows()];
        for fold in &plans[0].folds {
            for &r in &fold.validation {
                seen[r] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));

        // case 3: 16 sub-datasets of 44 rows
        let plans = make_split(&matrix, SplitStrategy::PresentationSpecific, seed, 10).unwrap();
        assert_eq!(plans.len(), 16);
        for plan in &plans {
            let total: usize = plan.folds.iter().map(|f| f.validation.len()).sum();
            assert_eq!(total, 44);
            assert!(plan.check_soundness());
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(
        8,
        "split invariants",
        format!("100 seeds x 3 strategies, {elapsed:?}"),
    );
}

fn blob_matrix(n_rows: usize, separation: f64, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for i in 0..n_rows {
        let class = i % 2;
        let center = class as f64 * separation;
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        rows.push(SampleRow {
            features: vec![center + a, center + b],
            label: if class == 0 { Group::Expert } else { Group::Novice },
            subject_id: format!("s{i:03}"),
            presentation_id: "1A".into(),
        });
    }
    FeatureMatrix::new(rows, vec!["f0".into(), "f1".into()]).unwrap()
}

fn cohort_config(data_dir: &std::path::Path, out_dir: &std::path::Path) -> RunConfig {
    RunConfig {
        dataset_root: data_dir.to_path_buf(),
        output_dir: out_dir.to_path_buf(),
        k_max: 100,
        window_seconds: None,
        tune_grid: None,
        strategy: SplitStrategy::SubjectSpecific,
        family: hfdkit::ml::ClassifierFamily::NearestNeighbors,
        param: Some(5.0),
        seeds: vec![0, 1, 2],
        root_seed: 0,
        direction: Direction::Less,
        folds: 10,
        rank_n: 5,
        channels: Some(data_dir.join("channels.txt")),
    }
}

/// 44 subjects x 4 presentations, experts fBm H=0.6 vs novices H=0.4, on an
/// 8-channel registry.
fn write_cohort(data_dir: &std::path::Path) {
    std::fs::create_dir_all(data_dir).unwrap();
    let registry = ChannelRegistry::new(
        ChannelRegistry::builtin().labels()[..8].to_vec(),
    )
    .unwrap();
    let expert = SynthSpec::new(
        SynthKind::FractionalBrownianMotion { hurst: 0.6 },
        1024,
        0,
        256.0,
    );
    let novice = SynthSpec::new(
        SynthKind::FractionalBrownianMotion { hurst: 0.4 },
        1024,
        0,
        256.0,
    );
    let cohort = make_cohort(44, 4, &expert, &novice, &registry, 0).unwrap();
    assert_eq!(cohort.len(), 176);
    for rec in &cohort {
        write_recording_csv(data_dir, rec).unwrap();
    }
    let mut text = String::new();
    for label in registry.labels() {
        text.push_str(label);
        text.push('\n');
    }
    std::fs::write(data_dir.join("channels.txt"), text).unwrap();
}

#[test]
fn criterion_09_classifier_sanity() {
    let start = Instant::now();

    // two Gaussian blobs, 200 rows, 5-sigma separation
    let blobs = blob_matrix(200, 5.0, 42);
    let mut blob_means = Vec::new();
    for spec in [
        ClassifierSpec::NearestNeighbors { neighbors: 5 },
        ClassifierSpec::LinearSvm { c: 0.5 },
        ClassifierSpec::DecisionTree { max_depth: 3 },
        ClassifierSpec::AdaBoost { estimators: 25 },
    ] {
        let reports = cross_validate(
            &blobs,
            &spec,
            SplitStrategy::SubjectPresentationPairs,
            &[0, 1, 2],
            10,
        )
        .unwrap();
        let mean = reports[0].mean_accuracy;
        assert!(mean >= 0.95, "{}: accuracy {mean}", spec.describe());
        blob_means.push(mean);
    }

    // AdaBoost stump errors stay below one half
    let x: Vec<Vec<f64>> = blobs.rows().iter().map(|r| r.features.clone()).collect();
    let y: Vec<Group> = blobs.rows().iter().map(|r| r.label).collect();
    let Model::Ada(ada) = train(&ClassifierSpec::AdaBoost { estimators: 25 }, &x, &y, 0).unwrap()
    else {
        unreachable!()
    };
    assert!(!ada.rounds.is_empty());
    for round in &ada.rounds {
        assert!(round.weighted_error < 0.5);
    }

    // depth caps hold
    for max_depth in [3, 5, 7] {
        let Model::Tree(tree) =
            train(&ClassifierSpec::DecisionTree { max_depth }, &x, &y, 0).unwrap()
        else {
            unreachable!()
        };
        assert!(tree.depth() <= max_depth);
    }

    // end-to-end synthetic cohort through the pipeline
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("cohort");
    write_cohort(&data_dir);
    let config = cohort_config(&data_dir, &tmp.path().join("out"));
    let artifacts = run_pipeline(&config).unwrap();
    let grand = artifacts.grand_mean_accuracy();
    assert!(grand >= 0.90, "cohort grand mean {grand}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    pass(
        9,
        "classifier sanity",
        format!(
            "blob means {:.3?}, cohort grand mean {grand:.3}, {elapsed:?}",
            blob_means
        ),
    );
}

#[test]
fn criterion_10_pipeline_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("cohort");
    write_cohort(&data_dir);

    let run_into = |out: std::path::PathBuf, threads: Option<usize>| -> Vec<(String, Vec<u8>)> {
        let config = cohort_config(&data_dir, &out);
        let artifacts = match threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .unwrap();
                pool.install(|| run_pipeline(&config)).unwrap()
            }
            None => run_pipeline(&config).unwrap(),
        };
        let mut files: Vec<(String, Vec<u8>)> = artifacts
            .files
            .iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(p).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };

    let baseline = run_into(tmp.path().join("out-a"), None);
    let rerun = run_into(tmp.path().join("out-b"), None);
    let single_thread = run_into(tmp.path().join("out-1"), Some(1));
    let four_threads = run_into(tmp.path().join("out-4"), Some(4));

    assert!(baseline.iter().any(|(name, _)| name == "cv_report.json"));
    for ((name_a, bytes_a), candidate) in baseline
        .iter()
        .zip([&rerun, &single_thread, &four_threads].into_iter().flatten())
    {
        assert_eq!(name_a, &candidate.0, "artifact sets differ");
        assert_eq!(
            bytes_a, &candidate.1,
            "artifact {name_a} differs between runs"
        );
    }
    pass(
        10,
        "pipeline determinism",
        format!(
            "{} artifacts byte-identical across rerun and thread pools 1/4",
            baseline.len()
        ),
    );
}

// --- independent Welch/t oracle -------------------------------------------

mod welch_oracle {
    /// Lanczos (g=7, n=9) log-gamma, accurate to ~1e-13 for x > 0.
    fn ln_gamma(x: f64) -> f64 {
        const COEFFS: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if x < 0.5 {
            // reflection
            return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
                - ln_gamma(1.0 - x);
        }
        let x = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }

    fn t_pdf(x: f64, df: f64) -> f64 {
        let ln_norm = ln_gamma((df + 1.0) / 2.0)
            - ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln();
        (ln_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
    }

    /// Student-t CDF by composite Simpson quadrature from 0 to |t|.
    fn t_cdf(t: f64, df: f64) -> f64 {
        let magnitude = t.abs();
        if magnitude == 0.0 {
            return 0.5;
        }
        let steps = 200_001usize; // odd number of nodes for Simpson
        let h = magnitude / (steps - 1) as f64;
        let mut integral = 0.0;
        for i in 0..steps {
            let weight = if i == 0 || i == steps - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += weight * t_pdf(i as f64 * h, df);
        }
        integral *= h / 3.0;
        if t < 0.0 {
            0.5 - integral
        } else {
            0.5 + integral
        }
    }

    /// Welch statistic, degrees of freedom, and one-sided (less) p, computed
    /// straight from the formulas with naive accumulation.
    pub fn welch_less(a: &[f64], b: &[f64]) -> (f64, f64) {
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let var = |s: &[f64], m: f64| {
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() as f64 - 1.0)
        };
        let (ma, mb) = (mean(a), mean(b));
        let (va, vb) = (var(a, ma), var(b, mb));
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let sa = va / na;
        let sb = vb / nb;
        let t = (ma - mb) / (sa + sb).sqrt();
        let df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        (t, t_cdf(t, df))
    }
}

#[test]
fn criterion_11_welch_oracle() {
    // identical samples: exact symmetric null
    let sample = [1.0, 2.5, 3.5, 4.0];
    let (t, p) = one_sided_t(&sample, &sample, Direction::Less).unwrap();
    assert_eq!(t, 0.0);
    assert!((p - 0.5).abs() <= 1e-12);

    // ten random small-sample pairs vs the quadrature oracle
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_t: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for _ in 0..10 {
        let na = rng.random_range(3..12);
        let nb = rng.random_range(3..12);
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.random_range(0.0..10.0)).collect();
        let (t, p) = one_sided_t(&a, &b, Direction::Less).unwrap();
        let (t_ref, p_ref) = welch_oracle::welch_less(&a, &b);
        worst_t = worst_t.max((t - t_ref).abs());
        worst_p = worst_p.max((p - p_ref).abs());
    }
    assert!(worst_t <= 1e-9, "worst t deviation {worst_t}");
    assert!(worst_p <= 1e-9, "worst p deviation {worst_p}");

    // null calibration: rejection rate at alpha = 0.05 over 1000 trials
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rejections = 0;
    for _ in 0..1000 {
        let a: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (_, p) = one_sided_t(&a, &b, Direction::Less).unwrap();
        if p < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / 1000.0;
    assert!(
        (0.03..=0.07).contains(&rate),
        "null rejection rate {rate}"
    );
    pass(
        11,
        "Welch t-test oracle",
        format!("worst |dt| {worst_t:.2e}, |dp| {worst_p:.2e}, null rate {rate:.3}"),
    );
}

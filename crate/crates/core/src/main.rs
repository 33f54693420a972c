//! `hfdkit` command-line interface.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime error.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use hfdkit::error::{Error, Result};
use hfdkit::hfd::{hfd_per_channel, hfd_windowed, HfdParams, HfdVector, HfdWindowSeries};
use hfdkit::io::{
    load_dataset, read_features, run_pipeline, write_analysis_outputs, write_feature_vectors,
    write_feature_windows, write_json_report, write_recording_csv, write_style_outputs,
    DatasetManifest, FeatureTable, RunConfig, RunMeta,
};
use hfdkit::ml::{
    cross_validate, grid_search, ClassifierFamily, ClassifierSpec, CvReport, FeatureMatrix,
    SplitStrategy,
};
use hfdkit::signal::{ChannelRegistry, Group, Recording};
use hfdkit::stats::{group_delta, Direction};
use hfdkit::synth::{make_cohort, SynthKind, SynthSpec};
use hfdkit::tuner::{tune_kmax, KmaxGrid};

#[derive(Parser)]
#[command(
    name = "hfdkit",
    version,
    about = "Higuchi fractal dimension features, k_max tuning, group contrasts, and classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset directory (CSV + JSON sidecars) or JSON manifest file
    #[arg(long)]
    data: PathBuf,
    /// Channel registry file (one label per line); defaults to the bundled
    /// 124-label registry
    #[arg(long)]
    registry: Option<PathBuf>,
}

impl DataArgs {
    fn registry(&self) -> Result<ChannelRegistry> {
        match &self.registry {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                ChannelRegistry::parse(&text)
            }
            None => Ok(ChannelRegistry::builtin()),
        }
    }

    fn load(&self) -> Result<Vec<Recording>> {
        let manifest = DatasetManifest::load(&self.data)?;
        let outcome = load_dataset(&manifest, &self.registry()?);
        if !outcome.failures.is_empty() {
            for (provenance, error) in &outcome.failures {
                log::error!("{provenance}: {error}");
            }
            return Err(Error::LoadFailures(
                outcome
                    .failures
                    .into_iter()
                    .map(|(p, e)| (p, Box::new(e)))
                    .collect(),
            ));
        }
        Ok(outcome.recordings)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-channel HFD features (whole-signal or windowed)
    Hfd {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        k_max: usize,
        /// Split each channel into non-overlapping windows of this length
        #[arg(long)]
        window_seconds: Option<f64>,
        /// Output feature CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep k_max candidates; pick the channel-spread maximizer
    TuneKmax {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated candidates, strictly increasing
        #[arg(long, value_delimiter = ',', default_value = "2,5,20,100,150,200,400")]
        grid: Vec<usize>,
        /// Output JSON report
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-channel group contrasts from a feature CSV
    Analyze {
        /// Feature CSV produced by `hfd`
        #[arg(long)]
        features: PathBuf,
        /// Dataset directory or JSON manifest (for group labels)
        #[arg(long)]
        manifest: PathBuf,
        /// One-sided test direction: less (expert < novice) or greater
        #[arg(long)]
        direction: Direction,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        /// Directory for deltas.csv, ttests.csv, heatmap.csv, top_channels.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Cross-validated classification from a feature CSV
    Classify {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// pairs | subject | presentation
        #[arg(long)]
        strategy: SplitStrategy,
        /// knn | linear-svm | decision-tree | adaboost
        #[arg(long)]
        family: ClassifierFamily,
        /// Single hyperparameter value; omit to sweep a grid
        #[arg(long)]
        param: Option<f64>,
        /// Comma-separated hyperparameter grid (defaults to the family grid)
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Expected window length of the feature file (consistency check)
        #[arg(long)]
        window_seconds: Option<f64>,
        /// Output JSON report
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic recordings with known fractal dimension
    Synth(SynthArgs),
    /// Run the whole pipeline from a config file
    Run {
        /// TOML config file (see README for the schema)
        #[arg(long)]
        config: PathBuf,
        /// Override the config's dataset root (also: HFDKIT_DATASET_ROOT)
        #[arg(long)]
        dataset_root: Option<PathBuf>,
        /// Override the config's output directory
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for recordings, sidecars, manifest.json, channels.txt
    #[arg(long)]
    out: PathBuf,
    /// ramp | sine | white-noise | fbm | weierstrass | alternating
    #[arg(long, default_value = "fbm")]
    kind: String,
    #[arg(long, default_value_t = 8192)]
    length: usize,
    #[arg(long, default_value_t = 2048.0)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hurst exponent for fbm
    #[arg(long, default_value_t = 0.5)]
    hurst: f64,
    /// Sine frequency in Hz
    #[arg(long, default_value_t = 10.0)]
    frequency: f64,
    /// Weierstrass amplitude decay (0 < a < 1)
    #[arg(long, default_value_t = 0.5)]
    wa: f64,
    /// Weierstrass frequency growth (a*b > 1)
    #[arg(long, default_value_t = 3.0)]
    wb: f64,
    /// Number of channels, taken from the head of the registry
    #[arg(long, default_value_t = 1)]
    n_channels: usize,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Generate a labeled expert/novice cohort instead of one recording
    #[arg(long, default_value_t = false)]
    cohort: bool,
    #[arg(long, default_value_t = 4)]
    subjects: usize,
    #[arg(long, default_value_t = 2)]
    presentations: usize,
    /// Cohort expert Hurst exponent (fbm)
    #[arg(long, default_value_t = 0.6)]
    expert_hurst: f64,
    /// Cohort novice Hurst exponent (fbm)
    #[arg(long, default_value_t = 0.4)]
    novice_hurst: f64,
    #[arg(long, default_value_t = 0)]
    root_seed: u64,
}

fn hash_args<T: Serialize>(args: &T) -> String {
    let json = serde_json::to_string(args).expect("args serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Hfd {
            data,
            k_max,
            window_seconds,
            out,
        } => cmd_hfd(data, k_max, window_seconds, &out),
        Command::TuneKmax { data, grid, out } => cmd_tune(data, grid, &out),
        Command::Analyze {
            features,
            manifest,
            direction,
            top_n,
            out_dir,
        } => cmd_analyze(&features, &manifest, direction, top_n, &out_dir),
        Command::Classify {
            features,
            manifest,
            strategy,
            family,
            param,
            grid,
            seeds,
            folds,
            window_seconds,
            out,
        } => cmd_classify(ClassifyInvocation {
            features,
            manifest,
            strategy,
            family,
            param,
            grid,
            seeds,
            folds,
            window_seconds,
            out,
        }),
        Command::Synth(args) => cmd_synth(args),
        Command::Run {
            config,
            dataset_root,
            output_dir,
        } => cmd_run(&config, dataset_root, output_dir),
    }
}

fn cmd_hfd(
    data: DataArgs,
    k_max: usize,
    window_seconds: Option<f64>,
    out: &Path,
) -> Result<()> {
    let recordings = data.load()?;
    let params = HfdParams::new(k_max)?;
    let meta = RunMeta {
        config_hash: hash_args(&(data.data.display().to_string(), k_max, window_seconds)),
        seeds: Vec::new(),
        k_max,
        window_seconds,
    };
    match window_seconds {
        Some(window) => {
            let series: Vec<HfdWindowSeries> = recordings
                .iter()
                .map(|rec| hfd_windowed(rec, params, window))
                .collect::<Result<_>>()?;
            write_feature_windows(out, &series, &meta)?;
        }
        None => {
            let vectors: Vec<HfdVector> = recordings
                .iter()
                .map(|rec| hfd_per_channel(rec, params))
                .collect::<Result<_>>()?;
            write_feature_vectors(out, &vectors, &meta)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_tune(data: DataArgs, grid: Vec<usize>, out: &Path) -> Result<()> {
    let recordings = data.load()?;
    let grid = KmaxGrid::new(grid)?;
    let report = tune_kmax(&recordings, &grid)?;
    let meta = RunMeta {
        config_hash: hash_args(&(data.data.display().to_string(), grid.candidates())),
        seeds: Vec::new(),
        k_max: report.chosen_k_max,
        window_seconds: None,
    };
    write_json_report(out, &meta, &report)?;
    println!("chosen k_max = {}", report.chosen_k_max);
    for candidate in &report.candidates {
        println!(
            "  k_max {:>4}: mean HFD {:.5} (sd {:.5}), spread {:.5} (sd {:.5})",
            candidate.k_max,
            candidate.mean_hfd,
            candidate.std_hfd,
            candidate.mean_spread,
            candidate.std_spread
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn split_by_group(vectors: Vec<HfdVector>) -> (Vec<HfdVector>, Vec<HfdVector>) {
    vectors
        .into_iter()
        .partition(|v| v.provenance.group == Group::Expert)
}

fn cmd_analyze(
    features: &Path,
    manifest_path: &Path,
    direction: Direction,
    top_n: usize,
    out_dir: &Path,
) -> Result<()> {
    let table = read_features(features)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let table = if table.is_windowed() {
        log::info!("windowed features: averaging windows per channel before contrasts");
        table.collapse_windows()
    } else {
        table
    };
    let vectors = table.to_vectors(&manifest)?;
    let (experts, novices) = split_by_group(vectors);
    if experts.is_empty() || novices.is_empty() {
        return Err(Error::Config(
            "contrasts need at least one expert and one novice recording".into(),
        ));
    }
    let delta = group_delta(&experts, &novices, direction)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let meta = RunMeta {
        config_hash: hash_args(&(
            &table.meta.config_hash,
            format!("{direction:?}"),
            top_n,
        )),
        seeds: table.meta.seeds.clone(),
        k_max: table.meta.k_max,
        window_seconds: table.meta.window_seconds,
    };
    let mut files =
        write_analysis_outputs(out_dir, &meta, &delta, top_n.min(delta.channels.len()))?;
    files.extend(write_style_outputs(
        out_dir, &meta, &experts, &novices, direction,
    )?);
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

struct ClassifyInvocation {
    features: PathBuf,
    manifest: PathBuf,
    strategy: SplitStrategy,
    family: ClassifierFamily,
    param: Option<f64>,
    grid: Option<Vec<f64>>,
    seeds: Vec<u64>,
    folds: usize,
    window_seconds: Option<f64>,
    out: PathBuf,
}

fn cmd_classify(call: ClassifyInvocation) -> Result<()> {
    let table = read_features(&call.features)?;
    let manifest = DatasetManifest::load(&call.manifest)?;
    if let (Some(expected), Some(actual)) = (call.window_seconds, table.meta.window_seconds) {
        if (expected - actual).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "feature file was computed with window_seconds={actual}, not {expected}"
            )));
        }
    }
    let spec = match call.param {
        Some(value) => Some(call.family.spec_from_value(value)?),
        None => None,
    };
    let grid: Option<Vec<ClassifierSpec>> = match &call.grid {
        Some(values) => Some(
            values
                .iter()
                .map(|&v| call.family.spec_from_value(v))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };

    let reports: Vec<CvReport> = if table.is_windowed() {
        if call.strategy != SplitStrategy::PresentationSpecific {
            return Err(Error::Config(
                "windowed features support the presentation strategy only".into(),
            ));
        }
        classify_windowed(&table, &manifest, &call, spec, grid)?
    } else {
        let vectors = table.to_vectors(&manifest)?;
        let matrix = hfdkit::ml::build_dataset(&vectors)?;
        classify_matrix(&matrix, &call, spec, grid)?
    };

    let meta = RunMeta {
        config_hash: hash_args(&(
            &table.meta.config_hash,
            call.strategy,
            call.family,
            call.param,
            &call.grid,
            &call.seeds,
            call.folds,
        )),
        seeds: call.seeds.clone(),
        k_max: table.meta.k_max,
        window_seconds: table.meta.window_seconds,
    };
    write_json_report(&call.out, &meta, &reports)?;
    print_report_table(&reports);
    println!("wrote {}", call.out.display());
    Ok(())
}

fn classify_matrix(
    matrix: &FeatureMatrix,
    call: &ClassifyInvocation,
    spec: Option<ClassifierSpec>,
    grid: Option<Vec<ClassifierSpec>>,
) -> Result<Vec<CvReport>> {
    match spec {
        Some(spec) => cross_validate(matrix, &spec, call.strategy, &call.seeds, call.folds),
        None => {
            let outcome = grid_search(
                matrix,
                call.family,
                grid,
                call.strategy,
                &call.seeds,
                call.folds,
            )?;
            println!("grid results (grand mean):");
            for (label, accuracy) in &outcome.evaluated {
                let marker = if *label == outcome.best_spec.describe() {
                    " <- best"
                } else {
                    ""
                };
                println!("  {label:<32} {:.3}{marker}", accuracy);
            }
            Ok(outcome.best_reports)
        }
    }
}

/// Windowed sub-datasets may have different widths per presentation, so
/// each presentation gets its own matrix and evaluation.
fn classify_windowed(
    table: &FeatureTable,
    manifest: &DatasetManifest,
    call: &ClassifyInvocation,
    spec: Option<ClassifierSpec>,
    grid: Option<Vec<ClassifierSpec>>,
) -> Result<Vec<CvReport>> {
    let series = table.to_window_series(manifest)?;
    let mut by_presentation: indexmap::IndexMap<String, Vec<HfdWindowSeries>> =
        indexmap::IndexMap::new();
    for s in series {
        by_presentation
            .entry(s.provenance.presentation.to_string())
            .or_default()
            .push(s);
    }
    by_presentation.sort_keys();
    let mut reports = Vec::new();
    for (_, group) in by_presentation {
        let matrix = hfdkit::ml::build_dataset_windowed(&group)?;
        reports.extend(classify_matrix(&matrix, call, spec, grid.clone())?);
    }
    Ok(reports)
}

fn print_report_table(reports: &[CvReport]) {
    if reports.is_empty() {
        return;
    }
    println!(
        "strategy: {} | spec: {} | seeds: {:?} | {} folds",
        reports[0].strategy.name(),
        reports[0].spec_label,
        reports[0].seeds,
        reports[0].n_folds
    );
    if reports.len() == 1 && reports[0].sub_dataset.is_none() {
        let report = &reports[0];
        println!("mean accuracy: {:.1}%", report.mean_accuracy * 100.0);
        for (seed, per_seed) in report.seeds.iter().zip(&report.per_seed_means) {
            println!("  seed {seed}: {:.1}%", per_seed * 100.0);
        }
    } else {
        let grand: f64 =
            reports.iter().map(|r| r.mean_accuracy).sum::<f64>() / reports.len() as f64;
        println!("per-presentation accuracy (grand mean {:.1}%):", grand * 100.0);
        for report in reports {
            println!(
                "  {:<6} {:.1}%",
                report.sub_dataset.as_deref().unwrap_or("-"),
                report.mean_accuracy * 100.0
            );
        }
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let registry = match &args.registry {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            ChannelRegistry::parse(&text)?
        }
        None => {
            let builtin = ChannelRegistry::builtin();
            let labels: Vec<String> = builtin
                .labels()
                .iter()
                .take(args.n_channels.max(1))
                .cloned()
                .collect();
            ChannelRegistry::new(labels)?
        }
    };

    let recordings = if args.cohort {
        let expert = SynthSpec::new(
            SynthKind::FractionalBrownianMotion {
                hurst: args.expert_hurst,
            },
            args.length,
            0,
            args.rate,
        );
        let novice = SynthSpec::new(
            SynthKind::FractionalBrownianMotion {
                hurst: args.novice_hurst,
            },
            args.length,
            0,
            args.rate,
        );
        make_cohort(
            args.subjects,
            args.presentations,
            &expert,
            &novice,
            &registry,
            args.root_seed,
        )?
    } else {
        let kind = match args.kind.as_str() {
            "ramp" => SynthKind::Ramp,
            "sine" => SynthKind::Sine {
                frequency_hz: args.frequency,
            },
            "white-noise" => SynthKind::WhiteNoise,
            "fbm" => SynthKind::FractionalBrownianMotion { hurst: args.hurst },
            "weierstrass" => SynthKind::Weierstrass {
                a: args.wa,
                b: args.wb,
            },
            "alternating" => SynthKind::AlternatingBinary,
            other => {
                return Err(Error::Config(format!("unknown synth kind {other:?}")));
            }
        };
        let base = SynthSpec::new(kind, args.length, args.seed, args.rate);
        make_cohort(1, 1, &base, &base, &registry, args.root_seed)?
    };

    let mut entries = Vec::with_capacity(recordings.len());
    for rec in &recordings {
        entries.push(write_recording_csv(&args.out, rec)?);
    }
    let manifest = DatasetManifest { entries };
    manifest.write_json(&args.out.join("manifest.json"))?;

    let channels_path = args.out.join("channels.txt");
    let mut text = String::from("# channel registry for this synthetic dataset\n");
    for label in registry.labels() {
        text.push_str(label);
        text.push('\n');
    }
    std::fs::write(&channels_path, text)
        .map_err(|e| Error::io(channels_path.display().to_string(), e))?;

    println!(
        "wrote {} recording(s) to {}",
        recordings.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_run(
    config_path: &Path,
    dataset_root: Option<PathBuf>,
    output_dir: Option<PathBuf>,
) -> Result<()> {
    let mut config = RunConfig::from_toml_file(config_path)?;
    if let Ok(root) = std::env::var("HFDKIT_DATASET_ROOT") {
        config.dataset_root = PathBuf::from(root);
    }
    if let Some(root) = dataset_root {
        config.dataset_root = root;
    }
    if let Some(out) = output_dir {
        config.output_dir = out;
    }
    let artifacts = run_pipeline(&config)?;
    println!("k_max = {}", artifacts.chosen_k_max);
    print_report_table(&artifacts.cv_reports);
    for file in &artifacts.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

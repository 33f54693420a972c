//! Dataset ingestion, report serialization, run configuration, and the
//! end-to-end pipeline.
//!
//! On-disk formats:
//! - recording: one CSV per subject-presentation (header row = channel
//!   labels, one column per channel, one row per sample) plus a JSON sidecar
//!   with `subject_id`, `group`, `presentation_id`, `style`,
//!   `sample_rate_hz`.
//! - features: long CSV `subject_id, presentation_id, channel, window_index,
//!   hfd` where `window_index` is `full` for whole-signal values. The first
//!   line is a `#` metadata comment carrying the config hash, seed set,
//!   `k_max` and window length.
//! - reports: JSON with sorted keys and floats rounded to 12 significant
//!   digits, so identical runs produce byte-identical bytes.
//!
//! Presentation ids must have the form `<ordinal><A|G>` (e.g. `7A`) and the
//! sidecar's `style` field must agree with the id's suffix.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hfd::{
    hfd_per_channel, hfd_windowed, HfdParams, HfdVector, HfdWindowSeries, Provenance,
};
use crate::ml::{
    build_dataset, build_dataset_windowed, cross_validate, grid_search, ClassifierFamily, CvReport, FeatureMatrix, SplitStrategy,
};
use crate::signal::{ChannelRegistry, Group, PresentationId, PresentationStyle, Recording, TimeSeries};
use crate::stats::{
    export_heatmap, group_delta, group_delta_by_style, style_delta, top_n_channels, ChannelDelta,
    Direction, RankBy,
};
use crate::tuner::{tune_kmax, KmaxGrid};

// ---------------------------------------------------------------------------
// float formatting

/// Round to 12 significant decimal digits (via decimal round trip).
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Canonical float rendering for derived outputs: 12 significant digits,
/// shortest representation, scientific notation for extreme magnitudes.
pub fn fmt_float(x: f64) -> String {
    let rounded = round_sig12(x);
    if rounded == 0.0 {
        "0".to_string()
    } else if rounded.abs() < 1e-6 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

// ---------------------------------------------------------------------------
// manifests

/// Per-recording sidecar metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub subject_id: String,
    pub group: Group,
    pub presentation_id: String,
    pub style: PresentationStyle,
    pub sample_rate_hz: f64,
}

/// One dataset entry: a recording file plus its sidecar fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: PathBuf,
    #[serde(flatten)]
    pub sidecar: Sidecar,
}

impl ManifestEntry {
    pub fn provenance_label(&self) -> String {
        format!(
            "{}/{} ({})",
            self.sidecar.subject_id,
            self.sidecar.presentation_id,
            self.file.display()
        )
    }
}

/// Validated list of dataset entries with unique (subject, presentation)
/// pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Load from a directory (scanning `*.csv` + `*.json` sidecar pairs) or
    /// from a single JSON manifest file.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::scan_dir(path)
        } else {
            Self::from_json_file(path)
        }
    }

    pub fn scan_dir(dir: &Path) -> Result<Self> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir.display().to_string(), e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
            .collect();
        files.sort();
        let mut entries = Vec::with_capacity(files.len());
        for csv_path in files {
            let sidecar_path = csv_path.with_extension("json");
            if !sidecar_path.exists() {
                log::warn!("skipping {}: no sidecar", csv_path.display());
                continue;
            }
            let text = std::fs::read_to_string(&sidecar_path)
                .map_err(|e| Error::io(sidecar_path.display().to_string(), e))?;
            let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: sidecar_path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
            entries.push(ManifestEntry {
                file: csv_path,
                sidecar,
            });
        }
        Self::validated(entries)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut entries: Vec<ManifestEntry> =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        // file paths are relative to the manifest location
        if let Some(base) = path.parent() {
            for entry in &mut entries {
                if entry.file.is_relative() {
                    entry.file = base.join(&entry.file);
                }
            }
        }
        Self::validated(entries)
    }

    fn validated(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for entry in &entries {
            let s = &entry.sidecar;
            let key = (s.subject_id.clone(), s.presentation_id.clone());
            if !seen.insert(key) {
                return Err(Error::ManifestConflict {
                    subject_id: s.subject_id.clone(),
                    presentation_id: s.presentation_id.clone(),
                });
            }
            let parsed = PresentationId::parse(&s.presentation_id).map_err(|_| Error::Parse {
                path: entry.file.display().to_string(),
                line: 0,
                message: format!(
                    "presentation id {:?} is not of the form <ordinal><A|G>",
                    s.presentation_id
                ),
            })?;
            if parsed.style != s.style {
                return Err(Error::Parse {
                    path: entry.file.display().to_string(),
                    line: 0,
                    message: format!(
                        "style field {:?} disagrees with presentation id {:?}",
                        s.style.tag(),
                        s.presentation_id
                    ),
                });
            }
        }
        Ok(Self { entries })
    }

    /// (group, style) lookup by subject and presentation.
    pub fn lookup(&self, subject_id: &str, presentation_id: &str) -> Option<&Sidecar> {
        self.entries
            .iter()
            .find(|e| {
                e.sidecar.subject_id == subject_id && e.sidecar.presentation_id == presentation_id
            })
            .map(|e| &e.sidecar)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        // manifest entries keep their natural order; file paths relative to
        // the manifest location where possible
        let base = path.parent().unwrap_or(Path::new(""));
        let portable: Vec<ManifestEntry> = self
            .entries
            .iter()
            .map(|e| ManifestEntry {
                file: e.file.strip_prefix(base).unwrap_or(&e.file).to_path_buf(),
                sidecar: e.sidecar.clone(),
            })
            .collect();
        let json = serde_json::to_string_pretty(&portable).expect("manifest serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path.display().to_string(), e))
    }
}

// ---------------------------------------------------------------------------
// recording CSV

pub fn read_recording_csv(entry: &ManifestEntry) -> Result<Recording> {
    let path = &entry.file;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: row_idx + 2,
            message: e.to_string(),
        })?;
        if record.len() != labels.len() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: row_idx + 2,
                message: format!("expected {} fields, got {}", labels.len(), record.len()),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: row_idx + 2,
                message: format!("bad float {field:?} in column {}", labels[col]),
            })?;
            columns[col].push(value);
        }
    }
    let sidecar = &entry.sidecar;
    let channels: IndexMap<String, TimeSeries> = labels
        .into_iter()
        .zip(columns)
        .map(|(label, samples)| {
            TimeSeries::new(samples, sidecar.sample_rate_hz).map(|ts| (label, ts))
        })
        .collect::<Result<_>>()?;
    Recording::new(
        sidecar.subject_id.clone(),
        sidecar.group,
        PresentationId::parse(&sidecar.presentation_id)?,
        channels,
    )
}

/// Write `<subject>_<presentation>.csv` plus its sidecar into `dir`.
pub fn write_recording_csv(dir: &Path, rec: &Recording) -> Result<ManifestEntry> {
    let stem = format!("{}_{}", rec.subject_id, rec.presentation);
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut out = String::new();
    let labels: Vec<&String> = rec.channels().keys().collect();
    out.push_str(
        &labels
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    let n = rec.n_samples();
    for i in 0..n {
        let mut first = true;
        for series in rec.channels().values() {
            if !first {
                out.push(',');
            }
            first = false;
            // exact round-trip formatting for raw samples
            let _ = write!(out, "{}", series.samples()[i]);
        }
        out.push('\n');
    }
    std::fs::write(&csv_path, out).map_err(|e| Error::io(csv_path.display().to_string(), e))?;

    let sidecar = Sidecar {
        subject_id: rec.subject_id.clone(),
        group: rec.group,
        presentation_id: rec.presentation.to_string(),
        style: rec.presentation.style,
        sample_rate_hz: rec.sample_rate_hz(),
    };
    let sidecar_path = csv_path.with_extension("json");
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&sidecar_path, json + "\n")
        .map_err(|e| Error::io(sidecar_path.display().to_string(), e))?;
    Ok(ManifestEntry {
        file: csv_path,
        sidecar,
    })
}

/// Load every manifest entry, collecting failures with provenance instead
/// of stopping at the first.
pub struct LoadOutcome {
    pub recordings: Vec<Recording>,
    pub failures: Vec<(String, Error)>,
}

pub fn load_dataset(manifest: &DatasetManifest, registry: &ChannelRegistry) -> LoadOutcome {
    let mut recordings = Vec::with_capacity(manifest.entries.len());
    let mut failures = Vec::new();
    if manifest.entries.is_empty() {
        log::warn!("manifest is empty; no recordings loaded");
    }
    for entry in &manifest.entries {
        match read_recording_csv(entry).and_then(|rec| rec.filter_channels(registry)) {
            Ok(rec) => recordings.push(rec),
            Err(e) => failures.push((entry.provenance_label(), e)),
        }
    }
    LoadOutcome {
        recordings,
        failures,
    }
}

// ---------------------------------------------------------------------------
// feature CSV

/// Metadata stamped into every derived artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub k_max: usize,
    pub window_seconds: Option<f64>,
}

impl RunMeta {
    fn comment_line(&self) -> String {
        let seeds = if self.seeds.is_empty() {
            "none".to_string()
        } else {
            self.seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(";")
        };
        let window = match self.window_seconds {
            Some(w) => fmt_float(w),
            None => "none".to_string(),
        };
        format!(
            "# hfdkit config={} seeds={} k_max={} window_seconds={}",
            self.config_hash, seeds, self.k_max, window
        )
    }

    fn parse_comment(line: &str) -> Option<RunMeta> {
        let rest = line.strip_prefix("# hfdkit ")?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for pair in rest.split_whitespace() {
            let (k, v) = pair.split_once('=')?;
            fields.insert(k, v);
        }
        let seeds = match *fields.get("seeds")? {
            "none" => Vec::new(),
            list => list
                .split(';')
                .map(|s| s.parse().ok())
                .collect::<Option<Vec<u64>>>()?,
        };
        let window_seconds = match *fields.get("window_seconds")? {
            "none" => None,
            v => Some(v.parse().ok()?),
        };
        Some(RunMeta {
            config_hash: fields.get("config")?.to_string(),
            seeds,
            k_max: fields.get("k_max")?.parse().ok()?,
            window_seconds,
        })
    }
}

const FEATURE_HEADER: &str = "subject_id,presentation_id,channel,window_index,hfd";

pub fn write_feature_vectors(path: &Path, vectors: &[HfdVector], meta: &RunMeta) -> Result<()> {
    let mut out = String::new();
    out.push_str(&meta.comment_line());
    out.push('\n');
    out.push_str(FEATURE_HEADER);
    out.push('\n');
    for v in vectors {
        for (channel, value) in v.values() {
            let _ = writeln!(
                out,
                "{},{},{},full,{}",
                v.provenance.subject_id,
                v.provenance.presentation,
                channel,
                fmt_float(*value)
            );
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_feature_windows(
    path: &Path,
    series: &[HfdWindowSeries],
    meta: &RunMeta,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&meta.comment_line());
    out.push('\n');
    out.push_str(FEATURE_HEADER);
    out.push('\n');
    for s in series {
        for (channel, values) in s.values() {
            for (idx, value) in values.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.provenance.subject_id,
                    s.provenance.presentation,
                    channel,
                    idx,
                    fmt_float(*value)
                );
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub subject_id: String,
    pub presentation_id: String,
    pub channel: String,
    /// `None` for whole-signal (`full`) values.
    pub window: Option<usize>,
    pub hfd: f64,
}

#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub meta: RunMeta,
    pub rows: Vec<FeatureRow>,
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let meta = text
        .lines()
        .next()
        .and_then(RunMeta::parse_comment)
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "missing `# hfdkit ...` metadata comment".into(),
        })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: idx + 3,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: idx + 3,
            message,
        };
        if record.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, got {}", record.len())));
        }
        let window = match &record[3] {
            "full" => None,
            raw => Some(
                raw.parse::<usize>()
                    .map_err(|_| parse_err(format!("bad window index {raw:?}")))?,
            ),
        };
        let hfd: f64 = record[4]
            .parse()
            .map_err(|_| parse_err(format!("bad float {:?}", &record[4])))?;
        rows.push(FeatureRow {
            subject_id: record[0].to_string(),
            presentation_id: record[1].to_string(),
            channel: record[2].to_string(),
            window,
            hfd,
        });
    }
    Ok(FeatureTable { meta, rows })
}

impl FeatureTable {
    pub fn is_windowed(&self) -> bool {
        self.rows.iter().any(|r| r.window.is_some())
    }

    /// Average windowed values per channel into whole-signal rows.
    pub fn collapse_windows(&self) -> FeatureTable {
        let mut grouped: IndexMap<(String, String, String), (f64, usize)> = IndexMap::new();
        for row in &self.rows {
            let key = (
                row.subject_id.clone(),
                row.presentation_id.clone(),
                row.channel.clone(),
            );
            let slot = grouped.entry(key).or_insert((0.0, 0));
            slot.0 += row.hfd;
            slot.1 += 1;
        }
        let rows = grouped
            .into_iter()
            .map(|((subject_id, presentation_id, channel), (sum, count))| FeatureRow {
                subject_id,
                presentation_id,
                channel,
                window: None,
                hfd: sum / count as f64,
            })
            .collect();
        FeatureTable {
            meta: RunMeta {
                window_seconds: None,
                ..self.meta.clone()
            },
            rows,
        }
    }

    fn provenance_for(&self, manifest: &DatasetManifest, row: &FeatureRow) -> Result<Provenance> {
        let sidecar = manifest
            .lookup(&row.subject_id, &row.presentation_id)
            .ok_or_else(|| Error::Config(format!(
                "manifest has no entry for ({}, {})",
                row.subject_id, row.presentation_id
            )))?;
        Ok(Provenance {
            subject_id: row.subject_id.clone(),
            group: sidecar.group,
            presentation: PresentationId::parse(&row.presentation_id)?,
        })
    }

    /// Reassemble whole-signal vectors, one per subject-presentation pair,
    /// channels in file order.
    pub fn to_vectors(&self, manifest: &DatasetManifest) -> Result<Vec<HfdVector>> {
        let params = HfdParams::new(self.meta.k_max)?;
        let mut grouped: IndexMap<(String, String), IndexMap<String, f64>> = IndexMap::new();
        for row in &self.rows {
            if row.window.is_some() {
                return Err(Error::Config(
                    "windowed feature rows cannot form whole-signal vectors".into(),
                ));
            }
            grouped
                .entry((row.subject_id.clone(), row.presentation_id.clone()))
                .or_default()
                .insert(row.channel.clone(), row.hfd);
        }
        grouped
            .into_iter()
            .map(|((subject_id, presentation_id), values)| {
                let provenance = self.provenance_for(
                    manifest,
                    &FeatureRow {
                        subject_id,
                        presentation_id,
                        channel: String::new(),
                        window: None,
                        hfd: 0.0,
                    },
                )?;
                HfdVector::new(values, params, provenance)
            })
            .collect()
    }

    /// Reassemble windowed series; every pair must carry the same window
    /// count per channel.
    pub fn to_window_series(&self, manifest: &DatasetManifest) -> Result<Vec<HfdWindowSeries>> {
        let params = HfdParams::new(self.meta.k_max)?;
        let window_seconds = self.meta.window_seconds.ok_or_else(|| {
            Error::Config("feature metadata lacks window_seconds".into())
        })?;
        type Key = (String, String);
        let mut grouped: IndexMap<Key, IndexMap<String, Vec<(usize, f64)>>> = IndexMap::new();
        for row in &self.rows {
            let window = row.window.ok_or_else(|| Error::Config(
                "whole-signal rows cannot form windowed series".into(),
            ))?;
            grouped
                .entry((row.subject_id.clone(), row.presentation_id.clone()))
                .or_default()
                .entry(row.channel.clone())
                .or_default()
                .push((window, row.hfd));
        }
        grouped
            .into_iter()
            .map(|((subject_id, presentation_id), channels)| {
                let provenance = self.provenance_for(
                    manifest,
                    &FeatureRow {
                        subject_id: subject_id.clone(),
                        presentation_id: presentation_id.clone(),
                        channel: String::new(),
                        window: None,
                        hfd: 0.0,
                    },
                )?;
                let values: IndexMap<String, Vec<f64>> = channels
                    .into_iter()
                    .map(|(channel, mut windowed)| {
                        windowed.sort_by_key(|(w, _)| *w);
                        (channel, windowed.into_iter().map(|(_, v)| v).collect())
                    })
                    .collect();
                HfdWindowSeries::from_values(values, window_seconds, params, provenance)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// stable JSON

fn round_json_floats(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return serde_json::Number::from_f64(round_sig12(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
            Value::Number(n)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json_floats).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, round_json_floats(v)))
                .collect(),
        ),
        other => other,
    }
}

/// Serialize with sorted keys, metadata envelope, and 12-significant-digit
/// floats; byte-identical for identical inputs.
pub fn write_json_report<T: Serialize>(path: &Path, meta: &RunMeta, payload: &T) -> Result<()> {
    let mut envelope = BTreeMap::new();
    envelope.insert(
        "config_hash".to_string(),
        serde_json::json!(meta.config_hash),
    );
    envelope.insert("seeds".to_string(), serde_json::json!(meta.seeds));
    envelope.insert(
        "report".to_string(),
        serde_json::to_value(payload).expect("report serializes"),
    );
    let value = round_json_floats(serde_json::Value::Object(
        envelope.into_iter().collect(),
    ));
    let text = serde_json::to_string_pretty(&value).expect("value serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// run configuration

fn default_k_max() -> usize {
    100
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_folds() -> usize {
    10
}
fn default_rank_n() -> usize {
    10
}
fn default_direction() -> Direction {
    Direction::Less
}

/// Flat run configuration; see `hfdkit run --help` and the README for the
/// file schema. CLI flags override file values; `HFDKIT_DATASET_ROOT`
/// overrides the dataset root only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub window_seconds: Option<f64>,
    /// When set, the tuning stage runs over this grid and its chosen value
    /// replaces `k_max`.
    #[serde(default)]
    pub tune_grid: Option<Vec<usize>>,
    pub strategy: SplitStrategy,
    pub family: ClassifierFamily,
    /// Single hyperparameter value; omit to sweep the family's full grid.
    #[serde(default)]
    pub param: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_rank_n")]
    pub rank_n: usize,
    /// Custom channel registry file; defaults to the bundled 124-label
    /// registry.
    #[serde(default)]
    pub channels: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // paths in the file are relative to the file
        if let Some(base) = path.parent() {
            if config.dataset_root.is_relative() {
                config.dataset_root = base.join(&config.dataset_root);
            }
            if config.output_dir.is_relative() {
                config.output_dir = base.join(&config.output_dir);
            }
            if let Some(channels) = &config.channels {
                if channels.is_relative() {
                    config.channels = Some(base.join(channels));
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dataset_root.is_dir() {
            return Err(Error::Config(format!(
                "dataset_root {} is not a directory",
                self.dataset_root.display()
            )));
        }
        if self.k_max < 2 {
            return Err(Error::Config(format!("k_max must be >= 2, got {}", self.k_max)));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if let Some(w) = self.window_seconds {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Config(format!("window_seconds must be positive, got {w}")));
            }
        }
        if let Some(channels) = &self.channels {
            if !channels.is_file() {
                return Err(Error::Config(format!(
                    "channel registry {} does not exist",
                    channels.display()
                )));
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> Result<ChannelRegistry> {
        match &self.channels {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                ChannelRegistry::parse(&text)
            }
            None => Ok(ChannelRegistry::builtin()),
        }
    }

    /// Hash of the analysis-relevant configuration (output paths excluded,
    /// so re-running into a different directory yields identical bytes).
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Semantic<'a> {
            dataset_root: &'a Path,
            k_max: usize,
            window_seconds: Option<f64>,
            tune_grid: &'a Option<Vec<usize>>,
            strategy: SplitStrategy,
            family: ClassifierFamily,
            param: Option<f64>,
            seeds: &'a [u64],
            root_seed: u64,
            direction: Direction,
            folds: usize,
            rank_n: usize,
            channels: &'a Option<PathBuf>,
        }
        let semantic = Semantic {
            dataset_root: &self.dataset_root,
            k_max: self.k_max,
            window_seconds: self.window_seconds,
            tune_grid: &self.tune_grid,
            strategy: self.strategy,
            family: self.family,
            param: self.param,
            seeds: &self.seeds,
            root_seed: self.root_seed,
            direction: self.direction,
            folds: self.folds,
            rank_n: self.rank_n,
            channels: &self.channels,
        };
        let json = serde_json::to_string(&semantic).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_string()
    }
}

// ---------------------------------------------------------------------------
// pipeline

/// Everything `run_pipeline` produced.
#[derive(Debug)]
pub struct PipelineArtifacts {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub chosen_k_max: usize,
    pub cv_reports: Vec<CvReport>,
}

impl PipelineArtifacts {
    pub fn grand_mean_accuracy(&self) -> f64 {
        let means: Vec<f64> = self.cv_reports.iter().map(|r| r.mean_accuracy).collect();
        means.iter().sum::<f64>() / means.len() as f64
    }
}

/// Load, tune, extract, contrast, classify, and serialize in one pass.
///
/// All validation happens before the first write, so a bad configuration
/// leaves no partial artifacts behind.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineArtifacts> {
    config.validate()?;
    let registry = config.registry()?;
    let manifest = DatasetManifest::scan_dir(&config.dataset_root)?;
    let outcome = load_dataset(&manifest, &registry);
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
    let recordings = outcome.recordings;
    if recordings.is_empty() {
        return Err(Error::Config(format!(
            "no recordings under {}",
            config.dataset_root.display()
        )));
    }

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::io(config.output_dir.display().to_string(), e))?;
    let mut files = Vec::new();
    let config_hash = config.config_hash();

    // 1. tuning (optional)
    let chosen_k_max = match &config.tune_grid {
        Some(grid_values) => {
            let grid = KmaxGrid::new(grid_values.clone())?;
            let report = tune_kmax(&recordings, &grid)?;
            let meta = RunMeta {
                config_hash: config_hash.clone(),
                seeds: config.seeds.clone(),
                k_max: report.chosen_k_max,
                window_seconds: config.window_seconds,
            };
            let path = config.output_dir.join("tuning.json");
            write_json_report(&path, &meta, &report)?;
            files.push(path);
            report.chosen_k_max
        }
        None => config.k_max,
    };
    let params = HfdParams::new(chosen_k_max)?;
    let meta = RunMeta {
        config_hash: config_hash.clone(),
        seeds: config.seeds.clone(),
        k_max: chosen_k_max,
        window_seconds: config.window_seconds,
    };

    // 2. whole-signal features (always: drives the contrasts and cases 1-2)
    let vectors: Vec<HfdVector> = recordings
        .iter()
        .map(|rec| hfd_per_channel(rec, params))
        .collect::<Result<_>>()?;
    let features_path = config.output_dir.join("features.csv");
    write_feature_vectors(&features_path, &vectors, &meta)?;
    files.push(features_path);

    // 3. group contrasts
    let experts: Vec<HfdVector> = vectors
        .iter()
        .filter(|v| v.provenance.group == Group::Expert)
        .cloned()
        .collect();
    let novices: Vec<HfdVector> = vectors
        .iter()
        .filter(|v| v.provenance.group == Group::Novice)
        .cloned()
        .collect();
    if !experts.is_empty() && !novices.is_empty() {
        let delta = group_delta(&experts, &novices, config.direction)?;
        files.extend(write_analysis_outputs(
            &config.output_dir,
            &meta,
            &delta,
            config.rank_n.min(delta.channels.len()),
        )?);
        files.extend(write_style_outputs(
            &config.output_dir,
            &meta,
            &experts,
            &novices,
            config.direction,
        )?);
    } else {
        log::warn!("one cohort is empty; skipping group contrasts");
    }

    // 4. classification
    let matrix: FeatureMatrix = if config.strategy == SplitStrategy::PresentationSpecific {
        if let Some(window_seconds) = config.window_seconds {
            let series: Vec<HfdWindowSeries> = recordings
                .iter()
                .map(|rec| hfd_windowed(rec, params, window_seconds))
                .collect::<Result<_>>()?;
            let windowed_path = config.output_dir.join("features_windowed.csv");
            write_feature_windows(&windowed_path, &series, &meta)?;
            files.push(windowed_path);
            build_windowed_matrix_per_presentation(&series)?
        } else {
            build_dataset(&vectors)?
        }
    } else {
        build_dataset(&vectors)?
    };
    let cv_reports = match config.param {
        Some(value) => {
            let spec = config.family.spec_from_value(value)?;
            cross_validate(&matrix, &spec, config.strategy, &config.seeds, config.folds)?
        }
        None => {
            let outcome = grid_search(
                &matrix,
                config.family,
                None,
                config.strategy,
                &config.seeds,
                config.folds,
            )?;
            let grid_path = config.output_dir.join("grid_search.json");
            write_json_report(&grid_path, &meta, &outcome.evaluated)?;
            files.push(grid_path);
            outcome.best_reports
        }
    };
    let cv_path = config.output_dir.join("cv_report.json");
    write_json_report(&cv_path, &meta, &cv_reports)?;
    files.push(cv_path);

    Ok(PipelineArtifacts {
        output_dir: config.output_dir.clone(),
        files,
        chosen_k_max,
        cv_reports,
    })
}

/// Windowed case-3 matrices must have a fixed width per presentation;
/// presentations of different lengths are fine because each sub-dataset is
/// split and scored independently, but here the whole cohort shares a
/// synthetic length, so a single windowed matrix suffices. Mixed window
/// counts are rejected with the offending pairs named.
fn build_windowed_matrix_per_presentation(series: &[HfdWindowSeries]) -> Result<FeatureMatrix> {
    let mut by_presentation: IndexMap<String, usize> = IndexMap::new();
    let mut offenders = Vec::new();
    for s in series {
        let id = s.provenance.presentation.to_string();
        let windows = s.n_windows();
        match by_presentation.get(&id) {
            Some(&expected) if expected != windows => offenders.push((
                format!("{}/{}", s.provenance.subject_id, id),
                windows,
            )),
            None => {
                by_presentation.insert(id, windows);
            }
            _ => {}
        }
    }
    if !offenders.is_empty() {
        return Err(Error::HeterogeneousWidth(offenders));
    }
    let widths: std::collections::HashSet<usize> = by_presentation.values().copied().collect();
    if widths.len() > 1 {
        return Err(Error::Config(
            "presentations have different window counts; classify them via per-presentation \
             feature files"
                .into(),
        ));
    }
    build_dataset_windowed(series)
}

pub fn write_analysis_outputs(
    dir: &Path,
    meta: &RunMeta,
    delta: &ChannelDelta,
    rank_n: usize,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();

    let deltas_path = dir.join("deltas.csv");
    let mut out = meta.comment_line();
    out.push_str("\nchannel,expert_mean,novice_mean,delta\n");
    for stat in &delta.channels {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            stat.channel,
            fmt_float(stat.group_a_mean),
            fmt_float(stat.group_b_mean),
            fmt_float(stat.delta)
        );
    }
    std::fs::write(&deltas_path, out).map_err(|e| Error::io(deltas_path.display().to_string(), e))?;
    files.push(deltas_path);

    let ttests_path = dir.join("ttests.csv");
    let mut out = meta.comment_line();
    out.push_str("\nchannel,t,p\n");
    for stat in &delta.channels {
        let t = stat.t_statistic.map(fmt_float).unwrap_or_default();
        let p = stat.p_value.map(fmt_float).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", stat.channel, t, p);
    }
    std::fs::write(&ttests_path, out).map_err(|e| Error::io(ttests_path.display().to_string(), e))?;
    files.push(ttests_path);

    let heatmap_path = dir.join("heatmap.csv");
    let body = export_heatmap(delta);
    let text = format!("{}\n{}", meta.comment_line(), body);
    std::fs::write(&heatmap_path, text)
        .map_err(|e| Error::io(heatmap_path.display().to_string(), e))?;
    files.push(heatmap_path);

    let ranked = top_n_channels(delta, rank_n, RankBy::AbsDelta)?;
    let top_path = dir.join("top_channels.json");
    write_json_report(&top_path, meta, &ranked)?;
    files.push(top_path);

    Ok(files)
}

pub fn write_style_outputs(
    dir: &Path,
    meta: &RunMeta,
    experts: &[HfdVector],
    novices: &[HfdVector],
    direction: Direction,
) -> Result<Vec<PathBuf>> {
    let has_both_styles = |vectors: &[HfdVector]| {
        let styles: std::collections::HashSet<PresentationStyle> = vectors
            .iter()
            .map(|v| v.provenance.presentation.style)
            .collect();
        styles.len() == 2
    };
    if !has_both_styles(experts) || !has_both_styles(novices) {
        log::info!("dataset lacks both presentation styles; skipping style contrasts");
        return Ok(Vec::new());
    }
    let mut files = Vec::new();

    // within-group style contrast of means
    let contrast_path = dir.join("style_contrast.csv");
    let mut out = meta.comment_line();
    out.push_str("\ngroup,channel,algebraic_mean,geometric_mean,delta\n");
    for (group, vectors) in [("expert", experts), ("novice", novices)] {
        let contrast = style_delta(vectors)?;
        for stat in &contrast.channels {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                group,
                stat.channel,
                fmt_float(stat.algebraic_mean),
                fmt_float(stat.geometric_mean),
                fmt_float(stat.delta)
            );
        }
    }
    std::fs::write(&contrast_path, out)
        .map_err(|e| Error::io(contrast_path.display().to_string(), e))?;
    files.push(contrast_path);

    // expert-minus-novice delta, split per style
    let (algebraic, geometric) = group_delta_by_style(experts, novices, direction)?;
    let split_path = dir.join("style_group_deltas.csv");
    let mut out = meta.comment_line();
    out.push_str("\nstyle,channel,delta\n");
    for (style, delta) in [("A", &algebraic), ("G", &geometric)] {
        for stat in &delta.channels {
            let _ = writeln!(out, "{},{},{}", style, stat.channel, fmt_float(stat.delta));
        }
    }
    std::fs::write(&split_path, out).map_err(|e| Error::io(split_path.display().to_string(), e))?;
    files.push(split_path);

    Ok(files)
}

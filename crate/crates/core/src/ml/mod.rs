//! Classification pipeline: dataset assembly, split strategies, the four
//! classifier families, and seeded cross-validation.

mod cv;
mod models;
mod split;

pub use cv::{cross_validate, grid_search, CvReport, GridSearchOutcome, Scaler};
pub use models::{train, AdaRound, ClassifierFamily, ClassifierSpec, Model};
pub use split::{make_split, Fold, SplitPlan, SplitStrategy};

use crate::error::{Error, Result};
use crate::hfd::{HfdVector, HfdWindowSeries};
use crate::signal::Group;

/// One classification sample: a subject-presentation pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub features: Vec<f64>,
    pub label: Group,
    pub subject_id: String,
    pub presentation_id: String,
}

/// Samples with a fixed feature width and named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<SampleRow>,
    width: usize,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<SampleRow>, feature_names: Vec<String>) -> Result<Self> {
        let width = feature_names.len();
        let offenders: Vec<(String, usize)> = rows
            .iter()
            .filter(|r| r.features.len() != width)
            .map(|r| {
                (
                    format!("{}/{}", r.subject_id, r.presentation_id),
                    r.features.len(),
                )
            })
            .collect();
        if !offenders.is_empty() {
            return Err(Error::HeterogeneousWidth(offenders));
        }
        for row in &rows {
            if let Some(idx) = row.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    path: format!("{}/{}", row.subject_id, row.presentation_id),
                    line: idx,
                    message: "non-finite feature value".into(),
                });
            }
        }
        Ok(Self {
            rows,
            width,
            feature_names,
        })
    }

    pub fn rows(&self) -> &[SampleRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Subject ids in first-appearance order.
    pub fn subjects(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for row in &self.rows {
            if seen.insert(row.subject_id.clone()) {
                out.push(row.subject_id.clone());
            }
        }
        out
    }

    /// Presentation ids present, sorted by (ordinal, style) where parseable.
    pub fn presentations(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for row in &self.rows {
            if seen.insert(row.presentation_id.clone()) {
                out.push(row.presentation_id.clone());
            }
        }
        out.sort_by_key(|id| presentation_sort_key(id));
        out
    }

    /// Row indices of one presentation sub-dataset.
    pub fn rows_of_presentation(&self, presentation_id: &str) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.presentation_id == presentation_id)
            .map(|(i, _)| i)
            .collect()
    }
}

pub(crate) fn presentation_sort_key(id: &str) -> (u32, u8, String) {
    match crate::signal::PresentationId::parse(id) {
        Ok(p) => (p.ordinal, p.style.tag().as_bytes()[0], String::new()),
        Err(_) => (u32::MAX, 0, id.to_string()),
    }
}

/// Whole-signal mode: one feature per channel, in the vectors' channel
/// order (registry order upstream).
pub fn build_dataset(vectors: &[HfdVector]) -> Result<FeatureMatrix> {
    if vectors.is_empty() {
        return Err(Error::EmptyGroup("feature vectors".into()));
    }
    let feature_names: Vec<String> = vectors[0].channels().cloned().collect();
    let rows = vectors
        .iter()
        .map(|v| SampleRow {
            features: v.values().values().copied().collect(),
            label: v.provenance.group,
            subject_id: v.provenance.subject_id.clone(),
            presentation_id: v.provenance.presentation.to_string(),
        })
        .collect();
    FeatureMatrix::new(rows, feature_names)
}

/// Windowed mode: feature order is window-major (all channels of window 0,
/// then window 1, ...). All inputs must share the window count.
pub fn build_dataset_windowed(series: &[HfdWindowSeries]) -> Result<FeatureMatrix> {
    if series.is_empty() {
        return Err(Error::EmptyGroup("feature vectors".into()));
    }
    let n_windows = series[0].n_windows();
    let channel_names: Vec<String> = series[0].values().keys().cloned().collect();
    let feature_names: Vec<String> = (0..n_windows)
        .flat_map(|w| channel_names.iter().map(move |c| format!("w{w}:{c}")))
        .collect();
    let rows = series
        .iter()
        .map(|s| {
            let mut features = Vec::with_capacity(feature_names.len());
            for w in 0..s.n_windows() {
                for values in s.values().values() {
                    features.push(values[w]);
                }
            }
            SampleRow {
                features,
                label: s.provenance.group,
                subject_id: s.provenance.subject_id.clone(),
                presentation_id: s.provenance.presentation.to_string(),
            }
        })
        .collect();
    FeatureMatrix::new(rows, feature_names)
}

//! Shared loaders for the reference fixture files.
#![allow(dead_code)] // each test target uses a subset

use hfdkit::tuner::CandidateSummary;
use std::path::PathBuf;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn read_rows(name: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(data_path(name)).expect("fixture file exists");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

pub fn load_tuning_aggregates() -> Vec<CandidateSummary> {
    read_rows("reference_tuning_aggregates.csv")
        .into_iter()
        .map(|row| CandidateSummary {
            k_max: row[0].parse().unwrap(),
            mean_hfd: row[1].parse().unwrap(),
            std_hfd: row[2].parse().unwrap(),
            mean_spread: row[3].parse().unwrap(),
            std_spread: row[4].parse().unwrap(),
        })
        .collect()
}

/// (channel, expert mean, novice mean) for the ten reference channels.
pub fn load_group_means() -> Vec<(String, f64, f64)> {
    read_rows("reference_group_means.csv")
        .into_iter()
        .map(|row| (row[0].clone(), row[1].parse().unwrap(), row[2].parse().unwrap()))
        .collect()
}

/// (channel, algebraic, geometric) for all 124 channels.
pub fn load_style_series() -> Vec<(String, f64, f64)> {
    read_rows("reference_style_series.csv")
        .into_iter()
        .map(|row| (row[0].clone(), row[1].parse().unwrap(), row[2].parse().unwrap()))
        .collect()
}

/// Build one single-vector group per cohort from stored channel means, so
/// group contrasts can replay published aggregates without raw data.
pub fn vectors_from_means(
    means: &[(String, f64)],
    group: hfdkit::signal::Group,
) -> hfdkit::hfd::HfdVector {
    use hfdkit::hfd::{HfdParams, Provenance};
    use hfdkit::signal::{PresentationId, PresentationStyle};
    let values: indexmap::IndexMap<String, f64> = means
        .iter()
        .map(|(label, value)| (label.clone(), *value))
        .collect();
    hfdkit::hfd::HfdVector::new(
        values,
        HfdParams::new(100).unwrap(),
        Provenance {
            subject_id: format!("{group}-aggregate"),
            group,
            presentation: PresentationId::new(1, PresentationStyle::Algebraic),
        },
    )
    .unwrap()
}

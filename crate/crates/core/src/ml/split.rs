//! Seeded, reproducible fold plans under the three split strategies.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::FeatureMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitStrategy {
    /// Rows shuffled freely; one subject's rows may land on both sides.
    #[serde(rename = "pairs")]
    SubjectPresentationPairs,
    /// Subjects shuffled and partitioned; a subject's rows never straddle a
    /// fold boundary.
    #[serde(rename = "subject")]
    SubjectSpecific,
    /// One independent plan per presentation sub-dataset.
    #[serde(rename = "presentation")]
    PresentationSpecific,
}

impl std::str::FromStr for SplitStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pairs" => Ok(SplitStrategy::SubjectPresentationPairs),
            "subject" => Ok(SplitStrategy::SubjectSpecific),
            "presentation" => Ok(SplitStrategy::PresentationSpecific),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?} (expected pairs | subject | presentation)"
            ))),
        }
    }
}

impl SplitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SplitStrategy::SubjectPresentationPairs => "pairs",
            SplitStrategy::SubjectSpecific => "subject",
            SplitStrategy::PresentationSpecific => "presentation",
        }
    }
}

/// One fold: row indices into the originating matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub seed: u64,
    /// Presentation id for presentation-specific plans.
    pub sub_dataset: Option<String>,
    pub folds: Vec<Fold>,
}

/// Distribute `items` into `n_folds` groups; remainder spread one per fold
/// from the first fold onward, so sizes differ by at most one.
fn partition<T: Clone>(items: &[T], n_folds: usize) -> Vec<Vec<T>> {
    let base = items.len() / n_folds;
    let remainder = items.len() % n_folds;
    let mut out = Vec::with_capacity(n_folds);
    let mut cursor = 0;
    for fold in 0..n_folds {
        let size = base + usize::from(fold < remainder);
        out.push(items[cursor..cursor + size].to_vec());
        cursor += size;
    }
    out
}

fn plan_over_rows(
    mut row_indices: Vec<usize>,
    strategy: SplitStrategy,
    sub_dataset: Option<String>,
    seed_value: u64,
    n_folds: usize,
) -> Result<SplitPlan> {
    if row_indices.len() < n_folds {
        return Err(Error::TooFewRows {
            rows: row_indices.len(),
            folds: n_folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
    row_indices.shuffle(&mut rng);
    let validation_sets = partition(&row_indices, n_folds);
    let folds = assemble_folds(&row_indices, validation_sets);
    Ok(SplitPlan {
        strategy,
        seed: seed_value,
        sub_dataset,
        folds,
    })
}

fn assemble_folds(all_rows: &[usize], validation_sets: Vec<Vec<usize>>) -> Vec<Fold> {
    validation_sets
        .into_iter()
        .map(|mut validation| {
            let in_validation: std::collections::HashSet<usize> =
                validation.iter().copied().collect();
            let mut train: Vec<usize> = all_rows
                .iter()
                .copied()
                .filter(|r| !in_validation.contains(r))
                .collect();
            train.sort_unstable();
            validation.sort_unstable();
            Fold { train, validation }
        })
        .collect()
}

/// Build the fold plan(s) for a strategy. Pairs and subject-specific
/// strategies yield one plan; presentation-specific yields one plan per
/// presentation, each restricted to that presentation's rows.
///
/// Deterministic for a fixed (matrix order, strategy, seed).
pub fn make_split(
    matrix: &FeatureMatrix,
    strategy: SplitStrategy,
    seed_value: u64,
    n_folds: usize,
) -> Result<Vec<SplitPlan>> {
    assert!(n_folds >= 2, "need at least two folds");
    match strategy {
        SplitStrategy::SubjectPresentationPairs => {
            let rows: Vec<usize> = (0..matrix.n_rows()).collect();
            Ok(vec![plan_over_rows(rows, strategy, None, seed_value, n_folds)?])
        }
        SplitStrategy::SubjectSpecific => {
            let mut subjects = matrix.subjects();
            if subjects.len() < n_folds {
                return Err(Error::TooFewSubjects {
                    subjects: subjects.len(),
                    folds: n_folds,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
            subjects.shuffle(&mut rng);
            let subject_folds = partition(&subjects, n_folds);
            let all_rows: Vec<usize> = (0..matrix.n_rows()).collect();
            let validation_sets: Vec<Vec<usize>> = subject_folds
                .iter()
                .map(|fold_subjects| {
                    let members: std::collections::HashSet<&String> =
                        fold_subjects.iter().collect();
                    matrix
                        .rows()
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| members.contains(&r.subject_id))
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            Ok(vec![SplitPlan {
                strategy,
                seed: seed_value,
                sub_dataset: None,
                folds: assemble_folds(&all_rows, validation_sets),
            }])
        }
        SplitStrategy::PresentationSpecific => {
            let presentations = matrix.presentations();
            presentations
                .iter()
                .enumerate()
                .map(|(idx, id)| {
                    let rows = matrix.rows_of_presentation(id);
                    let derived = seed::derive(seed_value, &[seed::component::SPLIT, idx as u64]);
                    plan_over_rows(rows, strategy, Some(id.clone()), derived, n_folds)
                })
                .collect()
        }
    }
}

impl SplitPlan {
    /// Check the structural invariants against the row set the plan covers:
    /// per fold, train and validation are disjoint and exhaustive; across
    /// folds, every row is validated exactly once.
    pub fn check_soundness(&self) -> bool {
        let all: std::collections::BTreeSet<usize> = self
            .folds
            .iter()
            .flat_map(|f| f.validation.iter().copied())
            .collect();
        let total: usize = self.folds.iter().map(|f| f.validation.len()).sum();
        if total != all.len() {
            return false; // a row validated twice
        }
        self.folds.iter().all(|fold| {
            let train: std::collections::BTreeSet<usize> = fold.train.iter().copied().collect();
            let validation: std::collections::BTreeSet<usize> =
                fold.validation.iter().copied().collect();
            train.is_disjoint(&validation)
                && train.union(&validation).copied().collect::<Vec<_>>()
                    == all.iter().copied().collect::<Vec<_>>()
        })
    }
}

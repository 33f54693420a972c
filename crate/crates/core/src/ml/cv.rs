//! Seeded k-fold cross-validation and exhaustive grid search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::models::{train, ClassifierFamily, ClassifierSpec};
use crate::ml::split::{make_split, SplitPlan, SplitStrategy};
use crate::ml::FeatureMatrix;
use crate::seed;
use crate::signal::Group;

/// Per-feature z-scoring, fitted on training folds only. Constant features
/// pass through unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let width = rows.first().map_or(0, Vec::len);
        let mut means = vec![0.0; width];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; width];
        for row in rows {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Self { means, stds }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Accuracy summary for one (strategy, spec) evaluation, optionally scoped
/// to a presentation sub-dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub spec: ClassifierSpec,
    pub spec_label: String,
    pub strategy: SplitStrategy,
    pub sub_dataset: Option<String>,
    pub n_folds: usize,
    pub seeds: Vec<u64>,
    /// `fold_accuracies[s][f]` is the accuracy of fold `f` under seed `s`.
    pub fold_accuracies: Vec<Vec<f64>>,
    pub per_seed_means: Vec<f64>,
    /// Arithmetic mean of the per-seed means.
    pub mean_accuracy: f64,
    pub optimizer: Option<String>,
}

fn evaluate_plan(
    matrix: &FeatureMatrix,
    spec: &ClassifierSpec,
    plan: &SplitPlan,
    seed_value: u64,
) -> Result<Vec<f64>> {
    plan.folds
        .iter()
        .enumerate()
        .map(|(fold_idx, fold)| {
            let train_x: Vec<Vec<f64>> = fold
                .train
                .iter()
                .map(|&r| matrix.rows()[r].features.clone())
                .collect();
            let train_y: Vec<Group> = fold.train.iter().map(|&r| matrix.rows()[r].label).collect();
            let val_rows: Vec<&crate::ml::SampleRow> =
                fold.validation.iter().map(|&r| &matrix.rows()[r]).collect();

            let scaler = spec
                .needs_standardization()
                .then(|| Scaler::fit(&train_x));
            let (train_x, val_x): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match &scaler {
                Some(s) => (
                    train_x.iter().map(|r| s.transform(r)).collect(),
                    val_rows.iter().map(|r| s.transform(&r.features)).collect(),
                ),
                None => (
                    train_x,
                    val_rows.iter().map(|r| r.features.clone()).collect(),
                ),
            };

            let model_seed = seed::derive(seed_value, &[seed::component::MODEL, fold_idx as u64]);
            let predictions: Vec<Group> = match train(spec, &train_x, &train_y, model_seed) {
                Ok(model) => val_x.iter().map(|row| model.predict(row)).collect(),
                // single-class training folds degrade to majority prediction
                Err(Error::SingleClassTrainingSet) => {
                    let label = majority_label(&train_y);
                    vec![label; val_x.len()]
                }
                Err(e) => return Err(e),
            };
            let correct = predictions
                .iter()
                .zip(&val_rows)
                .filter(|(p, r)| **p == r.label)
                .count();
            Ok(correct as f64 / val_rows.len() as f64)
        })
        .collect()
}

fn majority_label(y: &[Group]) -> Group {
    let experts = y.iter().filter(|&&g| g == Group::Expert).count();
    if 2 * experts >= y.len() {
        Group::Expert
    } else {
        Group::Novice
    }
}

type SeedEvaluations = Vec<(u64, Vec<(SplitPlan, Vec<f64>)>)>;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Cross-validate `spec` under a strategy, averaging folds per seed and
/// seeds into the final mean. Standardization is fitted on the training
/// folds only. Returns one report for the pairs/subject strategies and one
/// per presentation sub-dataset otherwise.
pub fn cross_validate(
    matrix: &FeatureMatrix,
    spec: &ClassifierSpec,
    strategy: SplitStrategy,
    seeds: &[u64],
    n_folds: usize,
) -> Result<Vec<CvReport>> {
    if seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    spec.validate()?;
    // per seed, the plan set (one plan, or one per sub-dataset)
    let per_seed: SeedEvaluations = seeds
        .par_iter()
        .map(|&seed_value| {
            let plans = make_split(matrix, strategy, seed_value, n_folds)?;
            let evaluated = plans
                .into_iter()
                .map(|plan| {
                    let accuracies = evaluate_plan(matrix, spec, &plan, seed_value)?;
                    Ok((plan, accuracies))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((seed_value, evaluated))
        })
        .collect::<Result<_>>()?;

    let n_subsets = per_seed[0].1.len();
    let mut reports = Vec::with_capacity(n_subsets);
    for subset in 0..n_subsets {
        let sub_dataset = per_seed[0].1[subset].0.sub_dataset.clone();
        let fold_accuracies: Vec<Vec<f64>> = per_seed
            .iter()
            .map(|(_, evaluated)| evaluated[subset].1.clone())
            .collect();
        let per_seed_means: Vec<f64> = fold_accuracies.iter().map(|f| mean(f)).collect();
        let mean_accuracy = mean(&per_seed_means);
        reports.push(CvReport {
            spec: *spec,
            spec_label: spec.describe(),
            strategy,
            sub_dataset,
            n_folds,
            seeds: seeds.to_vec(),
            fold_accuracies,
            per_seed_means,
            mean_accuracy,
            optimizer: spec.describe_optimizer(),
        });
    }
    Ok(reports)
}

/// Result of an exhaustive sweep over one family's grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchOutcome {
    pub best_spec: ClassifierSpec,
    pub best_reports: Vec<CvReport>,
    /// `(spec label, grand mean)` for every grid point, in grid order.
    pub evaluated: Vec<(String, f64)>,
}

/// Evaluate every spec of the grid (the family default if none given);
/// highest grand mean wins, ties to the simpler model.
pub fn grid_search(
    matrix: &FeatureMatrix,
    family: ClassifierFamily,
    grid: Option<Vec<ClassifierSpec>>,
    strategy: SplitStrategy,
    seeds: &[u64],
    n_folds: usize,
) -> Result<GridSearchOutcome> {
    let grid = grid.unwrap_or_else(|| family.default_grid());
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    for spec in &grid {
        if spec.family() != family {
            return Err(Error::Config(format!(
                "grid entry {} does not belong to family {}",
                spec.describe(),
                family.name()
            )));
        }
    }
    let all: Vec<(ClassifierSpec, Vec<CvReport>)> = grid
        .par_iter()
        .map(|spec| Ok((*spec, cross_validate(matrix, spec, strategy, seeds, n_folds)?)))
        .collect::<Result<_>>()?;

    let grand = |reports: &[CvReport]| -> f64 {
        mean(&reports.iter().map(|r| r.mean_accuracy).collect::<Vec<_>>())
    };
    let mut best_idx = 0;
    for (idx, (spec, reports)) in all.iter().enumerate().skip(1) {
        let (best_spec, best_reports) = &all[best_idx];
        let challenger = grand(reports);
        let incumbent = grand(best_reports);
        if challenger > incumbent
            || (challenger == incumbent && spec.complexity() < best_spec.complexity())
        {
            best_idx = idx;
        }
    }
    Ok(GridSearchOutcome {
        best_spec: all[best_idx].0,
        best_reports: all[best_idx].1.clone(),
        evaluated: all
            .iter()
            .map(|(spec, reports)| (spec.describe(), grand(reports)))
            .collect(),
    })
}

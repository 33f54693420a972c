//! The four classifier families, implemented directly.
//!
//! Everything is deterministic given (spec, rows, seed): the SVM uses a
//! seeded coordinate order, the other three are seed-free. Label ties
//! anywhere (votes, leaf majorities, zero scores) break toward the
//! lexicographically smaller label, i.e. `expert`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Group;

/// Relative objective-change tolerance for the SVM dual coordinate descent.
pub const SVM_RELATIVE_TOLERANCE: f64 = 1e-6;
/// Epoch cap for the SVM solver.
pub const SVM_MAX_EPOCHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierFamily {
    #[serde(rename = "knn")]
    NearestNeighbors,
    #[serde(rename = "linear-svm")]
    LinearSvm,
    #[serde(rename = "decision-tree")]
    DecisionTree,
    #[serde(rename = "adaboost")]
    AdaBoost,
}

impl std::str::FromStr for ClassifierFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" | "nearest-neighbors" => Ok(ClassifierFamily::NearestNeighbors),
            "svm" | "linear-svm" => Ok(ClassifierFamily::LinearSvm),
            "tree" | "decision-tree" => Ok(ClassifierFamily::DecisionTree),
            "adaboost" => Ok(ClassifierFamily::AdaBoost),
            other => Err(Error::Config(format!(
                "unknown classifier family {other:?} (expected knn | linear-svm | decision-tree | adaboost)"
            ))),
        }
    }
}

impl ClassifierFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierFamily::NearestNeighbors => "Nearest Neighbors",
            ClassifierFamily::LinearSvm => "Linear SVM",
            ClassifierFamily::DecisionTree => "Decision Tree",
            ClassifierFamily::AdaBoost => "AdaBoost",
        }
    }

    /// The standard hyperparameter grid, ordered simplest first.
    pub fn default_grid(&self) -> Vec<ClassifierSpec> {
        match self {
            ClassifierFamily::NearestNeighbors => [3, 5, 7, 9, 11]
                .iter()
                .map(|&neighbors| ClassifierSpec::NearestNeighbors { neighbors })
                .collect(),
            ClassifierFamily::LinearSvm => [0.025, 0.5, 0.75]
                .iter()
                .map(|&c| ClassifierSpec::LinearSvm { c })
                .collect(),
            ClassifierFamily::DecisionTree => [3, 5, 7]
                .iter()
                .map(|&max_depth| ClassifierSpec::DecisionTree { max_depth })
                .collect(),
            ClassifierFamily::AdaBoost => [25, 50, 100]
                .iter()
                .map(|&estimators| ClassifierSpec::AdaBoost { estimators })
                .collect(),
        }
    }

    /// Build a spec from one hyperparameter value.
    pub fn spec_from_value(&self, value: f64) -> Result<ClassifierSpec> {
        let spec = match self {
            ClassifierFamily::NearestNeighbors => ClassifierSpec::NearestNeighbors {
                neighbors: value as usize,
            },
            ClassifierFamily::LinearSvm => ClassifierSpec::LinearSvm { c: value },
            ClassifierFamily::DecisionTree => ClassifierSpec::DecisionTree {
                max_depth: value as usize,
            },
            ClassifierFamily::AdaBoost => ClassifierSpec::AdaBoost {
                estimators: value as usize,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierSpec {
    NearestNeighbors { neighbors: usize },
    LinearSvm { c: f64 },
    DecisionTree { max_depth: usize },
    AdaBoost { estimators: usize },
}

impl ClassifierSpec {
    pub fn family(&self) -> ClassifierFamily {
        match self {
            ClassifierSpec::NearestNeighbors { .. } => ClassifierFamily::NearestNeighbors,
            ClassifierSpec::LinearSvm { .. } => ClassifierFamily::LinearSvm,
            ClassifierSpec::DecisionTree { .. } => ClassifierFamily::DecisionTree,
            ClassifierSpec::AdaBoost { .. } => ClassifierFamily::AdaBoost,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ClassifierSpec::NearestNeighbors { neighbors } => *neighbors >= 1,
            ClassifierSpec::LinearSvm { c } => *c > 0.0 && c.is_finite(),
            ClassifierSpec::DecisionTree { max_depth } => *max_depth >= 1,
            ClassifierSpec::AdaBoost { estimators } => *estimators >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid hyperparameter in {self:?}")))
        }
    }

    /// Whether the hyperparameter sits inside the standard grid; anything
    /// else is reported as an extended value.
    pub fn is_standard(&self) -> bool {
        self.family().default_grid().iter().any(|s| s == self)
    }

    /// Distance- and margin-based families want z-scored features.
    pub fn needs_standardization(&self) -> bool {
        matches!(
            self,
            ClassifierSpec::NearestNeighbors { .. } | ClassifierSpec::LinearSvm { .. }
        )
    }

    /// Tie-break key for grid search: lower is simpler.
    pub fn complexity(&self) -> f64 {
        match self {
            ClassifierSpec::NearestNeighbors { neighbors } => *neighbors as f64,
            ClassifierSpec::LinearSvm { c } => *c,
            ClassifierSpec::DecisionTree { max_depth } => *max_depth as f64,
            ClassifierSpec::AdaBoost { estimators } => *estimators as f64,
        }
    }

    pub fn describe(&self) -> String {
        let base = match self {
            ClassifierSpec::NearestNeighbors { neighbors } => format!("knn(k={neighbors})"),
            ClassifierSpec::LinearSvm { c } => format!("linear-svm(C={c})"),
            ClassifierSpec::DecisionTree { max_depth } => {
                format!("decision-tree(max_depth={max_depth})")
            }
            ClassifierSpec::AdaBoost { estimators } => {
                format!("adaboost(estimators={estimators})")
            }
        };
        if self.is_standard() {
            base
        } else {
            format!("{base} [extended]")
        }
    }

    pub fn describe_optimizer(&self) -> Option<String> {
        match self {
            ClassifierSpec::LinearSvm { .. } => Some(format!(
                "dual coordinate descent on L2-regularized hinge loss; stop at relative \
                 objective change <= {SVM_RELATIVE_TOLERANCE:e} or {SVM_MAX_EPOCHS} epochs"
            )),
            _ => None,
        }
    }
}

fn sign_label(group: Group) -> f64 {
    match group {
        Group::Expert => 1.0,
        Group::Novice => -1.0,
    }
}

fn label_from_score(score: f64) -> Group {
    if score > 0.0 {
        Group::Expert
    } else if score < 0.0 {
        Group::Novice
    } else {
        Group::Expert // tie toward the smaller label
    }
}

/// A trained classifier.
#[derive(Debug, Clone)]
pub enum Model {
    Knn(KnnModel),
    Svm(SvmModel),
    Tree(TreeModel),
    Ada(AdaModel),
}

impl Model {
    pub fn predict(&self, features: &[f64]) -> Group {
        match self {
            Model::Knn(m) => m.predict(features),
            Model::Svm(m) => m.predict(features),
            Model::Tree(m) => m.predict(features),
            Model::Ada(m) => m.predict(features),
        }
    }
}

/// Train `spec` on the given rows. Deterministic for fixed (spec, rows, seed).
pub fn train(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[Group], seed: u64) -> Result<Model> {
    spec.validate()?;
    assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return Err(Error::SingleClassTrainingSet);
    }
    let has_expert = y.contains(&Group::Expert);
    let has_novice = y.contains(&Group::Novice);
    if !(has_expert && has_novice) {
        return Err(Error::SingleClassTrainingSet);
    }
    Ok(match spec {
        ClassifierSpec::NearestNeighbors { neighbors } => Model::Knn(KnnModel {
            k: *neighbors,
            x: x.to_vec(),
            y: y.to_vec(),
        }),
        ClassifierSpec::LinearSvm { c } => Model::Svm(train_svm(x, y, *c, seed)),
        ClassifierSpec::DecisionTree { max_depth } => Model::Tree(train_tree(x, y, *max_depth)),
        ClassifierSpec::AdaBoost { estimators } => Model::Ada(train_adaboost(x, y, *estimators)),
    })
}

// ---------------------------------------------------------------------------
// k nearest neighbors

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    x: Vec<Vec<f64>>,
    y: Vec<Group>,
}

impl KnnModel {
    pub fn predict(&self, features: &[f64]) -> Group {
        let mut distances: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, row)| (euclidean(row, features), i))
            .collect();
        // distance ties resolved by training-row index for determinism
        distances.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(distances.len());
        let expert_votes = distances[..k]
            .iter()
            .filter(|(_, i)| self.y[*i] == Group::Expert)
            .count();
        if 2 * expert_votes >= k {
            Group::Expert
        } else {
            Group::Novice
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// linear SVM

/// Linear decision function `w . x + b`, trained by dual coordinate descent
/// on the L2-regularized L1 (hinge) loss. The bias enters as an augmented
/// always-one feature, so it is regularized like liblinear's.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
}

impl SvmModel {
    pub fn decision(&self, features: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, features: &[f64]) -> Group {
        label_from_score(self.decision(features))
    }
}

fn train_svm(x: &[Vec<f64>], y: &[Group], c: f64, seed: u64) -> SvmModel {
    let n = x.len();
    let d = x[0].len();
    let labels: Vec<f64> = y.iter().map(|&g| sign_label(g)).collect();
    let mut w = vec![0.0; d];
    let mut bias = 0.0;
    let mut alpha = vec![0.0; n];
    let qd: Vec<f64> = x
        .iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut prev_objective = f64::INFINITY;
    let mut epochs_run = 0;

    for _ in 0..SVM_MAX_EPOCHS {
        epochs_run += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let margin = labels[i]
                * (w.iter().zip(&x[i]).map(|(wj, v)| wj * v).sum::<f64>() + bias);
            let g = margin - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > 1e-12 {
                let updated = (alpha[i] - g / qd[i]).clamp(0.0, c);
                let delta = (updated - alpha[i]) * labels[i];
                for (wj, v) in w.iter_mut().zip(&x[i]) {
                    *wj += delta * v;
                }
                bias += delta;
                alpha[i] = updated;
            }
        }
        let objective = svm_primal_objective(&w, bias, x, &labels, c);
        if (prev_objective - objective).abs() <= SVM_RELATIVE_TOLERANCE * objective.abs().max(1.0)
        {
            break;
        }
        prev_objective = objective;
    }
    SvmModel {
        weights: w,
        bias,
        epochs_run,
    }
}

fn svm_primal_objective(w: &[f64], bias: f64, x: &[Vec<f64>], labels: &[f64], c: f64) -> f64 {
    let reg = 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + bias * bias);
    let hinge: f64 = x
        .iter()
        .zip(labels)
        .map(|(row, &yi)| {
            let f = w.iter().zip(row).map(|(wj, v)| wj * v).sum::<f64>() + bias;
            (1.0 - yi * f).max(0.0)
        })
        .sum();
    reg + c * hinge
}

// ---------------------------------------------------------------------------
// decision tree

/// CART with Gini impurity and a hard depth cap. Nodes with identical
/// feature rows or at the cap become majority leaves; otherwise the best
/// split wins by impurity gain with first-feature, lowest-threshold
/// tie-breaking. Zero-gain splits are allowed so that consistent datasets
/// (e.g. XOR layouts) are always fit exactly when the cap is not binding.
#[derive(Debug, Clone)]
pub struct TreeModel {
    root: TreeNode,
    pub max_depth: usize,
}

#[derive(Debug, Clone)]
enum TreeNode {
    Leaf {
        label: Group,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeModel {
    pub fn predict(&self, features: &[f64]) -> Group {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth_of(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + depth_of(left).max(depth_of(right)),
            }
        }
        depth_of(&self.root)
    }
}

fn majority(y: &[Group], indices: &[usize]) -> Group {
    let experts = indices.iter().filter(|&&i| y[i] == Group::Expert).count();
    if 2 * experts >= indices.len() {
        Group::Expert
    } else {
        Group::Novice
    }
}

fn gini(expert_count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = expert_count as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn train_tree(x: &[Vec<f64>], y: &[Group], max_depth: usize) -> TreeModel {
    let indices: Vec<usize> = (0..x.len()).collect();
    let root = grow(x, y, indices, max_depth);
    TreeModel { root, max_depth }
}

fn grow(x: &[Vec<f64>], y: &[Group], indices: Vec<usize>, remaining_depth: usize) -> TreeNode {
    let experts = indices.iter().filter(|&&i| y[i] == Group::Expert).count();
    if experts == 0 || experts == indices.len() || remaining_depth == 0 {
        return TreeNode::Leaf {
            label: majority(y, &indices),
        };
    }
    let d = x[0].len();
    let parent_gini = gini(experts, indices.len());
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    #[allow(clippy::needless_range_loop)] // `feature` indexes inner rows, not `x`
    for feature in 0..d {
        let mut order: Vec<usize> = indices.clone();
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
        let mut left_total = 0usize;
        let mut left_experts = 0usize;
        for j in 1..order.len() {
            left_total += 1;
            if y[order[j - 1]] == Group::Expert {
                left_experts += 1;
            }
            let prev = x[order[j - 1]][feature];
            let next = x[order[j]][feature];
            if prev == next {
                continue;
            }
            let right_total = order.len() - left_total;
            let right_experts = experts - left_experts;
            let weighted = (left_total as f64 * gini(left_experts, left_total)
                + right_total as f64 * gini(right_experts, right_total))
                / order.len() as f64;
            let gain = parent_gini - weighted;
            if best.is_none() || gain > best.unwrap().0 {
                best = Some((gain, feature, 0.5 * (prev + next)));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        // all rows identical across features: inconsistent labels
        return TreeNode::Leaf {
            label: majority(y, &indices),
        };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| x[i][feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, left_idx, remaining_depth - 1)),
        right: Box::new(grow(x, y, right_idx, remaining_depth - 1)),
    }
}

// ---------------------------------------------------------------------------
// AdaBoost

/// Decision stump: predicts `polarity` where the feature exceeds the
/// threshold, `-polarity` elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: f64,
}

impl Stump {
    fn raw(&self, features: &[f64]) -> f64 {
        if features[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaRound {
    pub stump: Stump,
    pub alpha: f64,
    /// Weighted training error of the stump when it was selected; always
    /// below one half.
    pub weighted_error: f64,
}

/// Boosted depth-1 stumps with the standard exponential-loss weight update.
#[derive(Debug, Clone)]
pub struct AdaModel {
    pub rounds: Vec<AdaRound>,
}

impl AdaModel {
    pub fn predict(&self, features: &[f64]) -> Group {
        let score: f64 = self
            .rounds
            .iter()
            .map(|r| r.alpha * r.stump.raw(features))
            .sum();
        label_from_score(score)
    }
}

fn train_adaboost(x: &[Vec<f64>], y: &[Group], estimators: usize) -> AdaModel {
    let n = x.len();
    let d = x[0].len();
    let labels: Vec<f64> = y.iter().map(|&g| sign_label(g)).collect();
    // per-feature sort orders are weight-independent; compute once
    let sorted: Vec<Vec<usize>> = (0..d)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            idx
        })
        .collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut rounds = Vec::with_capacity(estimators);

    for _ in 0..estimators {
        let (stump, error) = best_stump(x, &labels, &weights, &sorted);
        if error >= 0.5 {
            break; // nothing better than chance under the current weights
        }
        let eps = error.max(1e-12);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        let mut total = 0.0;
        for i in 0..n {
            weights[i] *= (-alpha * labels[i] * stump.raw(&x[i])).exp();
            total += weights[i];
        }
        for w in &mut weights {
            *w /= total;
        }
        rounds.push(AdaRound {
            stump,
            alpha,
            weighted_error: error,
        });
        if error < 1e-12 {
            break; // perfect stump; further rounds cannot help
        }
    }
    AdaModel { rounds }
}

/// Exhaustive weighted-error minimization over (feature, boundary, polarity),
/// scanning each feature's presorted order once.
fn best_stump(
    x: &[Vec<f64>],
    labels: &[f64],
    weights: &[f64],
    sorted: &[Vec<usize>],
) -> (Stump, f64) {
    let n = labels.len();
    let total_plus: f64 = weights
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l > 0.0)
        .map(|(w, _)| w)
        .sum();
    let total_weight: f64 = weights.iter().sum();
    let total_minus = total_weight - total_plus;

    let mut best_error = f64::INFINITY;
    let mut best = Stump {
        feature: 0,
        threshold: 0.0,
        polarity: 1.0,
    };
    for (feature, order) in sorted.iter().enumerate() {
        let mut prefix_plus = 0.0;
        let mut prefix_minus = 0.0;
        for j in 0..=n {
            let boundary_ok = j == 0
                || j == n
                || x[order[j - 1]][feature] < x[order[j]][feature];
            if boundary_ok {
                // polarity +1: points above the threshold predicted +1
                let error_plus = prefix_plus + (total_minus - prefix_minus);
                let error_minus = total_weight - error_plus;
                let threshold = if j == 0 {
                    x[order[0]][feature] - 1.0
                } else if j == n {
                    x[order[n - 1]][feature] + 1.0
                } else {
                    0.5 * (x[order[j - 1]][feature] + x[order[j]][feature])
                };
                if error_plus < best_error {
                    best_error = error_plus;
                    best = Stump {
                        feature,
                        threshold,
                        polarity: 1.0,
                    };
                }
                if error_minus < best_error {
                    best_error = error_minus;
                    best = Stump {
                        feature,
                        threshold,
                        polarity: -1.0,
                    };
                }
            }
            if j < n {
                let i = order[j];
                if labels[i] > 0.0 {
                    prefix_plus += weights[i];
                } else {
                    prefix_minus += weights[i];
                }
            }
        }
    }
    (best, best_error)
}

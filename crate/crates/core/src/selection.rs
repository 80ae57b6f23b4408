//! Random-forest MDI importances and the choice of the binning feature.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Target};
use crate::error::{invalid, shape_err, Result};
use crate::seed::{self, stream};
use crate::tree::{fit_tree, RegressionTree, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ⌈D/3⌉.
    pub feature_subsample: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 5,
            feature_subsample: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    fn tree_params(&self, d: usize) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            max_features: Some(self.feature_subsample.unwrap_or(d.div_ceil(3)).clamp(1, d)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
    n_features: usize,
    seed: u64,
}

/// Bootstrap resample (or the identity) of `m` rows.
pub(crate) fn sample_rows<R: Rng + ?Sized>(m: usize, bootstrap: bool, rng: &mut R) -> Vec<usize> {
    if bootstrap {
        (0..m).map(|_| rng.random_range(0..m)).collect()
    } else {
        (0..m).collect()
    }
}

pub fn fit_random_forest(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(invalid("random forest needs a non-empty feature matrix"));
    }
    if x.nrows() != y.len() {
        return Err(shape_err(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if params.n_trees == 0 {
        return Err(invalid("random forest needs at least one tree"));
    }
    let tree_params = params.tree_params(x.ncols());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[stream::TREE, t as u64]));
            let rows = sample_rows(x.nrows(), params.bootstrap, &mut rng);
            fit_tree(x, y, &rows, &tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        n_features: x.ncols(),
        seed,
    })
}

impl RandomForest {
    /// Wraps already-fitted trees.
    pub fn from_trees(trees: Vec<RegressionTree>, seed: u64) -> Result<Self> {
        let n_features = trees.first().map(|t| t.n_features()).ok_or_else(|| invalid("empty forest"))?;
        if trees.iter().any(|t| t.n_features() != n_features) {
            return Err(shape_err("trees disagree on feature count"));
        }
        Ok(RandomForest {
            trees,
            n_features,
            seed,
        })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let mut sum = Array1::zeros(x.nrows());
        for tree in &self.trees {
            sum += &tree.predict(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }

    pub fn importance(&self) -> ForestImportance {
        ForestImportance {
            importances: mdi_importance(self),
            trees: self.trees.len(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestImportance {
    pub importances: Vec<f64>,
    pub trees: usize,
    pub seed: u64,
}

/// Mean decrease in impurity, normalized to sum to one; uniform when no split reduced impurity.
pub fn mdi_importance(forest: &RandomForest) -> Vec<f64> {
    let d = forest.n_features;
    let mut total = vec![0.0; d];
    for tree in &forest.trees {
        for (acc, v) in total.iter_mut().zip(tree.impurity_decrease()) {
            *acc += v;
        }
    }
    for v in &mut total {
        *v /= forest.trees.len() as f64;
    }
    normalize(total)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        v.iter_mut().for_each(|x| *x /= sum);
        v
    } else {
        vec![1.0 / v.len() as f64; v.len()]
    }
}

/// Argmax of the mean of both importance vectors; the lowest index wins ties.
pub fn select_binning_feature(motor: &[f64], total: &[f64]) -> Result<usize> {
    if motor.len() != total.len() {
        return Err(shape_err(format!(
            "importance vectors have lengths {} and {}",
            motor.len(),
            total.len()
        )));
    }
    if motor.is_empty() {
        return Err(invalid("empty importance vectors"));
    }
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (j, (a, b)) in motor.iter().zip(total).enumerate() {
        let v = 0.5 * (a + b);
        if v > best_value {
            best = j;
            best_value = v;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub feature_names: Vec<String>,
    pub motor: Vec<f64>,
    pub total: Vec<f64>,
    pub combined: Vec<f64>,
    pub selected_index: usize,
    pub selected_name: String,
    pub trials: usize,
    pub base_seed: u64,
    pub forest: ForestParams,
}

impl FeatureReport {
    /// Feature indices ordered by decreasing importance for one target.
    pub fn ranking(&self, target: Target) -> Vec<usize> {
        let scores = match target {
            Target::Motor => &self.motor,
            Target::Total => &self.total,
        };
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        order
    }
}

/// Fits `trials` forests per target (seeds `base_seed + t`) and averages their importances.
pub fn feature_report(
    dataset: &Dataset,
    trials: usize,
    params: &ForestParams,
    base_seed: u64,
) -> Result<FeatureReport> {
    if trials == 0 {
        return Err(invalid("feature selection needs at least one trial"));
    }
    let d = dataset.dims();
    let mut averaged = [vec![0.0; d], vec![0.0; d]];
    for t in 0..trials {
        let trial_seed = seed::trial_seed(base_seed, t);
        for (slot, target) in averaged.iter_mut().zip(Target::ALL) {
            let forest = fit_random_forest(dataset.features.view(), dataset.labels(target), params, trial_seed)?;
            for (acc, v) in slot.iter_mut().zip(mdi_importance(&forest)) {
                *acc += v / trials as f64;
            }
        }
    }
    let [motor, total] = averaged;
    let combined: Vec<f64> = motor.iter().zip(&total).map(|(a, b)| 0.5 * (a + b)).collect();
    let selected_index = select_binning_feature(&motor, &total)?;
    Ok(FeatureReport {
        feature_names: dataset.feature_names.clone(),
        selected_name: dataset.feature_names[selected_index].clone(),
        motor,
        total,
        combined,
        selected_index,
        trials,
        base_seed,
        forest: params.clone(),
    })
}

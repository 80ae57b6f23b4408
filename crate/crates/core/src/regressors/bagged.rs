use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::{self, stream};
use crate::selection::sample_rows;
use crate::tree::{fit_tree, RegressionTree, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaggedParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for BaggedParams {
    fn default() -> Self {
        BaggedParams {
            n_trees: 10,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
        }
    }
}

impl BaggedParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 {
            return Err(invalid("bagged n_trees and min_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaggedModel {
    pub trees: Vec<RegressionTree>,
}

pub fn fit(params: &BaggedParams, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, seed: u64) -> Result<BaggedModel> {
    params.validate()?;
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        max_features: None,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[stream::TREE, b as u64]));
            let rows = sample_rows(x.nrows(), params.bootstrap, &mut rng);
            fit_tree(x, y, &rows, &tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaggedModel { trees })
}

impl BaggedModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let mut sum = Array1::zeros(x.nrows());
        for tree in &self.trees {
            sum += &tree.predict(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }
}

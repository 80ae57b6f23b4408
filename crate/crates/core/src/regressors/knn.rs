use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("knn k must be at least 1"));
        }
        Ok(())
    }
}

/// Uniform-weight k-nearest-neighbour regression (Euclidean).
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

pub fn fit(params: &KnnParams, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<KnnModel> {
    params.validate()?;
    Ok(KnnModel {
        k: params.k.min(x.nrows()),
        x: x.to_owned(),
        y: y.to_owned(),
    })
}

impl KnnModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let d = self.x.ncols();
        let train = self.x.as_standard_layout();
        let train = train.as_slice().expect("standard layout");
        let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(self.x.nrows());
        let mut query = vec![0.0; d];
        x.rows()
            .into_iter()
            .map(|row| {
                query.iter_mut().zip(row.iter()).for_each(|(q, v)| *q = *v);
                scratch.clear();
                scratch.extend(train.chunks_exact(d.max(1)).enumerate().map(|(i, r)| {
                    let dist: f64 = r.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum();
                    (dist, i)
                }));
                // Equal distances fall back to row order, so the neighbour set is well defined.
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if self.k < scratch.len() {
                    scratch.select_nth_unstable_by(self.k - 1, cmp);
                }
                scratch[..self.k].iter().map(|&(_, i)| self.y[i]).sum::<f64>() / self.k as f64
            })
            .collect()
    }
}

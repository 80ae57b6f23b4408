//! Downstream regressors behind one fit/predict interface.

pub mod bagged;
pub mod gpr;
pub mod knn;
pub mod neural;
pub mod ridge;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Error, Result};

pub use bagged::{BaggedModel, BaggedParams};
pub use gpr::{GprModel, GprParams};
pub use knn::{KnnModel, KnnParams};
pub use neural::{NeuralModel, NeuralParams};
pub use ridge::{RidgeModel, RidgeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Knn,
    Neural,
    #[serde(alias = "bagged_trees")]
    Bagged,
    Gpr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Ridge,
        ModelKind::Knn,
        ModelKind::Neural,
        ModelKind::Bagged,
        ModelKind::Gpr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Knn => "knn",
            ModelKind::Neural => "neural",
            ModelKind::Bagged => "bagged",
            ModelKind::Gpr => "gpr",
        }
    }

    pub fn is_ensemble(self) -> bool {
        matches!(self, ModelKind::Bagged)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ridge" => Ok(ModelKind::Ridge),
            "knn" => Ok(ModelKind::Knn),
            "neural" | "nn" | "mlp" => Ok(ModelKind::Neural),
            "bagged" | "bagged_trees" | "bagging" => Ok(ModelKind::Bagged),
            "gpr" => Ok(ModelKind::Gpr),
            other => Err(invalid(format!(
                "unknown model `{other}` (valid: ridge, knn, neural, bagged, gpr)"
            ))),
        }
    }
}

/// Per-kind hyperparameters; only the entry matching the kind is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub ridge: RidgeParams,
    pub knn: KnnParams,
    pub neural: NeuralParams,
    pub bagged: BaggedParams,
    pub gpr: GprParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: ModelKind,
    pub hyper: Hyperparameters,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        RegressorSpec {
            kind,
            hyper: Hyperparameters::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Ridge => self.hyper.ridge.validate(),
            ModelKind::Knn => self.hyper.knn.validate(),
            ModelKind::Neural => self.hyper.neural.validate(),
            ModelKind::Bagged => self.hyper.bagged.validate(),
            ModelKind::Gpr => self.hyper.gpr.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Ridge(RidgeModel),
    Knn(KnnModel),
    Neural(NeuralModel),
    Bagged(BaggedModel),
    Gpr(GprModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub state: ModelState,
}

fn check_training_data(x: ArrayView2<'_, f64>, ys: &[ArrayView1<'_, f64>]) -> Result<()> {
    if x.nrows() < 2 {
        return Err(invalid(format!("need at least 2 training rows, got {}", x.nrows())));
    }
    if x.ncols() == 0 {
        return Err(invalid("training matrix has no columns"));
    }
    for y in ys {
        if y.len() != x.nrows() {
            return Err(shape_err(format!("{} rows but {} targets", x.nrows(), y.len())));
        }
    }
    if x.iter().chain(ys.iter().flat_map(|y| y.iter())).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regressor training data".into()));
    }
    Ok(())
}

pub fn fit(spec: &RegressorSpec, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<TrainedModel> {
    Ok(fit_targets(spec, x, &[y])?.remove(0))
}

/// Fits one model per target on the same inputs. GPR shares its kernel factorization.
pub fn fit_targets(spec: &RegressorSpec, x: ArrayView2<'_, f64>, ys: &[ArrayView1<'_, f64>]) -> Result<Vec<TrainedModel>> {
    spec.validate()?;
    check_training_data(x, ys)?;
    let wrap = |state| TrainedModel {
        kind: spec.kind,
        input_dim: x.ncols(),
        state,
    };
    let h = &spec.hyper;
    match spec.kind {
        ModelKind::Gpr => Ok(gpr::fit_targets(&h.gpr, x, ys)?
            .into_iter()
            .map(|m| wrap(ModelState::Gpr(m)))
            .collect()),
        _ => ys
            .iter()
            .map(|y| {
                let state = match spec.kind {
                    ModelKind::Ridge => ModelState::Ridge(ridge::fit(&h.ridge, x, *y)?),
                    ModelKind::Knn => ModelState::Knn(knn::fit(&h.knn, x, *y)?),
                    ModelKind::Neural => ModelState::Neural(neural::fit(&h.neural, x, *y, spec.seed)?),
                    ModelKind::Bagged => ModelState::Bagged(bagged::fit(&h.bagged, x, *y, spec.seed)?),
                    ModelKind::Gpr => unreachable!(),
                };
                Ok(wrap(state))
            })
            .collect(),
    }
}

impl TrainedModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.input_dim {
            return Err(shape_err(format!(
                "{} model trained on {} columns, got {}",
                self.kind,
                self.input_dim,
                x.ncols()
            )));
        }
        let out = match &self.state {
            ModelState::Ridge(m) => m.predict(x),
            ModelState::Knn(m) => m.predict(x),
            ModelState::Neural(m) => m.predict(x),
            ModelState::Bagged(m) => m.predict(x)?,
            ModelState::Gpr(m) => m.predict(x),
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} predictions", self.kind)));
        }
        Ok(out)
    }
}

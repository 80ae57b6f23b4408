use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{contrastive_loss, distance_coefficients_with, forward, gradient_at, AlphaConvention, EncoderWeights};
use crate::binning::{compute_bin_centers, BinningModel};
use crate::dataset::FoldSplit;
use crate::error::{invalid, shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub k: usize,
    pub epochs_per_fold: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Width of the hidden layer; `None` keeps it equal to the input width.
    pub d_prime: Option<usize>,
    pub alpha_convention: AlphaConvention,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 5,
            epochs_per_fold: 200,
            learning_rate: 1e-3,
            grad_clip: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 2024,
            d_prime: None,
            alpha_convention: AlphaConvention::AnchorRow,
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: i32,
    m: Array2<f64>,
    v: Array2<f64>,
}

impl Adam {
    pub fn new(dim: (usize, usize), lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: Array2::zeros(dim),
            v: Array2::zeros(dim),
        }
    }

    pub fn update(&mut self, params: &mut Array2<f64>, grad: &Array2<f64>) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let (lr, eps) = (self.lr, self.epsilon);
        Zip::from(params)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(grad)
            .for_each(|p, m, v, &g| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
    }
}

/// Rescales `grad` in place so its Frobenius norm is at most `max_norm`; returns the original norm.
pub(crate) fn clip_global_norm(grad: &mut Array2<f64>, max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grad.mapv_inplace(|g| g * scale);
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based, counted across folds.
    pub epoch: usize,
    pub fold: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub weights: EncoderWeights,
    pub binning: BinningModel,
    pub config: TrainConfig,
    /// Lowest validation loss seen; the returned weights are the ones that produced it.
    pub validation_loss: f64,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

fn init_weights(d: usize, d_prime: usize, seed: u64) -> Array2<f64> {
    let bound = 1.0 / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((d, d_prime), |_| rng.random_range(-bound..=bound))
}

/// Full-batch training over the fold rotation.
///
/// `x` holds every (normalized) row of the dataset; fold indices select from it. Each epoch
/// recomputes the bin centers on the fold's training rows, scores the validation rows against
/// those centers with the current weights, keeps the best weights seen so far, and then takes
/// one clipped Adam step. Weights and optimizer state carry over from one fold to the next.
pub fn train_encoder(
    x: ArrayView2<'_, f64>,
    folds: &[FoldSplit],
    binning: &BinningModel,
    config: &TrainConfig,
) -> Result<TrainedEncoder> {
    if folds.is_empty() {
        return Err(invalid("encoder training needs at least one fold"));
    }
    if config.k == 0 || config.k != binning.k {
        return Err(invalid(format!(
            "bin count mismatch: config k={}, binning k={}",
            config.k, binning.k
        )));
    }
    if !(config.learning_rate > 0.0) || !(config.grad_clip > 0.0) {
        return Err(invalid("learning rate and gradient clip must be positive"));
    }
    let d = x.ncols();
    if binning.feature_index >= d {
        return Err(shape_err(format!(
            "binning feature {} outside {d} columns",
            binning.feature_index
        )));
    }
    let d_prime = config.d_prime.unwrap_or(d);
    if d_prime == 0 {
        return Err(invalid("hidden width must be positive"));
    }
    let bins = binning.assign_rows(x)?;
    let alpha = distance_coefficients_with(config.k, config.alpha_convention);
    let mut w = init_weights(d, d_prime, config.seed);
    let mut adam = Adam::new(w.dim(), config.learning_rate, config.beta1, config.beta2, config.epsilon);

    let mut best_w = w.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut log = Vec::with_capacity(folds.len() * config.epochs_per_fold);
    let mut epoch = 0;

    for fold in folds {
        let x_train = x.select(Axis(0), &fold.train_rows);
        let x_valid = x.select(Axis(0), &fold.valid_rows);
        let bins_train = bins.select(&fold.train_rows);
        let bins_valid = bins.select(&fold.valid_rows);
        for _ in 0..config.epochs_per_fold {
            epoch += 1;
            let diverged = |loss: f64| Error::Diverged { epoch, loss };
            let h = forward(w.view(), x_train.view())?;
            if h.iter().any(|v| !v.is_finite()) {
                return Err(diverged(f64::NAN));
            }
            let centers = compute_bin_centers(h.view(), &bins_train, config.k)?;
            let (train_loss, mut grad) = gradient_at(x_train.view(), h.view(), centers.view(), &bins_train, alpha.view())
                .map_err(|_| diverged(f64::NAN))?;
            let valid_loss = if x_valid.nrows() == 0 {
                train_loss
            } else {
                let hv = forward(w.view(), x_valid.view())?;
                contrastive_loss(hv.view(), centers.view(), &bins_valid, alpha.view()).map_err(|_| diverged(f64::NAN))?
            };
            if !train_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(diverged(train_loss));
            }
            log.push(EpochLog {
                epoch,
                fold: fold.fold_index,
                train_loss,
                valid_loss,
            });
            if valid_loss < best_loss {
                best_loss = valid_loss;
                best_w.assign(&w);
                best_epoch = epoch;
            }
            clip_global_norm(&mut grad, config.grad_clip);
            adam.update(&mut w, &grad);
        }
    }

    Ok(TrainedEncoder {
        weights: EncoderWeights::new(best_w),
        binning: binning.clone(),
        config: config.clone(),
        validation_loss: best_loss,
        best_epoch,
        log,
    })
}

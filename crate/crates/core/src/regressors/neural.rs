use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One-hidden-layer ReLU network trained by minibatch SGD with Nesterov momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    /// L2 penalty on the weights.
    pub l2: f64,
    pub max_epochs: usize,
    /// Minimum improvement of the epoch loss that resets the patience counter.
    pub tol: f64,
    pub patience: usize,
}

impl Default for NeuralParams {
    fn default() -> Self {
        NeuralParams {
            hidden: 32,
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 200,
            l2: 1e-3,
            max_epochs: 2000,
            tol: 1e-3,
            patience: 10,
        }
    }
}

impl NeuralParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(invalid("neural hidden, batch_size and max_epochs must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) || !(self.l2 >= 0.0) {
            return Err(invalid("neural learning_rate > 0, momentum in [0,1), l2 >= 0 required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
    pub epochs: usize,
    pub final_loss: f64,
}

fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> f64 {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    rng.random_range(-bound..bound)
}

struct Grads {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array1<f64>,
    b2: f64,
}

impl NeuralModel {
    fn hidden(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w1);
        z += &self.b1;
        z
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let a = self.hidden(x).mapv_into(|v| v.max(0.0));
        a.dot(&self.w2) + self.b2
    }

    /// Half mean squared error plus the L2 term, and its gradient, on one batch.
    fn batch_gradient(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, l2: f64) -> (f64, Grads) {
        let nb = x.nrows() as f64;
        let z = self.hidden(x);
        let a = z.mapv(|v| v.max(0.0));
        let out = a.dot(&self.w2) + self.b2;
        let residual = &out - &y;
        let penalty = 0.5 * l2 * (self.w1.mapv(|v| v * v).sum() + self.w2.mapv(|v| v * v).sum()) / nb;
        let loss = 0.5 * residual.mapv(|v| v * v).sum() / nb + penalty;
        let dout = residual / nb;
        let w2 = a.t().dot(&dout) + &(&self.w2 * (l2 / nb));
        let b2 = dout.sum();
        let mut dz = Array2::<f64>::zeros(z.dim());
        Zip::indexed(&mut dz).and(&z).for_each(|(i, j), d, &zv| {
            if zv > 0.0 {
                *d = dout[i] * self.w2[j];
            }
        });
        let w1 = x.t().dot(&dz) + &(&self.w1 * (l2 / nb));
        let b1 = dz.sum_axis(Axis(0));
        (loss, Grads { w1, b1, w2, b2 })
    }
}

pub fn fit(params: &NeuralParams, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, seed: u64) -> Result<NeuralModel> {
    params.validate()?;
    let (n, d) = x.dim();
    let h = params.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = NeuralModel {
        w1: Array2::from_shape_fn((d, h), |_| glorot(&mut rng, d, h)),
        b1: Array1::from_shape_fn(h, |_| glorot(&mut rng, d, h)),
        w2: Array1::from_shape_fn(h, |_| glorot(&mut rng, h, 1)),
        b2: glorot(&mut rng, h, 1),
        epochs: 0,
        final_loss: f64::NAN,
    };
    let mut v = Grads {
        w1: Array2::zeros((d, h)),
        b1: Array1::zeros(h),
        w2: Array1::zeros(h),
        b2: 0.0,
    };
    let (lr, mu) = (params.learning_rate, params.momentum);
    let batch = params.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=params.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb = chunk.iter().map(|&i| y[i]).collect::<Array1<f64>>();
            let (loss, g) = model.batch_gradient(xb.view(), yb.view(), params.l2);
            epoch_loss += loss * chunk.len() as f64;
            // v ← μv − ηg; θ ← θ + μv − ηg
            Zip::from(&mut model.w1).and(&mut v.w1).and(&g.w1).for_each(|p, vel, &gr| {
                *vel = mu * *vel - lr * gr;
                *p += mu * *vel - lr * gr;
            });
            Zip::from(&mut model.b1).and(&mut v.b1).and(&g.b1).for_each(|p, vel, &gr| {
                *vel = mu * *vel - lr * gr;
                *p += mu * *vel - lr * gr;
            });
            Zip::from(&mut model.w2).and(&mut v.w2).and(&g.w2).for_each(|p, vel, &gr| {
                *vel = mu * *vel - lr * gr;
                *p += mu * *vel - lr * gr;
            });
            v.b2 = mu * v.b2 - lr * g.b2;
            model.b2 += mu * v.b2 - lr * g.b2;
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        model.epochs = epoch;
        model.final_loss = epoch_loss;
        if epoch_loss > best - params.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        best = best.min(epoch_loss);
        if stale > params.patience {
            break;
        }
    }
    Ok(model)
}

#[cfg(test)]
pub(crate) fn batch_gradient_w1(model: &NeuralModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, l2: f64) -> Array2<f64> {
    model.batch_gradient(x, y, l2).1.w1
}

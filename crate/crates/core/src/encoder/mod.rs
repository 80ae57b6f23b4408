//! The contrastive encoder `H = tanh(XW)`: loss, gradient, training and persistence.
//!
//! Each sample is pulled towards the center of its own bin and pushed away from the other
//! bin centers, with the push weighted by the distance coefficients `alpha` so that
//! neighbouring bins repel less than distant ones.

mod alpha;
mod persist;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::binning::{compute_bin_centers, BinAssignment};
use crate::error::{shape_err, Error, Result};

pub use alpha::{distance_coefficients, distance_coefficients_with, AlphaConvention};
pub use persist::EncoderFile;
pub use train::{train_encoder, Adam, EpochLog, TrainConfig, TrainedEncoder};

/// The learned projection. `w` is D×D′.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub w: Array2<f64>,
}

impl EncoderWeights {
    pub fn new(w: Array2<f64>) -> Self {
        EncoderWeights { w }
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    pub fn d_prime(&self) -> usize {
        self.w.ncols()
    }

    pub fn encode(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        forward(self.w.view(), x)
    }

    pub fn augment(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        augment(self.w.view(), x)
    }
}

fn check_shapes(w: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != w.nrows() {
        return Err(shape_err(format!(
            "input has {} columns, encoder expects {}",
            x.ncols(),
            w.nrows()
        )));
    }
    Ok(())
}

pub fn forward(w: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_shapes(w, x)?;
    Ok(x.dot(&w).mapv_into(f64::tanh))
}

/// `[X | tanh(XW)]`.
pub fn augment(w: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let h = forward(w, x)?;
    ndarray::concatenate(Axis(1), &[x, h.view()]).map_err(|e| shape_err(e.to_string()))
}

fn check_loss_inputs(
    h: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
    assignment: &BinAssignment,
    alpha: ArrayView2<'_, f64>,
) -> Result<usize> {
    let k = centers.nrows();
    if alpha.dim() != (k, k) {
        return Err(shape_err(format!(
            "alpha is {:?} but there are {k} centers",
            alpha.dim()
        )));
    }
    if centers.ncols() != h.ncols() {
        return Err(shape_err(format!(
            "centers have width {}, hidden states {}",
            centers.ncols(),
            h.ncols()
        )));
    }
    assignment.check(k, h.nrows())?;
    if h.iter().chain(centers.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("contrastive loss input".into()));
    }
    Ok(k)
}

/// Per-sample loss terms and the softmax weights `p_k·α_{b,k}` needed by the gradient.
fn loss_terms(
    h: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
    assignment: &BinAssignment,
    alpha: ArrayView2<'_, f64>,
) -> (Array1<f64>, Array2<f64>) {
    let scores = h.dot(&centers.t());
    let mut weights = Array2::<f64>::zeros(scores.dim());
    let mut losses = Array1::<f64>::zeros(h.nrows());
    for (j, (s, &bin)) in scores.rows().into_iter().zip(&assignment.bins).enumerate() {
        let a = alpha.row(bin - 1);
        let z: Array1<f64> = &a * &s;
        let zmax = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let exps = z.mapv(|v| (v - zmax).exp());
        let denom = exps.sum();
        losses[j] = zmax + denom.ln() - s[bin - 1];
        let mut wrow = weights.row_mut(j);
        Zip::from(&mut wrow)
            .and(&exps)
            .and(&a)
            .for_each(|w, &e, &ak| *w = e / denom * ak);
    }
    (losses, weights)
}

/// Contrastive loss summed over samples, with centers treated as given.
pub fn contrastive_loss(
    h: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
    assignment: &BinAssignment,
    alpha: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_loss_inputs(h, centers, assignment, alpha)?;
    let (losses, _) = loss_terms(h, centers, assignment, alpha);
    let total = losses.sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("contrastive loss".into()));
    }
    Ok(total)
}

/// Loss, gradient with respect to `w`, and the bin centers they were computed against.
#[derive(Debug, Clone)]
pub struct LossGradient {
    pub loss: f64,
    pub gradient: Array2<f64>,
    pub centers: Array2<f64>,
}

/// Loss and gradient with the bin centers recomputed from `tanh(XW)` and then held fixed.
pub fn loss_gradient(
    w: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    assignment: &BinAssignment,
    alpha: ArrayView2<'_, f64>,
) -> Result<LossGradient> {
    let h = forward(w, x)?;
    let centers = compute_bin_centers(h.view(), assignment, alpha.nrows())?;
    let (loss, gradient) = gradient_at(x, h.view(), centers.view(), assignment, alpha)?;
    Ok(LossGradient {
        loss,
        gradient,
        centers,
    })
}

/// Loss and `dL/dW` for precomputed hidden states `h = tanh(XW)` and fixed centers.
pub fn gradient_at(
    x: ArrayView2<'_, f64>,
    h: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
    assignment: &BinAssignment,
    alpha: ArrayView2<'_, f64>,
) -> Result<(f64, Array2<f64>)> {
    if x.nrows() != h.nrows() {
        return Err(shape_err(format!("{} inputs but {} hidden rows", x.nrows(), h.nrows())));
    }
    check_loss_inputs(h, centers, assignment, alpha)?;
    let (losses, weights) = loss_terms(h, centers, assignment, alpha);
    let loss = losses.sum();
    if !loss.is_finite() {
        return Err(Error::NonFinite("contrastive loss".into()));
    }
    // dL/dh_j = Σ_k p_k α_{b,k} c_k − c_b
    let mut grad_h = weights.dot(&centers);
    for (mut row, &bin) in grad_h.rows_mut().into_iter().zip(&assignment.bins) {
        row -= &centers.row(bin - 1);
    }
    Zip::from(&mut grad_h).and(h).for_each(|g, &hv| *g *= 1.0 - hv * hv);
    Ok((loss, x.t().dot(&grad_h)))
}

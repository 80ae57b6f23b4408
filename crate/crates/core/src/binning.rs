//! Equal-width binning of the selected feature and per-bin centers.
//!
//! Bins are 1-based everywhere in the public API.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningModel {
    pub feature_index: usize,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    /// Set when the fit column was constant; every value then falls in bin `k`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinAssignment {
    pub bins: Vec<usize>,
}

impl BinAssignment {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Number of samples in each bin, indexed from 0 for bin 1.
    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &b in &self.bins {
            counts[b - 1] += 1;
        }
        counts
    }

    /// Assignment restricted to the given rows, in that order.
    pub fn select(&self, rows: &[usize]) -> BinAssignment {
        BinAssignment {
            bins: rows.iter().map(|&r| self.bins[r]).collect(),
        }
    }

    pub(crate) fn check(&self, k: usize, rows: usize) -> Result<()> {
        if self.bins.len() != rows {
            return Err(shape_err(format!(
                "{} bin labels for {rows} rows",
                self.bins.len()
            )));
        }
        if let Some(b) = self.bins.iter().find(|&&b| b == 0 || b > k) {
            return Err(invalid(format!("bin {b} outside 1..={k}")));
        }
        Ok(())
    }
}

pub fn fit_binning(feature_index: usize, column: ArrayView1<'_, f64>, k: usize) -> Result<BinningModel> {
    if column.is_empty() {
        return Err(invalid("cannot bin an empty column"));
    }
    if k == 0 {
        return Err(invalid("bin count must be at least 1"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in column {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("binning column contains {v}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(BinningModel {
        feature_index,
        k,
        lo,
        hi,
        degenerate: hi == lo,
    })
}

impl BinningModel {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.k as f64
    }

    /// Lower edge of bin `i` (1-based); `edge(k + 1)` is the nominal upper end.
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + (i - 1) as f64 * self.width()
    }

    pub fn assign_bin(&self, value: f64) -> usize {
        assign_bin(self, value)
    }

    pub fn assign(&self, column: ArrayView1<'_, f64>) -> BinAssignment {
        BinAssignment {
            bins: column.iter().map(|&v| assign_bin(self, v)).collect(),
        }
    }

    /// Bins for the model's feature column of a full matrix.
    pub fn assign_rows(&self, x: ArrayView2<'_, f64>) -> Result<BinAssignment> {
        if self.feature_index >= x.ncols() {
            return Err(shape_err(format!(
                "binning feature {} but matrix has {} columns",
                self.feature_index,
                x.ncols()
            )));
        }
        Ok(self.assign(x.column(self.feature_index)))
    }
}

/// Bin of `value`: `[lo + (k-1)w, lo + kw)`, with values at or above `hi` in the last bin and
/// values below `lo` (or NaN) in the first.
pub fn assign_bin(model: &BinningModel, value: f64) -> usize {
    let k = model.k;
    if model.degenerate || value >= model.hi {
        return k;
    }
    if !(value >= model.lo) {
        return 1;
    }
    let width = model.width();
    let mut idx = (((value - model.lo) / width).floor() as usize).min(k - 1);
    // The division can land one bin off next to an edge; settle against the edges themselves.
    while idx > 0 && value < model.lo + idx as f64 * width {
        idx -= 1;
    }
    while idx + 1 < k && value >= model.lo + (idx + 1) as f64 * width {
        idx += 1;
    }
    idx + 1
}

/// Mean encoded vector of every bin. An empty bin borrows the center of the nearest non-empty
/// bin by index distance, or the average of the two when both sides are equally near.
pub fn compute_bin_centers(h: ArrayView2<'_, f64>, assignment: &BinAssignment, k: usize) -> Result<Array2<f64>> {
    if h.nrows() == 0 {
        return Err(invalid("cannot compute bin centers without samples"));
    }
    if k == 0 {
        return Err(invalid("bin count must be at least 1"));
    }
    assignment.check(k, h.nrows())?;
    let width = h.ncols();
    let mut sums = Array2::<f64>::zeros((k, width));
    let mut counts = vec![0usize; k];
    for (row, &bin) in h.rows().into_iter().zip(&assignment.bins) {
        let mut target = sums.row_mut(bin - 1);
        target += &row;
        counts[bin - 1] += 1;
    }
    for (i, &count) in counts.iter().enumerate() {
        if count > 0 {
            sums.row_mut(i).mapv_inplace(|v| v / count as f64);
        }
    }
    let mut centers = sums.clone();
    for i in 0..k {
        if counts[i] > 0 {
            continue;
        }
        for dist in 1..k {
            let below = i.checked_sub(dist).filter(|&j| counts[j] > 0);
            let above = Some(i + dist).filter(|&j| j < k && counts[j] > 0);
            let filled = match (below, above) {
                (Some(a), Some(b)) => (&sums.row(a) + &sums.row(b)) * 0.5,
                (Some(a), None) | (None, Some(a)) => sums.row(a).to_owned(),
                (None, None) => continue,
            };
            centers.row_mut(i).assign(&filled);
            break;
        }
    }
    Ok(centers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Axis};
    use proptest::prelude::*;

    fn model(lo: f64, hi: f64, k: usize) -> BinningModel {
        BinningModel {
            feature_index: 0,
            k,
            lo,
            hi,
            degenerate: lo == hi,
        }
    }

    #[test]
    fn edges_of_zero_to_ten() {
        let m = fit_binning(0, array![0.0, 3.0, 10.0, 7.5].view(), 5).unwrap();
        assert_eq!(m.width(), 2.0);
        let edges: Vec<f64> = (1..=6).map(|i| m.edge(i)).collect();
        assert_eq!(edges, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert!(!m.degenerate);
    }

    #[test]
    fn assignment_examples() {
        let m = model(0.0, 10.0, 5);
        assert_eq!(assign_bin(&m, 3.9), 2);
        assert_eq!(assign_bin(&m, 10.0), 5);
        assert_eq!(assign_bin(&m, 12.0), 5);
        assert_eq!(assign_bin(&m, -0.5), 1);
        assert_eq!(assign_bin(&m, 0.0), 1);
        assert_eq!(assign_bin(&m, 2.0), 2);
        assert_eq!(assign_bin(&m, f64::NAN), 1);
    }

    #[test]
    fn single_bin_and_constant_column() {
        let m = fit_binning(2, array![1.0, 4.0].view(), 1).unwrap();
        assert_eq!(m.assign(array![0.0, 1.0, 2.5, 9.0].view()).bins, vec![1, 1, 1, 1]);
        let c = fit_binning(0, array![5.0, 5.0, 5.0].view(), 4).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.assign(array![5.0, 1.0].view()).bins, vec![4, 4]);
        assert!(fit_binning(0, Array1::<f64>::zeros(0).view(), 3).is_err());
        assert!(fit_binning(0, array![1.0].view(), 0).is_err());
    }

    #[test]
    fn equidistant_empty_bin_averages_neighbours() {
        let h = array![[0.0, 0.0], [2.0, 2.0]];
        let a = BinAssignment { bins: vec![1, 3] };
        let c = compute_bin_centers(h.view(), &a, 3).unwrap();
        assert_eq!(c, array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
    }

    #[test]
    fn plain_means_when_all_bins_filled() {
        let h = array![[1.0], [3.0], [10.0]];
        let a = BinAssignment { bins: vec![1, 1, 2] };
        assert_eq!(compute_bin_centers(h.view(), &a, 2).unwrap(), array![[2.0], [10.0]]);
    }

    #[test]
    fn single_filled_bin_propagates() {
        let h = array![[1.0, 0.0], [3.0, 0.0]];
        let a = BinAssignment { bins: vec![1, 1] };
        let c = compute_bin_centers(h.view(), &a, 3).unwrap();
        assert_eq!(c, array![[2.0, 0.0], [2.0, 0.0], [2.0, 0.0]]);
    }

    #[test]
    fn nearest_wins_over_farther() {
        // Bin 2 is one step from bin 1 and two from bin 4.
        let h = array![[0.0], [8.0]];
        let a = BinAssignment { bins: vec![1, 4] };
        let c = compute_bin_centers(h.view(), &a, 4).unwrap();
        assert_eq!(c.column(0).to_vec(), vec![0.0, 0.0, 8.0, 8.0]);
    }

    #[test]
    fn center_errors() {
        let h = Array2::<f64>::zeros((0, 2));
        assert!(compute_bin_centers(h.view(), &BinAssignment { bins: vec![] }, 2).is_err());
        let h = array![[1.0]];
        assert!(compute_bin_centers(h.view(), &BinAssignment { bins: vec![3] }, 2).is_err());
        assert!(compute_bin_centers(h.view(), &BinAssignment { bins: vec![1, 1] }, 2).is_err());
    }

    proptest! {
        #[test]
        fn assignment_is_monotone(lo in -50.0f64..50.0, span in 1e-3f64..100.0, k in 1usize..60,
                                  a in -200.0f64..200.0, b in -200.0f64..200.0) {
            let m = model(lo, lo + span, k);
            let (v1, v2) = if a <= b { (a, b) } else { (b, a) };
            let (b1, b2) = (assign_bin(&m, v1), assign_bin(&m, v2));
            prop_assert!(b1 <= b2);
            prop_assert!((1..=k).contains(&b1));
        }

        #[test]
        fn filling_empty_bins_with_their_centers_is_idempotent(
            k in 2usize..8,
            raw in proptest::collection::vec((1usize..8, -5.0f64..5.0, -5.0f64..5.0), 1..20),
        ) {
            let rows: Vec<(usize, f64, f64)> = raw.into_iter().map(|(b, x, y)| ((b - 1) % k + 1, x, y)).collect();
            let h = Array2::from_shape_fn((rows.len(), 2), |(i, j)| if j == 0 { rows[i].1 } else { rows[i].2 });
            let a = BinAssignment { bins: rows.iter().map(|r| r.0).collect() };
            let centers = compute_bin_centers(h.view(), &a, k).unwrap();
            let counts = a.counts(k);
            let mut h2 = h.clone();
            let mut bins2 = a.bins.clone();
            for (i, &c) in counts.iter().enumerate() {
                if c == 0 {
                    h2.push(Axis(0), centers.row(i)).unwrap();
                    bins2.push(i + 1);
                }
            }
            let again = compute_bin_centers(h2.view(), &BinAssignment { bins: bins2 }, k).unwrap();
            for (x, y) in again.iter().zip(centers.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// How the binomial order `N` is picked for a pair of bins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaConvention {
    /// `N = 2·max(m, K−m)` of the anchor bin `m` (row index). Rows are not symmetric in general.
    #[default]
    AnchorRow,
    /// `N = max(N_m, N_n)`, which makes the matrix symmetric.
    Symmetric,
}

impl std::str::FromStr for AlphaConvention {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "anchor_row" | "anchor-row" | "anchor" => Ok(AlphaConvention::AnchorRow),
            "symmetric" => Ok(AlphaConvention::Symmetric),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown alpha convention `{other}` (expected anchor_row or symmetric)"
            ))),
        }
    }
}

fn order(m: usize, k: usize) -> u64 {
    2 * m.max(k - m) as u64
}

/// `C(N, N/2 + d) / C(N, N/2)` for even `N` and `0 ≤ d ≤ N/2`.
///
/// Equal to `Π_{i=1..d} (N/2 − i + 1) / (N/2 + i)`. Small cases use exact integer products
/// so that values such as 56/70 come out as the correctly rounded double.
fn binomial_ratio(n: u64, d: u64) -> f64 {
    let half = n / 2;
    debug_assert!(n % 2 == 0 && d <= half);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    let mut exact = true;
    for i in 1..=d {
        match (num.checked_mul((half - i + 1) as u128), den.checked_mul((half + i) as u128)) {
            (Some(a), Some(b)) => {
                num = a;
                den = b;
            }
            _ => {
                exact = false;
                break;
            }
        }
    }
    if exact {
        return num as f64 / den as f64;
    }
    let log: f64 = (1..=d)
        .map(|i| ((half - i + 1) as f64).ln() - ((half + i) as f64).ln())
        .sum();
    log.exp()
}

/// K×K distance coefficients with the anchor-row convention; `alpha[m][n]` is 0-based here.
pub fn distance_coefficients(k: usize) -> Array2<f64> {
    distance_coefficients_with(k, AlphaConvention::AnchorRow)
}

pub fn distance_coefficients_with(k: usize, convention: AlphaConvention) -> Array2<f64> {
    Array2::from_shape_fn((k, k), |(i, j)| {
        let (m, n) = (i + 1, j + 1);
        let big_n = match convention {
            AlphaConvention::AnchorRow => order(m, k),
            AlphaConvention::Symmetric => order(m, k).max(order(n, k)),
        };
        binomial_ratio(big_n, m.abs_diff(n) as u64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let a = distance_coefficients(5);
        assert_eq!(a[[0, 1]], 0.8);
        assert_eq!(a[[2, 4]], 0.3);
        assert_eq!(a[[0, 4]], 1.0 / 70.0);
        assert_eq!(distance_coefficients(1)[[0, 0]], 1.0);
    }

    #[test]
    fn anchor_rows_decay_from_a_unit_diagonal() {
        for k in 1..=50 {
            let a = distance_coefficients(k);
            for i in 0..k {
                assert_eq!(a[[i, i]], 1.0);
                for j in 0..k {
                    assert!(a[[i, j]] > 0.0 && a[[i, j]] <= 1.0);
                    for l in 0..k {
                        if i.abs_diff(l) > i.abs_diff(j) {
                            assert!(a[[i, l]] <= a[[i, j]], "k={k} row {i}: {l} vs {j}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn large_k_uses_log_space_without_losing_positivity() {
        let a = distance_coefficients(200);
        assert!(a.iter().all(|v| *v > 0.0 && v.is_finite()));
        let exact = binomial_ratio(60, 3);
        assert!((exact - (30.0 * 29.0 * 28.0) / (31.0 * 32.0 * 33.0)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_convention_is_symmetric() {
        let a = distance_coefficients_with(7, AlphaConvention::Symmetric);
        for i in 0..7 {
            assert_eq!(a[[i, i]], 1.0);
            for j in 0..7 {
                assert_eq!(a[[i, j]], a[[j, i]]);
            }
        }
        // The literal formula is asymmetric once N differs between the two bins.
        let anchor = distance_coefficients(5);
        assert_ne!(anchor[[0, 1]], anchor[[1, 0]]);
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{invalid, shape_err, Result};

pub const FOLDS: usize = 10;
pub const CANONICAL_ROWS: usize = 5875;
const CANONICAL_POOL: usize = 3000;

/// One rotation of the cross-validation layout. Indices refer to dataset rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_rows: Vec<usize>,
    pub valid_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl FoldSplit {
    /// Train and validation rows together, in pool order.
    pub fn pool_rows(&self) -> Vec<usize> {
        let mut rows = self.train_rows.clone();
        rows.extend_from_slice(&self.valid_rows);
        rows.sort_unstable();
        rows
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Keep every subject's recordings entirely in the pool or entirely in the test set.
    pub subject_disjoint: bool,
}

/// Size of the train+valid pool for `m` rows; 3000 of 5875 scaled proportionally.
pub fn pool_size(m: usize) -> usize {
    if m == CANONICAL_ROWS {
        return CANONICAL_POOL;
    }
    let scaled = (m as f64 * CANONICAL_POOL as f64 / CANONICAL_ROWS as f64).round() as usize;
    scaled.clamp(FOLDS, m - 1)
}

/// Seeded pool/test partition followed by a 10-way rotation of the validation block.
pub fn split_folds(dataset: &Dataset, seed: u64, options: &SplitOptions) -> Result<Vec<FoldSplit>> {
    if options.subject_disjoint {
        split_by_subject(&dataset.subject_ids, seed)
    } else {
        split_rows(dataset.rows(), seed)
    }
}

pub fn split_rows(m: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if m < 20 {
        return Err(invalid(format!("fold split needs at least 20 rows, got {m}")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let pool_len = pool_size(m);
    let (pool, test) = order.split_at(pool_len);
    Ok(rotate(pool, test))
}

pub fn split_by_subject(subject_ids: &[u32], seed: u64) -> Result<Vec<FoldSplit>> {
    let m = subject_ids.len();
    if m < 20 {
        return Err(invalid(format!("fold split needs at least 20 rows, got {m}")));
    }
    let mut subjects: Vec<u32> = subject_ids.to_vec();
    subjects.sort_unstable();
    subjects.dedup();
    if subjects.len() < 2 {
        return Err(invalid("subject-disjoint split needs at least 2 subjects"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    subjects.shuffle(&mut rng);

    let target = pool_size(m);
    let mut pool = Vec::with_capacity(target);
    let mut in_pool = std::collections::BTreeSet::new();
    for subject in &subjects[..subjects.len() - 1] {
        if pool.len() >= target {
            break;
        }
        in_pool.insert(*subject);
        pool.extend(
            subject_ids
                .iter()
                .enumerate()
                .filter(|(_, s)| **s == *subject)
                .map(|(i, _)| i),
        );
    }
    let test: Vec<usize> = (0..m).filter(|i| !in_pool.contains(&subject_ids[*i])).collect();
    if pool.len() < FOLDS || test.is_empty() {
        return Err(shape_err("subject-disjoint split produced an empty partition"));
    }
    pool.shuffle(&mut rng);
    Ok(rotate(&pool, &test))
}

/// Cuts the shuffled pool into 10 contiguous validation blocks whose sizes differ by at most one.
fn rotate(pool: &[usize], test: &[usize]) -> Vec<FoldSplit> {
    let n = pool.len();
    let bounds: Vec<usize> = (0..=FOLDS).map(|f| f * n / FOLDS).collect();
    (0..FOLDS)
        .map(|fold| {
            let (lo, hi) = (bounds[fold], bounds[fold + 1]);
            let mut train_rows = pool[..lo].to_vec();
            train_rows.extend_from_slice(&pool[hi..]);
            FoldSplit {
                fold_index: fold,
                train_rows,
                valid_rows: pool[lo..hi].to_vec(),
                test_rows: test.to_vec(),
            }
        })
        .collect()
}

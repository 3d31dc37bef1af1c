//! Minority-class oversampling.
//!
//! Recorded nights contain far more non-cough events than coughs, and
//! training directly on that skew biases every classifier toward the
//! majority. [`smote`] synthesizes additional minority examples by
//! interpolating between a real minority row and one of its nearest minority
//! neighbours: `s = x + u * (x_nn - x)` with `u` uniform in [0, 1). Only
//! training partitions are ever balanced; development and test data must
//! keep their natural distribution.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SmoteConfig {
    /// Neighbours considered per minority row.
    pub k_neighbors: usize,
    /// Desired minority row count after oversampling. `None` targets the
    /// majority class count, i.e. a fully balanced set.
    pub target: Option<usize>,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target: None,
            seed: 0,
        }
    }
}

/// Oversamples the minority class of `(x, y)` and returns the augmented
/// matrix and labels.
///
/// Original rows are passed through unchanged (and first, in their input
/// order); synthetic rows are appended. Every synthetic row lies on the
/// segment between a minority row and one of its `k_neighbors` nearest
/// minority neighbours, so it stays inside the minority class's componentwise
/// bounding box. Output is a deterministic function of the inputs and the
/// seed.
pub fn smote(x: &Array2<f64>, y: &[bool], cfg: &SmoteConfig) -> Result<(Array2<f64>, Vec<bool>)> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::input(format!(
            "feature rows ({n}) and labels ({}) disagree",
            y.len()
        )));
    }
    if cfg.k_neighbors == 0 {
        return Err(Error::config("k_neighbors must be positive"));
    }
    let positives = y.iter().filter(|&&v| v).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::input(
            "both classes must be present to balance the training set",
        ));
    }

    let minority_label = positives <= negatives;
    let minority: Vec<usize> = (0..n).filter(|&i| y[i] == minority_label).collect();
    let m = minority.len();
    let target = cfg.target.unwrap_or(n - m);
    let need = target.saturating_sub(m);

    if need == 0 {
        return Ok((x.clone(), y.to_vec()));
    }
    if m <= cfg.k_neighbors {
        return Err(Error::input(format!(
            "minority class has {m} rows, not enough for {} neighbours; \
             lower k_neighbors to at most {}",
            cfg.k_neighbors,
            m.saturating_sub(1)
        )));
    }

    let neighbors = nearest_neighbors(x, &minority, cfg.k_neighbors);
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut out = Vec::with_capacity((n + need) * d);
    out.extend(x.iter().copied());
    let mut labels = y.to_vec();
    for i in 0..need {
        let base_pos = i % m;
        let base = x.row(minority[base_pos]);
        let pick = neighbors[base_pos][rng.gen_range(0..cfg.k_neighbors)];
        let neighbor = x.row(pick);
        let u: f64 = rng.gen();
        out.extend(
            base.iter()
                .zip(neighbor.iter())
                .map(|(&b, &nb)| b + u * (nb - b)),
        );
        labels.push(minority_label);
    }

    let augmented = Array2::from_shape_vec((n + need, d), out)
        .expect("row construction matches declared shape");
    Ok((augmented, labels))
}

/// Brute-force k nearest neighbours (Euclidean) within the minority rows,
/// excluding each row itself. Distance ties break toward the lower row
/// index, keeping the result independent of any iteration quirks.
fn nearest_neighbors(x: &Array2<f64>, minority: &[usize], k: usize) -> Vec<Vec<usize>> {
    minority
        .iter()
        .map(|&i| {
            let mut dists: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let d2 = x
                        .row(i)
                        .iter()
                        .zip(x.row(j).iter())
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<f64>();
                    (d2, j)
                })
                .collect();
            // (distance, index) pairs are totally ordered, so a partial
            // selection stays deterministic.
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.partial_cmp(b).unwrap();
            if dists.len() > k {
                dists.select_nth_unstable_by(k - 1, cmp);
                dists.truncate(k);
            }
            dists.sort_by(cmp);
            dists.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

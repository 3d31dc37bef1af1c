//! Soft-margin SVM with a Gaussian kernel, trained by sequential minimal
//! optimization, plus a sigmoid calibration layer that turns decision values
//! into probabilities.
//!
//! The dual problem — maximize `sum(alpha) - 0.5 * sum_ij alpha_i alpha_j
//! y_i y_j K_ij` subject to `0 <= alpha <= C` and `sum(alpha_i y_i) = 0` —
//! is solved by repeatedly finding the maximal-violating pair (the most
//! infeasible pair of multipliers under the KKT conditions), solving the
//! two-variable subproblem in closed form, and updating a cached vector of
//! decision values. Pair updates conserve the equality constraint by
//! construction. Training stops when the violation drops below `KKT_TOL`.
//!
//! Calibration fits `p = 1 / (1 + exp(a * decision + b))` to the training
//! decisions by a damped Newton method on the cross-entropy with
//! prior-corrected targets, which is robust even when the classes are
//! perfectly separated.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

use super::{signed_labels, squared_distance, ModelParams};

/// Stop once the worst KKT violation falls below this. Kept tight so the
/// multipliers are pinned down well enough that decisions do not depend on
/// row order even on poorly conditioned kernels.
const KKT_TOL: f64 = 1e-12;
/// Hard cap on pair updates, scaled by problem size at runtime.
const MIN_ITER_CAP: usize = 200_000;
/// Problems up to this many rows precompute the full kernel matrix.
const GRAM_LIMIT: usize = 4_096;

/// A fitted SVM plus optimizer diagnostics for inspection in tests.
pub struct SvmFit {
    pub params: ModelParams,
    /// Final multiplier per training row (most are exactly zero).
    pub alphas: Vec<f64>,
    /// Dual objective value at the returned multipliers.
    pub objective: f64,
    /// Worst remaining KKT violation when the optimizer stopped.
    pub kkt_violation: f64,
    /// Pair updates performed.
    pub iterations: usize,
}

/// Kernel value between standardized rows.
fn kernel(a: &ArrayView1<f64>, b: &ArrayView1<f64>, gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

/// Decision value `sum_i coef_i * K(sv_i, x) + bias` for one standardized row.
pub(crate) fn decision_value(
    row: &ArrayView1<f64>,
    support_vectors: &[Vec<f64>],
    coefficients: &[f64],
    bias: f64,
    kernel_coef: f64,
) -> f64 {
    let mut d = bias;
    for (sv, &c) in support_vectors.iter().zip(coefficients) {
        let sq: f64 = sv
            .iter()
            .zip(row.iter())
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum();
        d += c * (-kernel_coef * sq).exp();
    }
    d
}

/// Kernel row source: either a precomputed matrix or on-demand evaluation
/// for problems too large to hold the full matrix.
enum KernelRows<'a> {
    Gram(Array2<f64>),
    OnDemand {
        xs: &'a Array2<f64>,
        gamma: f64,
    },
}

impl KernelRows<'_> {
    fn fill(&self, i: usize, out: &mut [f64]) {
        match self {
            KernelRows::Gram(g) => out.copy_from_slice(g.row(i).to_slice().unwrap()),
            KernelRows::OnDemand { xs, gamma } => {
                let ri = xs.row(i);
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = kernel(&ri, &xs.row(j), *gamma);
                }
            }
        }
    }
}

/// Full kernel matrix via one matrix product:
/// `|a - b|^2 = |a|^2 + |b|^2 - 2 a.b`.
fn gram_matrix(xs: &Array2<f64>, gamma: f64) -> Array2<f64> {
    let n = xs.nrows();
    let sq: Vec<f64> = xs.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut g = xs.dot(&xs.t());
    for i in 0..n {
        for j in 0..n {
            let d2 = (sq[i] + sq[j] - 2.0 * g[[i, j]]).max(0.0);
            g[[i, j]] = (-gamma * d2).exp();
        }
    }
    g
}

/// Fits on standardized features. `y` is the label per row.
pub fn fit(xs: &Array2<f64>, y: &[bool], c: f64, gamma: f64) -> Result<SvmFit> {
    if c <= 0.0 || gamma <= 0.0 {
        return Err(Error::config("svm strength and kernel_coef must be positive"));
    }
    let n = xs.nrows();
    let labels = signed_labels(y);

    let rows = if n <= GRAM_LIMIT {
        KernelRows::Gram(gram_matrix(xs, gamma))
    } else {
        KernelRows::OnDemand { xs, gamma }
    };

    let mut alpha = vec![0.0f64; n];
    // Cached decision values without bias: f_i = sum_j alpha_j y_j K_ij.
    let mut f = vec![0.0f64; n];
    let mut row_i = vec![0.0f64; n];
    let mut row_j = vec![0.0f64; n];

    let max_iter = MIN_ITER_CAP.max(100 * n);
    let mut iterations = 0;
    let mut violation = f64::INFINITY;

    for _ in 0..max_iter {
        let Some((i, j, f_up, f_low)) = select_pair(&alpha, &labels, &f, c) else {
            violation = 0.0;
            break;
        };
        violation = f_low - f_up;
        if violation < KKT_TOL {
            break;
        }

        rows.fill(i, &mut row_i);
        rows.fill(j, &mut row_j);

        let (yi, yj) = (labels[i], labels[j]);
        let eta = (row_i[i] + row_j[j] - 2.0 * row_i[j]).max(1e-12);

        // Closed-form update of the pair; F_i = f_i - y_i plays the role of
        // the prediction error (the bias cancels in the difference).
        let e_diff = (f[i] - yi) - (f[j] - yj);
        let mut aj_new = alpha[j] + yj * e_diff / eta;

        let (lo, hi) = if yi != yj {
            let gap = alpha[j] - alpha[i];
            (gap.max(0.0), (c + gap).min(c))
        } else {
            let sum = alpha[i] + alpha[j];
            ((sum - c).max(0.0), sum.min(c))
        };
        aj_new = aj_new.clamp(lo, hi);

        // Arithmetic can leave a multiplier a few ulps away from its bound;
        // such dust keeps the index in the working sets and stalls the
        // optimizer, so snap to the exact bound.
        let tiny = 1e-12 * c.max(1.0);
        let snap = |a: f64| {
            if a < tiny {
                0.0
            } else if a > c - tiny {
                c
            } else {
                a
            }
        };
        let aj_new = snap(aj_new);
        let delta_j = aj_new - alpha[j];
        if delta_j.abs() < 1e-14 {
            // Numerically stalled on the worst pair; further progress is
            // below representable resolution.
            break;
        }
        let ai_new = snap(alpha[i] - yi * yj * delta_j);
        let delta_i = ai_new - alpha[i];

        for t in 0..n {
            f[t] += delta_i * yi * row_i[t] + delta_j * yj * row_j[t];
        }
        alpha[i] = ai_new;
        alpha[j] = aj_new;
        iterations += 1;
    }

    // Bias from the final KKT bracket: midway between the tightest bounds.
    let bias = match bracket(&alpha, &labels, &f, c) {
        Some((f_up, f_low)) => -0.5 * (f_up + f_low),
        None => 0.0,
    };

    // Dual objective from the cached decision values:
    // W = sum(alpha) - 0.5 * sum_i alpha_i y_i f_i.
    let objective = alpha.iter().sum::<f64>()
        - 0.5
            * alpha
                .iter()
                .zip(labels.iter())
                .zip(f.iter())
                .map(|((&a, &l), &fi)| a * l * fi)
                .sum::<f64>();

    let decisions: Vec<f64> = f.iter().map(|&fi| fi + bias).collect();
    let (platt_a, platt_b) = platt_calibrate(&decisions, y);

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if alpha[i] > 0.0 {
            support_vectors.push(xs.row(i).to_vec());
            coefficients.push(alpha[i] * labels[i]);
        }
    }

    Ok(SvmFit {
        params: ModelParams::Kernel {
            support_vectors,
            coefficients,
            bias,
            kernel_coef: gamma,
            platt_a,
            platt_b,
        },
        alphas: alpha,
        objective,
        kkt_violation: violation.max(0.0),
        iterations,
    })
}

/// Finds the maximal-violating pair. Returns `(i_up, i_low, F_up, F_low)`
/// where `F_t = f_t - y_t`; `None` when either index set is empty.
fn select_pair(
    alpha: &[f64],
    labels: &Array1<f64>,
    f: &[f64],
    c: f64,
) -> Option<(usize, usize, f64, f64)> {
    match bracket_indices(alpha, labels, f, c) {
        (Some((i, f_up)), Some((j, f_low))) => Some((i, j, f_up, f_low)),
        _ => None,
    }
}

fn bracket(alpha: &[f64], labels: &Array1<f64>, f: &[f64], c: f64) -> Option<(f64, f64)> {
    match bracket_indices(alpha, labels, f, c) {
        (Some((_, f_up)), Some((_, f_low))) => Some((f_up, f_low)),
        _ => None,
    }
}

#[allow(clippy::type_complexity)]
fn bracket_indices(
    alpha: &[f64],
    labels: &Array1<f64>,
    f: &[f64],
    c: f64,
) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let ft = f[t] - labels[t];
        let positive = labels[t] > 0.0;
        // Multipliers that may still increase the decision for their class.
        let in_up = (positive && alpha[t] < c) || (!positive && alpha[t] > 0.0);
        let in_low = (!positive && alpha[t] < c) || (positive && alpha[t] > 0.0);
        if in_up && up.is_none_or(|(_, best)| ft < best) {
            up = Some((t, ft));
        }
        if in_low && low.is_none_or(|(_, best)| ft > best) {
            low = Some((t, ft));
        }
    }
    (up, low)
}

/// Fits the calibration sigmoid on training decisions with prior-corrected
/// targets, by Newton steps with backtracking. Returns `(a, b)` for
/// `p = 1 / (1 + exp(a * d + b))`.
fn platt_calibrate(decisions: &[f64], y: &[bool]) -> (f64, f64) {
    let n_pos = y.iter().filter(|&&v| v).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = y.iter().map(|&v| if v { hi } else { lo }).collect();

    let fval = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&d, &t)| {
                let z = a * d + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };

    let sigma = 1e-12;
    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut cur = fval(a, b);

    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&d, &t) in decisions.iter().zip(&targets) {
            let z = a * d + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let w = p * q;
            h11 += d * d * w;
            h22 += w;
            h21 += d * w;
            let r = t - p;
            g1 += d * r;
            g2 += r;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(h11 * g2 - h21 * g1) / det;
        let slope = g1 * da + g2 * db;

        let mut step = 1.0;
        let mut stepped = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = fval(na, nb);
            if nf < cur + 1e-4 * step * slope {
                a = na;
                b = nb;
                cur = nf;
                stepped = true;
                break;
            }
            step *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, ClassifierSpec, TrainedModel};
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec(c: f64, gamma: f64) -> ClassifierSpec {
        ClassifierSpec::Svm {
            strength: c,
            kernel_coef: gamma,
        }
    }

    /// Four tight clusters at the corners of a square, labeled by the sign
    /// of the coordinate product — not linearly separable.
    fn xor_clusters(per_cluster: usize, seed: u64) -> (Array2<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corners = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
        let n = 4 * per_cluster;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let (cx, cy) = corners[i / per_cluster];
            x[[i, 0]] = cx + rng.gen_range(-0.15..0.15);
            x[[i, 1]] = cy + rng.gen_range(-0.15..0.15);
            y.push(cx * cy > 0.0);
        }
        (x, y)
    }

    fn standardize(x: &Array2<f64>) -> Array2<f64> {
        let s = crate::classifiers::Standardizer::fit(&x.view());
        s.transform(&x.view())
    }

    #[test]
    fn xor_clusters_reach_perfect_accuracy() {
        let (x, y) = xor_clusters(10, 1);
        let model = train(&spec(10.0, 1.0), &x.view(), &y, 0).unwrap();
        let scores = model.score(&x.view()).unwrap();
        let correct = scores
            .iter()
            .zip(&y)
            .filter(|(&s, &lab)| (s >= 0.5) == lab)
            .count();
        assert_eq!(correct, y.len(), "scores: {scores:?}");
    }

    #[test]
    fn optimizer_satisfies_kkt_conditions() {
        let (x, y) = xor_clusters(8, 2);
        let xs = standardize(&x);
        let c = 5.0;
        let fit = fit(&xs, &y, c, 0.8).unwrap();

        assert!(fit.kkt_violation < 1e-6, "violation {}", fit.kkt_violation);
        let labels = signed_labels(&y);
        let balance: f64 = fit
            .alphas
            .iter()
            .zip(labels.iter())
            .map(|(&a, &l)| a * l)
            .sum();
        assert!(balance.abs() < 1e-9, "sum(alpha*y) = {balance}");
        for &a in &fit.alphas {
            assert!((-1e-12..=c + 1e-12).contains(&a), "alpha {a} out of box");
        }

        // Free support vectors sit on the margin: y * decision = 1.
        let (svs, coefs, bias, gamma) = match &fit.params {
            ModelParams::Kernel {
                support_vectors,
                coefficients,
                bias,
                kernel_coef,
                ..
            } => (support_vectors, coefficients, *bias, *kernel_coef),
            _ => panic!("svm should produce kernel params"),
        };
        for i in 0..xs.nrows() {
            let a = fit.alphas[i];
            if a > 1e-8 && a < c - 1e-8 {
                let d = decision_value(&xs.row(i), svs, coefs, bias, gamma);
                assert!(
                    (labels[i] * d - 1.0).abs() < 1e-5,
                    "free sv {i}: y*decision = {}",
                    labels[i] * d
                );
            }
        }
    }

    /// Exhaustive check on a four-point problem: express the last multiplier
    /// through the equality constraint and grid-search the remaining three,
    /// refining the grid around the best point. The optimizer's dual
    /// objective must match or beat the grid within a small slack.
    #[test]
    fn tiny_problem_matches_exhaustive_grid() {
        let x = ndarray::array![[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];
        let y = vec![true, true, false, false];
        let xs = standardize(&x);
        let c = 10.0;
        let gamma = 0.5;
        let fit = fit(&xs, &y, c, gamma).unwrap();

        let labels = signed_labels(&y);
        let mut k = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                k[i][j] = kernel(&xs.row(i), &xs.row(j), gamma);
            }
        }
        let objective = |a: &[f64; 4]| -> f64 {
            let mut quad = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    quad += a[i] * a[j] * labels[i] * labels[j] * k[i][j];
                }
            }
            a.iter().sum::<f64>() - 0.5 * quad
        };

        // alpha[3] = (a0 y0 + a1 y1 + a2 y2) * (-y3) keeps the constraint.
        let mut best = f64::NEG_INFINITY;
        let mut center = [c / 2.0; 3];
        let mut radius = c / 2.0;
        for _round in 0..4 {
            let steps = 20;
            let mut round_best = best;
            let mut round_center = center;
            for i0 in 0..=steps {
                for i1 in 0..=steps {
                    for i2 in 0..=steps {
                        let a0 = (center[0] - radius) + 2.0 * radius * i0 as f64 / steps as f64;
                        let a1 = (center[1] - radius) + 2.0 * radius * i1 as f64 / steps as f64;
                        let a2 = (center[2] - radius) + 2.0 * radius * i2 as f64 / steps as f64;
                        if !(0.0..=c).contains(&a0)
                            || !(0.0..=c).contains(&a1)
                            || !(0.0..=c).contains(&a2)
                        {
                            continue;
                        }
                        let a3 = -(a0 * labels[0] + a1 * labels[1] + a2 * labels[2]) * labels[3];
                        if !(0.0..=c).contains(&a3) {
                            continue;
                        }
                        let val = objective(&[a0, a1, a2, a3]);
                        if val > round_best {
                            round_best = val;
                            round_center = [a0, a1, a2];
                        }
                    }
                }
            }
            best = round_best;
            center = round_center;
            radius /= 8.0;
        }

        assert!(
            fit.objective >= best - 1e-4,
            "optimizer objective {} below grid optimum {best}",
            fit.objective
        );
    }

    #[test]
    fn row_order_does_not_change_decisions() {
        let (x, y) = xor_clusters(8, 3);
        let xs = standardize(&x);
        let fit_a = fit(&xs, &y, 5.0, 1.0).unwrap();

        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..xs.nrows()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            p.shuffle(&mut rng);
            p
        };
        let mut xp = Array2::zeros(xs.raw_dim());
        let mut yp = vec![false; y.len()];
        for (new_i, &old_i) in perm.iter().enumerate() {
            xp.row_mut(new_i).assign(&xs.row(old_i));
            yp[new_i] = y[old_i];
        }
        let fit_b = fit(&xp, &yp, 5.0, 1.0).unwrap();

        let unpack = |p: &ModelParams| match p {
            ModelParams::Kernel {
                support_vectors,
                coefficients,
                bias,
                kernel_coef,
                ..
            } => (
                support_vectors.clone(),
                coefficients.clone(),
                *bias,
                *kernel_coef,
            ),
            _ => panic!("svm should produce kernel params"),
        };
        let (sv_a, co_a, b_a, g) = unpack(&fit_a.params);
        let (sv_b, co_b, b_b, _) = unpack(&fit_b.params);

        // Probe decisions on a grid spanning the data.
        for px in [-1.5, -0.5, 0.0, 0.5, 1.5] {
            for py in [-1.5, -0.5, 0.0, 0.5, 1.5] {
                let probe = ndarray::array![px, py];
                let da = decision_value(&probe.view(), &sv_a, &co_a, b_a, g);
                let db = decision_value(&probe.view(), &sv_b, &co_b, b_b, g);
                assert!(
                    (da - db).abs() < 1e-6,
                    "decision at ({px}, {py}): {da} vs {db}"
                );
            }
        }
    }

    #[test]
    fn stored_support_vectors_reproduce_decisions() {
        let (x, y) = xor_clusters(6, 4);
        let model = train(&spec(5.0, 1.0), &x.view(), &y, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("svm.json");
        model.save(&path).unwrap();
        let loaded = TrainedModel::load(&path).unwrap();
        assert_eq!(model, loaded);
        assert_eq!(
            model.score(&x.view()).unwrap(),
            loaded.score(&x.view()).unwrap()
        );
    }

    #[test]
    fn calibrated_scores_increase_with_decision_value() {
        let (x, y) = xor_clusters(8, 5);
        let xs = standardize(&x);
        let fit = fit(&xs, &y, 5.0, 1.0).unwrap();
        let (svs, coefs, bias, gamma, a, b) = match &fit.params {
            ModelParams::Kernel {
                support_vectors,
                coefficients,
                bias,
                kernel_coef,
                platt_a,
                platt_b,
            } => (
                support_vectors,
                coefficients,
                *bias,
                *kernel_coef,
                *platt_a,
                *platt_b,
            ),
            _ => panic!(),
        };
        assert!(a < 0.0, "calibration slope {a} should be negative");
        let mut pairs: Vec<(f64, f64)> = xs
            .rows()
            .into_iter()
            .map(|r| {
                let d = decision_value(&r, svs, coefs, bias, gamma);
                let p = crate::classifiers::sigmoid(-(a * d + b));
                (d, p)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in pairs.windows(2) {
            assert!(w[1].1 >= w[0].1, "score not monotone in decision");
        }
        for (_, p) in &pairs {
            assert!((0.0..=1.0).contains(p));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = xor_clusters(6, 6);
        let m1 = train(&spec(5.0, 1.0), &x.view(), &y, 0).unwrap();
        let m2 = train(&spec(5.0, 1.0), &x.view(), &y, 0).unwrap();
        assert_eq!(m1.params, m2.params);
    }
}

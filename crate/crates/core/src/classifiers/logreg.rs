//! Elastic-net logistic regression trained by accelerated proximal
//! gradient descent.
//!
//! The objective is mean logistic loss plus `(l1 * |w|_1 + l2/2 * |w|_2^2)
//! / strength`, where `l1` and `l2` are the caller's penalty weights
//! normalized to sum to one. The bias is never penalized. The smooth part
//! (loss plus ridge) is descended with a fixed step `1/L` derived from the
//! data spectrum; the lasso part enters through soft thresholding, which
//! produces exact zeros. Nesterov momentum extrapolates between iterates
//! and is reset whenever it would increase the objective, so accepted
//! iterates never go uphill. Iterations stop when the objective changes by
//! less than `1e-8` or after `MAX_ITERS` rounds.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::{binary_labels, log1pexp, sigmoid, spectral_bound, ModelParams};

const MAX_ITERS: usize = 5_000;
const LOSS_TOL: f64 = 1e-8;

/// Normalized penalty mix: `(l1, l2)` scaled to sum to one, or both zero
/// when the caller set both weights to zero (no penalty at all).
fn penalty_mix(l1_weight: f64, l2_weight: f64) -> (f64, f64) {
    let total = l1_weight + l2_weight;
    if total == 0.0 {
        (0.0, 0.0)
    } else {
        (l1_weight / total, l2_weight / total)
    }
}

/// Smooth part of the objective (mean logistic loss plus the ridge term) and
/// its gradient with respect to `(w, bias)`. Exposed so tests can check the
/// gradient against finite differences.
pub fn smooth_loss_and_grad(
    x: &Array2<f64>,
    y01: &Array1<f64>,
    w: &Array1<f64>,
    bias: f64,
    ridge: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(w) + bias;
    let mut loss = 0.0;
    let mut resid = Array1::<f64>::zeros(x.nrows());
    for i in 0..x.nrows() {
        // log(1 + e^z) - y z, computed stably.
        loss += log1pexp(z[i]) - y01[i] * z[i];
        resid[i] = sigmoid(z[i]) - y01[i];
    }
    loss /= n;
    loss += 0.5 * ridge * w.dot(w);
    let mut grad_w = x.t().dot(&resid) / n;
    grad_w.scaled_add(ridge, w);
    let grad_b = resid.sum() / n;
    (loss, grad_w, grad_b)
}

/// Full objective including the lasso term, for convergence checks.
fn objective(
    x: &Array2<f64>,
    y01: &Array1<f64>,
    w: &Array1<f64>,
    bias: f64,
    ridge: f64,
    lasso: f64,
) -> f64 {
    let (smooth, _, _) = smooth_loss_and_grad(x, y01, w, bias, ridge);
    smooth + lasso * w.iter().map(|v| v.abs()).sum::<f64>()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fits on standardized features. `y` is the label per row.
pub fn fit(
    x: &Array2<f64>,
    y: &[bool],
    strength: f64,
    l1_weight: f64,
    l2_weight: f64,
) -> Result<ModelParams> {
    if strength <= 0.0 {
        return Err(Error::config("lr strength must be positive"));
    }
    let (mix1, mix2) = penalty_mix(l1_weight, l2_weight);
    let lasso = mix1 / strength;
    let ridge = mix2 / strength;

    let y01 = binary_labels(y);
    let n = x.nrows() as f64;
    let d = x.ncols();

    // Lipschitz constant of the smooth gradient: the logistic Hessian is
    // bounded by X^T X / (4n), plus the ridge curvature.
    let lipschitz = spectral_bound(x) / (4.0 * n) + ridge;
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    let mut w = Array1::<f64>::zeros(d);
    let mut bias = 0.0;
    // Extrapolated point the gradient is taken at, and the momentum scale.
    let mut zw = w.clone();
    let mut zb = bias;
    let mut t = 1.0f64;
    let mut prev = objective(x, &y01, &w, bias, ridge, lasso);

    for _ in 0..MAX_ITERS {
        let (_, grad_w, grad_b) = smooth_loss_and_grad(x, &y01, &zw, zb, ridge);
        let mut w_next = Array1::<f64>::zeros(d);
        for j in 0..d {
            w_next[j] = soft_threshold(zw[j] - step * grad_w[j], step * lasso);
        }
        let b_next = zb - step * grad_b;
        let cur = objective(x, &y01, &w_next, b_next, ridge, lasso);

        if cur > prev {
            // Momentum overshot. Restart it from the last accepted iterate;
            // a plain proximal step from there cannot go uphill.
            t = 1.0;
            zw.assign(&w);
            zb = bias;
            continue;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        zw = &w_next + &((&w_next - &w) * momentum);
        zb = b_next + momentum * (b_next - bias);
        w = w_next;
        bias = b_next;
        t = t_next;

        if prev - cur < LOSS_TOL {
            break;
        }
        prev = cur;
    }

    Ok(ModelParams::Linear {
        weights: w.to_vec(),
        bias,
    })
}

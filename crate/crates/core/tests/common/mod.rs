//! Independent reference implementations used by the acceptance suite.
//!
//! Everything here is deliberately written the slow, obvious way — direct
//! DFT sums, literal textbook formulas, exhaustive grid search — so that a
//! disagreement with the library points at the library, not at a shared
//! shortcut.

use ndarray::Array2;

use coughsense::features::audio::AudioFeatureConfig;
use coughsense::signal::AUDIO_SAMPLE_RATE;

/// `|DFT(frame)[k]|^2` for `k = 0 ..= n/2`, via the O(n^2) definition.
pub fn naive_power_spectrum(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (j, &x) in frame.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                re += x * angle.cos();
                im += x * angle.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn mel_of(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn hz_of(mel: f64) -> f64 {
    700.0 * (10.0f64.powf(mel / 2595.0) - 1.0)
}

/// Cepstral coefficients for one frame, recomputed step by step from the
/// config's documented conventions: pre-emphasis, Hamming window, naive DFT
/// power spectrum, triangular mel filters evaluated per bin, floored log,
/// and a direct orthonormal DCT-II sum.
pub fn reference_mfcc(frame: &[f64], cfg: &AudioFeatureConfig) -> Vec<f64> {
    let n = cfg.frame_len;
    assert_eq!(frame.len(), n);

    let mut emphasized = vec![frame[0]];
    for i in 1..n {
        emphasized.push(frame[i] - cfg.preemphasis * frame[i - 1]);
    }
    for (i, v) in emphasized.iter_mut().enumerate() {
        *v *= 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
    }

    let spectrum = naive_power_spectrum(&emphasized);

    // Filter edges equally spaced on the mel scale; filter j spans
    // edges[j] .. edges[j + 2] with its peak at edges[j + 1].
    let m = cfg.mel_filters;
    let lo = mel_of(cfg.fmin);
    let hi = mel_of(cfg.fmax);
    let edges: Vec<f64> = (0..m + 2)
        .map(|i| hz_of(lo + (hi - lo) * i as f64 / (m + 1) as f64))
        .collect();

    let mut log_energies = Vec::with_capacity(m);
    for j in 0..m {
        let (left, center, right) = (edges[j], edges[j + 1], edges[j + 2]);
        let mut energy = 0.0;
        for (k, &p) in spectrum.iter().enumerate() {
            let f = k as f64 * AUDIO_SAMPLE_RATE as f64 / n as f64;
            let w = if f > left && f <= center {
                (f - left) / (center - left)
            } else if f > center && f < right {
                (right - f) / (right - center)
            } else {
                0.0
            };
            energy += w * p;
        }
        log_energies.push(energy.max(cfg.log_floor).ln());
    }

    (0..cfg.mfcc_count)
        .map(|k| {
            let sum: f64 = log_energies
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    v * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2 * m) as f64)
                        .cos()
                })
                .sum();
            let scale = if k == 0 {
                (1.0 / m as f64).sqrt()
            } else {
                (2.0 / m as f64).sqrt()
            };
            scale * sum
        })
        .collect()
}

/// Two-frame regression deltas with replicated edges, written as the
/// literal formula `(1*(c[t+1]-c[t-1]) + 2*(c[t+2]-c[t-2])) / 10`.
pub fn reference_deltas(seq: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = seq.dim();
    let at = |t: isize, c: usize| seq[(t.clamp(0, rows as isize - 1) as usize, c)];
    let mut out = Array2::zeros((rows, cols));
    for t in 0..rows as isize {
        for c in 0..cols {
            out[(t as usize, c)] =
                (1.0 * (at(t + 1, c) - at(t - 1, c)) + 2.0 * (at(t + 2, c) - at(t - 2, c))) / 10.0;
        }
    }
    out
}

/// AUC as the Mann-Whitney pairwise statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// Accumulated in integer half-units so the result is an exact rational.
pub fn mann_whitney_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    let mut half_wins: u64 = 0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                half_wins += 2;
            } else if scores[i] == scores[j] {
                half_wins += 1;
            }
        }
    }
    half_wins as f64 / (2 * pos * neg) as f64
}

/// Dual objective `sum(alpha) - 0.5 * alpha' Q alpha` with
/// `Q[i][j] = y_i y_j K(x_i, x_j)`.
fn dual_objective(alpha: &[f64], q: &Array2<f64>) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the SVM dual found by exhaustive grid search with repeated
/// refinement around the best point.
///
/// The last multiplier is eliminated through the equality constraint
/// `sum(alpha_i y_i) = 0`; the remaining `n - 1` coordinates are searched on
/// a box grid that starts at `[0, C]` and shrinks around the incumbent each
/// round. The dual is concave, so the refinement converges to the global
/// maximum.
pub fn refined_dual_maximum(
    x: &Array2<f64>,
    y_signed: &[f64],
    c: f64,
    gamma: f64,
    points_per_coord: usize,
) -> f64 {
    let n = x.nrows();
    assert!(n >= 2);
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            q[(i, j)] = y_signed[i] * y_signed[j] * (-gamma * d2).exp();
        }
    }

    let free = n - 1;
    let g = points_per_coord;
    let mut lo = vec![0.0; free];
    let mut hi = vec![c; free];
    let mut best_obj = f64::NEG_INFINITY;
    let mut best_alpha = vec![0.0; free];

    for _round in 0..14 {
        let step: Vec<f64> = (0..free).map(|i| (hi[i] - lo[i]) / (g - 1) as f64).collect();
        let mut digits = vec![0usize; free];
        let mut alpha = vec![0.0; n];
        loop {
            for i in 0..free {
                alpha[i] = lo[i] + step[i] * digits[i] as f64;
            }
            // Solve the eliminated coordinate from the equality constraint.
            let partial: f64 = (0..free).map(|i| alpha[i] * y_signed[i]).sum();
            let last = -partial * y_signed[free];
            if (-1e-12..=c + 1e-12).contains(&last) {
                alpha[free] = last.clamp(0.0, c);
                let obj = dual_objective(&alpha, &q);
                if obj > best_obj {
                    best_obj = obj;
                    best_alpha = alpha[..free].to_vec();
                }
            }
            // Odometer increment over the free coordinates.
            let mut pos = 0;
            loop {
                if pos == free {
                    break;
                }
                digits[pos] += 1;
                if digits[pos] < g {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == free {
                break;
            }
        }
        // Shrink the box to a neighborhood of the incumbent.
        for i in 0..free {
            let radius = 1.5 * step[i];
            lo[i] = (best_alpha[i] - radius).max(0.0);
            hi[i] = (best_alpha[i] + radius).min(c);
        }
    }
    best_obj
}

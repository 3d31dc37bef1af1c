//! Acceptance gate for the whole pipeline: nine independent checks, one
//! test per criterion, each printing a `PASS` line once its assertions
//! hold. Oracles live in `common/` and are written the slow, literal way
//! so they share no shortcuts with the library code under test.
//!
//! The end-to-end learning check (criterion 8) synthesizes a desk-scale
//! corpus and runs the full patient-held-out evaluation on a truncated
//! grid, so this suite takes markedly longer than the unit tests.

mod common;

use std::collections::HashSet;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use coughsense::balance::{smote, SmoteConfig};
use coughsense::classifiers::{logreg, mlp, svm, ClassifierSpec};
use coughsense::error::Error;
use coughsense::evaluation::metrics::roc_curve;
use coughsense::evaluation::{
    make_folds, run_row, Candidate, EvalOptions, FeatureConfig, RowSpec,
};
use coughsense::features::accel::{extract_accel_features, AccelFeatureConfig};
use coughsense::features::audio::{deltas, AudioFeatureConfig, AudioFeatureExtractor};
use coughsense::features::{frame_positions, power_spectrum};
use coughsense::segmentation::{detect_events, SegmenterConfig};
use coughsense::signal::{AccelSignal, AudioSignal, Event, Label};
use coughsense::synth::{generate_events, generate_recording, interval_iou, SynthConfig};

/// Euclidean distance between two gradient vectors relative to the
/// reference vector's norm.
fn relative_gap(analytic: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(analytic.len(), reference.len());
    let diff: f64 = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

#[test]
fn criterion_1_feature_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    // Power spectrum against the O(n^2) DFT definition, on 1000 random
    // frames per supported accelerometer frame length.
    for &len in &[16usize, 32, 64] {
        for _ in 0..1000 {
            let frame: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let fast = power_spectrum(&frame).unwrap();
            let slow = common::naive_power_spectrum(&frame);
            assert_eq!(fast.len(), slow.len());
            let scale = slow.iter().cloned().fold(1.0f64, f64::max);
            for (k, (a, b)) in fast.iter().zip(&slow).enumerate() {
                assert!(
                    (a - b).abs() <= 1e-9 * scale,
                    "bin {k} of a {len}-sample frame: fft {a} vs dft {b}"
                );
            }
        }
    }

    // Cepstra against the step-by-step textbook reference.
    for &(m, f) in &[(13usize, 256usize), (13, 512), (26, 512), (20, 1024)] {
        let cfg = AudioFeatureConfig::new(m, f, 50);
        let extractor = AudioFeatureExtractor::new(cfg).unwrap();
        for _ in 0..40 {
            let frame: Vec<f64> = (0..f).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = extractor.mfcc_frame(&frame).unwrap();
            let want = common::reference_mfcc(&frame, &cfg);
            assert_eq!(got.len(), m);
            for (k, (a, b)) in got.iter().zip(&want).enumerate() {
                assert!(
                    (a - b).abs() < 1e-6,
                    "coefficient {k} at mfcc={m} frame={f}: {a} vs reference {b}"
                );
            }
        }
    }

    // Deltas against the literal regression formula, bit for bit.
    for _ in 0..50 {
        let rows = rng.gen_range(3..60);
        let cols = rng.gen_range(1..20);
        let seq = Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal));
        let got = deltas(&seq);
        let want = common::reference_deltas(&seq);
        for (a, b) in got.iter().zip(want.iter()) {
            assert_eq!(a.to_bits(), b.to_bits(), "delta mismatch: {a} vs {b}");
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "oracle comparisons took {elapsed:.1} s, budget is 30 s");
    println!("acceptance criterion 1 (feature oracles): PASS");
}

#[test]
fn criterion_2_shape_contracts() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    // A 1.2 s noise event: 120 accelerometer samples, 26 460 audio samples.
    let accel: Vec<f64> = (0..120).map(|_| rng.gen_range(0.5..1.5)).collect();
    let audio: Vec<f64> = (0..26_460).map(|_| rng.gen_range(-0.9..0.9)).collect();
    let event = Event::new(
        "shapes/ev000",
        "shapes",
        Label::Cough,
        0.0,
        1.2,
        AccelSignal::new(accel).unwrap(),
        AudioSignal::new(audio).unwrap(),
    )
    .unwrap();

    for &frame_len in &[16usize, 32, 64] {
        for &segments in &[5usize, 10] {
            let cfg = AccelFeatureConfig { frame_len, segments };
            let m = extract_accel_features(&event, &cfg).unwrap();
            assert_eq!(
                (m.rows(), m.cols()),
                (segments, frame_len / 2 + 5),
                "accel shape at frame={frame_len} segments={segments}"
            );
        }
    }

    for &mfcc in &[13usize, 26, 39, 52, 65] {
        for &frame_len in &[256usize, 512, 1024, 2048, 4096] {
            for &segments in &[50usize, 70, 100, 120, 150] {
                let cfg = AudioFeatureConfig::new(mfcc, frame_len, segments);
                let built = AudioFeatureExtractor::new(cfg);
                if mfcc > 40 && frame_len == 256 {
                    // More filters than a 129-bin spectrum can feed: the
                    // combination must be rejected, not silently padded.
                    assert!(
                        matches!(built, Err(Error::Config(_))),
                        "mfcc={mfcc} frame={frame_len} should be a config error"
                    );
                    continue;
                }
                let m = built.unwrap().extract(&event).unwrap();
                assert_eq!(
                    (m.rows(), m.cols()),
                    (segments, 3 * mfcc + 2),
                    "audio shape at mfcc={mfcc} frame={frame_len} segments={segments}"
                );
            }
        }
    }

    // Concrete hop check: cutting 100 segments out of 1.2 s of audio
    // places frame starts 265 samples apart.
    let starts = frame_positions(26_460, 1024, 100).unwrap();
    assert_eq!(starts.len(), 100);
    assert_eq!(starts[1] - starts[0], 265);
    assert!(
        starts.windows(2).take(90).all(|w| w[1] - w[0] == 265),
        "hop drifts before end-of-event clamping can kick in"
    );
    println!("acceptance criterion 2 (shape contracts): PASS");
}

#[test]
fn criterion_3_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);

    // Logistic regression: smooth loss (data term plus ridge).
    for instance in 0..20 {
        let n = rng.gen_range(5..20);
        let d = rng.gen_range(2..7);
        let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
        let y01 = Array1::from_shape_fn(n, |_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
        let w = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
        let bias: f64 = rng.sample(StandardNormal);
        let ridge = if instance % 2 == 0 { 0.0 } else { 0.3 };

        let (_, grad_w, grad_b) = logreg::smooth_loss_and_grad(&x, &y01, &w, bias, ridge);
        let mut analytic = grad_w.to_vec();
        analytic.push(grad_b);

        let h = 1e-6;
        let mut numeric = Vec::with_capacity(d + 1);
        for j in 0..d {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let fp = logreg::smooth_loss_and_grad(&x, &y01, &wp, bias, ridge).0;
            let fm = logreg::smooth_loss_and_grad(&x, &y01, &wm, bias, ridge).0;
            numeric.push((fp - fm) / (2.0 * h));
        }
        let fp = logreg::smooth_loss_and_grad(&x, &y01, &w, bias + h, ridge).0;
        let fm = logreg::smooth_loss_and_grad(&x, &y01, &w, bias - h, ridge).0;
        numeric.push((fp - fm) / (2.0 * h));

        let gap = relative_gap(&analytic, &numeric);
        assert!(gap < 1e-4, "lr instance {instance}: gradient gap {gap:.2e}");
    }

    // MLP: full backprop against central differences over every parameter.
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 20 {
        attempts += 1;
        assert!(attempts < 400, "could not draw 20 kink-free mlp instances");
        let n = rng.gen_range(4..12);
        let d = rng.gen_range(2..5);
        let hidden = rng.gen_range(2..5);
        let xs = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
        let y01 = Array1::from_shape_fn(n, |_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
        let w1 = Array2::from_shape_fn((hidden, d), |_| rng.sample::<f64, _>(StandardNormal));
        let b1 = Array1::from_shape_fn(hidden, |_| rng.sample::<f64, _>(StandardNormal));
        let w2 = Array1::from_shape_fn(hidden, |_| rng.sample::<f64, _>(StandardNormal));
        let b2: f64 = rng.sample(StandardNormal);
        let l2 = if checked % 2 == 0 { 0.0 } else { 0.2 };

        // Finite differences need a margin from the rectifier kink: skip
        // draws where any pre-activation sits within 1e-3 of zero (the
        // perturbations below move them by at most ~1e-4).
        let mut z1 = xs.dot(&w1.t());
        for mut row in z1.rows_mut() {
            row += &b1;
        }
        if z1.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        checked += 1;

        let (_, gw1, gb1, gw2, gb2) = mlp::loss_and_grad(&xs, &y01, &w1, &b1, &w2, b2, l2);
        let mut analytic: Vec<f64> = gw1.iter().cloned().collect();
        analytic.extend(gb1.iter());
        analytic.extend(gw2.iter());
        analytic.push(gb2);

        let loss_at = |w1: &Array2<f64>, b1: &Array1<f64>, w2: &Array1<f64>, b2: f64| {
            mlp::loss_and_grad(&xs, &y01, w1, b1, w2, b2, l2).0
        };
        let h = 1e-5;
        let mut numeric = Vec::with_capacity(analytic.len());
        for k in 0..hidden {
            for j in 0..d {
                let mut p = w1.clone();
                p[[k, j]] += h;
                let mut m = w1.clone();
                m[[k, j]] -= h;
                numeric.push((loss_at(&p, &b1, &w2, b2) - loss_at(&m, &b1, &w2, b2)) / (2.0 * h));
            }
        }
        for k in 0..hidden {
            let mut p = b1.clone();
            p[k] += h;
            let mut m = b1.clone();
            m[k] -= h;
            numeric.push((loss_at(&w1, &p, &w2, b2) - loss_at(&w1, &m, &w2, b2)) / (2.0 * h));
        }
        for k in 0..hidden {
            let mut p = w2.clone();
            p[k] += h;
            let mut m = w2.clone();
            m[k] -= h;
            numeric.push((loss_at(&w1, &b1, &p, b2) - loss_at(&w1, &b1, &m, b2)) / (2.0 * h));
        }
        numeric.push((loss_at(&w1, &b1, &w2, b2 + h) - loss_at(&w1, &b1, &w2, b2 - h)) / (2.0 * h));

        let gap = relative_gap(&analytic, &numeric);
        assert!(gap < 1e-4, "mlp instance {checked}: gradient gap {gap:.2e}");
    }
    println!("acceptance criterion 3 (gradient checks): PASS");
}

#[test]
fn criterion_4_svm_dual_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut checked = 0;
    for &n in &[4usize, 6, 8] {
        for &(c, gamma) in &[(0.5, 0.7), (2.0, 0.7), (1.0, 0.25), (1.0, 2.0)] {
            let x = Array2::from_shape_fn((n, 2), |_| rng.sample::<f64, _>(StandardNormal));
            let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
            let fit = svm::fit(&x, &y, c, gamma).unwrap();

            // KKT feasibility of the returned multipliers.
            let y_signed: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let balance: f64 = fit.alphas.iter().zip(&y_signed).map(|(&a, &s)| a * s).sum();
            assert!(
                balance.abs() <= 1e-6,
                "n={n} c={c} gamma={gamma}: sum(alpha*y) = {balance:e}"
            );
            for &a in &fit.alphas {
                assert!(
                    (-1e-6..=c + 1e-6).contains(&a),
                    "n={n} c={c}: multiplier {a} outside [0, C]"
                );
            }

            // Optimality against the refined exhaustive grid.
            let per_coord = match n {
                4 => 21,
                6 => 11,
                _ => 7,
            };
            let oracle = common::refined_dual_maximum(&x, &y_signed, c, gamma, per_coord);
            assert!(
                (fit.objective - oracle).abs() <= 1e-4,
                "n={n} c={c} gamma={gamma}: smo {:.8} vs grid {oracle:.8}",
                fit.objective
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 12);
    println!("acceptance criterion 4 (svm dual optimality): PASS");
}

#[test]
fn criterion_5_auc_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for set in 0..100 {
        let n = rng.gen_range(2..=200);
        let labels: Vec<bool> = loop {
            let candidate: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if candidate.iter().any(|&l| l) && candidate.iter().any(|&l| !l) {
                break candidate;
            }
        };
        // Half the sets draw from five discrete levels so ties are common.
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if set % 2 == 0 {
                    [0.0, 0.25, 0.5, 0.75, 1.0][rng.gen_range(0..5)]
                } else {
                    rng.sample(StandardNormal)
                }
            })
            .collect();

        let auc = roc_curve(&scores, &labels).unwrap().auc;
        let pairwise = common::mann_whitney_auc(&scores, &labels);
        assert_eq!(
            auc.to_bits(),
            pairwise.to_bits(),
            "set {set}: trapezoid {auc} vs pairwise {pairwise}"
        );

        // A strictly increasing transform must not move the curve at all.
        let squashed: Vec<f64> = scores.iter().map(|&s| 1.0 / (1.0 + (-3.0 * s).exp())).collect();
        let transformed = roc_curve(&squashed, &labels).unwrap().auc;
        assert_eq!(auc.to_bits(), transformed.to_bits(), "set {set}: transform moved the AUC");
    }
    println!("acceptance criterion 5 (auc correctness): PASS");
}

#[test]
fn criterion_6_cv_hygiene() {
    let cfg = SynthConfig {
        patients: 14,
        coughs_per_patient: 3,
        non_coughs_per_patient: 4,
        seed: 11,
    };
    let events = generate_events(&cfg).unwrap();
    let folds = make_folds(&events).unwrap();
    assert_eq!(folds.len(), 14, "fold count equals patient count");
    let mut tested: Vec<&str> = folds.iter().map(|f| f.test_patient.as_str()).collect();
    tested.sort_unstable();
    tested.dedup();
    assert_eq!(tested.len(), 14, "each patient is held out exactly once");

    let row = RowSpec {
        id: "accel-lr".into(),
        candidates: vec![Candidate {
            features: FeatureConfig::Accel(AccelFeatureConfig {
                frame_len: 16,
                segments: 5,
            }),
            classifier: ClassifierSpec::LogisticRegression {
                strength: 100.0,
                l1_weight: 0.5,
                l2_weight: 0.5,
            },
        }],
    };
    let result = run_row(&events, &folds, &row, &EvalOptions::default()).unwrap();
    assert_eq!(result.folds.len(), 14);

    for fold in &result.folds {
        let held_out: HashSet<&str> = events
            .iter()
            .filter(|e| e.patient_id == fold.test_patient)
            .map(|e| e.id.as_str())
            .collect();
        let trace = &fold.trace;
        let test: HashSet<&str> = trace.test_events.iter().map(String::as_str).collect();
        assert_eq!(test, held_out, "fold {} tests exactly its held-out patient", fold.fold);

        let train: HashSet<&str> = trace.train_events.iter().map(String::as_str).collect();
        for id in trace
            .train_events
            .iter()
            .chain(&trace.dev_events)
            .chain(&trace.oversample_inputs)
            .chain(&trace.standardization_inputs)
        {
            assert!(
                !held_out.contains(id.as_str()),
                "fold {}: held-out event {id} leaked",
                fold.fold
            );
        }
        for id in trace.oversample_inputs.iter().chain(&trace.standardization_inputs) {
            assert!(
                train.contains(id.as_str()),
                "fold {}: {id} fed statistics without being a training event",
                fold.fold
            );
        }
        for id in &trace.dev_events {
            assert!(
                !train.contains(id.as_str()),
                "fold {}: development event {id} also trains",
                fold.fold
            );
        }
    }
    println!("acceptance criterion 6 (cv hygiene): PASS");
}

#[test]
fn criterion_7_smote_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let minority = 20;
    let majority = 50;
    let d = 6;
    let n = minority + majority;
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let y: Vec<bool> = (0..n).map(|i| i < minority).collect();
    let cfg = SmoteConfig {
        k_neighbors: 5,
        target: None,
        seed: 19,
    };

    let (bx, by) = smote(&x, &y, &cfg).unwrap();
    let pos = by.iter().filter(|&&l| l).count();
    let neg = by.len() - pos;
    assert_eq!(pos, neg, "classes are balanced after oversampling");
    assert_eq!(bx.nrows(), n + (majority - minority), "originals kept, synthetics appended");
    for i in 0..n {
        assert_eq!(by[i], y[i]);
        for j in 0..d {
            assert_eq!(bx[(i, j)].to_bits(), x[(i, j)].to_bits(), "original row {i} altered");
        }
    }

    // Every synthetic row lies on a segment between two minority rows:
    // some pair (a, b) and a single t in [0, 1] reproduce it coordinatewise.
    let minority_rows: Vec<Vec<f64>> = (0..minority).map(|i| x.row(i).to_vec()).collect();
    for s in n..bx.nrows() {
        assert!(by[s], "synthetic row {s} carries the minority label");
        let point: Vec<f64> = bx.row(s).to_vec();
        let mut explained = false;
        'pairs: for a in &minority_rows {
            for b in &minority_rows {
                // Find t from the first coordinate where a and b differ.
                let Some(j0) = (0..d).find(|&j| (b[j] - a[j]).abs() > 1e-12) else {
                    continue;
                };
                let t = (point[j0] - a[j0]) / (b[j0] - a[j0]);
                if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                    continue;
                }
                let matches = (0..d).all(|j| {
                    let expect = a[j] + t * (b[j] - a[j]);
                    (point[j] - expect).abs() <= 1e-9 * (1.0 + expect.abs())
                });
                if matches {
                    explained = true;
                    break 'pairs;
                }
            }
        }
        assert!(explained, "synthetic row {s} is not between any minority pair");
    }

    // Bit-exact seed determinism; a different seed moves the synthetics.
    let (bx2, by2) = smote(&x, &y, &cfg).unwrap();
    assert_eq!(by, by2);
    assert!(bx.iter().zip(bx2.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let other = SmoteConfig { seed: 20, ..cfg };
    let (bx3, _) = smote(&x, &y, &other).unwrap();
    assert!(
        bx.iter().zip(bx3.iter()).any(|(a, b)| a.to_bits() != b.to_bits()),
        "changing the seed should move the synthetic rows"
    );
    println!("acceptance criterion 7 (smote properties): PASS");
}

#[test]
fn criterion_8_end_to_end_learning() {
    let started = Instant::now();

    // Desk-scale corpus: 14 patients with a 1:4 cough imbalance, seed 7.
    let cfg = SynthConfig {
        patients: 14,
        coughs_per_patient: 4,
        non_coughs_per_patient: 16,
        seed: 7,
    };
    let events = generate_events(&cfg).unwrap();
    assert_eq!(events.len(), 14 * 20);
    let folds = make_folds(&events).unwrap();

    let accel_features: Vec<FeatureConfig> = [16usize, 32]
        .iter()
        .flat_map(|&frame_len| {
            [5usize, 10].iter().map(move |&segments| {
                FeatureConfig::Accel(AccelFeatureConfig { frame_len, segments })
            })
        })
        .collect();
    let audio_features: Vec<FeatureConfig> = [13usize, 26]
        .iter()
        .flat_map(|&mfcc| {
            [512usize, 1024]
                .iter()
                .map(move |&frame_len| FeatureConfig::Audio(AudioFeatureConfig::new(mfcc, frame_len, 50)))
        })
        .collect();
    let lr_specs = vec![ClassifierSpec::LogisticRegression {
        strength: 100.0,
        l1_weight: 0.5,
        l2_weight: 0.5,
    }];
    let mlp_specs = vec![ClassifierSpec::Mlp { l2: 0.5, hidden: 10 }];

    let mut rows = Vec::new();
    for (modality, features) in [("accel", &accel_features), ("audio", &audio_features)] {
        for (family, specs) in [("lr", &lr_specs), ("mlp", &mlp_specs)] {
            let candidates: Vec<Candidate> = features
                .iter()
                .flat_map(|f| {
                    specs.iter().map(|s| Candidate {
                        features: f.clone(),
                        classifier: s.clone(),
                    })
                })
                .collect();
            rows.push(RowSpec {
                id: format!("{modality}-{family}"),
                candidates,
            });
        }
    }

    let opts = EvalOptions::default();
    let mut best_by_modality: Vec<(String, f64)> = Vec::new();
    for row in &rows {
        let row_started = Instant::now();
        let result = run_row(&events, &folds, row, &opts).unwrap();
        println!(
            "  {}: mean test AUC {:.4} +/- {:.4} ({:.0}s)",
            result.id,
            result.mean_auc,
            result.std_auc,
            row_started.elapsed().as_secs_f64()
        );
        let modality = row.id.split('-').next().unwrap().to_string();
        match best_by_modality.iter_mut().find(|(m, _)| *m == modality) {
            Some(entry) => entry.1 = entry.1.max(result.mean_auc),
            None => best_by_modality.push((modality, result.mean_auc)),
        }
    }

    let accel_auc = best_by_modality.iter().find(|(m, _)| m == "accel").unwrap().1;
    let audio_auc = best_by_modality.iter().find(|(m, _)| m == "audio").unwrap().1;
    assert!(accel_auc >= 0.95, "accelerometer AUC {accel_auc:.4} below 0.95");
    assert!(audio_auc >= 0.95, "audio AUC {audio_auc:.4} below 0.95");
    assert!(
        audio_auc >= accel_auc - 0.02,
        "audio ({audio_auc:.4}) should roughly match or beat accel ({accel_auc:.4})"
    );

    // Ten minutes of four-core budget, rescaled to the cores actually
    // present so the bound means the same amount of work everywhere.
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(4);
    let budget_s = 600.0 * 4.0 / cores as f64;
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < budget_s,
        "end-to-end run took {elapsed:.0} s, budget on {cores} core(s) is {budget_s:.0} s"
    );
    println!(
        "acceptance criterion 8 (end-to-end learning): PASS \
         (accel {accel_auc:.4}, audio {audio_auc:.4}, {elapsed:.0}s on {cores} cores)"
    );
}

#[test]
fn criterion_9_segmentation_recovery() {
    let recording = generate_recording(40, 3);
    let cfg = SegmenterConfig::default();
    let found = detect_events(&recording.accel, &recording.audio, &cfg).unwrap();
    let recovered = recording
        .coughs
        .iter()
        .filter(|&&truth| found.iter().any(|&d| interval_iou(truth, d) >= 0.5))
        .count();
    assert!(
        recovered * 100 >= recording.coughs.len() * 95,
        "only {recovered} of {} planted events recovered at IoU >= 0.5",
        recording.coughs.len()
    );

    // Pure silence must produce no events at all.
    let accel = AccelSignal::new(vec![0.0; 6_000]).unwrap();
    let audio = AudioSignal::new(vec![0.0; 60 * 22_050]).unwrap();
    let silent = detect_events(&accel, &audio, &cfg).unwrap();
    assert!(silent.is_empty(), "{} events detected in silence", silent.len());
    println!("acceptance criterion 9 (segmentation recovery): PASS");
}

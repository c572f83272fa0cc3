use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::Vec3;

/// Axis-aligned box standing on y = 0.
fn block(width: f64, height: f64, depth: f64) -> TriMesh {
    let (w, d) = (width / 2.0, depth / 2.0);
    let vertices: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { -w } else { w },
                if i & 2 == 0 { 0.0 } else { height },
                if i & 4 == 0 { -d } else { d },
            )
        })
        .collect();
    let quads = [[0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1], [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3]];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh::new(vertices, faces).unwrap()
}

/// Closed vertical cylinder with `segments` sides, the first at angle 0.
fn column(radius: f64, height: f64, segments: usize) -> TriMesh {
    let mut vertices = Vec::new();
    for y in [0.0, height] {
        for k in 0..segments {
            let t = 2.0 * PI * k as f64 / segments as f64;
            vertices.push(Vec3::new(radius * t.cos(), y, radius * t.sin()));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, 0.0));
    vertices.push(Vec3::new(0.0, height, 0.0));
    let (bot, top) = (2 * segments, 2 * segments + 1);
    let mut faces = Vec::new();
    for k in 0..segments {
        let k1 = (k + 1) % segments;
        faces.push([k, k1, segments + k1]);
        faces.push([k, segments + k1, segments + k]);
        faces.push([bot, k1, k]);
        faces.push([top, segments + k, segments + k1]);
    }
    TriMesh::new(vertices, faces).unwrap()
}

fn bounding_box(img: &SilhouetteImage) -> Option<(usize, usize, usize, usize)> {
    let mut bb: Option<(usize, usize, usize, usize)> = None;
    for r in 0..IMAGE_HEIGHT {
        for c in 0..IMAGE_WIDTH {
            if img.get(r, c) != 0 {
                bb = Some(bb.map_or((r, r, c, c), |(r0, r1, c0, c1)| (r0.min(r), r1.max(r), c0.min(c), c1.max(c))));
            }
        }
    }
    bb
}

#[test]
fn box_fills_the_expected_rectangle() {
    let mesh = block(400.0, 1600.0, 250.0);
    let img = render_silhouette(&mesh, View::Frontal, 1600.0).unwrap();
    assert!(img.pixels.iter().all(|&p| p <= 1));
    let (r0, r1, c0, c1) = bounding_box(&img).unwrap();
    assert_eq!(r1 - r0 + 1, 456);
    let width = (c1 - c0 + 1) as i64;
    assert!((width - 114).abs() <= 1, "width {width}");
    assert_eq!(img.foreground(), 456 * width as usize);

    let side = render_silhouette(&mesh, View::Lateral, 1600.0).unwrap();
    let (_, _, c0, c1) = bounding_box(&side).unwrap();
    let depth = (c1 - c0 + 1) as f64;
    assert!((depth - 456.0 * 250.0 / 1600.0).abs() <= 1.0);
}

#[test]
fn symmetric_body_looks_the_same_from_both_sides() {
    let mesh = column(120.0, 1500.0, 64);
    let front = render_silhouette(&mesh, View::Frontal, 1500.0).unwrap();
    let side = render_silhouette(&mesh, View::Lateral, 1500.0).unwrap();
    assert_eq!(front.pixels, side.pixels);
}

#[test]
fn rendering_rejects_bad_input() {
    let empty = TriMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
    };
    assert!(matches!(render_silhouette(&empty, View::Frontal, 1000.0), Err(Error::EmptyMesh)));
    assert!(render_silhouette(&block(1.0, 1.0, 1.0), View::Frontal, 0.0).is_err());
}

#[test]
fn rendering_is_deterministic() {
    let mesh = column(90.0, 1700.0, 40);
    let a = render_silhouette(&mesh, View::Lateral, 1700.0).unwrap();
    let b = render_silhouette(&mesh, View::Lateral, 1700.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pgm_has_binary_values() {
    let img = render_silhouette(&block(400.0, 1600.0, 250.0), View::Frontal, 1600.0).unwrap();
    let pgm = img.to_pgm();
    let header = b"P5\n200 480\n255\n";
    assert!(pgm.starts_with(header));
    let body = &pgm[header.len()..];
    assert_eq!(body.len(), IMAGE_HEIGHT * IMAGE_WIDTH);
    assert!(body.iter().all(|&p| p == 0 || p == 255));
}

#[test]
fn background_features_are_zero() {
    let f = extract_features(&SilhouetteImage::empty(View::Frontal, 3.0));
    assert_eq!(f.len(), VIEW_FEATURES);
    assert!(f.iter().all(|&v| v == 0.0));
}

#[test]
fn full_single_row_has_image_width() {
    let mut img = SilhouetteImage::empty(View::Frontal, 2.5);
    for c in 0..IMAGE_WIDTH {
        img.set(100, c, true);
    }
    let f = extract_features(&img);
    for r in 0..IMAGE_HEIGHT {
        let expected = if r == 100 { 500.0 } else { 0.0 };
        assert_eq!(f[r], expected);
        assert_eq!(f[IMAGE_HEIGHT + r], 0.0);
    }
    assert_eq!(f[2 * IMAGE_HEIGHT], 200.0 * 2.5 * 2.5);
    assert_eq!(f[2 * IMAGE_HEIGHT + 1], 2.5);
}

#[test]
fn box_features_are_constant_across_its_rows() {
    let img = render_silhouette(&block(400.0, 1600.0, 250.0), View::Frontal, 1600.0).unwrap();
    let f = extract_features(&img);
    let rows: Vec<f64> = f[..IMAGE_HEIGHT].iter().copied().filter(|&w| w > 0.0).collect();
    assert_eq!(rows.len(), 456);
    assert!(rows.iter().all(|&w| w == rows[0]));
    assert!((rows[0] - 400.0).abs() <= img.mm_per_pixel);
    assert!((f[2 * IMAGE_HEIGHT + 1] - 1600.0).abs() < 1e-9);
}

#[test]
fn widths_scale_with_the_body() {
    let small = column(100.0, 1400.0, 48);
    let big = small.map_vertices(|v| v * 1.3);
    let a = extract_features(&render_silhouette(&small, View::Frontal, 1400.0).unwrap());
    let b = extract_features(&render_silhouette(&big, View::Frontal, 1400.0 * 1.3).unwrap());
    let mpp = 1400.0 * 1.3 / SUBJECT_ROWS;
    for r in 0..IMAGE_HEIGHT {
        assert!((b[r] - 1.3 * a[r]).abs() <= mpp + 1e-9, "row {r}: {} vs {}", b[r], a[r]);
    }
}

fn random_features(rng: &mut impl Rng) -> SilhouetteFeatures {
    SilhouetteFeatures {
        frontal: (0..VIEW_FEATURES).map(|_| rng.random_range(0.0..100.0)).collect(),
        lateral: (0..VIEW_FEATURES).map(|_| rng.random_range(0.0..100.0)).collect(),
    }
}

/// Targets that are an exact affine function of the features.
fn linear_pairs(n: usize, seed: u64) -> Vec<(SilhouetteFeatures, MeasurementVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<Vec<f64>> = (0..SLOT_COUNT)
        .map(|_| (0..FEATURE_DIM).map(|_| rng.random_range(-0.01..0.01)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let f = random_features(&mut rng);
            let x = f.concat();
            let m = MeasurementVector(std::array::from_fn(|s| {
                500.0 + coef[s].iter().zip(&x).map(|(c, v)| c * v).sum::<f64>()
            }));
            (f, m)
        })
        .collect()
}

#[test]
fn noiseless_linear_targets_are_recovered() {
    let pairs = linear_pairs(30, 1);
    let model = train_regressor(&pairs, 1e-8).unwrap();
    let table = evaluate(&model, &pairs).unwrap();
    assert!(table.per_slot.iter().all(|&e| e < 1e-6), "{:?}", table.per_slot);
    for (f, m) in &pairs[..3] {
        let p = model.predict(f).unwrap();
        for s in 0..SLOT_COUNT {
            assert!((p.0[s] - m.0[s]).abs() < 1e-6);
        }
    }
}

#[test]
fn constant_targets_give_bias_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let target = MeasurementVector(std::array::from_fn(|s| 100.0 + s as f64));
    let pairs: Vec<_> = (0..10).map(|_| (random_features(&mut rng), target)).collect();
    let model = train_regressor(&pairs, 1.0).unwrap();
    assert!(model.weights[..FEATURE_DIM * SLOT_COUNT].iter().all(|w| w.abs() < 1e-9));
    assert_eq!(model.bias(), target.0);
}

#[test]
fn training_needs_two_pairs_and_positive_ridge() {
    let pairs = linear_pairs(3, 3);
    assert!(train_regressor(&pairs[..1], 1.0).is_err());
    assert!(train_regressor(&pairs, 0.0).is_err());
    let mut short = pairs.clone();
    short[0].0.frontal.pop();
    assert!(matches!(train_regressor(&short, 1.0), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn constant_features_are_masked() {
    let mut pairs = linear_pairs(6, 4);
    for p in &mut pairs {
        p.0.frontal[7] = 3.0;
    }
    let model = train_regressor(&pairs, 1.0).unwrap();
    assert!(!model.frontal.active[7]);
    assert!(model.frontal.std.iter().all(|&s| s > 0.0));
    assert!((0..SLOT_COUNT).all(|s| model.weight(7, s) == 0.0));
}

#[test]
fn mean_features_predict_the_bias() {
    let pairs = linear_pairs(12, 5);
    let model = train_regressor(&pairs, 0.1).unwrap();
    let mean = SilhouetteFeatures {
        frontal: model.frontal.mean.clone(),
        lateral: model.lateral.mean.clone(),
    };
    let raw = model.predict_raw(&mean).unwrap();
    for (p, b) in raw.iter().zip(model.bias()) {
        assert!((p - b).abs() < 1e-9);
    }
}

#[test]
fn views_are_not_interchangeable() {
    let pairs = linear_pairs(12, 6);
    let model = train_regressor(&pairs, 0.1).unwrap();
    let f = &pairs[0].0;
    let swapped = SilhouetteFeatures {
        frontal: f.lateral.clone(),
        lateral: f.frontal.clone(),
    };
    assert_ne!(model.predict_raw(f).unwrap(), model.predict_raw(&swapped).unwrap());
}

#[test]
fn predictions_are_floored() {
    let target = MeasurementVector([0.2; SLOT_COUNT]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs: Vec<_> = (0..3).map(|_| (random_features(&mut rng), target)).collect();
    let model = train_regressor(&pairs, 1.0).unwrap();
    let p = model.predict(&pairs[0].0).unwrap();
    assert!(p.0.iter().all(|&v| v == MIN_PREDICTION_MM));
}

#[test]
fn model_json_round_trip() {
    let model = train_regressor(&linear_pairs(5, 8), 1.0).unwrap();
    let back = RegressorModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
    assert!(RegressorModel::from_json(r#"{"ridge": 1}"#).is_err());
}

#[test]
fn mae_arithmetic() {
    let targets: Vec<MeasurementVector> = (0..4).map(|i| MeasurementVector([100.0 + i as f64; SLOT_COUNT])).collect();
    let exact = MaeTable::from_predictions(&targets, &targets).unwrap();
    assert!(exact.per_slot.iter().all(|&e| e == 0.0));
    assert_eq!(exact.mean, 0.0);
    let waist = crate::tailor::slot_index("waist_circ").unwrap();
    let shifted: Vec<MeasurementVector> = targets
        .iter()
        .map(|m| {
            let mut p = *m;
            p.0[waist] += 5.0;
            p
        })
        .collect();
    let table = MaeTable::from_predictions(&shifted, &targets).unwrap();
    assert_eq!(table.get("waist_circ"), Some(5.0));
    assert_eq!(table.per_slot.iter().filter(|&&e| e != 0.0).count(), 1);
    assert!(MaeTable::from_predictions(&[], &[]).is_err());

    let csv = table.to_csv();
    assert!(csv.contains("e,waist circumference,5.000"));
    assert!(csv.contains("-,head_len,0.000"));
    assert_eq!(csv.lines().count(), 1 + 16 + SLOT_COUNT + 1);
}

#[test]
fn baseline_predicts_the_training_mean() {
    let train = vec![MeasurementVector([10.0; SLOT_COUNT]), MeasurementVector([20.0; SLOT_COUNT])];
    let test = vec![MeasurementVector([18.0; SLOT_COUNT])];
    let table = MaeTable::baseline(&train, &test).unwrap();
    assert!(table.per_slot.iter().all(|&e| e == 3.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn features_are_physical(w in 50.0f64..600.0, h in 800.0f64..2000.0, d in 50.0f64..400.0, lateral in any::<bool>()) {
        let view = if lateral { View::Lateral } else { View::Frontal };
        let img = render_silhouette(&block(w, h, d), view, h).unwrap();
        let f = extract_features(&img);
        prop_assert_eq!(f.len(), VIEW_FEATURES);
        prop_assert!(f[..IMAGE_HEIGHT].iter().all(|&v| v >= 0.0));
        prop_assert!(img.foreground() > 0);
        let (r0, r1, _, _) = bounding_box(&img).unwrap();
        prop_assert!((r1 - r0 + 1) as f64 >= 0.9 * IMAGE_HEIGHT as f64);
        let expected = if lateral { d } else { w }.min(IMAGE_WIDTH as f64 * img.mm_per_pixel);
        let max_width = f[..IMAGE_HEIGHT].iter().copied().fold(0.0, f64::max);
        prop_assert!((max_width - expected).abs() <= img.mm_per_pixel + 1e-9);
    }

    #[test]
    fn training_set_is_fit_exactly(seed in any::<u64>()) {
        let pairs = linear_pairs(8, seed);
        let model = train_regressor(&pairs, 1e-8).unwrap();
        let table = evaluate(&model, &pairs).unwrap();
        prop_assert!(table.per_slot.iter().all(|&e| e < 1e-6));
    }
}

//! Two-view binary silhouettes and a ridge regressor from silhouette
//! features to the 34 measurements.
//!
//! Bodies are projected orthographically (frontal drops z, lateral drops x),
//! scaled so the subject height covers 456 of the 480 image rows and
//! centred. Each view yields per-row widths and centroid offsets plus the
//! foreground area and height, all in millimetres.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::mesh::TriMesh;
use crate::tailor::{MeasurementVector, CATEGORIES, SLOTS, SLOT_COUNT};
use crate::{Error, Result};

pub const IMAGE_HEIGHT: usize = 480;
pub const IMAGE_WIDTH: usize = 200;
/// Rows covered by the subject height.
pub const SUBJECT_ROWS: f64 = 456.0;
/// Features of one view: row widths, row offsets, area and height.
pub const VIEW_FEATURES: usize = 2 * IMAGE_HEIGHT + 2;
pub const FEATURE_DIM: usize = 2 * VIEW_FEATURES;
/// Smallest prediction; lower outputs are raised to it.
pub const MIN_PREDICTION_MM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Frontal,
    Lateral,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Frontal => "frontal",
            View::Lateral => "lateral",
        }
    }
}

/// Binary raster, row 0 at the top, values 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteImage {
    pub view: View,
    pub pixels: Vec<u8>,
    pub mm_per_pixel: f64,
}

impl SilhouetteImage {
    pub fn empty(view: View, mm_per_pixel: f64) -> Self {
        SilhouetteImage {
            view,
            pixels: vec![0; IMAGE_HEIGHT * IMAGE_WIDTH],
            mm_per_pixel,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * IMAGE_WIDTH + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.pixels[row * IMAGE_WIDTH + col] = u8::from(value);
    }

    pub fn foreground(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Binary PGM (P5) with values 0 and 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{IMAGE_WIDTH} {IMAGE_HEIGHT}\n255\n").into_bytes();
        out.extend(self.pixels.iter().map(|&p| if p != 0 { 255 } else { 0 }));
        out
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Renders the silhouette of `mesh` seen from `view`. `subject_height` sets
/// the scale: that many millimetres span [`SUBJECT_ROWS`] rows.
pub fn render_silhouette(mesh: &TriMesh, view: View, subject_height: f64) -> Result<SilhouetteImage> {
    if !(subject_height.is_finite() && subject_height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "subject height {subject_height} must be positive"
        )));
    }
    let (lo, hi) = mesh.bounds().ok_or(Error::EmptyMesh)?;
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let px_per_mm = SUBJECT_ROWS / subject_height;
    let mid = (lo + hi) / 2.0;
    let horizontal = |v: &crate::Vec3| match view {
        View::Frontal => v.x - mid.x,
        View::Lateral => v.z - mid.z,
    };
    let project = |v: &crate::Vec3| {
        (
            IMAGE_WIDTH as f64 / 2.0 + horizontal(v) * px_per_mm,
            IMAGE_HEIGHT as f64 / 2.0 - (v.y - mid.y) * px_per_mm,
        )
    };
    let pts: Vec<(f64, f64)> = mesh.vertices.iter().map(project).collect();
    let mut img = SilhouetteImage::empty(view, 1.0 / px_per_mm);
    for f in &mesh.faces {
        fill_triangle(&mut img, [pts[f[0]], pts[f[1]], pts[f[2]]]);
    }
    Ok(img)
}

/// Sets every pixel whose centre lies inside or on the triangle.
fn fill_triangle(img: &mut SilhouetteImage, tri: [(f64, f64); 3]) {
    let edge = |a: (f64, f64), b: (f64, f64), p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let area = edge(tri[0], tri[1], tri[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let sign = area.signum();
    let min_x = tri.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = tri.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = tri.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = tri.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    // Pixel (r, c) has its centre at (c + 0.5, r + 0.5).
    let c0 = (min_x - 0.5).ceil().max(0.0) as usize;
    let r0 = (min_y - 0.5).ceil().max(0.0) as usize;
    let c1 = (max_x - 0.5).floor().min(IMAGE_WIDTH as f64 - 1.0);
    let r1 = (max_y - 0.5).floor().min(IMAGE_HEIGHT as f64 - 1.0);
    if c1 < 0.0 || r1 < 0.0 {
        return;
    }
    for r in r0..=r1 as usize {
        for c in c0..=c1 as usize {
            let p = (c as f64 + 0.5, r as f64 + 0.5);
            let inside = (0..3).all(|i| sign * edge(tri[i], tri[(i + 1) % 3], p) >= 0.0);
            if inside {
                img.set(r, c, true);
            }
        }
    }
}

/// Feature block of one view (length [`VIEW_FEATURES`]): row widths, row
/// centroid offsets from the image centre, foreground area and height.
pub fn extract_features(img: &SilhouetteImage) -> Vec<f64> {
    let mpp = img.mm_per_pixel;
    let mut widths = vec![0.0; IMAGE_HEIGHT];
    let mut offsets = vec![0.0; IMAGE_HEIGHT];
    let mut count = 0usize;
    let mut rows: Option<(usize, usize)> = None;
    for r in 0..IMAGE_HEIGHT {
        let row = &img.pixels[r * IMAGE_WIDTH..(r + 1) * IMAGE_WIDTH];
        let cols: Vec<usize> = (0..IMAGE_WIDTH).filter(|&c| row[c] != 0).collect();
        let (Some(&first), Some(&last)) = (cols.first(), cols.last()) else {
            continue;
        };
        widths[r] = (last - first + 1) as f64 * mpp;
        let mean = cols.iter().map(|&c| c as f64 + 0.5).sum::<f64>() / cols.len() as f64;
        offsets[r] = (mean - IMAGE_WIDTH as f64 / 2.0) * mpp;
        count += cols.len();
        rows = Some(rows.map_or((r, r), |(a, _)| (a, r)));
    }
    let height = rows.map_or(0.0, |(a, b)| (b - a + 1) as f64 * mpp);
    let mut out = widths;
    out.extend(offsets);
    out.push(count as f64 * mpp * mpp);
    out.push(height);
    out
}

/// Frontal and lateral feature blocks of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteFeatures {
    pub frontal: Vec<f64>,
    pub lateral: Vec<f64>,
}

impl SilhouetteFeatures {
    pub fn from_images(frontal: &SilhouetteImage, lateral: &SilhouetteImage) -> Result<Self> {
        if frontal.view != View::Frontal || lateral.view != View::Lateral {
            return Err(Error::InvalidArgument("expected a frontal and a lateral view".into()));
        }
        Ok(SilhouetteFeatures {
            frontal: extract_features(frontal),
            lateral: extract_features(lateral),
        })
    }

    /// Renders both views of a body at its own height.
    pub fn from_mesh(mesh: &TriMesh) -> Result<Self> {
        let (lo, hi) = mesh.bounds().ok_or(Error::EmptyMesh)?;
        let height = hi.y - lo.y;
        SilhouetteFeatures::from_images(
            &render_silhouette(mesh, View::Frontal, height)?,
            &render_silhouette(mesh, View::Lateral, height)?,
        )
    }

    pub fn concat(&self) -> Vec<f64> {
        self.frontal.iter().chain(&self.lateral).copied().collect()
    }

    fn check(&self) -> Result<()> {
        for block in [&self.frontal, &self.lateral] {
            if block.len() != VIEW_FEATURES {
                return Err(Error::DimensionMismatch {
                    expected: VIEW_FEATURES,
                    got: block.len(),
                });
            }
        }
        Ok(())
    }
}

/// Feature CSV: one row per subject, frontal block then lateral block.
pub fn features_csv(features: &[SilhouetteFeatures]) -> String {
    let mut out = String::new();
    for view in ["frontal", "lateral"] {
        for kind in ["width", "offset"] {
            for r in 0..IMAGE_HEIGHT {
                let _ = write!(out, "{view}_{kind}_{r},");
            }
        }
        let _ = write!(out, "{view}_area,{view}_height,");
    }
    out.pop();
    out.push('\n');
    for f in features {
        let cells: Vec<String> = f.concat().iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Standardization of one view's features. Constant features are masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub active: Vec<bool>,
}

impl Standardizer {
    fn fit(rows: &[&[f64]]) -> Self {
        let n = rows.len() as f64;
        let dim = rows[0].len();
        let mut mean = vec![0.0; dim];
        let mut std = vec![0.0; dim];
        let mut active = vec![false; dim];
        for j in 0..dim {
            let mu = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n;
            mean[j] = mu;
            let sd = var.sqrt();
            active[j] = sd > 1e-9 * (1.0 + mu.abs());
            std[j] = if active[j] { sd } else { 1.0 };
        }
        Standardizer { mean, std, active }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        for j in 0..x.len() {
            if self.active[j] {
                out.push((x[j] - self.mean[j]) / self.std[j]);
            }
        }
    }

    fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Two-view linear regressor. Each view has its own standardization and
/// its own weight block; the blocks are summed with the bias at the merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub frontal: Standardizer,
    pub lateral: Standardizer,
    pub ridge: f64,
    /// Row-major `(FEATURE_DIM + 1) × 34`: frontal rows, lateral rows, bias.
    /// Masked features have zero rows.
    pub weights: Vec<f64>,
}

impl RegressorModel {
    pub fn weight(&self, feature: usize, slot: usize) -> f64 {
        self.weights[feature * SLOT_COUNT + slot]
    }

    pub fn bias(&self) -> [f64; SLOT_COUNT] {
        std::array::from_fn(|s| self.weight(FEATURE_DIM, s))
    }

    fn standardized(&self, f: &SilhouetteFeatures) -> Vec<f64> {
        let mut z = Vec::with_capacity(FEATURE_DIM);
        self.frontal.apply(&f.frontal, &mut z);
        self.lateral.apply(&f.lateral, &mut z);
        z
    }

    fn active_rows(&self) -> Vec<usize> {
        let front = self.frontal.active.iter().enumerate().filter(|e| *e.1).map(|e| e.0);
        let side = self.lateral.active.iter().enumerate().filter(|e| *e.1).map(|e| e.0 + VIEW_FEATURES);
        front.chain(side).collect()
    }

    /// Raw outputs before the positivity floor.
    pub fn predict_raw(&self, f: &SilhouetteFeatures) -> Result<[f64; SLOT_COUNT]> {
        f.check()?;
        let z = self.standardized(f);
        let mut out = self.bias();
        for (zi, row) in z.iter().zip(self.active_rows()) {
            for (s, o) in out.iter_mut().enumerate() {
                *o += zi * self.weight(row, s);
            }
        }
        Ok(out)
    }

    pub fn predict(&self, f: &SilhouetteFeatures) -> Result<MeasurementVector> {
        let mut out = self.predict_raw(f)?;
        for (s, v) in out.iter_mut().enumerate() {
            if *v < MIN_PREDICTION_MM {
                log::warn!("{} predicted {v:.3} mm, raised to {MIN_PREDICTION_MM} mm", SLOTS[s].name);
                *v = MIN_PREDICTION_MM;
            }
        }
        Ok(MeasurementVector(out))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: RegressorModel =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("regressor: {e}")))?;
        let dims_ok = model.frontal.mean.len() == VIEW_FEATURES
            && model.lateral.mean.len() == VIEW_FEATURES
            && model.frontal.std.len() == VIEW_FEATURES
            && model.lateral.std.len() == VIEW_FEATURES
            && model.frontal.active.len() == VIEW_FEATURES
            && model.lateral.active.len() == VIEW_FEATURES
            && model.weights.len() == (FEATURE_DIM + 1) * SLOT_COUNT;
        if !dims_ok {
            return Err(Error::Schema("regressor dimensions do not match the feature layout".into()));
        }
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Schema("regressor weights must be finite".into()));
        }
        Ok(model)
    }
}

pub fn save_regressor(model: &RegressorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_regressor(path: impl AsRef<Path>) -> Result<RegressorModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RegressorModel::from_json(&text)
}

/// Ridge regression on standardized features, solved in dual form so the
/// cost grows with the number of subjects rather than the feature count.
pub fn train_regressor(pairs: &[(SilhouetteFeatures, MeasurementVector)], ridge: f64) -> Result<RegressorModel> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(Error::InvalidArgument(format!("ridge {ridge} must be positive")));
    }
    for (f, m) in pairs {
        f.check()?;
        if !m.is_complete() {
            return Err(Error::InvalidArgument(format!("training target misses {:?}", m.missing())));
        }
    }
    let front: Vec<&[f64]> = pairs.iter().map(|p| p.0.frontal.as_slice()).collect();
    let side: Vec<&[f64]> = pairs.iter().map(|p| p.0.lateral.as_slice()).collect();
    let mut model = RegressorModel {
        frontal: Standardizer::fit(&front),
        lateral: Standardizer::fit(&side),
        ridge,
        weights: vec![0.0; (FEATURE_DIM + 1) * SLOT_COUNT],
    };
    let n = pairs.len();
    let d = model.frontal.active_count() + model.lateral.active_count();
    let mut x = DMatrix::zeros(n, d);
    for (i, (f, _)) in pairs.iter().enumerate() {
        for (j, v) in model.standardized(f).into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let y_mean: Vec<f64> = (0..SLOT_COUNT)
        .map(|s| pairs.iter().map(|p| p.1 .0[s]).sum::<f64>() / n as f64)
        .collect();
    let y = DMatrix::from_fn(n, SLOT_COUNT, |i, s| pairs[i].1 .0[s] - y_mean[s]);
    for (s, m) in y_mean.iter().enumerate() {
        model.weights[FEATURE_DIM * SLOT_COUNT + s] = *m;
    }
    if d == 0 {
        return Ok(model);
    }
    // W = Xᵀ (X Xᵀ + ridge I)⁻¹ Y through the eigendecomposition of X Xᵀ.
    let gram = &x * x.transpose();
    let eig = SymmetricEigen::new(gram);
    let inv = eig.eigenvalues.map(|l| {
        let l = l.max(0.0) + ridge;
        1.0 / l
    });
    let q = &eig.eigenvectors;
    let alpha = q * DMatrix::from_diagonal(&inv) * (q.transpose() * y);
    let w = x.transpose() * alpha;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("regressor weights are not finite".into()));
    }
    for (j, row) in model.active_rows().into_iter().enumerate() {
        for s in 0..SLOT_COUNT {
            model.weights[row * SLOT_COUNT + s] = w[(j, s)];
        }
    }
    Ok(model)
}

pub fn predict_measurements(
    model: &RegressorModel,
    frontal: &SilhouetteImage,
    lateral: &SilhouetteImage,
) -> Result<MeasurementVector> {
    model.predict(&SilhouetteFeatures::from_images(frontal, lateral)?)
}

/// Per-slot mean absolute errors (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct MaeTable {
    pub per_slot: [f64; SLOT_COUNT],
    pub mean: f64,
}

impl MaeTable {
    pub fn from_predictions(predictions: &[MeasurementVector], targets: &[MeasurementVector]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidArgument("empty test set".into()));
        }
        if predictions.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                got: predictions.len(),
            });
        }
        let n = targets.len() as f64;
        let per_slot = std::array::from_fn(|s| {
            predictions
                .iter()
                .zip(targets)
                .map(|(p, t)| (p.0[s] - t.0[s]).abs())
                .sum::<f64>()
                / n
        });
        let mean = per_slot.iter().sum::<f64>() / SLOT_COUNT as f64;
        Ok(MaeTable { per_slot, mean })
    }

    /// MAE of always predicting the training mean.
    pub fn baseline(train: &[MeasurementVector], test: &[MeasurementVector]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let mean = MeasurementVector(std::array::from_fn(|s| {
            train.iter().map(|m| m.0[s]).sum::<f64>() / train.len() as f64
        }));
        MaeTable::from_predictions(&vec![mean; test.len()], test)
    }

    pub fn get(&self, slot: &str) -> Option<f64> {
        crate::tailor::slot_index(slot).map(|s| self.per_slot[s])
    }

    /// Category rows `a`..`p` (mean MAE over their slots), then every slot,
    /// then the overall mean.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,measurement,mae_mm\n");
        for (c, label) in CATEGORIES {
            let vals: Vec<f64> = (0..SLOT_COUNT)
                .filter(|&s| SLOTS[s].category == Some(c))
                .map(|s| self.per_slot[s])
                .collect();
            let v = vals.iter().sum::<f64>() / vals.len() as f64;
            let _ = writeln!(out, "{c},{label},{v:.3}");
        }
        for (s, info) in SLOTS.iter().enumerate() {
            let row = info.category.map_or(String::from("-"), String::from);
            let _ = writeln!(out, "{row},{},{:.3}", info.name, self.per_slot[s]);
        }
        let _ = writeln!(out, "mean,all,{:.3}", self.mean);
        out
    }
}

/// Predicts every test subject and tabulates the errors.
pub fn evaluate(model: &RegressorModel, test: &[(SilhouetteFeatures, MeasurementVector)]) -> Result<MaeTable> {
    let predictions: Vec<MeasurementVector> = test.iter().map(|(f, _)| model.predict(f)).collect::<Result<_>>()?;
    let targets: Vec<MeasurementVector> = test.iter().map(|p| p.1).collect();
    MaeTable::from_predictions(&predictions, &targets)
}

#[cfg(test)]
mod tests;

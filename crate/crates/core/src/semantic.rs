//! Per-part linear maps from measurement rows to PCA coefficients, body
//! reconstruction and measurement-driven editing.
//!
//! Each part owns a row of slots (see [`part_slots`]). A body's row is
//! augmented with a trailing 1 and multiplied by the part's matrix to give
//! its coefficients, so the matrix has one more row than the part has slots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::assembler::{stitch_vertices, DEFAULT_EPSILON};
use crate::mesh::TriMesh;
use crate::part::PartLabel;
use crate::shape_model::{BodyShapeModel, ShapeCoeffs};
use crate::tailor::{csv_header, measure_body, part_slots, slot_index, MeasurementVector, TailorConfig, SLOTS, SLOT_COUNT};
use crate::{Error, Result};

/// Measurement rows and coefficient rows of one part, one row per body.
#[derive(Debug, Clone, PartialEq)]
pub struct PartDataset {
    pub slots: Vec<usize>,
    /// `n × (slots + 1)`, last column all ones.
    pub measurements: DMatrix<f64>,
    /// `n × K`.
    pub coeffs: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingDataset {
    pub parts: BTreeMap<PartLabel, PartDataset>,
    /// Per-slot minimum and maximum over the training bodies.
    pub slot_range: Vec<(f64, f64)>,
    /// Bodies left out, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// A part's slots from `m`, followed by the constant 1.
pub fn augmented_row(m: &MeasurementVector, slots: &[usize]) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(slots.len() + 1);
    for &s in slots {
        let v = m.0[s];
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "measurement {} is missing",
                SLOTS[s].name
            )));
        }
        row.push(v);
    }
    row.push(1.0);
    Ok(row)
}

impl MappingDataset {
    /// Dataset from known measurement vectors and coefficients.
    pub fn from_measurements(measurements: &[MeasurementVector], coeffs: &[ShapeCoeffs]) -> Result<Self> {
        if measurements.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: measurements.len(),
                got: coeffs.len(),
            });
        }
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("mapping dataset needs at least one body".into()))?;
        let n = measurements.len();
        let mut parts = BTreeMap::new();
        for (&label, beta0) in &first.0 {
            let slots = part_slots(label);
            let k = beta0.len();
            let mut mm = DMatrix::zeros(n, slots.len() + 1);
            let mut bm = DMatrix::zeros(n, k);
            for (i, (m, c)) in measurements.iter().zip(coeffs).enumerate() {
                let row = augmented_row(m, &slots)?;
                for (j, v) in row.into_iter().enumerate() {
                    mm[(i, j)] = v;
                }
                let beta = c.0.get(&label).ok_or(Error::MissingPart(label))?;
                if beta.len() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        got: beta.len(),
                    });
                }
                for (j, v) in beta.iter().enumerate() {
                    bm[(i, j)] = *v;
                }
            }
            parts.insert(
                label,
                PartDataset {
                    slots,
                    measurements: mm,
                    coeffs: bm,
                },
            );
        }
        let slot_range = (0..SLOT_COUNT)
            .map(|s| {
                measurements
                    .iter()
                    .map(|m| m.0[s])
                    .filter(|v| v.is_finite())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .collect();
        Ok(MappingDataset {
            parts,
            slot_range,
            skipped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.parts.values().next().map_or(0, |p| p.measurements.nrows())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Measures every body with the virtual tailor and projects it onto the
/// model. Bodies that fail to measure completely are skipped and listed.
pub fn build_mapping_dataset(
    meshes: &[TriMesh],
    model: &BodyShapeModel,
    cfg: &TailorConfig,
) -> Result<MappingDataset> {
    let results: Vec<Result<(MeasurementVector, ShapeCoeffs)>> = meshes
        .par_iter()
        .map(|mesh| {
            let report = measure_body(mesh, &model.segmentation, cfg)?;
            if !report.is_complete() {
                let why = match report.errors.first() {
                    Some((l, e)) => format!("{l}: {e}"),
                    None => format!("missing {:?}", report.vector.missing()),
                };
                return Err(Error::Measurement {
                    part: report.errors.first().map_or(PartLabel::Pelvis, |e| e.0),
                    message: why,
                });
            }
            Ok((report.vector, model.project_body(mesh)?))
        })
        .collect();
    let mut ms = Vec::new();
    let mut cs = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((m, c)) => {
                ms.push(m);
                cs.push(c);
            }
            Err(e) => {
                log::warn!("body {i} skipped: {e}");
                skipped.push((i, e.to_string()));
            }
        }
    }
    if ms.is_empty() {
        return Err(Error::InvalidArgument("no body could be measured".into()));
    }
    let mut ds = MappingDataset::from_measurements(&ms, &cs)?;
    ds.skipped = skipped;
    Ok(ds)
}

/// Linear map of one part: augmented row times `matrix` gives the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PartMap {
    pub slots: Vec<usize>,
    /// `(slots + 1) × K`.
    pub matrix: DMatrix<f64>,
    /// Ratio of extreme singular values of the training measurement matrix.
    pub condition: f64,
    pub rank: usize,
}

impl PartMap {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub parts: BTreeMap<PartLabel, PartMap>,
    pub ridge: f64,
    pub slot_range: Vec<(f64, f64)>,
}

/// Least-squares fit of every part's map. With `ridge = 0` the solution is
/// the pseudo-inverse one (minimum norm when the measurements are rank
/// deficient); otherwise the ridge normal equations are solved.
pub fn fit_linear_map(ds: &MappingDataset, ridge: f64) -> Result<LinearMap> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge {ridge} must be non-negative")));
    }
    let parts: Vec<(PartLabel, PartMap)> = ds
        .parts
        .par_iter()
        .map(|(&label, p)| Ok((label, fit_part(p, ridge)?)))
        .collect::<Result<_>>()?;
    for (label, p) in &parts {
        if p.rank_deficient() {
            log::warn!(
                "{label}: measurement matrix rank {} of {} (condition {:.3e})",
                p.rank,
                p.matrix.nrows(),
                p.condition
            );
        }
    }
    Ok(LinearMap {
        parts: parts.into_iter().collect(),
        ridge,
        slot_range: ds.slot_range.clone(),
    })
}

fn fit_part(p: &PartDataset, ridge: f64) -> Result<PartMap> {
    let m = &p.measurements;
    let cols = m.ncols();
    let svd = m.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let smax = sigma.max();
    let tol = (m.nrows().max(cols) as f64) * smax * f64::EPSILON;
    let rank = sigma.iter().filter(|&&s| s > tol).count();
    let smin = if sigma.len() < cols { 0.0 } else { sigma.min() };
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let matrix = if ridge == 0.0 {
        svd.solve(&p.coeffs, tol)
            .map_err(|e| Error::Degenerate(e.to_string()))?
    } else {
        let mut a = m.transpose() * m;
        for i in 0..cols {
            a[(i, i)] += ridge;
        }
        let rhs = m.transpose() * &p.coeffs;
        a.cholesky()
            .ok_or_else(|| Error::Degenerate("ridge system is not positive definite".into()))?
            .solve(&rhs)
    };
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("linear map has non-finite entries".into()));
    }
    Ok(PartMap {
        slots: p.slots.clone(),
        matrix,
        condition,
        rank,
    })
}

impl LinearMap {
    pub fn to_json(&self) -> Result<String> {
        let parts: serde_json::Map<String, Value> = self
            .parts
            .iter()
            .map(|(l, p)| {
                let data: Vec<Vec<f64>> = p
                    .matrix
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect();
                let slots: Vec<&str> = p.slots.iter().map(|&s| SLOTS[s].name).collect();
                (
                    l.to_string(),
                    json!({
                        "rows": p.matrix.nrows(),
                        "cols": p.matrix.ncols(),
                        "data": data,
                        "slots": slots,
                        "condition": p.condition.is_finite().then_some(p.condition),
                        "rank": p.rank,
                    }),
                )
            })
            .collect();
        let ranges: serde_json::Map<String, Value> = self
            .slot_range
            .iter()
            .enumerate()
            .filter(|(_, r)| r.0.is_finite() && r.1.is_finite())
            .map(|(s, r)| (SLOTS[s].name.to_string(), json!([r.0, r.1])))
            .collect();
        Ok(serde_json::to_string(&json!({
            "ridge": self.ridge,
            "parts": parts,
            "slot_range": ranges,
        }))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema = |m: &str| Error::Schema(format!("linear map: {m}"));
        let doc: Value = serde_json::from_str(text).map_err(|e| schema(&e.to_string()))?;
        let ridge = doc["ridge"].as_f64().ok_or_else(|| schema("missing ridge"))?;
        let mut parts = BTreeMap::new();
        for (name, p) in doc["parts"].as_object().ok_or_else(|| schema("missing parts"))? {
            let label: PartLabel = name.parse().map_err(|_| schema(&format!("unknown part {name}")))?;
            let rows = p["rows"].as_u64().ok_or_else(|| schema("missing rows"))? as usize;
            let cols = p["cols"].as_u64().ok_or_else(|| schema("missing cols"))? as usize;
            let data: Vec<Vec<f64>> =
                serde_json::from_value(p["data"].clone()).map_err(|e| schema(&e.to_string()))?;
            if data.len() != rows || data.iter().any(|r| r.len() != cols) {
                return Err(schema(&format!("{name}: data is not {rows} × {cols}")));
            }
            let slots: Vec<String> =
                serde_json::from_value(p["slots"].clone()).map_err(|e| schema(&e.to_string()))?;
            let slots: Vec<usize> = slots
                .iter()
                .map(|s| slot_index(s).ok_or_else(|| schema(&format!("unknown slot {s}"))))
                .collect::<Result<_>>()?;
            if slots != part_slots(label) || rows != slots.len() + 1 {
                return Err(schema(&format!("{name}: slot row does not match the part")));
            }
            let matrix = DMatrix::from_fn(rows, cols, |i, j| data[i][j]);
            parts.insert(
                label,
                PartMap {
                    slots,
                    matrix,
                    condition: p["condition"].as_f64().unwrap_or(f64::INFINITY),
                    rank: p["rank"].as_u64().unwrap_or(rows as u64) as usize,
                },
            );
        }
        let mut slot_range = vec![(f64::INFINITY, f64::NEG_INFINITY); SLOT_COUNT];
        if let Some(r) = doc["slot_range"].as_object() {
            for (name, v) in r {
                let s = slot_index(name).ok_or_else(|| schema(&format!("unknown slot {name}")))?;
                let pair: [f64; 2] = serde_json::from_value(v.clone()).map_err(|e| schema(&e.to_string()))?;
                slot_range[s] = (pair[0], pair[1]);
            }
        }
        Ok(LinearMap {
            parts,
            ridge,
            slot_range,
        })
    }

    /// Slots of `m` outside the training range.
    pub fn extrapolated_slots(&self, m: &MeasurementVector) -> Vec<&'static str> {
        self.slot_range
            .iter()
            .enumerate()
            .filter(|(s, r)| m.0[*s].is_finite() && r.0 <= r.1 && !(r.0..=r.1).contains(&m.0[*s]))
            .map(|(s, _)| SLOTS[s].name)
            .collect()
    }

    fn check_model(&self, model: &BodyShapeModel) -> Result<()> {
        for (label, pca) in &model.parts {
            let p = self.parts.get(label).ok_or(Error::MissingPart(*label))?;
            if p.matrix.ncols() != pca.k() {
                return Err(Error::DimensionMismatch {
                    expected: pca.k(),
                    got: p.matrix.ncols(),
                });
            }
        }
        Ok(())
    }
}

pub fn save_map(map: &LinearMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, map.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<LinearMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LinearMap::from_json(&text)
}

/// Coefficients of every part for the measurements `m`.
pub fn measurements_to_coeffs(m: &MeasurementVector, map: &LinearMap) -> Result<ShapeCoeffs> {
    let mut out = BTreeMap::new();
    for (&label, p) in &map.parts {
        let row = DVector::from_vec(augmented_row(m, &p.slots)?);
        let beta = p.matrix.tr_mul(&row);
        out.insert(label, beta.iter().copied().collect());
    }
    Ok(ShapeCoeffs(out))
}

/// Synthesizes and stitches the body for given coefficients.
pub fn body_from_coeffs(coeffs: &ShapeCoeffs, model: &BodyShapeModel) -> Result<TriMesh> {
    let parts = model.synthesize_all(coeffs)?;
    let (vertices, _) = stitch_vertices(&parts, &model.segmentation, DEFAULT_EPSILON)?;
    TriMesh::new(vertices, model.faces.clone())
}

/// The body whose measurements are `m`, in the model's template topology.
pub fn reconstruct_body(m: &MeasurementVector, map: &LinearMap, model: &BodyShapeModel) -> Result<TriMesh> {
    map.check_model(model)?;
    let outside = map.extrapolated_slots(m);
    if !outside.is_empty() {
        log::warn!("extrapolating beyond the training range in {outside:?}");
    }
    body_from_coeffs(&measurements_to_coeffs(m, map)?, model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditedSlot {
    pub slot: usize,
    pub requested: f64,
    /// Value measured on the edited body; NaN if it could not be measured.
    pub measured: f64,
}

#[derive(Debug, Clone)]
pub struct EditResult {
    pub mesh: TriMesh,
    pub target: MeasurementVector,
    pub edited: Vec<EditedSlot>,
}

/// Applies measurement deltas and reconstructs the edited body. The edited
/// slots are re-measured so the residual can be inspected.
pub fn edit_body(
    m: &MeasurementVector,
    delta: &BTreeMap<usize, f64>,
    map: &LinearMap,
    model: &BodyShapeModel,
    cfg: &TailorConfig,
) -> Result<EditResult> {
    let mut target = *m;
    for (&s, &d) in delta {
        if s >= SLOT_COUNT {
            return Err(Error::InvalidArgument(format!("slot index {s} out of range")));
        }
        target.0[s] += d;
        if !(target.0[s] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{} would become {:.2} mm",
                SLOTS[s].name, target.0[s]
            )));
        }
    }
    let mesh = reconstruct_body(&target, map, model)?;
    let edited = if delta.is_empty() {
        Vec::new()
    } else {
        let measured = measure_body(&mesh, &model.segmentation, cfg)?.vector;
        delta
            .keys()
            .map(|&s| EditedSlot {
                slot: s,
                requested: target.0[s],
                measured: measured.0[s],
            })
            .collect()
    };
    Ok(EditResult { mesh, target, edited })
}

/// How target measurements are drawn around the base vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Independent uniform offsets in `[-w, w]` per slot (mm).
    Uniform { half_width: Vec<f64> },
    /// Gaussian offsets with the given slot covariance (mm²), scaled by `scale`.
    Correlated { covariance: DMatrix<f64>, scale: f64 },
}

impl Sampling {
    /// Uniform ranges of `fraction` times each base value.
    pub fn relative(base: &MeasurementVector, fraction: f64) -> Self {
        Sampling::Uniform {
            half_width: base.0.iter().map(|v| v.abs() * fraction).collect(),
        }
    }
}

/// Sample covariance of measurement vectors, slots as variables.
pub fn empirical_covariance(ms: &[MeasurementVector]) -> Result<DMatrix<f64>> {
    if ms.len() < 2 {
        return Err(Error::InvalidArgument("covariance needs at least two vectors".into()));
    }
    if let Some(m) = ms.iter().find(|m| !m.is_complete()) {
        return Err(Error::InvalidArgument(format!("incomplete measurements {:?}", m.missing())));
    }
    let n = ms.len();
    let x = DMatrix::from_fn(n, SLOT_COUNT, |i, j| ms[i].0[j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, SLOT_COUNT, |i, j| x[(i, j)] - mean[j]);
    Ok(centered.transpose() * &centered / (n - 1) as f64)
}

#[derive(Debug, Clone)]
pub struct GeneratedPopulation {
    pub bodies: Vec<(TriMesh, MeasurementVector)>,
    /// Samples whose reconstruction failed or whose targets were non-positive.
    pub skipped: usize,
}

/// Draws `n` target vectors around `base` and reconstructs each body.
pub fn generate_population(
    base: &MeasurementVector,
    sampling: &Sampling,
    n: usize,
    seed: u64,
    map: &LinearMap,
    model: &BodyShapeModel,
) -> Result<GeneratedPopulation> {
    if n == 0 {
        return Err(Error::InvalidArgument("population size must be at least 1".into()));
    }
    if !base.is_complete() {
        return Err(Error::InvalidArgument(format!("base measurements miss {:?}", base.missing())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets: Vec<MeasurementVector> = match sampling {
        Sampling::Uniform { half_width } => {
            if half_width.len() != SLOT_COUNT {
                return Err(Error::DimensionMismatch {
                    expected: SLOT_COUNT,
                    got: half_width.len(),
                });
            }
            for (s, w) in half_width.iter().enumerate() {
                if !(w.is_finite() && *w >= 0.0 && base.0[s] - w > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "range of {} does not stay positive",
                        SLOTS[s].name
                    )));
                }
            }
            (0..n)
                .map(|_| {
                    let mut m = *base;
                    for (v, w) in m.0.iter_mut().zip(half_width) {
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        *v += w * u;
                    }
                    m
                })
                .collect()
        }
        Sampling::Correlated { covariance, scale } => {
            if covariance.shape() != (SLOT_COUNT, SLOT_COUNT) {
                return Err(Error::DimensionMismatch {
                    expected: SLOT_COUNT,
                    got: covariance.nrows(),
                });
            }
            let eig = SymmetricEigen::new(covariance.clone());
            let root = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
            (0..n)
                .map(|_| {
                    let z = DVector::from_fn(SLOT_COUNT, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let off = &root * z * *scale;
                    let mut m = *base;
                    for (v, o) in m.0.iter_mut().zip(off.iter()) {
                        *v += o;
                    }
                    m
                })
                .collect()
        }
    };
    let results: Vec<Option<(TriMesh, MeasurementVector)>> = targets
        .par_iter()
        .map(|m| {
            if m.0.iter().any(|v| !(*v > 0.0)) {
                return None;
            }
            match reconstruct_body(m, map, model) {
                Ok(mesh) => Some((mesh, *m)),
                Err(e) => {
                    log::warn!("population sample skipped: {e}");
                    None
                }
            }
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    Ok(GeneratedPopulation {
        bodies: results.into_iter().flatten().collect(),
        skipped,
    })
}

/// CSV linking mesh files to their target measurement rows.
pub fn population_manifest_csv(names: &[String], targets: &[MeasurementVector]) -> String {
    let mut out = format!("mesh,{}\n", csv_header());
    for (name, m) in names.iter().zip(targets) {
        let cells: Vec<String> = m.0.iter().map(|v| format!("{v:.2}")).collect();
        let _ = writeln!(out, "{name},{}", cells.join(","));
    }
    out
}

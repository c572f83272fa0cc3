//! Per-part PCA shape spaces: `X = U·β + μ` for every body part.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::sorted_right_singular;
use crate::mesh::TriMesh;
use crate::part::PartLabel;
use crate::segmentation::{extract_all, part_topology, PartMesh, PartSegmentation};
use crate::{Error, Result, Vec3};

/// Default number of principal components per part.
pub const DEFAULT_COMPONENTS: usize = 4;

/// PCA shape space of one part.
#[derive(Debug, Clone, PartialEq)]
pub struct PartPca {
    pub label: PartLabel,
    /// Flattened mean shape `[x0, y0, z0, x1, ...]`, length `3·V`.
    pub mean: DVector<f64>,
    /// Orthonormal components as columns, `3·V × K`.
    pub components: DMatrix<f64>,
    /// Variance per component (mm²), descending.
    pub eigenvalues: Vec<f64>,
    /// Total centred variance of the training data (mm²).
    pub total_variance: f64,
    /// Mean part centre in the body frame; used to place the root part.
    pub center: Vec3,
}

impl PartPca {
    pub fn vertex_count(&self) -> usize {
        self.mean.len() / 3
    }

    pub fn k(&self) -> usize {
        self.components.ncols()
    }
}

fn flatten(vertices: &[Vec3]) -> DVector<f64> {
    DVector::from_iterator(vertices.len() * 3, vertices.iter().flat_map(|v| [v.x, v.y, v.z]))
}

fn unflatten(x: &DVector<f64>) -> Vec<Vec3> {
    x.as_slice()
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect()
}

/// Fits a `k`-component PCA to corresponding part instances.
///
/// Components come from the SVD of the centred data matrix; each component is
/// signed so its largest-magnitude entry is positive.
pub fn fit_part_pca(samples: &[PartMesh], k: usize) -> Result<PartPca> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 samples, got {n}"
        )));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "component count {k} outside 1..={}",
            n - 1
        )));
    }
    let label = samples[0].label;
    let v = samples[0].vertices.len();
    if let Some(bad) = samples.iter().find(|s| s.vertices.len() != v || s.label != label) {
        return Err(Error::InvalidArgument(format!(
            "inconsistent topology: {} with {} vertices vs {label} with {v}",
            bad.label,
            bad.vertices.len()
        )));
    }
    let d = 3 * v;
    let mut data = DMatrix::zeros(n, d);
    for (i, s) in samples.iter().enumerate() {
        data.set_row(i, &flatten(&s.vertices).transpose());
    }
    let mean: DVector<f64> = data.row_mean().transpose();
    for mut row in data.row_iter_mut() {
        row -= mean.transpose();
    }
    let total_variance = data.norm_squared() / (n - 1) as f64;
    let (sigma, v_cols) = sorted_right_singular(&data);
    let mut components = v_cols.columns(0, k).into_owned();
    for mut col in components.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    let eigenvalues = sigma[..k].iter().map(|s| s * s / (n - 1) as f64).collect();
    let center = samples.iter().map(|s| s.center).sum::<Vec3>() / n as f64;
    Ok(PartPca {
        label,
        mean,
        components,
        eigenvalues,
        total_variance,
        center,
    })
}

/// `U·β + μ` as 3D points.
pub fn synthesize_part(pca: &PartPca, beta: &[f64]) -> Result<Vec<Vec3>> {
    if beta.len() != pca.k() {
        return Err(Error::DimensionMismatch {
            expected: pca.k(),
            got: beta.len(),
        });
    }
    let b = DVector::from_column_slice(beta);
    Ok(unflatten(&(&pca.components * b + &pca.mean)))
}

/// `Uᵀ(x − μ)`, the least-squares coefficients by orthonormality of `U`.
pub fn project_part(pca: &PartPca, vertices: &[Vec3]) -> Result<Vec<f64>> {
    if vertices.len() != pca.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: pca.vertex_count(),
            got: vertices.len(),
        });
    }
    let x = flatten(vertices) - &pca.mean;
    Ok((pca.components.transpose() * x).as_slice().to_vec())
}

/// Per-component share of the total training variance.
pub fn explained_variance(pca: &PartPca) -> Vec<f64> {
    if pca.total_variance <= 0.0 {
        return vec![0.0; pca.eigenvalues.len()];
    }
    pca.eigenvalues
        .iter()
        .map(|e| e / pca.total_variance)
        .collect()
}

/// Per-part PCA coefficients for a whole body.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShapeCoeffs(pub BTreeMap<PartLabel, Vec<f64>>);

impl ShapeCoeffs {
    /// All coefficients concatenated in label order.
    pub fn flatten(&self) -> Vec<f64> {
        self.0.values().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(model: &BodyShapeModel) -> Self {
        ShapeCoeffs(model.parts.iter().map(|(&l, p)| (l, vec![0.0; p.k()])).collect())
    }
}

/// Topology of one part cached for synthesis.
#[derive(Debug, Clone, PartialEq)]
struct PartTemplate {
    faces: Vec<[usize; 3]>,
    interfaces: BTreeMap<PartLabel, Vec<usize>>,
}

/// Statistical shape space of the whole body.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyShapeModel {
    pub parts: BTreeMap<PartLabel, PartPca>,
    pub segmentation: PartSegmentation,
    /// Reference face list of the full template mesh.
    pub faces: Vec<[usize; 3]>,
    templates: BTreeMap<PartLabel, PartTemplate>,
}

impl BodyShapeModel {
    pub fn new(
        parts: BTreeMap<PartLabel, PartPca>,
        segmentation: PartSegmentation,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let seg_labels: Vec<PartLabel> = segmentation.labels().collect();
        let model_labels: Vec<PartLabel> = parts.keys().copied().collect();
        if seg_labels != model_labels {
            return Err(Error::Schema(format!(
                "model has {} parts but segmentation has {}",
                model_labels.len(),
                seg_labels.len()
            )));
        }
        let mut templates = BTreeMap::new();
        for (&label, pca) in &parts {
            let expected = segmentation.part_vertices(label)?.len();
            if pca.vertex_count() != expected || pca.mean.len() != 3 * expected {
                return Err(Error::Schema(format!(
                    "part {label}: model has {} vertices, segmentation {expected}",
                    pca.vertex_count()
                )));
            }
            if pca.components.nrows() != pca.mean.len() || pca.eigenvalues.len() != pca.k() {
                return Err(Error::Schema(format!("part {label}: inconsistent matrix shapes")));
            }
            let (f, i) = part_topology(&faces, &segmentation, label)?;
            templates.insert(
                label,
                PartTemplate {
                    faces: f,
                    interfaces: i,
                },
            );
        }
        Ok(BodyShapeModel {
            parts,
            segmentation,
            faces,
            templates,
        })
    }

    pub fn total_components(&self) -> usize {
        self.parts.values().map(PartPca::k).sum()
    }

    /// Synthesizes one part (placed at the model's mean part centre).
    pub fn synthesize(&self, label: PartLabel, beta: &[f64]) -> Result<PartMesh> {
        let pca = self.parts.get(&label).ok_or(Error::MissingPart(label))?;
        let local = synthesize_part(pca, beta)?;
        let t = &self.templates[&label];
        let world: Vec<Vec3> = local.iter().map(|v| v + pca.center).collect();
        Ok(crate::segmentation::part_from_world(
            label,
            &world,
            t.faces.clone(),
            t.interfaces.clone(),
            self.segmentation.parent(label),
        ))
    }

    pub fn synthesize_all(&self, coeffs: &ShapeCoeffs) -> Result<BTreeMap<PartLabel, PartMesh>> {
        self.parts
            .keys()
            .map(|&l| {
                let beta = coeffs.0.get(&l).ok_or(Error::MissingPart(l))?;
                Ok((l, self.synthesize(l, beta)?))
            })
            .collect()
    }

    pub fn project_body(&self, mesh: &TriMesh) -> Result<ShapeCoeffs> {
        let parts = extract_all(mesh, &self.segmentation)?;
        let mut out = BTreeMap::new();
        for (l, pca) in &self.parts {
            out.insert(*l, project_part(pca, &parts[l].vertices)?);
        }
        Ok(ShapeCoeffs(out))
    }

    pub fn to_json(&self) -> Result<String> {
        let payload = self.payload();
        let checksum = checksum(&payload);
        let mut doc = payload;
        doc.as_object_mut()
            .expect("payload is an object")
            .insert("checksum".into(), serde_json::Value::String(checksum));
        Ok(serde_json::to_string(&doc)?)
    }

    fn payload(&self) -> serde_json::Value {
        let parts: BTreeMap<PartLabel, PartDoc> = self
            .parts
            .iter()
            .map(|(&l, p)| {
                (
                    l,
                    PartDoc {
                        mean: p.mean.as_slice().to_vec(),
                        components: p
                            .components
                            .column_iter()
                            .map(|c| c.as_slice().to_vec())
                            .collect(),
                        eigenvalues: p.eigenvalues.clone(),
                        vertex_count: p.vertex_count(),
                        total_variance: p.total_variance,
                        center: [p.center.x, p.center.y, p.center.z],
                    },
                )
            })
            .collect();
        serde_json::json!({
            "parts": parts,
            "segmentation": self.segmentation.serialize_value(),
            "faces": self.faces,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| Error::Schema("model document is not an object".into()))?;
        let stored = obj
            .remove("checksum")
            .and_then(|v| v.as_str().map(str::to_owned))
            .ok_or_else(|| Error::Schema("missing checksum".into()))?;
        let computed = checksum(&doc);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let body: ModelDoc =
            serde_json::from_value(doc).map_err(|e| Error::Schema(e.to_string()))?;
        let segmentation = PartSegmentation::from_value(body.segmentation)?;
        let mut parts = BTreeMap::new();
        for (label, p) in body.parts {
            let d = p.mean.len();
            if d != 3 * p.vertex_count || p.components.iter().any(|c| c.len() != d) {
                return Err(Error::Schema(format!("part {label}: bad component shapes")));
            }
            let k = p.components.len();
            let components = DMatrix::from_iterator(d, k, p.components.into_iter().flatten());
            parts.insert(
                label,
                PartPca {
                    label,
                    mean: DVector::from_vec(p.mean),
                    components,
                    eigenvalues: p.eigenvalues,
                    total_variance: p.total_variance,
                    center: Vec3::from(p.center),
                },
            );
        }
        Self::new(parts, segmentation, body.faces)
    }
}

fn checksum(payload: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(payload.to_string().as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct PartDoc {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    vertex_count: usize,
    total_variance: f64,
    center: [f64; 3],
}

#[derive(Deserialize)]
struct ModelDoc {
    parts: BTreeMap<PartLabel, PartDoc>,
    segmentation: serde_json::Value,
    faces: Vec<[usize; 3]>,
}

pub fn save_model(model: &BodyShapeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BodyShapeModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BodyShapeModel::from_json(&text)
}

/// Fits every part's PCA over a corpus of bodies sharing one segmentation.
pub fn fit_body_model(
    meshes: &[TriMesh],
    seg: &PartSegmentation,
    k: usize,
) -> Result<BodyShapeModel> {
    if meshes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 bodies, got {}",
            meshes.len()
        )));
    }
    let faces = meshes[0].faces.clone();
    if meshes.iter().any(|m| m.faces != faces) {
        return Err(Error::InvalidArgument("bodies do not share one topology".into()));
    }
    let extracted: Vec<BTreeMap<PartLabel, PartMesh>> = meshes
        .par_iter()
        .map(|m| extract_all(m, seg))
        .collect::<Result<_>>()?;
    let labels: Vec<PartLabel> = seg.labels().collect();
    let fitted: Vec<(PartLabel, PartPca)> = labels
        .par_iter()
        .map(|&l| {
            let samples: Vec<PartMesh> = extracted.iter().map(|e| e[&l].clone()).collect();
            Ok((l, fit_part_pca(&samples, k)?))
        })
        .collect::<Result<_>>()?;
    BodyShapeModel::new(fitted.into_iter().collect(), seg.clone(), faces)
}

//! Reassembly of independently synthesized parts into one body.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Matrix3;
use serde::Serialize;

use crate::linalg::{centroid, principal_axes};
use crate::mesh::TriMesh;
use crate::part::PartLabel;
use crate::segmentation::{PartMesh, PartSegmentation};
use crate::{Error, Result, Vec3};

/// Default stitch band width as a fraction of the centroid-to-interface distance.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Rigid motion `x ↦ R·(x − pivot) + pivot + T`.
///
/// With the pivot at the child interface centroid, `T` is exactly the offset
/// between the two interface centroids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    pub pivot: Vec3,
    /// Largest point distance between the aligned child and the parent points.
    pub residual: f64,
    /// The child points were (nearly) collinear, so the rotation about their
    /// line is arbitrary.
    pub degenerate: bool,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
            pivot: Vec3::zeros(),
            residual: 0.0,
            degenerate: false,
        }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * (x - self.pivot) + self.pivot + self.translation
    }

    /// Equivalent `(R, t)` with `x ↦ R·x + t`.
    pub fn as_affine(&self) -> (Matrix3<f64>, Vec3) {
        let t = self.pivot + self.translation - self.rotation * self.pivot;
        (self.rotation, t)
    }
}

/// Best proper rotation plus centroid translation taking `child` onto `parent`.
pub fn procrustes_align(child: &[Vec3], parent: &[Vec3]) -> Result<RigidTransform> {
    if child.len() != parent.len() {
        return Err(Error::DimensionMismatch {
            expected: parent.len(),
            got: child.len(),
        });
    }
    if child.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "Procrustes alignment needs at least 3 points, got {}",
            child.len()
        )));
    }
    let oc = centroid(child);
    let op = centroid(parent);
    let h = child
        .iter()
        .zip(parent)
        .fold(Matrix3::zeros(), |acc, (c, p)| acc + (c - oc) * (p - op).transpose());
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    let axes = principal_axes(child);
    let degenerate = axes[0].0 <= 0.0 || axes[1].0.max(0.0) <= 1e-12 * axes[0].0;
    let mut out = RigidTransform {
        rotation,
        translation: op - oc,
        pivot: oc,
        residual: 0.0,
        degenerate,
    };
    out.residual = child
        .iter()
        .zip(parent)
        .map(|(c, p)| (out.apply(c) - p).norm())
        .fold(0.0, f64::max);
    Ok(out)
}

/// Result of deforming one part around one of its interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    /// New world-frame vertex positions of the part.
    pub vertices: Vec<Vec3>,
    /// Mean distance between the final and aligned interface points.
    pub mean_distance: f64,
    /// `+1` moves band vertices towards the part axis, `−1` away from it.
    pub direction: f64,
    /// Band vertices lying on the axis, left in place.
    pub skipped: Vec<usize>,
}

/// Smooths the seam of `part` next to `neighbor` after its interface points
/// moved from `aligned` to `target`.
///
/// Works on world coordinates (`part.vertices + part.center`). Vertices whose
/// normalised distance from the interface along the centroid→interface axis
/// is at most `epsilon` are pushed radially by `λ·t·∇d`; interface vertices of
/// `neighbor` are set to `target`, and vertices on other interfaces stay put.
pub fn stitch_deformation(
    part: &PartMesh,
    neighbor: PartLabel,
    target: &[Vec3],
    aligned: &[Vec3],
    epsilon: f64,
) -> Result<Deformation> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "stitch band width {epsilon} outside (0, 1]"
        )));
    }
    let idx = part
        .interfaces
        .get(&neighbor)
        .ok_or(Error::MissingInterface(part.label, neighbor))?;
    if target.len() != idx.len() || aligned.len() != idx.len() {
        return Err(Error::DimensionMismatch {
            expected: idx.len(),
            got: target.len().min(aligned.len()),
        });
    }
    let n = idx.len() as f64;
    let mean_distance = target
        .iter()
        .zip(aligned)
        .map(|(p, q)| (p - q).norm())
        .sum::<f64>()
        / n;

    let origin = part.center;
    let iface_center = centroid(aligned);
    let mut angle_sum = 0.0;
    let mut angle_count = 0usize;
    for (p, q) in target.iter().zip(aligned) {
        let a = iface_center - p;
        let b = q - p;
        if a.norm() > 0.0 && b.norm() > 0.0 {
            angle_sum += a.angle(&b);
            angle_count += 1;
        }
    }
    let direction = if angle_count == 0 || angle_sum / angle_count as f64 <= std::f64::consts::FRAC_PI_2 {
        -1.0
    } else {
        1.0
    };

    let mut vertices = part.world_vertices();
    let locked = part.interface_mask();
    let mut skipped = Vec::new();
    let axis = iface_center - origin;
    let len2 = axis.norm_squared();
    if mean_distance > 0.0 && len2 > 0.0 {
        for (k, v) in vertices.iter_mut().enumerate() {
            if locked[k] {
                continue;
            }
            let s = ((*v - origin).dot(&axis) / len2).clamp(0.0, 1.0);
            let falloff = 1.0 - s;
            if falloff > epsilon {
                continue;
            }
            let foot = origin + axis * s;
            let radial = foot - *v;
            let r = radial.norm();
            if r <= 1e-12 {
                skipped.push(k);
                continue;
            }
            *v += radial / r * (direction * falloff * mean_distance);
        }
    }
    for (&i, p) in idx.iter().zip(target) {
        vertices[i] = *p;
    }
    Ok(Deformation {
        vertices,
        mean_distance,
        direction,
        skipped,
    })
}

/// Per-interface summary of a stitch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchReport {
    pub child: PartLabel,
    pub parent: PartLabel,
    /// Mean deformation distance on the child side (mm).
    pub mean_deformation: f64,
    /// Deformation sense on the child side (`±1`).
    pub direction: f64,
    /// Largest child/parent interface gap after rigid alignment, before
    /// averaging (mm). Both copies coincide after averaging.
    pub max_gap: f64,
    pub degenerate_interface: bool,
    /// Child vertices skipped because they lie on the part axis.
    pub skipped_vertices: usize,
}

/// Stitches parts and returns merged world vertices in template order.
pub fn stitch_vertices(
    parts: &BTreeMap<PartLabel, PartMesh>,
    seg: &PartSegmentation,
    epsilon: f64,
) -> Result<(Vec<Vec3>, Vec<StitchReport>)> {
    for label in seg.labels() {
        let part = parts.get(&label).ok_or(Error::MissingPart(label))?;
        let expected = seg.part_vertices(label)?.len();
        if part.vertices.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "part {label} has {} vertices, segmentation expects {expected}",
                part.vertices.len()
            )));
        }
        for n in seg.neighbors(label) {
            let want = seg.interface(label, n)?.len();
            match part.interfaces.get(&n) {
                Some(idx) if idx.len() == want => {}
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "part {label} interface with {n} does not match the segmentation"
                    )))
                }
            }
        }
    }

    let order = seg.traversal_order();
    // World-frame positions per part as they are placed.
    let mut placed: BTreeMap<PartLabel, PartMesh> = BTreeMap::new();
    let root = order[0];
    placed.insert(root, parts[&root].clone());
    let mut reports = Vec::new();

    for &child in &order[1..] {
        let parent = seg.parent(child).expect("non-root part has a parent");
        let source = &parts[&child];
        let parent_part = &placed[&parent];
        let child_pts: Vec<Vec3> = source
            .interface_points(parent)?
            .iter()
            .map(|v| v + source.center)
            .collect();
        let parent_pts: Vec<Vec3> = parent_part
            .interface_points(child)?
            .iter()
            .map(|v| v + parent_part.center)
            .collect();
        let xf = procrustes_align(&child_pts, &parent_pts)?;
        let (r, t) = xf.as_affine();
        let aligned = source.transformed(&r, &t);
        let aligned_pts: Vec<Vec3> = child_pts.iter().map(|p| xf.apply(p)).collect();
        let target: Vec<Vec3> = aligned_pts
            .iter()
            .zip(&parent_pts)
            .map(|(a, b)| (a + b) * 0.5)
            .collect();

        let child_def = stitch_deformation(&aligned, parent, &target, &aligned_pts, epsilon)?;
        let parent_def = stitch_deformation(parent_part, child, &target, &parent_pts, epsilon)?;
        let apply = |p: &PartMesh, world: Vec<Vec3>| {
            let mut out = p.clone();
            out.vertices = world.iter().map(|w| w - p.center).collect();
            out
        };
        let new_parent = apply(parent_part, parent_def.vertices);
        let new_child = apply(&aligned, child_def.vertices);
        reports.push(StitchReport {
            child,
            parent,
            mean_deformation: child_def.mean_distance,
            direction: child_def.direction,
            max_gap: xf.residual,
            degenerate_interface: xf.degenerate,
            skipped_vertices: child_def.skipped.len(),
        });
        placed.insert(parent, new_parent);
        placed.insert(child, new_child);
    }

    let mut out = vec![Vec3::zeros(); seg.vertex_count()];
    for (label, part) in &placed {
        for (local, &global) in seg.part_vertices(*label)?.iter().enumerate() {
            out[global] = part.vertices[local] + part.center;
        }
    }
    Ok((out, reports))
}

/// Stitches parts into a watertight mesh. Faces are collected from the parts
/// (each template face lies inside at least one part).
pub fn stitch_body(
    parts: &BTreeMap<PartLabel, PartMesh>,
    seg: &PartSegmentation,
) -> Result<(TriMesh, Vec<StitchReport>)> {
    let (vertices, reports) = stitch_vertices(parts, seg, DEFAULT_EPSILON)?;
    let mut seen = BTreeSet::new();
    let mut faces = Vec::new();
    for (label, part) in parts {
        let globals = seg.part_vertices(*label)?;
        for f in &part.faces {
            let g = [globals[f[0]], globals[f[1]], globals[f[2]]];
            let mut k = g;
            k.sort_unstable();
            if seen.insert(k) {
                faces.push(g);
            }
        }
    }
    Ok((TriMesh::new(vertices, faces)?, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::axis_angle;
    use crate::segmentation::extract_all;
    use crate::segmentation::tests::toy_two_part;

    fn pts() -> Vec<Vec3> {
        vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(1.0, 1.0, 1.0),
        ]
    }

    #[test]
    fn identity_alignment() {
        let xf = procrustes_align(&pts(), &pts()).unwrap();
        assert!((xf.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(xf.translation.norm() < 1e-12);
        assert!(!xf.degenerate);
    }

    #[test]
    fn recovers_known_motion() {
        let q = axis_angle(&Vec3::new(0.3, -1.0, 0.5), 1.1);
        let t = Vec3::new(5.0, -2.0, 7.0);
        let parent: Vec<Vec3> = pts().iter().map(|p| q * p + t).collect();
        let xf = procrustes_align(&pts(), &parent).unwrap();
        assert!((xf.rotation - q).abs().max() < 1e-12);
        assert!(xf.residual < 1e-9);
    }

    #[test]
    fn reflection_gives_proper_rotation() {
        let parent: Vec<Vec3> = pts().iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let xf = procrustes_align(&pts(), &parent).unwrap();
        assert!((xf.rotation.determinant() - 1.0).abs() < 1e-12);
        assert!(xf.residual > 0.1);
        // Brute-force oracle: no rotation on a coarse grid does better.
        let misfit = |r: &Matrix3<f64>| -> f64 {
            let (oc, op) = (centroid(&pts()), centroid(&parent));
            pts()
                .iter()
                .zip(&parent)
                .map(|(c, p)| (r * (c - oc) - (p - op)).norm_squared())
                .sum()
        };
        let best = misfit(&xf.rotation);
        for i in 0..12 {
            for j in 0..12 {
                let axis = Vec3::new(
                    (i as f64 * 0.5).cos() * (j as f64 * 0.26).sin(),
                    (i as f64 * 0.5).sin() * (j as f64 * 0.26).sin(),
                    (j as f64 * 0.26).cos(),
                );
                for k in 0..24 {
                    let r = axis_angle(&axis, k as f64 * std::f64::consts::TAU / 24.0);
                    assert!(misfit(&r) >= best - 1e-9);
                }
            }
        }
    }

    #[test]
    fn too_few_points() {
        assert!(procrustes_align(&pts()[..2], &pts()[..2]).is_err());
        assert!(procrustes_align(&pts()[..3], &pts()).is_err());
    }

    #[test]
    fn collinear_is_flagged() {
        let line: Vec<Vec3> = (0..4).map(|k| Vec3::new(k as f64, 0.0, 0.0)).collect();
        assert!(procrustes_align(&line, &line).unwrap().degenerate);
    }

    #[test]
    fn reassembly_is_identity() {
        let (mesh, seg) = toy_two_part();
        let parts = extract_all(&mesh, &seg).unwrap();
        let (out, reports) = stitch_body(&parts, &seg).unwrap();
        for (a, b) in out.vertices.iter().zip(&mesh.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
        assert_eq!(out.faces.len(), mesh.faces.len());
        assert_eq!(reports.len(), 1);
        assert!(reports[0].mean_deformation < 1e-9);
    }

    #[test]
    fn rotated_child_is_undone() {
        let (mesh, seg) = toy_two_part();
        let mut parts = extract_all(&mesh, &seg).unwrap();
        let ut = parts[&PartLabel::UpperTorso].clone();
        let spun = ut.transformed(&axis_angle(&Vec3::y(), 0.5236), &Vec3::new(3.0, 1.0, -2.0));
        parts.insert(PartLabel::UpperTorso, spun);
        let (out, _) = stitch_body(&parts, &seg).unwrap();
        for (a, b) in out.vertices.iter().zip(&mesh.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn offset_interface_lands_on_midpoint() {
        let (mesh, seg) = toy_two_part();
        let mut parts = extract_all(&mesh, &seg).unwrap();
        let ut = parts[&PartLabel::UpperTorso].clone();
        // Push the child's interface ring 2 mm outward radially.
        let mut world = ut.world_vertices();
        for &i in &ut.interfaces[&PartLabel::Pelvis] {
            let r = Vec3::new(world[i].x, 0.0, world[i].z);
            world[i] += r.normalize() * 2.0;
        }
        parts.insert(PartLabel::UpperTorso, ut.with_vertices(world));
        let (out, reports) = stitch_body(&parts, &seg).unwrap();
        for g in 4..8 {
            let r = Vec3::new(out.vertices[g].x, 0.0, out.vertices[g].z).norm();
            assert!((r - (2f64.sqrt() + 1.0)).abs() < 1e-9, "{r}");
        }
        assert!(reports[0].max_gap > 1.9);
        assert!((reports[0].mean_deformation - 1.0).abs() < 1e-9);
    }

    /// Cylinder part along +y: centroid at the origin, one interface ring at
    /// the top (y = 10, index 0..8) and body rings below it.
    fn cylinder() -> PartMesh {
        let mut vertices = Vec::new();
        for y in [10.0, 9.5, 9.2, 8.0, 0.0, -10.0, -9.0] {
            for k in 0..8 {
                let a = k as f64 / 8.0 * std::f64::consts::TAU;
                vertices.push(Vec3::new(5.0 * a.cos(), y, 5.0 * a.sin()));
            }
        }
        let shift = centroid(&vertices);
        let vertices: Vec<Vec3> = vertices.iter().map(|v| v - shift).collect();
        PartMesh {
            label: PartLabel::LeftUpperLeg,
            vertices,
            faces: vec![[0, 1, 2]],
            interfaces: BTreeMap::from([(PartLabel::Pelvis, (0..8).collect())]),
            parent: Some(PartLabel::Pelvis),
            axis: Vec3::y(),
            center: shift,
        }
    }

    #[test]
    fn band_displacement_matches_scalar_oracle() {
        let part = cylinder();
        let world = part.world_vertices();
        let aligned: Vec<Vec3> = world[..8].to_vec();
        let target: Vec<Vec3> = aligned
            .iter()
            .map(|p| p + Vec3::new(p.x, 0.0, p.z).normalize() * 1.0)
            .collect();
        let eps = 0.1;
        let def = stitch_deformation(&part, PartLabel::Pelvis, &target, &aligned, eps).unwrap();
        assert!((def.mean_distance - 1.0).abs() < 1e-12);
        // Target lies outward of the aligned ring: the angle at p̄ between the
        // centre and the aligned point is acute, so the band moves outward.
        assert_eq!(def.direction, -1.0);

        let o = part.center;
        let oc = centroid(&aligned);
        let span = (oc - o).norm();
        for (k, (before, after)) in world.iter().zip(&def.vertices).enumerate().skip(8) {
            // Scalar oracle: axial height above o, distance to the interface.
            let h = before.y - o.y;
            let t = ((span - h) / span).max(0.0);
            let moved = (after - before).norm();
            let radial_after = Vec3::new(after.x, 0.0, after.z).norm();
            if t <= eps {
                assert!((moved - t).abs() < 1e-12, "vertex {k}: {moved} vs {t}");
                assert!((radial_after - (5.0 + t)).abs() < 1e-12);
            } else {
                assert_eq!(after, before, "vertex {k} outside the band moved");
            }
        }
        for (a, b) in def.vertices[..8].iter().zip(&target) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_gap_moves_nothing() {
        let part = cylinder();
        let aligned: Vec<Vec3> = part.world_vertices()[..8].to_vec();
        let def = stitch_deformation(&part, PartLabel::Pelvis, &aligned, &aligned, 0.1).unwrap();
        assert_eq!(def.mean_distance, 0.0);
        assert_eq!(def.vertices, part.world_vertices());
        assert!(stitch_deformation(&part, PartLabel::Pelvis, &aligned, &aligned, 0.0).is_err());
    }
}

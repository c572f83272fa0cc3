use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::linalg::{centroid, plane_fit};
use crate::mesh::TriMesh;
use crate::part::{PartLabel, Side};
use crate::segmentation::{extract_all, PartMesh, PartSegmentation};
use crate::{Error, Result, Vec3};

use super::config::TailorConfig;
use super::optimize::PartCutter;
use super::section::{CuttingPlane, Slicer};
use super::slots::{sided, slot_index, MeasurementVector};

/// Inward offset of interface cuts beyond the ring's own deviation from
/// planarity, so the plane crosses the part surface rather than its rim.
const INTERFACE_OFFSET: f64 = 1e-7;
const FLAT_LENGTH: f64 = 1e-9;

/// Measurements of one part, in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PartMeasurements {
    pub label: PartLabel,
    pub circumference: f64,
    pub length: f64,
    /// Circumference of each interface ring, keyed by neighbour.
    pub interface_circumferences: BTreeMap<PartLabel, f64>,
    pub plane: CuttingPlane,
    /// The part had no extent along its axis past the interface.
    pub flat: bool,
}

fn interface_center(part: &PartMesh, neighbor: PartLabel) -> Result<Vec3> {
    Ok(part.interface_center(neighbor)? + part.center)
}

/// Straight-line part length.
///
/// Two interfaces: distance between their centres. More than two: from the
/// parent interface (for the root, the first interface in label order) to the
/// mean of the other interface centres. A single interface: extent of the
/// part beyond the interface centre along the part axis.
pub fn part_length(part: &PartMesh) -> Result<f64> {
    let centers: BTreeMap<PartLabel, Vec3> = part
        .interfaces
        .keys()
        .map(|&n| Ok((n, interface_center(part, n)?)))
        .collect::<Result<_>>()?;
    match centers.len() {
        0 => Err(Error::Measurement {
            part: part.label,
            message: "part has no interfaces".into(),
        }),
        1 => {
            let c = centers.values().next().expect("one interface") - part.center;
            let ring = part.interface_points(*centers.keys().next().expect("one interface"))?;
            let (n, _) = plane_fit(&ring);
            let off_plane = part
                .vertices
                .iter()
                .map(|v| (v - c).dot(&n).abs())
                .fold(0.0, f64::max);
            if off_plane < FLAT_LENGTH {
                return Ok(0.0);
            }
            let axis = part.axis.normalize();
            let reach = part
                .vertices
                .iter()
                .map(|v| (v - c).dot(&axis))
                .fold(0.0, f64::max);
            Ok(reach)
        }
        2 => {
            let mut it = centers.values();
            Ok((it.next().expect("two") - it.next().expect("two")).norm())
        }
        _ => {
            let from = part
                .parent
                .filter(|p| centers.contains_key(p))
                .unwrap_or(*centers.keys().next().expect("non-empty"));
            let others: Vec<Vec3> = centers
                .iter()
                .filter(|(l, _)| **l != from)
                .map(|(_, c)| *c)
                .collect();
            Ok((centroid(&others) - centers[&from]).norm())
        }
    }
}

/// Circumference of the part surface just inside the interface ring with
/// `neighbor`, cut by the ring's best-fit plane.
pub fn interface_circumference(part: &PartMesh, neighbor: PartLabel) -> Result<f64> {
    let slicer = Slicer::with_axis(&part.world_vertices(), &part.faces, &part.axis);
    interface_circumference_with(&slicer, part, neighbor)
}

fn interface_circumference_with(
    slicer: &Slicer,
    part: &PartMesh,
    neighbor: PartLabel,
) -> Result<f64> {
    let pts: Vec<Vec3> = part
        .interface_points(neighbor)?
        .iter()
        .map(|v| v + part.center)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "interface {}/{neighbor} has fewer than 3 points",
            part.label
        )));
    }
    let (mut normal, spread) = plane_fit(&pts);
    if spread < 1e-9 {
        return Err(Error::Degenerate(format!(
            "interface {}/{neighbor} points are collinear",
            part.label
        )));
    }
    let c = centroid(&pts);
    if (part.center - c).dot(&normal) < 0.0 {
        normal = -normal;
    }
    let deviation = pts
        .iter()
        .map(|p| (p - c).dot(&normal).abs())
        .fold(0.0, f64::max);
    let plane = CuttingPlane {
        point: c + normal * (deviation + INTERFACE_OFFSET),
        normal,
    };
    Ok(slicer.section(&plane)?.perimeter)
}

/// Two-stage circumference, length and the parent-side interface ring.
pub fn measure_part(part: &PartMesh, cfg: &TailorConfig) -> Result<PartMeasurements> {
    let cutter = PartCutter::new(part);
    let wrap = |e: Error| Error::Measurement {
        part: part.label,
        message: e.to_string(),
    };
    let (plane, section) = cutter
        .optimize_cut_point(&part.axis, cfg.range(part.label), cfg)
        .map_err(wrap)?;
    let length = part_length(part).map_err(wrap)?;
    let mut interface_circumferences = BTreeMap::new();
    if let Some(p) = part.parent {
        let c = interface_circumference_with(&cutter.slicer, part, p).map_err(wrap)?;
        interface_circumferences.insert(p, c);
    }
    Ok(PartMeasurements {
        label: part.label,
        circumference: section.perimeter,
        length,
        interface_circumferences,
        plane,
        flat: length < FLAT_LENGTH,
    })
}

/// Measurement vector plus per-part details and any failures.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub vector: MeasurementVector,
    pub parts: BTreeMap<PartLabel, PartMeasurements>,
    pub errors: Vec<(PartLabel, String)>,
    pub warnings: Vec<String>,
}

impl MeasureReport {
    pub fn is_complete(&self) -> bool {
        self.errors.is_empty() && self.vector.is_complete()
    }
}

/// Measures a full body in the canonical frame (y up).
///
/// Each interface ring is measured once, on the child side, and shared with
/// the parent's record. Part failures leave their slots NaN and are listed in
/// the report.
pub fn measure_body(mesh: &TriMesh, seg: &PartSegmentation, cfg: &TailorConfig) -> Result<MeasureReport> {
    cfg.validate()?;
    let parts = extract_all(mesh, seg)?;
    let labels: Vec<PartLabel> = parts.keys().copied().collect();
    let results: Vec<(PartLabel, Result<PartMeasurements>)> = labels
        .par_iter()
        .map(|l| (*l, measure_part(&parts[l], cfg)))
        .collect();

    let mut measured = BTreeMap::new();
    let mut errors = Vec::new();
    for (l, r) in results {
        match r {
            Ok(m) => {
                measured.insert(l, m);
            }
            Err(e) => errors.push((l, e.to_string())),
        }
    }
    let shared: Vec<(PartLabel, PartLabel, f64)> = measured
        .values()
        .flat_map(|m| m.interface_circumferences.iter().map(|(&p, &c)| (p, m.label, c)))
        .collect();
    for (parent, child, c) in shared {
        if let Some(pm) = measured.get_mut(&parent) {
            pm.interface_circumferences.insert(child, c);
        }
    }

    let mut warnings = Vec::new();
    let mut v = MeasurementVector::default();
    let (lo, hi) = mesh.bounds().ok_or(Error::EmptyMesh)?;
    let ext = hi - lo;
    if ext.y < ext.x || ext.y < ext.z {
        let w = format!(
            "vertical extent {:.1} mm is not the largest ({:.1}, {:.1}, {:.1}); mesh may not be in the y-up frame",
            ext.y, ext.x, ext.y, ext.z
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    let set = |v: &mut MeasurementVector, name: &str, x: Option<f64>| {
        if let Some(x) = x {
            v.0[slot_index(name).expect("slot exists")] = x;
        }
    };
    let circ = |l: PartLabel| measured.get(&l).map(|m| m.circumference);
    let len = |l: PartLabel| measured.get(&l).map(|m| m.length);
    let sum = |ls: &[PartLabel]| ls.iter().map(|&l| len(l)).sum::<Option<f64>>();
    let iface = |child: PartLabel, parent: PartLabel| {
        measured
            .get(&child)
            .and_then(|m| m.interface_circumferences.get(&parent).copied())
    };

    use PartLabel::*;
    set(&mut v, "head_circ", circ(Head));
    set(&mut v, "neck_circ", circ(Neck));
    set(&mut v, "shoulder_crotch_len", sum(&[UpperTorso, LowerTorso, Pelvis]));
    set(&mut v, "chest_circ", circ(UpperTorso));
    set(&mut v, "waist_circ", circ(LowerTorso));
    set(&mut v, "pelvis_circ", circ(Pelvis));
    set(&mut v, "head_len", len(Head));
    set(&mut v, "neck_len", len(Neck));
    set(&mut v, "overall_height", Some(ext.y));
    let arm_iface = |l: PartLabel| -> Option<Vec3> {
        let idx = seg.interface(UpperTorso, l).ok()?;
        Some(centroid(&idx.iter().map(|&i| mesh.vertices[i]).collect::<Vec<_>>()))
    };
    if let (Some(a), Some(b)) = (arm_iface(LeftUpperArm), arm_iface(RightUpperArm)) {
        set(&mut v, "shoulder_breadth", Some((a - b).norm()));
    }
    for (side, ua, la, hand, ul, ll, foot) in [
        (Side::Left, LeftUpperArm, LeftLowerArm, LeftHand, LeftUpperLeg, LeftLowerLeg, LeftFoot),
        (Side::Right, RightUpperArm, RightLowerArm, RightHand, RightUpperLeg, RightLowerLeg, RightFoot),
    ] {
        let mut put = |base: &str, x: Option<f64>| {
            if let Some(x) = x {
                v.0[sided(side, base)] = x;
            }
        };
        put("wrist_circ", iface(hand, la));
        put("bicep_circ", circ(ua));
        put("forearm_circ", circ(la));
        put("arm_len", sum(&[ua, la]));
        put("inside_leg_len", sum(&[ul, ll]));
        put("thigh_circ", circ(ul));
        put("calf_circ", circ(ll));
        put("ankle_circ", iface(foot, ll));
        put("hand_circ", circ(hand));
        put("hand_len", len(hand));
        put("foot_circ", circ(foot));
        put("foot_len", len(foot));
    }
    Ok(MeasureReport {
        vector: v,
        parts: measured,
        errors,
        warnings,
    })
}

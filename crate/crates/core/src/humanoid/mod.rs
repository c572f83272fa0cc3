//! Procedural segmented humanoids with analytically known measurements.
//!
//! Bodies stand in an A-pose in the canonical frame (y up, facing +z, left
//! on +x, feet on y = 0). The trunk is a stack of elliptic rings closed by a
//! planar shoulder cap and a planar crotch cap; limbs, neck and head are
//! tubes of revolution sharing their first ring with the parent part. The
//! shoulders end in short stubs that bend from the cap up and over into the
//! arm direction, so arms hang clear of the trunk.

mod build;
mod params;
mod population;

use std::f64::consts::PI;

use crate::linalg::centroid;
use crate::mesh::TriMesh;
use crate::part::{PartLabel, Side};
use crate::segmentation::PartSegmentation;
use crate::tailor::{sided, slot_index, MeasurementVector};
use crate::{Result, Vec3};

pub use params::{HumanoidParams, LimbDims, ARM_ABDUCTION_DEG};
pub use population::{
    read_corpus, sample_params, sample_population, write_corpus, Corpus, CorpusEntry, CorpusManifest,
};

/// A generated body with its segmentation and ground-truth measurements.
#[derive(Debug, Clone)]
pub struct Humanoid {
    pub params: HumanoidParams,
    pub mesh: TriMesh,
    pub segmentation: PartSegmentation,
    pub truth: MeasurementVector,
}

/// Perimeter of a regular polygon inscribed in a circle.
pub fn polygon_perimeter(radius: f64, segments: usize) -> f64 {
    2.0 * segments as f64 * radius * (PI / segments as f64).sin()
}

/// Perimeter of the tessellated elliptic torso ring with half-axes `a`, `b`.
pub fn torso_ring_perimeter(a: f64, b: f64, segments: usize) -> f64 {
    let ring = build::torso_ring(a, b, 0.0, segments);
    (0..ring.len())
        .map(|i| (ring[(i + 1) % ring.len()] - ring[i]).norm())
        .sum()
}

/// Builds the body described by `params`.
pub fn generate_humanoid(params: &HumanoidParams) -> Result<Humanoid> {
    params.validate()?;
    let b = build::build(params);
    let parts = b.part_vertices();
    let tree = PartLabel::ALL
        .iter()
        .filter_map(|&l| Some((l, l.canonical_parent()?)))
        .collect();
    let segmentation = PartSegmentation::new(b.vertices.len(), parts, b.interfaces.clone(), tree)?;
    let mesh = TriMesh::new(b.vertices, b.faces)?;
    Ok(Humanoid {
        params: params.clone(),
        mesh,
        segmentation,
        truth: ground_truth(params),
    })
}

/// Measurements implied by the construction: plateau ring perimeters for
/// circumferences and interface-centre distances for lengths.
pub fn ground_truth(p: &HumanoidParams) -> MeasurementVector {
    let n = p.radial_segments;
    let poly = |r: f64| polygon_perimeter(r, n);
    let mut v = MeasurementVector::default();
    let mut set = |name: &str, x: f64| v.0[slot_index(name).expect("slot exists")] = x;

    let y_top = p.shoulder_height();
    let ends: Vec<Vec3> = [true, false]
        .into_iter()
        .map(|left| {
            let (ex, ey) = p.shoulder(left).end();
            let s = if left { 1.0 } else { -1.0 };
            Vec3::new(s * ex, y_top + ey, 0.0)
        })
        .collect();
    let neck = Vec3::new(0.0, y_top, 0.0);
    let waist_top = Vec3::new(0.0, y_top - p.upper_torso_len, 0.0);
    let upper_torso = (centroid(&[neck, ends[0], ends[1]]) - waist_top).norm();

    set("head_circ", poly(p.head_r));
    set("neck_circ", poly(p.neck_r));
    set(
        "shoulder_crotch_len",
        upper_torso + p.lower_torso_len + p.pelvis_len,
    );
    set("chest_circ", torso_ring_perimeter(p.chest_a, p.chest_b, n));
    set("waist_circ", torso_ring_perimeter(p.waist_a, p.waist_b, n));
    set("pelvis_circ", torso_ring_perimeter(p.hip_a, p.hip_b, n));
    set("overall_height", p.height());
    set("shoulder_breadth", (ends[0] - ends[1]).norm());
    set("head_len", p.head_len);
    set("neck_len", p.neck_len);
    for side in [Side::Left, Side::Right] {
        let l = p.limb(side == Side::Left);
        let mut put = |base: &str, x: f64| v.0[sided(side, base)] = x;
        put("wrist_circ", poly(l.wrist_r));
        put("bicep_circ", poly(l.bicep_r));
        put("forearm_circ", poly(l.forearm_r));
        put("arm_len", l.arm_len());
        put("inside_leg_len", l.leg_len());
        put("thigh_circ", poly(l.thigh_r));
        put("calf_circ", poly(l.calf_r));
        put("ankle_circ", poly(l.ankle_r));
        put("hand_circ", poly(l.hand_r));
        put("hand_len", l.hand_len);
        put("foot_circ", poly(l.foot_r));
        put("foot_len", l.foot_len);
    }
    v
}

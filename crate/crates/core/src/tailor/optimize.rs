//! Two-stage cutting-plane search: the normal minimising the perimeter at a
//! fixed point, then the point along the axis maximising that minimum.

use crate::linalg::orthogonal_unit;
use crate::segmentation::PartMesh;
use crate::{Error, Result, Vec3};

use super::config::TailorConfig;
use super::section::{CrossSection, CuttingPlane, Slicer};

const MAX_REFINE_STEPS: usize = 10_000;

/// Minimises `f` over unit normals within the configured cap around `hint`.
///
/// A coarse azimuth × tilt grid is followed by a compass search in tangent
/// coordinates, halving the step until it drops below the refinement
/// tolerance. Candidates where `f` returns `None` are skipped. The hint wins
/// unless the optimum beats it by more than the relative tie tolerance.
pub fn minimize_over_cap(
    hint: &Vec3,
    cfg: &TailorConfig,
    mut f: impl FnMut(&Vec3) -> Option<f64>,
) -> Option<(Vec3, f64)> {
    let h = hint.normalize();
    let e1 = orthogonal_unit(&h);
    let e2 = h.cross(&e1);
    let cap = cfg.cap_half_angle_deg.to_radians();
    let max_r2 = cap.tan().powi(2) * (1.0 + 1e-12);
    let dir = |u: f64, v: f64| (h + e1 * u + e2 * v).normalize();

    let at_hint = f(&h);
    let mut best = at_hint.map(|p| (0.0, 0.0, p));
    for i in 1..=cfg.tilts {
        let r = (cap * i as f64 / cfg.tilts as f64).tan();
        for j in 0..cfg.azimuths {
            let a = std::f64::consts::TAU * j as f64 / cfg.azimuths as f64;
            let (u, v) = (r * a.cos(), r * a.sin());
            if let Some(p) = f(&dir(u, v)) {
                if best.is_none_or(|b| p < b.2) {
                    best = Some((u, v, p));
                }
            }
        }
    }
    let (mut u, mut v, mut val) = best?;

    let mut step = (cap / cfg.tilts as f64).tan();
    let mut iterations = 0;
    while step >= cfg.refine_tolerance && iterations < MAX_REFINE_STEPS {
        iterations += 1;
        let mut moved: Option<(f64, f64, f64)> = None;
        for (du, dv) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let (cu, cv) = (u + du * step, v + dv * step);
            if cu * cu + cv * cv > max_r2 {
                continue;
            }
            if let Some(p) = f(&dir(cu, cv)) {
                if p < moved.map_or(val, |m| m.2) {
                    moved = Some((cu, cv, p));
                }
            }
        }
        match moved {
            Some(m) => (u, v, val) = m,
            None => step *= 0.5,
        }
    }
    if let Some(p) = at_hint {
        if val >= p - cfg.tie_tolerance * p.abs() {
            return Some((h, p));
        }
    }
    Some((dir(u, v), val))
}

/// Stage one: the plane through `point` with the shortest section.
pub fn optimize_normal_with(
    slicer: &Slicer,
    point: &Vec3,
    hint: &Vec3,
    cfg: &TailorConfig,
) -> Result<(CuttingPlane, f64)> {
    let plane = |n: &Vec3| CuttingPlane {
        point: *point,
        normal: *n,
    };
    let (normal, perimeter) = minimize_over_cap(hint, cfg, |n| slicer.perimeter(&plane(n)))
        .ok_or(Error::EmptyIntersection)?;
    Ok((plane(&normal), perimeter))
}

/// Stage one on a part, searching around the part axis. `point` is in the
/// part's source frame.
pub fn optimize_normal(part: &PartMesh, point: &Vec3, cfg: &TailorConfig) -> Result<CuttingPlane> {
    let slicer = Slicer::with_axis(&part.world_vertices(), &part.faces, &part.axis);
    Ok(optimize_normal_with(&slicer, point, &part.axis, cfg)?.0)
}

/// A part prepared for repeated cutting: world-frame topology plus the
/// extent of its vertices along the axis through the centroid.
#[derive(Debug, Clone)]
pub struct PartCutter {
    pub slicer: Slicer,
    pub axis: Vec3,
    pub center: Vec3,
    /// Minimum and maximum of `(x − center)·axis` over the vertices.
    pub extent: (f64, f64),
}

impl PartCutter {
    pub fn new(part: &PartMesh) -> Self {
        let world = part.world_vertices();
        let axis = part.axis.normalize();
        let (lo, hi) = part
            .vertices
            .iter()
            .map(|v| v.dot(&axis))
            .fold((f64::MAX, f64::MIN), |(lo, hi), s| (lo.min(s), hi.max(s)));
        PartCutter {
            slicer: Slicer::with_axis(&world, &part.faces, &part.axis),
            axis,
            center: part.center,
            extent: (lo, hi),
        }
    }

    /// Point at `fraction` of the axis extent.
    pub fn axis_point(&self, fraction: f64) -> Vec3 {
        let (lo, hi) = self.extent;
        self.center + self.axis * (lo + fraction * (hi - lo))
    }

    /// Stage two: samples cut points uniformly in `range` and keeps the one
    /// whose stage-one perimeter is largest; near-ties go to the sample
    /// closest to the middle of the range.
    pub fn optimize_cut_point(
        &self,
        hint: &Vec3,
        range: [f64; 2],
        cfg: &TailorConfig,
    ) -> Result<(CuttingPlane, CrossSection)> {
        if !(0.0 <= range[0] && range[0] <= range[1] && range[1] <= 1.0) {
            return Err(Error::InvalidArgument(format!("cut range {range:?} outside [0, 1]")));
        }
        let n = cfg.cut_samples.max(1);
        let fractions: Vec<f64> = if n == 1 {
            vec![0.5 * (range[0] + range[1])]
        } else {
            (0..n)
                .map(|k| range[0] + (range[1] - range[0]) * k as f64 / (n - 1) as f64)
                .collect()
        };
        // Stage one never exceeds the perimeter at the hint, so samples whose
        // hint perimeter is already below the best minus the tie band cannot
        // be selected. Visiting high bounds first lets most samples be skipped.
        let h = hint.normalize();
        let mut order: Vec<(f64, f64)> = fractions
            .iter()
            .map(|&t| {
                let bound = self
                    .slicer
                    .perimeter(&CuttingPlane {
                        point: self.axis_point(t),
                        normal: h,
                    })
                    .unwrap_or(f64::INFINITY);
                (t, bound)
            })
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut samples = Vec::with_capacity(n);
        let mut top = f64::NEG_INFINITY;
        for &(t, bound) in &order {
            if bound < top - cfg.cut_tie_tolerance {
                continue;
            }
            if let Ok((plane, p)) = optimize_normal_with(&self.slicer, &self.axis_point(t), hint, cfg) {
                top = top.max(p);
                samples.push((t, plane, p));
            }
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mid = 0.5 * (range[0] + range[1]);
        let (_, plane, _) = samples
            .iter()
            .filter(|s| s.2 >= top - cfg.cut_tie_tolerance)
            .min_by(|a, b| (a.0 - mid).abs().total_cmp(&(b.0 - mid).abs()))
            .ok_or(Error::EmptyIntersection)?;
        let section = self.slicer.section(plane)?;
        Ok((*plane, section))
    }
}

/// Stage two on a part, sampling along the part axis with normals searched
/// around `hint`.
pub fn optimize_cut_point(
    part: &PartMesh,
    hint: &Vec3,
    range: [f64; 2],
    cfg: &TailorConfig,
) -> Result<(CuttingPlane, CrossSection)> {
    PartCutter::new(part).optimize_cut_point(hint, range, cfg)
}

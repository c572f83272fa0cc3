//! Plane/mesh intersection with edge-keyed loop chaining.

use std::cell::Cell;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::linalg::centroid;
use crate::mesh::TriMesh;
use crate::{Error, Result, Vec3};

/// Signed distances below this magnitude are treated as lying on the plane
/// (and counted on the positive side).
const ON_PLANE: f64 = 1e-9;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuttingPlane {
    pub point: Vec3,
    /// Unit normal.
    pub normal: Vec3,
}

impl CuttingPlane {
    /// Normalises `normal`; fails on a zero or non-finite vector.
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) || !point.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("cutting plane needs a finite non-zero normal".into()));
        }
        Ok(CuttingPlane {
            point,
            normal: normal / len,
        })
    }

    pub fn signed_distance(&self, q: &Vec3) -> f64 {
        (q - self.point).dot(&self.normal)
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        CuttingPlane {
            point: self.point + t,
            normal: self.normal,
        }
    }
}

/// Closed loops cut by a plane, with the loop nearest the cut point selected.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub loops: Vec<Vec<Vec3>>,
    pub selected: usize,
    pub perimeter: f64,
}

impl CrossSection {
    pub fn selected_loop(&self) -> &[Vec3] {
        &self.loops[self.selected]
    }

    /// SVG polyline of the selected loop projected onto its plane.
    pub fn to_svg(&self, plane: &CuttingPlane) -> String {
        let e1 = crate::linalg::orthogonal_unit(&plane.normal);
        let e2 = plane.normal.cross(&e1);
        let pts: Vec<(f64, f64)> = self
            .selected_loop()
            .iter()
            .map(|q| {
                let d = q - plane.point;
                (d.dot(&e1), -d.dot(&e2))
            })
            .collect();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let pad = 5.0;
        let mut poly = String::new();
        for (x, y) in &pts {
            let _ = write!(poly, "{:.3},{:.3} ", x - x0 + pad, y - y0 + pad);
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\">\
             <polygon points=\"{}\" fill=\"none\" stroke=\"black\"/>\
             <!-- perimeter {:.3} mm --></svg>\n",
            x1 - x0 + 2.0 * pad,
            y1 - y0 + 2.0 * pad,
            poly.trim_end(),
            self.perimeter
        )
    }
}

pub fn loop_perimeter(points: &[Vec3]) -> f64 {
    let n = points.len();
    (0..n).map(|i| (points[(i + 1) % n] - points[i]).norm()).sum()
}

/// Edge/face adjacency of a triangle mesh, built once and reused for many
/// cuts of the same surface.
///
/// Edges are kept sorted by their extent along the principal axis, so a
/// plane whose normal is close to that axis only visits the edges inside the
/// slab it can reach.
#[derive(Debug, Clone)]
pub struct Slicer {
    vertices: Vec<Vec3>,
    edges: Vec<[u32; 2]>,
    /// Up to two incident faces per edge.
    edge_faces: Vec<[u32; 2]>,
    edge_over_two: Vec<bool>,
    face_edges: Vec<[u32; 3]>,
    axis: Vec3,
    center: Vec3,
    /// Largest vertex distance from the axis line through `center`.
    radius: f64,
    /// Edge ids ordered by their lower axial coordinate.
    order: Vec<u32>,
    order_low: Vec<f64>,
    rank: Vec<u32>,
    /// Longest axial extent of any edge.
    max_span: f64,
}

/// Planes tilted further than this from the slicer axis scan every edge.
const MIN_AXIS_COSINE: f64 = 0.25;
const SLAB_MARGIN: f64 = 1e-6;

impl Slicer {
    /// Slicer whose culling axis is the principal direction of the vertices.
    pub fn new(vertices: &[Vec3], faces: &[[usize; 3]]) -> Self {
        let axis = if vertices.len() >= 2 {
            crate::linalg::principal_axes(vertices)[0].1
        } else {
            Vec3::y()
        };
        Self::with_axis(vertices, faces, &axis)
    }

    /// Slicer culling along `axis`; cuts with normals near it are fastest.
    pub fn with_axis(vertices: &[Vec3], faces: &[[usize; 3]], axis: &Vec3) -> Self {
        let axis = if axis.norm() > 0.0 { axis.normalize() } else { Vec3::y() };
        let mut index: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 2);
        let mut edges = Vec::new();
        let mut edge_faces: Vec<[u32; 2]> = Vec::new();
        let mut edge_over_two = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (f[k] as u32, f[(k + 1) % 3] as u32);
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push([NONE, NONE]);
                    edge_over_two.push(false);
                    (edges.len() - 1) as u32
                });
                let slot = &mut edge_faces[e as usize];
                if slot[0] == NONE {
                    slot[0] = fi as u32;
                } else if slot[1] == NONE {
                    slot[1] = fi as u32;
                } else {
                    edge_over_two[e as usize] = true;
                }
                fe[k] = e;
            }
            face_edges.push(fe);
        }

        let center = if vertices.is_empty() { Vec3::zeros() } else { centroid(vertices) };
        let h = |v: &Vec3| (v - center).dot(&axis);
        let radius = vertices
            .iter()
            .map(|v| ((v - center) - axis * h(v)).norm())
            .fold(0.0, f64::max);
        let span = |e: &[u32; 2]| {
            let (a, b) = (h(&vertices[e[0] as usize]), h(&vertices[e[1] as usize]));
            (a.min(b), a.max(b))
        };
        let mut order: Vec<u32> = (0..edges.len() as u32).collect();
        order.sort_by(|&x, &y| span(&edges[x as usize]).0.total_cmp(&span(&edges[y as usize]).0));
        let order_low: Vec<f64> = order.iter().map(|&e| span(&edges[e as usize]).0).collect();
        let mut rank = vec![0u32; edges.len()];
        for (i, &e) in order.iter().enumerate() {
            rank[e as usize] = i as u32;
        }
        let max_span = edges
            .iter()
            .map(|e| {
                let (lo, hi) = span(e);
                hi - lo
            })
            .fold(0.0, f64::max);
        Slicer {
            vertices: vertices.to_vec(),
            edges,
            edge_faces,
            edge_over_two,
            face_edges,
            axis,
            center,
            radius,
            order,
            order_low,
            rank,
            max_span,
        }
    }

    /// Positions in `order` of the edges that can cross `plane`.
    fn candidates(&self, plane: &CuttingPlane) -> (usize, usize) {
        let all = (0, self.edges.len());
        let cos = plane.normal.dot(&self.axis);
        if cos.abs() < MIN_AXIS_COSINE {
            return all;
        }
        let rel = plane.point - self.center;
        let along = rel.dot(&self.axis);
        let off_axis = (rel - self.axis * along).norm();
        let tan = (1.0 - cos * cos).max(0.0).sqrt() / cos.abs();
        let half = (self.radius + off_axis) * tan + SLAB_MARGIN;
        let from = along - half - self.max_span - SLAB_MARGIN;
        let to = along + half + SLAB_MARGIN;
        let lo = self.order_low.partition_point(|&x| x < from);
        let hi = self.order_low.partition_point(|&x| x <= to);
        (lo, hi)
    }

    pub fn from_mesh(mesh: &TriMesh) -> Self {
        Self::new(&mesh.vertices, &mesh.faces)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// All loops of the plane section, loop selection and perimeter.
    pub fn section(&self, plane: &CuttingPlane) -> Result<CrossSection> {
        let loops = self.loops(plane)?;
        let selected = loops
            .iter()
            .map(|l| (centroid(l) - plane.point).norm_squared())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .ok_or(Error::EmptyIntersection)?;
        let perimeter = loop_perimeter(&loops[selected]);
        Ok(CrossSection {
            loops,
            selected,
            perimeter,
        })
    }

    /// Perimeter of the selected loop; `None` for any failed section.
    pub fn perimeter(&self, plane: &CuttingPlane) -> Option<f64> {
        self.section(plane).ok().map(|s| s.perimeter)
    }

    fn loops(&self, plane: &CuttingPlane) -> Result<Vec<Vec<Vec3>>> {
        let snap = |v: &Vec3| {
            let d = plane.signed_distance(v);
            if d.abs() < ON_PLANE {
                0.0
            } else {
                d
            }
        };
        let (lo, hi) = self.candidates(plane);
        // Each vertex distance is computed at most once per cut.
        let cache: Vec<Cell<f64>> = vec![Cell::new(f64::NAN); self.vertices.len()];
        let dist = |v: u32| {
            let c = &cache[v as usize];
            let d = c.get();
            if d.is_nan() {
                let d = snap(&self.vertices[v as usize]);
                c.set(d);
                d
            } else {
                d
            }
        };
        let crosses = |e: u32| {
            let [a, b] = self.edges[e as usize];
            (dist(a) >= 0.0) != (dist(b) >= 0.0)
        };
        let point = |e: u32| {
            let [a, b] = self.edges[e as usize];
            let (da, db) = (dist(a), dist(b));
            let (pa, pb) = (self.vertices[a as usize], self.vertices[b as usize]);
            pa + (pb - pa) * (da / (da - db))
        };

        let mut visited = vec![false; hi - lo];
        let mut loops = Vec::new();
        for pos in lo..hi {
            let start = self.order[pos];
            if visited[pos - lo] || !crosses(start) {
                continue;
            }
            let mut pts = Vec::new();
            let mut e = start;
            let mut from = NONE;
            loop {
                if self.edge_over_two[e as usize] {
                    let [a, b] = self.edges[e as usize];
                    return Err(Error::NonManifoldEdge(a as usize, b as usize));
                }
                self.mark(&mut visited, lo, e);
                pts.push(point(e));
                let [f0, f1] = self.edge_faces[e as usize];
                let face = if f0 != from { f0 } else { f1 };
                if face == NONE {
                    // Reached the boundary: collect the other direction too.
                    let mut back = self.walk_back(start, &crosses, &point, &mut visited, lo);
                    back.reverse();
                    back.extend(pts);
                    return Err(Error::OpenChain { partial: back });
                }
                let next = self.face_edges[face as usize]
                    .into_iter()
                    .find(|&x| x != e && crosses(x))
                    .expect("a straddling triangle has two crossing edges");
                if next == start {
                    break;
                }
                from = face;
                e = next;
            }
            loops.push(pts);
        }
        if loops.is_empty() {
            return Err(Error::EmptyIntersection);
        }
        Ok(loops)
    }

    /// Marks an edge visited; false if it already was.
    fn mark(&self, visited: &mut [bool], lo: usize, e: u32) -> bool {
        let r = self.rank[e as usize] as usize;
        debug_assert!(r >= lo && r - lo < visited.len(), "crossing edge outside the candidate slab");
        match visited.get_mut(r.wrapping_sub(lo)) {
            Some(seen) => !std::mem::replace(seen, true),
            None => true,
        }
    }

    fn walk_back(
        &self,
        start: u32,
        crosses: &impl Fn(u32) -> bool,
        point: &impl Fn(u32) -> Vec3,
        visited: &mut [bool],
        lo: usize,
    ) -> Vec<Vec3> {
        let mut out = Vec::new();
        let [_, f1] = self.edge_faces[start as usize];
        let mut face = f1;
        let mut e = start;
        while face != NONE {
            let next = self.face_edges[face as usize]
                .into_iter()
                .find(|&x| x != e && crosses(x))
                .expect("a straddling triangle has two crossing edges");
            if self.edge_over_two[next as usize] || !self.mark(visited, lo, next) {
                break;
            }
            out.push(point(next));
            let [g0, g1] = self.edge_faces[next as usize];
            face = if g0 != face { g0 } else { g1 };
            e = next;
        }
        out
    }
}

/// One-shot section of a mesh. Build a [`Slicer`] when cutting repeatedly.
pub fn cross_section(mesh: &TriMesh, plane: &CuttingPlane) -> Result<CrossSection> {
    Slicer::from_mesh(mesh).section(plane)
}

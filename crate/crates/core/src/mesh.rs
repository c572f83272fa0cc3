//! Triangle meshes and Wavefront OBJ I/O.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result, Vec3};

/// Faces whose area falls below this value (mm²) are degenerate.
pub const MIN_FACE_AREA: f64 = 1e-9;

/// Triangulated surface in millimetres with counter-clockwise faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh, checking index bounds, finiteness and face degeneracy.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references a vertex out of range (vertex count {n})"
                )));
            }
        }
        let mesh = TriMesh { vertices, faces };
        if let Some(fi) = (0..mesh.faces.len()).find(|&fi| mesh.is_degenerate(fi)) {
            return Err(Error::InvalidMesh(format!("face {fi} is degenerate")));
        }
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.faces[fi];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    fn is_degenerate(&self, fi: usize) -> bool {
        let [a, b, c] = self.faces[fi];
        a == b || b == c || a == c || self.face_area(fi) <= MIN_FACE_AREA
    }

    /// Applies a point map to every vertex; topology is unchanged.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Axis-aligned bounding box `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (lo.inf(v), hi.sup(v))
        }))
    }

    /// Pure inspection of topology and geometry.
    pub fn validate(&self) -> ValidationReport {
        let mut edge_faces: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edge_faces.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut non_manifold: Vec<(usize, usize)> = edge_faces
            .iter()
            .filter(|(_, &c)| c > 2)
            .map(|(&e, _)| e)
            .collect();
        non_manifold.sort_unstable();
        let boundary_edges = edge_faces.values().filter(|&&c| c == 1).count();
        let degenerate_faces = (0..self.faces.len())
            .filter(|&fi| {
                let f = self.faces[fi];
                f.iter().any(|&i| i >= self.vertices.len()) || self.is_degenerate(fi)
            })
            .collect();
        ValidationReport {
            vertex_count: self.vertices.len(),
            face_count: self.faces.len(),
            degenerate_faces,
            non_manifold_edges: non_manifold,
            boundary_edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub degenerate_faces: Vec<usize>,
    /// Edges shared by more than two faces.
    pub non_manifold_edges: Vec<(usize, usize)>,
    pub boundary_edges: usize,
}

impl ValidationReport {
    pub fn is_manifold(&self) -> bool {
        self.non_manifold_edges.is_empty()
    }

    pub fn is_watertight(&self) -> bool {
        self.is_manifold() && self.boundary_edges == 0 && self.degenerate_faces.is_empty()
    }
}

/// Parses OBJ text. Only `v` and `f` records are interpreted; polygons are
/// fan-triangulated and 1-based (or negative relative) indices converted.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| Error::Parse {
                            line,
                            message: format!("bad coordinate {t:?}"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: "vertex needs three coordinates".into(),
                    });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|t| resolve_index(t, vertices.len(), line))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::Parse {
                        line,
                        message: "face needs at least three vertices".into(),
                    });
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    TriMesh::new(vertices, faces)
}

fn resolve_index(token: &str, count: usize, line: usize) -> Result<usize> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad face index {token:?}"),
    })?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        -1
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(Error::Parse {
            line,
            message: format!("face index {raw} out of range (vertex count {count})"),
        });
    }
    Ok(resolved as usize)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

/// Serializes to OBJ with six decimal places.
pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 20);
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn save_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_obj_string(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) fn tetrahedron() -> TriMesh {
    TriMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";

    #[test]
    fn loads_tetrahedron() {
        let m = parse_obj(TETRA).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.face_count(), 4);
        assert_eq!(m.faces[0], [0, 2, 1]);
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn slashes_and_comments_are_tolerated() {
        let m = parse_obj("# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 -1\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 9\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_obj("# nothing\n"), Err(Error::EmptyMesh)));
    }

    #[test]
    fn degenerate_face_is_rejected() {
        let err = TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn round_trip_preserves_faces_and_vertices() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.obj");
        let mut m = tetrahedron();
        m.vertices[3].z = 1.234_567_8;
        save_obj(&m, &path).unwrap();
        let back = load_obj(&path).unwrap();
        assert_eq!(back.faces, m.faces);
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_faces_writes_vertices_only() {
        let m = TriMesh::new(vec![Vec3::new(1.0, 2.0, 3.0)], vec![]).unwrap();
        let text = to_obj_string(&m);
        assert!(text.lines().all(|l| l.starts_with("v ")));
        assert_eq!(parse_obj(&text).unwrap().vertex_count(), 1);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = save_obj(&tetrahedron(), "/nonexistent-dir/x/y.obj").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn validation_counts() {
        let r = tetrahedron().validate();
        assert!(r.is_watertight());
        assert_eq!(r.boundary_edges, 0);

        let tri = TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(tri.validate().boundary_edges, 3);

        let fin = TriMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.5, 1.0, 0.0),
                Vec3::new(0.5, -1.0, 0.0),
                Vec3::new(0.5, 0.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        )
        .unwrap();
        let r = fin.validate();
        assert_eq!(r.non_manifold_edges, vec![(0, 1)]);
        assert!(!r.is_manifold());
    }
}

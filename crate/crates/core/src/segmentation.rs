//! Part segmentation of a template mesh and extraction of part-centred meshes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::{centroid, principal_axes};
use crate::mesh::TriMesh;
use crate::part::PartLabel;
use crate::{Error, Result, Vec3};

/// Interface lists need at least this many points for Procrustes and plane fits.
pub const MIN_INTERFACE_POINTS: usize = 3;

/// Assignment of template vertices to parts, shared interface rings and the
/// kinematic tree (child → parent, rooted at the pelvis).
#[derive(Debug, Clone, PartialEq)]
pub struct PartSegmentation {
    vertex_count: usize,
    parts: BTreeMap<PartLabel, Vec<usize>>,
    interfaces: BTreeMap<(PartLabel, PartLabel), Vec<usize>>,
    tree: BTreeMap<PartLabel, PartLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SegmentationDoc {
    vertex_count: usize,
    parts: BTreeMap<PartLabel, Vec<usize>>,
    interfaces: Vec<InterfaceDoc>,
    tree: BTreeMap<PartLabel, PartLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InterfaceDoc {
    a: PartLabel,
    b: PartLabel,
    indices: Vec<usize>,
}

fn key(a: PartLabel, b: PartLabel) -> (PartLabel, PartLabel) {
    (a.min(b), a.max(b))
}

impl PartSegmentation {
    /// Builds and validates a segmentation. Part vertex lists are sorted and
    /// deduplicated; interface lists keep their order (it defines correspondence).
    pub fn new(
        vertex_count: usize,
        parts: BTreeMap<PartLabel, Vec<usize>>,
        interfaces: Vec<(PartLabel, PartLabel, Vec<usize>)>,
        tree: BTreeMap<PartLabel, PartLabel>,
    ) -> Result<Self> {
        let parts = parts
            .into_iter()
            .map(|(l, mut v)| {
                v.sort_unstable();
                v.dedup();
                (l, v)
            })
            .collect();
        let mut iface = BTreeMap::new();
        for (a, b, idx) in interfaces {
            if a == b {
                return Err(Error::Segmentation(format!("interface of {a} with itself")));
            }
            if iface.insert(key(a, b), idx).is_some() {
                return Err(Error::Segmentation(format!("duplicate interface {a}/{b}")));
            }
        }
        let seg = PartSegmentation {
            vertex_count,
            parts,
            interfaces: iface,
            tree,
        };
        seg.check()?;
        Ok(seg)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Segmentation(m));
        if self.parts.is_empty() {
            return bad("no parts".into());
        }
        let mut owners = vec![Vec::<PartLabel>::new(); self.vertex_count];
        for (&label, verts) in &self.parts {
            if verts.is_empty() {
                return bad(format!("part {label} has no vertices"));
            }
            for &v in verts {
                if v >= self.vertex_count {
                    return bad(format!("part {label} index {v} >= vertex count"));
                }
                owners[v].push(label);
            }
        }
        if let Some(v) = owners.iter().position(|o| o.is_empty()) {
            return bad(format!("vertex {v} belongs to no part"));
        }

        // Tree: single root (pelvis when present), acyclic, connected.
        for (&child, &parent) in &self.tree {
            if !self.parts.contains_key(&child) || !self.parts.contains_key(&parent) {
                return bad(format!("tree edge {child}->{parent} names a missing part"));
            }
        }
        let roots: Vec<PartLabel> = self
            .parts
            .keys()
            .copied()
            .filter(|l| !self.tree.contains_key(l))
            .collect();
        if roots.len() != 1 {
            return bad(format!("tree must have exactly one root, found {roots:?}"));
        }
        if self.parts.contains_key(&PartLabel::Pelvis) && roots[0] != PartLabel::Pelvis {
            return bad(format!("tree root is {} instead of pelvis", roots[0]));
        }
        for &start in self.parts.keys() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(&p) = self.tree.get(&cur) {
                cur = p;
                steps += 1;
                if steps > self.parts.len() {
                    return bad(format!("cycle in kinematic tree through {start}"));
                }
            }
        }

        for (&(a, b), idx) in &self.interfaces {
            if idx.len() < MIN_INTERFACE_POINTS {
                return bad(format!(
                    "interface {a}/{b} has {} points, needs at least {MIN_INTERFACE_POINTS}",
                    idx.len()
                ));
            }
            if self.tree.get(&a) != Some(&b) && self.tree.get(&b) != Some(&a) {
                return bad(format!("interface {a}/{b} is not a kinematic tree edge"));
            }
            let (pa, pb) = match (self.parts.get(&a), self.parts.get(&b)) {
                (Some(pa), Some(pb)) => (pa, pb),
                _ => return bad(format!("interface {a}/{b} names a missing part")),
            };
            let mut seen = BTreeSet::new();
            for &v in idx {
                if !seen.insert(v) {
                    return bad(format!("interface {a}/{b} repeats vertex {v}"));
                }
                if pa.binary_search(&v).is_err() || pb.binary_search(&v).is_err() {
                    return bad(format!("interface {a}/{b} vertex {v} not in both parts"));
                }
            }
        }
        for (&child, &parent) in &self.tree {
            if !self.interfaces.contains_key(&key(child, parent)) {
                return bad(format!("tree edge {child}->{parent} has no interface"));
            }
        }

        // Overlap only on interface points of the owning pairs.
        let iface_sets: BTreeMap<_, BTreeSet<usize>> = self
            .interfaces
            .iter()
            .map(|(k, v)| (*k, v.iter().copied().collect()))
            .collect();
        for (v, own) in owners.iter().enumerate() {
            for i in 0..own.len() {
                for j in i + 1..own.len() {
                    let ok = iface_sets
                        .get(&key(own[i], own[j]))
                        .is_some_and(|s| s.contains(&v));
                    if !ok {
                        return bad(format!(
                            "vertex {v} shared by {} and {} outside an interface",
                            own[i], own[j]
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn labels(&self) -> impl Iterator<Item = PartLabel> + '_ {
        self.parts.keys().copied()
    }

    pub fn contains(&self, label: PartLabel) -> bool {
        self.parts.contains_key(&label)
    }

    pub fn part_vertices(&self, label: PartLabel) -> Result<&[usize]> {
        self.parts
            .get(&label)
            .map(Vec::as_slice)
            .ok_or(Error::MissingPart(label))
    }

    /// Ordered interface indices between two parts (either argument order).
    pub fn interface(&self, a: PartLabel, b: PartLabel) -> Result<&[usize]> {
        self.interfaces
            .get(&key(a, b))
            .map(Vec::as_slice)
            .ok_or(Error::MissingInterface(a, b))
    }

    pub fn interfaces(&self) -> impl Iterator<Item = (PartLabel, PartLabel, &[usize])> + '_ {
        self.interfaces.iter().map(|(&(a, b), v)| (a, b, v.as_slice()))
    }

    pub fn neighbors(&self, label: PartLabel) -> Vec<PartLabel> {
        self.interfaces
            .keys()
            .filter_map(|&(a, b)| {
                if a == label {
                    Some(b)
                } else if b == label {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn parent(&self, label: PartLabel) -> Option<PartLabel> {
        self.tree.get(&label).copied()
    }

    pub fn root(&self) -> PartLabel {
        self.labels()
            .find(|l| !self.tree.contains_key(l))
            .expect("validated segmentation has a root")
    }

    pub fn children(&self, label: PartLabel) -> Vec<PartLabel> {
        self.tree
            .iter()
            .filter(|(_, &p)| p == label)
            .map(|(&c, _)| c)
            .collect()
    }

    /// Parent-before-child order; siblings in fixed label order.
    pub fn traversal_order(&self) -> Vec<PartLabel> {
        let mut order = vec![self.root()];
        let mut i = 0;
        while i < order.len() {
            order.extend(self.children(order[i]));
            i += 1;
        }
        order
    }

    /// Local index of a global vertex within a part.
    pub fn local_index(&self, label: PartLabel, global: usize) -> Option<usize> {
        self.parts.get(&label)?.binary_search(&global).ok()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    fn to_doc(&self) -> SegmentationDoc {
        SegmentationDoc {
            vertex_count: self.vertex_count,
            parts: self.parts.clone(),
            interfaces: self
                .interfaces
                .iter()
                .map(|(&(a, b), v)| InterfaceDoc {
                    a,
                    b,
                    indices: v.clone(),
                })
                .collect(),
            tree: self.tree.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SegmentationDoc =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::new(
            doc.vertex_count,
            doc.parts,
            doc.interfaces
                .into_iter()
                .map(|i| (i.a, i.b, i.indices))
                .collect(),
            doc.tree,
        )
    }

    pub(crate) fn serialize_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_doc()).expect("segmentation serializes")
    }

    pub(crate) fn from_value(v: serde_json::Value) -> Result<Self> {
        Self::from_json(&v.to_string())
    }
}

pub fn load_segmentation(path: impl AsRef<Path>) -> Result<PartSegmentation> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PartSegmentation::from_json(&text)
}

pub fn save_segmentation(seg: &PartSegmentation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, seg.to_json()?).map_err(|e| Error::io(path, e))
}

/// A single body part in its canonical part-centred frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PartMesh {
    pub label: PartLabel,
    /// Vertices relative to `center`; their centroid is the origin.
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Local interface indices per neighbouring part, in interface order.
    pub interfaces: BTreeMap<PartLabel, Vec<usize>>,
    pub parent: Option<PartLabel>,
    /// Unit axis from the parent interface towards the far end of the part.
    pub axis: Vec3,
    /// Centroid of the part in the source frame.
    pub center: Vec3,
}

impl PartMesh {
    pub fn interface_points(&self, neighbor: PartLabel) -> Result<Vec<Vec3>> {
        let idx = self
            .interfaces
            .get(&neighbor)
            .ok_or(Error::MissingInterface(self.label, neighbor))?;
        Ok(idx.iter().map(|&i| self.vertices[i]).collect())
    }

    pub fn interface_center(&self, neighbor: PartLabel) -> Result<Vec3> {
        Ok(centroid(&self.interface_points(neighbor)?))
    }

    /// Vertices in the source frame.
    pub fn world_vertices(&self) -> Vec<Vec3> {
        self.vertices.iter().map(|v| v + self.center).collect()
    }

    /// Same part with new local vertex positions; the vertices are re-centred
    /// and `center` shifted so world positions are preserved.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> PartMesh {
        let c = centroid(&vertices);
        let mut out = self.clone();
        out.vertices = vertices.into_iter().map(|v| v - c).collect();
        out.center = self.center + c;
        out.axis = part_axis(&out.vertices, &out.interfaces, out.parent);
        out
    }

    /// Applies a rigid motion `x ↦ r·x + t` in the source frame.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, t: &Vec3) -> PartMesh {
        let mut out = self.clone();
        out.vertices = self.vertices.iter().map(|v| r * v).collect();
        out.center = r * self.center + t;
        out.axis = r * self.axis;
        out
    }

    /// Vertices that are interface points of any neighbour.
    pub fn interface_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for idx in self.interfaces.values() {
            for &i in idx {
                mask[i] = true;
            }
        }
        mask
    }
}

/// Axis rule: single-interface (terminal) parts use the dominant principal
/// direction; other parts point from the parent interface centre to the mean
/// of the child interface centres; the root points from its centroid to the
/// interface of its first child in label order.
pub(crate) fn part_axis(
    vertices: &[Vec3],
    interfaces: &BTreeMap<PartLabel, Vec<usize>>,
    parent: Option<PartLabel>,
) -> Vec3 {
    let center_of = |idx: &Vec<usize>| centroid(&idx.iter().map(|&i| vertices[i]).collect::<Vec<_>>());
    let c = centroid(vertices);
    let pca = principal_axes(vertices)[0].1;

    let directed = match parent {
        Some(p) if interfaces.len() >= 2 => {
            let from = center_of(&interfaces[&p]);
            let kids: Vec<Vec3> = interfaces
                .iter()
                .filter(|(l, _)| **l != p)
                .map(|(_, idx)| center_of(idx))
                .collect();
            Some(centroid(&kids) - from)
        }
        None if !interfaces.is_empty() => {
            let first = interfaces.values().next().expect("non-empty");
            Some(center_of(first) - c)
        }
        _ => None,
    };
    if let Some(d) = directed {
        if d.norm() > 1e-9 {
            return d.normalize();
        }
    }
    // Terminal part: orient the principal direction away from its interface.
    let reference = match interfaces.values().next() {
        Some(idx) => c - center_of(idx),
        None => {
            let k = pca.iamax();
            if pca[k] < 0.0 {
                return -pca;
            }
            return pca;
        }
    };
    if pca.dot(&reference) < 0.0 {
        -pca
    } else {
        pca
    }
}

/// Local faces and local interface lists of a part, derived from global faces.
pub fn part_topology(
    faces: &[[usize; 3]],
    seg: &PartSegmentation,
    label: PartLabel,
) -> Result<(Vec<[usize; 3]>, BTreeMap<PartLabel, Vec<usize>>)> {
    seg.part_vertices(label)?;
    let local = |g: usize| seg.local_index(label, g);
    let part_faces: Vec<[usize; 3]> = faces
        .iter()
        .filter_map(|f| Some([local(f[0])?, local(f[1])?, local(f[2])?]))
        .collect();
    if part_faces.is_empty() {
        return Err(Error::EmptyPart(label));
    }
    let interfaces = seg
        .neighbors(label)
        .into_iter()
        .map(|n| {
            let idx = seg
                .interface(label, n)
                .expect("neighbor has an interface")
                .iter()
                .map(|&g| local(g).expect("interface vertex in part"))
                .collect();
            (n, idx)
        })
        .collect();
    Ok((part_faces, interfaces))
}

/// Builds a part from world-frame vertices and its topology.
pub fn part_from_world(
    label: PartLabel,
    world: &[Vec3],
    faces: Vec<[usize; 3]>,
    interfaces: BTreeMap<PartLabel, Vec<usize>>,
    parent: Option<PartLabel>,
) -> PartMesh {
    let center = centroid(world);
    let vertices: Vec<Vec3> = world.iter().map(|v| v - center).collect();
    let axis = part_axis(&vertices, &interfaces, parent);
    PartMesh {
        label,
        vertices,
        faces,
        interfaces,
        parent,
        axis,
        center,
    }
}

/// Extracts one part into its canonical frame (centroid at the origin).
pub fn extract_part(mesh: &TriMesh, seg: &PartSegmentation, label: PartLabel) -> Result<PartMesh> {
    if mesh.vertex_count() != seg.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: seg.vertex_count(),
            got: mesh.vertex_count(),
        });
    }
    let (faces, interfaces) = part_topology(&mesh.faces, seg, label)?;
    let world: Vec<Vec3> = seg
        .part_vertices(label)?
        .iter()
        .map(|&g| mesh.vertices[g])
        .collect();
    Ok(part_from_world(label, &world, faces, interfaces, seg.parent(label)))
}

/// Extracts every part present in the segmentation.
pub fn extract_all(mesh: &TriMesh, seg: &PartSegmentation) -> Result<BTreeMap<PartLabel, PartMesh>> {
    seg.labels()
        .map(|l| Ok((l, extract_part(mesh, seg, l)?)))
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two stacked square tubes (pelvis below, upper torso above) sharing a
    /// four-vertex ring, closed at both ends.
    pub(crate) fn toy_two_part() -> (TriMesh, PartSegmentation) {
        let ring = |y: f64| -> Vec<Vec3> {
            vec![
                Vec3::new(1.0, y, 1.0),
                Vec3::new(1.0, y, -1.0),
                Vec3::new(-1.0, y, -1.0),
                Vec3::new(-1.0, y, 1.0),
            ]
        };
        let mut v = Vec::new();
        for y in [0.0, 3.0, 6.0] {
            v.extend(ring(y));
        }
        let mut faces = Vec::new();
        for r in 0..2 {
            for k in 0..4 {
                let (a, b) = (r * 4 + k, r * 4 + (k + 1) % 4);
                let (c, d) = (a + 4, b + 4);
                faces.push([a, b, d]);
                faces.push([a, d, c]);
            }
        }
        faces.push([0, 3, 2]);
        faces.push([0, 2, 1]);
        faces.push([8, 9, 10]);
        faces.push([8, 10, 11]);
        let mesh = TriMesh::new(v, faces).unwrap();
        let parts = BTreeMap::from([
            (PartLabel::Pelvis, (0..8).collect()),
            (PartLabel::UpperTorso, (4..12).collect()),
        ]);
        let seg = PartSegmentation::new(
            12,
            parts,
            vec![(PartLabel::Pelvis, PartLabel::UpperTorso, vec![4, 5, 6, 7])],
            BTreeMap::from([(PartLabel::UpperTorso, PartLabel::Pelvis)]),
        )
        .unwrap();
        (mesh, seg)
    }

    #[test]
    fn toy_segmentation_round_trips_json() {
        let (_, seg) = toy_two_part();
        let back = PartSegmentation::from_json(&seg.to_json().unwrap()).unwrap();
        assert_eq!(back, seg);
    }

    #[test]
    fn cycle_is_rejected() {
        let parts = BTreeMap::from([
            (PartLabel::Pelvis, vec![0, 1, 2]),
            (PartLabel::LowerTorso, vec![0, 1, 2, 3]),
            (PartLabel::UpperTorso, vec![3, 0, 1, 2]),
        ]);
        let tree = BTreeMap::from([
            (PartLabel::LowerTorso, PartLabel::UpperTorso),
            (PartLabel::UpperTorso, PartLabel::LowerTorso),
        ]);
        let err = PartSegmentation::new(4, parts, vec![], tree).unwrap_err();
        assert!(matches!(err, Error::Segmentation(_)));
    }

    #[test]
    fn cycle_in_json_is_rejected() {
        let doc = r#"{"vertex_count": 3, "parts": {"pelvis": [0,1,2], "neck": [0,1,2], "head": [0,1,2]},
            "interfaces": [], "tree": {"neck": "head", "head": "neck"}}"#;
        assert!(PartSegmentation::from_json(doc).is_err());
    }

    #[test]
    fn short_interface_is_rejected() {
        let parts = BTreeMap::from([
            (PartLabel::Pelvis, vec![0, 1, 2]),
            (PartLabel::UpperTorso, vec![1, 2, 3]),
        ]);
        let err = PartSegmentation::new(
            4,
            parts,
            vec![(PartLabel::Pelvis, PartLabel::UpperTorso, vec![1, 2])],
            BTreeMap::from([(PartLabel::UpperTorso, PartLabel::Pelvis)]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("at least 3"), "{err}");
    }

    #[test]
    fn interface_must_be_tree_edge() {
        let parts = BTreeMap::from([
            (PartLabel::Pelvis, vec![0, 1, 2, 3]),
            (PartLabel::LowerTorso, vec![3, 4, 5, 6, 7]),
            (PartLabel::UpperTorso, vec![0, 1, 2, 8]),
        ]);
        let err = PartSegmentation::new(
            9,
            parts,
            vec![
                (PartLabel::Pelvis, PartLabel::UpperTorso, vec![0, 1, 2]),
                (PartLabel::Pelvis, PartLabel::LowerTorso, vec![3, 3, 3]),
            ],
            BTreeMap::from([
                (PartLabel::LowerTorso, PartLabel::Pelvis),
                (PartLabel::UpperTorso, PartLabel::LowerTorso),
            ]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("not a kinematic tree edge"), "{err}");
    }

    #[test]
    fn extract_centres_part_and_orients_axis() {
        let (mesh, seg) = toy_two_part();
        let shifted = mesh.map_vertices(|v| v + Vec3::new(10.0, 20.0, 30.0));
        let p = extract_part(&shifted, &seg, PartLabel::UpperTorso).unwrap();
        assert!(centroid(&p.vertices).norm() < 1e-9);
        assert!((p.center - Vec3::new(10.0, 24.5, 30.0)).norm() < 1e-9);
        assert_eq!(p.faces.len(), 10);
        assert_eq!(p.interfaces[&PartLabel::Pelvis], vec![0, 1, 2, 3]);
        // Terminal part: points away from the pelvis interface.
        assert!(p.axis.y > 0.99);
        let pelvis = extract_part(&mesh, &seg, PartLabel::Pelvis).unwrap();
        assert!(pelvis.axis.y > 0.999);
        assert!((pelvis.axis.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_label_is_an_error() {
        let (mesh, seg) = toy_two_part();
        assert!(matches!(
            extract_part(&mesh, &seg, PartLabel::Head),
            Err(Error::MissingPart(PartLabel::Head))
        ));
    }

    #[test]
    fn traversal_starts_at_root() {
        let (_, seg) = toy_two_part();
        assert_eq!(
            seg.traversal_order(),
            vec![PartLabel::Pelvis, PartLabel::UpperTorso]
        );
    }
}

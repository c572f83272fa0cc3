use bodyshape::humanoid::{generate_humanoid, sample_population, HumanoidParams};
use bodyshape::tailor::{measure_body, TailorConfig, SLOTS};
use bodyshape::{TriMesh, Vec3};

fn normal(mesh: &TriMesh, f: usize) -> Vec3 {
    let [a, b, c] = mesh.faces[f].map(|i| mesh.vertices[i]);
    (b - a).cross(&(c - a))
}

#[test]
fn population_is_valid_and_shares_the_template_faces() {
    let template = generate_humanoid(&HumanoidParams::default()).unwrap();
    let bodies = sample_population(11, 200, 0.05).unwrap();
    for (i, b) in bodies.iter().enumerate() {
        assert!(b.mesh.validate().is_watertight(), "body {i}");
        assert_eq!(b.mesh.faces, template.mesh.faces, "body {i}");
        let flipped = (0..b.mesh.face_count())
            .filter(|&f| normal(&b.mesh, f).dot(&normal(&template.mesh, f)) <= 0.0)
            .count();
        assert_eq!(flipped, 0, "body {i} has folded faces");
    }
}

#[test]
fn measured_bodies_match_their_construction() {
    let cfg = TailorConfig::default();
    for b in sample_population(12, 4, 0.05).unwrap() {
        let report = measure_body(&b.mesh, &b.segmentation, &cfg).unwrap();
        assert!(report.is_complete(), "{:?}", report.errors);
        for (s, info) in SLOTS.iter().enumerate() {
            let rel = (report.vector.0[s] - b.truth.0[s]).abs() / b.truth.0[s];
            assert!(rel < 1e-3, "{}: measured {} truth {}", info.name, report.vector.0[s], b.truth.0[s]);
        }
    }
}

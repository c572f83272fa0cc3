"""Quick end-to-end check of the Python bindings."""

import math
import tempfile
from pathlib import Path

import bodyshape_py as bs


def main():
    body = bs.generate_humanoid()
    assert body.mesh.is_watertight()
    measured = bs.measure(body.mesh, body.segmentation)
    for name in ("chest_circ", "waist_circ", "pelvis_circ"):
        truth = body.truth[name]
        assert abs(measured[name] - truth) < 1e-3 * truth, (name, measured[name], truth)

    bodies = bs.sample_population(seed=3, n=8, spread=0.04)
    meshes = [b.mesh for b in bodies]
    model = bs.ShapeModel.fit(meshes, bodies[0].segmentation, components=3)
    ratios = model.explained_variance()
    assert all(r[0] >= r[-1] for r in ratios.values())

    mapping = bs.MeasurementMap.fit(model, [b.truth for b in bodies], meshes)
    rebuilt = mapping.reconstruct(model, bodies[2].truth)
    assert len(rebuilt) == len(bodies[2].mesh)

    wider, after = mapping.edit(model, bodies[1].mesh, {"waist": 20.0})
    before = bs.measure(bodies[1].mesh, model.segmentation)["waist_circ"]
    assert after["waist_circ"] > before + 10.0, (before, after["waist_circ"])

    pgm = bs.render_silhouette(body.mesh, "frontal")
    assert pgm.startswith(b"P5\n200 480\n255\n")
    regressor = bs.SilhouetteRegressor.train(meshes, [b.truth for b in bodies])
    guess = regressor.predict(body.mesh)
    assert all(math.isfinite(v) and v > 0 for v in guess.values())

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.json"
        model.save(str(path))
        assert bs.ShapeModel.load(str(path)).total_components() == model.total_components()

    print("python smoke test passed:", len(bs.slot_names()), "slots,", len(body.mesh), "vertices")


if __name__ == "__main__":
    main()

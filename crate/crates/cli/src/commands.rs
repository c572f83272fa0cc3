use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bodyshape::humanoid::{generate_humanoid, read_corpus, sample_params, write_corpus, Humanoid};
use bodyshape::mesh::{load_obj, save_obj, TriMesh};
use bodyshape::segmentation::{load_segmentation, PartSegmentation};
use bodyshape::semantic::{
    build_mapping_dataset, edit_body, fit_linear_map, load_map, population_manifest_csv, reconstruct_body,
    save_map, MappingDataset,
};
use bodyshape::shape_model::{explained_variance, fit_body_model, load_model, save_model, ShapeCoeffs};
use bodyshape::silhouette::{
    evaluate, load_regressor, render_silhouette, save_regressor, train_regressor, SilhouetteFeatures, View,
};
use bodyshape::tailor::{from_csv, measure_body, resolve_slot, to_csv, MeasurementVector, SLOTS};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{pick, PipelineConfig};
use crate::{
    BuildModelArgs, CliError, EditArgs, EvalArgs, FitMapArgs, MeasureArgs, ReconstructArgs, RenderArgs,
    SynthArgs, TrainRegArgs, ViewArg,
};

type Result<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `out`, or stdout when no path is given.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Explicit output path, else `name` inside the configured output directory.
fn output(explicit: &Option<PathBuf>, cfg: &PipelineConfig, name: &str) -> Result<PathBuf> {
    match (explicit, &cfg.paths.output) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(dir)) => Ok(dir.join(name)),
        (None, None) => Err(CliError::Usage(format!("no output path given for {name}"))),
    }
}

fn load_corpus(explicit: &Option<PathBuf>, cfg: &PipelineConfig) -> Result<Vec<Humanoid>> {
    let dir = pick(explicit, &cfg.paths.corpus, "corpus")?;
    let corpus = read_corpus(&dir)?;
    if corpus.bodies.is_empty() {
        return Err(CliError::Usage(format!("corpus {} is empty", dir.display())));
    }
    Ok(corpus.bodies)
}

fn partial(failures: &[(usize, String)], what: &str) -> Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = failures.iter().map(|(i, e)| format!("#{i}: {e}")).collect();
    Err(CliError::Partial(format!(
        "{} {what} failed: {}",
        failures.len(),
        list.join("; ")
    )))
}

pub fn synth(cfg: &PipelineConfig, a: &SynthArgs) -> Result<()> {
    let out = pick(&a.out, &cfg.paths.corpus, "output corpus")?;
    let spread = a.spread.unwrap_or(cfg.spread);
    let mut params = sample_params(cfg.seed, a.n, spread)?;
    if a.radial_segments.is_some() || a.rings.is_some() {
        for p in &mut params {
            p.radial_segments = a.radial_segments.unwrap_or(p.radial_segments);
            p.rings_per_part = a.rings.unwrap_or(p.rings_per_part);
        }
        params[0]
            .validate()
            .map_err(|e| CliError::Usage(format!("tessellation: {e}")))?;
    }
    let results: Vec<_> = params.par_iter().map(generate_humanoid).collect();
    let mut bodies = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(h) => bodies.push(h),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    write_corpus(&out, &bodies, Some(cfg.seed), Some(spread))?;
    if !failures.is_empty() {
        let list: Vec<_> = failures.iter().map(|(i, e)| json!({"sample": i, "error": e})).collect();
        write_file(&out.join("failures.json"), serde_json::to_string_pretty(&list).expect("json"))?;
    }
    println!("wrote {} subjects to {}", bodies.len(), out.display());
    partial(&failures, "subjects")
}

pub fn build_model(cfg: &PipelineConfig, a: &BuildModelArgs) -> Result<()> {
    let k = a.k.map_or(cfg.components, |k| k as usize);
    let out = output(&a.out, cfg, "model.json")?;
    let bodies = load_corpus(&a.corpus, cfg)?;
    let meshes: Vec<TriMesh> = bodies.iter().map(|b| b.mesh.clone()).collect();
    let model = fit_body_model(&meshes, &bodies[0].segmentation, k)?;
    save_model(&model, &out)?;
    println!("part,components,explained_variance");
    for (label, pca) in &model.parts {
        let ev: f64 = explained_variance(pca).iter().sum();
        println!("{label},{},{ev:.6}", pca.k());
    }
    println!("total,{},", model.total_components());
    Ok(())
}

pub fn measure(cfg: &PipelineConfig, a: &MeasureArgs) -> Result<()> {
    let subjects: Vec<(TriMesh, PartSegmentation)> = if a.corpus.is_some() {
        load_corpus(&a.corpus, cfg)?
            .into_iter()
            .map(|b| (b.mesh, b.segmentation))
            .collect()
    } else {
        if a.mesh.is_empty() {
            return Err(CliError::Usage("give --mesh or --corpus".into()));
        }
        let seg = match (&a.seg, &a.model) {
            (Some(s), _) => load_segmentation(s)?,
            (None, Some(m)) => load_model(m)?.segmentation,
            (None, None) => return Err(CliError::Usage("missing segmentation: give --seg or --model".into())),
        };
        a.mesh
            .iter()
            .map(|p| Ok((load_obj(p)?, seg.clone())))
            .collect::<Result<_>>()?
    };
    let reports: Vec<_> = subjects
        .par_iter()
        .map(|(mesh, seg)| measure_body(mesh, seg, &cfg.tailor))
        .collect();
    let mut rows = Vec::with_capacity(reports.len());
    let mut failures = Vec::new();
    for (i, r) in reports.into_iter().enumerate() {
        match r {
            Ok(rep) => {
                if !rep.is_complete() {
                    failures.push((i, format!("missing {:?}", rep.vector.missing())));
                }
                rows.push(rep.vector);
            }
            Err(e) => {
                failures.push((i, e.to_string()));
                rows.push(MeasurementVector::default());
            }
        }
    }
    emit(&a.out, &to_csv(&rows))?;
    partial(&failures, "measurements")
}

pub fn fit_map(cfg: &PipelineConfig, a: &FitMapArgs) -> Result<()> {
    let ridge = a.ridge.unwrap_or(cfg.map_ridge);
    let out = output(&a.out, cfg, "map.json")?;
    let model = load_model(pick(&a.model, &cfg.paths.model, "model")?)?;
    let bodies = load_corpus(&a.corpus, cfg)?;
    let meshes: Vec<TriMesh> = bodies.iter().map(|b| b.mesh.clone()).collect();
    let ds = if a.truth {
        let truths: Vec<MeasurementVector> = bodies.iter().map(|b| b.truth).collect();
        let coeffs: Vec<ShapeCoeffs> = meshes
            .par_iter()
            .map(|m| model.project_body(m))
            .collect::<std::result::Result<_, _>>()?;
        MappingDataset::from_measurements(&truths, &coeffs)?
    } else {
        build_mapping_dataset(&meshes, &model, &cfg.tailor)?
    };
    let map = fit_linear_map(&ds, ridge)?;
    save_map(&map, &out)?;
    println!("part,rows,cols,rank,condition");
    for (label, p) in &map.parts {
        println!("{label},{},{},{},{:.3e}", p.matrix.nrows(), p.matrix.ncols(), p.rank, p.condition);
    }
    partial(&ds.skipped, "bodies")
}

pub fn reconstruct(cfg: &PipelineConfig, a: &ReconstructArgs) -> Result<()> {
    let out = pick(&a.out, &cfg.paths.output, "output directory")?;
    let targets = from_csv(&read_file(&a.measurements)?)?;
    let model = load_model(pick(&a.model, &cfg.paths.model, "model")?)?;
    let map = load_map(pick(&a.map, &cfg.paths.map, "map")?)?;
    fs::create_dir_all(&out).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))?;
    let results: Vec<_> = targets.par_iter().map(|m| reconstruct_body(m, &map, &model)).collect();
    let mut names = Vec::new();
    let mut written = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(mesh) => {
                let name = format!("body_{i:04}.obj");
                save_obj(&mesh, out.join(&name))?;
                names.push(name);
                written.push(targets[i]);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    write_file(&out.join("targets.csv"), population_manifest_csv(&names, &written))?;
    println!("wrote {} bodies to {}", names.len(), out.display());
    partial(&failures, "reconstructions")
}

pub fn edit(cfg: &PipelineConfig, a: &EditArgs) -> Result<()> {
    if a.slot.len() != a.delta.len() {
        return Err(CliError::Usage(format!(
            "{} --slot values but {} --delta values",
            a.slot.len(),
            a.delta.len()
        )));
    }
    let mut delta = BTreeMap::new();
    for (name, d) in a.slot.iter().zip(&a.delta) {
        let s = resolve_slot(name)?;
        if delta.insert(s, *d).is_some() {
            return Err(CliError::Usage(format!("slot {} given twice", SLOTS[s].name)));
        }
    }
    let model = load_model(pick(&a.model, &cfg.paths.model, "model")?)?;
    let map = load_map(pick(&a.map, &cfg.paths.map, "map")?)?;
    let mesh = load_obj(&a.mesh)?;
    let report = measure_body(&mesh, &model.segmentation, &cfg.tailor)?;
    let result = edit_body(&report.vector, &delta, &map, &model, &cfg.tailor)?;
    save_obj(&result.mesh, &a.out)?;
    println!("slot,original,requested,measured");
    for e in &result.edited {
        println!(
            "{},{:.2},{:.2},{:.2}",
            SLOTS[e.slot].name, report.vector.0[e.slot], e.requested, e.measured
        );
    }
    Ok(())
}

pub fn render(_cfg: &PipelineConfig, a: &RenderArgs) -> Result<()> {
    let mesh = load_obj(&a.mesh)?;
    let height = match a.height {
        Some(h) => h,
        None => {
            let (lo, hi) = mesh.bounds().ok_or(bodyshape::Error::EmptyMesh)?;
            hi.y - lo.y
        }
    };
    let view = match a.view {
        ViewArg::Frontal => View::Frontal,
        ViewArg::Lateral => View::Lateral,
    };
    let img = render_silhouette(&mesh, view, height)?;
    write_file(&a.out, img.to_pgm())
}

fn corpus_features(bodies: &[Humanoid]) -> Result<Vec<(SilhouetteFeatures, MeasurementVector)>> {
    let feats: Vec<SilhouetteFeatures> = bodies
        .par_iter()
        .map(|b| SilhouetteFeatures::from_mesh(&b.mesh))
        .collect::<std::result::Result<_, _>>()?;
    Ok(feats.into_iter().zip(bodies.iter().map(|b| b.truth)).collect())
}

pub fn train_reg(cfg: &PipelineConfig, a: &TrainRegArgs) -> Result<()> {
    let ridge = a.ridge.unwrap_or(cfg.regressor_ridge);
    let out = output(&a.out, cfg, "regressor.json")?;
    let bodies = load_corpus(&a.corpus, cfg)?;
    let n = a.train.unwrap_or(bodies.len());
    if n > bodies.len() {
        return Err(CliError::Usage(format!("--train {n} exceeds the {} subjects", bodies.len())));
    }
    let pairs = corpus_features(&bodies[..n])?;
    let model = train_regressor(&pairs, ridge)?;
    save_regressor(&model, &out)?;
    println!("trained on {n} subjects");
    Ok(())
}

pub fn eval(cfg: &PipelineConfig, a: &EvalArgs) -> Result<()> {
    let model = load_regressor(pick(&a.regressor, &cfg.paths.regressor, "regressor")?)?;
    let bodies = load_corpus(&a.corpus, cfg)?;
    if a.from >= bodies.len() {
        return Err(CliError::Usage(format!("--from {} leaves no test subjects", a.from)));
    }
    let test = corpus_features(&bodies[a.from..])?;
    let table = evaluate(&model, &test)?;
    emit(&a.out, &table.to_csv())
}

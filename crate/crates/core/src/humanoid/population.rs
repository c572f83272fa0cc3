use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{load_obj, save_obj};
use crate::segmentation::{load_segmentation, save_segmentation};
use crate::tailor::to_csv;
use crate::{Error, Result};

use super::{generate_humanoid, ground_truth, Humanoid, HumanoidParams};

/// Attempts per subject before sampling gives up.
const MAX_ATTEMPTS: usize = 10;

pub(crate) fn perturb(rng: &mut ChaCha8Rng, base: &HumanoidParams, spread: f64) -> HumanoidParams {
    let mut p = base.clone();
    for v in p.values_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v *= (spread * z.clamp(-3.0, 3.0)).exp();
    }
    p
}

/// Draws `n` valid parameter sets by log-normal perturbation of every length
/// and radius of the defaults. Left and right limbs vary independently.
pub fn sample_params(seed: u64, n: usize, spread: f64) -> Result<Vec<HumanoidParams>> {
    if n == 0 {
        return Err(Error::InvalidArgument("population size must be at least 1".into()));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::InvalidArgument(format!("spread {spread} must be non-negative")));
    }
    let base = HumanoidParams::default();
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n).map(|_| master.random()).collect();
    seeds
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut last = None;
            for _ in 0..MAX_ATTEMPTS {
                let p = perturb(&mut rng, &base, spread);
                match p.validate() {
                    Ok(()) => return Ok(p),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::Generation(format!(
                "subject {i}: no valid body after {MAX_ATTEMPTS} attempts ({})",
                last.expect("at least one attempt")
            )))
        })
        .collect()
}

/// Deterministic population of `n` bodies around the default proportions.
pub fn sample_population(seed: u64, n: usize, spread: f64) -> Result<Vec<Humanoid>> {
    sample_params(seed, n, spread)?
        .par_iter()
        .map(generate_humanoid)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub mesh: String,
    pub segmentation: String,
    pub truth: String,
    pub params: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: Option<u64>,
    pub spread: Option<f64>,
    pub subjects: Vec<CorpusEntry>,
}

/// Bodies read back from a corpus directory.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub bodies: Vec<Humanoid>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `subject_NNNN.{obj,seg.json,gt.csv,params.json}` per body plus
/// `manifest.json`.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    bodies: &[Humanoid],
    seed: Option<u64>,
    spread: Option<f64>,
) -> Result<CorpusManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let subjects: Vec<CorpusEntry> = bodies
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            let id = format!("subject_{i:04}");
            let e = CorpusEntry {
                mesh: format!("{id}.obj"),
                segmentation: format!("{id}.seg.json"),
                truth: format!("{id}.gt.csv"),
                params: format!("{id}.params.json"),
                id,
            };
            save_obj(&h.mesh, dir.join(&e.mesh))?;
            save_segmentation(&h.segmentation, dir.join(&e.segmentation))?;
            write(&dir.join(&e.truth), &to_csv(std::slice::from_ref(&h.truth)))?;
            write(&dir.join(&e.params), &h.params.to_json())?;
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let manifest = CorpusManifest {
        seed,
        spread,
        subjects,
    };
    write(
        &dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Reads a corpus written by [`write_corpus`]. Ground truth is recomputed
/// from the stored parameters at full precision; the CSV copy is for people.
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CorpusManifest =
        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    let bodies = manifest
        .subjects
        .par_iter()
        .map(|e| {
            let at = |f: &str| -> PathBuf { dir.join(f) };
            let mesh = load_obj(at(&e.mesh))?;
            let segmentation = load_segmentation(at(&e.segmentation))?;
            let pp = at(&e.params);
            let text = fs::read_to_string(&pp).map_err(|x| Error::io(&pp, x))?;
            let params = HumanoidParams::from_json(&text)?;
            let truth = ground_truth(&params);
            if mesh.vertex_count() != segmentation.vertex_count() {
                return Err(Error::DimensionMismatch {
                    expected: segmentation.vertex_count(),
                    got: mesh.vertex_count(),
                });
            }
            Ok(Humanoid {
                params,
                mesh,
                segmentation,
                truth,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Corpus { manifest, bodies })
}

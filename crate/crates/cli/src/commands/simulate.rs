use std::fs;
use std::path::{Path, PathBuf};

use prnu_core::imageio::{center_tiles, save_plane, write_residual};
use prnu_core::scenario::{SceneKind, Scenario, ScenarioConfig};
use prnu_core::{ImagePlane, NoiseResidual};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::SimulateArgs;
use crate::commands::with_jobs;
use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageKind {
    Flat,
    Probe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCamera {
    pub camera_id: String,
    pub seed: u64,
    /// True PRNU field in PRNU1 format, relative to the manifest.
    pub prnu_true: String,
    pub flat_dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestImage {
    /// Relative to the manifest directory.
    pub path: String,
    pub camera_id: String,
    pub kind: ImageKind,
    pub scene: SceneKind,
    /// Index of the shot within its camera and kind.
    pub index: usize,
    /// `(x, y)` of a tile's top-left corner in the full sensor frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub config: ScenarioConfig,
    pub cameras: Vec<ManifestCamera>,
    pub images: Vec<ManifestImage>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(CliError::input(format!(
                "{}: unsupported manifest schema {}",
                path.display(),
                m.schema
            )));
        }
        Ok(m)
    }
}

pub fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let cfg: ScenarioConfig = serde::Deserialize::deserialize(&mut de)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

enum Job {
    Flat { camera: usize, index: usize },
    Probe { camera: usize, index: usize },
}

fn write_plane(root: &Path, rel: &str, plane: &ImagePlane) -> CliResult<()> {
    save_plane(plane, root.join(rel))?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<Manifest> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let scenario = Scenario::new(cfg.clone())?;
    let root: PathBuf = args.out.clone();

    let mut cameras = Vec::with_capacity(cfg.cameras);
    let mut sensors = Vec::with_capacity(cfg.cameras);
    for ci in 0..cfg.cameras {
        let id = Scenario::camera_id(ci);
        fs::create_dir_all(root.join(&id).join("flat"))?;
        fs::create_dir_all(root.join(&id).join("probe"))?;
        let cam = scenario.camera(ci)?;
        let prnu_rel = format!("{id}/prnu_true.prnu");
        write_residual(&NoiseResidual::new(cam.prnu_true.clone())?, root.join(&prnu_rel))?;
        cameras.push(ManifestCamera {
            camera_id: id.clone(),
            seed: cam.seed,
            prnu_true: prnu_rel,
            flat_dir: format!("{id}/flat"),
        });
        sensors.push(cam);
    }

    let jobs: Vec<Job> = (0..cfg.cameras)
        .flat_map(|camera| {
            (0..cfg.flat_fields)
                .map(move |index| Job::Flat { camera, index })
                .chain((0..cfg.probes).map(move |index| Job::Probe { camera, index }))
        })
        .collect();

    let produced: Vec<Vec<ManifestImage>> = with_jobs(args.jobs, || {
        jobs.par_iter()
            .map(|job| -> CliResult<Vec<ManifestImage>> {
                match *job {
                    Job::Flat { camera, index } => {
                        let id = &cameras[camera].camera_id;
                        let rel = format!("{id}/flat/flat_{index:03}.png");
                        write_plane(&root, &rel, &scenario.flat_field(&sensors[camera], index)?)?;
                        Ok(vec![ManifestImage {
                            path: rel,
                            camera_id: id.clone(),
                            kind: ImageKind::Flat,
                            scene: SceneKind::Flat,
                            index,
                            offset: None,
                        }])
                    }
                    Job::Probe { camera, index } => {
                        let id = &cameras[camera].camera_id;
                        let cam = &sensors[camera];
                        let scene = scenario.probe_kind(cam, index);
                        let shot = scenario.probe(cam, index)?;
                        let Some(t) = cfg.probe_tiles else {
                            let rel = format!("{id}/probe/probe_{index:03}.png");
                            write_plane(&root, &rel, &shot)?;
                            return Ok(vec![ManifestImage {
                                path: rel,
                                camera_id: id.clone(),
                                kind: ImageKind::Probe,
                                scene,
                                index,
                                offset: None,
                            }]);
                        };
                        let tiles = center_tiles(shot.raster(), t.width, t.height, t.rows, t.cols)?;
                        let mut out = Vec::with_capacity(tiles.len());
                        for (ti, ((x, y), tile)) in tiles.into_iter().enumerate() {
                            let rel = format!("{id}/probe/probe_{index:03}_t{ti}.png");
                            write_plane(&root, &rel, &ImagePlane::new(tile)?)?;
                            out.push(ManifestImage {
                                path: rel,
                                camera_id: id.clone(),
                                kind: ImageKind::Probe,
                                scene,
                                index,
                                offset: Some([x, y]),
                            });
                        }
                        Ok(out)
                    }
                }
            })
            .collect::<CliResult<Vec<_>>>()
    })??;

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        config: cfg,
        cameras,
        images: produced.into_iter().flatten().collect(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::input(format!("cannot encode manifest: {e}")))?;
    fs::write(root.join(MANIFEST_FILE), text + "\n")?;
    eprintln!(
        "simulated {} cameras, {} images into {}",
        manifest.cameras.len(),
        manifest.images.len(),
        root.display()
    );
    Ok(manifest)
}

//! Declarative multi-camera simulation scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ImagePlane;
use crate::simulator::{
    derive_seed, flat_field_scene, jpeg_round_trip, make_camera, shoot, textured_scene,
    SyntheticCamera,
};

const FLAT_STREAM: u64 = 0x464c_4154;
const PROBE_STREAM: u64 = 0x5052_4f42;

/// Four-way (or any rows x cols) center tiling applied to probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default = "two")]
    pub rows: usize,
    #[serde(default = "two")]
    pub cols: usize,
}

fn two() -> usize {
    2
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub cameras: usize,
    pub sigma_k: f64,
    pub read_noise_sigma: f64,
    pub flat_fields: usize,
    pub probes: usize,
    /// Share of probes shot from textured rather than near-flat scenes.
    #[serde(default = "half")]
    pub textured_fraction: f64,
    /// JPEG quality applied to probes; `None` keeps them lossless.
    #[serde(default)]
    pub jpeg_quality: Option<u8>,
    #[serde(default)]
    pub probe_tiles: Option<TileSpec>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.width < 64 {
            return fail("width", format!("must be >= 64, got {}", self.width));
        }
        if self.height < 64 {
            return fail("height", format!("must be >= 64, got {}", self.height));
        }
        if self.cameras == 0 {
            return fail("cameras", "must be >= 1".into());
        }
        if !(self.sigma_k > 0.0 && self.sigma_k <= 0.1) {
            return fail("sigma_k", format!("must be in (0, 0.1], got {}", self.sigma_k));
        }
        if !(self.read_noise_sigma >= 0.0) || !self.read_noise_sigma.is_finite() {
            return fail(
                "read_noise_sigma",
                format!("must be >= 0, got {}", self.read_noise_sigma),
            );
        }
        if self.flat_fields == 0 {
            return fail("flat_fields", "must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.textured_fraction) {
            return fail(
                "textured_fraction",
                format!("must be in [0, 1], got {}", self.textured_fraction),
            );
        }
        if let Some(q) = self.jpeg_quality {
            if !(1..=100).contains(&q) {
                return fail("jpeg_quality", format!("must be in 1..=100, got {q}"));
            }
        }
        if let Some(t) = self.probe_tiles {
            if t.width == 0 || t.height == 0 || t.rows == 0 || t.cols == 0 {
                return fail("probe_tiles", "all fields must be >= 1".into());
            }
            if t.width * t.cols > self.width || t.height * t.rows > self.height {
                return fail(
                    "probe_tiles",
                    format!(
                        "{}x{} grid of {}x{} tiles exceeds {}x{}",
                        t.cols, t.rows, t.width, t.height, self.width, self.height
                    ),
                );
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Flat,
    Textured,
}

/// A validated scenario; all outputs are pure functions of the config.
#[derive(Clone, Debug)]
pub struct Scenario {
    cfg: ScenarioConfig,
}

impl Scenario {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn camera_id(index: usize) -> String {
        format!("cam{index:02}")
    }

    pub fn camera_seed(&self, index: usize) -> u64 {
        derive_seed(self.cfg.seed, index as u64)
    }

    pub fn camera(&self, index: usize) -> Result<SyntheticCamera> {
        make_camera(
            self.cfg.width,
            self.cfg.height,
            self.cfg.sigma_k,
            self.cfg.read_noise_sigma,
            self.camera_seed(index),
        )
    }

    pub fn flat_field(&self, cam: &SyntheticCamera, index: usize) -> Result<ImagePlane> {
        let base = derive_seed(cam.seed ^ FLAT_STREAM, index as u64);
        let scene = flat_field_scene(self.cfg.width, self.cfg.height, derive_seed(base, 0));
        shoot(cam, &scene, derive_seed(base, 1))
    }

    pub fn probe_kind(&self, cam: &SyntheticCamera, index: usize) -> SceneKind {
        let base = derive_seed(cam.seed ^ PROBE_STREAM, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base, 2));
        if rng.random::<f64>() < self.cfg.textured_fraction {
            SceneKind::Textured
        } else {
            SceneKind::Flat
        }
    }

    /// Full-resolution probe, JPEG-compressed when configured.
    pub fn probe(&self, cam: &SyntheticCamera, index: usize) -> Result<ImagePlane> {
        let base = derive_seed(cam.seed ^ PROBE_STREAM, index as u64);
        let (w, h) = (self.cfg.width, self.cfg.height);
        let scene = match self.probe_kind(cam, index) {
            SceneKind::Textured => textured_scene(w, h, derive_seed(base, 0)),
            SceneKind::Flat => flat_field_scene(w, h, derive_seed(base, 0)),
        };
        let shot = shoot(cam, &scene, derive_seed(base, 1))?;
        match self.cfg.jpeg_quality {
            Some(q) => jpeg_round_trip(&shot, q),
            None => Ok(shot),
        }
    }
}

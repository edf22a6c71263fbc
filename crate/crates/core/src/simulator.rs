//! Synthetic sensors under the multiplicative model `I = S (1 + K) + n`.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::ImageReader;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imageio::{plane_from_dynamic, plane_to_gray8};
use crate::raster::{ImagePlane, Raster};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCamera {
    /// True PRNU field `K`.
    pub prnu_true: Raster,
    pub sigma_k: f64,
    pub read_noise_sigma: f64,
    pub seed: u64,
}

/// Mixes a base seed with an index so that streams stay independent.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over seed ^ index-spread
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn make_camera(
    width: usize,
    height: usize,
    sigma_k: f64,
    read_noise_sigma: f64,
    seed: u64,
) -> Result<SyntheticCamera> {
    if width < 64 || height < 64 {
        return Err(Error::Config(format!(
            "camera must be at least 64x64, got {width}x{height}"
        )));
    }
    if !(sigma_k > 0.0 && sigma_k <= 0.1) {
        return Err(Error::Config(format!("sigma_k must be in (0, 0.1], got {sigma_k}")));
    }
    if !(read_noise_sigma >= 0.0) || !read_noise_sigma.is_finite() {
        return Err(Error::Config(format!(
            "read_noise_sigma must be >= 0, got {read_noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_k).expect("validated sigma");
    Ok(SyntheticCamera {
        prnu_true: Raster::from_fn(width, height, |_, _| normal.sample(&mut rng)),
        sigma_k,
        read_noise_sigma,
        seed,
    })
}

/// Exposes `scene` through the sensor; `shot_seed` drives the read noise.
pub fn shoot(cam: &SyntheticCamera, scene: &ImagePlane, shot_seed: u64) -> Result<ImagePlane> {
    scene
        .raster()
        .ensure_same_shape(&cam.prnu_true, "scene and sensor")?;
    let mut rng = ChaCha8Rng::seed_from_u64(shot_seed);
    let noise = (cam.read_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, cam.read_noise_sigma).expect("validated sigma"));
    let mut out = scene.raster().zip_with(&cam.prnu_true, |s, k| s * (1.0 + k))?;
    if let Some(noise) = noise {
        for v in out.data_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    ImagePlane::new(out.map(|v| v.clamp(0.0, 255.0)))
}

pub fn flat_scene(width: usize, height: usize, level: f64) -> Result<ImagePlane> {
    ImagePlane::filled(width, height, level)
}

/// Near-uniform scene: random level with a gentle linear gradient.
pub fn flat_field_scene(width: usize, height: usize, seed: u64) -> ImagePlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = rng.random_range(110.0..160.0);
    let gx = rng.random_range(-10.0..10.0) / width as f64;
    let gy = rng.random_range(-10.0..10.0) / height as f64;
    ImagePlane::new(Raster::from_fn(width, height, |r, c| {
        (level + gx * c as f64 + gy * r as f64).clamp(0.0, 255.0)
    }))
    .expect("clamped scene")
}

/// Natural-looking content: smooth random waves plus a few hard-edged patches.
pub fn textured_scene(width: usize, height: usize, seed: u64) -> ImagePlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = rng.random_range(70.0..170.0);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(4.0..25.0),
                rng.random_range(0.0..6.0) * std::f64::consts::PI / width as f64,
                rng.random_range(0.0..6.0) * std::f64::consts::PI / height as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let patches: Vec<(usize, usize, usize, usize, f64)> = (0..4)
        .map(|_| {
            let x0 = rng.random_range(0..width);
            let y0 = rng.random_range(0..height);
            let w = rng.random_range(width / 8..width / 2);
            let h = rng.random_range(height / 8..height / 2);
            (x0, y0, w, h, rng.random_range(-40.0..40.0))
        })
        .collect();
    ImagePlane::new(Raster::from_fn(width, height, |r, c| {
        let mut v = base;
        for &(amp, fx, fy, ph) in &waves {
            v += amp * (fx * c as f64 + fy * r as f64 + ph).sin();
        }
        for &(x0, y0, w, h, d) in &patches {
            if c >= x0 && c < x0 + w && r >= y0 && r < y0 + h {
                v += d;
            }
        }
        v.clamp(5.0, 250.0)
    }))
    .expect("clamped scene")
}

/// Encodes a plane as baseline JPEG at `quality` and decodes it back.
pub fn jpeg_round_trip(img: &ImagePlane, quality: u8) -> Result<ImagePlane> {
    let gray = plane_to_gray8(img);
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut bytes, quality)
        .encode_image(&gray)
        .map_err(|e| Error::Format(format!("jpeg encode: {e}")))?;
    let decoded = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Format(format!("jpeg decode: {e}")))?
        .decode()
        .map_err(|e| Error::Format(format!("jpeg decode: {e}")))?;
    plane_from_dynamic(&decoded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{DenoiserConfig, DenoiserRegistry};
    use crate::detector::corr;
    use crate::extraction::{estimate_fingerprint, extract_residual};

    #[test]
    fn seeded_fields_are_reproducible() {
        let a = make_camera(64, 64, 0.02, 1.0, 5).unwrap();
        let b = make_camera(64, 64, 0.02, 1.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn field_statistics() {
        let cam = make_camera(512, 512, 0.02, 0.0, 1).unwrap();
        let sd = cam.prnu_true.variance().sqrt();
        assert!((0.018..=0.022).contains(&sd), "{sd}");
        assert!(cam.prnu_true.mean().abs() < 0.001);
    }

    #[test]
    fn independent_seeds_are_uncorrelated() {
        let bound = 4.0 / (128.0f64 * 128.0).sqrt();
        for s in 0..20u64 {
            let a = make_camera(128, 128, 0.02, 0.0, 2 * s).unwrap();
            let b = make_camera(128, 128, 0.02, 0.0, 2 * s + 1).unwrap();
            let rho = corr(&a.prnu_true, &b.prnu_true).unwrap();
            assert!(rho.abs() <= bound, "{rho}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(make_camera(63, 64, 0.02, 1.0, 0), Err(Error::Config(_))));
        assert!(matches!(make_camera(64, 64, 0.0, 1.0, 0), Err(Error::Config(_))));
        assert!(matches!(make_camera(64, 64, 0.2, 1.0, 0), Err(Error::Config(_))));
        assert!(matches!(make_camera(64, 64, 0.02, -1.0, 0), Err(Error::Config(_))));
        let cam = make_camera(64, 64, 0.02, 1.0, 0).unwrap();
        let scene = flat_scene(65, 64, 10.0).unwrap();
        assert!(matches!(shoot(&cam, &scene, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn noiseless_limit_reproduces_scene() {
        let cam = SyntheticCamera {
            prnu_true: Raster::zeros(64, 64),
            sigma_k: 0.0,
            read_noise_sigma: 0.0,
            seed: 0,
        };
        let scene = textured_scene(64, 64, 3);
        assert_eq!(shoot(&cam, &scene, 9).unwrap(), scene);
    }

    #[test]
    fn flat_shot_inverts_to_prnu() {
        let cam = make_camera(64, 64, 0.02, 0.0, 4).unwrap();
        let img = shoot(&cam, &flat_scene(64, 64, 128.0).unwrap(), 0).unwrap();
        let back = img.raster().map(|v| v / 128.0 - 1.0);
        assert!(back.max_abs_diff(&cam.prnu_true) < 1e-12);
    }

    fn fingerprint_quality(cam: &SyntheticCamera, n: usize, rep: u64) -> f64 {
        let reg = DenoiserRegistry::default();
        let cfg = DenoiserConfig::default();
        let (w, h) = (cam.prnu_true.width(), cam.prnu_true.height());
        let images: Vec<_> = (0..n as u64)
            .map(|i| {
                let scene = flat_field_scene(w, h, derive_seed(rep, i));
                shoot(cam, &scene, derive_seed(rep + 1000, i)).unwrap()
            })
            .collect();
        let residuals: Vec<_> = images
            .iter()
            .map(|i| extract_residual(i, &reg, "dwt", &cfg).unwrap())
            .collect();
        let k = estimate_fingerprint(&images, &residuals).unwrap();
        corr(&k.raster, &cam.prnu_true).unwrap()
    }

    #[test]
    fn fifty_flat_fields_recover_the_field() {
        let cam = make_camera(128, 128, 0.02, 2.0, 6).unwrap();
        let rho = fingerprint_quality(&cam, 50, 1);
        assert!(rho >= 0.9, "{rho}");
    }

    #[test]
    fn more_images_do_not_hurt() {
        let cam = make_camera(64, 64, 0.02, 2.0, 7).unwrap();
        let mean_rho = |n: usize| (0..4).map(|rep| fingerprint_quality(&cam, n, rep)).sum::<f64>() / 4.0;
        let (r2, r8, r32) = (mean_rho(2), mean_rho(8), mean_rho(32));
        assert!(r2 <= r8 && r8 <= r32, "{r2} {r8} {r32}");
    }

    #[test]
    fn jpeg_keeps_shape_and_content() {
        let scene = textured_scene(64, 48, 2);
        let j = jpeg_round_trip(&scene, 90).unwrap();
        assert_eq!((j.width(), j.height()), (64, 48));
        assert!(j.raster().max_abs_diff(scene.raster()) < 20.0);
        assert!(corr(j.raster(), scene.raster()).unwrap() > 0.99);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(5, 3), derive_seed(5, 4));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}

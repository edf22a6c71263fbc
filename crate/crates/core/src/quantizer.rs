//! 8-bit fingerprint quantization, PNG + JSON sidecar storage and scale search.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::detector::corr;
use crate::error::{Error, Result};
use crate::extraction::Fingerprint;
use crate::raster::Raster;

/// Default scaling parameter `a`.
pub const DEFAULT_SCALE: f64 = 32.5;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedFingerprint {
    pub width: usize,
    pub height: usize,
    pub codes: Vec<u8>,
    pub scale_a: f64,
    pub camera_id: String,
    pub num_images: usize,
    pub extractor_id: String,
    pub postprocessed: bool,
}

/// Code of a single sample: `clamp(round(a*k - 0.5) + 128, 0, 255)`,
/// rounding half away from zero.
#[inline]
pub fn quantize_sample(k: f64, a: f64) -> u8 {
    ((a * k - 0.5).round() + 128.0).clamp(0.0, 255.0) as u8
}

/// Bin-center reconstruction of a code.
#[inline]
pub fn dequantize_sample(code: u8, a: f64) -> f64 {
    (f64::from(code) - 127.5) / a
}

fn check_scale(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Value(format!("scale a must be a positive finite number, got {a}")))
    }
}

pub fn quantize(fp: &Fingerprint, a: f64) -> Result<QuantizedFingerprint> {
    check_scale(a)?;
    let mut codes = Vec::with_capacity(fp.raster.len());
    for (i, &k) in fp.raster.data().iter().enumerate() {
        if !k.is_finite() {
            return Err(Error::Value(format!("non-finite fingerprint sample at index {i}")));
        }
        codes.push(quantize_sample(k, a));
    }
    Ok(QuantizedFingerprint {
        width: fp.width(),
        height: fp.height(),
        codes,
        scale_a: a,
        camera_id: fp.camera_id.clone(),
        num_images: fp.num_images,
        extractor_id: fp.extractor_id.clone(),
        postprocessed: fp.postprocessed,
    })
}

pub fn dequantize(q: &QuantizedFingerprint) -> Result<Fingerprint> {
    check_scale(q.scale_a)?;
    let data = q.codes.iter().map(|&c| dequantize_sample(c, q.scale_a)).collect();
    let mut fp = Fingerprint::new(Raster::new(q.width, q.height, data)?, q.num_images.max(1))?
        .with_camera_id(q.camera_id.clone())
        .with_extractor_id(q.extractor_id.clone());
    fp.postprocessed = q.postprocessed;
    Ok(fp)
}

/// Correlation between a fingerprint and its quantize/dequantize image at scale `a`.
///
/// A scale that maps every sample to one code yields `None`.
pub fn quantization_correlation(fp: &Fingerprint, a: f64) -> Result<Option<f64>> {
    check_scale(a)?;
    let restored = fp.raster.map(|k| dequantize_sample(quantize_sample(k, a), a));
    match corr(&fp.raster, &restored) {
        Ok(rho) => Ok(Some(rho)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Grid search for the scale maximizing `rho(K, dequantize(quantize(K, a)))`.
///
/// Ties go to the smaller scale.
pub fn search_scale(fp: &Fingerprint, grid: &[f64]) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::Input("empty scale grid".into()));
    }
    if fp.raster.data().windows(2).all(|p| p[0] == p[1]) {
        return Err(Error::Degenerate("constant fingerprint has no correlation".into()));
    }
    let mut best: Option<(f64, f64)> = None;
    for &a in grid {
        let Some(rho) = quantization_correlation(fp, a)? else {
            continue;
        };
        best = match best {
            Some((ba, br)) if rho < br || (rho == br && a >= ba) => Some((ba, br)),
            _ => Some((a, rho)),
        };
    }
    best.ok_or_else(|| {
        Error::Degenerate("every scale in the grid collapses the fingerprint to one code".into())
    })
}

/// JSON sidecar written next to the PNG as `<png path>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    /// Absent for unquantized (raw) fingerprints.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale_a: Option<f64>,
    pub camera_id: String,
    pub num_images: usize,
    pub extractor_id: String,
    pub width: usize,
    pub height: usize,
    pub postprocessed: bool,
}

impl Sidecar {
    pub fn for_fingerprint(fp: &Fingerprint) -> Self {
        Self {
            scale_a: None,
            camera_id: fp.camera_id.clone(),
            num_images: fp.num_images,
            extractor_id: fp.extractor_id.clone(),
            width: fp.width(),
            height: fp.height(),
            postprocessed: fp.postprocessed,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(meta: &Sidecar, path: &Path) -> Result<()> {
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Format(format!("cannot encode sidecar: {e}")))?;
    fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let side = sidecar_path(path);
    let text = match fs::read_to_string(&side) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Format(format!("missing sidecar {}", side.display())))
        }
        Err(e) => return Err(Error::io(&side, e)),
    };
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", side.display())))
}

/// Writes an 8-bit single-channel PNG plus its sidecar.
pub fn save_png(q: &QuantizedFingerprint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_raw(q.width as u32, q.height as u32, q.codes.clone())
        .ok_or_else(|| Error::Dimension("code count does not match dimensions".into()))?;
    img.save_with_format(path, ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    write_sidecar(
        &Sidecar {
            scale_a: Some(q.scale_a),
            camera_id: q.camera_id.clone(),
            num_images: q.num_images,
            extractor_id: q.extractor_id.clone(),
            width: q.width,
            height: q.height,
            postprocessed: q.postprocessed,
        },
        path,
    )
}

pub fn load_png(path: impl AsRef<Path>) -> Result<QuantizedFingerprint> {
    let path = path.as_ref();
    let meta = read_sidecar(path)?;
    let mut reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    reader.set_format(ImageFormat::Png);
    let img = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    let DynamicImage::ImageLuma8(buf) = img else {
        return Err(Error::Format(format!(
            "{}: expected 8-bit single-channel PNG, found {:?}",
            path.display(),
            img.color()
        )));
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    if (w, h) != (meta.width, meta.height) {
        return Err(Error::Format(format!(
            "sidecar says {}x{}, PNG is {w}x{h}",
            meta.width, meta.height
        )));
    }
    let scale_a = meta
        .scale_a
        .ok_or_else(|| Error::Format("sidecar lacks scale_a".into()))?;
    check_scale(scale_a).map_err(|e| Error::Format(e.to_string()))?;
    Ok(QuantizedFingerprint {
        width: w,
        height: h,
        codes: buf.into_raw(),
        scale_a,
        camera_id: meta.camera_id,
        num_images: meta.num_images,
        extractor_id: meta.extractor_id,
        postprocessed: meta.postprocessed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian_fp(w: usize, h: usize, sd: f64, seed: u64) -> Fingerprint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sd).unwrap();
        Fingerprint::new(Raster::from_fn(w, h, |_, _| n.sample(&mut rng)), 10)
            .unwrap()
            .with_camera_id("cam-0")
            .with_extractor_id("dwt")
    }

    #[test]
    fn direct_evaluation() {
        assert_eq!(quantize_sample(1.0, 32.5), 160);
        assert_eq!(quantize_sample(10.0, 32.5), 255);
        assert_eq!(quantize_sample(-10.0, 32.5), 0);
        // aK - 0.5 = -0.5 is a tie and rounds away from zero.
        assert_eq!(quantize_sample(0.0, 32.5), 127);
        assert_eq!(DEFAULT_SCALE, 32.5);
    }

    #[test]
    fn bin_center() {
        assert!((dequantize_sample(128, 32.5) - 0.5 / 32.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_bound_on_fine_grid() {
        let a = 32.5;
        let limit = 127.0 / a;
        let steps = 200_001;
        for i in 0..steps {
            let k = -limit + 2.0 * limit * i as f64 / (steps - 1) as f64;
            let back = dequantize_sample(quantize_sample(k, a), a);
            assert!((back - k).abs() <= 0.5 / a + 1e-12, "k={k}");
        }
    }

    #[test]
    fn zero_fingerprint_round_trip() {
        let fp = Fingerprint::new(Raster::zeros(4, 4), 1).unwrap();
        let back = dequantize(&quantize(&fp, 32.5).unwrap()).unwrap();
        assert!(back.raster.data().iter().all(|v| v.abs() <= 0.5 / 32.5));
    }

    #[test]
    fn rejects_bad_inputs() {
        let fp = Fingerprint::new(Raster::zeros(2, 2), 1).unwrap();
        assert!(matches!(quantize(&fp, 0.0), Err(Error::Value(_))));
        assert!(matches!(quantize(&fp, f64::NAN), Err(Error::Value(_))));
        let mut bad = fp.clone();
        bad.raster.set(0, 0, f64::INFINITY);
        assert!(matches!(quantize(&bad, 1.0), Err(Error::Value(_))));
    }

    #[test]
    fn search_on_gaussian() {
        let fp = gaussian_fp(256, 256, 0.02, 1);
        let grid: Vec<f64> = (1..=128).map(f64::from).collect();
        let (a, rho) = search_scale(&fp, &grid).unwrap();
        // Brute-force oracle over the same grid.
        let oracle = grid
            .iter()
            .filter_map(|&g| quantization_correlation(&fp, g).unwrap().map(|r| (g, r)))
            .fold((0.0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
        assert_eq!((a, rho), oracle);
        assert!(rho >= 0.99, "rho* = {rho}");
    }

    #[test]
    fn search_singleton_and_ties() {
        let fp = gaussian_fp(16, 16, 1.0, 2);
        assert_eq!(search_scale(&fp, &[7.0]).unwrap().0, 7.0);
        // Duplicated grid entries tie; the smaller one wins regardless of order.
        let (a, _) = search_scale(&fp, &[9.0, 3.0, 3.0, 9.0]).unwrap();
        let r3 = quantization_correlation(&fp, 3.0).unwrap().unwrap();
        let r9 = quantization_correlation(&fp, 9.0).unwrap().unwrap();
        assert_eq!(a, if r9 > r3 { 9.0 } else { 3.0 });
        let flat = Fingerprint::new(Raster::filled(4, 4, 0.1), 1).unwrap();
        assert!(matches!(search_scale(&flat, &[1.0]), Err(Error::Degenerate(_))));
        assert!(matches!(search_scale(&fp, &[]), Err(Error::Input(_))));
    }

    #[test]
    fn optimum_scales_inversely_with_spread() {
        let grid: Vec<f64> = (1..=256).map(|i| f64::from(i) * 0.5).collect();
        let (a1, _) = search_scale(&gaussian_fp(512, 512, 1.0, 3), &grid).unwrap();
        let (a2, _) = search_scale(&gaussian_fp(512, 512, 2.0, 3), &grid).unwrap();
        assert!((a2 - a1 / 2.0).abs() <= 0.5, "a*(1)={a1}, a*(2)={a2}");
    }

    #[test]
    fn png_round_trip_and_storage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.png");
        let mut fp = gaussian_fp(512, 512, 0.02, 4);
        fp.postprocessed = true;
        let q = quantize(&fp, DEFAULT_SCALE).unwrap();
        save_png(&q, &path).unwrap();
        let back = load_png(&path).unwrap();
        assert_eq!(back, q);
        let png_bytes = fs::metadata(&path).unwrap().len() as f64;
        let raw = 4.0 * 512.0 * 512.0;
        assert!(1.0 - png_bytes / raw >= 0.75, "{png_bytes} bytes");
        assert!(dequantize(&back).unwrap().postprocessed);
    }

    #[test]
    fn png_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.png");
        let q = quantize(&gaussian_fp(8, 8, 0.02, 5), DEFAULT_SCALE).unwrap();
        save_png(&q, &path).unwrap();
        fs::remove_file(sidecar_path(&path)).unwrap();
        assert!(matches!(load_png(&path), Err(Error::Format(m)) if m.contains("sidecar")));

        let p16 = dir.path().join("fp16.png");
        image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(8, 8, vec![0; 64])
            .unwrap()
            .save(&p16)
            .unwrap();
        write_sidecar(&Sidecar { scale_a: Some(32.5), ..Sidecar::for_fingerprint(&dequantize(&q).unwrap()) }, &p16).unwrap();
        assert!(matches!(load_png(&p16), Err(Error::Format(_))));

        let rgb = dir.path().join("rgb.png");
        image::RgbImage::new(8, 8).save(&rgb).unwrap();
        write_sidecar(&Sidecar { scale_a: Some(32.5), ..Sidecar::for_fingerprint(&dequantize(&q).unwrap()) }, &rgb).unwrap();
        assert!(matches!(load_png(&rgb), Err(Error::Format(_))));
    }

    #[test]
    fn sidecar_keys() {
        let q = quantize(&gaussian_fp(3, 2, 0.02, 6), 20.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        save_png(&q, &path).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["camera_id", "extractor_id", "height", "num_images", "postprocessed", "scale_a", "width"]
        );
        assert_eq!(v["scale_a"], 20.0);
        assert_eq!(v["num_images"], 10);
    }

    proptest! {
        #[test]
        fn monotone(k1 in -10.0f64..10.0, k2 in -10.0f64..10.0, a in 0.5f64..200.0) {
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            prop_assert!(quantize_sample(lo, a) <= quantize_sample(hi, a));
        }

        #[test]
        fn bounded_error_without_clamping(a in 0.5f64..200.0, t in -1.0f64..1.0) {
            let k = t * 127.0 / a;
            let back = dequantize_sample(quantize_sample(k, a), a);
            prop_assert!((back - k).abs() <= 0.5 / a + 1e-12);
        }
    }
}

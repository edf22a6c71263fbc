use std::path::{Path, PathBuf};

use prnu_core::denoiser::{DenoiserConfig, DenoiserRegistry};
use prnu_core::extraction::{extract_residual, postprocess, FingerprintAccumulator};
use prnu_core::imageio::{center_crop, load_image, read_residual, write_residual};
use prnu_core::quantizer::{
    dequantize, load_png, quantize, read_sidecar, save_png, search_scale, write_sidecar, Sidecar,
};
use prnu_core::{Error, Fingerprint, ImagePlane, NoiseResidual};
use rayon::prelude::*;

use crate::args::{BuildArgs, CropSize, QuantizeArgs};
use crate::commands::with_jobs;
use crate::error::{CliError, CliResult};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files of a directory in lexical order.
pub fn list_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn denoiser_config(sigma: f64) -> DenoiserConfig {
    DenoiserConfig::with_sigma(sigma)
}

pub fn load_plane(path: &Path, crop: Option<CropSize>) -> prnu_core::Result<ImagePlane> {
    let img = load_image(path)?;
    match crop {
        Some(c) => center_crop(&img, c.width, c.height),
        None => Ok(img),
    }
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads a quantized PNG fingerprint (dequantized) or a PRNU1 raw one.
pub fn load_fingerprint(path: &Path) -> CliResult<Fingerprint> {
    if is_png(path) {
        return Ok(dequantize(&load_png(path)?)?);
    }
    let raw = read_residual(path)?;
    let meta = match read_sidecar(path) {
        Ok(m) => Some(m),
        Err(Error::Format(m)) if m.starts_with("missing sidecar") => None,
        Err(e) => return Err(e.into()),
    };
    let num_images = meta.as_ref().map_or(1, |m| m.num_images.max(1));
    let mut fp = Fingerprint::new(raw.into_raster(), num_images)?;
    if let Some(m) = meta {
        fp = fp.with_camera_id(m.camera_id).with_extractor_id(m.extractor_id);
        fp.postprocessed = m.postprocessed;
    }
    Ok(fp)
}

pub fn save_raw(fp: &Fingerprint, path: &Path) -> CliResult<()> {
    write_residual(&NoiseResidual::new(fp.raster.clone())?, path)?;
    write_sidecar(&Sidecar::for_fingerprint(fp), path)?;
    Ok(())
}

/// Directory name, skipping a trailing `flat` as written by `simulate`.
fn default_camera_id(dir: &Path) -> String {
    let dir = dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf());
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
    match name(&dir) {
        Some(n) if n == "flat" => dir.parent().and_then(name).unwrap_or(n),
        Some(n) => n,
        None => String::new(),
    }
}

pub fn build(args: &BuildArgs) -> CliResult<Fingerprint> {
    let files = list_images(&args.image_dir)?;
    if files.is_empty() {
        return Err(CliError::input(format!(
            "no PNG/JPEG images in {}",
            args.image_dir.display()
        )));
    }
    let registry = DenoiserRegistry::default();
    registry.get(&args.denoiser.denoiser)?;
    let cfg = denoiser_config(args.denoiser.sigma);
    cfg.validate()?;

    let first = load_plane(&files[0], args.crop)?;
    let (w, h) = (first.width(), first.height());
    let acc = with_jobs(args.jobs, || {
        files
            .par_iter()
            .try_fold(
                || FingerprintAccumulator::new(w, h),
                |mut acc, path| -> prnu_core::Result<_> {
                    let img = load_plane(path, args.crop)?;
                    if (img.width(), img.height()) != (w, h) {
                        return Err(Error::Dimension(format!(
                            "{} is {}x{}, expected {w}x{h} (use --crop)",
                            path.display(),
                            img.width(),
                            img.height()
                        )));
                    }
                    let res = extract_residual(&img, &registry, &args.denoiser.denoiser, &cfg)?;
                    acc.add(&img, &res)?;
                    Ok(acc)
                },
            )
            .try_reduce(|| FingerprintAccumulator::new(w, h), |a, b| a.merge(b))
    })??;

    let camera_id = args
        .camera_id
        .clone()
        .unwrap_or_else(|| default_camera_id(&args.image_dir));
    let mut fp = acc
        .finish()?
        .with_camera_id(camera_id)
        .with_extractor_id(args.denoiser.denoiser.clone());
    if !args.no_postprocess {
        fp = postprocess(&fp)?;
    }
    if args.raw {
        save_raw(&fp, &args.out)?;
    } else {
        save_png(&quantize(&fp, args.scale)?, &args.out)?;
    }
    eprintln!(
        "fingerprint {:?}: {} images, {}x{}, written to {}",
        fp.camera_id,
        fp.num_images,
        w,
        h,
        args.out.display()
    );
    Ok(fp)
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("--search-grid: cannot parse {spec:?}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(CliError::config("--search-grid: expected start:stop:step"));
    };
    if !(start > 0.0 && step > 0.0 && stop >= start) {
        return Err(CliError::config(
            "--search-grid: need 0 < start <= stop and step > 0",
        ));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

pub fn quantize_cmd(args: &QuantizeArgs) -> CliResult<f64> {
    let mut fp = load_fingerprint(&args.input)?;
    if let Some(id) = &args.camera_id {
        fp.camera_id = id.clone();
    }
    let scale = match &args.search_grid {
        Some(spec) => {
            let (a, rho) = search_scale(&fp, &parse_grid(spec)?)?;
            eprintln!("selected a = {a} (rho = {rho:.6})");
            a
        }
        None => args.scale,
    };
    save_png(&quantize(&fp, scale)?, &args.out)?;
    Ok(scale)
}

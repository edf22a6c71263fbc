//! Noise residuals, MLE fingerprint estimation and fingerprint post-processing.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::denoiser::{DenoiserConfig, DenoiserRegistry};
use crate::error::{Error, Result};
use crate::fft2;
use crate::raster::{ImagePlane, NoiseResidual, Raster};

/// Camera fingerprint `K` with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Fingerprint {
    pub raster: Raster,
    pub camera_id: String,
    pub num_images: usize,
    pub extractor_id: String,
    /// Set once zero-meaning and spectral Wiener filtering have been applied.
    pub postprocessed: bool,
}

impl Fingerprint {
    pub fn new(raster: Raster, num_images: usize) -> Result<Self> {
        if !raster.all_finite() {
            return Err(Error::Value("fingerprint contains non-finite samples".into()));
        }
        if num_images == 0 {
            return Err(Error::Value("a fingerprint needs at least one image".into()));
        }
        Ok(Self {
            raster,
            camera_id: String::new(),
            num_images,
            extractor_id: String::new(),
            postprocessed: false,
        })
    }

    pub fn with_camera_id(mut self, id: impl Into<String>) -> Self {
        self.camera_id = id.into();
        self
    }

    pub fn with_extractor_id(mut self, id: impl Into<String>) -> Self {
        self.extractor_id = id.into();
        self
    }

    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }

    fn with_raster(&self, raster: Raster) -> Self {
        Self {
            raster,
            camera_id: self.camera_id.clone(),
            num_images: self.num_images,
            extractor_id: self.extractor_id.clone(),
            postprocessed: self.postprocessed,
        }
    }
}

/// `W = I - F(I)` using the denoiser registered under `denoiser_id`.
pub fn extract_residual(
    img: &ImagePlane,
    registry: &DenoiserRegistry,
    denoiser_id: &str,
    cfg: &DenoiserConfig,
) -> Result<NoiseResidual> {
    let denoiser = registry.get(denoiser_id)?;
    let denoised = denoiser.denoise(img, cfg)?;
    if !denoised.same_shape(img.raster()) {
        return Err(Error::Dimension(format!(
            "denoiser {denoiser_id:?} changed the shape to {}x{}",
            denoised.width(),
            denoised.height()
        )));
    }
    NoiseResidual::new(img.raster().zip_with(&denoised, |i, f| i - f)?)
}

/// Running sums `sum W*I` and `sum I^2` of the MLE estimator.
///
/// Accumulators merge associatively, so the reduction can be split across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintAccumulator {
    width: usize,
    height: usize,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    count: usize,
}

impl FingerprintAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            numerator: vec![0.0; width * height],
            denominator: vec![0.0; width * height],
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, image: &ImagePlane, residual: &NoiseResidual) -> Result<()> {
        let (i, w) = (image.raster(), residual.raster());
        i.ensure_same_shape(w, "image and residual")?;
        if (i.width(), i.height()) != (self.width, self.height) {
            return Err(Error::Dimension(format!(
                "image {}x{} does not match accumulator {}x{}",
                i.width(),
                i.height(),
                self.width,
                self.height
            )));
        }
        for (((num, den), &iv), &wv) in self
            .numerator
            .iter_mut()
            .zip(self.denominator.iter_mut())
            .zip(i.data())
            .zip(w.data())
        {
            *num += wv * iv;
            *den += iv * iv;
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Result<Self> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Dimension("cannot merge accumulators of different size".into()));
        }
        for (a, b) in self.numerator.iter_mut().zip(&other.numerator) {
            *a += b;
        }
        for (a, b) in self.denominator.iter_mut().zip(&other.denominator) {
            *a += b;
        }
        self.count += other.count;
        Ok(self)
    }

    /// `K = sum W*I / sum I^2` per pixel.
    pub fn finish(self) -> Result<Fingerprint> {
        if self.count == 0 {
            return Err(Error::Input("no images accumulated".into()));
        }
        if let Some(idx) = self.denominator.iter().position(|&d| d <= 0.0) {
            return Err(Error::Degenerate(format!(
                "zero intensity energy at pixel (row {}, col {})",
                idx / self.width,
                idx % self.width
            )));
        }
        let data = self
            .numerator
            .iter()
            .zip(&self.denominator)
            .map(|(n, d)| n / d)
            .collect();
        Fingerprint::new(Raster::new(self.width, self.height, data)?, self.count)
    }
}

fn check_stack(images: &[ImagePlane], residuals: &[NoiseResidual]) -> Result<(usize, usize)> {
    if images.is_empty() {
        return Err(Error::Input("no images given".into()));
    }
    if images.len() != residuals.len() {
        return Err(Error::Input(format!(
            "{} images but {} residuals",
            images.len(),
            residuals.len()
        )));
    }
    let (w, h) = (images[0].width(), images[0].height());
    for (k, (i, r)) in images.iter().zip(residuals).enumerate() {
        if (i.width(), i.height()) != (w, h) || (r.width(), r.height()) != (w, h) {
            return Err(Error::Dimension(format!(
                "pair {k} is {}x{}/{}x{}, expected {w}x{h}",
                i.width(),
                i.height(),
                r.width(),
                r.height()
            )));
        }
    }
    Ok((w, h))
}

/// MLE fingerprint over image/residual pairs, reduced in parallel.
pub fn estimate_fingerprint(images: &[ImagePlane], residuals: &[NoiseResidual]) -> Result<Fingerprint> {
    let (w, h) = check_stack(images, residuals)?;
    images
        .par_iter()
        .zip(residuals.par_iter())
        .try_fold(
            || FingerprintAccumulator::new(w, h),
            |mut acc, (i, r)| {
                acc.add(i, r)?;
                Ok(acc)
            },
        )
        .try_reduce(|| FingerprintAccumulator::new(w, h), |a, b| a.merge(b))?
        .finish()
}

/// Single-threaded variant of [`estimate_fingerprint`].
pub fn estimate_fingerprint_sequential(
    images: &[ImagePlane],
    residuals: &[NoiseResidual],
) -> Result<Fingerprint> {
    let (w, h) = check_stack(images, residuals)?;
    let mut acc = FingerprintAccumulator::new(w, h);
    for (i, r) in images.iter().zip(residuals) {
        acc.add(i, r)?;
    }
    acc.finish()
}

/// Removes row means, then column means.
pub fn zero_mean(fp: &Fingerprint) -> Fingerprint {
    let mut r = fp.raster.clone();
    let w = r.width();
    for (row, m) in r.row_means().into_iter().enumerate() {
        for v in &mut r.data_mut()[row * w..(row + 1) * w] {
            *v -= m;
        }
    }
    let cols = r.col_means();
    for row in r.data_mut().chunks_mut(w.max(1)) {
        for (v, m) in row.iter_mut().zip(&cols) {
            *v -= m;
        }
    }
    fp.with_raster(r)
}

/// Frequency-domain Wiener filter that attenuates spectral peaks.
///
/// Each DFT coefficient is scaled by `clamp(s0 / s_local, 0, 1)`, where
/// `s_local` is the mean squared magnitude over the circular 3x3
/// neighborhood and `s0` is the global mean squared magnitude.
pub fn wiener_freq(fp: &Fingerprint) -> Fingerprint {
    let (w, h) = (fp.width(), fp.height());
    let mut spectrum = fft2::forward(&fp.raster);
    let power: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
    let global = power.iter().sum::<f64>() / power.len().max(1) as f64;
    if global == 0.0 {
        return fp.with_raster(Raster::zeros(w, h));
    }
    let gains: Vec<f64> = (0..h)
        .flat_map(|u| (0..w).map(move |v| (u, v)))
        .map(|(u, v)| {
            let mut sum = 0.0;
            for du in [h - 1, 0, 1] {
                for dv in [w - 1, 0, 1] {
                    sum += power[((u + du) % h) * w + (v + dv) % w];
                }
            }
            let local = sum / 9.0;
            if local > 0.0 {
                (global / local).clamp(0.0, 1.0)
            } else {
                1.0
            }
        })
        .collect();
    for (z, g) in spectrum.iter_mut().zip(&gains) {
        *z *= Complex64::new(*g, 0.0);
    }
    let (out, max_imag) = fft2::inverse_real(spectrum, w, h);
    debug_assert!(max_imag <= 1e-9 * (1.0 + global.sqrt()), "imaginary residue {max_imag}");
    fp.with_raster(out)
}

/// Reference-fingerprint post-processing: [`zero_mean`] then [`wiener_freq`].
///
/// Rejects fingerprints that were already post-processed.
pub fn postprocess(fp: &Fingerprint) -> Result<Fingerprint> {
    if fp.postprocessed {
        return Err(Error::Config(
            "fingerprint is already post-processed".into(),
        ));
    }
    let mut out = wiener_freq(&zero_mean(fp));
    out.postprocessed = true;
    Ok(out)
}

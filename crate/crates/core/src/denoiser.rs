//! Wavelet-domain locally adaptive Wiener filter and the denoiser registry.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::raster::{ImagePlane, Raster};
use crate::wavelet::{wavelet_forward, wavelet_inverse};

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserConfig {
    /// Noise standard deviation in intensity units.
    pub sigma: f64,
    /// Wavelet decomposition depth.
    pub levels: usize,
    /// Odd window widths for the local variance estimate.
    pub window_sizes: Vec<usize>,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            levels: 4,
            window_sizes: vec![3, 5, 7, 9],
        }
    }
}

impl DenoiserConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be >= 1".into()));
        }
        if self.window_sizes.is_empty() {
            return Err(Error::Config("at least one window size is required".into()));
        }
        if let Some(w) = self.window_sizes.iter().find(|&&w| w < 3 || w % 2 == 0) {
            return Err(Error::Config(format!("window size {w} must be odd and >= 3")));
        }
        Ok(())
    }
}

/// Shape-preserving map from an image to its noise-free estimate.
///
/// The output is a plain raster: the estimate may overshoot `[0, 255]`
/// slightly near strong edges.
pub trait Denoiser: Send + Sync {
    fn id(&self) -> &str;
    fn denoise(&self, img: &ImagePlane, cfg: &DenoiserConfig) -> Result<Raster>;
}

/// Wiener gain applied to a detail coefficient given its estimated signal variance.
#[inline]
pub fn shrinkage_gain(signal_var: f64, sigma: f64) -> f64 {
    let noise = sigma * sigma;
    if signal_var <= 0.0 {
        0.0
    } else {
        signal_var / (signal_var + noise)
    }
}

/// Per-coefficient signal variance: `max(0, min_w mean_w(c^2) - sigma^2)`.
///
/// Windows are truncated at the band borders.
pub fn local_signal_variance(band: &Raster, window_sizes: &[usize], sigma: f64) -> Raster {
    let (w, h) = (band.width(), band.height());
    // Summed-area table of squared coefficients, (w+1)x(h+1).
    let stride = w + 1;
    let mut sat = vec![0.0; (w + 1) * (h + 1)];
    for r in 0..h {
        let mut run = 0.0;
        for c in 0..w {
            let v = band.get(r, c);
            run += v * v;
            sat[(r + 1) * stride + c + 1] = sat[r * stride + c + 1] + run;
        }
    }
    let noise = sigma * sigma;
    Raster::from_fn(w, h, |r, c| {
        let mut best = f64::INFINITY;
        for &size in window_sizes {
            let half = size / 2;
            let (r0, r1) = (r.saturating_sub(half), (r + half + 1).min(h));
            let (c0, c1) = (c.saturating_sub(half), (c + half + 1).min(w));
            let sum = sat[r1 * stride + c1] - sat[r0 * stride + c1] - sat[r1 * stride + c0]
                + sat[r0 * stride + c0];
            let mean = sum / ((r1 - r0) * (c1 - c0)) as f64;
            best = best.min(mean);
        }
        (best - noise).max(0.0)
    })
}

/// The built-in `"dwt"` filter.
#[derive(Clone, Copy, Debug, Default)]
pub struct WaveletWiener;

impl Denoiser for WaveletWiener {
    fn id(&self) -> &str {
        "dwt"
    }

    fn denoise(&self, img: &ImagePlane, cfg: &DenoiserConfig) -> Result<Raster> {
        denoise(img, cfg)
    }
}

/// Locally adaptive Wiener shrinkage of every detail subband; the
/// approximation band passes unchanged.
pub fn denoise(img: &ImagePlane, cfg: &DenoiserConfig) -> Result<Raster> {
    cfg.validate()?;
    if img.width() <= 1 || img.height() <= 1 {
        return Err(Error::Dimension(format!(
            "cannot denoise a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let mut pyr = wavelet_forward(img.raster(), cfg.levels)?;
    for level in &mut pyr.details {
        for band in level.bands_mut() {
            let var = local_signal_variance(band, &cfg.window_sizes, cfg.sigma);
            for (c, v) in band.data_mut().iter_mut().zip(var.data()) {
                *c *= shrinkage_gain(*v, cfg.sigma);
            }
        }
    }
    wavelet_inverse(&pyr)
}

/// Denoisers addressable by string id.
#[derive(Clone)]
pub struct DenoiserRegistry {
    entries: BTreeMap<String, Arc<dyn Denoiser>>,
}

impl Default for DenoiserRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(WaveletWiener));
        reg
    }
}

impl DenoiserRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces a denoiser under its own id.
    pub fn register(&mut self, denoiser: Arc<dyn Denoiser>) {
        self.entries.insert(denoiser.id().to_owned(), denoiser);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Denoiser>> {
        self.entries.get(id).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown denoiser {id:?} (known: {})",
                self.ids().join(", ")
            ))
        })
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

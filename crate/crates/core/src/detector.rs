//! Normalized cross-correlation and the peak-to-correlation-energy detector.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft2;
use crate::raster::{ImagePlane, Raster};

/// Which shifts enter the PCE denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OmegaMode {
    /// Average energy over all shifts outside the peak neighborhood.
    #[default]
    Exclude,
    /// Sum over the neighborhood itself, as the formula is sometimes printed.
    Include,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PceConfig {
    pub tau: f64,
    /// Half-width of the square neighborhood around the zero shift.
    pub omega_radius: usize,
    pub omega_mode: OmegaMode,
}

impl Default for PceConfig {
    fn default() -> Self {
        Self {
            tau: 60.0,
            omega_radius: 5,
            omega_mode: OmegaMode::Exclude,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PceResult {
    pub rho_zero: f64,
    pub pce: f64,
    /// Circular shift `(row, col)` of the largest `|rho_s|`, wrapped to signed range.
    pub peak_shift: (i64, i64),
    pub decision: bool,
    pub tau: f64,
}

fn centered(x: &Raster, what: &str) -> Result<(Vec<f64>, f64)> {
    let m = x.mean();
    let c: Vec<f64> = x.data().iter().map(|v| v - m).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate(format!("{what} is constant")));
    }
    Ok((c, norm))
}

/// Normalized cross-correlation of two equally shaped rasters.
pub fn corr(x: &Raster, y: &Raster) -> Result<f64> {
    x.ensure_same_shape(y, "correlation operands")?;
    let (xc, nx) = centered(x, "first operand")?;
    let (yc, ny) = centered(y, "second operand")?;
    let dot: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
    Ok(dot / (nx * ny))
}

/// Normalized circular cross-correlation for every shift, computed via FFT.
///
/// Entry `(sr, sc)` is `sum_p w[p] k[p - s]` over centered, unit-norm operands.
pub fn correlation_surface(w: &Raster, k: &Raster) -> Result<Raster> {
    w.ensure_same_shape(k, "correlation operands")?;
    let (wc, nw) = centered(w, "probe operand")?;
    let (kc, nk) = centered(k, "fingerprint operand")?;
    let (width, height) = (w.width(), w.height());
    let fw = fft2::forward(&Raster::new(width, height, wc)?);
    let fk = fft2::forward(&Raster::new(width, height, kc)?);
    let product: Vec<Complex64> = fw.iter().zip(&fk).map(|(a, b)| a * b.conj()).collect();
    let (surface, _) = fft2::inverse_real(product, width, height);
    let scale = 1.0 / (nw * nk);
    Ok(surface.map(|v| v * scale))
}

/// Explicit all-shifts correlation surface; quadratic cost.
pub fn correlation_surface_naive(w: &Raster, k: &Raster) -> Result<Raster> {
    w.ensure_same_shape(k, "correlation operands")?;
    let (wc, nw) = centered(w, "probe operand")?;
    let (kc, nk) = centered(k, "fingerprint operand")?;
    let (width, height) = (w.width(), w.height());
    Ok(Raster::from_fn(width, height, |sr, sc| {
        let mut acc = 0.0;
        for r in 0..height {
            let kr = (r + height - sr) % height;
            for c in 0..width {
                let kcol = (c + width - sc) % width;
                acc += wc[r * width + c] * kc[kr * width + kcol];
            }
        }
        acc / (nw * nk)
    }))
}

#[inline]
fn wrap_signed(s: usize, n: usize) -> i64 {
    if s > n / 2 {
        s as i64 - n as i64
    } else {
        s as i64
    }
}

#[inline]
fn circular_distance(s: usize, n: usize) -> usize {
    s.min(n - s)
}

/// Evaluates the PCE statistic on a precomputed correlation surface.
pub fn pce_from_surface(surface: &Raster, cfg: &PceConfig) -> Result<PceResult> {
    let (w, h) = (surface.width(), surface.height());
    let m = w * h;
    let side = 2 * cfg.omega_radius + 1;
    let omega_count = side.min(w) * side.min(h);
    if omega_count >= m {
        return Err(Error::Config(format!(
            "peak neighborhood of radius {} covers all {m} shifts",
            cfg.omega_radius
        )));
    }
    let rho_zero = surface.get(0, 0);
    let (mut inside, mut outside) = (0.0, 0.0);
    let (mut peak, mut peak_val) = ((0usize, 0usize), f64::NEG_INFINITY);
    for r in 0..h {
        let dr = circular_distance(r, h);
        for c in 0..w {
            let v = surface.get(r, c);
            if v.abs() > peak_val {
                peak_val = v.abs();
                peak = (r, c);
            }
            if dr <= cfg.omega_radius && circular_distance(c, w) <= cfg.omega_radius {
                inside += v * v;
            } else {
                outside += v * v;
            }
        }
    }
    let energy = match cfg.omega_mode {
        OmegaMode::Exclude => outside,
        OmegaMode::Include => inside,
    };
    if !(energy > 0.0) {
        return Err(Error::Degenerate("zero correlation energy in PCE denominator".into()));
    }
    let pce = (m - omega_count) as f64 * rho_zero * rho_zero / energy * rho_zero.signum();
    Ok(PceResult {
        rho_zero,
        pce,
        peak_shift: (wrap_signed(peak.0, h), wrap_signed(peak.1, w)),
        decision: pce > cfg.tau,
        tau: cfg.tau,
    })
}

/// Frequency-domain PCE between a probe residual and a fingerprint operand.
pub fn pce(w: &Raster, k: &Raster, cfg: &PceConfig) -> Result<PceResult> {
    pce_from_surface(&correlation_surface(w, k)?, cfg)
}

/// Same contract as [`pce`], computed by direct summation over all shifts.
pub fn pce_naive(w: &Raster, k: &Raster, cfg: &PceConfig) -> Result<PceResult> {
    pce_from_surface(&correlation_surface_naive(w, k)?, cfg)
}

/// Intensity-weighted fingerprint operand `I * K` for the matched-filter detector.
pub fn weighted_probe(fingerprint: &Raster, probe: &ImagePlane) -> Result<Raster> {
    fingerprint.zip_with(probe.raster(), |k, i| k * i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(w: usize, h: usize, seed: u64) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        Raster::from_fn(w, h, |_, _| n.sample(&mut rng))
    }

    fn shifted(k: &Raster, dr: usize, dc: usize) -> Raster {
        let (w, h) = (k.width(), k.height());
        Raster::from_fn(w, h, |r, c| k.get((r + h - dr) % h, (c + w - dc) % w))
    }

    #[test]
    fn toy_matrices() {
        let k = Raster::new(2, 2, vec![0.2, 0.2, -0.2, -0.2]).unwrap();
        let k1 = Raster::new(2, 2, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let k2 = Raster::new(2, 2, vec![-0.1, 0.1, -0.1, 0.1]).unwrap();
        assert!((corr(&k1, &k).unwrap() - 1.0).abs() <= 1e-12);
        assert!(corr(&k2, &k).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn constant_operand_is_degenerate() {
        let x = Raster::filled(3, 3, 2.0);
        let y = gaussian(3, 3, 1);
        assert!(matches!(corr(&x, &y), Err(Error::Degenerate(_))));
        assert!(matches!(pce(&y, &x, &PceConfig::default()), Err(Error::Degenerate(_))));
        assert!(matches!(corr(&y, &gaussian(4, 3, 1)), Err(Error::Dimension(_))));
    }

    #[test]
    fn perfect_match_and_sign() {
        let k = gaussian(32, 32, 2);
        let cfg = PceConfig::default();
        let pos = pce(&k, &k, &cfg).unwrap();
        assert!((pos.rho_zero - 1.0).abs() < 1e-12);
        assert!(pos.pce > 100.0 && pos.decision);
        assert_eq!(pos.peak_shift, (0, 0));
        let neg = pce(&k.map(|v| -v), &k, &cfg).unwrap();
        assert!((neg.pce + pos.pce).abs() <= 1e-9 * pos.pce);
        assert!(!neg.decision);
    }

    #[test]
    fn naive_agrees_on_16x16() {
        for seed in 0..5 {
            let w = gaussian(16, 16, 10 + seed);
            let k = gaussian(16, 16, 20 + seed).zip_with(&w, |a, b| a + 0.3 * b).unwrap();
            for mode in [OmegaMode::Exclude, OmegaMode::Include] {
                let cfg = PceConfig { omega_mode: mode, omega_radius: 2, ..Default::default() };
                let a = pce(&w, &k, &cfg).unwrap();
                let b = pce_naive(&w, &k, &cfg).unwrap();
                assert!((a.pce - b.pce).abs() <= 1e-6 * b.pce.abs());
                assert_eq!(a.peak_shift, b.peak_shift);
            }
        }
    }

    #[test]
    fn recovers_constructed_shift() {
        let k = gaussian(16, 16, 3);
        let w = shifted(&k, 3, 5);
        let cfg = PceConfig::default();
        assert_eq!(pce(&w, &k, &cfg).unwrap().peak_shift, (3, 5));
        assert_eq!(pce_naive(&w, &k, &cfg).unwrap().peak_shift, (3, 5));
        let w = shifted(&k, 14, 1);
        assert_eq!(pce(&w, &k, &cfg).unwrap().peak_shift, (-2, 1));
    }

    #[test]
    fn zero_radius_matched_pair() {
        let k = gaussian(16, 16, 4);
        let w = k.zip_with(&gaussian(16, 16, 5), |a, b| a + b).unwrap();
        let r = pce(&w, &k, &PceConfig { omega_radius: 0, ..Default::default() }).unwrap();
        assert!(r.pce.is_finite() && r.pce > 0.0);
    }

    #[test]
    fn oversized_omega_is_config_error() {
        let k = gaussian(8, 8, 6);
        let cfg = PceConfig { omega_radius: 4, ..Default::default() };
        assert!(matches!(pce(&k, &k, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn decision_uses_strict_threshold() {
        let k = gaussian(16, 16, 7);
        let r = pce(&k, &k, &PceConfig::default()).unwrap();
        let at = pce(&k, &k, &PceConfig { tau: r.pce, ..Default::default() }).unwrap();
        assert!(!at.decision);
    }

    #[test]
    fn null_mean_is_near_zero() {
        let cfg = PceConfig::default();
        let mut sum = 0.0;
        for t in 0..1000 {
            let w = gaussian(32, 32, 1000 + 2 * t);
            let k = gaussian(32, 32, 1001 + 2 * t);
            sum += pce(&w, &k, &cfg).unwrap().pce;
        }
        let mean = sum / 1000.0;
        assert!(mean.abs() <= 0.5, "null mean {mean}");
    }

    #[test]
    fn constant_probe_weighting_is_a_scale() {
        let k = gaussian(16, 16, 8);
        let w = k.zip_with(&gaussian(16, 16, 9), |a, b| a + 2.0 * b).unwrap();
        let probe = ImagePlane::filled(16, 16, 77.0).unwrap();
        let cfg = PceConfig::default();
        let plain = pce(&w, &k, &cfg).unwrap();
        let weighted = pce(&w, &weighted_probe(&k, &probe).unwrap(), &cfg).unwrap();
        assert!((plain.pce - weighted.pce).abs() <= 1e-9 * plain.pce.abs());
        let dark = ImagePlane::filled(16, 16, 0.0).unwrap();
        assert!(matches!(
            pce(&w, &weighted_probe(&k, &dark).unwrap(), &cfg),
            Err(Error::Degenerate(_))
        ));
    }

    proptest! {
        #[test]
        fn affine_invariance(seed in 0u64..1000, alpha in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], beta in -10.0f64..10.0) {
            let x = gaussian(8, 8, seed);
            let y = gaussian(8, 8, seed + 7777);
            let base = corr(&x, &y).unwrap();
            let moved = corr(&x.map(|v| alpha * v + beta), &y).unwrap();
            prop_assert!((moved - alpha.signum() * base).abs() <= 1e-9);
        }

        #[test]
        fn surface_is_bounded(seed in 0u64..1000) {
            let x = gaussian(12, 10, seed);
            let y = gaussian(12, 10, seed + 1);
            let s = correlation_surface(&x, &y).unwrap();
            prop_assert!(s.data().iter().all(|v| v.abs() <= 1.0 + 1e-9));
        }

        #[test]
        fn pce_scale_invariance(seed in 0u64..1000, a in 0.01f64..100.0, b in 0.01f64..100.0) {
            let k = gaussian(16, 16, seed);
            let w = k.zip_with(&gaussian(16, 16, seed + 1), |p, q| p + q).unwrap();
            let cfg = PceConfig::default();
            let base = pce(&w, &k, &cfg).unwrap().pce;
            let scaled = pce(&w.map(|v| a * v), &k.map(|v| b * v), &cfg).unwrap().pce;
            prop_assert!((base - scaled).abs() <= 1e-9 * base.abs().max(1.0));
        }
    }
}

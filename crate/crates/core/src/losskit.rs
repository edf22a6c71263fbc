//! Per-sample MSE and correlation losses with analytic gradients.
//!
//! Gradients are always `dL/dz` with respect to the first operand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Clone, Debug, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub grad: Raster,
}

/// `||z - t||^2 / (2m)` and its gradient `(z - t) / m`.
pub fn mse_loss(z: &Raster, target: &Raster) -> Result<LossEval> {
    z.ensure_same_shape(target, "mse operands")?;
    let m = z.len() as f64;
    let diff = z.zip_with(target, |a, b| a - b)?;
    let loss = diff.data().iter().map(|d| d * d).sum::<f64>() / (2.0 * m);
    Ok(LossEval {
        loss,
        grad: diff.map(|d| d / m),
    })
}

struct Centered {
    values: Vec<f64>,
    norm: f64,
}

fn center(x: &Raster, what: &str) -> Result<Centered> {
    let mean = x.mean();
    let values: Vec<f64> = x.data().iter().map(|v| v - mean).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate(format!("{what} is constant")));
    }
    Ok(Centered { values, norm })
}

/// `1 - rho(z, k)` with the exact gradient.
///
/// With `zc`, `kc` the centered operands, `A = zc.kc`, `B = |zc|`, `C = |kc|`:
/// `dL/dz = (A zc - B^2 kc) / (B^3 C)`. The centering Jacobian drops out
/// because both `zc` and `kc` already sum to zero.
pub fn rho_loss(z: &Raster, k: &Raster) -> Result<LossEval> {
    z.ensure_same_shape(k, "rho-loss operands")?;
    let zc = center(z, "network output")?;
    let kc = center(k, "reference")?;
    let a: f64 = zc.values.iter().zip(&kc.values).map(|(p, q)| p * q).sum();
    let (b, c) = (zc.norm, kc.norm);
    let rho = a / (b * c);
    let denom = b * b * b * c;
    let grad = zc
        .values
        .iter()
        .zip(&kc.values)
        .map(|(zv, kv)| (a * zv - b * b * kv) / denom)
        .collect();
    Ok(LossEval {
        loss: (1.0 - rho).clamp(0.0, 2.0),
        grad: Raster::new(z.width(), z.height(), grad)?,
    })
}

/// The backward formula in its commonly printed form:
/// `[((z - z̄).(k - k̄)) z - |z - z̄|^2 k] / |z - z̄|^3`.
///
/// It omits the `|k - k̄|` normalizer and uses uncentered `z`, `k`; kept for comparison only.
pub fn rho_grad_paper(z: &Raster, k: &Raster) -> Result<Raster> {
    z.ensure_same_shape(k, "rho-loss operands")?;
    let zc = center(z, "network output")?;
    let kc = center(k, "reference")?;
    let a: f64 = zc.values.iter().zip(&kc.values).map(|(p, q)| p * q).sum();
    let b2 = zc.norm * zc.norm;
    let b3 = b2 * zc.norm;
    z.zip_with(k, |zv, kv| (a * zv - b2 * kv) / b3)
}

/// Central finite-difference gradient of a scalar function.
pub fn finite_difference<F>(f: F, z: &Raster, step: f64) -> Result<Raster>
where
    F: Fn(&Raster) -> Result<f64>,
{
    let mut probe = z.clone();
    let mut grad = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let up = f(&probe)?;
        probe.data_mut()[i] = orig - step;
        let down = f(&probe)?;
        probe.data_mut()[i] = orig;
        grad.push((up - down) / (2.0 * step));
    }
    Raster::new(z.width(), z.height(), grad)
}

/// `max|a - b| / max|b|`, the error of `a` relative to the reference `b`.
pub fn relative_error(a: &Raster, reference: &Raster) -> f64 {
    let scale = reference.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.max_abs_diff(reference) / scale.max(f64::MIN_POSITIVE)
}

/// Outcome of the gradient self-check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientCheckReport {
    pub seed: u64,
    pub trials: usize,
    pub size: usize,
    pub step: f64,
    pub tolerance: f64,
    pub mse_max_rel_error: f64,
    pub rho_max_rel_error: f64,
    /// Deviation of the printed backward formula from finite differences.
    pub printed_formula_max_rel_deviation: f64,
    pub passed: bool,
}

pub const GRADIENT_TOLERANCE: f64 = 1e-5;

/// Compares the analytic gradients against central differences on random
/// `size`x`size` unit-variance instances.
pub fn gradient_check(seed: u64, trials: usize, size: usize) -> Result<GradientCheckReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let step = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut sample = || Raster::from_fn(size, size, |_, _| normal.sample(&mut rng));
    let (mut mse_err, mut rho_err, mut paper_dev) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let z = sample();
        let k = sample();

        let fd = finite_difference(|x| Ok(mse_loss(x, &k)?.loss), &z, step)?;
        mse_err = mse_err.max(relative_error(&mse_loss(&z, &k)?.grad, &fd));

        let fd = finite_difference(|x| Ok(rho_loss(x, &k)?.loss), &z, step)?;
        rho_err = rho_err.max(relative_error(&rho_loss(&z, &k)?.grad, &fd));
        paper_dev = paper_dev.max(relative_error(&rho_grad_paper(&z, &k)?, &fd));
    }
    Ok(GradientCheckReport {
        seed,
        trials,
        size,
        step,
        tolerance: GRADIENT_TOLERANCE,
        mse_max_rel_error: mse_err,
        rho_max_rel_error: rho_err,
        printed_formula_max_rel_deviation: paper_dev,
        passed: mse_err <= GRADIENT_TOLERANCE && rho_err <= GRADIENT_TOLERANCE,
    })
}

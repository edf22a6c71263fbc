use prnu_core::denoiser::DenoiserRegistry;
use prnu_core::extraction::extract_residual;
use prnu_core::imageio::{save_plane, write_residual};
use prnu_core::ImagePlane;

use crate::args::DenoiseArgs;
use crate::commands::fingerprint::{denoiser_config, load_plane};
use crate::error::CliResult;

pub fn run_denoise(args: &DenoiseArgs) -> CliResult<()> {
    let img = load_plane(&args.image, args.crop)?;
    let registry = DenoiserRegistry::default();
    let cfg = denoiser_config(args.denoiser.sigma);
    let residual = extract_residual(&img, &registry, &args.denoiser.denoiser, &cfg)?;
    let wants_residual = args.residual
        || args
            .out
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("prnu"));
    if wants_residual {
        write_residual(&residual, &args.out)?;
    } else {
        let denoised = img
            .raster()
            .zip_with(residual.raster(), |i, w| (i - w).clamp(0.0, 255.0))?;
        save_plane(&ImagePlane::new(denoised)?, &args.out)?;
    }
    Ok(())
}

use std::io::Write;
use std::path::{Path, PathBuf};

use prnu_core::denoiser::DenoiserRegistry;
use prnu_core::detector::{pce, weighted_probe, PceConfig};
use prnu_core::extraction::extract_residual;
use prnu_core::imageio::center_crop_raster;
use prnu_core::{Error, Fingerprint, Raster};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{MatchArgs, ReportFormat};
use crate::commands::fingerprint::{denoiser_config, load_fingerprint, load_plane};
use crate::commands::simulate::{ImageKind, Manifest};
use crate::commands::with_jobs;
use crate::error::{CliError, CliResult};

pub const REPORT_SCHEMA: u32 = 1;

/// One probe/fingerprint comparison. Failed probes carry `error` and no scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub schema: u32,
    pub probe_path: String,
    pub camera_id: String,
    pub rho_zero: Option<f64>,
    pub pce: Option<f64>,
    pub decision: Option<bool>,
    pub tau: f64,
    pub extractor_id: String,
    /// Source camera of the probe when known (manifest mode).
    pub probe_camera_id: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonReport {
    pub schema: u32,
    pub records: Vec<MatchRecord>,
}

struct ProbeSpec {
    path: PathBuf,
    label: String,
    offset: Option<[usize; 2]>,
    camera: Option<String>,
}

fn probes_from_manifest(manifest_path: &Path) -> CliResult<Vec<ProbeSpec>> {
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    Ok(manifest
        .images
        .into_iter()
        .filter(|img| img.kind == ImageKind::Probe)
        .map(|img| ProbeSpec {
            path: root.join(&img.path),
            label: img.path,
            offset: img.offset,
            camera: Some(img.camera_id),
        })
        .collect())
}

fn fingerprint_operand(
    fp: &Raster,
    probe: &ProbeSpec,
    width: usize,
    height: usize,
    crop: bool,
) -> prnu_core::Result<Raster> {
    if let Some([x, y]) = probe.offset {
        return fp.window(x, y, width, height);
    }
    if crop {
        return center_crop_raster(fp, width, height);
    }
    if (fp.width(), fp.height()) != (width, height) {
        return Err(Error::Dimension(format!(
            "probe is {width}x{height}, fingerprint is {}x{}",
            fp.width(),
            fp.height()
        )));
    }
    Ok(fp.clone())
}

fn score(
    probe: &ProbeSpec,
    fp: &Fingerprint,
    args: &MatchArgs,
    registry: &DenoiserRegistry,
    pce_cfg: &PceConfig,
) -> prnu_core::Result<(f64, f64, bool)> {
    let img = load_plane(&probe.path, args.crop)?;
    let cfg = denoiser_config(args.denoiser.sigma);
    let operand = fingerprint_operand(&fp.raster, probe, img.width(), img.height(), args.crop.is_some())?;
    let operand = if args.weighted {
        weighted_probe(&operand, &img)?
    } else {
        operand
    };
    let w = extract_residual(&img, registry, &args.denoiser.denoiser, &cfg)?;
    let r = pce(w.raster(), &operand, pce_cfg)?;
    Ok((r.rho_zero, r.pce, r.decision))
}

pub fn run_match(args: &MatchArgs) -> CliResult<Vec<MatchRecord>> {
    let fp = load_fingerprint(&args.fingerprint)?;
    let registry = DenoiserRegistry::default();
    registry.get(&args.denoiser.denoiser)?;
    denoiser_config(args.denoiser.sigma).validate()?;
    let pce_cfg = PceConfig {
        tau: args.tau,
        omega_radius: args.omega_radius,
        ..PceConfig::default()
    };
    let mut probes: Vec<ProbeSpec> = args
        .probes
        .iter()
        .map(|p| ProbeSpec {
            path: p.clone(),
            label: p.display().to_string(),
            offset: None,
            camera: None,
        })
        .collect();
    if let Some(m) = &args.manifest {
        probes.extend(probes_from_manifest(m)?);
    }

    let records = with_jobs(args.jobs, || {
        probes
            .par_iter()
            .map(|probe| {
                let outcome = score(probe, &fp, args, &registry, &pce_cfg);
                let (rho_zero, pce, decision, error) = match outcome {
                    Ok((r, p, d)) => (Some(r), Some(p), Some(d), None),
                    Err(e) => (None, None, None, Some(e.to_string())),
                };
                MatchRecord {
                    schema: REPORT_SCHEMA,
                    probe_path: probe.label.clone(),
                    camera_id: fp.camera_id.clone(),
                    rho_zero,
                    pce,
                    decision,
                    tau: args.tau,
                    extractor_id: args.denoiser.denoiser.clone(),
                    probe_camera_id: probe.camera.clone(),
                    error,
                }
            })
            .collect::<Vec<_>>()
    })?;
    Ok(records)
}

pub fn write_report(records: &[MatchRecord], format: ReportFormat, out: &mut dyn Write) -> CliResult<()> {
    match format {
        ReportFormat::Json => {
            let doc = JsonReport {
                schema: REPORT_SCHEMA,
                records: records.to_vec(),
            };
            serde_json::to_writer_pretty(&mut *out, &doc)
                .map_err(|e| CliError::input(format!("cannot write report: {e}")))?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
            w.write_record([
                "schema",
                "probe_path",
                "camera_id",
                "rho_zero",
                "pce",
                "decision",
                "tau",
                "extractor_id",
                "probe_camera_id",
                "error",
            ])
            .map_err(|e| CliError::input(format!("cannot write report: {e}")))?;
            for r in records {
                w.serialize(r)
                    .map_err(|e| CliError::input(format!("cannot write report: {e}")))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
pub fn read_csv_report(text: &str) -> CliResult<Vec<MatchRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize()
        .collect::<Result<Vec<MatchRecord>, _>>()
        .map_err(|e| CliError::input(format!("bad CSV report: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<MatchRecord> {
        vec![
            MatchRecord {
                schema: 1,
                probe_path: "a,b.png".into(),
                camera_id: "cam00".into(),
                rho_zero: Some(0.125),
                pce: Some(812.5),
                decision: Some(true),
                tau: 60.0,
                extractor_id: "dwt".into(),
                probe_camera_id: None,
                error: None,
            },
            MatchRecord {
                schema: 1,
                probe_path: "missing.png".into(),
                camera_id: "cam00".into(),
                rho_zero: None,
                pce: None,
                decision: None,
                tau: 60.0,
                extractor_id: "dwt".into(),
                probe_camera_id: Some("cam01".into()),
                error: Some("dimension error: \"x\"".into()),
            },
        ]
    }

    #[test]
    fn csv_and_json_agree() {
        let records = sample();
        let mut csv_out = Vec::new();
        write_report(&records, ReportFormat::Csv, &mut csv_out).unwrap();
        let mut json_out = Vec::new();
        write_report(&records, ReportFormat::Json, &mut json_out).unwrap();
        let from_csv = read_csv_report(std::str::from_utf8(&csv_out).unwrap()).unwrap();
        let from_json: JsonReport = serde_json::from_slice(&json_out).unwrap();
        assert_eq!(from_csv, records);
        assert_eq!(from_json.records, records);
        assert_eq!(from_json.schema, 1);
    }

    #[test]
    fn empty_report_has_header_only() {
        let mut out = Vec::new();
        write_report(&[], ReportFormat::Csv, &mut out).unwrap();
        assert_eq!(out.iter().filter(|&&b| b == b'\n').count(), 1);
    }
}

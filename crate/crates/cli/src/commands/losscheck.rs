use std::io::Write;

use prnu_core::losskit::{gradient_check, GradientCheckReport};

use crate::args::{LosscheckArgs, ReportFormat};
use crate::error::{CliError, CliResult};

pub fn run_losscheck(args: &LosscheckArgs) -> CliResult<GradientCheckReport> {
    if args.size < 2 {
        return Err(CliError::config("--size must be >= 2"));
    }
    Ok(gradient_check(args.seed, args.trials, args.size)?)
}

pub fn write_losscheck(r: &GradientCheckReport, format: ReportFormat, out: &mut dyn Write) -> CliResult<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, r)
                .map_err(|e| CliError::input(format!("cannot write report: {e}")))?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            writeln!(out, "seed={} trials={} size={}x{} step={:e}", r.seed, r.trials, r.size, r.size, r.step)?;
            writeln!(out, "mse gradient       max rel error {:.3e}", r.mse_max_rel_error)?;
            writeln!(out, "rho gradient       max rel error {:.3e}", r.rho_max_rel_error)?;
            writeln!(
                out,
                "printed formula    max rel deviation {:.3e} (reference only)",
                r.printed_formula_max_rel_deviation
            )?;
            writeln!(
                out,
                "{} (tolerance {:e})",
                if r.passed { "PASS" } else { "FAIL" },
                r.tolerance
            )?;
        }
    }
    Ok(())
}

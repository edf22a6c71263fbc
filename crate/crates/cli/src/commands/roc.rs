use std::io::Write;
use std::path::Path;

use prnu_core::roc::{roc, RocSummary};
use serde::Serialize;

use crate::args::{ReportFormat, RocArgs};
use crate::error::{CliError, CliResult};

/// One score per line; blank lines and `#` comments are skipped.
pub fn read_scores(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>().map_err(|_| {
                CliError::input(format!("{}:{}: not a number: {l:?}", path.display(), i + 1))
            })
        })
        .collect()
}

#[derive(Serialize)]
struct RocDocument<'a> {
    schema: u32,
    #[serde(flatten)]
    summary: &'a RocSummary,
}

pub fn run_roc(args: &RocArgs) -> CliResult<RocSummary> {
    let pos = read_scores(&args.positive)?;
    let neg = read_scores(&args.negative)?;
    Ok(roc(&pos, &neg, &args.fp)?)
}

pub fn write_roc(summary: &RocSummary, format: ReportFormat, out: &mut dyn Write) -> CliResult<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &RocDocument { schema: 1, summary })
                .map_err(|e| CliError::input(format!("cannot write ROC: {e}")))?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            writeln!(out, "# auc={}", summary.auc)?;
            for t in &summary.tp_at_fp {
                writeln!(out, "# tp_at_fp {}={}", t.fp, t.tp)?;
            }
            writeln!(out, "fpr,tpr,threshold")?;
            for p in &summary.points {
                writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
            }
        }
    }
    Ok(())
}

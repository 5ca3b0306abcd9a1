use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::campaign::{CampaignOutput, TrialRecord};
use crate::config::OutputFormat;
use crate::error::{HarnessError, Result};

/// One row per trial; `lhv_value` is empty when absent.
pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    for record in records {
        w.serialize(record)?;
    }
    w.flush().map_err(|e| HarnessError::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

/// Summary (with config echo, version and log base) plus every record.
pub fn write_json<W: Write>(output: &CampaignOutput, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, output)?;
    writeln!(out).map_err(|e| HarnessError::Io {
        path: "<json>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn render(output: &CampaignOutput, format: OutputFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(&output.records, &mut buf)?,
        OutputFormat::Json => write_json(output, &mut buf)?,
    }
    Ok(buf)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit_results(output: &CampaignOutput, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let bytes = render(output, format)?;
    match path {
        Some(p) => {
            let io_err = |e| HarnessError::Io {
                path: p.to_path_buf(),
                source: e,
            };
            let mut w = BufWriter::new(File::create(p).map_err(io_err)?);
            w.write_all(&bytes).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let io_err = |e| HarnessError::Io {
                path: "<stdout>".into(),
                source: e,
            };
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes).map_err(io_err)?;
            stdout.flush().map_err(io_err)
        }
    }
}

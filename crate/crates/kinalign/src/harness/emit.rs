//! Series and snapshot emission: CSV (RFC-quoted) and JSON, floats at 17
//! significant digits so parsing the artifact back reproduces the run
//! bit-for-bit.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2};
use crate::harness::series::RunSeries;
use crate::rates::RateTable;

/// Format a float with 17 significant digits (round-trip exact for f64).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Emit a series as CSV: metadata block first (comment lines), then the
/// header row and quoted records.
pub fn emit_csv(series: &RunSeries, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for (k, v) in &series.metadata {
        writeln!(out, "# {k} = {v}")?;
    }
    {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(&mut out);
        w.write_record(&series.columns)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for row in &series.rows {
            let rec: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            w.write_record(&rec)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        w.flush()?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Emit a series as JSON: `{"metadata": {...}, "columns": [...], "rows": [[...]]}`.
pub fn emit_json(series: &RunSeries, path: &Path) -> Result<()> {
    let doc = serde_json::json!({
        "metadata": series.metadata,
        "columns": series.columns,
        "rows": series.rows,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Emit either format based on a tag.
pub fn emit(series: &RunSeries, format: &str, path: &Path) -> Result<()> {
    match format {
        "csv" => emit_csv(series, path),
        "json" => emit_json(series, path),
        other => Err(Error::Config(format!("unknown output format '{other}'"))),
    }
}

/// Parse a CSV emitted by [`emit_csv`] back into a series.
pub fn parse_csv(path: &Path) -> Result<RunSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut metadata = std::collections::BTreeMap::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(" = ") {
                metadata.insert(k.to_string(), v.to_string());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut series = RunSeries::new(columns);
    series.metadata = metadata;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Config(format!("bad float in csv: {e}")))?;
        series.push_row(row)?;
    }
    Ok(series)
}

/// Snapshot dump: grid values in a flat little-endian binary file plus a
/// JSON sidecar header describing the grid, time, model tag and (when
/// supplied) the rate parameters.
pub fn dump_snapshot1(
    f: &Density1,
    t: f64,
    model: &str,
    rates: Option<&RateTable>,
    path_stem: &Path,
) -> Result<()> {
    let header = serde_json::json!({
        "kind": "density1",
        "v_min": f.grid.v_min,
        "v_max": f.grid.v_max,
        "n": f.grid.n,
        "t": t,
        "model": model,
        "epsilon": rates.map(|r| r.epsilon),
        "rates": rates,
    });
    std::fs::write(
        path_stem.with_extension("json"),
        serde_json::to_string_pretty(&header).map_err(|e| Error::Io(std::io::Error::other(e)))?,
    )?;
    let mut bytes = Vec::with_capacity(8 * f.values.len());
    for &v in &f.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path_stem.with_extension("bin"), bytes)?;
    Ok(())
}

/// Two-particle snapshot dump (row-major values).
pub fn dump_snapshot2(
    f: &Density2,
    t: f64,
    model: &str,
    rates: Option<&RateTable>,
    path_stem: &Path,
) -> Result<()> {
    let header = serde_json::json!({
        "kind": "density2",
        "v_min": f.grid.v_min,
        "v_max": f.grid.v_max,
        "n": f.grid.n,
        "t": t,
        "model": model,
        "epsilon": rates.map(|r| r.epsilon),
        "rates": rates,
    });
    std::fs::write(
        path_stem.with_extension("json"),
        serde_json::to_string_pretty(&header).map_err(|e| Error::Io(std::io::Error::other(e)))?,
    )?;
    let mut bytes = Vec::with_capacity(8 * f.values.len());
    for &v in &f.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path_stem.with_extension("bin"), bytes)?;
    Ok(())
}

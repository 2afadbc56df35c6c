//! Artifact writers.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ctd_core::engine::{SimTrace, SpikeTrain};
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::input)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// One frame per line.
pub fn write_trace_jsonl(path: &Path, trace: &SimTrace) -> CliResult<()> {
    let mut out = create(path)?;
    for frame in &trace.frames {
        serde_json::to_writer(&mut out, frame).map_err(CliError::input)?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Dense `t,sensor,spike` table with `spike` in {0, 1}.
pub fn write_spikes_csv(path: &Path, inputs: &[SpikeTrain], horizon: usize) -> CliResult<()> {
    let mut out = create(path)?;
    let mut grid = vec![vec![false; inputs.len()]; horizon];
    for (col, train) in inputs.iter().enumerate() {
        for &t in &train.times {
            grid[t][col] = true;
        }
    }
    writeln!(out, "t,sensor,spike").map_err(io_err(path))?;
    for (t, row) in grid.iter().enumerate() {
        for (col, &hit) in row.iter().enumerate() {
            writeln!(out, "{t},{},{}", inputs[col].source, hit as u8).map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn write_potential_csv(path: &Path, trace: &SimTrace) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "t,aggregate_potential").map_err(io_err(path))?;
    for f in &trace.frames {
        writeln!(out, "{},{}", f.t, f.aggregate_potential).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

const ROW_HEIGHT: usize = 12;
const LABEL_WIDTH: usize = 40;

/// Raster with one row per sensor then one per neuron and one `spike` rect
/// per spike. Rows carry `data-row="s<id>"` or `data-row="n<id>"`.
pub fn render_raster(inputs: &[SpikeTrain], trace: &SimTrace) -> String {
    let rows: Vec<(String, Vec<usize>)> = inputs
        .iter()
        .map(|s| (format!("s{}", s.source), s.times.clone()))
        .chain(
            trace
                .neuron_ids
                .iter()
                .map(|&n| (format!("n{n}"), trace.spike_times(n))),
        )
        .collect();
    let width = LABEL_WIDTH + trace.horizon;
    let height = ROW_HEIGHT * rows.len().max(1);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (r, (label, times)) in rows.iter().enumerate() {
        let y = r * ROW_HEIGHT;
        let _ = writeln!(
            svg,
            r#"<text x="2" y="{}" font-size="9" font-family="monospace">{label}</text>"#,
            y + ROW_HEIGHT - 3
        );
        for &t in times {
            let _ = writeln!(
                svg,
                r#"<rect class="spike" data-row="{label}" x="{}" y="{}" width="1" height="{}" fill="black"/>"#,
                LABEL_WIDTH + t,
                y + 1,
                ROW_HEIGHT - 2
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_raster(path: &Path, inputs: &[SpikeTrain], trace: &SimTrace) -> CliResult<()> {
    fs::write(path, render_raster(inputs, trace)).map_err(io_err(path))
}

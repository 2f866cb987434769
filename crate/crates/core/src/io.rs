//! File formats.
//!
//! A state file is one line of JSON metadata followed by a CSV table with
//! columns `x,u,phi_1..phi_K`. A charge series is a CSV table with columns
//! `t,h1,h3,h5,nonlocal,l2,sobolev_h1,h_half_1..h_half_K`, optionally preceded
//! by a `#` comment line carrying the run metadata. All numbers are written
//! with 17 significant digits so that values round-trip exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charges::ChargeReport;
use crate::fields::FieldState;
use crate::grid::Grid;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid state header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("invalid table: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl FormatError {
    /// True when the failure came from the file system rather than the content.
    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// Metadata line at the top of a state file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHeader {
    #[serde(rename = "L")]
    pub length: f64,
    pub n_points: usize,
    #[serde(rename = "K")]
    pub components: usize,
    pub t: f64,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_state<W: Write>(
    out: W,
    state: &FieldState,
    lambda: Option<f64>,
    seed: Option<u64>,
) -> Result<()> {
    let grid = state.grid();
    let header = StateHeader {
        length: grid.length(),
        n_points: grid.n_points(),
        components: state.components(),
        t: state.t,
        lambda,
        seed,
    };
    let mut out = BufWriter::new(out);
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    let mut columns = vec!["x".to_string(), "u".to_string()];
    columns.extend((1..=state.components()).map(|i| format!("phi_{i}")));
    writeln!(out, "{}", columns.join(","))?;
    for (j, x) in grid.x().iter().enumerate() {
        let row: Vec<String> =
            std::iter::once(*x).chain(state.fields().map(|f| f[j])).map(fmt_f64).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_state<R: Read>(input: R) -> Result<(StateHeader, FieldState)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    if reader.read_line(&mut first)? == 0 {
        return Err(FormatError::Malformed("empty state file".into()));
    }
    let header: StateHeader = serde_json::from_str(first.trim())?;
    let grid = Grid::new(header.length, header.n_points)?;
    let width = 2 + header.components;
    let mut table = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names = table.headers()?.clone();
    if names.len() != width {
        return Err(FormatError::Malformed(format!(
            "expected {width} columns, header has {}",
            names.len()
        )));
    }
    let mut columns = vec![Vec::with_capacity(header.n_points); width - 1];
    for record in table.records() {
        let record = record?;
        if record.len() != width {
            return Err(FormatError::Malformed(format!(
                "row {} has {} fields, expected {width}",
                columns[0].len() + 1,
                record.len()
            )));
        }
        for (col, field) in columns.iter_mut().zip(record.iter().skip(1)) {
            col.push(parse_number(field)?);
        }
    }
    if columns[0].len() != header.n_points {
        return Err(FormatError::Malformed(format!(
            "expected {} rows, found {}",
            header.n_points,
            columns[0].len()
        )));
    }
    let mut it = columns.into_iter();
    let u = it.next().expect("u column");
    let state = FieldState::new(grid, u, it.collect(), header.t)?;
    Ok((header, state))
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| FormatError::Malformed(format!("not a number: {s:?}")))
}

pub fn save_state(path: &Path, state: &FieldState, lambda: Option<f64>, seed: Option<u64>) -> Result<()> {
    write_state(File::create(path)?, state, lambda, seed)
}

pub fn load_state(path: &Path) -> Result<(StateHeader, FieldState)> {
    read_state(File::open(path)?)
}

pub fn charge_columns(components: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "h1", "h3", "h5", "nonlocal", "l2", "sobolev_h1"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=components).map(|i| format!("h_half_{i}")));
    cols
}

/// Streaming writer for a charge series.
pub struct ChargeWriter<W: Write> {
    out: BufWriter<W>,
    components: usize,
}

impl<W: Write> ChargeWriter<W> {
    /// Writes the optional comment line and the header row.
    pub fn new(out: W, components: usize, comment: Option<&str>) -> Result<Self> {
        let mut out = BufWriter::new(out);
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{}", charge_columns(components).join(","))?;
        Ok(Self { out, components })
    }

    pub fn write(&mut self, r: &ChargeReport) -> Result<()> {
        if r.h_half.len() != self.components {
            return Err(FormatError::Malformed(format!(
                "report has {} components, writer expects {}",
                r.h_half.len(),
                self.components
            )));
        }
        let row: Vec<String> = [r.t, r.h1, r.h3, r.h5, r.nonlocal, r.l2, r.sobolev_h1]
            .into_iter()
            .chain(r.h_half.iter().copied())
            .map(fmt_f64)
            .collect();
        writeln!(self.out, "{}", row.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| FormatError::Io(e.into_error()))
    }
}

pub fn read_charges<R: Read>(input: R) -> Result<Vec<ChargeReport>> {
    let mut table = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let names = table.headers()?.clone();
    if names.len() < 7 || names.iter().take(7).ne(charge_columns(0).iter().map(|s| s.as_str())) {
        return Err(FormatError::Malformed("unexpected charge table header".into()));
    }
    let components = names.len() - 7;
    let mut out = Vec::new();
    for record in table.records() {
        let record = record?;
        let v = record.iter().map(parse_number).collect::<Result<Vec<f64>>>()?;
        if v.len() != 7 + components {
            return Err(FormatError::Malformed(format!("row {} is short", out.len() + 1)));
        }
        out.push(ChargeReport {
            t: v[0],
            h1: v[1],
            h3: v[2],
            h5: v[3],
            nonlocal: v[4],
            l2: v[5],
            sobolev_h1: v[6],
            h_half: v[7..].to_vec(),
        });
    }
    Ok(out)
}

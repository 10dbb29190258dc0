//! Trace CSV files.
//!
//! Comma separated, UTF-8, one header row. Reals are written with 17
//! significant digits so doubles survive a round trip; counts are integers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{ScanTrace, TraceKind};
use crate::error::{Error, Result};
use crate::montecarlo::{BinnedCounts, CwTrace};

/// Column layout of a trace file. The first column is always a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLayout {
    /// `window_start_phase_rad,counts_A,counts_B,coincidences`
    Counts,
    /// `phase_rad,intensity_A,intensity_B,product`
    Cw,
    /// `phase_rad,I_A,I_B,R_AB`
    Analytic,
}

impl TraceLayout {
    pub fn header(self) -> [&'static str; 4] {
        match self {
            TraceLayout::Counts => ["window_start_phase_rad", "counts_A", "counts_B", "coincidences"],
            TraceLayout::Cw => ["phase_rad", "intensity_A", "intensity_B", "product"],
            TraceLayout::Analytic => ["phase_rad", "I_A", "I_B", "R_AB"],
        }
    }

    fn from_header(fields: &[&str]) -> Option<Self> {
        [TraceLayout::Counts, TraceLayout::Cw, TraceLayout::Analytic]
            .into_iter()
            .find(|layout| layout.header().as_slice() == fields)
    }
}

/// Value column of a trace table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    A,
    B,
    Joint,
}

/// A parsed or to-be-written trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub layout: TraceLayout,
    pub phase: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub joint: Vec<f64>,
}

impl TraceTable {
    pub fn from_counts(counts: &BinnedCounts) -> Self {
        let bins = &counts.bins;
        Self {
            layout: TraceLayout::Counts,
            phase: bins.iter().map(|b| b.start_phase).collect(),
            a: bins.iter().map(|b| b.counts_a as f64).collect(),
            b: bins.iter().map(|b| b.counts_b as f64).collect(),
            joint: bins.iter().map(|b| b.coincidences as f64).collect(),
        }
    }

    pub fn from_cw(cw: &CwTrace) -> Self {
        Self {
            layout: TraceLayout::Cw,
            phase: cw.phases.clone(),
            a: cw.intensity_a.clone(),
            b: cw.intensity_b.clone(),
            joint: cw.product.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    /// Phase of each sample for analysis. Count files store bin start phases;
    /// these are shifted to bin midpoints assuming uniform bins.
    pub fn sample_phases(&self) -> Vec<f64> {
        if self.layout != TraceLayout::Counts || self.phase.len() < 2 {
            return self.phase.clone();
        }
        let n = self.phase.len();
        (0..n)
            .map(|i| {
                let width = if i + 1 < n {
                    self.phase[i + 1] - self.phase[i]
                } else {
                    self.phase[i] - self.phase[i - 1]
                };
                self.phase[i] + width / 2.0
            })
            .collect()
    }

    pub fn column(&self, column: Column) -> &[f64] {
        match column {
            Column::A => &self.a,
            Column::B => &self.b,
            Column::Joint => &self.joint,
        }
    }

    pub fn trace(&self, column: Column) -> Result<ScanTrace> {
        let kind = match (self.layout, column) {
            (_, Column::Joint) => TraceKind::Coincidence,
            (TraceLayout::Counts, _) => TraceKind::CountRate,
            _ => TraceKind::Intensity,
        };
        ScanTrace::new(kind, self.sample_phases(), self.column(column).to_vec())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.layout.header().join(",");
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{}", real(self.phase[i]));
            for col in [&self.a, &self.b, &self.joint] {
                if self.layout == TraceLayout::Counts {
                    let _ = write!(out, ",{}", col[i] as u64);
                } else {
                    let _ = write!(out, ",{}", real(col[i]));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        let layout =
            TraceLayout::from_header(&fields).ok_or_else(|| err(1, format!("unrecognised header {header:?}")))?;
        let names = layout.header();
        let mut table = TraceTable {
            layout,
            phase: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            joint: Vec::new(),
        };
        for (line, row) in lines {
            if row.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = row.split(',').map(str::trim).collect();
            if cells.len() != 4 {
                return Err(err(line, format!("expected 4 columns, found {}", cells.len())));
            }
            let mut parsed = [0.0; 4];
            for (k, cell) in cells.iter().enumerate() {
                parsed[k] = cell
                    .parse::<f64>()
                    .map_err(|_| err(line, format!("column {} ({}): cannot parse {cell:?}", k + 1, names[k])))?;
            }
            table.phase.push(parsed[0]);
            table.a.push(parsed[1]);
            table.b.push(parsed[2]);
            table.joint.push(parsed[3]);
        }
        if !text.is_empty() && !text.ends_with('\n') {
            let last = text.lines().count();
            return Err(err(last, "file ends mid-row (missing trailing newline)".into()));
        }
        if table.is_empty() {
            return Err(err(1, "no data rows".into()));
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }
}

/// 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

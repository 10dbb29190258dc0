//! Batch commands behind the `cbw` binary.
//!
//! Every command takes a fully merged [`RunConfig`] (defaults, then a JSON
//! config file, then command-line flags), validates it, computes, and writes
//! its files into `out_dir`. Each run also writes `<command>.manifest.json`,
//! which can be passed back as `--config` to reproduce the outputs byte for
//! byte.

mod commands;
pub mod svg;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use commands::{
    cmd_analytic, cmd_analyze, cmd_loss_study, cmd_normal_mode, cmd_simulate, AnalysisEntry, ChannelReport,
};

use crate::analysis::VisibilityMethod;
use crate::cascade::CascadeSpec;
use crate::error::{Error, Result};
use crate::montecarlo::{CountingSetup, DetectorConfig, LossChannel, ScanConfig, SourceConfig};

pub const TOOL: &str = "cbw";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest chain order accepted from the command line.
pub const MAX_ORDER: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMode {
    #[default]
    SinglePhoton,
    Cw,
}

impl SimulationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimulationMode::SinglePhoton => "single-photon",
            SimulationMode::Cw => "cw",
        }
    }
}

/// Phase grid of the analytic command: `start, start + step, ...` up to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: 2.0 * std::f64::consts::PI,
            step: 2.0 * std::f64::consts::PI / 1024.0,
        }
    }
}

impl PhaseGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !self.start.is_finite() {
            return Err(Error::config("grid.start", "must be finite"));
        }
        if !(self.end.is_finite() && self.end >= self.start) {
            return Err(Error::config("grid.end", "must be finite and not below grid.start"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(
                "step",
                format!("grid step must be positive, got {}", self.step),
            ));
        }
        let count = ((self.end - self.start) / self.step + 1e-9).floor() + 1.0;
        if count > 1e8 {
            return Err(Error::config("step", format!("grid would hold {count} points")));
        }
        Ok((0..count as usize).map(|k| self.start + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalModeParams {
    pub mass: f64,
    pub spring_constant: f64,
    pub chain_size: u32,
}

impl Default for NormalModeParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            spring_constant: 1.0,
            chain_size: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzeParams {
    pub traces: Vec<PathBuf>,
    /// Trace whose fundamental period is the reference for `order_estimate`.
    pub reference: Option<PathBuf>,
    /// Fit order; estimated from the spectrum when absent.
    pub order_hint: Option<u32>,
    pub method: VisibilityMethod,
}

/// Merged configuration of one command run. Field names are also the keys of
/// the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub order: u32,
    pub dummy_phase: f64,
    pub mode: SimulationMode,
    pub source: SourceConfig,
    pub detector_a: DetectorConfig,
    pub detector_b: DetectorConfig,
    pub loss: LossChannel,
    pub scan: ScanConfig,
    /// Phase bins for count and CW traces.
    pub bins: u64,
    /// Emit one row per detection window instead of bins.
    pub raw: bool,
    pub noise_rel_sigma: f64,
    pub grid: PhaseGrid,
    pub transmissions: Vec<f64>,
    pub normal_mode: NormalModeParams,
    pub analyze: AnalyzeParams,
    pub formats: Vec<OutputFormat>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub quiet: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            order: 1,
            dummy_phase: 0.0,
            mode: SimulationMode::default(),
            source: SourceConfig::default(),
            detector_a: DetectorConfig::default(),
            detector_b: DetectorConfig::default(),
            loss: LossChannel::default(),
            scan: ScanConfig::default(),
            bins: 500,
            raw: false,
            noise_rel_sigma: 0.0,
            grid: PhaseGrid::default(),
            transmissions: vec![1.0, 0.5, 0.1],
            normal_mode: NormalModeParams::default(),
            analyze: AnalyzeParams::default(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            out_dir: PathBuf::from("."),
            quiet: false,
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid by the config file (a bare config object or a
    /// manifest), overlaid by `overrides`.
    pub fn resolve(config_file: Option<&Path>, overrides: Value) -> Result<Self> {
        let mut merged = serde_json::to_value(Self::default())?;
        if let Some(path) = config_file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut value: Value =
                serde_json::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
            if value.get("command").is_some() {
                if let Some(inner) = value.get_mut("config") {
                    value = inner.take();
                }
            }
            merge(&mut merged, value);
        }
        merge(&mut merged, overrides);
        serde_json::from_value(merged).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn cascade(&self) -> Result<CascadeSpec> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::config(
                "order",
                format!("must lie in 1..={MAX_ORDER}, got {}", self.order),
            ));
        }
        CascadeSpec::new(self.order)?
            .with_dummy_phase(self.dummy_phase)
            .map_err(|_| Error::config("dummy_phase", "must be finite"))
    }

    pub fn counting_setup(&self) -> CountingSetup {
        CountingSetup {
            source: self.source,
            detector_a: self.detector_a,
            detector_b: self.detector_b,
            scan: self.scan,
        }
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

/// Recursive object merge; non-object values in `patch` replace `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Files written by a command, plus a short human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, X: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<X>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(mut self, command: &str, config: &RunConfig, details: Option<impl Serialize>) -> Result<Vec<PathBuf>> {
        let outputs = self
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let manifest = Manifest {
            tool: TOOL,
            version: VERSION,
            command,
            config,
            outputs,
            details,
        };
        self.write_json(&format!("{command}.manifest.json"), &manifest)?;
        Ok(self.files)
    }
}

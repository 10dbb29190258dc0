use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::svg::{Plot, Series};
use super::table::{real, Column, TraceLayout, TraceTable};
use super::{CommandOutput, OutputFormat, RunConfig, SimulationMode, Writer};
use crate::analysis::loss_invariance_study;
use crate::analysis::{
    estimate_period_against, locate_extrema, visibility_with, ScanTrace, VisibilityMethod, VisibilityReport,
};
use crate::analytic::{coincidence_product, fringe_intensity, normal_mode_table, parity_port, phase_basis, Port};
use crate::error::{Error, Result};
use crate::montecarlo::{simulate_cw_scan, simulate_scan_binned, ScanSummary};

/// Per-channel analysis, as written to the report JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub visibility_percent: f64,
    pub uncertainty_percent: f64,
    pub method: VisibilityMethod,
    pub n_periods_used: usize,
    pub fundamental_period_rad: f64,
    pub order_estimate: f64,
    pub extrema_rad: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelEntry {
    pub channel: &'static str,
    /// Fringe order the channel was fitted at (`2N` for the joint column).
    pub order: u32,
    #[serde(flatten)]
    pub report: Option<ChannelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisEntry {
    pub file: String,
    pub layout: &'static str,
    pub order: Option<u32>,
    pub channels: Vec<ChannelEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AnalysisEntry {
    fn failures(&self) -> usize {
        usize::from(self.error.is_some()) + self.channels.iter().filter(|c| c.error.is_some()).count()
    }
}

fn layout_name(layout: TraceLayout) -> &'static str {
    match layout {
        TraceLayout::Counts => "single-photon",
        TraceLayout::Cw => "cw",
        TraceLayout::Analytic => "analytic",
    }
}

fn case_label(layout: &str) -> &'static str {
    match layout {
        "single-photon" => "Single photon",
        "cw" => "CW",
        _ => "Analytic",
    }
}

fn channel_report(
    trace: &ScanTrace,
    order: u32,
    method: VisibilityMethod,
    reference_period: f64,
) -> Result<ChannelReport> {
    let VisibilityReport {
        visibility,
        uncertainty,
        n_periods_used,
        method,
        clamped,
    } = visibility_with(trace, order, method)?;
    let period = estimate_period_against(trace, reference_period)?;
    Ok(ChannelReport {
        visibility_percent: visibility,
        uncertainty_percent: uncertainty,
        method,
        n_periods_used,
        fundamental_period_rad: period.fundamental_period,
        order_estimate: period.order_estimate,
        extrema_rad: locate_extrema(trace, order)?,
        clamped,
    })
}

fn analyze_table(
    name: String,
    table: &TraceTable,
    order_hint: Option<u32>,
    method: VisibilityMethod,
    reference_period: f64,
) -> AnalysisEntry {
    let mut entry = AnalysisEntry {
        file: name,
        layout: layout_name(table.layout),
        order: None,
        channels: Vec::new(),
        error: None,
    };
    let order = match order_hint {
        Some(n) => Ok(n),
        None => table
            .trace(Column::A)
            .and_then(|t| estimate_period_against(&t, reference_period))
            .map(|p| p.order_estimate.round().max(1.0) as u32),
    };
    let order = match order {
        Ok(n) => n,
        Err(e) => {
            entry.error = Some(format!("order estimation failed: {e}"));
            return entry;
        }
    };
    entry.order = Some(order);
    for (channel, column, fit_order) in [
        ("A", Column::A, order),
        ("B", Column::B, order),
        ("joint", Column::Joint, 2 * order),
    ] {
        let result = table
            .trace(column)
            .and_then(|t| channel_report(&t, fit_order, method, reference_period));
        let (report, error) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        entry.channels.push(ChannelEntry {
            channel,
            order: fit_order,
            report,
            error,
        });
    }
    entry
}

fn cell(entry: &AnalysisEntry, channel: &str) -> String {
    match entry.channels.iter().find(|c| c.channel == channel) {
        Some(ChannelEntry { report: Some(r), .. }) => {
            format!("{:.2} ± {:.2}", r.visibility_percent, r.uncertainty_percent)
        }
        Some(_) => "error".into(),
        None => "-".into(),
    }
}

/// Visibility table with one row per (case, port) and one column per order.
pub fn render_table(entries: &[AnalysisEntry]) -> String {
    let orders: BTreeSet<u32> = entries.iter().filter_map(|e| e.order).collect();
    let mut cases: Vec<&str> = Vec::new();
    for e in entries {
        if e.order.is_some() && !cases.contains(&e.layout) {
            cases.push(e.layout);
        }
    }
    let mut out = String::from("Visibility (%)\n");
    let _ = write!(out, "{:<14} {:<5}", "Case", "Port");
    for n in &orders {
        let _ = write!(out, " {:>16}", format!("N = {n}"));
    }
    out.push('\n');
    for case in &cases {
        for (port, channel) in [("A", "A"), ("B", "B")] {
            let label = if port == "A" { case_label(case) } else { "" };
            let _ = write!(out, "{label:<14} {port:<5}");
            for n in &orders {
                let text = entries
                    .iter()
                    .find(|e| e.layout == *case && e.order == Some(*n))
                    .map_or_else(|| "-".to_string(), |e| cell(e, channel));
                let _ = write!(out, " {text:>16}");
            }
            out.push('\n');
        }
    }
    out.push('\n');
    for e in entries {
        let _ = write!(out, "{}: ", e.file);
        match (&e.error, e.order) {
            (Some(err), _) => {
                let _ = writeln!(out, "{err}");
            }
            (None, Some(n)) => {
                let _ = writeln!(out, "{}, N = {n}", e.layout);
                for c in &e.channels {
                    match (&c.report, &c.error) {
                        (Some(r), _) => {
                            let _ = writeln!(
                                out,
                                "  {:<5} V = {:.2} ± {:.2} %  period = {:.6} rad  order ≈ {:.4}  extrema: {}",
                                c.channel,
                                r.visibility_percent,
                                r.uncertainty_percent,
                                r.fundamental_period_rad,
                                r.order_estimate,
                                r.extrema_rad.len()
                            );
                        }
                        (None, Some(err)) => {
                            let _ = writeln!(out, "  {:<5} error: {err}", c.channel);
                        }
                        (None, None) => {}
                    }
                }
            }
            (None, None) => out.push('\n'),
        }
    }
    out
}

/// Noise-free fringes on a phase grid.
pub fn cmd_analytic(cfg: &RunConfig) -> Result<CommandOutput> {
    let cascade = cfg.cascade()?;
    let n = cascade.order();
    let phases = cfg.grid.points()?;
    let mut table = TraceTable {
        layout: TraceLayout::Analytic,
        phase: phases.clone(),
        a: Vec::with_capacity(phases.len()),
        b: Vec::with_capacity(phases.len()),
        joint: Vec::with_capacity(phases.len()),
    };
    for &phi in &phases {
        table.a.push(fringe_intensity(n, Port::A, phi)?.0);
        table.b.push(fringe_intensity(n, Port::B, phi)?.0);
        table.joint.push(coincidence_product(n, phi)?);
    }

    let stem = format!("analytic_N{n}");
    let mut w = Writer::new(&cfg.out_dir)?;
    if cfg.wants(OutputFormat::Csv) {
        w.write(&format!("{stem}.csv"), &table.to_csv())?;
    }
    let basis = phase_basis(n)?;
    if cfg.wants(OutputFormat::Json) {
        #[derive(Serialize)]
        struct Info {
            order: u32,
            parity_port: Port,
            fringe_period_rad: f64,
            node_spacing_rad: f64,
            phase_basis_rad: Vec<f64>,
            rows: usize,
        }
        let info = Info {
            order: n,
            parity_port: parity_port(n)?,
            fringe_period_rad: 2.0 * PI / f64::from(n),
            node_spacing_rad: basis.spacing(),
            phase_basis_rad: basis.nodes.clone(),
            rows: table.len(),
        };
        w.write_json(&format!("{stem}.json"), &info)?;
    }
    if cfg.wants(OutputFormat::Svg) {
        let spacing = basis.spacing();
        let first = (cfg.grid.start / spacing).ceil() as i64;
        let last = (cfg.grid.end / spacing).floor() as i64;
        let markers = (first..=last)
            .map(|m| {
                let phi = m as f64 * spacing;
                fringe_intensity(n, Port::A, phi).map(|i| (phi, i.0))
            })
            .collect::<Result<Vec<_>>>()?;
        let normalized: Vec<f64> = table.joint.iter().map(|r| 4.0 * r).collect();
        let plot = Plot {
            title: format!("Coherence fringes, N = {n}"),
            x_label: "phase φ (rad)".into(),
            y_label: "intensity".into(),
            y2_label: String::new(),
            series: vec![
                Series::new("I_A", "red", phases.clone(), table.a.clone()),
                Series::new("I_B", "blue", phases.clone(), table.b.clone()),
                Series::new("R_AB (normalized)", "green", phases, normalized).dashed(),
            ],
            markers,
        };
        w.write(&format!("{stem}.svg"), &plot.render())?;
    }
    let files = w.finish("analytic", cfg, None::<()>)?;
    Ok(CommandOutput {
        files,
        summary: format!("analytic N={n}: {} phase points", table.len()),
    })
}

#[derive(Serialize)]
struct SimulateDetails {
    mode: SimulationMode,
    seed: u64,
    windows: u64,
    rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<ScanSummary>,
}

/// Counting or CW scan, written as a trace CSV plus an in-process analysis.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let cascade = cfg.cascade()?;
    let n = cascade.order();
    let setup = cfg.counting_setup();
    setup.validate()?;
    cfg.loss.validate()?;
    if cfg.bins == 0 && !cfg.raw {
        return Err(Error::config("bins", "must be positive"));
    }
    let windows = setup.scan.window_count(&setup.source)?;
    let rows = if cfg.raw { windows } else { cfg.bins };

    let (table, summary) = match cfg.mode {
        SimulationMode::SinglePhoton => {
            let counts = simulate_scan_binned(&cascade, &setup, &cfg.loss, rows)?;
            (TraceTable::from_counts(&counts), Some(counts.summary))
        }
        SimulationMode::Cw => {
            let cw = simulate_cw_scan(&cascade, &cfg.loss, &cfg.scan, cfg.noise_rel_sigma, rows)?;
            (TraceTable::from_cw(&cw), None)
        }
    };

    let stem = format!("simulate_{}_N{n}", cfg.mode.as_str());
    let mut w = Writer::new(&cfg.out_dir)?;
    if cfg.wants(OutputFormat::Csv) {
        w.write(&format!("{stem}.csv"), &table.to_csv())?;
    }
    let details = SimulateDetails {
        mode: cfg.mode,
        seed: cfg.scan.rng_seed,
        windows,
        rows: table.len(),
        summary,
    };
    let mut summary_line = format!(
        "simulate {} N={n}: {windows} windows, {} rows",
        cfg.mode.as_str(),
        table.len()
    );
    if cfg.wants(OutputFormat::Json) {
        let analysis = analyze_table(format!("{stem}.csv"), &table, Some(n), cfg.analyze.method, 2.0 * PI);
        if let Some(r) = analysis.channels.first().and_then(|c| c.report.as_ref()) {
            let _ = write!(
                summary_line,
                ", V_A = {:.2} ± {:.2} %",
                r.visibility_percent, r.uncertainty_percent
            );
        }
        #[derive(Serialize)]
        struct Report<'a> {
            #[serde(flatten)]
            details: &'a SimulateDetails,
            analysis: AnalysisEntry,
        }
        w.write_json(
            &format!("{stem}.json"),
            &Report {
                details: &details,
                analysis,
            },
        )?;
    }
    if cfg.wants(OutputFormat::Svg) {
        let xs = table.sample_phases();
        let (y_label, joint_label) = match cfg.mode {
            SimulationMode::SinglePhoton => ("counts per bin", "coincidences"),
            SimulationMode::Cw => ("intensity", "product"),
        };
        let plot = Plot {
            title: format!("{} scan, N = {n}", case_label(cfg.mode.as_str())),
            x_label: "phase φ (rad)".into(),
            y_label: y_label.into(),
            y2_label: joint_label.into(),
            series: vec![
                Series::new("A", "red", xs.clone(), table.a.clone()),
                Series::new("B", "blue", xs.clone(), table.b.clone()),
                Series::new(joint_label, "green", xs, table.joint.clone())
                    .dashed()
                    .on_right_axis(),
            ],
            markers: Vec::new(),
        };
        w.write(&format!("{stem}.svg"), &plot.render())?;
    }
    let files = w.finish("simulate", cfg, Some(details))?;
    Ok(CommandOutput {
        files,
        summary: summary_line,
    })
}

/// Visibility, period and extrema of each trace file. Every trace is
/// reported; the command fails afterwards if any estimate failed.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<CommandOutput> {
    let params = &cfg.analyze;
    if params.traces.is_empty() {
        return Err(Error::config("analyze.traces", "at least one trace file is required"));
    }
    if params.order_hint == Some(0) || params.order_hint.is_some_and(|n| n > super::MAX_ORDER) {
        return Err(Error::config("analyze.order_hint", "must lie in 1..=1000"));
    }
    let reference_period = match &params.reference {
        None => 2.0 * PI,
        Some(path) => {
            let table = TraceTable::read(path)?;
            estimate_period_against(&table.trace(Column::A)?, 2.0 * PI)?.fundamental_period
        }
    };

    let entries: Vec<AnalysisEntry> = params
        .traces
        .iter()
        .map(|path| {
            let name = display_name(path);
            match TraceTable::read(path) {
                Ok(table) => analyze_table(name, &table, params.order_hint, params.method, reference_period),
                Err(e) => AnalysisEntry {
                    file: name,
                    layout: "unknown",
                    order: None,
                    channels: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let failures: usize = entries.iter().map(AnalysisEntry::failures).sum();
    let text = render_table(&entries);

    let mut w = Writer::new(&cfg.out_dir)?;
    w.write("analysis_table.txt", &text)?;
    if cfg.wants(OutputFormat::Json) {
        #[derive(Serialize)]
        struct Report<'a> {
            reference_period_rad: f64,
            traces: &'a [AnalysisEntry],
        }
        w.write_json(
            "analysis_report.json",
            &Report {
                reference_period_rad: reference_period,
                traces: &entries,
            },
        )?;
    }
    let files = w.finish("analyze", cfg, None::<()>)?;
    if failures > 0 {
        return Err(Error::Estimation(format!(
            "{failures} estimate(s) failed across {} trace(s); see analysis_table.txt",
            entries.len()
        )));
    }
    Ok(CommandOutput { files, summary: text })
}

fn display_name(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

/// Counting scans repeated at several uniform transmissions.
pub fn cmd_loss_study(cfg: &RunConfig) -> Result<CommandOutput> {
    let cascade = cfg.cascade()?;
    let n = cascade.order();
    let study = loss_invariance_study(&cascade, &cfg.transmissions, &cfg.counting_setup(), cfg.bins)?;

    let stem = format!("loss_study_N{n}");
    let mut w = Writer::new(&cfg.out_dir)?;
    if cfg.wants(OutputFormat::Csv) {
        let mut csv =
            String::from("transmission,visibility_percent,uncertainty_percent,mean_count_rate,expected_count_rate\n");
        for r in &study.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                real(r.transmission),
                real(r.visibility.visibility),
                real(r.visibility.uncertainty),
                real(r.mean_count_rate),
                real(r.expected_count_rate)
            );
        }
        w.write(&format!("{stem}.csv"), &csv)?;
    }
    if cfg.wants(OutputFormat::Json) {
        w.write_json(&format!("{stem}.json"), &study)?;
    }
    let files = w.finish("loss-study", cfg, None::<()>)?;
    let mut summary = format!(
        "loss study N={n}: visibility spread {:.3} pp\n",
        study.visibility_spread
    );
    for r in &study.rows {
        let _ = writeln!(
            summary,
            "  T = {:<6} V = {:.2} ± {:.2} %  rate = {:.6} (expected {:.6})",
            r.transmission, r.visibility.visibility, r.visibility.uncertainty, r.mean_count_rate, r.expected_count_rate
        );
    }
    Ok(CommandOutput { files, summary })
}

/// Normal-mode frequencies of a chain of coupled oscillators.
pub fn cmd_normal_mode(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = cfg.normal_mode;
    let rows = normal_mode_table(p.mass, p.spring_constant, p.chain_size).map_err(|e| match e {
        Error::Config { field, reason } => Error::config(format!("normal_mode.{field}"), reason),
        other => other,
    })?;

    let stem = format!("normal_modes_N{}", p.chain_size);
    let mut w = Writer::new(&cfg.out_dir)?;
    if cfg.wants(OutputFormat::Csv) {
        let mut csv = String::from("p,omega_p,linear_deviation\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{}", r.p, real(r.omega), real(r.linear_deviation));
        }
        w.write(&format!("{stem}.csv"), &csv)?;
    }
    if cfg.wants(OutputFormat::Json) {
        w.write_json(&format!("{stem}.json"), &rows)?;
    }
    let files = w.finish("normal-mode", cfg, None::<()>)?;
    let mut summary = format!("normal modes, N = {}\n", p.chain_size);
    for r in &rows {
        let _ = writeln!(
            summary,
            "  p = {:<3} ω = {:.6}  deviation = {:.6}",
            r.p, r.omega, r.linear_deviation
        );
    }
    Ok(CommandOutput { files, summary })
}

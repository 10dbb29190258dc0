//! Stochastic emulation of the phase-scanned counting experiment.
//!
//! An attenuated laser delivers a Poisson number of photons per detection
//! window. Each photon survives the loss channel, is routed to port A or B
//! with the chain's output probabilities at the window's phase, survives the
//! detector efficiency, and produces a detection event. Dark counts add
//! events, paralyzable dead time blanks detectors, and a coincidence is a
//! window in which both detectors click.
//!
//! The scan is cut into fixed-size chunks. Chunk `k` draws from the ChaCha8
//! stream `k` of the master seed, so the trace does not depend on how many
//! threads generate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{ScanTrace, TraceKind};
use crate::cascade::{closed_form_matrix, explicit_cascade, output_intensities, CascadeSpec};
use crate::error::{Error, Result};

/// Windows per RNG substream.
pub const CHUNK_WINDOWS: u64 = 1 << 16;
/// Chunks generated per parallel batch.
const BATCH_CHUNKS: u64 = 64;
/// Substream reserved for CW measurement noise.
const CW_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceConfig {
    pub mean_photons_per_window: f64,
    /// seconds
    pub window_duration: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            mean_photons_per_window: 0.04,
            window_duration: 80e-6,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        let mu = self.mean_photons_per_window;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::config(
                "source.mean_photons_per_window",
                format!("must be positive and finite, got {mu}"),
            ));
        }
        if !(self.window_duration > 0.0 && self.window_duration.is_finite()) {
            return Err(Error::config(
                "source.window_duration",
                format!("must be positive and finite, got {}", self.window_duration),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_prob_per_window: f64,
    pub dead_time_windows: u32,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob_per_window: 0.0,
            dead_time_windows: 0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self, name: &str) -> Result<()> {
        check_probability(&format!("{name}.efficiency"), self.efficiency)?;
        check_probability(
            &format!("{name}.dark_count_prob_per_window"),
            self.dark_count_prob_per_window,
        )
    }
}

/// Transmission before detection. `transmission` acts on every photon before
/// routing; `arm_a` and `arm_b` act after routing on one output path each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossChannel {
    pub transmission: f64,
    pub arm_a: f64,
    pub arm_b: f64,
}

impl Default for LossChannel {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl LossChannel {
    pub fn uniform(transmission: f64) -> Self {
        Self {
            transmission,
            arm_a: 1.0,
            arm_b: 1.0,
        }
    }

    pub fn per_arm(arm_a: f64, arm_b: f64) -> Self {
        Self {
            transmission: 1.0,
            arm_a,
            arm_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, t) in [
            ("loss.transmission", self.transmission),
            ("loss.arm_a", self.arm_a),
            ("loss.arm_b", self.arm_b),
        ] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config(field, format!("must lie in (0, 1], got {t}")));
            }
        }
        Ok(())
    }
}

/// Linear PZT ramp from `phase_start` to `phase_end` over `total_duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// seconds
    pub total_duration: f64,
    pub phase_start: f64,
    pub phase_end: f64,
    pub rng_seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            total_duration: 200.0,
            phase_start: 0.0,
            phase_end: 6.0 * std::f64::consts::PI,
            rng_seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_duration > 0.0 && self.total_duration.is_finite()) {
            return Err(Error::config(
                "scan.total_duration",
                format!("must be positive and finite, got {}", self.total_duration),
            ));
        }
        if !self.phase_start.is_finite() {
            return Err(Error::config("scan.phase_start", "must be finite"));
        }
        if !(self.phase_end.is_finite() && self.phase_end >= self.phase_start) {
            return Err(Error::config(
                "scan.phase_end",
                "must be finite and not below phase_start",
            ));
        }
        Ok(())
    }

    /// `total_duration / window_duration`, rounded to the nearest integer.
    pub fn window_count(&self, source: &SourceConfig) -> Result<u64> {
        self.validate()?;
        source.validate()?;
        let n = (self.total_duration / source.window_duration).round();
        if n < 1.0 || n > u64::MAX as f64 {
            return Err(Error::config(
                "scan.total_duration",
                format!("yields {n} windows of {} s", source.window_duration),
            ));
        }
        Ok(n as u64)
    }

    /// Phase at the midpoint of window `index` out of `windows`.
    pub fn window_phase(&self, index: u64, windows: u64) -> f64 {
        let span = self.phase_end - self.phase_start;
        self.phase_start + span * (index as f64 + 0.5) / windows as f64
    }

    /// Phase at which window `index` begins.
    pub fn window_start_phase(&self, index: u64, windows: u64) -> f64 {
        let span = self.phase_end - self.phase_start;
        self.phase_start + span * index as f64 / windows as f64
    }
}

/// Everything [`simulate_scan`] needs besides the cascade and loss channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CountingSetup {
    pub source: SourceConfig,
    pub detector_a: DetectorConfig,
    pub detector_b: DetectorConfig,
    pub scan: ScanConfig,
}

impl CountingSetup {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detector_a.validate("detector_a")?;
        self.detector_b.validate("detector_b")?;
        self.scan.validate()
    }
}

/// Outcome of one detection window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WindowRecord {
    /// Photons emitted by the source, before any loss.
    pub photons: u32,
    pub click_a: bool,
    pub click_b: bool,
}

impl WindowRecord {
    pub fn clicks_a(&self) -> u32 {
        self.click_a as u32
    }

    pub fn clicks_b(&self) -> u32 {
        self.click_b as u32
    }

    pub fn coincidences(&self) -> u32 {
        (self.click_a && self.click_b) as u32
    }
}

/// Receives window records in window order.
pub trait WindowSink {
    fn record(&mut self, index: u64, record: WindowRecord);
}

/// Totals over a whole scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScanSummary {
    pub windows: u64,
    pub occupied_windows: u64,
    pub multi_photon_windows: u64,
    pub photons: u64,
    pub clicks_a: u64,
    pub clicks_b: u64,
    pub coincidences: u64,
}

impl ScanSummary {
    fn add(&mut self, r: &WindowRecord) {
        self.windows += 1;
        self.occupied_windows += (r.photons >= 1) as u64;
        self.multi_photon_windows += (r.photons >= 2) as u64;
        self.photons += r.photons as u64;
        self.clicks_a += r.clicks_a() as u64;
        self.clicks_b += r.clicks_b() as u64;
        self.coincidences += r.coincidences() as u64;
    }

    /// Fraction of photon-occupied windows holding two or more photons.
    pub fn multi_photon_fraction(&self) -> f64 {
        self.multi_photon_windows as f64 / self.occupied_windows as f64
    }
}

/// Per-window record of a full scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTrace {
    pub scan: ScanConfig,
    pub records: Vec<WindowRecord>,
}

impl CountTrace {
    pub fn windows(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn phase(&self, index: u64) -> f64 {
        self.scan.window_phase(index, self.windows())
    }

    pub fn summary(&self) -> ScanSummary {
        let mut s = ScanSummary::default();
        self.records.iter().for_each(|r| s.add(r));
        s
    }

    /// Aggregates consecutive windows into `bins` equal phase bins.
    pub fn bin(&self, bins: u64) -> Result<BinnedCounts> {
        let mut acc = BinAccumulator::new(self.scan, self.windows(), bins)?;
        for (i, r) in self.records.iter().enumerate() {
            acc.record(i as u64, *r);
        }
        Ok(acc.finish())
    }
}

impl WindowSink for CountTrace {
    fn record(&mut self, index: u64, record: WindowRecord) {
        debug_assert_eq!(index, self.records.len() as u64);
        self.records.push(record);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountBin {
    pub start_phase: f64,
    pub mid_phase: f64,
    pub windows: u64,
    pub counts_a: u64,
    pub counts_b: u64,
    pub coincidences: u64,
}

/// Counts per phase bin plus whole-scan totals.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCounts {
    pub bins: Vec<CountBin>,
    pub summary: ScanSummary,
}

/// Which count column to turn into a [`ScanTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountChannel {
    A,
    B,
    Coincidence,
}

impl BinnedCounts {
    /// Counts of one channel against bin-midpoint phase.
    pub fn trace(&self, channel: CountChannel) -> Result<ScanTrace> {
        let kind = match channel {
            CountChannel::Coincidence => TraceKind::Coincidence,
            _ => TraceKind::CountRate,
        };
        let phases = self.bins.iter().map(|b| b.mid_phase).collect();
        let values = self
            .bins
            .iter()
            .map(|b| match channel {
                CountChannel::A => b.counts_a,
                CountChannel::B => b.counts_b,
                CountChannel::Coincidence => b.coincidences,
            } as f64)
            .collect();
        ScanTrace::new(kind, phases, values)
    }
}

/// Streaming binner. `windows` must be a multiple of `bins`.
pub struct BinAccumulator {
    per_bin: u64,
    bins: Vec<CountBin>,
    summary: ScanSummary,
}

impl BinAccumulator {
    pub fn new(scan: ScanConfig, windows: u64, bins: u64) -> Result<Self> {
        if bins == 0 || bins > windows || !windows.is_multiple_of(bins) {
            return Err(Error::config(
                "bins",
                format!("must be a positive divisor of the window count {windows}, got {bins}"),
            ));
        }
        let per_bin = windows / bins;
        let bins = (0..bins)
            .map(|j| {
                let first = j * per_bin;
                let span = scan.phase_end - scan.phase_start;
                CountBin {
                    start_phase: scan.window_start_phase(first, windows),
                    mid_phase: scan.phase_start + span * (first as f64 + per_bin as f64 / 2.0) / windows as f64,
                    windows: per_bin,
                    ..CountBin::default()
                }
            })
            .collect();
        Ok(Self {
            per_bin,
            bins,
            summary: ScanSummary::default(),
        })
    }

    pub fn finish(self) -> BinnedCounts {
        BinnedCounts {
            bins: self.bins,
            summary: self.summary,
        }
    }
}

impl WindowSink for BinAccumulator {
    fn record(&mut self, index: u64, r: WindowRecord) {
        let bin = &mut self.bins[(index / self.per_bin) as usize];
        bin.counts_a += r.clicks_a() as u64;
        bin.counts_b += r.clicks_b() as u64;
        bin.coincidences += r.coincidences() as u64;
        self.summary.add(&r);
    }
}

impl WindowSink for ScanSummary {
    fn record(&mut self, _index: u64, record: WindowRecord) {
        self.add(&record);
    }
}

/// `(p_A, p_B)` for the cascade at `phase`.
pub fn port_probabilities(cascade: &CascadeSpec, phase: f64) -> (f64, f64) {
    let m = if cascade.dummy_phase() == 0.0 {
        closed_form_matrix(cascade.order(), phase)
    } else {
        explicit_cascade(cascade, phase)
    };
    let (a, b) = output_intensities(&m, &cascade.input());
    (a.value(), b.value())
}

// Detection events before dead time, one entry per window.
#[derive(Clone, Copy, Default)]
struct RawWindow {
    photons: u32,
    events_a: u32,
    events_b: u32,
}

struct Engine<'a> {
    cascade: &'a CascadeSpec,
    setup: &'a CountingSetup,
    loss: &'a LossChannel,
    poisson: Poisson<f64>,
    windows: u64,
}

impl Engine<'_> {
    fn chunk(&self, chunk: u64) -> Vec<RawWindow> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.setup.scan.rng_seed);
        rng.set_stream(chunk);
        let first = chunk * CHUNK_WINDOWS;
        let last = (first + CHUNK_WINDOWS).min(self.windows);
        let pass_a = self.loss.arm_a * self.setup.detector_a.efficiency;
        let pass_b = self.loss.arm_b * self.setup.detector_b.efficiency;
        let dark_a = self.setup.detector_a.dark_count_prob_per_window;
        let dark_b = self.setup.detector_b.dark_count_prob_per_window;

        (first..last)
            .map(|index| {
                let photons = self.poisson.sample(&mut rng) as u32;
                let mut w = RawWindow {
                    photons,
                    ..RawWindow::default()
                };
                if photons > 0 {
                    let phase = self.setup.scan.window_phase(index, self.windows);
                    let (pa, pb) = port_probabilities(self.cascade, phase);
                    let to_a = if pa + pb > 0.0 { pa / (pa + pb) } else { 0.5 };
                    for _ in 0..photons {
                        if rng.random::<f64>() >= self.loss.transmission {
                            continue;
                        }
                        if rng.random::<f64>() < to_a {
                            w.events_a += (rng.random::<f64>() < pass_a) as u32;
                        } else {
                            w.events_b += (rng.random::<f64>() < pass_b) as u32;
                        }
                    }
                }
                if dark_a > 0.0 {
                    w.events_a += (rng.random::<f64>() < dark_a) as u32;
                }
                if dark_b > 0.0 {
                    w.events_b += (rng.random::<f64>() < dark_b) as u32;
                }
                w
            })
            .collect()
    }
}

/// Paralyzable dead time: any event while blind restarts the blind interval.
#[derive(Default)]
struct DeadTime {
    blind_until: u64,
}

impl DeadTime {
    fn click(&mut self, index: u64, events: u32, dead_windows: u32) -> bool {
        if events == 0 {
            return false;
        }
        let fired = index >= self.blind_until;
        self.blind_until = index + 1 + dead_windows as u64;
        fired
    }
}

/// Runs the scan and streams every window to `sink` in order.
pub fn simulate_scan_into<S: WindowSink>(
    cascade: &CascadeSpec,
    setup: &CountingSetup,
    loss: &LossChannel,
    sink: &mut S,
) -> Result<ScanSummary> {
    setup.validate()?;
    loss.validate()?;
    let windows = setup.scan.window_count(&setup.source)?;
    let poisson = Poisson::new(setup.source.mean_photons_per_window)
        .map_err(|e| Error::config("source.mean_photons_per_window", e.to_string()))?;
    let engine = Engine {
        cascade,
        setup,
        loss,
        poisson,
        windows,
    };

    let chunks = windows.div_ceil(CHUNK_WINDOWS);
    let (mut dead_a, mut dead_b) = (DeadTime::default(), DeadTime::default());
    let mut summary = ScanSummary::default();
    let mut batch_start = 0;
    while batch_start < chunks {
        let batch_end = (batch_start + BATCH_CHUNKS).min(chunks);
        let raw: Vec<Vec<RawWindow>> = (batch_start..batch_end)
            .into_par_iter()
            .map(|k| engine.chunk(k))
            .collect();
        for (k, chunk) in (batch_start..batch_end).zip(raw) {
            for (offset, w) in chunk.into_iter().enumerate() {
                let index = k * CHUNK_WINDOWS + offset as u64;
                let record = WindowRecord {
                    photons: w.photons,
                    click_a: dead_a.click(index, w.events_a, setup.detector_a.dead_time_windows),
                    click_b: dead_b.click(index, w.events_b, setup.detector_b.dead_time_windows),
                };
                summary.add(&record);
                sink.record(index, record);
            }
        }
        batch_start = batch_end;
    }
    Ok(summary)
}

/// Full per-window trace of a counting scan.
pub fn simulate_scan(cascade: &CascadeSpec, setup: &CountingSetup, loss: &LossChannel) -> Result<CountTrace> {
    let mut trace = CountTrace {
        scan: setup.scan,
        records: Vec::new(),
    };
    simulate_scan_into(cascade, setup, loss, &mut trace)?;
    Ok(trace)
}

/// Counting scan aggregated into `bins` phase bins without keeping every window.
pub fn simulate_scan_binned(
    cascade: &CascadeSpec,
    setup: &CountingSetup,
    loss: &LossChannel,
    bins: u64,
) -> Result<BinnedCounts> {
    setup.validate()?;
    let windows = setup.scan.window_count(&setup.source)?;
    let mut acc = BinAccumulator::new(setup.scan, windows, bins)?;
    simulate_scan_into(cascade, setup, loss, &mut acc)?;
    Ok(acc.finish())
}

/// Sampled CW output: both port intensities and their product.
#[derive(Debug, Clone, PartialEq)]
pub struct CwTrace {
    pub phases: Vec<f64>,
    pub intensity_a: Vec<f64>,
    pub intensity_b: Vec<f64>,
    pub product: Vec<f64>,
}

/// Which CW column to turn into a [`ScanTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwChannel {
    A,
    B,
    Product,
}

impl CwTrace {
    pub fn trace(&self, channel: CwChannel) -> Result<ScanTrace> {
        let (kind, values) = match channel {
            CwChannel::A => (TraceKind::Intensity, &self.intensity_a),
            CwChannel::B => (TraceKind::Intensity, &self.intensity_b),
            CwChannel::Product => (TraceKind::Coincidence, &self.product),
        };
        ScanTrace::new(kind, self.phases.clone(), values.clone())
    }
}

/// Deterministic CW intensities at `samples` ramp midpoints, scaled by the
/// loss channel, with optional multiplicative Gaussian noise of relative
/// width `noise_rel_sigma` (negative excursions clip at zero).
pub fn simulate_cw_scan(
    cascade: &CascadeSpec,
    loss: &LossChannel,
    scan: &ScanConfig,
    noise_rel_sigma: f64,
    samples: u64,
) -> Result<CwTrace> {
    loss.validate()?;
    scan.validate()?;
    if !(noise_rel_sigma >= 0.0 && noise_rel_sigma.is_finite()) {
        return Err(Error::config(
            "noise_rel_sigma",
            format!("must be >= 0, got {noise_rel_sigma}"),
        ));
    }
    if samples == 0 {
        return Err(Error::config("bins", "CW sample count must be positive"));
    }
    let noise = Normal::new(0.0, noise_rel_sigma).map_err(|e| Error::config("noise_rel_sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(scan.rng_seed);
    rng.set_stream(CW_STREAM);

    let n = samples as usize;
    let mut out = CwTrace {
        phases: Vec::with_capacity(n),
        intensity_a: Vec::with_capacity(n),
        intensity_b: Vec::with_capacity(n),
        product: Vec::with_capacity(n),
    };
    for i in 0..samples {
        let phase = scan.window_phase(i, samples);
        let (pa, pb) = port_probabilities(cascade, phase);
        let mut ia = pa * loss.transmission * loss.arm_a;
        let mut ib = pb * loss.transmission * loss.arm_b;
        if noise_rel_sigma > 0.0 {
            ia = (ia * (1.0 + noise.sample(&mut rng))).max(0.0);
            ib = (ib * (1.0 + noise.sample(&mut rng))).max(0.0);
        }
        out.phases.push(phase);
        out.intensity_a.push(ia);
        out.intensity_b.push(ib);
        out.product.push(ia * ib);
    }
    Ok(out)
}

fn check_probability(field: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(field, format!("must lie in [0, 1], got {p}")))
    }
}

/// Probability that a detector clicks in one window under Poisson thinning:
/// `1 − exp(−μ·η·T·p)`.
pub fn click_probability_expectation(mean: f64, p: f64, efficiency: f64, transmission: f64) -> Result<f64> {
    validate_rate_args(
        mean,
        &[("p", p), ("efficiency", efficiency), ("transmission", transmission)],
    )?;
    Ok(-(-mean * efficiency * transmission * p).exp_m1())
}

/// Probability that both detectors click in one window:
/// `(1 − e^{−μ'p_A})(1 − e^{−μ'p_B})`, `μ' = mean·efficiency·transmission`.
pub fn coincidence_rate_expectation(mean: f64, p_a: f64, p_b: f64, efficiency: f64, transmission: f64) -> Result<f64> {
    validate_rate_args(
        mean,
        &[
            ("p_a", p_a),
            ("p_b", p_b),
            ("efficiency", efficiency),
            ("transmission", transmission),
        ],
    )?;
    let mu = mean * efficiency * transmission;
    Ok((-mu * p_a).exp_m1() * (-mu * p_b).exp_m1())
}

/// `P(n ≥ 2) / P(n ≥ 1)` for a Poisson source of mean `mean`.
pub fn multi_photon_fraction_expectation(mean: f64) -> Result<f64> {
    validate_rate_args(mean, &[])?;
    let p0 = (-mean).exp();
    let p_ge1 = -(-mean).exp_m1();
    Ok((p_ge1 - mean * p0) / p_ge1)
}

fn validate_rate_args(mean: f64, probs: &[(&str, f64)]) -> Result<()> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::config(
            "mean",
            format!("must be positive and finite, got {mean}"),
        ));
    }
    probs.iter().try_for_each(|(name, p)| check_probability(name, *p))
}

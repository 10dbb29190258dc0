//! Fringe estimators: cosine fit, visibility with per-period uncertainty,
//! spectral period, extrema, and the photon-loss comparison.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::check_order;
use crate::cascade::CascadeSpec;
use crate::error::{Error, Result};
use crate::montecarlo::{
    click_probability_expectation, port_probabilities, simulate_scan_binned, CountChannel, CountingSetup, LossChannel,
};

/// Minimum samples per fringe period accepted by the estimators.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 8.0;
/// Minimum fringe periods spanned for a fit.
pub const MIN_PERIODS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    Intensity,
    CountRate,
    Coincidence,
}

/// Sampled fringe: strictly increasing phases, non-negative values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    kind: TraceKind,
    phases: Vec<f64>,
    values: Vec<f64>,
}

impl ScanTrace {
    pub fn new(kind: TraceKind, phases: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if phases.len() != values.len() {
            return Err(Error::Estimation(format!(
                "{} phases but {} values",
                phases.len(),
                values.len()
            )));
        }
        if phases.is_empty() {
            return Err(Error::Estimation("empty trace".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) || phases.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Estimation(
                "phases must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Estimation("values must be finite and non-negative".into()));
        }
        Ok(Self { kind, phases, values })
    }

    /// Samples `f` at `phases`.
    pub fn from_fn(kind: TraceKind, phases: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = phases.iter().map(|&p| f(p)).collect();
        Self::new(kind, phases, values)
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.kind,
            self.phases.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Phase extent covered by the samples, counting half a sample spacing
    /// beyond each end.
    pub fn span(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        (self.phases[n - 1] - self.phases[0]) * n as f64 / (n - 1) as f64
    }

    fn slice(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.phases
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| **p >= lo && **p < hi)
            .map(|(p, v)| (*p, *v))
            .unzip()
    }
}

/// Least-squares parameters of `y = offset + amplitude·cos(Nφ + phase0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub offset: f64,
    /// Always ≥ 0; the sign is absorbed by `phase0`.
    pub amplitude: f64,
    pub phase0: f64,
    /// RMS of the fit residuals.
    pub residual: f64,
}

fn check_sampling(trace: &ScanTrace, order: u32, min_periods: f64) -> Result<()> {
    check_order(order)?;
    let period = 2.0 * PI / order as f64;
    let periods = trace.span() / period;
    if periods < min_periods - 1e-9 {
        return Err(Error::Estimation(format!(
            "trace spans {periods:.3} periods of order {order}, need at least {min_periods}"
        )));
    }
    let per_period = trace.len() as f64 / periods;
    if per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(Error::Estimation(format!(
            "{per_period:.1} samples per period, need at least {MIN_SAMPLES_PER_PERIOD}"
        )));
    }
    Ok(())
}

/// Cosine fit at harmonic `order`. Requires at least two fringe periods and
/// eight samples per period.
pub fn fit_fringe(trace: &ScanTrace, order: u32) -> Result<FringeFit> {
    check_sampling(trace, order, MIN_PERIODS)?;
    fit_samples(trace.phases(), trace.values(), order)
}

// Linear least squares on the basis {1, cos Nφ, sin Nφ}.
fn fit_samples(phases: &[f64], values: &[f64], order: u32) -> Result<FringeFit> {
    let n = order as f64;
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (&p, &y) in phases.iter().zip(values) {
        let (s, c) = (n * p).sin_cos();
        let row = [1.0, c, s];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [a, cc, ss] =
        solve3(ata, aty).ok_or_else(|| Error::Estimation("cosine fit is singular for these phases".into()))?;
    let amplitude = cc.hypot(ss);
    let phase0 = if amplitude > 0.0 { (-ss).atan2(cc) } else { 0.0 };
    let sq: f64 = phases
        .iter()
        .zip(values)
        .map(|(&p, &y)| {
            let r = y - (a + cc * (n * p).cos() + ss * (n * p).sin());
            r * r
        })
        .sum();
    Ok(FringeFit {
        offset: a,
        amplitude,
        phase0,
        residual: (sq / phases.len() as f64).sqrt(),
    })
}

// Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibilityMethod {
    /// `100·amplitude/offset` of the global cosine fit.
    #[default]
    Fit,
    /// Mean of per-period `(max − min)/(max + min)`.
    Extrema,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    /// Percent, clamped to 100.
    pub visibility: f64,
    /// One standard error across per-period estimates, percent.
    pub uncertainty: f64,
    pub n_periods_used: usize,
    pub method: VisibilityMethod,
    /// The raw estimate exceeded 100 % and was clamped.
    pub clamped: bool,
}

pub fn visibility(trace: &ScanTrace, order: u32) -> Result<VisibilityReport> {
    visibility_with(trace, order, VisibilityMethod::Fit)
}

pub fn visibility_with(trace: &ScanTrace, order: u32, method: VisibilityMethod) -> Result<VisibilityReport> {
    let global = fit_fringe(trace, order)?;
    if global.offset <= 0.0 {
        return Err(Error::DegenerateTrace(format!(
            "fitted offset {} is not positive",
            global.offset
        )));
    }
    let per_period = per_period_visibilities(trace, order, method)?;
    let k = per_period.len();
    let mean = per_period.iter().sum::<f64>() / k as f64;
    let uncertainty = if k > 1 {
        let var = per_period.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        0.0
    };
    let raw = match method {
        VisibilityMethod::Fit => 100.0 * global.amplitude / global.offset,
        VisibilityMethod::Extrema => mean,
    };
    Ok(VisibilityReport {
        visibility: raw.min(100.0),
        uncertainty,
        n_periods_used: k,
        method,
        clamped: raw > 100.0,
    })
}

fn per_period_visibilities(trace: &ScanTrace, order: u32, method: VisibilityMethod) -> Result<Vec<f64>> {
    let period = 2.0 * PI / order as f64;
    let first = trace.phases()[0];
    let half_step = trace.span() / trace.len() as f64 / 2.0;
    let start = first - half_step;
    let count = ((trace.span() / period) + 1e-9).floor() as usize;
    let estimates: Vec<f64> = (0..count)
        .filter_map(|k| {
            let lo = start + k as f64 * period;
            let (p, v) = trace.slice(lo, lo + period);
            if (p.len() as f64) < MIN_SAMPLES_PER_PERIOD {
                return None;
            }
            match method {
                VisibilityMethod::Fit => {
                    let fit = fit_samples(&p, &v, order).ok()?;
                    (fit.offset > 0.0).then(|| 100.0 * fit.amplitude / fit.offset)
                }
                VisibilityMethod::Extrema => {
                    let max = v.iter().cloned().fold(f64::MIN, f64::max);
                    let min = v.iter().cloned().fold(f64::MAX, f64::min);
                    (max + min > 0.0).then(|| 100.0 * (max - min) / (max + min))
                }
            }
        })
        .collect();
    if estimates.is_empty() {
        return Err(Error::DegenerateTrace("no usable fringe period".into()));
    }
    Ok(estimates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub fundamental_period: f64,
    /// `reference_period / fundamental_period`.
    pub order_estimate: f64,
}

/// Dominant fringe period of a uniformly sampled trace, with `2π` (the
/// first-order period) as reference.
pub fn estimate_period(trace: &ScanTrace) -> Result<PeriodReport> {
    estimate_period_against(trace, 2.0 * PI)
}

/// Hann-windowed FFT of the mean-removed trace; the strongest non-DC bin is
/// refined by a parabola through the log magnitudes of it and its neighbours.
pub fn estimate_period_against(trace: &ScanTrace, reference_period: f64) -> Result<PeriodReport> {
    let n = trace.len();
    if n < 8 {
        return Err(Error::Estimation(format!("{n} samples are too few for a spectrum")));
    }
    if !(reference_period > 0.0 && reference_period.is_finite()) {
        return Err(Error::Estimation("reference period must be positive".into()));
    }
    let phases = trace.phases();
    let step = (phases[n - 1] - phases[0]) / (n - 1) as f64;
    if phases.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step) {
        return Err(Error::Estimation(
            "period estimation needs uniform phase sampling".into(),
        ));
    }

    let values = trace.values();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos();
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf[..=n / 2].iter().map(|z| z.norm()).collect();

    let (peak, peak_mag) = mags
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |best, (k, &m)| if m > best.1 { (k, m) } else { best });
    // amplitude of a full-scale cosine under a Hann window is n/4
    if peak == 0 || peak_mag / (n as f64 / 4.0) <= 1e-9 * mean.abs().max(1e-300) {
        return Err(Error::Estimation("no significant non-zero frequency in trace".into()));
    }
    let offset = if peak >= 1 && peak + 1 < mags.len() && mags[peak - 1] > 0.0 && mags[peak + 1] > 0.0 {
        let (a, b, c) = (mags[peak - 1].ln(), peak_mag.ln(), mags[peak + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom.abs() > 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let cycles = peak as f64 + offset;
    let fundamental_period = n as f64 * step / cycles;
    Ok(PeriodReport {
        fundamental_period,
        order_estimate: reference_period / fundamental_period,
    })
}

/// Extrema of the fitted cosine inside the trace's phase range.
///
/// Needs only half a period of data, so single-period windows such as
/// `[0, π]` at order 2 are accepted.
pub fn locate_extrema(trace: &ScanTrace, order: u32) -> Result<Vec<f64>> {
    check_sampling(trace, order, 0.5)?;
    let fit = fit_samples(trace.phases(), trace.values(), order)?;
    if fit.amplitude <= 1e-12 * fit.offset.abs().max(1e-300) {
        return Err(Error::Estimation("flat trace has no extrema".into()));
    }
    let n = order as f64;
    let (lo, hi) = (trace.phases()[0], trace.phases()[trace.len() - 1]);
    let tol = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    let m_first = ((n * lo + fit.phase0) / PI - 1e-9).ceil() as i64;
    let m_last = ((n * hi + fit.phase0) / PI + 1e-9).floor() as i64;
    Ok((m_first..=m_last)
        .map(|m| (m as f64 * PI - fit.phase0) / n)
        .filter(|phi| *phi >= lo - tol && *phi <= hi + tol)
        .collect())
}

/// One transmission setting of [`loss_invariance_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub transmission: f64,
    /// Port-A singles visibility.
    pub visibility: VisibilityReport,
    /// Singles clicks (A + B) per window.
    pub mean_count_rate: f64,
    /// Poisson-thinning expectation for `mean_count_rate`.
    pub expected_count_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossStudy {
    pub order: u32,
    pub rows: Vec<LossRow>,
    /// max − min visibility across rows, percentage points.
    pub visibility_spread: f64,
}

/// Re-runs the counting scan at each uniform transmission with the same seed
/// and compares port-A visibilities and singles rates.
pub fn loss_invariance_study(
    cascade: &CascadeSpec,
    transmissions: &[f64],
    setup: &CountingSetup,
    bins: u64,
) -> Result<LossStudy> {
    if transmissions.is_empty() {
        return Err(Error::config("transmissions", "at least one transmission is required"));
    }
    for (i, t) in transmissions.iter().enumerate() {
        if !(*t > 0.0 && *t <= 1.0) {
            return Err(Error::config(
                format!("transmissions[{i}]"),
                format!("must lie in (0, 1], got {t}"),
            ));
        }
    }
    setup.validate()?;
    let windows = setup.scan.window_count(&setup.source)?;

    let rows = transmissions
        .iter()
        .map(|&t| {
            let loss = LossChannel::uniform(t);
            let counts = simulate_scan_binned(cascade, setup, &loss, bins)?;
            let vis = visibility(&counts.trace(CountChannel::A)?, cascade.order())?;
            let s = counts.summary;
            Ok(LossRow {
                transmission: t,
                visibility: vis,
                mean_count_rate: (s.clicks_a + s.clicks_b) as f64 / s.windows as f64,
                expected_count_rate: expected_singles_rate(cascade, setup, t, windows)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let max = rows.iter().map(|r| r.visibility.visibility).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.visibility.visibility).fold(f64::MAX, f64::min);
    Ok(LossStudy {
        order: cascade.order(),
        rows,
        visibility_spread: max - min,
    })
}

/// Average over the scan of `P(click A) + P(click B)` with dark counts and
/// dead time ignored.
pub fn expected_singles_rate(
    cascade: &CascadeSpec,
    setup: &CountingSetup,
    transmission: f64,
    windows: u64,
) -> Result<f64> {
    const POINTS: u64 = 20_000;
    let points = POINTS.min(windows);
    let mu = setup.source.mean_photons_per_window;
    let sum = (0..points)
        .into_par_iter()
        .map(|i| {
            let phase = setup.scan.window_phase(i, points);
            let (pa, pb) = port_probabilities(cascade, phase);
            let a = click_probability_expectation(mu, pa, setup.detector_a.efficiency, transmission)?;
            let b = click_probability_expectation(mu, pb, setup.detector_b.efficiency, transmission)?;
            Ok(a + b)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>();
    Ok(sum / points as f64)
}

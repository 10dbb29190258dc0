//! The asymmetrically coupled MZI chain, built two ways.
//!
//! [`explicit_cascade`] multiplies the alternating stage matrices one by one.
//! [`closed_form`] evaluates the general order-`N` solution directly. The two
//! produce identical output intensities for every order; as matrices they
//! agree only up to per-port phases (see [`equal_up_to_port_phases`]).
//!
//! Phase symbols: the exponential inside the stage matrices carries the
//! scanned phase `φ`; the diagonal dummy matrices carry the dummy-MZI phase
//! `ψ`, which is zero for the superresolving configuration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{c, ensure_finite, intensities, ComplexAmp, FieldPair, Intensity, TransferMatrix, IMAG};

/// Order, dummy phase and input field of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeSpec {
    order: u32,
    dummy_phase: f64,
    input: FieldPair,
}

impl CascadeSpec {
    /// A chain of `order` φ-MZI blocks with ψ = 0 and light in the upper port only.
    pub fn new(order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("cascade order must be at least 1".into()));
        }
        Ok(Self {
            order,
            dummy_phase: 0.0,
            input: FieldPair::upper_port(),
        })
    }

    /// Sets the dummy-MZI phase ψ. Non-zero values are experimental: the
    /// coupling they model is only known at the matrix level.
    pub fn with_dummy_phase(mut self, psi: f64) -> Result<Self> {
        ensure_finite("dummy_phase", psi)?;
        self.dummy_phase = psi;
        Ok(self)
    }

    pub fn with_input(mut self, input: FieldPair) -> Self {
        self.input = input;
        self
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dummy_phase(&self) -> f64 {
        self.dummy_phase
    }

    pub fn input(&self) -> FieldPair {
        self.input
    }
}

impl Default for CascadeSpec {
    fn default() -> Self {
        Self {
            order: 1,
            dummy_phase: 0.0,
            input: FieldPair::upper_port(),
        }
    }
}

/// Coupling polarity of one stage. Stages alternate plus, minus, plus, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Plus,
    Minus,
}

impl StageKind {
    /// Polarity of the zero-based stage `index` counted from the input.
    pub fn for_stage(index: u32) -> Self {
        if index.is_multiple_of(2) {
            StageKind::Plus
        } else {
            StageKind::Minus
        }
    }
}

/// Unit MZI `e^{iφ/2}[[cos(φ/2), i·sin(φ/2)], [i·sin(φ/2), cos(φ/2)]]`.
pub fn unit_mzi(phi: f64) -> Result<TransferMatrix> {
    ensure_finite("phi", phi)?;
    Ok(rotation(phi))
}

/// `unit_mzi(phi)` raised to the `n`-th matrix power.
///
/// The unit MZI is `e^{iφ/2}·e^{i(φ/2)σx}`, so its powers stay in the same
/// one-parameter family and are evaluated directly at angle `n·φ`.
pub fn mzi_power(phi: f64, n: u32) -> Result<TransferMatrix> {
    ensure_finite("phi", phi)?;
    if n == 0 {
        return Err(Error::Domain("power must be at least 1".into()));
    }
    Ok(rotation(n as f64 * phi))
}

fn rotation(theta: f64) -> TransferMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    let d = c(co, 0.0);
    let o = c(0.0, s);
    TransferMatrix::new(d, o, o, d).scale(Complex64::cis(theta / 2.0))
}

/// `[M⁺]` or `[M⁻]` with `e^{iφ}` set from the scan phase.
pub fn stage_matrix(kind: StageKind, scan_phase: f64) -> TransferMatrix {
    let e = Complex64::cis(scan_phase);
    let minus = (c(1.0, 0.0) - e) * 0.5;
    let plus = IMAG * (c(1.0, 0.0) + e) * 0.5;
    match kind {
        StageKind::Plus => TransferMatrix::new(minus, plus, plus, -minus),
        StageKind::Minus => TransferMatrix::new(-minus, plus, plus, minus),
    }
}

/// Dummy-phase diagonal `[φ⁺] = diag(1, e^{iψ})`, `[φ⁻] = diag(e^{iψ}, 1)`.
pub fn dummy_phase_matrix(kind: StageKind, psi: f64) -> TransferMatrix {
    let e = Complex64::cis(psi);
    let one = c(1.0, 0.0);
    match kind {
        StageKind::Plus => TransferMatrix::diag(one, e),
        StageKind::Minus => TransferMatrix::diag(e, one),
    }
}

/// Product of `order` alternating stages, rightmost (stage 1) applied first.
pub fn explicit_cascade(spec: &CascadeSpec, scan_phase: f64) -> TransferMatrix {
    (0..spec.order).fold(TransferMatrix::IDENTITY, |acc, index| {
        let kind = StageKind::for_stage(index);
        dummy_phase_matrix(kind, spec.dummy_phase) * stage_matrix(kind, scan_phase) * acc
    })
}

/// General order-`N` solution, including its `(-1)^N` global factor.
///
/// Only defined for ψ = 0.
pub fn closed_form(spec: &CascadeSpec, scan_phase: f64) -> Result<TransferMatrix> {
    if spec.dummy_phase != 0.0 {
        return Err(Error::Unsupported(format!(
            "closed form requires dummy_phase = 0, got {}",
            spec.dummy_phase
        )));
    }
    Ok(closed_form_matrix(spec.order, scan_phase))
}

pub(crate) fn closed_form_matrix(order: u32, scan_phase: f64) -> TransferMatrix {
    let parity = parity_sign(order);
    let e = Complex64::cis(order as f64 * scan_phase) * parity;
    let diag = (c(1.0, 0.0) + e) * 0.5;
    let off = (c(1.0, 0.0) - e) * 0.5;
    TransferMatrix::new(diag, -IMAG * off, IMAG * off, diag).scale(c(parity, 0.0))
}

/// `(-1)^N`.
pub fn parity_sign(order: u32) -> f64 {
    if order.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Output intensities `(I_A, I_B)` of `matrix` acting on `input`.
pub fn output_intensities(matrix: &TransferMatrix, input: &FieldPair) -> (Intensity, Intensity) {
    intensities(&(*matrix * *input))
}

/// True iff some unit scalar `c` gives `a = c·b` entrywise within `tol`.
///
/// `c` is taken from the largest-magnitude entry of `b`.
pub fn equal_up_to_global_phase(a: &TransferMatrix, b: &TransferMatrix, tol: f64) -> Result<bool> {
    check_tol(tol)?;
    let (idx, pivot) = b
        .entries()
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if pivot == 0.0 {
        return Err(Error::Domain("reference matrix is identically zero".into()));
    }
    let ratio: ComplexAmp = a.entries()[idx] / b.entries()[idx];
    if ratio.norm() == 0.0 || !ratio.norm().is_finite() {
        return Ok(false);
    }
    let phase = ratio / ratio.norm();
    Ok(a.max_abs_diff(&b.scale(phase)) <= tol)
}

/// True iff `a = L·b·R` for diagonal unitaries `L`, `R` within `tol`.
///
/// Port phases never change the output intensities for single-port input.
/// Checked through the invariants of that action: entrywise moduli and the
/// product `m00·m11·conj(m01·m10)`.
pub fn equal_up_to_port_phases(a: &TransferMatrix, b: &TransferMatrix, tol: f64) -> Result<bool> {
    check_tol(tol)?;
    let moduli_match = a
        .entries()
        .iter()
        .zip(b.entries().iter())
        .all(|(x, y)| (x.norm() - y.norm()).abs() <= tol);
    let cross = |m: &TransferMatrix| m.m00 * m.m11 * (m.m01 * m.m10).conj();
    Ok(moduli_match && (cross(a) - cross(b)).norm() <= tol)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

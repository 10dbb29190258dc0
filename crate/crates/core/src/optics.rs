//! Two-port complex field algebra.
//!
//! Everything in this crate acts on a pair of path amplitudes, so the only
//! linear algebra needed is 2×2 complex matrices and 2-vectors. Matrices are
//! stored exactly as written, global phase included.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex field amplitude (dimensionless `re`, `im`).
pub type ComplexAmp = Complex64;

const ZERO: ComplexAmp = Complex64::new(0.0, 0.0);
const ONE: ComplexAmp = Complex64::new(1.0, 0.0);
const I: ComplexAmp = Complex64::new(0.0, 1.0);

/// Amplitudes on the upper and lower spatial path of one interferometer stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPair {
    pub upper: ComplexAmp,
    pub lower: ComplexAmp,
}

impl FieldPair {
    pub const fn new(upper: ComplexAmp, lower: ComplexAmp) -> Self {
        Self { upper, lower }
    }

    /// Unit field in the upper input port, vacuum in the lower one.
    pub const fn upper_port() -> Self {
        Self::new(ONE, ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.upper.norm_sqr() + self.lower.norm_sqr()
    }
}

impl Default for FieldPair {
    fn default() -> Self {
        Self::upper_port()
    }
}

/// Optical intensity normalised to the input intensity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intensity(pub f64);

impl Intensity {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A 2×2 complex transfer matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m00: ComplexAmp,
    pub m01: ComplexAmp,
    pub m10: ComplexAmp,
    pub m11: ComplexAmp,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self::new(ONE, ZERO, ZERO, ONE);
    pub const SIGMA_X: Self = Self::new(ZERO, ONE, ONE, ZERO);
    pub const SIGMA_Z: Self = Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0));

    pub const fn new(m00: ComplexAmp, m01: ComplexAmp, m10: ComplexAmp, m11: ComplexAmp) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub const fn diag(d0: ComplexAmp, d1: ComplexAmp) -> Self {
        Self::new(d0, ZERO, ZERO, d1)
    }

    pub fn entries(&self) -> [ComplexAmp; 4] {
        [self.m00, self.m01, self.m10, self.m11]
    }

    pub fn map(&self, f: impl Fn(ComplexAmp) -> ComplexAmp) -> Self {
        Self::new(f(self.m00), f(self.m01), f(self.m10), f(self.m11))
    }

    pub fn scale(&self, c: ComplexAmp) -> Self {
        self.map(|z| z * c)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::new(self.m00.conj(), self.m10.conj(), self.m01.conj(), self.m11.conj())
    }

    pub fn det(&self) -> ComplexAmp {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `M·M† = I` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        matmul(self, &self.dagger()).max_abs_diff(&Self::IDENTITY) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Default for TransferMatrix {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        matmul(&self, &rhs)
    }
}

impl Mul<FieldPair> for TransferMatrix {
    type Output = FieldPair;

    fn mul(self, rhs: FieldPair) -> FieldPair {
        apply(&self, &rhs)
    }
}

/// Balanced beam splitter `e^{iπσx/4} = (1/√2)[[1, i], [i, 1]]`.
pub fn beam_splitter() -> TransferMatrix {
    let d = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let o = Complex64::new(0.0, FRAC_1_SQRT_2);
    TransferMatrix::new(d, o, o, d)
}

/// Differential phase plate `e^{iφσz/2} = diag(e^{iφ/2}, e^{-iφ/2})`.
pub fn phase_plate(phi: f64) -> Result<TransferMatrix> {
    ensure_finite("phi", phi)?;
    Ok(TransferMatrix::diag(
        Complex64::cis(phi / 2.0),
        Complex64::cis(-phi / 2.0),
    ))
}

pub fn matmul(a: &TransferMatrix, b: &TransferMatrix) -> TransferMatrix {
    TransferMatrix::new(
        a.m00 * b.m00 + a.m01 * b.m10,
        a.m00 * b.m01 + a.m01 * b.m11,
        a.m10 * b.m00 + a.m11 * b.m10,
        a.m10 * b.m01 + a.m11 * b.m11,
    )
}

pub fn apply(m: &TransferMatrix, v: &FieldPair) -> FieldPair {
    FieldPair::new(m.m00 * v.upper + m.m01 * v.lower, m.m10 * v.upper + m.m11 * v.lower)
}

/// `(|upper|², |lower|²)`.
pub fn intensities(v: &FieldPair) -> (Intensity, Intensity) {
    (Intensity(v.upper.norm_sqr()), Intensity(v.lower.norm_sqr()))
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) const fn c(re: f64, im: f64) -> ComplexAmp {
    Complex64::new(re, im)
}

pub(crate) const IMAG: ComplexAmp = I;

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    /// Truncated power series for `exp(A)`. Independent of the closed forms above.
    fn expm_series(a: &TransferMatrix) -> TransferMatrix {
        let mut term = TransferMatrix::IDENTITY;
        let mut sum = TransferMatrix::IDENTITY;
        for k in 1..40 {
            term = matmul(&term, a).scale(c(1.0 / k as f64, 0.0));
            sum = TransferMatrix::new(
                sum.m00 + term.m00,
                sum.m01 + term.m01,
                sum.m10 + term.m10,
                sum.m11 + term.m11,
            );
        }
        sum
    }

    fn unitary_from(alpha: f64, theta: f64, beta: f64, gamma: f64) -> TransferMatrix {
        // e^{iα}·Rz(β)·Ry(θ)·Rz(γ)
        let rz = |t: f64| TransferMatrix::diag(Complex64::cis(-t / 2.0), Complex64::cis(t / 2.0));
        let (s, co) = (theta / 2.0).sin_cos();
        let ry = TransferMatrix::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0));
        (rz(beta) * ry * rz(gamma)).scale(Complex64::cis(alpha))
    }

    #[test]
    fn beam_splitter_matches_series_exponential() {
        let generator = TransferMatrix::SIGMA_X.scale(c(0.0, PI / 4.0));
        let oracle = expm_series(&generator);
        assert!(beam_splitter().max_abs_diff(&oracle) < 1e-15);
        let h = FRAC_1_SQRT_2;
        let expected = TransferMatrix::new(c(h, 0.0), c(0.0, h), c(0.0, h), c(h, 0.0));
        assert!(beam_splitter().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn beam_splitter_unitary_and_squares_to_i_sigma_x() {
        let b = beam_splitter();
        assert!(b.is_unitary(1e-15));
        let bb = matmul(&b, &b);
        assert!(bb.max_abs_diff(&TransferMatrix::SIGMA_X.scale(IMAG)) < 1e-15);
    }

    #[test]
    fn phase_plate_values() {
        assert!(phase_plate(0.0).unwrap().max_abs_diff(&TransferMatrix::IDENTITY) < 1e-15);
        let p = phase_plate(PI).unwrap();
        let expected = TransferMatrix::diag(c(0.0, 1.0), c(0.0, -1.0));
        assert!(p.max_abs_diff(&expected) < 1e-15);
        let series = expm_series(&TransferMatrix::SIGMA_Z.scale(c(0.0, 0.3 / 2.0)));
        assert!(phase_plate(0.3).unwrap().max_abs_diff(&series) < 1e-15);
    }

    #[test]
    fn phase_plate_rejects_non_finite() {
        assert!(matches!(phase_plate(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(phase_plate(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn matmul_identities() {
        let m = unitary_from(0.1, 0.7, -1.2, 2.5);
        assert_eq!(matmul(&TransferMatrix::IDENTITY, &m), m);
        let xx = matmul(&TransferMatrix::SIGMA_X, &TransferMatrix::SIGMA_X);
        assert_eq!(xx, TransferMatrix::IDENTITY);
    }

    #[test]
    fn apply_examples() {
        let v = FieldPair::upper_port();
        assert_eq!(apply(&TransferMatrix::IDENTITY, &v), v);
        assert_eq!(
            apply(&TransferMatrix::SIGMA_X, &v),
            FieldPair::new(c(0.0, 0.0), c(1.0, 0.0))
        );
        let out = apply(&beam_splitter(), &v);
        assert!((out.upper - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((out.lower - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn intensities_examples() {
        let (a, b) = intensities(&FieldPair::upper_port());
        assert_eq!((a.value(), b.value()), (1.0, 0.0));
        let (a, b) = intensities(&FieldPair::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)));
        assert!((a.value() - 0.5).abs() < 1e-15 && (b.value() - 0.5).abs() < 1e-15);
        let m = beam_splitter() * phase_plate(1.1).unwrap() * beam_splitter();
        let (a, b) = intensities(&(m * FieldPair::upper_port()));
        assert!((a.value() + b.value() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn constructors_are_unitary(phi in -50.0f64..50.0) {
            let p = phase_plate(phi).unwrap();
            prop_assert!(p.is_unitary(1e-12));
            prop_assert!((beam_splitter() * p * beam_splitter()).is_unitary(1e-12));
        }

        #[test]
        fn phase_plates_compose_additively(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let lhs = phase_plate(a).unwrap() * phase_plate(b).unwrap();
            prop_assert!(lhs.max_abs_diff(&phase_plate(a + b).unwrap()) < 1e-12);
        }

        #[test]
        fn unitary_application_conserves_norm(
            angles in prop::array::uniform4(-PI..PI),
            re in prop::array::uniform2(-3.0f64..3.0),
            im in prop::array::uniform2(-3.0f64..3.0),
        ) {
            let m = unitary_from(angles[0], angles[1], angles[2], angles[3]);
            let v = FieldPair::new(c(re[0], im[0]), c(re[1], im[1]));
            prop_assume!(v.norm_sqr() > 1e-6);
            let out = m * v;
            prop_assert!((out.norm_sqr() - v.norm_sqr()).abs() <= 1e-12 * v.norm_sqr());
        }

        #[test]
        fn matmul_is_associative(
            a in prop::array::uniform4(-PI..PI),
            b in prop::array::uniform4(-PI..PI),
            d in prop::array::uniform4(-PI..PI),
        ) {
            let (x, y, z) = (
                unitary_from(a[0], a[1], a[2], a[3]),
                unitary_from(b[0], b[1], b[2], b[3]),
                unitary_from(d[0], d[1], d[2], d[3]),
            );
            prop_assert!(((x * y) * z).max_abs_diff(&(x * (y * z))) < 1e-12);
        }
    }
}

//! Closed-form observables of an order-`N` chain.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cascade::parity_sign;
use crate::error::{Error, Result};
use crate::optics::Intensity;

/// Output port of the final stage. `A` is the upper output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    A,
    B,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Port::A => "A",
            Port::B => "B",
        })
    }
}

impl FromStr for Port {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Port::A),
            "B" | "b" => Ok(Port::B),
            other => Err(Error::config("port", format!("expected A or B, got {other:?}"))),
        }
    }
}

pub(crate) fn check_order(order: u32) -> Result<()> {
    if order == 0 {
        Err(Error::Domain("order must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `I_A^{(N)}` or `I_B^{(N)}` as a function of the scan phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FringeFunction {
    order: u32,
    port: Port,
}

impl FringeFunction {
    pub fn new(order: u32, port: Port) -> Result<Self> {
        check_order(order)?;
        Ok(Self { order, port })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn port(&self) -> Port {
        self.port
    }

    pub fn eval(&self, phi: f64) -> Intensity {
        let s = parity_sign(self.order) * (self.order as f64 * phi).cos();
        Intensity(match self.port {
            Port::A => 0.5 * (1.0 + s),
            Port::B => 0.5 * (1.0 - s),
        })
    }
}

/// `½[1 ± (-1)^N cos(Nφ)]`, `+` for port A.
pub fn fringe_intensity(order: u32, port: Port, phi: f64) -> Result<Intensity> {
    Ok(FringeFunction::new(order, port)?.eval(phi))
}

/// Coincidence product `I_A·I_B = ¼ sin²(Nφ)`.
pub fn coincidence_product(order: u32, phi: f64) -> Result<f64> {
    check_order(order)?;
    let s = (order as f64 * phi).sin();
    Ok(0.25 * s * s)
}

/// Quantized extrema `mπ/N`, `m = 0..=N`, on `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBasis {
    pub order: u32,
    pub nodes: Vec<f64>,
}

impl PhaseBasis {
    pub fn spacing(&self) -> f64 {
        PI / self.order as f64
    }
}

pub fn phase_basis(order: u32) -> Result<PhaseBasis> {
    check_order(order)?;
    let n = order as f64;
    let nodes = (0..=order).map(|m| m as f64 * PI / n).collect();
    Ok(PhaseBasis { order, nodes })
}

/// Port that is fully constructive at φ = 0: A for even `N`, B for odd `N`.
pub fn parity_port(order: u32) -> Result<Port> {
    check_order(order)?;
    Ok(if parity_sign(order) > 0.0 { Port::A } else { Port::B })
}

/// Spring-mass chain used as the classical comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModeSpec {
    /// kg
    pub mass: f64,
    /// N/m
    pub spring_constant: f64,
    pub chain_size: u32,
    /// 1-based.
    pub mode_index: u32,
}

impl NormalModeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::config("mass", "must be positive and finite"));
        }
        if !(self.spring_constant > 0.0 && self.spring_constant.is_finite()) {
            return Err(Error::config("spring_constant", "must be positive and finite"));
        }
        if self.chain_size == 0 {
            return Err(Error::config("chain_size", "must be at least 1"));
        }
        if self.mode_index == 0 || self.mode_index > self.chain_size {
            return Err(Error::Domain(format!(
                "mode index {} outside 1..={}",
                self.mode_index, self.chain_size
            )));
        }
        Ok(())
    }
}

/// `ω_p = 2√(k/m)·sin(pπ / (2(N+1)))`.
pub fn normal_mode_frequency(spec: &NormalModeSpec) -> Result<f64> {
    spec.validate()?;
    let arg = spec.mode_index as f64 * FRAC_PI_2 / (spec.chain_size as f64 + 1.0);
    Ok(2.0 * (spec.spring_constant / spec.mass).sqrt() * arg.sin())
}

/// One row of the mode table: `deviation = ω_p − p·ω₁` where `ω₁` is the
/// single-mass frequency `√(2k/m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModeRow {
    pub p: u32,
    pub omega: f64,
    pub linear_deviation: f64,
}

pub fn normal_mode_table(mass: f64, spring_constant: f64, chain_size: u32) -> Result<Vec<NormalModeRow>> {
    let base = normal_mode_frequency(&NormalModeSpec {
        mass,
        spring_constant,
        chain_size: 1,
        mode_index: 1,
    })?;
    (1..=chain_size.max(1))
        .map(|p| {
            let omega = normal_mode_frequency(&NormalModeSpec {
                mass,
                spring_constant,
                chain_size,
                mode_index: p,
            })?;
            Ok(NormalModeRow {
                p,
                omega,
                linear_deviation: omega - p as f64 * base,
            })
        })
        .collect()
}

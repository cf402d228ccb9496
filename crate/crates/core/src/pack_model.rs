//! Equivalent circuit of `n` parallel cells with one shorted cell.
//!
//! The shorted cell is fed by the `n - 1` healthy cells through their 1 kHz
//! impedance, so the fault current is
//!
//! ```text
//! I_short = n * V(SOC) / (R_cell + n * R_short)
//! ```
//!
//! and the terminal voltage only moves by `I_short / n * R_cell`.
//! Currents follow the discharge-positive convention throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open-circuit voltage table, strictly increasing in SOC on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct OcvCurve {
    knots: Vec<(f64, f64)>,
}

impl OcvCurve {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Config("ocv_curve needs at least two knots".into()));
        }
        if knots.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
            return Err(Error::Config("ocv_curve contains non-finite values".into()));
        }
        let (first, last) = (knots[0].0, knots[knots.len() - 1].0);
        if first != 0.0 || last != 1.0 {
            return Err(Error::Config(format!(
                "ocv_curve must span SOC 0..1, got {first}..{last}"
            )));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config(
                    "ocv_curve SOC knots must be strictly increasing".into(),
                ));
            }
            if w[1].1 <= w[0].1 {
                return Err(Error::Config(
                    "ocv_curve voltage must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Piecewise-linear lookup. The table covers exactly [0, 1].
    pub fn voltage(&self, soc: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&soc) {
            return Err(Error::Domain {
                what: "soc",
                value: soc,
                domain: "[0, 1]",
            });
        }
        let idx = self.knots.partition_point(|&(s, _)| s <= soc);
        if idx == self.knots.len() {
            return Ok(self.knots[idx - 1].1);
        }
        let (s0, v0) = self.knots[idx - 1];
        let (s1, v1) = self.knots[idx];
        Ok(v0 + (v1 - v0) * (soc - s0) / (s1 - s0))
    }
}

impl TryFrom<Vec<(f64, f64)>> for OcvCurve {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(knots)
    }
}

impl From<OcvCurve> for Vec<(f64, f64)> {
    fn from(c: OcvCurve) -> Self {
        c.knots
    }
}

impl Default for OcvCurve {
    /// NMC-like curve, 3.0 V empty to 4.2 V full.
    fn default() -> Self {
        Self {
            knots: vec![
                (0.0, 3.00),
                (0.05, 3.30),
                (0.10, 3.45),
                (0.20, 3.58),
                (0.30, 3.65),
                (0.40, 3.71),
                (0.50, 3.77),
                (0.60, 3.85),
                (0.70, 3.94),
                (0.80, 4.03),
                (0.90, 4.11),
                (1.00, 4.20),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PackConfig {
    pub n_parallel: u32,
    /// Per-cell capacity in Ah.
    pub capacity_ah: f64,
    /// Cell impedance at 1 kHz, Ω.
    pub r_cell: f64,
    pub ocv_curve: OcvCurve,
}

impl Default for PackConfig {
    fn default() -> Self {
        Self {
            n_parallel: 50,
            capacity_ah: 4.5,
            r_cell: 0.004,
            ocv_curve: OcvCurve::default(),
        }
    }
}

impl PackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_parallel < 1 {
            return Err(Error::Config("pack.n_parallel must be >= 1".into()));
        }
        if !(self.capacity_ah > 0.0) {
            return Err(Error::Config("pack.capacity_ah must be > 0".into()));
        }
        if !(self.r_cell > 0.0) {
            return Err(Error::Config("pack.r_cell must be > 0".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        f64::from(self.n_parallel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackState {
    pub soc: f64,
    pub t: f64,
}

impl PackState {
    pub fn new(soc: f64, t: f64) -> Self {
        Self {
            soc: soc.clamp(0.0, 1.0),
            t,
        }
    }
}

/// A hard internal short in one cell: active from `t_trigger` until the
/// current path burns open `t_disconnect_after` seconds later.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShortSpec {
    /// Ω
    pub r_short: f64,
    pub t_trigger: f64,
    pub t_disconnect_after: f64,
}

impl Default for ShortSpec {
    fn default() -> Self {
        Self {
            r_short: 0.025,
            t_trigger: 10.0,
            t_disconnect_after: 0.4,
        }
    }
}

/// Slack for comparing simulation clocks built from integer step counts.
const TIME_EPS: f64 = 1e-9;

impl ShortSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_short > 0.0) {
            return Err(Error::Config("short.r_short must be > 0".into()));
        }
        if !(self.t_disconnect_after > 0.0) {
            return Err(Error::Config("short.t_disconnect_after must be > 0".into()));
        }
        if !self.t_trigger.is_finite() {
            return Err(Error::Config("short.t_trigger must be finite".into()));
        }
        Ok(())
    }

    pub fn t_disconnect(&self) -> f64 {
        self.t_trigger + self.t_disconnect_after
    }

    /// Half-open window `[t_trigger, t_trigger + t_disconnect_after)`.
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_trigger - TIME_EPS && t < self.t_disconnect() - TIME_EPS
    }
}

pub fn ocv(soc: f64, config: &PackConfig) -> Result<f64> {
    config.ocv_curve.voltage(soc)
}

/// Current through the short path of the faulty cell, zero outside the
/// active window.
pub fn short_current(soc: f64, short: &ShortSpec, config: &PackConfig, t: f64) -> Result<f64> {
    if !short.is_active(t) {
        return Ok(0.0);
    }
    let n = config.n();
    let v = ocv(soc, config)?;
    Ok(n * v / (config.r_cell + n * short.r_short))
}

pub fn terminal_voltage(soc: f64, i_short: f64, config: &PackConfig) -> Result<f64> {
    Ok(ocv(soc, config)? - i_short / config.n() * config.r_cell)
}

/// Terminal voltage with the drive-cycle load superposed on the short
/// current. `i_pack` is the pack-level load, shared equally by the cells.
pub fn loaded_terminal_voltage(
    soc: f64,
    i_pack: f64,
    i_short: f64,
    config: &PackConfig,
) -> Result<f64> {
    Ok(ocv(soc, config)? - (i_pack + i_short) / config.n() * config.r_cell)
}

pub fn coulomb_count_step(soc: f64, current: f64, dt: f64, capacity_ah: f64) -> f64 {
    debug_assert!(dt > 0.0);
    (soc - current * dt / (3600.0 * capacity_ah)).clamp(0.0, 1.0)
}

//! Thermal state of the shorted region and SEI decomposition.
//!
//! The short region exchanges heat with the rest of the cell through `r_c`;
//! the rest of the cell is held at a constant temperature. SEI decomposition
//! follows first-order Arrhenius kinetics, and every two moles of lithiated
//! C6 consumed release one mole of CO2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380_649e-23;
const AVOGADRO: f64 = 6.022_140_76e23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalParams {
    /// Heat capacity of the short region, J/K.
    pub c_p: f64,
    /// Thermal resistance between short region and cell, K/W.
    pub r_c: f64,
    /// SEI reaction enthalpy, J/g.
    pub h_sei: f64,
    /// Anode mass inside the short region, g.
    pub m_an_isc: f64,
    /// Frequency factor, 1/s.
    pub a_sei: f64,
    /// Activation energy per molecule, J.
    pub e_sei: f64,
    pub k_b: f64,
    pub x_sei_0: f64,
    /// g/mol
    pub m_c6: f64,
}

impl Default for ThermalParams {
    /// Representative set: Hatchard-style SEI kinetics (A = 1.667e15 1/s,
    /// Ea = 135.08 kJ/mol, h = 257 J/g, x0 = 0.15) with a short-region heat
    /// capacity and coupling chosen so the 25 mΩ short in a 50P pack vents
    /// about 1.5 s after it starts.
    fn default() -> Self {
        Self {
            c_p: 2.0,
            r_c: 10.0,
            h_sei: 257.0,
            m_an_isc: 4.0,
            a_sei: 1.667e15,
            e_sei: 1.3508e5 / AVOGADRO,
            k_b: BOLTZMANN,
            x_sei_0: 0.15,
            m_c6: 72.066,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("thermal.c_p", self.c_p),
            ("thermal.r_c", self.r_c),
            ("thermal.h_sei", self.h_sei),
            ("thermal.m_an_isc", self.m_an_isc),
            ("thermal.a_sei", self.a_sei),
            ("thermal.e_sei", self.e_sei),
            ("thermal.k_b", self.k_b),
            ("thermal.m_c6", self.m_c6),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.x_sei_0 > 0.0 && self.x_sei_0 <= 1.0) {
            return Err(Error::Config(format!(
                "thermal.x_sei_0 must lie in (0, 1], got {}",
                self.x_sei_0
            )));
        }
        Ok(())
    }

    /// Thermal time constant of the short region, s.
    pub fn tau(&self) -> f64 {
        self.c_p * self.r_c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IscState {
    /// K
    pub t_isc: f64,
    pub x_sei: f64,
    /// mol
    pub n_co2: f64,
    /// K, constant over a run.
    pub t_cell: f64,
}

impl IscState {
    /// Undisturbed region at the cell temperature.
    pub fn at_rest(t_cell: f64, params: &ThermalParams) -> Self {
        Self {
            t_isc: t_cell,
            x_sei: params.x_sei_0,
            n_co2: 0.0,
            t_cell,
        }
    }
}

/// dx_SEI/dt. Never positive.
pub fn sei_rate(x_sei: f64, t_isc: f64, params: &ThermalParams) -> f64 {
    if x_sei <= 0.0 || t_isc <= 0.0 {
        return 0.0;
    }
    -params.a_sei * x_sei * (-params.e_sei / (params.k_b * t_isc)).exp()
}

/// `(Q_ohmic, Q_sei)` in W.
pub fn heat_sources(
    i_short: f64,
    r_short: f64,
    sei_rate_val: f64,
    params: &ThermalParams,
) -> (f64, f64) {
    let q_ohmic = i_short * i_short * r_short;
    let q_sei = -params.m_an_isc * params.h_sei * sei_rate_val;
    (q_ohmic, q_sei)
}

pub fn co2_generated(x_sei: f64, params: &ThermalParams) -> Result<f64> {
    if x_sei > params.x_sei_0 || x_sei < 0.0 || x_sei.is_nan() {
        return Err(Error::Domain {
            what: "x_sei",
            value: x_sei,
            domain: "[0, x_sei_0]",
        });
    }
    Ok(params.m_an_isc * (params.x_sei_0 - x_sei) / (2.0 * params.m_c6))
}

fn derivatives(
    t_isc: f64,
    x_sei: f64,
    heat_ohmic: f64,
    t_cell: f64,
    params: &ThermalParams,
) -> (f64, f64) {
    let dx = sei_rate(x_sei.max(0.0), t_isc, params);
    let (_, q_sei) = heat_sources(0.0, 0.0, dx, params);
    let dt = (q_sei + heat_ohmic + (t_cell - t_isc) / params.r_c) / params.c_p;
    (dt, dx)
}

/// One classical RK4 step of the short-region temperature and SEI fraction.
/// The short current is held constant over the step.
/// Anything hotter than this is treated as a diverged integration, K.
pub const MAX_TEMPERATURE: f64 = 1.0e4;

pub fn step(
    state: &IscState,
    i_short: f64,
    r_short: f64,
    params: &ThermalParams,
    dt: f64,
) -> Result<IscState> {
    if !(dt > 0.0) {
        return Err(Error::Integration {
            t: f64::NAN,
            reason: format!("non-positive step {dt}"),
        });
    }
    let q_ohmic = i_short * i_short * r_short;
    let (t0, x0, tc) = (state.t_isc, state.x_sei, state.t_cell);

    let k1 = derivatives(t0, x0, q_ohmic, tc, params);
    let k2 = derivatives(
        t0 + 0.5 * dt * k1.0,
        x0 + 0.5 * dt * k1.1,
        q_ohmic,
        tc,
        params,
    );
    let k3 = derivatives(
        t0 + 0.5 * dt * k2.0,
        x0 + 0.5 * dt * k2.1,
        q_ohmic,
        tc,
        params,
    );
    let k4 = derivatives(t0 + dt * k3.0, x0 + dt * k3.1, q_ohmic, tc, params);

    let t_isc = t0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let x_sei = (x0 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1)).clamp(0.0, x0);

    if !(t_isc > 0.0 && t_isc < MAX_TEMPERATURE) || !x_sei.is_finite() {
        return Err(Error::Integration {
            t: f64::NAN,
            reason: format!(
                "short-region state left the finite range (T = {t_isc}, x = {x_sei}); reduce dt"
            ),
        });
    }

    Ok(IscState {
        t_isc,
        x_sei,
        n_co2: co2_generated(x_sei, params)?,
        t_cell: tc,
    })
}

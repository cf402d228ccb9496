//! CO2 transport along the pack vent duct.
//!
//! Finite-volume discretization of
//!
//! ```text
//! dc/dt = -d/dx(-D dc/dx + c v) + r
//! ```
//!
//! on `n_cells_grid` uniform cells over `[0, length]`. Advection is
//! first-order upwind (the vent velocity is never negative), diffusion is
//! central, the inlet at `x = 0` is a wall and the outlet at `x = length` is
//! held at the ambient concentration. Concentrations are carried in ppm.
//!
//! After the cell vents, a slug of gas of width `v0 * t0` travels down the
//! duct at `v0`; for the same `t0` seconds the vented inventory is injected
//! through the inlet wall into the first cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::GAS_CONSTANT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuctConfig {
    /// m
    pub length: f64,
    pub n_cells_grid: usize,
    /// m²/s
    pub d_coeff: f64,
    /// Vent channel height, m.
    pub h_ch: f64,
    /// m²
    pub a_rupture: f64,
    /// ppm
    pub c_ambient: f64,
    /// Venting duration t₀, s.
    pub vent_duration: f64,
    /// Mean vent-gas temperature, K.
    pub t_gas: f64,
    /// Pa
    pub p_atm: f64,
    /// Sensor position; defaults to the last cell center before the outlet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_x: Option<f64>,
}

impl Default for DuctConfig {
    fn default() -> Self {
        Self {
            length: 0.5,
            n_cells_grid: 128,
            d_coeff: 14.2e-6,
            h_ch: 0.01,
            a_rupture: 5.25e-5,
            c_ambient: 400.0,
            vent_duration: 1.5,
            t_gas: 400.0,
            p_atm: 101_325.0,
            sensor_x: None,
        }
    }
}

impl DuctConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("duct.length", self.length),
            ("duct.d_coeff", self.d_coeff),
            ("duct.h_ch", self.h_ch),
            ("duct.a_rupture", self.a_rupture),
            ("duct.vent_duration", self.vent_duration),
            ("duct.t_gas", self.t_gas),
            ("duct.p_atm", self.p_atm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.n_cells_grid < 16 {
            return Err(Error::Config(format!(
                "duct.n_cells_grid must be >= 16, got {}",
                self.n_cells_grid
            )));
        }
        if !(self.c_ambient >= 0.0) {
            return Err(Error::Config("duct.c_ambient must be >= 0".into()));
        }
        if let Some(x) = self.sensor_x {
            if !(0.0..=self.length).contains(&x) {
                return Err(Error::Config(format!(
                    "duct.sensor_x = {x} is outside the duct"
                )));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells_grid as f64
    }

    pub fn sensor_position(&self) -> f64 {
        self.sensor_x.unwrap_or(self.length - 0.5 * self.dx())
    }

    /// Gas molar density at vent conditions, mol/m³.
    pub fn molar_density(&self) -> f64 {
        self.p_atm / (GAS_CONSTANT * self.t_gas)
    }

    /// Explicit step that keeps the scheme positive: half of the smaller of
    /// the advective and diffusive limits, and never above [`stability_bound`].
    pub fn stable_dt(&self, v_max: f64) -> f64 {
        let dx = self.dx();
        let diff = dx * dx / (2.0 * self.d_coeff);
        let adv = if v_max > 0.0 {
            dx / v_max
        } else {
            f64::INFINITY
        };
        (0.5 * adv.min(diff)).min(stability_bound(self, v_max))
    }
}

/// Largest `dt` for which every cell update is a convex combination. The
/// outlet cell sees its boundary value at half a cell, hence the factor 3.
pub fn stability_bound(duct: &DuctConfig, v_max: f64) -> f64 {
    let dx = duct.dx();
    1.0 / (v_max.max(0.0) / dx + 3.0 * duct.d_coeff / (dx * dx))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VentEvent {
    pub t_start: f64,
    /// Venting duration, s.
    pub t0: f64,
    /// m/s
    pub v0: f64,
    /// Source rate, ppm/s.
    pub r_src: f64,
    /// mol
    pub n_co2_total: f64,
    /// K
    pub t_gas: f64,
    /// Pa
    pub p_atm: f64,
}

impl VentEvent {
    /// Vent event for `n_co2` mol released at `t_start`.
    pub fn from_rupture(t_start: f64, n_co2: f64, duct: &DuctConfig) -> Self {
        let mut ev = Self {
            t_start,
            t0: duct.vent_duration,
            v0: initial_vent_velocity(
                n_co2,
                duct.t_gas,
                duct.p_atm,
                duct.a_rupture,
                duct.vent_duration,
            ),
            r_src: 0.0,
            n_co2_total: n_co2,
            t_gas: duct.t_gas,
            p_atm: duct.p_atm,
        };
        ev.r_src = source_rate(&ev, duct);
        ev
    }

    pub fn is_venting(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_start + self.t0
    }

    /// Length of `[a, b]` that falls inside the venting window.
    fn venting_overlap(&self, a: f64, b: f64) -> f64 {
        (b.min(self.t_start + self.t0) - a.max(self.t_start)).max(0.0)
    }
}

/// v₀ = n R T_gas / (P A_rupture t₀)
pub fn initial_vent_velocity(n_co2: f64, t_gas: f64, p_atm: f64, a_rupture: f64, t0: f64) -> f64 {
    n_co2 * GAS_CONSTANT * t_gas / (p_atm * a_rupture * t0)
}

/// Vent-gas velocity: `v0` inside the slug `(v0 (t - ts - t0), v0 (t - ts))`.
pub fn vent_velocity_at(x: f64, t: f64, ev: &VentEvent) -> f64 {
    let since = t - ev.t_start;
    if since < 0.0 {
        return 0.0;
    }
    if x > ev.v0 * (since - ev.t0) && x < ev.v0 * since {
        ev.v0
    } else {
        0.0
    }
}

/// r = n / (A_rupture h_ch t₀), converted to ppm/s at vent conditions.
/// The caller gates it on [`VentEvent::is_venting`].
pub fn source_rate(ev: &VentEvent, duct: &DuctConfig) -> f64 {
    let molar = ev.n_co2_total / (duct.a_rupture * duct.h_ch * ev.t0);
    molar * GAS_CONSTANT * ev.t_gas / ev.p_atm * 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutletBoundary {
    /// Fixed concentration at the outlet face (the duct default).
    Dirichlet,
    /// Wall at the outlet; the duct is sealed. Test configuration.
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasField {
    /// ppm on cell centers.
    pub c: Vec<f64>,
    pub t: f64,
    pub dx: f64,
    /// Pinned outlet value, ppm.
    pub outlet_value: f64,
}

/// Per-step inventory changes in ppm·m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepBudget {
    pub injected: f64,
    pub outlet_outflow: f64,
}

impl GasField {
    pub fn ambient(duct: &DuctConfig, t: f64) -> Self {
        Self {
            c: vec![duct.c_ambient; duct.n_cells_grid],
            t,
            dx: duct.dx(),
            outlet_value: duct.c_ambient,
        }
    }

    pub fn length(&self) -> f64 {
        self.dx * self.c.len() as f64
    }

    /// ∑ c Δx, ppm·m.
    pub fn inventory(&self) -> f64 {
        self.c.iter().sum::<f64>() * self.dx
    }

    pub fn min(&self) -> f64 {
        self.c.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.c.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }
}

/// One explicit step with the outlet held at ambient.
pub fn transport_step(
    field: &GasField,
    ev: Option<&VentEvent>,
    duct: &DuctConfig,
    dt: f64,
) -> Result<GasField> {
    transport_step_with(field, ev, duct, dt, OutletBoundary::Dirichlet).map(|(f, _)| f)
}

pub fn transport_step_with(
    field: &GasField,
    ev: Option<&VentEvent>,
    duct: &DuctConfig,
    dt: f64,
    outlet: OutletBoundary,
) -> Result<(GasField, StepBudget)> {
    let v_max = ev.map_or(0.0, |e| e.v0);
    let bound = stability_bound(duct, v_max);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, bound });
    }

    let n = field.c.len();
    let dx = field.dx;
    let d = duct.d_coeff;
    let c = &field.c;
    let t_mid = field.t + 0.5 * dt;
    let face_v = |j: usize| ev.map_or(0.0, |e| vent_velocity_at(j as f64 * dx, t_mid, e));

    // flux[j] is the flux through face j at x = j dx, positive downstream.
    let mut flux = vec![0.0; n + 1];
    for j in 1..n {
        flux[j] = face_v(j) * c[j - 1] - d * (c[j] - c[j - 1]) / dx;
    }
    flux[n] = match outlet {
        OutletBoundary::Dirichlet => {
            face_v(n) * c[n - 1] - d * (field.outlet_value - c[n - 1]) / (0.5 * dx)
        }
        OutletBoundary::Closed => 0.0,
    };

    let injected = ev.map_or(0.0, |e| {
        e.r_src * duct.h_ch * e.venting_overlap(field.t, field.t + dt)
    });

    let mut next: Vec<f64> = (0..n)
        .map(|i| c[i] - dt / dx * (flux[i + 1] - flux[i]))
        .collect();
    next[0] += injected / dx;

    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            t: field.t,
            reason: "gas concentration became non-finite".into(),
        });
    }

    Ok((
        GasField {
            c: next,
            t: field.t + dt,
            dx,
            outlet_value: field.outlet_value,
        },
        StepBudget {
            injected,
            outlet_outflow: flux[n] * dt,
        },
    ))
}

/// Advance `field` to `t_end` with steps no larger than the stable step.
pub fn advance_to(
    field: GasField,
    ev: Option<&VentEvent>,
    duct: &DuctConfig,
    t_end: f64,
) -> Result<GasField> {
    let span = t_end - field.t;
    if span <= 0.0 {
        return Ok(field);
    }
    let dt_max = duct.stable_dt(ev.map_or(0.0, |e| e.v0));
    let steps = (span / dt_max).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let t0 = field.t;
    let mut f = field;
    for k in 0..steps {
        f = transport_step(&f, ev, duct, dt)?;
        f.t = t0 + (k + 1) as f64 * dt;
    }
    f.t = t_end;
    Ok(f)
}

/// Concentration at `sensor_x`, linear between cell centers. Past the last
/// center the profile runs to the pinned outlet value at the outlet face;
/// before the first center it is flat (inlet wall).
pub fn outlet_concentration(field: &GasField, sensor_x: f64) -> f64 {
    let n = field.c.len();
    let first = field.center(0);
    let last = field.center(n - 1);
    if sensor_x <= first {
        return field.c[0];
    }
    if sensor_x >= last {
        let w = ((sensor_x - last) / (0.5 * field.dx)).min(1.0);
        return field.c[n - 1] + w * (field.outlet_value - field.c[n - 1]);
    }
    let s = sensor_x / field.dx - 0.5;
    let i = (s.floor() as usize).min(n - 2);
    let w = s - i as f64;
    field.c[i] + w * (field.c[i + 1] - field.c[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn event(t_start: f64, v0: f64, t0: f64, r_src: f64) -> VentEvent {
        VentEvent {
            t_start,
            t0,
            v0,
            r_src,
            n_co2_total: 0.0,
            t_gas: 400.0,
            p_atm: 101_325.0,
        }
    }

    #[test]
    fn vent_velocity_hand_value() {
        let v = initial_vent_velocity(7.5e-3, 400.0, 101_325.0, 1e-4, 1.5);
        assert_relative_eq!(
            v,
            8.314 * 400.0 * 7.5e-3 / (101_325.0 * 1e-4 * 1.5),
            max_relative = 1e-15
        );
        assert!((v - 1.64).abs() < 0.005, "{v}");
        let v2 = initial_vent_velocity(7.5e-3, 400.0, 101_325.0, 1e-4, 3.0);
        assert_relative_eq!(v2, v / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn slug_cases() {
        let ev = event(2.0, 0.12, 1.5, 0.0);
        assert_eq!(vent_velocity_at(0.01, 1.9, &ev), 0.0);
        assert_eq!(vent_velocity_at(0.12 * 1.5 / 4.0, 2.0 + 0.75, &ev), 0.12);
        // ahead of the front
        assert_eq!(vent_velocity_at(0.2, 3.0, &ev), 0.0);
        // behind the tail
        assert_eq!(vent_velocity_at(0.05, 4.0, &ev), 0.0);
        assert_eq!(vent_velocity_at(0.2, 4.0, &ev), 0.12);
    }

    #[test]
    fn source_rate_scaling() {
        let duct = DuctConfig::default();
        let ev = VentEvent::from_rupture(1.0, 3e-4, &duct);
        let wide = DuctConfig {
            h_ch: 2.0 * duct.h_ch,
            ..duct
        };
        assert_relative_eq!(
            source_rate(&ev, &wide),
            ev.r_src / 2.0,
            max_relative = 1e-15
        );
        assert!(!ev.is_venting(0.99));
        assert!(ev.is_venting(1.0));
        assert!(!ev.is_venting(2.5));
    }

    #[test]
    fn injected_inventory_matches_vented_moles() {
        // Time-integrate the injection step by step, convert back to moles
        // through the rupture cross-section, compare to the vented amount.
        let duct = DuctConfig::default();
        let n_vent = 2.9e-4;
        let ev = VentEvent::from_rupture(0.37, n_vent, &duct);
        let mut f = GasField::ambient(&duct, 0.0);
        let dt = duct.stable_dt(ev.v0);
        let mut injected = 0.0;
        while f.t < 3.0 {
            let (next, b) =
                transport_step_with(&f, Some(&ev), &duct, dt, OutletBoundary::Dirichlet).unwrap();
            injected += b.injected;
            f = next;
        }
        let moles = injected * 1e-6 * duct.molar_density() * duct.a_rupture;
        assert_relative_eq!(moles, n_vent, max_relative = 1e-6);
    }

    #[test]
    fn uniform_ambient_is_steady() {
        let duct = DuctConfig::default();
        let f = GasField::ambient(&duct, 0.0);
        let next = advance_to(f.clone(), None, &duct, 10.0).unwrap();
        for c in &next.c {
            assert_relative_eq!(*c, 400.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let duct = DuctConfig::default();
        let ev = event(0.0, 0.12, 1.5, 0.0);
        let f = GasField::ambient(&duct, 0.1);
        let bound = stability_bound(&duct, 0.12);
        let err = transport_step(&f, Some(&ev), &duct, bound * 1.01).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
        assert!(transport_step(&f, Some(&ev), &duct, bound).is_ok());
        assert!(transport_step(&f, None, &duct, 0.0).is_err());
    }

    #[test]
    fn sensor_interpolation() {
        let duct = DuctConfig::default();
        let mut f = GasField::ambient(&duct, 0.0);
        assert_eq!(outlet_concentration(&f, duct.sensor_position()), 400.0);
        assert_eq!(outlet_concentration(&f, 0.0), 400.0);
        assert_eq!(outlet_concentration(&f, 0.3), 400.0);
        let n = f.c.len();
        f.c[n - 1] = 1400.0;
        assert_eq!(outlet_concentration(&f, duct.sensor_position()), 1400.0);
        assert_relative_eq!(outlet_concentration(&f, duct.length), 400.0);
        f.c[n - 2] = 600.0;
        let mid = 0.5 * (f.center(n - 2) + f.center(n - 1));
        assert_relative_eq!(outlet_concentration(&f, mid), 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_domain_conserves_inventory() {
        let duct = DuctConfig::default();
        let mut f = GasField::ambient(&duct, 0.0);
        for (i, c) in f.c.iter_mut().enumerate() {
            *c += 5000.0 * (-((i as f64 - 40.0) / 6.0).powi(2)).exp();
        }
        // a slug already in flight, no source
        let ev = event(-0.5, 0.12, 1.5, 0.0);
        let dt = duct.stable_dt(ev.v0);
        for _ in 0..500 {
            let before = f.inventory();
            let (next, b) =
                transport_step_with(&f, Some(&ev), &duct, dt, OutletBoundary::Closed).unwrap();
            assert_eq!(b.outlet_outflow, 0.0);
            assert!(((next.inventory() - before) / before).abs() < 1e-9);
            assert!(next.min() >= 0.0);
            f = next;
        }
    }

    #[test]
    fn open_domain_budget_balances() {
        let duct = DuctConfig::default();
        let ev = VentEvent::from_rupture(0.05, 2.9e-4, &duct);
        let mut f = GasField::ambient(&duct, 0.0);
        let dt = duct.stable_dt(ev.v0);
        while f.t < 7.0 {
            let before = f.inventory();
            let (next, b) =
                transport_step_with(&f, Some(&ev), &duct, dt, OutletBoundary::Dirichlet).unwrap();
            let lhs = next.inventory() - before;
            let rhs = b.injected - b.outlet_outflow;
            assert!(
                (lhs - rhs).abs() <= 1e-6 * before.max(lhs.abs()),
                "{lhs} vs {rhs}"
            );
            assert!(next.min() >= 0.0);
            f = next;
        }
    }

    proptest! {
        #[test]
        fn positivity_under_stable_steps(
            seed_vals in proptest::collection::vec(0.0f64..1e5, 16..64),
            v0 in 0.0f64..2.0,
            frac in 0.05f64..1.0,
        ) {
            let duct = DuctConfig { n_cells_grid: seed_vals.len(), ..DuctConfig::default() };
            let ev = event(-0.1, v0, 1.5, 1e5);
            let mut f = GasField { c: seed_vals, t: 0.0, dx: duct.dx(), outlet_value: 400.0 };
            let dt = stability_bound(&duct, v0) * frac;
            for _ in 0..50 {
                f = transport_step(&f, Some(&ev), &duct, dt).unwrap();
                prop_assert!(f.min() >= 0.0);
            }
        }
    }
}

//! Cell expansion force seen by the pack end plates.
//!
//! Nominal force is separable in temperature and SOC on top of the preload.
//! Gas trapped in the faulty cell pushes the casing out against the pack's
//! equivalent spring; eliminating the deflection from the ideal-gas balance
//! gives `F_gas = sqrt(K_eq * n * R * T_cell)`. The casing vents once the
//! internal pressure reaches `p_vent`, after which the gas force is gone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// J/(mol K)
pub const GAS_CONSTANT: f64 = 8.314;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceParams {
    /// N/°C
    pub alpha: f64,
    /// °C
    pub t0_ref: f64,
    /// N
    pub f0: f64,
    /// Ascending coefficients of the 8th-order SOC polynomial, N.
    pub soc_poly: [f64; 9],
    /// N/m
    pub k_eq: f64,
    /// m²
    pub a_cell: f64,
    /// Pa
    pub p_vent: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self {
            alpha: 2.06,
            t0_ref: 25.0,
            f0: 520.0,
            // Least-squares fit of a 4.5 Ah NMC pouch swelling curve with the
            // mid-SOC plateau; 0 N at empty, 156 N at full.
            soc_poly: [
                0.0, 484.132, -1850.76, 5436.46, -13537.4, 23364.0, -22580.9, 10759.5, -1919.05,
            ],
            k_eq: 1.66e7,
            a_cell: 1.0e-3,
            p_vent: 3.448e6,
        }
    }
}

impl ForceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mechanics.alpha", self.alpha),
            ("mechanics.k_eq", self.k_eq),
            ("mechanics.a_cell", self.a_cell),
            ("mechanics.p_vent", self.p_vent),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self
            .soc_poly
            .iter()
            .chain([&self.f0, &self.t0_ref])
            .any(|c| !c.is_finite())
        {
            return Err(Error::Config(
                "mechanics coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    /// f₁(T) = α (T − T₀)
    pub fn thermal_term(&self, temp_c: f64) -> f64 {
        self.alpha * (temp_c - self.t0_ref)
    }

    /// f₂(SOC), Horner evaluation.
    pub fn soc_term(&self, soc: f64) -> f64 {
        self.soc_poly.iter().rev().fold(0.0, |acc, c| acc * soc + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MechState {
    pub f_gas: f64,
    pub ruptured: bool,
    pub rupture_time: Option<f64>,
}

impl MechState {
    /// Recompute the gas force for the current gas inventory and latch a
    /// rupture if the resulting pressure reaches the vent threshold.
    pub fn advance(self, n_co2: f64, t_cell: f64, t: f64, params: &ForceParams) -> Self {
        if self.ruptured {
            return self;
        }
        let with_force = Self {
            f_gas: gas_force(n_co2, t_cell, params),
            ..self
        };
        update_rupture(
            with_force,
            internal_pressure(n_co2, t_cell, params),
            t,
            params,
        )
    }
}

/// Healthy-cell force: α (T − T₀) + f₂(SOC) + F₀.
pub fn nominal_force(temp_c: f64, soc: f64, params: &ForceParams) -> f64 {
    params.thermal_term(temp_c) + params.soc_term(soc) + params.f0
}

pub fn gas_force(n_co2: f64, t_cell: f64, params: &ForceParams) -> f64 {
    if n_co2 <= 0.0 {
        return 0.0;
    }
    (params.k_eq * n_co2 * GAS_CONSTANT * t_cell).sqrt()
}

pub fn internal_pressure(n_co2: f64, t_cell: f64, params: &ForceParams) -> f64 {
    gas_force(n_co2, t_cell, params) / params.a_cell
}

/// Latch the vent event. The threshold is inclusive.
pub fn update_rupture(state: MechState, pressure: f64, t: f64, params: &ForceParams) -> MechState {
    if state.ruptured {
        return MechState {
            f_gas: 0.0,
            ..state
        };
    }
    if pressure >= params.p_vent {
        return MechState {
            f_gas: 0.0,
            ruptured: true,
            rupture_time: Some(t),
        };
    }
    state
}

/// Gas inventory at which the casing vents: solve `sqrt(K n R T) = p A`.
pub fn vent_inventory(t_cell: f64, params: &ForceParams) -> f64 {
    let f = params.p_vent * params.a_cell;
    f * f / (params.k_eq * GAS_CONSTANT * t_cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn thermal_term_slope() {
        let p = ForceParams::default();
        let base = nominal_force(25.0, 0.5, &p);
        assert_relative_eq!(
            nominal_force(35.0, 0.5, &p) - base,
            20.6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn reference_temperature_has_no_thermal_term() {
        let p = ForceParams::default();
        for soc in [0.0, 0.4, 1.0] {
            assert_relative_eq!(
                nominal_force(p.t0_ref, soc, &p),
                p.f0 + p.soc_term(soc),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn soc_polynomial_full_range_is_156_newton() {
        let p = ForceParams::default();
        let span = p.soc_term(1.0) - p.soc_term(0.0);
        assert!((span - 156.0).abs() < 1.0, "{span}");
        // and close to 30 % of the preload
        assert!((span / p.f0 - 0.30).abs() < 0.01);
    }

    #[test]
    fn soc_polynomial_is_monotone() {
        let p = ForceParams::default();
        let mut prev = p.soc_term(0.0);
        for k in 1..=1000 {
            let v = p.soc_term(k as f64 * 1e-3);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn gas_force_values() {
        let p = ForceParams {
            k_eq: 2e6,
            ..ForceParams::default()
        };
        assert_eq!(gas_force(0.0, 298.15, &p), 0.0);
        let f = gas_force(5e-3, 298.15, &p);
        assert_relative_eq!(
            f,
            (2e6 * 5e-3 * 8.314 * 298.15_f64).sqrt(),
            max_relative = 1e-15
        );
        assert!((f - 4978.0).abs() < 1.0, "{f}");
        assert_relative_eq!(gas_force(2e-2, 298.15, &p), 2.0 * f, max_relative = 1e-12);
    }

    #[test]
    fn pressure_at_vent_force() {
        let p = ForceParams::default();
        assert_eq!(internal_pressure(0.0, 298.15, &p), 0.0);
        let n = vent_inventory(298.15, &p);
        assert_relative_eq!(gas_force(n, 298.15, &p), 3448.0, max_relative = 1e-12);
        assert_relative_eq!(
            internal_pressure(n, 298.15, &p),
            3.448e6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rupture_latches_inclusive() {
        let p = ForceParams::default();
        let s = MechState {
            f_gas: 100.0,
            ..MechState::default()
        };
        assert_eq!(update_rupture(s, p.p_vent * 0.999, 1.0, &p), s);

        let r = update_rupture(s, p.p_vent, 2.0, &p);
        assert!(r.ruptured);
        assert_eq!(r.rupture_time, Some(2.0));
        assert_eq!(r.f_gas, 0.0);

        // irreversible, and the time is not overwritten
        let again = update_rupture(r, 0.0, 3.0, &p);
        assert!(again.ruptured);
        assert_eq!(again.rupture_time, Some(2.0));
        let again = r.advance(1.0, 298.15, 4.0, &p);
        assert_eq!(again.f_gas, 0.0);
        assert_eq!(again.rupture_time, Some(2.0));
    }

    #[test]
    fn advance_drops_force_by_pre_rupture_value() {
        let p = ForceParams::default();
        let n_vent = vent_inventory(298.15, &p);
        let before = MechState::default().advance(n_vent * 0.99, 298.15, 1.0, &p);
        assert!(!before.ruptured && before.f_gas > 3000.0);
        let after = before.advance(n_vent * 1.001, 298.15, 1.001, &p);
        assert!(after.ruptured);
        assert_eq!(after.f_gas, 0.0);
    }

    proptest! {
        #[test]
        fn pressure_times_area_is_gas_force(
            n in 0.0f64..1e-2,
            t in 250.0f64..400.0,
            k in 1e5f64..1e8,
            a in 1e-4f64..1e-1,
        ) {
            let p = ForceParams { k_eq: k, a_cell: a, ..ForceParams::default() };
            let f = gas_force(n, t, &p);
            prop_assert!((internal_pressure(n, t, &p) * a - f).abs() <= 1e-12 * f.max(1.0));
        }

        #[test]
        fn gas_force_monotone(n in 0.0f64..1e-2, dn in 1e-9f64..1e-3) {
            let p = ForceParams::default();
            prop_assert!(gas_force(n + dn, 298.15, &p) > gas_force(n, 298.15, &p));
        }
    }
}

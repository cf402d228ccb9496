use serde::{Deserialize, Serialize};

use crate::detection::{Decision, Detector, Transition};
use crate::error::{Error, Result};
use crate::gas_transport::{advance_to, outlet_concentration, GasField, VentEvent};
use crate::isc_dynamics::{self, IscState};
use crate::mechanics::{nominal_force, MechState};
use crate::pack_model::{coulomb_count_step, loaded_terminal_voltage, short_current};
use crate::sensing::{NoiseSource, TruthFrame};

use super::config::Scenario;
use super::drive_cycle::{load_drive_cycle, DriveCycle};

/// One 10 Hz frame of the run. Units: s, V, A, °C, K (`t_isc`), N, ppm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub v_true: f64,
    pub v_healthy: f64,
    pub v_meas: f64,
    pub i_true: f64,
    pub i_meas: f64,
    pub i_short: f64,
    pub temp_true: f64,
    pub temp_meas: f64,
    pub t_isc: f64,
    pub f_true: f64,
    pub f_meas: f64,
    pub f_gas: f64,
    pub c_outlet: f64,
    pub g_meas: f64,
    pub theta_hat: f64,
    pub g_fault: f64,
    pub decision: Decision,
    pub soc: f64,
    pub soc_hat: f64,
}

pub const COLUMNS: [&str; 20] = [
    "t",
    "v_true",
    "v_healthy",
    "v_meas",
    "i_true",
    "i_meas",
    "i_short",
    "temp_true",
    "temp_meas",
    "t_isc",
    "f_true",
    "f_meas",
    "f_gas",
    "c_outlet",
    "g_meas",
    "theta_hat",
    "g_fault",
    "decision",
    "soc",
    "soc_hat",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub healthy: bool,
    pub frames: usize,
    pub force_alarm_time: Option<f64>,
    pub gas_alarm_time: Option<f64>,
    pub alert_time: Option<f64>,
    pub final_decision: Option<Decision>,
    pub rupture_time: Option<f64>,
    /// mol
    pub vented_co2: Option<f64>,
    /// m/s
    pub vent_velocity: Option<f64>,
    /// N
    pub peak_theta_hat: f64,
    /// ppm
    pub peak_outlet_ppm: f64,
    /// Lowest concentration anywhere in the duct, ppm.
    pub min_duct_ppm: f64,
    /// Largest |v_true − v_healthy| while the short conducts, V.
    pub max_fault_voltage_deviation: f64,
    pub transitions: Vec<Transition>,
}

impl Summary {
    /// True when the detector never left `Normal`.
    pub fn no_alarms(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Duct profile at one frame, for `--profile-dump`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSnapshot {
    pub t: f64,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub summary: Summary,
    pub profiles: Vec<ProfileSnapshot>,
    pub cell_centers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub keep_profiles: bool,
}

pub fn load_cycle(scenario: &Scenario) -> Result<DriveCycle> {
    Ok(match scenario.drive_cycle_path() {
        Some(p) => load_drive_cycle(&p)?.scaled(scenario.drive_cycle_scale),
        None => DriveCycle::rest(),
    })
}

pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, opts: RunOptions) -> Result<RunOutput> {
    scenario.validate()?;
    let cycle = load_cycle(scenario)?;
    simulate(scenario, &cycle, opts)
}

fn frame_count(t_end: f64, frame_dt: f64) -> usize {
    ((t_end / frame_dt - 1e-9).ceil() as usize).max(1)
}

/// The coupled loop on a pre-loaded drive cycle.
pub fn simulate(sc: &Scenario, cycle: &DriveCycle, opts: RunOptions) -> Result<RunOutput> {
    let num = sc.numerics;
    let pack = &sc.pack;
    let n = pack.n();
    let t_cell = sc.t_cell();
    let temp_c = sc.t_ambient_c;
    let frames = frame_count(sc.t_end, num.frame_dt);
    let sensor_x = sc.duct.sensor_position();
    // Dividing by the rate keeps frame times on the decimal grid.
    let rate = 1.0 / num.frame_dt;
    let frame_time = |k: usize| k as f64 / rate;

    let mut noise = NoiseSource::new(sc.noise);
    let mut detector = Detector::new(
        pack,
        &sc.mechanics,
        &sc.thresholds,
        &sc.detection,
        sc.initial_soc,
        num.frame_dt,
    );

    let mut soc = sc.initial_soc;
    let mut isc = IscState::at_rest(t_cell, &sc.thermal);
    let mut mech = MechState::default();
    let mut gas = GasField::ambient(&sc.duct, 0.0);
    let mut vent: Option<VentEvent> = None;

    let mut rows = Vec::with_capacity(frames);
    let mut profiles = Vec::new();
    let mut peak_outlet = f64::NEG_INFINITY;
    let mut min_duct = gas.min();
    let mut max_dev: f64 = 0.0;

    for k in 0..frames {
        let t = frame_time(k);
        let i_pack = cycle.current_at(t);
        let i_short = match &sc.short {
            Some(s) => short_current(soc, s, pack, t)?,
            None => 0.0,
        };
        let v_true = loaded_terminal_voltage(soc, i_pack, i_short, pack)?;
        let v_healthy = loaded_terminal_voltage(soc, i_pack, 0.0, pack)?;
        if i_short != 0.0 {
            max_dev = max_dev.max((v_true - v_healthy).abs());
        }
        let f_true = nominal_force(temp_c, soc, &sc.mechanics) + mech.f_gas;
        let c_outlet = outlet_concentration(&gas, sensor_x);
        peak_outlet = peak_outlet.max(c_outlet);

        let truth = TruthFrame {
            t,
            v: v_true,
            i: i_pack,
            temp: temp_c,
            f: f_true,
            g: c_outlet,
        };
        let meas = noise.sample(&truth, k as u64);
        let det = detector.process(&meas)?;

        rows.push(Row {
            t,
            v_true,
            v_healthy,
            v_meas: meas.v_meas,
            i_true: i_pack,
            i_meas: meas.i_meas,
            i_short,
            temp_true: temp_c,
            temp_meas: meas.t_meas,
            t_isc: isc.t_isc,
            f_true,
            f_meas: meas.f_meas,
            f_gas: mech.f_gas,
            c_outlet,
            g_meas: meas.g_meas,
            theta_hat: det.theta_hat,
            g_fault: det.g_fault,
            decision: det.decision,
            soc,
            soc_hat: detector.observer().soc_hat,
        });
        if opts.keep_profiles {
            profiles.push(ProfileSnapshot {
                t,
                c: gas.c.clone(),
            });
        }

        if k + 1 == frames {
            break;
        }

        // Physics from t to the next frame.
        let t_next = frame_time(k + 1);
        let mut short_charge = 0.0;
        if let Some(short) = &sc.short {
            // The fault region only exists from the trigger on.
            let mut tau = t.max(short.t_trigger);
            while t_next - tau > 1e-12 {
                let hot = short.is_active(tau) || isc.t_isc - t_cell > num.hot_margin;
                let h = if hot { num.dt_fault } else { num.dt_thermal }.min(t_next - tau);
                let i_sc = short_current(soc, short, pack, tau)?;
                short_charge += i_sc * h;
                isc = isc_dynamics::step(&isc, i_sc, short.r_short, &sc.thermal, h)
                    .map_err(|e| at_time(e, tau))?;
                tau += h;
                let before = mech.ruptured;
                mech = mech.advance(isc.n_co2, t_cell, tau, &sc.mechanics);
                if mech.ruptured && !before {
                    vent = Some(VentEvent::from_rupture(tau, isc.n_co2, &sc.duct));
                }
            }
        }

        // True SOC: trapezoid on the drive current, exact on the short.
        let i_mean = 0.5 * (i_pack + cycle.current_at(t_next));
        soc = coulomb_count_step(
            soc,
            (i_mean + short_charge / num.frame_dt) / n,
            num.frame_dt,
            pack.capacity_ah,
        );

        gas = advance_to(gas, vent.as_ref(), &sc.duct, t_next).map_err(|e| at_time(e, t))?;
        min_duct = min_duct.min(gas.min());
    }

    let ds = detector.summary();
    let summary = Summary {
        seed: sc.noise.seed,
        healthy: sc.short.is_none(),
        frames: rows.len(),
        force_alarm_time: ds.first_force_alarm,
        gas_alarm_time: ds.first_gas_alarm,
        alert_time: ds.alert_time,
        final_decision: ds.final_decision,
        rupture_time: mech.rupture_time,
        vented_co2: vent.map(|v| v.n_co2_total),
        vent_velocity: vent.map(|v| v.v0),
        peak_theta_hat: ds.peak_theta_hat,
        peak_outlet_ppm: peak_outlet,
        min_duct_ppm: min_duct,
        max_fault_voltage_deviation: max_dev,
        transitions: detector.transitions().to_vec(),
    };
    let cell_centers = (0..gas.c.len()).map(|i| gas.center(i)).collect();
    Ok(RunOutput {
        series: TimeSeries { rows },
        summary,
        profiles,
        cell_centers,
    })
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::Integration { t: inner, reason } if inner.is_nan() => {
            Error::Integration { t, reason }
        }
        other => other,
    }
}

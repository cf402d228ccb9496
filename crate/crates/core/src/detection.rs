//! Force-residual observer, gas fault value and the two-channel fusion.
//!
//! The observer tracks the unmodelled force
//!
//! ```text
//! F̂ = f₁(T̄) + f₂(SÔC) + F₀ + Θ̂,    dΘ̂/dt = L (F̄ − F̂)
//! ```
//!
//! Between frames the measured residual is held, so the update uses the
//! exact discretization `Θ̂ += (1 − e^(−L dt)) (F̄ − F̂)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{nominal_force, ForceParams};
use crate::pack_model::{coulomb_count_step, PackConfig};
use crate::sensing::SensorFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    /// Estimated fault force Θ̂, N.
    pub theta_hat: f64,
    pub soc_hat: f64,
    /// Observer gain L, 1/s.
    pub l_gain: f64,
}

impl ObserverState {
    pub fn new(soc_hat: f64, l_gain: f64) -> Self {
        Self {
            theta_hat: 0.0,
            soc_hat: soc_hat.clamp(0.0, 1.0),
            l_gain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// N
    pub eps_f: f64,
    /// ppm
    pub eps_g: f64,
    /// ppm
    pub g_normal: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_f: 100.0,
            eps_g: 2000.0,
            g_normal: 400.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_f > 0.0) || !(self.eps_g > 0.0) {
            return Err(Error::Config(
                "thresholds.eps_f and thresholds.eps_g must be > 0".into(),
            ));
        }
        if !self.g_normal.is_finite() {
            return Err(Error::Config("thresholds.g_normal must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionParams {
    /// 1/s
    pub l_gain: f64,
    /// Both channels must alarm within this many seconds to confirm, s.
    pub window: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            l_gain: 0.2,
            window: 30.0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_gain > 0.0 && self.l_gain.is_finite()) {
            return Err(Error::Config(
                "detection.l_gain must be finite and > 0".into(),
            ));
        }
        if !(self.window >= 0.0) {
            return Err(Error::Config("detection.window must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Normal,
    Warning,
    IscAlert,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Normal => "Normal",
            Decision::Warning => "Warning",
            Decision::IscAlert => "IscAlert",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "Normal" => Ok(Decision::Normal),
            "Warning" => Ok(Decision::Warning),
            "IscAlert" => Ok(Decision::IscAlert),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

/// Model force for the current estimate, F̂.
pub fn estimated_force(obs: &ObserverState, temp_c: f64, force_params: &ForceParams) -> f64 {
    nominal_force(temp_c, obs.soc_hat, force_params) + obs.theta_hat
}

/// Advance Θ̂ over one frame interval. SOC is left to the caller.
pub fn observer_step(
    obs: &ObserverState,
    frame: &SensorFrame,
    force_params: &ForceParams,
    dt: f64,
) -> ObserverState {
    let residual = frame.f_meas - estimated_force(obs, frame.t_meas, force_params);
    let gain = -(-obs.l_gain * dt).exp_m1();
    ObserverState {
        theta_hat: obs.theta_hat + gain * residual,
        ..*obs
    }
}

/// Measured concentration above the ambient level.
pub fn gas_fault_value(g_meas: f64, thresholds: &Thresholds) -> f64 {
    g_meas - thresholds.g_normal
}

pub fn force_alarm(theta_hat: f64, thresholds: &Thresholds) -> bool {
    theta_hat.abs() > thresholds.eps_f
}

pub fn gas_alarm(g_fault: f64, thresholds: &Thresholds) -> bool {
    g_fault > thresholds.eps_g
}

/// Instantaneous two-channel decision table.
pub fn fuse(theta_hat: f64, g_fault: f64, thresholds: &Thresholds) -> Decision {
    match (
        force_alarm(theta_hat, thresholds),
        gas_alarm(g_fault, thresholds),
    ) {
        (true, true) => Decision::IscAlert,
        (true, false) | (false, true) => Decision::Warning,
        (false, false) => Decision::Normal,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: f64,
    pub from: Decision,
    pub to: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub theta_hat: f64,
    pub g_fault: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub first_force_alarm: Option<f64>,
    pub first_gas_alarm: Option<f64>,
    pub alert_time: Option<f64>,
    pub final_decision: Option<Decision>,
    pub peak_theta_hat: f64,
}

/// Streaming detector for one pack.
///
/// A confirmed `IscAlert` needs the force and gas channels to alarm within
/// `window` seconds of each other; once confirmed it is latched.
#[derive(Debug, Clone)]
pub struct Detector {
    force_params: ForceParams,
    thresholds: Thresholds,
    params: DetectionParams,
    n_parallel: f64,
    capacity_ah: f64,
    nominal_dt: f64,
    obs: ObserverState,
    decision: Decision,
    prev_t: Option<f64>,
    last_force: Option<f64>,
    last_gas: Option<f64>,
    summary: DetectionSummary,
    transitions: Vec<Transition>,
}

impl Detector {
    /// `nominal_dt` is used for the very first frame, which has no
    /// predecessor to measure the interval from.
    pub fn new(
        pack: &PackConfig,
        force_params: &ForceParams,
        thresholds: &Thresholds,
        params: &DetectionParams,
        initial_soc: f64,
        nominal_dt: f64,
    ) -> Self {
        Self {
            force_params: force_params.clone(),
            thresholds: *thresholds,
            params: *params,
            n_parallel: pack.n(),
            capacity_ah: pack.capacity_ah,
            nominal_dt,
            obs: ObserverState::new(initial_soc, params.l_gain),
            decision: Decision::Normal,
            prev_t: None,
            last_force: None,
            last_gas: None,
            summary: DetectionSummary::default(),
            transitions: Vec::new(),
        }
    }

    pub fn observer(&self) -> &ObserverState {
        &self.obs
    }

    pub fn decision(&self) -> Decision {
        self.decision
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn summary(&self) -> DetectionSummary {
        DetectionSummary {
            final_decision: self.prev_t.map(|_| self.decision),
            ..self.summary
        }
    }

    pub fn process(&mut self, frame: &SensorFrame) -> Result<LogRow> {
        let dt = match self.prev_t {
            Some(prev) if frame.t <= prev => return Err(Error::Stream { t: frame.t, prev }),
            Some(prev) => frame.t - prev,
            None => self.nominal_dt,
        };
        let t = frame.t;

        self.obs = observer_step(&self.obs, frame, &self.force_params, dt);
        // Pack current is shared by the parallel cells.
        self.obs.soc_hat = coulomb_count_step(
            self.obs.soc_hat,
            frame.i_meas / self.n_parallel,
            dt,
            self.capacity_ah,
        );

        let theta = self.obs.theta_hat;
        let g_fault = gas_fault_value(frame.g_meas, &self.thresholds);
        let force_now = force_alarm(theta, &self.thresholds);
        let gas_now = gas_alarm(g_fault, &self.thresholds);

        if force_now {
            self.last_force = Some(t);
            self.summary.first_force_alarm.get_or_insert(t);
        }
        if gas_now {
            self.last_gas = Some(t);
            self.summary.first_gas_alarm.get_or_insert(t);
        }
        self.summary.peak_theta_hat = self.summary.peak_theta_hat.max(theta.abs());

        let within = |seen: Option<f64>| seen.is_some_and(|s| t - s <= self.params.window);
        let confirmed =
            (force_now && within(self.last_gas)) || (gas_now && within(self.last_force));

        let next = if self.decision == Decision::IscAlert || confirmed {
            Decision::IscAlert
        } else {
            // without confirmation at most a warning
            fuse(theta, g_fault, &self.thresholds).min(Decision::Warning)
        };
        if next == Decision::IscAlert && self.decision != Decision::IscAlert {
            self.summary.alert_time = Some(t);
        }
        if next != self.decision {
            self.transitions.push(Transition {
                t,
                from: self.decision,
                to: next,
            });
        }
        self.decision = next;
        self.prev_t = Some(t);

        Ok(LogRow {
            t,
            theta_hat: theta,
            g_fault,
            decision: next,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionLog {
    pub rows: Vec<LogRow>,
    pub transitions: Vec<Transition>,
    pub summary: DetectionSummary,
}

/// Run the detector over a time-ordered frame sequence.
pub fn detect_stream(
    frames: &[SensorFrame],
    pack: &PackConfig,
    force_params: &ForceParams,
    thresholds: &Thresholds,
    params: &DetectionParams,
    initial_soc: f64,
    nominal_dt: f64,
) -> Result<DetectionLog> {
    let mut det = Detector::new(
        pack,
        force_params,
        thresholds,
        params,
        initial_soc,
        nominal_dt,
    );
    let rows = frames
        .iter()
        .map(|f| det.process(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionLog {
        rows,
        transitions: det.transitions().to_vec(),
        summary: det.summary(),
    })
}

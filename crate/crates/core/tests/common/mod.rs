//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use iscdetect::gas_transport::{transport_step_with, DuctConfig, GasField, OutletBoundary};
use iscdetect::isc_dynamics::ThermalParams;

pub fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

/// One sample of the short-region oracle trajectory.
#[derive(Debug, Clone, Copy)]
pub struct OraclePoint {
    pub t: f64,
    pub t_isc: f64,
    pub x_sei: f64,
    pub n_co2: f64,
}

/// Explicit Euler on the short-region energy balance and SEI kinetics,
/// written out from the governing equations. `current(t)` is the short
/// current. Samples are returned every `every` steps.
pub fn euler_isc(
    p: &ThermalParams,
    t_cell: f64,
    r_short: f64,
    current: impl Fn(f64) -> f64,
    dt: f64,
    steps: usize,
    every: usize,
) -> Vec<OraclePoint> {
    let mut temp = t_cell;
    let mut x = p.x_sei_0;
    let point = |k: usize, temp: f64, x: f64| OraclePoint {
        t: k as f64 * dt,
        t_isc: temp,
        x_sei: x,
        n_co2: p.m_an_isc * (p.x_sei_0 - x) / (2.0 * p.m_c6),
    };
    let mut out = vec![point(0, temp, x)];
    for k in 0..steps {
        let t = k as f64 * dt;
        let i = current(t);
        let dxdt = -p.a_sei * x * (-p.e_sei / (p.k_b * temp)).exp();
        let heat = p.m_an_isc * p.h_sei * (-dxdt) + i * i * r_short - (temp - t_cell) / p.r_c;
        temp += dt * heat / p.c_p;
        x = (x + dt * dxdt).max(0.0);
        if (k + 1) % every == 0 {
            out.push(point(k + 1, temp, x));
        }
    }
    out
}

/// Trapezoid rule over sample points.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..t.len() {
        acc += 0.5 * (y[k] + y[k - 1]) * (t[k] - t[k - 1]);
    }
    acc
}

/// Minimal reader for a two-column numeric CSV with a header line.
pub fn read_two_columns(path: &Path) -> (Vec<f64>, Vec<f64>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let mut parts = line.split(',');
        a.push(parts.next().unwrap().trim().parse().unwrap());
        b.push(parts.next().unwrap().trim().parse().unwrap());
    }
    (a, b)
}

pub fn gaussian_field(duct: &DuctConfig, center: f64, sigma: f64, peak: f64) -> GasField {
    let mut f = GasField::ambient(duct, 0.0);
    for i in 0..f.c.len() {
        let x = f.center(i);
        f.c[i] = peak * (-0.5 * ((x - center) / sigma).powi(2)).exp();
    }
    f.outlet_value = 0.0;
    f
}

/// Mass, mean and variance of a profile.
pub fn moments(f: &GasField) -> (f64, f64, f64) {
    let m: f64 = f.c.iter().sum::<f64>() * f.dx;
    let mean = (0..f.c.len()).map(|i| f.c[i] * f.center(i)).sum::<f64>() * f.dx / m;
    let var = (0..f.c.len())
        .map(|i| f.c[i] * (f.center(i) - mean).powi(2))
        .sum::<f64>()
        * f.dx
        / m;
    (m, mean, var)
}

pub struct DiffusionCheck {
    pub measured: f64,
    pub expected: f64,
    pub max_step_drift: f64,
}

impl DiffusionCheck {
    pub fn rel_error(&self) -> f64 {
        (self.measured - self.expected).abs() / self.expected
    }
}

/// Pure diffusion of a Gaussian pulse in a sealed duct for `t_end` seconds.
pub fn gaussian_diffusion(t_end: f64) -> DiffusionCheck {
    let duct = DuctConfig::default();
    let mut f = gaussian_field(&duct, 0.25, 0.02, 1e4);
    let (_, _, var0) = moments(&f);
    let dt_max = duct.stable_dt(0.0);
    let steps = (t_end / dt_max).ceil() as usize;
    let dt = t_end / steps as f64;
    let mut max_drift: f64 = 0.0;
    for _ in 0..steps {
        let before = f.inventory();
        f = transport_step_with(&f, None, &duct, dt, OutletBoundary::Closed)
            .unwrap()
            .0;
        max_drift = max_drift.max((f.inventory() - before).abs() / before);
    }
    let (_, _, var) = moments(&f);
    DiffusionCheck {
        measured: var - var0,
        expected: 2.0 * duct.d_coeff * t_end,
        max_step_drift: max_drift,
    }
}

/// Library RK4 trajectory on the same grid as [`euler_isc`] samples.
pub fn rk4_isc(
    p: &ThermalParams,
    t_cell: f64,
    r_short: f64,
    current: impl Fn(f64) -> f64,
    dt: f64,
    steps: usize,
) -> Vec<iscdetect::isc_dynamics::IscState> {
    use iscdetect::isc_dynamics::{step, IscState};
    let mut s = IscState::at_rest(t_cell, p);
    let mut out = vec![s];
    for k in 0..steps {
        s = step(&s, current(k as f64 * dt), r_short, p, dt).unwrap();
        out.push(s);
    }
    out
}

/// Largest relative deviation of the library trajectory from the Euler
/// oracle at dt/100, for the default fault current over `span` seconds.
pub fn isc_oracle_deviation(span: f64) -> (f64, f64, f64) {
    use iscdetect::pack_model::{short_current, PackConfig, ShortSpec};
    let p = ThermalParams::default();
    let pack = PackConfig::default();
    let short = ShortSpec {
        t_trigger: 0.0,
        ..ShortSpec::default()
    };
    let t_cell = 298.15;
    let soc = 0.89;
    let current = |t: f64| short_current(soc, &short, &pack, t).unwrap();
    let dt = 1e-3;
    let steps = (span / dt).round() as usize;
    let lib = rk4_isc(&p, t_cell, short.r_short, current, dt, steps);
    let oracle = euler_isc(
        &p,
        t_cell,
        short.r_short,
        current,
        dt / 100.0,
        steps * 100,
        100,
    );
    let (mut dev_t, mut dev_x, mut dev_n) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in lib.iter().zip(&oracle) {
        dev_t = dev_t.max((a.t_isc - b.t_isc).abs() / b.t_isc);
        dev_x = dev_x.max((a.x_sei - b.x_sei).abs() / b.x_sei);
        if b.n_co2 > 0.0 {
            dev_n = dev_n.max((a.n_co2 - b.n_co2).abs() / b.n_co2);
        }
    }
    (dev_t, dev_x, dev_n)
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::{DetectionParams, Thresholds};
use crate::error::{Error, Result};
use crate::gas_transport::DuctConfig;
use crate::isc_dynamics::ThermalParams;
use crate::mechanics::ForceParams;
use crate::pack_model::{PackConfig, ShortSpec};
use crate::sensing::NoiseSpec;

/// Integration step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Sensor frame period, s.
    pub frame_dt: f64,
    /// ISC sub-step while the short conducts or the region is hot, s.
    pub dt_fault: f64,
    /// ISC sub-step otherwise, s.
    pub dt_thermal: f64,
    /// Region counts as hot above the cell temperature by this much, K.
    pub hot_margin: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            frame_dt: 0.1,
            dt_fault: 1e-3,
            dt_thermal: 0.1,
            hot_margin: 1.0,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("numerics.frame_dt", self.frame_dt),
            ("numerics.dt_fault", self.dt_fault),
            ("numerics.dt_thermal", self.dt_thermal),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.dt_fault > self.frame_dt || self.dt_thermal > self.frame_dt {
            return Err(Error::Config(
                "numerics sub-steps must not exceed numerics.frame_dt".into(),
            ));
        }
        if !(self.hot_margin >= 0.0) {
            return Err(Error::Config("numerics.hot_margin must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// s
    pub t_end: f64,
    pub initial_soc: f64,
    /// Cell and ambient temperature, °C.
    #[serde(default = "default_ambient")]
    pub t_ambient_c: f64,
    /// Pack-level current CSV, relative to the scenario file. No file means
    /// the pack sits at rest.
    #[serde(default)]
    pub drive_cycle: Option<PathBuf>,
    /// Multiplies every current in the drive-cycle file.
    #[serde(default = "one")]
    pub drive_cycle_scale: f64,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,

    #[serde(default)]
    pub pack: PackConfig,
    /// Absent means a healthy run.
    #[serde(default)]
    pub short: Option<ShortSpec>,
    #[serde(default)]
    pub thermal: ThermalParams,
    #[serde(default)]
    pub mechanics: ForceParams,
    #[serde(default)]
    pub duct: DuctConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default)]
    pub numerics: Numerics,

    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_ambient() -> f64 {
    25.0
}

fn one() -> f64 {
    1.0
}

impl Default for Scenario {
    /// The reference fault case: a 25 mΩ short at 10 s in a resting pack.
    fn default() -> Self {
        Self {
            t_end: 30.0,
            initial_soc: 0.89,
            t_ambient_c: default_ambient(),
            drive_cycle: None,
            drive_cycle_scale: 1.0,
            output: None,
            pack: PackConfig::default(),
            short: Some(ShortSpec::default()),
            thermal: ThermalParams::default(),
            mechanics: ForceParams::default(),
            duct: DuctConfig::default(),
            noise: NoiseSpec::default(),
            thresholds: Thresholds::default(),
            detection: DetectionParams::default(),
            numerics: Numerics::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl Scenario {
    /// Read, parse and validate a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value = read_value(path.as_ref())?;
        Self::from_value(value, base_dir_of(path.as_ref()))
    }

    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_value(value, base_dir.into())
    }

    pub fn from_value(value: toml::Table, base_dir: PathBuf) -> Result<Self> {
        let mut sc: Scenario = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        sc.base_dir = base_dir;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be finite and > 0, got {}",
                self.t_end
            )));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::Config(format!(
                "initial_soc must be in [0, 1], got {}",
                self.initial_soc
            )));
        }
        if !(self.t_ambient_c > -273.15 && self.t_ambient_c.is_finite()) {
            return Err(Error::Config(
                "t_ambient_c must be above absolute zero".into(),
            ));
        }
        if !self.drive_cycle_scale.is_finite() {
            return Err(Error::Config("drive_cycle_scale must be finite".into()));
        }
        self.pack.validate()?;
        if let Some(s) = &self.short {
            s.validate()?;
        }
        self.thermal.validate()?;
        self.mechanics.validate()?;
        self.duct.validate()?;
        self.noise.validate()?;
        self.thresholds.validate()?;
        self.detection.validate()?;
        self.numerics.validate()?;
        if let Some(p) = self.drive_cycle_path() {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "drive cycle {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn drive_cycle_path(&self) -> Option<PathBuf> {
        self.drive_cycle.as_ref().map(|p| self.base_dir.join(p))
    }

    /// K
    pub fn t_cell(&self) -> f64 {
        self.t_ambient_c + 273.15
    }

    /// Same scenario with the short removed.
    pub fn healthy(&self) -> Self {
        Self {
            short: None,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut sc = self.clone();
        sc.noise.seed = seed;
        sc
    }
}

pub(crate) fn base_dir_of(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

/// Raw TOML table of a scenario file, for callers that patch keys before
/// building the scenario.
pub fn read_value(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))
}

/// Set `dotted.key` in a TOML table, creating intermediate tables. The
/// value is parsed as a TOML literal, falling back to a string.
pub fn set_dotted(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let value = parse_literal(raw);
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key {key:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

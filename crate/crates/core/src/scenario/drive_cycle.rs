use std::path::Path;

use crate::error::{Error, Result};

/// Pack current over one cycle, piecewise linear between samples and
/// repeated past the last sample. Discharge is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    t: Vec<f64>,
    i: Vec<f64>,
}

impl DriveCycle {
    pub fn new(t: Vec<f64>, i: Vec<f64>) -> Result<Self> {
        if t.len() != i.len() {
            return Err(Error::Config(
                "drive cycle time and current lengths differ".into(),
            ));
        }
        if t.len() < 2 {
            return Err(Error::Config(
                "drive cycle needs at least two samples".into(),
            ));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "drive cycle times must be strictly increasing".into(),
            ));
        }
        if t.iter().chain(&i).any(|v| !v.is_finite()) {
            return Err(Error::Config("drive cycle values must be finite".into()));
        }
        Ok(Self { t, i })
    }

    /// Zero current forever.
    pub fn rest() -> Self {
        Self {
            t: vec![0.0, 1.0],
            i: vec![0.0, 0.0],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn currents(&self) -> &[f64] {
        &self.i
    }

    pub fn duration(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.i.iter_mut().for_each(|v| *v *= factor);
        self
    }

    /// Pack current at `t`, A.
    pub fn current_at(&self, t: f64) -> f64 {
        let t0 = self.t[0];
        let tau = t0 + (t - t0).rem_euclid(self.duration());
        let k = self
            .t
            .partition_point(|&s| s <= tau)
            .clamp(1, self.t.len() - 1);
        let (ta, tb) = (self.t[k - 1], self.t[k]);
        let (ia, ib) = (self.i[k - 1], self.i[k]);
        ia + (ib - ia) * (tau - ta) / (tb - ta)
    }

    /// Current through each of `n_parallel` identical cells.
    pub fn cell_current_at(&self, t: f64, n_parallel: u32) -> f64 {
        self.current_at(t) / f64::from(n_parallel)
    }

    /// ∫ I dt over one full cycle, A·s.
    pub fn cycle_charge(&self) -> f64 {
        self.t
            .windows(2)
            .zip(self.i.windows(2))
            .map(|(t, i)| 0.5 * (i[0] + i[1]) * (t[1] - t[0]))
            .sum()
    }
}

/// Parse a `t_s,current_a` CSV.
pub fn load_drive_cycle(path: &Path) -> Result<DriveCycle> {
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(0, format!("{other:?}")),
        })?;

    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.len() != 2 || &header[0] != "t_s" || &header[1] != "current_a" {
        return Err(parse_err(
            1,
            format!(
                "expected header `t_s,current_a`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut t = Vec::new();
    let mut i = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 fields, got {}", rec.len()),
            ));
        }
        let field = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("`{}` is not a finite number", &rec[k])))
        };
        let (ts, amps) = (field(0)?, field(1)?);
        if let Some(&prev) = t.last() {
            if !(ts > prev) {
                return Err(parse_err(
                    line,
                    format!("time {ts} does not increase past {prev}"),
                ));
            }
        }
        t.push(ts);
        i.push(amps);
    }
    if t.len() < 2 {
        return Err(parse_err(0, "need at least two samples".into()));
    }
    DriveCycle::new(t, i)
}

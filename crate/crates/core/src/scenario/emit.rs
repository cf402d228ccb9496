use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::run::{ProfileSnapshot, Row, RunOutput, Summary, TimeSeries, COLUMNS};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PROFILE_FILE: &str = "gas_profile.csv";

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}

/// Write the series as CSV. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_timeseries(series: &TimeSeries, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(COLUMNS).map_err(|e| csv_err(path, e))?;
    for row in &series.rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(COLUMNS) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: "unexpected timeseries columns".into(),
        });
    }
    let rows = r
        .deserialize::<Row>()
        .map(|rec| {
            rec.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line() as usize),
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries { rows })
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(summary).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Long format: one `t,x,c` row per cell per frame.
pub fn write_profiles(profiles: &[ProfileSnapshot], centers: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["t", "x", "c"])
        .map_err(|e| csv_err(path, e))?;
    for snap in profiles {
        for (x, c) in centers.iter().zip(&snap.c) {
            w.serialize((snap.t, x, c)).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write every artifact of a run into `dir`, creating it if needed.
/// Returns the paths written.
pub fn emit(out: &RunOutput, dir: &Path, profile_dump: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![dir.join(TIMESERIES_FILE), dir.join(SUMMARY_FILE)];
    write_timeseries(&out.series, &written[0])?;
    write_summary(&out.summary, &written[1])?;
    if profile_dump {
        let p = dir.join(PROFILE_FILE);
        write_profiles(&out.profiles, &out.cell_centers, &p)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ts.csv");
        write_timeseries(&TimeSeries::default(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, format!("{}\n", COLUMNS.join(",")));
        assert_eq!(read_timeseries(&p).unwrap(), TimeSeries::default());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_timeseries(&TimeSeries::default(), Path::new("/nonexistent/dir/ts.csv"))
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}

//! Scenario files, drive-cycle input, the coupled simulation loop and its
//! output files.

mod config;
mod drive_cycle;
mod emit;
mod run;

pub use config::{read_value, set_dotted, Numerics, Scenario};
pub use drive_cycle::{load_drive_cycle, DriveCycle};
pub use emit::{
    emit, read_timeseries, write_profiles, write_summary, write_timeseries, PROFILE_FILE,
    SUMMARY_FILE, TIMESERIES_FILE,
};
pub use run::{
    load_cycle, run, run_with, simulate, ProfileSnapshot, Row, RunOptions, RunOutput, Summary,
    TimeSeries, COLUMNS,
};

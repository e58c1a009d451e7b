//! Experiment orchestration: configuration, record files, sweeps, fits and
//! the two pipelines.

pub mod config;
pub mod pipelines;
pub mod records;
pub mod sweep;

pub use config::{Ensemble, ExperimentConfig, ResolutionPolicy, SEED_ENV};
pub use pipelines::{good_threshold, pipeline_2d_upper, pipeline_3d_lower, Pipeline2dReport, Pipeline3dReport};
pub use records::{read_records, summarize, write_summary_csv, Record, RecordStore, SummaryRow};
pub use sweep::{
    cascade_cube, df_cube, df_doubling_sweep, df_ratio_spread, run_lifted_cascade, fit_exponent, power_law_constant, sweep_nodal_measure, DfPoint, ExponentFit,
    MeasureRow,
};

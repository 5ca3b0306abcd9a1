//! Monte Carlo campaigns over random Bell operators: per-trial norm
//! estimates against the high-probability bounds, with CSV/JSON emission.

pub mod campaign;
pub mod config;
pub mod error;
pub mod report;

pub use campaign::{
    run_campaign, run_coplanar_mc, run_expectation_mc, run_lhv_sweep, run_mk_baseline, run_ww_mc, CampaignOutput,
    CampaignSummary, Quantiles, TrialRecord,
};
pub use config::{CampaignConfig, CampaignKind, OutputFormat, StateSelector};
pub use error::{HarnessError, Result};
pub use report::{emit_results, render, write_csv, write_json};

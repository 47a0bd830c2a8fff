//! Command-line driver for the two-tier hyper-parameter tuner: campaign
//! configuration, parallel execution and CSV output.

pub mod campaign;
pub mod config;
pub mod results;

pub use campaign::{run_campaign, write_outputs, CampaignOutcome};
pub use config::{CampaignConfig, ConfigError, Interval};
pub use results::{ResultRow, SummaryRow};

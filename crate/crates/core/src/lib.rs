//! Monte Carlo simulation of secure NOMA downlinks in indoor visible-light
//! networks, with random device orientation, human-body blockage and a
//! passive eavesdropper.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod geom;
pub mod noma;
pub mod oracle;
pub mod report;
pub mod sim;
pub mod topology;

pub use config::{parse_config, Config};
pub use error::{AllocationError, ConfigError, GeomError, TopologyError};
pub use geom::{is_blocked, BodyCylinder, Vec3};
pub use noma::{AllocationScheme, InterferenceSet};
pub use sim::{run_campaign, sweep, CampaignConfig, CampaignStats, EvePlacement, Scenario};
pub use topology::Strategy;

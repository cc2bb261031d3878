//! Closed-form security model and activation-level simulator for a
//! per-subbank distributed-counter RowHammer defence.
//!
//! The [`analytic`] module evaluates the worst-case hammer count bound for a
//! configuration; [`mechanism`] replays traces against the counter table;
//! [`attack`] builds adversarial traces and an exhaustive search for tiny
//! configurations; [`explorer`] sweeps design spaces.

pub mod analytic;
pub mod attack;
pub mod cli;
pub mod config;
pub mod error;
pub mod explorer;
pub mod mechanism;
pub mod model;
pub mod report;
pub mod trace;

pub use error::{Error, Result};
pub use mechanism::{BankState, ConfigMode, SimReport, TraceEvent};
pub use model::{DeviceProfile, MechanismConfig, Scheme, TiePolicy};
pub use report::KeyValues;

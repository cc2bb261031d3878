//! Adversarial trace synthesis: the two-phase worst-case attack, random
//! traces and an exhaustive search for tiny banks.

pub mod fuzz;
pub mod oracle;
pub mod phase1;
pub mod wave;

pub use fuzz::{fuzz_pattern, fuzz_traces, Pattern};
pub use oracle::exhaustive_oracle;
pub use phase1::{plan_phase1, Phase1Schedule};
pub use wave::{default_target, execute, plan_wave, AttackOutcome, WavePlan};

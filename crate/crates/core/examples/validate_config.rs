//! Parses a configuration file and lists every violated constraint.
//!
//! `cargo run --example validate_config -- configs/op1.conf`

use silverbullet::config::parse_config;
use silverbullet::{analytic, model};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/op1.conf").into());
    let (device, config) = parse_config(&std::fs::read_to_string(&path)?)?;
    let violations = model::validate(&device, &config);
    for v in &violations {
        println!("violation {v}");
    }
    println!("{path}: thc={} uhc={} valid={}", analytic::thc(&device, &config), device.uhc_dram, violations.is_empty());
    Ok(())
}

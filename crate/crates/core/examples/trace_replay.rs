//! Replays a hand-written trace and prints the per-row peak windows.

use silverbullet::mechanism::{run_trace, ConfigMode};
use silverbullet::trace::parse_trace;
use silverbullet::{DeviceProfile, MechanismConfig, Scheme};

const TRACE: &str = "\
# double-sided hammering of row 5
A 4
A 6
A 4
A 6
P 5
A 4
A 6
";

fn main() -> silverbullet::Result<()> {
    let config = MechanismConfig::new(10, 8, 64, Scheme::ExtendedCounterRegion);
    let device = DeviceProfile::new(119, 2, 64, 1, 4);
    let events = parse_trace(&TRACE.repeat(20))?;
    let report = run_trace(&device, &config, events, ConfigMode::Strict)?;
    println!("activations={} preventive={} periodic={}", report.activations, report.refresh_count, report.periodic_refreshes);
    println!("max_window={} at row {} (safe={})", report.max_window, report.max_window_row, report.safe);
    for (row, w) in report.max_window_per_row.iter().enumerate().take(12) {
        println!("row {row:>2}: {w}");
    }
    Ok(())
}

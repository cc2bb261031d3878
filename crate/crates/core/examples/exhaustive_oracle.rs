//! Brute-force worst case on a four-row bank against the analytic bound
//! and the synthesized attack.

use silverbullet::attack::{execute, exhaustive_oracle, plan_wave};
use silverbullet::{analytic, DeviceProfile, MechanismConfig, Scheme};

fn main() -> silverbullet::Result<()> {
    let config = MechanismConfig::new(4, 2, 4, Scheme::ExtendedCounterRegion);
    let mut device = DeviceProfile::new(0, 1, 4, 1, 1);
    device.uhc_dram = analytic::thc(&device, &config) + 1;
    let bound = analytic::hammer_bounds(&device, &config, None)?.hc_attack;
    let wave = execute(&device, &config, &plan_wave(&device, &config, None)?)?.max_victim_window;
    for horizon in [4, 8, 12, 16] {
        let best = exhaustive_oracle(&device, &config, horizon)?;
        println!("horizon {horizon:>2}: oracle {best:>2}, wave {wave}, bound {bound}");
    }
    Ok(())
}

//! Throws seeded random traces at a small bank and reports the closest
//! approach to the bound per pattern family.

use silverbullet::attack::{fuzz_pattern, Pattern};
use silverbullet::mechanism::{run_trace, ConfigMode};
use silverbullet::{analytic, DeviceProfile, MechanismConfig, Scheme};

fn main() -> silverbullet::Result<()> {
    let config = MechanismConfig::new(6, 4, 16, Scheme::ExtendedCounterRegion);
    let mut device = DeviceProfile::new(0, 1, 16, 1, 2);
    let thc = analytic::thc(&device, &config);
    device.uhc_dram = thc + 1;
    let patterns = [Pattern::SingleSided, Pattern::DoubleSided, Pattern::Random, Pattern::WaveLike, Pattern::Mixed];
    for pattern in patterns {
        let mut worst = 0;
        for seed in 0..200 {
            let events = fuzz_pattern(&device, &config, seed, pattern, 10 * thc as usize);
            worst = worst.max(run_trace(&device, &config, events, ConfigMode::Strict)?.max_window);
        }
        println!("{pattern:?}: worst window {worst} of thc {thc}");
    }
    Ok(())
}

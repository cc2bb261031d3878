//! Synthesizes the worst-case attack, with and without a mid-attack refresh
//! of the target, and compares the victim's window with the bound.

use silverbullet::attack::{execute, plan_wave};
use silverbullet::{analytic, DeviceProfile, MechanismConfig, Scheme};

fn main() -> silverbullet::Result<()> {
    let config = MechanismConfig::new(10, 8, 64, Scheme::ExtendedCounterRegion);
    let mut device = DeviceProfile::new(0, 2, 64, 1, 4);
    device.uhc_dram = analytic::thc(&device, &config) + 1;
    for p_ref in [None, Some(1), Some(2)] {
        let plan = plan_wave(&device, &config, p_ref)?;
        let out = execute(&device, &config, &plan)?;
        println!(
            "p_ref={p_ref:?}: {} events, iterations={}, victim row {} window {} of thc {} (phase1 {} + phase2 {})",
            plan.len(),
            plan.iteration_events.len(),
            out.victim_row,
            out.max_victim_window,
            out.thc,
            out.hc_phase1,
            out.hc_phase2
        );
    }
    Ok(())
}

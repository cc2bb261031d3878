//! Closed-form bounds for the two reference operating points.

use silverbullet::analytic;
use silverbullet::{DeviceProfile, MechanismConfig, Scheme};

fn main() -> silverbullet::Result<()> {
    let points = [("D=32, S_SB=8, R=1", 32, 8, 1), ("D=64, S_SB=128, R=8", 64, 128, 8)];
    for (label, d, s, r) in points {
        let device = DeviceProfile::new(10_000, 4, 65536, r, 177);
        for scheme in [Scheme::ExtendedCounterRegion, Scheme::ExtendedPreventiveRefreshRegion] {
            let config = MechanismConfig::new(d, s, device.bank_rows, scheme);
            let b = analytic::hammer_bounds(&device, &config, None)?;
            println!(
                "{label:<20} {:<4} thc={:<6} hc1={:<4} hc2a={:<5} hc2b={} hc_ref={} min_d={}",
                scheme.short_name(),
                b.thc,
                b.hc1,
                b.hc2a,
                b.hc2b,
                b.hc_ref,
                analytic::min_d(device.window, r, scheme)
            );
        }
    }
    Ok(())
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use silverbullet::analytic;
use silverbullet::model::{self, DeviceProfile, MechanismConfig, Scheme};

pub const ECR: Scheme = Scheme::ExtendedCounterRegion;
pub const EPRR: Scheme = Scheme::ExtendedPreventiveRefreshRegion;

#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub device: DeviceProfile,
    pub config: MechanismConfig,
}

/// A configuration whose chip tolerates exactly one hammer more than the bound.
pub fn case(d: u32, t: u32, r: u32, b: u32, s: u32, n: u32, scheme: Scheme) -> Case {
    let config = MechanismConfig::new(d, s, s * n, scheme);
    let mut device = DeviceProfile::new(0, b, s * n, r, t);
    device.uhc_dram = analytic::thc(&device, &config) + 1;
    Case { name: format!("D={d} T={t} R={r} B={b} S_SB={s} N_SB={n} {scheme}"), device, config }
}

/// Small banks used for replaying attacks and random traces.
pub fn soundness_suite() -> Vec<Case> {
    let cases = vec![
        case(4, 1, 1, 1, 2, 2, ECR),
        case(4, 1, 1, 1, 2, 4, ECR),
        case(6, 2, 1, 1, 4, 4, ECR),
        case(10, 4, 1, 2, 8, 8, ECR),
        case(6, 4, 2, 1, 4, 8, ECR),
        case(8, 3, 1, 1, 8, 2, ECR),
        case(2, 1, 1, 1, 2, 4, EPRR),
        case(5, 4, 1, 1, 4, 4, EPRR),
    ];
    for c in &cases {
        assert!(model::validate(&c.device, &c.config).is_empty(), "{} must be valid", c.name);
    }
    cases
}

/// Banks small enough for the exhaustive search at horizon 16.
pub fn oracle_suite() -> Vec<Case> {
    vec![
        case(4, 1, 1, 1, 2, 2, ECR),
        case(4, 1, 1, 1, 2, 2, EPRR),
        case(4, 1, 1, 1, 2, 4, ECR),
        case(2, 1, 1, 1, 2, 4, EPRR),
    ]
}

/// Full-size configurations valid under both schemes, drawn from a fixed seed.
pub fn sampled_configs(count: usize, seed: u64) -> Vec<(DeviceProfile, MechanismConfig)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let t = rng.gen_range(1..=256);
        let r = [1, 2, 4, 8][rng.gen_range(0..4)];
        let min = analytic::min_d(t, r, ECR).max(analytic::min_d(t, r, EPRR));
        let d = min + rng.gen_range(0..300);
        let b: u32 = rng.gen_range(1..=8);
        let s = 1u32 << rng.gen_range((2 * b).next_power_of_two().trailing_zeros()..=12);
        let bank = 1u32 << rng.gen_range(14..=19);
        let mut device = DeviceProfile::new(0, b, bank, r, t);
        let config = MechanismConfig::new(d, s, bank, ECR);
        let eprr = MechanismConfig { scheme: EPRR, ..config.clone() };
        device.uhc_dram = analytic::thc(&device, &eprr) + 1;
        if model::validate(&device, &config).is_empty() && model::validate(&device, &eprr).is_empty() {
            out.push((device, config));
        }
    }
    out
}

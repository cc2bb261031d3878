//! Device and mechanism configuration, plus the RowHammer-safe constraint set.
//!
//! A [`DeviceProfile`] describes the DRAM chip and the refresh budget the
//! interface protocol leaves to the mechanism (`R` preventive refreshes per
//! window of `T` activations). A [`MechanismConfig`] carries the tunable
//! table parameters. [`validate`] checks the pair against every constraint
//! and returns the violations as data.

use std::fmt;

use serde::Serialize;

use crate::analytic;
use crate::error::{Error, Result};

/// Default number of DRAM cells one SRAM table bit is charged as.
pub const DEFAULT_SRAM_AREA_FACTOR: u32 = 200;

/// DDR refresh interval, refresh latency and row cycle time, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimingParams {
    pub t_refi_ns: u64,
    pub t_rfc_ns: u64,
    pub t_rc_ns: u64,
}

impl TimingParams {
    pub fn window_t(&self) -> Result<u32> {
        derive_window_t(self.t_refi_ns, self.t_rfc_ns, self.t_rc_ns)
    }
}

/// Characteristics of the protected DRAM chip and of its refresh budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviceProfile {
    /// Minimum hammer count that flips a bit.
    pub uhc_dram: u64,
    /// Maximum aggressor-victim distance in rows.
    pub blast_radius: u32,
    /// Rows per bank.
    pub bank_rows: u32,
    /// Preventive refreshes the mechanism may perform per window (`R`).
    pub refresh_burst: u32,
    /// Attacker activations that fit in one window (`T`).
    pub window: u32,
    pub timing: Option<TimingParams>,
}

impl DeviceProfile {
    pub fn new(uhc_dram: u64, blast_radius: u32, bank_rows: u32, refresh_burst: u32, window: u32) -> Self {
        Self {
            uhc_dram,
            blast_radius,
            bank_rows,
            refresh_burst,
            window,
            timing: None,
        }
    }

    /// Builds a profile whose window is derived from DDR timings.
    pub fn from_timing(
        uhc_dram: u64,
        blast_radius: u32,
        bank_rows: u32,
        refresh_burst: u32,
        timing: TimingParams,
    ) -> Result<Self> {
        Ok(Self {
            uhc_dram,
            blast_radius,
            bank_rows,
            refresh_burst,
            window: timing.window_t()?,
            timing: Some(timing),
        })
    }
}

/// How cross-subbank disturbance is covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    /// Counter regions extend `B` rows into each neighbour; one activation
    /// near a boundary hammers both subbanks.
    ExtendedCounterRegion,
    /// Counter regions are disjoint; the refresh schedule extends `B` rows
    /// into each neighbour and visits margin rows twice per pass.
    ExtendedPreventiveRefreshRegion,
}

impl Scheme {
    pub fn short_name(self) -> &'static str {
        match self {
            Scheme::ExtendedCounterRegion => "ecr",
            Scheme::ExtendedPreventiveRefreshRegion => "eprr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ecr" => Some(Scheme::ExtendedCounterRegion),
            "eprr" => Some(Scheme::ExtendedPreventiveRefreshRegion),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Tie-break among subbanks sharing the maximum PENDING value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TiePolicy {
    /// Worst case for the defender: the target is served only when it is the
    /// sole maximum. Remaining ties go to the lowest index.
    AdversarialNonTargetLast { target_subbank: u32 },
    LowestIndexFirst,
    /// Ties go to the first candidate at or after a pointer that advances
    /// past every served subbank.
    RotatingStart,
}

impl TiePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            TiePolicy::AdversarialNonTargetLast { .. } => "adversarial",
            TiePolicy::LowestIndexFirst => "lowest",
            TiePolicy::RotatingStart => "rotating",
        }
    }

    pub fn target(&self) -> Option<u32> {
        match self {
            TiePolicy::AdversarialNonTargetLast { target_subbank } => Some(*target_subbank),
            _ => None,
        }
    }
}

/// Silver Bullet table parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MechanismConfig {
    /// Hammers per produced preventive refresh.
    pub d: u32,
    pub subbank_rows: u32,
    pub n_subbanks: u32,
    pub scheme: Scheme,
    pub tie_policy: TiePolicy,
    /// Subbanks sharing one table entry.
    pub sharing_factor: u32,
    pub sram_area_factor: u32,
}

impl MechanismConfig {
    /// Equal-sized subbanks covering `bank_rows`; `n_subbanks` is the floor
    /// quotient, so an inexact split surfaces in [`validate`].
    pub fn new(d: u32, subbank_rows: u32, bank_rows: u32, scheme: Scheme) -> Self {
        Self {
            d,
            subbank_rows,
            n_subbanks: bank_rows.checked_div(subbank_rows).unwrap_or(0),
            scheme,
            tie_policy: TiePolicy::AdversarialNonTargetLast { target_subbank: 0 },
            sharing_factor: 1,
            sram_area_factor: DEFAULT_SRAM_AREA_FACTOR,
        }
    }

    pub fn with_tie_policy(mut self, policy: TiePolicy) -> Self {
        self.tie_policy = policy;
        self
    }

    pub fn with_sharing_factor(mut self, n: u32) -> Self {
        self.sharing_factor = n;
        self
    }
}

/// Number of attacker activations that fit in a `tREFI + tRFC` window.
pub fn derive_window_t(t_refi_ns: u64, t_rfc_ns: u64, t_rc_ns: u64) -> Result<u32> {
    if t_rc_ns == 0 {
        return Err(Error::InvalidTiming("t_rc_ns must be positive".into()));
    }
    let window = (t_refi_ns + t_rfc_ns) / t_rc_ns;
    u32::try_from(window).map_err(|_| Error::InvalidTiming(format!("window of {window} activations overflows")))
}

/// One failed constraint, with the values that failed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code", rename_all = "kebab-case")]
pub enum Violation {
    NonPositive { field: &'static str },
    DBelowMinimum { d: u32, min_d: u32, scheme: Scheme },
    SubbankBelowTwiceBlastRadius { subbank_rows: u32, blast_radius: u32 },
    SubbankExceedsBank { subbank_rows: u32, bank_rows: u32 },
    UnequalSubbanks { n_subbanks: u32, subbank_rows: u32, bank_rows: u32 },
    WindowNotBelowUhc { window: u32, uhc_dram: u64 },
    UhcNotAboveThc { uhc_dram: u64, thc: u64 },
    TimingMismatch { window: u32, derived: u32 },
    TieTargetOutOfRange { target_subbank: u32, n_subbanks: u32 },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NonPositive { .. } => "non-positive",
            Violation::DBelowMinimum { .. } => "d-below-minimum",
            Violation::SubbankBelowTwiceBlastRadius { .. } => "subbank-below-2b",
            Violation::SubbankExceedsBank { .. } => "subbank-exceeds-bank",
            Violation::UnequalSubbanks { .. } => "unequal-subbanks",
            Violation::WindowNotBelowUhc { .. } => "window-not-below-uhc",
            Violation::UhcNotAboveThc { .. } => "uhc-not-above-thc",
            Violation::TimingMismatch { .. } => "timing-mismatch",
            Violation::TieTargetOutOfRange { .. } => "tie-target-out-of-range",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code())?;
        match self {
            Violation::NonPositive { field } => write!(f, "{field} must be positive"),
            Violation::DBelowMinimum { d, min_d, scheme } => write!(
                f,
                "D={d} is below the minimum {min_d} needed for refresh consumption to keep up with production ({scheme})"
            ),
            Violation::SubbankBelowTwiceBlastRadius { subbank_rows, blast_radius } => {
                write!(f, "S_SB={subbank_rows} is below 2B={}", 2 * u64::from(*blast_radius))
            }
            Violation::SubbankExceedsBank { subbank_rows, bank_rows } => {
                write!(f, "S_SB={subbank_rows} exceeds S_B={bank_rows}")
            }
            Violation::UnequalSubbanks { n_subbanks, subbank_rows, bank_rows } => write!(
                f,
                "N_SB*S_SB={} does not equal S_B={bank_rows} (N_SB={n_subbanks}, S_SB={subbank_rows})",
                u64::from(*n_subbanks) * u64::from(*subbank_rows)
            ),
            Violation::WindowNotBelowUhc { window, uhc_dram } => {
                write!(f, "T={window} is not below UHC={uhc_dram}")
            }
            Violation::UhcNotAboveThc { uhc_dram, thc } => write!(f, "UHC={uhc_dram} is not above THC={thc}"),
            Violation::TimingMismatch { window, derived } => {
                write!(f, "T={window} disagrees with T={derived} derived from timings")
            }
            Violation::TieTargetOutOfRange { target_subbank, n_subbanks } => {
                write!(f, "target subbank {target_subbank} out of range for N_SB={n_subbanks}")
            }
        }
    }
}

/// Checks the full constraint set. An empty result means the configuration
/// is RowHammer-safe for the device.
pub fn validate(device: &DeviceProfile, config: &MechanismConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let positives: [(&'static str, u64); 8] = [
        ("uhc_dram", device.uhc_dram),
        ("blast_radius", device.blast_radius.into()),
        ("bank_rows", device.bank_rows.into()),
        ("refresh_burst_r", device.refresh_burst.into()),
        ("window_t", device.window.into()),
        ("d", config.d.into()),
        ("subbank_rows", config.subbank_rows.into()),
        ("sharing_factor", config.sharing_factor.into()),
    ];
    for (field, value) in positives {
        if value == 0 {
            out.push(Violation::NonPositive { field });
        }
    }
    // A subbank larger than the bank leaves zero subbanks; that gets its own code below.
    if config.n_subbanks == 0 && config.subbank_rows <= device.bank_rows {
        out.push(Violation::NonPositive { field: "n_subbanks" });
    }
    if !out.is_empty() {
        return out;
    }

    let min_d = analytic::min_d(device.window, device.refresh_burst, config.scheme);
    if config.d < min_d {
        out.push(Violation::DBelowMinimum { d: config.d, min_d, scheme: config.scheme });
    }
    if u64::from(config.subbank_rows) < 2 * u64::from(device.blast_radius) {
        out.push(Violation::SubbankBelowTwiceBlastRadius {
            subbank_rows: config.subbank_rows,
            blast_radius: device.blast_radius,
        });
    }
    if config.subbank_rows > device.bank_rows {
        out.push(Violation::SubbankExceedsBank { subbank_rows: config.subbank_rows, bank_rows: device.bank_rows });
    }
    if u64::from(config.n_subbanks) * u64::from(config.subbank_rows) != u64::from(device.bank_rows) {
        out.push(Violation::UnequalSubbanks {
            n_subbanks: config.n_subbanks,
            subbank_rows: config.subbank_rows,
            bank_rows: device.bank_rows,
        });
    }
    if u64::from(device.window) >= device.uhc_dram {
        out.push(Violation::WindowNotBelowUhc { window: device.window, uhc_dram: device.uhc_dram });
    }
    let thc = analytic::thc(device, config);
    if config.n_subbanks > 0 && device.uhc_dram <= thc {
        out.push(Violation::UhcNotAboveThc { uhc_dram: device.uhc_dram, thc });
    }
    if let Some(timing) = device.timing {
        match timing.window_t() {
            Ok(derived) if derived != device.window => {
                out.push(Violation::TimingMismatch { window: device.window, derived })
            }
            Ok(_) => {}
            Err(_) => out.push(Violation::NonPositive { field: "t_rc_ns" }),
        }
    }
    if let Some(target_subbank) = config.tie_policy.target() {
        if target_subbank >= config.n_subbanks {
            out.push(Violation::TieTargetOutOfRange { target_subbank, n_subbanks: config.n_subbanks });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op3_device(r: u32) -> DeviceProfile {
        DeviceProfile::new(9600, 4, 65536, r, 177)
    }

    #[test]
    fn window_from_ddr4_timings() {
        assert_eq!(derive_window_t(7800, 350, 46).unwrap(), 177);
        assert_eq!(derive_window_t(46, 0, 46).unwrap(), 1);
        assert_eq!(derive_window_t(7800, 350, 45).unwrap(), 181);
    }

    #[test]
    fn zero_row_cycle_is_rejected() {
        assert!(matches!(derive_window_t(7800, 350, 0), Err(Error::InvalidTiming(_))));
    }

    #[test]
    fn op3_with_free_refresh_budget_is_safe() {
        // R=8 lifts the protocol minimum for D to 47, below D=64.
        let config = MechanismConfig::new(64, 128, 65536, Scheme::ExtendedCounterRegion);
        assert_eq!(config.n_subbanks, 512);
        assert!(validate(&op3_device(8), &config).is_empty());
    }

    #[test]
    fn op3_under_single_refresh_budget_needs_larger_d() {
        let config = MechanismConfig::new(64, 128, 65536, Scheme::ExtendedCounterRegion);
        let v = validate(&op3_device(1), &config);
        assert_eq!(v, vec![Violation::DBelowMinimum { d: 64, min_d: 356, scheme: Scheme::ExtendedCounterRegion }]);
    }

    #[test]
    fn tiny_d_reports_minimum() {
        let config = MechanismConfig::new(2, 128, 65536, Scheme::ExtendedCounterRegion);
        let v = validate(&op3_device(1), &config);
        assert!(v.contains(&Violation::DBelowMinimum { d: 2, min_d: 356, scheme: Scheme::ExtendedCounterRegion }));
    }

    #[test]
    fn subbank_smaller_than_twice_blast_radius() {
        let config = MechanismConfig::new(512, 4, 65536, Scheme::ExtendedCounterRegion);
        let v = validate(&op3_device(1), &config);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::SubbankBelowTwiceBlastRadius { subbank_rows: 4, blast_radius: 4 })));
    }

    #[test]
    fn unequal_split_and_oversized_subbank() {
        let device = DeviceProfile::new(100_000, 1, 100, 1, 4);
        let config = MechanismConfig::new(10, 30, 100, Scheme::ExtendedCounterRegion);
        assert!(validate(&device, &config).iter().any(|v| v.code() == "unequal-subbanks"));
        let config = MechanismConfig::new(10, 200, 100, Scheme::ExtendedCounterRegion);
        let codes: Vec<_> = validate(&device, &config).iter().map(Violation::code).collect();
        assert!(codes.contains(&"subbank-exceeds-bank"));
    }

    #[test]
    fn uhc_must_exceed_window_and_thc() {
        let device = DeviceProfile::new(100, 1, 8, 1, 100);
        let config = MechanismConfig::new(202, 2, 8, Scheme::ExtendedCounterRegion);
        let codes: Vec<_> = validate(&device, &config).iter().map(Violation::code).collect();
        assert_eq!(codes, vec!["window-not-below-uhc", "uhc-not-above-thc"]);
    }

    #[test]
    fn zero_fields_short_circuit() {
        let device = DeviceProfile::new(100, 0, 8, 1, 1);
        let config = MechanismConfig::new(4, 2, 8, Scheme::ExtendedCounterRegion);
        assert_eq!(validate(&device, &config), vec![Violation::NonPositive { field: "blast_radius" }]);
    }

    #[test]
    fn timing_triple_must_agree_with_window() {
        let timing = TimingParams { t_refi_ns: 7800, t_rfc_ns: 350, t_rc_ns: 46 };
        let mut device = DeviceProfile::from_timing(9600, 4, 65536, 8, timing).unwrap();
        assert_eq!(device.window, 177);
        let config = MechanismConfig::new(64, 128, 65536, Scheme::ExtendedCounterRegion);
        assert!(validate(&device, &config).is_empty());
        device.window = 170;
        assert!(validate(&device, &config).iter().any(|v| v.code() == "timing-mismatch"));
    }

    #[test]
    fn adversarial_target_must_exist() {
        let device = DeviceProfile::new(1000, 1, 8, 1, 1);
        let config = MechanismConfig::new(4, 2, 8, Scheme::ExtendedCounterRegion)
            .with_tie_policy(TiePolicy::AdversarialNonTargetLast { target_subbank: 4 });
        assert_eq!(
            validate(&device, &config),
            vec![Violation::TieTargetOutOfRange { target_subbank: 4, n_subbanks: 4 }]
        );
    }
}

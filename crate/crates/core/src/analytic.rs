//! Closed-form security model: the production/consumption constraint, the
//! Phase 1 iteration arithmetic, hammer-count bounds, the tolerable hammer
//! count and the table geometry.
//!
//! Ratios of integers are evaluated exactly with cross-multiplication.
//! Logarithms go through `f64`; integer-valued results are snapped within
//! [`REL_TOL`] before rounding so that `log2(2^k)` never rounds up by one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DeviceProfile, MechanismConfig, Scheme};
use crate::report::KeyValues;

/// Relative tolerance used wherever a real value is compared or rounded.
pub const REL_TOL: f64 = 1e-9;

/// Every closed-form quantity describing the worst-case attack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// Achievable subbank reduction factor for the configured D, T, R.
    pub k: f64,
    pub k_upper: f64,
    /// Worst-case Phase 1 PENDING value, `log2(N_SB)`.
    pub p_p1max: f64,
    pub hc1: u64,
    pub hc2a: u64,
    pub hc2b: u64,
    pub hc2: u64,
    pub hc_attack: u64,
    pub hc_ref: u64,
    pub hc_total: u64,
    pub thc: u64,
    pub p_ref_used: Option<u32>,
}

/// Table entry layout and size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableGeometry {
    pub frac_bits: u32,
    pub pending_bits: u32,
    pub index_bits: u32,
    pub entry_bits: u32,
    pub shared_entries: u64,
    pub table_bits: u64,
    pub table_bytes: f64,
    pub dram_equiv_bytes: f64,
    /// Set when a field width was raised to the 1-bit minimum.
    pub clamped: bool,
}

/// Quantities of one Phase 1 iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStep {
    /// Attacker activations plus preventive refreshes spent in the iteration.
    pub n_act: f64,
    /// Preventive refreshes the consumer performs meanwhile.
    pub n_consumed: f64,
    /// Largest admissible subbank count for the next iteration.
    pub n_next_cap: u64,
}

/// Smallest D whose production rate does not outrun `R` refreshes per `T`
/// activations.
///
/// ECR: `D >= 2(T/R + 1)`; EPRR: `D >= (T + R)/R`. Both are exact ceilings.
pub fn min_d(window: u32, refresh_burst: u32, scheme: Scheme) -> u32 {
    let (t, r) = (u64::from(window), u64::from(refresh_burst.max(1)));
    let numerator = match scheme {
        Scheme::ExtendedCounterRegion => 2 * (t + r),
        Scheme::ExtendedPreventiveRefreshRegion => t + r,
    };
    numerator.div_ceil(r) as u32
}

/// The reduction factor as an exact fraction `(numerator, denominator)`.
///
/// ECR: `(2T - R) / (2T + (D - 1)R)`; EPRR: `(T - R) / (T + (D - 1)R)`.
/// The numerator is negative when the consumer outpaces every iteration.
pub fn k_fraction(d: u32, window: u32, refresh_burst: u32, scheme: Scheme) -> (i64, i64) {
    let (d, t, r) = (i64::from(d), i64::from(window), i64::from(refresh_burst));
    match scheme {
        Scheme::ExtendedCounterRegion => (2 * t - r, 2 * t + (d - 1) * r),
        Scheme::ExtendedPreventiveRefreshRegion => (t - r, t + (d - 1) * r),
    }
}

/// Subbank-count reduction factor between consecutive Phase 1 iterations.
pub fn k_reduction(d: u32, window: u32, refresh_burst: u32, scheme: Scheme) -> Result<f64> {
    let min = min_d(window, refresh_burst, scheme);
    if d < min {
        return Err(Error::Constraint(format!("D={d} is below the minimum {min} for {scheme}")));
    }
    let (num, den) = k_fraction(d, window, refresh_burst, scheme);
    if num <= 0 {
        return Err(Error::Domain(format!(
            "R={refresh_burst} consumes at least as fast as T={window} activations can produce; no Phase 1 reduction exists"
        )));
    }
    Ok(num as f64 / den as f64)
}

/// Least upper bound of the reduction factor for a given D.
pub fn k_upper(d: u32) -> f64 {
    let d = f64::from(d);
    (d - 1.0) / (2.0 * d - 1.0)
}

/// Maximum Phase 1 PENDING value for `n0` initial subbanks and factor `k`.
pub fn p1max(n0: u64, k: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("k={k} must lie in (0, 1)")));
    }
    if n0 == 0 {
        return Err(Error::Domain("N(0) must be at least 1".into()));
    }
    Ok(-(n0 as f64).ln() / k.ln())
}

/// `log2(N_SB)`, the bound reached with `k = 0.5`.
pub fn p1max_upper(n_subbanks: u64) -> f64 {
    log2_u64(n_subbanks)
}

/// Expected counts of one Phase 1 iteration with `n_i` subbanks fired and
/// `n_next` recharged.
pub fn iteration_step(n_i: u64, n_next: u64, d: u32, window: u32, refresh_burst: u32, scheme: Scheme) -> IterationStep {
    let (ni, nn, d_f) = (n_i as f64, n_next as f64, f64::from(d));
    let n_act = match scheme {
        Scheme::ExtendedCounterRegion => ni / 2.0 + (d_f - 1.0) * nn / 2.0,
        Scheme::ExtendedPreventiveRefreshRegion => ni + (d_f - 1.0) * nn,
    };
    let n_consumed = f64::from(refresh_burst) / f64::from(window) * n_act;
    IterationStep { n_act, n_consumed, n_next_cap: next_count_cap(n_i, d, window, refresh_burst, scheme) }
}

/// `floor(k * n)` computed exactly; zero when the numerator of k is not positive.
pub fn next_count_cap(n: u64, d: u32, window: u32, refresh_burst: u32, scheme: Scheme) -> u64 {
    let (num, den) = k_fraction(d, window, refresh_burst, scheme);
    if num <= 0 || den <= 0 {
        return 0;
    }
    (u128::from(n) * num as u128 / den as u128) as u64
}

/// Rows the refresh schedule has to cover before a victim is revisited: the
/// subbank itself, plus the double-rate margins under EPRR.
pub fn schedule_rows(config: &MechanismConfig, blast_radius: u32) -> u64 {
    let s = u64::from(config.subbank_rows);
    match config.scheme {
        Scheme::ExtendedCounterRegion => s,
        Scheme::ExtendedPreventiveRefreshRegion => s + 6 * u64::from(blast_radius),
    }
}

/// Tolerable hammer count, assuming the target is not refreshed mid-attack.
pub fn thc(device: &DeviceProfile, config: &MechanismConfig) -> u64 {
    hammer_bounds(device, config, None).map(|b| b.thc).unwrap_or(u64::MAX)
}

/// All hammer-count bounds for the worst-case attack.
///
/// Uses `k = 0.5` and `N(0) = N_SB`, hence `P_p1max = log2(N_SB)`. For
/// non-power-of-two subbank counts the Phase 1 term is `ceil(D * log2 N_SB)`.
/// When `p_ref` is given, the target is assumed refreshed once in Phase 1 at
/// PENDING `p_ref`; the split between phases moves but the attack total does
/// not.
pub fn hammer_bounds(device: &DeviceProfile, config: &MechanismConfig, p_ref: Option<u32>) -> Result<BoundsReport> {
    if config.n_subbanks == 0 {
        return Err(Error::Domain("N_SB must be at least 1".into()));
    }
    let d = u64::from(config.d);
    let log_n = p1max_upper(config.n_subbanks.into());
    let hc1_full = ceil_tol(d as f64 * log_n);
    let hc2a_full = d * schedule_rows(config, device.blast_radius);

    let (hc1, hc2a) = match p_ref {
        None => (hc1_full, hc2a_full),
        Some(p) => {
            let p_max = ceil_tol(log_n);
            if p < 1 || u64::from(p) > p_max {
                return Err(Error::Domain(format!("p_ref={p} outside [1, {p_max}]")));
            }
            let at_ref = d * u64::from(p);
            (at_ref, hc1_full + hc2a_full - at_ref)
        }
    };
    let hc2b = u64::from(device.window);
    let hc2 = hc2a + hc2b;
    let hc_attack = hc1 + hc2;
    let hc_ref = 2 * u64::from(device.blast_radius);
    let hc_total = hc_attack + hc_ref;
    let (num, den) = k_fraction(config.d, device.window, device.refresh_burst, config.scheme);
    Ok(BoundsReport {
        k: num as f64 / den as f64,
        k_upper: k_upper(config.d),
        p_p1max: log_n,
        hc1,
        hc2a,
        hc2b,
        hc2,
        hc_attack,
        hc_ref,
        hc_total,
        thc: hc_total,
        p_ref_used: p_ref,
    })
}

/// Table size from the three per-entry field widths. LOCAL_INDEX is sized
/// for the subbank's own rows; an EPRR schedule is longer than that, see
/// [`crate::mechanism::field_capacity`].
pub fn table_geometry(config: &MechanismConfig, refresh_burst: u32) -> TableGeometry {
    let mut clamped = false;
    let mut width = |x: f64| {
        let w = ceil_log2_real(x);
        if w < 1 {
            clamped = true;
            1
        } else {
            w as u32
        }
    };
    let frac_bits = width(f64::from(config.d));
    let pending_bits = width(p1max_upper(config.n_subbanks.into()) + f64::from(refresh_burst) / 2.0);
    let index_bits = width(f64::from(config.subbank_rows));
    let entry_bits = frac_bits + pending_bits + index_bits;
    let shared_entries = u64::from(config.n_subbanks).div_ceil(u64::from(config.sharing_factor.max(1)));
    let table_bits = u64::from(entry_bits) * shared_entries;
    let table_bytes = table_bits as f64 / 8.0;
    TableGeometry {
        frac_bits,
        pending_bits,
        index_bits,
        entry_bits,
        shared_entries,
        table_bits,
        table_bytes,
        dram_equiv_bytes: table_bytes * f64::from(config.sram_area_factor),
        clamped,
    }
}

/// Exact for powers of two.
pub(crate) fn log2_u64(n: u64) -> f64 {
    if n.is_power_of_two() {
        f64::from(n.trailing_zeros())
    } else {
        (n as f64).log2()
    }
}

pub(crate) fn ceil_tol(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= REL_TOL * x.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// `ceil(log2(x))`; `i32::MIN` for non-positive `x`.
pub(crate) fn ceil_log2_real(x: f64) -> i32 {
    if x <= 0.0 || !x.is_finite() {
        return i32::MIN;
    }
    let l = x.log2();
    let r = l.round();
    if (l - r).abs() <= REL_TOL * l.abs().max(1.0) {
        r as i32
    } else {
        l.ceil() as i32
    }
}

impl KeyValues for BoundsReport {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("k", format!("{:.9}", self.k)),
            ("k_upper", format!("{:.9}", self.k_upper)),
            ("p_p1max", format!("{}", self.p_p1max)),
            ("hc1", self.hc1.to_string()),
            ("hc2a", self.hc2a.to_string()),
            ("hc2b", self.hc2b.to_string()),
            ("hc2", self.hc2.to_string()),
            ("hc_attack", self.hc_attack.to_string()),
            ("hc_ref", self.hc_ref.to_string()),
            ("hc_total", self.hc_total.to_string()),
            ("thc", self.thc.to_string()),
            ("p_ref_used", self.p_ref_used.map_or_else(|| "none".into(), |p| p.to_string())),
        ]
    }
}

impl KeyValues for TableGeometry {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("frac_bits", self.frac_bits.to_string()),
            ("pending_bits", self.pending_bits.to_string()),
            ("index_bits", self.index_bits.to_string()),
            ("entry_bits", self.entry_bits.to_string()),
            ("shared_entries", self.shared_entries.to_string()),
            ("table_bits", self.table_bits.to_string()),
            ("table_bytes", self.table_bytes.to_string()),
            ("dram_equiv_bytes", self.dram_equiv_bytes.to_string()),
            ("clamped", self.clamped.to_string()),
        ]
    }
}

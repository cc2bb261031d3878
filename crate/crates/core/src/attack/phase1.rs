//! Arithmetic of the PENDING-raising phase: how many subbanks survive each
//! iteration.

use serde::Serialize;

use crate::analytic;
use crate::model::{DeviceProfile, MechanismConfig};

/// Subbank counts per iteration. Iteration `i` fires `n_per_iteration[i]`
/// subbanks; the last entry is the surviving target set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Phase1Schedule {
    pub n_per_iteration: Vec<u64>,
    /// Attacker activations each iteration needs to fire its set and
    /// recharge the next one.
    pub n_act_per_iteration: Vec<u64>,
    pub i_last: u32,
    pub achieved_p: u32,
}

impl Phase1Schedule {
    /// Repeatedly applies `N(i+1) = floor(k * N(i))` while it stays positive,
    /// with `k = num/den`.
    pub fn from_fraction(n0: u64, num: i64, den: i64, activations: impl Fn(u64, u64) -> u64) -> Self {
        let mut counts = vec![n0];
        if num > 0 && den > 0 && n0 > 0 {
            loop {
                let last = *counts.last().unwrap_or(&0);
                let next = (u128::from(last) * num as u128 / den as u128) as u64;
                if next == 0 || next >= last {
                    break;
                }
                counts.push(next);
            }
        }
        Self::from_counts(counts, activations)
    }

    /// Same recurrence with a real-valued factor, for exploring `k`
    /// independently of a configuration.
    pub fn from_factor(n0: u64, k: f64, activations: impl Fn(u64, u64) -> u64) -> Self {
        let mut counts = vec![n0];
        if k > 0.0 && k < 1.0 && n0 > 0 {
            loop {
                let last = *counts.last().unwrap_or(&0);
                // Snap values a rounding error below an integer, e.g. 0.5 * 8.
                let next = (k * last as f64 + analytic::REL_TOL).floor() as u64;
                if next == 0 || next >= last {
                    break;
                }
                counts.push(next);
            }
        }
        Self::from_counts(counts, activations)
    }

    fn from_counts(counts: Vec<u64>, activations: impl Fn(u64, u64) -> u64) -> Self {
        let n_act = counts.windows(2).map(|w| activations(w[0], w[1])).collect();
        let i_last = (counts.len() - 1) as u32;
        Self { n_per_iteration: counts, n_act_per_iteration: n_act, i_last, achieved_p: i_last }
    }
}

/// Phase 1 counts for a configuration, starting from every subbank.
pub fn plan_phase1(device: &DeviceProfile, config: &MechanismConfig) -> Phase1Schedule {
    let (num, den) = analytic::k_fraction(config.d, device.window, device.refresh_burst, config.scheme);
    let (d, t, r, scheme) = (config.d, device.window, device.refresh_burst, config.scheme);
    Phase1Schedule::from_fraction(config.n_subbanks.into(), num, den, |n, next| {
        analytic::iteration_step(n, next, d, t, r, scheme).n_act.ceil() as u64
    })
}

//! Exhaustive search over every activation sequence, for tiny banks.
//!
//! The search drives the mechanism state machine directly and memoizes on
//! the full state that influences future windows, so it is independent of
//! the closed-form bound it is used to check.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mechanism::{BankState, TraceEvent};
use crate::model::{DeviceProfile, MechanismConfig};

pub const MAX_SUBBANKS: u32 = 4;
pub const MAX_SUBBANK_ROWS: u32 = 4;
pub const MAX_HORIZON: u32 = 20;

/// Largest window any row can reach within `horizon` attacker activations.
pub fn exhaustive_oracle(device: &DeviceProfile, config: &MechanismConfig, horizon: u32) -> Result<u32> {
    let mut excess = Vec::new();
    if config.n_subbanks > MAX_SUBBANKS {
        excess.push(format!("N_SB={} > {MAX_SUBBANKS}", config.n_subbanks));
    }
    if config.subbank_rows > MAX_SUBBANK_ROWS {
        excess.push(format!("S_SB={} > {MAX_SUBBANK_ROWS}", config.subbank_rows));
    }
    if horizon > MAX_HORIZON {
        excess.push(format!("horizon={horizon} > {MAX_HORIZON}"));
    }
    if !excess.is_empty() {
        return Err(Error::SearchLimit(format!("reduce {} to search exhaustively", excess.join(", "))));
    }
    let root = BankState::new(device, config)?;
    let mut search = Search { memo: HashMap::new(), rows: device.bank_rows };
    Ok(search.best(&root, horizon))
}

struct Search {
    memo: HashMap<(Vec<u32>, u32), u32>,
    rows: u32,
}

impl Search {
    /// Best peak window over the next `h` activations.
    fn best(&mut self, state: &BankState, h: u32) -> u32 {
        if h == 0 {
            return 0;
        }
        let key = (state_key(state), h);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let mut best = 0;
        for row in 0..self.rows {
            let mut child = state.clone();
            child.reset_max_windows();
            child.apply_event(TraceEvent::Activate(row)).expect("row inside bank");
            let peak = child.max_window_per_row().iter().copied().max().unwrap_or(0);
            best = best.max(peak).max(self.best(&child, h - 1));
        }
        self.memo.insert(key, best);
        best
    }
}

fn state_key(state: &BankState) -> Vec<u32> {
    let mut key = Vec::with_capacity(state.entries().len() * 3 + state.window_counts().len() + 2);
    for e in state.entries() {
        key.extend([e.frac, e.pending, e.local_index]);
    }
    key.push(state.activations_in_window());
    key.push(state.rotate_pointer());
    key.extend_from_slice(state.window_counts());
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Scheme, TiePolicy};

    fn tiny(scheme: Scheme) -> (DeviceProfile, MechanismConfig) {
        (DeviceProfile::new(100, 1, 4, 1, 1), MechanismConfig::new(4, 2, 4, scheme))
    }

    #[test]
    fn zero_horizon() {
        let (d, c) = tiny(Scheme::ExtendedCounterRegion);
        assert_eq!(exhaustive_oracle(&d, &c, 0).unwrap(), 0);
    }

    #[test]
    fn one_activation_raises_one_window() {
        let (d, c) = tiny(Scheme::ExtendedCounterRegion);
        assert_eq!(exhaustive_oracle(&d, &c, 1).unwrap(), 1);
        assert_eq!(exhaustive_oracle(&d, &c, 3).unwrap(), 3);
    }

    #[test]
    fn guards_name_the_reduction() {
        let d = DeviceProfile::new(1000, 1, 40, 1, 1);
        let c = MechanismConfig::new(4, 8, 40, Scheme::ExtendedCounterRegion);
        match exhaustive_oracle(&d, &c, 21) {
            Err(Error::SearchLimit(msg)) => {
                assert!(msg.contains("N_SB=5") && msg.contains("S_SB=8") && msg.contains("horizon=21"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bounded_by_lowest_index_policy_too() {
        let (d, c) = tiny(Scheme::ExtendedCounterRegion);
        let c = c.with_tie_policy(TiePolicy::LowestIndexFirst);
        assert!(exhaustive_oracle(&d, &c, 10).unwrap() <= 10);
    }
}

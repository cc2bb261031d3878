//! Two-phase worst-case attack.
//!
//! Phase 1 charges every subbank to one hammer short of producing a refresh,
//! then repeatedly fires the current set together and keeps only the
//! subbanks the consumer will reach last, so the target's PENDING climbs by
//! one per iteration. Phase 2 hammers rows next to the target's most recently
//! refreshed row until the consumer gets back to it.
//!
//! Planning runs the mechanism alongside, so the emitted trace reacts to
//! what the consumer actually does.

use std::fmt::Write as _;

use serde::Serialize;

use super::phase1::{plan_phase1, Phase1Schedule};
use crate::analytic;
use crate::error::{Error, Result};
use crate::mechanism::{BankState, TraceEvent};
use crate::model::{DeviceProfile, MechanismConfig, Scheme, TiePolicy};
use crate::report::KeyValues;
use crate::trace::push_event;

/// Extra charging passes allowed when consumer bursts disturb FRAC values.
const RETOP_PASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WavePlan {
    pub schedule: Phase1Schedule,
    pub init_events: Vec<TraceEvent>,
    pub iteration_events: Vec<Vec<TraceEvent>>,
    pub target_subbank: u32,
    pub victim_row: u32,
    pub p_ref: Option<u32>,
    pub phase2_events: Vec<TraceEvent>,
    /// Target PENDING when Phase 2 starts.
    pub achieved_p: u32,
    /// Whether Phase 2 ended with the victim being refreshed.
    pub victim_refreshed: bool,
}

impl WavePlan {
    pub fn phase1_len(&self) -> usize {
        self.init_events.len() + self.iteration_events.iter().map(Vec::len).sum::<usize>()
    }

    pub fn len(&self) -> usize {
        self.phase1_len() + self.phase2_events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn events(&self) -> impl Iterator<Item = TraceEvent> + '_ {
        self.init_events
            .iter()
            .chain(self.iteration_events.iter().flatten())
            .chain(self.phase2_events.iter())
            .copied()
    }

    /// Trace-file text with `# phase:` markers between segments.
    pub fn to_trace_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# wave attack: target_subbank={} victim_row={} achieved_p={}",
            self.target_subbank, self.victim_row, self.achieved_p
        );
        out.push_str("# phase: init\n");
        self.init_events.iter().for_each(|e| push_event(&mut out, *e));
        for (i, events) in self.iteration_events.iter().enumerate() {
            let _ = writeln!(out, "# phase: iteration {i}");
            events.iter().for_each(|e| push_event(&mut out, *e));
        }
        out.push_str("# phase: 2\n");
        self.phase2_events.iter().for_each(|e| push_event(&mut out, *e));
        out
    }
}

/// Subbank the attacker aims at: the one a tie-break reaches last.
pub fn default_target(config: &MechanismConfig) -> u32 {
    match config.tie_policy {
        TiePolicy::AdversarialNonTargetLast { target_subbank } => target_subbank,
        TiePolicy::LowestIndexFirst | TiePolicy::RotatingStart => config.n_subbanks - 1,
    }
}

struct Planner {
    sim: BankState,
    events: Vec<TraceEvent>,
    target: u32,
    d: u32,
    scheme: Scheme,
    n: u32,
}

impl Planner {
    fn act(&mut self, row: u32) {
        self.sim.apply_event(TraceEvent::Activate(row)).expect("planner rows lie inside the bank");
        self.events.push(TraceEvent::Activate(row));
    }

    fn take(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.events)
    }

    fn frac(&self, sb: u32) -> u32 {
        self.sim.entry(sb).frac
    }

    /// Row shared by the counter regions of `x` and `x + 1`.
    fn overlap_row(&self, x: u32) -> Option<u32> {
        if self.scheme != Scheme::ExtendedCounterRegion || x + 1 >= self.n {
            return None;
        }
        let row = self.sim.layout().subbank_rows_range(x + 1).start - 1;
        (self.sim.layout().counter_set(row) == [x, x + 1]).then_some(row)
    }

    /// Row hammering `x` alone, or failing that one whose extra subbank is
    /// outside `protect`.
    fn solo_row(&self, x: u32, protect: &[u32]) -> u32 {
        let layout = self.sim.layout();
        let range = layout.subbank_rows_range(x);
        range
            .clone()
            .find(|&r| layout.counter_set(r).len() == 1)
            .or_else(|| range.clone().find(|&r| layout.counter_set(r).iter().all(|s| *s == x || !protect.contains(s))))
            .unwrap_or(range.start)
    }

    /// Brings every subbank in `set` to FRAC = D - 1.
    fn charge(&mut self, set: &[u32]) {
        let top = self.d - 1;
        for _ in 0..=RETOP_PASSES {
            for (x, pair) in pairs(set, |x| self.overlap_row(x)) {
                if let Some(row) = pair {
                    while self.frac(x) < top && self.frac(x + 1) < top {
                        self.act(row);
                    }
                }
            }
            for &x in set {
                let row = self.solo_row(x, set);
                let mut budget = self.d;
                while self.frac(x) < top && budget > 0 {
                    self.act(row);
                    budget -= 1;
                }
            }
            if set.iter().all(|&x| self.frac(x) == top) {
                return;
            }
        }
    }

    /// One hammer for each charged subbank in `set`, pairs sharing a row.
    fn fire(&mut self, set: &[u32]) {
        let top = self.d - 1;
        for (x, pair) in pairs(set, |x| self.overlap_row(x)) {
            match pair {
                Some(row) if self.frac(x) == top && self.frac(x + 1) == top => self.act(row),
                _ => {
                    for sb in [x, x + 1] {
                        if set.contains(&sb) && self.frac(sb) == top {
                            let row = self.solo_row(sb, set);
                            self.act(row);
                        }
                    }
                }
            }
        }
        for &x in set {
            if pairs(set, |x| self.overlap_row(x)).iter().any(|(p, _)| *p == x || *p + 1 == x) {
                continue;
            }
            if self.frac(x) == top {
                let row = self.solo_row(x, set);
                self.act(row);
            }
        }
    }

    /// The `size` subbanks with the highest PENDING, preferring those the
    /// consumer serves last. The target is always kept.
    fn select(&self, size: u64) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.n).filter(|&x| x != self.target).collect();
        order.sort_by(|&a, &b| self.sim.entry(b).pending.cmp(&self.sim.entry(a).pending).then(b.cmp(&a)));
        let mut out = vec![self.target];
        out.extend(order.into_iter().take(size.saturating_sub(1) as usize));
        out.sort_unstable();
        out
    }

    /// Hammers the least loaded other subbank until the consumer refreshes
    /// the target once.
    fn wait_for_target_refresh(&mut self, cap: usize) {
        let start = self.sim.refresh_log().len();
        let idle = (0..self.n)
            .filter(|&x| x != self.target)
            // An adjacent subbank's refreshes would spill hammers into the target.
            .min_by_key(|&x| (x.abs_diff(self.target) == 1, self.sim.entry(x).pending, std::cmp::Reverse(x)));
        let Some(idle) = idle else { return };
        let t = self.target;
        let row = self.solo_row(idle, &[t.wrapping_sub(1), t, t + 1]);
        for _ in 0..cap {
            if self.sim.refresh_log()[start..].iter().any(|r| r.subbank == self.target) {
                return;
            }
            self.act(row);
        }
    }
}

/// Groups `set` into adjacent pairs `(x, x+1)` that share an overlap row;
/// unpaired members are left out.
fn pairs(set: &[u32], overlap: impl Fn(u32) -> Option<u32>) -> Vec<(u32, Option<u32>)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < set.len() {
        let x = set[i];
        if set[i + 1] == x + 1 {
            if let Some(row) = overlap(x) {
                out.push((x, Some(row)));
                i += 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Aggressor rows within `B` of `victim` that hammer `target`, nearest
/// first, alternating below and above.
///
/// Rows counted only by `target` are preferred: a row that also charges a
/// neighbour makes that neighbour refresh rows next to the target, which
/// feeds the target's counter without touching the victim.
fn aggressors(sim: &BankState, victim: u32, target: u32) -> Vec<u32> {
    let layout = sim.layout();
    let mut rows = Vec::new();
    for dist in 1..=layout.blast_radius {
        let below = victim.checked_sub(dist);
        let above = victim.checked_add(dist).filter(|&r| r < layout.bank_rows);
        for r in [below, above].into_iter().flatten() {
            if layout.counter_set(r).contains(&target) {
                rows.push(r);
            }
        }
    }
    let solo: Vec<u32> = rows.iter().copied().filter(|&r| layout.counter_set(r) == [target]).collect();
    if !solo.is_empty() {
        rows = solo;
    }
    if rows.is_empty() {
        // Victim outside the target's reach; fall back to the target's own rows.
        rows.extend(layout.subbank_rows_range(target).filter(|&r| r != victim).take(2));
    }
    rows
}

/// Synthesizes the attack trace for a seeded bank.
///
/// With `p_ref`, the planner lets the consumer refresh the target once when
/// its PENDING reaches `p_ref`; that row becomes the victim.
pub fn plan_wave(device: &DeviceProfile, config: &MechanismConfig, p_ref: Option<u32>) -> Result<WavePlan> {
    let bounds = analytic::hammer_bounds(device, config, p_ref)?;
    let mut sim = BankState::new(device, config)?;
    sim.record_refreshes();
    let schedule = plan_phase1(device, config);
    let target = default_target(config);
    if target >= config.n_subbanks {
        return Err(Error::Constraint(format!("target subbank {target} outside {} subbanks", config.n_subbanks)));
    }
    let mut p = Planner { sim, events: Vec::new(), target, d: config.d, scheme: config.scheme, n: config.n_subbanks };
    let wait_cap = 4 * (device.window as usize + 1) * config.n_subbanks as usize * (config.d as usize + 1);

    let all: Vec<u32> = (0..config.n_subbanks).collect();
    p.charge(&all);
    let init_events = p.take();

    let mut current = all;
    let mut iteration_events = Vec::new();
    let wait_after = p_ref.map(|r| r.min(schedule.i_last));
    for i in 0..schedule.i_last as usize {
        p.fire(&current);
        if wait_after == Some(i as u32 + 1) {
            p.wait_for_target_refresh(wait_cap);
        }
        current = p.select(schedule.n_per_iteration[i + 1]);
        if i + 1 < schedule.i_last as usize {
            p.charge(&current);
        }
        iteration_events.push(p.take());
    }

    let achieved_p = p.sim.entry(target).pending;
    // Refreshes still pending would bring the victim back early, so let
    // them drain first; the row refreshed last is then the victim.
    while p.sim.entry(target).pending > 0 {
        let before = p.events.len();
        p.wait_for_target_refresh(wait_cap);
        if p.events.len() == before {
            break;
        }
    }
    let victim_pos = p.sim.most_recent_position(target);
    let victim_row = p.sim.layout().schedule(target)[victim_pos as usize];
    let rows = aggressors(&p.sim, victim_row, target);
    let cap = 2 * bounds.thc as usize;
    let mut victim_refreshed = false;
    for j in 0..cap {
        let before = p.sim.refresh_log().len();
        p.act(rows[j % rows.len()]);
        if p.sim.refresh_log()[before..].iter().any(|r| r.row == victim_row) {
            victim_refreshed = true;
            break;
        }
    }
    let phase2_events = p.take();

    Ok(WavePlan {
        schedule,
        init_events,
        iteration_events,
        target_subbank: target,
        victim_row,
        p_ref,
        phase2_events,
        achieved_p,
        victim_refreshed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackOutcome {
    /// Hammers on the target subbank during Phase 1.
    pub hc_phase1: u64,
    pub hc_phase2: u64,
    /// Largest window the victim row reached during Phase 2.
    pub max_victim_window: u32,
    /// Largest window any row reached over the whole trace.
    pub max_any_window: u32,
    pub thc: u64,
    /// `thc - max_victim_window`; negative means the bound was exceeded.
    pub bound_gap: i64,
    pub victim_row: u32,
    pub achieved_p: u32,
    pub victim_refreshed: bool,
    pub victim_refreshed_before_uhc: bool,
    pub max_pending_observed: u32,
    pub events: usize,
    pub safe: bool,
}

impl KeyValues for AttackOutcome {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hc_phase1", self.hc_phase1.to_string()),
            ("hc_phase2", self.hc_phase2.to_string()),
            ("max_victim_window", self.max_victim_window.to_string()),
            ("max_any_window", self.max_any_window.to_string()),
            ("thc", self.thc.to_string()),
            ("bound_gap", self.bound_gap.to_string()),
            ("victim_row", self.victim_row.to_string()),
            ("achieved_p", self.achieved_p.to_string()),
            ("victim_refreshed", self.victim_refreshed.to_string()),
            ("victim_refreshed_before_uhc", self.victim_refreshed_before_uhc.to_string()),
            ("max_pending_observed", self.max_pending_observed.to_string()),
            ("events", self.events.to_string()),
            ("safe", self.safe.to_string()),
        ]
    }
}

/// Replays `plan` on a fresh bank and measures it against the bound.
pub fn execute(device: &DeviceProfile, config: &MechanismConfig, plan: &WavePlan) -> Result<AttackOutcome> {
    let thc = analytic::thc(device, config);
    let mut sim = BankState::new(device, config)?;
    let target = plan.target_subbank as usize;
    for e in plan.init_events.iter().chain(plan.iteration_events.iter().flatten()) {
        sim.apply_event(*e)?;
    }
    let hc_phase1 = sim.subbank_hammers()[target];
    let max_phase1 = sim.stats().max_window_observed;
    sim.reset_max_windows();
    for e in &plan.phase2_events {
        sim.apply_event(*e)?;
    }
    let hc_phase2 = sim.subbank_hammers()[target] - hc_phase1;
    let max_victim_window = sim.max_window_per_row()[plan.victim_row as usize];
    let max_any_window = max_phase1.max(sim.stats().max_window_observed);
    Ok(AttackOutcome {
        hc_phase1,
        hc_phase2,
        max_victim_window,
        max_any_window,
        thc,
        bound_gap: thc as i64 - i64::from(max_victim_window),
        victim_row: plan.victim_row,
        achieved_p: plan.achieved_p,
        victim_refreshed: plan.victim_refreshed,
        victim_refreshed_before_uhc: plan.victim_refreshed && u64::from(max_victim_window) < device.uhc_dram,
        max_pending_observed: sim.stats().max_pending_observed,
        events: plan.len(),
        safe: u64::from(max_any_window) < device.uhc_dram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{run_trace, ConfigMode};

    fn setup(d: u32, t: u32, r: u32, b: u32, s: u32, n: u32, scheme: Scheme) -> (DeviceProfile, MechanismConfig) {
        let config = MechanismConfig::new(d, s, s * n, scheme);
        let mut device = DeviceProfile::new(1, b, s * n, r, t);
        device.uhc_dram = analytic::thc(&device, &config) + 1;
        (device, config)
    }

    #[test]
    fn small_config_reaches_phase2_floor() {
        let (device, config) = setup(4, 1, 1, 1, 2, 4, Scheme::ExtendedCounterRegion);
        let plan = plan_wave(&device, &config, None).unwrap();
        let out = execute(&device, &config, &plan).unwrap();
        assert!(out.max_victim_window >= 8, "{out:?}");
        assert!(out.bound_gap >= 0, "{out:?}");
        assert!(out.victim_refreshed);
    }

    #[test]
    fn trace_text_replays_identically() {
        let (device, config) = setup(6, 2, 1, 1, 4, 4, Scheme::ExtendedCounterRegion);
        let plan = plan_wave(&device, &config, None).unwrap();
        let text = plan.to_trace_text();
        assert!(text.contains("# phase: init") && text.contains("# phase: 2"));
        let events = crate::trace::parse_trace(&text).unwrap();
        assert_eq!(events, plan.events().collect::<Vec<_>>());
        let rep = run_trace(&device, &config, events, ConfigMode::Strict).unwrap();
        let out = execute(&device, &config, &plan).unwrap();
        assert_eq!(rep.max_window, out.max_any_window);
    }

    #[test]
    fn empty_phase2_counts_nothing() {
        let (device, config) = setup(6, 2, 1, 1, 4, 4, Scheme::ExtendedCounterRegion);
        let mut plan = plan_wave(&device, &config, None).unwrap();
        plan.phase2_events.clear();
        assert_eq!(execute(&device, &config, &plan).unwrap().hc_phase2, 0);
    }

    #[test]
    fn p_ref_victim_is_the_refreshed_row() {
        let (device, config) = setup(10, 4, 1, 2, 8, 8, Scheme::ExtendedCounterRegion);
        let plan = plan_wave(&device, &config, Some(1)).unwrap();
        let mut sim = BankState::new(&device, &config).unwrap();
        sim.record_refreshes();
        for e in plan.events() {
            sim.apply_event(e).unwrap();
        }
        assert!(plan.victim_refreshed);
        // Phase 2 covers one full round of the target's schedule, starting
        // and ending on the victim.
        let rows: Vec<u32> =
            sim.refresh_log().iter().filter(|r| r.subbank == plan.target_subbank).map(|r| r.row).collect();
        let len = sim.layout().schedule(plan.target_subbank).len();
        assert!(rows.len() > len);
        assert_eq!(rows[rows.len() - 1], plan.victim_row);
        assert_eq!(rows[rows.len() - 1 - len], plan.victim_row);
    }

    #[test]
    fn phase2_starts_with_target_drained() {
        let (device, config) = setup(12, 4, 1, 1, 2, 8, Scheme::ExtendedCounterRegion);
        let plan = plan_wave(&device, &config, None).unwrap();
        let out = execute(&device, &config, &plan).unwrap();
        assert!(plan.achieved_p > 0);
        assert!(out.max_victim_window > config.d * (config.subbank_rows - 1), "{out:?}");
    }

    #[test]
    fn p_ref_out_of_range() {
        let (device, config) = setup(6, 2, 1, 1, 4, 4, Scheme::ExtendedCounterRegion);
        assert!(matches!(plan_wave(&device, &config, Some(3)), Err(Error::Domain(_))));
    }
}

//! Activation-granularity model of one protected bank.
//!
//! Every hammer of a subbank increments its FRAC; reaching D resets FRAC
//! and enqueues one preventive refresh (PENDING). After every `T` attacker
//! activations the consumer performs up to `R` refreshes, each time picking
//! the subbank with the highest PENDING and refreshing the row its
//! LOCAL_INDEX points at. Refreshes are themselves hammers; whatever they
//! produce is held back until the following burst.
//!
//! Victim exposure is tracked per row as the number of hammers received by
//! the subbanks whose preventive-refresh region contains the row, since the
//! row was last refreshed.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, DeviceProfile, MechanismConfig, Scheme, TiePolicy};
use crate::report::KeyValues;

/// Per-subbank table entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct SubbankEntry {
    pub frac: u32,
    pub pending: u32,
    pub local_index: u32,
}

/// One input to the bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TraceEvent {
    Activate(u32),
    PeriodicRefresh(u32),
}

impl TraceEvent {
    pub fn row(self) -> u32 {
        match self {
            TraceEvent::Activate(r) | TraceEvent::PeriodicRefresh(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BankStats {
    pub total_activations: u64,
    pub total_preventive_refreshes: u64,
    pub total_periodic_refreshes: u64,
    pub total_produced: u64,
    pub max_pending_observed: u32,
    pub max_window_observed: u32,
}

/// A preventive refresh performed by the consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RefreshRecord {
    /// Attacker activations applied before the burst.
    pub at_activation: u64,
    pub subbank: u32,
    pub position: u32,
    pub row: u32,
}

/// Row-to-subbank geometry shared by every state of one configuration.
#[derive(Debug)]
pub struct BankLayout {
    pub bank_rows: u32,
    pub subbank_rows: u32,
    pub n_subbanks: u32,
    pub blast_radius: u32,
    pub scheme: Scheme,
    schedules: Vec<Vec<u32>>,
    counter_sets: Vec<Vec<u32>>,
    region_rows: Vec<Vec<u32>>,
    window_owners: Vec<Vec<u32>>,
}

impl BankLayout {
    pub fn new(device: &DeviceProfile, config: &MechanismConfig) -> Result<Self> {
        let (s, n, b) = (config.subbank_rows, config.n_subbanks, device.blast_radius);
        if s == 0 || n == 0 || u64::from(s) * u64::from(n) != u64::from(device.bank_rows) {
            return Err(Error::Constraint(format!(
                "bank of {} rows cannot be split into {n} subbanks of {s} rows",
                device.bank_rows
            )));
        }
        if config.scheme == Scheme::ExtendedPreventiveRefreshRegion && u64::from(s) < 2 * u64::from(b) {
            return Err(Error::Constraint(format!("EPRR schedule needs S_SB={s} >= 2B={}", 2 * b)));
        }
        let rows = device.bank_rows;
        let counter_sets = (0..rows).map(|r| counter_region_subbanks(r, config, b)).collect();
        let window_owners: Vec<Vec<u32>> = (0..rows)
            .map(|r| match config.scheme {
                Scheme::ExtendedCounterRegion => vec![r / s],
                // Margin rows belong to the refresh regions of both neighbours.
                Scheme::ExtendedPreventiveRefreshRegion => neighbourhood(r, s, n, b),
            })
            .collect();
        let mut region_rows = vec![Vec::new(); n as usize];
        for (r, owners) in window_owners.iter().enumerate() {
            for &sb in owners {
                region_rows[sb as usize].push(r as u32);
            }
        }
        let schedules = (0..n).map(|sb| build_schedule(sb, s, b, rows, config.scheme)).collect();
        Ok(Self {
            bank_rows: rows,
            subbank_rows: s,
            n_subbanks: n,
            blast_radius: b,
            scheme: config.scheme,
            schedules,
            counter_sets,
            region_rows,
            window_owners,
        })
    }

    pub fn schedule(&self, subbank: u32) -> &[u32] {
        &self.schedules[subbank as usize]
    }

    /// Subbanks hammered when `row` is activated or refreshed.
    pub fn counter_set(&self, row: u32) -> &[u32] {
        &self.counter_sets[row as usize]
    }

    /// Subbanks whose preventive-refresh region contains `row`.
    pub fn window_owners(&self, row: u32) -> &[u32] {
        &self.window_owners[row as usize]
    }

    pub fn owner(&self, row: u32) -> u32 {
        row / self.subbank_rows
    }

    pub fn subbank_rows_range(&self, subbank: u32) -> std::ops::Range<u32> {
        subbank * self.subbank_rows..(subbank + 1) * self.subbank_rows
    }
}

fn neighbourhood(row: u32, s: u32, n: u32, b: u32) -> Vec<u32> {
    let owner = row / s;
    let offset = row - owner * s;
    let mut out = vec![owner];
    if owner > 0 && offset < b {
        out.push(owner - 1);
    }
    if owner + 1 < n && s - 1 - offset < b {
        out.push(owner + 1);
    }
    out.sort_unstable();
    out
}

/// Subbanks whose counter region contains `row`.
///
/// ECR: the owner plus any neighbour within `B` rows; EPRR: the owner only.
pub fn counter_region_subbanks(row: u32, config: &MechanismConfig, blast_radius: u32) -> Vec<u32> {
    let s = config.subbank_rows;
    match config.scheme {
        Scheme::ExtendedCounterRegion => neighbourhood(row, s, config.n_subbanks, blast_radius),
        Scheme::ExtendedPreventiveRefreshRegion => vec![row / s],
    }
}

/// Round-robin order of refreshed rows for one subbank.
///
/// Under EPRR the margin rows (external and internal, ascending) appear
/// twice, `margins + floor(core/2)` positions apart, with the core split
/// between the two halves.
fn build_schedule(sb: u32, s: u32, b: u32, rows: u32, scheme: Scheme) -> Vec<u32> {
    let start = sb * s;
    let end = start + s;
    match scheme {
        Scheme::ExtendedCounterRegion => (start..end).collect(),
        Scheme::ExtendedPreventiveRefreshRegion => {
            let mut margins: Vec<u32> = (start.saturating_sub(b)..start).collect();
            margins.extend(start..start + b);
            margins.extend(end - b..end);
            margins.extend(end..(end + b).min(rows));
            let core: Vec<u32> = (start + b..end - b).collect();
            let half = core.len() / 2;
            let mut out = margins.clone();
            out.extend_from_slice(&core[..half]);
            out.extend_from_slice(&margins);
            out.extend_from_slice(&core[half..]);
            out
        }
    }
}

/// Live state of one protected bank.
#[derive(Debug, Clone)]
pub struct BankState {
    layout: Arc<BankLayout>,
    d: u32,
    burst: u32,
    window: u32,
    policy: TiePolicy,
    entries: Vec<SubbankEntry>,
    window_counts: Vec<u32>,
    max_window_per_row: Vec<u32>,
    activations_in_window: u32,
    rotate_next: u32,
    last_refreshed: Vec<Option<u32>>,
    deferred: Vec<u32>,
    in_burst: bool,
    stats: BankStats,
    subbank_hammers: Vec<u64>,
    events_applied: usize,
    refresh_log: Option<Vec<RefreshRecord>>,
}

impl BankState {
    pub fn new(device: &DeviceProfile, config: &MechanismConfig) -> Result<Self> {
        if config.d == 0 || device.window == 0 || device.refresh_burst == 0 {
            return Err(Error::Constraint("D, T and R must be positive".into()));
        }
        let layout = Arc::new(BankLayout::new(device, config)?);
        let n = layout.n_subbanks as usize;
        let rows = layout.bank_rows as usize;
        Ok(Self {
            layout,
            d: config.d,
            burst: device.refresh_burst,
            window: device.window,
            policy: config.tie_policy,
            entries: vec![SubbankEntry::default(); n],
            window_counts: vec![0; rows],
            max_window_per_row: vec![0; rows],
            activations_in_window: 0,
            rotate_next: 0,
            last_refreshed: vec![None; n],
            deferred: vec![0; n],
            in_burst: false,
            stats: BankStats::default(),
            subbank_hammers: vec![0; n],
            events_applied: 0,
            refresh_log: None,
        })
    }

    /// Keeps a log of every preventive refresh from now on.
    pub fn record_refreshes(&mut self) {
        self.refresh_log.get_or_insert_with(Vec::new);
    }

    pub fn refresh_log(&self) -> &[RefreshRecord] {
        self.refresh_log.as_deref().unwrap_or(&[])
    }

    pub fn layout(&self) -> &BankLayout {
        &self.layout
    }

    pub fn entries(&self) -> &[SubbankEntry] {
        &self.entries
    }

    pub fn entry(&self, subbank: u32) -> SubbankEntry {
        self.entries[subbank as usize]
    }

    pub fn window_count(&self, row: u32) -> u32 {
        self.window_counts[row as usize]
    }

    pub fn window_counts(&self) -> &[u32] {
        &self.window_counts
    }

    pub fn max_window_per_row(&self) -> &[u32] {
        &self.max_window_per_row
    }

    pub fn activations_in_window(&self) -> u32 {
        self.activations_in_window
    }

    pub fn rotate_pointer(&self) -> u32 {
        self.rotate_next
    }

    pub fn stats(&self) -> BankStats {
        self.stats
    }

    /// Hammers each subbank has received, from activations and refreshes alike.
    pub fn subbank_hammers(&self) -> &[u64] {
        &self.subbank_hammers
    }

    /// Restarts per-row maximum tracking from the current window values.
    pub fn reset_max_windows(&mut self) {
        self.max_window_per_row.copy_from_slice(&self.window_counts);
    }

    pub fn events_applied(&self) -> usize {
        self.events_applied
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn refresh_burst(&self) -> u32 {
        self.burst
    }

    pub fn policy(&self) -> TiePolicy {
        self.policy
    }

    /// Schedule position most recently refreshed in `subbank`. Before any
    /// refresh the bank is taken to sit at the end of a completed pass, so
    /// the last position counts as the most recent.
    pub fn most_recent_position(&self, subbank: u32) -> u32 {
        self.last_refreshed[subbank as usize]
            .unwrap_or(self.layout.schedule(subbank).len() as u32 - 1)
    }

    pub fn max_pending(&self) -> u32 {
        self.entries.iter().map(|e| e.pending).max().unwrap_or(0)
    }

    /// One hammer on `subbank`; returns 1 when it enqueues a refresh.
    pub fn hammer_subbank(&mut self, subbank: u32) -> u32 {
        let sb = subbank as usize;
        self.subbank_hammers[sb] += 1;
        let layout = Arc::clone(&self.layout);
        for &row in &layout.region_rows[sb] {
            let w = &mut self.window_counts[row as usize];
            *w += 1;
            let m = &mut self.max_window_per_row[row as usize];
            if *w > *m {
                *m = *w;
                self.stats.max_window_observed = self.stats.max_window_observed.max(*w);
            }
        }
        let entry = &mut self.entries[sb];
        entry.frac += 1;
        if entry.frac < self.d {
            return 0;
        }
        entry.frac = 0;
        self.stats.total_produced += 1;
        if self.in_burst {
            self.deferred[sb] += 1;
        } else {
            entry.pending += 1;
            self.stats.max_pending_observed = self.stats.max_pending_observed.max(entry.pending);
        }
        1
    }

    fn hammer_row(&mut self, row: u32) {
        let layout = Arc::clone(&self.layout);
        for &sb in layout.counter_set(row) {
            self.hammer_subbank(sb);
        }
    }

    fn refresh_row(&mut self, row: u32) {
        self.window_counts[row as usize] = 0;
        self.hammer_row(row);
    }

    fn check_row(&self, row: u32) -> Result<()> {
        if row >= self.layout.bank_rows {
            return Err(Error::Trace {
                ordinal: self.events_applied,
                message: format!("row {row} outside bank of {} rows", self.layout.bank_rows),
            });
        }
        Ok(())
    }

    /// Applies one event; an attacker activation that completes a window
    /// triggers the consumer burst.
    pub fn apply_event(&mut self, event: TraceEvent) -> Result<()> {
        self.check_row(event.row())?;
        match event {
            TraceEvent::Activate(row) => {
                self.stats.total_activations += 1;
                self.hammer_row(row);
                self.activations_in_window += 1;
                if self.activations_in_window == self.window {
                    self.consumer_burst();
                    self.activations_in_window = 0;
                }
            }
            TraceEvent::PeriodicRefresh(row) => {
                self.stats.total_periodic_refreshes += 1;
                self.refresh_row(row);
            }
        }
        self.events_applied += 1;
        Ok(())
    }

    /// Subbank the consumer would serve next, if any has pending refreshes.
    pub fn select_next(&self) -> Option<u32> {
        let max = self.max_pending();
        if max == 0 {
            return None;
        }
        let mut candidates = self.entries.iter().enumerate().filter(|(_, e)| e.pending == max).map(|(i, _)| i as u32);
        match self.policy {
            TiePolicy::LowestIndexFirst => candidates.next(),
            TiePolicy::AdversarialNonTargetLast { target_subbank } => {
                let all: Vec<u32> = candidates.collect();
                all.iter().copied().find(|&i| i != target_subbank).or(all.first().copied())
            }
            TiePolicy::RotatingStart => {
                let all: Vec<u32> = candidates.collect();
                all.iter().copied().find(|&i| i >= self.rotate_next).or(all.first().copied())
            }
        }
    }

    /// Performs up to `R` preventive refreshes, re-selecting before each.
    pub fn consumer_burst(&mut self) -> u32 {
        self.in_burst = true;
        let mut done = 0;
        while done < self.burst {
            let Some(sb) = self.select_next() else { break };
            let schedule_len = self.layout.schedule(sb).len() as u32;
            let entry = &mut self.entries[sb as usize];
            entry.pending -= 1;
            let position = entry.local_index;
            entry.local_index = (position + 1) % schedule_len;
            let row = self.layout.schedule(sb)[position as usize];
            self.last_refreshed[sb as usize] = Some(position);
            if let TiePolicy::RotatingStart = self.policy {
                self.rotate_next = (sb + 1) % self.layout.n_subbanks;
            }
            self.stats.total_preventive_refreshes += 1;
            if let Some(log) = self.refresh_log.as_mut() {
                log.push(RefreshRecord { at_activation: self.stats.total_activations, subbank: sb, position, row });
            }
            self.refresh_row(row);
            done += 1;
        }
        self.in_burst = false;
        for (entry, deferred) in self.entries.iter_mut().zip(self.deferred.iter_mut()) {
            entry.pending += *deferred;
            *deferred = 0;
            self.stats.max_pending_observed = self.stats.max_pending_observed.max(entry.pending);
        }
        done
    }

    pub fn report(&self, uhc_dram: u64) -> SimReport {
        let (max_window_row, max_window) = self
            .max_window_per_row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(r, &w)| (r as u32, w))
            .unwrap_or((0, 0));
        SimReport {
            events: self.events_applied,
            activations: self.stats.total_activations,
            refresh_count: self.stats.total_preventive_refreshes,
            periodic_refreshes: self.stats.total_periodic_refreshes,
            max_window,
            max_window_row,
            max_pending_observed: self.stats.max_pending_observed,
            safe: u64::from(max_window) < uhc_dram,
            max_window_per_row: self.max_window_per_row.clone(),
        }
    }
}

/// Outcome of replaying one trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub events: usize,
    pub activations: u64,
    pub refresh_count: u64,
    pub periodic_refreshes: u64,
    pub max_window: u32,
    pub max_window_row: u32,
    pub max_pending_observed: u32,
    pub safe: bool,
    pub max_window_per_row: Vec<u32>,
}

impl KeyValues for SimReport {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("events", self.events.to_string()),
            ("activations", self.activations.to_string()),
            ("refresh_count", self.refresh_count.to_string()),
            ("periodic_refreshes", self.periodic_refreshes.to_string()),
            ("max_window", self.max_window.to_string()),
            ("max_window_row", self.max_window_row.to_string()),
            ("max_pending_observed", self.max_pending_observed.to_string()),
            ("safe", self.safe.to_string()),
        ]
    }
}

/// Whether [`run_trace`] insists on a configuration passing validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigMode {
    Strict,
    /// Replays any structurally simulable configuration.
    AllowUnsafe,
}

/// Replays `events` on a fresh bank.
pub fn run_trace<I>(device: &DeviceProfile, config: &MechanismConfig, events: I, mode: ConfigMode) -> Result<SimReport>
where
    I: IntoIterator<Item = TraceEvent>,
{
    if mode == ConfigMode::Strict {
        let violations = model::validate(device, config);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::Constraint(list.join("; ")));
        }
    }
    let mut state = BankState::new(device, config)?;
    for event in events {
        state.apply_event(event)?;
    }
    Ok(state.report(device.uhc_dram))
}

/// Field widths needed by the observed values, checked against what the
/// table allocates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FieldCapacity {
    pub frac_fits: bool,
    pub pending_fits: bool,
    pub local_index_fits: bool,
}

impl FieldCapacity {
    pub fn all(&self) -> bool {
        self.frac_fits && self.pending_fits && self.local_index_fits
    }
}

/// FRAC against `ceil(log2 D)` bits and PENDING against the table's PENDING
/// width; LOCAL_INDEX against `ceil(log2 schedule length)` bits, which under
/// EPRR is wider than the table's index field.
pub fn field_capacity(state: &BankState, config: &MechanismConfig) -> FieldCapacity {
    let layout = state.layout();
    let geometry = crate::analytic::table_geometry(config, state.refresh_burst());
    let fits = |value: u64, bits: u32| bits >= 64 || value < (1u64 << bits);
    let width = |n: u64| (64 - n.saturating_sub(1).leading_zeros()).max(1);
    let longest_schedule = (0..layout.n_subbanks).map(|sb| layout.schedule(sb).len() as u64).max().unwrap_or(1);
    FieldCapacity {
        frac_fits: fits(u64::from(state.d() - 1), geometry.frac_bits),
        pending_fits: fits(u64::from(state.stats().max_pending_observed), geometry.pending_bits),
        local_index_fits: fits(longest_schedule - 1, width(longest_schedule)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme::{ExtendedCounterRegion as Ecr, ExtendedPreventiveRefreshRegion as Eprr};

    fn setup(d: u32, t: u32, r: u32, b: u32, s: u32, n: u32, scheme: Scheme, policy: TiePolicy) -> (DeviceProfile, MechanismConfig) {
        let device = DeviceProfile::new(1_000_000, b, s * n, r, t);
        let config = MechanismConfig::new(d, s, s * n, scheme).with_tie_policy(policy);
        (device, config)
    }

    #[test]
    fn counter_regions() {
        let (_, c) = setup(4, 1, 1, 2, 8, 2, Ecr, TiePolicy::LowestIndexFirst);
        assert_eq!(counter_region_subbanks(7, &c, 2), vec![0, 1]);
        assert_eq!(counter_region_subbanks(0, &c, 2), vec![0]);
        assert_eq!(counter_region_subbanks(5, &c, 2), vec![0]);
        assert_eq!(counter_region_subbanks(6, &c, 2), vec![0, 1]);
        assert_eq!(counter_region_subbanks(15, &c, 2), vec![1]);
        let (_, c) = setup(4, 1, 1, 2, 8, 2, Eprr, TiePolicy::LowestIndexFirst);
        assert_eq!(counter_region_subbanks(7, &c, 2), vec![0]);
    }

    #[test]
    fn producer_threshold() {
        let (d, c) = setup(4, 100, 1, 1, 4, 2, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        assert_eq!(st.hammer_subbank(0), 0);
        assert_eq!(st.entry(0).frac, 1);
        for _ in 0..2 {
            st.hammer_subbank(0);
        }
        assert_eq!(st.entry(0), SubbankEntry { frac: 3, pending: 0, local_index: 0 });
        assert_eq!(st.hammer_subbank(0), 1);
        assert_eq!(st.entry(0), SubbankEntry { frac: 0, pending: 1, local_index: 0 });
        st.hammer_subbank(0);
        assert_eq!(st.entry(0), SubbankEntry { frac: 1, pending: 1, local_index: 0 });
    }

    #[test]
    fn overlap_row_hammers_both() {
        let (d, c) = setup(4, 100, 1, 1, 2, 2, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        st.apply_event(TraceEvent::Activate(1)).unwrap();
        assert_eq!(st.entry(0).frac, 1);
        assert_eq!(st.entry(1).frac, 1);
    }

    #[test]
    fn hand_stepped_overlap_trace() {
        let (d, c) = setup(4, 1, 1, 1, 2, 2, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        st.record_refreshes();
        for i in 0..3 {
            st.apply_event(TraceEvent::Activate(1)).unwrap();
            assert_eq!(st.entry(0).frac, i + 1);
            assert_eq!(st.stats().total_preventive_refreshes, 0);
        }
        st.apply_event(TraceEvent::Activate(1)).unwrap();
        let log = st.refresh_log();
        assert_eq!(log.len(), 1);
        assert_eq!((log[0].subbank, log[0].position, log[0].row), (0, 0, 0));
        // Refreshing row 0 hammers subbank 0 only.
        assert_eq!(st.entry(0), SubbankEntry { frac: 1, pending: 0, local_index: 1 });
        assert_eq!(st.entry(1), SubbankEntry { frac: 0, pending: 1, local_index: 0 });
        assert_eq!(st.stats().max_pending_observed, 1);
    }

    #[test]
    fn empty_trace() {
        let (d, c) = setup(4, 1, 1, 1, 2, 2, Ecr, TiePolicy::LowestIndexFirst);
        let rep = run_trace(&d, &c, [], ConfigMode::AllowUnsafe).unwrap();
        assert_eq!(rep.max_window, 0);
        assert_eq!(rep.refresh_count, 0);
        assert!(rep.safe);
    }

    #[test]
    fn out_of_range_row_reports_ordinal() {
        let (d, c) = setup(4, 1, 1, 1, 2, 2, Ecr, TiePolicy::LowestIndexFirst);
        let err = run_trace(
            &d,
            &c,
            [TraceEvent::Activate(0), TraceEvent::Activate(1), TraceEvent::Activate(4)],
            ConfigMode::AllowUnsafe,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Trace { ordinal: 2, .. }));
    }

    #[test]
    fn strict_mode_refuses_invalid_config() {
        let (d, c) = setup(2, 1, 1, 1, 2, 2, Ecr, TiePolicy::LowestIndexFirst);
        assert!(matches!(run_trace(&d, &c, [], ConfigMode::Strict), Err(Error::Constraint(_))));
    }

    #[test]
    fn burst_tie_breaks() {
        let (d, c) = setup(4, 1, 1, 1, 4, 2, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        st.entries[0].pending = 2;
        st.entries[1].pending = 1;
        assert_eq!(st.consumer_burst(), 1);
        assert_eq!((st.entry(0).pending, st.entry(1).pending), (1, 1));

        let c = c.with_tie_policy(TiePolicy::AdversarialNonTargetLast { target_subbank: 0 });
        let mut st = BankState::new(&d, &c).unwrap();
        st.record_refreshes();
        st.entries[0].pending = 1;
        st.entries[1].pending = 1;
        st.consumer_burst();
        assert_eq!(st.refresh_log()[0].subbank, 1);
        st.consumer_burst();
        assert_eq!(st.refresh_log()[1].subbank, 0);
    }

    #[test]
    fn rotating_policy_advances() {
        let (d, c) = setup(4, 1, 1, 1, 4, 3, Ecr, TiePolicy::RotatingStart);
        let mut st = BankState::new(&d, &c).unwrap();
        st.record_refreshes();
        for e in st.entries.iter_mut() {
            e.pending = 1;
        }
        st.consumer_burst();
        st.entries[0].pending = 1;
        st.consumer_burst();
        // Pointer sits past subbank 0, so subbank 1 wins the three-way tie.
        let served: Vec<u32> = st.refresh_log().iter().map(|r| r.subbank).collect();
        assert_eq!(served, vec![0, 1]);
    }

    #[test]
    fn idle_burst_does_nothing() {
        let (d, c) = setup(4, 1, 8, 1, 4, 2, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        assert_eq!(st.consumer_burst(), 0);
    }

    #[test]
    fn burst_production_waits_for_next_burst() {
        // Refreshing row 0 of subbank 0 at frac D-1 produces a refresh that must not
        // be served inside the same burst even though R leaves room.
        let (d, c) = setup(4, 100, 4, 1, 4, 1, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        st.entries[0] = SubbankEntry { frac: 3, pending: 1, local_index: 0 };
        assert_eq!(st.consumer_burst(), 1);
        assert_eq!(st.entry(0).pending, 1);
    }

    #[test]
    fn window_resets_on_refresh() {
        let (d, c) = setup(4, 100, 1, 1, 4, 1, Ecr, TiePolicy::LowestIndexFirst);
        let mut st = BankState::new(&d, &c).unwrap();
        for _ in 0..5 {
            st.apply_event(TraceEvent::Activate(1)).unwrap();
        }
        assert_eq!(st.window_count(2), 5);
        st.apply_event(TraceEvent::PeriodicRefresh(2)).unwrap();
        // Reset, then the refresh itself counts as one hammer of the region.
        assert_eq!(st.window_count(2), 1);
        assert_eq!(st.window_count(0), 6);
        assert_eq!(st.max_window_per_row()[2], 5);
        assert_eq!(st.activations_in_window(), 5);
        assert_eq!(st.stats().total_periodic_refreshes, 1);
    }

    #[test]
    fn eprr_schedule_shape() {
        let (d, c) = setup(4, 1, 1, 1, 6, 3, Eprr, TiePolicy::LowestIndexFirst);
        let layout = BankLayout::new(&d, &c).unwrap();
        // Middle subbank: rows 6..12, margins 5,6 | 11,12, core 7..11.
        assert_eq!(layout.schedule(1), &[5, 6, 11, 12, 7, 8, 5, 6, 11, 12, 9, 10]);
        assert_eq!(layout.schedule(1).len(), 6 + 6);
        // Bank-edge subbank loses its external upper margin.
        assert_eq!(layout.schedule(0), &[0, 5, 6, 1, 2, 0, 5, 6, 3, 4]);
        assert_eq!(layout.window_owners(6), &[0, 1]);
        assert_eq!(layout.counter_set(6), &[1]);
    }

    #[test]
    fn ecr_schedule_is_subbank_rows() {
        let (d, c) = setup(4, 1, 1, 1, 4, 2, Ecr, TiePolicy::LowestIndexFirst);
        let layout = BankLayout::new(&d, &c).unwrap();
        assert_eq!(layout.schedule(1), &[4, 5, 6, 7]);
        assert_eq!(layout.window_owners(4), &[1]);
    }

    #[test]
    fn most_recent_position_defaults_to_last() {
        let (d, c) = setup(4, 1, 1, 1, 4, 2, Ecr, TiePolicy::LowestIndexFirst);
        let st = BankState::new(&d, &c).unwrap();
        assert_eq!(st.most_recent_position(0), 3);
    }
}

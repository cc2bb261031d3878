//! Seeded random traces mixing common hammering patterns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mechanism::TraceEvent;
use crate::model::{DeviceProfile, MechanismConfig};

/// Pattern used to fill one fuzz trace, or one segment of a mixed trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    SingleSided,
    /// Alternates the two neighbours of a victim.
    DoubleSided,
    Random,
    /// Charges a group of subbanks and fires them together, shrinking the
    /// group each round.
    WaveLike,
    /// Segments of the other patterns back to back.
    Mixed,
}

const PATTERNS: [Pattern; 5] =
    [Pattern::SingleSided, Pattern::DoubleSided, Pattern::Random, Pattern::WaveLike, Pattern::Mixed];

/// Iterator of `count` traces of `length` activations each. The same seed
/// always yields the same traces.
pub fn fuzz_traces(
    device: &DeviceProfile,
    config: &MechanismConfig,
    seed: u64,
    count: usize,
    length: usize,
) -> impl Iterator<Item = Vec<TraceEvent>> {
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        rows: device.bank_rows,
        subbank_rows: config.subbank_rows.max(1),
        n_subbanks: config.n_subbanks.max(1),
        d: config.d.max(1),
    };
    (0..count).map(move |_| {
        let pattern = PATTERNS[gen.rng.gen_range(0..PATTERNS.len())];
        gen.trace(pattern, length)
    })
}

/// One trace of a given pattern.
pub fn fuzz_pattern(device: &DeviceProfile, config: &MechanismConfig, seed: u64, pattern: Pattern, length: usize) -> Vec<TraceEvent> {
    Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        rows: device.bank_rows,
        subbank_rows: config.subbank_rows.max(1),
        n_subbanks: config.n_subbanks.max(1),
        d: config.d.max(1),
    }
    .trace(pattern, length)
}

struct Generator {
    rng: ChaCha8Rng,
    rows: u32,
    subbank_rows: u32,
    n_subbanks: u32,
    d: u32,
}

impl Generator {
    fn trace(&mut self, pattern: Pattern, length: usize) -> Vec<TraceEvent> {
        let mut out = Vec::with_capacity(length);
        while out.len() < length {
            let remaining = length - out.len();
            match pattern {
                Pattern::Mixed => {
                    let seg = self.rng.gen_range(1..=remaining);
                    let inner = PATTERNS[self.rng.gen_range(0..PATTERNS.len() - 1)];
                    self.segment(inner, seg, &mut out);
                }
                p => self.segment(p, remaining, &mut out),
            }
        }
        out.truncate(length);
        out
    }

    fn segment(&mut self, pattern: Pattern, len: usize, out: &mut Vec<TraceEvent>) {
        let end = out.len() + len;
        match pattern {
            Pattern::SingleSided => {
                let row = self.rng.gen_range(0..self.rows);
                out.extend(std::iter::repeat_n(TraceEvent::Activate(row), len));
            }
            Pattern::DoubleSided => {
                let victim = if self.rows > 2 { self.rng.gen_range(1..self.rows - 1) } else { 0 };
                let (lo, hi) = (victim.saturating_sub(1), (victim + 1).min(self.rows - 1));
                out.extend((0..len).map(|i| TraceEvent::Activate(if i % 2 == 0 { lo } else { hi })));
            }
            Pattern::Random => {
                out.extend((0..len).map(|_| TraceEvent::Activate(self.rng.gen_range(0..self.rows))));
            }
            Pattern::WaveLike | Pattern::Mixed => {
                let mut group: Vec<u32> = (0..self.n_subbanks).collect();
                while out.len() < end && !group.is_empty() {
                    for &sb in &group {
                        // Boundary rows exercise the counter-region overlap.
                        let row = if self.rng.gen_bool(0.5) {
                            (sb + 1) * self.subbank_rows - 1
                        } else {
                            sb * self.subbank_rows + self.rng.gen_range(0..self.subbank_rows)
                        };
                        let hits = self.rng.gen_range(1..=self.d);
                        out.extend(std::iter::repeat_n(TraceEvent::Activate(row.min(self.rows - 1)), hits as usize));
                    }
                    let keep = (group.len() / 2).max(usize::from(group.len() > 1));
                    let start = self.rng.gen_range(0..=group.len() - keep);
                    group = group[start..start + keep].to_vec();
                }
            }
        }
        out.truncate(end);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme;

    fn cfg() -> (DeviceProfile, MechanismConfig) {
        (DeviceProfile::new(1000, 1, 32, 1, 2), MechanismConfig::new(6, 4, 32, Scheme::ExtendedCounterRegion))
    }

    #[test]
    fn deterministic_per_seed() {
        let (d, c) = cfg();
        let a: Vec<_> = fuzz_traces(&d, &c, 0, 2, 50).collect();
        let b: Vec<_> = fuzz_traces(&d, &c, 0, 2, 50).collect();
        assert_eq!(a.len(), 2);
        assert_eq!(a, b);
        assert_ne!(a, fuzz_traces(&d, &c, 1, 2, 50).collect::<Vec<_>>());
    }

    #[test]
    fn traces_stay_in_bank() {
        let (d, c) = cfg();
        for t in fuzz_traces(&d, &c, 3, 50, 40) {
            assert_eq!(t.len(), 40);
            assert!(t.iter().all(|e| e.row() < 32));
        }
    }

    #[test]
    fn double_sided_alternates_neighbours() {
        let (d, c) = cfg();
        let t = fuzz_pattern(&d, &c, 9, Pattern::DoubleSided, 10);
        let (a, b) = (t[0].row(), t[1].row());
        assert_eq!(b, a + 2);
        assert!(t.iter().enumerate().all(|(i, e)| e.row() == if i % 2 == 0 { a } else { b }));
    }
}

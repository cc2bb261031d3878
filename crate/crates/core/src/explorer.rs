//! Design-space sweeps over the closed-form model, written as CSV.

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{self, DeviceProfile, MechanismConfig, Scheme};

pub const PRESETS: &[&str] = &["fig5", "fig6", "fig7", "fig8a", "fig8b", "fig9"];

pub const CSV_HEADER: &str = "d,s_sb,n_sb,b,t,r,scheme,thc,refresh_per_100_acts,entry_bits,table_bytes,valid";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: u32,
    pub s_sb: u32,
    pub n_sb: u32,
    pub b: u32,
    pub t: u32,
    pub r: u32,
    #[serde(serialize_with = "short_scheme")]
    pub scheme: Scheme,
    pub thc: u64,
    pub refresh_per_100_acts: f64,
    pub entry_bits: u32,
    pub table_bytes: f64,
    /// Passes validation when the chip's UHC is taken as `thc + 1`.
    pub valid: bool,
}

fn short_scheme<S: Serializer>(scheme: &Scheme, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(scheme.short_name())
}

/// Cartesian grid of sweep parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub d: Vec<u32>,
    pub s_sb: Vec<u32>,
    pub bank_rows: Vec<u32>,
    pub b: Vec<u32>,
    pub t: Vec<u32>,
    pub r: Vec<u32>,
    pub schemes: Vec<Scheme>,
}

/// `2^lo, 2^(lo+1), ..., 2^hi`.
pub fn powers_of_two(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).map(|e| 1u32 << e).collect()
}

const DDR4_T: u32 = 177;
const BANK_64K: u32 = 65536;

impl SweepSpec {
    pub fn preset(name: &str) -> Result<Self> {
        let base = SweepSpec {
            d: powers_of_two(1, 10),
            s_sb: powers_of_two(3, 12),
            bank_rows: vec![BANK_64K],
            b: vec![4],
            t: vec![DDR4_T],
            r: vec![1],
            schemes: vec![Scheme::ExtendedCounterRegion],
        };
        let per_100 = vec![16, 32, 64, 128];
        Ok(match name {
            "fig5" => base,
            "fig6" => SweepSpec { b: vec![1], s_sb: powers_of_two(1, 12), ..base },
            "fig7" => SweepSpec { r: vec![1, 2, 4, 8], ..base },
            "fig8a" => SweepSpec { bank_rows: powers_of_two(14, 19), s_sb: vec![64], d: per_100, ..base },
            "fig8b" => SweepSpec { s_sb: powers_of_two(3, 13), d: per_100, ..base },
            "fig9" => SweepSpec { b: (1..=8).collect(), d: per_100, ..base },
            other => return Err(Error::UnknownPreset(other.to_string())),
        })
    }
}

/// Evaluates every grid point; combinations leaving no whole subbank are
/// skipped, everything else is emitted with its validity flag. Rows are
/// sorted by (scheme, r, t, b, bank rows, s_sb, d).
pub fn sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &scheme in &spec.schemes {
        for &r in &spec.r {
            for &t in &spec.t {
                for &b in &spec.b {
                    for &bank_rows in &spec.bank_rows {
                        for &s_sb in &spec.s_sb {
                            if s_sb == 0 || s_sb > bank_rows || bank_rows % s_sb != 0 {
                                continue;
                            }
                            for &d in &spec.d {
                                rows.push(evaluate(d, s_sb, bank_rows, b, t, r, scheme));
                            }
                        }
                    }
                }
            }
        }
    }
    rows.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    rows.dedup();
    rows
}

fn sort_key(row: &SweepRow) -> (&'static str, u32, u32, u32, u64, u32, u32) {
    (row.scheme.short_name(), row.r, row.t, row.b, u64::from(row.n_sb) * u64::from(row.s_sb), row.s_sb, row.d)
}

pub fn evaluate(d: u32, s_sb: u32, bank_rows: u32, b: u32, t: u32, r: u32, scheme: Scheme) -> SweepRow {
    let config = MechanismConfig::new(d, s_sb, bank_rows, scheme);
    let mut device = DeviceProfile::new(0, b, bank_rows, r, t);
    let thc = analytic::thc(&device, &config);
    device.uhc_dram = thc.saturating_add(1);
    let geometry = analytic::table_geometry(&config, r);
    SweepRow {
        d,
        s_sb,
        n_sb: config.n_subbanks,
        b,
        t,
        r,
        scheme,
        thc,
        refresh_per_100_acts: 100.0 / f64::from(d),
        entry_bits: geometry.entry_bits,
        table_bytes: geometry.table_bytes,
        valid: model::validate(&device, &config).is_empty(),
    }
}

pub fn sweep_preset(name: &str) -> Result<Vec<SweepRow>> {
    Ok(sweep(&SweepSpec::preset(name)?))
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    if rows.is_empty() {
        writer.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()
}

/// Smallest admissible D under ECR for each refresh budget.
pub fn min_d_markers(t: u32, r_values: &[u32]) -> Vec<(u32, u32)> {
    r_values.iter().map(|&r| (r, analytic::min_d(t, r, Scheme::ExtendedCounterRegion))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find(rows: &[SweepRow], d: u32, s_sb: u32) -> &SweepRow {
        rows.iter().find(|r| r.d == d && r.s_sb == s_sb).unwrap()
    }

    #[test]
    fn fig5_contains_operating_points() {
        let rows = sweep_preset("fig5").unwrap();
        assert_eq!(find(&rows, 32, 8).thc, 857);
        assert_eq!(find(&rows, 2, 8).thc, 227);
        assert!(!find(&rows, 32, 8).valid);
        assert!(find(&rows, 512, 8).valid);
    }

    #[test]
    fn fig6_contains_small_blast_radius_points() {
        let rows = sweep_preset("fig6").unwrap();
        assert_eq!(find(&rows, 32, 8).thc, 851);
        assert_eq!(find(&rows, 2, 2).thc, 213);
    }

    #[test]
    fn fig8a_bank_size_delta() {
        let rows = sweep_preset("fig8a").unwrap();
        let at = |n: u32| rows.iter().find(|r| r.d == 64 && r.n_sb == n).unwrap().thc;
        assert_eq!(at(524288 / 64) - at(16384 / 64), 320);
    }

    #[test]
    fn fig9_blast_radius_delta() {
        let rows = sweep_preset("fig9").unwrap();
        let at = |b: u32| rows.iter().find(|r| r.d == 64 && r.s_sb == 16 && r.b == b).unwrap().thc;
        assert_eq!(at(8) - at(1), 14);
    }

    #[test]
    fn markers() {
        assert_eq!(min_d_markers(177, &[1]), vec![(1, 356)]);
        assert_eq!(min_d_markers(177, &[8]), vec![(8, 47)]);
        assert_eq!(min_d_markers(1, &[1]), vec![(1, 4)]);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(sweep_preset("fig4"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn csv_header_and_rates() {
        let rows = sweep_preset("fig8b").unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert!(text.contains(",6.25,") && text.contains(",0.78125,"));
        assert_eq!(text.lines().count(), rows.len() + 1);
    }

    #[test]
    fn sorted_and_deterministic() {
        let a = sweep_preset("fig7").unwrap();
        assert!(a.windows(2).all(|w| sort_key(&w[0]) <= sort_key(&w[1])));
        assert_eq!(a, sweep_preset("fig7").unwrap());
    }
}

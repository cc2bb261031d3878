//! `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. The window is given either as
//! `window_t` or as the `t_refi_ns`/`t_rfc_ns`/`t_rc_ns` triple; when both are
//! present the triple is kept so validation can check they agree.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DeviceProfile, MechanismConfig, Scheme, TiePolicy, TimingParams, DEFAULT_SRAM_AREA_FACTOR};

pub const KNOWN_KEYS: &[&str] = &[
    "uhc_dram",
    "blast_radius",
    "bank_rows",
    "refresh_burst_r",
    "window_t",
    "t_refi_ns",
    "t_rfc_ns",
    "t_rc_ns",
    "d",
    "subbank_rows",
    "scheme",
    "tie_policy",
    "target_subbank",
    "sharing_factor",
    "sram_area_factor",
];

/// Line number used for values supplied as overrides rather than in a file.
pub const OVERRIDE_LINE: usize = 0;

/// Raw key/value pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = split_pair(content).ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            check_key(key, line_no)?;
            if let Some((_, first)) = raw.entries.get(key) {
                return Err(Error::Config { line: line_no, message: format!("duplicate key `{key}` (first on line {first})") });
            }
            raw.entries.insert(key.to_string(), (value.to_string(), line_no));
        }
        Ok(raw)
    }

    /// Applies a `key=value` override; returns the previous value, if any.
    pub fn set(&mut self, assignment: &str) -> Result<Option<String>> {
        let (key, value) = split_pair(assignment).ok_or_else(|| Error::Config {
            line: OVERRIDE_LINE,
            message: format!("override `{assignment}` is not `key=value`"),
        })?;
        check_key(key, OVERRIDE_LINE)?;
        Ok(self.entries.insert(key.to_string(), (value.to_string(), OVERRIDE_LINE)).map(|(v, _)| v))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((value, line)) => value.parse::<T>().map(Some).map_err(|_| Error::Config {
                line: *line,
                message: format!("`{key}` expects a non-negative integer, got `{value}`"),
            }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.number(key)?
            .ok_or_else(|| Error::Config { line: OVERRIDE_LINE, message: format!("missing required key `{key}`") })
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(OVERRIDE_LINE, |(_, l)| *l)
    }

    pub fn build(&self) -> Result<(DeviceProfile, MechanismConfig)> {
        let uhc = self.required("uhc_dram")?;
        let b = self.required("blast_radius")?;
        let bank_rows = self.required("bank_rows")?;
        let r = self.required("refresh_burst_r")?;
        let timing = match (self.number("t_refi_ns")?, self.number("t_rfc_ns")?, self.number("t_rc_ns")?) {
            (Some(t_refi_ns), Some(t_rfc_ns), Some(t_rc_ns)) => Some(TimingParams { t_refi_ns, t_rfc_ns, t_rc_ns }),
            (None, None, None) => None,
            _ => {
                return Err(Error::Config {
                    line: OVERRIDE_LINE,
                    message: "t_refi_ns, t_rfc_ns and t_rc_ns must be given together".into(),
                })
            }
        };
        let device = match (self.number::<u32>("window_t")?, timing) {
            (Some(window), timing) => DeviceProfile { timing, ..DeviceProfile::new(uhc, b, bank_rows, r, window) },
            (None, Some(timing)) => DeviceProfile::from_timing(uhc, b, bank_rows, r, timing)
                .map_err(|e| Error::Config { line: self.line_of("t_rc_ns"), message: e.to_string() })?,
            (None, None) => {
                return Err(Error::Config {
                    line: OVERRIDE_LINE,
                    message: "missing `window_t` (or the t_refi_ns/t_rfc_ns/t_rc_ns triple)".into(),
                })
            }
        };

        let scheme = match self.entries.get("scheme") {
            None => Scheme::ExtendedCounterRegion,
            Some((v, line)) => Scheme::parse(v)
                .ok_or_else(|| Error::Config { line: *line, message: format!("unknown scheme `{v}` (ecr|eprr)") })?,
        };
        let target_subbank = self.number("target_subbank")?.unwrap_or(0);
        let tie_policy = match self.entries.get("tie_policy").map(|(v, l)| (v.as_str(), *l)) {
            None | Some(("adversarial", _)) => TiePolicy::AdversarialNonTargetLast { target_subbank },
            Some(("lowest", _)) => TiePolicy::LowestIndexFirst,
            Some(("rotating", _)) => TiePolicy::RotatingStart,
            Some((v, line)) => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown tie_policy `{v}` (adversarial|lowest|rotating)"),
                })
            }
        };
        let mut config = MechanismConfig::new(self.required("d")?, self.required("subbank_rows")?, bank_rows, scheme)
            .with_tie_policy(tie_policy)
            .with_sharing_factor(self.number("sharing_factor")?.unwrap_or(1));
        config.sram_area_factor = self.number("sram_area_factor")?.unwrap_or(DEFAULT_SRAM_AREA_FACTOR);
        Ok((device, config))
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

fn check_key(key: &str, line: usize) -> Result<()> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::Config { line, message: format!("unknown key `{key}`") })
    }
}

pub fn parse_config(text: &str) -> Result<(DeviceProfile, MechanismConfig)> {
    RawConfig::parse(text)?.build()
}

/// Reads and parses a configuration file. I/O failures are returned apart
/// from parse errors so callers can map them to different exit codes.
pub fn load_config(path: &Path) -> std::io::Result<Result<RawConfig>> {
    Ok(RawConfig::parse(&std::fs::read_to_string(path)?))
}

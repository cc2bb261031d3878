//! Flat `key=value` text rendering shared by every report type.

use std::fmt::Write;

/// Report types that render as ordered `key=value` lines.
pub trait KeyValues {
    fn key_values(&self) -> Vec<(&'static str, String)>;

    fn to_key_value_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.key_values() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

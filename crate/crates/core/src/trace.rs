//! Plain-text traces: one event per line, `A <row>` for an attacker
//! activation and `P <row>` for a periodic refresh. `#` starts a comment.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mechanism::TraceEvent;

pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Trace { ordinal: out.len(), message: format!("line {}: {message}", idx + 1) };
        let mut parts = content.split_whitespace();
        let (kind, row) = (parts.next().unwrap_or(""), parts.next());
        if parts.next().is_some() {
            return Err(bad(format!("trailing tokens in `{content}`")));
        }
        let row: u32 = row
            .ok_or_else(|| bad("missing row".into()))?
            .parse()
            .map_err(|_| bad(format!("invalid row in `{content}`")))?;
        out.push(match kind {
            "A" | "a" => TraceEvent::Activate(row),
            "P" | "p" => TraceEvent::PeriodicRefresh(row),
            _ => return Err(bad(format!("unknown event kind `{kind}`"))),
        });
    }
    Ok(out)
}

pub fn write_trace(events: &[TraceEvent]) -> String {
    let mut out = String::with_capacity(events.len() * 8);
    for e in events {
        push_event(&mut out, *e);
    }
    out
}

pub(crate) fn push_event(out: &mut String, event: TraceEvent) {
    let _ = match event {
        TraceEvent::Activate(r) => writeln!(out, "A {r}"),
        TraceEvent::PeriodicRefresh(r) => writeln!(out, "P {r}"),
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_kinds() {
        let events = parse_trace("# header\nA 3\n\nP 7 # refresh\na 1\n").unwrap();
        assert_eq!(events, vec![TraceEvent::Activate(3), TraceEvent::PeriodicRefresh(7), TraceEvent::Activate(1)]);
        assert_eq!(parse_trace(&write_trace(&events)).unwrap(), events);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_trace("A 1\nX 2\n"), Err(Error::Trace { ordinal: 1, .. })));
        assert!(parse_trace("A\n").is_err());
        assert!(parse_trace("A -1\n").is_err());
        assert!(parse_trace("A 1 2\n").is_err());
    }
}

//! TOS/GOS event logs: parsing, ordering and validation against a layout.
//!
//! One event per JSONL line:
//!
//! ```text
//! {"ts":"2024-03-01T08:15:00Z","kind":"YARD_SHIFT","container":"CMAU1234567",
//!  "from":"A.05.3.2","to":"A.05.1.1","equipment":"RTG-02","attrs":{...}}
//! ```
//!
//! Unknown top-level keys are kept in `attrs`. An optional `seq` key fixes the
//! event's sequence number; otherwise it is the event's position in the file.

use crate::time::{self, Timestamp};
use crate::yard::{SlotAddress, YardLayout};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    GateIn,
    GateOut,
    VesselDischarge,
    VesselLoad,
    YardShift,
    CranePos,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::GateIn,
        EventKind::GateOut,
        EventKind::VesselDischarge,
        EventKind::VesselLoad,
        EventKind::YardShift,
        EventKind::CranePos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::GateIn => "GATE_IN",
            EventKind::GateOut => "GATE_OUT",
            EventKind::VesselDischarge => "VESSEL_DISCHARGE",
            EventKind::VesselLoad => "VESSEL_LOAD",
            EventKind::YardShift => "YARD_SHIFT",
            EventKind::CranePos => "CRANE_POS",
        }
    }

    pub fn is_arrival(self) -> bool {
        matches!(self, EventKind::GateIn | EventKind::VesselDischarge)
    }

    pub fn is_departure(self) -> bool {
        matches!(self, EventKind::GateOut | EventKind::VesselLoad)
    }

    fn rules(self) -> FieldRules {
        use Presence::*;
        let (container, from, to, equipment) = match self {
            EventKind::GateIn | EventKind::VesselDischarge => (Required, Forbidden, Required, Optional),
            EventKind::GateOut | EventKind::VesselLoad => (Required, Required, Forbidden, Optional),
            EventKind::YardShift => (Required, Required, Required, Optional),
            EventKind::CranePos => (Forbidden, Forbidden, Required, Required),
        };
        FieldRules {
            container,
            from,
            to,
            equipment,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Presence {
    Required,
    Optional,
    Forbidden,
}

struct FieldRules {
    container: Presence,
    from: Presence,
    to: Presence,
    equipment: Presence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YardEvent {
    pub seq: u64,
    pub timestamp: Timestamp,
    pub kind: EventKind,
    pub container_id: Option<String>,
    pub from_slot: Option<SlotAddress>,
    pub to_slot: Option<SlotAddress>,
    pub equipment_id: Option<String>,
    pub attrs: BTreeMap<String, Value>,
    /// Set on relocations generated by a counterfactual run.
    pub synthetic: bool,
}

impl YardEvent {
    pub fn new(seq: u64, timestamp: Timestamp, kind: EventKind) -> Self {
        YardEvent {
            seq,
            timestamp,
            kind,
            container_id: None,
            from_slot: None,
            to_slot: None,
            equipment_id: None,
            attrs: BTreeMap::new(),
            synthetic: false,
        }
    }

    pub fn with_container(mut self, id: impl Into<String>) -> Self {
        self.container_id = Some(id.into());
        self
    }

    pub fn with_from(mut self, slot: SlotAddress) -> Self {
        self.from_slot = Some(slot);
        self
    }

    pub fn with_to(mut self, slot: SlotAddress) -> Self {
        self.to_slot = Some(slot);
        self
    }

    pub fn with_equipment(mut self, id: impl Into<String>) -> Self {
        self.equipment_id = Some(id.into());
        self
    }

    pub fn with_attr(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }

    pub fn attr_str(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).and_then(Value::as_str)
    }

    pub fn departure_booked(&self) -> bool {
        match self.attrs.get("departure_booked") {
            Some(Value::Bool(b)) => *b,
            Some(Value::String(s)) => s.eq_ignore_ascii_case("true"),
            _ => false,
        }
    }

    pub fn planned_departure(&self) -> Option<Timestamp> {
        self.attr_str("planned_departure")
            .and_then(|t| time::parse(t).ok())
    }

    pub fn to_json_line(&self) -> String {
        let line = EventLine {
            seq: self.seq,
            ts: time::format(&self.timestamp),
            kind: self.kind,
            container: self.container_id.as_deref(),
            from: self.from_slot.as_ref().map(ToString::to_string),
            to: self.to_slot.as_ref().map(ToString::to_string),
            equipment: self.equipment_id.as_deref(),
            synthetic: self.synthetic,
            attrs: &self.attrs,
        };
        serde_json::to_string(&line).expect("event serializes")
    }
}

#[derive(Serialize)]
struct EventLine<'a> {
    seq: u64,
    ts: String,
    kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    container: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    to: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equipment: Option<&'a str>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    synthetic: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    attrs: &'a BTreeMap<String, Value>,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed event: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: unknown event kind {kind:?}")]
    UnknownEventKind { line: usize, kind: String },
    #[error("line {line}: {kind} event is missing required field {field:?}")]
    MissingRequiredField {
        line: usize,
        kind: String,
        field: &'static str,
    },
    #[error("line {line}: {kind} event must not carry field {field:?}")]
    UnexpectedField {
        line: usize,
        kind: EventKind,
        field: &'static str,
    },
    #[error("line {line}: sequence number {seq} already used")]
    DuplicateSeq { line: usize, seq: u64 },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::MalformedLine { .. } => "MalformedLine",
            ParseError::UnknownEventKind { .. } => "UnknownEventKind",
            ParseError::MissingRequiredField { .. } => "MissingRequiredField",
            ParseError::UnexpectedField { .. } => "UnexpectedField",
            ParseError::DuplicateSeq { .. } => "DuplicateSeq",
            ParseError::Io(_) => "Io",
        }
    }
}

/// Inclusive time window `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    #[serde(with = "crate::time::rfc3339")]
    pub from: Timestamp,
    #[serde(with = "crate::time::rfc3339")]
    pub to: Timestamp,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("window start {from} is after its end {to}")]
pub struct BadWindow {
    pub from: String,
    pub to: String,
}

impl TimeWindow {
    pub fn new(from: Timestamp, to: Timestamp) -> Result<Self, BadWindow> {
        if from > to {
            return Err(BadWindow {
                from: time::format(&from),
                to: time::format(&to),
            });
        }
        Ok(TimeWindow { from, to })
    }

    pub fn contains(&self, t: &Timestamp) -> bool {
        self.from <= *t && *t <= self.to
    }
}

/// Events ordered by `(timestamp, seq)` with unique `seq`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<YardEvent>,
}

impl EventLog {
    /// Sorts `events` by `(timestamp, seq)`. Panics on duplicate `seq`; use
    /// [`parse_log`] for untrusted input.
    pub fn new(mut events: Vec<YardEvent>) -> Self {
        events.sort_by_key(|e| (e.timestamp, e.seq));
        assert!(
            events.windows(2).all(|w| w[0].seq != w[1].seq)
                && events.iter().map(|e| e.seq).collect::<BTreeSet<_>>().len() == events.len(),
            "duplicate event seq"
        );
        EventLog { events }
    }

    /// Renumbers `seq` to the given order, which must already be time-ordered.
    pub fn from_ordered(mut events: Vec<YardEvent>) -> Self {
        for (i, e) in events.iter_mut().enumerate() {
            e.seq = i as u64;
        }
        debug_assert!(events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        EventLog { events }
    }

    pub fn events(&self) -> &[YardEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_time(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.timestamp)
    }

    pub fn last_time(&self) -> Option<Timestamp> {
        self.events.last().map(|e| e.timestamp)
    }

    pub fn in_window<'a>(&'a self, window: &'a TimeWindow) -> impl Iterator<Item = &'a YardEvent> + 'a {
        self.events.iter().filter(move |e| window.contains(&e.timestamp))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_json_line());
            out.push('\n');
        }
        out
    }
}

fn take_str(
    obj: &mut Map<String, Value>,
    key: &'static str,
    line: usize,
) -> Result<Option<String>, ParseError> {
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(ParseError::MalformedLine {
            line,
            reason: format!("{key:?} must be a string, got {other}"),
        }),
    }
}

fn take_slot(
    obj: &mut Map<String, Value>,
    key: &'static str,
    line: usize,
) -> Result<Option<SlotAddress>, ParseError> {
    take_str(obj, key, line)?
        .map(|s| {
            s.parse().map_err(|e: crate::yard::SlotParseError| ParseError::MalformedLine {
                line,
                reason: e.to_string(),
            })
        })
        .transpose()
}

fn check_presence<T>(
    value: &Option<T>,
    presence: Presence,
    kind: EventKind,
    field: &'static str,
    line: usize,
) -> Result<(), ParseError> {
    match (presence, value.is_some()) {
        (Presence::Required, false) => Err(ParseError::MissingRequiredField {
            line,
            kind: kind.to_string(),
            field,
        }),
        (Presence::Forbidden, true) => Err(ParseError::UnexpectedField { line, kind, field }),
        _ => Ok(()),
    }
}

/// Parses one JSONL line. `line` is 1-based and only used for diagnostics.
pub fn parse_event(text: &str, line: usize, default_seq: u64) -> Result<YardEvent, ParseError> {
    let mut obj: Map<String, Value> =
        serde_json::from_str(text).map_err(|e| ParseError::MalformedLine {
            line,
            reason: e.to_string(),
        })?;
    let kind_text = take_str(&mut obj, "kind", line)?.ok_or(ParseError::MissingRequiredField {
        line,
        kind: "?".into(),
        field: "kind",
    })?;
    let kind: EventKind = kind_text
        .parse()
        .map_err(|_| ParseError::UnknownEventKind {
            line,
            kind: kind_text.clone(),
        })?;
    let ts = take_str(&mut obj, "ts", line)?.ok_or_else(|| ParseError::MissingRequiredField {
        line,
        kind: kind.to_string(),
        field: "ts",
    })?;
    let timestamp = time::parse(&ts).map_err(|e| ParseError::MalformedLine {
        line,
        reason: format!("bad timestamp {ts:?}: {e}"),
    })?;
    let seq = match obj.remove("seq") {
        None | Some(Value::Null) => default_seq,
        Some(v) => v.as_u64().ok_or_else(|| ParseError::MalformedLine {
            line,
            reason: format!("\"seq\" must be a non-negative integer, got {v}"),
        })?,
    };
    let synthetic = match obj.remove("synthetic") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => b,
        Some(v) => {
            return Err(ParseError::MalformedLine {
                line,
                reason: format!("\"synthetic\" must be a boolean, got {v}"),
            })
        }
    };
    let container_id = take_str(&mut obj, "container", line)?;
    let from_slot = take_slot(&mut obj, "from", line)?;
    let to_slot = take_slot(&mut obj, "to", line)?;
    let equipment_id = take_str(&mut obj, "equipment", line)?;

    let rules = kind.rules();
    check_presence(&container_id, rules.container, kind, "container", line)?;
    check_presence(&from_slot, rules.from, kind, "from", line)?;
    check_presence(&to_slot, rules.to, kind, "to", line)?;
    check_presence(&equipment_id, rules.equipment, kind, "equipment", line)?;

    let mut attrs: BTreeMap<String, Value> = match obj.remove("attrs") {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(Value::Object(m)) => m.into_iter().collect(),
        Some(v) => {
            return Err(ParseError::MalformedLine {
                line,
                reason: format!("\"attrs\" must be an object, got {v}"),
            })
        }
    };
    for (k, v) in obj {
        attrs.entry(k).or_insert(v);
    }

    Ok(YardEvent {
        seq,
        timestamp,
        kind,
        container_id,
        from_slot,
        to_slot,
        equipment_id,
        attrs,
        synthetic,
    })
}

/// Parses a JSONL stream into an ordered log. Blank lines are skipped.
pub fn parse_log<R: BufRead>(reader: R) -> Result<EventLog, ParseError> {
    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = parse_event(&line, i + 1, events.len() as u64)?;
        if !seen.insert(event.seq) {
            return Err(ParseError::DuplicateSeq {
                line: i + 1,
                seq: event.seq,
            });
        }
        events.push(event);
    }
    Ok(EventLog::new(events))
}

pub fn parse_log_str(text: &str) -> Result<EventLog, ParseError> {
    parse_log(text.as_bytes())
}

/// Reads a JSONL file, or every `*.jsonl` file of a directory in name order
/// as one stream.
pub fn read_log_path(path: &std::path::Path) -> Result<EventLog, ParseError> {
    if !path.is_dir() {
        return parse_log(std::io::BufReader::new(std::fs::File::open(path)?));
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|x| x == "jsonl"));
    files.sort();
    let mut text = String::new();
    for f in files {
        text.push_str(&std::fs::read_to_string(f)?);
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    parse_log_str(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation")]
pub enum ViolationKind {
    AddressOutOfRange { slot: String },
    UnknownContainerRetrieval { container: String },
    DuplicateArrival { container: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::AddressOutOfRange { slot } => {
                write!(f, "AddressOutOfRange@{}: {slot}", self.seq)
            }
            ViolationKind::UnknownContainerRetrieval { container } => {
                write!(f, "UnknownContainerRetrieval@{}: {container}", self.seq)
            }
            ViolationKind::DuplicateArrival { container } => {
                write!(f, "DuplicateArrival@{}: {container}", self.seq)
            }
        }
    }
}

/// Lists events that cannot be replayed on `layout`: slots outside the
/// layout, and moves of containers that are not in the yard at that point of
/// the log. Stacking order is left to replay.
pub fn validate_against(log: &EventLog, layout: &YardLayout) -> Vec<Violation> {
    let mut present = BTreeSet::new();
    let mut out = Vec::new();
    for e in log.events() {
        for slot in [&e.from_slot, &e.to_slot].into_iter().flatten() {
            if !layout.contains(slot) {
                out.push(Violation {
                    seq: e.seq,
                    kind: ViolationKind::AddressOutOfRange {
                        slot: slot.to_string(),
                    },
                });
            }
        }
        let Some(id) = e.container_id.as_deref() else {
            continue;
        };
        if e.kind.is_arrival() {
            if !present.insert(id) {
                out.push(Violation {
                    seq: e.seq,
                    kind: ViolationKind::DuplicateArrival {
                        container: id.to_owned(),
                    },
                });
            }
        } else {
            let known = if e.kind.is_departure() {
                present.remove(id)
            } else {
                present.contains(id)
            };
            if !known {
                out.push(Violation {
                    seq: e.seq,
                    kind: ViolationKind::UnknownContainerRetrieval {
                        container: id.to_owned(),
                    },
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::yard::BlockSpec;
    use proptest::prelude::*;

    fn layout() -> YardLayout {
        YardLayout::new(vec![BlockSpec {
            block_id: "A".into(),
            bay_count: 10,
            row_count: 4,
            max_tier: 5,
            bay_pitch_m: 6.5,
            row_pitch_m: 2.9,
        }])
        .unwrap()
    }

    #[test]
    fn empty_stream() {
        assert!(parse_log_str("").unwrap().is_empty());
        assert!(parse_log_str("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn full_line() {
        let log = parse_log_str(
            r#"{"ts":"2024-03-01T08:15:00Z","kind":"YARD_SHIFT","container":"CMAU1234567","from":"A.05.3.2","to":"A.05.1.1","equipment":"RTG-02","attrs":{"iso_type":"22G1"}}"#,
        )
        .unwrap();
        let e = &log.events()[0];
        assert_eq!(e.kind, EventKind::YardShift);
        assert_eq!(e.seq, 0);
        assert_eq!(e.from_slot, Some("A.05.3.2".parse().unwrap()));
        assert_eq!(e.to_slot, Some(SlotAddress::new("A", 5, 1, 1)));
        assert_eq!(e.equipment_id.as_deref(), Some("RTG-02"));
        assert_eq!(e.attr_str("iso_type"), Some("22G1"));
    }

    #[test]
    fn ties_keep_file_order() {
        let text = concat!(
            r#"{"ts":"2024-03-01T09:00:00Z","kind":"GATE_IN","container":"B","to":"A.01.1.1"}"#, "\n",
            r#"{"ts":"2024-03-01T08:00:00Z","kind":"GATE_IN","container":"A","to":"A.01.2.1"}"#, "\n",
            r#"{"ts":"2024-03-01T09:00:00Z","kind":"GATE_IN","container":"C","to":"A.01.3.1"}"#, "\n",
        );
        let log = parse_log_str(text).unwrap();
        let ids: Vec<_> = log.events().iter().map(|e| e.container_id.clone().unwrap()).collect();
        assert_eq!(ids, ["A", "B", "C"]);
        assert_eq!(log.events().iter().map(|e| e.seq).collect::<Vec<_>>(), [1, 0, 2]);
    }

    #[test]
    fn schema_errors() {
        let err = parse_log_str(r#"{"ts":"2024-03-01T08:00:00Z","kind":"GATE_IN","container":"C1"}"#)
            .unwrap_err();
        assert!(matches!(err, ParseError::MissingRequiredField { field: "to", line: 1, .. }));

        let err = parse_log_str(r#"{"ts":"2024-03-01T08:00:00Z","kind":"TELEPORT","container":"C1"}"#)
            .unwrap_err();
        assert!(matches!(err, ParseError::UnknownEventKind { .. }));

        let err = parse_log_str("\n{not json").unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { line: 2, .. }));

        let err = parse_log_str(
            r#"{"ts":"2024-03-01T08:00:00Z","kind":"GATE_OUT","container":"C1","from":"A.01.1.1","to":"A.01.1.1"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::UnexpectedField { field: "to", .. }));

        let err = parse_log_str(r#"{"ts":"2024-03-01T08:00:00Z","kind":"CRANE_POS","to":"A.01.1.1"}"#)
            .unwrap_err();
        assert!(matches!(err, ParseError::MissingRequiredField { field: "equipment", .. }));

        let err = parse_log_str(r#"{"ts":"yesterday","kind":"CRANE_POS","to":"A.01.1.1","equipment":"R"}"#)
            .unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { .. }));

        let err = parse_log_str(r#"{"ts":"2024-03-01T08:00:00Z","kind":"CRANE_POS","to":"A.1.1.1","equipment":"R"}"#)
            .unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { .. }));

        let dup = concat!(
            r#"{"seq":4,"ts":"2024-03-01T08:00:00Z","kind":"CRANE_POS","to":"A.01.1.1","equipment":"R"}"#, "\n",
            r#"{"seq":4,"ts":"2024-03-01T08:00:00Z","kind":"CRANE_POS","to":"A.01.1.1","equipment":"R"}"#,
        );
        assert!(matches!(parse_log_str(dup).unwrap_err(), ParseError::DuplicateSeq { line: 2, seq: 4 }));
    }

    #[test]
    fn extra_fields_land_in_attrs() {
        let log = parse_log_str(
            r#"{"ts":"2024-03-01T08:00:00Z","kind":"GATE_IN","container":"C1","to":"A.01.1.1","truck":"TX-9","attrs":{"destination_port":"USLAX"}}"#,
        )
        .unwrap();
        let e = &log.events()[0];
        assert_eq!(e.attr_str("truck"), Some("TX-9"));
        assert_eq!(e.attr_str("destination_port"), Some("USLAX"));
        let again = parse_log_str(&log.to_jsonl()).unwrap();
        assert_eq!(again, log);
    }

    #[test]
    fn validation_findings() {
        let text = concat!(
            r#"{"ts":"2024-03-01T08:00:00Z","kind":"GATE_OUT","container":"GHOST","from":"A.01.1.1"}"#, "\n",
            r#"{"ts":"2024-03-01T08:05:00Z","kind":"GATE_IN","container":"C1","to":"A.01.1.9"}"#, "\n",
            r#"{"ts":"2024-03-01T08:10:00Z","kind":"GATE_IN","container":"C2","to":"A.01.2.1"}"#, "\n",
            r#"{"ts":"2024-03-01T08:20:00Z","kind":"GATE_IN","container":"C2","to":"A.01.3.1"}"#, "\n",
        );
        let v = validate_against(&parse_log_str(text).unwrap(), &layout());
        assert_eq!(
            v,
            vec![
                Violation { seq: 0, kind: ViolationKind::UnknownContainerRetrieval { container: "GHOST".into() } },
                Violation { seq: 1, kind: ViolationKind::AddressOutOfRange { slot: "A.01.1.9".into() } },
                Violation { seq: 3, kind: ViolationKind::DuplicateArrival { container: "C2".into() } },
            ]
        );
        assert_eq!(v[1].to_string(), "AddressOutOfRange@1: A.01.1.9");
    }

    #[test]
    fn window_bounds() {
        let a = time::parse("2024-03-01T08:00:00Z").unwrap();
        let b = time::parse("2024-03-01T09:00:00Z").unwrap();
        assert!(TimeWindow::new(b, a).is_err());
        let w = TimeWindow::new(a, b).unwrap();
        assert!(w.contains(&a) && w.contains(&b));
    }

    fn arb_event() -> impl Strategy<Value = String> {
        (
            0u32..5000,
            prop::sample::select(EventKind::ALL.to_vec()),
            1u32..10,
            1u32..4,
            prop::option::of("[a-z]{1,6}"),
        )
            .prop_map(|(minute, kind, bay, row, extra)| {
                let ts = time::format(
                    &(time::parse("2024-03-01T00:00:00Z").unwrap()
                        + chrono::Duration::minutes(minute as i64)),
                );
                let slot = format!("A.{bay:02}.{row}.1");
                let mut obj = serde_json::json!({"ts": ts, "kind": kind.as_str()});
                let rules = kind.rules();
                if rules.container == Presence::Required {
                    obj["container"] = "C1".into();
                }
                if rules.from == Presence::Required {
                    obj["from"] = slot.clone().into();
                }
                if rules.to == Presence::Required {
                    obj["to"] = slot.into();
                }
                if rules.equipment == Presence::Required {
                    obj["equipment"] = "RTG-1".into();
                }
                if let Some(x) = extra {
                    obj["note"] = x.into();
                }
                obj.to_string()
            })
    }

    proptest! {
        #[test]
        fn parse_is_deterministic_and_round_trips(lines in prop::collection::vec(arb_event(), 0..40)) {
            let text = lines.join("\n");
            let a = parse_log_str(&text).unwrap();
            let b = parse_log_str(&text).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.events().windows(2).all(|w| (w[0].timestamp, w[0].seq) < (w[1].timestamp, w[1].seq)));
            let again = parse_log_str(&a.to_jsonl()).unwrap();
            prop_assert_eq!(again, a);
        }
    }
}

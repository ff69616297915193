//! Timestamp parsing and the single textual form used in every output.

use chrono::{DateTime, SecondsFormat, Utc};

pub type Timestamp = DateTime<Utc>;

pub fn parse(text: &str) -> Result<Timestamp, chrono::ParseError> {
    DateTime::parse_from_rfc3339(text).map(|t| t.with_timezone(&Utc))
}

pub fn format(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Fractional days between two instants, rounded to one decimal.
pub fn days_between(from: &Timestamp, to: &Timestamp) -> f64 {
    let secs = (*to - *from).num_milliseconds() as f64 / 1000.0;
    round_tenth(secs / 86_400.0)
}

pub fn round_tenth(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// `#[serde(with = "crate::time::rfc3339")]`
pub mod rfc3339 {
    use super::Timestamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Same as [`rfc3339`] for optional fields.
pub mod rfc3339_opt {
    use super::Timestamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match ts {
            Some(ts) => s.serialize_str(&super::format(ts)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| super::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utc_form_is_z_suffixed() {
        let ts = parse("2024-03-01T09:15:00+01:00").unwrap();
        assert_eq!(format(&ts), "2024-03-01T08:15:00Z");
    }

    #[test]
    fn dwell_rounds_to_tenth() {
        let a = parse("2024-03-01T00:00:00Z").unwrap();
        let b = parse("2024-03-02T06:00:00Z").unwrap();
        assert_eq!(days_between(&a, &b), 1.3);
    }
}

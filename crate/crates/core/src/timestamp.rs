//! Second-precision UTC instants with a single textual form.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, TimeZone, Timelike, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A UTC instant truncated to whole seconds.
///
/// The only accepted textual form is `YYYY-MM-DDTHH:MM:SSZ`, which keeps
/// digests over serialized timestamps reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp {input:?}: expected RFC 3339 UTC with whole seconds, e.g. 2024-01-31T12:00:00Z")]
pub struct TimestampError {
    pub input: String,
}

impl Timestamp {
    pub fn now() -> Self {
        Self::from_datetime(Utc::now())
    }

    pub fn from_datetime(at: DateTime<Utc>) -> Self {
        Self(at.with_nanosecond(0).unwrap_or(at))
    }

    pub fn from_unix(secs: i64) -> Option<Self> {
        Utc.timestamp_opt(secs, 0).single().map(Self)
    }

    pub fn parse(input: &str) -> Result<Self, TimestampError> {
        let err = || TimestampError {
            input: input.to_string(),
        };
        let parsed = DateTime::parse_from_rfc3339(input).map_err(|_| err())?;
        let at = parsed.with_timezone(&Utc);
        let ts = Self(at);
        // Rejects offsets other than `Z`, fractional seconds and lowercase separators.
        if ts.to_string() != input {
            return Err(err());
        }
        Ok(ts)
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }

    pub fn unix_seconds(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn plus_seconds(&self, secs: i64) -> Self {
        Self(self.0 + chrono::Duration::seconds(secs))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Self::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_canonical_form() {
        let ts = Timestamp::parse("2024-03-01T08:30:00Z").unwrap();
        assert_eq!(ts.to_string(), "2024-03-01T08:30:00Z");
    }

    #[test]
    fn rejects_non_canonical_forms() {
        for bad in [
            "2024-03-01T08:30:00+00:00",
            "2024-03-01T08:30:00.5Z",
            "2024-03-01T09:30:00+01:00",
            "2024-03-01 08:30:00Z",
            "yesterday",
        ] {
            assert!(Timestamp::parse(bad).is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn truncates_subsecond_precision() {
        let at = Utc.timestamp_opt(1_700_000_000, 999_000_000).unwrap();
        assert_eq!(Timestamp::from_datetime(at).unix_seconds(), 1_700_000_000);
    }
}

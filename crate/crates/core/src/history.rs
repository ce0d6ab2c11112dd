//! Measurement history: append-only persistence and trend reporting.
//!
//! Since absolute estimates are population regressions, the supported way to
//! use them is to track change over time. The store is one newline-delimited
//! JSON file per profile under a home directory (overridable via the
//! `OPENBIA_HOME` environment variable), append-only, with strictly
//! increasing timestamps per profile. Single writer, any number of readers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{CompositionEstimate, ImpedanceReading, ResolvedCoding, SubjectProfile};

/// Environment variable that overrides the default store directory.
pub const HOME_ENV_VAR: &str = "OPENBIA_HOME";

/// One stored measurement: when it was taken, the inputs, and the estimate
/// produced from them. Immutable once written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
    pub profile: SubjectProfile,
    pub reading: ImpedanceReading,
    pub estimate: CompositionEstimate,
}

/// Change between two consecutive records. Interval estimates contribute
/// their midpoints, with the interval widths carried alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendDelta {
    pub from_timestamp: i64,
    pub to_timestamp: i64,
    pub delta_ffm_kg: f64,
    pub delta_bf_pp: f64,
    pub from_bf_width_pp: f64,
    pub to_bf_width_pp: f64,
}

/// Consecutive deltas and the net change over a window of records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub profile_id: String,
    pub n_records: usize,
    /// One delta per consecutive pair: `n_records - 1` entries.
    pub deltas: Vec<TrendDelta>,
    pub net_ffm_kg: f64,
    pub net_bf_pp: f64,
    /// Set when two or more distinct codings appear in the window;
    /// deltas across a coding change measure the coding, not the body.
    pub mixed_policies: bool,
}

/// Append-only measurement store rooted at a directory.
#[derive(Debug, Clone)]
pub struct HistoryStore {
    root: PathBuf,
}

fn validate_profile_id(profile_id: &str) -> Result<()> {
    if profile_id.is_empty()
        || !profile_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err(Error::Input(format!(
            "profile id `{profile_id}` must be nonempty and use only [A-Za-z0-9_-]"
        )));
    }
    Ok(())
}

impl HistoryStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    /// Opens the store at `OPENBIA_HOME`, or `$HOME/.openbia` when unset.
    pub fn from_env() -> Result<Self> {
        let root = match std::env::var_os(HOME_ENV_VAR) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => match std::env::var_os("HOME") {
                Some(home) if !home.is_empty() => Path::new(&home).join(".openbia"),
                _ => PathBuf::from(".openbia"),
            },
        };
        Self::open(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn history_path(&self, profile_id: &str) -> Result<PathBuf> {
        validate_profile_id(profile_id)?;
        Ok(self.root.join(format!("{profile_id}.jsonl")))
    }

    /// Appends one record. The timestamp must be strictly greater than the
    /// last stored timestamp for this profile.
    pub fn record_measurement(&self, profile_id: &str, record: &MeasurementRecord) -> Result<()> {
        let path = self.history_path(profile_id)?;
        if let Some(last) = self.read_history(profile_id)?.last() {
            if record.timestamp <= last.timestamp {
                return Err(Error::Ordering(format!(
                    "timestamp {} is not after the last recorded timestamp {} for profile `{profile_id}`",
                    record.timestamp, last.timestamp
                )));
            }
        }
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Input(format!("record does not serialize: {e}")))?;
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
        file.sync_all()?;
        Ok(())
    }

    /// Reads the full history of a profile, oldest first. A missing file is
    /// an empty history.
    pub fn read_history(&self, profile_id: &str) -> Result<Vec<MeasurementRecord>> {
        let path = self.history_path(profile_id)?;
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: MeasurementRecord = serde_json::from_str(line).map_err(|e| {
                Error::Parse(format!(
                    "history file {} line {}: {e}",
                    path.display(),
                    i + 1
                ))
            })?;
            records.push(record);
        }
        Ok(records)
    }

    /// Trend report over records with timestamps inside the closed window
    /// (`None` bounds are open). Errors when the window holds no records.
    pub fn trend_report(
        &self,
        profile_id: &str,
        from: Option<i64>,
        to: Option<i64>,
    ) -> Result<TrendReport> {
        let records: Vec<MeasurementRecord> = self
            .read_history(profile_id)?
            .into_iter()
            .filter(|r| from.is_none_or(|f| r.timestamp >= f))
            .filter(|r| to.is_none_or(|t| r.timestamp <= t))
            .collect();
        if records.is_empty() {
            return Err(Error::NotFound(format!(
                "no records for profile `{profile_id}` in the requested window"
            )));
        }
        Ok(trend_from_records(profile_id, &records))
    }
}

/// Builds a [`TrendReport`] from an ordered record slice.
pub fn trend_from_records(profile_id: &str, records: &[MeasurementRecord]) -> TrendReport {
    let summaries: Vec<(i64, f64, f64, f64, &ResolvedCoding)> = records
        .iter()
        .map(|r| {
            let mid = r.estimate.value.midpoint();
            (
                r.timestamp,
                mid.ffm_kg,
                mid.bf_percent,
                r.estimate.value.bf_width_pp(),
                &r.estimate.policy_used,
            )
        })
        .collect();
    let deltas = summaries
        .windows(2)
        .map(|pair| TrendDelta {
            from_timestamp: pair[0].0,
            to_timestamp: pair[1].0,
            delta_ffm_kg: pair[1].1 - pair[0].1,
            delta_bf_pp: pair[1].2 - pair[0].2,
            from_bf_width_pp: pair[0].3,
            to_bf_width_pp: pair[1].3,
        })
        .collect();
    let first = summaries.first().expect("nonempty");
    let last = summaries.last().expect("nonempty");
    let mut codings: Vec<&ResolvedCoding> = summaries.iter().map(|s| s.4).collect();
    codings.dedup();
    TrendReport {
        profile_id: profile_id.to_string(),
        n_records: records.len(),
        deltas,
        net_ffm_kg: last.1 - first.1,
        net_bf_pp: last.2 - first.2,
        mixed_policies: codings.len() > 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{CodingPolicy, EstimateValue, GenderEntry, SexCode};
    use crate::model::body_composition;
    use crate::registry::BUILTIN_EQUATION_ID;

    fn record(timestamp: i64, ffm: f64, coding: ResolvedCoding) -> MeasurementRecord {
        let profile =
            SubjectProfile::new(170.0, 70.0, None, false, GenderEntry::Male, None).unwrap();
        let reading = ImpedanceReading::new(500.0, 50.0, None).unwrap();
        MeasurementRecord {
            timestamp,
            profile: profile.clone(),
            reading,
            estimate: CompositionEstimate {
                value: EstimateValue::Point(body_composition(70.0, ffm).unwrap()),
                equation_id: BUILTIN_EQUATION_ID.into(),
                policy_used: coding,
                warnings: vec![],
            },
        }
    }

    #[test]
    fn append_to_empty_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = HistoryStore::open(dir.path()).unwrap();
        store
            .record_measurement(
                "alice",
                &record(100, 52.0, ResolvedCoding::Binary(SexCode::Male)),
            )
            .unwrap();
        assert_eq!(store.read_history("alice").unwrap().len(), 1);
    }

    #[test]
    fn older_timestamp_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = HistoryStore::open(dir.path()).unwrap();
        let coding = ResolvedCoding::Binary(SexCode::Male);
        store
            .record_measurement("alice", &record(100, 52.0, coding.clone()))
            .unwrap();
        assert!(matches!(
            store.record_measurement("alice", &record(100, 52.0, coding.clone())),
            Err(Error::Ordering(_))
        ));
        assert!(matches!(
            store.record_measurement("alice", &record(99, 52.0, coding)),
            Err(Error::Ordering(_))
        ));
    }

    #[test]
    fn write_then_read_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let store = HistoryStore::open(dir.path()).unwrap();
        let rec = record(100, 52.0, ResolvedCoding::IntervalBoth);
        store.record_measurement("alice", &rec).unwrap();
        let read = store.read_history("alice").unwrap();
        assert_eq!(read, vec![rec]);
    }

    #[test]
    fn profile_ids_are_restricted() {
        let dir = tempfile::tempdir().unwrap();
        let store = HistoryStore::open(dir.path()).unwrap();
        let rec = record(1, 52.0, ResolvedCoding::NoSexTerm);
        assert!(store.record_measurement("../escape", &rec).is_err());
        assert!(store.record_measurement("", &rec).is_err());
        assert!(store.record_measurement("ok-id_2", &rec).is_ok());
    }

    #[test]
    fn trend_deltas_between_consecutive_records() {
        // BF 30% at FFM 49, then BF 29% at FFM 49.7
        let records = vec![
            record(100, 49.0, ResolvedCoding::Binary(SexCode::Male)),
            record(200, 49.7, ResolvedCoding::Binary(SexCode::Male)),
        ];
        let report = trend_from_records("alice", &records);
        assert_eq!(report.deltas.len(), 1);
        assert!((report.deltas[0].delta_bf_pp - (-1.0)).abs() < 1e-12);
        assert!((report.net_bf_pp - (-1.0)).abs() < 1e-12);
        assert!(!report.mixed_policies);
    }

    #[test]
    fn single_record_trend_is_degenerate() {
        let records = vec![record(100, 49.0, ResolvedCoding::Binary(SexCode::Male))];
        let report = trend_from_records("alice", &records);
        assert!(report.deltas.is_empty());
        assert_eq!(report.net_ffm_kg, 0.0);
        assert_eq!(report.net_bf_pp, 0.0);
    }

    #[test]
    fn mixed_codings_are_flagged() {
        let records = vec![
            record(100, 52.7, ResolvedCoding::Binary(SexCode::Male)),
            record(200, 48.5, ResolvedCoding::Binary(SexCode::Female)),
        ];
        assert!(trend_from_records("alice", &records).mixed_policies);
    }

    #[test]
    fn windowed_trend_and_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let store = HistoryStore::open(dir.path()).unwrap();
        let coding = ResolvedCoding::Binary(SexCode::Male);
        for (t, ffm) in [(100, 52.0), (200, 51.5), (300, 51.0)] {
            store
                .record_measurement("alice", &record(t, ffm, coding.clone()))
                .unwrap();
        }
        let report = store.trend_report("alice", Some(150), Some(300)).unwrap();
        assert_eq!(report.n_records, 2);
        assert!(matches!(
            store.trend_report("alice", Some(400), None),
            Err(Error::NotFound(_))
        ));
        assert!(matches!(
            store.trend_report("nobody", None, None),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn interval_records_carry_widths() {
        let profile = SubjectProfile::new(
            170.0,
            70.0,
            None,
            false,
            GenderEntry::NonbinaryOrUnspecified,
            None,
        )
        .unwrap();
        let reading = ImpedanceReading::new(500.0, 50.0, None).unwrap();
        let interval = MeasurementRecord {
            timestamp: 100,
            profile,
            reading,
            estimate: CompositionEstimate {
                value: EstimateValue::Interval {
                    low: body_composition(70.0, 48.5064).unwrap(),
                    mid: body_composition(70.0, 50.6209).unwrap(),
                    high: body_composition(70.0, 52.7354).unwrap(),
                },
                equation_id: BUILTIN_EQUATION_ID.into(),
                policy_used: ResolvedCoding::IntervalBoth,
                warnings: vec![],
            },
        };
        let second = record(200, 50.0, ResolvedCoding::IntervalBoth);
        let report = trend_from_records("p", &[interval, second]);
        assert!(report.deltas[0].from_bf_width_pp > 6.0);
        assert_eq!(report.deltas[0].to_bf_width_pp, 0.0);
        // midpoint-based delta
        assert!((report.deltas[0].delta_ffm_kg - (50.0 - 50.6209)).abs() < 1e-12);
    }

    #[test]
    fn coding_policy_serialization_round_trip() {
        let policy = CodingPolicy::SexFree("myfit".into());
        let json = serde_json::to_string(&policy).unwrap();
        let back: CodingPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(policy, back);
    }
}

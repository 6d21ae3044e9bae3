//! WiFi-scan proximity similarity.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SubjectId;

pub const RSSI_FLOOR_DBM: f64 = -80.0;

/// One WiFi scan: access point identifier to RSSI in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub subject_id: SubjectId,
    pub timestamp_s: f64,
    pub readings: BTreeMap<String, f64>,
}

impl ScanRecord {
    /// Builds a record, dropping readings weaker than `floor_dbm`.
    pub fn new(
        subject_id: impl Into<SubjectId>,
        timestamp_s: f64,
        readings: impl IntoIterator<Item = (String, f64)>,
        floor_dbm: f64,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            timestamp_s,
            readings: readings.into_iter().filter(|(_, r)| *r >= floor_dbm).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProximityConfig {
    pub bucket_s: f64,
    pub match_tolerance_s: f64,
    pub distance_cap_db: f64,
    pub rssi_floor_dbm: f64,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        Self { bucket_s: 60.0, match_tolerance_s: 30.0, distance_cap_db: 30.0, rssi_floor_dbm: RSSI_FLOOR_DBM }
    }
}

impl ProximityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bucket_s > 0.0 && self.match_tolerance_s >= 0.0 && self.distance_cap_db > 0.0) {
            return Err(Error::param("proximity bucket, tolerance and cap must be positive"));
        }
        Ok(())
    }

    /// Similarity of a given mean RSSI distance.
    pub fn similarity_of(&self, distance_db: f64) -> f64 {
        1.0 - distance_db.min(self.distance_cap_db) / self.distance_cap_db
    }
}

/// Per-bucket proximity similarity of a subject pair; `None` marks buckets without a match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityFeatureSeries {
    pub subject_i: SubjectId,
    pub subject_j: SubjectId,
    pub bucket_start_s: f64,
    pub values: Vec<Option<f64>>,
}

impl ProximityFeatureSeries {
    pub fn defined(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// Mean absolute RSSI difference over the access points seen in both scans.
pub fn pair_distance(a: &ScanRecord, b: &ScanRecord) -> Option<f64> {
    let diffs: Vec<f64> = a
        .readings
        .iter()
        .filter_map(|(ap, ra)| b.readings.get(ap).map(|rb| (ra - rb).abs()))
        .collect();
    if diffs.is_empty() {
        None
    } else {
        Some(diffs.iter().sum::<f64>() / diffs.len() as f64)
    }
}

fn nearest(log: &[ScanRecord], t: f64, tol: f64) -> Option<&ScanRecord> {
    log.iter()
        .filter(|s| (s.timestamp_s - t).abs() <= tol)
        .min_by(|a, b| {
            (a.timestamp_s - t)
                .abs()
                .total_cmp(&(b.timestamp_s - t).abs())
                .then(a.timestamp_s.total_cmp(&b.timestamp_s))
        })
}

/// Buckets both logs and compares the scans nearest each bucket centre.
pub fn proximity_similarity(
    log_i: &[ScanRecord],
    log_j: &[ScanRecord],
    cfg: &ProximityConfig,
) -> Result<ProximityFeatureSeries> {
    cfg.validate()?;
    let ids = |log: &[ScanRecord]| log.first().map(|s| s.subject_id.clone()).unwrap_or_default();
    let (id_i, id_j) = (ids(log_i), ids(log_j));
    let times = log_i.iter().chain(log_j).map(|s| s.timestamp_s);
    let (lo, hi) = times.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(t), h.max(t)));
    if log_i.is_empty() || log_j.is_empty() {
        return Err(Error::InsufficientData(format!("no scans for pair {id_i}/{id_j}")));
    }
    let first = (lo / cfg.bucket_s).floor() as i64;
    let last = (hi / cfg.bucket_s).floor() as i64;
    let values: Vec<Option<f64>> = (first..=last)
        .map(|b| {
            let centre = (b as f64 + 0.5) * cfg.bucket_s;
            let a = nearest(log_i, centre, cfg.match_tolerance_s)?;
            let c = nearest(log_j, centre, cfg.match_tolerance_s)?;
            pair_distance(a, c).map(|d| cfg.similarity_of(d))
        })
        .collect();
    if values.iter().all(Option::is_none) {
        return Err(Error::InsufficientData(format!("no comparable buckets for pair {id_i}/{id_j}")));
    }
    Ok(ProximityFeatureSeries {
        subject_i: id_i,
        subject_j: id_j,
        bucket_start_s: first as f64 * cfg.bucket_s,
        values,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ScanRow {
    subject_id: String,
    timestamp_s: f64,
    bssid: String,
    rssi_dbm: f64,
}

/// Scans of one subject keyed by timestamp bits: (timestamp, readings).
type ScansByTime = BTreeMap<u64, (f64, Vec<(String, f64)>)>;

/// Reads `subject_id,timestamp_s,bssid,rssi_dbm` rows into per-subject, time-ordered logs.
pub fn read_scans_csv(path: &Path, floor_dbm: f64) -> Result<BTreeMap<SubjectId, Vec<ScanRecord>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let mut grouped: BTreeMap<SubjectId, ScansByTime> = BTreeMap::new();
    for row in rdr.deserialize::<ScanRow>() {
        let row = row.map_err(|e| Error::format(path, e))?;
        if !row.timestamp_s.is_finite() || !row.rssi_dbm.is_finite() {
            return Err(Error::format(path, "non-finite scan value"));
        }
        // Keyed by the bit pattern so equal timestamps group; order restored below.
        let entry = grouped
            .entry(row.subject_id)
            .or_default()
            .entry(row.timestamp_s.to_bits())
            .or_insert((row.timestamp_s, Vec::new()));
        entry.1.push((row.bssid, row.rssi_dbm));
    }
    Ok(grouped
        .into_iter()
        .map(|(id, scans)| {
            let mut log: Vec<ScanRecord> = scans
                .into_values()
                .map(|(t, r)| ScanRecord::new(id.clone(), t, r, floor_dbm))
                .collect();
            log.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
            (id, log)
        })
        .collect())
}

pub fn write_scans_csv(path: &Path, logs: &BTreeMap<SubjectId, Vec<ScanRecord>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e))?;
    for log in logs.values() {
        for s in log {
            for (ap, r) in &s.readings {
                w.serialize(ScanRow {
                    subject_id: s.subject_id.clone(),
                    timestamp_s: s.timestamp_s,
                    bssid: ap.clone(),
                    rssi_dbm: *r,
                })
                .map_err(|e| Error::format(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

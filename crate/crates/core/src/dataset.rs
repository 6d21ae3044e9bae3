//! On-disk dataset layout.
//!
//! ```text
//! <dir>/audio/<subject>.wav      16-bit mono recordings
//! <dir>/audio/timestamps.csv     optional subject_id,start_time_s
//! <dir>/scans.csv                optional subject_id,timestamp_s,bssid,rssi_dbm
//! <dir>/truth.json               optional ground truth
//! <dir>/scenario.json            optional generating scenario
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, write_wav, AudioTrace};
use crate::error::{Error, Result};
use crate::proximity::{read_scans_csv, write_scans_csv, ScanRecord};
use crate::sim::{synth_audio, synth_scans, GroundTruth, Scenario};
use crate::SubjectId;

pub const AUDIO_DIR: &str = "audio";
pub const TIMESTAMPS_FILE: &str = "timestamps.csv";
pub const SCANS_FILE: &str = "scans.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub traces: Vec<AudioTrace>,
    pub scans: BTreeMap<SubjectId, Vec<ScanRecord>>,
    pub truth: Option<GroundTruth>,
    pub scenario: Option<Scenario>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TimestampRow {
    subject_id: String,
    start_time_s: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

/// Writes traces, scans and optional metadata; returns the written files in a stable order.
pub fn write_dataset(
    dir: &Path,
    traces: &[AudioTrace],
    scans: &BTreeMap<SubjectId, Vec<ScanRecord>>,
    truth: Option<&GroundTruth>,
    scenario: Option<&Scenario>,
) -> Result<Vec<PathBuf>> {
    let audio = dir.join(AUDIO_DIR);
    std::fs::create_dir_all(&audio).map_err(|e| Error::io(&audio, e))?;
    let mut written = Vec::new();
    for t in traces {
        let p = audio.join(format!("{}.wav", t.subject_id));
        write_wav(&p, t)?;
        written.push(p);
    }
    let ts = audio.join(TIMESTAMPS_FILE);
    let mut w = csv::Writer::from_path(&ts).map_err(|e| Error::format(&ts, e))?;
    for t in traces {
        w.serialize(TimestampRow { subject_id: t.subject_id.clone(), start_time_s: t.start_time })
            .map_err(|e| Error::format(&ts, e))?;
    }
    w.flush().map_err(|e| Error::io(&ts, e))?;
    written.push(ts);
    if scans.values().any(|l| !l.is_empty()) {
        let p = dir.join(SCANS_FILE);
        write_scans_csv(&p, scans)?;
        written.push(p);
    }
    if let Some(t) = truth {
        let p = dir.join(TRUTH_FILE);
        write_json(&p, t)?;
        written.push(p);
    }
    if let Some(s) = scenario {
        let p = dir.join(SCENARIO_FILE);
        write_json(&p, s)?;
        written.push(p);
    }
    Ok(written)
}

/// Synthesises a scenario into a dataset directory.
pub fn generate_dataset(dir: &Path, scenario: &Scenario) -> Result<Vec<PathBuf>> {
    let traces = synth_audio(scenario)?;
    let scans = synth_scans(scenario)?;
    write_dataset(dir, &traces, &scans, Some(&scenario.ground_truth()), Some(scenario))
}

/// Loads `<subject>.wav` recordings (and optional start times) from one directory, ordered by subject id.
pub fn load_recordings(audio: &Path) -> Result<Vec<AudioTrace>> {
    let entries = std::fs::read_dir(audio).map_err(|e| Error::io(audio, e))?;
    let mut wavs: Vec<(SubjectId, PathBuf)> = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(audio, e))?.path();
        if p.extension().and_then(|x| x.to_str()) == Some("wav") {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            wavs.push((id, p));
        }
    }
    wavs.sort();
    if wavs.is_empty() {
        return Err(Error::InsufficientData(format!("no recordings in {}", audio.display())));
    }
    let mut starts: BTreeMap<SubjectId, f64> = BTreeMap::new();
    let ts = audio.join(TIMESTAMPS_FILE);
    if ts.exists() {
        let mut rdr = csv::Reader::from_path(&ts).map_err(|e| Error::format(&ts, e))?;
        for row in rdr.deserialize::<TimestampRow>() {
            let row = row.map_err(|e| Error::format(&ts, e))?;
            starts.insert(row.subject_id, row.start_time_s);
        }
    }
    wavs.iter().map(|(id, p)| read_wav(p, id, starts.get(id).copied().unwrap_or(0.0))).collect()
}

/// Loads a dataset directory.
pub fn load_dataset(dir: &Path, rssi_floor_dbm: f64) -> Result<Dataset> {
    let traces = load_recordings(&dir.join(AUDIO_DIR))?;
    let scans_path = dir.join(SCANS_FILE);
    let scans = if scans_path.exists() { read_scans_csv(&scans_path, rssi_floor_dbm)? } else { BTreeMap::new() };
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() { Some(read_json(&truth_path)?) } else { None };
    let scenario_path = dir.join(SCENARIO_FILE);
    let scenario = if scenario_path.exists() { Some(read_json(&scenario_path)?) } else { None };
    Ok(Dataset { traces, scans, truth, scenario })
}

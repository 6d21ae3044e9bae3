use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SubjectId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A timed position; tracks are piecewise-linear through their waypoints and held outside them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

pub(crate) fn position_on(track: &[Waypoint], t: f64) -> Point {
    let first = track[0];
    if t <= first.t {
        return Point::new(first.x, first.y);
    }
    for w in track.windows(2) {
        let (a, b) = (w[0], w[1]);
        if t <= b.t {
            let f = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 1.0 };
            return Point::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y));
        }
    }
    let last = track[track.len() - 1];
    Point::new(last.x, last.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoiceParams {
    pub fundamental_hz: f64,
    pub harmonics: usize,
    pub harmonic_rolloff_db_per_octave: f64,
    pub syllable_rate_hz: f64,
    /// Relative standard deviation of the pitch contour.
    pub intonation_depth: f64,
    pub intonation_rate_hz: f64,
}

impl Default for VoiceParams {
    fn default() -> Self {
        Self {
            fundamental_hz: 150.0,
            harmonics: 8,
            harmonic_rolloff_db_per_octave: 6.0,
            syllable_rate_hz: 4.0,
            intonation_depth: 0.05,
            intonation_rate_hz: 4.0,
        }
    }
}

impl VoiceParams {
    pub fn with_fundamental(fundamental_hz: f64) -> Self {
        Self { fundamental_hz, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectSpec {
    pub id: SubjectId,
    pub track: Vec<Waypoint>,
    #[serde(default = "one")]
    pub device_gain: f64,
    /// Device sample n is captured at true time n / fs + clock_offset_s.
    #[serde(default)]
    pub clock_offset_s: f64,
    #[serde(default = "yes")]
    pub has_scans: bool,
    #[serde(default)]
    pub voice: VoiceParams,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl SubjectSpec {
    pub fn stationary(id: impl Into<SubjectId>, at: Point, voice: VoiceParams) -> Self {
        Self {
            id: id.into(),
            track: vec![Waypoint { t: 0.0, x: at.x, y: at.y }],
            device_gain: 1.0,
            clock_offset_s: 0.0,
            has_scans: true,
            voice,
        }
    }

    pub fn position(&self, t: f64) -> Point {
        position_on(&self.track, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: SubjectId,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub members: Vec<SubjectId>,
    /// Explicit speaker schedule; when empty a rotating schedule is drawn from the seed.
    #[serde(default)]
    pub turns: Vec<Turn>,
    /// Members eligible for the drawn schedule; all members when empty.
    #[serde(default)]
    pub speakers: Vec<SubjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientKind {
    /// A continuous background talker.
    Voice(VoiceParams),
    /// Mains-style hum with harmonics of `fundamental_hz` at 1/k amplitude.
    Hum { fundamental_hz: f64, harmonics: usize },
    /// White noise.
    Broadband,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientSource {
    pub position: Point,
    /// Emitted level relative to a subject's voice.
    pub level: f64,
    pub kind: AmbientKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Sensor noise relative to a voice heard at 1 m; `None` disables it.
    pub snr_db: Option<f64>,
    pub ambient: Vec<AmbientSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessPoint {
    pub id: String,
    pub position: Point,
    /// Mounting height above the subjects' plane.
    #[serde(default)]
    pub height_m: f64,
    /// RSSI at 1 m.
    #[serde(default = "default_tx")]
    pub tx_power_dbm: f64,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
}

fn default_tx() -> f64 {
    -30.0
}

fn default_exponent() -> f64 {
    3.0
}

impl AccessPoint {
    pub fn new(id: impl Into<String>, position: Point, height_m: f64) -> Self {
        Self { id: id.into(), position, height_m, tx_power_dbm: default_tx(), path_loss_exponent: default_exponent() }
    }

    pub fn distance_to(&self, p: &Point) -> f64 {
        self.position.distance(p).hypot(self.height_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSpec {
    pub access_points: Vec<AccessPoint>,
    pub rssi_sigma_db: f64,
    pub scan_interval_s: f64,
    pub scan_span_s: f64,
}

impl Default for RadioSpec {
    fn default() -> Self {
        Self { access_points: Vec::new(), rssi_sigma_db: 2.0, scan_interval_s: 60.0, scan_span_s: 900.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: u32,
    pub subjects: Vec<SubjectSpec>,
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub radio: RadioSpec,
}

fn default_rate() -> u32 {
    crate::audio::DEFAULT_SAMPLE_RATE_HZ
}

/// Ground-truth grouping. Subjects outside every group appear as singletons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub window: [f64; 2],
    pub groups: Vec<Vec<SubjectId>>,
}

impl Scenario {
    pub fn subject(&self, id: &str) -> Option<&SubjectSpec> {
        self.subjects.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(format!("{}: {m}", self.name)));
        if !(self.duration_s > 0.0) || self.sample_rate_hz == 0 {
            return bad("duration and sample rate must be positive".into());
        }
        let mut ids = BTreeSet::new();
        for s in &self.subjects {
            if !ids.insert(s.id.as_str()) {
                return bad(format!("duplicate subject {}", s.id));
            }
            if s.track.is_empty() || s.track.windows(2).any(|w| w[1].t < w[0].t) {
                return bad(format!("track of {} must be non-empty and time-ordered", s.id));
            }
            if !(s.device_gain > 0.0) || !s.clock_offset_s.is_finite() {
                return bad(format!("device parameters of {} invalid", s.id));
            }
            let v = &s.voice;
            let nyquist = self.sample_rate_hz as f64 / 2.0;
            if !(v.fundamental_hz > 0.0 && v.fundamental_hz * (v.harmonics.max(1) as f64) < nyquist) {
                return bad(format!("voice of {} exceeds the Nyquist limit", s.id));
            }
        }
        let mut grouped = BTreeSet::new();
        for g in &self.groups {
            if g.members.is_empty() {
                return bad("empty group".into());
            }
            for m in &g.members {
                if !ids.contains(m.as_str()) {
                    return bad(format!("unknown group member {m}"));
                }
                if !grouped.insert(m.as_str()) {
                    return bad(format!("subject {m} is in more than one group"));
                }
            }
            if g.speakers.iter().any(|s| !g.members.contains(s)) {
                return bad("speakers must be group members".into());
            }
            let mut turns = g.turns.clone();
            turns.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
            for t in &turns {
                if !g.members.contains(&t.speaker) {
                    return bad(format!("speaker {} is not a member of its group", t.speaker));
                }
                if !(t.end_s > t.start_s) {
                    return bad(format!("empty turn for {}", t.speaker));
                }
            }
            if turns.windows(2).any(|w| w[1].start_s < w[0].end_s) {
                return bad("overlapping speaker turns within a group".into());
            }
        }
        if self.radio.access_points.is_empty() && self.subjects.iter().any(|s| s.has_scans) {
            return bad("subjects with scans need at least one access point".into());
        }
        if !(self.radio.scan_interval_s > 0.0 && self.radio.rssi_sigma_db >= 0.0) {
            return bad("scan interval must be positive".into());
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let mut groups: Vec<Vec<SubjectId>> = self.groups.iter().map(|g| g.members.clone()).collect();
        for s in &self.subjects {
            if !self.groups.iter().any(|g| g.members.contains(&s.id)) {
                groups.push(vec![s.id.clone()]);
            }
        }
        GroundTruth { window: [0.0, self.duration_s], groups }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sc: Scenario = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_snr(&self, snr_db: Option<f64>) -> Self {
        let mut s = self.clone();
        s.noise.snr_db = snr_db;
        s
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

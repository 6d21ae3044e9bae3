//! Scenario simulator: voiced audio with propagation, device effects and WiFi scans.

mod library;
mod scenario;
mod synth;
mod voice;

pub use library::{g6g7, library_scenario, s1, s2, s3, s4, s5, s6, s7, scenario_library};
pub use scenario::{
    AccessPoint, AmbientKind, AmbientSource, GroundTruth, GroupSpec, NoiseSpec, Point, RadioSpec, Scenario,
    SubjectSpec, Turn, VoiceParams, Waypoint,
};
pub use synth::{resolved_turns, synth_audio, synth_scans, FULL_SCALE, SPEED_OF_SOUND_M_S};
pub use voice::reference_rms;

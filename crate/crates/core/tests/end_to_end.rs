mod support;

use meetsense::audio::estimate_drift;
use meetsense::config::MeetSenseConfig;
use meetsense::dataset::{generate_dataset, load_dataset};
use meetsense::pipeline::{groupsense, prepare};
use meetsense::proximity::{proximity_similarity, ProximityConfig, RSSI_FLOOR_DBM};
use meetsense::sim::{s1, s5, synth_audio, synth_scans, Point, Scenario, SubjectSpec, VoiceParams};

fn short(mut sc: Scenario, secs: f64) -> Scenario {
    sc.duration_s = secs;
    sc.sample_rate_hz = 16_000;
    sc
}

#[test]
fn same_seed_gives_bit_identical_output() {
    let sc = short(s1(), 4.0);
    assert_eq!(synth_audio(&sc).unwrap(), synth_audio(&sc).unwrap());
    assert_eq!(synth_scans(&sc).unwrap(), synth_scans(&sc).unwrap());
    assert_ne!(synth_audio(&sc).unwrap(), synth_audio(&sc.with_seed(sc.seed + 1)).unwrap());
}

#[test]
fn trace_energy_falls_with_speaker_distance() {
    let mut sc = support::drift_scene(0.0, None, 1);
    sc.duration_s = 4.0;
    sc.subjects.truncate(1);
    for (k, d) in [0.7, 1.5, 3.0, 6.0, 12.0].iter().enumerate() {
        sc.subjects.push(SubjectSpec::stationary(format!("l{k}"), Point::new(*d, 0.0), VoiceParams::default()));
    }
    sc.groups[0].members = sc.subjects.iter().map(|s| s.id.clone()).collect();
    let traces = synth_audio(&sc).unwrap();
    let rms: Vec<f64> = traces[1..].iter().map(|t| t.rms()).collect();
    assert!(rms.windows(2).all(|w| w[0] > w[1]), "{rms:?}");
}

#[test]
fn injected_clock_offsets_are_recovered_exactly_without_noise() {
    for offset in [-3.0, -0.25, 0.5, 7.5] {
        let sc = support::drift_scene(offset, None, 5);
        let t = synth_audio(&sc).unwrap();
        let est = estimate_drift(&t[1], &t[2], 30.0).unwrap();
        assert!((est.shift_s + offset).abs() < 0.5 / sc.sample_rate_hz as f64, "{offset}: {}", est.shift_s);
    }
}

#[test]
fn nearby_pairs_look_closer_than_distant_pairs() {
    let sc = s1();
    let scans = synth_scans(&sc).unwrap();
    let cfg = ProximityConfig::default();
    let pos = |id: &str| sc.subject(id).unwrap().position(0.0);
    let (mut near, mut far) = (Vec::new(), Vec::new());
    let ids: Vec<&String> = scans.keys().collect();
    for (a, i) in ids.iter().enumerate() {
        for j in &ids[a + 1..] {
            let s = proximity_similarity(&scans[*i], &scans[*j], &cfg).unwrap().defined();
            let m = s.iter().sum::<f64>() / s.len() as f64;
            let d = pos(i).distance(&pos(j));
            if d <= 3.0 {
                near.push(m);
            } else if d >= 15.0 - 2.0 {
                far.push(m);
            }
        }
    }
    assert!(!near.is_empty() && !far.is_empty());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&near) > mean(&far), "{} vs {}", mean(&near), mean(&far));
}

#[test]
fn dataset_round_trip_preserves_detection() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short(s5(), 30.0);
    generate_dataset(dir.path(), &sc).unwrap();
    let cfg = MeetSenseConfig::default();
    let ds = load_dataset(dir.path(), RSSI_FLOOR_DBM).unwrap();
    let from_disk = groupsense(&prepare(&ds.traces, &cfg.audio).unwrap(), &ds.scans, &cfg).unwrap().0;
    let raw = synth_audio(&sc).unwrap();
    let in_memory = groupsense(&prepare(&raw, &cfg.audio).unwrap(), &synth_scans(&sc).unwrap(), &cfg).unwrap().0;
    assert_eq!(from_disk, in_memory);
    assert_eq!(from_disk.groups, sc.ground_truth().groups);
}

#[test]
fn a_lone_recording_is_an_insufficient_population() {
    let mut sc = short(s5(), 5.0);
    sc.subjects.truncate(1);
    sc.groups.truncate(1);
    sc.groups[0].members.truncate(1);
    let raw = synth_audio(&sc).unwrap();
    let cfg = MeetSenseConfig::default();
    let err = groupsense(&prepare(&raw, &cfg.audio).unwrap(), &synth_scans(&sc).unwrap(), &cfg).unwrap_err();
    assert!(matches!(err, meetsense::Error::InsufficientPopulation(_)));
}

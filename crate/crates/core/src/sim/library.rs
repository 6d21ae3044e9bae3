//! Built-in scenario analogs.

use std::f64::consts::PI;

use super::scenario::*;
use crate::SubjectId;

const FUNDAMENTALS: [f64; 12] = [110.0, 175.0, 235.0, 140.0, 205.0, 125.0, 190.0, 160.0, 250.0, 100.0, 220.0, 150.0];
const TABLE_RADIUS_M: f64 = 0.8;
const MULTI_ROOM_PATH_LOSS_EXPONENT: f64 = 4.0;

struct Builder {
    scenario: Scenario,
}

impl Builder {
    fn new(name: &str, description: &str, duration_s: f64, snr_db: Option<f64>) -> Self {
        Self {
            scenario: Scenario {
                name: name.into(),
                description: description.into(),
                seed: 2024,
                duration_s,
                sample_rate_hz: crate::audio::DEFAULT_SAMPLE_RATE_HZ,
                subjects: Vec::new(),
                groups: Vec::new(),
                noise: NoiseSpec { snr_db, ambient: Vec::new() },
                radio: RadioSpec::default(),
            },
        }
    }

    fn next_id(&self) -> SubjectId {
        format!("u{}", self.scenario.subjects.len() + 1)
    }

    fn add_subject(&mut self, track: Vec<Waypoint>) -> SubjectId {
        let id = self.next_id();
        let f0 = FUNDAMENTALS[self.scenario.subjects.len() % FUNDAMENTALS.len()];
        self.scenario.subjects.push(SubjectSpec {
            id: id.clone(),
            track,
            device_gain: 1.0,
            clock_offset_s: 0.0,
            has_scans: true,
            voice: VoiceParams::with_fundamental(f0),
        });
        id
    }

    /// Seats `n` subjects around a table moving along `path` (table-centre waypoints).
    fn table(&mut self, path: &[Waypoint], n: usize, speakers: Option<&[usize]>) -> Vec<SubjectId> {
        let ids: Vec<SubjectId> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                let (dx, dy) = (TABLE_RADIUS_M * a.cos(), TABLE_RADIUS_M * a.sin());
                self.add_subject(path.iter().map(|w| Waypoint { t: w.t, x: w.x + dx, y: w.y + dy }).collect())
            })
            .collect();
        let speakers = speakers.map(|s| s.iter().map(|&k| ids[k].clone()).collect()).unwrap_or_default();
        self.scenario.groups.push(GroupSpec { members: ids.clone(), turns: Vec::new(), speakers });
        ids
    }

    fn ap(&mut self, id: &str, x: f64, y: f64, height_m: f64) -> &mut Self {
        self.scenario.radio.access_points.push(AccessPoint::new(id, Point::new(x, y), height_m));
        self
    }

    /// Walls between rooms steepen the path-loss slope.
    fn multi_room(&mut self) -> &mut Self {
        for ap in &mut self.scenario.radio.access_points {
            ap.path_loss_exponent = MULTI_ROOM_PATH_LOSS_EXPONENT;
        }
        self
    }

    fn ambient(&mut self, x: f64, y: f64, level: f64, kind: AmbientKind) -> &mut Self {
        self.scenario.noise.ambient.push(AmbientSource { position: Point::new(x, y), level, kind });
        self
    }

    fn build(self) -> Scenario {
        self.scenario
    }
}

fn at(x: f64, y: f64) -> Vec<Waypoint> {
    vec![Waypoint { t: 0.0, x, y }]
}

fn walk(points: &[(f64, f64, f64)]) -> Vec<Waypoint> {
    points.iter().map(|&(t, x, y)| Waypoint { t, x, y }).collect()
}

/// Two groups in neighbouring rooms across a corridor.
pub fn s1() -> Scenario {
    let mut b = Builder::new("S1", "indoor: two groups (3 and 2) in neighbouring rooms", 60.0, Some(25.0));
    b.table(&at(0.0, 0.0), 3, Some(&[0]));
    b.table(&at(15.0, 0.0), 2, None);
    b.ap("room-a", 0.0, 0.0, 2.5).ap("room-b", 15.0, 0.0, 2.5).multi_room();
    b.build()
}

/// Three groups (4, 2, 2) in different rooms of one building.
pub fn s2() -> Scenario {
    let mut b = Builder::new("S2", "indoor: three groups (4, 2, 2) in different rooms", 60.0, Some(25.0));
    b.table(&at(0.0, 0.0), 4, None);
    b.table(&at(14.0, 0.0), 2, None);
    b.table(&at(0.0, -20.0), 2, None);
    b.ap("office", 0.0, 0.0, 2.5).ap("library", 14.0, 0.0, 2.5).ap("lab", 0.0, -20.0, 2.5).multi_room();
    b.build()
}

/// Two groups of 3 at the front and back of a noisy cafeteria.
pub fn s3() -> Scenario {
    let mut b = Builder::new("S3", "outdoor: two cafeteria groups of 3 with background talkers and hum", 60.0, Some(5.0));
    b.table(&at(0.0, 0.0), 3, None);
    b.table(&at(16.0, 0.0), 3, None);
    b.ap("cafeteria", 8.0, 6.0, 3.0).ap("kitchen", 8.0, -9.0, 3.0);
    b.ambient(8.0, 4.0, 1.0, AmbientKind::Voice(VoiceParams::with_fundamental(132.0)))
        .ambient(8.0, -4.0, 1.0, AmbientKind::Voice(VoiceParams::with_fundamental(182.0)))
        .ambient(8.0, 10.0, 8.0, AmbientKind::Hum { fundamental_hz: 50.0, harmonics: 40 });
    b.build()
}

/// One presentation audience of 7.
pub fn s4() -> Scenario {
    let mut b = Builder::new("S4", "indoor: one large group of 7 attending a presentation", 60.0, Some(25.0));
    let mut tracks = vec![at(0.0, 0.0)];
    for row in 0..2 {
        for seat in 0..3 {
            tracks.push(at(2.0 + 1.2 * row as f64, -1.2 + 1.2 * seat as f64));
        }
    }
    let ids: Vec<SubjectId> = tracks.into_iter().map(|t| b.add_subject(t)).collect();
    b.scenario.groups.push(GroupSpec { members: ids.clone(), turns: Vec::new(), speakers: vec![ids[0].clone()] });
    b.ap("conference", 2.0, 0.0, 2.5);
    b.build()
}

/// Two groups of 3 at distant cubicles of one large lab.
pub fn s5() -> Scenario {
    let mut b = Builder::new("S5", "indoor: two groups of 3 at two cubicles of one large lab", 60.0, Some(25.0));
    b.table(&at(0.0, 0.0), 3, None);
    b.table(&at(12.0, 0.0), 3, None);
    b.ap("lab-east", 0.0, 0.0, 2.0).ap("lab-west", 12.0, 0.0, 2.0);
    b.build()
}

/// Two groups (3 and 2) walking the corridors of one building.
pub fn s6() -> Scenario {
    let mut b = Builder::new("S6", "indoor: two roaming groups (3 and 2) moving between rooms", 60.0, Some(25.0));
    b.table(&walk(&[(0.0, 0.0, 0.0), (60.0, 30.0, 0.0), (300.0, 30.0, 8.0), (900.0, 30.0, 8.0)]), 3, None);
    b.table(&walk(&[(0.0, 45.0, 0.0), (60.0, 60.0, 0.0), (300.0, 60.0, -8.0), (900.0, 60.0, -8.0)]), 2, None);
    for k in 0..7 {
        b.ap(&format!("corridor-{k}"), 10.0 * k as f64, 0.0, 2.5);
    }
    b.build()
}

/// Two groups (5 and 2) walking across campus at a distance.
pub fn s7() -> Scenario {
    let mut b = Builder::new("S7", "outdoor: two roaming groups (5 and 2) across campus", 60.0, Some(15.0));
    b.table(&walk(&[(0.0, 0.0, 0.0), (900.0, 80.0, 0.0)]), 5, None);
    b.table(&walk(&[(0.0, 0.0, 25.0), (900.0, 80.0, 25.0)]), 2, None);
    for k in 0..5 {
        b.ap(&format!("building-{k}"), 20.0 * k as f64, 45.0, 4.0);
    }
    b.scenario.radio.rssi_sigma_db = 4.0;
    b.ambient(40.0, -15.0, 3.0, AmbientKind::Broadband);
    b.build()
}

/// Two roadside groups 18 m apart; the second member of the first group walks over to the other.
pub fn g6g7() -> Scenario {
    let mut b = Builder::new("G6G7", "outdoor: groups 18 m apart, one member walks between them over 66 s", 66.0, Some(25.0));
    b.table(&at(0.0, 0.0), 3, None);
    b.table(&at(18.0, 0.0), 3, None);
    let s = &mut b.scenario;
    s.subjects[1].track = walk(&[(0.0, 0.8, 0.0), (66.0, 17.2, 0.0)]);
    for subject in &mut s.subjects {
        subject.has_scans = false;
    }
    s.groups[0].turns = vec![Turn { speaker: "u1".into(), start_s: 0.0, end_s: 66.0 }];
    s.groups[1].turns = vec![Turn { speaker: "u4".into(), start_s: 0.0, end_s: 66.0 }];
    b.build()
}

/// All built-in scenarios in order.
pub fn scenario_library() -> Vec<Scenario> {
    vec![s1(), s2(), s3(), s4(), s5(), s6(), s7(), g6g7()]
}

pub fn library_scenario(name: &str) -> Option<Scenario> {
    scenario_library().into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_is_valid() {
        let lib = scenario_library();
        assert_eq!(lib.len(), 8);
        for s in &lib {
            s.validate().unwrap();
        }
    }

    #[test]
    fn library_shapes() {
        let s4 = library_scenario("s4").unwrap();
        assert_eq!(s4.groups.len(), 1);
        assert_eq!(s4.groups[0].members.len(), 7);
        assert_eq!(s4.groups[0].speakers.len(), 1);
        let s3 = library_scenario("S3").unwrap();
        assert_eq!(s3.groups.iter().map(|g| g.members.len()).collect::<Vec<_>>(), vec![3, 3]);
        assert_eq!(s3.noise.snr_db, Some(5.0));
        let g = library_scenario("G6G7").unwrap();
        assert_eq!(g.duration_s, 66.0);
        assert!(g.subjects[1].track.len() == 2);
    }
}

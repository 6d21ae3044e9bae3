mod support;

use std::collections::BTreeMap;

use meetsense::audio::{acoustic_similarity, bandpass, ccep, estimate_drift, normalize, AcousticConfig, AudioTrace};
use meetsense::baselines::{audiomatch_similarity, next2me_similarity, AudioMatchConfig, Next2MeConfig};
use meetsense::community::{detect_communities, modularity, Algorithm, CommunityConfig, Partition, SimilarityGraph};
use meetsense::detector::{detect, proximity_available, DecisionPath, DetectorConfig};
use meetsense::eval::{f1_overall, f1_pair};
use meetsense::features::{feature_construct, FeatureConfig};
use meetsense::pipeline::{FeatureSet, PairMatrix};
use meetsense::proximity::{proximity_similarity, ProximityConfig, ScanRecord, RSSI_FLOOR_DBM};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: u32 = 16_000;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

fn voiced(secs: f64, f0: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * FS as f64) as usize;
    let mut phase = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / FS as f64;
            let f = f0 * (1.0 + 0.05 * (2.0 * std::f64::consts::PI * 0.7 * t).sin());
            phase += 2.0 * std::f64::consts::PI * f / FS as f64;
            let v: f64 = (1..=8).map(|k| (k as f64 * phase).sin() / k as f64).sum();
            0.3 * v + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

fn trace(id: &str, samples: Vec<f64>) -> AudioTrace {
    AudioTrace::new(id, FS, 0.0, samples).expect("valid trace")
}

fn graph_from(n: usize, weights: &[f64]) -> SimilarityGraph {
    let mut k = 0;
    SimilarityGraph::from_fn((0..n).map(|i| format!("s{i}")).collect(), |_, _| {
        let w = weights[k % weights.len()];
        k += 1;
        w
    })
    .unwrap()
}

fn feature_set(n: usize, acoustic: &[f64], prox: &[f64], with_prox: &[bool]) -> FeatureSet {
    let mut a = PairMatrix::new(n);
    let mut p = PairMatrix::new(n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            a.set(i, j, Some(acoustic[k % acoustic.len()]));
            if with_prox[i] && with_prox[j] {
                p.set(i, j, Some(prox[k % prox.len()]));
            }
            k += 1;
        }
    }
    FeatureSet {
        subjects: (0..n).map(|i| format!("s{i}")).collect(),
        has_proximity: with_prox.to_vec(),
        acoustic: a,
        proximity: p,
    }
}

fn scan(id: &str, t: f64, readings: &[(&str, f64)]) -> ScanRecord {
    ScanRecord::new(id, t, readings.iter().map(|(a, r)| (a.to_string(), *r)), RSSI_FLOOR_DBM)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn drift_recovered_within_one_sample(delay in -8000i64..8000, seed in 0u64..1000) {
        let src = noise(4 * FS as usize + 20_000, seed);
        let base = 10_000usize;
        let reference = trace("r", src[base..base + 4 * FS as usize].to_vec());
        let start = (base as i64 - delay) as usize;
        let mut target = src[start..start + 4 * FS as usize].to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let sd = 0.5 / 3f64.sqrt() * 10f64.powf(-20.0 / 20.0);
        target.iter_mut().for_each(|v| *v += rng.gen_range(-1.0..1.0) * sd * 3f64.sqrt());
        let est = estimate_drift(&reference, &trace("t", target), 1.0).unwrap();
        prop_assert!((est.shift_s - delay as f64 / FS as f64).abs() <= 1.0 / FS as f64 + 1e-12);
        prop_assert!(est.shift_s.abs() <= 1.0);
    }

    #[test]
    fn acoustic_similarity_is_gain_invariant_and_symmetric(gain in 0.1f64..10.0, f0 in 100.0f64..250.0, seed in 0u64..100) {
        let x = voiced(3.0, f0, seed);
        let a = trace("a", x.clone());
        let b = trace("b", x.iter().map(|v| v * gain).collect());
        let cfg = AcousticConfig::default();
        let s = acoustic_similarity(&a, &b, &cfg).unwrap();
        for v in s.defined() {
            prop_assert!(v >= 0.99, "{v}");
        }
        let other = trace("c", voiced(3.0, f0 * 1.37, seed + 1));
        let ac = acoustic_similarity(&a, &other, &cfg).unwrap();
        let ca = acoustic_similarity(&other, &a, &cfg).unwrap();
        prop_assert_eq!(ac.values, ca.values);
    }

    #[test]
    fn normalize_peaks_at_one(v in prop::collection::vec(-3.0f64..3.0, 1..200)) {
        let t = normalize(&trace("a", v.clone()));
        let peak = t.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if v.iter().any(|x| *x != 0.0) {
            prop_assert!((peak - 1.0).abs() < 1e-9);
        } else {
            prop_assert_eq!(peak, 0.0);
        }
    }

    #[test]
    fn ccep_is_deterministic(v in prop::collection::vec(-1.0f64..1.0, 16..256)) {
        let a = ccep(&v);
        let b = ccep(&v);
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.iter().map(|f| f.to_bits()).collect::<Vec<_>>(), y.iter().map(|f| f.to_bits()).collect::<Vec<_>>()),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "differing outcomes"),
        }
    }
}

#[test]
fn bandpass_is_idempotent_in_band() {
    // Tones where the passband is flat to well below 1e-6.
    let x: Vec<f64> = (0..2 * FS as usize)
        .map(|i| {
            let t = i as f64 / FS as f64;
            [(850.0, 0.2), (1000.0, 1.1), (1200.0, 2.3)]
                .iter()
                .map(|(f, p)| (2.0 * std::f64::consts::PI * f * t + p).sin())
                .sum::<f64>()
        })
        .collect();
    let once = bandpass(&trace("a", x), 300.0, 3400.0).unwrap();
    let twice = bandpass(&once, 300.0, 3400.0).unwrap();
    let peak = once.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Compare away from the edges where the filter transient lives.
    let k = FS as usize / 2;
    let worst = once.samples[k..once.samples.len() - k]
        .iter()
        .zip(&twice.samples[k..twice.samples.len() - k])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst / peak <= 1e-6, "{}", worst / peak);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn proximity_is_symmetric_and_bounded(
        ri in prop::collection::vec(-79.0f64..-30.0, 3),
        rj in prop::collection::vec(-79.0f64..-30.0, 3),
        dt in 0.0f64..20.0,
    ) {
        let aps = ["x", "y", "z"];
        let log = |id: &str, r: &[f64], shift: f64| -> Vec<ScanRecord> {
            (0..5).map(|k| scan(id, k as f64 * 60.0 + shift, &aps.iter().zip(r).map(|(a, v)| (*a, *v - k as f64)).collect::<Vec<_>>())).collect()
        };
        let (a, b) = (log("a", &ri, 0.0), log("b", &rj, dt));
        let cfg = ProximityConfig::default();
        let ab = proximity_similarity(&a, &b, &cfg).unwrap();
        let ba = proximity_similarity(&b, &a, &cfg).unwrap();
        prop_assert_eq!(&ab.values, &ba.values);
        for v in ab.defined() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn proximity_similarity_falls_as_any_reading_moves_apart(
        ri in prop::collection::vec(-70.0f64..-40.0, 3),
        rj in prop::collection::vec(-70.0f64..-40.0, 3),
        which in 0usize..3,
        extra in 0.0f64..15.0,
    ) {
        let aps = ["x", "y", "z"];
        let mk = |id: &str, r: &[f64]| vec![scan(id, 30.0, &aps.iter().zip(r).map(|(a, v)| (*a, *v)).collect::<Vec<_>>())];
        let cfg = ProximityConfig::default();
        let base = proximity_similarity(&mk("a", &ri), &mk("b", &rj), &cfg).unwrap().values[0].unwrap();
        let mut moved = rj.clone();
        moved[which] += if rj[which] >= ri[which] { extra } else { -extra };
        moved[which] = moved[which].clamp(-79.0, -20.0);
        let after = proximity_similarity(&mk("a", &ri), &mk("b", &moved), &cfg).unwrap().values[0].unwrap();
        prop_assert!(after <= base + 1e-12, "{base} -> {after}");
    }

    #[test]
    fn refined_feature_bounds_and_permutation_invariance(
        v in prop::collection::vec(-1.0f64..1.0, 1..80),
        seed in 0u64..1000,
    ) {
        let cfg = FeatureConfig::default();
        let r = feature_construct(&v, &cfg).unwrap();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.mean_value >= lo - 1e-12 && r.mean_value <= hi + 1e-12);
        prop_assert!(r.used_count > 0 && r.used_count <= r.total_count && r.total_count == v.len());
        let mut shuffled = v.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let s = feature_construct(&shuffled, &cfg).unwrap();
        prop_assert!((s.mean_value - r.mean_value).abs() < 1e-12);
        prop_assert_eq!(s.used_count, r.used_count);
    }

    #[test]
    fn detection_beats_whole_and_partitions_every_node(
        n in 2usize..9,
        w in prop::collection::vec(0.0f64..1.0, 28),
        algorithm in prop_oneof![Just(Algorithm::Walktrap), Just(Algorithm::Louvain)],
    ) {
        let g = graph_from(n, &w);
        prop_assume!(g.total_weight() > 0.0);
        let d = detect_communities(&g, &CommunityConfig { algorithm, ..Default::default() });
        let mut seen: Vec<usize> = d.partition.communities().iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert!((-1.0..=1.0).contains(&d.modularity));
        prop_assert!(d.modularity >= modularity(&g, &Partition::whole(n)).unwrap() - 1e-12);
        prop_assert!((modularity(&g, &d.partition).unwrap() - d.modularity).abs() < 1e-12);
    }

    #[test]
    fn detection_is_scale_invariant(n in 2usize..9, w in prop::collection::vec(0.0f64..1.0, 28), factor in 0.01f64..100.0) {
        let g = graph_from(n, &w);
        prop_assume!(g.total_weight() > 0.0);
        let cfg = CommunityConfig::default();
        let a = detect_communities(&g, &cfg);
        let b = detect_communities(&g.scaled(factor), &cfg);
        prop_assert_eq!(a.partition, b.partition);
        prop_assert!((a.modularity - b.modularity).abs() < 1e-9);
    }

    #[test]
    fn relabelling_nodes_permutes_modularity_consistently(
        n in 2usize..9,
        w in prop::collection::vec(0.0f64..1.0, 28),
        seed in 0u64..1000,
    ) {
        let g = graph_from(n, &w);
        prop_assume!(g.total_weight() > 0.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let h = SimilarityGraph::from_fn(g.nodes().to_vec(), |a, b| g.weight(perm[a], perm[b])).unwrap();
        let cfg = CommunityConfig::default();
        let dg = detect_communities(&g, &cfg);
        let dh = detect_communities(&h, &cfg);
        // Mapping h's partition back through the permutation scores identically on g.
        let back = Partition::new(dh.partition.communities().iter().map(|c| c.iter().map(|&i| perm[i]).collect()).collect());
        prop_assert!((modularity(&g, &back).unwrap() - dh.modularity).abs() < 1e-9);
        prop_assert!((dg.modularity - dh.modularity).abs() < 0.02);
    }

    #[test]
    fn detector_is_deterministic_and_disjoint(
        n in 2usize..9,
        a in prop::collection::vec(-0.3f64..1.0, 28),
        p in prop::collection::vec(0.0f64..1.0, 28),
        with in prop::collection::vec(any::<bool>(), 8),
    ) {
        let f = feature_set(n, &a, &p, &with[..n]);
        let cfg = DetectorConfig::default();
        let c = CommunityConfig::default();
        let r1 = detect(&f, &cfg, &c).unwrap();
        let r2 = detect(&f, &cfg, &c).unwrap();
        prop_assert_eq!(&r1, &r2);
        let mut all: Vec<&String> = r1.groups.iter().flatten().collect();
        let len = all.len();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), len);
        prop_assert!(all.iter().all(|s| f.subjects.contains(s)));
    }

    #[test]
    fn raising_audio_threshold_never_accepts_a_rejection(
        n in 2usize..9,
        a in prop::collection::vec(-0.3f64..1.0, 28),
        p in prop::collection::vec(0.0f64..1.0, 28),
        with in prop::collection::vec(any::<bool>(), 8),
        lo in 0.0f64..0.5,
        step in 0.0f64..0.5,
    ) {
        let f = feature_set(n, &a, &p, &with[..n]);
        let c = CommunityConfig::default();
        let low = DetectorConfig { delta_alpha: lo, ..Default::default() };
        let high = DetectorConfig { delta_alpha: lo + step, ..Default::default() };
        let rl = detect(&f, &low, &c).unwrap();
        let rh = detect(&f, &high, &c).unwrap();
        if rl.decision_path == DecisionPath::Rejected {
            prop_assert_eq!(rh.decision_path, DecisionPath::Rejected);
        }
    }

    #[test]
    fn weighted_sweep_dominates_its_endpoints(
        n in 3usize..9,
        a in prop::collection::vec(0.0f64..1.0, 28),
        p in prop::collection::vec(0.0f64..1.0, 28),
    ) {
        let f = feature_set(n, &a, &p, &[true; 8][..n]);
        // Send every structured proximity partition through the weighted combination.
        let cfg = DetectorConfig { delta_p1: 1.0, delta_p2: 0.0, ..Default::default() };
        let c = CommunityConfig::default();
        let members: Vec<usize> = (0..n).collect();
        let r = proximity_available(&f, &members, &cfg, &c);
        let Some(stage) = r.modularities.iter().find(|s| s.stage.starts_with("combined")) else {
            return Ok(());
        };
        let prox = f.proximity.graph(&f.subjects, &members);
        let ac = f.acoustic.graph(&f.subjects, &members);
        for w in [0.0, 1.0] {
            let q = detect_communities(&prox.blend(&ac, w).unwrap(), &c).modularity;
            prop_assert!(stage.value >= q - 1e-12, "w={w}: {} < {q}", stage.value);
        }
    }

    #[test]
    fn f1_pair_is_symmetric_and_bounded(
        a in prop::collection::btree_set(0u8..12, 0..8),
        b in prop::collection::btree_set(0u8..12, 0..8),
    ) {
        let a: Vec<String> = a.into_iter().map(|x| x.to_string()).collect();
        let b: Vec<String> = b.into_iter().map(|x| x.to_string()).collect();
        let ab = f1_pair(&a, &b);
        prop_assert_eq!(ab, f1_pair(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn f1_overall_is_one_for_any_reordering(labels in prop::collection::vec(0usize..4, 1..12), seed in 0u64..100) {
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(*l).or_default().push(format!("s{i}"));
        }
        let truth: Vec<Vec<String>> = groups.into_values().collect();
        let mut detected = truth.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in &mut detected {
            for i in (1..g.len()).rev() {
                g.swap(i, rng.gen_range(0..=i));
            }
        }
        detected.reverse();
        prop_assert_eq!(f1_overall(&truth, &detected), 1.0);
        if truth.len() > 1 {
            let merged: Vec<Vec<String>> = vec![truth.concat()];
            prop_assert!(f1_overall(&truth, &merged) < 1.0);
        }
    }
}

#[test]
fn f1_overall_is_directional() {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let truth = vec![s(&["a", "b", "c"])];
    let detected = vec![s(&["a", "b"]), s(&["c"])];
    assert_ne!(f1_overall(&truth, &detected), f1_overall(&detected, &truth));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn baseline_similarities_are_bounded_and_deterministic(seed in 0u64..1000, f0 in 100.0f64..250.0) {
        let a = trace("a", voiced(3.0, f0, seed));
        let b = trace("b", noise(3 * FS as usize, seed + 7));
        let n1 = next2me_similarity(&a, &b, &Next2MeConfig::default()).unwrap();
        prop_assert_eq!(&n1, &next2me_similarity(&a, &b, &Next2MeConfig::default()).unwrap());
        prop_assert!(n1.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        let m1 = audiomatch_similarity(&a, &b, &AudioMatchConfig::default()).unwrap();
        prop_assert_eq!(&m1, &audiomatch_similarity(&a, &b, &AudioMatchConfig::default()).unwrap());
        prop_assert!(m1.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn walktrap_corpus_stays_near_exhaustive_optimum() {
    for g in support::modularity_corpus(11, 1000) {
        let (best, _) = support::exhaustive_best(&g);
        let d = detect_communities(&g, &CommunityConfig::default());
        assert!(best - d.modularity <= 0.02, "gap {}", best - d.modularity);
    }
}

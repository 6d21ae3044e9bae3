//! Shared oracles and generators for integration and acceptance tests.
#![allow(dead_code)]

use meetsense::community::{modularity, Partition, SimilarityGraph};
use meetsense::sim::{AccessPoint, GroupSpec, NoiseSpec, Point, RadioSpec, Scenario, SubjectSpec, Turn, VoiceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best modularity over every partition of the graph's nodes, by restricted-growth enumeration.
pub fn exhaustive_best(g: &SimilarityGraph) -> (f64, Partition) {
    let n = g.len();
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, Partition::whole(n));
    loop {
        let p = Partition::from_labels(&labels);
        let q = modularity(g, &p).expect("graph has weight");
        if q > best.0 {
            best = (q, p);
        }
        let mut i = n - 1;
        loop {
            if i == 0 {
                return best;
            }
            let m = *labels[..i].iter().max().expect("non-empty prefix");
            if labels[i] <= m {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
            i -= 1;
        }
    }
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

/// Planted-block graph with bounded uniform weight noise.
pub fn planted_graph(rng: &mut ChaCha8Rng, n: usize) -> SimilarityGraph {
    let k = rng.gen_range(1..=4);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let noise: f64 = rng.gen_range(0.01..0.6);
    let inside: f64 = rng.gen_range(0.5..1.0);
    let outside: f64 = rng.gen_range(0.0..0.3);
    SimilarityGraph::from_fn(ids(n), |a, b| {
        let base = if labels[a] == labels[b] { inside } else { outside };
        (base + rng.gen_range(-noise..noise)).clamp(0.0, 1.0)
    })
    .expect("weights are finite")
}

/// Independent uniform weights, optionally sparsified.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> SimilarityGraph {
    let keep: f64 = rng.gen_range(0.3..=1.0);
    SimilarityGraph::from_fn(ids(n), |_, _| if rng.gen_bool(keep) { rng.gen_range(0.0..1.0) } else { 0.0 })
        .expect("weights are finite")
}

/// The fixed property corpus: planted and unstructured graphs of 2 to 8 nodes with positive total weight.
pub fn modularity_corpus(seed: u64, count: usize) -> Vec<SimilarityGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(2..=8);
        let g = if out.len() % 2 == 0 { planted_graph(&mut rng, n) } else { random_graph(&mut rng, n) };
        if g.total_weight() > 0.0 {
            out.push(g);
        }
    }
    out
}

pub fn two_cliques(size: usize) -> SimilarityGraph {
    SimilarityGraph::from_fn(ids(2 * size), |a, b| if (a < size) == (b < size) { 1.0 } else { 0.0 }).unwrap()
}

pub fn uniform_graph(n: usize) -> SimilarityGraph {
    SimilarityGraph::from_fn(ids(n), |_, _| 1.0).unwrap()
}

/// One speaker heard by two listeners at equal distance; the second listener's clock runs `offset_s` ahead.
pub fn drift_scene(offset_s: f64, snr_db: Option<f64>, seed: u64) -> Scenario {
    let voice = VoiceParams::with_fundamental(150.0);
    let mut target = SubjectSpec::stationary("target", Point::new(0.0, 1.5), voice.clone());
    target.clock_offset_s = offset_s;
    let subjects = vec![
        SubjectSpec::stationary("speaker", Point::new(0.0, 0.0), voice.clone()),
        SubjectSpec::stationary("reference", Point::new(1.5, 0.0), voice.clone()),
        target,
    ];
    let duration_s = 40.0;
    Scenario {
        name: "drift".into(),
        description: String::new(),
        seed,
        duration_s,
        sample_rate_hz: 16_000,
        groups: vec![GroupSpec {
            members: subjects.iter().map(|s| s.id.clone()).collect(),
            turns: vec![Turn { speaker: "speaker".into(), start_s: -20.0, end_s: duration_s + 20.0 }],
            speakers: Vec::new(),
        }],
        subjects,
        noise: NoiseSpec { snr_db, ambient: Vec::new() },
        radio: RadioSpec { access_points: vec![AccessPoint::new("ap", Point::new(0.0, 0.0), 2.5)], ..Default::default() },
    }
}

/// A similarity series with a tight majority mode and a well-separated minor mode.
pub struct Contaminated {
    pub series: Vec<f64>,
    pub clean_mean: f64,
    pub gap: f64,
}

pub fn contaminated_series(rng: &mut ChaCha8Rng) -> Contaminated {
    let n = rng.gen_range(30..=120);
    let clean_frac: f64 = rng.gen_range(0.70..=0.95);
    let clean_centre: f64 = rng.gen_range(0.55..0.95);
    let gap: f64 = rng.gen_range(0.3..0.8);
    let spread: f64 = rng.gen_range(0.01..0.05);
    let n_clean = ((n as f64 * clean_frac).round() as usize).clamp(1, n - 1);
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-spread..spread) * 3f64.sqrt();
    let clean: Vec<f64> = (0..n_clean).map(|_| clean_centre + jitter(rng)).collect();
    let minor: Vec<f64> = (n_clean..n).map(|_| clean_centre - gap + jitter(rng)).collect();
    let clean_mean = clean.iter().sum::<f64>() / clean.len() as f64;
    let mut series: Vec<f64> = clean.into_iter().chain(minor).collect();
    for i in (1..series.len()).rev() {
        series.swap(i, rng.gen_range(0..=i));
    }
    Contaminated { series, clean_mean, gap }
}

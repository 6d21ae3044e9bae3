mod manifest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use meetsense::config::MeetSenseConfig;
use meetsense::dataset::{self, load_dataset, load_recordings, AUDIO_DIR, SCANS_FILE, TRUTH_FILE};
use meetsense::detector::{DecisionPath, StageModularity};
use meetsense::eval::{self, evaluate_scenario, noise_sweep, run_method, score, EvalReport, EvalRow, Method};
use meetsense::pipeline::{self, prepare};
use meetsense::proximity::{read_scans_csv, ScanRecord};
use meetsense::sim::{library_scenario, scenario_library, GroundTruth, Scenario};
use meetsense::SubjectId;

use manifest::{manifest_path, ManifestBuilder};

pub const CONFIG_ENV: &str = "MEETSENSE_CONFIG";

#[derive(Parser)]
#[command(name = "meetsense", version, about = "Co-located group detection from audio and WiFi scans")]
struct Cli {
    /// Configuration file (TOML); defaults apply to anything it omits.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Seed overriding the scenario's own, where a command synthesises data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Increase log verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise a scenario into a dataset directory.
    Gen {
        /// Library scenario name (S1..S7, G6G7) or path to a scenario JSON file.
        scenario: String,
        /// Dataset directory to create.
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect groups in one recording window.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        /// Result JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every method on datasets or library scenarios and tabulate F1 and modularity.
    Compare {
        /// Dataset directories with ground truth.
        #[arg(long)]
        dataset: Vec<PathBuf>,
        /// Library scenarios, synthesised in memory.
        #[arg(long)]
        library: Vec<String>,
        /// Every library scenario.
        #[arg(long)]
        all: bool,
        /// Comma-separated subset of GroupSense, Next2Me, AudioMatch.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Append per-method means.
        #[arg(long)]
        aggregate: bool,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a detection result against ground truth.
    Eval {
        /// Ground-truth JSON, or a dataset directory holding one.
        #[arg(long)]
        truth: PathBuf,
        /// Result JSON written by `detect`.
        #[arg(long)]
        detected: PathBuf,
        /// Score JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate a scenario over an SNR grid and chart every method's F1 and similarity.
    Sweep {
        /// Library scenario name or scenario JSON path.
        #[arg(default_value = "S5")]
        scenario: String,
        /// Comma-separated SNR points in dB; the config grid when omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr: Vec<f64>,
        /// Comma-separated subset of GroupSense, Next2Me, AudioMatch.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Output directory for sweep.csv and the two charts.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit refined pairwise features as CSV.
    Features {
        #[command(flatten)]
        input: InputArgs,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Args)]
struct InputArgs {
    /// Dataset directory (audio/ plus optional scans.csv).
    #[arg(long, conflicts_with = "audio_dir")]
    dataset: Option<PathBuf>,
    /// Directory of <subject>.wav recordings.
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    /// Scan log CSV.
    #[arg(long)]
    scans: Option<PathBuf>,
}

struct Inputs {
    traces: Vec<meetsense::audio::AudioTrace>,
    scans: BTreeMap<SubjectId, Vec<ScanRecord>>,
    paths: Vec<PathBuf>,
}

impl InputArgs {
    fn load(&self, cfg: &MeetSenseConfig) -> Result<Inputs> {
        let (audio, scans) = match (&self.dataset, &self.audio_dir) {
            (Some(d), _) => {
                let s = self.scans.clone().or_else(|| Some(d.join(SCANS_FILE)).filter(|p| p.exists()));
                (d.join(AUDIO_DIR), s)
            }
            (None, Some(a)) => (a.clone(), self.scans.clone()),
            (None, None) => bail!("one of --dataset or --audio-dir is required"),
        };
        let traces = load_recordings(&audio)?;
        let mut paths = vec![audio];
        let logs = match scans {
            Some(p) => {
                let l = read_scans_csv(&p, cfg.proximity.rssi_floor_dbm)?;
                paths.push(p);
                l
            }
            None => BTreeMap::new(),
        };
        Ok(Inputs { traces, scans: logs, paths })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectOutput {
    window: [f64; 2],
    /// Groups of two or more subjects.
    groups: Vec<Vec<SubjectId>>,
    /// Subjects left out of every group.
    ungrouped: Vec<SubjectId>,
    decision_path: DecisionPath,
    branch: String,
    modularity: f64,
    modularities: Vec<StageModularity>,
    best_weight: Option<f64>,
}

impl DetectOutput {
    fn partition(&self) -> Vec<Vec<SubjectId>> {
        let mut all = self.groups.clone();
        all.extend(self.ungrouped.iter().map(|s| vec![s.clone()]));
        all
    }
}

#[derive(Debug, Serialize)]
struct GroupScore {
    detected: Vec<SubjectId>,
    best_truth: Vec<SubjectId>,
    f1: f64,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    f1: f64,
    f1_optimal: f64,
    groups: Vec<GroupScore>,
}

fn load_config(path: Option<&Path>) -> Result<MeetSenseConfig> {
    match path {
        Some(p) => MeetSenseConfig::from_file(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(MeetSenseConfig::default()),
    }
}

fn resolve_scenario(arg: &str, seed: Option<u64>) -> Result<Scenario> {
    let sc = match library_scenario(arg) {
        Some(s) => s,
        None => {
            let p = Path::new(arg);
            if !p.exists() {
                bail!("{arg} is neither a library scenario nor a scenario file");
            }
            Scenario::from_json_file(p)?
        }
    };
    Ok(match seed {
        Some(s) => sc.with_seed(s),
        None => sc,
    })
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    if names.is_empty() {
        return Ok(Method::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| Method::parse(n.trim()).with_context(|| format!("unknown method {n}")))
        .collect()
}

fn write_text(out: Option<&Path>, text: &str) -> Result<Vec<PathBuf>> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            Ok(vec![p.to_path_buf()])
        }
        None => {
            print!("{text}");
            Ok(Vec::new())
        }
    }
}

fn finish(m: ManifestBuilder, out: Option<&Path>, outputs: &[PathBuf]) -> Result<()> {
    if let Some(p) = out {
        m.write(&manifest_path(p, false), outputs)?;
    }
    Ok(())
}

fn cmd_gen(scenario: &str, out: &Path, seed: Option<u64>, cfg: &MeetSenseConfig) -> Result<()> {
    let sc = resolve_scenario(scenario, seed)?;
    let mut m = ManifestBuilder::start(cfg);
    m.seed(sc.seed);
    if Path::new(scenario).exists() {
        m.input(scenario);
    }
    let files = dataset::generate_dataset(out, &sc)?;
    log::info!("wrote {} files to {}", files.len(), out.display());
    m.write(&manifest_path(out, true), &files)
}

fn cmd_detect(input: &InputArgs, out: Option<&Path>, cfg: &MeetSenseConfig) -> Result<()> {
    let mut m = ManifestBuilder::start(cfg);
    let inp = input.load(cfg)?;
    inp.paths.iter().for_each(|p| m.input(p));
    let prepared = prepare(&inp.traces, &cfg.audio)?;
    let (r, _, _) = pipeline::groupsense(&prepared, &inp.scans, cfg)?;
    let t0 = inp.traces.iter().map(|t| t.start_time).fold(f64::INFINITY, f64::min);
    let t_end = inp.traces.iter().map(|t| t.end_time()).fold(f64::NEG_INFINITY, f64::max);
    let (groups, singles): (Vec<_>, Vec<_>) = r.groups.into_iter().partition(|g| g.len() > 1);
    let result = DetectOutput {
        window: [t0, t_end.min(t0 + cfg.detector.window_t_s)],
        groups,
        ungrouped: singles.into_iter().flatten().collect(),
        decision_path: r.decision_path,
        branch: r.branch,
        modularity: r.modularity,
        modularities: r.modularities,
        best_weight: r.best_weight,
    };
    let outputs = write_text(out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    finish(m, out, &outputs)
}

fn read_truth(path: &Path) -> Result<GroundTruth> {
    let file = if path.is_dir() { path.join(TRUTH_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))
}

fn dataset_rows(dir: &Path, methods: &[Method], cfg: &MeetSenseConfig) -> Result<Vec<EvalRow>> {
    let ds = load_dataset(dir, cfg.proximity.rssi_floor_dbm)?;
    let truth = ds.truth.with_context(|| format!("{} has no {TRUTH_FILE}", dir.display()))?;
    let name = match &ds.scenario {
        Some(s) => s.name.clone(),
        None => dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let prepared = prepare(&ds.traces, &cfg.audio)?;
    methods
        .iter()
        .map(|&mth| {
            let r = run_method(mth, &prepared, &ds.scans, cfg)?;
            Ok(EvalRow {
                scenario: name.clone(),
                method: mth.label().into(),
                f1: score(&truth.groups, &r.groups, cfg.eval.optimal_assignment)?,
                modularity: r.modularity,
                decision_path: r.decision_path.label().into(),
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    datasets: &[PathBuf],
    library: &[String],
    all: bool,
    methods: &[String],
    aggregate: bool,
    out: Option<&Path>,
    seed: Option<u64>,
    cfg: &MeetSenseConfig,
) -> Result<()> {
    let methods = parse_methods(methods)?;
    let mut scenarios: Vec<Scenario> = library.iter().map(|n| resolve_scenario(n, seed)).collect::<Result<_>>()?;
    if all {
        scenarios.extend(scenario_library().into_iter().map(|s| match seed {
            Some(x) => s.with_seed(x),
            None => s,
        }));
    }
    if scenarios.is_empty() && datasets.is_empty() {
        bail!("nothing to compare: pass --dataset, --library or --all");
    }
    let mut m = ManifestBuilder::start(cfg);
    if let Some(s) = seed {
        m.seed(s);
    }
    let mut rows = Vec::new();
    for d in datasets {
        m.input(d);
        rows.extend(dataset_rows(d, &methods, cfg).with_context(|| format!("dataset {}", d.display()))?);
    }
    for sc in &scenarios {
        log::info!("running {}", sc.name);
        rows.extend(evaluate_scenario(sc, &methods, cfg).with_context(|| format!("scenario {}", sc.name))?);
    }
    let csv = EvalReport { rows }.to_csv(aggregate);
    let outputs = write_text(out, &csv)?;
    finish(m, out, &outputs)
}

fn cmd_eval(truth: &Path, detected: &Path, out: Option<&Path>, cfg: &MeetSenseConfig) -> Result<()> {
    let mut m = ManifestBuilder::start(cfg);
    m.input(if truth.is_dir() { truth.join(TRUTH_FILE) } else { truth.to_path_buf() });
    m.input(detected);
    let t = read_truth(truth)?;
    let text = std::fs::read_to_string(detected).with_context(|| format!("reading {}", detected.display()))?;
    let d: DetectOutput = serde_json::from_str(&text).with_context(|| format!("parsing {}", detected.display()))?;
    let parts = d.partition();
    let groups = parts
        .iter()
        .map(|g| {
            let (best, f1) = t
                .groups
                .iter()
                .map(|tg| (tg.clone(), eval::f1_pair(tg, g)))
                .fold((Vec::new(), 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            GroupScore { detected: g.clone(), best_truth: best, f1 }
        })
        .collect();
    let result = EvalOutput {
        f1: eval::f1_overall(&t.groups, &parts),
        f1_optimal: eval::f1_overall_optimal(&t.groups, &parts)?,
        groups,
    };
    let outputs = write_text(out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    finish(m, out, &outputs)
}

fn cmd_sweep(scenario: &str, snr: &[f64], methods: &[String], out: &Path, seed: Option<u64>, cfg: &MeetSenseConfig) -> Result<()> {
    let sc = resolve_scenario(scenario, seed)?;
    let methods = parse_methods(methods)?;
    let grid = if snr.is_empty() { cfg.eval.snr_grid_db.clone() } else { snr.to_vec() };
    let mut m = ManifestBuilder::start(cfg);
    m.seed(sc.seed);
    if Path::new(scenario).exists() {
        m.input(scenario);
    }
    let points = noise_sweep(&sc, &grid, &methods, cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv = out.join("sweep.csv");
    let f1_svg = out.join("sweep_f1.svg");
    let sim_svg = out.join("sweep_similarity.svg");
    std::fs::write(&csv, eval::sweep_csv(&points)).with_context(|| format!("writing {}", csv.display()))?;
    meetsense::plot::sweep_charts(&f1_svg, &sim_svg, &points)?;
    m.write(&manifest_path(out, true), &[csv, f1_svg, sim_svg])
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn cmd_features(input: &InputArgs, out: Option<&Path>, cfg: &MeetSenseConfig) -> Result<()> {
    let mut m = ManifestBuilder::start(cfg);
    let inp = input.load(cfg)?;
    inp.paths.iter().for_each(|p| m.input(p));
    let prepared = prepare(&inp.traces, &cfg.audio)?;
    let (_, _, reports) = pipeline::groupsense(&prepared, &inp.scans, cfg)?;
    let mut csv = String::from(
        "subject_i,subject_j,shift_s,peak_correlation,acoustic,acoustic_used,acoustic_windows,acoustic_p_value,\
         proximity,proximity_used,proximity_buckets,proximity_p_value\n",
    );
    for r in &reports {
        let a = r.acoustic.as_ref();
        let p = r.proximity.as_ref();
        let _ = writeln!(
            csv,
            "{},{},{:.6},{:.6},{},{},{},{},{},{},{},{}",
            r.subject_i,
            r.subject_j,
            r.drift.shift_s,
            r.drift.peak_correlation,
            opt(a.map(|f| f.mean_value)),
            a.map(|f| f.used_count.to_string()).unwrap_or_default(),
            r.acoustic_series.len(),
            opt(a.and_then(|f| f.p_value)),
            opt(p.map(|f| f.mean_value)),
            p.map(|f| f.used_count.to_string()).unwrap_or_default(),
            r.proximity_series.as_ref().map(|s| s.len().to_string()).unwrap_or_default(),
            opt(p.and_then(|f| f.p_value)),
        );
    }
    let outputs = write_text(out, &csv)?;
    finish(m, out, &outputs)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Gen { scenario, out } => cmd_gen(scenario, out, cli.seed, &cfg),
        Command::Detect { input, out } => cmd_detect(input, out.as_deref(), &cfg),
        Command::Compare { dataset, library, all, methods, aggregate, out } => {
            cmd_compare(dataset, library, *all, methods, *aggregate, out.as_deref(), cli.seed, &cfg)
        }
        Command::Eval { truth, detected, out } => cmd_eval(truth, detected, out.as_deref(), &cfg),
        Command::Sweep { scenario, snr, methods, out } => cmd_sweep(scenario, snr, methods, out, cli.seed, &cfg),
        Command::Features { input, out } => cmd_features(input, out.as_deref(), &cfg),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn scenario_resolution() {
        assert_eq!(resolve_scenario("s3", None).unwrap().name, "S3");
        assert_eq!(resolve_scenario("S3", Some(99)).unwrap().seed, 99);
        assert!(resolve_scenario("nope", None).is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!(parse_methods(&[]).unwrap(), Method::ALL.to_vec());
        assert_eq!(parse_methods(&["next2me".into()]).unwrap(), vec![Method::Next2Me]);
        assert!(parse_methods(&["x".into()]).is_err());
    }

    #[test]
    fn detect_output_partition_restores_singletons() {
        let d = DetectOutput {
            window: [0.0, 1.0],
            groups: vec![vec!["a".into(), "b".into()]],
            ungrouped: vec!["c".into()],
            decision_path: DecisionPath::AudioOnly,
            branch: String::new(),
            modularity: 0.0,
            modularities: Vec::new(),
            best_weight: None,
        };
        assert_eq!(d.partition(), vec![vec!["a".to_string(), "b".to_string()], vec!["c".to_string()]]);
    }

    #[test]
    fn unknown_config_file_is_an_error() {
        assert!(load_config(Some(Path::new("/nonexistent/config.toml"))).is_err());
    }
}

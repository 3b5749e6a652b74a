//! Command-line entry point.
//!
//! Tracker settings come from built-in defaults, then an optional flat
//! `key = value` config file, then command-line flags. Usage and config
//! errors exit with 2, runtime failures with 1.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{
    compare_trackers, precision_curve, precision_thresholds, run_sequence, success_curve, success_thresholds,
    write_boxes_csv, write_curve_csv, write_json, MapNormalization, Summary, TrackRun,
};
use crate::features::{CnTable, FeatureConfig, Frame};
use crate::grid::RealGrid;
use crate::scalar::Scalar;
use crate::sequence::{load_sequence, read_manifest_list, save_png, Sequence, SequenceManifest};
use crate::spectral::circular_shift;
use crate::synth::{generate_synthetic, write_synthetic, Occlusion, SyntheticSpec};
use crate::tracker::{TrackerConfig, TrackerState};

#[derive(Debug, Parser)]
#[command(name = "arcf", version, about = "Aberrance repressed correlation filter tracker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one sequence and write per-frame boxes and diagnostics.
    Track {
        #[command(flatten)]
        seq: SeqArgs,
        #[command(flatten)]
        tracker: TrackerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track every sequence of a list and write pooled curves and a summary.
    Bench {
        /// One sequence directory per line, optionally followed by start and
        /// end frame.
        #[arg(long)]
        list: PathBuf,
        #[command(flatten)]
        tracker: TrackerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured tracker against a baseline with a different gamma.
    Compare {
        #[command(flatten)]
        seq: SeqArgs,
        #[command(flatten)]
        tracker: TrackerArgs,
        #[arg(long, default_value_t = 0.0)]
        baseline_gamma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic sequence (img/*.png plus groundtruth.txt).
    Synth {
        #[command(flatten)]
        spec: SynthArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track a sequence and save each frame's response map as an 8-bit image.
    DumpMaps {
        #[command(flatten)]
        seq: SeqArgs,
        #[command(flatten)]
        tracker: TrackerArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    /// Sequence directory with images (or img/) and a ground-truth file.
    #[arg(long)]
    pub seq: PathBuf,
    /// First frame, 1-indexed.
    #[arg(long)]
    pub start: Option<usize>,
    /// Last frame, inclusive.
    #[arg(long)]
    pub end: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Features {
    Hog,
    HogCnGray,
}

#[derive(Debug, Default, Args)]
pub struct TrackerArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub mu_init: Option<f64>,
    #[arg(long)]
    pub mu_scale: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long)]
    pub padding: Option<f64>,
    #[arg(long)]
    pub num_scales: Option<usize>,
    #[arg(long)]
    pub scale_step: Option<f64>,
    #[arg(long)]
    pub cell_size: Option<usize>,
    #[arg(long)]
    pub model_size_cap: Option<usize>,
    #[arg(long)]
    pub output_sigma_factor: Option<f64>,
    #[arg(long, value_enum)]
    pub features: Option<Features>,
    /// Color-names lookup table; the built-in stand-in is used without it.
    #[arg(long)]
    pub cn_table: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub map_normalization: Option<Normalization>,
    #[arg(long, value_enum)]
    pub precision: Option<Precision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalization {
    None,
    OwnPeak,
    CurrentPeak,
}

impl From<Normalization> for MapNormalization {
    fn from(n: Normalization) -> Self {
        match n {
            Normalization::None => MapNormalization::None,
            Normalization::OwnPeak => MapNormalization::OwnPeak,
            Normalization::CurrentPeak => MapNormalization::CurrentPeak,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    #[arg(long, default_value_t = 320)]
    pub width: usize,
    #[arg(long, default_value_t = 240)]
    pub height: usize,
    /// Target size as WxH.
    #[arg(long, default_value = "32x32")]
    pub target: String,
    /// Pixels per frame as VX,VY.
    #[arg(long, default_value = "2,0", allow_hyphen_values = true)]
    pub velocity: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise standard deviation as a fraction of full intensity.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// START:DURATION:SIZE, repeatable.
    #[arg(long)]
    pub occlusion: Vec<String>,
    /// FRAME:GAIN, repeatable.
    #[arg(long)]
    pub illumination: Vec<String>,
}

/// Everything a run needs besides its inputs.
#[derive(Debug, Clone)]
pub struct Settings {
    pub tracker: TrackerConfig,
    pub precision: Precision,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            precision: Precision::F64,
        }
    }
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_value<V: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<V, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn parse_enum<V: ValueEnum>(key: &str, value: &str) -> std::result::Result<V, String> {
    V::from_str(value, true).map_err(|_| format!("invalid value {value:?} for {key}"))
}

/// Applies one setting by name. Keys are the config field names; ADMM keys
/// may carry an `admm.` prefix.
pub fn apply_setting(s: &mut Settings, key: &str, value: &str) -> std::result::Result<(), String> {
    let t = &mut s.tracker;
    let key = key.strip_prefix("admm.").unwrap_or(key);
    match key {
        "gamma" => t.admm.gamma = parse_value(key, value)?,
        "lambda" => t.admm.lambda = parse_value(key, value)?,
        "mu_init" => t.admm.mu_init = parse_value(key, value)?,
        "mu_scale" => t.admm.mu_scale = parse_value(key, value)?,
        "mu_max" => t.admm.mu_max = parse_value(key, value)?,
        "iterations" => t.admm.iterations = parse_value(key, value)?,
        "padding" => t.padding = parse_value(key, value)?,
        "eta" => t.eta = parse_value(key, value)?,
        "num_scales" => t.num_scales = parse_value(key, value)?,
        "scale_step" => t.scale_step = parse_value(key, value)?,
        "model_size_cap" => t.model_size_cap = parse_value(key, value)?,
        "output_sigma_factor" => t.output_sigma_factor = parse_value(key, value)?,
        "cell_size" => t.feature.cell_size = parse_value(key, value)?,
        "features" => set_features(t, parse_enum(key, value)?),
        "cn_table" => {
            let table = CnTable::load(Path::new(value)).map_err(|e| e.to_string())?;
            t.feature.cn_table = Some(Arc::new(table));
        }
        "map_normalization" => t.map_normalization = parse_enum::<Normalization>(key, value)?.into(),
        "precision" => s.precision = parse_enum(key, value)?,
        _ => return Err(format!("unknown setting {key:?}")),
    }
    Ok(())
}

fn set_features(t: &mut TrackerConfig, f: Features) {
    let cell_size = t.feature.cell_size;
    let table = t.feature.cn_table.clone();
    t.feature = match f {
        Features::Hog => FeatureConfig::hog(),
        Features::HogCnGray => FeatureConfig::hog_cn_gray(table.unwrap_or_else(|| Arc::new(CnTable::synthetic()))),
    };
    t.feature.cell_size = cell_size;
}

/// Reads a flat config file: `key = value` per line, `#` starts a comment.
pub fn read_config_file(path: &Path, s: &mut Settings) -> std::result::Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        apply_setting(s, k.trim(), v.trim()).map_err(|m| usage(format!("{}:{}: {m}", path.display(), i + 1)))?;
    }
    Ok(())
}

impl TrackerArgs {
    pub fn settings(&self) -> std::result::Result<Settings, CliError> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            read_config_file(path, &mut s)?;
        }
        let mut flags: Vec<(&str, String)> = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k, v));
            }
        };
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("lambda", self.lambda.map(|v| v.to_string()));
        push("eta", self.eta.map(|v| v.to_string()));
        push("iterations", self.iterations.map(|v| v.to_string()));
        push("mu_init", self.mu_init.map(|v| v.to_string()));
        push("mu_scale", self.mu_scale.map(|v| v.to_string()));
        push("mu_max", self.mu_max.map(|v| v.to_string()));
        push("padding", self.padding.map(|v| v.to_string()));
        push("num_scales", self.num_scales.map(|v| v.to_string()));
        push("scale_step", self.scale_step.map(|v| v.to_string()));
        push("cell_size", self.cell_size.map(|v| v.to_string()));
        push("model_size_cap", self.model_size_cap.map(|v| v.to_string()));
        push("output_sigma_factor", self.output_sigma_factor.map(|v| v.to_string()));
        push("cn_table", self.cn_table.as_ref().map(|p| p.display().to_string()));
        push("features", self.features.map(|f| enum_name(&f)));
        push("map_normalization", self.map_normalization.map(|n| enum_name(&n)));
        push("precision", self.precision.map(|p| enum_name(&p)));
        for (k, v) in flags {
            apply_setting(&mut s, k, &v).map_err(usage)?;
        }
        s.tracker.validate().map_err(usage)?;
        Ok(s)
    }
}

fn enum_name<V: ValueEnum>(v: &V) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn pair<A: std::str::FromStr, B: std::str::FromStr>(text: &str, sep: char, what: &str) -> std::result::Result<(A, B), CliError> {
    let bad = || usage(format!("invalid {what} {text:?}"));
    let (a, b) = text.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl SynthArgs {
    pub fn spec(&self) -> std::result::Result<SyntheticSpec, CliError> {
        let target = pair(&self.target, 'x', "target size")?;
        let velocity = pair(&self.velocity, ',', "velocity")?;
        let occlusions = self
            .occlusion
            .iter()
            .map(|o| {
                let f: Vec<usize> = o
                    .split(':')
                    .map(|v| v.parse().map_err(|_| usage(format!("invalid occlusion {o:?}"))))
                    .collect::<std::result::Result<_, _>>()?;
                match f[..] {
                    [start_frame, duration, size] => Ok(Occlusion {
                        start_frame,
                        duration,
                        size,
                    }),
                    _ => Err(usage(format!("occlusion {o:?} must be START:DURATION:SIZE"))),
                }
            })
            .collect::<std::result::Result<_, _>>()?;
        let illumination_events = self
            .illumination
            .iter()
            .map(|e| pair(e, ':', "illumination event"))
            .collect::<std::result::Result<_, _>>()?;
        let spec = SyntheticSpec {
            frames: self.frames,
            canvas_w: self.width,
            canvas_h: self.height,
            target_size: target,
            velocity,
            start: None,
            texture_seed: self.seed,
            occlusions,
            illumination_events,
            noise_sigma: self.noise,
        };
        spec.validate().map_err(usage)?;
        Ok(spec)
    }
}

impl SeqArgs {
    fn manifest(&self) -> Result<SequenceManifest> {
        let mut m = SequenceManifest::from_dir(&self.seq)?;
        if let Some(s) = self.start {
            m.start_frame = s;
        }
        m.end_frame = self.end;
        Ok(m)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn run<T: Scalar>(seq: &Sequence, cfg: &TrackerConfig) -> Result<TrackRun> {
    run_sequence::<T>(seq, cfg)
}

fn run_with(seq: &Sequence, s: &Settings) -> Result<TrackRun> {
    match s.precision {
        Precision::F32 => run::<f32>(seq, &s.tracker),
        Precision::F64 => run::<f64>(seq, &s.tracker),
    }
}

/// Curves and summary for a set of runs. Curves need ground truth.
fn write_results(out: &Path, runs: &[TrackRun]) -> Result<Summary> {
    let records: Vec<_> = runs.iter().map(|r| r.record.clone()).collect();
    if records.iter().any(|r| r.scored_frames().next().is_some()) {
        write_curve_csv(&out.join("precision.csv"), &precision_curve(&records, &precision_thresholds())?)?;
        write_curve_csv(&out.join("success.csv"), &success_curve(&records, &success_thresholds())?)?;
    }
    let summary = Summary::from_runs(runs)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn cmd_track(seq: &SeqArgs, s: &Settings, out: &Path) -> Result<()> {
    let sequence = load_sequence(&seq.manifest()?)?;
    create_dir(out)?;
    let run = run_with(&sequence, s)?;
    write_boxes_csv(&out.join("boxes.csv"), &run.record)?;
    let summary = write_results(out, std::slice::from_ref(&run))?;
    println!(
        "{}: {} frames, precision@20 {:.3}, AUC {:.3}, {:.1} FPS",
        sequence.name,
        sequence.len(),
        summary.precision_20,
        summary.auc,
        summary.fps
    );
    Ok(())
}

fn bench_threads() -> std::result::Result<usize, CliError> {
    match std::env::var("ARCF_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("ARCF_THREADS must be a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn cmd_bench(list: &Path, s: &Settings, out: &Path, threads: usize) -> Result<()> {
    let manifests = read_manifest_list(list)?;
    crate::error::ensure!(!manifests.is_empty(), Config, "{} lists no sequences", list.display());
    create_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut runs: Vec<(usize, TrackRun)> = pool.install(|| {
        manifests
            .par_iter()
            .enumerate()
            .map(|(i, m)| load_sequence(m).and_then(|seq| run_with(&seq, s)).map(|r| (i, r)))
            .collect::<Result<_>>()
    })?;
    // Aggregate in a fixed order so results do not depend on the list order.
    runs.sort_by(|(i, a), (j, b)| {
        a.record
            .name
            .cmp(&b.record.name)
            .then_with(|| manifests[*i].image_dir.cmp(&manifests[*j].image_dir))
            .then_with(|| manifests[*i].start_frame.cmp(&manifests[*j].start_frame))
    });
    let runs: Vec<TrackRun> = runs.into_iter().map(|(_, r)| r).collect();
    for (k, run) in runs.iter().enumerate() {
        let dir = out.join(format!("{:03}_{}", k, run.record.name));
        create_dir(&dir)?;
        write_boxes_csv(&dir.join("boxes.csv"), &run.record)?;
    }
    let summary = write_results(out, &runs)?;
    println!(
        "{} sequences: precision@20 {:.3}, AUC {:.3}, avg map diff {:.5}, {:.1} FPS",
        summary.sequence_count, summary.precision_20, summary.auc, summary.avg_map_diff, summary.fps
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct CompareReport<'a> {
    tracker: &'a Summary,
    baseline: &'a Summary,
    relative_reduction: f64,
}

fn cmd_compare(seq: &SeqArgs, s: &Settings, baseline_gamma: f64, out: &Path) -> Result<()> {
    let sequence = load_sequence(&seq.manifest()?)?;
    create_dir(out)?;
    let base = s.tracker.clone().with_gamma(baseline_gamma);
    base.validate()?;
    let c = match s.precision {
        Precision::F32 => compare_trackers::<f32>(&sequence, &s.tracker, &base)?,
        Precision::F64 => compare_trackers::<f64>(&sequence, &s.tracker, &base)?,
    };
    write_boxes_csv(&out.join("boxes_tracker.csv"), &c.a.record)?;
    write_boxes_csv(&out.join("boxes_baseline.csv"), &c.b.record)?;

    let path = out.join("mapdiff.csv");
    let mut text = String::from("frame,tracker,baseline\n");
    for (i, (a, b)) in c.a.record.per_frame_map_diff.iter().zip(&c.b.record.per_frame_map_diff).enumerate() {
        text.push_str(&format!("{i},{},{}\n", a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN)));
    }
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    write_json(
        &out.join("summary.json"),
        &CompareReport {
            tracker: &c.summary_a,
            baseline: &c.summary_b,
            relative_reduction: c.relative_reduction,
        },
    )?;
    println!(
        "avg map diff {:.5} (gamma {}) vs {:.5} (gamma {}): relative reduction {:.1}%",
        c.summary_a.avg_map_diff,
        c.summary_a.gamma,
        c.summary_b.avg_map_diff,
        c.summary_b.gamma,
        100.0 * c.relative_reduction
    );
    Ok(())
}

/// Centres the zero-displacement cell and stretches values to 0..=255.
pub fn map_to_image<T: Scalar>(map: &RealGrid<T>) -> Result<Frame> {
    let (w, h) = map.dims();
    let shifted = circular_shift(map, (h / 2) as i64, (w / 2) as i64);
    let vals: Vec<f64> = shifted.values().iter().map(|v| v.as_f64()).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let gray: Vec<u8> = vals.iter().map(|v| ((v - lo) / span * 255.0).round() as u8).collect();
    Frame::from_gray(w, h, &gray)
}

fn dump_maps<T: Scalar>(seq: &Sequence, cfg: &TrackerConfig, out: &Path) -> Result<usize> {
    let init_box = seq
        .ground_truth
        .first()
        .copied()
        .flatten()
        .ok_or_else(|| Error::Init(format!("sequence {} has no ground truth on its first frame", seq.name)))?;
    let mut tracker = TrackerState::<T>::init(&seq.frame(0)?, init_box, cfg.clone())?;
    for i in 1..seq.len() {
        tracker.track_frame(&seq.frame(i)?)?;
        let response = tracker.prior.as_ref().expect("set by track_frame");
        save_png(&out.join(format!("map_{:05}.png", i)), &map_to_image(&response.map)?)?;
    }
    Ok(seq.len().saturating_sub(1))
}

fn cmd_dump_maps(seq: &SeqArgs, s: &Settings, out: &Path) -> Result<()> {
    let sequence = load_sequence(&seq.manifest()?)?;
    create_dir(out)?;
    let n = match s.precision {
        Precision::F32 => dump_maps::<f32>(&sequence, &s.tracker, out)?,
        Precision::F64 => dump_maps::<f64>(&sequence, &s.tracker, out)?,
    };
    println!("wrote {n} response maps to {}", out.display());
    Ok(())
}

pub fn execute(cli: Cli) -> std::result::Result<(), CliError> {
    match cli.command {
        Command::Track { seq, tracker, out } => cmd_track(&seq, &tracker.settings()?, &out)?,
        Command::Bench { list, tracker, out } => {
            let s = tracker.settings()?;
            cmd_bench(&list, &s, &out, bench_threads()?)?
        }
        Command::Compare {
            seq,
            tracker,
            baseline_gamma,
            out,
        } => cmd_compare(&seq, &tracker.settings()?, baseline_gamma, &out)?,
        Command::Synth { spec, out } => {
            let spec = spec.spec()?;
            let s = generate_synthetic(&spec)?;
            write_synthetic(&s, &out)?;
            println!("wrote {} frames to {}", spec.frames, out.display());
        }
        Command::DumpMaps { seq, tracker, out } => cmd_dump_maps(&seq, &tracker.settings()?, &out)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stderr.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! One-pass evaluation: overlap and center-error curves, response-map
//! difference, and paired tracker comparison.
//!
//! Curves pool frames across sequences. Frames without ground truth are
//! skipped.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;
use crate::sequence::Sequence;
use crate::solver::ResponseMap;
use crate::tracker::{BoundingBox, TrackerConfig, TrackerState};

pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let ih = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// How response maps are scaled before differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapNormalization {
    /// Raw maps.
    None,
    /// Each map divided by its own peak value.
    OwnPeak,
    /// Both maps divided by the current map's peak value.
    CurrentPeak,
}

/// Peak-aligned squared difference between two response maps.
pub fn map_difference<T: Scalar>(previous: &ResponseMap<T>, current: &ResponseMap<T>, norm: MapNormalization) -> f64 {
    let aligned = crate::solver::shift_prior_response(previous, current.peak);
    let inv = |peak: T| {
        let p = peak.as_f64();
        if p.abs() > f64::MIN_POSITIVE {
            1.0 / p
        } else {
            1.0
        }
    };
    let (sa, sc) = match norm {
        MapNormalization::None => (1.0, 1.0),
        MapNormalization::OwnPeak => (inv(previous.peak_value()), inv(current.peak_value())),
        MapNormalization::CurrentPeak => (inv(current.peak_value()), inv(current.peak_value())),
    };
    aligned
        .values()
        .iter()
        .zip(current.map.values())
        .map(|(&a, &c)| {
            let d = a.as_f64() * sa - c.as_f64() * sc;
            d * d
        })
        .sum()
}

/// Arithmetic mean of per-frame map differences.
pub fn avg_map_difference(diffs: &[f64]) -> Result<f64> {
    ensure!(!diffs.is_empty(), Contract, "no map differences to average");
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Ground truth, predictions and diagnostics of one tracked sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    /// Frame labels (file names, or indices for in-memory sequences).
    pub frames: Vec<String>,
    pub ground_truth: Vec<Option<BoundingBox>>,
    pub predictions: Vec<BoundingBox>,
    pub peaks: Vec<f64>,
    /// Absent on frames without a previous response map.
    pub per_frame_map_diff: Vec<Option<f64>>,
}

impl SequenceRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.frames.len();
        ensure!(
            self.ground_truth.len() == n
                && self.predictions.len() == n
                && self.peaks.len() == n
                && self.per_frame_map_diff.len() == n,
            Contract,
            "record {} has inconsistent per-frame lengths",
            self.name
        );
        Ok(())
    }

    /// Frames with a ground-truth box, as `(ground_truth, prediction)`.
    pub fn scored_frames(&self) -> impl Iterator<Item = (&BoundingBox, &BoundingBox)> {
        self.ground_truth
            .iter()
            .zip(&self.predictions)
            .filter_map(|(g, p)| g.as_ref().map(|g| (g, p)))
    }

    pub fn map_diffs(&self) -> Vec<f64> {
        self.per_frame_map_diff.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveResult {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    /// Precision at 20 px, or the area under the success curve.
    pub summary: f64,
}

/// Center-error thresholds 0, 1, ..., 50 px.
pub fn precision_thresholds() -> Vec<f64> {
    (0..=50).map(f64::from).collect()
}

/// Overlap thresholds 0, 0.02, ..., 1.
pub fn success_thresholds() -> Vec<f64> {
    (0..=50).map(|i| f64::from(i) / 50.0).collect()
}

fn pooled(records: &[SequenceRecord], metric: fn(&BoundingBox, &BoundingBox) -> f64) -> Result<Vec<f64>> {
    ensure!(!records.is_empty(), Contract, "no sequences to evaluate");
    for r in records {
        r.validate()?;
    }
    let out: Vec<f64> = records
        .iter()
        .flat_map(|r| r.scored_frames().map(|(g, p)| metric(g, p)))
        .collect();
    ensure!(!out.is_empty(), Contract, "no frame has ground truth");
    Ok(out)
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

/// Fraction of frames whose center error is at most each threshold. The
/// summary is the value at 20 px.
pub fn precision_curve(records: &[SequenceRecord], thresholds: &[f64]) -> Result<CurveResult> {
    let errors = pooled(records, center_error)?;
    let values: Vec<f64> = thresholds.iter().map(|&t| fraction(&errors, |e| e <= t)).collect();
    Ok(CurveResult {
        thresholds: thresholds.to_vec(),
        values,
        summary: fraction(&errors, |e| e <= 20.0),
    })
}

/// Fraction of frames whose overlap strictly exceeds each threshold. The
/// summary is the mean over thresholds.
pub fn success_curve(records: &[SequenceRecord], thresholds: &[f64]) -> Result<CurveResult> {
    ensure!(!thresholds.is_empty(), Contract, "no thresholds");
    let overlaps = pooled(records, iou)?;
    let values: Vec<f64> = thresholds.iter().map(|&t| fraction(&overlaps, |o| o > t)).collect();
    let summary = values.iter().sum::<f64>() / values.len() as f64;
    Ok(CurveResult {
        thresholds: thresholds.to_vec(),
        values,
        summary,
    })
}

/// One sequence run through the tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRun {
    pub record: SequenceRecord,
    /// Frames per second of tracker work, image decoding excluded.
    pub fps: f64,
    pub gamma: f64,
}

/// Runs the tracker over a sequence, initializing on the first ground-truth
/// box.
pub fn run_sequence<T: Scalar>(seq: &Sequence, cfg: &TrackerConfig) -> Result<TrackRun> {
    ensure!(!seq.is_empty(), Contract, "sequence {} has no frames", seq.name);
    let init_box = seq
        .ground_truth
        .first()
        .copied()
        .flatten()
        .ok_or_else(|| Error::Init(format!("sequence {} has no ground truth on its first frame", seq.name)))?;

    let first = seq.frame(0)?;
    let mut busy = std::time::Duration::ZERO;
    let start = Instant::now();
    let mut tracker = TrackerState::<T>::init(&first, init_box, cfg.clone())?;
    busy += start.elapsed();

    let mut predictions = vec![tracker.bbox];
    let mut peaks = vec![tracker.init_peak()];
    let mut diffs = vec![None];
    for i in 1..seq.len() {
        let frame = seq.frame(i)?;
        let start = Instant::now();
        let (bbox, diag) = tracker.track_frame(&frame)?;
        busy += start.elapsed();
        predictions.push(bbox);
        peaks.push(diag.peak);
        diffs.push(diag.map_diff);
    }
    let secs = busy.as_secs_f64();
    Ok(TrackRun {
        record: SequenceRecord {
            name: seq.name.clone(),
            frames: seq.frame_labels(),
            ground_truth: seq.ground_truth.clone(),
            predictions,
            peaks,
            per_frame_map_diff: diffs,
        },
        fps: if secs > 0.0 { seq.len() as f64 / secs } else { f64::INFINITY },
        gamma: cfg.admm.gamma,
    })
}

/// Headline numbers for one or more runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub precision_20: f64,
    pub auc: f64,
    pub avg_map_diff: f64,
    pub fps: f64,
    pub gamma: f64,
    pub sequence_count: usize,
}

impl Summary {
    /// Pools frames over the runs. FPS is total frames over total tracker
    /// time. Without any ground truth the curve summaries are NaN.
    pub fn from_runs(runs: &[TrackRun]) -> Result<Self> {
        ensure!(!runs.is_empty(), Contract, "no runs to summarize");
        let records: Vec<SequenceRecord> = runs.iter().map(|r| r.record.clone()).collect();
        let has_gt = records.iter().any(|r| r.scored_frames().next().is_some());
        let (precision_20, auc) = if has_gt {
            (
                precision_curve(&records, &precision_thresholds())?.summary,
                success_curve(&records, &success_thresholds())?.summary,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        let diffs: Vec<f64> = records.iter().flat_map(|r| r.map_diffs()).collect();
        let frames: usize = records.iter().map(|r| r.frames.len()).sum();
        let secs: f64 = runs.iter().map(|r| r.record.frames.len() as f64 / r.fps).sum();
        Ok(Self {
            precision_20,
            auc,
            avg_map_diff: if diffs.is_empty() { f64::NAN } else { avg_map_difference(&diffs)? },
            fps: frames as f64 / secs,
            gamma: runs[0].gamma,
            sequence_count: runs.len(),
        })
    }
}

/// Two configurations run on the same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: TrackRun,
    pub b: TrackRun,
    pub summary_a: Summary,
    pub summary_b: Summary,
    /// `1 − avg_map_diff(a) / avg_map_diff(b)`; positive when `a` is smoother.
    pub relative_reduction: f64,
}

pub fn compare_trackers<T: Scalar>(seq: &Sequence, cfg_a: &TrackerConfig, cfg_b: &TrackerConfig) -> Result<Comparison> {
    let (a, b) = rayon::join(|| run_sequence::<T>(seq, cfg_a), || run_sequence::<T>(seq, cfg_b));
    let (a, b) = (a?, b?);
    let summary_a = Summary::from_runs(std::slice::from_ref(&a))?;
    let summary_b = Summary::from_runs(std::slice::from_ref(&b))?;
    Ok(Comparison {
        relative_reduction: 1.0 - summary_a.avg_map_diff / summary_b.avg_map_diff,
        a,
        b,
        summary_a,
        summary_b,
    })
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `frame,x,y,w,h,peak,mapdiff`, one row per frame. Missing map
/// differences are written as `NaN`. Values use the shortest decimal that
/// reparses to the same `f64`.
pub fn write_boxes_csv(path: &Path, record: &SequenceRecord) -> Result<()> {
    record.validate()?;
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "frame,x,y,w,h,peak,mapdiff").map_err(io)?;
    for (i, (b, (peak, diff))) in record
        .predictions
        .iter()
        .zip(record.peaks.iter().zip(&record.per_frame_map_diff))
        .enumerate()
    {
        let diff = diff.unwrap_or(f64::NAN);
        writeln!(out, "{i},{},{},{},{},{peak},{diff}", b.x, b.y, b.w, b.h).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_curve_csv(path: &Path, curve: &CurveResult) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "threshold,value").map_err(io)?;
    for (t, v) in curve.thresholds.iter().zip(&curve.values) {
        writeln!(out, "{t},{v}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::io(path, e.into()))?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

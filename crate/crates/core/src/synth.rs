//! Seeded synthetic sequences: a textured square moving at constant
//! velocity over a smooth background, with optional occluders, illumination
//! steps and Gaussian pixel noise.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, Error, Result};
use crate::features::Frame;
use crate::sequence::{save_png, write_ground_truth, Sequence};
use crate::tracker::BoundingBox;

/// A solid rectangle drawn over the target for `duration` frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occlusion {
    pub start_frame: usize,
    pub duration: usize,
    /// Side of the square occluder in pixels.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub frames: usize,
    pub canvas_w: usize,
    pub canvas_h: usize,
    pub target_size: (usize, usize),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// Top-left of the target on frame 0. `None` centres the trajectory.
    pub start: Option<(f64, f64)>,
    pub texture_seed: u64,
    pub occlusions: Vec<Occlusion>,
    /// `(frame, gain)`: from `frame` on, pixel values are multiplied by
    /// `gain` (gains compound).
    pub illumination_events: Vec<(usize, f64)>,
    /// Standard deviation of additive noise, in units of full intensity.
    pub noise_sigma: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            frames: 100,
            canvas_w: 320,
            canvas_h: 240,
            target_size: (32, 32),
            velocity: (2.0, 0.0),
            start: None,
            texture_seed: 0,
            occlusions: Vec::new(),
            illumination_events: Vec::new(),
            noise_sigma: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let (tw, th) = self.target_size;
        ensure!(self.frames >= 1, Config, "a sequence needs at least one frame");
        ensure!(tw >= 2 && th >= 2, Config, "target must be at least 2x2 pixels");
        ensure!(
            tw <= self.canvas_w && th <= self.canvas_h,
            Config,
            "target {tw}x{th} does not fit the {}x{} canvas",
            self.canvas_w,
            self.canvas_h
        );
        ensure!(self.noise_sigma >= 0.0, Config, "noise_sigma must be nonnegative");
        for o in &self.occlusions {
            ensure!(
                o.start_frame + o.duration <= self.frames && o.size >= 1,
                Config,
                "occlusion at frame {} for {} frames does not fit the sequence",
                o.start_frame,
                o.duration
            );
        }
        for &(f, gain) in &self.illumination_events {
            ensure!(gain > 0.0 && f < self.frames, Config, "illumination event ({f}, {gain}) is invalid");
        }
        Ok(())
    }

    /// Integer top-left target positions, clamped to the canvas.
    pub fn positions(&self) -> Vec<(i64, i64)> {
        let (tw, th) = self.target_size;
        let (vx, vy) = self.velocity;
        let span = (self.frames - 1) as f64;
        let (sx, sy) = self.start.unwrap_or((
            (self.canvas_w - tw) as f64 / 2.0 - vx * span / 2.0,
            (self.canvas_h - th) as f64 / 2.0 - vy * span / 2.0,
        ));
        let max_x = (self.canvas_w - tw) as f64;
        let max_y = (self.canvas_h - th) as f64;
        (0..self.frames)
            .map(|k| {
                let x = (sx + vx * k as f64).round().clamp(0.0, max_x);
                let y = (sy + vy * k as f64).round().clamp(0.0, max_y);
                (x as i64, y as i64)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<BoundingBox>,
}

impl SyntheticSequence {
    pub fn into_sequence(self, name: impl Into<String>) -> Result<Sequence> {
        Sequence::in_memory(name, self.frames, self.ground_truth.into_iter().map(Some).collect())
    }
}

/// Smooth gray background from a coarse random lattice, bilinearly
/// interpolated.
fn background(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const STEP: usize = 24;
    let (lw, lh) = (w / STEP + 2, h / STEP + 2);
    let lattice: Vec<f64> = (0..lw * lh).map(|_| rng.gen_range(60.0..170.0)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 / STEP as f64, y as f64 / STEP as f64);
            let (ix, iy) = (fx as usize, fy as usize);
            let (ax, ay) = (fx - ix as f64, fy - iy as f64);
            let at = |c: usize, r: usize| lattice[r * lw + c];
            let top = at(ix, iy) * (1.0 - ax) + at(ix + 1, iy) * ax;
            let bot = at(ix, iy + 1) * (1.0 - ax) + at(ix + 1, iy + 1) * ax;
            out.push(top * (1.0 - ay) + bot * ay);
        }
    }
    out
}

/// Random colored 4x4-pixel blocks.
fn texture(tw: usize, th: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    const BLOCK: usize = 4;
    let (bw, bh) = (tw.div_ceil(BLOCK), th.div_ceil(BLOCK));
    let blocks: Vec<[f64; 3]> = (0..bw * bh)
        .map(|_| [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)])
        .collect();
    (0..tw * th)
        .map(|i| blocks[(i / tw / BLOCK) * bw + (i % tw) / BLOCK])
        .collect()
}

/// Renders the sequence. Output is a pure function of the spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let (w, h) = (spec.canvas_w, spec.canvas_h);
    let (tw, th) = spec.target_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
    let bg = background(w, h, &mut rng);
    let tex = texture(tw, th, &mut rng);
    let noise = Normal::new(0.0, spec.noise_sigma * 255.0).map_err(|e| Error::Config(e.to_string()))?;
    let positions = spec.positions();

    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::with_capacity(spec.frames);
    for (k, &(px, py)) in positions.iter().enumerate() {
        let gain: f64 = spec
            .illumination_events
            .iter()
            .filter(|(f, _)| *f <= k)
            .map(|(_, g)| g)
            .product();
        let occluder = spec
            .occlusions
            .iter()
            .filter(|o| (o.start_frame..o.start_frame + o.duration).contains(&k))
            .map(|o| o.size as i64)
            .max();
        let (cx, cy) = (px + tw as i64 / 2, py + th as i64 / 2);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
        noise_rng.set_stream(k as u64 + 1);

        let frame = Frame::from_fn(w, h, |x, y| {
            let (xi, yi) = (x as i64, y as i64);
            let mut rgb = if (px..px + tw as i64).contains(&xi) && (py..py + th as i64).contains(&yi) {
                tex[(yi - py) as usize * tw + (xi - px) as usize]
            } else {
                let v = bg[y * w + x];
                [v, v, v]
            };
            if let Some(s) = occluder {
                let x0 = cx - s / 2;
                let y0 = cy - s / 2;
                if (x0..x0 + s).contains(&xi) && (y0..y0 + s).contains(&yi) {
                    rgb = [110.0, 110.0, 110.0];
                }
            }
            rgb.map(|v| {
                let n = if spec.noise_sigma > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
                (v * gain + n).round().clamp(0.0, 255.0) as u8
            })
        });
        frames.push(frame);
        ground_truth.push(BoundingBox::new(px as f64, py as f64, tw as f64, th as f64));
    }
    Ok(SyntheticSequence { frames, ground_truth })
}

/// Writes `img/00000001.png, ...` and `groundtruth.txt` under `dir`.
pub fn write_synthetic(seq: &SyntheticSequence, dir: &Path) -> Result<()> {
    let img = dir.join("img");
    std::fs::create_dir_all(&img).map_err(|e| Error::io(&img, e))?;
    for (i, f) in seq.frames.iter().enumerate() {
        save_png(&img.join(format!("{:08}.png", i + 1)), f)?;
    }
    let gt: Vec<Option<BoundingBox>> = seq.ground_truth.iter().copied().map(Some).collect();
    write_ground_truth(&dir.join("groundtruth.txt"), &gt)
}

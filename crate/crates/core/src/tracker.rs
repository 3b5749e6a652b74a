//! Per-frame tracking loop: multi-scale detection, appearance-model
//! interpolation and filter retraining with the previous response as prior.
//!
//! Geometry: the search region is the target box enlarged so its area is
//! `padding` times the target area. When that region exceeds
//! `model_size_cap` pixels it is sampled at a reduced resolution. The feature
//! grid is the resampled region divided into cells, and the filter support
//! is the target extent in cells.

use crate::error::{ensure, Result};
use crate::eval::{map_difference, MapNormalization};
use crate::features::{cosine_window, extract_features, sample_region, FeatureConfig, Frame};
use crate::grid::{ComplexChannels, RealGrid};
use crate::scalar::Scalar;
use crate::solver::{
    make_gaussian_label, shift_prior_response, AdmmConfig, AdmmSolver, CroppingWindow, FilterBank, PriorResponse,
    RegressionTarget, ResponseMap,
};

/// Axis-aligned box in 0-indexed pixel coordinates, `(x, y)` top-left.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct TrackerConfig {
    /// Search-region area as a multiple of the target area.
    pub padding: f64,
    /// Appearance-model learning rate.
    pub eta: f64,
    pub num_scales: usize,
    pub scale_step: f64,
    pub feature: FeatureConfig,
    pub admm: AdmmConfig,
    /// Largest search region, in pixels, sampled at full resolution.
    pub model_size_cap: usize,
    /// Label width relative to the target size, before dividing by the cell size.
    pub output_sigma_factor: f64,
    /// Scaling of response maps in the map-difference diagnostic.
    pub map_normalization: MapNormalization,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            padding: 4.0,
            eta: 0.0192,
            num_scales: 5,
            scale_step: 1.01,
            feature: FeatureConfig::hog(),
            admm: AdmmConfig::default(),
            model_size_cap: 40_000,
            output_sigma_factor: 1.0 / 16.0,
            map_normalization: MapNormalization::CurrentPeak,
        }
    }
}

impl TrackerConfig {
    /// Same settings with a different aberrance penalty.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.admm.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.padding >= 1.0 && self.padding.is_finite(), Config, "padding must be at least 1");
        ensure!((0.0..=1.0).contains(&self.eta), Config, "eta must lie in [0, 1]");
        ensure!(self.num_scales % 2 == 1, Config, "num_scales must be odd and positive");
        ensure!(self.scale_step > 1.0 && self.scale_step.is_finite(), Config, "scale_step must exceed 1");
        ensure!(self.model_size_cap >= 1, Config, "model_size_cap must be positive");
        ensure!(self.output_sigma_factor > 0.0, Config, "output_sigma_factor must be positive");
        self.feature.validate()?;
        self.admm.validate()
    }
}

/// Fixed sampling geometry, decided on the first frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Target size at scale 1, in frame pixels.
    pub base_target: (f64, f64),
    /// Source region at scale 1, in frame pixels.
    pub search_region: (f64, f64),
    /// Resampled region size in pixels; a multiple of the cell size.
    pub template: (usize, usize),
    /// Template pixels per frame pixel (at most 1).
    pub resize_factor: f64,
    pub min_scale: f64,
    pub max_scale: f64,
}

impl Geometry {
    fn new(target_w: f64, target_h: f64, frame: (usize, usize), cfg: &TrackerConfig) -> Self {
        let cs = cfg.feature.cell_size as f64;
        let side = cfg.padding.sqrt();
        let (pw, ph) = (target_w * side, target_h * side);
        let area = pw * ph;
        let resize_factor = if area > cfg.model_size_cap as f64 {
            (cfg.model_size_cap as f64 / area).sqrt()
        } else {
            1.0
        };
        let cells = |len: f64| ((len * resize_factor / cs).round() as usize).max(1);
        let template = (cells(pw) * cfg.feature.cell_size, cells(ph) * cfg.feature.cell_size);
        let search_region = (template.0 as f64 / resize_factor, template.1 as f64 / resize_factor);

        let ln_step = cfg.scale_step.ln();
        let smallest = (5.0 / search_region.0).max(5.0 / search_region.1);
        let largest = (frame.0 as f64 / target_w).min(frame.1 as f64 / target_h);
        let min_scale = cfg.scale_step.powf((smallest.ln() / ln_step).ceil());
        let max_scale = cfg.scale_step.powf((largest.ln() / ln_step).floor());
        Self {
            base_target: (target_w, target_h),
            search_region,
            template,
            resize_factor,
            min_scale: min_scale.min(1.0),
            max_scale: max_scale.max(1.0),
        }
    }

    pub fn grid(&self, cell_size: usize) -> (usize, usize) {
        (self.template.0 / cell_size, self.template.1 / cell_size)
    }
}

/// Outcome of the multi-scale search on one frame.
#[derive(Debug, Clone)]
pub struct Detection<T: Scalar> {
    pub bbox: BoundingBox,
    pub response: ResponseMap<T>,
    /// Winning scale offset in `-S/2 ..= S/2`.
    pub scale_index: i32,
    /// Signed peak displacement in cells, `(rows, cols)`.
    pub displacement: (i64, i64),
    /// Cumulative scale after this detection.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDiagnostics {
    pub peak: f64,
    /// Peak-aligned difference to the previous response map; absent while
    /// there is no previous map.
    pub map_diff: Option<f64>,
    pub scale_index: i32,
}

/// Complete tracker state for one sequence.
#[derive(Debug, Clone)]
pub struct TrackerState<T: Scalar> {
    pub bbox: BoundingBox,
    /// Cumulative scale relative to the first frame.
    pub scale: f64,
    pub model_hat: ComplexChannels<T>,
    pub filter: FilterBank<T>,
    pub prior: Option<PriorResponse<T>>,
    pub target: RegressionTarget<T>,
    pub crop: CroppingWindow,
    pub cfg: TrackerConfig,
    pub frame_index: usize,
    pub geometry: Geometry,
    solver: AdmmSolver<T>,
    window: RealGrid<T>,
    init_peak: f64,
}

/// Signed displacement in `(-len/2, len/2]` for a circular index.
pub fn signed_displacement(index: usize, len: usize) -> i64 {
    if 2 * index > len {
        index as i64 - len as i64
    } else {
        index as i64
    }
}

/// Scale offsets in search order: 0, -1, 1, -2, 2, ...
fn scale_offsets(num_scales: usize) -> Vec<i32> {
    let half = (num_scales / 2) as i32;
    let mut out = vec![0];
    for k in 1..=half {
        out.push(-k);
        out.push(k);
    }
    out
}

impl<T: Scalar> TrackerState<T> {
    /// Initializes on the first frame. The box is clamped to the frame.
    pub fn init(frame: &Frame, bbox: BoundingBox, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        ensure!(bbox.is_finite(), Init, "initial box has non-finite coordinates");
        let (fw, fh) = (frame.width() as f64, frame.height() as f64);
        let x0 = bbox.x.clamp(0.0, fw);
        let y0 = bbox.y.clamp(0.0, fh);
        let x1 = (bbox.x + bbox.w).clamp(0.0, fw);
        let y1 = (bbox.y + bbox.h).clamp(0.0, fh);
        let bbox = BoundingBox::new(x0, y0, x1 - x0, y1 - y0);
        ensure!(
            bbox.w >= 2.0 && bbox.h >= 2.0,
            Init,
            "initial box {:.1}x{:.1} is smaller than 2 px",
            bbox.w,
            bbox.h
        );

        let geometry = Geometry::new(bbox.w, bbox.h, (frame.width(), frame.height()), &cfg);
        let cs = cfg.feature.cell_size;
        let (gw, gh) = geometry.grid(cs);
        let crop_cells = |len: f64, full: usize| ((len * geometry.resize_factor / cs as f64).round() as usize).clamp(1, full);
        let crop = CroppingWindow::new(gw, gh, crop_cells(bbox.w, gw), crop_cells(bbox.h, gh))?;
        let sigma = (bbox.w * bbox.h).sqrt() * geometry.resize_factor * cfg.output_sigma_factor / cs as f64;
        let target = make_gaussian_label(gw, gh, T::of(sigma))?;
        let solver = AdmmSolver::new(crop, cfg.admm)?;
        let window = cosine_window(gw, gh);

        let mut state = Self {
            bbox,
            scale: 1.0,
            model_hat: ComplexChannels::zeros(gw, gh, cfg.feature.channel_count()),
            filter: FilterBank::zeros(&crop, cfg.feature.channel_count()),
            prior: None,
            target,
            crop,
            cfg,
            frame_index: 0,
            geometry,
            solver,
            window,
            init_peak: 0.0,
        };
        let (cx, cy) = bbox.center();
        state.model_hat = state.sample_hat(frame, cx, cy, 1.0)?;
        state.filter = state.solver.train(&state.model_hat, &state.target, None, None)?;
        let own = state.solver.response(&state.model_hat, &state.filter.g_hat);
        state.init_peak = own.peak_value().as_f64();
        Ok(state)
    }

    /// Peak of the first filter on its own training sample.
    pub fn init_peak(&self) -> f64 {
        self.init_peak
    }

    /// Windowed feature spectrum of the search region centred at `(cx, cy)`
    /// at cumulative scale `scale`.
    pub fn sample_hat(&self, frame: &Frame, cx: f64, cy: f64, scale: f64) -> Result<ComplexChannels<T>> {
        let g = &self.geometry;
        let patch = sample_region(
            frame,
            cx,
            cy,
            g.search_region.0 * scale,
            g.search_region.1 * scale,
            g.template.0,
            g.template.1,
        );
        let features = extract_features::<T>(&patch, &self.cfg.feature)?;
        let windowed = crate::features::apply_window(&features, &self.window);
        Ok(self.solver.fft().forward_channels(&windowed))
    }

    /// Searches the frame at every scale around the current position.
    pub fn detect(&self, frame: &Frame) -> Result<Detection<T>> {
        let (cx, cy) = self.bbox.center();
        let mut best: Option<(T, i32, f64, ResponseMap<T>)> = None;
        for s in scale_offsets(self.cfg.num_scales) {
            let factor = self.cfg.scale_step.powi(s);
            let x_hat = self.sample_hat(frame, cx, cy, self.scale * factor)?;
            let response = self.solver.response(&x_hat, &self.filter.g_hat);
            let value = response.peak_value();
            ensure!(value.is_finite(), Numerical, "response map is not finite");
            if best.as_ref().is_none_or(|b| value > b.0) {
                best = Some((value, s, factor, response));
            }
        }
        let (_, scale_index, factor, response) = best.expect("at least one scale");
        let (gw, gh) = response.map.dims();
        let dr = signed_displacement(response.peak.0, gh);
        let dc = signed_displacement(response.peak.1, gw);
        let g = &self.geometry;
        let searched = self.scale * factor;
        let cell_px_x = g.search_region.0 * searched / gw as f64;
        let cell_px_y = g.search_region.1 * searched / gh as f64;
        let new_cx = (cx + dc as f64 * cell_px_x).clamp(0.0, frame.width() as f64);
        let new_cy = (cy + dr as f64 * cell_px_y).clamp(0.0, frame.height() as f64);
        let scale = searched.clamp(g.min_scale, g.max_scale);
        let bbox = BoundingBox::from_center(new_cx, new_cy, g.base_target.0 * scale, g.base_target.1 * scale);
        Ok(Detection {
            bbox,
            response,
            scale_index,
            displacement: (dr, dc),
            scale,
        })
    }

    /// `x̂_model ← (1 − η) x̂_model + η x̂_new`.
    pub fn update_model(&mut self, new_sample_hat: &ComplexChannels<T>) -> Result<()> {
        ensure!(
            new_sample_hat.same_shape(&self.model_hat),
            Contract,
            "sample shape does not match the appearance model"
        );
        let eta = T::of(self.cfg.eta);
        let keep = T::one() - eta;
        for (m, x) in self.model_hat.channels_mut().iter_mut().zip(new_sample_hat.channels()) {
            for (mv, &xv) in m.values_mut().iter_mut().zip(x.values()) {
                *mv = *mv * keep + xv * eta;
            }
        }
        Ok(())
    }

    /// Detects, updates the model at the new position and retrains the
    /// filter, using the previous frame's response as the aberrance prior.
    pub fn track_frame(&mut self, frame: &Frame) -> Result<(BoundingBox, FrameDiagnostics)> {
        let det = self.detect(frame)?;
        let map_diff = self
            .prior
            .as_ref()
            .map(|p| map_difference(p, &det.response, self.cfg.map_normalization));

        self.bbox = det.bbox;
        self.scale = det.scale;
        let (cx, cy) = self.bbox.center();
        let x_new = self.sample_hat(frame, cx, cy, self.scale)?;
        self.update_model(&x_new)?;

        // The training sample is centred on the target, so its response
        // should peak at the origin; the prior is aligned there.
        let prior_hat = self.prior.as_ref().map(|p| self.solver.fft().forward(&shift_prior_response(p, (0, 0))));
        // Warm start from the previous filter only. The previous multiplier
        // was accumulated at the end of the penalty schedule; reusing it once
        // the penalty restarts at mu_init makes the iterates blow up.
        let warm = FilterBank {
            zeta_hat: ComplexChannels::zeros(self.crop.full_w, self.crop.full_h, self.filter.depth()),
            ..self.filter.clone()
        };
        self.filter = self
            .solver
            .train(&self.model_hat, &self.target, prior_hat.as_ref(), Some(&warm))?;

        let diagnostics = FrameDiagnostics {
            peak: det.response.peak_value().as_f64(),
            map_diff,
            scale_index: det.scale_index,
        };
        self.prior = Some(det.response);
        self.frame_index += 1;
        Ok((self.bbox, diagnostics))
    }
}

//! Patch handling and hand-crafted feature channels.
//!
//! Feature channels are concatenated in the fixed order HOG (31), color
//! names (10), gray (1). Every channel has `height / cell_size` rows and
//! `width / cell_size` columns.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{ensure, Error, Result};
use crate::grid::{Grid, MultiChannel, RealChannels, RealGrid};
use crate::scalar::Scalar;

/// Number of HOG channels: 18 signed + 9 unsigned orientations + 4 energies.
pub const HOG_CHANNELS: usize = 31;
pub const CN_CHANNELS: usize = 10;
const HOG_ORIENTATIONS: usize = 18;
const HOG_TRUNCATION: f64 = 0.2;
const HOG_NORM_EPS: f64 = 1e-4;

/// 8-bit RGB image. Grayscale images store equal triplets. Used both for
/// whole frames and for sampled regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePatch {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

pub type Frame = ImagePatch;

impl ImagePatch {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        ensure!(width >= 1 && height >= 1, Contract, "image dimensions must be positive");
        ensure!(
            pixels.len() == width * height,
            Contract,
            "image {width}x{height} needs {} pixels, got {}",
            width * height,
            pixels.len()
        );
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn from_gray(width: usize, height: usize, gray: &[u8]) -> Result<Self> {
        Self::new(width, height, gray.iter().map(|&g| [g, g, g]).collect())
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Pixel with replicate-edge padding outside the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> [u8; 3] {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }

    pub fn from_rgb_image(img: &image::RgbImage) -> Self {
        let (w, h) = img.dimensions();
        Self {
            width: w as usize,
            height: h as usize,
            pixels: img.pixels().map(|p| p.0).collect(),
        }
    }

    pub fn to_rgb_image(&self) -> image::RgbImage {
        let raw: Vec<u8> = self.pixels.iter().flat_map(|p| p.iter().copied()).collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }
}

/// Color-names lookup: 32x32x32 quantized RGB to 10 values.
#[derive(Debug, Clone, PartialEq)]
pub struct CnTable {
    rows: Vec<[f64; CN_CHANNELS]>,
}

impl CnTable {
    pub const ROWS: usize = 32 * 32 * 32;

    pub fn new(rows: Vec<[f64; CN_CHANNELS]>) -> Result<Self> {
        ensure!(
            rows.len() == Self::ROWS,
            Config,
            "color-names table needs {} rows, got {}",
            Self::ROWS,
            rows.len()
        );
        Ok(Self { rows })
    }

    /// Row index for a pixel: `r·1024 + g·32 + b` on 5-bit channels.
    #[inline]
    pub fn index(rgb: [u8; 3]) -> usize {
        ((rgb[0] as usize) >> 3) * 1024 + ((rgb[1] as usize) >> 3) * 32 + ((rgb[2] as usize) >> 3)
    }

    #[inline]
    pub fn lookup(&self, rgb: [u8; 3]) -> &[f64; CN_CHANNELS] {
        &self.rows[Self::index(rgb)]
    }

    pub fn rows(&self) -> &[[f64; CN_CHANNELS]] {
        &self.rows
    }

    /// Reads the plain-text format: 32768 lines of 10 whitespace-separated
    /// decimals.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::with_capacity(Self::ROWS);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != CN_CHANNELS {
                return Err(parse_err(format!("expected {CN_CHANNELS} values, got {}", vals.len())));
            }
            let mut row = [0.0; CN_CHANNELS];
            row.copy_from_slice(&vals);
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Stand-in table for when the learned color-names data is unavailable:
    /// each quantized color is softly assigned to ten RGB prototypes with a
    /// Gaussian kernel, rows summing to one.
    pub fn synthetic() -> Self {
        const PROTOTYPES: [[f64; 3]; CN_CHANNELS] = [
            [0.0, 0.0, 0.0],       // black
            [255.0, 255.0, 255.0], // white
            [128.0, 128.0, 128.0], // grey
            [220.0, 30.0, 30.0],   // red
            [240.0, 140.0, 20.0],  // orange
            [240.0, 230.0, 40.0],  // yellow
            [40.0, 180.0, 50.0],   // green
            [30.0, 60.0, 220.0],   // blue
            [140.0, 50.0, 170.0],  // purple
            [240.0, 130.0, 190.0], // pink
        ];
        const SIGMA: f64 = 60.0;
        let mut rows = Vec::with_capacity(Self::ROWS);
        for r in 0..32 {
            for g in 0..32 {
                for b in 0..32 {
                    let c = [r as f64 * 8.0 + 4.0, g as f64 * 8.0 + 4.0, b as f64 * 8.0 + 4.0];
                    let mut row = [0.0; CN_CHANNELS];
                    for (slot, p) in row.iter_mut().zip(PROTOTYPES.iter()) {
                        let d2: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                        *slot = (-d2 / (2.0 * SIGMA * SIGMA)).exp();
                    }
                    let total: f64 = row.iter().sum();
                    row.iter_mut().for_each(|v| *v /= total);
                    rows.push(row);
                }
            }
        }
        Self { rows }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureConfig {
    /// Pixels per cell side.
    pub cell_size: usize,
    pub use_hog: bool,
    pub use_cn: bool,
    pub use_gray: bool,
    pub cn_table: Option<Arc<CnTable>>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::hog()
    }
}

impl FeatureConfig {
    /// HOG only (the "-H" tracker variant).
    pub fn hog() -> Self {
        Self {
            cell_size: 4,
            use_hog: true,
            use_cn: false,
            use_gray: false,
            cn_table: None,
        }
    }

    /// HOG, color names and gray (the "-HC" variant).
    pub fn hog_cn_gray(table: Arc<CnTable>) -> Self {
        Self {
            cell_size: 4,
            use_hog: true,
            use_cn: true,
            use_gray: true,
            cn_table: Some(table),
        }
    }

    pub fn channel_count(&self) -> usize {
        HOG_CHANNELS * self.use_hog as usize + CN_CHANNELS * self.use_cn as usize + self.use_gray as usize
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.cell_size >= 1, Config, "cell_size must be positive");
        ensure!(
            self.use_hog || self.use_cn || self.use_gray,
            Config,
            "at least one feature type must be enabled"
        );
        ensure!(
            !self.use_cn || self.cn_table.is_some(),
            Config,
            "color-names features need a lookup table"
        );
        Ok(())
    }
}

/// Extracts the multi-channel sample from a patch whose sides are multiples
/// of the cell size.
pub fn extract_features<T: Scalar>(patch: &ImagePatch, cfg: &FeatureConfig) -> Result<RealChannels<T>> {
    cfg.validate()?;
    let cs = cfg.cell_size;
    ensure!(
        patch.width().is_multiple_of(cs) && patch.height().is_multiple_of(cs) && patch.width() >= cs && patch.height() >= cs,
        Contract,
        "patch {}x{} is not divisible into {cs}-pixel cells",
        patch.width(),
        patch.height()
    );
    let mut channels = Vec::with_capacity(cfg.channel_count());
    if cfg.use_hog {
        channels.extend(fhog::<T>(patch, cs));
    }
    if cfg.use_cn {
        let table = cfg.cn_table.as_ref().expect("validated");
        channels.extend(color_names::<T>(patch, cs, table));
    }
    if cfg.use_gray {
        channels.push(gray_cells::<T>(patch, cs));
    }
    MultiChannel::new(channels)
}

#[inline]
fn luminance(p: [u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// Cell-averaged luminance mapped to `[-0.5, 0.5]`.
fn gray_cells<T: Scalar>(patch: &ImagePatch, cs: usize) -> RealGrid<T> {
    let (cw, ch) = (patch.width() / cs, patch.height() / cs);
    let area = (cs * cs) as f64;
    Grid::from_fn(cw, ch, |r, c| {
        let mut sum = 0.0;
        for y in r * cs..(r + 1) * cs {
            for x in c * cs..(c + 1) * cs {
                sum += luminance(patch.get(x, y));
            }
        }
        T::of(sum / area / 255.0 - 0.5)
    })
}

fn color_names<T: Scalar>(patch: &ImagePatch, cs: usize, table: &CnTable) -> Vec<RealGrid<T>> {
    let (cw, ch) = (patch.width() / cs, patch.height() / cs);
    let area = (cs * cs) as f64;
    let mut acc = vec![[0.0f64; CN_CHANNELS]; cw * ch];
    for y in 0..ch * cs {
        for x in 0..cw * cs {
            let row = table.lookup(patch.get(x, y));
            let cell = &mut acc[(y / cs) * cw + x / cs];
            for (a, v) in cell.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    (0..CN_CHANNELS)
        .map(|k| Grid::from_fn(cw, ch, |r, c| T::of(acc[r * cw + c][k] / area)))
        .collect()
}

/// 31-channel Felzenszwalb HOG with full cell resolution.
///
/// Gradients use centered differences with replicated borders, taking the
/// color channel of largest magnitude. Orientations are soft-binned into
/// 18 signed bins and magnitudes are spread bilinearly over the four
/// nearest cells. Each cell is normalized by the energies of the four 2x2
/// blocks containing it (neighbours clamped at the grid edge) and truncated
/// at 0.2.
pub fn fhog<T: Scalar>(patch: &ImagePatch, cell_size: usize) -> Vec<RealGrid<T>> {
    let (w, h) = (patch.width(), patch.height());
    let cs = cell_size;
    let (cw, ch) = (w / cs, h / cs);
    let ncell = cw * ch;
    let mut hist = vec![T::zero(); ncell * HOG_ORIENTATIONS];

    let bin_width = T::PI() / T::of(9.0);
    let inv_cs = T::one() / T::of(cs as f64);
    let half = T::of(0.5);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let right = patch.get_clamped(xi + 1, yi);
            let left = patch.get_clamped(xi - 1, yi);
            let down = patch.get_clamped(xi, yi + 1);
            let up = patch.get_clamped(xi, yi - 1);
            let mut best = (T::zero(), T::zero(), T::zero());
            for k in 0..3 {
                let dx = T::of(right[k] as f64 - left[k] as f64);
                let dy = T::of(down[k] as f64 - up[k] as f64);
                let v = dx * dx + dy * dy;
                if k == 0 || v > best.2 {
                    best = (dx, dy, v);
                }
            }
            let (dx, dy, v) = best;
            if v == T::zero() {
                continue;
            }
            let mag = v.sqrt();
            let mut theta = dy.atan2(dx);
            if theta < T::zero() {
                theta += T::TAU();
            }
            let pos = theta / bin_width;
            let o0f = pos.floor();
            let frac = pos - o0f;
            let o0 = (o0f.to_usize().unwrap_or(0)) % HOG_ORIENTATIONS;
            let o1 = (o0 + 1) % HOG_ORIENTATIONS;

            let xp = (T::of(x as f64) + half) * inv_cs - half;
            let yp = (T::of(y as f64) + half) * inv_cs - half;
            let ixp = xp.floor();
            let iyp = yp.floor();
            let vx0 = xp - ixp;
            let vy0 = yp - iyp;
            let ixp = ixp.to_isize().unwrap_or(-1);
            let iyp = iyp.to_isize().unwrap_or(-1);
            let cells = [
                (iyp, ixp, (T::one() - vy0) * (T::one() - vx0)),
                (iyp, ixp + 1, (T::one() - vy0) * vx0),
                (iyp + 1, ixp, vy0 * (T::one() - vx0)),
                (iyp + 1, ixp + 1, vy0 * vx0),
            ];
            for (cr, cc, wgt) in cells {
                if cr < 0 || cc < 0 || cr >= ch as isize || cc >= cw as isize {
                    continue;
                }
                let base = (cr as usize * cw + cc as usize) * HOG_ORIENTATIONS;
                let m = mag * wgt;
                hist[base + o0] += m * (T::one() - frac);
                hist[base + o1] += m * frac;
            }
        }
    }

    let energy: Vec<T> = (0..ncell)
        .map(|i| {
            let hc = &hist[i * HOG_ORIENTATIONS..(i + 1) * HOG_ORIENTATIONS];
            (0..9).fold(T::zero(), |acc, o| {
                let s = hc[o] + hc[o + 9];
                acc + s * s
            })
        })
        .collect();
    let energy_at = |r: isize, c: isize| -> T {
        let r = r.clamp(0, ch as isize - 1) as usize;
        let c = c.clamp(0, cw as isize - 1) as usize;
        energy[r * cw + c]
    };

    let trunc = T::of(HOG_TRUNCATION);
    let eps = T::of(HOG_NORM_EPS);
    let texture_scale = T::of(1.0 / (HOG_ORIENTATIONS as f64).sqrt());
    let mut out = vec![vec![T::zero(); ncell]; HOG_CHANNELS];
    for r in 0..ch {
        for c in 0..cw {
            let (ri, ci) = (r as isize, c as isize);
            // The four 2x2 blocks containing the cell, anchored at their top-left.
            let norms = [(ri, ci), (ri - 1, ci), (ri, ci - 1), (ri - 1, ci - 1)].map(|(br, bc)| {
                let s = energy_at(br, bc) + energy_at(br, bc + 1) + energy_at(br + 1, bc) + energy_at(br + 1, bc + 1);
                T::one() / (s + eps).sqrt()
            });
            let i = r * cw + c;
            let hc = &hist[i * HOG_ORIENTATIONS..(i + 1) * HOG_ORIENTATIONS];
            let mut texture = [T::zero(); 4];
            for o in 0..HOG_ORIENTATIONS {
                let mut sum = T::zero();
                for (k, n) in norms.iter().enumerate() {
                    let v = (hc[o] * *n).min(trunc);
                    sum += v;
                    texture[k] += v;
                }
                out[o][i] = half * sum;
            }
            for o in 0..9 {
                let s = hc[o] + hc[o + 9];
                let sum = norms.iter().fold(T::zero(), |acc, n| acc + (s * *n).min(trunc));
                out[HOG_ORIENTATIONS + o][i] = half * sum;
            }
            for k in 0..4 {
                out[27 + k][i] = texture_scale * texture[k];
            }
        }
    }
    out.into_iter()
        .map(|data| Grid::new(cw, ch, data).expect("cell grid"))
        .collect()
}

/// Separable Hann window `h(i) = 0.5 (1 - cos(2πi/(L-1)))`. Axes of length
/// two or less get a window of ones.
pub fn cosine_window<T: Scalar>(width: usize, height: usize) -> RealGrid<T> {
    let hann = |len: usize| -> Vec<T> {
        if len <= 2 {
            return vec![T::one(); len];
        }
        (0..len)
            .map(|i| {
                let a = T::TAU() * T::of(i as f64) / T::of((len - 1) as f64);
                T::of(0.5) * (T::one() - a.cos())
            })
            .collect()
    };
    let (hx, hy) = (hann(width), hann(height));
    Grid::from_fn(width, height, |r, c| hy[r] * hx[c])
}

pub fn apply_window<T: Scalar>(sample: &RealChannels<T>, window: &RealGrid<T>) -> RealChannels<T> {
    assert_eq!(sample.dims(), window.dims(), "window does not match the sample");
    sample.map(|ch| {
        let data = ch.values().iter().zip(window.values()).map(|(&a, &b)| a * b).collect();
        Grid::new(ch.width(), ch.height(), data).expect("same dims")
    })
}

pub fn apply_cosine_window<T: Scalar>(sample: &RealChannels<T>) -> RealChannels<T> {
    let (w, h) = sample.dims();
    apply_window(sample, &cosine_window(w, h))
}

/// Bilinearly samples an `out_w x out_h` patch covering the source rectangle
/// of size `src_w x src_h` centred at `(center_x, center_y)`. Pixel centres
/// sit at half-integer coordinates; the source is edge-replicated. Values are
/// rounded half up.
pub fn sample_region(
    frame: &ImagePatch,
    center_x: f64,
    center_y: f64,
    src_w: f64,
    src_h: f64,
    out_w: usize,
    out_h: usize,
) -> ImagePatch {
    assert!(out_w >= 1 && out_h >= 1, "output size must be positive");
    let sx = src_w / out_w as f64;
    let sy = src_h / out_h as f64;
    let left = center_x - src_w / 2.0;
    let top = center_y - src_h / 2.0;
    let max_x = frame.width() as f64 - 1.0;
    let max_y = frame.height() as f64 - 1.0;

    let axis = |start: f64, step: f64, n: usize, max: f64| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let p = (start + (i as f64 + 0.5) * step - 0.5).clamp(0.0, max);
                let p0 = p.floor();
                let f = p - p0;
                let i0 = p0 as usize;
                let i1 = (i0 + 1).min(max as usize);
                (i0, i1, f)
            })
            .collect()
    };
    let xs = axis(left, sx, out_w, max_x);
    let ys = axis(top, sy, out_h, max_y);

    let mut pixels = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p00 = frame.get(x0, y0);
            let p01 = frame.get(x1, y0);
            let p10 = frame.get(x0, y1);
            let p11 = frame.get(x1, y1);
            let mut px = [0u8; 3];
            for k in 0..3 {
                let top = p00[k] as f64 * (1.0 - fx) + p01[k] as f64 * fx;
                let bot = p10[k] as f64 * (1.0 - fx) + p11[k] as f64 * fx;
                let v = top * (1.0 - fy) + bot * fy;
                px[k] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
            pixels.push(px);
        }
    }
    ImagePatch {
        width: out_w,
        height: out_h,
        pixels,
    }
}

/// Bilinear resize; an exact copy when the size is unchanged.
pub fn resize_patch(patch: &ImagePatch, out_w: usize, out_h: usize) -> ImagePatch {
    if out_w == patch.width() && out_h == patch.height() {
        return patch.clone();
    }
    let (w, h) = (patch.width() as f64, patch.height() as f64);
    sample_region(patch, w / 2.0, h / 2.0, w, h, out_w, out_h)
}

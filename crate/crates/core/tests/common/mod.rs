//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver path it is used to check.
#![allow(dead_code)]

use arcf::grid::{ComplexChannels, Grid, MultiChannel, RealChannels, RealGrid};
use arcf::solver::{AdmmConfig, CroppingWindow, RegressionTarget};
use arcf::spectral::Fft2;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut impl Rng, w: usize, h: usize) -> RealGrid<f64> {
    Grid::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_channels(rng: &mut impl Rng, w: usize, h: usize, d: usize) -> RealChannels<f64> {
    MultiChannel::new((0..d).map(|_| random_grid(rng, w, h)).collect()).unwrap()
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Direct `O(N²)` forward DFT.
pub fn naive_dft(g: &RealGrid<f64>) -> Vec<C64> {
    let (w, h) = g.dims();
    let mut out = vec![Complex::new(0.0, 0.0); w * h];
    for u in 0..h {
        for v in 0..w {
            let mut acc = Complex::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = -2.0 * std::f64::consts::PI * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                    acc += Complex::from_polar(g[(r, c)], phase);
                }
            }
            out[u * w + v] = acc;
        }
    }
    out
}

/// Direct `O(N²)` inverse DFT with the `1/N` factor.
pub fn naive_idft(w: usize, h: usize, spec: &[C64]) -> Vec<C64> {
    let n = (w * h) as f64;
    let mut out = vec![Complex::new(0.0, 0.0); w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = Complex::new(0.0, 0.0);
            for u in 0..h {
                for v in 0..w {
                    let phase = 2.0 * std::f64::consts::PI * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                    acc += spec[u * w + v] * Complex::from_polar(1.0, phase);
                }
            }
            out[r * w + c] = acc / n;
        }
    }
    out
}

/// Solves one bin of the `ĝ` subproblem by forming and inverting the dense
/// `D×D` system `((1+γ) x xᴴ + μ I) g = x conj(ŷ) + γ x conj(M̂) − ζ̂ + μ ŵ`.
pub fn dense_g_bin(x: &[C64], y: C64, prior: C64, w: &[C64], zeta: &[C64], gamma: f64, mu: f64) -> Vec<C64> {
    let d = x.len();
    let a = DMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j { mu } else { 0.0 };
        x[i] * x[j].conj() * (1.0 + gamma) + Complex::new(diag, 0.0)
    });
    let target = y.conj() + prior.conj() * gamma;
    let rhs = DVector::from_fn(d, |i, _| x[i] * target - zeta[i] + w[i] * mu);
    let inv = a.try_inverse().expect("system is positive definite");
    (inv * rhs).iter().copied().collect()
}

/// Global minimizer of
/// `½‖y − r‖² + (λ/2)‖w‖² + (γ/2)‖m − r‖²` over crop-supported filters,
/// from the dense `(M·D)`-dimensional normal equations. Returns the filter
/// and the minimum.
pub fn dense_minimizer(
    sample: &RealChannels<f64>,
    label: &RealGrid<f64>,
    prior: Option<&RealGrid<f64>>,
    lambda: f64,
    gamma: f64,
    crop_w: usize,
    crop_h: usize,
) -> (RealChannels<f64>, f64) {
    let (fw, fh) = sample.dims();
    let n = fw * fh;
    let depth = sample.depth();
    let (r0, c0) = ((fh - crop_h) / 2, (fw - crop_w) / 2);
    let cols = crop_w * crop_h * depth;
    // Column (d, r, c): response of a unit filter tap, r(τ) = x^d(t0 + τ).
    let a = DMatrix::from_fn(n, cols, |row, col| {
        let d = col / (crop_w * crop_h);
        let k = col % (crop_w * crop_h);
        let (r, c) = (k / crop_w, k % crop_w);
        let (tr, tc) = (row / fw, row % fw);
        sample.channel(d)[((r0 + r + tr) % fh, (c0 + c + tc) % fw)]
    });
    let y = DVector::from_column_slice(label.values());
    let m = prior.map(|p| DVector::from_column_slice(p.values()));
    let g = if m.is_some() { gamma } else { 0.0 };
    let lhs = a.transpose() * &a * (1.0 + g) + DMatrix::identity(cols, cols) * lambda;
    let mut rhs_vec = y.clone();
    if let Some(m) = &m {
        rhs_vec += m * g;
    }
    let rhs = a.transpose() * rhs_vec;
    let sol = lhs.lu().solve(&rhs).expect("normal equations are solvable");
    let r = &a * &sol;
    let mut e = 0.5 * (&y - &r).norm_squared() + 0.5 * lambda * sol.norm_squared();
    if let Some(m) = &m {
        e += 0.5 * g * (m - &r).norm_squared();
    }
    let channels = (0..depth)
        .map(|d| {
            let off = d * crop_w * crop_h;
            Grid::new(crop_w, crop_h, sol.as_slice()[off..off + crop_w * crop_h].to_vec()).unwrap()
        })
        .collect();
    (MultiChannel::new(channels).unwrap(), e)
}

/// Output of the reference BACF iterations.
pub struct BacfOutput {
    pub g_hat: Vec<Vec<C64>>,
    pub w: Vec<Vec<f64>>,
    pub zeta_hat: Vec<Vec<C64>>,
}

/// Plain BACF ADMM (no aberrance term) written directly on flat buffers.
/// Per bin the `ĝ` update is the BACF closed form
/// `ĝ = (1/μ)(x ŷ* − ζ̂ + μŵ) − x (S_x ŷ* − S_ζ + μ S_w) / (μ (S_x + μ))`.
pub fn bacf_reference(
    x_hat: &ComplexChannels<f64>,
    target: &RegressionTarget<f64>,
    cfg: &AdmmConfig,
    crop: &CroppingWindow,
    warm: Option<(&RealChannels<f64>, &ComplexChannels<f64>)>,
) -> BacfOutput {
    let (fw, fh) = x_hat.dims();
    let n = fw * fh;
    let depth = x_hat.depth();
    let fft = Fft2::<f64>::new(fw, fh);
    let zero = Complex::new(0.0, 0.0);
    let (r0, c0) = crop.offset;

    let pad_fft = |w: &[f64]| -> Vec<C64> {
        let mut buf = vec![zero; n];
        for r in 0..crop.crop_h {
            for c in 0..crop.crop_w {
                buf[(r0 + r) * fw + c0 + c] = Complex::new(w[r * crop.crop_w + c], 0.0);
            }
        }
        fft.forward_in_place(&mut buf);
        buf
    };

    let (mut w_sp, mut l_f): (Vec<Vec<f64>>, Vec<Vec<C64>>) = match warm {
        Some((w, z)) => (
            w.channels().iter().map(|c| c.values().to_vec()).collect(),
            z.channels().iter().map(|c| c.values().to_vec()).collect(),
        ),
        None => (vec![vec![0.0; crop.m()]; depth], vec![vec![zero; n]; depth]),
    };
    let mut h_f: Vec<Vec<C64>> = w_sp.iter().map(|w| pad_fft(w)).collect();
    let mut g_f = vec![vec![zero; n]; depth];
    let y = target.label_hat.values();
    let mut mu = cfg.mu_init;
    for _ in 0..cfg.iterations {
        for b in 0..n {
            let mut s_xx = 0.0;
            let mut s_lx = zero;
            let mut s_hx = zero;
            for d in 0..depth {
                let x = x_hat.channel(d).values()[b];
                s_xx += x.norm_sqr();
                s_lx += x.conj() * l_f[d][b];
                s_hx += x.conj() * h_f[d][b];
            }
            let yc = y[b].conj();
            for d in 0..depth {
                let x = x_hat.channel(d).values()[b];
                let first = (x * yc - l_f[d][b] + h_f[d][b] * mu) / mu;
                let second = x * (yc * s_xx - s_lx + s_hx * mu) / (mu * (s_xx + mu));
                g_f[d][b] = first - second;
            }
        }
        let scale = 1.0 / (mu + cfg.lambda / n as f64);
        for d in 0..depth {
            let mut buf: Vec<C64> = (0..n).map(|b| g_f[d][b] * mu + l_f[d][b]).collect();
            fft.inverse_in_place(&mut buf);
            for r in 0..crop.crop_h {
                for c in 0..crop.crop_w {
                    w_sp[d][r * crop.crop_w + c] = buf[(r0 + r) * fw + c0 + c].re * scale;
                }
            }
            h_f[d] = pad_fft(&w_sp[d]);
            for b in 0..n {
                l_f[d][b] += (g_f[d][b] - h_f[d][b]) * mu;
            }
        }
        mu = (cfg.mu_scale * mu).min(cfg.mu_max);
    }
    BacfOutput {
        g_hat: g_f,
        w: w_sp,
        zeta_hat: l_f,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs_diff_c(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// The occlusion suite shared by the tracker tests and the acceptance run:
/// 100 frames at 2 px/frame with a target-sized occluder over frames 40..50.
pub fn occlusion_spec(seed: u64) -> arcf::synth::SyntheticSpec {
    arcf::synth::SyntheticSpec {
        texture_seed: seed,
        noise_sigma: 2.0 / 255.0,
        occlusions: vec![arcf::synth::Occlusion {
            start_frame: 40,
            duration: 10,
            size: 32,
        }],
        ..Default::default()
    }
}

/// Smooth random texture: a sum of Gaussian blobs in target-relative units,
/// so it can be rendered at any scale without aliasing.
pub struct BlobTexture {
    blobs: Vec<(f64, f64, f64, [f64; 3])>,
}

impl BlobTexture {
    pub fn new(rng: &mut impl Rng, count: usize) -> Self {
        let blobs = (0..count)
            .map(|_| {
                (
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.06..0.15),
                    [rng.gen_range(-120.0..120.0), rng.gen_range(-120.0..120.0), rng.gen_range(-120.0..120.0)],
                )
            })
            .collect();
        Self { blobs }
    }

    /// Frame with the texture centred at `(cx, cy)`, `size` pixels across,
    /// over a flat gray background.
    pub fn render(&self, w: usize, h: usize, cx: f64, cy: f64, size: f64) -> arcf::features::Frame {
        arcf::features::Frame::from_fn(w, h, |x, y| {
            let u = (x as f64 + 0.5 - cx) / size;
            let v = (y as f64 + 0.5 - cy) / size;
            let mut rgb = [128.0; 3];
            for &(bx, by, s, amp) in &self.blobs {
                let e = (-((u - bx).powi(2) + (v - by).powi(2)) / (2.0 * s * s)).exp();
                for k in 0..3 {
                    rgb[k] += amp[k] * e;
                }
            }
            rgb.map(|c| c.round().clamp(0.0, 255.0) as u8)
        })
    }
}

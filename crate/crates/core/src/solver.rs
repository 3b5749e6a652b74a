//! Aberrance repressed correlation filter: objective, ADMM subproblems and
//! the per-frame training loop.
//!
//! Notation used throughout (all grids row-major, `N` cells per channel):
//!
//! * `x^d` windowed sample channels, `x̂^d` their unnormalized DFTs;
//! * `w^d` the filter on the central `crop` support, `ĝ^d` its full-size
//!   frequency-domain counterpart;
//! * the response is the circular cross-correlation
//!   `r(τ) = Σ_d Σ_t x^d(t + τ) (Bᵀw^d)(t)`, whose spectrum is
//!   `Σ_d x̂^d · conj(ĝ^d)`.
//!
//! The training objective is
//!
//! ```text
//! E(w) = ½‖y − r‖² + (λ/2)‖w‖² + (γ/2)‖Mˢ − r‖²
//! ```
//!
//! where `Mˢ` is the previous response map circularly shifted so its peak
//! matches the current one. The ADMM iterations work on the frequency-domain
//! split with unnormalized spectra, which is `N·E` with the filter
//! regularization scaled to `λ/N`; see [`AdmmConfig::spatial_lambda`].

use num_complex::Complex;

use crate::error::{ensure, Error, Result};
use crate::grid::{ComplexChannels, ComplexGrid, Grid, MultiChannel, RealChannels, RealGrid};
use crate::scalar::Scalar;
use crate::spectral::{circular_shift, correlation_spectrum, Fft2};

/// Central crop of the padded sample grid that supports the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CroppingWindow {
    pub full_w: usize,
    pub full_h: usize,
    pub crop_w: usize,
    pub crop_h: usize,
    /// Top-left of the crop as `(row, col)`.
    pub offset: (usize, usize),
}

impl CroppingWindow {
    pub fn new(full_w: usize, full_h: usize, crop_w: usize, crop_h: usize) -> Result<Self> {
        ensure!(
            crop_w >= 1 && crop_h >= 1 && crop_w <= full_w && crop_h <= full_h,
            Contract,
            "crop {crop_w}x{crop_h} must fit inside {full_w}x{full_h}"
        );
        Ok(Self {
            full_w,
            full_h,
            crop_w,
            crop_h,
            offset: ((full_h - crop_h) / 2, (full_w - crop_w) / 2),
        })
    }

    /// Number of cells in the full grid.
    pub fn n(&self) -> usize {
        self.full_w * self.full_h
    }

    /// Number of cells in the filter support.
    pub fn m(&self) -> usize {
        self.crop_w * self.crop_h
    }

    pub fn crop<V: Copy>(&self, g: &Grid<V>) -> Grid<V> {
        assert_eq!(g.dims(), (self.full_w, self.full_h), "grid does not match the window");
        let (r0, c0) = self.offset;
        Grid::from_fn(self.crop_w, self.crop_h, |r, c| g[(r0 + r, c0 + c)])
    }

    /// Zero-pads a crop-sized grid back into the full grid (`Bᵀw`).
    pub fn pad<T: Scalar>(&self, w: &RealGrid<T>) -> RealGrid<T> {
        assert_eq!(w.dims(), (self.crop_w, self.crop_h), "grid does not match the crop");
        let (r0, c0) = self.offset;
        let mut out = RealGrid::zeros(self.full_w, self.full_h);
        for r in 0..self.crop_h {
            for c in 0..self.crop_w {
                out[(r0 + r, c0 + c)] = w[(r, c)];
            }
        }
        out
    }
}

/// The ideal response `y` and its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTarget<T: Scalar> {
    pub label: RealGrid<T>,
    pub label_hat: ComplexGrid<T>,
    pub sigma: T,
}

/// Gaussian label with its unit peak at cell `(0, 0)`, distances measured
/// circularly.
pub fn make_gaussian_label<T: Scalar>(full_w: usize, full_h: usize, sigma: T) -> Result<RegressionTarget<T>> {
    ensure!(full_w >= 1 && full_h >= 1, Contract, "label dimensions must be positive");
    ensure!(sigma > T::zero() && sigma.is_finite(), Contract, "label sigma must be positive, got {sigma}");
    let two_s2 = T::of(2.0) * sigma * sigma;
    let label = Grid::from_fn(full_w, full_h, |r, c| {
        let dr = T::of(r.min(full_h - r) as f64);
        let dc = T::of(c.min(full_w - c) as f64);
        (-(dr * dr + dc * dc) / two_s2).exp()
    });
    let label_hat = Fft2::new(full_w, full_h).forward(&label);
    Ok(RegressionTarget { label, label_hat, sigma })
}

/// Learned filter and the ADMM state it was produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T: Scalar> {
    /// Full-size frequency-domain filter `ĝ`.
    pub g_hat: ComplexChannels<T>,
    /// Spatial filter `w` on the crop support.
    pub w_spatial: RealChannels<T>,
    /// Lagrange multipliers `ζ̂`.
    pub zeta_hat: ComplexChannels<T>,
}

impl<T: Scalar> FilterBank<T> {
    pub fn zeros(crop: &CroppingWindow, depth: usize) -> Self {
        Self {
            g_hat: ComplexChannels::zeros(crop.full_w, crop.full_h, depth),
            w_spatial: RealChannels::zeros(crop.crop_w, crop.crop_h, depth),
            zeta_hat: ComplexChannels::zeros(crop.full_w, crop.full_h, depth),
        }
    }

    pub fn depth(&self) -> usize {
        self.g_hat.depth()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    /// Filter regularization `λ` of the frequency-domain formulation.
    pub lambda: f64,
    /// Aberrance penalty `γ`. Zero gives the BACF baseline.
    pub gamma: f64,
    pub mu_init: f64,
    /// Growth factor of the penalty, `μ ← min(μ_max, β μ)`.
    pub mu_scale: f64,
    pub mu_max: f64,
    pub iterations: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            gamma: 0.71,
            mu_init: 1.0,
            mu_scale: 10.0,
            mu_max: 10_000.0,
            iterations: 5,
        }
    }
}

impl AdmmConfig {
    pub fn bacf() -> Self {
        Self {
            gamma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.lambda >= 0.0 && self.lambda.is_finite(), Config, "lambda must be nonnegative");
        ensure!(self.gamma >= 0.0 && self.gamma.is_finite(), Config, "gamma must be nonnegative");
        ensure!(self.mu_init > 0.0, Config, "mu_init must be positive");
        ensure!(self.mu_scale >= 1.0, Config, "mu_scale must be at least 1");
        ensure!(self.mu_init <= self.mu_max, Config, "mu_init must not exceed mu_max");
        ensure!(self.iterations >= 1, Config, "at least one ADMM iteration is required");
        Ok(())
    }

    /// The regularization weight of the spatial objective the iterations
    /// minimize, `λ/N` for a grid of `n` cells.
    pub fn spatial_lambda(&self, n: usize) -> f64 {
        self.lambda / n as f64
    }
}

/// A response map with its peak (argmax, ties to lowest row then column).
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap<T: Scalar> {
    pub map: RealGrid<T>,
    pub peak: (usize, usize),
}

/// The previous frame's response, `M_{k-1}`.
pub type PriorResponse<T> = ResponseMap<T>;

impl<T: Scalar> ResponseMap<T> {
    pub fn new(map: RealGrid<T>) -> Self {
        let peak = map.argmax();
        Self { map, peak }
    }

    pub fn peak_value(&self) -> T {
        self.map[self.peak]
    }
}

/// Circularly shifts the prior map so its peak lands on `current_peak`.
pub fn shift_prior_response<T: Scalar>(prior: &PriorResponse<T>, current_peak: (usize, usize)) -> RealGrid<T> {
    let (w, h) = prior.map.dims();
    assert!(current_peak.0 < h && current_peak.1 < w, "peak outside the response grid");
    let dp = current_peak.0 as i64 - prior.peak.0 as i64;
    let dq = current_peak.1 as i64 - prior.peak.1 as i64;
    circular_shift(&prior.map, dp, dq)
}

/// Summed circular cross-correlation of the sample with the zero-padded
/// filter, evaluated directly in the spatial domain (`O(N·M·D)`).
pub fn spatial_response<T: Scalar>(w: &RealChannels<T>, sample: &RealChannels<T>) -> Result<RealGrid<T>> {
    ensure!(w.depth() == sample.depth(), Contract, "filter has {} channels, sample {}", w.depth(), sample.depth());
    let (fw, fh) = sample.dims();
    let crop = CroppingWindow::new(fw, fh, w.width(), w.height())?;
    let (r0, c0) = crop.offset;
    let mut out = RealGrid::zeros(fw, fh);
    for (wc, xc) in w.channels().iter().zip(sample.channels()) {
        for tr in 0..fh {
            for tc in 0..fw {
                let mut acc = T::zero();
                for r in 0..crop.crop_h {
                    for c in 0..crop.crop_w {
                        let (sr, sc) = ((r0 + r + tr) % fh, (c0 + c + tc) % fw);
                        acc += xc[(sr, sc)] * wc[(r, c)];
                    }
                }
                out[(tr, tc)] += acc;
            }
        }
    }
    Ok(out)
}

/// Evaluates `½‖y − r‖² + (λ/2)Σ‖w^d‖² + (γ/2)‖Mˢ − r‖²` by direct spatial
/// correlation. `w` holds crop-sized channels centred in the sample grid.
pub fn objective_value<T: Scalar>(
    w: &RealChannels<T>,
    sample: &RealChannels<T>,
    target: &RegressionTarget<T>,
    prior_shifted: Option<&RealGrid<T>>,
    lambda: T,
    gamma: T,
) -> Result<T> {
    ensure!(
        target.label.dims() == sample.dims(),
        Contract,
        "label and sample dimensions differ"
    );
    if gamma > T::zero() {
        ensure!(prior_shifted.is_some(), Contract, "gamma > 0 requires a prior response map");
    }
    let r = spatial_response(w, sample)?;
    let half = T::of(0.5);
    let data = target
        .label
        .values()
        .iter()
        .zip(r.values())
        .fold(T::zero(), |acc, (&y, &v)| acc + (y - v) * (y - v));
    let reg = w
        .channels()
        .iter()
        .fold(T::zero(), |acc, c| acc + c.energy());
    let mut total = half * data + half * lambda * reg;
    if let Some(m) = prior_shifted {
        ensure!(m.dims() == sample.dims(), Contract, "prior and sample dimensions differ");
        let ab = m
            .values()
            .iter()
            .zip(r.values())
            .fold(T::zero(), |acc, (&p, &v)| acc + (p - v) * (p - v));
        total += half * gamma * ab;
    }
    Ok(total)
}

/// The same objective evaluated in the frequency domain with
/// `ĝ = DFT(Bᵀw)`: `(1/2N)‖ŷ − Σ x̂ conj(ĝ)‖² + (λ/2)‖w‖² + (γ/2N)‖M̂ˢ − Σ x̂ conj(ĝ)‖²`.
pub fn frequency_objective<T: Scalar>(
    w: &RealChannels<T>,
    x_hat: &ComplexChannels<T>,
    target: &RegressionTarget<T>,
    prior_hat: Option<&ComplexGrid<T>>,
    lambda: T,
    gamma: T,
) -> Result<T> {
    let (fw, fh) = x_hat.dims();
    let crop = CroppingWindow::new(fw, fh, w.width(), w.height())?;
    let fft = Fft2::new(fw, fh);
    let g_hat = w.map(|c| fft.forward(&crop.pad(c)));
    let r_hat = correlation_spectrum(x_hat, &g_hat);
    let inv_2n = T::one() / T::of(2.0 * crop.n() as f64);
    let data = target
        .label_hat
        .values()
        .iter()
        .zip(r_hat.values())
        .fold(T::zero(), |acc, (y, r)| acc + (y - r).norm_sqr());
    let reg = w.channels().iter().fold(T::zero(), |acc, c| acc + c.energy());
    let mut total = inv_2n * data + T::of(0.5) * lambda * reg;
    if gamma > T::zero() {
        let m = prior_hat.ok_or_else(|| Error::Contract("gamma > 0 requires a prior response map".into()))?;
        let ab = m
            .values()
            .iter()
            .zip(r_hat.values())
            .fold(T::zero(), |acc, (p, r)| acc + (p - r).norm_sqr());
        total += inv_2n * gamma * ab;
    }
    Ok(total)
}

/// Closed-form `w`-step: `w = (λ/N + μ)⁻¹ · crop(ζ + μ g)` with `ζ`, `g` the
/// `1/N`-normalized inverse DFTs of `ζ̂`, `ĝ`.
pub fn solve_w_subproblem<T: Scalar>(
    g_hat: &ComplexChannels<T>,
    zeta_hat: &ComplexChannels<T>,
    lambda: T,
    mu: T,
    crop: &CroppingWindow,
    fft: &Fft2<T>,
) -> RealChannels<T> {
    assert!(g_hat.same_shape(zeta_hat), "filter and multiplier shapes differ");
    assert!(mu > T::zero(), "mu must be positive");
    let scale = T::one() / (lambda / T::of(crop.n() as f64) + mu);
    let channels = g_hat
        .channels()
        .iter()
        .zip(zeta_hat.channels())
        .map(|(g, z)| {
            let mut buf: Vec<Complex<T>> = g
                .values()
                .iter()
                .zip(z.values())
                .map(|(&gv, &zv)| zv + gv.scale(mu))
                .collect();
            fft.inverse_in_place(&mut buf);
            let full = Grid::new(crop.full_w, crop.full_h, buf.into_iter().map(|v| v.re * scale).collect())
                .expect("full grid");
            crop.crop(&full)
        })
        .collect();
    MultiChannel::new(channels).expect("depth preserved")
}

/// Per-bin inputs of the `ĝ` subproblem.
#[derive(Debug, Clone, Copy)]
pub struct BinTerms<'a, T: Scalar> {
    pub x: &'a [Complex<T>],
    pub y: Complex<T>,
    /// Shifted prior spectrum at this bin; zero when there is no prior.
    pub prior: Complex<T>,
    pub w: &'a [Complex<T>],
    pub zeta: &'a [Complex<T>],
}

/// Solves one frequency bin of the `ĝ` subproblem,
///
/// ```text
/// ĝ(n) = ((1+γ) x xᴴ + μ I)⁻¹ (x conj(ŷ) + γ x conj(M̂ˢ) − ζ̂ + μ ŵ),
/// ```
///
/// through the rank-one Sherman–Morrison identity
/// `((1+γ) x xᴴ + μ I)⁻¹ = (1/μ)(I − x xᴴ / b)`, `b = xᴴx + μ/(1+γ)`.
/// Writes the `D` results into `out`.
pub fn solve_g_bin<T: Scalar>(t: BinTerms<'_, T>, gamma: T, mu: T, out: &mut [Complex<T>]) {
    let d = t.x.len();
    debug_assert!(t.w.len() == d && t.zeta.len() == d && out.len() == d);
    let target = t.y.conj() + t.prior.conj().scale(gamma);
    let mut s_x = T::zero();
    let mut s_zeta = Complex::new(T::zero(), T::zero());
    let mut s_w = Complex::new(T::zero(), T::zero());
    for k in 0..d {
        let xc = t.x[k].conj();
        s_x += t.x[k].norm_sqr();
        s_zeta += xc * t.zeta[k];
        s_w += xc * t.w[k];
    }
    let b = s_x + mu / (T::one() + gamma);
    // xᴴ · rhs, reusing the inner products above.
    let proj = (target.scale(s_x) - s_zeta + s_w.scale(mu)) / b;
    let inv_mu = T::one() / mu;
    for k in 0..d {
        let rhs = t.x[k] * target - t.zeta[k] + t.w[k].scale(mu);
        out[k] = (rhs - t.x[k] * proj).scale(inv_mu);
    }
}

/// `ĝ`-step over all bins. Bins are independent, so the result does not
/// depend on visiting order.
pub fn solve_g_subproblem<T: Scalar>(
    x_hat: &ComplexChannels<T>,
    y_hat: &ComplexGrid<T>,
    prior_hat: Option<&ComplexGrid<T>>,
    w_hat: &ComplexChannels<T>,
    zeta_hat: &ComplexChannels<T>,
    gamma: T,
    mu: T,
) -> Result<ComplexChannels<T>> {
    ensure!(mu > T::zero(), Contract, "mu must be positive");
    ensure!(
        x_hat.same_shape(w_hat) && x_hat.same_shape(zeta_hat) && x_hat.dims() == y_hat.dims(),
        Contract,
        "g-subproblem inputs have inconsistent shapes"
    );
    if let Some(p) = prior_hat {
        ensure!(p.dims() == y_hat.dims(), Contract, "prior spectrum has the wrong size");
    }
    let finite = x_hat.all_finite()
        && y_hat.all_finite()
        && w_hat.all_finite()
        && zeta_hat.all_finite()
        && prior_hat.map_or(true, |p| p.all_finite());
    if !finite {
        return Err(Error::Numerical("non-finite value in g-subproblem inputs".into()));
    }
    let gamma = if prior_hat.is_some() { gamma } else { T::zero() };

    let depth = x_hat.depth();
    let (fw, fh) = x_hat.dims();
    let bins = fw * fh;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![vec![zero; bins]; depth];
    let (mut xb, mut wb, mut zb, mut gb) = (vec![zero; depth], vec![zero; depth], vec![zero; depth], vec![zero; depth]);
    for n in 0..bins {
        for k in 0..depth {
            xb[k] = x_hat.channel(k).values()[n];
            wb[k] = w_hat.channel(k).values()[n];
            zb[k] = zeta_hat.channel(k).values()[n];
        }
        let terms = BinTerms {
            x: &xb,
            y: y_hat.values()[n],
            prior: prior_hat.map_or(zero, |p| p.values()[n]),
            w: &wb,
            zeta: &zb,
        };
        solve_g_bin(terms, gamma, mu, &mut gb);
        for k in 0..depth {
            out[k][n] = gb[k];
        }
    }
    let channels = out
        .into_iter()
        .map(|data| Grid::new(fw, fh, data).expect("bin count"))
        .collect();
    MultiChannel::new(channels)
}

/// `ζ̂ ← ζ̂ + μ (ĝ* − ŵ*)`.
pub fn update_lagrangian<T: Scalar>(
    zeta_hat: &ComplexChannels<T>,
    g_hat_star: &ComplexChannels<T>,
    w_hat_star: &ComplexChannels<T>,
    mu: T,
) -> ComplexChannels<T> {
    assert!(zeta_hat.same_shape(g_hat_star) && zeta_hat.same_shape(w_hat_star), "shapes differ");
    let channels = zeta_hat
        .channels()
        .iter()
        .zip(g_hat_star.channels())
        .zip(w_hat_star.channels())
        .map(|((z, g), w)| {
            let data = z
                .values()
                .iter()
                .zip(g.values())
                .zip(w.values())
                .map(|((&zv, &gv), &wv)| zv + (gv - wv).scale(mu))
                .collect();
            Grid::new(z.width(), z.height(), data).expect("same dims")
        })
        .collect();
    MultiChannel::new(channels).expect("depth preserved")
}

/// Per-iteration diagnostics of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmTrace<T: Scalar> {
    /// `‖ĝ − ŵ‖` after each iteration.
    pub primal_residuals: Vec<T>,
    /// `‖ĝ‖` after each iteration.
    pub filter_norms: Vec<T>,
}

/// ADMM trainer bound to one grid size and cropping window.
#[derive(Debug, Clone)]
pub struct AdmmSolver<T: Scalar> {
    crop: CroppingWindow,
    cfg: AdmmConfig,
    fft: Fft2<T>,
}

impl<T: Scalar> AdmmSolver<T> {
    pub fn new(crop: CroppingWindow, cfg: AdmmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            crop,
            cfg,
            fft: Fft2::new(crop.full_w, crop.full_h),
        })
    }

    pub fn crop(&self) -> &CroppingWindow {
        &self.crop
    }

    pub fn config(&self) -> &AdmmConfig {
        &self.cfg
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    /// Trains on a sample already in the frequency domain. `prior_hat` is the
    /// spectrum of the peak-aligned previous response; without it the
    /// aberrance term is disabled.
    pub fn train(
        &self,
        x_hat: &ComplexChannels<T>,
        target: &RegressionTarget<T>,
        prior_hat: Option<&ComplexGrid<T>>,
        warm_start: Option<&FilterBank<T>>,
    ) -> Result<FilterBank<T>> {
        self.train_traced(x_hat, target, prior_hat, warm_start).map(|(f, _)| f)
    }

    pub fn train_traced(
        &self,
        x_hat: &ComplexChannels<T>,
        target: &RegressionTarget<T>,
        prior_hat: Option<&ComplexGrid<T>>,
        warm_start: Option<&FilterBank<T>>,
    ) -> Result<(FilterBank<T>, AdmmTrace<T>)> {
        let crop = &self.crop;
        ensure!(
            x_hat.dims() == (crop.full_w, crop.full_h) && target.label.dims() == x_hat.dims(),
            Contract,
            "sample {:?} and label {:?} must match the {}x{} grid",
            x_hat.dims(),
            target.label.dims(),
            crop.full_w,
            crop.full_h
        );
        if let Some(p) = prior_hat {
            ensure!(p.dims() == x_hat.dims(), Contract, "prior must match the sample grid");
        }
        let depth = x_hat.depth();
        let (mut w_hat, mut zeta_hat) = match warm_start {
            Some(f) => {
                ensure!(
                    f.depth() == depth && f.w_spatial.dims() == (crop.crop_w, crop.crop_h),
                    Contract,
                    "warm start does not match the filter shape"
                );
                (self.pad_forward(&f.w_spatial), f.zeta_hat.clone())
            }
            None => (
                ComplexChannels::zeros(crop.full_w, crop.full_h, depth),
                ComplexChannels::zeros(crop.full_w, crop.full_h, depth),
            ),
        };

        let lambda = T::of(self.cfg.lambda);
        let gamma = T::of(self.cfg.gamma);
        let mut mu = self.cfg.mu_init;
        let mut trace = AdmmTrace {
            primal_residuals: Vec::with_capacity(self.cfg.iterations),
            filter_norms: Vec::with_capacity(self.cfg.iterations),
        };
        let mut g_hat = ComplexChannels::zeros(crop.full_w, crop.full_h, depth);
        let mut w = RealChannels::zeros(crop.crop_w, crop.crop_h, depth);
        for _ in 0..self.cfg.iterations {
            let mu_t = T::of(mu);
            g_hat = solve_g_subproblem(x_hat, &target.label_hat, prior_hat, &w_hat, &zeta_hat, gamma, mu_t)?;
            w = solve_w_subproblem(&g_hat, &zeta_hat, lambda, mu_t, crop, &self.fft);
            w_hat = self.pad_forward(&w);
            zeta_hat = update_lagrangian(&zeta_hat, &g_hat, &w_hat, mu_t);
            trace.primal_residuals.push(difference_norm(&g_hat, &w_hat));
            trace.filter_norms.push(g_hat.norm_sqr().sqrt());
            mu = (self.cfg.mu_scale * mu).min(self.cfg.mu_max);
        }
        Ok((
            FilterBank {
                g_hat,
                w_spatial: w,
                zeta_hat,
            },
            trace,
        ))
    }

    /// `ŵ = DFT(Bᵀw)` per channel.
    pub fn pad_forward(&self, w: &RealChannels<T>) -> ComplexChannels<T> {
        w.map(|c| self.fft.forward(&self.crop.pad(c)))
    }

    pub fn response(&self, x_hat: &ComplexChannels<T>, g_hat: &ComplexChannels<T>) -> ResponseMap<T> {
        ResponseMap::new(self.fft.inverse_real_part(&correlation_spectrum(x_hat, g_hat)))
    }
}

fn difference_norm<T: Scalar>(a: &ComplexChannels<T>, b: &ComplexChannels<T>) -> T {
    a.channels()
        .iter()
        .zip(b.channels())
        .flat_map(|(x, y)| x.values().iter().zip(y.values()))
        .fold(T::zero(), |acc, (p, q)| acc + (p - q).norm_sqr())
        .sqrt()
}

/// Trains a filter bank on a spatial sample. `prior_shifted` is the
/// peak-aligned previous response map; when absent the aberrance term is
/// off, as on the first frame.
pub fn train_filter<T: Scalar>(
    sample: &RealChannels<T>,
    target: &RegressionTarget<T>,
    prior_shifted: Option<&RealGrid<T>>,
    cfg: &AdmmConfig,
    crop: &CroppingWindow,
    warm_start: Option<&FilterBank<T>>,
) -> Result<FilterBank<T>> {
    ensure!(
        sample.dims() == (crop.full_w, crop.full_h),
        Contract,
        "sample {:?} does not match the {}x{} window",
        sample.dims(),
        crop.full_w,
        crop.full_h
    );
    if let Some(p) = prior_shifted {
        ensure!(p.dims() == sample.dims(), Contract, "prior must match the sample grid");
    }
    let solver = AdmmSolver::new(*crop, *cfg)?;
    let x_hat = solver.fft().forward_channels(sample);
    let prior_hat = prior_shifted.map(|p| solver.fft().forward(p));
    solver.train(&x_hat, target, prior_hat.as_ref(), warm_start)
}

/// Response of a filter on a sample spectrum: `IDFT(Σ_d x̂^d conj(ĝ^d))`.
pub fn compute_response<T: Scalar>(x_hat: &ComplexChannels<T>, g_hat: &ComplexChannels<T>) -> ResponseMap<T> {
    let (w, h) = x_hat.dims();
    ResponseMap::new(Fft2::new(w, h).inverse_real_part(&correlation_spectrum(x_hat, g_hat)))
}

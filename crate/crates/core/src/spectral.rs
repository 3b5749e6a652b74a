//! Two-dimensional DFTs, circular shifts and pointwise spectral products.
//!
//! Scaling convention, fixed for the whole crate: the forward transform is
//! unnormalized, `X(u,v) = sum x(r,c) exp(-2πi (u r / H + v c / W))`, and the
//! inverse carries the `1/N` factor. Under this convention Parseval reads
//! `N * sum |x|^2 = sum |X|^2`, and the spectrum of the circular
//! cross-correlation `r(τ) = sum_t x(t + τ) g(t)` is `X · conj(G)`.
//!
//! Arbitrary (non power-of-two) sizes are supported.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexChannels, ComplexGrid, Grid, MultiChannel, RealChannels, RealGrid};
use crate::scalar::Scalar;

/// Pre-planned 2-D transform for one grid size.
#[derive(Clone)]
pub struct Fft2<T: Scalar> {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl<T: Scalar> Fft2<T> {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "transform size must be positive");
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn transform(&self, buf: &mut [Complex<T>], row: &dyn Fft<T>, col: &dyn Fft<T>) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(buf.len(), w * h);
        let scratch_len = row
            .get_inplace_scratch_len()
            .max(col.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); scratch_len];
        if w > 1 {
            row.process_with_scratch(buf, &mut scratch);
        }
        if h > 1 {
            let mut cols = vec![Complex::new(T::zero(), T::zero()); w * h];
            for r in 0..h {
                for c in 0..w {
                    cols[c * h + r] = buf[r * w + c];
                }
            }
            col.process_with_scratch(&mut cols, &mut scratch);
            for c in 0..w {
                for r in 0..h {
                    buf[r * w + c] = cols[c * h + r];
                }
            }
        }
    }

    /// Unnormalized forward transform, in place.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// Inverse transform including the `1/N` factor, in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = T::one() / T::of(buf.len() as f64);
        for v in buf.iter_mut() {
            *v = v.scale(scale);
        }
    }

    pub fn forward(&self, g: &RealGrid<T>) -> ComplexGrid<T> {
        self.check_dims(g.dims());
        let mut buf: Vec<_> = g.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward_in_place(&mut buf);
        Grid::new(g.width(), g.height(), buf).expect("dimensions preserved")
    }

    pub fn forward_complex(&self, g: &ComplexGrid<T>) -> ComplexGrid<T> {
        self.check_dims(g.dims());
        let mut buf = g.values().to_vec();
        self.forward_in_place(&mut buf);
        Grid::new(g.width(), g.height(), buf).expect("dimensions preserved")
    }

    pub fn inverse_complex(&self, g: &ComplexGrid<T>) -> ComplexGrid<T> {
        self.check_dims(g.dims());
        let mut buf = g.values().to_vec();
        self.inverse_in_place(&mut buf);
        Grid::new(g.width(), g.height(), buf).expect("dimensions preserved")
    }

    /// Inverse transform of a spectrum that must come from real data.
    ///
    /// Fails with [`Error::Numerical`] when the input departs from conjugate
    /// symmetry by more than the tolerance of [`symmetry_tolerance`].
    pub fn inverse(&self, g: &ComplexGrid<T>) -> Result<RealGrid<T>> {
        let err = conjugate_symmetry_error(g);
        let tol = symmetry_tolerance(g);
        if !(err <= tol) {
            return Err(Error::Numerical(format!(
                "spectrum is not conjugate symmetric: deviation {err} exceeds {tol}"
            )));
        }
        Ok(self.inverse_real_part(g))
    }

    /// Inverse transform keeping only the real part, without a symmetry check.
    pub fn inverse_real_part(&self, g: &ComplexGrid<T>) -> RealGrid<T> {
        let full = self.inverse_complex(g);
        full.map(|v| v.re)
    }

    pub fn forward_channels(&self, x: &RealChannels<T>) -> ComplexChannels<T> {
        x.map(|c| self.forward(c))
    }

    pub fn inverse_channels_real_part(&self, x: &ComplexChannels<T>) -> RealChannels<T> {
        x.map(|c| self.inverse_real_part(c))
    }

    fn check_dims(&self, dims: (usize, usize)) {
        assert_eq!(
            dims,
            (self.width, self.height),
            "grid does not match the planned transform size"
        );
    }
}

/// Tolerance used when checking conjugate symmetry: `1e-9` relative to the
/// largest magnitude for `f64`, widened to a few thousand ulps for `f32`.
pub fn symmetry_tolerance<T: Scalar>(g: &ComplexGrid<T>) -> T {
    let scale = g
        .values()
        .iter()
        .fold(T::one(), |m, v| m.max(v.norm()));
    T::of(1e-9).max(T::epsilon() * T::of(1024.0)) * scale
}

/// Largest `|G(u,v) - conj(G(-u,-v))|` over the grid.
pub fn conjugate_symmetry_error<T: Scalar>(g: &ComplexGrid<T>) -> T {
    let (w, h) = g.dims();
    let mut worst = T::zero();
    for r in 0..h {
        for c in 0..w {
            let mirror = g[((h - r) % h, (w - c) % w)];
            let d = (g[(r, c)] - mirror.conj()).norm();
            if d > worst || d.is_nan() {
                worst = d;
            }
        }
    }
    worst
}

/// Unnormalized forward 2-D DFT of a real grid.
pub fn forward_dft<T: Scalar>(g: &RealGrid<T>) -> ComplexGrid<T> {
    Fft2::new(g.width(), g.height()).forward(g)
}

/// `1/N`-normalized inverse 2-D DFT. The input must be conjugate symmetric.
pub fn inverse_dft<T: Scalar>(g: &ComplexGrid<T>) -> Result<RealGrid<T>> {
    Fft2::new(g.width(), g.height()).inverse(g)
}

/// Inverse DFT returning the real part without a symmetry check.
pub fn inverse_dft_real_part<T: Scalar>(g: &ComplexGrid<T>) -> RealGrid<T> {
    Fft2::new(g.width(), g.height()).inverse_real_part(g)
}

/// `out(i, j) = g((i - dp) mod H, (j - dq) mod W)`.
pub fn circular_shift<V: Copy>(g: &Grid<V>, dp: i64, dq: i64) -> Grid<V> {
    let (w, h) = g.dims();
    let sp = dp.rem_euclid(h as i64) as usize;
    let sq = dq.rem_euclid(w as i64) as usize;
    Grid::from_fn(w, h, |i, j| g[((i + h - sp) % h, (j + w - sq) % w)])
}

/// Spectrum of the summed circular cross-correlation `sum_d x^d ⋆ g^d`,
/// i.e. `sum_d X^d · conj(G^d)` bin by bin.
pub fn correlation_spectrum<T: Scalar>(
    x_hat: &ComplexChannels<T>,
    g_hat: &ComplexChannels<T>,
) -> ComplexGrid<T> {
    assert!(x_hat.same_shape(g_hat), "sample and filter shapes differ");
    let (w, h) = x_hat.dims();
    let mut out = vec![Complex::new(T::zero(), T::zero()); w * h];
    for (xc, gc) in x_hat.channels().iter().zip(g_hat.channels()) {
        for ((o, x), g) in out.iter_mut().zip(xc.values()).zip(gc.values()) {
            *o += x * g.conj();
        }
    }
    Grid::new(w, h, out).expect("dimensions preserved")
}

/// Element-wise `a * s + b * t` across channels.
pub fn axpby<T: Scalar>(
    a: &ComplexChannels<T>,
    s: T,
    b: &ComplexChannels<T>,
    t: T,
) -> ComplexChannels<T> {
    assert!(a.same_shape(b), "channel shapes differ");
    let channels = a
        .channels()
        .iter()
        .zip(b.channels())
        .map(|(ac, bc)| {
            let data = ac
                .values()
                .iter()
                .zip(bc.values())
                .map(|(&x, &y)| x.scale(s) + y.scale(t))
                .collect();
            Grid::new(ac.width(), ac.height(), data).expect("dimensions preserved")
        })
        .collect();
    MultiChannel::new(channels).expect("shape preserved")
}

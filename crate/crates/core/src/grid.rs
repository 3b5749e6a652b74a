//! Row-major two-dimensional grids and multi-channel stacks of them.
//!
//! Index order is `(row, col)` everywhere. Shifts, peaks and displacements
//! all use the same `(row, col)` convention.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{ensure, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<V> {
    width: usize,
    height: usize,
    data: Vec<V>,
}

pub type RealGrid<T> = Grid<T>;
pub type ComplexGrid<T> = Grid<Complex<T>>;

impl<V: Copy> Grid<V> {
    pub fn new(width: usize, height: usize, data: Vec<V>) -> Result<Self> {
        ensure!(width >= 1 && height >= 1, Contract, "grid dimensions must be positive, got {width}x{height}");
        ensure!(
            data.len() == width * height,
            Contract,
            "grid {width}x{height} needs {} values, got {}",
            width * height,
            data.len()
        );
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: V) -> Self {
        assert!(width >= 1 && height >= 1, "grid dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a grid from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        assert!(width >= 1 && height >= 1, "grid dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of cells, `N` in the filter formulation.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[V] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<V> {
        self.data
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(&V) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

impl<V> Index<(usize, usize)> for Grid<V> {
    type Output = V;

    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &V {
        &self.data[row * self.width + col]
    }
}

impl<V> IndexMut<(usize, usize)> for Grid<V> {
    #[inline]
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut V {
        &mut self.data[row * self.width + col]
    }
}

impl<V: Copy + Zero> Grid<V> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, V::zero())
    }
}

impl<T: Scalar> Grid<T> {
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn energy(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// Position of the maximum; ties go to the lowest row, then lowest column.
    pub fn argmax(&self) -> (usize, usize) {
        let i = crate::scalar::argmax(&self.data);
        (i / self.width, i % self.width)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

impl<T: Scalar> Grid<Complex<T>> {
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// `D` same-sized channels, the stacked sample `x = [x^1 ... x^D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannel<V> {
    channels: Vec<Grid<V>>,
}

pub type RealChannels<T> = MultiChannel<T>;
pub type ComplexChannels<T> = MultiChannel<Complex<T>>;

impl<V: Copy> MultiChannel<V> {
    pub fn new(channels: Vec<Grid<V>>) -> Result<Self> {
        ensure!(!channels.is_empty(), Contract, "a multi-channel grid needs at least one channel");
        let (w, h) = channels[0].dims();
        ensure!(
            channels.iter().all(|c| c.dims() == (w, h)),
            Contract,
            "all channels must share dimensions {w}x{h}"
        );
        Ok(Self { channels })
    }

    pub fn filled(width: usize, height: usize, depth: usize, value: V) -> Self {
        assert!(depth >= 1, "a multi-channel grid needs at least one channel");
        Self {
            channels: (0..depth).map(|_| Grid::filled(width, height, value)).collect(),
        }
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    /// Cells per channel.
    #[inline]
    pub fn bins(&self) -> usize {
        self.channels[0].len()
    }

    #[inline]
    pub fn channels(&self) -> &[Grid<V>] {
        &self.channels
    }

    #[inline]
    pub fn channels_mut(&mut self) -> &mut [Grid<V>] {
        &mut self.channels
    }

    pub fn channel(&self, d: usize) -> &Grid<V> {
        &self.channels[d]
    }

    pub fn into_channels(self) -> Vec<Grid<V>> {
        self.channels
    }

    pub fn map<U: Copy>(&self, mut f: impl FnMut(&Grid<V>) -> Grid<U>) -> MultiChannel<U> {
        MultiChannel {
            channels: self.channels.iter().map(&mut f).collect(),
        }
    }

    pub fn same_shape<U: Copy>(&self, other: &MultiChannel<U>) -> bool {
        self.depth() == other.depth() && self.dims() == other.dims()
    }
}

impl<V: Copy + Zero> MultiChannel<V> {
    pub fn zeros(width: usize, height: usize, depth: usize) -> Self {
        Self::filled(width, height, depth, V::zero())
    }
}

impl<T: Scalar> MultiChannel<Complex<T>> {
    /// Sum of squared magnitudes over every channel and bin.
    pub fn norm_sqr(&self) -> T {
        self.channels
            .iter()
            .flat_map(|c| c.values())
            .fold(T::zero(), |acc, v| acc + v.norm_sqr())
    }

    pub fn all_finite(&self) -> bool {
        self.channels.iter().all(|c| c.all_finite())
    }
}

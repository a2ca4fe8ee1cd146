//! Dense row-major tensors, padding, reference convolution and window
//! medians. Every difference operator in the crate is checked against the
//! convolutions defined here.

mod conv;
mod median;
mod pad;

pub use conv::{
    conv2d, conv2d_backward_input, conv2d_backward_weight, conv3d, conv3d_backward_input,
    conv3d_backward_weight, ConvGeometry,
};
pub use median::{median_of, window_median};
pub use pad::{pad, pad_backward, PadMode, PadSpec};

use crate::error::{ensure, Result};
use crate::real::Real;
use crate::rng::SeededRng;

/// Dense tensor in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Copy> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        ensure!(!shape.is_empty(), "tensor needs at least one axis");
        ensure!(
            shape.iter().all(|&e| e >= 1),
            "tensor extents must be >= 1, got {shape:?}"
        );
        let len: usize = shape.iter().product();
        ensure!(
            len == data.len(),
            "shape {shape:?} holds {len} elements but buffer has {}",
            data.len()
        );
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn filled(shape: &[usize], value: T) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![value; len])
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self::new(shape, data)
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &e)| acc * e + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::filled(shape, T::zero())
    }

    /// Entries drawn uniformly from `[lo, hi)`.
    pub fn random(shape: &[usize], rng: &mut SeededRng, lo: f64, hi: f64) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, rng.fill_uniform(len, lo, hi))
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        self.map(|v| U::of(v.as_f64()))
    }

    /// Largest elementwise `|a - b|`, evaluated in double precision.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        ensure!(
            self.shape == other.shape,
            "shape mismatch {:?} vs {:?}",
            self.shape,
            other.shape
        );
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.as_f64().abs())
            .fold(0.0, f64::max)
    }

    /// `a * self + b * other`, elementwise.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        ensure!(self.shape == other.shape, "shape mismatch");
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    /// Inner product in double precision.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        ensure!(self.shape == other.shape, "shape mismatch");
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.as_f64() * b.as_f64())
            .sum())
    }
}

/// Convolution kernel, `C_out x C_in x k_h x k_w` or
/// `C_out x C_in x k_t x k_h x k_w`, with odd spatial extents.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    tensor: Tensor<T>,
}

impl<T: Real> Kernel<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        Self::from_tensor(Tensor::new(shape, data)?)
    }

    pub fn from_tensor(tensor: Tensor<T>) -> Result<Self> {
        ensure!(
            tensor.rank() == 4 || tensor.rank() == 5,
            "kernel must be rank 4 or 5, got shape {:?}",
            tensor.shape()
        );
        ensure!(
            tensor.shape()[2..].iter().all(|e| e % 2 == 1),
            "kernel spatial extents must be odd, got {:?}",
            &tensor.shape()[2..]
        );
        Ok(Self { tensor })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::from_tensor(Tensor::zeros(shape)?)
    }

    pub fn random(shape: &[usize], rng: &mut SeededRng, lo: f64, hi: f64) -> Result<Self> {
        Self::from_tensor(Tensor::random(shape, rng, lo, hi)?)
    }

    /// Kernel that copies input channel `c` to output channel `c` unchanged.
    pub fn identity(channels: usize, spatial: &[usize]) -> Result<Self> {
        let mut shape = vec![channels, channels];
        shape.extend_from_slice(spatial);
        let mut k = Self::zeros(&shape)?;
        let taps: usize = spatial.iter().product();
        for c in 0..channels {
            let base = (c * channels + c) * taps;
            k.tensor.data_mut()[base + taps / 2] = T::one();
        }
        Ok(k)
    }

    pub fn c_out(&self) -> usize {
        self.tensor.shape()[0]
    }

    pub fn c_in(&self) -> usize {
        self.tensor.shape()[1]
    }

    pub fn spatial(&self) -> &[usize] {
        &self.tensor.shape()[2..]
    }

    /// Number of taps per `(c_out, c_in)` slice.
    pub fn taps(&self) -> usize {
        self.spatial().iter().product()
    }

    /// Flat index of the spatial midpoint inside one slice.
    pub fn center_tap(&self) -> usize {
        self.taps() / 2
    }

    /// Taps of the `(c_out, c_in)` slice.
    pub fn slice(&self, co: usize, ci: usize) -> &[T] {
        let t = self.taps();
        let base = (co * self.c_in() + ci) * t;
        &self.tensor.data()[base..base + t]
    }

    pub fn slice_mut(&mut self, co: usize, ci: usize) -> &mut [T] {
        let t = self.taps();
        let base = (co * self.c_in() + ci) * t;
        &mut self.tensor.data_mut()[base..base + t]
    }

    pub fn shape(&self) -> &[usize] {
        self.tensor.shape()
    }

    pub fn data(&self) -> &[T] {
        self.tensor.data()
    }

    pub fn cast<U: Real>(&self) -> Kernel<U> {
        Kernel {
            tensor: self.tensor.cast(),
        }
    }

    pub fn as_tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.tensor
    }
}

use crate::error::{ensure, Result};
use crate::real::Real;
use crate::rng::SeededRng;

/// Per-`(c_out, c_in)` pair weights, plus an optional center weight per
/// slice for the intensity term of mixed operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights<T> {
    c_out: usize,
    c_in: usize,
    m: usize,
    pairs: Vec<T>,
    center: Option<Vec<T>>,
}

impl<T: Real> KernelWeights<T> {
    pub fn new(
        c_out: usize,
        c_in: usize,
        m: usize,
        pairs: Vec<T>,
        center: Option<Vec<T>>,
    ) -> Result<Self> {
        ensure!(
            c_out >= 1 && c_in >= 1 && m >= 1,
            "weight extents must be positive"
        );
        ensure!(
            pairs.len() == c_out * c_in * m,
            "expected {} pair weights, got {}",
            c_out * c_in * m,
            pairs.len()
        );
        if let Some(c) = &center {
            ensure!(
                c.len() == c_out * c_in,
                "expected {} center weights, got {}",
                c_out * c_in,
                c.len()
            );
        }
        Ok(Self {
            c_out,
            c_in,
            m,
            pairs,
            center,
        })
    }

    /// Weights drawn uniformly from `[-scale, scale)`.
    pub fn random(
        c_out: usize,
        c_in: usize,
        m: usize,
        with_center: bool,
        scale: f64,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let pairs = rng.fill_uniform(c_out * c_in * m, -scale, scale);
        let center = with_center.then(|| rng.fill_uniform(c_out * c_in, -scale, scale));
        Self::new(c_out, c_in, m, pairs, center)
    }

    pub fn zeros(c_out: usize, c_in: usize, m: usize, with_center: bool) -> Result<Self> {
        Self::new(
            c_out,
            c_in,
            m,
            vec![T::zero(); c_out * c_in * m],
            with_center.then(|| vec![T::zero(); c_out * c_in]),
        )
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    /// Weights per `(c_out, c_in)` slice.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pair_weights(&self, co: usize, ci: usize) -> &[T] {
        &self.pairs[(co * self.c_in + ci) * self.m..][..self.m]
    }

    /// Center weight of a slice, zero when the weights carry none.
    pub fn center_weight(&self, co: usize, ci: usize) -> T {
        self.center
            .as_ref()
            .map_or(T::zero(), |c| c[co * self.c_in + ci])
    }

    pub fn has_center(&self) -> bool {
        self.center.is_some()
    }

    pub fn pairs_flat(&self) -> &[T] {
        &self.pairs
    }

    pub fn pairs_flat_mut(&mut self) -> &mut [T] {
        &mut self.pairs
    }

    pub fn center_flat(&self) -> Option<&[T]> {
        self.center.as_deref()
    }

    pub fn center_flat_mut(&mut self) -> Option<&mut [T]> {
        self.center.as_deref_mut()
    }

    /// `a * self + other`, elementwise; center weights combine when both have them.
    pub fn axpy(&self, a: T, other: &Self) -> Result<Self> {
        ensure!(
            (self.c_out, self.c_in, self.m) == (other.c_out, other.c_in, other.m),
            "weight shapes differ"
        );
        let comb = |x: &[T], y: &[T]| {
            x.iter()
                .zip(y)
                .map(|(&p, &q)| a * p + q)
                .collect::<Vec<_>>()
        };
        let center = match (&self.center, &other.center) {
            (Some(x), Some(y)) => Some(comb(x, y)),
            (None, None) => None,
            _ => {
                return Err(crate::error::invalid!(
                    "center weights present on one side only"
                ))
            }
        };
        Self::new(
            self.c_out,
            self.c_in,
            self.m,
            comb(&self.pairs, &other.pairs),
            center,
        )
    }

    pub fn cast<U: Real>(&self) -> KernelWeights<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.as_f64())).collect::<Vec<_>>();
        KernelWeights {
            c_out: self.c_out,
            c_in: self.c_in,
            m: self.m,
            pairs: conv(&self.pairs),
            center: self.center.as_deref().map(conv),
        }
    }
}

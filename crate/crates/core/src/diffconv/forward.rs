use std::fmt;
use std::str::FromStr;

use super::pairset::{PairSet, PairSetKind};
use super::weights::KernelWeights;
use crate::error::{ensure, invalid, Error, Result};
use crate::par;
use crate::real::Real;
use crate::tensor::{median_of, pad, ConvGeometry, Kernel, PadSpec, Tensor};

/// Neighbor subset of the cross central-difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossDirection {
    /// Horizontal and vertical neighbors.
    Hv,
    /// Diagonal neighbors.
    Dg,
}

impl CrossDirection {
    pub fn pair_set_kind(self) -> PairSetKind {
        match self {
            Self::Hv => PairSetKind::CrossHv,
            Self::Dg => PairSetKind::CrossDg,
        }
    }
}

impl FromStr for CrossDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hv" => Ok(Self::Hv),
            "dg" => Ok(Self::Dg),
            other => Err(invalid!("unknown cross direction {other:?}")),
        }
    }
}

impl fmt::Display for CrossDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hv => "hv",
            Self::Dg => "dg",
        })
    }
}

/// Evaluates `f(c_out, channel planes, tap offsets, base, scratch)` at every
/// output position over 2 or 3 spatial axes. `planes[ci][base + offs[tap]]`
/// is the padded input value under window tap `tap` (row-major) of channel
/// `ci`.
pub(crate) fn drive<T, F>(
    x: &Tensor<T>,
    c_out: usize,
    window: &[usize],
    pad_spec: &PadSpec,
    stride: usize,
    f: F,
) -> Result<Tensor<T>>
where
    T: Real,
    F: Fn(usize, &[&[T]], &[usize], usize, &mut Vec<T>) -> T + Send + Sync,
{
    let axes = window.len();
    ensure!(
        window.iter().all(|k| k % 2 == 1),
        "window must be odd, got {window:?}"
    );
    ensure!(
        x.rank() == axes + 1 || x.rank() == axes + 2,
        "expected a rank {} or {} input, got shape {:?}",
        axes + 1,
        axes + 2,
        x.shape()
    );
    let c_in = x.shape()[x.rank() - axes - 1];
    let mut k_shape = vec![c_out, c_in];
    k_shape.extend_from_slice(window);
    let (g, batched) = ConvGeometry::plan(x.shape(), &k_shape, pad_spec, stride, axes)?;
    let xp = pad(x, pad_spec)?;
    let [tp, hp, wp] = g.padded;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let vol = tp * hp * wp;
    let offs: Vec<usize> = (0..kt * kh * kw)
        .map(|t| ((t / (kh * kw)) * hp + (t / kw) % kh) * wp + t % kw)
        .collect();
    let mut out = vec![T::zero(); g.batch * c_out * to * ho * wo];
    par::for_each_chunk(&mut out, to * ho * wo, |idx, block| {
        let (n, co) = (idx / c_out, idx % c_out);
        let planes: Vec<&[T]> = (0..c_in)
            .map(|ci| &xp.data()[(n * c_in + ci) * vol..][..vol])
            .collect();
        let mut scratch = Vec::with_capacity(offs.len());
        let mut o = 0;
        for ot in 0..to {
            for oi in 0..ho {
                for oj in 0..wo {
                    let base = ((ot * hp + oi) * wp + oj) * stride;
                    block[o] = f(co, &planes, &offs, base, &mut scratch);
                    o += 1;
                }
            }
        }
    });
    let mut shape = Vec::with_capacity(axes + 2);
    if batched {
        shape.push(g.batch);
    }
    shape.push(c_out);
    shape.extend_from_slice(&g.output[3 - axes..]);
    Tensor::new(&shape, out)
}

fn check_weights<T: Real>(x: &Tensor<T>, w: &KernelWeights<T>, m: usize) -> Result<()> {
    ensure!(
        x.rank() == 3 || x.rank() == 4,
        "expected C x H x W or N x C x H x W input"
    );
    let c_in = x.shape()[x.rank() - 3];
    ensure!(
        w.c_in() == c_in,
        "weights expect {} input channels, input has {c_in}",
        w.c_in()
    );
    ensure!(w.m() == m, "expected {m} weights per slice, got {}", w.m());
    Ok(())
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    ensure!(
        (0.0..=1.0).contains(&theta),
        "theta must lie in [0, 1], got {theta}"
    );
    Ok(())
}

/// `y = Σ_{(a, b) ∈ pairs} w_i · (x_a - x_b)`, summed over input channels.
pub fn pdc_forward<T: Real>(
    x: &Tensor<T>,
    ps: &PairSet,
    w: &KernelWeights<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    check_weights(x, w, ps.len())?;
    let taps = ps.taps();
    drive(
        x,
        w.c_out(),
        &[ps.window(); 2],
        pad,
        stride,
        |co, planes, offs, base, _| pair_sum(co, planes, offs, base, &taps, w),
    )
}

#[inline]
fn pair_sum<T: Real>(
    co: usize,
    planes: &[&[T]],
    offs: &[usize],
    base: usize,
    taps: &[(usize, usize)],
    w: &KernelWeights<T>,
) -> T {
    let mut acc = T::zero();
    for (ci, p) in planes.iter().enumerate() {
        let ws = w.pair_weights(co, ci);
        for (&wi, &(a, b)) in ws.iter().zip(taps) {
            acc += wi * (p[base + offs[a]] - p[base + offs[b]]);
        }
    }
    acc
}

/// Central difference convolution: [`pdc_forward`] over the central pairs.
pub fn cdc_forward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    pdc_forward(x, &PairSet::build(PairSetKind::Central)?, w, pad, stride)
}

/// Dense kernel of the intensity term `Σ w_i x_{a_i} + w_c x_c`.
pub fn dense_intensity_kernel<T: Real>(ps: &PairSet, w: &KernelWeights<T>) -> Result<Kernel<T>> {
    ensure!(
        w.m() == ps.len(),
        "expected {} weights per slice, got {}",
        ps.len(),
        w.m()
    );
    let k = ps.window();
    let mut kernel = Kernel::zeros(&[w.c_out(), w.c_in(), k, k])?;
    let taps = ps.taps();
    let center = ps.tap((0, 0));
    for co in 0..w.c_out() {
        for ci in 0..w.c_in() {
            let wc = w.center_weight(co, ci);
            let ws = w.pair_weights(co, ci).to_vec();
            let slice = kernel.slice_mut(co, ci);
            for (&wi, &(a, _)) in ws.iter().zip(&taps) {
                slice[a] += wi;
            }
            slice[center] += wc;
        }
    }
    Ok(kernel)
}

/// `y = θ · Σ w_i (x_{a_i} - x_{b_i}) + (1 - θ) · (Σ w_i x_{a_i} + w_c x_c)`.
///
/// The intensity term is accumulated tap by tap in the same order as
/// [`crate::tensor::conv2d`], so `θ = 0` reproduces the dense convolution
/// exactly and `θ = 1` reproduces [`pdc_forward`] exactly.
pub fn mixed_forward<T: Real>(
    x: &Tensor<T>,
    ps: &PairSet,
    w: &KernelWeights<T>,
    theta: f64,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    check_theta(theta)?;
    check_weights(x, w, ps.len())?;
    let taps = ps.taps();
    let dense = dense_intensity_kernel(ps, w)?;
    let (th, one_minus) = (T::of(theta), T::of(1.0 - theta));
    drive(
        x,
        w.c_out(),
        &[ps.window(); 2],
        pad,
        stride,
        |co, planes, offs, base, _| {
            let intensity = || {
                let mut acc = T::zero();
                for (ci, p) in planes.iter().enumerate() {
                    for (tap, &wv) in dense.slice(co, ci).iter().enumerate() {
                        if wv != T::zero() {
                            acc += wv * p[base + offs[tap]];
                        }
                    }
                }
                acc
            };
            if theta == 1.0 {
                pair_sum(co, planes, offs, base, &taps, w)
            } else if theta == 0.0 {
                intensity()
            } else {
                th * pair_sum(co, planes, offs, base, &taps, w) + one_minus * intensity()
            }
        },
    )
}

/// Generalized central difference convolution: neighbor weights in ring
/// order (E, NE, N, NW, W, SW, S, SE) plus a center weight.
pub fn gcdc_forward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    theta: f64,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    mixed_forward(
        x,
        &PairSet::build(PairSetKind::Central)?,
        w,
        theta,
        pad,
        stride,
    )
}

/// Cross central difference convolution on the four neighbors of `direction`.
pub fn ccdc_forward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    theta: f64,
    direction: CrossDirection,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    mixed_forward(
        x,
        &PairSet::build(direction.pair_set_kind())?,
        w,
        theta,
        pad,
        stride,
    )
}

/// `y = Σ_i w_i (x_i - x_m)` over all `window²` taps (row-major), where
/// `x_m` is the median of the window in the same channel.
pub fn mediconv_forward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    window: usize,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    ensure!(window % 2 == 1, "median window must be odd, got {window}");
    check_weights(x, w, window * window)?;
    drive(
        x,
        w.c_out(),
        &[window; 2],
        pad,
        stride,
        |co, planes, offs, base, scratch| {
            let mut acc = T::zero();
            for (ci, p) in planes.iter().enumerate() {
                scratch.clear();
                scratch.extend(offs.iter().map(|&o| p[base + o]));
                let xm = median_of(scratch);
                for (&wi, &o) in w.pair_weights(co, ci).iter().zip(offs) {
                    acc += wi * (p[base + o] - xm);
                }
            }
            acc
        },
    )
}

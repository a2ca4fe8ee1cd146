//! Direct convolution (cross-correlation, as in CNN frameworks) over one
//! to three spatial axes, plus its adjoints. Two-dimensional convolution is
//! run by the same engine with a unit temporal axis.
//!
//! The forward loop accumulates each output element over `(c_in, k_t, k_h,
//! k_w)` in that order, one row at a time; the difference operators rely on
//! this order to reproduce dense results bit for bit.

use super::{pad, pad_backward, Kernel, PadSpec, Tensor};
use crate::error::{ensure, Result};
use crate::par;
use crate::real::Real;

/// Resolved sizes of one convolution call. Spatial triples are `(t, h, w)`;
/// 2D calls use `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub input: [usize; 3],
    pub padded: [usize; 3],
    pub kernel: [usize; 3],
    pub stride: usize,
    pub output: [usize; 3],
}

impl ConvGeometry {
    /// Plans a convolution of `x_shape` (`[N,] C, spatial..`) with a kernel
    /// of `k_shape` (`C_out, C_in, spatial..`) over `axes` spatial axes.
    pub fn plan(
        x_shape: &[usize],
        k_shape: &[usize],
        pad: &PadSpec,
        stride: usize,
        axes: usize,
    ) -> Result<(Self, bool)> {
        ensure!(stride >= 1, "stride must be positive");
        ensure!(
            x_shape.len() == axes + 1 || x_shape.len() == axes + 2,
            "expected a rank {} or {} input, got shape {x_shape:?}",
            axes + 1,
            axes + 2
        );
        ensure!(
            k_shape.len() == axes + 2,
            "expected a rank {} kernel, got shape {k_shape:?}",
            axes + 2
        );
        ensure!(
            pad.amounts.len() == axes,
            "padding must name {axes} spatial axes, got {:?}",
            pad.amounts
        );
        let batched = x_shape.len() == axes + 2;
        let batch = if batched { x_shape[0] } else { 1 };
        let c_in = x_shape[x_shape.len() - axes - 1];
        ensure!(
            k_shape[1] == c_in,
            "kernel expects {} input channels, input has {c_in}",
            k_shape[1]
        );
        let lift = |s: &[usize]| {
            let mut out = [1usize; 3];
            out[3 - axes..].copy_from_slice(s);
            out
        };
        let input = lift(&x_shape[x_shape.len() - axes..]);
        let kernel = lift(&k_shape[2..]);
        let amounts = lift(&pad.amounts);
        let mut padded = [0; 3];
        let mut output = [0; 3];
        for ax in 0..3 {
            let a = if ax < 3 - axes { 0 } else { amounts[ax] };
            padded[ax] = input[ax] + 2 * a;
            ensure!(
                padded[ax] >= kernel[ax],
                "padded extent {} smaller than kernel extent {}",
                padded[ax],
                kernel[ax]
            );
            output[ax] = (padded[ax] - kernel[ax]) / stride + 1;
        }
        Ok((
            Self {
                batch,
                c_in,
                c_out: k_shape[0],
                input,
                padded,
                kernel,
                stride,
                output,
            },
            batched,
        ))
    }

    fn taps(&self) -> usize {
        self.kernel.iter().product()
    }

    fn out_volume(&self) -> usize {
        self.output.iter().product()
    }

    fn padded_volume(&self) -> usize {
        self.padded.iter().product()
    }

    fn output_shape(&self, batched: bool, axes: usize) -> Vec<usize> {
        let mut s = Vec::with_capacity(axes + 2);
        if batched {
            s.push(self.batch);
        }
        s.push(self.c_out);
        s.extend_from_slice(&self.output[3 - axes..]);
        s
    }
}

#[inline]
fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn forward_core<T: Real>(xp: &[T], k: &[T], g: &ConvGeometry) -> Vec<T> {
    let [_, hp, wp] = g.padded;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let s = g.stride;
    let taps = g.taps();
    let vol_in = g.padded_volume();
    let mut out = vec![T::zero(); g.batch * g.c_out * g.out_volume()];
    par::for_each_chunk(&mut out, g.out_volume(), |idx, block| {
        let (n, co) = (idx / g.c_out, idx % g.c_out);
        for ot in 0..to {
            for oi in 0..ho {
                let row = &mut block[(ot * ho + oi) * wo..][..wo];
                for ci in 0..g.c_in {
                    let ks = &k[(co * g.c_in + ci) * taps..][..taps];
                    let xbase = (n * g.c_in + ci) * vol_in;
                    for dt in 0..kt {
                        for u in 0..kh {
                            let xrow = &xp[xbase + ((ot * s + dt) * hp + oi * s + u) * wp..][..wp];
                            for v in 0..kw {
                                let w = ks[(dt * kh + u) * kw + v];
                                if w == T::zero() {
                                    continue;
                                }
                                if s == 1 {
                                    axpy(row, w, &xrow[v..v + wo]);
                                } else {
                                    for (j, y) in row.iter_mut().enumerate() {
                                        *y += w * xrow[j * s + v];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    out
}

fn backward_input_core<T: Real>(up: &[T], k: &[T], g: &ConvGeometry) -> Vec<T> {
    let [_, hp, wp] = g.padded;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let s = g.stride;
    let taps = g.taps();
    let vol_out = g.out_volume();
    let mut gxp = vec![T::zero(); g.batch * g.c_in * g.padded_volume()];
    par::for_each_chunk(&mut gxp, g.padded_volume(), |idx, block| {
        let (n, ci) = (idx / g.c_in, idx % g.c_in);
        for co in 0..g.c_out {
            let ks = &k[(co * g.c_in + ci) * taps..][..taps];
            let ubase = (n * g.c_out + co) * vol_out;
            for ot in 0..to {
                for oi in 0..ho {
                    let urow = &up[ubase + (ot * ho + oi) * wo..][..wo];
                    for dt in 0..kt {
                        for u in 0..kh {
                            let xrow = &mut block[((ot * s + dt) * hp + oi * s + u) * wp..][..wp];
                            for v in 0..kw {
                                let w = ks[(dt * kh + u) * kw + v];
                                if w == T::zero() {
                                    continue;
                                }
                                if s == 1 {
                                    axpy(&mut xrow[v..v + wo], w, urow);
                                } else {
                                    for (j, &uj) in urow.iter().enumerate() {
                                        xrow[j * s + v] += w * uj;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    gxp
}

fn backward_weight_core<T: Real>(xp: &[T], up: &[T], g: &ConvGeometry) -> Vec<T> {
    let [_, hp, wp] = g.padded;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let s = g.stride;
    let taps = g.taps();
    let vol_in = g.padded_volume();
    let vol_out = g.out_volume();
    let mut gk = vec![T::zero(); g.c_out * g.c_in * taps];
    par::for_each_chunk(&mut gk, g.c_in * taps, |co, block| {
        for ci in 0..g.c_in {
            for dt in 0..kt {
                for u in 0..kh {
                    for v in 0..kw {
                        let mut acc = T::zero();
                        for n in 0..g.batch {
                            let xbase = (n * g.c_in + ci) * vol_in;
                            let ubase = (n * g.c_out + co) * vol_out;
                            for ot in 0..to {
                                for oi in 0..ho {
                                    let urow = &up[ubase + (ot * ho + oi) * wo..][..wo];
                                    let xrow =
                                        &xp[xbase + ((ot * s + dt) * hp + oi * s + u) * wp..][..wp];
                                    for (j, &uj) in urow.iter().enumerate() {
                                        acc += uj * xrow[j * s + v];
                                    }
                                }
                            }
                        }
                        block[ci * taps + (dt * kh + u) * kw + v] = acc;
                    }
                }
            }
        }
    });
    gk
}

fn forward<T: Real>(
    x: &Tensor<T>,
    k: &Kernel<T>,
    pad_spec: &PadSpec,
    stride: usize,
    axes: usize,
) -> Result<Tensor<T>> {
    let (g, batched) = ConvGeometry::plan(x.shape(), k.shape(), pad_spec, stride, axes)?;
    let xp = pad(x, pad_spec)?;
    let out = forward_core(xp.data(), k.data(), &g);
    Tensor::new(&g.output_shape(batched, axes), out)
}

fn backward_input<T: Real>(
    upstream: &Tensor<T>,
    k: &Kernel<T>,
    pad_spec: &PadSpec,
    stride: usize,
    input_shape: &[usize],
    axes: usize,
) -> Result<Tensor<T>> {
    let (g, batched) = ConvGeometry::plan(input_shape, k.shape(), pad_spec, stride, axes)?;
    ensure!(
        upstream.shape() == g.output_shape(batched, axes).as_slice(),
        "upstream shape {:?} does not match output shape {:?}",
        upstream.shape(),
        g.output_shape(batched, axes)
    );
    let gxp = backward_input_core(upstream.data(), k.data(), &g);
    let mut padded_shape = input_shape.to_vec();
    let rank = padded_shape.len();
    for ax in 0..axes {
        padded_shape[rank - axes + ax] = g.padded[3 - axes + ax];
    }
    pad_backward(&Tensor::new(&padded_shape, gxp)?, pad_spec, input_shape)
}

fn backward_weight<T: Real>(
    x: &Tensor<T>,
    upstream: &Tensor<T>,
    kernel_shape: &[usize],
    pad_spec: &PadSpec,
    stride: usize,
    axes: usize,
) -> Result<Kernel<T>> {
    let (g, batched) = ConvGeometry::plan(x.shape(), kernel_shape, pad_spec, stride, axes)?;
    ensure!(
        upstream.shape() == g.output_shape(batched, axes).as_slice(),
        "upstream shape {:?} does not match output shape {:?}",
        upstream.shape(),
        g.output_shape(batched, axes)
    );
    let xp = pad(x, pad_spec)?;
    Kernel::new(
        kernel_shape,
        backward_weight_core(xp.data(), upstream.data(), &g),
    )
}

/// `y[c_out, i, j] = Σ k[c_out, c_in, u, v] · x_pad[c_in, i·s + u, j·s + v]`
/// on `C x H x W` or `N x C x H x W` input.
pub fn conv2d<T: Real>(
    x: &Tensor<T>,
    k: &Kernel<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    forward(x, k, pad, stride, 2)
}

/// Three-dimensional analogue of [`conv2d`] on `C x T x H x W` or
/// `N x C x T x H x W` input.
pub fn conv3d<T: Real>(
    x: &Tensor<T>,
    k: &Kernel<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    forward(x, k, pad, stride, 3)
}

/// Gradient of `<conv2d(x, k), upstream>` with respect to `x`.
pub fn conv2d_backward_input<T: Real>(
    upstream: &Tensor<T>,
    k: &Kernel<T>,
    pad: &PadSpec,
    stride: usize,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    backward_input(upstream, k, pad, stride, input_shape, 2)
}

/// Gradient of `<conv2d(x, k), upstream>` with respect to `k`.
pub fn conv2d_backward_weight<T: Real>(
    x: &Tensor<T>,
    upstream: &Tensor<T>,
    kernel_shape: &[usize],
    pad: &PadSpec,
    stride: usize,
) -> Result<Kernel<T>> {
    backward_weight(x, upstream, kernel_shape, pad, stride, 2)
}

pub fn conv3d_backward_input<T: Real>(
    upstream: &Tensor<T>,
    k: &Kernel<T>,
    pad: &PadSpec,
    stride: usize,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    backward_input(upstream, k, pad, stride, input_shape, 3)
}

pub fn conv3d_backward_weight<T: Real>(
    x: &Tensor<T>,
    upstream: &Tensor<T>,
    kernel_shape: &[usize],
    pad: &PadSpec,
    stride: usize,
) -> Result<Kernel<T>> {
    backward_weight(x, upstream, kernel_shape, pad, stride, 3)
}

use crate::diffconv::{
    dense_intensity_kernel, BinaryKernels, CrossDirection, KernelWeights, Nonlinearity, PairSet,
    PairSetKind,
};
use crate::diffconv3d::{check_cdc3d, Cdc3dKind, TAPS3};
use crate::error::{ensure, Result};
use crate::real::Real;
use crate::tensor::{
    conv2d, conv2d_backward_input, conv2d_backward_weight, pad, pad_backward, ConvGeometry, Kernel,
    PadSpec, Tensor,
};

/// Gradients of `<forward(x, params), upstream>`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBundle<T> {
    pub grad_input: Tensor<T>,
    /// Same layout as the operator's weights.
    pub grad_weights: Vec<T>,
    pub grad_center_weight: Option<Vec<T>>,
    pub grad_theta: Option<T>,
}

/// Walks every output position in order, handing `f` the padded input and
/// padded input gradient of the current sample. The padded gradient is
/// folded back onto the input shape at the end.
fn walk_positions<T, F>(
    x: &Tensor<T>,
    c_out: usize,
    window: &[usize],
    pad_spec: &PadSpec,
    stride: usize,
    upstream: &Tensor<T>,
    mut f: F,
) -> Result<Tensor<T>>
where
    T: Real,
    F: FnMut(usize, &[T], &mut [T], usize, &[usize], usize, T),
{
    let axes = window.len();
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
    let mut out_shape = Vec::new();
    if batched {
        out_shape.push(g.batch);
    }
    out_shape.push(c_out);
    out_shape.extend_from_slice(&g.output[3 - axes..]);
    ensure!(
        upstream.shape() == out_shape.as_slice(),
        "upstream shape {:?} does not match output shape {out_shape:?}",
        upstream.shape()
    );
    let xp = pad(x, pad_spec)?;
    let [tp, hp, wp] = g.padded;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let vol = tp * hp * wp;
    let offs: Vec<usize> = (0..kt * kh * kw)
        .map(|t| ((t / (kh * kw)) * hp + (t / kw) % kh) * wp + t % kw)
        .collect();
    let mut gxp = vec![T::zero(); xp.len()];
    let up = upstream.data();
    for n in 0..g.batch {
        let xs = &xp.data()[n * c_in * vol..][..c_in * vol];
        let gs = &mut gxp[n * c_in * vol..][..c_in * vol];
        for co in 0..c_out {
            let mut o = (n * c_out + co) * to * ho * wo;
            for ot in 0..to {
                for oi in 0..ho {
                    for oj in 0..wo {
                        let base = ((ot * hp + oi) * wp + oj) * stride;
                        f(co, xs, gs, vol, &offs, base, up[o]);
                        o += 1;
                    }
                }
            }
        }
    }
    pad_backward(&Tensor::new(xp.shape(), gxp)?, pad_spec, x.shape())
}

/// Adjoint of [`crate::diffconv::pdc_forward`]: `∂/∂w_i = Σ u · (x_a - x_b)`,
/// and each pair scatters `+w_i · u` to its minuend and `-w_i · u` to its
/// subtrahend.
pub fn pdc_backward<T: Real>(
    x: &Tensor<T>,
    ps: &PairSet,
    w: &KernelWeights<T>,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<GradBundle<T>> {
    ensure!(
        w.m() == ps.len(),
        "expected {} weights per slice, got {}",
        ps.len(),
        w.m()
    );
    let taps = ps.taps();
    let (c_in, m) = (w.c_in(), w.m());
    let mut gw = vec![T::zero(); w.pairs_flat().len()];
    let grad_input = walk_positions(
        x,
        w.c_out(),
        &[ps.window(); 2],
        pad,
        stride,
        upstream,
        |co, xs, gs, vol, offs, base, u| {
            for ci in 0..c_in {
                let (xc, gc) = (&xs[ci * vol..], &mut gs[ci * vol..]);
                let ws = w.pair_weights(co, ci);
                let gws = &mut gw[(co * c_in + ci) * m..][..m];
                for (i, &(a, b)) in taps.iter().enumerate() {
                    let (ia, ib) = (base + offs[a], base + offs[b]);
                    gws[i] += u * (xc[ia] - xc[ib]);
                    gc[ia] += u * ws[i];
                    gc[ib] -= u * ws[i];
                }
            }
        },
    )?;
    Ok(GradBundle {
        grad_input,
        grad_weights: gw,
        grad_center_weight: None,
        grad_theta: None,
    })
}

/// Adjoint of [`crate::diffconv::mixed_forward`], including `∂/∂θ = Σ u · (G - V)`.
pub fn mixed_backward<T: Real>(
    x: &Tensor<T>,
    ps: &PairSet,
    w: &KernelWeights<T>,
    theta: f64,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<GradBundle<T>> {
    ensure!(
        (0.0..=1.0).contains(&theta),
        "theta must lie in [0, 1], got {theta}"
    );
    let dense = dense_intensity_kernel(ps, w)?;
    let taps = ps.taps();
    let center = ps.tap((0, 0));
    let (c_in, m) = (w.c_in(), w.m());
    let (th, one_minus) = (T::of(theta), T::of(1.0 - theta));
    let mut gw = vec![T::zero(); w.pairs_flat().len()];
    let mut gc_w = vec![T::zero(); w.c_out() * c_in];
    let mut g_theta = T::zero();
    let grad_input = walk_positions(
        x,
        w.c_out(),
        &[ps.window(); 2],
        pad,
        stride,
        upstream,
        |co, xs, gs, vol, offs, base, u| {
            for ci in 0..c_in {
                let (xc, gc) = (&xs[ci * vol..], &mut gs[ci * vol..]);
                let ws = w.pair_weights(co, ci);
                let gws = &mut gw[(co * c_in + ci) * m..][..m];
                let mut g_term = T::zero();
                for (i, &(a, b)) in taps.iter().enumerate() {
                    let (ia, ib) = (base + offs[a], base + offs[b]);
                    let d = xc[ia] - xc[ib];
                    g_term += ws[i] * d;
                    gws[i] += u * (th * d + one_minus * xc[ia]);
                    gc[ia] += u * th * ws[i];
                    gc[ib] -= u * th * ws[i];
                }
                let mut v_term = T::zero();
                for (t, &kv) in dense.slice(co, ci).iter().enumerate() {
                    let it = base + offs[t];
                    v_term += kv * xc[it];
                    gc[it] += u * one_minus * kv;
                }
                gc_w[co * c_in + ci] += u * one_minus * xc[base + offs[center]];
                g_theta += u * (g_term - v_term);
            }
        },
    )?;
    Ok(GradBundle {
        grad_input,
        grad_weights: gw,
        grad_center_weight: Some(gc_w),
        grad_theta: Some(g_theta),
    })
}

pub fn gcdc_backward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    theta: f64,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<GradBundle<T>> {
    mixed_backward(
        x,
        &PairSet::build(PairSetKind::Central)?,
        w,
        theta,
        upstream,
        pad,
        stride,
    )
}

pub fn ccdc_backward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    theta: f64,
    direction: CrossDirection,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<GradBundle<T>> {
    let ps = PairSet::build(direction.pair_set_kind())?;
    mixed_backward(x, &ps, w, theta, upstream, pad, stride)
}

/// Gradient of MeDiConv plus the number of `(sample, channel, position)`
/// windows whose median value is shared by several taps. In those windows
/// the median gradient is routed to the lowest-index tied tap, which is a
/// subgradient rather than a gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianGrad<T> {
    pub bundle: GradBundle<T>,
    pub tied_windows: usize,
}

/// Adjoint of [`crate::diffconv::mediconv_forward`]: every tap receives
/// `+w_i · u` and the argmedian tap receives `-Σ w_i · u`.
pub fn mediconv_backward<T: Real>(
    x: &Tensor<T>,
    w: &KernelWeights<T>,
    window: usize,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<MedianGrad<T>> {
    ensure!(window % 2 == 1, "median window must be odd, got {window}");
    ensure!(
        w.m() == window * window,
        "expected {} weights per slice, got {}",
        window * window,
        w.m()
    );
    let (c_in, m) = (w.c_in(), w.m());
    let mut gw = vec![T::zero(); w.pairs_flat().len()];
    let mut tied = 0usize;
    let mut vals = Vec::with_capacity(m);
    let grad_input = walk_positions(
        x,
        w.c_out(),
        &[window; 2],
        pad,
        stride,
        upstream,
        |co, xs, gs, vol, offs, base, u| {
            for ci in 0..c_in {
                let (xc, gc) = (&xs[ci * vol..], &mut gs[ci * vol..]);
                vals.clear();
                vals.extend(offs.iter().map(|&o| xc[base + o]));
                let mut sorted = vals.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                let xm = sorted[m / 2];
                let arg = vals
                    .iter()
                    .position(|&v| v == xm)
                    .expect("median is a window value");
                if co == 0 && vals.iter().filter(|&&v| v == xm).count() > 1 {
                    tied += 1;
                }
                let ws = w.pair_weights(co, ci);
                let gws = &mut gw[(co * c_in + ci) * m..][..m];
                let mut wsum = T::zero();
                for (i, &o) in offs.iter().enumerate() {
                    gws[i] += u * (vals[i] - xm);
                    gc[base + o] += u * ws[i];
                    wsum += ws[i];
                }
                gc[base + offs[arg]] -= u * wsum;
            }
        },
    )?;
    Ok(MedianGrad {
        bundle: GradBundle {
            grad_input,
            grad_weights: gw,
            grad_center_weight: None,
            grad_theta: None,
        },
        tied_windows: tied,
    })
}

/// Adjoint of [`crate::diffconv::lbc_forward`]. The binary kernels are
/// fixed, so `grad_weights` holds the `c_out x m` pooling gradient.
pub fn lbc_backward<T: Real>(
    x: &Tensor<T>,
    kernels: &BinaryKernels<T>,
    nonlinearity: Nonlinearity,
    pooling: &Tensor<T>,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<GradBundle<T>> {
    let m = kernels.m();
    ensure!(
        pooling.rank() == 2 && pooling.shape()[1] == m,
        "pooling weights must be c_out x {m}, got {:?}",
        pooling.shape()
    );
    let c_out = pooling.shape()[0];
    let pool = Kernel::new(&[c_out, m, 1, 1], pooling.data().to_vec())?;
    let z = conv2d(x, kernels.kernel(), pad, stride)?;
    let a = z.map(|v| nonlinearity.apply(v));
    let none = PadSpec::none(2);
    let grad_pool = conv2d_backward_weight(&a, upstream, &[c_out, m, 1, 1], &none, 1)?;
    let grad_a = conv2d_backward_input(upstream, &pool, &none, 1, a.shape())?;
    let grad_z = Tensor::new(
        z.shape(),
        grad_a
            .data()
            .iter()
            .zip(z.data())
            .map(|(&g, &zv)| g * nonlinearity.derivative(zv))
            .collect(),
    )?;
    let grad_input = conv2d_backward_input(&grad_z, kernels.kernel(), pad, stride, x.shape())?;
    Ok(GradBundle {
        grad_input,
        grad_weights: grad_pool.into_tensor().into_data(),
        grad_center_weight: None,
        grad_theta: None,
    })
}

/// Adjoint of [`crate::diffconv3d::cdc3d_forward`]. `grad_weights` has the
/// layout of the `c_out x c_in x 3 x 3 x 3` kernel.
pub fn cdc3d_backward<T: Real>(
    x: &Tensor<T>,
    w: &Kernel<T>,
    theta: f64,
    kind: Cdc3dKind,
    upstream: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<GradBundle<T>> {
    check_cdc3d(x, w, theta, kind)?;
    let grad_taps = kind.gradient_taps();
    let reference: Vec<(usize, T)> = kind
        .reference()
        .iter()
        .map(|&(t, c)| (t, T::of(c)))
        .collect();
    let (th, one_minus) = (T::of(theta), T::of(1.0 - theta));
    let c_in = w.c_in();
    let mut gw = vec![T::zero(); w.data().len()];
    let mut g_theta = T::zero();
    let grad_input = walk_positions(
        x,
        w.c_out(),
        &[3, 3, 3],
        pad,
        stride,
        upstream,
        |co, xs, gs, vol, offs, base, u| {
            for ci in 0..c_in {
                let (xc, gc) = (&xs[ci * vol..], &mut gs[ci * vol..]);
                let ks = w.slice(co, ci);
                let gks = &mut gw[(co * c_in + ci) * TAPS3..][..TAPS3];
                let xr = reference
                    .iter()
                    .fold(T::zero(), |s, &(t, c)| s + c * xc[base + offs[t]]);
                let (mut g_term, mut mass) = (T::zero(), T::zero());
                for &t in &grad_taps {
                    let it = base + offs[t];
                    let d = xc[it] - xr;
                    g_term += ks[t] * d;
                    mass += ks[t];
                    gks[t] += u * th * d;
                    gc[it] += u * th * ks[t];
                }
                for &(t, c) in &reference {
                    gc[base + offs[t]] -= u * th * c * mass;
                }
                let mut v_term = T::zero();
                for t in 0..TAPS3 {
                    let it = base + offs[t];
                    v_term += ks[t] * xc[it];
                    gks[t] += u * one_minus * xc[it];
                    gc[it] += u * one_minus * ks[t];
                }
                g_theta += u * (g_term - v_term);
            }
        },
    )?;
    Ok(GradBundle {
        grad_input,
        grad_weights: gw,
        grad_center_weight: None,
        grad_theta: Some(g_theta),
    })
}

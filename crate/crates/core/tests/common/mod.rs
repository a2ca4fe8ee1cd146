//! Independent reference implementations used as test oracles. Nothing
//! here calls into the crate's convolution or padding code.
#![allow(dead_code)]

use pixdiff_core::{SeededRng, Tensor};

pub fn rand_tensor(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = SeededRng::new(seed);
    Tensor::random(shape, &mut rng, -1.0, 1.0).unwrap()
}

/// Small integers, so sums and differences are exact in floating point.
pub fn int_tensor(shape: &[usize], seed: u64, hi: u64) -> Tensor<f64> {
    let mut rng = SeededRng::new(seed);
    Tensor::from_fn(shape, |_| rng.below(hi) as f64).unwrap()
}

/// Zero-padded read of `x[n, c, i, j]` at signed coordinates.
pub fn read2(x: &Tensor<f64>, n: usize, c: usize, i: isize, j: isize) -> f64 {
    let s = x.shape();
    let (ch, h, w) = (s[1], s[2] as isize, s[3] as isize);
    if i < 0 || j < 0 || i >= h || j >= w {
        return 0.0;
    }
    x.data()[((n * ch + c) * h as usize + i as usize) * w as usize + j as usize]
}

/// Replicate-padded read.
pub fn read2_clamped(x: &Tensor<f64>, n: usize, c: usize, i: isize, j: isize) -> f64 {
    let s = x.shape();
    let (h, w) = (s[2] as isize, s[3] as isize);
    read2(x, n, c, i.clamp(0, h - 1), j.clamp(0, w - 1))
}

pub fn read3(x: &Tensor<f64>, n: usize, c: usize, t: isize, i: isize, j: isize) -> f64 {
    let s = x.shape();
    let (ch, tt, h, w) = (s[1], s[2] as isize, s[3] as isize, s[4] as isize);
    if t < 0 || i < 0 || j < 0 || t >= tt || i >= h || j >= w {
        return 0.0;
    }
    x.data()[(((n * ch + c) * tt as usize + t as usize) * h as usize + i as usize) * w as usize
        + j as usize]
}

pub fn out_extent(input: usize, pad: usize, k: usize, stride: usize) -> usize {
    (input + 2 * pad - k) / stride + 1
}

/// Quadruple loop over `(c_in, u, v)` per output element, zero padding.
pub fn conv2d_oracle(
    x: &Tensor<f64>,
    k: &[f64],
    kshape: [usize; 4],
    pad: usize,
    stride: usize,
) -> Tensor<f64> {
    let [co_n, ci_n, kh, kw] = kshape;
    let s = x.shape();
    let (n_n, h, w) = (s[0], s[2], s[3]);
    let (ho, wo) = (
        out_extent(h, pad, kh, stride),
        out_extent(w, pad, kw, stride),
    );
    let mut out = Tensor::zeros(&[n_n, co_n, ho, wo]).unwrap();
    for n in 0..n_n {
        for co in 0..co_n {
            for i in 0..ho {
                for j in 0..wo {
                    let mut acc = 0.0;
                    for ci in 0..ci_n {
                        for u in 0..kh {
                            for v in 0..kw {
                                let xi = (i * stride + u) as isize - pad as isize;
                                let xj = (j * stride + v) as isize - pad as isize;
                                acc += k[((co * ci_n + ci) * kh + u) * kw + v]
                                    * read2(x, n, ci, xi, xj);
                            }
                        }
                    }
                    out.set(&[n, co, i, j], acc);
                }
            }
        }
    }
    out
}

pub fn conv3d_oracle(
    x: &Tensor<f64>,
    k: &[f64],
    kshape: [usize; 5],
    pad: usize,
    stride: usize,
) -> Tensor<f64> {
    let [co_n, ci_n, kt, kh, kw] = kshape;
    let s = x.shape();
    let (n_n, t_n, h, w) = (s[0], s[2], s[3], s[4]);
    let (to, ho, wo) = (
        out_extent(t_n, pad, kt, stride),
        out_extent(h, pad, kh, stride),
        out_extent(w, pad, kw, stride),
    );
    let mut out = Tensor::zeros(&[n_n, co_n, to, ho, wo]).unwrap();
    for n in 0..n_n {
        for co in 0..co_n {
            for ot in 0..to {
                for i in 0..ho {
                    for j in 0..wo {
                        let mut acc = 0.0;
                        for ci in 0..ci_n {
                            for dt in 0..kt {
                                for u in 0..kh {
                                    for v in 0..kw {
                                        let p = |o: usize, d: usize| {
                                            (o * stride + d) as isize - pad as isize
                                        };
                                        acc += k[(((co * ci_n + ci) * kt + dt) * kh + u) * kw + v]
                                            * read3(x, n, ci, p(ot, dt), p(i, u), p(j, v));
                                    }
                                }
                            }
                        }
                        out.set(&[n, co, ot, i, j], acc);
                    }
                }
            }
        }
    }
    out
}

/// Median by full sort of each window, zero padding.
pub fn median_oracle(x: &Tensor<f64>, k: usize, pad: usize) -> Tensor<f64> {
    let s = x.shape();
    let (n_n, c_n, h, w) = (s[0], s[1], s[2], s[3]);
    let (ho, wo) = (out_extent(h, pad, k, 1), out_extent(w, pad, k, 1));
    let mut out = Tensor::zeros(&[n_n, c_n, ho, wo]).unwrap();
    for n in 0..n_n {
        for c in 0..c_n {
            for i in 0..ho {
                for j in 0..wo {
                    let mut win = Vec::new();
                    for u in 0..k {
                        for v in 0..k {
                            win.push(read2(
                                x,
                                n,
                                c,
                                (i + u) as isize - pad as isize,
                                (j + v) as isize - pad as isize,
                            ));
                        }
                    }
                    win.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    out.set(&[n, c, i, j], win[win.len() / 2]);
                }
            }
        }
    }
    out
}

/// `(minuend, subtrahend)` offsets from the window center.
pub type PairOffsets = ((i32, i32), (i32, i32));

/// Pair-difference oracle: `Σ_ci Σ_i w[co, ci, i] (x[a_i] - x[b_i])`, with
/// an optional per-window reference replacing the subtrahend.
pub fn pair_oracle(
    x: &Tensor<f64>,
    pairs: &[PairOffsets],
    w: &[f64],
    c_out: usize,
    window: usize,
    pad: usize,
    stride: usize,
) -> Tensor<f64> {
    let s = x.shape();
    let (n_n, ci_n, h, wd) = (s[0], s[1], s[2], s[3]);
    let m = pairs.len();
    let r = (window / 2) as isize;
    let (ho, wo) = (
        out_extent(h, pad, window, stride),
        out_extent(wd, pad, window, stride),
    );
    let mut out = Tensor::zeros(&[n_n, c_out, ho, wo]).unwrap();
    for n in 0..n_n {
        for co in 0..c_out {
            for i in 0..ho {
                for j in 0..wo {
                    let ci0 = (i * stride) as isize - pad as isize + r;
                    let cj0 = (j * stride) as isize - pad as isize + r;
                    let mut acc = 0.0;
                    for ci in 0..ci_n {
                        for (p, &((ay, ax), (by, bx))) in pairs.iter().enumerate() {
                            let xa = read2(x, n, ci, ci0 + ay as isize, cj0 + ax as isize);
                            let xb = read2(x, n, ci, ci0 + by as isize, cj0 + bx as isize);
                            acc += w[(co * ci_n + ci) * m + p] * (xa - xb);
                        }
                    }
                    out.set(&[n, co, i, j], acc);
                }
            }
        }
    }
    out
}

/// The eight unit-ring offsets, anticlockwise from east, written out by hand.
pub const RING: [(i32, i32); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

pub fn max_diff(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

//! Spatio-temporal central difference convolution on `N x C x T x H x W`
//! input with a `3 x 3 x 3` support.
//!
//! Taps are numbered row-major over `(t, h, w)`; tap 13 is the center, taps
//! 4 and 22 are the spatial centers of the previous and next slices. For
//! every variant the output is `θ · G + (1 - θ) · V`, where `V` is the plain
//! 3D convolution with the full kernel (center included) and `G` is the
//! variant's gradient term:
//!
//! * `St`: `Σ_{i ≠ c} w_i (x_i - x_c)` over all 26 neighbors.
//! * `T`: the same sum restricted to the 18 taps of slices `t - 1` and `t + 1`.
//! * `Tr`: as `T`, with the reference replaced by the mean of the three
//!   slice centers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffconv::forward::{check_theta, drive};
use crate::error::{ensure, invalid, Error, Result};
use crate::real::Real;
use crate::tensor::{Kernel, PadSpec, Tensor};

pub const TAPS3: usize = 27;
pub const CENTER3: usize = 13;
const PREV_CENTER: usize = 4;
const NEXT_CENTER: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cdc3dKind {
    St,
    T,
    Tr,
}

impl Cdc3dKind {
    pub const ALL: [Self; 3] = [Self::St, Self::T, Self::Tr];

    /// Taps that enter the gradient term.
    pub fn gradient_taps(self) -> Vec<usize> {
        match self {
            Self::St => (0..TAPS3).filter(|&t| t != CENTER3).collect(),
            Self::T | Self::Tr => (0..9).chain(18..27).collect(),
        }
    }

    /// Reference of the gradient term as `(tap, coefficient)` pairs.
    pub fn reference(self) -> &'static [(usize, f64)] {
        const THIRD: f64 = 1.0 / 3.0;
        match self {
            Self::St | Self::T => &[(CENTER3, 1.0)],
            Self::Tr => &[(PREV_CENTER, THIRD), (CENTER3, THIRD), (NEXT_CENTER, THIRD)],
        }
    }

    fn min_temporal_extent(self) -> usize {
        match self {
            Self::T => 3,
            Self::St | Self::Tr => 1,
        }
    }
}

impl FromStr for Cdc3dKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "st" => Ok(Self::St),
            "t" => Ok(Self::T),
            "tr" => Ok(Self::Tr),
            other => Err(invalid!("unknown 3D-CDC kind {other:?}")),
        }
    }
}

impl fmt::Display for Cdc3dKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::St => "st",
            Self::T => "t",
            Self::Tr => "tr",
        })
    }
}

pub(crate) fn check_cdc3d<T: Real>(
    x: &Tensor<T>,
    w: &Kernel<T>,
    theta: f64,
    kind: Cdc3dKind,
) -> Result<()> {
    check_theta(theta)?;
    ensure!(
        w.spatial() == [3, 3, 3],
        "3D-CDC needs a 3x3x3 kernel, got {:?}",
        w.shape()
    );
    ensure!(
        x.rank() == 4 || x.rank() == 5,
        "expected C x T x H x W or N x C x T x H x W input"
    );
    let t = x.shape()[x.rank() - 3];
    ensure!(
        t >= kind.min_temporal_extent(),
        "{kind} variant needs a temporal extent of at least {}, got {t}",
        kind.min_temporal_extent()
    );
    Ok(())
}

/// `θ · G + (1 - θ) · conv3d(x, w)` with `w` the full `c_out x c_in x 3 x 3 x 3`
/// kernel (its center entry is the center weight).
///
/// `V` is accumulated in the same order as [`crate::tensor::conv3d`], so
/// `θ = 0` reproduces it exactly.
pub fn cdc3d_forward<T: Real>(
    x: &Tensor<T>,
    w: &Kernel<T>,
    theta: f64,
    kind: Cdc3dKind,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    check_cdc3d(x, w, theta, kind)?;
    let grad_taps = kind.gradient_taps();
    // The slice-center mean is formed as the current center plus the mean
    // offset of the other two, which is exactly the center on constant clips.
    let single_ref = kind.reference().len() == 1;
    let three = T::of(3.0);
    let (th, one_minus) = (T::of(theta), T::of(1.0 - theta));
    drive(
        x,
        w.c_out(),
        &[3, 3, 3],
        pad,
        stride,
        |co, planes, offs, base, _| {
            let gradient = || {
                let mut acc = T::zero();
                for (ci, p) in planes.iter().enumerate() {
                    let ks = w.slice(co, ci);
                    let xr = if single_ref {
                        p[base + offs[CENTER3]]
                    } else {
                        let c = p[base + offs[CENTER3]];
                        c + ((p[base + offs[PREV_CENTER]] - c) + (p[base + offs[NEXT_CENTER]] - c))
                            / three
                    };
                    for &t in &grad_taps {
                        acc += ks[t] * (p[base + offs[t]] - xr);
                    }
                }
                acc
            };
            let vanilla = || {
                let mut acc = T::zero();
                for (ci, p) in planes.iter().enumerate() {
                    for (t, &wv) in w.slice(co, ci).iter().enumerate() {
                        if wv != T::zero() {
                            acc += wv * p[base + offs[t]];
                        }
                    }
                }
                acc
            };
            if theta == 1.0 {
                gradient()
            } else if theta == 0.0 {
                vanilla()
            } else {
                th * gradient() + one_minus * vanilla()
            }
        },
    )
}

/// Dense kernel `ŵ` with `conv3d(x, ŵ) == cdc3d_forward(x, w, θ, kind)`.
///
/// Gradient taps keep their weight, other non-center taps of the current
/// slice are scaled by `1 - θ`, and `-θ · Σ_{gradient taps} w` is spread over
/// the reference taps by their coefficients.
pub fn cdc3d_reparam<T: Real>(w: &Kernel<T>, theta: f64, kind: Cdc3dKind) -> Result<Kernel<T>> {
    check_theta(theta)?;
    ensure!(
        w.spatial() == [3, 3, 3],
        "3D-CDC needs a 3x3x3 kernel, got {:?}",
        w.shape()
    );
    let (th, one_minus) = (T::of(theta), T::of(1.0 - theta));
    let grad_taps = kind.gradient_taps();
    let mut in_grad = [false; TAPS3];
    for &t in &grad_taps {
        in_grad[t] = true;
    }
    let mut out = Kernel::zeros(w.shape())?;
    for co in 0..w.c_out() {
        for ci in 0..w.c_in() {
            let ks = w.slice(co, ci);
            let mass: T = grad_taps.iter().map(|&t| ks[t]).sum();
            let dst = out.slice_mut(co, ci);
            for t in 0..TAPS3 {
                dst[t] = if in_grad[t] { ks[t] } else { one_minus * ks[t] };
            }
            for &(t, c) in kind.reference() {
                dst[t] -= th * T::of(c) * mass;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::tensor::{conv3d, PadMode};

    #[test]
    fn gradient_tap_counts() {
        assert_eq!(Cdc3dKind::St.gradient_taps().len(), 26);
        assert_eq!(Cdc3dKind::T.gradient_taps().len(), 18);
        assert_eq!(Cdc3dKind::Tr.gradient_taps(), Cdc3dKind::T.gradient_taps());
    }

    #[test]
    fn st_all_ones_center() {
        let mut data = vec![1.0f64; 27];
        data[CENTER3] = 0.0;
        let w = Kernel::new(&[1, 1, 3, 3, 3], data).unwrap();
        let r = cdc3d_reparam(&w, 1.0, Cdc3dKind::St).unwrap();
        assert_eq!(r.data()[CENTER3], -26.0);
        assert!(r
            .data()
            .iter()
            .enumerate()
            .all(|(t, &v)| t == CENTER3 || v == 1.0));
    }

    #[test]
    fn reparam_matches_forward() {
        let mut rng = SeededRng::new(5);
        let x = Tensor::<f64>::random(&[1, 2, 4, 6, 6], &mut rng, 0.0, 1.0).unwrap();
        let w = Kernel::random(&[3, 2, 3, 3, 3], &mut rng, -1.0, 1.0).unwrap();
        let pad = PadSpec::same(PadMode::Zero, &[3, 3, 3]);
        for kind in Cdc3dKind::ALL {
            for theta in [0.0, 0.3, 1.0] {
                let direct = cdc3d_forward(&x, &w, theta, kind, &pad, 1).unwrap();
                let dense = conv3d(&x, &cdc3d_reparam(&w, theta, kind).unwrap(), &pad, 1).unwrap();
                assert!(
                    direct.max_abs_diff(&dense).unwrap() < 1e-12,
                    "{kind} θ={theta}"
                );
            }
        }
    }

    #[test]
    fn argument_errors() {
        let x = Tensor::<f64>::zeros(&[1, 1, 2, 4, 4]).unwrap();
        let w = Kernel::<f64>::zeros(&[1, 1, 3, 3, 3]).unwrap();
        let pad = PadSpec::same(PadMode::Replicate, &[3, 3, 3]);
        assert!(cdc3d_forward(&x, &w, 0.5, Cdc3dKind::T, &pad, 1).is_err());
        assert!(cdc3d_forward(&x, &w, 0.5, Cdc3dKind::Tr, &pad, 1).is_ok());
        assert!(cdc3d_forward(&x, &w, 1.2, Cdc3dKind::St, &pad, 1).is_err());
        let w2 = Kernel::<f64>::zeros(&[1, 1, 1, 3, 3]).unwrap();
        assert!(cdc3d_forward(&x, &w2, 0.5, Cdc3dKind::St, &pad, 1).is_err());
    }
}

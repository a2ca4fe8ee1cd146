use super::{pad, PadSpec, Tensor};
use crate::error::{ensure, Result};
use crate::par;
use crate::real::Real;

/// Middle order statistic of an odd-length buffer (reorders `buf`).
pub fn median_of<T: Real>(buf: &mut [T]) -> T {
    debug_assert!(buf.len() % 2 == 1);
    let mid = buf.len() / 2;
    let (_, m, _) =
        buf.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("NaN in window"));
    *m
}

/// Median of every `k x k` window over the last two axes, stride 1.
pub fn window_median<T: Real>(x: &Tensor<T>, k: usize, pad_spec: &PadSpec) -> Result<Tensor<T>> {
    ensure!(k % 2 == 1, "median window must be odd, got {k}");
    ensure!(
        x.rank() >= 2,
        "window median needs a plane, got shape {:?}",
        x.shape()
    );
    ensure!(
        pad_spec.amounts.len() == 2,
        "median padding must name 2 axes"
    );
    let xp = pad(x, pad_spec)?;
    let rank = xp.rank();
    let (hp, wp) = (xp.shape()[rank - 2], xp.shape()[rank - 1]);
    ensure!(
        hp >= k && wp >= k,
        "padded plane {hp}x{wp} smaller than window {k}"
    );
    let (ho, wo) = (hp - k + 1, wp - k + 1);
    let planes: usize = xp.shape()[..rank - 2].iter().product();
    let mut out = vec![T::zero(); planes * ho * wo];
    par::for_each_chunk(&mut out, ho * wo, |p, block| {
        let src = &xp.data()[p * hp * wp..(p + 1) * hp * wp];
        let mut buf = Vec::with_capacity(k * k);
        for i in 0..ho {
            for j in 0..wo {
                buf.clear();
                for u in 0..k {
                    buf.extend_from_slice(&src[(i + u) * wp + j..][..k]);
                }
                block[i * wo + j] = median_of(&mut buf);
            }
        }
    });
    let mut shape = xp.shape().to_vec();
    shape[rank - 2] = ho;
    shape[rank - 1] = wo;
    Tensor::new(&shape, out)
}

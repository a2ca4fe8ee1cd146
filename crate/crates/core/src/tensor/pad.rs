use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{ensure, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    Zero,
    Replicate,
}

/// Padding applied to the trailing `amounts.len()` (spatial) axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadSpec {
    pub mode: PadMode,
    pub amounts: Vec<usize>,
}

impl PadSpec {
    pub fn new(mode: PadMode, amounts: &[usize]) -> Self {
        Self {
            mode,
            amounts: amounts.to_vec(),
        }
    }

    pub fn zero(amounts: &[usize]) -> Self {
        Self::new(PadMode::Zero, amounts)
    }

    pub fn replicate(amounts: &[usize]) -> Self {
        Self::new(PadMode::Replicate, amounts)
    }

    /// No padding on `axes` spatial axes.
    pub fn none(axes: usize) -> Self {
        Self::zero(&vec![0; axes])
    }

    /// "Same" padding for a stride-1 window of the given odd extents.
    pub fn same(mode: PadMode, window: &[usize]) -> Self {
        Self::new(mode, &window.iter().map(|k| k / 2).collect::<Vec<_>>())
    }

    pub fn is_none(&self) -> bool {
        self.amounts.iter().all(|&a| a == 0)
    }

    fn validate(&self, shape: &[usize]) -> Result<()> {
        let axes = self.amounts.len();
        ensure!(
            axes >= 1 && axes <= shape.len(),
            "padding over {axes} axes does not fit shape {shape:?}"
        );
        if self.mode == PadMode::Replicate {
            let spatial = &shape[shape.len() - axes..];
            for (&a, &e) in self.amounts.iter().zip(spatial) {
                ensure!(
                    a < e,
                    "replicate padding {a} must be smaller than extent {e}"
                );
            }
        }
        Ok(())
    }

    /// For each padded coordinate along each spatial axis, the source
    /// coordinate it reads from (`None` = zero fill).
    fn axis_maps(&self, spatial: &[usize]) -> Vec<Vec<Option<usize>>> {
        self.amounts
            .iter()
            .zip(spatial)
            .map(|(&a, &e)| {
                (0..e + 2 * a)
                    .map(|o| {
                        let s = o as isize - a as isize;
                        if (0..e as isize).contains(&s) {
                            Some(s as usize)
                        } else {
                            match self.mode {
                                PadMode::Zero => None,
                                PadMode::Replicate => Some(s.clamp(0, e as isize - 1) as usize),
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Walks every padded spatial position, calling `f(padded_offset, source_offset)`
/// inside one outer block.
fn walk(maps: &[Vec<Option<usize>>], spatial: &[usize], mut f: impl FnMut(usize, Option<usize>)) {
    let axes = maps.len();
    let mut idx = vec![0usize; axes];
    let out_len: usize = maps.iter().map(Vec::len).product();
    for o in 0..out_len {
        let mut src = Some(0usize);
        for ax in 0..axes {
            src = match (src, maps[ax][idx[ax]]) {
                (Some(acc), Some(s)) => Some(acc * spatial[ax] + s),
                _ => None,
            };
        }
        f(o, src);
        for ax in (0..axes).rev() {
            idx[ax] += 1;
            if idx[ax] < maps[ax].len() {
                break;
            }
            idx[ax] = 0;
        }
    }
}

fn split(shape: &[usize], axes: usize) -> (usize, &[usize]) {
    let (outer, spatial) = shape.split_at(shape.len() - axes);
    (outer.iter().product(), spatial)
}

pub fn pad<T: Real>(x: &Tensor<T>, spec: &PadSpec) -> Result<Tensor<T>> {
    spec.validate(x.shape())?;
    if spec.is_none() {
        return Ok(x.clone());
    }
    let axes = spec.amounts.len();
    let (outer, spatial) = split(x.shape(), axes);
    let maps = spec.axis_maps(spatial);
    let in_block: usize = spatial.iter().product();
    let out_block: usize = maps.iter().map(Vec::len).product();
    let mut data = vec![T::zero(); outer * out_block];
    for b in 0..outer {
        let src = &x.data()[b * in_block..(b + 1) * in_block];
        let dst = &mut data[b * out_block..(b + 1) * out_block];
        walk(&maps, spatial, |o, s| {
            if let Some(s) = s {
                dst[o] = src[s];
            }
        });
    }
    let mut shape = x.shape().to_vec();
    let rank = shape.len();
    for (ax, m) in maps.iter().enumerate() {
        shape[rank - axes + ax] = m.len();
    }
    Tensor::new(&shape, data)
}

/// Adjoint of [`pad`]: folds a gradient over the padded tensor back onto
/// the unpadded input of shape `input_shape`.
pub fn pad_backward<T: Real>(
    grad: &Tensor<T>,
    spec: &PadSpec,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    spec.validate(input_shape)?;
    let axes = spec.amounts.len();
    let (outer, spatial) = split(input_shape, axes);
    let maps = spec.axis_maps(spatial);
    let in_block: usize = spatial.iter().product();
    let out_block: usize = maps.iter().map(Vec::len).product();
    ensure!(
        grad.len() == outer * out_block,
        "gradient of shape {:?} does not match padded input {input_shape:?}",
        grad.shape()
    );
    let mut data = vec![T::zero(); outer * in_block];
    for b in 0..outer {
        let src = &grad.data()[b * out_block..(b + 1) * out_block];
        let dst = &mut data[b * in_block..(b + 1) * in_block];
        walk(&maps, spatial, |o, s| {
            if let Some(s) = s {
                dst[s] += src[o];
            }
        });
    }
    Tensor::new(input_shape, data)
}

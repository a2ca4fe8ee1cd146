use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Error, Result};
use crate::real::Real;
use crate::rng::SeededRng;
use crate::tensor::{conv2d, Kernel, PadSpec, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Sigmoid,
    Relu,
}

impl Nonlinearity {
    #[inline]
    pub fn apply<T: Real>(self, z: T) -> T {
        match self {
            Self::Sigmoid => T::one() / (T::one() + (-z).exp()),
            Self::Relu => z.max(T::zero()),
        }
    }

    /// Derivative at `z`; the ReLU kink takes slope 0.
    #[inline]
    pub fn derivative<T: Real>(self, z: T) -> T {
        match self {
            Self::Sigmoid => {
                let s = self.apply(z);
                s * (T::one() - s)
            }
            Self::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Self::Sigmoid),
            "relu" => Ok(Self::Relu),
            other => Err(invalid!("unknown nonlinearity {other:?}")),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sigmoid => "sigmoid",
            Self::Relu => "relu",
        })
    }
}

/// Local binary convolution layer description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbcSpec {
    /// Number of fixed binary kernels (intermediate maps).
    pub m: usize,
    pub window: usize,
    /// Probability that a kernel entry is nonzero.
    pub sparsity: f64,
    pub nonlinearity: Nonlinearity,
    pub seed: u64,
}

impl LbcSpec {
    fn validate(&self) -> Result<()> {
        ensure!(self.m >= 1, "LBC needs at least one kernel");
        ensure!(
            self.window % 2 == 1,
            "window must be odd, got {}",
            self.window
        );
        ensure!(
            self.sparsity > 0.0 && self.sparsity <= 1.0,
            "sparsity must lie in (0, 1], got {}",
            self.sparsity
        );
        Ok(())
    }
}

/// Fixed `m x c_in x k x k` stack of {-1, 0, +1} kernels. Not trainable:
/// there is no mutable access once generated.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryKernels<T> {
    kernel: Kernel<T>,
}

impl<T: Real> BinaryKernels<T> {
    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn m(&self) -> usize {
        self.kernel.c_out()
    }

    pub fn nonzero_count(&self, j: usize) -> usize {
        (0..self.kernel.c_in())
            .map(|ci| {
                self.kernel
                    .slice(j, ci)
                    .iter()
                    .filter(|v| **v != T::zero())
                    .count()
            })
            .sum()
    }
}

const MAX_REDRAWS: usize = 1000;

/// Draws each entry nonzero with probability `sparsity`, sign by a fair
/// coin. A kernel without both a +1 and a -1 is redrawn.
pub fn lbc_make_kernels<T: Real>(spec: &LbcSpec, c_in: usize) -> Result<BinaryKernels<T>> {
    spec.validate()?;
    ensure!(c_in >= 1, "c_in must be positive");
    let per = c_in * spec.window * spec.window;
    let mut rng = SeededRng::new(spec.seed);
    let mut data = Vec::with_capacity(spec.m * per);
    for j in 0..spec.m {
        let mut drawn = None;
        for _ in 0..MAX_REDRAWS {
            let k: Vec<i8> = (0..per)
                .map(|_| {
                    if rng.bernoulli(spec.sparsity) {
                        if rng.next_u64() >> 63 == 1 {
                            1
                        } else {
                            -1
                        }
                    } else {
                        0
                    }
                })
                .collect();
            if k.contains(&1) && k.contains(&-1) {
                drawn = Some(k);
                break;
            }
        }
        let k = drawn.ok_or_else(|| {
            invalid!(
                "kernel {j}: no draw with both signs after {MAX_REDRAWS} tries at sparsity {}",
                spec.sparsity
            )
        })?;
        data.extend(k.into_iter().map(|v| T::of(f64::from(v))));
    }
    Ok(BinaryKernels {
        kernel: Kernel::new(&[spec.m, c_in, spec.window, spec.window], data)?,
    })
}

/// Intermediate tensors of one LBC forward pass.
#[derive(Debug, Clone)]
pub struct LbcStages<T> {
    /// Binary convolution responses.
    pub differences: Tensor<T>,
    /// After the nonlinearity.
    pub activated: Tensor<T>,
    pub output: Tensor<T>,
}

fn pooling_kernel<T: Real>(pooling: &Tensor<T>, m: usize) -> Result<Kernel<T>> {
    ensure!(
        pooling.rank() == 2 && pooling.shape()[1] == m,
        "pooling weights must be c_out x {m}, got {:?}",
        pooling.shape()
    );
    Kernel::new(&[pooling.shape()[0], m, 1, 1], pooling.data().to_vec())
}

pub fn lbc_stages<T: Real>(
    x: &Tensor<T>,
    kernels: &BinaryKernels<T>,
    nonlinearity: Nonlinearity,
    pooling: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<LbcStages<T>> {
    let pool = pooling_kernel(pooling, kernels.m())?;
    let differences = conv2d(x, kernels.kernel(), pad, stride)?;
    let activated = differences.map(|z| nonlinearity.apply(z));
    let output = conv2d(&activated, &pool, &PadSpec::none(2), 1)?;
    Ok(LbcStages {
        differences,
        activated,
        output,
    })
}

/// `y = P ∘ σ ∘ (B * x)`: fixed binary convolution, nonlinearity, then a
/// learnable `c_out x m` 1x1 pooling.
pub fn lbc_forward<T: Real>(
    x: &Tensor<T>,
    kernels: &BinaryKernels<T>,
    nonlinearity: Nonlinearity,
    pooling: &Tensor<T>,
    pad: &PadSpec,
    stride: usize,
) -> Result<Tensor<T>> {
    Ok(lbc_stages(x, kernels, nonlinearity, pooling, pad, stride)?.output)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sparsity: f64, seed: u64) -> LbcSpec {
        LbcSpec {
            m: 16,
            window: 3,
            sparsity,
            nonlinearity: Nonlinearity::Relu,
            seed,
        }
    }

    #[test]
    fn seeded_and_ternary() {
        let a = lbc_make_kernels::<f32>(&spec(0.5, 9), 2).unwrap();
        let b = lbc_make_kernels::<f32>(&spec(0.5, 9), 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, lbc_make_kernels::<f32>(&spec(0.5, 10), 2).unwrap());
        for j in 0..16 {
            let vals: Vec<f32> = (0..2)
                .flat_map(|ci| a.kernel().slice(j, ci).to_vec())
                .collect();
            assert!(vals.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
            assert!(vals.contains(&1.0) && vals.contains(&-1.0));
        }
    }

    #[test]
    fn full_density() {
        let k = lbc_make_kernels::<f64>(&spec(1.0, 1), 1).unwrap();
        assert!(k.kernel().data().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn impossible_sparsity_errors() {
        let s = LbcSpec {
            m: 4,
            window: 1,
            sparsity: 0.5,
            nonlinearity: Nonlinearity::Relu,
            seed: 0,
        };
        assert!(matches!(
            lbc_make_kernels::<f64>(&s, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(lbc_make_kernels::<f64>(&spec(0.0, 0), 1).is_err());
    }

    #[test]
    fn relu_kills_negative_maps() {
        let mut k = lbc_make_kernels::<f64>(&spec(1.0, 3), 1).unwrap();
        // All-negative response: x = 1 everywhere, kernels summing below zero.
        k.kernel = Kernel::new(&[1, 1, 1, 1], vec![-1.0]).unwrap();
        let x = Tensor::filled(&[1, 1, 4, 4], 1.0).unwrap();
        let pool = Tensor::new(&[2, 1], vec![3.0, -2.0]).unwrap();
        let y = lbc_forward(&x, &k, Nonlinearity::Relu, &pool, &PadSpec::none(2), 1).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        assert!(lbc_forward(
            &x,
            &k,
            Nonlinearity::Relu,
            &Tensor::zeros(&[2, 3]).unwrap(),
            &PadSpec::none(2),
            1
        )
        .is_err());
    }
}

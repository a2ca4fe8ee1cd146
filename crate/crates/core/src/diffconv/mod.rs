//! Two-dimensional difference convolutions.
//!
//! Every operator here is evaluated directly from its definition: each
//! output element is accumulated from explicit pixel differences. The
//! [`crate::reparam`] module turns the data-independent ones into dense
//! kernels for fast inference.

pub(crate) mod forward;
mod lbc;
mod pairset;
mod params;
mod weights;

pub use forward::{
    ccdc_forward, cdc_forward, dense_intensity_kernel, gcdc_forward, mediconv_forward,
    mixed_forward, pdc_forward, CrossDirection,
};
pub use lbc::{
    lbc_forward, lbc_make_kernels, lbc_stages, BinaryKernels, LbcSpec, LbcStages, Nonlinearity,
};
pub use pairset::{Offset, Pair, PairSet, PairSetKind, RING8};
pub use params::{param_count, LayerDesc, ParamCount};
pub use weights::KernelWeights;

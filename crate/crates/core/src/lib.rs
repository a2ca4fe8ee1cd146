//! Local binary pattern descriptors and the pixel difference convolution
//! family (central, generalized, cross, angular, radial, random and median
//! references, local binary convolution, spatio-temporal central
//! differences), with reparameterization to dense kernels and analytic
//! gradients.

pub mod diffconv;
pub mod diffconv3d;
pub mod error;
pub mod gradcheck;
pub mod lbp;
pub mod par;
pub mod pgm;
pub mod real;
pub mod reparam;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use pgm::PgmImage;
pub use real::{Precision, Real};
pub use rng::SeededRng;
pub use tensor::{Kernel, PadMode, PadSpec, Tensor};

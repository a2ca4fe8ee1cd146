//! Analytic backward passes for the difference operators and a
//! finite-difference harness that checks them.

mod backward;
mod check;

pub use backward::{
    ccdc_backward, cdc3d_backward, gcdc_backward, lbc_backward, mediconv_backward, mixed_backward,
    pdc_backward, GradBundle, MedianGrad,
};
pub use check::{
    finite_diff_grad, grad_check, relative_error, GradCheckConfig, GradOp, GradReport,
};

//! Conversion of data-independent difference operators into equivalent
//! dense kernels, with equivalence checks and timing comparisons.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::diffconv::{
    ccdc_forward, gcdc_forward, mediconv_forward, pdc_forward, CrossDirection, KernelWeights,
    PairSet, PairSetKind,
};
use crate::error::{ensure, invalid, Error, Result};
use crate::par;
use crate::real::{Precision, Real};
use crate::rng::SeededRng;
use crate::tensor::{conv2d, Kernel, PadMode, PadSpec, Tensor};

/// `ŵ[o] = Σ_{minuend = o} w_i - Σ_{subtrahend = o} w_i` per `(c_out, c_in)`.
pub fn pairs_to_kernel<T: Real>(ps: &PairSet, w: &KernelWeights<T>) -> Result<Kernel<T>> {
    mixed_kernel(ps, w, 1.0)
}

/// Dense kernel of the θ-mixed operator
/// `θ · Σ w_i (x_a - x_b) + (1 - θ) · (Σ w_i x_a + w_c x_c)`:
/// `ŵ[o] = Σ_{minuend = o} w_i - θ Σ_{subtrahend = o} w_i + (1 - θ) [o = c] w_c`.
pub fn mixed_kernel<T: Real>(ps: &PairSet, w: &KernelWeights<T>, theta: f64) -> Result<Kernel<T>> {
    ensure!(
        (0.0..=1.0).contains(&theta),
        "theta must lie in [0, 1], got {theta}"
    );
    ensure!(
        w.m() == ps.len(),
        "expected {} weights per slice, got {}",
        ps.len(),
        w.m()
    );
    let k = ps.window();
    let th = T::of(theta);
    let taps = ps.taps();
    let center = ps.tap((0, 0));
    let mut kernel = Kernel::zeros(&[w.c_out(), w.c_in(), k, k])?;
    for co in 0..w.c_out() {
        for ci in 0..w.c_in() {
            let ws = w.pair_weights(co, ci).to_vec();
            let wc = w.center_weight(co, ci);
            let dst = kernel.slice_mut(co, ci);
            for (&wi, &(a, b)) in ws.iter().zip(&taps) {
                dst[a] += wi;
                dst[b] -= if theta == 1.0 { wi } else { th * wi };
            }
            if theta != 1.0 {
                dst[center] += T::of(1.0 - theta) * wc;
            }
        }
    }
    Ok(kernel)
}

/// A difference operator together with its fixed configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffOp {
    /// Pixel difference convolution over a fixed pair set.
    Pdc {
        label: String,
        pairs: PairSet,
    },
    Gcdc {
        theta: f64,
    },
    Ccdc {
        direction: CrossDirection,
        theta: f64,
    },
    /// Median-referenced differences over all `window²` taps.
    MeDiConv {
        window: usize,
    },
    /// Plain convolution; weights are the kernel taps in row-major order.
    Dense {
        window: usize,
    },
}

impl DiffOp {
    /// Parses an operator name: `cpdc`, `apdc`, `rpdc`, `cdc`, `gcdc`,
    /// `ccdc-hv`, `ccdc-dg`, `mediconv`, `dense`. `theta` applies to the
    /// mixed operators.
    pub fn from_name(name: &str, theta: f64) -> Result<Self> {
        let pdc = |label: &str, kind| -> Result<Self> {
            Ok(Self::Pdc {
                label: label.to_string(),
                pairs: PairSet::build(kind)?,
            })
        };
        match name {
            "cpdc" | "cdc" => pdc(name, PairSetKind::Central),
            "apdc" => pdc(name, PairSetKind::Angular),
            "rpdc" => pdc(name, PairSetKind::Radial),
            "gcdc" => Ok(Self::Gcdc { theta }),
            "ccdc-hv" | "ccdc_hv" => Ok(Self::Ccdc {
                direction: CrossDirection::Hv,
                theta,
            }),
            "ccdc-dg" | "ccdc_dg" => Ok(Self::Ccdc {
                direction: CrossDirection::Dg,
                theta,
            }),
            "mediconv" => Ok(Self::MeDiConv { window: 3 }),
            "dense" => Ok(Self::Dense { window: 3 }),
            other => Err(invalid!("unknown operator {other:?}")),
        }
    }

    pub fn custom(label: impl Into<String>, pairs: PairSet) -> Self {
        Self::Pdc {
            label: label.into(),
            pairs,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Pdc { label, .. } => label.clone(),
            Self::Gcdc { theta } => format!("gcdc(theta={theta})"),
            Self::Ccdc { direction, theta } => format!("ccdc-{direction}(theta={theta})"),
            Self::MeDiConv { .. } => "mediconv".into(),
            Self::Dense { .. } => "dense".into(),
        }
    }

    pub fn window(&self) -> usize {
        match self {
            Self::Pdc { pairs, .. } => pairs.window(),
            Self::Gcdc { .. } | Self::Ccdc { .. } => 3,
            Self::MeDiConv { window } | Self::Dense { window } => *window,
        }
    }

    /// Weights per `(c_out, c_in)` slice and whether a center weight is used.
    pub fn weight_layout(&self) -> (usize, bool) {
        match self {
            Self::Pdc { pairs, .. } => (pairs.len(), false),
            Self::Gcdc { .. } => (8, true),
            Self::Ccdc { .. } => (4, true),
            Self::MeDiConv { window } | Self::Dense { window } => (window * window, false),
        }
    }

    /// Weights from `U(-s, s)` with `s = 1 / sqrt(c_in · m)`, keeping outputs
    /// of order one.
    pub fn random_weights<T: Real>(
        &self,
        c_out: usize,
        c_in: usize,
        rng: &mut SeededRng,
    ) -> Result<KernelWeights<T>> {
        let (m, with_center) = self.weight_layout();
        let scale = 1.0 / ((c_in * m) as f64).sqrt();
        KernelWeights::random(c_out, c_in, m, with_center, scale, rng)
    }

    fn dense_kernel<T: Real>(window: usize, w: &KernelWeights<T>) -> Result<Kernel<T>> {
        Kernel::new(
            &[w.c_out(), w.c_in(), window, window],
            w.pairs_flat().to_vec(),
        )
    }

    /// Evaluates the operator from its definition.
    pub fn naive_forward<T: Real>(
        &self,
        x: &Tensor<T>,
        w: &KernelWeights<T>,
        pad: &PadSpec,
        stride: usize,
    ) -> Result<Tensor<T>> {
        match self {
            Self::Pdc { pairs, .. } => pdc_forward(x, pairs, w, pad, stride),
            Self::Gcdc { theta } => gcdc_forward(x, w, *theta, pad, stride),
            Self::Ccdc { direction, theta } => ccdc_forward(x, w, *theta, *direction, pad, stride),
            Self::MeDiConv { window } => mediconv_forward(x, w, *window, pad, stride),
            Self::Dense { window } => conv2d(x, &Self::dense_kernel(*window, w)?, pad, stride),
        }
    }

    /// Dense kernel equivalent to the operator. Median referencing depends on
    /// the data and has no such kernel.
    pub fn reparameterize<T: Real>(&self, w: &KernelWeights<T>) -> Result<Kernel<T>> {
        match self {
            Self::Pdc { pairs, .. } => pairs_to_kernel(pairs, w),
            Self::Gcdc { theta } => mixed_kernel(&PairSet::build(PairSetKind::Central)?, w, *theta),
            Self::Ccdc { direction, theta } => {
                mixed_kernel(&PairSet::build(direction.pair_set_kind())?, w, *theta)
            }
            Self::MeDiConv { .. } => Err(Error::UnsupportedOperation(
                "mediconv references the window median, which depends on the input; \
                 it has no equivalent dense kernel"
                    .into(),
            )),
            Self::Dense { window } => Self::dense_kernel(*window, w),
        }
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for DiffOp {
    type Err = Error;

    /// Names with the mixed operators at `θ = 1`.
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, 1.0)
    }
}

/// Input and layer sizes for [`verify_equivalence`] and [`bench_compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProblemShape {
    pub n: usize,
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
}

impl ProblemShape {
    /// `n x c x h x w` input with `c_out == c_in`.
    pub fn square(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            n,
            c_in: c,
            h,
            w,
            c_out: c,
        }
    }

    pub fn input(&self) -> [usize; 4] {
        [self.n, self.c_in, self.h, self.w]
    }
}

impl fmt::Display for ProblemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.c_in, self.h, self.w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReparamReport {
    pub op: String,
    pub shape: ProblemShape,
    pub precision: Precision,
    pub trials: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Median wall time per forward pass, nanoseconds.
    pub naive_ns: f64,
    pub reparam_ns: f64,
    pub dense_ns: f64,
}

impl ReparamReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let r = f();
    // Clamp to 1 ns so timings stay strictly positive on coarse clocks.
    (r, (start.elapsed().as_nanos() as f64).max(1.0))
}

struct Instance<T> {
    x: Tensor<T>,
    w: KernelWeights<T>,
    dense: Kernel<T>,
}

fn instance<T: Real>(
    op: &DiffOp,
    shape: &ProblemShape,
    rng: &mut SeededRng,
) -> Result<Instance<T>> {
    let x = Tensor::random(&shape.input(), rng, 0.0, 1.0)?;
    let w = op.random_weights(shape.c_out, shape.c_in, rng)?;
    let k = op.window();
    let s = 1.0 / ((shape.c_in * k * k) as f64).sqrt();
    let dense = Kernel::random(&[shape.c_out, shape.c_in, k, k], rng, -s, s)?;
    Ok(Instance { x, w, dense })
}

/// Runs the direct and reparameterized paths on `trials` seeded random
/// instances (zero "same" padding, stride 1) and reports the largest
/// elementwise deviation. A failed comparison is reported, not raised.
pub fn verify_equivalence<T: Real>(
    op: &DiffOp,
    shape: ProblemShape,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<ReparamReport> {
    ensure!(trials >= 1, "need at least one trial");
    let pad = PadSpec::same(PadMode::Zero, &[op.window(); 2]);
    let mut rng = SeededRng::new(seed);
    let mut max_err = 0.0f64;
    let (mut naive_t, mut rep_t, mut dense_t) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..trials {
        let inst = instance::<T>(op, &shape, &mut rng)?;
        let (direct, tn) = timed(|| op.naive_forward(&inst.x, &inst.w, &pad, 1));
        let kernel = op.reparameterize(&inst.w)?;
        let (fast, tr) = timed(|| conv2d(&inst.x, &kernel, &pad, 1));
        let (_, td) = timed(|| conv2d(&inst.x, &inst.dense, &pad, 1));
        max_err = max_err.max(direct?.max_abs_diff(&fast?)?);
        naive_t.push(tn);
        rep_t.push(tr);
        dense_t.push(td);
    }
    Ok(ReparamReport {
        op: op.name(),
        shape,
        precision: T::PRECISION,
        trials,
        max_abs_error: max_err,
        tolerance,
        pass: max_err <= tolerance,
        naive_ns: median(&mut naive_t),
        reparam_ns: median(&mut rep_t),
        dense_ns: median(&mut dense_t),
    })
}

/// Timing options for [`bench_compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub repetitions: usize,
    pub warmup: usize,
    /// Worker threads; 1 gives the most stable medians, 0 uses the default pool.
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repetitions: 50,
            warmup: 3,
            threads: 1,
            seed: 0,
        }
    }
}

/// Median wall time of the direct operator, the convolution with its
/// reparameterized kernel, and a dense convolution of the same window.
/// The three paths are interleaved within each repetition so drift in
/// machine load affects them alike.
pub fn bench_compare<T: Real>(
    op: &DiffOp,
    shape: ProblemShape,
    opts: BenchOptions,
) -> Result<ReparamReport> {
    ensure!(opts.repetitions >= 1, "need at least one repetition");
    let mut rng = SeededRng::new(opts.seed);
    let inst = instance::<T>(op, &shape, &mut rng)?;
    let kernel = op.reparameterize(&inst.w)?;
    let pad = PadSpec::same(PadMode::Zero, &[op.window(); 2]);
    par::with_threads(opts.threads, || {
        let run_naive = || op.naive_forward(&inst.x, &inst.w, &pad, 1);
        let run_rep = || conv2d(&inst.x, &kernel, &pad, 1);
        let run_dense = || conv2d(&inst.x, &inst.dense, &pad, 1);
        for _ in 0..opts.warmup {
            run_naive()?;
            run_rep()?;
            run_dense()?;
        }
        let (mut tn, mut tr, mut td) = (Vec::new(), Vec::new(), Vec::new());
        let mut max_err = 0.0f64;
        for _ in 0..opts.repetitions {
            let (a, t) = timed(run_naive);
            tn.push(t);
            let (b, t) = timed(run_rep);
            tr.push(t);
            let (c, t) = timed(run_dense);
            td.push(t);
            c?;
            max_err = max_err.max(a?.max_abs_diff(&b?)?);
        }
        Ok(ReparamReport {
            op: op.name(),
            shape,
            precision: T::PRECISION,
            trials: opts.repetitions,
            max_abs_error: max_err,
            tolerance: f64::INFINITY,
            pass: true,
            naive_ns: median(&mut tn),
            reparam_ns: median(&mut tr),
            dense_ns: median(&mut td),
        })
    })
}

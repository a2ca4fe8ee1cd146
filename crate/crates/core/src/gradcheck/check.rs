use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::backward::{
    cdc3d_backward, lbc_backward, mediconv_backward, mixed_backward, pdc_backward, GradBundle,
};
use crate::diffconv::{
    lbc_make_kernels, mediconv_forward, mixed_forward, pdc_forward, CrossDirection, KernelWeights,
    LbcSpec, Nonlinearity, PairSet, PairSetKind,
};
use crate::diffconv3d::{cdc3d_forward, Cdc3dKind};
use crate::error::{ensure, invalid, Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{conv2d, Kernel, PadMode, PadSpec, Tensor};

/// Central differences `(f(p + h e_i) - f(p - h e_i)) / 2h` for every
/// coordinate of `p`.
pub fn finite_diff_grad(mut f: impl FnMut(&[f64]) -> f64, p: &[f64], h: f64) -> Result<Vec<f64>> {
    ensure!(h > 0.0, "step must be positive, got {h}");
    let mut q = p.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        q[i] = p[i] + h;
        let up = f(&q);
        q[i] = p[i] - h;
        let down = f(&q);
        q[i] = p[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// `‖a - n‖∞ / max(‖a‖∞, ‖n‖∞)`; zero when both vectors vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    let scale = inf(analytic).max(inf(numeric));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Operator under gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradOp {
    Pdc(PairSetKind),
    Gcdc {
        theta: f64,
    },
    Ccdc {
        direction: CrossDirection,
        theta: f64,
    },
    MeDiConv,
    Lbc(Nonlinearity),
    Cdc3d {
        kind: Cdc3dKind,
        theta: f64,
    },
}

impl GradOp {
    /// Every operator family with its default configuration.
    pub fn all() -> Vec<Self> {
        let mut ops: Vec<Self> = [
            PairSetKind::Central,
            PairSetKind::Angular,
            PairSetKind::Radial,
            PairSetKind::CrossHv,
            PairSetKind::CrossDg,
            PairSetKind::Random {
                window: 3,
                pairs: 8,
                seed: 7,
            },
        ]
        .into_iter()
        .map(Self::Pdc)
        .collect();
        ops.push(Self::Gcdc { theta: 0.5 });
        ops.push(Self::Ccdc {
            direction: CrossDirection::Hv,
            theta: 0.7,
        });
        ops.push(Self::Ccdc {
            direction: CrossDirection::Dg,
            theta: 0.7,
        });
        ops.push(Self::MeDiConv);
        ops.push(Self::Lbc(Nonlinearity::Sigmoid));
        ops.push(Self::Lbc(Nonlinearity::Relu));
        for kind in Cdc3dKind::ALL {
            ops.push(Self::Cdc3d { kind, theta: 0.6 });
        }
        ops
    }

    pub fn name(&self) -> String {
        match self {
            Self::Pdc(kind) => format!("pdc-{kind}"),
            Self::Gcdc { theta } => format!("gcdc(theta={theta})"),
            Self::Ccdc { direction, theta } => format!("ccdc-{direction}(theta={theta})"),
            Self::MeDiConv => "mediconv".into(),
            Self::Lbc(nl) => format!("lbc-{nl}"),
            Self::Cdc3d { kind, theta } => format!("cdc3d-{kind}(theta={theta})"),
        }
    }

    /// Short name accepted by the `FromStr` impl.
    pub fn key(&self) -> String {
        match self {
            Self::Pdc(PairSetKind::Central) => "cpdc".into(),
            Self::Pdc(PairSetKind::Angular) => "apdc".into(),
            Self::Pdc(PairSetKind::Radial) => "rpdc".into(),
            Self::Pdc(PairSetKind::CrossHv) => "pdc-cross-hv".into(),
            Self::Pdc(PairSetKind::CrossDg) => "pdc-cross-dg".into(),
            Self::Pdc(PairSetKind::Random { .. }) => "random-pdc".into(),
            Self::Gcdc { .. } => "gcdc".into(),
            Self::Ccdc { direction, .. } => format!("ccdc-{direction}"),
            Self::MeDiConv => "mediconv".into(),
            Self::Lbc(nl) => format!("lbc-{nl}"),
            Self::Cdc3d { kind, .. } => format!("cdc3d-{kind}"),
        }
    }
}

impl fmt::Display for GradOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for GradOp {
    type Err = Error;

    /// Accepts `cpdc`, `apdc`, `rpdc`, `cdc`, `random-pdc`, `gcdc`, `ccdc-hv`,
    /// `ccdc-dg`, `mediconv`, `lbc`, `lbc-relu`, `cdc3d-st`, `cdc3d-t`,
    /// `cdc3d-tr`, with default mixing weights.
    fn from_str(s: &str) -> Result<Self> {
        let all = Self::all();
        let pick = |i: usize| Ok(all[i]);
        match s {
            "cpdc" | "cdc" => pick(0),
            "apdc" => pick(1),
            "rpdc" => pick(2),
            "pdc-cross-hv" => pick(3),
            "pdc-cross-dg" => pick(4),
            "random-pdc" => pick(5),
            "gcdc" => pick(6),
            "ccdc-hv" => pick(7),
            "ccdc-dg" => pick(8),
            "mediconv" => pick(9),
            "lbc" | "lbc-sigmoid" => pick(10),
            "lbc-relu" => pick(11),
            "cdc3d-st" => pick(12),
            "cdc3d-t" => pick(13),
            "cdc3d-tr" => pick(14),
            other => Err(invalid!("unknown operator {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Number of seeded random instances.
    pub seeds: usize,
    pub base_seed: u64,
    pub h: f64,
    pub tol: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            base_seed: 0,
            h: 1e-3,
            tol: 1e-4,
        }
    }
}

/// Worst relative error of one parameter group over all instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradReport {
    pub op: String,
    pub group: String,
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
    pub seeds: usize,
}

/// Instance-level comparison: `(group, analytic, numeric)`.
type Groups = Vec<(&'static str, Vec<f64>, Vec<f64>)>;

const LBC_KINK_MARGIN: f64 = 1e-3;
const MAX_REDRAWS: usize = 200;

fn weights_with(
    w: &KernelWeights<f64>,
    pairs: Option<&[f64]>,
    center: Option<&[f64]>,
) -> KernelWeights<f64> {
    let mut out = w.clone();
    if let Some(p) = pairs {
        out.pairs_flat_mut().copy_from_slice(p);
    }
    if let (Some(c), Some(dst)) = (center, out.center_flat_mut()) {
        dst.copy_from_slice(c);
    }
    out
}

fn with_data(t: &Tensor<f64>, data: &[f64]) -> Tensor<f64> {
    Tensor::new(t.shape(), data.to_vec()).expect("same shape")
}

fn dot(a: &Result<Tensor<f64>>, u: &Tensor<f64>) -> f64 {
    a.as_ref()
        .expect("forward succeeds")
        .dot(u)
        .expect("same shape")
}

fn input_group(
    bundle: &GradBundle<f64>,
    x: &Tensor<f64>,
    h: f64,
    f: impl Fn(&Tensor<f64>) -> f64,
) -> Result<(&'static str, Vec<f64>, Vec<f64>)> {
    let num = finite_diff_grad(|p| f(&with_data(x, p)), x.data(), h)?;
    Ok(("input", bundle.grad_input.data().to_vec(), num))
}

fn pair_op_groups(ps: &PairSet, theta: Option<f64>, rng: &mut SeededRng, h: f64) -> Result<Groups> {
    let (c_in, c_out) = (2, 2);
    let x = Tensor::random(&[1, c_in, 7, 7], rng, 0.0, 1.0)?;
    let w = KernelWeights::random(c_out, c_in, ps.len(), theta.is_some(), 1.0, rng)?;
    let pad = PadSpec::same(PadMode::Zero, &[ps.window(); 2]);
    let fwd = |x: &Tensor<f64>, w: &KernelWeights<f64>, th: f64| match theta {
        Some(_) => mixed_forward(x, ps, w, th, &pad, 1),
        None => pdc_forward(x, ps, w, &pad, 1),
    };
    let th0 = theta.unwrap_or(1.0);
    let y_shape = fwd(&x, &w, th0)?.shape().to_vec();
    let u = Tensor::random(&y_shape, rng, -1.0, 1.0)?;
    let bundle = match theta {
        Some(t) => mixed_backward(&x, ps, &w, t, &u, &pad, 1)?,
        None => pdc_backward(&x, ps, &w, &u, &pad, 1)?,
    };
    let mut groups = vec![input_group(&bundle, &x, h, |xp| {
        dot(&fwd(xp, &w, th0), &u)
    })?];
    let num_w = finite_diff_grad(
        |p| dot(&fwd(&x, &weights_with(&w, Some(p), None), th0), &u),
        w.pairs_flat(),
        h,
    )?;
    groups.push(("weights", bundle.grad_weights.clone(), num_w));
    if theta.is_some() {
        let num_c = finite_diff_grad(
            |p| dot(&fwd(&x, &weights_with(&w, None, Some(p)), th0), &u),
            w.center_flat().expect("mixed weights carry a center"),
            h,
        )?;
        groups.push((
            "center",
            bundle.grad_center_weight.clone().unwrap_or_default(),
            num_c,
        ));
        let num_t = finite_diff_grad(|p| dot(&fwd(&x, &w, p[0]), &u), &[th0], h)?;
        groups.push(("theta", vec![bundle.grad_theta.unwrap_or(0.0)], num_t));
    }
    Ok(groups)
}

/// Distinct values spaced well beyond `2h`, so no perturbation reorders a
/// window and every median is unique.
fn tie_free_input(shape: &[usize], rng: &mut SeededRng) -> Result<Tensor<f64>> {
    let n: usize = shape.iter().product();
    let mut ranks: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut ranks);
    Tensor::new(
        shape,
        ranks.into_iter().map(|r| 0.5 + 0.01 * r as f64).collect(),
    )
}

fn mediconv_groups(rng: &mut SeededRng, h: f64) -> Result<Groups> {
    let (c_in, c_out, k) = (2, 2, 3);
    let x = tie_free_input(&[1, c_in, 7, 7], rng)?;
    let w = KernelWeights::random(c_out, c_in, k * k, false, 1.0, rng)?;
    let pad = PadSpec::none(2);
    let fwd = |x: &Tensor<f64>, w: &KernelWeights<f64>| mediconv_forward(x, w, k, &pad, 1);
    let u = Tensor::random(fwd(&x, &w)?.shape(), rng, -1.0, 1.0)?;
    let grad = mediconv_backward(&x, &w, k, &u, &pad, 1)?;
    ensure!(
        grad.tied_windows == 0,
        "tie-free input produced {} tied windows",
        grad.tied_windows
    );
    let bundle = grad.bundle;
    let mut groups = vec![input_group(&bundle, &x, h, |xp| dot(&fwd(xp, &w), &u))?];
    let num_w = finite_diff_grad(
        |p| dot(&fwd(&x, &weights_with(&w, Some(p), None)), &u),
        w.pairs_flat(),
        h,
    )?;
    groups.push(("weights", bundle.grad_weights, num_w));
    Ok(groups)
}

fn lbc_groups(nl: Nonlinearity, rng: &mut SeededRng, h: f64) -> Result<Groups> {
    let (c_in, c_out, m) = (2, 3, 4);
    let spec = LbcSpec {
        m,
        window: 3,
        sparsity: 0.5,
        nonlinearity: nl,
        seed: rng.next_u64(),
    };
    let kernels = lbc_make_kernels::<f64>(&spec, c_in)?;
    let pad = PadSpec::none(2);
    // Away from the ReLU kink a single-entry step of h moves each
    // pre-activation by at most h, so the margin keeps every sample on one side.
    let mut x = Tensor::random(&[1, c_in, 7, 7], rng, 0.0, 1.0)?;
    let mut redraws = 0;
    while nl == Nonlinearity::Relu
        && conv2d(&x, kernels.kernel(), &pad, 1)?
            .data()
            .iter()
            .any(|z| z.abs() < LBC_KINK_MARGIN)
    {
        redraws += 1;
        ensure!(
            redraws < MAX_REDRAWS,
            "could not draw an input away from ReLU kinks"
        );
        x = Tensor::random(&[1, c_in, 7, 7], rng, 0.0, 1.0)?;
    }
    let pool = Tensor::random(&[c_out, m], rng, -1.0, 1.0)?;
    let fwd = |x: &Tensor<f64>, p: &Tensor<f64>| {
        crate::diffconv::lbc_forward(x, &kernels, nl, p, &pad, 1)
    };
    let u = Tensor::random(fwd(&x, &pool)?.shape(), rng, -1.0, 1.0)?;
    let bundle = lbc_backward(&x, &kernels, nl, &pool, &u, &pad, 1)?;
    let mut groups = vec![input_group(&bundle, &x, h, |xp| dot(&fwd(xp, &pool), &u))?];
    let num_p = finite_diff_grad(|p| dot(&fwd(&x, &with_data(&pool, p)), &u), pool.data(), h)?;
    groups.push(("pooling", bundle.grad_weights, num_p));
    Ok(groups)
}

fn cdc3d_groups(kind: Cdc3dKind, theta: f64, rng: &mut SeededRng, h: f64) -> Result<Groups> {
    let (c_in, c_out) = (2, 2);
    let x = Tensor::random(&[1, c_in, 4, 5, 5], rng, 0.0, 1.0)?;
    let w = Kernel::random(&[c_out, c_in, 3, 3, 3], rng, -1.0, 1.0)?;
    let pad = PadSpec::same(PadMode::Zero, &[3, 3, 3]);
    let fwd = |x: &Tensor<f64>, w: &Kernel<f64>, th: f64| cdc3d_forward(x, w, th, kind, &pad, 1);
    let u = Tensor::random(fwd(&x, &w, theta)?.shape(), rng, -1.0, 1.0)?;
    let bundle = cdc3d_backward(&x, &w, theta, kind, &u, &pad, 1)?;
    let mut groups = vec![input_group(&bundle, &x, h, |xp| {
        dot(&fwd(xp, &w, theta), &u)
    })?];
    let num_w = finite_diff_grad(
        |p| {
            dot(
                &fwd(
                    &x,
                    &Kernel::new(w.shape(), p.to_vec()).expect("same shape"),
                    theta,
                ),
                &u,
            )
        },
        w.data(),
        h,
    )?;
    groups.push(("weights", bundle.grad_weights.clone(), num_w));
    let num_t = finite_diff_grad(|p| dot(&fwd(&x, &w, p[0]), &u), &[theta], h)?;
    groups.push(("theta", vec![bundle.grad_theta.unwrap_or(0.0)], num_t));
    Ok(groups)
}

fn instance_groups(op: &GradOp, rng: &mut SeededRng, h: f64) -> Result<Groups> {
    match *op {
        GradOp::Pdc(kind) => pair_op_groups(&PairSet::build(kind)?, None, rng, h),
        GradOp::Gcdc { theta } => {
            pair_op_groups(&PairSet::build(PairSetKind::Central)?, Some(theta), rng, h)
        }
        GradOp::Ccdc { direction, theta } => pair_op_groups(
            &PairSet::build(direction.pair_set_kind())?,
            Some(theta),
            rng,
            h,
        ),
        GradOp::MeDiConv => mediconv_groups(rng, h),
        GradOp::Lbc(nl) => lbc_groups(nl, rng, h),
        GradOp::Cdc3d { kind, theta } => cdc3d_groups(kind, theta, rng, h),
    }
}

/// Compares analytic gradients against central finite differences on
/// `cfg.seeds` seeded instances, in double precision. One report per
/// parameter group carries the worst relative error seen.
pub fn grad_check(op: &GradOp, cfg: &GradCheckConfig) -> Result<Vec<GradReport>> {
    ensure!(cfg.tol > 0.0, "tolerance must be positive, got {}", cfg.tol);
    ensure!(cfg.seeds >= 1, "need at least one seed");
    let mut reports: Vec<GradReport> = Vec::new();
    for s in 0..cfg.seeds {
        let mut rng = SeededRng::new(cfg.base_seed.wrapping_add(s as u64));
        for (group, analytic, numeric) in instance_groups(op, &mut rng, cfg.h)? {
            let err = relative_error(&analytic, &numeric);
            match reports.iter_mut().find(|r| r.group == group) {
                Some(r) => r.max_rel_err = r.max_rel_err.max(err),
                None => reports.push(GradReport {
                    op: op.name(),
                    group: group.to_string(),
                    max_rel_err: err,
                    tol: cfg.tol,
                    pass: true,
                    seeds: cfg.seeds,
                }),
            }
        }
    }
    for r in &mut reports {
        r.pass = r.max_rel_err <= r.tol;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_linear() {
        let g = finite_diff_grad(|p| p.iter().map(|v| v * v).sum(), &[1.0, 2.0], 1e-3).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
        let g = finite_diff_grad(|p| 3.0 * p[0] - 0.5 * p[1] + 1.0, &[0.2, 7.0], 0.37).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-14 && (g[1] + 0.5).abs() < 1e-14);
        assert!(finite_diff_grad(|p| p[0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn every_op_passes_a_few_seeds() {
        let cfg = GradCheckConfig {
            seeds: 2,
            ..Default::default()
        };
        for op in GradOp::all() {
            for r in grad_check(&op, &cfg).unwrap() {
                assert!(r.pass, "{} {}: {}", r.op, r.group, r.max_rel_err);
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for name in ["cpdc", "apdc", "gcdc", "mediconv", "lbc-relu", "cdc3d-tr"] {
            assert!(name.parse::<GradOp>().is_ok());
        }
        assert!("nope".parse::<GradOp>().is_err());
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pixdiff_core::diffconv::{lbc_forward, lbc_make_kernels, LbcSpec, Nonlinearity, PairSet};
use pixdiff_core::gradcheck::{grad_check, GradCheckConfig, GradOp, GradReport};
use pixdiff_core::lbp::{
    histogram, lbp_image, Border, Interpolation, LbpMapping, MappingKind, NeighborhoodSpec,
};
use pixdiff_core::reparam::{
    bench_compare, verify_equivalence, BenchOptions, DiffOp, ProblemShape, ReparamReport,
};
use pixdiff_core::{PadMode, PadSpec, PgmImage, Real, SeededRng, Tensor};
use serde::Serialize;

use crate::args::{
    BenchArgs, BorderArg, Format, GradcheckArgs, Interp, LbpHistArgs, Mapping, Pad, PdcRunArgs,
    PrecisionArg, VerifyArgs,
};
use crate::output::{emit, read_pgm, write_atomic};
use crate::{thread_cap, Outcome, Usage};

const LBC_MAPS: usize = 8;
const LBC_SPARSITY: f64 = 0.5;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn require_format(got: Format, allowed: &[Format], command: &str) -> Result<()> {
    if allowed.contains(&got) {
        Ok(())
    } else {
        Err(usage(
            format!("{command} cannot write {got:?} output").to_lowercase(),
        ))
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn lbp_hist(a: &LbpHistArgs) -> Result<Outcome> {
    require_format(a.format, &[Format::Csv, Format::Json], "lbp-hist")?;
    let kind = match a.mapping {
        Mapping::Raw => MappingKind::Raw,
        Mapping::Ri => MappingKind::Ri,
        Mapping::U2 => MappingKind::U2,
        Mapping::Riu2 => MappingKind::Riu2,
    };
    let interp = match a.interpolation {
        Interp::Nearest => Interpolation::Nearest,
        Interp::Bilinear => Interpolation::Bilinear,
    };
    let border = match a.border {
        BorderArg::Replicate => Border::Replicate,
        BorderArg::Crop => Border::Crop,
    };
    let spec =
        NeighborhoodSpec::new(a.radius, a.points, interp).map_err(|e| usage(e.to_string()))?;
    let mapping = LbpMapping::build(kind, a.points).map_err(|e| usage(e.to_string()))?;
    let img = read_pgm(&a.input)?;
    let codes = lbp_image(&img.to_plane(), &spec, &mapping, border)?;
    let hist = histogram(&codes, &mapping, !a.counts)?;
    let text = match a.format {
        Format::Json => {
            let mut s = hist.to_json();
            s.push('\n');
            s
        }
        _ => hist.to_csv(),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

fn read_pairs(path: &Path) -> Result<PairSet> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    PairSet::from_json(&text).with_context(|| format!("in {}", path.display()))
}

/// Operator named by `--op` / `--pairs`, with `theta` for the mixed ones.
fn resolve_op(op: Option<&str>, pairs: Option<&Path>, theta: f64) -> Result<DiffOp> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(usage(format!("--theta must lie in [0, 1], got {theta}")));
    }
    match (op, pairs) {
        (None | Some("custom"), Some(p)) => Ok(DiffOp::custom("custom", read_pairs(p)?)),
        (Some("custom"), None) => Err(usage("--op custom needs --pairs")),
        (Some(name), Some(_)) => Err(usage(format!(
            "--pairs only applies to the custom operator, not {name}"
        ))),
        (Some(name), None) => DiffOp::from_name(name, theta).map_err(|e| usage(e.to_string())),
        (None, None) => Err(usage("--op or --pairs is required")),
    }
}

#[derive(Debug, Serialize)]
struct RunStats {
    op: String,
    width: usize,
    height: usize,
    seed: u64,
    theta: f64,
    min: f64,
    max: f64,
    mean: f64,
}

fn default_stats_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn pdc_run(a: &PdcRunArgs) -> Result<Outcome> {
    require_format(a.format, &[Format::Pgm], "pdc-run")?;
    let is_lbc = a.op.as_deref() == Some("lbc");
    let op = if is_lbc {
        if a.pairs.is_some() {
            return Err(usage(
                "--pairs only applies to the custom operator, not lbc",
            ));
        }
        None
    } else {
        Some(resolve_op(a.op.as_deref(), a.pairs.as_deref(), a.theta)?)
    };
    let img = read_pgm(&a.input)?;
    let (h, w) = (img.height(), img.width());
    let scale = 1.0 / f64::from(img.maxval().max(1));
    let x = img.to_plane().map(|v| v * scale).reshape(&[1, 1, h, w])?;
    let mode = match a.pad {
        Pad::Zero => PadMode::Zero,
        Pad::Replicate => PadMode::Replicate,
    };
    let mut rng = SeededRng::new(a.seed);
    let (name, y) = match &op {
        Some(op) => {
            let window = op.window();
            let weights = op.random_weights::<f64>(1, 1, &mut rng)?;
            (
                op.name(),
                op.naive_forward(&x, &weights, &PadSpec::same(mode, &[window; 2]), 1)?,
            )
        }
        None => {
            let spec = LbcSpec {
                m: LBC_MAPS,
                window: 3,
                sparsity: LBC_SPARSITY,
                nonlinearity: Nonlinearity::Relu,
                seed: a.seed,
            };
            let kernels = lbc_make_kernels::<f64>(&spec, 1)?;
            let s = 1.0 / (LBC_MAPS as f64).sqrt();
            let pooling = Tensor::random(&[1, LBC_MAPS], &mut rng, -s, s)?;
            let pad = PadSpec::same(mode, &[3, 3]);
            (
                "lbc".to_string(),
                lbc_forward(&x, &kernels, Nonlinearity::Relu, &pooling, &pad, 1)?,
            )
        }
    };
    let plane = y.reshape(&[h, w])?;
    let data = plane.data();
    let stats = RunStats {
        op: name,
        width: w,
        height: h,
        seed: a.seed,
        theta: a.theta,
        min: data.iter().copied().fold(f64::INFINITY, f64::min),
        max: data.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: data.iter().sum::<f64>() / data.len() as f64,
    };
    write_atomic(&a.out, &PgmImage::from_magnitudes(&plane)?.encode())?;
    let stats_path = a
        .stats
        .clone()
        .unwrap_or_else(|| default_stats_path(&a.out));
    write_atomic(&stats_path, to_json(&stats).as_bytes())?;
    Ok(Outcome::Pass)
}

fn parse_shape(s: &str) -> Result<ProblemShape> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("shape must look like 1x16x64x64, got {s:?}")))?;
    match dims[..] {
        [n, c, h, w] if n > 0 && c > 0 && h > 0 && w > 0 => Ok(ProblemShape::square(n, c, h, w)),
        _ => Err(usage(format!(
            "shape must have four positive extents NxCxHxW, got {s:?}"
        ))),
    }
}

/// Operators for verify and bench: the one named, or `defaults`.
fn op_list(
    op: Option<&str>,
    pairs: Option<&Path>,
    theta: Option<f64>,
    defaults: &[(&str, f64)],
) -> Result<Vec<DiffOp>> {
    if op.is_some() || pairs.is_some() {
        return Ok(vec![resolve_op(op, pairs, theta.unwrap_or(1.0))?]);
    }
    defaults
        .iter()
        .map(|&(name, t)| resolve_op(Some(name), None, theta.unwrap_or(t)))
        .collect()
}

const VERIFY_DEFAULTS: [(&str, f64); 8] = [
    ("cpdc", 1.0),
    ("apdc", 1.0),
    ("rpdc", 1.0),
    ("ccdc-hv", 1.0),
    ("ccdc-dg", 1.0),
    ("gcdc", 0.0),
    ("gcdc", 0.5),
    ("gcdc", 1.0),
];

const BENCH_DEFAULTS: [(&str, f64); 3] = [("cpdc", 1.0), ("apdc", 1.0), ("rpdc", 1.0)];

fn verify_csv(reports: &[ReparamReport]) -> String {
    let mut s = String::from("op,shape,precision,trials,max_abs_error,tolerance,pass\n");
    for r in reports {
        let prec = match r.precision {
            pixdiff_core::Precision::Single => "single",
            pixdiff_core::Precision::Double => "double",
        };
        let _ = writeln!(
            s,
            "{},{},{prec},{},{:e},{:e},{}",
            r.op, r.shape, r.trials, r.max_abs_error, r.tolerance, r.pass
        );
    }
    s
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    require_format(a.format, &[Format::Json, Format::Csv], "verify")?;
    let shape = parse_shape(&a.shape)?;
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let ops = op_list(
        a.op.as_deref(),
        a.pairs.as_deref(),
        a.theta,
        &VERIFY_DEFAULTS,
    )?;
    if let Some(DiffOp::MeDiConv { .. }) = ops.first() {
        return Err(usage(
            "mediconv depends on the input median and cannot be reparameterized",
        ));
    }
    let reports = ops
        .iter()
        .map(|op| match a.precision {
            PrecisionArg::Single => {
                verify_equivalence::<f32>(op, shape, a.trials, a.tol.unwrap_or(1e-5), a.seed)
            }
            PrecisionArg::Double => {
                verify_equivalence::<f64>(op, shape, a.trials, a.tol.unwrap_or(1e-12), a.seed)
            }
        })
        .collect::<pixdiff_core::Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Csv => verify_csv(&reports),
        _ => to_json(&reports),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(Outcome::from_pass(reports.iter().all(|r| r.pass)))
}

fn bench_one<T: Real>(
    op: &DiffOp,
    shape: ProblemShape,
    opts: BenchOptions,
) -> Result<ReparamReport> {
    Ok(bench_compare::<T>(op, shape, opts)?)
}

/// Three rows per operator, one for each timed path.
fn bench_csv(reports: &[ReparamReport]) -> String {
    let mut s = String::from("op,shape,path,median_ns,max_abs_error\n");
    for r in reports {
        for (path, ns) in [
            ("naive", r.naive_ns),
            ("reparam", r.reparam_ns),
            ("dense", r.dense_ns),
        ] {
            let _ = writeln!(
                s,
                "{},{},{path},{ns:.0},{:e}",
                r.op, r.shape, r.max_abs_error
            );
        }
    }
    s
}

pub fn bench(a: &BenchArgs) -> Result<Outcome> {
    require_format(a.format, &[Format::Csv, Format::Json], "bench")?;
    let shape = parse_shape(&a.shape)?;
    if a.repetitions == 0 {
        return Err(usage("--repetitions must be positive"));
    }
    let ops = op_list(
        a.op.as_deref(),
        a.pairs.as_deref(),
        a.theta,
        &BENCH_DEFAULTS,
    )?;
    let threads = match (thread_cap()?, a.threads) {
        (Some(cap), 0) => cap,
        (Some(cap), t) => t.min(cap),
        (None, t) => t,
    };
    let opts = BenchOptions {
        repetitions: a.repetitions,
        warmup: a.warmup,
        threads,
        seed: a.seed,
    };
    let mut reports = Vec::with_capacity(ops.len());
    for op in &ops {
        if let DiffOp::MeDiConv { .. } = op {
            return Err(usage("mediconv has no reparameterized path to time"));
        }
        reports.push(match a.precision {
            PrecisionArg::Single => bench_one::<f32>(op, shape, opts)?,
            PrecisionArg::Double => bench_one::<f64>(op, shape, opts)?,
        });
    }
    let text = match a.format {
        Format::Json => to_json(&reports),
        _ => bench_csv(&reports),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

fn gradcheck_csv(reports: &[GradReport]) -> String {
    let mut s = String::from("op,group,max_rel_err,tol,pass\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{}",
            r.op, r.group, r.max_rel_err, r.tol, r.pass
        );
    }
    s
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<Outcome> {
    require_format(a.format, &[Format::Json, Format::Csv], "gradcheck")?;
    if a.seeds == 0 {
        return Err(usage("--seeds must be positive"));
    }
    if !(a.step > 0.0 && a.tol > 0.0) {
        return Err(usage("--step and --tol must be positive"));
    }
    let ops = match a.op.as_deref() {
        Some(name) => vec![name.parse::<GradOp>().map_err(|e| usage(e.to_string()))?],
        None => GradOp::all(),
    };
    let cfg = GradCheckConfig {
        seeds: a.seeds,
        base_seed: a.seed,
        h: a.step,
        tol: a.tol,
    };
    let mut reports = Vec::new();
    for op in &ops {
        reports.extend(grad_check(op, &cfg)?);
    }
    let text = match a.format {
        Format::Csv => gradcheck_csv(&reports),
        _ => to_json(&reports),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(Outcome::from_pass(reports.iter().all(|r| r.pass)))
}

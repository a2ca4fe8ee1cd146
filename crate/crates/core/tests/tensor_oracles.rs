mod common;

use common::*;
use pixdiff_core::tensor::{
    conv2d, conv2d_backward_input, conv3d, conv3d_backward_input, pad, window_median,
};
use pixdiff_core::{Kernel, PadMode, PadSpec, Tensor};
use proptest::prelude::*;

#[test]
fn conv2d_matches_loop_oracle() {
    for (seed, (n, ci, co, h, w, k, p, s)) in [
        (1, 1, 1, 4, 4, 3, 0, 1),
        (1, 1, 1, 4, 4, 3, 1, 1),
        (2, 3, 2, 7, 9, 3, 1, 2),
        (1, 2, 4, 8, 6, 5, 2, 1),
        (1, 2, 1, 9, 9, 5, 1, 3),
    ]
    .into_iter()
    .enumerate()
    {
        let x = rand_tensor(&[n, ci, h, w], seed as u64);
        let kern = rand_tensor(&[co, ci, k, k], 100 + seed as u64);
        let got = conv2d(
            &x,
            &Kernel::from_tensor(kern.clone()).unwrap(),
            &PadSpec::zero(&[p, p]),
            s,
        )
        .unwrap();
        let want = conv2d_oracle(&x, kern.data(), [co, ci, k, k], p, s);
        assert!(max_diff(&got, &want) < 1e-12, "case {seed}");
    }
}

#[test]
fn conv2d_unbatched_layout() {
    let x = rand_tensor(&[2, 5, 5], 3);
    let kern = Kernel::from_tensor(rand_tensor(&[3, 2, 3, 3], 4)).unwrap();
    let y = conv2d(&x, &kern, &PadSpec::zero(&[1, 1]), 1).unwrap();
    assert_eq!(y.shape(), &[3, 5, 5]);
    let yb = conv2d(
        &x.clone().reshape(&[1, 2, 5, 5]).unwrap(),
        &kern,
        &PadSpec::zero(&[1, 1]),
        1,
    )
    .unwrap();
    assert_eq!(y.data(), yb.data());
}

#[test]
fn conv3d_matches_loop_oracle() {
    for (seed, (ci, co, t, h, w, p, s)) in [
        (1, 1, 3, 4, 4, 0, 1),
        (1, 1, 3, 4, 4, 1, 1),
        (2, 3, 4, 5, 6, 1, 2),
    ]
    .into_iter()
    .enumerate()
    {
        let x = rand_tensor(&[1, ci, t, h, w], seed as u64);
        let kern = rand_tensor(&[co, ci, 3, 3, 3], 50 + seed as u64);
        let got = conv3d(
            &x,
            &Kernel::from_tensor(kern.clone()).unwrap(),
            &PadSpec::zero(&[p, p, p]),
            s,
        )
        .unwrap();
        let want = conv3d_oracle(&x, kern.data(), [co, ci, 3, 3, 3], p, s);
        assert!(max_diff(&got, &want) < 1e-12, "case {seed}");
    }
}

#[test]
fn conv_rejects_channel_mismatch() {
    let x = Tensor::<f64>::zeros(&[1, 2, 5, 5]).unwrap();
    let k = Kernel::<f64>::zeros(&[1, 3, 3, 3]).unwrap();
    assert!(conv2d(&x, &k, &PadSpec::zero(&[1, 1]), 1).is_err());
    assert!(Kernel::<f64>::zeros(&[1, 1, 2, 3]).is_err());
}

#[test]
fn all_ones_kernel_on_constant() {
    let x = Tensor::filled(&[1, 1, 6, 6], 2.5).unwrap();
    let k = Kernel::new(&[1, 1, 3, 3], vec![1.0; 9]).unwrap();
    let y = conv2d(&x, &k, &PadSpec::zero(&[1, 1]), 1).unwrap();
    for i in 1..5 {
        for j in 1..5 {
            assert_eq!(y.get(&[0, 0, i, j]), 22.5);
        }
    }
    assert_eq!(y.get(&[0, 0, 0, 0]), 10.0);
}

#[test]
fn window_median_matches_sort_oracle() {
    for (seed, k, p) in [(1, 3, 1), (2, 3, 0), (3, 5, 2), (4, 1, 0)] {
        let x = rand_tensor(&[2, 2, 8, 8], seed);
        let got = window_median(&x, k, &PadSpec::zero(&[p, p])).unwrap();
        assert_eq!(got, median_oracle(&x, k, p), "k={k}");
    }
    let x = rand_tensor(&[1, 1, 8, 8], 0);
    assert!(window_median(&x, 4, &PadSpec::zero(&[1, 1])).is_err());
}

#[test]
fn replicate_pad_matches_clamped_reads() {
    let x = rand_tensor(&[2, 3, 4, 5], 9);
    let y = pad(&x, &PadSpec::replicate(&[2, 3])).unwrap();
    assert_eq!(y.shape(), &[2, 3, 8, 11]);
    for n in 0..2 {
        for c in 0..3 {
            for i in 0..8 {
                for j in 0..11 {
                    let want = read2_clamped(&x, n, c, i as isize - 2, j as isize - 3);
                    assert_eq!(y.get(&[n, c, i, j]), want);
                }
            }
        }
    }
}

#[test]
fn conv_adjoint_identity() {
    // <conv(v), u> == <v, conv_backward_input(u)>
    let pad2 = PadSpec::new(PadMode::Replicate, &[1, 1]);
    let v = rand_tensor(&[2, 3, 7, 6], 1);
    let k = Kernel::from_tensor(rand_tensor(&[2, 3, 3, 3], 2)).unwrap();
    let y = conv2d(&v, &k, &pad2, 2).unwrap();
    let u = rand_tensor(y.shape(), 3);
    let back = conv2d_backward_input(&u, &k, &pad2, 2, v.shape()).unwrap();
    assert!((y.dot(&u).unwrap() - v.dot(&back).unwrap()).abs() < 1e-10);

    let pad3 = PadSpec::zero(&[1, 1, 1]);
    let v = rand_tensor(&[1, 2, 4, 5, 5], 4);
    let k = Kernel::from_tensor(rand_tensor(&[3, 2, 3, 3, 3], 5)).unwrap();
    let y = conv3d(&v, &k, &pad3, 1).unwrap();
    let u = rand_tensor(y.shape(), 6);
    let back = conv3d_backward_input(&u, &k, &pad3, 1, v.shape()).unwrap();
    assert!((y.dot(&u).unwrap() - v.dot(&back).unwrap()).abs() < 1e-10);
}

fn small_shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..4, 3usize..9, 3usize..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conv2d_is_linear((c, h, w) in small_shape(), a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let x = rand_tensor(&[1, c, h, w], seed);
        let z = rand_tensor(&[1, c, h, w], seed ^ 1);
        let k = Kernel::from_tensor(rand_tensor(&[2, c, 3, 3], seed ^ 2)).unwrap();
        let pad = PadSpec::zero(&[1, 1]);
        let lhs = conv2d(&x.axpby(a, &z, b).unwrap(), &k, &pad, 1).unwrap();
        let rhs = conv2d(&x, &k, &pad, 1).unwrap().axpby(a, &conv2d(&z, &k, &pad, 1).unwrap(), b).unwrap();
        let scale = rhs.max_abs().max(1.0);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-6 * scale);
    }

    #[test]
    fn conv3d_is_linear(t in 1usize..4, h in 3usize..6, a in -3.0f64..3.0, seed in any::<u64>()) {
        let x = rand_tensor(&[1, 2, t, h, h], seed);
        let z = rand_tensor(&[1, 2, t, h, h], seed ^ 1);
        let k = Kernel::from_tensor(rand_tensor(&[1, 2, 3, 3, 3], seed ^ 2)).unwrap();
        let pad = PadSpec::zero(&[1, 1, 1]);
        let lhs = conv3d(&x.axpby(a, &z, 1.0).unwrap(), &k, &pad, 1).unwrap();
        let rhs = conv3d(&x, &k, &pad, 1).unwrap().axpby(a, &conv3d(&z, &k, &pad, 1).unwrap(), 1.0).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-6 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn same_padding_preserves_extent((c, h, w) in small_shape(), k in prop::sample::select(vec![1usize, 3, 5])) {
        let x = rand_tensor(&[c, h, w], 0);
        let kern = Kernel::<f64>::zeros(&[1, c, k, k]).unwrap();
        let y = conv2d(&x, &kern, &PadSpec::same(PadMode::Zero, &[k, k]), 1).unwrap();
        prop_assert_eq!(y.shape(), &[1, h, w]);
    }

    #[test]
    fn median_is_monotone((c, h, w) in small_shape(), seed in any::<u64>()) {
        let x = rand_tensor(&[1, c, h, w], seed);
        let bump = rand_tensor(&[1, c, h, w], seed ^ 7).map(f64::abs);
        let z = x.axpby(1.0, &bump, 1.0).unwrap();
        let pad = PadSpec::replicate(&[1, 1]);
        let mx = window_median(&x, 3, &pad).unwrap();
        let mz = window_median(&z, 3, &pad).unwrap();
        prop_assert!(mx.data().iter().zip(mz.data()).all(|(a, b)| a <= b));
    }

    #[test]
    fn median_of_constant_is_constant((c, h, w) in small_shape(), v in -100.0f64..100.0) {
        let x = Tensor::filled(&[1, c, h, w], v).unwrap();
        let m = window_median(&x, 3, &PadSpec::replicate(&[1, 1])).unwrap();
        prop_assert!(m.data().iter().all(|&y| y == v));
        prop_assert_eq!(window_median(&m, 3, &PadSpec::replicate(&[1, 1])).unwrap(), m);
    }
}

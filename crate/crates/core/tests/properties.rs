mod common;

use common::TestRng;
use gcka::exec::Execution;
use gcka::kernels::gram_with;
use gcka::{
    cka, gram, hsic, non_centered_alignment, summarize, sweep, Centering, FeatureMatrix, Kernel, KernelSpec,
    MedianConvention, SweepConfig, SynthSpec,
};
use proptest::prelude::*;

fn feature_matrix(max_n: usize, max_d: usize) -> impl Strategy<Value = FeatureMatrix> {
    (3..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d), n)
            .prop_map(|rows| FeatureMatrix::from_rows(&rows).unwrap())
    })
}

fn paired(max_n: usize, max_d: usize) -> impl Strategy<Value = (FeatureMatrix, FeatureMatrix)> {
    (3..=max_n, 1..=max_d, 1..=max_d).prop_flat_map(|(n, dx, dy)| {
        let m = |d| {
            prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d), n)
                .prop_map(|rows| FeatureMatrix::from_rows(&rows).unwrap())
        };
        (m(dx), m(dy))
    })
}

fn kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        Just(Kernel::Linear),
        Just(Kernel::Euclidean),
        (0.1..8.0f64).prop_map(Kernel::gaussian),
    ]
}

fn has_spread(x: &FeatureMatrix) -> bool {
    gcka::pairwise_distances(x).median() > 1e-6
}

fn max_abs(a: &ndarray::Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uncentered_grams_are_symmetric(x in feature_matrix(12, 5), k in kernel()) {
        prop_assume!(has_spread(&x));
        let g = gram(&x, &KernelSpec::new(k, Centering::None)).unwrap();
        let v = g.values();
        let tol = 1e-12 * max_abs(v);
        for i in 0..x.n() {
            for j in 0..x.n() {
                prop_assert!((v[[i, j]] - v[[j, i]]).abs() <= tol);
            }
        }
        if let Kernel::Gaussian { .. } = k {
            prop_assert!(v.iter().all(|&e| e > 0.0 && e <= 1.0));
            prop_assert!((0..x.n()).all(|i| v[[i, i]] == 1.0));
        }
    }

    #[test]
    fn gaussian_gram_is_scale_invariant(x in feature_matrix(10, 4), sigma in 0.2..6.0f64, c in 0.01..100.0f64) {
        prop_assume!(has_spread(&x));
        for median in [MedianConvention::OffDiagonal, MedianConvention::IncludeDiagonal] {
            let spec = KernelSpec::gaussian(sigma, Centering::None).with_median(median);
            let Ok(a) = gram(&x, &spec) else { continue };
            let b = gram(&x.scaled(c).unwrap(), &spec).unwrap();
            for (u, v) in a.values().iter().zip(b.values()) {
                prop_assert!((u - v).abs() <= 1e-12, "{} vs {}", u, v);
            }
        }
    }

    #[test]
    fn centering_zeroes_sums(x in feature_matrix(12, 4), k in kernel()) {
        prop_assume!(has_spread(&x));
        let n = x.n();
        for mode in [Centering::Column, Centering::Row, Centering::Double] {
            let raw = gram(&x, &KernelSpec::new(k, Centering::None)).unwrap();
            let g = gcka::center(&raw, mode).unwrap();
            let tol = 1e-10 * n as f64 * max_abs(raw.values());
            let v = g.values();
            if mode != Centering::Row {
                for j in 0..n {
                    prop_assert!((0..n).map(|i| v[[i, j]]).sum::<f64>().abs() <= tol);
                }
            }
            if mode != Centering::Column {
                for i in 0..n {
                    prop_assert!((0..n).map(|j| v[[i, j]]).sum::<f64>().abs() <= tol);
                }
            }
        }
    }

    #[test]
    fn centered_euclidean_is_minus_two_linear_plus_row_term(x in feature_matrix(12, 5)) {
        let ke = gram(&x, &KernelSpec::euclidean(Centering::Column)).unwrap();
        let kl = gram(&x, &KernelSpec::linear(Centering::Column)).unwrap();
        let n = x.n();
        let resid = ke.values() + &(kl.values() * 2.0);
        let scale = max_abs(ke.values()).max(1e-300);
        for i in 0..n {
            for j in 1..n {
                prop_assert!((resid[[i, j]] - resid[[i, 0]]).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn cka_is_symmetric_and_bounded((x, y) in paired(12, 5), kx in kernel(), ky in kernel()) {
        prop_assume!(has_spread(&x) && has_spread(&y));
        for mode in [Centering::Column, Centering::Row, Centering::Double] {
            let k = gram(&x, &KernelSpec::new(kx, mode)).unwrap();
            let l = gram(&y, &KernelSpec::new(ky, mode)).unwrap();
            let (Ok(a), Ok(b)) = (cka(&k, &l), cka(&l, &k)) else { continue };
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
            prop_assert!(a.value <= 1.0 + 1e-12 && a.value >= -1.0 - 1e-12);
            if kx.is_psd() && ky.is_psd() {
                prop_assert!(a.value >= -1e-12);
            }
        }
    }

    #[test]
    fn cka_invariant_to_isotropic_scaling((x, y) in paired(10, 4), c in 0.05..20.0f64, sigma in 0.3..4.0f64) {
        prop_assume!(has_spread(&x) && has_spread(&y));
        let xs = x.scaled(c).unwrap();
        for k in [Kernel::Linear, Kernel::gaussian(sigma)] {
            let spec = KernelSpec::new(k, Centering::Column);
            let l = gram(&y, &spec).unwrap();
            let (Ok(a), Ok(b)) = (cka(&gram(&x, &spec).unwrap(), &l), cka(&gram(&xs, &spec).unwrap(), &l)) else { continue };
            prop_assert!((a.value - b.value).abs() <= 1e-12, "{}: {} vs {}", k, a.value, b.value);
        }
    }

    #[test]
    fn summary_is_permutation_invariant(mut v in prop::collection::vec(-1e3..1e3f64, 1..40), seed in any::<u64>()) {
        let a = summarize(&v).unwrap();
        let mut rng = TestRng::new(seed);
        for i in (1..v.len()).rev() {
            let j = rng.int(0, i);
            v.swap(i, j);
        }
        prop_assert_eq!(a, summarize(&v).unwrap());
    }

    #[test]
    fn parallel_and_sequential_grams_are_bit_identical(x in feature_matrix(20, 6), k in kernel()) {
        prop_assume!(has_spread(&x));
        for mode in [Centering::None, Centering::Column, Centering::Double] {
            let spec = KernelSpec::new(k, mode);
            let a = gram_with(&x, &spec, Execution::Sequential).unwrap();
            let b = gram_with(&x, &spec, Execution::Parallel).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

/// HSIC(K_E, L) = -2 HSIC(K_lin, L) for any centering mode. The CKA
/// normalizer is positive, so CKA(K_E, L) = -CKA(K_lin, L), and with both
/// sides Euclidean the signs cancel: CKA(K_E, L_E) = CKA(K_lin, L_lin).
#[test]
fn euclidean_linear_identity_randomized() {
    let mut rng = TestRng::new(2024);
    let ls = [Kernel::Linear, Kernel::gaussian(0.5), Kernel::gaussian(1.0), Kernel::gaussian(2.0), Kernel::Euclidean];
    for _ in 0..100 {
        let n = rng.int(3, 32);
        let (dx, dy) = (rng.int(1, 8), rng.int(1, 8));
        let x = rng.matrix(n, dx);
        let y = rng.matrix(n, dy);
        for mode in [Centering::Column, Centering::Row, Centering::Double] {
            let ke = gram(&x, &KernelSpec::euclidean(mode)).unwrap();
            let kl = gram(&x, &KernelSpec::linear(mode)).unwrap();
            for lk in ls {
                let l = gram(&y, &KernelSpec::new(lk, mode)).unwrap();
                let he = hsic(&ke, &l).unwrap().value;
                let hl = hsic(&kl, &l).unwrap().value;
                assert!((he + 2.0 * hl).abs() <= 1e-9 * hl.abs().max(1e-300), "{mode} {lk} n={n} dx={dx}: {he} vs {hl}");
                let ce = cka(&ke, &l).unwrap().value;
                let cl = cka(&kl, &l).unwrap().value;
                assert!((ce + cl).abs() <= 1e-10, "{mode} {lk}: {ce} vs {cl}");
            }
            let le = gram(&y, &KernelSpec::euclidean(mode)).unwrap();
            let ll = gram(&y, &KernelSpec::linear(mode)).unwrap();
            let both_e = cka(&ke, &le).unwrap().value;
            let both_lin = cka(&kl, &ll).unwrap().value;
            assert!((both_e - both_lin).abs() <= 1e-10, "{mode}: {both_e} vs {both_lin}");
        }
    }
}

#[test]
fn non_centered_counterexample_stays_apart_over_grid() {
    let x = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let y = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let lin = KernelSpec::linear(Centering::None);
    let base = non_centered_alignment(&gram(&x, &lin).unwrap(), &gram(&y, &lin).unwrap()).unwrap().value;
    for p in -4..=8 {
        let spec = KernelSpec::gaussian(f64::from(p).exp2(), Centering::None);
        let g = non_centered_alignment(&gram(&x, &spec).unwrap(), &gram(&y, &spec).unwrap()).unwrap().value;
        assert!((g - base).abs() >= 0.19, "log2 sigma {p}: {g} vs {base}");
    }
}

#[test]
fn se_scales_with_replication() {
    let mut rng = TestRng::new(77);
    // Quartile interpolation shifts by O(1/R) under replication; R = 400 keeps
    // that well inside the tolerance.
    let v: Vec<f64> = (0..400).map(|_| rng.uniform()).collect();
    let base = summarize(&v).unwrap();
    for k in [2usize, 4, 8] {
        let rep: Vec<f64> = v.iter().copied().cycle().take(v.len() * k).collect();
        let s = summarize(&rep).unwrap();
        let want = 1.0 / (k as f64).sqrt();
        assert!((s.se / base.se / want - 1.0).abs() < 0.02, "se k={k}");
        assert!((s.se_equivalent / base.se_equivalent / want - 1.0).abs() < 0.02, "iqr k={k}");
    }
}

#[test]
fn sweep_is_identical_across_execution_modes() {
    let (x, y) = gcka::generate_pair(&SynthSpec { n: 60, dx: 12, dy: 6, seed: 5, ..Default::default() }).unwrap();
    let seq = sweep(&x, &y, &SweepConfig { execution: Execution::Sequential, ..Default::default() }).unwrap();
    let par = sweep(&x, &y, &SweepConfig { execution: Execution::Parallel, ..Default::default() }).unwrap();
    assert_eq!(seq, par);
}

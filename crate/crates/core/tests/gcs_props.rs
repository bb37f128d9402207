use compressibility::gcs::{
    concentration_bounds, decode_l1, decode_ls, decode_oracle, decode_trivial, gaussian_encoder, BoundKind, Dims, L1Options, L1Stop,
};
use compressibility::metrics::top_k_support;
use compressibility::DistributionModel;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn sizes() -> impl Strategy<Value = (usize, usize)> {
    (16usize..80).prop_flat_map(|n| (2..n).prop_map(move |m| (m, n)))
}

fn laplace_signal(n: usize, seed: u64) -> DVector<f64> {
    DVector::from_vec(DistributionModel::laplace(1.0).unwrap().sample(n, seed).unwrap())
}

fn residual(phi: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (phi * x - y).norm() / y.norm()
}

/// Every `k`-subset of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn columns(phi: &DMatrix<f64>, s: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(phi.nrows(), s.len(), |i, j| phi[(i, s[j])])
}

/// Least ℓ1 norm over basic solutions `x_S = Φ_S⁻¹ y`, `|S| = m`; a linear
/// program attains its optimum at a vertex.
fn l1_by_vertices(phi: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let (m, n) = phi.shape();
    subsets(n, m)
        .into_iter()
        .filter_map(|s| columns(phi, &s).lu().solve(y))
        .map(|xs| xs.iter().map(|v| v.abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn decoders_are_feasible((m, n) in sizes(), seed in any::<u64>()) {
        let enc = gaussian_encoder(m, n, seed).unwrap();
        let x = laplace_signal(n, seed ^ 1);
        let y = enc.measure(&x);
        let ls = decode_ls(&enc, &y).unwrap();
        prop_assert!(residual(enc.matrix(), &ls, &y) <= 1e-6);
        let k = m / 2;
        // restricted LS cannot fit y; its residual is orthogonal to the chosen columns
        let support = top_k_support(x.as_slice(), k);
        let or = decode_oracle(&enc, &y, &support).unwrap();
        let r = enc.matrix() * &or - &y;
        prop_assert!((columns(enc.matrix(), &support).transpose() * r).norm() <= 1e-9 * y.norm());
        let (l1, diag) = decode_l1(&enc, &y, &L1Options::default()).unwrap();
        prop_assert!(diag.converged);
        prop_assert!(residual(enc.matrix(), &l1, &y) <= 1e-6);
        prop_assert_eq!(decode_trivial(n), DVector::zeros(n));
    }

    #[test]
    fn l1_and_ls_sandwich((m, n) in sizes(), seed in any::<u64>()) {
        let enc = gaussian_encoder(m, n, seed).unwrap();
        let y = enc.measure(&laplace_signal(n, seed ^ 2));
        let ls = decode_ls(&enc, &y).unwrap();
        let (l1, _) = decode_l1(&enc, &y, &L1Options::default()).unwrap();
        let tol = 1e-6 * y.norm();
        prop_assert!(l1.lp_norm(1) <= ls.lp_norm(1) + tol);
        prop_assert!(ls.norm() <= l1.norm() + tol);
    }

    #[test]
    fn ls_is_the_pseudoinverse((m, n) in sizes(), seed in any::<u64>()) {
        let enc = gaussian_encoder(m, n, seed).unwrap();
        let y = enc.measure(&laplace_signal(n, seed ^ 3));
        let pinv = enc.matrix().clone().pseudo_inverse(1e-12).unwrap();
        let want = &pinv * &y;
        prop_assert!((decode_ls(&enc, &y).unwrap() - &want).norm() <= 1e-8 * want.norm());
    }

    #[test]
    fn oracle_error_decomposes((m, n) in sizes(), k_frac in 0.0f64..0.9, seed in any::<u64>()) {
        let k = ((k_frac * m as f64) as usize).min(m - 1);
        let enc = gaussian_encoder(m, n, seed).unwrap();
        let x = laplace_signal(n, seed ^ 4);
        let y = enc.measure(&x);
        let support = top_k_support(x.as_slice(), k);
        let est = decode_oracle(&enc, &y, &support).unwrap();
        let err = (&est - &x).norm_squared();

        let off: Vec<usize> = (0..n).filter(|i| !support.contains(i)).collect();
        let x_off = DVector::from_iterator(off.len(), off.iter().map(|&i| x[i]));
        let leak = if k == 0 {
            0.0
        } else {
            let pinv = columns(enc.matrix(), &support).pseudo_inverse(1e-12).unwrap();
            (pinv * (columns(enc.matrix(), &off) * &x_off)).norm_squared()
        };
        let want = x_off.norm_squared() + leak;
        prop_assert!((err - want).abs() <= 1e-8 * want, "{err} vs {want}");
    }

    #[test]
    fn l1_matches_vertex_enumeration(n in 6usize..=12, m_frac in 0.3f64..0.7, seed in any::<u64>()) {
        let m = ((m_frac * n as f64) as usize).clamp(2, n - 1).min(6);
        let enc = gaussian_encoder(m, n, seed).unwrap();
        let y = enc.measure(&laplace_signal(n, seed ^ 5));
        let (l1, diag) = decode_l1(&enc, &y, &L1Options::default()).unwrap();
        prop_assert!(diag.converged);
        let best = l1_by_vertices(enc.matrix(), &y);
        prop_assert!((l1.lp_norm(1) - best).abs() <= 1e-7 * best, "{} vs {best}", l1.lp_norm(1));
    }

    #[test]
    fn oracle_matches_exhaustive_support_search(n in 6usize..=12, m in 4usize..=8, k_frac in 0.2f64..0.8, seed in any::<u64>()) {
        prop_assume!(m < n);
        let k = ((k_frac * m as f64) as usize).clamp(1, m - 1);
        let enc = gaussian_encoder(m, n, seed).unwrap();
        // k well separated entries over a tiny tail
        let mut x = laplace_signal(n, seed ^ 6) * 1e-4;
        for i in 0..k {
            x[(seed as usize % n + i) % n] = 3.0 + i as f64;
        }
        let y = enc.measure(&x);
        let phi = enc.matrix();
        let (best_support, best_est) = subsets(n, k)
            .into_iter()
            .map(|s| {
                let a = columns(phi, &s);
                let xs = a.clone().svd(true, true).solve(&y, 1e-12).unwrap();
                let r = (&y - &a * &xs).norm();
                (r, s, xs)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, s, xs)| (s, xs))
            .unwrap();
        let support = top_k_support(x.as_slice(), k);
        prop_assert_eq!(&support, &best_support);
        let est = decode_oracle(&enc, &y, &support).unwrap();
        for (j, &i) in support.iter().enumerate() {
            prop_assert!((est[i] - best_est[j]).abs() < 1e-9);
        }
    }
}

#[test]
fn exact_sparse_recovery_is_certified() {
    let (m, n, k) = (40, 100, 4);
    for seed in 0..10 {
        let enc = gaussian_encoder(m, n, seed).unwrap();
        let mut x = DVector::zeros(n);
        for i in 0..k {
            x[(i * 37 + seed as usize) % n] = if i % 2 == 0 { 1.0 } else { -2.0 };
        }
        let (est, diag) = decode_l1(&enc, &enc.measure(&x), &L1Options::default()).unwrap();
        assert_eq!(diag.stop, L1Stop::Certified);
        assert!((est - &x).norm() <= 1e-9 * x.norm());
    }
}

/// Fraction of trials outside the interval must not exceed the failure
/// bound beyond three binomial standard deviations.
fn assert_coverage(outside: usize, trials: usize, bound: f64) {
    let p = bound.min(1.0);
    let slack = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
    let rate = outside as f64 / trials as f64;
    assert!(rate <= p + slack, "miss rate {rate} exceeds bound {p} (+{slack})");
}

#[test]
fn ls_concentration_interval_covers() {
    let (n, m, trials) = (256, 128, 300);
    let b = concentration_bounds(BoundKind::Ls, Dims { n, m, k: 0 }, 0.3).unwrap();
    assert!(b.failure_prob < 0.2);
    let outside = (0..trials as u64)
        .filter(|&t| {
            let enc = gaussian_encoder(m, n, 10_000 + t).unwrap();
            let x = laplace_signal(n, t);
            let e = (decode_ls(&enc, &enc.measure(&x)).unwrap() - &x).norm_squared() / x.norm_squared();
            !b.contains(e)
        })
        .count();
    assert_coverage(outside, trials, b.failure_prob);
}

#[test]
fn oracle_concentration_interval_covers() {
    let (n, m, k, trials) = (256, 128, 20, 300);
    let b = concentration_bounds(BoundKind::Oracle, Dims { n, m, k }, 0.6).unwrap();
    assert!(b.failure_prob < 0.5);
    let outside = (0..trials as u64)
        .filter(|&t| {
            let enc = gaussian_encoder(m, n, 20_000 + t).unwrap();
            let x = laplace_signal(n, t);
            let support = top_k_support(x.as_slice(), k);
            let tail: f64 = (0..n).filter(|i| !support.contains(i)).map(|i| x[i] * x[i]).sum();
            let e = (decode_oracle(&enc, &enc.measure(&x), &support).unwrap() - &x).norm_squared() / tail;
            !b.contains(e)
        })
        .count();
    assert_coverage(outside, trials, b.failure_prob);
}

#[test]
fn encoder_entries_have_variance_one_over_m() {
    let (m, n) = (200, 400);
    let enc = gaussian_encoder(m, n, 3).unwrap();
    let v = enc.matrix().iter().map(|a| a * a).sum::<f64>() / (m * n) as f64;
    assert!((v * m as f64 - 1.0).abs() < 0.02);
    assert_eq!(enc.matrix(), gaussian_encoder(m, n, 3).unwrap().matrix());
}

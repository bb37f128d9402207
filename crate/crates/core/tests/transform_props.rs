use compressibility::transform::{
    average_sorted_magnitudes, dct2, dct_matrix, dwt2_db4, expected_order_statistics, idct2, idwt2_db4, read_pgm, write_pgm,
    GrayImage, PatchSet, TransformKind,
};
use compressibility::DistributionModel;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn patch() -> impl Strategy<Value = DMatrix<f64>> {
    prop_oneof![Just(4usize), Just(8), Just(16), Just(32)]
        .prop_flat_map(|n| prop::collection::vec(-100.0f64..100.0, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v)))
}

/// Textbook DCT-II, straight from the cosine sum.
fn naive_dct2(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let a = |k: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    let c = |k: usize, i: usize| (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
    DMatrix::from_fn(n, n, |u, v| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[(i, j)] * c(u, i) * c(v, j);
            }
        }
        a(u) * a(v) * s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn transforms_preserve_energy(p in patch()) {
        let e = p.norm_squared();
        for t in [TransformKind::Dct, TransformKind::Db4] {
            let c = t.apply(&p).unwrap();
            prop_assert!((c.norm_squared() - e).abs() <= 1e-10 * e.max(1.0), "{t}");
        }
    }

    #[test]
    fn transforms_invert(p in patch()) {
        let scale = p.norm().max(1.0);
        prop_assert!((idct2(&dct2(&p).unwrap()).unwrap() - &p).norm() <= 1e-12 * scale);
        prop_assert!((idwt2_db4(&dwt2_db4(&p, None).unwrap(), None).unwrap() - &p).norm() <= 1e-12 * scale);
        prop_assert!((idwt2_db4(&dwt2_db4(&p, Some(1)).unwrap(), Some(1)).unwrap() - &p).norm() <= 1e-12 * scale);
    }

    #[test]
    fn dct_matches_cosine_sum(p in patch()) {
        prop_assume!(p.nrows() <= 16);
        prop_assert!((dct2(&p).unwrap() - naive_dct2(&p)).norm() <= 1e-10 * p.norm().max(1.0));
    }

    #[test]
    fn curves_are_nonincreasing(seed in any::<u64>(), t in prop_oneof![Just(None), Just(Some(TransformKind::Dct)), Just(Some(TransformKind::Db4))]) {
        let set = PatchSet::synthetic(&DistributionModel::laplace(1.0).unwrap(), 8, 20, seed).unwrap();
        let c = average_sorted_magnitudes(&set, t).unwrap();
        prop_assert_eq!(c.len(), 64);
        prop_assert!(c.values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn dct_matrix_is_orthogonal() {
    for n in [2, 5, 8, 16] {
        let c = dct_matrix(n);
        assert!((&c * c.transpose() - DMatrix::identity(n, n)).norm() < 1e-13);
    }
}

#[test]
fn synthetic_curve_approaches_quantiles() {
    let d = DistributionModel::laplace(1.0).unwrap();
    let side = 16;
    let n = side * side;
    let set = PatchSet::synthetic(&d, side, 1000, 77).unwrap();
    let got = average_sorted_magnitudes(&set, None).unwrap();
    let want = expected_order_statistics(&d, n).unwrap();
    for rank in [n / 4, n / 2, 3 * n / 4] {
        let (g, w) = (got.values[rank - 1], want.values[rank - 1]);
        assert!(((g - w) / w).abs() < 0.02, "rank {rank}: {g} vs {w}");
    }
}

#[test]
fn image_patches_roundtrip_through_pgm() {
    let dir = std::env::temp_dir().join(format!("cs-pgm-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (w, h) = (40, 24);
    let data: Vec<f64> = (0..w * h).map(|i| ((i * 37) % 256) as f64 / 255.0).collect();
    let img = GrayImage { width: w, height: h, data };
    let path = dir.join("a.pgm");
    write_pgm(&path, &img).unwrap();
    let back = read_pgm(&path).unwrap();
    assert_eq!((back.width, back.height), (w, h));
    assert!(back.data.iter().zip(&img.data).all(|(a, b)| (a - b).abs() < 1e-12));

    let set = PatchSet::sample(&[back], 8, 30, 5).unwrap();
    assert_eq!(set.len(), 30);
    for p in set.patches() {
        let e = p.norm_squared();
        assert!((TransformKind::Db4.apply(p).unwrap().norm_squared() - e).abs() <= 1e-10 * e.max(1.0));
    }
    assert_eq!(set, PatchSet::sample(&[read_pgm(&path).unwrap()], 8, 30, 5).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

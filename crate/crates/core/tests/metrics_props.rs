use compressibility::metrics::{
    critical_undersampling, empirical_relative_kterm_error, fourth_moment_criterion, g_fun, g_fun_laplace_closed, moment_rule,
    Comparison, CriticalStatus, GFunctional, HFunctional, MomentVerdict,
};
use compressibility::DistributionModel;
use proptest::prelude::*;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

fn any_dist() -> impl Strategy<Value = DistributionModel> {
    prop_oneof![
        (0.1f64..10.0).prop_map(|l| DistributionModel::laplace(l).unwrap()),
        (0.2f64..4.0, 0.1f64..10.0).prop_map(|(t, l)| DistributionModel::generalized_gaussian(t, l).unwrap()),
        (0.5f64..3.0, 1.3f64..8.0, 0.1f64..10.0).prop_map(|(t, s, l)| DistributionModel::tau_s(t, s, l).unwrap()),
        Just(DistributionModel::pzero()),
    ]
}

/// Shapes with a finite second moment.
fn finite_variance() -> impl Strategy<Value = DistributionModel> {
    prop_oneof![
        Just(DistributionModel::laplace(1.0).unwrap()),
        (0.4f64..4.0).prop_map(|t| DistributionModel::generalized_gaussian(t, 1.0).unwrap()),
        (0.8f64..3.0, 4.0f64..9.0).prop_map(|(t, s)| DistributionModel::tau_s(t, s, 1.0).unwrap()),
    ]
}

// L = ln(1/κ); independent of the library's closed form
fn laplace_g(q: u8, k: f64) -> f64 {
    let l = -k.ln();
    match q {
        1 => 1.0 - k * (1.0 + l),
        _ => 1.0 - k * (1.0 + l + l * l / 2.0),
    }
}

/// Truncated moment ratio through incomplete gamma/beta functions.
fn reference_g(d: &DistributionModel, q: f64, kappa: f64) -> Option<f64> {
    let z = d.upper_quantile(kappa).unwrap() / d.scale();
    match (d.tau_opt(), d.s_opt()) {
        (Some(tau), None) => Some(gamma_lr((q + 1.0) / tau, z.powf(tau))),
        (Some(tau), Some(s)) if s - 1.0 > q => {
            let w = z.powf(tau);
            Some(beta_reg((q + 1.0) / tau, (s - 1.0 - q) / tau, w / (1.0 + w)))
        }
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn g_is_nonincreasing(d in any_dist(), q in prop_oneof![Just(1.0), Just(2.0)], a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = GFunctional::new(&d, q).unwrap();
        let (k1, k2) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(k1 > 0.0 || g.bounded());
        let (g1, g2) = (g.value(k1).unwrap(), g.value(k2).unwrap());
        prop_assert!(g1 >= g2 - 1e-12, "{d}, q {q}: G({k1}) = {g1} < G({k2}) = {g2}");
        prop_assert!((0.0..=1.0).contains(&g1));
    }

    #[test]
    fn g_matches_incomplete_functions(d in any_dist(), q in prop_oneof![Just(1.0), Just(2.0)], kappa in 0.001f64..0.999) {
        if let Some(r) = reference_g(&d, q, kappa) {
            let g = g_fun(&d, q, kappa).unwrap().g;
            prop_assert!((g - r).abs() < 1e-7, "{d}, q {q}, kappa {kappa}: {g} vs {r}");
        }
    }

    #[test]
    fn h_at_most_g_of_delta_squared(d in finite_variance(), delta in 0.02f64..0.98) {
        let h = HFunctional::new(&d).unwrap();
        let hv = h.eval(delta).unwrap().value;
        let bound = h.g2().value(delta * delta).unwrap() / (1.0 - delta);
        prop_assert!(hv <= bound + 1e-9, "{d}, delta {delta}: H {hv} > {bound}");
    }

    #[test]
    fn g_is_scale_invariant(lambda in 0.05f64..20.0, kappa in 0.01f64..0.99) {
        let a = DistributionModel::tau_s(1.5, 4.0, 1.0).unwrap();
        let b = a.with_scale(lambda).unwrap();
        let (ga, gb) = (g_fun(&a, 2.0, kappa).unwrap().g, g_fun(&b, 2.0, kappa).unwrap().g);
        prop_assert!((ga - gb).abs() < 1e-9);
    }

    #[test]
    fn kterm_error_equals_brute_force(
        xs in prop::collection::vec(-64i32..=64, 1..=12),
        k_frac in 0.0f64..1.0,
        q in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        // multiples of 1/8: every partial sum is exact in f64
        let x: Vec<f64> = xs.iter().map(|&v| v as f64 / 8.0).collect();
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let k = ((k_frac * x.len() as f64) as usize).min(x.len());
        let got = empirical_relative_kterm_error(&x, k, q).unwrap();
        let (best, total) = brute_force_sigma(&x, k, q);
        prop_assert_eq!(got.sigma_k, best.powf(1.0 / q));
        prop_assert_eq!(got.relative, (best / total).powf(1.0 / q));
    }

    #[test]
    fn kterm_error_close_to_brute_force_on_reals(
        x in prop::collection::vec(-10.0f64..10.0, 1..=12),
        k_frac in 0.0f64..1.0,
        q in 0.5f64..3.0,
    ) {
        let k = ((k_frac * x.len() as f64) as usize).min(x.len());
        let got = empirical_relative_kterm_error(&x, k, q).unwrap();
        let (best, total) = brute_force_sigma(&x, k, q);
        prop_assert!((got.relative - (best / total).powf(1.0 / q)).abs() < 1e-12);
    }
}

/// Smallest `Σ_{i∉S} |x_i|^q` over every support `S` with `|S| = k`, and `‖x‖_q^q`.
fn brute_force_sigma(x: &[f64], k: usize, q: f64) -> (f64, f64) {
    let n = x.len();
    let pow = |v: f64| if q == 2.0 { v * v } else if q == 1.0 { v.abs() } else { v.abs().powf(q) };
    let total: f64 = x.iter().map(|&v| pow(v)).sum();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let tail: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| pow(x[i])).sum();
        best = best.min(tail);
    }
    (best, total)
}

#[test]
fn laplace_closed_form_matches_quadrature() {
    let d = DistributionModel::laplace(1.0).unwrap();
    for q in [1u8, 2] {
        let g = GFunctional::new(&d, q as f64).unwrap();
        for i in 1..=50 {
            let k = i as f64 / 51.0;
            let closed = g_fun_laplace_closed(q as f64, k).unwrap();
            assert!((closed - laplace_g(q, k)).abs() < 1e-14);
            assert!((closed - g.eval_quadrature(k).unwrap()).abs() < 1e-7, "q {q}, kappa {k}");
        }
    }
}

#[test]
fn boundary_density_identities() {
    let d = DistributionModel::pzero();
    let g = GFunctional::new(&d, 2.0).unwrap();
    for i in 1..=50 {
        let k = i as f64 / 51.0;
        assert!((g.value(k).unwrap() - (1.0 - k.sqrt()).powi(2)).abs() < 1e-6);
    }
    assert!(fourth_moment_criterion(&d, &[0.1, 0.4]).unwrap().iter().all(|r| r.cmp == Comparison::Equal));
    let h = HFunctional::new(&d).unwrap();
    for i in 1..=20 {
        let delta = i as f64 / 21.0;
        assert!((h.eval(delta).unwrap().value - (1.0 - delta)).abs() < 1e-4);
    }
}

#[test]
fn h_stays_above_ls_below_delta0() {
    let dists = [
        DistributionModel::laplace(1.0).unwrap(),
        DistributionModel::generalized_gaussian(0.7, 1.0).unwrap(),
        DistributionModel::generalized_gaussian(1.5, 1.0).unwrap(),
        DistributionModel::generalized_gaussian(2.0, 1.0).unwrap(),
    ];
    for d in &dists {
        assert!(moment_rule(d).unwrap().fourth_moment_finite);
        let c = critical_undersampling(d).unwrap();
        assert_eq!(c.status, CriticalStatus::Found, "{d}");
        let delta0 = c.delta0.unwrap();
        let h = HFunctional::new(d).unwrap();
        let below: Vec<f64> = (1..=30).map(|i| delta0 * i as f64 / 31.0).collect();
        let region_holds = fourth_moment_criterion(d, &below).unwrap().iter().all(|r| r.cmp != Comparison::Below);
        if !region_holds {
            continue;
        }
        for &delta in &below {
            let v = h.eval(delta).unwrap().value;
            assert!(v >= 1.0 - delta - 1e-6, "{d}: H({delta}) = {v}");
        }
    }
}

#[test]
fn moment_verdicts() {
    let verdict = |s: &str| moment_rule(&s.parse().unwrap()).unwrap().verdict;
    assert_eq!(verdict("ts:1:2.69"), MomentVerdict::CompressibleInfiniteVariance);
    assert_eq!(verdict("ts:1:4"), MomentVerdict::Intermediate);
    assert_eq!(verdict("ts:1:6"), MomentVerdict::IncompressibleFiniteFourth);
    assert_eq!(verdict("ggd:0.3"), MomentVerdict::IncompressibleFiniteFourth);
    assert_eq!(verdict("pzero"), MomentVerdict::Intermediate);
}

#[test]
fn infinite_variance_gives_zero_h() {
    let d = DistributionModel::tau_s(1.0, 2.5, 1.0).unwrap();
    let c = critical_undersampling(&d).unwrap();
    assert_eq!(c.status, CriticalStatus::AlwaysCompressible);
    assert_eq!(HFunctional::new(&d).unwrap().eval(0.4).unwrap().value, 0.0);
}

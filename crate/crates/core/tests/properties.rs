mod common;

use choquet::table::{parse_quantile_table, write_quantile_table, DEFAULT_NODES};
use choquet::{
    differential_entropy, maximize, phi, phi_quantile, phi_survival, quantile_l2_distance, ConvexOrder, Distortion,
    Distribution, LqModel, MvConstraint,
};
use common::{close, distortion_from, law_from, lerp, mean_preserving_spread, U};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..1.0f64, U)
}

fn pair() -> impl Strategy<Value = (Distortion, Distribution)> {
    (0..10usize, unit(), 0..5usize, unit()).prop_map(|(dc, du, lc, lu)| (distortion_from(dc, &du), law_from(lc, &lu)))
}

fn catalog_distortion() -> impl Strategy<Value = Distortion> {
    (0..10usize, unit()).prop_map(|(c, u)| distortion_from(c, &u))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn location_invariance((d, x) in pair(), c in -10.0..10.0f64) {
        let a = phi(&d, &x).unwrap();
        let b = phi(&d, &x.affine(c, 1.0).unwrap()).unwrap();
        prop_assert!(close(a, b, 1e-8), "{a} vs {b}");
    }

    #[test]
    fn scale_homogeneity((d, x) in pair(), lam in 0.1..10.0f64) {
        let a = phi(&d, &x).unwrap();
        let b = phi(&d, &x.affine(0.0, lam).unwrap()).unwrap();
        prop_assert!(close(lam * a, b, 1e-8), "{} vs {b}", lam * a);
    }

    #[test]
    fn non_negativity((d, x) in pair()) {
        prop_assert!(phi(&d, &x).unwrap() >= -1e-8);
    }

    #[test]
    fn constants_carry_no_randomness(d in catalog_distortion(), c in -10.0..10.0f64) {
        prop_assert!(phi(&d, &Distribution::dirac(c)).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn comonotone_additivity((d, x) in pair(), yc in 0..5usize, yu in unit()) {
        let y = law_from(yc, &yu);
        let sum = x.quantile_add(&y);
        let lhs = phi(&d, &sum).unwrap();
        let rhs = phi(&d, &x).unwrap() + phi(&d, &y).unwrap();
        prop_assert!(close(lhs, rhs, 1e-8), "{lhs} vs {rhs}");
        prop_assert!(close(sum.mean(), x.mean() + y.mean(), 1e-10));
    }

    #[test]
    fn convex_order_consistency(d in catalog_distortion(), xu in unit(), su in unit()) {
        let x = law_from(0, &xu);
        let y = mean_preserving_spread(&x, &su);
        prop_assert_eq!(x.convex_order_leq(&y, 64), ConvexOrder::Yes);
        prop_assert!(phi(&d, &x).unwrap() <= phi(&d, &y).unwrap() + 1e-8);
    }

    #[test]
    fn tail_mean_is_upper_es(xc in 0..5usize, xu in unit(), eps in 0.01..0.99f64) {
        let x = law_from(xc, &xu);
        let a = x.tail_mean_eps(eps).unwrap();
        let b = x.es(1.0 - eps).unwrap();
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
        prop_assert!(x.es_left(eps).unwrap() <= x.mean() + 1e-10);
        prop_assert!(a >= x.mean() - 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quantile_and_survival_routes_agree((d, x) in pair()) {
        let a = phi_quantile(&d, &x).unwrap().value;
        let b = phi_survival(&d, &x).unwrap().value;
        prop_assert!(close(a, b, 1e-7), "{a} vs {b}");
    }

    #[test]
    fn maximizer_is_location_scale_family(d in catalog_distortion(), m in -5.0..5.0f64, s in 0.1..5.0f64) {
        let unit = maximize(&d, MvConstraint::new(0.0, 1.0).unwrap()).unwrap();
        let opt = maximize(&d, MvConstraint::new(m, s).unwrap()).unwrap();
        let moved = unit.distribution.affine(m, s).unwrap();
        prop_assert!(quantile_l2_distance(&opt.distribution, &moved) < 1e-10);
        prop_assert!(close(opt.distribution.mean(), m, 1e-9));
        prop_assert!(close(opt.distribution.std_dev(), s, 1e-9));
        prop_assert!(close(phi(&d, &opt.distribution).unwrap(), opt.max_value, 1e-8));
    }

    #[test]
    fn converse_round_trip(xc in 0..5usize, xu in unit()) {
        let x = law_from(xc, &xu);
        let d = Distortion::from_distribution(&x, x.mean()).unwrap();
        let back = maximize(&d, MvConstraint::new(x.mean(), x.std_dev()).unwrap()).unwrap();
        let gap = quantile_l2_distance(&back.distribution, &x);
        prop_assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn envelope_is_idempotent_and_dominates(u in unit(), bump in proptest::collection::vec(-1.0..1.0f64, 4)) {
        let base = common::concave_piecewise(&u);
        let choquet::DistortionKind::PiecewiseLinear { p, h } = base.kind().clone() else { unreachable!() };
        let h: Vec<f64> = h.iter().enumerate()
            .map(|(i, &v)| if i == 0 || i + 1 == h.len() { v } else { v + bump[i % 4] })
            .collect();
        let d = Distortion::piecewise_linear(p, h).unwrap();
        let env = d.concave_envelope();
        prop_assert_eq!(env.concave_envelope(), env.clone());
        prop_assert!(env.validate(256).concave_ok);
        for k in 0..=200 {
            let p = k as f64 / 200.0;
            prop_assert!(env.eval_h(p).unwrap() >= d.eval_h(p).unwrap() - 1e-12);
        }
    }

    #[test]
    fn hprime_law_is_centered_with_norm_variance(d in catalog_distortion()) {
        let law = d.hprime_law().unwrap();
        prop_assert!(law.mean().abs() < 1e-9);
        prop_assert!(close(law.variance(), d.l2_norm_sq(), 1e-8));
    }

    #[test]
    fn scale_homogeneity_fails_for_entropy(xc in 1..4usize, xu in unit(), lam in 0.1..10.0f64) {
        let x = law_from(xc, &xu);
        let a = differential_entropy(&x).unwrap();
        let b = differential_entropy(&x.affine(0.0, lam).unwrap()).unwrap();
        prop_assert!(close(b - a, lam.ln(), 1e-8));
    }
}

fn random_model(u: &[f64]) -> LqModel {
    let mut m = LqModel {
        a: lerp(u[0], -2.0, 2.0),
        b: lerp(u[1], -2.0, 2.0),
        c: lerp(u[2], -1.0, 1.0),
        d: lerp(u[3], -1.0, 1.0),
        m: lerp(u[4], 0.0, 3.0),
        r: lerp(u[5], -1.0, 1.0),
        n: lerp(u[6], 0.2, 3.0),
        p: lerp(u[7], -1.0, 1.0),
        l: lerp(u[8], -1.0, 1.0),
        rho: 1.0,
        lambda: lerp(u[9], 0.1, 2.0),
    };
    if m.m * m.n <= m.r * m.r {
        m.m = (m.r * m.r + 0.1) / m.n;
    }
    m.rho = m.rho_threshold().max(0.0) + 0.5;
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn riccati_solution_is_stabilizing(u in unit()) {
        let m = random_model(&u);
        prop_assert!(m.check_wellposed().all_ok());
        let d = Distortion::gini();
        let sol = m.solve(&d).unwrap();
        prop_assert!(sol.k2 < 0.0);
        let res = m.riccati_residuals(&sol).unwrap();
        prop_assert!(res.r2.abs() < 1e-9 && res.r1.abs() < 1e-9 && res.r0.abs() < 1e-9);
        for x in [-3.0, 0.0, 2.5] {
            prop_assert!(m.hjb_residual(&sol, x).abs() < 1e-8 * (1.0 + x * x));
        }
    }

    #[test]
    fn policy_equals_static_maximizer(u in unit(), dc in 0..9usize, du in unit(), x in -5.0..5.0f64) {
        let m = random_model(&u);
        let d = distortion_from(dc, &du);
        let sol = m.solve(&d).unwrap();
        let (mu, var) = m.policy_moments(&sol, x);
        let law = m.policy(&sol, &d, x).unwrap();
        let opt = maximize(&d, MvConstraint::new(mu, var.sqrt()).unwrap()).unwrap();
        prop_assert!(quantile_l2_distance(&law, &opt.distribution) < 1e-8 * (1.0 + mu.abs()));
    }

    #[test]
    fn temperature_scales_variance_only(u in unit(), lam in 0.1..5.0f64, x in -3.0..3.0f64) {
        let m = random_model(&u);
        let hot = LqModel { lambda: lam * m.lambda, ..m };
        let d = Distortion::cre();
        let (s1, s2) = (m.solve(&d).unwrap(), hot.solve(&d).unwrap());
        let (mu1, v1) = m.policy_moments(&s1, x);
        let (mu2, v2) = hot.policy_moments(&s2, x);
        prop_assert!(close(mu1, mu2, 1e-12));
        prop_assert!(close(v2, lam * lam * v1, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn emitted_policy_table_reproduces_phi(u in unit(), dc in 0..9usize, du in unit(), x in -5.0..5.0f64) {
        let m = random_model(&u);
        let d = distortion_from(dc, &du);
        let sol = m.solve(&d).unwrap();
        let law = m.policy(&sol, &d, x).unwrap();
        let mut buf = Vec::new();
        write_quantile_table(&mut buf, &law, DEFAULT_NODES).unwrap();
        let back: Distribution = parse_quantile_table(buf.as_slice()).unwrap();
        let (a, b) = (phi(&d, &law).unwrap(), phi(&d, &back).unwrap());
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

use g2glue::eguchi_hanson::{metric_h, omega_i, RadialProfile};
use g2glue::fibre::{OuterBoundary, RadialGrid, RadialOperator};
use g2glue::forms::{binomial, KForm, ModelSpace};
use g2glue::g2::{phi0, pulled_back_phi0, G2Structure};
use g2glue::glue::{lp_exponent, Affine, Cutoff};
use g2glue::linalg::Mat;
use g2glue::scalar::{q, Rational, Scalar};
use g2glue::topology::{kunneth, resolve_betti, AffineAction, AffineMap, BettiVector};
use proptest::prelude::*;

fn rational_form(dim: usize, deg: usize) -> impl Strategy<Value = KForm<Rational>> {
    prop::collection::vec(-5i64..=5, binomial(dim, deg))
        .prop_map(move |c| KForm::from_coeffs(dim, deg, c.into_iter().map(Rational::from_i64).collect()).unwrap())
}

/// Metric AᵀA with A unit upper triangular plus a diagonal of positive integers, so √det is rational.
fn rational_space(dim: usize) -> impl Strategy<Value = ModelSpace<Rational>> {
    (prop::collection::vec(-2i64..=2, dim * dim), prop::collection::vec(1i64..=3, dim)).prop_map(move |(off, diag)| {
        let a = Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                Rational::from_i64(diag[i])
            } else if i < j {
                Rational::from_i64(off[i * dim + j])
            } else {
                Rational::from_i64(0)
            }
        });
        ModelSpace::new(a.transpose().mul(&a), 1).unwrap()
    })
}

fn dim_and_degree() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just(3usize), Just(4usize), Just(7usize)].prop_flat_map(|n| (Just(n), 0..=n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hodge_is_an_isometry((a, b) in dim_and_degree().prop_flat_map(|(n, k)| (rational_form(n, k), rational_form(n, k)))) {
        let space = ModelSpace::<Rational>::euclidean(a.dim());
        let (sa, sb) = (space.hodge(&a).unwrap(), space.hodge(&b).unwrap());
        prop_assert_eq!(space.inner(&a, &b).unwrap(), space.inner(&sa, &sb).unwrap());
    }

    #[test]
    fn hodge_isometry_general_metric(space in rational_space(4), a in rational_form(4, 2), b in rational_form(4, 2)) {
        let (sa, sb) = (space.hodge(&a).unwrap(), space.hodge(&b).unwrap());
        prop_assert_eq!(space.inner(&a, &b).unwrap(), space.inner(&sa, &sb).unwrap());
    }

    #[test]
    fn wedge_with_star_is_inner_product(space in rational_space(4), k in 0usize..=4, seed in prop::collection::vec(-4i64..=4, 12)) {
        let len = binomial(4, k);
        let a = KForm::from_coeffs(4, k, seed[..len].iter().map(|x| Rational::from_i64(*x)).collect()).unwrap();
        let b = KForm::from_coeffs(4, k, seed[6..6 + len].iter().map(|x| Rational::from_i64(*x)).collect()).unwrap();
        let lhs = a.wedge(&space.hodge(&b).unwrap()).unwrap();
        let rhs = space.volume().scale(&space.inner(&a, &b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn wedge_is_graded_commutative(a in rational_form(7, 2), b in rational_form(7, 3), c in rational_form(7, 1)) {
        prop_assert_eq!(a.wedge(&b).unwrap(), b.wedge(&a).unwrap());
        prop_assert_eq!(b.wedge(&c).unwrap(), c.wedge(&b).unwrap().scale(&q(-1, 1)));
        prop_assert_eq!(a.wedge(&b).unwrap().wedge(&c).unwrap(), a.wedge(&b.wedge(&c).unwrap()).unwrap());
    }

    #[test]
    fn pullback_commutes_with_wedge(a in rational_form(4, 1), b in rational_form(4, 2), m in prop::collection::vec(-3i64..=3, 16)) {
        let map = Mat::from_fn(4, 4, |i, j| Rational::from_i64(m[i * 4 + j]));
        let lhs = a.wedge(&b).unwrap().pullback(&map).unwrap();
        let rhs = a.pullback(&map).unwrap().wedge(&b.pullback(&map).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn g2_projections_are_complete(xi in rational_form(7, 3), eta in rational_form(7, 2)) {
        let st = G2Structure::<Rational>::standard();
        for form in [&xi, &eta] {
            let parts = st.project(form).unwrap();
            let sum = parts.iter().fold(KForm::zero(7, form.deg()), |acc, (_, p)| &acc + p);
            prop_assert_eq!(&sum, form);
            for (_, p) in &parts {
                let again = st.project(p).unwrap();
                let nonzero = again.iter().filter(|(_, x)| !x.is_zero()).count();
                prop_assert!(nonzero <= 1);
            }
        }
    }

    #[test]
    fn metric_of_pulled_back_model(m in prop::collection::vec(-0.3f64..0.3, 49)) {
        let a = Mat::from_fn(7, 7, |i, j| if i == j { 1.0 } else { 0.0 } + m[i * 7 + j]);
        let st = G2Structure::new(pulled_back_phi0(&a).unwrap()).unwrap();
        let g = st.metric();
        prop_assert!(g.sub(&a.transpose().mul(&a)).max_abs() < 1e-9);
        prop_assert!(g.sub(&g.transpose()).max_abs() < 1e-12);
    }

    #[test]
    fn eguchi_hanson_parity(y in prop::collection::vec(0.2f64..3.0, 4), signs in prop::collection::vec(any::<bool>(), 4), a in 0.1f64..4.0) {
        let y: Vec<f64> = y.iter().zip(&signs).map(|(v, s)| if *s { *v } else { -*v }).collect();
        let minus: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert_eq!(metric_h(a, &y).unwrap(), metric_h(a, &minus).unwrap());
        prop_assert_eq!(omega_i(a, &y).unwrap(), omega_i(a, &minus).unwrap());
    }

    #[test]
    fn eguchi_hanson_scaling(r in 0.01f64..100.0, a in 0.1f64..10.0) {
        let pa = RadialProfile::new(a).unwrap();
        let p1 = RadialProfile::new(1.0).unwrap();
        let lhs = pa.f(r).unwrap();
        let rhs = a * p1.f(r / a.sqrt()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn fibre_operator_is_symmetric(u in prop::collection::vec(-1.0f64..1.0, 64), v in prop::collection::vec(-1.0f64..1.0, 64)) {
        let grid = RadialGrid::log_spaced(1e-2, 1e2, 64).unwrap();
        let op = RadialOperator::eguchi_hanson(1.0, grid, OuterBoundary::DecayRobin).unwrap();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let (au, av) = (op.stiffness_apply(&u), op.stiffness_apply(&v));
        let scale = dot(&au, &au).sqrt() * dot(&v, &v).sqrt() + 1.0;
        prop_assert!((dot(&au, &v) - dot(&u, &av)).abs() < 1e-10 * scale);
        prop_assert!(dot(&au, &u) > 0.0);
    }

    #[test]
    fn cutoff_stays_in_unit_interval(x in -1.0f64..4.0) {
        let c = Cutoff;
        let v = c.value(x);
        prop_assert!((0.0..=1.0).contains(&v));
        if x <= 1.0 { prop_assert_eq!(v, 0.0); }
        if x >= 2.0 { prop_assert_eq!(v, 1.0); }
    }

    #[test]
    fn lp_exponent_of_power_law(a in -4i64..4, b in -8i64..-5, p in prop::sample::select(vec![2u32, 14])) {
        // a tail integral over [1, ∞) converges when p·b + 4 < 0 and is governed by the lower end
        let ea = Affine::constant(Rational::from_i64(a));
        let eb = Affine::constant(Rational::from_i64(b));
        let ends = (Rational::from_i64(0), Rational::from_i64(-1));
        let e = lp_exponent(&ea, &eb, p, Some(&ends)).unwrap();
        prop_assert_eq!(e.c, Rational::from_i64(a) + q(4, p as i64));
    }

    #[test]
    fn kunneth_commutative_associative(a in betti(3), b in betti(2), c in betti(4)) {
        prop_assert_eq!(kunneth(&a, &b), kunneth(&b, &a));
        prop_assert_eq!(kunneth(&kunneth(&a, &b), &c), kunneth(&a, &kunneth(&b, &c)));
    }

    #[test]
    fn resolution_keeps_duality(q in dual_betti(7), l in dual_betti(3)) {
        let n = resolve_betti(&q, &l, None).unwrap();
        prop_assert!(n.poincare_dual());
    }

    #[test]
    fn sign_actions_have_integral_invariants(signs in prop::collection::vec(prop::collection::vec(prop::sample::select(vec![-1i64, 1]), 5), 1..4)) {
        let gens: Vec<AffineMap> = signs
            .iter()
            .map(|s| AffineMap::signed(s, &vec![Rational::from_i64(0); 5]).unwrap())
            .collect();
        let action = AffineAction::generate(&gens).unwrap();
        prop_assert!(action.order().is_power_of_two());
        for k in 0..=5 {
            let p = action.averaged_projector(k);
            prop_assert_eq!(&p.mul(&p), &p);
            let b = action.invariant_betti(k).unwrap();
            prop_assert_eq!(Rational::from_i64(b), p.trace());
            prop_assert_eq!(b as usize, p.rank());
        }
    }
}

fn betti(len: usize) -> impl Strategy<Value = BettiVector> {
    prop::collection::vec(0i64..20, len).prop_map(|v| BettiVector::new(v).unwrap())
}

fn dual_betti(dim: usize) -> impl Strategy<Value = BettiVector> {
    prop::collection::vec(0i64..20, dim / 2 + 1).prop_map(move |half| {
        let v: Vec<i64> = (0..=dim).map(|k| half[k.min(dim - k)]).collect();
        BettiVector::new(v).unwrap()
    })
}

#[test]
fn trivial_action_gives_binomials() {
    let action = AffineAction::generate(&[AffineMap::identity(7)]).unwrap();
    for k in 0..=7 {
        assert_eq!(action.invariant_betti(k).unwrap() as usize, binomial(7, k));
    }
    assert!(phi0::<Rational>().pullback(&Mat::identity(7)).unwrap() == phi0());
}

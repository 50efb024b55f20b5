use bgk_wigner::ring::{parse_expr, Coefficient, RingElem, Trig};
use bgk_wigner::series::{build_series, rhs, BuildOptions, Convention};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

const WAVENUMBERS: [&str; 6] = ["1", "2", "1/2", "pi", "2*pi", "3/pi"];

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn nonzero() -> impl Strategy<Value = i64> {
    (-9i64..=9).prop_filter("nonzero", |n| *n != 0)
}

fn ring_elem() -> impl Strategy<Value = RingElem> {
    prop::collection::vec((nonzero(), 1i64..=6, -1i32..=1, 0u32..=4, 0usize..3, 0usize..6), 1..4)
        .prop_map(|terms| {
            terms.into_iter().fold(RingElem::zero(), |acc, (n, d, e, xpow, t, k)| {
                let trig = [Trig::None, Trig::Sin, Trig::Cos][t];
                let k = (trig != Trig::None).then(|| parse_expr(WAVENUMBERS[k]).unwrap().constant_part());
                let c = Coefficient::pi_term(rational(n, d), e);
                &acc + &RingElem::basis(c, xpow, trig, k)
            })
        })
}

fn polynomial_potential() -> impl Strategy<Value = RingElem> {
    prop::collection::vec((-6i64..=6, 1i64..=4), 5).prop_map(|cs| {
        RingElem::polynomial(cs.into_iter().enumerate().map(|(i, (n, d))| (i as u32, rational(n, d))))
    })
}

/// Sum of absolute monomial values, the natural roundoff scale for `eval`.
fn magnitude(e: &RingElem, x: f64) -> f64 {
    e.terms()
        .map(|(m, c)| RingElem::term(c.clone(), m.clone()).eval(x).abs())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_undoes_antiderivative(e in ring_elem()) {
        prop_assert_eq!(e.int_dx().ddx(), e);
    }

    #[test]
    fn antiderivative_undoes_derivative_up_to_constant(e in ring_elem()) {
        let constant = RingElem::constant(e.constant_part());
        prop_assert_eq!(e.ddx().int_dx(), &e - &constant);
    }

    #[test]
    fn ring_axioms(a in ring_elem(), b in ring_elem(), c in ring_elem()) {
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn print_parse_round_trip(e in ring_elem()) {
        let printed = e.to_string();
        let back = parse_expr(&printed).unwrap();
        prop_assert_eq!(back.to_string(), printed);
        prop_assert_eq!(back, e);
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in ring_elem(), b in ring_elem(), x in -1.5f64..1.5) {
        let tol = 1e-12 * (magnitude(&a, x) + magnitude(&b, x)).max(magnitude(&a, x) * magnitude(&b, x)).max(1.0);
        prop_assert!(((&a + &b).eval(x) - (a.eval(x) + b.eval(x))).abs() <= tol);
        prop_assert!(((&a * &b).eval(x) - a.eval(x) * b.eval(x)).abs() <= tol);
    }

    #[test]
    fn derivative_matches_finite_difference(e in ring_elem(), x in -1.5f64..1.5) {
        let h = 1e-4;
        let fd = (e.eval(x - 2.0 * h) - 8.0 * e.eval(x - h) + 8.0 * e.eval(x + h) - e.eval(x + 2.0 * h)) / (12.0 * h);
        let scale = magnitude(&e.ddx(), x).max(magnitude(&e, x)).max(1.0);
        prop_assert!((e.ddx().eval(x) - fd).abs() <= 1e-6 * scale);
    }

    #[test]
    fn calculus_is_linear(a in ring_elem(), b in ring_elem(), n in nonzero(), d in 1i64..=5) {
        let alpha = Coefficient::rational(rational(n, d));
        let combo = &a.scale(&alpha) + &b;
        prop_assert_eq!(combo.ddx(), &a.ddx().scale(&alpha) + &b.ddx());
        prop_assert_eq!(combo.int_dx(), &a.int_dx().scale(&alpha) + &b.int_dx());
    }

    #[test]
    fn recursion_is_self_consistent(v in polynomial_potential()) {
        for conv in [Convention::Paper, Convention::Uniform] {
            let s = build_series(&v, 3, &BuildOptions::with_convention(conv)).unwrap();
            for l in 1..=3 {
                prop_assert_eq!(s.term(l).ddx(), rhs(l, &s.terms, &v));
            }
        }
    }
}

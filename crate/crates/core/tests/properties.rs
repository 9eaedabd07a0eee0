use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use vpt_core::benderwu;
use vpt_core::numerics::{pow_rational_exponent, ExactRational, Real};

const DIGITS: u32 = 60;

fn rational() -> impl Strategy<Value = BigRational> {
    (-10_000i64..10_000, 1i64..5_000).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn within(a: &Real, b: &Real, rel: &str) -> bool {
    let scale = std::cmp::max(a.abs(), b.abs()).max(Real::parse("1e-40", DIGITS).unwrap());
    (a - b).abs() <= &Real::parse(rel, DIGITS).unwrap() * &scale
}

proptest! {
    #[test]
    fn real_arithmetic_tracks_rationals(x in rational(), y in rational()) {
        let (rx, ry) = (Real::from_rational(&x, DIGITS), Real::from_rational(&y, DIGITS));
        prop_assert!(within(&(&rx + &ry), &Real::from_rational(&(&x + &y), DIGITS), "1e-55"));
        prop_assert!(within(&(&rx * &ry), &Real::from_rational(&(&x * &y), DIGITS), "1e-55"));
        if !y.numer().sign().eq(&num_bigint::Sign::NoSign) {
            prop_assert!(within(&(&rx / &ry), &Real::from_rational(&(&x / &y), DIGITS), "1e-55"));
        }
    }

    #[test]
    fn decimal_rendering_round_trips(x in rational()) {
        let v = Real::from_rational(&x, DIGITS);
        let back = Real::parse(&v.format_sig(50), DIGITS).unwrap();
        prop_assert!(within(&v, &back, "1e-48"));
    }

    #[test]
    fn exact_rationals_are_exact(x in rational(), y in rational(), e in 0i32..6) {
        let (a, b) = (ExactRational::from(x.clone()), ExactRational::from(y.clone()));
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(a.pow(e).as_big_rational().clone(), num_traits::pow(x.clone(), e as usize));
        let text = a.to_string();
        prop_assert_eq!(text.parse::<ExactRational>().unwrap(), a);
    }

    #[test]
    fn rational_powers_are_stable_under_precision(n in 1i64..10_000, d in 1i64..100, p in -7i64..8, q in 1u32..7) {
        let x = BigRational::new(BigInt::from(n), BigInt::from(d));
        let lo = pow_rational_exponent(&Real::from_rational(&x, DIGITS), p, q).unwrap();
        let hi = pow_rational_exponent(&Real::from_rational(&x, 2 * DIGITS), p, q).unwrap();
        prop_assert!(within(&lo, &hi.with_digits(DIGITS), "1e-55"));
        if p != 0 {
            let back = hi.powi(q as i64);
            let want = Real::from_rational(&x, 2 * DIGITS).powi(p);
            prop_assert!(within(&back.with_digits(DIGITS), &want.with_digits(DIGITS), "1e-55"));
        }
    }

    #[test]
    fn cache_round_trips(order in 0usize..25) {
        let s = benderwu::generate(order);
        let text = benderwu::render_cache(&s);
        let back = benderwu::parse_cache(&text).unwrap();
        prop_assert_eq!(back.coefficients(), s.coefficients());
        prop_assert_eq!(benderwu::render_cache(&back), text);
    }
}

use proptest::prelude::*;

use dkp_core::fock::{apply_mode, FockState, FockVector, Mode};
use dkp_core::pdo::prop1_equiv_check;
use dkp_core::qpoly::{QPoly, Var};
use dkp_core::scalar::Scalar;

fn scalar() -> impl Strategy<Value = Scalar> {
    (-6i64..=6, 1i64..=5, 0u8..4, -2i32..=2).prop_map(|(p, q, kind, h)| {
        let base = Scalar::frac(p, q) * Scalar::h_pow(h);
        match kind {
            0 => base,
            1 => base * Scalar::sqrt2(),
            2 => base * Scalar::i(),
            _ => &base + &Scalar::from_int(1),
        }
    })
}

fn state(n: u32) -> impl Strategy<Value = FockState> {
    let all = FockState::up_to(n, 6);
    (0..all.len()).prop_map(move |i| all[i].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_ring_laws(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn scalar_monomials_invert(p in 1i64..=7, q in 1i64..=7, h in -3i32..=3, s2 in any::<bool>()) {
        let mut a = Scalar::frac(p, q) * Scalar::h_pow(h);
        if s2 {
            a = a * Scalar::sqrt2();
        }
        prop_assert_eq!(&a * &a.invert().unwrap(), Scalar::one());
    }

    #[test]
    fn clifford_on_random_states(n in 1u32..=2, s in state(2), a in 1u8..=2, b in 1u8..=2, k in -5i64..=5, l in -5i64..=5) {
        // states are drawn from the n = 2 list; skip those not valid for n = 1
        prop_assume!(FockState::up_to(n, 6).contains(&s));
        let v = FockVector::basis(n, 24, s);
        let (x, y) = (Mode::Phi(a, k), Mode::Phi(b, l));
        let anti = apply_mode(x, &apply_mode(y, &v)).add(&apply_mode(y, &apply_mode(x, &v)));
        let expect = if a == b && k == -l {
            v.scale(&Scalar::from_int(if k % 2 == 0 { 1 } else { -1 }))
        } else {
            v.zero_like()
        };
        prop_assert!(anti.agrees_to(&expect, 6), "{:?}", anti.render());
    }

    #[test]
    fn polynomial_products_commute_and_invert(n in 1u32..=2, s1 in 0u64..1000, s2 in 0u64..1000) {
        let a = QPoly::pseudo_random(n, 6, 5, s1);
        let b = QPoly::pseudo_random(n, 6, 5, s2);
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        let inv = a.series_invert().unwrap();
        prop_assert!(a.mul(&inv).agrees_to(&QPoly::one(n, 6), 6));
    }

    #[test]
    fn leibniz_rule(n in 1u32..=2, s1 in 0u64..1000, s2 in 0u64..1000, j in 1u32..=2, k in 0u32..=1) {
        let v = Var::new(j.min(n + 1), k);
        let a = QPoly::pseudo_random(n, 6, 5, s1);
        let b = QPoly::pseudo_random(n, 6, 5, s2);
        let lhs = a.mul(&b).diff(v);
        let rhs = a.diff(v).mul(&b).add(&a.mul(&b.diff(v)));
        prop_assert!(lhs.agrees_to(&rhs, lhs.exact().min(rhs.exact())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn string_rewrite_holds_for_any_pair(n in 1u32..=2, s in 0u64..10_000) {
        let t0 = QPoly::pseudo_random(n, 5, 5, 2 * s);
        let t1 = QPoly::pseudo_random(n, 5, 5, 2 * s + 1);
        let rep = prop1_equiv_check(&t0, &t1, 6).unwrap();
        prop_assert!(rep.ok, "{:?}", rep);
        prop_assert!(rep.entries.iter().all(|e| e.matches_expected), "{:?}", rep);
    }
}

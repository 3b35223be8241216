//! Values frozen from independent computations (sympy series expansions of
//! the kernel, done outside this crate).

use dkp_core::wcon::{c_constant, CRoute};
use num_bigint::BigInt;
use num_rational::BigRational;

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `k!·[t^k] t(1+t)^{−1/2}(u+1)/(u−1)`, `u = (1+t)^{1/2n′}`, for `k = 0..=6`.
fn kernel_table(np: u32) -> Vec<BigRational> {
    match np {
        1 => vec![r(4, 1), r(0, 1), r(1, 2), r(-3, 2), r(45, 8), r(-105, 4), r(4725, 32)],
        2 => vec![r(8, 1), r(0, 1), r(3, 4), r(-9, 4), r(537, 64), r(-1245, 32), r(222705, 1024)],
        3 => vec![r(12, 1), r(0, 1), r(19, 18), r(-19, 6), r(7639, 648), r(-17675, 324), r(7099735, 23328)],
        _ => unreachable!(),
    }
}

#[test]
fn field_one_constants_match_series() {
    for n in 1..=3u32 {
        for (k, want) in kernel_table(n).into_iter().enumerate() {
            for route in [CRoute::Kernel, CRoute::Generating] {
                assert_eq!(c_constant(n, 1, k as i64, route).unwrap(), want, "n={n} k={k} {route:?}");
            }
        }
    }
}

#[test]
fn field_two_constants_do_not_depend_on_n() {
    let want = kernel_table(1);
    for n in 1..=3u32 {
        for (k, w) in want.iter().enumerate() {
            assert_eq!(&c_constant(n, 2, k as i64, CRoute::Kernel).unwrap(), w, "n={n} k={k}");
        }
    }
}

#[test]
fn fock_anomaly_matches_series() {
    for n in 1..=2u32 {
        for k in 1..=3i64 {
            let want = &kernel_table(n)[k as usize];
            assert_eq!(&c_constant(n, 1, k, CRoute::Anomaly).unwrap(), want, "n={n} k={k}");
            assert_eq!(&c_constant(n, 2, k, CRoute::Anomaly).unwrap(), &kernel_table(1)[k as usize]);
        }
    }
}

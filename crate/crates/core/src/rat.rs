//! Rationals with an inline `i64` fast path and a `BigRational` fallback.
//! Values that fit are always stored inline, so derived equality and hashing
//! are mathematical.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rat {
    /// Reduced, denominator positive.
    Small(i64, i64),
    Big(BigRational),
}

fn gcd128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i128
}

impl Rat {
    pub fn zero() -> Self {
        Rat::Small(0, 1)
    }

    pub fn one() -> Self {
        Rat::Small(1, 1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    /// Normalises `n/d` computed in `i128` (any sign of `d`, `d ≠ 0`).
    fn from_i128(n: i128, d: i128) -> Self {
        let g = gcd128(n, d);
        let (mut n, mut d) = (n / g, d / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(a), Ok(b)) => Rat::Small(a, b),
            _ => Rat::Big(BigRational::new(BigInt::from(n), BigInt::from(d))),
        }
    }

    pub fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(a), Some(b)) => Rat::Small(a, b),
            _ => Rat::Big(r),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(a, b) => BigRational::new_raw(BigInt::from(*a), BigInt::from(*b)),
            Rat::Big(r) => r.clone(),
        }
    }

    fn big(self) -> Self {
        match self {
            Rat::Big(r) => Rat::from_big(r),
            s => s,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rat::Small(a, _) => *a < 0,
            Rat::Big(r) => r.is_negative(),
        }
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Rat::Small(a, b) => Rat::from_i128(*b as i128, *a as i128),
            Rat::Big(r) => Rat::from_big(r.recip()),
        })
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat::from_big(r)
    }
}

impl Add<&Rat> for &Rat {
    type Output = Rat;
    fn add(self, o: &Rat) -> Rat {
        match (self, o) {
            (Rat::Small(0, _), x) | (x, Rat::Small(0, _)) => x.clone(),
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    Rat::from_i128(a + c, b)
                } else {
                    Rat::from_i128(a * d + c * b, b * d)
                }
            }
            _ => Rat::Big(self.to_big() + o.to_big()).big(),
        }
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, o: &Rat) {
        if o.is_zero() {
            return;
        }
        *self = &*self + o;
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self {
            Rat::Small(a, b) => match a.checked_neg() {
                Some(n) => Rat::Small(n, *b),
                None => Rat::Big(-self.to_big()),
            },
            Rat::Big(r) => Rat::from_big(-r.clone()),
        }
    }
}

impl Sub<&Rat> for &Rat {
    type Output = Rat;
    fn sub(self, o: &Rat) -> Rat {
        self + &(-o)
    }
}

impl Mul<&Rat> for &Rat {
    type Output = Rat;
    fn mul(self, o: &Rat) -> Rat {
        match (self, o) {
            (Rat::Small(0, _), _) | (_, Rat::Small(0, _)) => Rat::zero(),
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                Rat::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Rat::Big(self.to_big() * o.to_big()).big(),
        }
    }
}

impl Div<&Rat> for &Rat {
    type Output = Rat;
    fn div(self, o: &Rat) -> Rat {
        self * &o.inv().expect("division by zero")
    }
}

impl std::fmt::Display for Rat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rat::Small(a, 1) => write!(f, "{a}"),
            Rat::Small(a, b) => write!(f, "{a}/{b}"),
            Rat::Big(r) => write!(f, "{r}"),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_big_agree() {
        let a = Rat::from_big(BigRational::new(3.into(), 7.into()));
        let b = Rat::from_big(BigRational::new((-5).into(), 11.into()));
        assert_eq!((&a + &b).to_big(), a.to_big() + b.to_big());
        assert_eq!((&a * &b).to_big(), a.to_big() * b.to_big());
        let huge = Rat::Small(i64::MAX, 1);
        let s = &huge + &huge;
        assert!(matches!(s, Rat::Big(_)));
        assert_eq!(s.to_big(), BigRational::from_integer(BigInt::from(i64::MAX) * 2));
        let back = &s - &huge;
        assert_eq!(back, huge);
        assert_eq!(-&Rat::Small(i64::MIN, 1), Rat::Big(BigRational::from_integer(-BigInt::from(i64::MIN))));
    }
}

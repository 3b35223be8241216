//! Truncated Laurent series in `λ` with polynomial coefficients.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::qpoly::{BiQPoly, QPoly};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("exponent {exp} outside the validity window [{lo}, {hi}]")]
    WindowMiss { exp: i64, lo: i64, hi: i64 },
}

/// Coefficient ring of a [`LamSeries`].
pub trait Coeff: Clone {
    fn zero_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn times(&self, s: &Scalar) -> Self;
}

impl Coeff for QPoly {
    fn zero_like(&self) -> Self {
        QPoly::zero_like(self)
    }
    fn is_zero(&self) -> bool {
        QPoly::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn times(&self, s: &Scalar) -> Self {
        self.scale(s)
    }
}

impl Coeff for BiQPoly {
    fn zero_like(&self) -> Self {
        BiQPoly::zero_like(self)
    }
    fn is_zero(&self) -> bool {
        BiQPoly::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn times(&self, s: &Scalar) -> Self {
        self.scale(s)
    }
}

/// `Σ_e c_e λ^e`, with every exponent in `[lo, hi]` guaranteed.
#[derive(Clone, Debug)]
pub struct LamSeries<C: Coeff> {
    pub coeffs: BTreeMap<i64, C>,
    pub lo: i64,
    pub hi: i64,
    zero: C,
}

impl<C: Coeff> LamSeries<C> {
    pub fn new(zero: C, lo: i64, hi: i64) -> Self {
        LamSeries { coeffs: BTreeMap::new(), lo, hi, zero: zero.zero_like() }
    }

    pub fn monomial(c: C, e: i64) -> Self {
        let mut s = Self::new(c.zero_like(), i64::MIN / 4, i64::MAX / 4);
        s.add_at(e, c);
        s
    }

    pub fn zero_coeff(&self) -> C {
        self.zero.clone()
    }

    pub fn add_at(&mut self, e: i64, c: C) {
        if c.is_zero() {
            return;
        }
        let v = match self.coeffs.get(&e) {
            Some(old) => old.plus(&c),
            None => c,
        };
        if v.is_zero() {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, v);
        }
    }

    /// Coefficient of `λ^e`, checked against the window.
    pub fn coeff(&self, e: i64) -> Result<C, SeriesError> {
        if e < self.lo || e > self.hi {
            return Err(SeriesError::WindowMiss { exp: e, lo: self.lo, hi: self.hi });
        }
        Ok(self.coeffs.get(&e).cloned().unwrap_or_else(|| self.zero.clone()))
    }

    /// `λ ↦ −λ` term by term.
    pub fn negate_lambda(&self) -> Self {
        let mut out = Self::new(self.zero.clone(), self.lo, self.hi);
        for (e, c) in &self.coeffs {
            let c = if e % 2 != 0 { c.times(&Scalar::from_int(-1)) } else { c.clone() };
            out.coeffs.insert(*e, c);
        }
        out
    }

    /// Multiplication by `λ^k`.
    pub fn shift(&self, k: i64) -> Self {
        LamSeries {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
            lo: self.lo.saturating_add(k),
            hi: self.hi.saturating_add(k),
            zero: self.zero.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(&C) -> C) -> Self {
        let mut out = Self::new(self.zero.clone(), self.lo, self.hi);
        for (e, c) in &self.coeffs {
            out.add_at(*e, f(c));
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.lo = self.lo.max(o.lo);
        out.hi = self.hi.min(o.hi);
        for (e, c) in &o.coeffs {
            out.add_at(*e, c.clone());
        }
        out.coeffs.retain(|e, _| *e >= out.lo && *e <= out.hi);
        out
    }
}

/// Coefficient of `λ^{−1}`.
pub fn lam_residue<C: Coeff>(s: &LamSeries<C>) -> Result<C, SeriesError> {
    s.coeff(-1)
}

/// Product of two scalar-coefficient-free series whose coefficients are
/// polynomials, with the coefficient product given by `mul`.
pub fn convolve<A: Coeff, B: Coeff, C: Coeff>(
    a: &LamSeries<A>,
    b: &LamSeries<B>,
    zero: C,
    mul: impl Fn(&A, &B) -> C,
) -> LamSeries<C> {
    // exponents of the product are exact where both factors are exact and
    // every contributing pair lies in the windows
    let a_min = a.coeffs.keys().next().copied().unwrap_or(a.lo).max(a.lo);
    let b_min = b.coeffs.keys().next().copied().unwrap_or(b.lo).max(b.lo);
    let lo = a.lo.saturating_add(b.lo).max(a_min.saturating_add(b_min));
    let hi = a.hi.saturating_add(b_min).min(b.hi.saturating_add(a_min));
    let mut out = LamSeries::new(zero, lo, hi);
    for (ea, ca) in &a.coeffs {
        for (eb, cb) in &b.coeffs {
            let e = ea + eb;
            if e < lo || e > hi {
                continue;
            }
            out.add_at(e, mul(ca, cb));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residues() {
        let one = QPoly::one(1, 6);
        let s = LamSeries::monomial(one.clone(), -1);
        assert_eq!(lam_residue(&s).unwrap(), one);
        let s0 = LamSeries::monomial(one.clone(), 0);
        assert!(lam_residue(&s0).unwrap().is_zero());
        let mut a = LamSeries::new(one.clone(), -3, 3);
        a.add_at(-2, one.scale(&Scalar::from_int(2)));
        a.add_at(1, one.scale(&Scalar::from_int(3)));
        let mut b = LamSeries::new(one.clone(), -3, 3);
        b.add_at(0, one.clone());
        b.add_at(-2, one.scale(&Scalar::from_int(5)));
        let p = convolve(&a, &b, one.zero_like(), |x, y| x.mul(y));
        // λ^{-1}: (3λ)(5λ^{-2}) = 15
        assert_eq!(lam_residue(&p).unwrap(), one.scale(&Scalar::from_int(15)));
        let narrow = LamSeries::new(one, 0, 4);
        assert!(lam_residue(&narrow).is_err());
    }
}

//! Exact coefficient ring: Gaussian rationals extended by formal `√2`, `√n`
//! and Laurent powers of `h = ħ^{1/2}`.
//!
//! A [`Scalar`] is a finite sum of terms `c · s2^{e2} · sn^{en} · h^m` with
//! `c ∈ ℚ(i)`, `e2, en ∈ {0,1}` and `m ∈ ℤ`. Terms are kept sorted by
//! `(m, e2, en)` with no zero coefficients, so structural equality is
//! mathematical equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;

use crate::rat::Rat;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("scalar is not invertible")]
    NotInvertible,
    #[error("scalar mixes several powers of h and has no inverse in the ring")]
    NotHomogeneous,
    #[error("cannot parse scalar `{0}`: {1}")]
    Parse(String, String),
    #[error("scalars built over different √n (n = {0} and n = {1})")]
    RootMismatch(u32, u32),
}

/// A Gaussian rational `re + i·im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussQ {
    pub re: Rat,
    pub im: Rat,
}

impl GaussQ {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussQ { re: re.into(), im: im.into() }
    }

    pub fn real(re: BigRational) -> Self {
        GaussQ { re: re.into(), im: Rat::zero() }
    }

    fn real_rat(re: Rat) -> Self {
        GaussQ { re, im: Rat::zero() }
    }

    pub fn zero() -> Self {
        Self::real_rat(Rat::zero())
    }

    pub fn one() -> Self {
        Self::real_rat(Rat::one())
    }

    pub fn i() -> Self {
        GaussQ { re: Rat::zero(), im: Rat::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussQ { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm(&self) -> Rat {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let d = self.norm();
        Some(GaussQ { re: &self.re / &d, im: -&(&self.im / &d) })
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        self.scale_rat(&Rat::from_big(r.clone()))
    }

    fn scale_rat(&self, r: &Rat) -> Self {
        GaussQ { re: &self.re * r, im: &self.im * r }
    }
}

impl Add<&GaussQ> for &GaussQ {
    type Output = GaussQ;
    fn add(self, o: &GaussQ) -> GaussQ {
        GaussQ { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl AddAssign<&GaussQ> for GaussQ {
    fn add_assign(&mut self, o: &GaussQ) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl Sub<&GaussQ> for &GaussQ {
    type Output = GaussQ;
    fn sub(self, o: &GaussQ) -> GaussQ {
        GaussQ { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul<&GaussQ> for &GaussQ {
    type Output = GaussQ;
    fn mul(self, o: &GaussQ) -> GaussQ {
        match (self.im.is_zero(), o.im.is_zero()) {
            (true, true) => GaussQ::real_rat(&self.re * &o.re),
            (true, false) => GaussQ { re: &self.re * &o.re, im: &self.re * &o.im },
            (false, true) => GaussQ { re: &self.re * &o.re, im: &self.im * &o.re },
            (false, false) => GaussQ {
                re: &(&self.re * &o.re) - &(&self.im * &o.im),
                im: &(&self.re * &o.im) + &(&self.im * &o.re),
            },
        }
    }
}

impl Neg for &GaussQ {
    type Output = GaussQ;
    fn neg(self) -> GaussQ {
        GaussQ { re: -&self.re, im: -&self.im }
    }
}

/// Monomial key `h^m · s2^{e2} · sn^{en}`; the derived order is `(m, e2, en)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub h: i32,
    pub s2: bool,
    pub sn: bool,
}

impl Key {
    const ONE: Key = Key { h: 0, s2: false, sn: false };
}

/// Element of the coefficient ring.
///
/// `root_n` records the `n` used for `sn`; it is 0 while no `sn` has been
/// involved. Perfect squares never produce `sn` terms: `√(m²)` is rewritten
/// to `m` at construction.
#[derive(Clone, Debug, Default)]
pub struct Scalar {
    terms: Vec<(Key, GaussQ)>,
    root_n: u32,
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for Scalar {}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn perfect_sqrt(n: u32) -> Option<u32> {
    let r = n.sqrt();
    (r * r == n).then_some(r)
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn one() -> Self {
        Self::from_gauss(GaussQ::one())
    }

    pub fn from_int(v: i64) -> Self {
        Self::from_rational(rat(v, 1))
    }

    pub fn frac(num: i64, den: i64) -> Self {
        Self::from_rational(rat(num, den))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::from_gauss(GaussQ::real(r))
    }

    pub fn from_gauss(g: GaussQ) -> Self {
        Self::monomial(g, Key::ONE, 0)
    }

    fn monomial(g: GaussQ, key: Key, root_n: u32) -> Self {
        if g.is_zero() {
            Scalar { terms: Vec::new(), root_n }
        } else {
            Scalar { terms: vec![(key, g)], root_n }
        }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::from_gauss(GaussQ::i())
    }

    /// Formal `√2`.
    pub fn sqrt2() -> Self {
        Self::monomial(GaussQ::one(), Key { h: 0, s2: true, sn: false }, 0)
    }

    /// Formal `√n`; perfect squares are rewritten eagerly.
    pub fn sqrt_n(n: u32) -> Self {
        assert!(n >= 1, "n must be positive");
        match perfect_sqrt(n) {
            Some(r) => Self::from_int(r as i64),
            None => Self::monomial(GaussQ::one(), Key { h: 0, s2: false, sn: true }, n),
        }
    }

    /// `h^m` where `h` stands for `ħ^{1/2}`.
    pub fn h_pow(m: i32) -> Self {
        Self::monomial(GaussQ::one(), Key { h: m, s2: false, sn: false }, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == Key::ONE && self.terms[0].1 == GaussQ::one()
    }

    pub fn root_n(&self) -> u32 {
        self.root_n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &GaussQ)> {
        self.terms.iter().map(|(k, g)| (k, g))
    }

    /// Returns the rational value if the scalar is a plain rational number.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [(k, g)] if *k == Key::ONE && g.im.is_zero() => Some(g.re.to_big()),
            _ => None,
        }
    }

    /// Distinct powers of `h` present.
    pub fn h_powers(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.terms.iter().map(|(k, _)| k.h).collect();
        v.dedup();
        v
    }

    fn merged_root(a: u32, b: u32) -> u32 {
        match (a, b) {
            (0, x) | (x, 0) => x,
            (x, y) => {
                assert_eq!(x, y, "scalars built over different √n");
                x
            }
        }
    }

    fn from_unsorted(mut raw: Vec<(Key, GaussQ)>, root_n: u32) -> Self {
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut terms: Vec<(Key, GaussQ)> = Vec::with_capacity(raw.len());
        for (k, g) in raw {
            match terms.last_mut() {
                Some((lk, lg)) if *lk == k => {
                    *lg = &*lg + &g;
                }
                _ => terms.push((k, g)),
            }
        }
        terms.retain(|(_, g)| !g.is_zero());
        Scalar { terms, root_n }
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Scalar::zero();
        }
        Scalar {
            terms: self.terms.iter().map(|(k, g)| (*k, g.scale(r))).collect(),
            root_n: self.root_n,
        }
    }

    pub fn mul_h(&self, m: i32) -> Self {
        Scalar {
            terms: self
                .terms
                .iter()
                .map(|(k, g)| (Key { h: k.h + m, ..*k }, g.clone()))
                .collect(),
            root_n: self.root_n,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Scalar::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Complex conjugation (`i ↦ −i`; `√2`, `√n`, `h` are real).
    pub fn conj(&self) -> Self {
        Scalar {
            terms: self.terms.iter().map(|(k, g)| (*k, g.conj())).collect(),
            root_n: self.root_n,
        }
    }

    /// Multiplicative inverse of an `h`-homogeneous scalar.
    ///
    /// The `h`-free part is inverted by solving the multiplication system in
    /// the basis `{1, s2, sn, s2·sn}` over `ℚ(i)`.
    pub fn invert(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::NotInvertible);
        }
        let hs = self.h_powers();
        if hs.len() != 1 {
            return Err(ScalarError::NotHomogeneous);
        }
        let m = hs[0];
        // coefficients a0..a3 over the basis 1, s2, sn, s2 sn
        let mut a = vec![GaussQ::zero(); 4];
        for (k, g) in &self.terms {
            a[(k.s2 as usize) | ((k.sn as usize) << 1)] = g.clone();
        }
        if a[1].is_zero() && a[2].is_zero() && a[3].is_zero() {
            let inv = a[0].inv().ok_or(ScalarError::NotInvertible)?;
            return Ok(Self::monomial(inv, Key { h: -m, s2: false, sn: false }, self.root_n));
        }
        let n = if self.root_n == 0 { 2 } else { self.root_n };
        let two = GaussQ::real(rat(2, 1));
        let nn = GaussQ::real(rat(n as i64, 1));
        let twon = GaussQ::real(rat(2 * n as i64, 1));
        // column j = a · e_j expressed in the basis
        let cols = [
            [a[0].clone(), a[1].clone(), a[2].clone(), a[3].clone()],
            [&a[1] * &two, a[0].clone(), &a[3] * &two, a[2].clone()],
            [&a[2] * &nn, &a[3] * &nn, a[0].clone(), a[1].clone()],
            [&a[3] * &twon, &a[2] * &nn, &a[1] * &two, a[0].clone()],
        ];
        let mut mat: Vec<Vec<GaussQ>> = (0..4)
            .map(|r| {
                let mut row: Vec<GaussQ> = (0..4).map(|c| cols[c][r].clone()).collect();
                row.push(if r == 0 { GaussQ::one() } else { GaussQ::zero() });
                row
            })
            .collect();
        for col in 0..4 {
            let piv = (col..4)
                .find(|&r| !mat[r][col].is_zero())
                .ok_or(ScalarError::NotInvertible)?;
            mat.swap(col, piv);
            let inv = mat[col][col].inv().unwrap();
            for c in col..5 {
                mat[col][c] = &mat[col][c] * &inv;
            }
            for r in 0..4 {
                if r != col && !mat[r][col].is_zero() {
                    let f = mat[r][col].clone();
                    for c in col..5 {
                        let t = &f * &mat[col][c];
                        mat[r][c] = &mat[r][c] - &t;
                    }
                }
            }
        }
        let raw = (0..4)
            .map(|j| {
                (
                    Key { h: -m, s2: j & 1 == 1, sn: j & 2 == 2 },
                    mat[j][4].clone(),
                )
            })
            .collect();
        Ok(Self::from_unsorted(raw, self.root_n))
    }

    /// Parses the textual rendering produced by `Display`. `n` resolves `sn`.
    pub fn parse(s: &str, n: u32) -> Result<Self, ScalarError> {
        let mut p = Parser { s: s.as_bytes(), pos: 0, n, src: s };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(v)
    }
}

impl Add<&Scalar> for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        let root_n = Scalar::merged_root(self.root_n, o.root_n);
        let mut terms = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < o.terms.len() {
            match self.terms[i].0.cmp(&o.terms[j].0) {
                Ordering::Less => {
                    terms.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    terms.push(o.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let g = &self.terms[i].1 + &o.terms[j].1;
                    if !g.is_zero() {
                        terms.push((self.terms[i].0, g));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend_from_slice(&o.terms[j..]);
        Scalar { terms, root_n }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            terms: self.terms.iter().map(|(k, g)| (*k, -g)).collect(),
            root_n: self.root_n,
        }
    }
}

impl Sub<&Scalar> for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self + &(-o)
    }
}

impl Mul<&Scalar> for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        if self.is_zero() || o.is_zero() {
            return Scalar::zero();
        }
        let root_n = Scalar::merged_root(self.root_n, o.root_n);
        if self.terms.len() == 1 && o.terms.len() == 1 {
            let (k, g) = product_term(&self.terms[0], &o.terms[0], root_n);
            return Scalar::monomial(g, k, root_n);
        }
        let mut raw = Vec::with_capacity(self.terms.len() * o.terms.len());
        for a in &self.terms {
            for b in &o.terms {
                raw.push(product_term(a, b, root_n));
            }
        }
        Scalar::from_unsorted(raw, root_n)
    }
}

fn product_term(a: &(Key, GaussQ), b: &(Key, GaussQ), root_n: u32) -> (Key, GaussQ) {
    let mut g = &a.1 * &b.1;
    let s2 = a.0.s2 ^ b.0.s2;
    let sn = a.0.sn ^ b.0.sn;
    if a.0.s2 && b.0.s2 {
        g = g.scale(&rat(2, 1));
    }
    if a.0.sn && b.0.sn {
        g = g.scale(&rat(root_n as i64, 1));
    }
    (Key { h: a.0.h + b.0.h, s2, sn }, g)
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                self.$m(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        if o.terms.len() == 1 {
            // common case: merge a single term in place
            let (k, g) = &o.terms[0];
            self.root_n = Scalar::merged_root(self.root_n, o.root_n);
            match self.terms.binary_search_by(|t| t.0.cmp(k)) {
                Ok(i) => {
                    self.terms[i].1 += g;
                    if self.terms[i].1.is_zero() {
                        self.terms.remove(i);
                    }
                }
                Err(i) => self.terms.insert(i, (*k, g.clone())),
            }
            return;
        }
        *self = &*self + o;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        *self = &*self - o;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

fn fmt_rat(r: &Rat) -> String {
    fmt_big(&r.to_big())
}

fn fmt_big(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("({}/{})", r.numer(), r.denom())
    }
}

fn fmt_gauss(g: &GaussQ) -> String {
    match (g.re.is_zero(), g.im.is_zero()) {
        (_, true) => fmt_rat(&g.re),
        (true, false) => format!("{}i", fmt_rat(&g.im)),
        (false, false) => format!("({}+{}i)", fmt_rat(&g.re), fmt_rat(&g.im)),
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (k, g)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", fmt_gauss(g))?;
            if k.s2 {
                write!(f, "*s2")?;
            }
            if k.sn {
                write!(f, "*sn")?;
            }
            match k.h {
                0 => {}
                1 => write!(f, "*h")?,
                m => write!(f, "*h^{m}")?,
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    n: u32,
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ScalarError {
        ScalarError::Parse(self.src.to_string(), format!("{msg} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Scalar, ScalarError> {
        let neg = self.eat(b'-');
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = &acc * &self.factor()?;
        }
        Ok(if neg { -acc } else { acc })
    }

    fn int(&mut self) -> Result<BigInt, ScalarError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.s.len() && self.s[self.pos] == b'-' {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        txt.parse::<BigInt>().map_err(|_| self.err("expected integer"))
    }

    fn factor(&mut self) -> Result<Scalar, ScalarError> {
        let base = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                v
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.int()?;
                let r = if self.eat(b'/') {
                    let den = self.int()?;
                    if den.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    BigRational::new(num, den)
                } else {
                    BigRational::from_integer(num)
                };
                Scalar::from_rational(r)
            }
            Some(b'i') => {
                self.pos += 1;
                Scalar::i()
            }
            Some(b's') => {
                if self.s[self.pos..].starts_with(b"s2") {
                    self.pos += 2;
                    Scalar::sqrt2()
                } else if self.s[self.pos..].starts_with(b"sn") {
                    self.pos += 2;
                    if self.n == 0 {
                        return Err(self.err("`sn` used without n"));
                    }
                    Scalar::sqrt_n(self.n)
                } else {
                    return Err(self.err("unknown symbol"));
                }
            }
            Some(b'h') => {
                self.pos += 1;
                let e = if self.eat(b'^') {
                    let e = self.int()?;
                    i32::try_from(e).map_err(|_| self.err("exponent too large"))?
                } else {
                    1
                };
                Scalar::h_pow(e)
            }
            _ => return Err(self.err("unexpected input")),
        };
        // postfix imaginary unit, as in `(1/2)i` or `3i`
        if self.pos < self.s.len() && self.s[self.pos] == b'i' {
            self.pos += 1;
            return Ok(&base * &Scalar::i());
        }
        Ok(base)
    }
}

/// Rising factorial `(x)_k = x(x+1)…(x+k−1)` over the rationals; for negative
/// `k` this uses `1/(x)_{−m} = (x−m)_m`, i.e. returns `1/(x−m)_m`.
pub fn pochhammer(x: &BigRational, k: i64) -> BigRational {
    if k >= 0 {
        let mut acc = BigRational::one();
        for i in 0..k {
            acc *= x + BigRational::from_integer(BigInt::from(i));
        }
        acc
    } else {
        let m = -k;
        let shifted = x - BigRational::from_integer(BigInt::from(m));
        let p = pochhammer(&shifted, m);
        assert!(!p.is_zero(), "pochhammer with negative index hit a pole");
        p.recip()
    }
}

/// Generalised binomial coefficient `C(x, k)` for rational `x`.
pub fn binomial(x: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        acc *= x - BigRational::from_integer(BigInt::from(i));
        acc /= BigRational::from_integer(BigInt::from(i + 1));
    }
    acc
}

pub fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

pub fn q(num: i64, den: i64) -> BigRational {
    rat(num, den)
}

impl Scalar {
    /// Sign helper: `(−1)^k`.
    pub fn sign(k: i64) -> Self {
        if k.rem_euclid(2) == 0 {
            Scalar::one()
        } else {
            Scalar::from_int(-1)
        }
    }

    pub fn is_negative_rational(&self) -> bool {
        self.as_rational().is_some_and(|r| r.is_negative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_rules() {
        assert_eq!(Scalar::sqrt2() * Scalar::sqrt2(), Scalar::from_int(2));
        let s3 = Scalar::sqrt_n(3);
        assert_eq!(&s3 * &s3, Scalar::from_int(3));
        let a = Scalar::one() + Scalar::i();
        let b = Scalar::one() - Scalar::i();
        assert_eq!(a * b, Scalar::from_int(2));
        let s2sn = Scalar::sqrt2() * Scalar::sqrt_n(3);
        assert_eq!(&s2sn * &s2sn, Scalar::from_int(6));
    }

    #[test]
    fn perfect_squares_collapse() {
        assert_eq!(Scalar::sqrt_n(1), Scalar::one());
        assert_eq!(Scalar::sqrt_n(4), Scalar::from_int(2));
        assert_eq!(Scalar::sqrt_n(9).root_n(), 0);
    }

    #[test]
    fn inversion() {
        assert_eq!(Scalar::from_int(2).invert().unwrap(), Scalar::frac(1, 2));
        let a = Scalar::one() + Scalar::i();
        let inv = a.invert().unwrap();
        assert_eq!(&inv * &a, Scalar::one());
        assert_eq!(inv, Scalar::parse("(1/2) - (1/2)i", 0).unwrap());
        let mixed = Scalar::one() + Scalar::h_pow(1);
        assert_eq!(mixed.invert(), Err(ScalarError::NotHomogeneous));
        assert_eq!(Scalar::zero().invert(), Err(ScalarError::NotInvertible));
        let b = (Scalar::one() + Scalar::sqrt2() * Scalar::sqrt_n(3) + Scalar::sqrt_n(3))
            * Scalar::h_pow(-2);
        let bi = b.invert().unwrap();
        assert_eq!(&b * &bi, Scalar::one());
    }

    #[test]
    fn render_and_parse() {
        let s = Scalar::parse("((3/2)+(1/2)i)*s2*h^-1", 2).unwrap();
        assert_eq!(s.to_string(), "((3/2)+(1/2)i)*s2*h^-1");
        let t = Scalar::parse("2*sn*h + -3 + (1/2)i*s2", 2).unwrap();
        assert_eq!(Scalar::parse(&t.to_string(), 2).unwrap(), t);
        assert!(Scalar::parse("2*", 1).is_err());
        assert!(Scalar::parse("q", 1).is_err());
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(&q(1, 2), 0), q(1, 1));
        assert_eq!(pochhammer(&q(1, 2), 2), q(3, 4));
        // 1/(a)_{-1} = (a-1)_1
        assert_eq!(pochhammer(&q(1, 2), -1).recip(), q(-1, 2));
        assert_eq!(binomial(&q(1, 2), 2), q(-1, 8));
    }
}

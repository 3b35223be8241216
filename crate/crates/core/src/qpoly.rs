//! Truncated polynomial ring `C[θ, q_k^j]` with principal grading, its
//! `x`-extension and the two-alphabet tensor ring.
//!
//! Principal weights are integers in units of `1/2n` of the energy:
//! `d(q_k^j) = 2j−1+2nk` for `j ≤ n`, `d(q_k^{n+1}) = (2k+1)n`, `d(θ) = 0`
//! and `d(x) = 1`. Every polynomial carries a storage cap `w_max` and an
//! exactness bound: all coefficients of weight `≤ exact` are correct.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::scalar::{q as rq, Scalar};

/// Exactness bound used for polynomials that are known exactly.
pub const EXACT: i64 = i64::MAX / 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomials live in different alphabets or truncations")]
    AlphabetMismatch,
    #[error("weight-zero part is not an invertible scalar")]
    NonUnitConstantTerm,
    #[error("x-shift applied to a polynomial that already depends on x")]
    AlreadyShifted,
}

/// A time variable `q_k^j`, `1 ≤ j ≤ n+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub j: u8,
    pub k: u8,
}

impl Var {
    pub fn new(j: u32, k: u32) -> Self {
        Var { j: j as u8, k: k as u8 }
    }

    pub fn weight(&self, n: u32) -> i64 {
        let (j, k, n) = (self.j as i64, self.k as i64, n as i64);
        if j <= n {
            2 * j - 1 + 2 * n * k
        } else {
            (2 * k + 1) * n
        }
    }

    /// The Heisenberg field this time belongs to (1 or 2).
    pub fn field(&self, n: u32) -> u8 {
        if (self.j as u32) <= n {
            1
        } else {
            2
        }
    }

    /// `(2j−1)/2n` for field-1 times, `1/2` for field-2 times.
    pub fn base(&self, n: u32) -> num_rational::BigRational {
        if (self.j as u32) <= n {
            rq(2 * self.j as i64 - 1, 2 * n as i64)
        } else {
            rq(1, 2)
        }
    }
}

/// All time variables of weight at most `w_max`, in canonical `(j,k)` order.
pub fn variables(n: u32, w_max: i64) -> Vec<Var> {
    let mut out = Vec::new();
    for j in 1..=n + 1 {
        let mut k = 0;
        loop {
            let v = Var::new(j, k);
            if v.weight(n) > w_max {
                break;
            }
            out.push(v);
            k += 1;
        }
    }
    out
}

/// Monomial `Π (q_k^j)^e · θ^b · x^m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct QMono {
    vars: Vec<(Var, u16)>,
    theta: bool,
    x: u16,
}

impl QMono {
    pub fn one() -> Self {
        QMono::default()
    }

    pub fn var(v: Var) -> Self {
        QMono { vars: vec![(v, 1)], ..Default::default() }
    }

    pub fn from_parts(mut vars: Vec<(Var, u16)>, theta: bool, x: u16) -> Self {
        vars.sort();
        let mut merged: Vec<(Var, u16)> = Vec::new();
        for (v, e) in vars {
            if e == 0 {
                continue;
            }
            match merged.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        QMono { vars: merged, theta, x }
    }

    pub fn vars(&self) -> &[(Var, u16)] {
        &self.vars
    }

    pub fn theta(&self) -> bool {
        self.theta
    }

    pub fn x_exp(&self) -> u16 {
        self.x
    }

    pub fn exp_of(&self, v: Var) -> u16 {
        self.vars.iter().find(|(w, _)| *w == v).map_or(0, |(_, e)| *e)
    }

    pub fn weight(&self, n: u32) -> i64 {
        self.vars.iter().map(|(v, e)| v.weight(n) * *e as i64).sum::<i64>() + self.x as i64
    }

    /// Product, or `None` when `θ·θ` occurs.
    pub fn mul(&self, o: &QMono) -> Option<QMono> {
        if self.theta && o.theta {
            return None;
        }
        let mut vars = Vec::with_capacity(self.vars.len() + o.vars.len());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() && j < o.vars.len() {
            let (a, b) = (self.vars[i], o.vars[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    vars.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    vars.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    vars.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        vars.extend_from_slice(&self.vars[i..]);
        vars.extend_from_slice(&o.vars[j..]);
        Some(QMono { vars, theta: self.theta || o.theta, x: self.x + o.x })
    }

    /// Removes one factor of `v`, returning the old exponent.
    fn lower(&self, v: Var) -> Option<(u16, QMono)> {
        let pos = self.vars.iter().position(|(w, _)| *w == v)?;
        let mut m = self.clone();
        let e = m.vars[pos].1;
        if e == 1 {
            m.vars.remove(pos);
        } else {
            m.vars[pos].1 -= 1;
        }
        Some((e, m))
    }

    pub fn without_theta(&self) -> QMono {
        QMono { theta: false, ..self.clone() }
    }

    pub fn with_theta(&self) -> QMono {
        QMono { theta: true, ..self.clone() }
    }

    pub fn render(&self, primed: bool) -> String {
        let mut parts = Vec::new();
        let p = if primed { "'" } else { "" };
        for (v, e) in &self.vars {
            if *e == 1 {
                parts.push(format!("q{p}{}_{}", v.j, v.k));
            } else {
                parts.push(format!("q{p}{}_{}^{e}", v.j, v.k));
            }
        }
        if self.theta {
            parts.push(format!("theta{p}"));
        }
        match self.x {
            0 => {}
            1 => parts.push("x".into()),
            e => parts.push(format!("x^{e}")),
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// Which alphabet a polynomial is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    Plain,
    Primed,
}

/// Truncated polynomial with scalar coefficients.
#[derive(Clone, Debug)]
pub struct QPoly {
    n: u32,
    w_max: i64,
    exact: i64,
    alphabet: Alphabet,
    terms: BTreeMap<QMono, Scalar>,
}

impl PartialEq for QPoly {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.terms == o.terms
    }
}

impl QPoly {
    pub fn zero(n: u32, w_max: i64) -> Self {
        QPoly { n, w_max, exact: EXACT, alphabet: Alphabet::Plain, terms: BTreeMap::new() }
    }

    pub fn constant(n: u32, w_max: i64, c: Scalar) -> Self {
        let mut p = Self::zero(n, w_max);
        p.add_term(QMono::one(), c);
        p
    }

    pub fn one(n: u32, w_max: i64) -> Self {
        Self::constant(n, w_max, Scalar::one())
    }

    /// `1 + Σ c·m` over `terms` random monomials of weight `≤ w_max` with
    /// integer coefficients in `[−3, 3]`; reproducible from `seed`.
    pub fn pseudo_random(n: u32, w_max: i64, terms: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vars = variables(n, w_max);
        let mut p = Self::one(n, w_max);
        for _ in 0..terms {
            let mut mono: BTreeMap<Var, u16> = BTreeMap::new();
            let mut w = 0;
            let len = rng.random_range(1..=3);
            for _ in 0..len {
                let v = vars[rng.random_range(0..vars.len())];
                if w + v.weight(n) <= w_max {
                    w += v.weight(n);
                    *mono.entry(v).or_default() += 1;
                }
            }
            let c = rng.random_range(-3i64..=3);
            if !mono.is_empty() {
                p.add_term(QMono::from_parts(mono.into_iter().collect(), false, 0), Scalar::from_int(c));
            }
        }
        p
    }

    pub fn monomial(n: u32, w_max: i64, m: QMono, c: Scalar) -> Self {
        let mut p = Self::zero(n, w_max);
        p.add_term(m, c);
        p
    }

    pub fn var(n: u32, w_max: i64, v: Var) -> Self {
        Self::monomial(n, w_max, QMono::var(v), Scalar::one())
    }

    pub fn theta(n: u32, w_max: i64) -> Self {
        Self::monomial(n, w_max, QMono::one().with_theta(), Scalar::one())
    }

    pub fn x(n: u32, w_max: i64) -> Self {
        Self::monomial(n, w_max, QMono::from_parts(vec![], false, 1), Scalar::one())
    }

    /// Same ring, no terms.
    pub fn zero_like(&self) -> Self {
        QPoly { terms: BTreeMap::new(), exact: EXACT, ..self.clone() }
    }

    pub fn constant_like(&self, c: Scalar) -> Self {
        let mut p = self.zero_like();
        p.add_term(QMono::one(), c);
        p
    }

    pub fn with_alphabet(mut self, a: Alphabet) -> Self {
        self.alphabet = a;
        self
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn w_max(&self) -> i64 {
        self.w_max
    }

    /// Coefficients of weight `≤ exact()` are guaranteed.
    pub fn exact(&self) -> i64 {
        self.exact.min(EXACT)
    }

    pub fn set_exact(&mut self, e: i64) {
        self.exact = e;
    }

    pub fn with_exact(mut self, e: i64) -> Self {
        self.exact = self.exact.min(e);
        self
    }

    /// Changes the storage cap, dropping terms above it.
    pub fn with_w_max(mut self, w: i64) -> Self {
        self.w_max = w;
        self.enforce_cap();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&QMono, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &QMono) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&QMono::one())
    }

    pub fn weight(&self, m: &QMono) -> i64 {
        m.weight(self.n)
    }

    /// Smallest weight present (or `None` for zero).
    pub fn min_weight(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.weight(self.n)).min()
    }

    pub fn max_weight(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.weight(self.n)).max()
    }

    pub fn depends_on_x(&self) -> bool {
        self.terms.keys().any(|m| m.x > 0)
    }

    pub fn depends_on_theta(&self) -> bool {
        self.terms.keys().any(|m| m.theta)
    }

    /// Adds `c·m`, respecting the storage cap.
    pub fn add_term(&mut self, m: QMono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        if m.weight(self.n) > self.w_max {
            self.exact = self.exact.min(self.w_max);
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += &c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn enforce_cap(&mut self) {
        let n = self.n;
        let cap = self.w_max;
        let before = self.terms.len();
        self.terms.retain(|m, _| m.weight(n) <= cap);
        if self.terms.len() != before {
            self.exact = self.exact.min(cap);
        }
    }

    fn check(&self, o: &QPoly) -> Result<(), PolyError> {
        if self.n != o.n || self.alphabet != o.alphabet || self.w_max != o.w_max {
            Err(PolyError::AlphabetMismatch)
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, o: &QPoly) -> Result<QPoly, PolyError> {
        self.check(o)?;
        Ok(self.add(o))
    }

    pub fn checked_mul(&self, o: &QPoly) -> Result<QPoly, PolyError> {
        self.check(o)?;
        Ok(self.mul(o))
    }

    pub fn add(&self, o: &QPoly) -> QPoly {
        debug_assert_eq!(self.n, o.n);
        let mut r = self.clone();
        r.w_max = self.w_max.max(o.w_max);
        r.exact = self.exact.min(o.exact);
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> QPoly {
        QPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: &Scalar) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        if s.is_zero() {
            return r;
        }
        for (m, c) in &self.terms {
            let v = c * s;
            if !v.is_zero() {
                r.terms.insert(m.clone(), v);
            }
        }
        r
    }

    /// Ring product; terms above the cap are dropped.
    pub fn mul(&self, o: &QPoly) -> QPoly {
        self.mul_cap(o, EXACT)
    }

    /// Product keeping only weights `≤ cap` (and the storage cap).
    pub fn mul_cap(&self, o: &QPoly, cap: i64) -> QPoly {
        debug_assert_eq!(self.n, o.n);
        let mut r = self.zero_like();
        r.w_max = self.w_max.min(o.w_max);
        // unknown parts sit above `exact`, so they only reach
        // weights above `exact + (lowest weight of the other factor)`
        let low = |p: &QPoly| p.terms.keys().map(|m| m.weight(p.n)).min().unwrap_or(EXACT).min(p.exact.saturating_add(1));
        let ea = self.exact.saturating_add(low(o)).min(EXACT);
        let eb = o.exact.saturating_add(low(self)).min(EXACT);
        r.exact = ea.min(eb);
        let n = self.n;
        let cap = r.w_max.min(cap);
        // group by weight so we can skip hopeless pairs quickly
        let mut bw: Vec<(i64, &QMono, &Scalar)> =
            o.terms.iter().map(|(m, c)| (m.weight(n), m, c)).collect();
        bw.sort_by_key(|t| t.0);
        let mut acc: BTreeMap<QMono, Scalar> = BTreeMap::new();
        let mut dropped = false;
        for (ma, ca) in &self.terms {
            let wa = ma.weight(n);
            for (wb, mb, cb) in &bw {
                if wa + wb > cap {
                    dropped = true;
                    break;
                }
                if let Some(m) = ma.mul(mb) {
                    let c = ca * *cb;
                    match acc.get_mut(&m) {
                        Some(v) => *v += &c,
                        None => {
                            acc.insert(m, c);
                        }
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        r.terms = acc;
        if dropped {
            r.exact = r.exact.min(cap);
        }
        r
    }

    /// `self += c·a·b`, keeping weights `≤ cap`; exactness follows `mul_cap`.
    pub fn add_product(&mut self, a: &QPoly, b: &QPoly, c: &Scalar, cap: i64) {
        let n = self.n;
        let low = |p: &QPoly| p.terms.keys().map(|m| m.weight(p.n)).min().unwrap_or(EXACT).min(p.exact.saturating_add(1));
        let ea = a.exact.saturating_add(low(b)).min(EXACT);
        let eb = b.exact.saturating_add(low(a)).min(EXACT);
        let cap = cap.min(self.w_max).min(a.w_max).min(b.w_max);
        let mut exact = ea.min(eb);
        let mut bw: Vec<(i64, &QMono, &Scalar)> = b.terms.iter().map(|(m, s)| (m.weight(n), m, s)).collect();
        bw.sort_by_key(|t| t.0);
        for (ma, ca) in &a.terms {
            let wa = ma.weight(n);
            if bw.first().is_some_and(|t| wa + t.0 > cap) {
                exact = exact.min(cap);
                continue;
            }
            let cc = ca * c;
            for (wb, mb, cb) in &bw {
                if wa + wb > cap {
                    exact = exact.min(cap);
                    break;
                }
                if let Some(m) = ma.mul(mb) {
                    let t = &cc * *cb;
                    match self.terms.get_mut(&m) {
                        Some(v) => {
                            *v += &t;
                            if v.is_zero() {
                                self.terms.remove(&m);
                            }
                        }
                        None => {
                            if !t.is_zero() {
                                self.terms.insert(m, t);
                            }
                        }
                    }
                }
            }
        }
        self.exact = self.exact.min(exact);
    }

    pub fn pow(&self, e: u32) -> QPoly {
        let mut acc = self.constant_like(Scalar::one());
        acc.w_max = self.w_max;
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Formal partial derivative in a time variable.
    pub fn diff(&self, v: Var) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact.saturating_sub(v.weight(self.n));
        for (m, c) in &self.terms {
            if let Some((e, low)) = m.lower(v) {
                r.add_term(low, c * &Scalar::from_int(e as i64));
            }
        }
        r
    }

    /// Left derivative in `θ`.
    pub fn diff_theta(&self) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for (m, c) in &self.terms {
            if m.theta {
                r.add_term(m.without_theta(), c.clone());
            }
        }
        r
    }

    /// Multiplication by `θ`.
    pub fn mul_theta(&self) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for (m, c) in &self.terms {
            if !m.theta {
                r.add_term(m.with_theta(), c.clone());
            }
        }
        r
    }

    /// Partial derivative in `x`.
    pub fn diff_x(&self) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact.saturating_sub(1);
        for (m, c) in &self.terms {
            if m.x > 0 {
                let mut low = m.clone();
                low.x -= 1;
                r.add_term(low, c * &Scalar::from_int(m.x as i64));
            }
        }
        r
    }

    /// Multiplication by the monomial `m` with coefficient `c`.
    pub fn mul_monomial(&self, m: &QMono, c: &Scalar) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for (mm, cc) in &self.terms {
            if let Some(p) = mm.mul(m) {
                r.add_term(p, cc * c);
            }
        }
        r
    }

    /// Substitutes `q_0^1 ↦ q_0^1 + (h/2n)x` and `q_0^{n+1} ↦ q_0^{n+1} + (h/2)x`.
    pub fn shift_x(&self) -> Result<QPoly, PolyError> {
        let n = self.n;
        let ca = Scalar::h_pow(1) * Scalar::frac(1, 2 * n as i64);
        let cb = Scalar::h_pow(1) * Scalar::frac(1, 2);
        self.shift_x_by(&ca, &cb)
    }

    /// Substitutes `q_0^1 ↦ q_0^1 + ca·x` and `q_0^{n+1} ↦ q_0^{n+1} + cb·x`.
    pub fn shift_x_by(&self, ca: &Scalar, cb: &Scalar) -> Result<QPoly, PolyError> {
        if self.depends_on_x() {
            return Err(PolyError::AlreadyShifted);
        }
        let n = self.n;
        let a = Var::new(1, 0);
        let b = Var::new(n + 1, 0);
        let sub_a = self.var_like(a).add(&self.x_like().scale(ca));
        let sub_b = self.var_like(b).add(&self.x_like().scale(cb));
        let mut r = self.zero_like();
        for (m, c) in &self.terms {
            let ea = m.exp_of(a);
            let eb = m.exp_of(b);
            let rest: Vec<(Var, u16)> =
                m.vars.iter().copied().filter(|(v, _)| *v != a && *v != b).collect();
            let base = QMono::from_parts(rest, m.theta, m.x);
            let mut t = self.monomial_like(base, c.clone());
            if ea > 0 {
                t = t.mul(&sub_a.pow(ea as u32));
            }
            if eb > 0 {
                t = t.mul(&sub_b.pow(eb as u32));
            }
            r = r.add(&t);
        }
        // an unknown monomial of weight w maps to weights ≥ ceil(w/n)
        let e = self.exact;
        r.exact = if e >= EXACT { r.exact } else { r.exact.min((e + 1 + n as i64 - 1) / n as i64 - 1) };
        Ok(r)
    }

    pub fn var_like(&self, v: Var) -> QPoly {
        self.monomial_like(QMono::var(v), Scalar::one())
    }

    pub fn x_like(&self) -> QPoly {
        self.monomial_like(QMono::from_parts(vec![], false, 1), Scalar::one())
    }

    pub fn monomial_like(&self, m: QMono, c: Scalar) -> QPoly {
        let mut p = self.zero_like();
        p.add_term(m, c);
        p
    }

    /// Inverse as a graded power series, valid up to the storage cap.
    pub fn series_invert(&self) -> Result<QPoly, PolyError> {
        let c0 = self.constant_term();
        let c0_inv = c0.invert().map_err(|_| PolyError::NonUnitConstantTerm)?;
        // p = c0 (1 + u), u nilpotent modulo truncation
        let mut u = self.scale(&c0_inv);
        u.add_term(QMono::one(), -Scalar::one());
        if u.constant_term() != Scalar::zero() {
            return Err(PolyError::NonUnitConstantTerm);
        }
        let neg_u = u.neg();
        let mut sum = self.constant_like(Scalar::one());
        let mut power = sum.clone();
        loop {
            power = power.mul(&neg_u);
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power);
        }
        let mut r = sum.scale(&c0_inv);
        r.exact = self.exact.min(r.exact);
        Ok(r)
    }

    /// Terms of weight `≤ w` only.
    pub fn truncated(&self, w: i64) -> QPoly {
        let mut r = self.clone();
        let n = self.n;
        r.terms.retain(|m, _| m.weight(n) <= w);
        r
    }

    /// Drops terms beyond the exactness bound.
    pub fn exact_part(&self) -> QPoly {
        self.truncated(self.exact())
    }

    /// Equality of the parts of weight `≤ w`.
    pub fn agrees_to(&self, o: &QPoly, w: i64) -> bool {
        self.truncated(w).terms == o.truncated(w).terms
    }

    /// Map over coefficients.
    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Scalar) -> QPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for (m, c) in &self.terms {
            r.add_term(m.clone(), f(c));
        }
        r
    }

    /// Lowest-weight monomials first, for reports.
    pub fn leading_terms(&self, limit: usize) -> Vec<String> {
        let n = self.n;
        let mut v: Vec<(i64, &QMono, &Scalar)> =
            self.terms.iter().map(|(m, c)| (m.weight(n), m, c)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        v.into_iter()
            .take(limit)
            .map(|(_, m, c)| format!("{}*{}", c, m.render(self.alphabet == Alphabet::Primed)))
            .collect()
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let primed = self.alphabet == Alphabet::Primed;
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("[{}] {}", c, m.render(primed)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Element of the two-alphabet ring `F ⊗ F′`.
#[derive(Clone, Debug)]
pub struct BiQPoly {
    n: u32,
    joint_max: i64,
    exact: i64,
    terms: BTreeMap<(QMono, QMono), Scalar>,
}

impl PartialEq for BiQPoly {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.terms == o.terms
    }
}

impl BiQPoly {
    /// Zero, truncated at joint weight `joint_max`.
    pub fn zero(n: u32, joint_max: i64) -> Self {
        BiQPoly { n, joint_max, exact: EXACT, terms: BTreeMap::new() }
    }

    pub fn zero_like(&self) -> Self {
        BiQPoly { terms: BTreeMap::new(), exact: EXACT, ..self.clone() }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn joint_max(&self) -> i64 {
        self.joint_max
    }

    pub fn exact(&self) -> i64 {
        self.exact.min(EXACT)
    }

    pub fn with_exact(mut self, e: i64) -> Self {
        self.exact = self.exact.min(e);
        self
    }

    pub fn set_exact(&mut self, e: i64) {
        self.exact = e;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(QMono, QMono), &Scalar)> {
        self.terms.iter()
    }

    pub fn joint_weight(&self, k: &(QMono, QMono)) -> i64 {
        k.0.weight(self.n) + k.1.weight(self.n)
    }

    pub fn add_term(&mut self, a: QMono, b: QMono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        if a.weight(self.n) + b.weight(self.n) > self.joint_max {
            self.exact = self.exact.min(self.joint_max);
            return;
        }
        let key = (a, b);
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += &c;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    /// `a ⊗ b`, truncated at joint weight `joint_max`.
    pub fn tensor(a: &QPoly, b: &QPoly, joint_max: i64) -> BiQPoly {
        let n = a.n();
        let mut r = BiQPoly::zero(n, joint_max);
        r.exact = a.exact().min(b.exact());
        let bw: Vec<(i64, &QMono, &Scalar)> =
            b.terms().map(|(m, c)| (m.weight(n), m, c)).collect();
        for (ma, ca) in a.terms() {
            let wa = ma.weight(n);
            for (wb, mb, cb) in &bw {
                if wa + wb > joint_max {
                    r.exact = r.exact.min(joint_max);
                    continue;
                }
                r.add_term(ma.clone(), (*mb).clone(), ca * *cb);
            }
        }
        r
    }

    pub fn add(&self, o: &BiQPoly) -> BiQPoly {
        let mut r = self.clone();
        r.exact = self.exact.min(o.exact);
        for ((a, b), c) in &o.terms {
            r.add_term(a.clone(), b.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &BiQPoly) -> BiQPoly {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> BiQPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for ((a, b), c) in &self.terms {
            r.add_term(a.clone(), b.clone(), c * s);
        }
        r
    }

    pub fn mul(&self, o: &BiQPoly) -> BiQPoly {
        let mut r = self.zero_like();
        r.joint_max = self.joint_max.min(o.joint_max);
        r.exact = self.exact.min(o.exact);
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &o.terms {
                if let (Some(a), Some(b)) = (a1.mul(a2), b1.mul(b2)) {
                    r.add_term(a, b, c1 * c2);
                }
            }
        }
        r
    }

    /// Exchanges the two tensor factors.
    pub fn swap(&self) -> BiQPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for ((a, b), c) in &self.terms {
            r.add_term(b.clone(), a.clone(), c.clone());
        }
        r
    }

    pub fn truncated(&self, w: i64) -> BiQPoly {
        let mut r = self.clone();
        let n = self.n;
        r.terms.retain(|k, _| k.0.weight(n) + k.1.weight(n) <= w);
        r
    }

    pub fn agrees_to(&self, o: &BiQPoly, w: i64) -> bool {
        self.truncated(w).terms == o.truncated(w).terms
    }

    pub fn map_keys(&self, f: impl Fn(&QMono, &QMono, &Scalar) -> Option<(QMono, QMono, Scalar)>) -> BiQPoly {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for ((a, b), c) in &self.terms {
            if let Some((a2, b2, c2)) = f(a, b, c) {
                r.add_term(a2, b2, c2);
            }
        }
        r
    }

    pub fn leading_terms(&self, limit: usize) -> Vec<String> {
        let n = self.n;
        let mut v: Vec<(i64, &(QMono, QMono), &Scalar)> = self
            .terms
            .iter()
            .map(|(k, c)| (k.0.weight(n) + k.1.weight(n), k, c))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        v.into_iter()
            .take(limit)
            .map(|(_, k, c)| format!("{}*{}⊗{}", c, k.0.render(false), k.1.render(true)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qv(n: u32, w: i64, j: u32, k: u32) -> QPoly {
        QPoly::var(n, w, Var::new(j, k))
    }

    #[test]
    fn weights_follow_principal_grading() {
        assert_eq!(Var::new(1, 0).weight(1), 1);
        assert_eq!(Var::new(2, 0).weight(1), 1);
        assert_eq!(Var::new(2, 1).weight(2), 7);
        assert_eq!(Var::new(3, 1).weight(2), 6);
        let vs = variables(2, 6);
        assert_eq!(
            vs,
            vec![Var::new(1, 0), Var::new(1, 1), Var::new(2, 0), Var::new(3, 0), Var::new(3, 1)]
        );
    }

    #[test]
    fn theta_squares_to_zero() {
        let t = QPoly::theta(1, 10);
        assert!(t.mul(&t).is_zero());
    }

    #[test]
    fn products_truncate() {
        let a = qv(1, 10, 1, 0);
        let sq = a.mul(&a);
        assert_eq!(sq.len(), 1);
        let m = sq.terms().next().unwrap().0;
        assert_eq!(m.weight(1), 2);
        let big = qv(1, 4, 1, 1); // weight 3
        assert!(big.mul(&big).is_zero());
        assert_eq!(big.mul(&big).exact(), 4);
    }

    #[test]
    fn derivatives() {
        let a = qv(1, 10, 1, 0);
        let sq = a.mul(&a);
        assert_eq!(sq.diff(Var::new(1, 0)), a.scale(&Scalar::from_int(2)));
        let ta = QPoly::theta(1, 10).mul(&a);
        assert_eq!(ta.diff_theta(), a);
        assert!(a.diff(Var::new(2, 1)).is_zero());
    }

    #[test]
    fn shift_x_examples() {
        let n = 2;
        let a = qv(n, 10, 1, 0);
        let s = a.shift_x().unwrap();
        let expect = a.add(&QPoly::x(n, 10).scale(&(Scalar::h_pow(1) * Scalar::frac(1, 4))));
        assert_eq!(s, expect);
        let b = qv(n, 10, 3, 0);
        let sb = b.shift_x().unwrap();
        let expect = b.add(&QPoly::x(n, 10).scale(&(Scalar::h_pow(1) * Scalar::frac(1, 2))));
        assert_eq!(sb, expect);
        assert_eq!(QPoly::one(n, 10).shift_x().unwrap(), QPoly::one(n, 10));
    }

    #[test]
    fn series_inverse() {
        assert_eq!(QPoly::one(1, 6).series_invert().unwrap(), QPoly::one(1, 6));
        let p = QPoly::one(1, 6).add(&qv(1, 6, 1, 0));
        let inv = p.series_invert().unwrap();
        assert_eq!(p.mul(&inv), QPoly::one(1, 6));
        // 1 - q + q^2 - ... to weight 6
        assert_eq!(inv.len(), 7);
        assert_eq!(qv(1, 6, 1, 0).series_invert(), Err(PolyError::NonUnitConstantTerm));
    }

    #[test]
    fn alphabet_mismatch() {
        let a = qv(1, 6, 1, 0);
        let b = qv(1, 6, 1, 0).with_alphabet(Alphabet::Primed);
        assert_eq!(a.checked_mul(&b), Err(PolyError::AlphabetMismatch));
        let c = qv(1, 8, 1, 0);
        assert_eq!(a.checked_add(&c), Err(PolyError::AlphabetMismatch));
    }
}

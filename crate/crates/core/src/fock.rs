//! Truncated spin module: two twisted neutral fermion fields, their zero-mode
//! pair `u, v`, normal-ordered bilinears and the contravariant form.
//!
//! Energies are integers in units of `1/2n`: a field-1 mode `φ^1_{k/2n}` moves
//! the energy by `−k`, a field-2 mode `φ^2_{k/2}` by `−n·k`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::qpoly::EXACT;
use crate::scalar::{pochhammer, q as rq, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FockError {
    #[error("mode {0} not allowed for field {1}")]
    ModeNotAllowed(String, u8),
    #[error("exponential series does not terminate within the truncation")]
    TruncationExceeded,
    #[error("exactness bound {have} does not cover the requested range {need}")]
    ExactnessInsufficient { have: i64, need: i64 },
    #[error("linear algebra: {0}")]
    Linalg(String),
}

/// A fermion mode. `Phi(a, k)` is `φ^1_{k/2n}` (a = 1) or `φ^2_{k/2}` (a = 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Phi(u8, i64),
    U,
    V,
}

impl Mode {
    /// Energy weight of one index step: 1 for field 1, n for field 2.
    pub fn unit(field: u8, n: u32) -> i64 {
        if field == 1 {
            1
        } else {
            n as i64
        }
    }

    /// Change of energy when the mode is applied.
    pub fn shift(&self, n: u32) -> i64 {
        match *self {
            Mode::Phi(a, k) => -Mode::unit(a, n) * k,
            _ => 0,
        }
    }

    pub fn is_annihilator(&self) -> bool {
        matches!(*self, Mode::U) || matches!(*self, Mode::Phi(_, k) if k > 0)
    }

    pub fn is_creator(&self) -> bool {
        matches!(*self, Mode::V) || matches!(*self, Mode::Phi(_, k) if k < 0)
    }

    /// Expansion into modes that act on canonical states directly
    /// (`φ^1_0 = (u+v)/√2`, `φ^2_0 = −i(u−v)/√2`).
    pub fn expand(&self) -> Vec<(Scalar, Mode)> {
        let r = Scalar::sqrt2().invert().expect("sqrt2 invertible");
        match *self {
            Mode::Phi(1, 0) => vec![(r.clone(), Mode::U), (r, Mode::V)],
            Mode::Phi(2, 0) => {
                let c = &r * &Scalar::i();
                vec![(-&c, Mode::U), (c, Mode::V)]
            }
            m => vec![(Scalar::one(), m)],
        }
    }

    /// Anticommutator `{self, o}` as a scalar (the mode-space form).
    pub fn anticommutator(&self, o: &Mode) -> Scalar {
        let mut acc = Scalar::zero();
        for (c1, m1) in self.expand() {
            for (c2, m2) in o.expand() {
                let v = match (m1, m2) {
                    (Mode::U, Mode::V) | (Mode::V, Mode::U) => Scalar::one(),
                    (Mode::Phi(a, i), Mode::Phi(b, j)) if a == b && i == -j => Scalar::sign(i),
                    _ => continue,
                };
                acc += &(&c1 * &c2 * v);
            }
        }
        acc
    }

    /// Adjoint for the contravariant form: `φ_k ↦ φ_{−k}`, `u ↔ v`.
    pub fn adjoint(&self) -> Mode {
        match *self {
            Mode::Phi(a, k) => Mode::Phi(a, -k),
            Mode::U => Mode::V,
            Mode::V => Mode::U,
        }
    }

    pub fn render(&self) -> String {
        match *self {
            Mode::Phi(a, k) => format!("{a}:{k}"),
            Mode::U => "u".into(),
            Mode::V => "v".into(),
        }
    }
}

/// Canonical basis state `v^b φ^1_{−k_1}… φ^2_{−l_1}…|0⟩` with
/// `k_1 > k_2 > …` and `l_1 > l_2 > …` (stored as positive magnitudes).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FockState {
    pub v: bool,
    pub f1: Vec<u32>,
    pub f2: Vec<u32>,
}

impl FockState {
    pub fn vacuum() -> Self {
        FockState::default()
    }

    pub fn one() -> Self {
        FockState { v: true, ..Default::default() }
    }

    pub fn energy(&self, n: u32) -> i64 {
        self.f1.iter().map(|&k| k as i64).sum::<i64>()
            + n as i64 * self.f2.iter().map(|&k| k as i64).sum::<i64>()
    }

    /// Number of fermionic factors mod 2.
    pub fn parity(&self) -> u8 {
        ((self.v as usize + self.f1.len() + self.f2.len()) % 2) as u8
    }

    /// Creation operators in canonical order.
    pub fn modes(&self) -> Vec<Mode> {
        let mut out = Vec::new();
        if self.v {
            out.push(Mode::V);
        }
        out.extend(self.f1.iter().map(|&k| Mode::Phi(1, -(k as i64))));
        out.extend(self.f2.iter().map(|&k| Mode::Phi(2, -(k as i64))));
        out
    }

    /// Applies a non-zero-index mode or `u`/`v`; `None` when the result vanishes.
    fn act(&self, m: Mode) -> Option<(bool, FockState)> {
        match m {
            Mode::V => {
                if self.v {
                    None
                } else {
                    Some((false, FockState { v: true, ..self.clone() }))
                }
            }
            Mode::U => {
                if self.v {
                    Some((false, FockState { v: false, ..self.clone() }))
                } else {
                    None
                }
            }
            Mode::Phi(a, k) => {
                debug_assert!(k != 0);
                let mag = k.unsigned_abs() as u32;
                let before_field = if a == 1 { 0 } else { self.f1.len() };
                let list = if a == 1 { &self.f1 } else { &self.f2 };
                let pos = list.iter().position(|&x| x <= mag);
                let present = pos.is_some_and(|p| list[p] == mag);
                let idx = pos.unwrap_or(list.len());
                let before = self.v as usize + before_field + idx;
                let mut neg = before % 2 == 1;
                let mut new = self.clone();
                let target = if a == 1 { &mut new.f1 } else { &mut new.f2 };
                if k < 0 {
                    if present {
                        return None;
                    }
                    target.insert(idx, mag);
                } else {
                    if !present {
                        return None;
                    }
                    target.remove(idx);
                    if k % 2 != 0 {
                        neg = !neg;
                    }
                }
                Some((neg, new))
            }
        }
    }

    /// Descriptor `"v? [a:k ...]"`.
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        parts.extend(self.f1.iter().map(|k| format!("1:-{k}")));
        parts.extend(self.f2.iter().map(|k| format!("2:-{k}")));
        let body = format!("[{}]", parts.join(" "));
        if self.v {
            format!("v {body}")
        } else {
            body
        }
    }

    /// All states of energy exactly `e` (both parities).
    pub fn of_energy(n: u32, e: i64) -> Vec<FockState> {
        let mut out = Vec::new();
        let nn = n as i64;
        for e2 in (0..=e / nn).rev() {
            let e1 = e - nn * e2;
            let p1 = distinct_partitions(e1, e1);
            let p2 = distinct_partitions(e2, e2);
            for a in &p1 {
                for b in &p2 {
                    for v in [false, true] {
                        out.push(FockState { v, f1: a.clone(), f2: b.clone() });
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// All states of energy `≤ e`.
    pub fn up_to(n: u32, e: i64) -> Vec<FockState> {
        (0..=e).flat_map(|k| FockState::of_energy(n, k)).collect()
    }
}

/// Partitions of `e` into distinct parts `≤ max`, parts decreasing.
fn distinct_partitions(e: i64, max: i64) -> Vec<Vec<u32>> {
    if e == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=max.min(e)).rev() {
        for mut rest in distinct_partitions(e - first, first - 1) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// Finite combination of basis states, truncated at energy `cap`.
#[derive(Clone, Debug)]
pub struct FockVector {
    n: u32,
    cap: i64,
    exact: i64,
    terms: BTreeMap<FockState, Scalar>,
}

impl PartialEq for FockVector {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.terms == o.terms
    }
}

impl FockVector {
    pub fn zero(n: u32, cap: i64) -> Self {
        FockVector { n, cap, exact: EXACT, terms: BTreeMap::new() }
    }

    pub fn basis(n: u32, cap: i64, s: FockState) -> Self {
        let mut v = Self::zero(n, cap);
        v.add_term(s, Scalar::one());
        v
    }

    pub fn vacuum(n: u32, cap: i64) -> Self {
        Self::basis(n, cap, FockState::vacuum())
    }

    /// `|1⟩ = v|0⟩`.
    pub fn one(n: u32, cap: i64) -> Self {
        Self::basis(n, cap, FockState::one())
    }

    /// `|a⟩` for `a ∈ {0, 1}`.
    pub fn charge(n: u32, cap: i64, a: u8) -> Self {
        if a == 0 {
            Self::vacuum(n, cap)
        } else {
            Self::one(n, cap)
        }
    }

    pub fn zero_like(&self) -> Self {
        FockVector { terms: BTreeMap::new(), exact: EXACT, ..self.clone() }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    /// Components of energy `≤ exact()` are guaranteed correct.
    pub fn exact(&self) -> i64 {
        self.exact.min(EXACT)
    }

    pub fn with_exact(mut self, e: i64) -> Self {
        self.exact = self.exact.min(e);
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

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, s: &FockState) -> Scalar {
        self.terms.get(s).cloned().unwrap_or_default()
    }

    /// ℤ₂-degree if homogeneous.
    pub fn parity(&self) -> Option<u8> {
        let mut it = self.terms.keys().map(|s| s.parity());
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    pub fn add_term(&mut self, s: FockState, c: Scalar) {
        if c.is_zero() {
            return;
        }
        if s.energy(self.n) > self.cap {
            self.exact = self.exact.min(self.cap);
            return;
        }
        match self.terms.get_mut(&s) {
            Some(v) => {
                *v += &c;
                if v.is_zero() {
                    self.terms.remove(&s);
                }
            }
            None => {
                self.terms.insert(s, c);
            }
        }
    }

    pub fn add(&self, o: &FockVector) -> FockVector {
        let mut r = self.clone();
        r.exact = self.exact.min(o.exact);
        for (s, c) in &o.terms {
            r.add_term(s.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &FockVector) -> FockVector {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> FockVector {
        let mut r = self.zero_like();
        r.exact = self.exact;
        for (st, c) in &self.terms {
            r.add_term(st.clone(), c * s);
        }
        r
    }

    /// Components of energy `≤ e`.
    pub fn truncated(&self, e: i64) -> FockVector {
        let mut r = self.clone();
        let n = self.n;
        r.terms.retain(|s, _| s.energy(n) <= e);
        r
    }

    pub fn agrees_to(&self, o: &FockVector, e: i64) -> bool {
        self.truncated(e).terms == o.truncated(e).terms
    }

    pub fn render(&self) -> Vec<(String, String)> {
        self.terms.iter().map(|(s, c)| (s.render(), c.to_string())).collect()
    }

    /// Applies one mode, raw: no truncation, no bound bookkeeping.
    fn act_raw(&self, m: Mode, out: &mut BTreeMap<FockState, Scalar>, scale: &Scalar) {
        for (c0, m0) in m.expand() {
            let c = &c0 * scale;
            for (s, v) in &self.terms {
                if let Some((neg, t)) = s.act(m0) {
                    let mut val = &c * v;
                    if neg {
                        val = -val;
                    }
                    match out.get_mut(&t) {
                        Some(x) => *x += &val,
                        None => {
                            out.insert(t, val);
                        }
                    }
                }
            }
        }
    }

    fn from_raw(&self, raw: BTreeMap<FockState, Scalar>, exact: i64) -> FockVector {
        let mut r = self.zero_like();
        for (s, c) in raw {
            r.add_term(s, c);
        }
        r.exact = r.exact.min(exact);
        r
    }
}

/// Shifts an exactness bound, keeping "exact everywhere" intact.
fn shift_bound(b: i64, s: i64) -> i64 {
    if b >= EXACT {
        EXACT
    } else {
        b + s
    }
}

/// Applies a single mode.
pub fn apply_mode(m: Mode, v: &FockVector) -> FockVector {
    let mut raw = BTreeMap::new();
    v.act_raw(m, &mut raw, &Scalar::one());
    let s = m.shift(v.n);
    let ex = shift_bound(v.exact, s).min(if v.exact >= EXACT { EXACT } else { v.cap });
    v.from_raw(raw, ex)
}

/// `Σ c·A·B + constant`, optionally flagged as normal ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct Bilinear {
    pub terms: Vec<(Scalar, Mode, Mode)>,
    pub constant: Scalar,
    pub normal_ordered: bool,
    /// Input energies on which the (window-truncated) sum acts exactly.
    pub exact_in: i64,
}

impl Default for Bilinear {
    fn default() -> Self {
        Bilinear { terms: vec![], constant: Scalar::zero(), normal_ordered: true, exact_in: EXACT }
    }
}

impl Bilinear {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Scalar) -> Self {
        Bilinear { constant: c, ..Self::default() }
    }

    pub fn raw(terms: Vec<(Scalar, Mode, Mode)>) -> Self {
        let nord = terms.iter().all(|(_, a, b)| ordered_pair(a, b));
        Bilinear { terms, normal_ordered: nord, ..Self::default() }
    }

    /// Adds `c·:AB:` (vacuum expectation removed).
    pub fn push_normal(&mut self, c: Scalar, a: Mode, b: Mode) {
        if c.is_zero() {
            return;
        }
        for (ca, ma) in a.expand() {
            for (cb, mb) in b.expand() {
                let w = &c * &ca * cb.clone();
                if ma.is_annihilator() && mb.is_creator() {
                    self.terms.push((-w, mb, ma));
                } else if ma != mb || matches!(ma, Mode::Phi(..)) {
                    self.terms.push((w, ma, mb));
                }
            }
        }
    }

    pub fn add(&self, o: &Bilinear) -> Bilinear {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Bilinear {
            terms,
            constant: &self.constant + &o.constant,
            normal_ordered: self.normal_ordered && o.normal_ordered,
            exact_in: self.exact_in.min(o.exact_in),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Bilinear {
        Bilinear {
            terms: self.terms.iter().map(|(c, a, b)| (c * s, *a, *b)).collect(),
            constant: &self.constant * s,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.simplified().terms.is_empty()
    }

    /// Merges duplicate mode pairs and drops zeros.
    pub fn simplified(&self) -> Bilinear {
        let mut acc: BTreeMap<(Mode, Mode), Scalar> = BTreeMap::new();
        for (c, a, b) in &self.terms {
            *acc.entry((*a, *b)).or_default() += c;
        }
        Bilinear {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|((a, b), c)| (c, a, b)).collect(),
            ..self.clone()
        }
    }

    /// Smallest energy shift among the terms (0 for a pure constant).
    pub fn min_shift(&self, n: u32) -> i64 {
        self.terms.iter().map(|(_, a, b)| a.shift(n) + b.shift(n)).min().unwrap_or(0)
    }

    pub fn max_shift(&self, n: u32) -> i64 {
        self.terms.iter().map(|(_, a, b)| a.shift(n) + b.shift(n)).max().unwrap_or(0)
    }
}

fn ordered_pair(a: &Mode, b: &Mode) -> bool {
    !(a.is_annihilator() && b.is_creator())
        && !matches!(a, Mode::Phi(_, 0))
        && !matches!(b, Mode::Phi(_, 0))
}

/// Moves annihilators to the right; contractions go into the constant.
pub fn normal_order(b: &Bilinear) -> Bilinear {
    let mut out = Bilinear { constant: b.constant.clone(), exact_in: b.exact_in, ..Bilinear::default() };
    for (c, x, y) in &b.terms {
        for (cx, mx) in x.expand() {
            for (cy, my) in y.expand() {
                let w = c * &cx * cy.clone();
                if mx.is_annihilator() && my.is_creator() {
                    out.constant += &(&w * &mx.anticommutator(&my));
                    out.terms.push((-w, my, mx));
                } else if mx == my && !matches!(mx, Mode::Phi(..)) {
                    // u² = v² = 0
                } else {
                    out.terms.push((w, mx, my));
                }
            }
        }
    }
    let mut s = out.simplified();
    s.normal_ordered = true;
    s
}

/// Applies a bilinear; intermediate states are not truncated.
pub fn apply_bilinear(b: &Bilinear, v: &FockVector) -> FockVector {
    let n = v.n;
    let mut raw: BTreeMap<FockState, Scalar> = BTreeMap::new();
    for (c, x, y) in &b.terms {
        let mut mid = BTreeMap::new();
        v.act_raw(*y, &mut mid, &Scalar::one());
        if mid.is_empty() {
            continue;
        }
        let mv = FockVector { terms: mid, ..v.zero_like() };
        mv.act_raw(*x, &mut raw, c);
    }
    if !b.constant.is_zero() {
        for (s, c) in &v.terms {
            *raw.entry(s.clone()).or_default() += &(c * &b.constant);
        }
    }
    raw.retain(|_, c| !c.is_zero());
    let lo = b.min_shift(n).min(0);
    // A fully known input whose states all lie where the sum is exact
    // produces an output exact up to the cap.
    let top = v.terms.keys().map(|s| s.energy(n)).max().unwrap_or(i64::MIN);
    let mut ex = if v.exact >= EXACT && top <= b.exact_in {
        EXACT
    } else {
        shift_bound(v.exact.min(b.exact_in), lo)
    };
    if v.exact < EXACT || b.exact_in < EXACT {
        ex = ex.min(v.cap);
    }
    v.from_raw(raw, ex)
}

/// `[A, B]v = A(Bv) − B(Av)`.
pub fn commutator_apply(a: &Bilinear, b: &Bilinear, v: &FockVector) -> FockVector {
    apply_bilinear(a, &apply_bilinear(b, v)).sub(&apply_bilinear(b, &apply_bilinear(a, v)))
}

/// `Σ_{m ≤ max_order} (t·b)^m v / m!`, truncated at the vector's cap.
pub fn exp_apply(b: &Bilinear, t: &Scalar, v: &FockVector, max_order: Option<u32>) -> Result<FockVector, FockError> {
    let n = v.n;
    let raising = !b.terms.is_empty() && b.min_shift(n) > 0 && b.constant.is_zero();
    if !raising && max_order.is_none() && !(b.terms.is_empty() && b.constant.is_zero()) {
        return Err(FockError::TruncationExceeded);
    }
    let tb = b.scale(t);
    let mut sum = v.clone();
    let mut term = v.clone();
    let mut m = 1u32;
    loop {
        if let Some(mo) = max_order {
            if m > mo {
                break;
            }
        }
        term = apply_bilinear(&tb, &term).scale(&Scalar::frac(1, m as i64));
        if term.is_zero() {
            break;
        }
        sum = sum.add(&term);
        m += 1;
    }
    Ok(sum)
}

/// Index sum for a Heisenberg mode `m`, or an error when it is not admissible.
pub fn alpha_index(n: u32, a: u8, m: &BigRational) -> Result<i64, FockError> {
    let scale = if a == 1 { 2 * n as i64 } else { 2 };
    let s = m * BigRational::from_integer(scale.into());
    if !s.is_integer() || s.numer() % 2 == num_bigint::BigInt::zero() || !(a == 1 || a == 2) {
        return Err(FockError::ModeNotAllowed(m.to_string(), a));
    }
    Ok(s.to_integer().to_i64().unwrap())
}

/// Heisenberg mode `α^a_m` as a normal-ordered bilinear; the sum is
/// restricted to modes of energy `≤ window` and acts exactly on states of
/// energy `≤ window − |shift|`.
pub fn alpha_bilinear(n: u32, a: u8, m: &BigRational, window: i64) -> Result<Bilinear, FockError> {
    let s = alpha_index(n, a, m)?;
    let w = Mode::unit(a, n);
    let pref = if a == 1 {
        (Scalar::from_int(2) * Scalar::sqrt_n(n)).invert().unwrap()
    } else {
        Scalar::frac(1, 2)
    };
    let mut b = Bilinear::zero();
    let lim = window / w;
    for i in -lim..=lim {
        let j = s - i;
        if j.abs() > lim {
            continue;
        }
        b.push_normal(&pref * &Scalar::sign(j), Mode::Phi(a, i), Mode::Phi(a, j));
    }
    b.exact_in = window - (w * s).abs();
    Ok(b.simplified())
}

/// Mode `m` (energy shift `−T`) of `:φ^a(z) φ^b(z):`, coefficient of the
/// product `φ^a_i φ^b_j` with `unit_a·i + unit_b·j = T`.
pub fn field_bilinear(n: u32, a: u8, b: u8, t: i64, window: i64) -> Bilinear {
    let (wa, wb) = (Mode::unit(a, n), Mode::unit(b, n));
    let mut out = Bilinear::zero();
    for i in -(window / wa)..=(window / wa) {
        let rest = t - wa * i;
        if rest % wb != 0 {
            continue;
        }
        let j = rest / wb;
        if (wb * j).abs() > window {
            continue;
        }
        out.push_normal(Scalar::one(), Mode::Phi(a, i), Mode::Phi(b, j));
    }
    out.exact_in = window - t.abs();
    out.simplified()
}

/// `b_{pq}(k) = (k/2n′ + 1/2 − q)_q − (−k/2n′ + 1/2 − p)_q`.
pub fn b_pq(np: u32, p: i64, q: i64, k: i64) -> BigRational {
    let x = rq(k, 2 * np as i64);
    let half = rq(1, 2);
    pochhammer(&(&x + &half - BigRational::from_integer(q.into())), q)
        - pochhammer(&(-&x + &half - BigRational::from_integer(p.into())), q)
}

/// `X^a_{pq} = Σ_{k>(q−p)n′} (−1)^k b_{pq}(k) φ^a_{−k} φ^a_{k+2n′(p−q)}`,
/// window-truncated (`n′ = n` for field 1, `1` for field 2).
pub fn x_bilinear(n: u32, a: u8, p: i64, q: i64, window: i64) -> Bilinear {
    let np = if a == 1 { n } else { 1 };
    let w = Mode::unit(a, n);
    let d = 2 * np as i64 * (p - q);
    let mut b = Bilinear::zero();
    let lim = window / w;
    if q == 0 {
        return b;
    }
    for k in ((q - p) * np as i64 + 1)..=lim {
        let j = k + d;
        if j.abs() > lim {
            continue;
        }
        let c = b_pq(np, p, q, k);
        if c.is_zero() {
            continue;
        }
        let c = Scalar::from_rational(c) * Scalar::sign(k);
        // −k < 0 is a creator, or k + d ≥ … : the pair is already normal ordered
        b.push_normal(c, Mode::Phi(a, -k), Mode::Phi(a, j));
    }
    b.exact_in = window - (w * d).abs();
    b.simplified()
}

/// `L_k` in its fermionic form:
/// `Σ_j (−1)^j (j/4n) :φ^1_{−j} φ^1_{j+2nk}: + (−1)^j (j/4) :φ^2_{−j} φ^2_{j+2k}:`
/// plus the vacuum constant for `k = 0`.
pub fn virasoro_bilinear(n: u32, k: i64, window: i64) -> Bilinear {
    let mut b = Bilinear::zero();
    let nn = n as i64;
    for (a, sh, den) in [(1u8, 2 * nn * k, 4 * nn), (2u8, 2 * k, 4)] {
        let w = Mode::unit(a, n);
        let lim = window / w;
        for j in -lim..=lim {
            let r = j + sh;
            if r.abs() > lim || j == 0 {
                continue;
            }
            b.push_normal(Scalar::sign(j) * Scalar::frac(j, den), Mode::Phi(a, -j), Mode::Phi(a, r));
        }
    }
    if k == 0 {
        b.constant = virasoro_constant(n);
    }
    b.exact_in = window - (2 * nn * k).abs();
    b.simplified()
}

/// `(n+1)/16n + (n²−1)/24n`.
pub fn virasoro_constant(n: u32) -> Scalar {
    let nn = n as i64;
    Scalar::frac(nn + 1, 16 * nn) + Scalar::frac(nn * nn - 1, 24 * nn)
}

/// Contravariant form: `⟨0|0⟩ = 1`, `φ_k† = φ_{−k}`, `v† = u`.
pub fn pairing(a: &FockVector, b: &FockVector) -> Scalar {
    let mut acc = Scalar::zero();
    for (s, c) in a.terms() {
        let mut w = b.clone();
        for m in s.modes() {
            w = apply_mode(m.adjoint(), &w);
            if w.is_zero() {
                break;
            }
        }
        acc += &(c * &w.coeff(&FockState::vacuum()));
    }
    acc
}

/// Checks the anticommutator `{A, B}` on a vector against the scalar form.
pub fn anticommutator_residual(a: Mode, b: Mode, v: &FockVector) -> FockVector {
    let lhs = apply_mode(a, &apply_mode(b, v)).add(&apply_mode(b, &apply_mode(a, v)));
    lhs.sub(&v.scale(&a.anticommutator(&b)))
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(s, c)| format!("[{c}] {}", s.render())).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Counts from a relation sweep.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct RelationReport {
    pub checked: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl RelationReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    fn merge(mut self, o: RelationReport) -> Self {
        self.checked += o.checked;
        self.failed += o.failed;
        if self.first_failure.is_none() {
            self.first_failure = o.first_failure;
        }
        self
    }
}

/// `{φ^a_i, φ^b_j} = δ_{ab}(−1)^i δ_{i,−j}` for all `|i|, |j| ≤ k_max`, applied
/// to every basis state of energy `≤ e`.
pub fn clifford_check(n: u32, k_max: i64, e: i64, jobs: usize) -> RelationReport {
    let mut modes = Vec::new();
    for a in [1u8, 2] {
        for k in -k_max..=k_max {
            modes.push(Mode::Phi(a, k));
        }
    }
    let cap = e + k_max * n as i64;
    let states = FockState::up_to(n, e);
    let parts = crate::exec::par_map(jobs, &states, |s| {
        let v = FockVector::basis(n, cap, s.clone());
        let mut rep = RelationReport::default();
        for (x, mx) in modes.iter().enumerate() {
            for my in &modes[x..] {
                let (Mode::Phi(a, i), Mode::Phi(b, j)) = (*mx, *my) else { unreachable!() };
                let expect = if a == b && i == -j { Scalar::sign(i) } else { Scalar::zero() };
                let lhs = apply_mode(*mx, &apply_mode(*my, &v)).add(&apply_mode(*my, &apply_mode(*mx, &v)));
                rep.checked += 1;
                if lhs != v.scale(&expect) {
                    rep.failed += 1;
                    rep.first_failure.get_or_insert_with(|| format!("{{{}, {}}} on {}", mx.render(), my.render(), s.render()));
                }
            }
        }
        rep
    });
    parts.into_iter().fold(RelationReport::default(), RelationReport::merge)
}

/// `[α^a_k, α^b_l] = kδ_{ab}δ_{k,−l}` on every basis state of energy `≤ e`,
/// for all admissible modes shifting energy by at most `e`.
pub fn heisenberg_check(n: u32, e: i64, jobs: usize) -> RelationReport {
    let window = 3 * e + 4 * n as i64;
    let mut ops: Vec<(u8, BigRational, Bilinear)> = Vec::new();
    for a in [1u8, 2] {
        let (unit, scale) = if a == 1 { (1, 2 * n as i64) } else { (n as i64, 2) };
        for s in (-e..=e).filter(|s| s % 2 != 0 && (s * unit).abs() <= e) {
            let m = rq(s, scale);
            let b = alpha_bilinear(n, a, &m, window).expect("admissible mode");
            ops.push((a, m, b));
        }
    }
    let cap = 2 * e;
    let states = FockState::up_to(n, e);
    let parts = crate::exec::par_map(jobs, &states, |s| {
        let v = FockVector::basis(n, cap, s.clone());
        let mut rep = RelationReport::default();
        let images: Vec<FockVector> = ops.iter().map(|(_, _, b)| apply_bilinear(b, &v)).collect();
        for (x, (a, k, bx)) in ops.iter().enumerate() {
            for (y, (b, l, by)) in ops.iter().enumerate().skip(x) {
                let lhs = apply_bilinear(bx, &images[y]).sub(&apply_bilinear(by, &images[x]));
                let expect = if a == b && *k == -l { Scalar::from_rational(k.clone()) } else { Scalar::zero() };
                rep.checked += 1;
                let ok = lhs.exact() >= s.energy(n) && lhs == v.scale(&expect);
                if !ok {
                    rep.failed += 1;
                    rep.first_failure.get_or_insert_with(|| format!("[a{a}_{k}, a{b}_{l}] on {}", s.render()));
                }
            }
        }
        rep
    });
    parts.into_iter().fold(RelationReport::default(), RelationReport::merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(a: u8, k: i64) -> Mode {
        Mode::Phi(a, k)
    }

    #[test]
    fn vacuum_conditions() {
        let vac = FockVector::vacuum(2, 10);
        assert!(apply_mode(phi(1, 1), &vac).is_zero());
        assert!(apply_mode(Mode::U, &vac).is_zero());
        let r = apply_mode(phi(1, 1), &apply_mode(phi(1, -1), &vac));
        assert_eq!(r, vac.scale(&Scalar::from_int(-1)));
    }

    #[test]
    fn zero_mode_squares() {
        let s = FockVector::basis(1, 10, FockState { v: false, f1: vec![2], f2: vec![1] });
        for a in [1, 2] {
            let r = apply_mode(phi(a, 0), &apply_mode(phi(a, 0), &s));
            assert_eq!(r, s.scale(&Scalar::frac(1, 2)));
        }
        let r = anticommutator_residual(phi(1, 0), phi(2, 0), &s);
        assert!(r.is_zero());
    }

    #[test]
    fn normal_order_examples() {
        let b = Bilinear::raw(vec![(Scalar::one(), phi(1, 1), phi(1, -1))]);
        let no = normal_order(&b);
        assert_eq!(no.terms, vec![(Scalar::from_int(-1), phi(1, -1), phi(1, 1))]);
        assert_eq!(no.constant, Scalar::from_int(-1));
        let uv = normal_order(&Bilinear::raw(vec![(Scalar::one(), Mode::U, Mode::V)]));
        assert_eq!(uv.terms, vec![(Scalar::from_int(-1), Mode::V, Mode::U)]);
        assert_eq!(uv.constant, Scalar::one());
    }

    #[test]
    fn heisenberg_vacuum_bracket() {
        for n in [1, 2, 3] {
            let m = rq(1, 2 * n as i64);
            let ap = alpha_bilinear(n, 1, &m, 12).unwrap();
            let am = alpha_bilinear(n, 1, &(-m), 12).unwrap();
            let vac = FockVector::vacuum(n, 12);
            assert!(apply_bilinear(&ap, &vac).is_zero());
            let r = commutator_apply(&ap, &am, &vac);
            assert_eq!(r, vac.scale(&Scalar::frac(1, 2 * n as i64)));
        }
        assert!(alpha_bilinear(2, 1, &rq(1, 2), 8).is_err());
    }

    #[test]
    fn pairing_examples() {
        let n = 2;
        let vac = FockVector::vacuum(n, 8);
        let one = FockVector::one(n, 8);
        assert_eq!(pairing(&vac, &vac), Scalar::one());
        assert_eq!(pairing(&one, &one), Scalar::one());
        let s = apply_mode(phi(1, -1), &vac);
        assert_eq!(pairing(&s, &s), Scalar::from_int(-1));
    }

    #[test]
    fn state_counts() {
        // n = 1: two copies of distinct partitions, times the v bit
        let st = FockState::of_energy(1, 3);
        assert_eq!(st.len(), 2 * (2 + 1 + 1 + 2));
    }

    #[test]
    fn x_bilinear_facts() {
        assert!(x_bilinear(2, 1, 3, 0, 10).terms.is_empty());
        for k in -5..6 {
            assert_eq!(b_pq(3, 0, 1, k), rq(k, 3) - rq(1, 1));
            assert_eq!(b_pq(3, 1, 1, k), rq(k, 3));
        }
    }

    #[test]
    fn virasoro_vacuum() {
        for n in [1, 2] {
            let vac = FockVector::vacuum(n, 8);
            let l0 = virasoro_bilinear(n, 0, 12);
            assert_eq!(apply_bilinear(&l0, &vac), vac.scale(&virasoro_constant(n)));
            assert!(apply_bilinear(&virasoro_bilinear(n, 1, 12), &vac).is_zero());
        }
    }

    #[test]
    fn relation_sweeps_small() {
        for n in [1, 2] {
            assert!(clifford_check(n, 3, 3, 1).ok());
            let h = heisenberg_check(n, 4, 1);
            assert!(h.ok() && h.checked > 0, "{h:?}");
        }
    }
}

//! 2×2 matrix pseudo-differential operators over x-extended polynomials,
//! the dressing operators of a tau pair and the string-equation residuals.
//!
//! An operator stores, per matrix entry, the coefficients of `∂^j` for
//! `j ≥ −depth`. Orders `≥ −tail` are guaranteed; each coefficient carries
//! its own weight-exactness bound.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::boson::gamma_minus_apply;
use crate::qpoly::{variables, PolyError, QMono, QPoly, Var, EXACT};
use crate::scalar::{binomial, pochhammer, q as rq, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdoError {
    #[error("the ∂⁰ part is not invertible")]
    SingularLeadingPart,
    #[error("tau pair is outside the big cell")]
    NotInBigCell,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

type Entry = BTreeMap<i64, QPoly>;

#[derive(Clone, Debug)]
pub struct Pdo {
    n: u32,
    w_max: i64,
    depth: i64,
    tail: i64,
    /// Coefficients of `∂^k` are kept to weight `band + k` only.
    band: i64,
    e: [[Entry; 2]; 2],
}

/// Which orders a projection keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Le0,
    Lt0,
    Gt0,
}

fn gen_binomial(i: i64, k: u32) -> Scalar {
    Scalar::from_rational(binomial(&BigRational::from_integer(i.into()), k))
}

impl Pdo {
    pub fn zero(n: u32, w_max: i64, depth: i64) -> Self {
        Pdo { n, w_max, depth, tail: depth, band: EXACT, e: Default::default() }
    }

    pub fn zero_like(&self) -> Self {
        Pdo { band: self.band, ..Pdo::zero(self.n, self.w_max, self.depth) }
    }

    /// Drops weights above `band + k` at order `k`; weight and order then
    /// trade off, which is all a fixed-size check down a tail needs.
    pub fn with_band(&self, band: i64) -> Pdo {
        let mut r = self.clone();
        r.band = band.min(self.band);
        r.e = Default::default();
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (k, p) in m {
                    r.add_at(i, j, *k, p.clone());
                }
            }
        }
        r
    }

    pub fn band(&self) -> i64 {
        self.band
    }

    fn cap_at(&self, k: i64) -> i64 {
        self.band.saturating_add(k).min(EXACT)
    }

    /// Constant matrix times `∂^k`.
    pub fn constant(n: u32, w_max: i64, depth: i64, m: [[Scalar; 2]; 2], k: i64) -> Self {
        let mut p = Pdo::zero(n, w_max, depth);
        for (r, row) in m.iter().enumerate() {
            for (c, s) in row.iter().enumerate() {
                p.add_at(r, c, k, QPoly::constant(n, w_max, s.clone()));
            }
        }
        p
    }

    pub fn identity(n: u32, w_max: i64, depth: i64) -> Self {
        Self::d_pow(n, w_max, depth, 0)
    }

    /// `∂^k · I`.
    pub fn d_pow(n: u32, w_max: i64, depth: i64, k: i64) -> Self {
        let (o, z) = (Scalar::one(), Scalar::zero());
        Self::constant(n, w_max, depth, [[o.clone(), z.clone()], [z, o]], k)
    }

    /// `E_{aa}∂^k` for `a ∈ {1, 2}`.
    pub fn e_aa(n: u32, w_max: i64, depth: i64, a: usize, k: i64) -> Self {
        let mut m: [[Scalar; 2]; 2] = Default::default();
        m[a - 1][a - 1] = Scalar::one();
        Self::constant(n, w_max, depth, m, k)
    }

    /// `J = [[0, −i], [−i, 0]]`.
    pub fn j_matrix(n: u32, w_max: i64, depth: i64) -> Self {
        let mi = -Scalar::i();
        Self::constant(n, w_max, depth, [[Scalar::zero(), mi.clone()], [mi, Scalar::zero()]], 0)
    }

    /// Function `f` placed on the diagonal.
    pub fn function(f: &QPoly, depth: i64) -> Self {
        let mut p = Pdo::zero(f.n(), f.w_max(), depth);
        p.add_at(0, 0, 0, f.clone());
        p.add_at(1, 1, 0, f.clone());
        p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn w_max(&self) -> i64 {
        self.w_max
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    /// Orders `≥ −tail` are guaranteed.
    pub fn tail(&self) -> i64 {
        self.tail
    }

    pub fn with_tail(mut self, t: i64) -> Self {
        self.tail = self.tail.min(t);
        self
    }

    pub fn entry(&self, r: usize, c: usize) -> &Entry {
        &self.e[r][c]
    }

    pub fn coeff(&self, r: usize, c: usize, k: i64) -> QPoly {
        self.e[r][c].get(&k).cloned().unwrap_or_else(|| QPoly::zero(self.n, self.w_max))
    }

    /// Highest order present.
    pub fn top(&self) -> Option<i64> {
        self.e.iter().flatten().filter_map(|m| m.keys().next_back().copied()).max()
    }

    pub fn add_at(&mut self, r: usize, c: usize, k: i64, p: QPoly) {
        if k < -self.depth {
            return;
        }
        let cap = self.cap_at(k);
        let p = if cap < EXACT {
            let before = p.len();
            let t = p.truncated(cap);
            if t.len() < before { t.with_exact(cap) } else { t }
        } else {
            p
        };
        let slot = &mut self.e[r][c];
        let v = match slot.remove(&k) {
            Some(old) => old.add(&p),
            None => p,
        };
        // zero coefficients are kept when they carry an exactness bound
        if !v.is_zero() || v.exact() < EXACT {
            slot.insert(k, v);
        }
    }

    pub fn add(&self, o: &Pdo) -> Pdo {
        let mut r = self.clone();
        r.tail = self.tail.min(o.tail);
        r.band = self.band.min(o.band);
        for (i, row) in o.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (k, p) in m {
                    r.add_at(i, j, *k, p.clone());
                }
            }
        }
        r
    }

    pub fn scale(&self, s: &Scalar) -> Pdo {
        self.map(|_, _, _, p| Some(p.scale(s)))
    }

    pub fn sub(&self, o: &Pdo) -> Pdo {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    fn map(&self, f: impl Fn(usize, usize, i64, &QPoly) -> Option<QPoly>) -> Pdo {
        let mut r = self.zero_like();
        r.tail = self.tail;
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (k, p) in m {
                    if let Some(q) = f(i, j, *k, p) {
                        r.add_at(i, j, *k, q);
                    }
                }
            }
        }
        r
    }

    /// Caps every coefficient's exactness at `w`.
    pub fn cap_exact(&self, w: i64) -> Pdo {
        self.map(|_, _, _, p| Some(p.clone().with_exact(w)))
    }

    /// `f·A` for a function `f` (no derivatives involved).
    pub fn mul_fn_left(&self, f: &QPoly) -> Pdo {
        self.map(|_, _, _, p| Some(f.mul(p)))
    }

    /// `A·∂^k`: a pure order shift.
    pub fn mul_d_right(&self, k: i64) -> Pdo {
        let mut r = self.zero_like();
        r.tail = self.tail - k;
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (o, p) in m {
                    r.add_at(i, j, o + k, p.clone());
                }
            }
        }
        r.tail = r.tail.min(r.depth);
        r
    }

    /// Right multiplication by `E_{aa}`: keeps column `a`.
    pub fn mul_e_right(&self, a: usize) -> Pdo {
        self.map(|_, j, _, p| (j == a - 1).then(|| p.clone()))
    }

    /// Composition with `∂^i ∘ f = Σ_k C(i,k) f^{(k)} ∂^{i−k}`.
    pub fn mul(&self, o: &Pdo) -> Pdo {
        let mut r = Pdo::zero(self.n, self.w_max.min(o.w_max), self.depth.min(o.depth));
        r.band = self.band.min(o.band);
        let depth = r.depth;
        // missing tails only reach down to −t_A + top_B and −t_B + top_A
        let mut tail = depth;
        if let Some(tb) = o.top() {
            tail = tail.min(self.tail - tb);
        }
        if let Some(ta) = self.top() {
            tail = tail.min(o.tail - ta);
        }
        r.tail = tail;
        // derivative caches per (entry of o, order)
        let mut cache: BTreeMap<(usize, usize, i64), Vec<QPoly>> = BTreeMap::new();
        let mut binom: BTreeMap<(i64, u32), Scalar> = BTreeMap::new();
        for row in 0..2 {
            for col in 0..2 {
                let mut acc: Entry = BTreeMap::new();
                for mid in 0..2 {
                    for (i, a) in &self.e[row][mid] {
                        for (j, b) in &o.e[mid][col] {
                            let ders = cache.entry((mid, col, *j)).or_insert_with(|| vec![b.clone()]);
                            let mut k: u32 = 0;
                            loop {
                                let ord = i + j - k as i64;
                                if ord < -depth || (*i >= 0 && k as i64 > *i) {
                                    break;
                                }
                                if ders.len() <= k as usize {
                                    let next = ders[k as usize - 1].diff_x();
                                    ders.push(next);
                                }
                                let d = &ders[k as usize];
                                if d.is_zero() && d.exact() >= EXACT {
                                    break;
                                }
                                let c = binom.entry((*i, k)).or_insert_with(|| gen_binomial(*i, k));
                                if !c.is_zero() {
                                    let cap = r.cap_at(ord);
                                    acc.entry(ord)
                                        .or_insert_with(|| QPoly::zero(r.n, r.w_max))
                                        .add_product(a, d, c, cap);
                                }
                                k += 1;
                            }
                        }
                    }
                }
                for (k, p) in acc {
                    r.add_at(row, col, k, p);
                }
            }
        }
        r
    }

    /// Formal adjoint: `∂* = −∂`, `(f∂^j)* = (−∂)^j ∘ f`, transposed.
    pub fn adjoint(&self) -> Pdo {
        let mut r = self.zero_like();
        r.tail = self.tail;
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (o, f) in m {
                    let sign = Scalar::sign(*o);
                    let mut d = f.clone();
                    let mut k: u32 = 0;
                    loop {
                        let ord = o - k as i64;
                        if ord < -self.depth || (*o >= 0 && k as i64 > *o) {
                            break;
                        }
                        if k > 0 {
                            d = d.diff_x();
                        }
                        if d.is_zero() && d.exact() >= EXACT {
                            break;
                        }
                        let c = gen_binomial(*o, k) * &sign;
                        r.add_at(j, i, ord, d.scale(&c));
                        k += 1;
                    }
                }
            }
        }
        r
    }

    pub fn project(&self, part: Part) -> Pdo {
        let mut r = self.map(|_, _, k, p| {
            let keep = match part {
                Part::Le0 => k <= 0,
                Part::Lt0 => k < 0,
                Part::Gt0 => k > 0,
            };
            keep.then(|| p.clone())
        });
        if part == Part::Gt0 && self.tail >= -1 {
            r.tail = r.depth;
        }
        r
    }

    /// Derivative of the symbol in `∂`: `Σ f_j ∂^j ↦ Σ j f_j ∂^{j−1}`.
    pub fn symbol_derivative(&self) -> Pdo {
        let mut r = self.zero_like();
        r.tail = (self.tail - 1).min(self.depth);
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (o, p) in m {
                    if *o != 0 {
                        r.add_at(i, j, o - 1, p.scale(&Scalar::from_int(*o)));
                    }
                }
            }
        }
        r
    }

    /// Coefficient-wise `∂/∂q_k^j` at fixed `x`.
    pub fn diff_q(&self, v: Var) -> Pdo {
        self.map(|_, _, _, p| Some(p.diff(v)))
    }

    /// Inverse through the Neumann series around the constant `∂⁰` part.
    pub fn invert(&self) -> Result<Pdo, PdoError> {
        if self.top().is_some_and(|t| t > 0) {
            return Err(PdoError::SingularLeadingPart);
        }
        let a0: Vec<Vec<Scalar>> = (0..2)
            .map(|r| (0..2).map(|c| self.coeff(r, c, 0).constant_term()).collect())
            .collect();
        let det = &(&a0[0][0] * &a0[1][1]) - &(&a0[0][1] * &a0[1][0]);
        let di = det.invert().map_err(|_| PdoError::SingularLeadingPart)?;
        let inv0 = [
            [&a0[1][1] * &di, -(&a0[0][1] * &di)],
            [-(&a0[1][0] * &di), &a0[0][0] * &di],
        ];
        let inv0_op = Pdo::constant(self.n, self.w_max, self.depth, inv0, 0);
        let mut rest = self.clone();
        for r in 0..2 {
            for c in 0..2 {
                let mut p = QPoly::zero(self.n, self.w_max);
                p.add_term(QMono::one(), -a0[r][c].clone());
                rest.add_at(r, c, 0, p);
            }
        }
        let x = inv0_op.mul(&rest).scale(&Scalar::from_int(-1));
        let mut sum = Pdo::identity(self.n, self.w_max, self.depth);
        let mut power = sum.clone();
        // X raises `weight − order` by at least one, so the series terminates
        for _ in 0..=(self.w_max + self.depth + 1) {
            power = power.mul(&x);
            // a vanished power may still carry exactness bounds
            sum = sum.add(&power);
            if power.is_trivially_zero() {
                break;
            }
        }
        let mut out = sum.mul(&inv0_op);
        out.tail = out.tail.min(self.tail);
        Ok(out)
    }

    fn is_trivially_zero(&self) -> bool {
        self.e.iter().flatten().all(|m| m.values().all(|p| p.is_zero()))
    }

    /// Whether every guaranteed coefficient vanishes on its exact part.
    pub fn summary(&self) -> ResidualSummary {
        let mut zero = true;
        let mut min_weight = EXACT;
        let mut band = EXACT;
        let mut leading = Vec::new();
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                for (k, p) in m.iter().rev() {
                    if *k < -self.tail {
                        continue;
                    }
                    let ex = p.exact().min(p.w_max());
                    min_weight = min_weight.min(ex);
                    band = band.min(ex.saturating_sub(*k));
                    let t = p.truncated(ex);
                    if !t.is_zero() {
                        zero = false;
                        if leading.len() < 4 {
                            leading.push(format!("[{},{}] ∂^{}: {}", i + 1, j + 1, k, t.leading_terms(2).join(" + ")));
                        }
                    }
                }
            }
        }
        if min_weight == EXACT {
            min_weight = self.w_max;
        }
        if band == EXACT {
            band = self.w_max;
        }
        ResidualSummary { tail: self.tail, min_weight, band, zero, leading }
    }

    /// Weight to which every coefficient of order `≥ −tail` is known exactly
    /// (`i64::MIN` if `tail` exceeds the guaranteed tail).
    pub fn guaranteed_weight(&self, tail: i64) -> i64 {
        if tail > self.tail {
            return i64::MIN;
        }
        let top = self.top().unwrap_or(0).max(0);
        let mut w = self.w_max;
        for k in -tail..=top {
            w = w.min(self.cap_at(k));
            for row in &self.e {
                for m in row {
                    if let Some(p) = m.get(&k) {
                        w = w.min(p.exact());
                    }
                }
            }
        }
        w
    }

    /// Per entry, `(order, coefficient)` pairs down to the guaranteed tail.
    pub fn dump(&self) -> Vec<((usize, usize), Vec<(i64, String)>)> {
        let mut out = Vec::new();
        for (i, row) in self.e.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                let terms = m
                    .iter()
                    .rev()
                    .filter(|(k, p)| **k >= -self.tail && !p.is_zero())
                    .map(|(k, p)| (*k, p.to_string()))
                    .collect();
                out.push(((i + 1, j + 1), terms));
            }
        }
        out
    }
}

/// What a residual looks like on its guaranteed region.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ResidualSummary {
    pub tail: i64,
    pub min_weight: i64,
    /// Every checked coefficient of `∂^k` is exact to weight `band + k`.
    pub band: i64,
    pub zero: bool,
    pub leading: Vec<String>,
}

fn kappa(row: usize, col: usize) -> Scalar {
    let r2 = Scalar::sqrt2().invert().expect("nonzero");
    if row == col {
        r2
    } else {
        r2 * Scalar::i()
    }
}

/// Expected per-entry scalar relating the operator side of the Proposition 1
/// rewrite to the λ-series side: `i^{a−1}/√2` in column 1 and
/// `i(−i)^{a−1}/√2` in column 2.
pub fn prop1_expected_scalar(row: usize, col: usize) -> Scalar {
    kappa(row, col)
}

/// The x-shift that turns `Γ^c_+` into `Γ^c_+·e^{xλ}` for both fields:
/// `q_0^1 ↦ q_0^1 + h x/(2√n)`, `q_0^{n+1} ↦ q_0^{n+1} + h x/2`. For `n = 1`
/// this is `QPoly::shift_x`; for larger `n` the `1/(2n)` there would give
/// `e^{xλ/√n}` in the first field.
pub fn operator_shift(p: &QPoly) -> Result<QPoly, PolyError> {
    let n = p.n();
    let ca = Scalar::h_pow(1) * Scalar::frac(1, 2) * Scalar::sqrt_n(n).invert().expect("nonzero");
    let cb = Scalar::h_pow(1) * Scalar::frac(1, 2);
    p.shift_x_by(&ca, &cb)
}

/// Both τ's x-shifted and cut to the weight the shift leaves exact.
fn shifted_pair(a: &QPoly, b: &QPoly) -> Result<[QPoly; 2], PolyError> {
    let (a, b) = (operator_shift(a)?, operator_shift(b)?);
    let w = a.w_max().min(b.w_max()).min(a.exact()).min(b.exact());
    Ok([a.with_w_max(w), b.with_w_max(w)])
}

/// `P = (1/√2)[[Γ¹_−τ0/τ1, iΓ²_−τ0/τ1], [iΓ¹_−τ1/τ0, Γ²_−τ1/τ0]]`, with
/// `λ^{−k} ↦ ∂^{−k}` and the τ's x-shifted.
pub fn wave_operator(tau0: &QPoly, tau1: &QPoly, depth: i64) -> Result<Pdo, PdoError> {
    if tau0.constant_term().is_zero() || tau1.constant_term().is_zero() {
        return Err(PdoError::NotInBigCell);
    }
    let n = tau0.n();
    let t = shifted_pair(tau0, tau1)?;
    let w = t[0].w_max();
    let inv = [t[0].series_invert()?, t[1].series_invert()?];
    let mut p = Pdo::zero(n, w, depth);
    for row in 0..2 {
        let (a, b) = (row, 1 - row);
        for col in 0..2 {
            let g = gamma_minus_apply(col as u8 + 1, &t[a]);
            for (e, coef) in &g.coeffs {
                if *e >= -depth {
                    p.add_at(row, col, *e, coef.mul(&inv[b]).scale(&kappa(row, col)));
                }
            }
        }
    }
    Ok(p)
}

/// Dressing data of a wave operator.
#[derive(Clone, Debug)]
pub struct Dressing {
    pub p: Pdo,
    pub p_inv: Pdo,
    /// Times of weight above this are left out of `R`.
    pub weight: i64,
}

fn vars_below(n: u32, w: i64) -> Vec<Var> {
    variables(n, w)
}

impl Dressing {
    pub fn new(p: Pdo, weight: i64) -> Result<Self, PdoError> {
        let p_inv = p.invert()?;
        Ok(Dressing { p, p_inv, weight })
    }

    fn n(&self) -> u32 {
        self.p.n
    }

    fn w(&self) -> i64 {
        self.p.w_max
    }

    fn depth(&self) -> i64 {
        self.p.depth
    }

    /// `L^k = P∂^kP^{−1}`.
    pub fn l_pow(&self, k: i64) -> Pdo {
        self.p.mul_d_right(k).mul(&self.p_inv)
    }

    /// `L^k C_a = P∂^kE_{aa}P^{−1}`.
    pub fn l_pow_c(&self, k: i64, a: usize) -> Pdo {
        self.p.mul_e_right(a).mul_d_right(k).mul(&self.p_inv)
    }

    pub fn l(&self) -> Pdo {
        self.l_pow(1)
    }

    /// `C_a = PE_{aa}P^{−1}`.
    pub fn c(&self, a: usize) -> Pdo {
        self.l_pow_c(0, a)
    }

    fn time_coeff(&self, v: Var) -> (usize, i64, Scalar) {
        let n = self.n();
        let k = v.k as i64;
        let base = Scalar::from_rational(pochhammer(&v.base(n), k)).invert().expect("nonzero");
        if v.field(n) == 1 {
            (1, v.weight(n) - 1, base * Scalar::sqrt_n(n))
        } else {
            (2, 2 * k, base)
        }
    }

    /// `R = xI + 2h^{−1}Σ_k(√n E11 Σ_j q_k^j ∂^{2nk+2j−2}/((2j−1)/2n)_k + E22 q_k^{n+1}∂^{2k}/(1/2)_k)`.
    pub fn r(&self) -> Pdo {
        let (n, w, d) = (self.n(), self.w(), self.depth());
        let mut r = Pdo::function(&QPoly::x(n, w), d);
        let two_h = Scalar::from_int(2).mul_h(-1);
        for v in vars_below(n, w.min(self.weight)) {
            let (a, ord, c) = self.time_coeff(v);
            r.add_at(a - 1, a - 1, ord, QPoly::var(n, w, v).scale(&(&c * &two_h)));
        }
        r
    }

    /// `R` without its times of weight above `weight`. A dropped time is never
    /// hit by `∂_x`, so it survives as a factor of everything it feeds: any
    /// expression built from this is exact to `weight` once the whole
    /// expression is capped there (capping earlier would be eroded by `∂_x`).
    fn m_uncapped(&self) -> Pdo {
        self.p.mul(&self.r()).mul(&self.p_inv)
    }

    /// `M = PRP^{−1}`, exact to `weight`.
    pub fn m(&self) -> Pdo {
        self.m_uncapped().cap_exact(self.weight)
    }

    /// `B_k^j`.
    pub fn b(&self, v: Var) -> Pdo {
        let n = self.n();
        let k = v.k as i64;
        let coef = Scalar::from_rational(pochhammer(&v.base(n), k + 1)).invert().expect("nonzero").mul_h(-1);
        if v.field(n) == 1 {
            let c = coef * Scalar::sqrt_n(n).invert().expect("nonzero");
            self.l_pow_c(v.weight(n), 1).scale(&c)
        } else {
            self.l_pow_c(1 + 2 * k, 2).scale(&coef)
        }
    }

    fn s_head(&self) -> Pdo {
        let n = self.n() as i64;
        let dp = self.p.symbol_derivative();
        dp.mul_d_right(1 - 2 * n)
            .mul_e_right(1)
            .scale(&Scalar::frac(1, 2 * n))
            .add(&dp.mul_d_right(-1).mul_e_right(2).scale(&Scalar::frac(1, 2)))
    }

    /// Coefficient of `q_k^j L^{…}C_a` in the expanded `S`, with its power.
    fn s_time_term(&self, v: Var) -> (usize, i64, Scalar) {
        let n = self.n();
        let k = v.k as i64;
        let base = Scalar::from_rational(pochhammer(&v.base(n), k)).invert().expect("nonzero").mul_h(-1);
        if v.field(n) == 1 {
            let j = v.j as i64;
            let c = base * Scalar::sqrt_n(n).invert().expect("nonzero");
            (1, 2 * n as i64 * (k - 1) + 2 * j - 1, c)
        } else {
            (2, 2 * k - 1, base)
        }
    }

    fn s_sum(&self, from_k: u32) -> Pdo {
        let (n, w) = (self.n(), self.w());
        let mut acc = self.p.zero_like();
        for v in vars_below(n, w.min(self.weight)).into_iter().filter(|v| v.k as u32 >= from_k) {
            let (a, pow, c) = self.s_time_term(v);
            let t = self.l_pow_c(pow, a).mul_fn_left(&QPoly::var(n, w, v)).scale(&c);
            acc = acc.add(&t);
        }
        acc.project(Part::Le0).mul(&self.p).cap_exact(self.weight)
    }

    fn s_k0(&self) -> Pdo {
        let (n, w) = (self.n(), self.w());
        let mut acc = self.p.zero_like();
        for v in vars_below(n, w.min(self.weight)).into_iter().filter(|v| v.k == 0) {
            let (a, pow, c) = self.s_time_term(v);
            let t = self.p.mul_d_right(pow).mul_e_right(a).mul_fn_left(&QPoly::var(n, w, v)).scale(&c);
            acc = acc.add(&t);
        }
        acc
    }

    /// First expanded form of `S`.
    pub fn s_first(&self) -> Pdo {
        self.s_head().add(&self.s_sum(0))
    }

    /// Second form: the `k = 0` terms written out.
    pub fn s_second(&self) -> Pdo {
        self.s_head().add(&self.s_k0()).add(&self.s_sum(1))
    }

    /// Third form: `… − Σ q_{k+1}^j ∂P/∂q_k^j`.
    pub fn s_third(&self) -> Pdo {
        s_third_of(&self.p, self.weight)
    }

    /// `((1/2n)ML^{1−2n}C_1 + ½ML^{−1}C_2)_{≤0}P`.
    pub fn s_mform(&self) -> Pdo {
        let n = self.n() as i64;
        let m = self.m_uncapped();
        let a = m.mul(&self.l_pow_c(1 - 2 * n, 1)).scale(&Scalar::frac(1, 2 * n));
        let b = m.mul(&self.l_pow_c(-1, 2)).scale(&Scalar::frac(1, 2));
        a.add(&b).project(Part::Le0).mul(&self.p).cap_exact(self.weight)
    }

    /// `(1/2n)xP∂^{1−2n}E11 + ½xP∂^{−1}E22`: what `xI` in `M` adds to `S`.
    pub fn s_x_correction(&self) -> Pdo {
        let n = self.n() as i64;
        let x = QPoly::x(self.n(), self.w());
        self.p
            .mul_d_right(1 - 2 * n)
            .mul_e_right(1)
            .scale(&Scalar::frac(1, 2 * n))
            .add(&self.p.mul_d_right(-1).mul_e_right(2).scale(&Scalar::frac(1, 2)))
            .mul_fn_left(&x)
    }

    fn string_blocks(&self) -> (Pdo, Pdo) {
        let n = self.n() as i64;
        let m = self.m_uncapped();
        let a1 = m
            .mul(&self.l_pow(1 - 2 * n))
            .scale(&Scalar::frac(1, 2 * n))
            .sub(&self.l_pow(-2 * n).scale(&Scalar::frac(1, 2)));
        let a2 = m.mul(&self.l_pow(-1)).scale(&Scalar::frac(1, 2)).sub(&self.l_pow(-2).scale(&Scalar::frac(1, 2)));
        (a1, a2)
    }

    /// String-equation operator residuals.
    pub fn string_residual(&self, mode: StringMode) -> Pdo {
        let n = self.n() as i64;
        let (a1, a2) = self.string_blocks();
        let (p, q) = match mode {
            StringMode::Prop1 => (0, 1),
            StringMode::Power(p, q) => (p as i64, q),
        };
        let mut x1 = self.l_pow_c(2 * n * p, 1);
        let mut x2 = self.l_pow_c(2 * p, 2);
        for _ in 0..q {
            x1 = a1.mul(&x1);
            x2 = a2.mul(&x2);
        }
        x1.add(&x2).project(Part::Le0).cap_exact(self.weight)
    }

    pub fn residual(&self, which: Identity) -> Pdo {
        let (n, w, d) = (self.n(), self.w(), self.depth());
        let eye = Pdo::identity(n, w, d);
        match which {
            Identity::Pinverse => {
                let rhs = Pdo::d_pow(n, w, d, -1).mul(&self.p.adjoint().mul(&Pdo::j_matrix(n, w, d)));
                self.p_inv.mul_d_right(-1).sub(&rhs)
            }
            Identity::Reduction(p) => {
                let p = p as i64;
                let mid = Pdo::e_aa(n, w, d, 1, 2 * n as i64 * p).add(&Pdo::e_aa(n, w, d, 2, 2 * p));
                self.p.mul(&mid).mul(&self.p_inv).project(Part::Le0)
            }
            Identity::SatoWilson(v) => self.p.diff_q(v).mul(&self.p_inv).add(&self.b(v).project(Part::Le0)),
            Identity::LM => {
                let (l, m) = (self.l(), self.m_uncapped());
                l.mul(&m).sub(&m.mul(&l)).sub(&eye).cap_exact(self.weight)
            }
            Identity::LCommutesC(a) => {
                let (l, c) = (self.l(), self.c(a));
                l.mul(&c).sub(&c.mul(&l))
            }
            Identity::Idempotent(a, b) => {
                let prod = self.c(a).mul(&self.c(b));
                if a == b {
                    prod.sub(&self.c(a))
                } else {
                    prod
                }
            }
            Identity::Partition => self.c(1).add(&self.c(2)).sub(&eye),
        }
    }
}

/// `S` in its third expanded form, which needs no inverse of `P`.
pub fn s_third_of(p: &Pdo, cap: i64) -> Pdo {
    let (n, w) = (p.n, p.w_max.min(cap));
    let nn = n as i64;
    let dp = p.symbol_derivative();
    let mut acc = dp
        .mul_d_right(1 - 2 * nn)
        .mul_e_right(1)
        .scale(&Scalar::frac(1, 2 * nn))
        .add(&dp.mul_d_right(-1).mul_e_right(2).scale(&Scalar::frac(1, 2)));
    let hinv = Scalar::one().mul_h(-1);
    for v in variables(n, w) {
        if v.k == 0 {
            let q0 = QPoly::var(n, p.w_max, v);
            let t = if v.field(n) == 1 {
                let c = &hinv * &Scalar::sqrt_n(n).invert().expect("nonzero");
                p.mul_d_right(2 * v.j as i64 - 2 * nn - 1).mul_e_right(1).mul_fn_left(&q0).scale(&c)
            } else {
                p.mul_d_right(-1).mul_e_right(2).mul_fn_left(&q0).scale(&hinv)
            };
            acc = acc.add(&t);
        }
        let up = Var::new(v.j as u32, v.k as u32 + 1);
        if up.weight(n) <= w {
            acc = acc.sub(&p.diff_q(v).mul_fn_left(&QPoly::var(n, p.w_max, up)));
        }
    }
    acc.cap_exact(cap)
}

/// Identities expected to vanish for tau pairs in the reduced orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identity {
    Pinverse,
    Reduction(u32),
    SatoWilson(Var),
    LM,
    LCommutesC(usize),
    Idempotent(usize, usize),
    Partition,
}

impl Identity {
    pub fn label(&self) -> String {
        match self {
            Identity::Pinverse => "pinverse".into(),
            Identity::Reduction(p) => format!("reduction(p={p})"),
            Identity::SatoWilson(v) => format!("sato_wilson(j={},k={})", v.j, v.k),
            Identity::LM => "[L,M]-I".into(),
            Identity::LCommutesC(a) => format!("[L,C{a}]"),
            Identity::Idempotent(a, b) => format!("C{a}C{b}-d{a}{b}C{a}"),
            Identity::Partition => "C1+C2-I".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StringMode {
    Prop1,
    Power(u32, u32),
}

/// One entry of the Proposition 1 comparison.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Prop1Entry {
    pub row: usize,
    pub col: usize,
    pub scalar: Option<String>,
    pub expected: String,
    pub consistent: bool,
    pub matches_expected: bool,
    pub operator_zero: bool,
    pub series_zero: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Prop1Report {
    pub tail: i64,
    pub min_weight: i64,
    pub entries: Vec<Prop1Entry>,
    pub ok: bool,
}

fn series_mul_lam(acc: &mut BTreeMap<i64, QPoly>, e: i64, p: QPoly) {
    let v = match acc.remove(&e) {
        Some(o) => o.add(&p),
        None => p,
    };
    acc.insert(e, v);
}

/// The λ-series side `Σ q^ℓ_{k+1}∂(τ_a^c/τ_b)/∂q^ℓ_k + R_{abc}` (x-shifted τ's).
pub fn string4_series(tau_a: &QPoly, tau_b: &QPoly, c: u8, depth: i64) -> Result<BTreeMap<i64, QPoly>, PdoError> {
    let n = tau_a.n();
    let nn = n as i64;
    let [ta, tb] = shifted_pair(tau_a, tau_b)?;
    let w = ta.w_max();
    let inv = tb.series_invert()?;
    let g: BTreeMap<i64, QPoly> = gamma_minus_apply(c, &ta).coeffs.into_iter().filter(|(e, _)| *e >= -depth).collect();
    let ratio: BTreeMap<i64, QPoly> = g.iter().map(|(e, p)| (*e, p.mul(&inv))).collect();
    let mut out: BTreeMap<i64, QPoly> = BTreeMap::new();
    let vars = variables(n, w);
    for v in &vars {
        let up = Var::new(v.j as u32, v.k as u32 + 1);
        if up.weight(n) > w {
            continue;
        }
        let qv = QPoly::var(n, w, up);
        for (e, r) in &ratio {
            series_mul_lam(&mut out, *e, qv.mul(&r.diff(*v)));
        }
    }
    let h = Scalar::one().mul_h(1);
    let hinv = Scalar::one().mul_h(-1);
    if c == 1 {
        let rn = Scalar::sqrt_n(n).invert().expect("nonzero");
        for (e, r) in &ratio {
            series_mul_lam(&mut out, e - 2 * nn, r.scale(&Scalar::frac(1, 2)));
            for j in 1..=nn {
                let q0 = QPoly::var(n, w, Var::new((nn + 1 - j) as u32, 0));
                series_mul_lam(&mut out, e + 1 - 2 * j, r.mul(&q0).scale(&-(&hinv * &rn)));
            }
        }
        for v in vars.iter().filter(|v| v.field(n) == 1) {
            let (l, k) = (v.j as i64, v.k as i64);
            let c = Scalar::from_rational(pochhammer(&v.base(n), k + 1)) * &h * &rn;
            for (e, gp) in &g {
                let t = gp.diff(*v).mul(&inv).scale(&-c.clone());
                series_mul_lam(&mut out, e + 1 - 2 * nn * k - 2 * nn - 2 * l, t);
            }
        }
    } else {
        let q0 = QPoly::var(n, w, Var::new(n + 1, 0));
        for (e, r) in &ratio {
            series_mul_lam(&mut out, e - 2, r.scale(&Scalar::frac(1, 2)));
            series_mul_lam(&mut out, e - 1, r.mul(&q0).scale(&-hinv.clone()));
        }
        for v in vars.iter().filter(|v| v.field(n) == 2) {
            let k = v.k as i64;
            let c = Scalar::from_rational(pochhammer(&rq(1, 2), k + 1)) * &h;
            for (e, gp) in &g {
                let t = gp.diff(*v).mul(&inv).scale(&-c.clone());
                series_mul_lam(&mut out, e - 2 * k - 3, t);
            }
        }
    }
    out.retain(|e, _| *e >= -depth);
    Ok(out)
}

/// Operator side of the Proposition 1 rewrite:
/// `(½P∂^{−2n}E11 + ½P∂^{−2}E22)_{≤0} − S`.
pub fn s2_operator(p: &Pdo) -> Pdo {
    let nn = p.n as i64;
    let head = p
        .mul_d_right(-2 * nn)
        .mul_e_right(1)
        .add(&p.mul_d_right(-2).mul_e_right(2))
        .scale(&Scalar::frac(1, 2))
        .project(Part::Le0);
    head.sub(&s_third_of(p, EXACT))
}

/// Compares both sides of the Proposition 1 rewrite entry by entry; the
/// relating scalar is read off the first nonzero coefficient and then
/// required to hold everywhere on the guaranteed region.
pub fn prop1_equiv_check(tau0: &QPoly, tau1: &QPoly, depth: i64) -> Result<Prop1Report, PdoError> {
    let p = wave_operator(tau0, tau1, depth)?;
    let z = s2_operator(&p);
    let taus = [tau0, tau1];
    let mut entries = Vec::new();
    let mut min_weight = EXACT;
    let tail = z.tail();
    for row in 0..2 {
        for col in 0..2 {
            let series = string4_series(taus[row], taus[1 - row], col as u8 + 1, depth)?;
            let op = z.entry(row, col);
            // guaranteed region of both sides, order by order
            let mut pairs = Vec::new();
            for k in -tail..=0 {
                let a = op.get(&k).cloned().unwrap_or_else(|| QPoly::zero(p.n, p.w_max));
                let b = series.get(&k).cloned().unwrap_or_else(|| QPoly::zero(p.n, p.w_max));
                let ex = a.exact().min(b.exact()).min(p.w_max);
                min_weight = min_weight.min(ex);
                pairs.push((a.truncated(ex), b.truncated(ex)));
            }
            // Coefficients need not be homogeneous in h, so proportionality is
            // tested by cross-multiplication against one seed pair.
            let seed = pairs.iter().find_map(|(a, b)| {
                b.terms().next().map(|(m, c)| (a.coeff(m), c.clone()))
            });
            let scalar = pairs
                .iter()
                .flat_map(|(a, b)| b.terms().map(move |(m, c)| (a.coeff(m), c.clone())))
                .find_map(|(a, b)| b.invert().ok().map(|bi| a * bi));
            let operator_zero = pairs.iter().all(|(a, _)| a.is_zero());
            let series_zero = pairs.iter().all(|(_, b)| b.is_zero());
            let consistent = match &seed {
                Some((a0, b0)) => pairs.iter().all(|(a, b)| a.scale(b0) == b.scale(a0)),
                None => operator_zero,
            };
            let expected = prop1_expected_scalar(row + 1, col + 1);
            entries.push(Prop1Entry {
                row: row + 1,
                col: col + 1,
                matches_expected: scalar.as_ref().is_some_and(|s| *s == expected) || (series_zero && operator_zero),
                scalar: scalar.map(|s| s.to_string()),
                expected: expected.to_string(),
                consistent,
                operator_zero,
                series_zero,
            });
        }
    }
    let ok = entries.iter().all(|e| e.consistent);
    Ok(Prop1Report { tail, min_weight, entries, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: u32, w: i64, terms: &[(&[(Var, u16)], i64)], x: u16) -> QPoly {
        let mut p = QPoly::zero(n, w);
        for (vs, c) in terms {
            p.add_term(QMono::from_parts(vs.to_vec(), false, x), Scalar::from_int(*c));
        }
        p
    }

    #[test]
    fn leibniz_and_inverse_derivative() {
        let (n, w, d) = (1, 6, 6);
        let f = poly(n, w, &[(&[], 1)], 2); // x²
        let dd = Pdo::d_pow(n, w, d, 1);
        let fo = Pdo::function(&f, d);
        let prod = dd.mul(&fo);
        // ∂∘x² = x²∂ + 2x
        assert_eq!(prod.coeff(0, 0, 1), f);
        assert_eq!(prod.coeff(0, 0, 0), poly(n, w, &[(&[], 2)], 1));
        let back = dd.mul(&Pdo::d_pow(n, w, d, -1).mul(&fo));
        let diff = back.sub(&fo).summary();
        assert!(diff.zero, "{diff:?}");
        let id = Pdo::d_pow(n, w, d, -1).mul(&dd).sub(&Pdo::identity(n, w, d));
        assert!(id.summary().zero);
    }

    #[test]
    fn invert_examples() {
        let (n, w, d) = (1, 6, 6);
        let r2 = Scalar::sqrt2().invert().unwrap();
        let i = Scalar::i();
        let a = Pdo::constant(n, w, d, [[r2.clone(), &r2 * &i], [&r2 * &i, r2.clone()]], 0);
        let inv = a.invert().unwrap();
        let expect = Pdo::constant(n, w, d, [[r2.clone(), -(&r2 * &i)], [-(&r2 * &i), r2.clone()]], 0);
        assert!(inv.sub(&expect).summary().zero);
        assert_eq!(Pdo::d_pow(n, w, d, 1).invert().unwrap_err(), PdoError::SingularLeadingPart);
        let f = poly(n, w, &[(&[(Var::new(1, 0), 1)], 1)], 1);
        let mut b = Pdo::identity(n, w, d);
        b.add_at(0, 0, -1, f.clone());
        b.add_at(1, 0, -2, f);
        let bi = b.invert().unwrap();
        let s = b.mul(&bi).sub(&Pdo::identity(n, w, d)).summary();
        assert!(s.zero && s.tail >= 4, "{s:?}");
    }

    #[test]
    fn adjoint_is_involutive_and_reverses_products() {
        let (n, w, d) = (1, 6, 8);
        let f = poly(n, w, &[(&[(Var::new(1, 0), 1)], 3), (&[], 1)], 1);
        let g = poly(n, w, &[(&[(Var::new(2, 0), 1)], 1)], 2);
        let mut a = Pdo::zero(n, w, d);
        a.add_at(0, 1, 1, f.clone());
        a.add_at(1, 1, -1, g.clone());
        let mut b = Pdo::zero(n, w, d);
        b.add_at(1, 0, 0, g);
        b.add_at(0, 0, -2, f);
        assert!(a.adjoint().adjoint().sub(&a).summary().zero);
        let lhs = a.mul(&b).adjoint();
        let rhs = b.adjoint().mul(&a.adjoint());
        let s = lhs.sub(&rhs).summary();
        assert!(s.zero, "{s:?}");
    }

    #[test]
    fn vacuum_dressing() {
        for n in [1u32, 2] {
            let one = QPoly::one(n, 6);
            let p = wave_operator(&one, &one, 10).unwrap();
            let dr = Dressing::new(p, 6).unwrap();
            assert!(dr.l().sub(&Pdo::d_pow(n, 6, 10, 1)).summary().zero);
            let half = Scalar::frac(1, 2);
            let hi = &half * &Scalar::i();
            let c1 = Pdo::constant(n, 6, 10, [[half.clone(), -hi.clone()], [hi, half]], 0);
            assert!(dr.c(1).sub(&c1).summary().zero);
            for which in [
                Identity::Pinverse,
                Identity::Reduction(1),
                Identity::LM,
                Identity::Partition,
                Identity::Idempotent(1, 2),
                Identity::Idempotent(2, 2),
                Identity::LCommutesC(1),
            ] {
                let s = dr.residual(which).summary();
                assert!(s.zero, "n={n} {}: {s:?}", which.label());
            }
            assert!(!dr.string_residual(StringMode::Prop1).summary().zero);
            let rep = prop1_equiv_check(&one, &one, 8).unwrap();
            assert!(rep.ok, "{rep:?}");
            assert!(rep.entries.iter().all(|e| e.matches_expected), "{rep:?}");
        }
    }

    #[test]
    fn alpha_orbit_identities() {
        use crate::boson::{alpha_orbit_taus, GroupElementSpec};
        for (n, w) in [(1u32, 6i64), (2, 12)] {
            let g = GroupElementSpec::alpha(1, "-1/2n", "1");
            let (t0, t1) = alpha_orbit_taus(n, &g, w).unwrap();
            let t = std::time::Instant::now();
            let dr = Dressing::new(wave_operator(&t0, &t1, 6).unwrap(), 6).unwrap();
            for which in [
                Identity::Pinverse,
                Identity::Reduction(1),
                Identity::LM,
                Identity::Partition,
                Identity::Idempotent(1, 1),
                Identity::LCommutesC(2),
                Identity::SatoWilson(Var::new(1, 0)),
                Identity::SatoWilson(Var::new(n + 1, 0)),
            ] {
                let s = dr.residual(which).summary();
                assert!(s.zero, "n={n} {}: {s:?}", which.label());
            }
            let d = dr.s_mform().sub(&dr.s_first()).sub(&dr.s_x_correction()).summary();
            assert!(d.zero, "{d:?}");
            assert!(dr.s_first().sub(&dr.s_second()).summary().zero);
            assert!(dr.s_second().sub(&dr.s_third()).summary().zero);
            eprintln!("n={n}: {:?}", t.elapsed());
        }
    }

    #[test]
    fn big_cell() {
        let z = QPoly::zero(1, 4);
        assert_eq!(wave_operator(&z, &QPoly::one(1, 4), 4).unwrap_err(), PdoError::NotInBigCell);
        let j = Pdo::j_matrix(1, 4, 4);
        assert!(j.mul(&j).add(&Pdo::identity(1, 4, 4)).summary().zero);
    }
}

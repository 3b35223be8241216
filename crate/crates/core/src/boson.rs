//! Principal bosonization: Heisenberg modes on `F = C[θ, q]`, the vertex
//! operators `Γ^c_±`, the isomorphism `σ` and tau functions of group elements.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::par_map;
use crate::fock::{alpha_bilinear, alpha_index, apply_bilinear, exp_apply, field_bilinear, Bilinear, FockError, FockState, FockVector, Mode};
use crate::qpoly::{variables, QMono, QPoly, Var, EXACT};
use crate::scalar::{pochhammer, q as rq, Scalar};
use crate::series::LamSeries;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BosonError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("exactness bound {have} below requested weight {need}")]
    ExactnessInsufficient { have: i64, need: i64 },
    #[error("unsupported generator: {0}")]
    UnsupportedGenerator(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Time variable and Pochhammer base attached to an index sum `s` of `α^a`.
/// Returns `(var, base, creation)`.
pub fn alpha_target(n: u32, a: u8, s: i64) -> (Var, BigRational, bool) {
    let creation = s < 0;
    let m = s.abs();
    if a == 1 {
        let r = (m - 1) / 2;
        let j = (r % n as i64) as u32 + 1;
        let k = (r / n as i64) as u32;
        (Var::new(j, k), rq(2 * j as i64 - 1, 2 * n as i64), creation)
    } else {
        let k = ((m - 1) / 2) as u32;
        (Var::new(n + 1, k), rq(1, 2), creation)
    }
}

/// `σ α^a_m σ^{−1}` applied to a polynomial.
pub fn alpha_boson_apply(n: u32, a: u8, m: &BigRational, p: &QPoly) -> Result<QPoly, BosonError> {
    let s = alpha_index(n, a, m)?;
    let (v, base, creation) = alpha_target(n, a, s);
    let k = v.k as i64;
    if creation {
        let c = Scalar::from_rational(pochhammer(&base, k)).invert().expect("nonzero").mul_h(-1);
        Ok(p.mul(&p.var_like(v)).scale(&c))
    } else {
        let c = Scalar::from_rational(pochhammer(&base, k + 1)).mul_h(1);
        Ok(p.diff(v).scale(&c))
    }
}

/// λ-exponent of a time in `Γ^c`: its weight for field 1, `2k+1` for field 2.
fn lam_exp(n: u32, v: Var) -> i64 {
    if v.field(n) == 1 {
        v.weight(n)
    } else {
        2 * v.k as i64 + 1
    }
}

fn field_vars(n: u32, c: u8, w_max: i64) -> Vec<Var> {
    variables(n, w_max).into_iter().filter(|v| v.field(n) == c).collect()
}

/// Weight carried by one power of `λ` in `Γ^c`.
pub fn lam_unit(n: u32, c: u8) -> i64 {
    if c == 1 {
        1
    } else {
        n as i64
    }
}

/// `Γ^c_+(q, λ)·1 = Σ_s E_s λ^s`, truncated at the storage cap.
pub fn gamma_plus_series(n: u32, c: u8, w_max: i64) -> LamSeries<QPoly> {
    let unit = lam_unit(n, c);
    let smax = w_max / unit;
    let zero = QPoly::zero(n, w_max);
    let mut coef: Vec<(Var, i64, Scalar)> = Vec::new();
    for v in field_vars(n, c, w_max) {
        let k = v.k as i64;
        let a = if c == 1 {
            Scalar::from_rational(pochhammer(&v.base(n), k + 1)).invert().unwrap()
                * Scalar::sqrt_n(n).invert().unwrap()
        } else {
            Scalar::from_rational(pochhammer(&v.base(n), k + 1)).invert().unwrap()
        };
        coef.push((v, lam_exp(n, v), a.mul_h(-1)));
    }
    // s E_s = Σ_v e(v) a_v q_v E_{s−e(v)}
    let mut e: Vec<QPoly> = vec![QPoly::one(n, w_max)];
    for s in 1..=smax {
        let mut acc = zero.clone();
        for (v, ev, a) in &coef {
            if *ev > s {
                continue;
            }
            let term = e[(s - ev) as usize].mul_monomial(&QMono::var(*v), &(a * &Scalar::from_int(*ev)));
            acc = acc.add(&term);
        }
        e.push(acc.scale(&Scalar::frac(1, s)));
    }
    let mut out = LamSeries::new(zero, i64::MIN / 4, smax);
    for (s, p) in e.into_iter().enumerate() {
        out.add_at(s as i64, p);
    }
    out
}

/// `Γ^c_−(q, λ) p`: the substitution `q ↦ q − (coefficient) λ^{−e(q)}`; exact.
pub fn gamma_minus_apply(c: u8, p: &QPoly) -> LamSeries<QPoly> {
    let n = p.n();
    let unit = lam_unit(n, c);
    let shift_of = |v: Var| -> Scalar {
        let k = v.k as i64;
        let base = Scalar::from_rational(pochhammer(&v.base(n), k)).mul_h(1);
        if c == 1 {
            -(base * Scalar::sqrt_n(n).invert().unwrap())
        } else {
            -base
        }
    };
    // map b ↦ coefficient of λ^{−b}
    let mut acc: std::collections::BTreeMap<i64, QPoly> = std::collections::BTreeMap::new();
    for (m, coeff) in p.terms() {
        let mut parts: Vec<(i64, QPoly)> = vec![(0, p.constant_like(coeff.clone()))];
        let mut rest = Vec::new();
        for &(v, e) in m.vars() {
            if v.field(n) != c {
                rest.push((v, e));
                continue;
            }
            let sh = shift_of(v);
            let le = lam_exp(n, v);
            let mut next: Vec<(i64, QPoly)> = Vec::new();
            for r in 0..=e {
                let binom = Scalar::from_int(binomial_u(e as u64, r as u64));
                let c_r = binom * sh.pow(r as u32);
                let mono = QMono::from_parts(vec![(v, e - r)], false, 0);
                for (b, part) in &parts {
                    next.push((b + le * r as i64, part.mul_monomial(&mono, &c_r)));
                }
            }
            parts = next;
        }
        let rest_mono = QMono::from_parts(rest, m.theta(), m.x_exp());
        for (b, part) in parts {
            let t = part.mul_monomial(&rest_mono, &Scalar::one());
            match acc.get_mut(&b) {
                Some(x) => *x = x.add(&t),
                None => {
                    acc.insert(b, t);
                }
            }
        }
    }
    let mut out = LamSeries::new(p.zero_like(), i64::MIN / 4, i64::MAX / 4);
    for (b, mut poly) in acc {
        let ex = if p.exact() >= EXACT { EXACT } else { p.exact() - b * unit };
        poly.set_exact(ex);
        out.add_at(-b, poly);
    }
    out
}

fn binomial_u(n: u64, k: u64) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// `Γ^c(q, ±λ) p = Γ_+ Γ_− p`.
pub fn vertex_apply(c: u8, negate: bool, p: &QPoly) -> LamSeries<QPoly> {
    let n = p.n();
    let plus = gamma_plus_series(n, c, p.w_max());
    let minus = gamma_minus_apply(c, p);
    let smax = plus.hi;
    let mut out = LamSeries::new(p.zero_like(), i64::MIN / 4, smax);
    for (a, ea) in &plus.coeffs {
        for (b, fb) in &minus.coeffs {
            out.add_at(a + b, ea.mul(fb));
        }
    }
    // every coefficient is exact up to the weight its factors guarantee
    if negate {
        out.negate_lambda()
    } else {
        out
    }
}

/// Which half of the vertex operator to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Plus,
    Minus,
    Full,
}

/// `Γ^c_{±}` or the full `Γ^c`, at `λ` or `−λ`.
pub fn gamma_apply(c: u8, negate: bool, dir: Direction, p: &QPoly) -> LamSeries<QPoly> {
    let s = match dir {
        Direction::Plus => {
            let e = gamma_plus_series(p.n(), c, p.w_max());
            e.map(|x| x.mul(p))
        }
        Direction::Minus => gamma_minus_apply(c, p),
        Direction::Full => return vertex_apply(c, negate, p),
    };
    if negate {
        s.negate_lambda()
    } else {
        s
    }
}

/// `σφ^a σ^{−1}` as a series: `(θ+∂_θ)/√2 · λ^{−n} Γ¹(q, ±λ)` for `a = 1`,
/// `i(θ−∂_θ)/√2 · λ^{−1} Γ²(q, ±λ)` for `a = 2`. The mode `φ^a_i` is the
/// coefficient of `λ^{−n−i}` (resp. `λ^{−1−i}`).
pub fn phi_boson(a: u8, negate: bool, p: &QPoly) -> LamSeries<QPoly> {
    let n = p.n();
    let g = vertex_apply(a, negate, p);
    let r = Scalar::sqrt2().invert().unwrap();
    let mapped = g.map(|c| {
        if a == 1 {
            c.mul_theta().add(&c.diff_theta()).scale(&r)
        } else {
            c.mul_theta().sub(&c.diff_theta()).scale(&(&r * &Scalar::i()))
        }
    });
    mapped.shift(if a == 1 { -(n as i64) } else { -1 })
}

/// Coefficient of `phi_boson` corresponding to the mode `φ^a_i`.
pub fn phi_boson_mode(a: u8, i: i64, p: &QPoly) -> QPoly {
    let n = p.n() as i64;
    let s = phi_boson(a, false, p);
    let e = if a == 1 { -n - i } else { -1 - i };
    s.coeffs.get(&e).cloned().unwrap_or_else(|| p.zero_like())
}

/// Tabulated `σ` on all basis states up to an energy, built by the Euler
/// recursion `d·σ(v) = Σ_q d(q) q σ(α_q v) / ((c)_{k+1} h)`.
pub struct Sigma {
    n: u32,
    e_max: i64,
    table: HashMap<FockState, QPoly>,
}

impl Sigma {
    pub fn new(n: u32, e_max: i64, jobs: usize) -> Self {
        let window = 2 * e_max + 2 * n as i64 + 2;
        let mut ann: Vec<(Var, Scalar, i64, Bilinear)> = Vec::new();
        for v in variables(n, e_max) {
            let a = v.field(n);
            let (s, base) = if a == 1 {
                (v.weight(n), v.base(n))
            } else {
                (2 * v.k as i64 + 1, v.base(n))
            };
            let unit = if a == 1 { 2 * n as i64 } else { 2 };
            let b = alpha_bilinear(n, a, &rq(s, unit), window).expect("admissible");
            let c = Scalar::from_rational(pochhammer(&base, v.k as i64 + 1)).mul_h(1).invert().unwrap();
            ann.push((v, c, v.weight(n), b));
        }
        let mut table: HashMap<FockState, QPoly> = HashMap::new();
        for d in 0..=e_max {
            let states = FockState::of_energy(n, d);
            let computed = par_map(jobs, &states, |s| {
                if d == 0 {
                    let p = QPoly::one(n, e_max);
                    return if s.v { p.mul_theta() } else { p };
                }
                let basis = FockVector::basis(n, e_max, s.clone());
                let mut acc = QPoly::zero(n, e_max);
                for (v, c, w, b) in &ann {
                    if *w > d {
                        continue;
                    }
                    let image = apply_bilinear(b, &basis);
                    if image.is_zero() {
                        continue;
                    }
                    let mut low = QPoly::zero(n, e_max);
                    for (t, x) in image.terms() {
                        low = low.add(&table[t].scale(x));
                    }
                    let f = c * &Scalar::from_int(*w);
                    acc = acc.add(&low.mul_monomial(&QMono::var(*v), &f));
                }
                acc.scale(&Scalar::frac(1, d))
            });
            table.extend(states.into_iter().zip(computed));
        }
        Sigma { n, e_max, table }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn e_max(&self) -> i64 {
        self.e_max
    }

    pub fn state(&self, s: &FockState) -> Option<&QPoly> {
        self.table.get(s)
    }

    /// `σ(v)`, exact up to the vector's exactness bound.
    pub fn apply(&self, v: &FockVector) -> Result<QPoly, BosonError> {
        let mut acc = QPoly::zero(self.n, self.e_max);
        for (s, c) in v.terms() {
            let e = s.energy(self.n);
            if e > self.e_max {
                continue;
            }
            acc = acc.add(&self.table[s].scale(c));
        }
        let ex = v.exact().min(if v.cap() > self.e_max { self.e_max } else { EXACT });
        acc.set_exact(ex);
        Ok(acc)
    }

    /// `σ(v)` with a required exactness.
    pub fn apply_checked(&self, v: &FockVector, need: i64) -> Result<QPoly, BosonError> {
        let p = self.apply(v)?;
        if p.exact() < need {
            return Err(BosonError::ExactnessInsufficient { have: p.exact(), need });
        }
        Ok(p)
    }
}

/// A named or explicit generator of the group element.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FactorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear: Option<Vec<(String, (u8, i64), (u8, i64))>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<(u8, String)>,
    /// `[a, k, b, l, m]`: mode `m` of `:φ^a(e^{2πik}z) φ^b(e^{2πil}z):`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<(u8, i64, u8, i64, String)>,
    pub param: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<u32>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupElementSpec {
    pub factors: Vec<FactorSpec>,
}

/// Parses `"p"`, `"p/q"` or `"p/qn"` (the trailing `n` multiplies the denominator).
pub fn parse_mode(s: &str, n: u32) -> Result<BigRational, BosonError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || BosonError::Parse(format!("malformed mode '{s}'"));
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b),
        None => (t.as_str(), "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let (den, times_n) = match den.strip_suffix('n') {
        Some(d) => (if d.is_empty() { "1" } else { d }, true),
        None => (den, false),
    };
    let mut den: i64 = den.parse().map_err(|_| bad())?;
    if times_n {
        den *= n as i64;
    }
    if den == 0 {
        return Err(bad());
    }
    Ok(rq(num, den))
}

/// `e^{2πik·(exponent)}` restricted to fourth roots of unity.
fn rotation(n: u32, a: u8, k: i64, i: i64) -> Option<Scalar> {
    // φ^1_i carries z^{(−n−i)/2n}, φ^2_i carries z^{(−1−i)/2}
    let e = if a == 1 { rq(k * (-(n as i64) - i), n as i64) } else { rq(k * (-1 - i), 1) };
    // value e^{πi·e}
    let four = &e * BigRational::from_integer(2.into());
    if !four.is_integer() {
        return None;
    }
    let r = four.to_integer().to_i64()?.rem_euclid(4);
    Some(match r {
        0 => Scalar::one(),
        1 => Scalar::i(),
        2 => Scalar::from_int(-1),
        _ => -Scalar::i(),
    })
}

/// Mode `m` of `:φ^a(e^{2πik}z) φ^b(e^{2πil}z):` as a bilinear.
pub fn rotated_field_bilinear(n: u32, a: u8, k: i64, b: u8, l: i64, m: &BigRational, window: i64) -> Result<Bilinear, BosonError> {
    let t = m * BigRational::from_integer((2 * n as i64).into());
    if !t.is_integer() || !(1..=2).contains(&a) || !(1..=2).contains(&b) {
        return Err(BosonError::UnsupportedGenerator(format!("field mode {m} for ({a},{b})")));
    }
    let t = t.to_integer().to_i64().unwrap();
    let base = field_bilinear(n, a, b, t, window);
    let mut out = Bilinear { exact_in: base.exact_in, ..Bilinear::zero() };
    // rebuild with rotation factors on the original mode pairs
    let (wa, wb) = (Mode::unit(a, n), Mode::unit(b, n));
    for i in -(window / wa)..=(window / wa) {
        let rest = t - wa * i;
        if rest % wb != 0 {
            continue;
        }
        let j = rest / wb;
        if (wb * j).abs() > window {
            continue;
        }
        let ra = rotation(n, a, k, i).ok_or_else(|| {
            BosonError::UnsupportedGenerator(format!("rotation e^(2πi·{k}) on field {a} is not a fourth root of unity"))
        })?;
        let rb = rotation(n, b, l, j).ok_or_else(|| {
            BosonError::UnsupportedGenerator(format!("rotation e^(2πi·{l}) on field {b} is not a fourth root of unity"))
        })?;
        out.push_normal(ra * rb, Mode::Phi(a, i), Mode::Phi(b, j));
    }
    Ok(out.simplified())
}

/// A generator resolved against a session: bilinear, parameter, order cap.
#[derive(Clone, Debug)]
pub struct ResolvedFactor {
    pub bilinear: Bilinear,
    pub param: Scalar,
    pub max_order: Option<u32>,
}

impl GroupElementSpec {
    pub fn identity() -> Self {
        GroupElementSpec::default()
    }

    pub fn alpha(a: u8, m: &str, param: &str) -> Self {
        GroupElementSpec {
            factors: vec![FactorSpec {
                bilinear: None,
                alpha: Some((a, m.into())),
                field: None,
                param: param.into(),
                max_order: None,
            }],
        }
    }

    pub fn from_json(s: &str) -> Result<Self, BosonError> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| BosonError::Parse(e.to_string()))?;
        let Some(obj) = v.as_object() else {
            return Err(BosonError::Parse("top level must be an object".into()));
        };
        if let Some(factors) = obj.get("factors").and_then(|f| f.as_array()) {
            for f in factors {
                if let Some(o) = f.as_object() {
                    for key in o.keys() {
                        if !["bilinear", "alpha", "field", "param", "max_order"].contains(&key.as_str()) {
                            return Err(BosonError::UnsupportedGenerator(key.clone()));
                        }
                    }
                }
            }
        }
        serde_json::from_value(v).map_err(|e| BosonError::Parse(e.to_string()))
    }

    /// Validates every factor and builds its bilinear within `window`.
    pub fn resolve(&self, n: u32, window: i64) -> Result<Vec<ResolvedFactor>, BosonError> {
        let mut out = Vec::new();
        for f in &self.factors {
            let kinds = f.bilinear.is_some() as u8 + f.alpha.is_some() as u8 + f.field.is_some() as u8;
            if kinds != 1 {
                return Err(BosonError::Parse("each factor needs exactly one of bilinear/alpha/field".into()));
            }
            let param = Scalar::parse(&f.param, n).map_err(|e| BosonError::Parse(e.to_string()))?;
            let bilinear = if let Some((a, m)) = &f.alpha {
                let m = parse_mode(m, n)?;
                if !(1..=2).contains(a) {
                    return Err(BosonError::UnsupportedGenerator(format!("alpha field {a}")));
                }
                alpha_bilinear(n, *a, &m, window).map_err(|e| BosonError::Parse(e.to_string()))?
            } else if let Some((a, k, b, l, m)) = &f.field {
                let m = parse_mode(m, n)?;
                rotated_field_bilinear(n, *a, *k, *b, *l, &m, window)?
            } else {
                let mut b = Bilinear::zero();
                for (c, (a1, k1), (a2, k2)) in f.bilinear.as_ref().unwrap() {
                    if !(1..=2).contains(a1) || !(1..=2).contains(a2) {
                        return Err(BosonError::Parse(format!("field index must be 1 or 2, got {a1}/{a2}")));
                    }
                    let c = Scalar::parse(c, n).map_err(|e| BosonError::Parse(e.to_string()))?;
                    b.push_normal(c, Mode::Phi(*a1, *k1), Mode::Phi(*a2, *k2));
                }
                b.simplified()
            };
            out.push(ResolvedFactor { bilinear, param, max_order: f.max_order });
        }
        Ok(out)
    }
}

/// `g|a⟩` for both charges, truncated at energy `cap`.
pub fn group_orbit(n: u32, factors: &[ResolvedFactor], cap: i64) -> Result<[FockVector; 2], BosonError> {
    let mut out = [FockVector::vacuum(n, cap), FockVector::one(n, cap)];
    for v in out.iter_mut() {
        // factors act right to left
        for f in factors.iter().rev() {
            *v = exp_apply(&f.bilinear, &f.param, v, f.max_order)?;
        }
    }
    Ok(out)
}

/// `(τ0, τ1) = (σ(g|0⟩), σ(g|1⟩)/θ)`.
pub fn tau_from_group(sigma: &Sigma, factors: &[ResolvedFactor]) -> Result<(QPoly, QPoly), BosonError> {
    let [t0, t1] = group_orbit(sigma.n(), factors, sigma.e_max())?;
    let tau0 = sigma.apply(&t0)?;
    let tau1 = sigma.apply(&t1)?.diff_theta();
    Ok((tau0, tau1))
}

/// Tau pair of a group element made of `α` factors only, computed directly on
/// the bosonic side: no σ table is needed since `σα^a_mσ^{−1}` is explicit.
pub fn alpha_orbit_taus(n: u32, spec: &GroupElementSpec, w_max: i64) -> Result<(QPoly, QPoly), BosonError> {
    let mut tau = QPoly::one(n, w_max);
    for f in spec.factors.iter().rev() {
        let (Some((a, m)), None, None) = (&f.alpha, &f.bilinear, &f.field) else {
            return Err(BosonError::UnsupportedGenerator("only alpha factors have a direct bosonic orbit".into()));
        };
        let m = parse_mode(m, n)?;
        let t = Scalar::parse(&f.param, n).map_err(|e| BosonError::Parse(e.to_string()))?;
        let mut sum = tau.clone();
        let mut term = tau;
        let mut k = 1u32;
        while f.max_order.is_none_or(|mo| k <= mo) {
            term = alpha_boson_apply(n, *a, &m, &term)?.scale(&(&t * &Scalar::frac(1, k as i64)));
            // adding even a zero term keeps its exactness bound
            sum = sum.add(&term);
            if term.is_zero() {
                break;
            }
            k += 1;
            if k > 4 * w_max as u32 + 8 && f.max_order.is_none() {
                return Err(BosonError::Fock(FockError::TruncationExceeded));
            }
        }
        tau = sum;
    }
    Ok((tau.clone(), tau))
}

/// Counts from an intertwining sweep.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct IntertwineReport {
    pub checked: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl IntertwineReport {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    fn merge(&mut self, o: IntertwineReport) {
        self.checked += o.checked;
        self.failed += o.failed;
        if self.first_failure.is_none() {
            self.first_failure = o.first_failure;
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// `σ(α_m v) = σα_mσ^{−1} σ(v)` for every basis state of energy `≤ e` and
/// every admissible mode with `|2n·m| ≤ e`, compared up to the table cap.
pub fn alpha_intertwining(sigma: &Sigma, e: i64, jobs: usize) -> IntertwineReport {
    let n = sigma.n();
    let cap = sigma.e_max();
    let window = 2 * cap + 2 * n as i64 + 2;
    let mut modes: Vec<(u8, BigRational)> = Vec::new();
    for s in (-e..=e).filter(|s| s % 2 != 0) {
        modes.push((1, rq(s, 2 * n as i64)));
        if (s * n as i64).abs() <= e {
            modes.push((2, rq(s, 2)));
        }
    }
    let bils: Vec<(u8, BigRational, Bilinear)> = modes
        .into_iter()
        .map(|(a, m)| {
            let b = alpha_bilinear(n, a, &m, window).expect("admissible");
            (a, m, b)
        })
        .collect();
    let states = FockState::up_to(n, e);
    let parts = par_map(jobs, &states, |st| {
        let mut rep = IntertwineReport::default();
        let v = FockVector::basis(n, cap, st.clone());
        let sv = &sigma.table[st];
        for (a, m, b) in &bils {
            let ferm = sigma.apply(&apply_bilinear(b, &v)).expect("in table");
            let bos = alpha_boson_apply(n, *a, m, sv).expect("admissible");
            rep.record(ferm.agrees_to(&bos, cap), || format!("alpha^{a}_{m} on {}", st.render()));
        }
        rep
    });
    let mut rep = IntertwineReport::default();
    for p in parts {
        rep.merge(p);
    }
    rep
}

/// `σ(φ^a_i v)` against the matching coefficient of [`phi_boson`] for every
/// basis state of energy `≤ e` and every `|i| ≤ e`.
pub fn phi_intertwining(sigma: &Sigma, e: i64, jobs: usize) -> IntertwineReport {
    let n = sigma.n();
    let cap = sigma.e_max();
    let states = FockState::up_to(n, e);
    let parts = par_map(jobs, &states, |st| {
        let mut rep = IntertwineReport::default();
        let v = FockVector::basis(n, cap, st.clone());
        let sv = &sigma.table[st];
        let series = [phi_boson(1, false, sv), phi_boson(2, false, sv)];
        for a in [1u8, 2] {
            let unit = Mode::unit(a, n);
            for i in -e..=e {
                let target = st.energy(n) - unit * i;
                if target < 0 || target > cap {
                    continue;
                }
                let ferm = sigma.apply(&crate::fock::apply_mode(Mode::Phi(a, i), &v)).expect("in table");
                let exp = if a == 1 { -(n as i64) - i } else { -1 - i };
                let bos = series[a as usize - 1].coeffs.get(&exp).cloned().unwrap_or_else(|| sv.zero_like());
                rep.record(ferm.agrees_to(&bos, cap), || format!("phi^{a}_{i} on {}", st.render()));
            }
        }
        rep
    });
    let mut rep = IntertwineReport::default();
    for p in parts {
        rep.merge(p);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::apply_mode;

    #[test]
    fn alpha_on_polynomials() {
        let n = 2;
        let one = QPoly::one(n, 8);
        let r = alpha_boson_apply(n, 1, &rq(-1, 4), &one).unwrap();
        assert_eq!(r, QPoly::var(n, 8, Var::new(1, 0)).scale(&Scalar::h_pow(-1)));
        let q = QPoly::var(n, 8, Var::new(1, 0));
        let r = alpha_boson_apply(n, 1, &rq(1, 4), &q).unwrap();
        assert_eq!(r, one.scale(&(Scalar::frac(1, 4) * Scalar::h_pow(1))));
        assert!(alpha_boson_apply(n, 2, &rq(1, 2), &one).unwrap().is_zero());
        assert!(alpha_boson_apply(n, 1, &rq(1, 2), &one).is_err());
    }

    #[test]
    fn gamma_basics() {
        let one = QPoly::one(1, 6);
        let gm = gamma_minus_apply(1, &one);
        assert_eq!(gm.coeffs.len(), 1);
        assert_eq!(gm.coeffs[&0], one);
        let gp = gamma_plus_series(1, 1, 6);
        let expect = QPoly::var(1, 6, Var::new(1, 0)).scale(&(Scalar::from_int(2) * Scalar::h_pow(-1)));
        assert_eq!(gp.coeffs[&1], expect);
    }

    #[test]
    fn sigma_low_states() {
        for n in [1, 2] {
            let sig = Sigma::new(n, 6, 1);
            let vac = FockVector::vacuum(n, 6);
            assert_eq!(sig.apply(&vac).unwrap(), QPoly::one(n, 6));
            assert_eq!(sig.apply(&FockVector::one(n, 6)).unwrap(), QPoly::theta(n, 6));
            let am = alpha_bilinear(n, 1, &rq(-1, 2 * n as i64), 20).unwrap();
            let v = apply_bilinear(&am, &vac);
            let expect = QPoly::var(n, 6, Var::new(1, 0)).scale(&Scalar::h_pow(-1));
            assert_eq!(sig.apply(&v).unwrap(), expect);
        }
    }

    #[test]
    fn phi_intertwines_on_vacuum() {
        for n in [1, 2] {
            let sig = Sigma::new(n, 6, 1);
            let vac = FockVector::vacuum(n, 6);
            for a in [1u8, 2] {
                for i in -3..=0 {
                    let ferm = sig.apply(&apply_mode(Mode::Phi(a, i), &vac)).unwrap();
                    let bos = phi_boson_mode(a, i, &QPoly::one(n, 6));
                    assert!(ferm.agrees_to(&bos, 6), "n={n} a={a} i={i}: {ferm} vs {bos}");
                }
            }
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(parse_mode("-1/2n", 3).unwrap(), rq(-1, 6));
        assert_eq!(parse_mode("1/2", 3).unwrap(), rq(1, 2));
        assert!(parse_mode("x/2", 3).is_err());
    }
}

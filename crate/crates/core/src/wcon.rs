//! Virasoro and W-constraint operators: `L_{−1}` and the string residual,
//! `X_{pq}` in fermionic and bosonic (Schur) form, the constants `c_k^a` by
//! independent routes, and the commutator identities on truncated Fock space.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boson::Sigma;
use crate::exec::par_map;
use crate::fock::{
    apply_bilinear, apply_mode, commutator_apply, virasoro_bilinear, x_bilinear, b_pq, FockState,
    FockVector, Mode,
};
use crate::qpoly::{variables, QMono, QPoly, Var, EXACT};
use crate::scalar::{binomial, factorial, pochhammer, q as rq, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WconError {
    #[error("mode window {window} insufficient, need exactness {need}")]
    WindowInsufficient { window: i64, need: i64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// `n′`: `n` for field 1, `1` for field 2.
fn nprime(n: u32, a: u8) -> u32 {
    if a == 1 {
        n
    } else {
        1
    }
}

fn check_field(a: u8) -> Result<(), WconError> {
    if a == 1 || a == 2 {
        Ok(())
    } else {
        Err(WconError::Invalid(format!("field {a}")))
    }
}

fn fact(k: i64) -> BigRational {
    BigRational::from_integer(factorial(k as u32))
}

fn int(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

// ---------------------------------------------------------------------------
// L_{−1}

/// `L_{−1}τ` in bosonic form.
pub fn l_minus1_apply(tau: &QPoly) -> QPoly {
    let n = tau.n();
    let half_hbar = Scalar::frac(1, 2).mul_h(-2);
    let b = Var::new(n + 1, 0);
    let mut quad = tau.var_like(b).mul(&tau.var_like(b));
    for j in 1..=n {
        quad = quad.add(&tau.var_like(Var::new(j, 0)).mul(&tau.var_like(Var::new(n + 1 - j, 0))));
    }
    let mut out = tau.mul(&quad).scale(&half_hbar);
    let mut seen = BTreeSet::new();
    for (m, _) in tau.terms() {
        for (v, _) in m.vars() {
            seen.insert(*v);
        }
    }
    for v in seen {
        let up = Var::new(v.j as u32, v.k as u32 + 1);
        out = out.add(&tau.diff(v).mul_monomial(&QMono::var(up), &Scalar::one()));
    }
    // an unknown monomial of weight w feeds weights ≥ w + 2n
    if tau.exact() < EXACT {
        out.set_exact(tau.exact() + 2 * n as i64);
    }
    out
}

/// String residual. Unshifted times: `L_{−1}τ − ∂τ/∂q_0^1`; with `shifted`
/// (after `q_1^1 ↦ q_1^1 − 1`) the residual is `L_{−1}τ`.
pub fn l_minus1_string_residual(tau: &QPoly, shifted: bool) -> QPoly {
    let l = l_minus1_apply(tau);
    if shifted {
        l
    } else {
        let d = tau.diff(Var::new(1, 0));
        let ex = l.exact().min(d.exact() + 2 * tau.n() as i64);
        let mut r = l.sub(&d);
        r.set_exact(ex);
        r
    }
}

// ---------------------------------------------------------------------------
// c-constants

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CRoute {
    Kernel,
    Generating,
    Anomaly,
    Theorem,
}

/// Truncated power series in `t` with rational coefficients.
fn series_mul(a: &[BigRational], b: &[BigRational], len: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_inv(a: &[BigRational], len: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); len];
    let inv0 = a[0].recip();
    out[0] = inv0.clone();
    for k in 1..len {
        let mut s = BigRational::zero();
        for i in 1..=k.min(a.len() - 1) {
            s += &a[i] * &out[k - i];
        }
        out[k] = -(s * &inv0);
    }
    out
}

fn binom_series(x: &BigRational, len: usize) -> Vec<BigRational> {
    (0..len).map(|k| binomial(x, k as u32)).collect()
}

/// Taylor coefficients of `t(1+t)^{−1/2}(u+1)/(u−1)`, `u = (1+t)^{1/2n′}`:
/// the kernel `(y−z)(yz)^{−1/2}(y^{1/2n′}+z^{1/2n′})/(y^{1/2n′}−z^{1/2n′})`
/// at `y = z(1+t)`.
fn kernel_series(np: u32, len: usize) -> Vec<BigRational> {
    let e = rq(1, 2 * np as i64);
    let u = binom_series(&e, len + 1);
    let g: Vec<BigRational> = u[1..].to_vec();
    let mut up1 = u[..len].to_vec();
    up1[0] += BigRational::one();
    let root = binom_series(&rq(-1, 2), len);
    series_mul(&series_mul(&root, &up1, len), &series_inv(&g, len), len)
}

/// `c_k^a` by the chosen route. The anomaly route uses the default window.
pub fn c_constant(n: u32, a: u8, k: i64, route: CRoute) -> Result<BigRational, WconError> {
    check_field(a)?;
    if k < 0 {
        return Err(WconError::Invalid(format!("k = {k}")));
    }
    let np = nprime(n, a) as i64;
    let js = (1 - np)..=np;
    Ok(match route {
        CRoute::Kernel => kernel_series(np as u32, k as usize + 1)[k as usize].clone() * fact(k),
        CRoute::Generating => {
            let mut s = BigRational::zero();
            for j in js {
                s += binomial(&rq(j, 2 * np), k as u32) + binomial(&rq(-j, 2 * np), k as u32);
            }
            s * fact(k)
        }
        CRoute::Theorem => {
            let mut s = BigRational::zero();
            for j in js {
                s += pochhammer(&(rq(j, 2 * np) - int(k)), k) + pochhammer(&(rq(-j, 2 * np) - int(k)), k);
            }
            s
        }
        CRoute::Anomaly => c_anomaly(n, a, k, anomaly_window(n, a))?,
    })
}

/// A mode window for which the anomaly computation is exact.
pub fn anomaly_window(n: u32, a: u8) -> i64 {
    let unit = Mode::unit(a, n);
    (4 * nprime(n, a) as i64 + 2) * unit
}

/// `c_k^a` from normal ordering: `[X^a_{01}, X^a_{k,k−1}] + 2k X^a_{k−1,k−1}`
/// is the scalar `−c_k^a`, read off on the vacuum.
pub fn c_anomaly(n: u32, a: u8, k: i64, window: i64) -> Result<BigRational, WconError> {
    check_field(a)?;
    if k < 1 {
        return Err(WconError::Unsupported("anomaly route needs k ≥ 1".into()));
    }
    let q = k - 1;
    let x01 = x_bilinear(n, a, 0, 1, window);
    let xp = x_bilinear(n, a, q + 1, q, window);
    let xqq = x_bilinear(n, a, q, q, window);
    let cap = window;
    let vac = FockVector::vacuum(n, cap);
    let r = commutator_apply(&x01, &xp, &vac).add(&apply_bilinear(&xqq, &vac).scale(&Scalar::from_int(2 * k)));
    if r.exact() < 0 {
        return Err(WconError::WindowInsufficient { window, need: 0 });
    }
    let c = r.coeff(&FockState::vacuum()).as_rational().ok_or_else(|| WconError::Invalid("irrational anomaly".into()))?;
    Ok(-c)
}

/// One row of a c-constant comparison.
#[derive(Clone, Debug, Serialize)]
pub struct CRow {
    pub n: u32,
    pub a: u8,
    pub k: i64,
    pub kernel: String,
    pub generating: String,
    pub anomaly: Option<String>,
    pub theorem: String,
    /// kernel = generating (= anomaly where defined)
    pub agree: bool,
    /// printed Theorem-1 form equals the anomaly value
    pub theorem_matches: Option<bool>,
}

/// All routes for `k ≤ k_max`.
pub fn c_constants_report(n: u32, a: u8, k_max: i64) -> Result<Vec<CRow>, WconError> {
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let ker = c_constant(n, a, k, CRoute::Kernel)?;
        let gen = c_constant(n, a, k, CRoute::Generating)?;
        let th = c_constant(n, a, k, CRoute::Theorem)?;
        let an = if k >= 1 { Some(c_constant(n, a, k, CRoute::Anomaly)?) } else { None };
        let agree = ker == gen && an.as_ref().is_none_or(|x| *x == ker);
        rows.push(CRow {
            n,
            a,
            k,
            kernel: ker.to_string(),
            generating: gen.to_string(),
            anomaly: an.as_ref().map(|x| x.to_string()),
            theorem: th.to_string(),
            agree,
            theorem_matches: an.as_ref().map(|x| *x == th),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratingReport {
    pub n: u32,
    pub a: u8,
    /// `(k, kernel coefficient, binomial coefficient)`
    pub rows: Vec<(i64, String, String)>,
    pub ok: bool,
}

/// Kernel Taylor coefficients `c_k/k!` against the binomial expansion of
/// `Σ_j (1+z)^{j/2n′} + (1+z)^{−j/2n′}`, `k ≤ k_max`.
pub fn generating_series_check(n: u32, a: u8, k_max: i64) -> Result<GeneratingReport, WconError> {
    check_field(a)?;
    let np = nprime(n, a) as i64;
    let ker = kernel_series(np as u32, k_max as usize + 1);
    let mut rows = Vec::new();
    let mut ok = true;
    for k in 0..=k_max {
        let mut b = BigRational::zero();
        for j in (1 - np)..=np {
            b += binomial(&rq(j, 2 * np), k as u32) + binomial(&rq(-j, 2 * np), k as u32);
        }
        ok &= b == ker[k as usize];
        rows.push((k, ker[k as usize].to_string(), b.to_string()));
    }
    Ok(GeneratingReport { n, a, rows, ok })
}

// ---------------------------------------------------------------------------
// X_{pq}: fermionic form

/// `X^a_{pq} v` (plus `δ_{pq} c^a_{q+1}/(2q+2)` when `shifted`).
pub fn x_fermion(a: u8, p: i64, q: i64, shifted: bool, v: &FockVector) -> Result<FockVector, WconError> {
    check_field(a)?;
    if p < 0 || q < 0 {
        return Err(WconError::Invalid(format!("(p, q) = ({p}, {q})")));
    }
    let n = v.n();
    let top = v.terms().map(|(s, _)| s.energy(n)).max().unwrap_or(0);
    let shift = 2 * n as i64 * (q - p).abs();
    let window = top + 2 * shift + 2 * Mode::unit(a, n);
    let mut out = apply_bilinear(&x_bilinear(n, a, p, q, window), v);
    if shifted && p == q {
        let c = c_constant(n, a, q + 1, CRoute::Anomaly)? / int(2 * q + 2);
        out = out.add(&v.scale(&Scalar::from_rational(c)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// X_{pq}: bosonic (Schur) form

/// `1/(c)_m`, with `1/(c)_{−m} = (c−m)_m`.
fn inv_poch(c: &BigRational, m: i64) -> BigRational {
    if m >= 0 {
        pochhammer(c, m).recip()
    } else {
        pochhammer(&(c + int(m)), -m)
    }
}

/// Field factor in `Γ^a`: `1/√n` for field 1.
fn field_factor(n: u32, a: u8) -> Scalar {
    if a == 1 {
        Scalar::sqrt_n(n).invert().expect("sqrt n")
    } else {
        Scalar::one()
    }
}

/// Coefficient of `q_v z^{(w−2nr)/2n}` in `q^a_r[z]`.
fn qr_mult(n: u32, a: u8, r: i64, v: Var) -> Scalar {
    let c = v.base(n);
    Scalar::from_rational(inv_poch(&c, v.k as i64 + 1 - r)).mul_h(-1) * field_factor(n, a)
}

/// Coefficient of `∂/∂q_v z^{(−w−2nr)/2n}` in `q^a_r[z]`.
fn qr_diff(n: u32, a: u8, r: i64, v: Var) -> Scalar {
    let c = v.base(n);
    Scalar::from_rational(pochhammer(&c, v.k as i64 + r)).mul_h(1) * Scalar::sign(r - 1) * field_factor(n, a)
}

fn inv_fact(r: i64) -> Scalar {
    Scalar::from_rational(fact(r).recip())
}

/// `z`-graded family: exponent numerator (over `2n`) to polynomial.
type Graded = BTreeMap<i64, QPoly>;

fn graded_add(g: &mut Graded, e: i64, p: QPoly) {
    if p.is_zero() {
        return;
    }
    match g.get_mut(&e) {
        Some(x) => *x = x.add(&p),
        None => {
            g.insert(e, p);
        }
    }
}

/// Bosonic `X_{pq}` machinery for one `n` and a storage cap. The
/// multiplication part `S_i(M)` of `:S_m(q_r[z]/r!):` is cached; its
/// `z`-exponent is determined by weight (`W − 2n·i`).
pub struct XBoson {
    n: u32,
    cap: i64,
    /// `S_i(M)` split into homogeneous components by weight.
    mult: [Vec<BTreeMap<i64, QPoly>>; 2],
}

impl XBoson {
    /// Supports `q + 1 ≤ deg_max` and outputs up to weight `cap`.
    pub fn new(n: u32, cap: i64, deg_max: usize) -> Self {
        let build = |a: u8| -> Vec<BTreeMap<i64, QPoly>> {
            let vars: Vec<Var> = variables(n, cap).into_iter().filter(|v| v.field(n) == a).collect();
            let mut s = vec![QPoly::one(n, cap)];
            for i in 1..=deg_max as i64 {
                let mut acc = QPoly::zero(n, cap);
                for r in 1..=i {
                    let f = Scalar::from_int(r) * inv_fact(r);
                    let prev = &s[(i - r) as usize];
                    for v in &vars {
                        let c = &qr_mult(n, a, r, *v) * &f;
                        acc = acc.add(&prev.mul_monomial(&QMono::var(*v), &c));
                    }
                }
                s.push(acc.scale(&Scalar::frac(1, i)));
            }
            s.into_iter().map(|p| homogeneous(&p)).collect()
        };
        XBoson { n, cap, mult: [build(1), build(2)] }
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    /// `S_j(D)τ` for `j ≤ m`, graded by `z`-exponent.
    fn diff_part(&self, a: u8, m: usize, tau: &QPoly) -> Vec<Graded> {
        let n = self.n;
        let mut vars = BTreeSet::new();
        for (mono, _) in tau.terms() {
            for (v, _) in mono.vars() {
                if v.field(n) == a {
                    vars.insert(*v);
                }
            }
        }
        let mut t: Vec<Graded> = vec![BTreeMap::from([(0, tau.clone())])];
        for j in 1..=m as i64 {
            let mut acc = Graded::new();
            for r in 1..=j {
                let f = Scalar::from_int(r) * inv_fact(r);
                for (e, p) in &t[(j - r) as usize] {
                    for v in &vars {
                        let d = p.diff(*v);
                        if d.is_zero() {
                            continue;
                        }
                        let c = &qr_diff(n, a, r, *v) * &f;
                        graded_add(&mut acc, e - v.weight(n) - 2 * n as i64 * r, d.scale(&c));
                    }
                }
            }
            let inv = Scalar::frac(1, j);
            t.push(acc.into_iter().map(|(e, p)| (e, p.scale(&inv))).collect());
        }
        t
    }

    /// `Σ_{ℓ ≤ top} coef(ℓ)·Res_z z^{p−ℓ} :S_{Q−ℓ}(q^a_r[z]/r!): τ`, where `top`
    /// is `Q` or `Q − 1`.
    fn generating(&self, a: u8, p: i64, big_q: i64, coef: &dyn Fn(i64) -> BigRational, include_top: bool, tau: &QPoly) -> QPoly {
        let n = self.n as i64;
        let cap = self.out_cap(tau, p, big_q - 1);
        let mut out = QPoly::zero(self.n, cap.max(0));
        if big_q < 0 {
            return out;
        }
        let top = if include_top { big_q } else { big_q - 1 };
        let dp = self.diff_part(a, big_q as usize, tau);
        let mult = &self.mult[(a - 1) as usize];
        for l in 0..=top {
            let c = coef(l);
            if c.is_zero() {
                continue;
            }
            let c = Scalar::from_rational(c);
            let m = big_q - l;
            let target = 2 * n * (l - 1 - p);
            for i in 0..=m {
                let s = &mult[i as usize];
                for (e, t) in &dp[(m - i) as usize] {
                    // monomials of S_i(M) of weight W carry z^{(W − 2n i)/2n}
                    let w = target + 2 * n * i - e;
                    if let Some(part) = s.get(&w) {
                        out.add_product(part, t, &c, cap.max(0));
                    }
                }
            }
        }
        if tau.exact() < EXACT {
            out.set_exact(tau.exact() + 2 * n * (big_q - 1 - p));
        } else {
            out.set_exact(EXACT);
        }
        out
    }

    fn out_cap(&self, tau: &QPoly, p: i64, q: i64) -> i64 {
        let n = self.n as i64;
        let base = if tau.exact() >= EXACT { tau.max_weight().unwrap_or(0) } else { tau.exact().min(tau.w_max()) };
        (base + 2 * n * (q - p)).min(self.cap)
    }

    /// `X^a_{pq}τ` via `Σ_ℓ C(q+1,ℓ) c_ℓ (q+1−ℓ)!/(2q+2) Res z^{p−ℓ} :S_{q+1−ℓ}:`;
    /// `shifted` adds `δ_{pq}c^a_{q+1}/(2q+2)` (anomaly value).
    pub fn apply(&self, a: u8, p: i64, q: i64, shifted: bool, tau: &QPoly) -> Result<QPoly, WconError> {
        check_field(a)?;
        if p < 0 || q < 0 {
            return Err(WconError::Invalid(format!("(p, q) = ({p}, {q})")));
        }
        if (q + 1) as usize >= self.mult[0].len() {
            return Err(WconError::Invalid(format!("q = {q} beyond the cached Schur degree")));
        }
        let n = self.n;
        let cs: Vec<BigRational> = (0..=q).map(|l| c_constant(n, a, l, CRoute::Kernel)).collect::<Result<_, _>>()?;
        let coef = move |l: i64| -> BigRational {
            let b = binomial(&int(q + 1), l as u32);
            b * &cs[l as usize] * fact(q + 1 - l) / int(2 * q + 2)
        };
        let mut out = self.generating(a, p, q + 1, &coef, false, tau);
        if shifted && p == q {
            let c = c_constant(n, a, q + 1, CRoute::Anomaly)? / int(2 * q + 2);
            let ex = out.exact();
            out = out.add(&tau.scale(&Scalar::from_rational(c)).with_w_max(out.w_max()));
            out.set_exact(ex.min(tau.exact()));
        }
        Ok(out)
    }
}

/// Splits a polynomial into its homogeneous components.
fn homogeneous(p: &QPoly) -> BTreeMap<i64, QPoly> {
    let mut out: BTreeMap<i64, QPoly> = BTreeMap::new();
    for (m, c) in p.terms() {
        out.entry(p.weight(m)).or_insert_with(|| p.zero_like()).add_term(m.clone(), c.clone());
    }
    out
}

// ---------------------------------------------------------------------------
// Operator specs

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WKind {
    Virasoro(i64),
    XPq(i64, i64),
    XPqShifted(i64, i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Fermionic,
    Bosonic,
}

/// An operator of the family; `field = None` means the sum over both fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WOperatorSpec {
    pub kind: WKind,
    pub route: Route,
    pub field: Option<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WTarget {
    Poly(QPoly),
    Fock(FockVector),
}

fn fields(f: Option<u8>) -> Vec<u8> {
    match f {
        Some(a) => vec![a],
        None => vec![1, 2],
    }
}

/// Applies an operator; the route determines the target kind.
pub fn x_pq_apply(spec: &WOperatorSpec, target: &WTarget) -> Result<WTarget, WconError> {
    match (spec.route, target) {
        (Route::Fermionic, WTarget::Fock(v)) => {
            let n = v.n();
            match spec.kind {
                WKind::Virasoro(k) => {
                    if spec.field.is_some() {
                        return Err(WconError::Unsupported("Virasoro per field".into()));
                    }
                    let top = v.terms().map(|(s, _)| s.energy(n)).max().unwrap_or(0);
                    let window = top + 4 * n as i64 * (k.abs() + 1);
                    Ok(WTarget::Fock(apply_bilinear(&virasoro_bilinear(n, k, window), v)))
                }
                WKind::XPq(p, q) | WKind::XPqShifted(p, q) => {
                    let shifted = matches!(spec.kind, WKind::XPqShifted(..));
                    let mut acc = v.zero_like();
                    for a in fields(spec.field) {
                        acc = acc.add(&x_fermion(a, p, q, shifted, v)?);
                    }
                    Ok(WTarget::Fock(acc))
                }
            }
        }
        (Route::Bosonic, WTarget::Poly(t)) => match spec.kind {
            WKind::Virasoro(-1) if spec.field.is_none() => Ok(WTarget::Poly(l_minus1_apply(t))),
            WKind::Virasoro(k) => Err(WconError::Unsupported(format!("bosonic L_{k}"))),
            WKind::XPq(p, q) | WKind::XPqShifted(p, q) => {
                let shifted = matches!(spec.kind, WKind::XPqShifted(..));
                let n = t.n() as i64;
                let cap = t.w_max().max(t.max_weight().unwrap_or(0)) + 2 * n * (q - p).max(0);
                let xb = XBoson::new(t.n(), cap, (q + 1).max(1) as usize);
                let mut acc: Option<QPoly> = None;
                for a in fields(spec.field) {
                    let r = xb.apply(a, p, q, shifted, t)?;
                    acc = Some(match acc {
                        None => r,
                        Some(x) => {
                            let ex = x.exact().min(r.exact());
                            let mut s = x.add(&r);
                            s.set_exact(ex);
                            s
                        }
                    });
                }
                Ok(WTarget::Poly(acc.expect("a field")))
            }
        },
        _ => Err(WconError::Invalid("route and target kind differ".into())),
    }
}

/// `(X_{pq} + δ_{pq}c_{q+1}/(2q+2))τ_a`, `a = 0, 1`, with `c = c^1 + c^2`
/// from the anomaly route.
pub fn w_residual(xb: &XBoson, tau0: &QPoly, tau1: &QPoly, p: i64, q: i64) -> Result<(QPoly, QPoly), WconError> {
    if q <= 0 {
        return Err(WconError::Invalid("q must be positive".into()));
    }
    let n = tau0.n();
    let c = if p == q {
        (c_constant(n, 1, q + 1, CRoute::Anomaly)? + c_constant(n, 2, q + 1, CRoute::Anomaly)?) / int(2 * q + 2)
    } else {
        BigRational::zero()
    };
    let one = |t: &QPoly| -> Result<QPoly, WconError> {
        let x1 = xb.apply(1, p, q, false, t)?;
        let x2 = xb.apply(2, p, q, false, t)?;
        let ex = x1.exact().min(x2.exact()).min(t.exact());
        let mut r = x1.add(&x2).add(&t.scale(&Scalar::from_rational(c.clone())).with_w_max(x1.w_max()));
        r.set_exact(ex);
        Ok(r)
    };
    Ok((one(tau0)?, one(tau1)?))
}

// ---------------------------------------------------------------------------
// Corollary

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryEntry {
    pub p: i64,
    /// power of `w` is `q + 1`
    pub q: i64,
    /// generating coefficient = `(2/q!)·(X_{pq} + δ c_{q+1}/(2q+2))τ`
    pub consistent: bool,
    pub residual_zero: bool,
    pub exact: i64,
    pub leading: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub w0_zero: bool,
    pub entries: Vec<CorollaryEntry>,
    pub consistent: bool,
}

/// Expands the generating W-constraint in `u^{−p−1}w^{q+1}` for `p ≤ u_order`,
/// `q + 1 ≤ w_order`, using binomial series of `(1+w/z)^{±j/2n′}`, and checks
/// each coefficient against the shifted `X_{pq}` route.
pub fn corollary_residual(xb: &XBoson, tau: &QPoly, u_order: i64, w_order: i64) -> Result<CorollaryReport, WconError> {
    let n = tau.n();
    let binoms = |a: u8| {
        let np = nprime(n, a) as i64;
        move |k: i64| -> BigRational {
            let mut s = BigRational::zero();
            for j in (1 - np)..=np {
                s += binomial(&rq(j, 2 * np), k as u32) + binomial(&rq(-j, 2 * np), k as u32);
            }
            s
        }
    };
    let (b1, b2) = (binoms(1), binoms(2));
    let gen = |p: i64, big_q: i64| -> QPoly {
        let g1 = xb.generating(1, p, big_q, &b1, true, tau);
        let g2 = xb.generating(2, p, big_q, &b2, true, tau);
        let ex = g1.exact().min(g2.exact());
        let mut s = g1.add(&g2);
        s.set_exact(ex);
        s
    };
    let mut w0_zero = true;
    for p in 0..=u_order {
        w0_zero &= gen(p, 0).is_zero();
    }
    let mut entries = Vec::new();
    for p in 0..=u_order {
        for big_q in 1..=w_order {
            let q = big_q - 1;
            let g = gen(p, big_q);
            let mut x = QPoly::zero(n, g.w_max());
            for a in [1u8, 2] {
                x = x.add(&xb.apply(a, p, q, true, tau)?);
            }
            let x = x.scale(&Scalar::from_rational(int(2) / fact(q)));
            let ex = g.exact().min(x.exact());
            let consistent = g.agrees_to(&x, ex.min(xb.cap()));
            let shown = g.truncated(ex);
            entries.push(CorollaryEntry {
                p,
                q,
                consistent,
                residual_zero: shown.is_zero(),
                exact: ex.min(EXACT),
                leading: shown.leading_terms(3),
            });
        }
    }
    let consistent = w0_zero && entries.iter().all(|e| e.consistent);
    Ok(CorollaryReport { w0_zero, entries, consistent })
}

// ---------------------------------------------------------------------------
// Operator identities on truncated Fock space

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutatorKind {
    /// `[X^a_{01}, X^a_{pq}] + 2pX^a_{p−1,q}` (`p − q ≠ 1`), or
    /// `+ 2(q+1)X^a_{qq} + c^a_{q+1}` (`p = q + 1`).
    X01 { a: u8, p: i64, q: i64 },
    /// `[X^a_{01}, X^b_{pq}]`, `a ≠ b`.
    X01Cross { a: u8, p: i64, q: i64 },
    /// `[X_{11}, X_{0q}] − 2qX_{0q}`.
    X11 { q: i64 },
    /// `[X^a_{pq}, φ^a_m] + b_{pq}(m)φ^a_{m+2n′(p−q)}` for all small `m`.
    DeltaTransport { a: u8, p: i64, q: i64 },
}

impl CommutatorKind {
    pub fn label(&self) -> String {
        match *self {
            CommutatorKind::X01 { a, p, q } => format!("x01/a{a}/p{p}/q{q}"),
            CommutatorKind::X01Cross { a, p, q } => format!("x01cross/a{a}/p{p}/q{q}"),
            CommutatorKind::X11 { q } => format!("x11/q{q}"),
            CommutatorKind::DeltaTransport { a, p, q } => format!("transport/a{a}/p{p}/q{q}"),
        }
    }

    /// Largest energy increase along any composition in the residual.
    fn raise(&self, n: u32) -> i64 {
        let u = 2 * n as i64;
        match *self {
            CommutatorKind::X01 { p, q, .. } | CommutatorKind::X01Cross { p, q, .. } => u + u * (q - p).max(0),
            CommutatorKind::X11 { q } => u * q,
            CommutatorKind::DeltaTransport { p, q, .. } => u * (q - p).max(0) + 4 * u,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OperatorReport {
    pub label: String,
    pub states: usize,
    pub max_energy: i64,
    pub window: i64,
    pub failures: Vec<String>,
}

impl OperatorReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A mode window under which `kind` acts exactly on states of energy `≤ e_max`.
pub fn default_window(n: u32, kind: &CommutatorKind, e_max: i64) -> i64 {
    let u = 2 * n as i64;
    let (p, q) = match *kind {
        CommutatorKind::X01 { p, q, .. } | CommutatorKind::X01Cross { p, q, .. } => (p, q),
        CommutatorKind::X11 { q } => (1, q),
        CommutatorKind::DeltaTransport { p, q, .. } => (p, q),
    };
    e_max + 2 * kind.raise(n) + u * (p + q + 2)
}

fn residual_on(n: u32, kind: &CommutatorKind, window: i64, v: &FockVector) -> Result<FockVector, WconError> {
    let xb = |a: u8, p: i64, q: i64| x_bilinear(n, a, p, q, window);
    Ok(match *kind {
        CommutatorKind::X01 { a, p, q } => {
            let mut r = commutator_apply(&xb(a, 0, 1), &xb(a, p, q), v);
            if p == q + 1 {
                r = r.add(&apply_bilinear(&xb(a, q, q), v).scale(&Scalar::from_int(2 * (q + 1))));
                let c = c_constant(n, a, q + 1, CRoute::Anomaly)?;
                r = r.add(&v.scale(&Scalar::from_rational(c)));
            } else if p > 0 {
                r = r.add(&apply_bilinear(&xb(a, p - 1, q), v).scale(&Scalar::from_int(2 * p)));
            }
            r
        }
        CommutatorKind::X01Cross { a, p, q } => {
            let b = 3 - a;
            commutator_apply(&xb(a, 0, 1), &xb(b, p, q), v)
        }
        CommutatorKind::X11 { q } => {
            let x11 = xb(1, 1, 1).add(&xb(2, 1, 1));
            let x0q = xb(1, 0, q).add(&xb(2, 0, q));
            commutator_apply(&x11, &x0q, v).sub(&apply_bilinear(&x0q, v).scale(&Scalar::from_int(2 * q)))
        }
        CommutatorKind::DeltaTransport { a, p, q } => {
            let np = nprime(n, a) as i64;
            let d = 2 * np * (p - q);
            let x = xb(a, p, q);
            let lim = 2 * np;
            let mut r = v.zero_like();
            for m in -lim..=lim {
                let phi = Mode::Phi(a, m);
                let lhs = apply_bilinear(&x, &apply_mode(phi, v)).sub(&apply_mode(phi, &apply_bilinear(&x, v)));
                let rhs = apply_mode(Mode::Phi(a, m + d), v).scale(&Scalar::from_rational(b_pq(np as u32, p, q, m)));
                let one = lhs.add(&rhs);
                if !one.truncated(one.exact()).is_zero() {
                    return Ok(one);
                }
                r = r.with_exact(one.exact());
            }
            r
        }
    })
}

/// Checks a commutator identity on every basis state of energy `≤ e_max`.
pub fn commutator_residuals(n: u32, kind: &CommutatorKind, e_max: i64, window: i64, jobs: usize) -> Result<OperatorReport, WconError> {
    match *kind {
        CommutatorKind::X01 { a, .. } | CommutatorKind::X01Cross { a, .. } | CommutatorKind::DeltaTransport { a, .. } => {
            check_field(a)?
        }
        CommutatorKind::X11 { .. } => {}
    }
    let raise = kind.raise(n);
    let cap = window;
    let states = FockState::up_to(n, e_max);
    let results = par_map(jobs, &states, |s| -> Result<Option<String>, WconError> {
        let v = FockVector::basis(n, cap, s.clone());
        let r = residual_on(n, kind, window, &v)?;
        let need = s.energy(n) + raise;
        if r.exact() < need {
            return Err(WconError::WindowInsufficient { window, need });
        }
        Ok(if r.is_zero() {
            None
        } else {
            let lead: Vec<String> = r.render().into_iter().take(3).map(|(a, b)| format!("{b}·{a}")).collect();
            Some(format!("{}: {}", s.render(), lead.join(" + ")))
        })
    });
    let mut failures = Vec::new();
    for r in results {
        if let Some(f) = r? {
            failures.push(f);
        }
    }
    Ok(OperatorReport { label: kind.label(), states: states.len(), max_energy: e_max, window, failures })
}

/// Bosonic and fermionic `X^a_{pq}` agree through `σ` on every basis state of
/// energy `≤ e`; `σ` and `xb` must reach `e + 2n′·max(q − p, 0)`.
pub fn x_route_check(
    sigma: &Sigma,
    xb: &XBoson,
    a: u8,
    p: i64,
    q: i64,
    shifted: bool,
    e: i64,
    jobs: usize,
) -> Result<OperatorReport, WconError> {
    check_field(a)?;
    let n = sigma.n();
    let top = sigma.e_max().min(xb.cap());
    let need = e + 2 * n as i64 * (q - p).max(0);
    if top < need {
        return Err(WconError::WindowInsufficient { window: top, need });
    }
    let states = FockState::up_to(n, e);
    let results = par_map(jobs, &states, |s| -> Result<Option<String>, WconError> {
        let fv = FockVector::basis(n, top, s.clone());
        let lhs = sigma
            .apply(&x_fermion(a, p, q, shifted, &fv)?)
            .map_err(|e| WconError::Invalid(e.to_string()))?;
        let tau = sigma.state(s).ok_or_else(|| WconError::Invalid(format!("{} outside σ", s.render())))?;
        let rhs = xb.apply(a, p, q, shifted, tau)?;
        let upto = s.energy(n) + 2 * n as i64 * (q - p).max(0);
        Ok(if lhs.exact() < upto || rhs.exact() < upto {
            Some(format!("{}: exact only to {}", s.render(), lhs.exact().min(rhs.exact())))
        } else if lhs.agrees_to(&rhs, upto) {
            None
        } else {
            Some(format!("{}: {:?}", s.render(), lhs.sub(&rhs).leading_terms(3)))
        })
    });
    let mut failures = Vec::new();
    for r in results {
        if let Some(f) = r? {
            failures.push(f);
        }
    }
    let label = format!("xroute/a{a}/p{p}/q{q}{}", if shifted { "/shifted" } else { "" });
    Ok(OperatorReport { label, states: states.len(), max_energy: e, window: top, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        rq(a, b)
    }

    #[test]
    fn c_constant_examples() {
        for n in 1..=3 {
            assert_eq!(c_constant(n, 1, 0, CRoute::Kernel).unwrap(), r(4 * n as i64, 1));
            assert_eq!(c_constant(n, 1, 0, CRoute::Generating).unwrap(), r(4 * n as i64, 1));
            assert_eq!(c_constant(n, 1, 1, CRoute::Generating).unwrap(), r(0, 1));
            let t = c_constant(n, 1, 1, CRoute::Theorem).unwrap() + c_constant(n, 2, 1, CRoute::Theorem).unwrap();
            assert_eq!(t, r(-4 * (n as i64 + 1), 1));
        }
        assert_eq!(c_constant(2, 2, 0, CRoute::Generating).unwrap(), r(4, 1));
        assert!(matches!(c_constant(1, 1, 0, CRoute::Anomaly), Err(WconError::Unsupported(_))));
        assert!(matches!(c_anomaly(2, 1, 2, 1), Err(WconError::WindowInsufficient { .. })));
    }

    #[test]
    fn c_routes_agree() {
        for n in 1..=2 {
            for a in [1u8, 2] {
                for row in c_constants_report(n, a, 4).unwrap() {
                    assert!(row.agree, "{row:?}");
                }
                assert!(generating_series_check(n, a, 6).unwrap().ok);
            }
        }
    }

    #[test]
    fn l_minus1_on_constants_and_sigma() {
        let n = 2;
        let one = QPoly::one(n, 12);
        let l = l_minus1_apply(&one);
        let v = |j, k| QPoly::var(n, 12, Var::new(j, k));
        let expect = v(3, 0).mul(&v(3, 0)).add(&v(1, 0).mul(&v(2, 0)).scale(&Scalar::from_int(2)));
        assert_eq!(l, expect.scale(&Scalar::frac(1, 2).mul_h(-2)));
        // fermionic L_{−1} through σ
        let sigma = Sigma::new(n, 8, 1);
        for s in FockState::up_to(n, 4) {
            let fv = FockVector::basis(n, 8, s.clone());
            let spec = WOperatorSpec { kind: WKind::Virasoro(-1), route: Route::Fermionic, field: None };
            let WTarget::Fock(lf) = x_pq_apply(&spec, &WTarget::Fock(fv.clone())).unwrap() else { panic!() };
            let lhs = sigma.apply(&lf).unwrap();
            let rhs = l_minus1_apply(sigma.state(&s).unwrap());
            assert!(lhs.agrees_to(&rhs, 8), "{}", s.render());
        }
    }

    #[test]
    fn string_residual_shift() {
        let n = 1;
        let t = QPoly::var(n, 8, Var::new(1, 0));
        let d = l_minus1_string_residual(&t, false).sub(&l_minus1_string_residual(&t, true));
        assert_eq!(d, QPoly::one(n, 8).neg());
        // commutes with θ + ∂_θ
        let th = |p: &QPoly| p.mul_theta().add(&p.diff_theta());
        let p = t.add(&QPoly::theta(n, 8).mul(&t));
        assert_eq!(th(&l_minus1_string_residual(&p, true)), l_minus1_string_residual(&th(&p), true));
    }

    #[test]
    fn x_routes_agree_small() {
        for n in 1..=2u32 {
            let e = 4;
            let top = e + 2 * n as i64 * 3;
            let sigma = Sigma::new(n, top, 1);
            let xb = XBoson::new(n, top, 4);
            for (p, q) in [(0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (3, 0), (2, 2), (0, 3)] {
                for a in [1u8, 2] {
                    for s in FockState::up_to(n, e) {
                        let fv = FockVector::basis(n, top, s.clone());
                        let lhs = sigma.apply(&x_fermion(a, p, q, true, &fv).unwrap()).unwrap();
                        let rhs = xb.apply(a, p, q, true, sigma.state(&s).unwrap()).unwrap();
                        assert!(lhs.agrees_to(&rhs, top), "n={n} a={a} ({p},{q}) {}: {:?} vs {:?}", s.render(),
                            lhs.leading_terms(3), rhs.leading_terms(3));
                    }
                }
            }
        }
    }

    #[test]
    fn commutators_small() {
        for n in 1..=2 {
            let kinds = [
                CommutatorKind::X01 { a: 1, p: 2, q: 1 },
                CommutatorKind::X01 { a: 2, p: 1, q: 2 },
                CommutatorKind::X01 { a: 1, p: 2, q: 2 },
                CommutatorKind::X01Cross { a: 1, p: 1, q: 2 },
                CommutatorKind::X11 { q: 2 },
                CommutatorKind::DeltaTransport { a: 1, p: 1, q: 2 },
                CommutatorKind::DeltaTransport { a: 2, p: 2, q: 1 },
            ];
            for k in kinds {
                let rep = commutator_residuals(n, &k, 5, default_window(n, &k, 5), 1).unwrap();
                assert!(rep.ok(), "{:?}", rep);
            }
        }
    }

    #[test]
    fn corollary_and_w_residual() {
        for n in 1..=2u32 {
            let xb = XBoson::new(n, 10, 4);
            let sigma = Sigma::new(n, 6, 1);
            let tau = sigma.state(&FockState { v: false, f1: vec![3, 1], f2: vec![] }).unwrap().clone();
            let rep = corollary_residual(&xb, &tau, 2, 3).unwrap();
            assert!(rep.consistent && rep.w0_zero, "{rep:?}");
            let one = QPoly::one(n, 10);
            let (r0, r1) = w_residual(&xb, &one, &QPoly::theta(n, 10), 1, 1).unwrap();
            assert_eq!(r1, r0.mul_theta());
            // X_{p0} = 0
            assert!(xb.apply(1, 2, 0, false, &tau).unwrap().is_zero());
        }
    }
}

//! Hirota bilinear residuals on tau pairs and their fermionic counterpart.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::boson::{gamma_minus_apply, gamma_plus_series, lam_unit, BosonError, Sigma};
use crate::fock::{apply_mode, FockState, FockVector, Mode};
use crate::qpoly::{BiQPoly, QPoly, EXACT};
use crate::scalar::Scalar;
use crate::series::{LamSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HirotaError {
    #[error(transparent)]
    Window(#[from] SeriesError),
    #[error(transparent)]
    Boson(#[from] BosonError),
    #[error("state {0} lies beyond the σ table")]
    OutsideTable(String),
}

/// `Γ^c(q, ±λ)τ` with coefficients stored to weight `joint`; only the
/// λ-exponents relevant to a joint weight `≤ joint` are formed.
fn vertex_series(c: u8, negate: bool, tau: &QPoly, joint: i64) -> LamSeries<QPoly> {
    let n = tau.n();
    let unit = lam_unit(n, c);
    let plus = gamma_plus_series(n, c, joint);
    let minus = gamma_minus_apply(c, tau);
    let mut out = LamSeries::new(QPoly::zero(n, joint), i64::MIN / 4, plus.hi);
    for (b, g) in &minus.coeffs {
        let g = g.clone().with_w_max(joint);
        if g.is_zero() {
            continue;
        }
        let gmin = g.min_weight().unwrap_or(0);
        for (a, e) in &plus.coeffs {
            if a * unit + gmin > joint {
                break;
            }
            out.add_at(a + b, e.mul(&g));
        }
    }
    if negate {
        out.negate_lambda()
    } else {
        out
    }
}

/// `Res_λ λ^{−k−1} Γ^c(q,λ)τ_a ⊗ Γ^c(q′,−λ)τ_b`, i.e. the sum over `s + t = −k`.
fn residue_term(c: u8, ta: &QPoly, tb: &QPoly, k: i64, joint: i64) -> BiQPoly {
    let n = ta.n();
    let left = vertex_series(c, false, ta, joint);
    let right = vertex_series(c, true, tb, joint);
    let mut acc = BiQPoly::zero(n, joint);
    for (s, x) in &left.coeffs {
        if let Some(y) = right.coeffs.get(&(-k - s)) {
            acc = acc.add(&BiQPoly::tensor(x, y, joint));
        }
    }
    acc
}

fn poly_bound(p: &QPoly) -> i64 {
    if p.exact() >= EXACT {
        EXACT
    } else {
        p.exact().min(p.w_max())
    }
}

/// Hirota residual for the ordered pair `(τ_a, τ_b)` given directly.
pub fn hirota_pair(ta: &QPoly, tb: &QPoly, p: u32, a: u8, b: u8, joint: i64) -> Result<BiQPoly, HirotaError> {
    let n = ta.n();
    let np2 = 2 * n as i64 * p as i64;
    let mut r = residue_term(1, ta, tb, np2, joint);
    let second = residue_term(2, ta, tb, 2 * p as i64, joint);
    let sign = if (a + b) % 2 == 0 { -1 } else { 1 };
    r = r.add(&second.scale(&Scalar::from_int(sign)));
    if a + b == 1 && p == 0 {
        r = r.sub(&BiQPoly::tensor(tb, ta, joint).scale(&Scalar::from_int(2)));
    }
    // Γ_− lowers weight by at most 2np across the residue
    let t = poly_bound(ta).min(poly_bound(tb));
    let ex = if t >= EXACT { joint } else { joint.min(t - np2) };
    r.set_exact(ex);
    Ok(r)
}

/// LHS − RHS of the bilinear residue identity on `τ_a ⊗ τ_b`, exact to joint
/// weight `min(joint, T − 2np)` where `T` bounds the inputs.
pub fn hirota_residual(tau0: &QPoly, tau1: &QPoly, p: u32, a: u8, b: u8, joint: i64) -> Result<BiQPoly, HirotaError> {
    let pick = |x: u8| if x == 0 { tau0 } else { tau1 };
    hirota_pair(pick(a), pick(b), p, a, b, joint)
}

/// Element of `F ⊗ F`, truncated at joint energy.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorVector {
    n: u32,
    joint_max: i64,
    exact: i64,
    terms: BTreeMap<(FockState, FockState), Scalar>,
}

impl TensorVector {
    pub fn zero(n: u32, joint_max: i64) -> Self {
        TensorVector { n, joint_max, exact: EXACT, terms: BTreeMap::new() }
    }

    pub fn exact(&self) -> i64 {
        self.exact
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

    pub fn terms(&self) -> impl Iterator<Item = (&(FockState, FockState), &Scalar)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, s: FockState, t: FockState, c: Scalar) {
        if c.is_zero() {
            return;
        }
        if s.energy(self.n) + t.energy(self.n) > self.joint_max {
            return;
        }
        let key = (s, t);
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

    /// Adds `c · x ⊗ y`.
    pub fn add_tensor(&mut self, x: &FockVector, y: &FockVector, c: &Scalar) {
        let n = self.n;
        for (s, cs) in x.terms() {
            let es = s.energy(n);
            if es > self.joint_max {
                continue;
            }
            let f = c * cs;
            for (t, ct) in y.terms() {
                if es + t.energy(n) <= self.joint_max {
                    self.add_term(s.clone(), t.clone(), &f * ct);
                }
            }
        }
    }

    pub fn leading_terms(&self, limit: usize) -> Vec<String> {
        let n = self.n;
        let mut v: Vec<_> = self.terms.iter().map(|(k, c)| (k.0.energy(n) + k.1.energy(n), k, c)).collect();
        v.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(y.1)));
        v.into_iter()
            .take(limit)
            .map(|(_, k, c)| format!("{}*{}⊗{}", c, k.0.render(), k.1.render()))
            .collect()
    }
}

fn max_energy(v: &FockVector) -> i64 {
    v.terms().map(|(s, _)| s.energy(v.n())).max().unwrap_or(0)
}

/// Fermionic bilinear residual as a finite mode sum:
/// `Σ_{i+j=2np} (−1)^j φ¹_i T_a ⊗ φ¹_j T_b + Σ_{i+j=2p} (−1)^j φ²_i T_a ⊗ φ²_j T_b
///  − δ_{a+b,1}δ_{p0} T_b ⊗ T_a`.
pub fn fermionic_residual(ta: &FockVector, tb: &FockVector, p: u32, a: u8, b: u8, joint: i64) -> TensorVector {
    let n = ta.n();
    let mut r = TensorVector::zero(n, joint);
    let (ea, eb) = (max_energy(ta), max_energy(tb));
    for c in [1u8, 2] {
        let unit = Mode::unit(c, n);
        let k = if c == 1 { 2 * n as i64 * p as i64 } else { 2 * p as i64 };
        // φ_i T_a vanishes for i·unit > E_a, and its energy is ≥ −i·unit
        let lo = (k - eb / unit).max(-joint / unit);
        let hi = (ea / unit).min(k + joint / unit);
        for i in lo..=hi {
            let j = k - i;
            let x = apply_mode(Mode::Phi(c, i), ta);
            if x.is_zero() {
                continue;
            }
            let y = apply_mode(Mode::Phi(c, j), tb);
            if y.is_zero() {
                continue;
            }
            r.add_tensor(&x, &y, &Scalar::sign(j));
        }
    }
    if a + b == 1 && p == 0 {
        r.add_tensor(tb, ta, &Scalar::from_int(-1));
    }
    let t = ta.exact().min(tb.exact());
    r.exact = if t >= EXACT { joint } else { joint.min(t - 2 * n as i64 * p as i64) };
    r
}

/// Outcome of comparing `2·σ⊗σ` of the fermionic residual with the Hirota
/// residual of the bosonized pair.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CorrespondenceReport {
    pub p: u32,
    pub a: u8,
    pub b: u8,
    pub weight: i64,
    pub fermionic_zero: bool,
    pub bosonic_zero: bool,
    pub agree: bool,
    pub ok: bool,
    pub leading: Vec<String>,
}

/// `σ(T)` with the θ factor of an odd charge removed.
pub fn strip_tau(sigma: &Sigma, t: &FockVector, charge: u8) -> Result<QPoly, HirotaError> {
    let s = sigma.apply(t)?;
    Ok(if charge == 1 { s.diff_theta() } else { s })
}

/// `2·(σ⊗σ)` of a tensor vector whose factors have parities `(1−a, 1−b)`,
/// with those θ factors removed.
pub fn bosonize_tensor(sigma: &Sigma, f: &TensorVector, a: u8, b: u8) -> Result<BiQPoly, HirotaError> {
    let joint = f.joint_max;
    let mut acc = BiQPoly::zero(f.n, joint);
    for ((s, t), c) in f.terms() {
        let x = sigma.state(s).ok_or_else(|| HirotaError::OutsideTable(s.render()))?;
        let y = sigma.state(t).ok_or_else(|| HirotaError::OutsideTable(t.render()))?;
        acc = acc.add(&BiQPoly::tensor(x, y, joint).scale(c));
    }
    let (ta, tb) = (a == 0, b == 0);
    let mut out = acc.map_keys(|x, y, c| {
        if x.theta() == ta && y.theta() == tb {
            Some((x.without_theta(), y.without_theta(), c * &Scalar::from_int(2)))
        } else {
            Some((x.clone(), y.clone(), c * &Scalar::from_int(2)))
        }
    });
    out.set_exact(f.exact.min(sigma.e_max()));
    Ok(out)
}

/// Checks `2·(σ⊗σ)(fermionic residual) = hirota residual` on the region where
/// both are guaranteed; `ok` also requires that region to reach `joint`.
pub fn correspondence_check(
    sigma: &Sigma,
    ta: &FockVector,
    tb: &FockVector,
    p: u32,
    a: u8,
    b: u8,
    joint: i64,
) -> Result<CorrespondenceReport, HirotaError> {
    let f = fermionic_residual(ta, tb, p, a, b, joint);
    let lhs = bosonize_tensor(sigma, &f, a, b)?;
    let rhs = hirota_pair(&strip_tau(sigma, ta, a)?, &strip_tau(sigma, tb, b)?, p, a, b, joint)?;
    let weight = lhs.exact().min(rhs.exact());
    let agree = lhs.agrees_to(&rhs, weight);
    let diff = lhs.sub(&rhs).truncated(weight);
    Ok(CorrespondenceReport {
        p,
        a,
        b,
        weight,
        fermionic_zero: f.is_zero(),
        bosonic_zero: rhs.truncated(weight).is_zero(),
        agree,
        ok: agree && weight >= joint,
        leading: diff.leading_terms(4),
    })
}

/// Serializable summary of a single residual.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ResidualReport {
    pub p: u32,
    pub a: u8,
    pub b: u8,
    pub weight: i64,
    pub zero: bool,
    pub leading: Vec<String>,
}

impl ResidualReport {
    pub fn from_residual(r: &BiQPoly, p: u32, a: u8, b: u8) -> Self {
        let t = r.truncated(r.exact());
        ResidualReport { p, a, b, weight: r.exact(), zero: t.is_zero(), leading: t.leading_terms(4) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boson::{group_orbit, GroupElementSpec};

    #[test]
    fn vacuum_pair() {
        for n in [1u32, 2] {
            let one = QPoly::one(n, 8);
            for p in 0..=1 {
                for (a, b) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
                    let r = hirota_residual(&one, &one, p, a, b, 6).unwrap();
                    assert!(r.is_zero(), "n={n} p={p} ({a},{b}): {:?}", r.leading_terms(3));
                    let v = [FockVector::vacuum(n, 8), FockVector::one(n, 8)];
                    let f = fermionic_residual(&v[a as usize], &v[b as usize], p, a, b, 6);
                    assert!(f.is_zero(), "n={n} p={p} ({a},{b}): {:?}", f.leading_terms(3));
                }
            }
        }
    }

    #[test]
    fn orbit_and_perturbed_correspondence() {
        let n = 1;
        let sigma = Sigma::new(n, 8, 1);
        let g = GroupElementSpec::alpha(1, "-1/2n", "1").resolve(n, 20).unwrap();
        let [t0, t1] = group_orbit(n, &g, 8).unwrap();
        for p in 0..=1 {
            for (a, b) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
                let (x, y) = ([&t0, &t1][a as usize], [&t0, &t1][b as usize]);
                let rep = correspondence_check(&sigma, x, y, p, a, b, 8 - 2 * p as i64).unwrap();
                assert!(rep.ok && rep.fermionic_zero && rep.bosonic_zero, "{rep:?}");
            }
        }
        let mut bad = t0.clone();
        bad.add_term(FockState { v: false, f1: vec![2, 1], f2: vec![] }, Scalar::from_int(3));
        let rep = correspondence_check(&sigma, &bad, &t1, 0, 0, 1, 6).unwrap();
        assert!(rep.ok && !rep.fermionic_zero && !rep.bosonic_zero, "{rep:?}");
    }
}

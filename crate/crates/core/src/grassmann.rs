//! Annihilator subspaces in the truncated mode space and the checks on them:
//! isotropy, invariance under the loop parameter, and the string operator.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::fock::{apply_mode, FockError, FockState, FockVector, Mode};
use crate::linalg::{nullspace, rank};
use crate::qpoly::EXACT;
use crate::scalar::{q as rq, Scalar};

/// Finite mode space `span{u, v, φ^a_k : 0 < |k| ≤ window}`.
#[derive(Clone, Debug)]
pub struct ModeSpace {
    pub n: u32,
    pub window: i64,
    pub modes: Vec<Mode>,
}

impl ModeSpace {
    pub fn new(n: u32, window: i64) -> Self {
        let mut modes = vec![Mode::U, Mode::V];
        for a in [1u8, 2] {
            for k in -window..=window {
                if k != 0 {
                    modes.push(Mode::Phi(a, k));
                }
            }
        }
        ModeSpace { n, window, modes }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn index(&self, m: Mode) -> Option<usize> {
        self.modes.iter().position(|x| *x == m)
    }

    pub fn unit(&self, m: Mode) -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); self.dim()];
        for (c, mm) in m.expand() {
            let i = self.index(mm).expect("mode inside window");
            v[i] += &c;
        }
        v
    }

    /// The form `(x, y) = Σ x_μ y_ν {μ, ν}`.
    pub fn form(&self, x: &[Scalar], y: &[Scalar]) -> Scalar {
        let mut acc = Scalar::zero();
        for (i, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let f = self.modes[i].anticommutator(&self.modes[j]);
                if !f.is_zero() {
                    acc += &(a * b * f);
                }
            }
        }
        acc
    }

    /// Rewrites `u, v` through `φ^1_0, φ^2_0`: keys `(a, k)` including `k = 0`.
    fn to_phi(&self, x: &[Scalar]) -> BTreeMap<(u8, i64), Scalar> {
        let r = Scalar::sqrt2().invert().unwrap();
        let ir = &r * &Scalar::i();
        let mut out: BTreeMap<(u8, i64), Scalar> = BTreeMap::new();
        for (m, c) in self.modes.iter().zip(x) {
            if c.is_zero() {
                continue;
            }
            match *m {
                // u = (φ^1_0 + iφ^2_0)/√2, v = (φ^1_0 − iφ^2_0)/√2
                Mode::U => {
                    *out.entry((1, 0)).or_default() += &(c * &r);
                    *out.entry((2, 0)).or_default() += &(c * &ir);
                }
                Mode::V => {
                    *out.entry((1, 0)).or_default() += &(c * &r);
                    *out.entry((2, 0)).or_default() -= &(c * &ir);
                }
                Mode::Phi(a, k) => *out.entry((a, k)).or_default() += c,
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Inverse of [`Self::to_phi`]; `None` when an index leaves the window.
    fn from_phi(&self, p: &BTreeMap<(u8, i64), Scalar>) -> Option<Vec<Scalar>> {
        let mut v = vec![Scalar::zero(); self.dim()];
        for (&(a, k), c) in p {
            if c.is_zero() {
                continue;
            }
            if k.abs() > self.window {
                return None;
            }
            for (cc, m) in Mode::Phi(a, k).expand() {
                v[self.index(m)?] += &(c * &cc);
            }
        }
        Some(v)
    }

    /// `w·v` for a mode-space element `w`.
    pub fn act(&self, x: &[Scalar], v: &FockVector) -> FockVector {
        let mut acc = v.zero_like();
        for (m, c) in self.modes.iter().zip(x) {
            if !c.is_zero() {
                acc = acc.add(&apply_mode(*m, v).scale(c));
            }
        }
        acc
    }
}

/// Basis of the annihilator of `v` inside the window, by exact nullspace.
pub fn annihilator_basis(v: &FockVector, space: &ModeSpace) -> Result<Vec<Vec<Scalar>>, FockError> {
    let n = space.n;
    let max_drop = space.window * n as i64;
    let bound = if v.exact() >= EXACT { EXACT } else { v.exact() - max_drop };
    if bound < 0 {
        return Err(FockError::ExactnessInsufficient { have: v.exact(), need: max_drop });
    }
    let images: Vec<FockVector> = space.modes.iter().map(|m| apply_mode(*m, v)).collect();
    let mut states: Vec<FockState> = images
        .iter()
        .flat_map(|w| w.terms().map(|(s, _)| s.clone()))
        .filter(|s| s.energy(n) <= bound)
        .collect();
    states.sort();
    states.dedup();
    let rows: Vec<Vec<Scalar>> =
        states.iter().map(|s| images.iter().map(|w| w.coeff(s)).collect()).collect();
    nullspace(&rows, space.dim()).map_err(|e| FockError::Linalg(e.to_string()))
}

/// Outcome of a Grassmannian check.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct GrassmannReport {
    pub kind: String,
    pub checked: usize,
    pub passed: usize,
    pub inconclusive: usize,
    pub failed: usize,
}

impl GrassmannReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn contains(space: &ModeSpace, basis: &[Vec<Scalar>], x: &[Scalar]) -> Result<bool, FockError> {
    let r0 = rank(basis, space.dim()).map_err(|e| FockError::Linalg(e.to_string()))?;
    let mut ext = basis.to_vec();
    ext.push(x.to_vec());
    let r1 = rank(&ext, space.dim()).map_err(|e| FockError::Linalg(e.to_string()))?;
    Ok(r0 == r1)
}

pub fn isotropy(space: &ModeSpace, basis: &[Vec<Scalar>]) -> GrassmannReport {
    let mut rep = GrassmannReport { kind: "isotropy".into(), ..Default::default() };
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i..] {
            rep.checked += 1;
            if space.form(x, y).is_zero() {
                rep.passed += 1;
            } else {
                rep.failed += 1;
            }
        }
    }
    rep
}

/// Multiplication by the loop parameter: `k ↦ k + 2n` (field 1), `k ↦ k + 2` (field 2).
pub fn t_shift(space: &ModeSpace, x: &[Scalar]) -> Option<Vec<Scalar>> {
    let n = space.n as i64;
    let p = space.to_phi(x);
    let shifted = p
        .into_iter()
        .map(|((a, k), c)| ((a, if a == 1 { k + 2 * n } else { k + 2 }), c))
        .collect();
    space.from_phi(&shifted)
}

pub fn t_invariance(space: &ModeSpace, basis: &[Vec<Scalar>]) -> Result<GrassmannReport, FockError> {
    let mut rep = GrassmannReport { kind: "t_invariance".into(), ..Default::default() };
    for x in basis {
        rep.checked += 1;
        match t_shift(space, x) {
            None => rep.inconclusive += 1,
            Some(y) => {
                if contains(space, basis, &y)? {
                    rep.passed += 1;
                } else {
                    rep.failed += 1;
                }
            }
        }
    }
    Ok(rep)
}

/// `−d/dt + ½t^{−1} + 2√n h^{−1} t^{1/2n} E_{11}` on index form:
/// `φ^1_k ↦ (½ − k/2n) φ^1_{k−2n} + 2√n h^{−1} φ^1_{k+1}`, `φ^2_k ↦ (½ − k/2) φ^2_{k−2}`.
pub fn string_operator(space: &ModeSpace, x: &[Scalar]) -> Option<Vec<Scalar>> {
    let n = space.n as i64;
    let c = Scalar::from_int(2) * Scalar::sqrt_n(space.n) * Scalar::h_pow(-1);
    let mut out: BTreeMap<(u8, i64), Scalar> = BTreeMap::new();
    for ((a, k), v) in space.to_phi(x) {
        if a == 1 {
            let f = Scalar::frac(1, 2) - Scalar::frac(k, 2 * n);
            *out.entry((1, k - 2 * n)).or_default() += &(&v * &f);
            *out.entry((1, k + 1)).or_default() += &(&v * &c);
        } else {
            let f = Scalar::frac(1, 2) - Scalar::frac(k, 2);
            *out.entry((2, k - 2)).or_default() += &(&v * &f);
        }
    }
    out.retain(|_, c| !c.is_zero());
    space.from_phi(&out)
}

/// One term `c · t^{s} (d/dt)^d` restricted to component `a`.
#[derive(Clone, Debug)]
pub struct TTerm {
    pub component: u8,
    pub coeff: Scalar,
    pub power: BigRational,
    pub derivative: u32,
}

/// The string operator as a differential operator in `t`.
pub fn string_operator_terms(n: u32) -> Vec<TTerm> {
    let mut v = Vec::new();
    for a in [1u8, 2] {
        v.push(TTerm { component: a, coeff: Scalar::from_int(-1), power: BigRational::zero(), derivative: 1 });
        v.push(TTerm { component: a, coeff: Scalar::frac(1, 2), power: -BigRational::one(), derivative: 0 });
    }
    v.push(TTerm {
        component: 1,
        coeff: Scalar::from_int(2) * Scalar::sqrt_n(n) * Scalar::h_pow(-1),
        power: rq(1, 2 * n as i64),
        derivative: 0,
    });
    v
}

/// Applies `t`-differential terms to `t^{k/2n} e_1` or `t^{k/2} e_2`.
pub fn apply_t_terms(n: u32, terms: &[TTerm], a: u8, k: i64) -> BTreeMap<(u8, i64), Scalar> {
    let scale = if a == 1 { 2 * n as i64 } else { 2 };
    let r = rq(k, scale);
    let mut out: BTreeMap<(u8, i64), Scalar> = BTreeMap::new();
    for t in terms.iter().filter(|t| t.component == a) {
        let mut f = BigRational::one();
        for i in 0..t.derivative {
            f *= &r - BigRational::from_integer(i.into());
        }
        if f.is_zero() {
            continue;
        }
        let e = &r + &t.power - BigRational::from_integer(t.derivative.into());
        let idx = &e * BigRational::from_integer(scale.into());
        assert!(idx.is_integer(), "t-power leaves the lattice");
        *out.entry((a, idx.to_integer().try_into().unwrap())).or_default() += &(&t.coeff * &Scalar::from_rational(f));
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Closed index formula vs symbolic differentiation on every in-window basis mode.
pub fn string_operator_matches(space: &ModeSpace) -> GrassmannReport {
    let mut rep = GrassmannReport { kind: "string_operator_symbol".into(), ..Default::default() };
    let terms = string_operator_terms(space.n);
    for a in [1u8, 2] {
        for k in -space.window..=space.window {
            rep.checked += 1;
            let mut single = BTreeMap::new();
            single.insert((a, k), Scalar::one());
            let Some(x) = space.from_phi(&single) else { continue };
            let sym = apply_t_terms(space.n, &terms, a, k);
            match (string_operator(space, &x), space.from_phi(&sym)) {
                (Some(lhs), Some(rhs)) => {
                    if lhs == rhs {
                        rep.passed += 1;
                    } else {
                        rep.failed += 1;
                    }
                }
                _ => rep.inconclusive += 1,
            }
        }
    }
    rep
}

/// Membership of the string-operator images of a basis in the span.
pub fn string_invariance(space: &ModeSpace, basis: &[Vec<Scalar>]) -> Result<GrassmannReport, FockError> {
    let mut rep = GrassmannReport { kind: "string_operator".into(), ..Default::default() };
    for x in basis {
        rep.checked += 1;
        match string_operator(space, x) {
            None => rep.inconclusive += 1,
            Some(y) => {
                if contains(space, basis, &y)? {
                    rep.passed += 1;
                } else {
                    rep.failed += 1;
                }
            }
        }
    }
    Ok(rep)
}

/// Fock-space oracle: `[L_{−1} + 2n h^{−1} α^1_{1/2n}, φ^a_k]` agrees with the
/// index formula on every basis state of energy `≤ e`.
pub fn string_operator_fock_check(space: &ModeSpace, e: i64) -> GrassmannReport {
    use crate::fock::{alpha_bilinear, apply_bilinear, virasoro_bilinear};
    let n = space.n;
    let mut rep = GrassmannReport { kind: "string_operator_fock".into(), ..Default::default() };
    let w = e + (space.window + 4) * n as i64;
    let lm1 = virasoro_bilinear(n, -1, w);
    let al = alpha_bilinear(n, 1, &rq(1, 2 * n as i64), w).expect("admissible mode");
    let op = lm1.add(&al.scale(&(Scalar::from_int(2 * n as i64) * Scalar::h_pow(-1))));
    let states = FockState::up_to(n, e);
    for a in [1u8, 2] {
        for k in -space.window..=space.window {
            rep.checked += 1;
            let mut single = BTreeMap::new();
            single.insert((a, k), Scalar::one());
            let image = space.from_phi(&single).and_then(|x| string_operator(space, &x));
            let Some(image) = image else {
                rep.inconclusive += 1;
                continue;
            };
            let m = Mode::Phi(a, k);
            let good = states.iter().all(|s| {
                let v = FockVector::basis(n, w + e, s.clone());
                let lhs = apply_bilinear(&op, &apply_mode(m, &v)).sub(&apply_mode(m, &apply_bilinear(&op, &v)));
                lhs == space.act(&image, &v)
            });
            if good {
                rep.passed += 1;
            } else {
                rep.failed += 1;
            }
        }
    }
    rep
}

/// `dim A − dim(A ∩ B) = dim(A + B) − dim B`.
pub fn quotient_dim(space: &ModeSpace, a: &[Vec<Scalar>], b: &[Vec<Scalar>]) -> Result<usize, FockError> {
    let mut ab = a.to_vec();
    ab.extend(b.iter().cloned());
    let e = |x: crate::linalg::LinalgError| FockError::Linalg(x.to_string());
    Ok(rank(&ab, space.dim()).map_err(e)? - rank(b, space.dim()).map_err(e)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_annihilator_is_the_positive_half() {
        for n in [1, 2] {
            let sp = ModeSpace::new(n, 4);
            let vac = FockVector::vacuum(n, 40);
            let ann = annihilator_basis(&vac, &sp).unwrap();
            let mut expected = vec![sp.unit(Mode::U)];
            for a in [1u8, 2] {
                for k in 1..=4 {
                    expected.push(sp.unit(Mode::Phi(a, k)));
                }
            }
            assert_eq!(ann.len(), expected.len());
            assert_eq!(quotient_dim(&sp, &ann, &expected).unwrap(), 0);
            assert!(isotropy(&sp, &ann).ok());
        }
    }

    #[test]
    fn string_symbol_agrees() {
        for n in [1, 2, 3] {
            let rep = string_operator_matches(&ModeSpace::new(n, 6));
            assert!(rep.ok());
            assert!(rep.passed > 0);
        }
    }

    #[test]
    fn string_operator_is_a_commutator() {
        for n in [1, 2] {
            let rep = string_operator_fock_check(&ModeSpace::new(n, 4), 3);
            assert!(rep.ok(), "{rep:?}");
            assert!(rep.passed > rep.inconclusive);
        }
    }
}

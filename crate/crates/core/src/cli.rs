//! Batch driver: session configuration, group-element ingestion, check-suite
//! execution and machine-readable reports.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::boson::{
    alpha_intertwining, alpha_orbit_taus, group_orbit, phi_intertwining, tau_from_group, BosonError,
    GroupElementSpec, Sigma,
};
use crate::exec::par_map;
use crate::fock::{clifford_check, heisenberg_check, FockState, FockVector, Mode};
use crate::grassmann::{
    annihilator_basis, isotropy, quotient_dim, string_invariance, string_operator_fock_check,
    string_operator_matches, t_invariance, GrassmannReport, ModeSpace,
};
use crate::hirota::{correspondence_check, fermionic_residual, hirota_residual};
use crate::pdo::{prop1_equiv_check, wave_operator, Dressing, Identity};
use crate::qpoly::{QPoly, Var};
use crate::scalar::Scalar;
use crate::wcon::{
    c_constants_report, commutator_residuals, default_window, generating_series_check, x_route_check,
    CommutatorKind, OperatorReport, XBoson,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown suite: {0}")]
    UnknownSuite(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Group(#[from] BosonError),
    #[error("check {id}: {msg}")]
    Check { id: String, msg: String },
}

fn check_err(id: &str, e: impl fmt::Display) -> CliError {
    CliError::Check { id: id.to_string(), msg: e.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Relations,
    Correspondence,
    Hirota,
    Pdo,
    Wcon,
    Grassmann,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Relations, Suite::Correspondence, Suite::Hirota, Suite::Pdo, Suite::Wcon, Suite::Grassmann];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Relations => "relations",
            Suite::Correspondence => "correspondence",
            Suite::Hirota => "hirota",
            Suite::Pdo => "pdo",
            Suite::Wcon => "wcon",
            Suite::Grassmann => "grassmann",
        }
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CliError::UnknownSuite(s.to_string()))
    }
}

/// Everything a batch run needs. Energies and weights are in scaled units
/// (`2n` per unit of `L_0`).
#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub n: u32,
    /// Fock-space energy bound for relation, commutator and route checks.
    pub e_max: i64,
    /// Joint weight for Hirota residuals and the weight of PDO checks.
    pub w_max: i64,
    /// Orders `∂^{−k}`, `k ≤ tail`, must be guaranteed in PDO checks.
    pub tail: i64,
    /// Mode window `|k| ≤ window` for Clifford and Grassmannian checks.
    pub window: i64,
    /// Weight to which tau functions (and their λ-series) are formed.
    pub lam_window: i64,
    pub suites: Vec<Suite>,
    pub group_spec: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// 1 = sequential; 0 = all cores.
    pub jobs: usize,
}

impl SessionConfig {
    pub fn new(n: u32) -> Self {
        let w_max = 8;
        SessionConfig {
            n,
            e_max: 8,
            w_max,
            tail: 8,
            window: 8,
            lam_window: default_lam_window(n, w_max),
            suites: Suite::ALL.to_vec(),
            group_spec: None,
            out: None,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::InvalidConfig(m));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if self.e_max < 0 || self.w_max < 0 || self.tail < 0 {
            return bad("bounds must be non-negative".into());
        }
        if self.window < self.e_max {
            return bad(format!("mode window {} below e_max {}", self.window, self.e_max));
        }
        if self.lam_window < 2 * self.w_max {
            return bad(format!("λ-window {} below 2·w_max = {}", self.lam_window, 2 * self.w_max));
        }
        Ok(())
    }

    fn pdo_depth(&self) -> i64 {
        self.tail + 12
    }

    fn sigma_energy(&self) -> i64 {
        self.e_max + 8 * self.n as i64
    }
}

/// τ weight at which the `α` orbit's wave operator is exact to `w_max` down
/// the tail; the x-shift roughly halves weights for `n ≥ 2`.
pub fn default_lam_window(n: u32, w_max: i64) -> i64 {
    ((5 * n as i64 * w_max + 1) / 2).max(2 * w_max)
}

/// Reads and validates a group-element file.
pub fn load_group_spec(path: &Path) -> Result<GroupElementSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let spec = GroupElementSpec::from_json(&text)?;
    // catch bad modes and unsupported generators now rather than mid-run
    spec.resolve(1, 4)?;
    Ok(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Region on which a check's verdict is guaranteed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Truncation {
    /// `"energy"` (Fock states) or `"weight"` (polynomials).
    pub kind: &'static str,
    pub bound: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    pub summary: String,
    pub leading: Vec<String>,
    pub truncation: Truncation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn count(&self, s: Status) -> usize {
        self.checks.iter().filter(|c| c.status == s).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format {s}")),
        }
    }
}

pub fn emit_report(r: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => serde_json::to_vec(r).expect("report serializes"),
        Format::Text => {
            let mut s = String::new();
            for c in &r.checks {
                let t = &c.truncation;
                let tail = t.tail.map(|x| format!(", tail {x}")).unwrap_or_default();
                s.push_str(&format!(
                    "{:<12} {} [{}] ({} ≤ {}{tail}): {}\n",
                    c.status.to_string().to_uppercase(),
                    c.id,
                    c.anchor,
                    t.kind,
                    t.bound,
                    c.summary
                ));
                for l in &c.leading {
                    s.push_str(&format!("             {l}\n"));
                }
            }
            s.push_str(&format!(
                "{} checks: {} pass, {} fail, {} inconclusive\n",
                r.checks.len(),
                r.count(Status::Pass),
                r.count(Status::Fail),
                r.count(Status::Inconclusive)
            ));
            s.into_bytes()
        }
    }
}

fn check(id: String, anchor: &str, status: Status, summary: String, leading: Vec<String>, t: Truncation) -> Check {
    Check { id, anchor: anchor.to_string(), status, summary, leading, truncation: t }
}

fn energy(bound: i64) -> Truncation {
    Truncation { kind: "energy", bound, tail: None }
}

fn weight(bound: i64) -> Truncation {
    Truncation { kind: "weight", bound, tail: None }
}

fn pass_fail(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Data shared by all checks of a run, built once before the fan-out.
struct Context {
    cfg: SessionConfig,
    sigma: Option<Sigma>,
    /// `(label, τ0, τ1)`.
    tau_pairs: Vec<(&'static str, QPoly, QPoly)>,
    /// The orbit is not generated by `α` modes alone, so its τ is dense.
    dense_orbit: bool,
    /// `(label, g|0⟩, g|1⟩)`.
    fock_pairs: Vec<(&'static str, FockVector, FockVector)>,
}

impl Context {
    fn build(cfg: &SessionConfig) -> Result<Self, CliError> {
        let n = cfg.n;
        let spec = match &cfg.group_spec {
            Some(p) => load_group_spec(p)?,
            None => GroupElementSpec::alpha(1, "-1/2n", "1"),
        };
        let needs = |s: Suite| cfg.suites.contains(&s);
        let alpha_only = spec.factors.iter().all(|f| f.alpha.is_some());
        let need_sigma = needs(Suite::Relations)
            || needs(Suite::Correspondence)
            || needs(Suite::Wcon)
            || (!alpha_only && (needs(Suite::Hirota) || needs(Suite::Pdo)));
        let sigma = need_sigma.then(|| Sigma::new(n, cfg.sigma_energy(), cfg.jobs));
        let mut tau_pairs = Vec::new();
        if needs(Suite::Hirota) || needs(Suite::Pdo) {
            let one = QPoly::one(n, cfg.lam_window);
            tau_pairs.push(("vacuum", one.clone(), one));
            let (t0, t1) = if alpha_only {
                alpha_orbit_taus(n, &spec, cfg.lam_window)?
            } else {
                let sigma = sigma.as_ref().expect("σ built for non-α orbits");
                tau_from_group(sigma, &spec.resolve(n, 2 * sigma.e_max() + 4 * n as i64)?)?
            };
            tau_pairs.push(("orbit", t0, t1));
        }
        let mut fock_pairs = Vec::new();
        if needs(Suite::Hirota) || needs(Suite::Correspondence) {
            let cap = cfg.w_max + 4 * n as i64;
            let factors = spec.resolve(n, 2 * cap + 4 * n as i64)?;
            let [g0, g1] = group_orbit(n, &factors, cap)?;
            fock_pairs.push(("vacuum", FockVector::vacuum(n, cap), FockVector::one(n, cap)));
            fock_pairs.push(("orbit", g0, g1));
        }
        Ok(Context { cfg: cfg.clone(), sigma, tau_pairs, dense_orbit: !alpha_only, fock_pairs })
    }

    fn pdo_pair(&self, i: usize) -> (&'static str, QPoly, QPoly) {
        let (label, t0, t1) = &self.tau_pairs[i];
        if i == 1 && self.dense_orbit {
            let w = self.cfg.w_max + 4;
            (label, t0.clone().with_w_max(w), t1.clone().with_w_max(w))
        } else {
            (label, t0.clone(), t1.clone())
        }
    }

    fn sigma(&self) -> &Sigma {
        self.sigma.as_ref().expect("σ is built whenever a suite needs it")
    }
}

type Job = Box<dyn Fn(&Context) -> Result<Vec<Check>, CliError> + Send + Sync>;

const PAIRS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

fn relation_jobs(jobs: &mut Vec<Job>) {
    jobs.push(Box::new(|cx| {
        let (n, e) = (cx.cfg.n, cx.cfg.e_max);
        let r = clifford_check(n, cx.cfg.window, e, 1);
        let summary = format!("{} anticommutators, |k| ≤ {}, {} failed", r.checked, cx.cfg.window, r.failed);
        Ok(vec![check(
            "relations/clifford".into(),
            "Clifford relations",
            pass_fail(r.ok()),
            summary,
            r.first_failure.into_iter().collect(),
            energy(e),
        )])
    }));
    jobs.push(Box::new(|cx| {
        let (n, e) = (cx.cfg.n, cx.cfg.e_max);
        let r = heisenberg_check(n, e, 1);
        Ok(vec![check(
            "relations/heisenberg".into(),
            "Heisenberg relations",
            pass_fail(r.ok()),
            format!("{} commutators, {} failed", r.checked, r.failed),
            r.first_failure.into_iter().collect(),
            energy(e),
        )])
    }));
    jobs.push(Box::new(|cx| {
        let e = cx.cfg.e_max;
        let a = alpha_intertwining(cx.sigma(), e, 1);
        let p = phi_intertwining(cx.sigma(), e, 1);
        let mk = |id: &str, r: crate::boson::IntertwineReport| {
            check(
                id.into(),
                "boson-fermion correspondence",
                pass_fail(r.ok()),
                format!("{} comparisons, {} failed", r.checked, r.failed),
                r.first_failure.into_iter().collect(),
                energy(e),
            )
        };
        Ok(vec![mk("relations/sigma-alpha", a), mk("relations/sigma-phi", p)])
    }));
}

fn hirota_jobs(jobs: &mut Vec<Job>) {
    for pair in 0..2usize {
        for p in 0..=2u32 {
            jobs.push(Box::new(move |cx| {
                let joint = cx.cfg.w_max;
                let (label, t0, t1) = &cx.tau_pairs[pair];
                let mut out = Vec::new();
                for (a, b) in PAIRS {
                    let id = format!("hirota/{label}/bosonic/p{p}/a{a}b{b}");
                    let (x, y) = ([t0, t1][a as usize], [t0, t1][b as usize]);
                    let r = hirota_residual(x, y, p, a, b, joint).map_err(|e| check_err(&id, e))?;
                    let ex = r.exact();
                    let t = r.truncated(ex);
                    let status = if !t.is_zero() {
                        Status::Fail
                    } else if ex < joint {
                        Status::Inconclusive
                    } else {
                        Status::Pass
                    };
                    let summary = if t.is_zero() { "residual zero".into() } else { "residual nonzero".into() };
                    out.push(check(id, "Hirota bilinear equation", status, summary, t.leading_terms(4), weight(ex)));
                }
                let (_, f0, f1) = &cx.fock_pairs[pair];
                for (a, b) in PAIRS {
                    let id = format!("hirota/{label}/fermionic/p{p}/a{a}b{b}");
                    let (x, y) = ([f0, f1][a as usize], [f0, f1][b as usize]);
                    let r = fermionic_residual(x, y, p, a, b, joint);
                    let ex = r.exact().min(joint);
                    let status = if !r.is_zero() {
                        Status::Fail
                    } else if ex < joint {
                        Status::Inconclusive
                    } else {
                        Status::Pass
                    };
                    let summary = format!("{} tensor terms", r.len());
                    out.push(check(id, "fermionic bilinear identity", status, summary, r.leading_terms(4), weight(ex)));
                }
                Ok(out)
            }));
        }
    }
}

fn correspondence_jobs(jobs: &mut Vec<Job>) {
    for pair in 0..2usize {
        for p in 0..=2u32 {
            jobs.push(Box::new(move |cx| {
                let joint = cx.cfg.w_max;
                let (label, f0, f1) = &cx.fock_pairs[pair];
                let mut out = Vec::new();
                for (a, b) in PAIRS {
                    let id = format!("correspondence/{label}/p{p}/a{a}b{b}");
                    let (x, y) = ([f0, f1][a as usize], [f0, f1][b as usize]);
                    let r = correspondence_check(cx.sigma(), x, y, p, a, b, joint).map_err(|e| check_err(&id, e))?;
                    let summary = format!(
                        "fermionic zero: {}, bosonic zero: {}, agree: {}",
                        r.fermionic_zero, r.bosonic_zero, r.agree
                    );
                    let status = if !r.agree {
                        Status::Fail
                    } else if r.ok {
                        Status::Pass
                    } else {
                        Status::Inconclusive
                    };
                    out.push(check(id, "bilinear identity under σ", status, summary, r.leading, weight(r.weight)));
                }
                Ok(out)
            }));
        }
    }
    jobs.push(Box::new(|cx| {
        let id = "correspondence/perturbed".to_string();
        let joint = cx.cfg.w_max;
        let (_, f0, f1) = &cx.fock_pairs[1];
        let mut bad = f0.clone();
        bad.add_term(FockState { v: false, f1: vec![2, 1], f2: vec![] }, Scalar::from_int(3));
        let r = correspondence_check(cx.sigma(), &bad, f1, 0, 0, 1, joint).map_err(|e| check_err(&id, e))?;
        // a non-solution must give a nonzero residual on both sides, and they must agree
        let ok = r.ok && !r.fermionic_zero && !r.bosonic_zero;
        // below the perturbation's weight both sides vanish: nothing is shown either way
        let status = if r.ok && r.fermionic_zero && r.bosonic_zero { Status::Inconclusive } else { pass_fail(ok) };
        let summary = format!("non-solution: fermionic zero {}, bosonic zero {}, agree {}", r.fermionic_zero, r.bosonic_zero, r.agree);
        Ok(vec![check(id, "bilinear identity under σ", status, summary, r.leading, weight(r.weight))])
    }));
}

fn pdo_identities(n: u32) -> Vec<(&'static str, Identity)> {
    vec![
        ("pinverse", Identity::Pinverse),
        ("reduction", Identity::Reduction(1)),
        ("lm", Identity::LM),
        ("l-commutes-c1", Identity::LCommutesC(1)),
        ("l-commutes-c2", Identity::LCommutesC(2)),
        ("idempotent-11", Identity::Idempotent(1, 1)),
        ("idempotent-12", Identity::Idempotent(1, 2)),
        ("idempotent-21", Identity::Idempotent(2, 1)),
        ("idempotent-22", Identity::Idempotent(2, 2)),
        ("partition", Identity::Partition),
        ("sato-wilson-1-0", Identity::SatoWilson(Var::new(1, 0))),
        ("sato-wilson-n1-0", Identity::SatoWilson(Var::new(n + 1, 0))),
    ]
}

fn pdo_anchor(which: &Identity) -> &'static str {
    match which {
        Identity::Pinverse => "wave operator adjoint relation",
        Identity::Reduction(_) => "reduction condition",
        Identity::LM => "string equation [L,M] = I",
        Identity::LCommutesC(_) | Identity::Idempotent(..) | Identity::Partition => "Lax projectors",
        Identity::SatoWilson(_) => "Sato-Wilson equations",
    }
}

fn pdo_jobs(jobs: &mut Vec<Job>) {
    for pair in 0..2usize {
        jobs.push(Box::new(move |cx| {
            let cfg = &cx.cfg;
            let (label, t0, t1) = cx.pdo_pair(pair);
            // dense tau functions are only affordable on a small region
            let (depth, band) =
                if pair == 1 && cx.dense_orbit { (cfg.tail + 4, cfg.tail + 4) } else { (cfg.pdo_depth(), cfg.pdo_depth() + 2) };
            let id0 = format!("pdo/{label}");
            let p = wave_operator(&t0, &t1, depth).map_err(|e| check_err(&id0, e))?.with_band(band);
            let dr = Dressing::new(p, cfg.w_max).map_err(|e| check_err(&id0, e))?;
            let mut out = Vec::new();
            for (slug, which) in pdo_identities(cfg.n) {
                let r = dr.residual(which);
                let s = r.summary();
                let g = r.guaranteed_weight(cfg.tail);
                let status = if !s.zero {
                    Status::Fail
                } else if g < cfg.w_max {
                    Status::Inconclusive
                } else {
                    Status::Pass
                };
                let summary = format!("{}: {}", which.label(), if s.zero { "zero" } else { "nonzero" });
                let t = Truncation { kind: "weight", bound: g.max(-1), tail: Some(cfg.tail) };
                out.push(check(format!("pdo/{label}/{slug}"), pdo_anchor(&which), status, summary, s.leading, t));
            }
            Ok(out)
        }));
        jobs.push(Box::new(move |cx| {
            let (label, t0, t1) = cx.pdo_pair(pair);
            let id = format!("pdo/prop1/{label}");
            Ok(vec![prop1_check(id, &t0, &t1, cx.cfg.tail)?])
        }));
    }
    for i in 0..5u64 {
        jobs.push(Box::new(move |cx| {
            let n = cx.cfg.n;
            let w = cx.cfg.w_max.min(6);
            let t0 = QPoly::pseudo_random(n, w, 6, 2 * i);
            let t1 = QPoly::pseudo_random(n, w, 6, 2 * i + 1);
            Ok(vec![prop1_check(format!("pdo/prop1/random{i}"), &t0, &t1, cx.cfg.tail)?])
        }));
    }
}

fn prop1_check(id: String, t0: &QPoly, t1: &QPoly, tail: i64) -> Result<Check, CliError> {
    let r = prop1_equiv_check(t0, t1, tail).map_err(|e| check_err(&id, e))?;
    let scalars: Vec<String> = r
        .entries
        .iter()
        .map(|e| format!("({},{}): {}", e.row, e.col, e.scalar.clone().unwrap_or_else(|| "-".into())))
        .collect();
    let summary = format!("per-entry scalars {}", scalars.join(", "));
    let t = Truncation { kind: "weight", bound: r.min_weight, tail: Some(r.tail) };
    Ok(check(id, "string equation rewrite", pass_fail(r.ok), summary, vec![], t))
}

fn op_check(id: String, anchor: &str, r: OperatorReport) -> Check {
    let summary = format!("{} basis states, mode window {}", r.states, r.window);
    let lead = r.failures.iter().take(3).cloned().collect();
    check(id, anchor, pass_fail(r.ok()), summary, lead, energy(r.max_energy))
}

fn wcon_jobs(jobs: &mut Vec<Job>) {
    for a in [1u8, 2] {
        jobs.push(Box::new(move |cx| {
            let n = cx.cfg.n;
            let id = format!("wcon/c-constants/a{a}");
            let rows = c_constants_report(n, a, 4).map_err(|e| check_err(&id, e))?;
            let mut out = Vec::new();
            for r in rows {
                let theorem = match r.theorem_matches {
                    Some(true) => "printed formula matches",
                    Some(false) => "printed formula differs",
                    None => "printed formula not comparable",
                };
                let summary = format!(
                    "kernel {}, generating {}, anomaly {}; {theorem} ({})",
                    r.kernel,
                    r.generating,
                    r.anomaly.as_deref().unwrap_or("n/a"),
                    r.theorem
                );
                out.push(check(format!("{id}/k{}", r.k), "anomaly constants", pass_fail(r.agree), summary, vec![], weight(0)));
            }
            let id = format!("wcon/generating/a{a}");
            let g = generating_series_check(n, a, 6).map_err(|e| check_err(&id, e))?;
            out.push(check(id, "anomaly constants generating function", pass_fail(g.ok), format!("k ≤ 6, {} rows", g.rows.len()), vec![], weight(0)));
            Ok(out)
        }));
    }
    let mut kinds = Vec::new();
    for a in [1u8, 2] {
        for p in 0..=4i64 {
            for q in 0..=4 - p {
                if p - q != 1 {
                    kinds.push(CommutatorKind::X01 { a, p, q });
                }
            }
        }
        kinds.push(CommutatorKind::X01 { a, p: 2, q: 1 });
        kinds.push(CommutatorKind::X01Cross { a, p: 1, q: 2 });
        kinds.push(CommutatorKind::DeltaTransport { a, p: 1, q: 2 });
    }
    for q in 1..=3 {
        kinds.push(CommutatorKind::X11 { q });
    }
    for kind in kinds {
        jobs.push(Box::new(move |cx| {
            let (n, e) = (cx.cfg.n, cx.cfg.e_max);
            let id = format!("wcon/{}", kind.label());
            let r = commutator_residuals(n, &kind, e, default_window(n, &kind, e), 1).map_err(|e| check_err(&id, e))?;
            Ok(vec![op_check(id, "W-algebra commutators", r)])
        }));
    }
    jobs.push(Box::new(|cx| {
        let (n, e) = (cx.cfg.n, cx.cfg.e_max);
        let sigma = cx.sigma();
        let xb = XBoson::new(n, sigma.e_max(), 5);
        let mut out = Vec::new();
        for a in [1u8, 2] {
            for p in 0..=4i64 {
                for q in 0..=4 - p {
                    let id = format!("wcon/xroute/a{a}/p{p}/q{q}");
                    let r = x_route_check(sigma, &xb, a, p, q, false, e, 1).map_err(|e| check_err(&id, e))?;
                    out.push(op_check(id, "W generators: bosonic vs fermionic", r));
                }
            }
        }
        Ok(out)
    }));
}

fn grassmann_report(id: String, anchor: &str, r: &GrassmannReport) -> Check {
    let status = if r.failed > 0 {
        Status::Fail
    } else if r.passed == 0 && r.inconclusive > 0 {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let summary = format!("{} checked, {} passed, {} inconclusive, {} failed", r.checked, r.passed, r.inconclusive, r.failed);
    check(id, anchor, status, summary, vec![], energy(0))
}

fn grassmann_jobs(jobs: &mut Vec<Job>) {
    jobs.push(Box::new(|cx| {
        let (n, window) = (cx.cfg.n, cx.cfg.window);
        let space = ModeSpace::new(n, window);
        let cap = 10 * window * n as i64;
        let mut out = Vec::new();
        let mut bases = Vec::new();
        for a in 0..2u8 {
            let id = format!("grassmann/annihilator/a{a}");
            let v = FockVector::charge(n, cap, a);
            let basis = annihilator_basis(&v, &space).map_err(|e| check_err(&id, e))?;
            bases.push(basis);
        }
        // |0⟩ is killed exactly by u and the positive modes
        let mut expected = vec![space.unit(Mode::U)];
        for a in [1u8, 2] {
            for k in 1..=window {
                expected.push(space.unit(Mode::Phi(a, k)));
            }
        }
        let id = "grassmann/annihilator/a0".to_string();
        let extra = quotient_dim(&space, &bases[0], &expected).map_err(|e| check_err(&id, e))?;
        let ok = bases[0].len() == expected.len() && extra == 0;
        let summary = format!("dimension {} (expected {})", bases[0].len(), expected.len());
        out.push(check(id, "vacuum annihilator", pass_fail(ok), summary, vec![], energy(window)));
        let id = "grassmann/annihilator/a1".to_string();
        let ok = bases[1].len() == expected.len();
        let summary = format!("dimension {} (expected {})", bases[1].len(), expected.len());
        out.push(check(id, "vacuum annihilator", pass_fail(ok), summary, vec![], energy(window)));
        for a in 0..2usize {
            out.push(grassmann_report(format!("grassmann/isotropy/a{a}"), "maximal isotropic subspace", &isotropy(&space, &bases[a])));
            let id = format!("grassmann/t-invariance/a{a}");
            let r = t_invariance(&space, &bases[a]).map_err(|e| check_err(&id, e))?;
            out.push(grassmann_report(id, "reduction invariance", &r));
            // τ = 1 solves no string equation, so some images must leave W
            let id = format!("grassmann/string-membership/a{a}");
            let r = string_invariance(&space, &bases[a]).map_err(|e| check_err(&id, e))?;
            let summary = format!(
                "{} of {} images outside W ({} inconclusive); the vacuum sector is not string-invariant",
                r.failed, r.checked, r.inconclusive
            );
            out.push(check(id, "string operator membership", pass_fail(r.failed > 0), summary, vec![], energy(window)));
        }
        let id = "grassmann/quotient-dim".to_string();
        let d = quotient_dim(&space, &bases[0], &bases[1]).map_err(|e| check_err(&id, e))?;
        out.push(check(id, "relative position of charge sectors", pass_fail(d == 1), format!("dim W0/(W0 ∩ W1) = {d}"), vec![], energy(window)));
        out.push(grassmann_report("grassmann/string-symbol".into(), "string operator", &string_operator_matches(&space)));
        Ok(out)
    }));
    jobs.push(Box::new(|cx| {
        let n = cx.cfg.n;
        let space = ModeSpace::new(n, cx.cfg.window.min(6));
        let e = cx.cfg.e_max.min(4);
        let r = string_operator_fock_check(&space, e);
        let mut c = grassmann_report("grassmann/string-fock".into(), "string operator on Fock space", &r);
        c.truncation = energy(e);
        Ok(vec![c])
    }));
}

/// Runs every selected suite. The output depends only on the configuration,
/// never on `jobs`.
pub fn run_check_suite(cfg: &SessionConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    let cfg = SessionConfig { suites, ..cfg.clone() };
    let cx = Context::build(&cfg)?;
    let mut jobs: Vec<Job> = Vec::new();
    for s in &cfg.suites {
        match s {
            Suite::Relations => relation_jobs(&mut jobs),
            Suite::Correspondence => correspondence_jobs(&mut jobs),
            Suite::Hirota => hirota_jobs(&mut jobs),
            Suite::Pdo => pdo_jobs(&mut jobs),
            Suite::Wcon => wcon_jobs(&mut jobs),
            Suite::Grassmann => grassmann_jobs(&mut jobs),
        }
    }
    let results = par_map(cfg.jobs, &jobs, |j| j(&cx));
    let mut checks = Vec::new();
    for r in results {
        checks.extend(r?);
    }
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Report { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report() {
        assert_eq!(emit_report(&Report::default(), Format::Json), b"{\"checks\":[]}");
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!("nope".parse::<Suite>(), Err(CliError::UnknownSuite(_))));
        assert_eq!("pdo".parse::<Suite>().unwrap(), Suite::Pdo);
    }

    #[test]
    fn config_validation() {
        let mut c = SessionConfig::new(1);
        assert!(c.validate().is_ok());
        c.lam_window = 2 * c.w_max - 1;
        assert!(matches!(c.validate(), Err(CliError::InvalidConfig(_))));
        let mut c = SessionConfig::new(2);
        c.window = c.e_max - 1;
        assert!(c.validate().is_err());
    }
}

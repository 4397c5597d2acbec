use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::induced_reps::{eigenspace_dim, new_vector, EigenSide, RepKind, RepSpec};
use crate::kirillov::{ell_equal_conductor, AddChar, EqualConductor, SupercuspidalStub};
use crate::local_field::Field;

use super::context::{Check, Role, Settings, TrilinearContext};
use super::descent::{build_ledger, descent_solve, Certificate, Ledger, Tensor};
use super::epsilon::{epsilon_obstruction, Epsilon};
use super::hfun::{verify_lambda12, Lambda12Report};
use super::kernel::kernel_oracle;

pub const REPORT_SCHEMA: u32 = 1;

/// Relative size below which a value is treated as zero.
pub const NONZERO_REL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseId {
    /// Two unramified members, ramified third.
    Vt00n,
    /// Third conductor strictly largest.
    Vt01scA,
    /// First two conductors equal and at least the third.
    Vt01scB,
    /// Principal series with two supercuspidals of equal conductor.
    EqualConductor,
    /// Three reducible spherical inductions.
    ReducibleI,
    /// Two reducible spherical inductions and an irreducible third.
    ReducibleII,
    /// One reducible spherical induction, third conductor above the second.
    ReducibleIIIa,
}

impl CaseId {
    pub const ALL: [CaseId; 7] = [
        CaseId::Vt00n,
        CaseId::Vt01scA,
        CaseId::Vt01scB,
        CaseId::EqualConductor,
        CaseId::ReducibleI,
        CaseId::ReducibleII,
        CaseId::ReducibleIIIa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::Vt00n => "vt-00n",
            CaseId::Vt01scA => "vt-01sc-a",
            CaseId::Vt01scB => "vt-01sc-b",
            CaseId::EqualConductor => "equal-conductor",
            CaseId::ReducibleI => "reducible-i",
            CaseId::ReducibleII => "reducible-ii",
            CaseId::ReducibleIIIa => "reducible-iii-a",
        }
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown case {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueClaim {
    pub tensor: String,
    pub value: Complex64,
    pub magnitude: f64,
    pub threshold: f64,
    pub via: String,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroClaim {
    pub tensor: String,
    pub certificate: Certificate,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub schema: u32,
    pub case: CaseId,
    pub p: u64,
    pub precision: u32,
    pub specs: Vec<RepSpec>,
    pub epsilon: Option<Epsilon>,
    pub vanishing: Vec<Check>,
    pub lambda12: Vec<Lambda12Report>,
    pub ledgers: Vec<Ledger>,
    pub equal_conductor: Option<EqualConductor>,
    pub nonzero: Vec<ValueClaim>,
    pub zeros: Vec<ZeroClaim>,
    pub pass: bool,
    pub elapsed_ms: u128,
}

impl TheoremReport {
    fn new(f: &Field, case: CaseId, specs: &[RepSpec; 3]) -> Self {
        TheoremReport {
            schema: REPORT_SCHEMA,
            case,
            p: f.p(),
            precision: f.precision(),
            specs: specs.to_vec(),
            epsilon: None,
            vanishing: vec![],
            lambda12: vec![],
            ledgers: vec![],
            equal_conductor: None,
            nonzero: vec![],
            zeros: vec![],
            pass: false,
            elapsed_ms: 0,
        }
    }

    fn finish(mut self, start: Instant) -> Self {
        self.pass = !self.nonzero.is_empty()
            && self.nonzero.iter().all(|c| c.ok)
            && self.zeros.iter().all(|c| c.ok)
            && self.vanishing.iter().all(|c| c.holds)
            && self.lambda12.iter().all(|r| r.pass)
            && self.ledgers.iter().all(|l| l.identities.iter().all(|i| i.residual < 1e-8) && l.residual < 1e-8)
            && self.epsilon.as_ref().is_none_or(|e| e.value == 1);
        self.elapsed_ms = start.elapsed().as_millis();
        self
    }
}

fn claim(tensor: String, value: Complex64, scale: f64, via: &str) -> ValueClaim {
    let threshold = NONZERO_REL * scale;
    ValueClaim { tensor, value, magnitude: value.norm(), threshold, via: via.into(), ok: value.norm() > threshold }
}

fn swap_label(t: Tensor) -> String {
    Tensor::new(t.b, t.a, t.c).label()
}

/// Certificate that `l(gamma^a v1 (x) gamma^b v2 (x) gamma^c v3)` vanishes.
pub fn zero_certificate(f: &Field, ctx: &TrilinearContext, t: Tensor) -> Result<Certificate> {
    let t = t.normalized();
    let level = (ctx.conductors[0] as i64 + t.a).max(ctx.conductors[1] as i64 + t.b) as u32;
    let dual = ctx.specs[2].contragredient()?;
    let dim = eigenspace_dim(f, &dual, level, &ctx.central(2).inv(), EigenSide::D, ctx.settings.budget)?;
    Ok(Certificate { tensor: t, level, eigenspace_dim: dim })
}

/// Runs the ledger in a context and its mirror, recording the designated values.
fn descent_pair(
    f: &Field,
    report: &mut TheoremReport,
    ctx: &TrilinearContext,
    target: Tensor,
    mirror_target: Option<Tensor>,
) -> Result<()> {
    report.vanishing.extend(ctx.require_vanishing()?);
    report.lambda12.push(verify_lambda12(f, ctx)?);
    let ledger = build_ledger(f, ctx)?;
    let value = descent_solve(&ledger, target)?;
    report.nonzero.push(claim(target.label(), value, ledger.scale, "descent"));
    report.ledgers.push(ledger);
    if let Some(t) = mirror_target {
        let m = ctx.swapped()?;
        report.vanishing.extend(m.require_vanishing()?);
        report.lambda12.push(verify_lambda12(f, &m)?);
        let ledger = build_ledger(f, &m)?;
        let value = descent_solve(&ledger, t)?;
        report.nonzero.push(claim(swap_label(t), value, ledger.scale, "descent, first two exchanged"));
        report.ledgers.push(ledger);
    }
    Ok(())
}

fn kernel_claim(f: &Field, report: &mut TheoremReport, specs: &[RepSpec; 3], shift: i64, tol: f64) -> Result<()> {
    let mut vs = vec![];
    for (i, s) in specs.iter().enumerate() {
        let v = new_vector(f, s)?;
        vs.push(if i == 0 && shift != 0 { v.act(f, &crate::gl2::Mat2::gamma(f, shift))? } else { v });
    }
    let k = kernel_oracle(f, [&vs[0], &vs[1], &vs[2]], tol)?;
    report.nonzero.push(claim(Tensor::new(shift, 0, 0).label(), k.value, k.scale, "kernel integral"));
    Ok(())
}

/// Value of `l` on one pure tensor, with the route that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct FormValue {
    pub tensor: String,
    pub value: Complex64,
    pub zero: bool,
    /// "eigenspace certificate", "descent", "kernel integral" or
    /// "coset sum in the Kirillov model".
    pub via: String,
    /// Values from different routes carry different normalizations.
    pub normalization: String,
    pub certificate: Option<Certificate>,
    pub vanishing: Vec<Check>,
    pub ledger: Option<Ledger>,
    pub equal_conductor: Option<EqualConductor>,
}

fn form(t: Tensor, value: Complex64, via: &str, normalization: &str) -> FormValue {
    FormValue {
        tensor: t.label(),
        value,
        zero: value == Complex64::new(0.0, 0.0),
        via: via.into(),
        normalization: normalization.into(),
        certificate: None,
        vanishing: vec![],
        ledger: None,
        equal_conductor: None,
    }
}

/// `l(gamma^a v1 (x) gamma^b v2 (x) gamma^c v3)`: certified zero if the
/// eigenspace argument applies, else solved from the descent ledger, else the
/// kernel integral for triples of induced models. Anything else is out of scope.
pub fn evaluate_form(f: &Field, specs: [RepSpec; 3], target: Tensor, settings: Settings) -> Result<FormValue> {
    let stubs = specs.iter().filter(|s| s.is_stub()).count();
    let n: Vec<i64> = specs.iter().map(|s| s.conductor() as i64).collect();
    match stubs {
        0 => {}
        2 if !specs[0].is_stub() && n[1] == n[2] => {
            let designated = Tensor::new(n[2] - n[0], 0, 0);
            if target.normalized() != designated.normalized() {
                return Err(Error::Unsupported(format!(
                    "with two supercuspidal members only {} is computed",
                    designated.label()
                )));
            }
            let v1 = match &specs[0].kind {
                RepKind::Principal { mu, .. } if !mu.is_unramified() => specs[0].swapped(),
                _ => specs[0].clone(),
            };
            let v2 = SupercuspidalStub::from_spec(&specs[1], AddChar::Psi)?;
            let v3 = SupercuspidalStub::from_spec(&specs[2], AddChar::PsiBar)?;
            let r = ell_equal_conductor(f, &v1, &v2, &v3, settings.budget)?;
            let mut out = form(designated, r.value, "coset sum in the Kirillov model", "Phi(new, new) = 1, vol(K) = 1");
            out.equal_conductor = Some(r);
            return Ok(out);
        }
        3 => return Err(Error::Unsupported("three supercuspidal members are out of scope".into())),
        _ => {
            return Err(Error::Unsupported(
                "supercuspidal members are handled only as a pair of equal conductor after an induced V1".into(),
            ))
        }
    }
    let ctx = TrilinearContext::new(specs.clone(), settings.clone())?;
    let c = zero_certificate(f, &ctx, target)?;
    if c.eigenspace_dim == 0 {
        let mut out = form(target, Complex64::new(0.0, 0.0), "eigenspace certificate", "any");
        out.certificate = Some(c);
        return Ok(out);
    }
    let descent = ctx.require_vanishing().and_then(|checks| {
        let ledger = build_ledger(f, &ctx)?;
        let value = descent_solve(&ledger, target)?;
        Ok((checks, ledger, value))
    });
    match descent {
        Ok((checks, ledger, value)) => {
            let mut out = form(target, value, "descent", "phi through the torus integral, vol(J_n) as coset mass");
            out.zero = ledger.certificate(target).is_some_and(|c| c.eigenspace_dim == 0);
            out.certificate = ledger.certificate(target).cloned();
            out.vanishing = checks;
            out.ledger = Some(ledger);
            Ok(out)
        }
        Err(e @ (Error::Underdetermined(_) | Error::CaseMismatch(_))) => {
            let induced = specs.iter().all(|s| matches!(s.kind, RepKind::Principal { .. } | RepKind::Reducible { .. }));
            if !induced {
                return Err(Error::Underdetermined(format!("{}: {e}", target.label())));
            }
            let t = target;
            let mut vs = vec![];
            for (s, e) in specs.iter().zip([t.a, t.b, t.c]) {
                vs.push(new_vector(f, s)?.act(f, &crate::gl2::Mat2::gamma(f, e))?);
            }
            let k = kernel_oracle(f, [&vs[0], &vs[1], &vs[2]], settings.tol)?;
            let mut out = form(target, k.value, "kernel integral", "kernel integral over P^1(O)^3, vol = 1");
            out.zero = k.value.norm() < settings.tol * k.scale;
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

pub fn verify_theorem(f: &Field, case: CaseId, specs: [RepSpec; 3], settings: Settings) -> Result<TheoremReport> {
    let start = Instant::now();
    let mut report = TheoremReport::new(f, case, &specs);
    let n: Vec<i64> = specs.iter().map(|s| s.conductor() as i64).collect();
    let reducible = |s: &RepSpec| matches!(s.kind, RepKind::Reducible { .. });
    let mismatch = |m: &str| Err(Error::CaseMismatch(m.into()));
    match case {
        CaseId::Vt00n | CaseId::Vt01scA | CaseId::Vt01scB => {
            if specs.iter().any(|s| s.is_stub() || reducible(s)) {
                return mismatch("these cases take non-supercuspidal irreducible members");
            }
            report.epsilon = Some(epsilon_obstruction(&specs)?);
            let ctx = TrilinearContext::new(specs.clone(), settings)?;
            match case {
                CaseId::Vt00n => {
                    if ctx.roles != [Role::Unramified, Role::Unramified] || n[2] == 0 {
                        return mismatch("needs V1, V2 unramified and V3 ramified");
                    }
                    descent_pair(f, &mut report, &ctx, Tensor::new(n[2], 0, 0), Some(Tensor::new(n[2], 0, 0)))?;
                    let c = zero_certificate(f, &ctx, Tensor::new(0, 0, 0))?;
                    report.zeros.push(ZeroClaim { tensor: Tensor::new(0, 0, 0).label(), ok: c.eigenspace_dim == 0, certificate: c });
                }
                CaseId::Vt01scA => {
                    if n[2] <= n[0].max(n[1]) {
                        return mismatch("needs n3 > n1, n2");
                    }
                    descent_pair(f, &mut report, &ctx, Tensor::new(n[2] - n[0], 0, 0), Some(Tensor::new(n[2] - n[1], 0, 0)))?;
                }
                _ => {
                    if n[0] != n[1] || n[0] < n[2] || n[0] == 0 {
                        return mismatch("needs n1 = n2 >= n3 and n1 > 0");
                    }
                    report.vanishing.extend(ctx.require_vanishing()?);
                    report.lambda12.push(verify_lambda12(f, &ctx)?);
                    let ledger = build_ledger(f, &ctx)?;
                    for i in 0..=(n[0] - n[2]) {
                        let t = Tensor::new(0, 0, i);
                        let v = descent_solve(&ledger, t)?;
                        report.nonzero.push(claim(t.label(), v, ledger.scale, "descent"));
                    }
                    report.ledgers.push(ledger);
                }
            }
        }
        CaseId::EqualConductor => {
            let v1 = match &specs[0].kind {
                RepKind::Principal { mu, .. } if !mu.is_unramified() => specs[0].swapped(),
                _ => specs[0].clone(),
            };
            let v2 = SupercuspidalStub::from_spec(&specs[1], AddChar::Psi)?;
            let v3 = SupercuspidalStub::from_spec(&specs[2], AddChar::PsiBar)?;
            report.epsilon = Some(epsilon_obstruction(&specs)?);
            let r = ell_equal_conductor(f, &v1, &v2, &v3, settings.budget)?;
            let t = Tensor::new(n[2] - n[0], 0, 0);
            let mut c = claim(t.label(), r.value, r.closed_form.norm(), "coset sum in the Kirillov model");
            c.ok &= (r.value - r.closed_form).norm() < 1e-9 * r.closed_form.norm().max(1.0);
            report.nonzero.push(c);
            report.equal_conductor = Some(r);
        }
        CaseId::ReducibleI => {
            if !specs.iter().all(reducible) {
                return mismatch("needs three reducible spherical inductions");
            }
            kernel_claim(f, &mut report, &specs, 0, settings.tol)?;
        }
        CaseId::ReducibleII => {
            if !(reducible(&specs[0]) && reducible(&specs[1])) || reducible(&specs[2]) || specs[2].is_stub() {
                return mismatch("needs V1, V2 reducible and V3 irreducible non-supercuspidal");
            }
            if n[2] == 0 {
                kernel_claim(f, &mut report, &specs, 0, settings.tol)?;
            } else {
                let ctx = TrilinearContext::new(specs.clone(), settings)?;
                descent_pair(f, &mut report, &ctx, Tensor::new(n[2], 0, 0), None)?;
            }
        }
        CaseId::ReducibleIIIa => {
            if !reducible(&specs[0]) || reducible(&specs[1]) || specs[1].is_stub() || n[2] <= n[1] {
                return mismatch("needs V1 reducible, V2 irreducible non-supercuspidal and n3 > n2");
            }
            let ctx = TrilinearContext::new(specs.clone(), settings)?;
            descent_pair(f, &mut report, &ctx, Tensor::new(n[2], 0, 0), Some(Tensor::new(n[2] - n[1], 0, 0)))?;
        }
    }
    Ok(report.finish(start))
}

//! Batch checks: closed-form translates of the distinguished vectors against
//! the group action, and the structural identities of the congruence subgroups.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::characters::{MultChar, UnitChar};
use crate::error::{Error, Result};
use crate::gl2::{
    conj_gamma, decomposition2_factors, decomposition_factors, enumerate_cosets, gl2_order, int_mat, iwahori_index,
    p1_rep, p1_size, product, support_identity_check, Mat2, Subgroup,
};
use crate::induced_reps::{
    closed_form_gamma, closed_form_level, gamma_variant_vector, lemma_case, GammaVariant, LemmaCase, RepKind, RepSpec,
};
use crate::local_field::Field;

/// Coset count below which the lemma suite enumerates all of K / Kprin_L.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;

pub fn case_name(case: LemmaCase) -> &'static str {
    match case {
        LemmaCase::Unramified => "unramified",
        LemmaCase::MuUnramified => "mu-unramified",
        LemmaCase::MuPrimeUnramified => "mu-prime-unramified",
        LemmaCase::BothRamified => "both-ramified",
        LemmaCase::QuotientVI => "special-quotient-vI",
        LemmaCase::SubspaceVK => "special-subspace-vK",
    }
}

fn variants(case: LemmaCase) -> &'static [GammaVariant] {
    use GammaVariant::*;
    match case {
        LemmaCase::Unramified | LemmaCase::SubspaceVK => &[Plain, MinusAlpha, MinusBeta],
        LemmaCase::MuUnramified => &[Plain, MinusAlphaInvNext],
        LemmaCase::MuPrimeUnramified => &[Plain, MinusBeta],
        LemmaCase::BothRamified | LemmaCase::QuotientVI => &[Plain],
    }
}

fn primitive(p: u64, cond: u32, which: i64) -> Result<UnitChar> {
    if p == 2 {
        match cond {
            2 => UnitChar::from_exponents(2, &[1], 2),
            m => UnitChar::from_exponents(2, &[which.rem_euclid(2), 1], m),
        }
    } else if cond == 1 {
        UnitChar::from_exponents(p, &[which.rem_euclid(p as i64 - 1).max(1)], 1)
    } else {
        UnitChar::from_exponents(p, &[1], cond)
    }
}

/// Representations covering every closed-form case, ramified characters of the
/// two smallest conductors available at p.
pub fn lemma_family(p: u64) -> Result<Vec<(String, RepSpec)>> {
    let z = Complex64::new;
    let unram = |w: Complex64| MultChar::unramified(p, w);
    let low = if p == 2 { 2 } else { 1 };
    let ram = |cond: u32, w: Complex64, which: i64| -> Result<MultChar> { Ok(MultChar::new(w, primitive(p, cond, which)?)) };
    let mut out = vec![(
        "Ind(mu, mu') unramified".to_string(),
        RepSpec::principal(unram(z(0.7, 0.2)), unram(z(1.2, -0.1)))?,
    )];
    for cond in [low, low + 1] {
        out.push((
            format!("Ind(mu, mu') cond(mu') = {cond}"),
            RepSpec::principal(unram(z(0.9, 0.3)), ram(cond, z(1.1, -0.2), 1)?)?,
        ));
        out.push((
            format!("Ind(mu, mu') cond(mu) = {cond}"),
            RepSpec::principal(ram(cond, z(0.8, 0.4), 1)?, unram(z(1.3, 0.1)))?,
        ));
    }
    out.push((
        format!("Ind(mu, mu') cond = ({low}, {})", low + 1),
        RepSpec::principal(ram(low, z(0.6, -0.5), 1)?, ram(low + 1, z(1.05, 0.25), 1)?)?,
    ));
    out.push((
        format!("Ind(mu, mu') cond = ({low}, {low})"),
        RepSpec::principal(ram(low, z(0.75, 0.35), 1)?, ram(low, z(0.95, -0.45), -1)?)?,
    ));
    for (name, eta) in [("trivial", z(1.0, 0.0)), ("quadratic", z(-1.0, 0.0)), ("generic", z(0.6, 0.8))] {
        out.push((format!("St quotient, eta {name}"), RepSpec::special_quotient(unram(eta))));
        out.push((format!("St subspace, eta {name}"), RepSpec::special_subspace(unram(eta))));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaEntry {
    pub lemma: String,
    pub spec: String,
    pub variant: GammaVariant,
    pub r: u32,
    pub level: u32,
    /// "cosets" (all of K / Kprin_level) or "p1-torus" (P^1 points times
    /// diagonal units and a unipotent).
    pub mode: String,
    pub points: usize,
    pub max_dev: f64,
    pub scale: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaSuite {
    pub p: u64,
    pub r_max: u32,
    pub tol: f64,
    pub alpha_perturbation: f64,
    pub entries: Vec<LemmaEntry>,
    /// Entries whose level exceeds the precision, as `(spec, variant, r, level)`.
    pub skipped: Vec<(String, GammaVariant, u32, u32)>,
    pub worst: f64,
    pub pass: bool,
}

impl LemmaSuite {
    /// Pass flag and worst relative deviation per lemma.
    pub fn by_lemma(&self) -> Vec<(String, bool, f64)> {
        let mut out: Vec<(String, bool, f64)> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|x| x.0 == e.lemma) {
                Some(x) => {
                    x.1 &= e.pass;
                    x.2 = x.2.max(e.max_dev);
                }
                None => out.push((e.lemma.clone(), e.pass, e.max_dev)),
            }
        }
        out
    }
}

/// Same representation with the unramified part of mu scaled by `1 + eps`.
fn perturbed(spec: &RepSpec, eps: f64) -> Result<RepSpec> {
    if eps == 0.0 {
        return Ok(spec.clone());
    }
    Ok(match &spec.kind {
        RepKind::Principal { mu, mu_prime } => {
            let mut m = mu.clone();
            m.unramified *= 1.0 + eps;
            RepSpec { kind: RepKind::Principal { mu: m, mu_prime: mu_prime.clone() } }
        }
        RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => {
            let mut e = eta.clone();
            e.unramified *= 1.0 + eps;
            let mut out = spec.clone();
            match &mut out.kind {
                RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => {
                    *eta = e
                }
                _ => unreachable!(),
            }
            out
        }
        RepKind::Stub { .. } => spec.clone(),
    })
}

fn sample_points(f: &Field, spec: &RepSpec, level: u32, budget: u64) -> Result<(Vec<Mat2>, &'static str)> {
    let order = gl2_order(f.p(), level);
    if order <= EXHAUSTIVE_LIMIT.min(budget as u128) {
        let reps = enumerate_cosets(f, level, budget)?;
        return Ok((reps.into_iter().map(|e| int_mat(f, e)).collect(), "cosets"));
    }
    let c = spec.borel().map(|b| b.conductor()).unwrap_or(0).max(1);
    let q = f.pow(c);
    let units: Vec<u64> = (1..q).filter(|u| u % f.p() != 0).collect();
    let size = p1_size(f.p(), level) as u128 * (units.len() as u128).pow(2) * 2;
    if size > budget as u128 {
        return Err(Error::Budget { needed: size, budget });
    }
    let mut out = Vec::with_capacity(size as usize);
    for idx in 0..p1_size(f.p(), level) {
        let k = p1_rep(f, level, idx);
        for &a in &units {
            for &d in &units {
                for x in 0..2 {
                    let b = Mat2::new(f.from_residue(a), f.from_int(x), crate::Qp::ZERO, f.from_residue(d));
                    out.push(b.mul(f, &k)?);
                }
            }
        }
    }
    Ok((out, "p1-torus"))
}

/// Compares every closed-form translate `gamma^r v` (and its difference
/// vectors) with the vector obtained from the action, for `0 <= r <= r_max`.
/// The closed forms are evaluated for the representation with alpha scaled
/// by `1 + alpha_perturbation`.
pub fn lemma_suite(
    f: &Field,
    family: &[(String, RepSpec)],
    r_max: u32,
    budget: u64,
    tol: f64,
    alpha_perturbation: f64,
) -> Result<LemmaSuite> {
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (label, spec) in family {
        let case = lemma_case(spec)?;
        let bent = perturbed(spec, alpha_perturbation)?;
        for &variant in variants(case) {
            for r in 0..=r_max {
                if r == 0 && matches!(variant, GammaVariant::MinusAlpha | GammaVariant::MinusBeta) {
                    continue;
                }
                let level = closed_form_level(spec, variant, r);
                if level + 1 > f.precision() {
                    skipped.push((label.clone(), variant, r, level));
                    continue;
                }
                let v = gamma_variant_vector(f, spec, variant, r)?;
                let (points, mode) = sample_points(f, spec, level, budget)?;
                let scale = v.max_abs().max(f64::MIN_POSITIVE);
                let dev = points
                    .par_iter()
                    .map(|k| -> Result<f64> {
                        let a = v.eval_k(f, k)?;
                        let b = closed_form_gamma(f, &bent, variant, r, k)?;
                        Ok((a - b).norm())
                    })
                    .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?
                    / scale;
                entries.push(LemmaEntry {
                    lemma: case_name(case).to_string(),
                    spec: label.clone(),
                    variant,
                    r,
                    level,
                    mode: mode.to_string(),
                    points: points.len(),
                    max_dev: dev,
                    scale,
                    pass: dev <= tol,
                });
            }
        }
    }
    let worst = entries.iter().map(|e| e.max_dev).fold(0.0, f64::max);
    let pass = entries.iter().all(|e| e.pass);
    Ok(LemmaSuite { p: f.p(), r_max, tol, alpha_perturbation, entries, skipped, worst, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct Tally {
    pub checked: usize,
    pub failures: usize,
}

impl Tally {
    fn new() -> Tally {
        Tally { checked: 0, failures: 0 }
    }

    fn record(&mut self, ok: bool) {
        self.checked += 1;
        self.failures += usize::from(!ok);
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.checked += o.checked;
        self.failures += o.failures;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionCheck {
    pub r: u32,
    pub s: u32,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeLevel {
    pub n: u32,
    pub iwahori: usize,
    pub principal: usize,
    pub upper_unipotent: usize,
    pub j: usize,
    /// Member counts agree with the group orders.
    pub counts_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructuralReport {
    pub level: u32,
    pub cosets: usize,
    pub intersection: Vec<IntersectionCheck>,
    pub decomposition: Tally,
    pub decomposition2: Tally,
    pub inclusions: Tally,
    pub lattice: Vec<LatticeLevel>,
    pub pass: bool,
}

/// Digits beyond the level needed to multiply the factorizations back exactly.
pub const GUARD_DIGITS: u32 = 3;

/// Exhaustive structural identities on K / Kprin_level:
/// `K cap B gamma^r I_s gamma^-r = I_{r+s}` for `r + s <= level`, both
/// factorizations of `gamma^-r k gamma^r` multiplied back, and the inclusions
/// and indices of `Kprin_n, I1_n, J_n, I_n`. Arithmetic runs at precision
/// at least `level + GUARD_DIGITS`, whatever the precision of `f`.
pub fn structural_checks(f: &Field, level: u32, budget: u64) -> Result<StructuralReport> {
    let needed = gl2_order(f.p(), level);
    if needed > budget as u128 {
        return Err(Error::Budget { needed, budget });
    }
    let guarded = Field::new(f.p(), f.precision().max(level + GUARD_DIGITS))?;
    let f = &guarded;
    let mut intersection = Vec::new();
    for s in 1..=level {
        for r in 0..=level - s {
            intersection.push(IntersectionCheck { r, s, holds: support_identity_check(f, r, s, budget)? });
        }
    }
    let reps = enumerate_cosets(f, level, budget)?;
    let sets = |n: u32| {
        [Subgroup::Principal(n), Subgroup::I1(n), Subgroup::J(n), Subgroup::Iwahori(n)]
    };
    let (decomposition, decomposition2, inclusions, counts) = reps
        .par_iter()
        .map(|e| -> Result<(Tally, Tally, Tally, Vec<[usize; 4]>)> {
            let k = int_mat(f, *e);
            let (mut d1, mut d2, mut inc) = (Tally::new(), Tally::new(), Tally::new());
            let vc = k.c.valuation();
            if let Some(vc) = vc.filter(|v| *v < level as i64) {
                for r in (0..=vc).filter(|_| vc >= 1) {
                    let fs = decomposition_factors(f, &k, r)?;
                    d1.record(product(f, &fs)?.eq(f, &conj_gamma(f, &k, r)?));
                }
                for r in vc..=level as i64 {
                    let fs = decomposition2_factors(f, &k, r)?;
                    d2.record(product(f, &fs)?.eq(f, &conj_gamma(f, &k, r)?));
                }
            }
            let mut counts = Vec::new();
            for n in 0..=level {
                let m = sets(n).map(|s| k.is_member(f, s)).map(|x| x.unwrap_or(false));
                inc.record(!m[0] || m[1]);
                inc.record(!m[1] || m[3]);
                inc.record(!m[2] || m[3]);
                if n < level {
                    let next = sets(n + 1).map(|s| k.is_member(f, s).unwrap_or(false));
                    for i in 0..4 {
                        inc.record(!next[i] || m[i]);
                    }
                }
                counts.push(m.map(usize::from));
            }
            Ok((d1, d2, inc, counts))
        })
        .try_reduce(
            || (Tally::new(), Tally::new(), Tally::new(), vec![[0usize; 4]; level as usize + 1]),
            |a, b| {
                let counts = a.3.iter().zip(&b.3).map(|(x, y)| [0, 1, 2, 3].map(|i| x[i] + y[i])).collect();
                Ok((a.0.merge(b.0), a.1.merge(b.1), a.2.merge(b.2), counts))
            },
        )?;
    let total = reps.len();
    let p = f.p() as usize;
    let lattice: Vec<LatticeLevel> = counts
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let n = n as u32;
            let principal = total / gl2_order(f.p(), n) as usize;
            let q = p.pow(level);
            let counts_ok = c[3] * iwahori_index(f.p(), n) as usize == total
                && c[0] == principal
                && c[1] == principal * if n == 0 { 1 } else { p.pow(n) }
                && (n == 0 || c[2] == q * q / p.pow(n));
            LatticeLevel { n, iwahori: c[3], principal: c[0], upper_unipotent: c[1], j: c[2], counts_ok }
        })
        .collect();
    let pass = intersection.iter().all(|x| x.holds)
        && decomposition.failures == 0
        && decomposition2.failures == 0
        && inclusions.failures == 0
        && lattice.iter().all(|l| l.counts_ok);
    Ok(StructuralReport {
        level,
        cosets: total,
        intersection,
        decomposition,
        decomposition2,
        inclusions,
        lattice,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_covers_all_cases() {
        for p in [2, 3, 5] {
            let fam = lemma_family(p).unwrap();
            let mut seen: Vec<LemmaCase> = fam.iter().map(|(_, s)| lemma_case(s).unwrap()).collect();
            seen.dedup();
            for c in [
                LemmaCase::Unramified,
                LemmaCase::MuUnramified,
                LemmaCase::MuPrimeUnramified,
                LemmaCase::BothRamified,
                LemmaCase::QuotientVI,
                LemmaCase::SubspaceVK,
            ] {
                assert!(seen.contains(&c), "p={p} missing {c:?}");
            }
        }
    }

    #[test]
    fn small_suite_passes() {
        let f = Field::new(3, 6).unwrap();
        let fam = lemma_family(3).unwrap();
        let s = lemma_suite(&f, &fam, 1, 10_000_000, 1e-9, 0.0).unwrap();
        assert!(s.pass, "{:?}", s.entries.iter().filter(|e| !e.pass).collect::<Vec<_>>());
        assert!(s.skipped.is_empty());
    }

    #[test]
    fn perturbed_alpha_is_caught() {
        let f = Field::new(2, 6).unwrap();
        let fam = lemma_family(2).unwrap();
        let s = lemma_suite(&f, &fam[..1], 2, 10_000_000, 1e-9, 1e-3).unwrap();
        assert!(!s.pass);
        assert!(s.by_lemma().iter().any(|(l, ok, _)| l == "unramified" && !ok));
    }

    #[test]
    fn structure_at_level_two() {
        for p in [2, 3] {
            let f = Field::new(p, 6).unwrap();
            let r = structural_checks(&f, 2, 10_000_000).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.decomposition.checked > 0 && r.decomposition2.checked > 0);
        }
    }

    #[test]
    fn budget_is_reported() {
        let f = Field::new(7, 6).unwrap();
        assert!(matches!(structural_checks(&f, 3, 20_000_000), Err(Error::Budget { .. })));
    }
}

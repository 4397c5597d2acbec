//! Principal series and special representations realized in induced models.
//!
//! A vector of `Ind_B^G(chi)` fixed by the principal congruence subgroup of level
//! s is determined by its values on representatives of `(B cap K) \ K / Kprin_s`,
//! a set in bijection with P^1(Z/p^s); see [`crate::gl2::p1_rep`].

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::characters::{generators, BorelChar, MultChar};
use crate::error::{Error, Result};
use crate::gl2::{p1_locate, p1_rep, p1_size, Mat2, Subgroup};
use crate::local_field::{Field, Qp};

const REDUCIBILITY_TOL: f64 = 1e-9;

/// Description of a representation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RepKind {
    /// `Ind(mu, mu')` with `mu'/mu != |.|^{+-1}`.
    Principal { mu: MultChar, mu_prime: MultChar },
    /// `eta (x) St` as the quotient of `Ind((eta o det) delta^{-1/2})` by the line `eta o det`.
    SpecialQuotient { eta: MultChar },
    /// `eta (x) St` as the kernel of `proj*` on `Ind((eta o det) delta^{1/2})`.
    SpecialSubspace { eta: MultChar },
    /// The whole reducible `Ind((eta o det) delta^{1/2})`, eta unramified.
    Reducible { eta: MultChar },
    /// Supercuspidal representation known only through its conductor, central
    /// character and new-vector data. `label` identifies the underlying
    /// representation and `twist` records twists applied to it.
    Stub { n: u32, omega: MultChar, label: String, twist: MultChar },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepSpec {
    pub kind: RepKind,
}

impl RepSpec {
    pub fn principal(mu: MultChar, mu_prime: MultChar) -> Result<RepSpec> {
        let ratio = mu_prime.mul(&mu.inv());
        if ratio.is_norm_power(1.0, REDUCIBILITY_TOL) || ratio.is_norm_power(-1.0, REDUCIBILITY_TOL) {
            return Err(Error::Representation("mu'/mu = |.|^{+-1}: induced representation is reducible".into()));
        }
        Ok(RepSpec { kind: RepKind::Principal { mu, mu_prime } })
    }

    pub fn special_quotient(eta: MultChar) -> RepSpec {
        RepSpec { kind: RepKind::SpecialQuotient { eta } }
    }

    pub fn special_subspace(eta: MultChar) -> RepSpec {
        RepSpec { kind: RepKind::SpecialSubspace { eta } }
    }

    pub fn reducible(eta: MultChar) -> Result<RepSpec> {
        if !eta.is_unramified() {
            return Err(Error::Representation("reducible spherical model needs unramified eta".into()));
        }
        Ok(RepSpec { kind: RepKind::Reducible { eta } })
    }

    pub fn stub(n: u32, omega: MultChar, label: &str) -> Result<RepSpec> {
        if n < 2 {
            return Err(Error::Representation(format!("supercuspidal conductor {n} < 2")));
        }
        let p = omega.p();
        Ok(RepSpec { kind: RepKind::Stub { n, omega, label: label.to_string(), twist: MultChar::trivial(p) } })
    }

    pub fn p(&self) -> u64 {
        match &self.kind {
            RepKind::Principal { mu, .. } => mu.p(),
            RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => {
                eta.p()
            }
            RepKind::Stub { omega, .. } => omega.p(),
        }
    }

    pub fn is_stub(&self) -> bool {
        matches!(self.kind, RepKind::Stub { .. })
    }

    pub fn is_special(&self) -> bool {
        matches!(self.kind, RepKind::SpecialQuotient { .. } | RepKind::SpecialSubspace { .. })
    }

    pub fn is_principal(&self) -> bool {
        matches!(self.kind, RepKind::Principal { .. })
    }

    /// Special or supercuspidal.
    pub fn is_discrete_series(&self) -> bool {
        self.is_special() || self.is_stub()
    }

    pub fn conductor(&self) -> u32 {
        match &self.kind {
            RepKind::Principal { mu, mu_prime } => mu.cond() + mu_prime.cond(),
            RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } => {
                if eta.is_unramified() {
                    1
                } else {
                    2 * eta.cond()
                }
            }
            RepKind::Reducible { .. } => 0,
            RepKind::Stub { n, .. } => *n,
        }
    }

    pub fn central(&self) -> MultChar {
        match &self.kind {
            RepKind::Principal { mu, mu_prime } => mu.mul(mu_prime),
            RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => {
                eta.pow(2)
            }
            RepKind::Stub { omega, .. } => omega.clone(),
        }
    }

    /// Minimal among twists.
    pub fn is_minimal(&self) -> bool {
        match &self.kind {
            RepKind::Principal { mu, mu_prime } => mu.is_unramified() || mu_prime.is_unramified(),
            RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } => eta.is_unramified(),
            RepKind::Reducible { .. } => true,
            RepKind::Stub { twist, .. } => twist.is_unramified(),
        }
    }

    /// The character `(mu, mu')` of the induced model.
    pub fn borel(&self) -> Option<BorelChar> {
        let p = self.p();
        let half = |s: f64, eta: &MultChar| eta.mul(&MultChar::norm_power(p, s));
        match &self.kind {
            RepKind::Principal { mu, mu_prime } => Some(BorelChar::new(mu.clone(), mu_prime.clone())),
            RepKind::SpecialQuotient { eta } => Some(BorelChar::new(half(-0.5, eta), half(0.5, eta))),
            RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => {
                Some(BorelChar::new(half(0.5, eta), half(-0.5, eta)))
            }
            RepKind::Stub { .. } => None,
        }
    }

    /// Same representation in the model `Ind(mu', mu)`.
    pub fn swapped(&self) -> RepSpec {
        match &self.kind {
            RepKind::Principal { mu, mu_prime } => {
                RepSpec { kind: RepKind::Principal { mu: mu_prime.clone(), mu_prime: mu.clone() } }
            }
            _ => self.clone(),
        }
    }

    pub fn twist(&self, eta: &MultChar) -> Result<RepSpec> {
        Ok(RepSpec {
            kind: match &self.kind {
                RepKind::Principal { mu, mu_prime } => {
                    RepKind::Principal { mu: mu.mul(eta), mu_prime: mu_prime.mul(eta) }
                }
                RepKind::SpecialQuotient { eta: e } => RepKind::SpecialQuotient { eta: e.mul(eta) },
                RepKind::SpecialSubspace { eta: e } => RepKind::SpecialSubspace { eta: e.mul(eta) },
                RepKind::Reducible { eta: e } => RepKind::Reducible { eta: e.mul(eta) },
                RepKind::Stub { n, omega, label, twist } => {
                    if !eta.is_unramified() {
                        return Err(Error::Unsupported("conductor of a ramified twist of a stub".into()));
                    }
                    RepKind::Stub {
                        n: *n,
                        omega: omega.mul(&eta.pow(2)),
                        label: label.clone(),
                        twist: twist.mul(eta),
                    }
                }
            },
        })
    }

    /// `V (x) omega^{-1}`, isomorphic to the contragredient.
    pub fn contragredient(&self) -> Result<RepSpec> {
        self.twist(&self.central().inv())
    }

    /// Isomorphism test on character data.
    pub fn isomorphic(&self, o: &RepSpec, tol: f64) -> Result<bool> {
        use RepKind::*;
        Ok(match (&self.kind, &o.kind) {
            (Principal { mu: a, mu_prime: b }, Principal { mu: c, mu_prime: d }) => {
                (a.approx_eq(c, tol) && b.approx_eq(d, tol)) || (a.approx_eq(d, tol) && b.approx_eq(c, tol))
            }
            (SpecialQuotient { eta: a } | SpecialSubspace { eta: a }, SpecialQuotient { eta: b } | SpecialSubspace { eta: b }) => {
                a.approx_eq(b, tol)
            }
            (Reducible { eta: a }, Reducible { eta: b }) => a.approx_eq(b, tol),
            (Stub { label: a, twist: s, .. }, Stub { label: b, twist: t, .. }) => a == b && s.approx_eq(t, tol),
            _ => false,
        })
    }
}

/// Bookkeeping for vectors of the special models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VectorTag {
    /// An honest function in the induced space.
    Function,
    /// Canonical representative of a class modulo `eta o det`.
    QuotientClass,
}

/// Vector of an induced model, tabulated on P^1(Z/p^level).
#[derive(Clone, Debug)]
pub struct InducedVector {
    pub chi: BorelChar,
    pub level: u32,
    pub values: Vec<Complex64>,
    pub tag: VectorTag,
}

/// Required level for the induced model of `chi`.
pub fn base_level(chi: &BorelChar) -> u32 {
    chi.mu.cond().max(chi.mu_prime.cond())
}

impl InducedVector {
    pub fn zero(chi: &BorelChar, level: u32) -> InducedVector {
        InducedVector { chi: chi.clone(), level, values: vec![Complex64::new(0.0, 0.0); p1_size(chi.p(), level)], tag: VectorTag::Function }
    }

    /// Tabulate a function given on K. The function must already satisfy the
    /// left `(B cap K)`-equivariance; it is only read at the representatives.
    pub fn from_k_fn<F>(f: &Field, chi: &BorelChar, level: u32, func: F) -> Result<InducedVector>
    where
        F: Fn(&Mat2) -> Result<Complex64> + Sync,
    {
        if level > f.precision() {
            return Err(Error::LevelOverflow { level, cap: f.precision() });
        }
        if level < base_level(chi) {
            return Err(Error::Representation(format!("level {level} below character conductor")));
        }
        let values = (0..p1_size(f.p(), level))
            .into_par_iter()
            .map(|i| func(&p1_rep(f, level, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(InducedVector { chi: chi.clone(), level, values, tag: VectorTag::Function })
    }

    /// Value at an element of K.
    pub fn eval_k(&self, f: &Field, k: &Mat2) -> Result<Complex64> {
        let (idx, a, d) = p1_locate(f, k, self.level)?;
        let v = self.values[idx];
        if v == Complex64::new(0.0, 0.0) {
            return Ok(v);
        }
        Ok(self.chi.eval(f, a, d)? * v)
    }

    /// `f(g) = chi delta^{1/2}(b) f(k)` for `g = b k`.
    pub fn evaluate(&self, f: &Field, g: &Mat2) -> Result<Complex64> {
        let (b, k) = g.iwasawa(f)?;
        let v = self.eval_k(f, &k)?;
        if v == Complex64::new(0.0, 0.0) {
            return Ok(v);
        }
        Ok(self.chi.eval_normalized(f, b.a, b.d)? * v)
    }

    /// Right translation `(g.f)(x) = f(x g)`.
    pub fn act(&self, f: &Field, g: &Mat2) -> Result<InducedVector> {
        let (_, t) = g.primitive_split(f)?;
        let level = self.level + t as u32;
        let mut out = InducedVector::from_k_fn(f, &self.chi, level, |k| self.evaluate(f, &k.mul(f, g)?))?;
        out.tag = self.tag;
        Ok(out)
    }

    pub fn relevel(&self, f: &Field, level: u32) -> Result<InducedVector> {
        if level == self.level {
            return Ok(self.clone());
        }
        let mut out = InducedVector::from_k_fn(f, &self.chi, level, |k| self.eval_k(f, k))?;
        out.tag = self.tag;
        Ok(out)
    }

    fn same_model(&self, o: &InducedVector) -> Result<()> {
        if self.chi.mu.approx_eq(&o.chi.mu, 1e-12) && self.chi.mu_prime.approx_eq(&o.chi.mu_prime, 1e-12) {
            Ok(())
        } else {
            Err(Error::ModelMismatch("vectors live in different induced models".into()))
        }
    }

    /// `self + c * o`.
    pub fn add_scaled(&self, f: &Field, c: Complex64, o: &InducedVector) -> Result<InducedVector> {
        self.same_model(o)?;
        let level = self.level.max(o.level);
        let a = self.relevel(f, level)?;
        let b = o.relevel(f, level)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x + c * y).collect();
        Ok(InducedVector { chi: self.chi.clone(), level, values, tag: self.tag })
    }

    pub fn scale(&self, c: Complex64) -> InducedVector {
        InducedVector { values: self.values.iter().map(|x| x * c).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest difference at a common level.
    pub fn distance(&self, f: &Field, o: &InducedVector) -> Result<f64> {
        Ok(self.add_scaled(f, Complex64::new(-1.0, 0.0), o)?.max_abs())
    }

    /// `{coset label: [re, im]}`.
    pub fn to_json(&self) -> BTreeMap<String, [f64; 2]> {
        let q = self.chi.p().pow(self.level) as usize;
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let label = if self.level == 0 {
                    "K".to_string()
                } else if i < q {
                    format!("(0,-1;1,{i})")
                } else {
                    format!("(1,0;{},1)", (i - q) as u64 * self.chi.p())
                };
                (label, [v.re, v.im])
            })
            .collect()
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// The function `eta o det` in `Ind((eta o det) delta^{-1/2})`.
pub fn eta_det(f: &Field, spec: &RepSpec) -> Result<InducedVector> {
    let RepKind::SpecialQuotient { eta } = &spec.kind else {
        return Err(Error::ModelMismatch("eta o det lives in the quotient model".into()));
    };
    let chi = spec.borel().unwrap();
    let level = base_level(&chi);
    InducedVector::from_k_fn(f, &chi, level, |k| eta.eval(f, k.det(f)?))
}

/// Indicator-type vectors of the special models: `v^I`, `v^{K\I}`, `v^K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialBasis {
    VI,
    VKminusI,
    VK,
}

pub fn special_vector(f: &Field, spec: &RepSpec, which: SpecialBasis) -> Result<InducedVector> {
    let eta = match &spec.kind {
        RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => eta,
        _ => return Err(Error::ModelMismatch("indicator vectors need a reducible model".into())),
    };
    if !eta.is_unramified() {
        return Err(Error::Representation("indicator vectors need unramified eta".into()));
    }
    let chi = spec.borel().unwrap();
    InducedVector::from_k_fn(f, &chi, 1, |k| {
        let in_i = k.is_member(f, Subgroup::Iwahori(1))?;
        Ok(match which {
            SpecialBasis::VI => if in_i { one() } else { zero() },
            SpecialBasis::VKminusI => if in_i { zero() } else { one() },
            SpecialBasis::VK => one(),
        })
    })
}

/// New vector of a non-stub representation.
pub fn new_vector(f: &Field, spec: &RepSpec) -> Result<InducedVector> {
    match &spec.kind {
        RepKind::Principal { mu, mu_prime } => {
            let chi = spec.borel().unwrap();
            let n = spec.conductor();
            let m = mu_prime.cond();
            if n == 0 {
                return InducedVector::from_k_fn(f, &chi, 0, |_| Ok(one()));
            }
            if mu.is_unramified() {
                InducedVector::from_k_fn(f, &chi, n, |k| {
                    if k.is_member(f, Subgroup::Iwahori(n))? {
                        mu_prime.eval(f, k.d)
                    } else {
                        Ok(zero())
                    }
                })
            } else if mu_prime.is_unramified() {
                InducedVector::from_k_fn(f, &chi, n, |k| {
                    if k.is_member(f, Subgroup::Iwahori(1))? {
                        Ok(zero())
                    } else {
                        mu.eval(f, f.div(k.det(f)?, k.c)?)
                    }
                })
            } else {
                InducedVector::from_k_fn(f, &chi, n, |k| {
                    if k.shell_depth(f) == m {
                        let cc = f.mul(f.pi_pow(-(m as i64)), k.c);
                        Ok(mu.eval(f, f.div(k.det(f)?, cc)?)? * mu_prime.eval(f, k.d)?)
                    } else {
                        Ok(zero())
                    }
                })
            }
        }
        RepKind::SpecialQuotient { eta } => {
            if !eta.is_unramified() {
                let chi = spec.borel().unwrap();
                let principal = RepSpec { kind: RepKind::Principal { mu: chi.mu.clone(), mu_prime: chi.mu_prime.clone() } };
                return special_project(f, spec, &new_vector(f, &principal)?)?
                    .into_vector()
                    .ok_or_else(|| Error::ModelMismatch("quotient projection".into()));
            }
            special_project(f, spec, &special_vector(f, spec, SpecialBasis::VI)?)?
                .into_vector()
                .ok_or_else(|| Error::ModelMismatch("quotient projection".into()))
        }
        RepKind::SpecialSubspace { eta } => {
            let vk = special_vector(f, spec, SpecialBasis::VK)?;
            vk.act(f, &Mat2::gamma(f, 1))?.add_scaled(f, -eta.at_pi().inv(), &vk)
        }
        RepKind::Reducible { .. } => special_vector(f, spec, SpecialBasis::VK),
        RepKind::Stub { .. } => Err(Error::Unsupported("stub new vectors live in the Kirillov model".into())),
    }
}

/// Atkin-Lehner translate `(0 1; p^n 0) . v`, n the conductor.
pub fn atkin_lehner(f: &Field, spec: &RepSpec, v: &InducedVector) -> Result<InducedVector> {
    v.act(f, &Mat2::atkin_lehner(f, spec.conductor()))
}

/// Output of [`special_project`].
#[derive(Clone, Debug)]
pub enum Projection {
    Class(InducedVector),
    Scalar(Complex64),
}

impl Projection {
    pub fn into_vector(self) -> Option<InducedVector> {
        match self {
            Projection::Class(v) => Some(v),
            Projection::Scalar(_) => None,
        }
    }

    pub fn scalar(&self) -> Option<Complex64> {
        match self {
            Projection::Scalar(z) => Some(*z),
            Projection::Class(_) => None,
        }
    }
}

/// Quotient model: the class of v modulo `eta o det`, represented by the unique
/// element of the class vanishing at the identity. Subspace model: `proj*(v)`.
pub fn special_project(f: &Field, spec: &RepSpec, v: &InducedVector) -> Result<Projection> {
    let chi = spec.borel().ok_or_else(|| Error::ModelMismatch("stub".into()))?;
    if v.same_model(&InducedVector::zero(&chi, 0)).is_err() {
        return Err(Error::ModelMismatch("vector not in the model of this representation".into()));
    }
    match &spec.kind {
        RepKind::SpecialQuotient { .. } => {
            let line = eta_det(f, spec)?;
            let c = v.evaluate(f, &Mat2::identity(f))? / line.evaluate(f, &Mat2::identity(f))?;
            let mut out = v.add_scaled(f, -c, &line)?;
            out.tag = VectorTag::QuotientClass;
            Ok(Projection::Class(out))
        }
        RepKind::SpecialSubspace { eta } | RepKind::Reducible { eta } => {
            if !eta.is_unramified() {
                return Err(Error::Representation("proj* implemented for unramified eta".into()));
            }
            let total: Complex64 = v.values.iter().sum();
            Ok(Projection::Scalar(total / v.values.len() as f64))
        }
        _ => Err(Error::ModelMismatch("special_project needs a special model".into())),
    }
}

/// Which vector the lemma closed forms describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LemmaCase {
    /// Unramified principal series, new vector.
    Unramified,
    /// mu unramified, mu' ramified.
    MuUnramified,
    /// mu' unramified, mu ramified.
    MuPrimeUnramified,
    /// Both ramified.
    BothRamified,
    /// `v^I` in the quotient model of a special representation.
    QuotientVI,
    /// `v^K` in the subspace model.
    SubspaceVK,
}

/// Difference vectors of the lemmas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GammaVariant {
    /// `gamma^r v`.
    Plain,
    /// `gamma^r v - alpha gamma^{r-1} v`.
    MinusAlpha,
    /// `gamma^r v - beta gamma^{r-1} v`.
    MinusBeta,
    /// `gamma^r v - alpha^{-1} gamma^{r+1} v`.
    MinusAlphaInvNext,
}

pub fn lemma_case(spec: &RepSpec) -> Result<LemmaCase> {
    Ok(match &spec.kind {
        RepKind::Principal { mu, mu_prime } => match (mu.is_unramified(), mu_prime.is_unramified()) {
            (true, true) => LemmaCase::Unramified,
            (true, false) => LemmaCase::MuUnramified,
            (false, true) => LemmaCase::MuPrimeUnramified,
            (false, false) => LemmaCase::BothRamified,
        },
        RepKind::SpecialQuotient { .. } => LemmaCase::QuotientVI,
        RepKind::SpecialSubspace { .. } | RepKind::Reducible { .. } => LemmaCase::SubspaceVK,
        RepKind::Stub { .. } => return Err(Error::CaseMismatch("no induced model for stubs".into())),
    })
}

/// The vector the lemmas translate: the new vector, or `v^I` / `v^K`.
pub fn lemma_vector(f: &Field, spec: &RepSpec) -> Result<InducedVector> {
    match lemma_case(spec)? {
        LemmaCase::QuotientVI => special_vector(f, spec, SpecialBasis::VI),
        LemmaCase::SubspaceVK => special_vector(f, spec, SpecialBasis::VK),
        _ => new_vector(f, spec),
    }
}

/// Closed-form value at `k in K` of `gamma^r v` (or a difference vector).
pub fn closed_form_gamma(f: &Field, spec: &RepSpec, variant: GammaVariant, r: u32, k: &Mat2) -> Result<Complex64> {
    let case = lemma_case(spec)?;
    let chi = spec.borel().unwrap();
    let (alpha, beta) = (chi.alpha(), chi.beta());
    let n = spec.conductor();
    let s = k.shell_depth(f);
    let in_i = |j: u32| k.is_member(f, Subgroup::Iwahori(j));
    let ri = r as i32;
    let mismatch = || Err(Error::CaseMismatch(format!("{variant:?} not available for {case:?} at r = {r}")));
    let spherical = |r: u32| -> Result<Complex64> {
        if in_i(r)? {
            Ok(alpha.powi(r as i32))
        } else {
            Ok(alpha.powi(s as i32) * beta.powi(r as i32 - s as i32))
        }
    };
    match case {
        LemmaCase::Unramified | LemmaCase::SubspaceVK => match variant {
            GammaVariant::Plain => spherical(r),
            GammaVariant::MinusAlpha if r >= 1 => {
                if in_i(r)? {
                    Ok(zero())
                } else {
                    let si = s as i32;
                    Ok(alpha.powi(si) * beta.powi(ri - si) - alpha.powi(si + 1) * beta.powi(ri - 1 - si))
                }
            }
            GammaVariant::MinusBeta if r >= 1 => {
                if in_i(r)? {
                    Ok(alpha.powi(ri) * (one() - beta / alpha))
                } else {
                    Ok(zero())
                }
            }
            _ => mismatch(),
        },
        LemmaCase::MuUnramified => {
            let RepKind::Principal { mu_prime, .. } = &spec.kind else { unreachable!() };
            let support = match variant {
                GammaVariant::Plain => in_i(n + r)?,
                GammaVariant::MinusAlphaInvNext => in_i(n + r)? && !in_i(n + r + 1)?,
                _ => return mismatch(),
            };
            if support {
                Ok(alpha.powi(ri) * mu_prime.eval(f, k.d)?)
            } else {
                Ok(zero())
            }
        }
        LemmaCase::MuPrimeUnramified => {
            let RepKind::Principal { mu, .. } = &spec.kind else { unreachable!() };
            let val = |j: u32| -> Result<Complex64> {
                let cc = f.mul(f.pi_pow(-(j as i64)), k.c);
                mu.eval(f, f.div(k.det(f)?, cc)?)
            };
            match variant {
                GammaVariant::Plain => {
                    if in_i(r + 1)? {
                        Ok(zero())
                    } else {
                        Ok(alpha.powi(s as i32) * beta.powi(ri - s as i32) * val(s)?)
                    }
                }
                GammaVariant::MinusBeta if r >= 1 => {
                    if in_i(r)? && !in_i(r + 1)? {
                        Ok(alpha.powi(ri) * val(r)?)
                    } else {
                        Ok(zero())
                    }
                }
                _ => mismatch(),
            }
        }
        LemmaCase::BothRamified => {
            let RepKind::Principal { mu, mu_prime } = &spec.kind else { unreachable!() };
            if variant != GammaVariant::Plain {
                return mismatch();
            }
            let m = mu_prime.cond();
            if in_i(m + r)? && !in_i(m + r + 1)? {
                let cc = f.mul(f.pi_pow(-((m + r) as i64)), k.c);
                Ok(alpha.powi(ri) * mu.eval(f, f.div(k.det(f)?, cc)?)? * mu_prime.eval(f, k.d)?)
            } else {
                Ok(zero())
            }
        }
        LemmaCase::QuotientVI => {
            if variant != GammaVariant::Plain {
                return mismatch();
            }
            if in_i(r + 1)? {
                Ok(alpha.powi(ri))
            } else {
                Ok(zero())
            }
        }
    }
}

/// Level of the vector described by a closed form.
pub fn closed_form_level(spec: &RepSpec, variant: GammaVariant, r: u32) -> u32 {
    let base = match lemma_case(spec) {
        Ok(LemmaCase::QuotientVI) | Ok(LemmaCase::SubspaceVK) => 1,
        _ => spec.conductor(),
    };
    match variant {
        GammaVariant::MinusAlphaInvNext => base + r + 1,
        _ => base + r,
    }
}

/// The vector of a closed form computed with the group action.
pub fn gamma_variant_vector(f: &Field, spec: &RepSpec, variant: GammaVariant, r: u32) -> Result<InducedVector> {
    let v = lemma_vector(f, spec)?;
    let chi = spec.borel().unwrap();
    let g = |j: i64| v.act(f, &Mat2::gamma(f, j));
    let r = r as i64;
    match variant {
        GammaVariant::Plain => g(r),
        GammaVariant::MinusAlpha => g(r)?.add_scaled(f, -chi.alpha(), &g(r - 1)?),
        GammaVariant::MinusBeta => g(r)?.add_scaled(f, -chi.beta(), &g(r - 1)?),
        GammaVariant::MinusAlphaInvNext => g(r)?.add_scaled(f, -chi.alpha().inv(), &g(r + 1)?),
    }
}

/// Which diagonal entry the eigencharacter reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EigenSide {
    /// `k -> omega(d)` (the new line).
    D,
    /// `k -> omega(a)` (the Atkin-Lehner image).
    A,
}

/// Topological generators of I_s modulo any principal congruence subgroup.
pub fn iwahori_generators(f: &Field, s: u32) -> Vec<Mat2> {
    let p = f.p();
    let units: Vec<Qp> = if p == 2 {
        vec![f.from_int(-1), f.from_int(5)]
    } else {
        vec![f.from_int(generators(p)[0] as i64)]
    };
    let mut gens = vec![];
    for u in &units {
        gens.push(Mat2::diag(*u, f.one()));
        gens.push(Mat2::diag(f.one(), *u));
    }
    gens.push(Mat2::upper_unipotent(f, f.one()));
    gens.push(Mat2::lower_unipotent(f, f.pi_pow(s as i64)));
    if s == 0 {
        gens.push(Mat2::w_tilde(f));
    }
    gens
}

fn eigen_char(f: &Field, omega: &MultChar, side: EigenSide, g: &Mat2) -> Result<Complex64> {
    let x = match side {
        EigenSide::D => g.d,
        EigenSide::A => g.a,
    };
    if x.is_zero() {
        return Ok(one());
    }
    omega.eval(f, x)
}

/// Matrix of `g` acting on level-`level` vectors of the model `chi`, `g in K`.
pub fn action_matrix(f: &Field, chi: &BorelChar, level: u32, g: &Mat2) -> Result<DMatrix<Complex64>> {
    let size = p1_size(f.p(), level);
    let mut m = DMatrix::zeros(size, size);
    for i in 0..size {
        let x = p1_rep(f, level, i).mul(f, g)?;
        let (j, a, d) = p1_locate(f, &x, level)?;
        m[(i, j)] += chi.eval(f, a, d)?;
    }
    Ok(m)
}

/// Dimension of the space of `chi`-model vectors on which I_s acts by `omega`.
pub fn induced_eigenspace_dim(f: &Field, chi: &BorelChar, s: u32, omega: &MultChar, side: EigenSide, budget: u64) -> Result<usize> {
    let level = s.max(omega.cond()).max(base_level(chi));
    if level > f.precision() {
        return Err(Error::LevelOverflow { level, cap: f.precision() });
    }
    let size = p1_size(f.p(), level);
    if (size as u64).pow(2) > budget.max(1) * 16 {
        return Err(Error::Budget { needed: (size as u128).pow(2), budget });
    }
    let mut gram = DMatrix::<Complex64>::zeros(size, size);
    for g in iwahori_generators(f, s) {
        let mut a = action_matrix(f, chi, level, &g)?;
        let w = eigen_char(f, omega, side, &g)?;
        for i in 0..size {
            a[(i, i)] -= w;
        }
        gram += a.adjoint() * &a;
    }
    let eig = gram.symmetric_eigen();
    Ok(eig.eigenvalues.iter().filter(|x| x.abs() < 1e-8).count())
}

/// Dimension of `V^{I_s, omega}` (or its `omega(a)` variant).
pub fn eigenspace_dim(f: &Field, spec: &RepSpec, s: u32, omega: &MultChar, side: EigenSide, budget: u64) -> Result<usize> {
    if let RepKind::Stub { n, .. } = &spec.kind {
        return Ok((s + 1).saturating_sub(*n) as usize);
    }
    let chi = spec.borel().unwrap();
    let full = induced_eigenspace_dim(f, &chi, s, omega, side, budget)?;
    let line_matches = |eta: &MultChar| -> Result<bool> {
        for g in iwahori_generators(f, s) {
            if (eta.eval(f, g.det(f)?)? - eigen_char(f, omega, side, &g)?).norm() > 1e-9 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    Ok(match &spec.kind {
        RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } => {
            full - usize::from(line_matches(eta)?)
        }
        _ => full,
    })
}

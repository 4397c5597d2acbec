use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characters::{BorelChar, MultChar};
use crate::error::{Error, Result};
use crate::induced_reps::{RepKind, RepSpec};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Cap on enumerated group elements / matrix sizes.
    pub budget: u64,
    pub tol: f64,
    /// Explicit shells `|val x| < radius` in the torus integral; `None` picks
    /// one more than the level of the vector.
    pub radius: Option<u32>,
    /// Relative error injected into the Satake parameter alpha (fault testing).
    pub alpha_perturbation: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { budget: 20_000_000, tol: 1e-9, radius: None, alpha_perturbation: 0.0 }
    }
}

/// How the first two representations enter the construction of `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Role {
    /// Spherical: unramified principal series or the reducible `Ind((eta o det) delta^{1/2})`.
    Unramified,
    /// Unramified twist of Steinberg, quotient model.
    Special,
    /// Ramified principal series in a model with the right character unramified.
    Ramified,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrilinearContext {
    pub specs: [RepSpec; 3],
    pub model_swapped: [bool; 2],
    pub conductors: [u32; 3],
    pub n: u32,
    pub roles: [Role; 2],
    #[serde(skip)]
    pub settings: Settings,
}

fn role(spec: &RepSpec) -> Result<Role> {
    Ok(match &spec.kind {
        RepKind::Reducible { .. } => Role::Unramified,
        RepKind::Principal { .. } if spec.conductor() == 0 => Role::Unramified,
        RepKind::Principal { .. } => Role::Ramified,
        RepKind::SpecialQuotient { eta } if eta.is_unramified() => Role::Special,
        RepKind::SpecialQuotient { .. } => {
            return Err(Error::CaseMismatch("first two representations must be minimal".into()))
        }
        _ => return Err(Error::ModelMismatch("unexpected model".into())),
    })
}

impl TrilinearContext {
    /// Validates the triple and picks models: the first representation with
    /// `mu` unramified, the second with `mu'` unramified, special ones in the
    /// quotient model.
    pub fn new(specs: [RepSpec; 3], settings: Settings) -> Result<Self> {
        if specs.iter().any(|s| s.is_stub()) {
            return Err(Error::Unsupported("supercuspidal members go through the Kirillov model".into()));
        }
        let p = specs[0].p();
        if specs.iter().any(|s| s.p() != p) {
            return Err(Error::Config("representations over different primes".into()));
        }
        let total = specs[0].central().mul(&specs[1].central()).mul(&specs[2].central());
        if !total.approx_eq(&MultChar::trivial(p), 1e-9) {
            return Err(Error::Config("product of central characters is not trivial".into()));
        }
        let [s1, s2, s3] = specs;
        let mut swapped = [false; 2];
        let fix = |s: RepSpec, left: bool, flag: &mut bool| -> Result<RepSpec> {
            match &s.kind {
                RepKind::SpecialSubspace { eta } => Ok(RepSpec::special_quotient(eta.clone())),
                RepKind::Principal { mu, mu_prime } => {
                    let (good, other) = if left { (mu, mu_prime) } else { (mu_prime, mu) };
                    if good.is_unramified() {
                        Ok(s)
                    } else if other.is_unramified() {
                        *flag = true;
                        Ok(s.swapped())
                    } else {
                        Err(Error::CaseMismatch("first two representations must be minimal".into()))
                    }
                }
                _ => Ok(s),
            }
        };
        let s1 = fix(s1, true, &mut swapped[0])?;
        let s2 = fix(s2, false, &mut swapped[1])?;
        let roles = [role(&s1)?, role(&s2)?];
        let conductors = [s1.conductor(), s2.conductor(), s3.conductor()];
        let n = *conductors.iter().max().unwrap();
        Ok(TrilinearContext { specs: [s1, s2, s3], model_swapped: swapped, conductors, n, roles, settings })
    }

    pub fn p(&self) -> u64 {
        self.specs[0].p()
    }

    pub fn borel(&self, i: usize) -> BorelChar {
        self.specs[i].borel().expect("non-stub")
    }

    /// Context with the first two representations exchanged.
    pub fn swapped(&self) -> Result<Self> {
        let [a, b, c] = self.specs.clone();
        TrilinearContext::new([b, a, c], self.settings.clone())
    }

    /// The vanishing statements the reduction from `H` to pure tensors relies on.
    pub fn vanishing_checks(&self) -> Result<Vec<Check>> {
        let dual3 = self.specs[2].contragredient()?;
        let tol = 1e-9;
        let (b1, b2) = (self.borel(0), self.borel(1));
        let p = self.p();
        let half = |s: f64| MultChar::norm_power(p, s);
        let mut out = vec![];
        let q = quotient_of_induced(&b1.mu.mul(&b2.mu).mul(&half(0.5)), &b1.mu_prime.mul(&b2.mu_prime).mul(&half(-0.5)))?;
        out.push(Check {
            name: "Hom(Ind(chi1 chi2 delta^1/2), dual V3) = 0".into(),
            holds: !matches!(q, Some(q) if q.isomorphic(&dual3, tol)?),
        });
        if let RepKind::SpecialQuotient { eta } = &self.specs[1].kind {
            let twisted = match &self.specs[0].kind {
                RepKind::Reducible { .. } => quotient_of_induced(&b1.mu.mul(eta), &b1.mu_prime.mul(eta))?,
                _ => Some(self.specs[0].twist(eta)?),
            };
            out.push(Check {
                name: "Hom(V1 (x) eta2, dual V3) = 0".into(),
                holds: !matches!(twisted, Some(q) if q.isomorphic(&dual3, tol)?),
            });
        }
        if let RepKind::SpecialQuotient { eta } = &self.specs[0].kind {
            let q = quotient_of_induced(&b2.mu.mul(eta), &b2.mu_prime.mul(eta))?;
            out.push(Check {
                name: "Hom(eta1 (x) Ind(chi2), dual V3) = 0".into(),
                holds: !matches!(q, Some(q) if q.isomorphic(&dual3, tol)?),
            });
        }
        Ok(out)
    }

    pub fn require_vanishing(&self) -> Result<Vec<Check>> {
        let checks = self.vanishing_checks()?;
        if let Some(c) = checks.iter().find(|c| !c.holds) {
            return Err(Error::CaseMismatch(format!("vanishing hypothesis fails: {}", c.name)));
        }
        Ok(checks)
    }

    pub fn central(&self, i: usize) -> MultChar {
        self.specs[i].central()
    }

    pub fn alpha(&self, i: usize) -> Complex64 {
        self.borel(i).alpha() * (1.0 + self.settings.alpha_perturbation)
    }

    pub fn beta(&self, i: usize) -> Complex64 {
        self.borel(i).beta()
    }
}

/// The infinite-dimensional irreducible quotient of `Ind(mu, mu')`, if any.
pub fn quotient_of_induced(mu: &MultChar, mu_prime: &MultChar) -> Result<Option<RepSpec>> {
    let p = mu.p();
    let ratio = mu_prime.mul(&mu.inv());
    if ratio.is_norm_power(1.0, 1e-9) {
        return Ok(Some(RepSpec::special_quotient(mu.mul(&MultChar::norm_power(p, 0.5)))));
    }
    if ratio.is_norm_power(-1.0, 1e-9) {
        return Ok(None);
    }
    Ok(Some(RepSpec::principal(mu.clone(), mu_prime.clone())?))
}

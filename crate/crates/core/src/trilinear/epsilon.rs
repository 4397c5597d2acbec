use serde::Serialize;

use crate::characters::{minimal_triple_search, MultChar};
use crate::error::{Error, Result};
use crate::induced_reps::{RepKind, RepSpec};

/// Minimal triple: every non-supercuspidal member minimal, or no
/// supercuspidal member and no twist `(eta1, eta2, eta3)` with
/// `eta1 eta2 eta3 = 1` lowers the total conductor.
pub fn is_minimal_triple(specs: &[RepSpec; 3]) -> Result<bool> {
    if specs.iter().filter(|s| !s.is_stub()).all(|s| s.is_minimal()) {
        return Ok(true);
    }
    if specs.iter().any(|s| s.is_stub()) {
        return Ok(false);
    }
    let bound = specs.iter().map(|s| s.conductor()).max().unwrap_or(0) + 1;
    Ok(minimal_triple_search(specs, bound)?.input_minimal)
}

#[derive(Clone, Debug, Serialize)]
pub struct Epsilon {
    pub value: i32,
    pub witness: Option<String>,
}

fn st_twist(spec: &RepSpec) -> Option<&MultChar> {
    match &spec.kind {
        RepKind::SpecialQuotient { eta } | RepKind::SpecialSubspace { eta } if eta.is_unramified() => Some(eta),
        _ => None,
    }
}

/// `-1` exactly when some member is `eta (x) St` with eta unramified and
/// another member is discrete series with contragredient isomorphic to the
/// third member twisted by eta.
pub fn epsilon_obstruction(specs: &[RepSpec; 3]) -> Result<Epsilon> {
    if !is_minimal_triple(specs)? {
        return Err(Error::Config("triple is not minimal".into()));
    }
    let p = specs[0].p();
    let total = specs[0].central().mul(&specs[1].central()).mul(&specs[2].central());
    if !total.approx_eq(&MultChar::trivial(p), 1e-9) {
        return Err(Error::Config("product of central characters is not trivial".into()));
    }
    for i in 0..3 {
        let Some(eta) = st_twist(&specs[i]) else { continue };
        for j in 0..3 {
            if j == i || !specs[j].is_discrete_series() {
                continue;
            }
            let k = 3 - i - j;
            if specs[j].contragredient()?.isomorphic(&specs[k].twist(eta)?, 1e-9)? {
                return Ok(Epsilon {
                    value: -1,
                    witness: Some(format!("V{} = eta St, dual V{} = V{} (x) eta", i + 1, j + 1, k + 1)),
                });
            }
        }
    }
    Ok(Epsilon { value: 1, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn unram(p: u64, z: f64) -> MultChar {
        MultChar::unramified(p, Complex64::from_polar(1.0, z))
    }

    #[test]
    fn steinberg_triple() {
        let p = 3;
        let (a, b) = (unram(p, 0.3), unram(p, 1.1));
        let c = a.mul(&b).inv();
        let st = |e: &MultChar| RepSpec::special_quotient(e.clone());
        assert_eq!(epsilon_obstruction(&[st(&a), st(&b), st(&c)]).unwrap().value, -1);
        let sign = MultChar::unramified(p, Complex64::new(-1.0, 0.0));
        assert_eq!(epsilon_obstruction(&[st(&a), st(&b), st(&c.mul(&sign))]).unwrap().value, 1);
    }

    #[test]
    fn stub_pattern() {
        let p = 3;
        let eta = unram(p, 0.7);
        let omega = MultChar::trivial(p);
        let s = RepSpec::stub(2, omega.clone(), "sigma").unwrap();
        let dual_twist = s.contragredient().unwrap().twist(&eta.inv()).unwrap();
        let triple = [RepSpec::special_quotient(eta.clone()), s.clone(), dual_twist];
        let central = triple.iter().fold(MultChar::trivial(p), |acc, x| acc.mul(&x.central()));
        assert!(central.approx_eq(&MultChar::trivial(p), 1e-9));
        assert_eq!(epsilon_obstruction(&triple).unwrap().value, -1);
    }
}

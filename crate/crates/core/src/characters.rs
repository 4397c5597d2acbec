//! Characters of Q_p^x and of the diagonal torus.
//!
//! Unit parts are stored exactly as rational exponents on fixed topological
//! generators of Z_p^x: a primitive root modulo p^2 for odd p, and (-1, 5) for p = 2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induced_reps::RepSpec;
use crate::local_field::{is_prime, powmod, Field, Qp};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rational number modulo 1, kept reduced with `0 <= num < den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frac {
    pub num: u64,
    pub den: u64,
}

impl Frac {
    pub const ZERO: Frac = Frac { num: 0, den: 1 };

    pub fn new(num: i64, den: u64) -> Frac {
        let n = num.rem_euclid(den as i64) as u64;
        let g = gcd(n, den).max(1);
        Frac { num: n / g, den: den / g }
    }

    pub fn add(self, o: Frac) -> Frac {
        let den = self.den / gcd(self.den, o.den) * o.den;
        let num = (self.num as u128 * (den / self.den) as u128 + o.num as u128 * (den / o.den) as u128)
            % den as u128;
        Frac::new(num as i64, den)
    }

    pub fn neg(self) -> Frac {
        Frac::new(-(self.num as i64), self.den)
    }

    pub fn scale(self, k: u64) -> Frac {
        Frac::new(((self.num as u128 * k as u128) % self.den as u128) as i64, self.den)
    }

    pub fn root_of_unity(self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.num as f64 / self.den as f64)
    }
}

/// Primitive root modulo p^2 (odd p); it generates (Z/p^k)^x for every k.
/// For p = 2 the generators are -1 and 5 and this returns an empty list.
pub fn generators(p: u64) -> Vec<u64> {
    if p == 2 {
        return vec![];
    }
    let phi = p - 1;
    let factors: Vec<u64> = (2..=phi).filter(|d| phi % d == 0 && is_prime(*d)).collect();
    let g = (2..p)
        .find(|&g| {
            factors.iter().all(|q| powmod(g, phi / q, p) != 1) && powmod(g, p - 1, p * p) != 1
        })
        .expect("primitive root exists");
    vec![g]
}

/// Discrete logarithms in (Z/p^k)^x with respect to [`generators`].
#[derive(Debug)]
pub struct UnitGroup {
    modulus: u64,
    orders: Vec<u64>,
    logs: Vec<[u32; 2]>,
}

const NOT_UNIT: u32 = u32::MAX;

impl UnitGroup {
    pub(crate) fn build(p: u64, level: u32) -> UnitGroup {
        let modulus = p.pow(level);
        let mut logs = vec![[NOT_UNIT, NOT_UNIT]; modulus as usize];
        let orders: Vec<u64> = if level == 0 {
            vec![]
        } else if p == 2 {
            match level {
                1 => vec![],
                2 => vec![2],
                _ => vec![2, 1 << (level - 2)],
            }
        } else {
            vec![(p - 1) * p.pow(level - 1)]
        };
        if modulus == 1 {
            logs[0] = [0, 0];
            return UnitGroup { modulus, orders, logs };
        }
        let gens: Vec<u64> = if p == 2 {
            vec![modulus - 1, 5 % modulus]
        } else {
            vec![generators(p)[0] % modulus]
        };
        match orders.len() {
            0 => logs[1] = [0, 0],
            1 => {
                let mut x = 1u64;
                for e in 0..orders[0] {
                    logs[x as usize] = [e as u32, 0];
                    x = x * gens[0] % modulus;
                }
            }
            _ => {
                let mut x = 1u64;
                for e1 in 0..orders[0] {
                    let mut y = x;
                    for e2 in 0..orders[1] {
                        logs[y as usize] = [e1 as u32, e2 as u32];
                        y = y * gens[1] % modulus;
                    }
                    x = x * gens[0] % modulus;
                }
            }
        }
        UnitGroup { modulus, orders, logs }
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn log(&self, u: u64) -> Option<[u32; 2]> {
        let l = self.logs[(u % self.modulus) as usize];
        (l[0] != NOT_UNIT).then_some(l)
    }
}

/// Character of Z_p^x given by exponents on the fixed generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitChar {
    p: u64,
    exps: Vec<Frac>,
}

impl UnitChar {
    pub fn trivial(p: u64) -> UnitChar {
        let len = if p == 2 { 2 } else { 1 };
        UnitChar { p, exps: vec![Frac::ZERO; len] }
    }

    /// Character of conductor exactly `m` from exponents against the generators
    /// of (Z/p^m)^x: for odd p, chi(g) = e(k / phi(p^m)); for p = 2,
    /// chi(-1) = e(k1/2) and chi(5) = e(k2 / 2^(m-2)).
    pub fn from_exponents(p: u64, exps: &[i64], m: u32) -> Result<UnitChar> {
        let chi = if p == 2 {
            let k1 = *exps.first().unwrap_or(&0);
            let k2 = *exps.get(1).unwrap_or(&0);
            let q5 = if m >= 3 {
                Frac::new(k2, 1 << (m - 2))
            } else if k2 == 0 {
                Frac::ZERO
            } else {
                return Err(Error::Character(format!("generator 5 is trivial mod 2^{m}")));
            };
            UnitChar { p, exps: vec![Frac::new(k1, 2), q5] }
        } else {
            if exps.len() > 1 {
                return Err(Error::Character("one exponent expected for odd p".into()));
            }
            let k = *exps.first().unwrap_or(&0);
            let phi = if m == 0 { 1 } else { (p - 1) * p.pow(m - 1) };
            UnitChar { p, exps: vec![Frac::new(k, phi)] }
        };
        let c = chi.conductor()?;
        if c != m {
            return Err(Error::Character(format!(
                "not primitive: stored conductor {m}, factors through conductor {c}"
            )));
        }
        Ok(chi)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponents(&self) -> &[Frac] {
        &self.exps
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|q| q.num == 0)
    }

    pub fn conductor(&self) -> Result<u32> {
        if self.p == 2 {
            let (q1, q5) = (self.exps[0], self.exps[1]);
            if q1.den > 2 || !q5.den.is_power_of_two() {
                return Err(Error::Character("exponent incompatible with (Z_2)^x".into()));
            }
            return Ok(if q5.num == 0 {
                if q1.num == 0 {
                    0
                } else {
                    2
                }
            } else {
                q5.den.trailing_zeros() + 2
            });
        }
        let q = self.exps[0];
        if q.num == 0 {
            return Ok(0);
        }
        let mut b = q.den;
        let mut k = 0;
        while b % self.p == 0 {
            b /= self.p;
            k += 1;
        }
        if (self.p - 1) % b != 0 {
            return Err(Error::Character(format!("order {} does not divide (p-1)p^k", q.den)));
        }
        Ok(k + 1)
    }

    /// Order of the character.
    pub fn order(&self) -> u64 {
        self.exps.iter().fold(1, |acc, q| acc / gcd(acc, q.den) * q.den)
    }

    pub fn mul(&self, o: &UnitChar) -> UnitChar {
        UnitChar { p: self.p, exps: self.exps.iter().zip(&o.exps).map(|(a, b)| a.add(*b)).collect() }
    }

    pub fn inv(&self) -> UnitChar {
        UnitChar { p: self.p, exps: self.exps.iter().map(|q| q.neg()).collect() }
    }

    pub fn pow(&self, k: i64) -> UnitChar {
        let e = k.rem_euclid(self.order() as i64) as u64;
        UnitChar { p: self.p, exps: self.exps.iter().map(|q| q.scale(e)).collect() }
    }

    /// Value on a unit given modulo `p^k`, `k >= conductor`.
    pub fn eval_residue(&self, field: &Field, u: u64, k: u32) -> Result<Complex64> {
        let c = self.conductor()?;
        if k < c {
            return Err(Error::Precision(format!("unit known mod p^{k}, conductor {c}")));
        }
        let group = field.unit_group(c)?;
        let log = group
            .log(u % field.pow(c))
            .ok_or_else(|| Error::Character(format!("{u} is not a unit")))?;
        let mut phase = Frac::ZERO;
        for (q, e) in self.exps.iter().zip(log) {
            phase = phase.add(q.scale(e as u64));
        }
        Ok(phase.root_of_unity())
    }

    /// All unit characters of conductor at most `bound`.
    pub fn all_up_to(p: u64, bound: u32) -> Vec<UnitChar> {
        if p == 2 {
            let k = if bound >= 3 { 1u64 << (bound - 2) } else { 1 };
            let signs: &[i64] = if bound >= 2 { &[0, 1] } else { &[0] };
            let mut out = vec![];
            for &s in signs {
                for j in 0..k {
                    out.push(UnitChar { p, exps: vec![Frac::new(s, 2), Frac::new(j as i64, k)] });
                }
            }
            out
        } else {
            let phi = if bound == 0 { 1 } else { (p - 1) * p.pow(bound - 1) };
            (0..phi).map(|j| UnitChar { p, exps: vec![Frac::new(j as i64, phi)] }).collect()
        }
    }
}

/// Character of F^x: unramified value at p times a unit character.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultChar {
    pub unramified: Complex64,
    pub unit: UnitChar,
}

impl MultChar {
    pub fn trivial(p: u64) -> MultChar {
        MultChar { unramified: Complex64::new(1.0, 0.0), unit: UnitChar::trivial(p) }
    }

    pub fn unramified(p: u64, value: Complex64) -> MultChar {
        MultChar { unramified: value, unit: UnitChar::trivial(p) }
    }

    /// `|.|^s`.
    pub fn norm_power(p: u64, s: f64) -> MultChar {
        MultChar::unramified(p, Complex64::new((p as f64).powf(-s), 0.0))
    }

    pub fn new(unramified: Complex64, unit: UnitChar) -> MultChar {
        MultChar { unramified, unit }
    }

    pub fn p(&self) -> u64 {
        self.unit.p
    }

    pub fn conductor(&self) -> Result<u32> {
        self.unit.conductor()
    }

    pub fn cond(&self) -> u32 {
        self.unit.conductor().expect("validated character")
    }

    pub fn is_unramified(&self) -> bool {
        self.unit.is_trivial()
    }

    pub fn at_pi(&self) -> Complex64 {
        self.unramified
    }

    pub fn eval(&self, field: &Field, x: Qp) -> Result<Complex64> {
        let v = x.valuation().ok_or(Error::ZeroArgument)?;
        let c = self.conductor()?;
        let u = field.unit_residue(x, c)?;
        Ok(self.unramified.powi(v as i32) * self.unit.eval_residue(field, u, c)?)
    }

    /// Value on the integer unit `u` (taken modulo p^conductor).
    pub fn eval_unit(&self, field: &Field, u: u64) -> Result<Complex64> {
        let c = self.conductor()?;
        self.unit.eval_residue(field, u % field.pow(c), c)
    }

    pub fn mul(&self, o: &MultChar) -> MultChar {
        MultChar { unramified: self.unramified * o.unramified, unit: self.unit.mul(&o.unit) }
    }

    pub fn inv(&self) -> MultChar {
        MultChar { unramified: self.unramified.inv(), unit: self.unit.inv() }
    }

    pub fn pow(&self, k: i64) -> MultChar {
        MultChar { unramified: self.unramified.powi(k as i32), unit: self.unit.pow(k) }
    }

    pub fn approx_eq(&self, o: &MultChar, tol: f64) -> bool {
        self.unit == o.unit && (self.unramified - o.unramified).norm() <= tol
    }

    /// True when the character is `|.|^s` for real s with `p^-s = value`.
    pub fn is_norm_power(&self, s: f64, tol: f64) -> bool {
        self.is_unramified()
            && (self.unramified - Complex64::new((self.p() as f64).powf(-s), 0.0)).norm() <= tol
    }
}

/// Character `(a *; 0 d) -> mu(a) mu'(d)` of the Borel subgroup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorelChar {
    pub mu: MultChar,
    pub mu_prime: MultChar,
}

impl BorelChar {
    pub fn new(mu: MultChar, mu_prime: MultChar) -> BorelChar {
        BorelChar { mu, mu_prime }
    }

    pub fn swapped(&self) -> BorelChar {
        BorelChar { mu: self.mu_prime.clone(), mu_prime: self.mu.clone() }
    }

    pub fn p(&self) -> u64 {
        self.mu.p()
    }

    pub fn eval(&self, field: &Field, a: Qp, d: Qp) -> Result<Complex64> {
        Ok(self.mu.eval(field, a)? * self.mu_prime.eval(field, d)?)
    }

    /// `chi(b) delta^{1/2}(b)` for `b = (a *; 0 d)`.
    pub fn eval_normalized(&self, field: &Field, a: Qp, d: Qp) -> Result<Complex64> {
        let dv = a.valuation().ok_or(Error::ZeroArgument)? - d.valuation().ok_or(Error::ZeroArgument)?;
        let half = (field.p() as f64).powf(-(dv as f64) / 2.0);
        Ok(self.eval(field, a, d)? * half)
    }

    /// `alpha^{-1} = mu(p) |p|^{1/2}`.
    pub fn alpha(&self) -> Complex64 {
        let sq = (self.p() as f64).sqrt();
        (self.mu.at_pi() / sq).inv()
    }

    /// `beta^{-1} = mu'(p) |p|^{-1/2}`.
    pub fn beta(&self) -> Complex64 {
        let sq = (self.p() as f64).sqrt();
        (self.mu_prime.at_pi() * sq).inv()
    }

    pub fn central(&self) -> MultChar {
        self.mu.mul(&self.mu_prime)
    }

    pub fn conductor(&self) -> u32 {
        self.mu.cond() + self.mu_prime.cond()
    }
}

/// Twist of a representation spec by `eta`.
pub fn twist_and_classify(spec: &RepSpec, eta: &MultChar) -> Result<RepSpec> {
    spec.twist(eta)
}

/// Result of [`minimal_triple_search`].
#[derive(Clone, Debug)]
pub struct MinimalSearch {
    pub twists: [MultChar; 3],
    pub total: u32,
    pub input_total: u32,
    pub input_minimal: bool,
}

/// Exhaustive search over `(eta1, eta2, eta3)` with `eta1 eta2 eta3 = 1` and all
/// conductors at most `bound`, minimizing the total twisted conductor.
pub fn minimal_triple_search(specs: &[RepSpec; 3], bound: u32) -> Result<MinimalSearch> {
    if specs.iter().any(|s| s.is_stub()) {
        return Err(Error::Unsupported("minimal triple search over supercuspidal stubs".into()));
    }
    let p = specs[0].p();
    let input_total: u32 = specs.iter().map(|s| s.conductor()).sum();
    let chars = UnitChar::all_up_to(p, bound);
    let mut best: Option<(u32, [MultChar; 3])> = None;
    for e1 in &chars {
        for e2 in &chars {
            let e3 = e1.mul(e2).inv();
            if e3.conductor()? > bound {
                continue;
            }
            let etas = [e1.clone(), e2.clone(), e3].map(|u| MultChar::new(Complex64::new(1.0, 0.0), u));
            let mut total = 0;
            for (s, e) in specs.iter().zip(&etas) {
                total += s.twist(e)?.conductor();
            }
            if best.as_ref().map_or(true, |(t, _)| total < *t) {
                best = Some((total, etas));
            }
        }
    }
    let (total, twists) = best.expect("trivial twist always searched");
    Ok(MinimalSearch { twists, total, input_total, input_minimal: total == input_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(p: u64) -> Field {
        Field::new(p, 6).unwrap()
    }

    #[test]
    fn order_four_character_mod_five() {
        let f = field(5);
        assert_eq!(generators(5), vec![2]);
        let chi = MultChar::new(Complex64::new(1.0, 0.0), UnitChar::from_exponents(5, &[1], 1).unwrap());
        let v = chi.eval(&f, f.from_int(2)).unwrap();
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert_eq!(chi.conductor().unwrap(), 1);
    }

    #[test]
    fn norm_character() {
        let f = field(3);
        let chi = MultChar::norm_power(3, 1.0);
        assert!((chi.eval(&f, f.from_int(3)).unwrap().re - 1.0 / 3.0).abs() < 1e-15);
        let triv = MultChar::trivial(3);
        assert!((triv.eval(&f, f.from_int(-17)).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(triv.conductor().unwrap(), 0);
        assert_eq!(triv.eval(&f, Qp::ZERO), Err(Error::ZeroArgument));
    }

    #[test]
    fn non_primitive_rejected() {
        // exponent 5 of 20 factors through (Z/5)^x
        assert!(matches!(UnitChar::from_exponents(5, &[5], 2), Err(Error::Character(_))));
        assert!(UnitChar::from_exponents(5, &[1], 2).is_ok());
        assert!(UnitChar::from_exponents(2, &[1, 0], 2).is_ok());
        assert!(UnitChar::from_exponents(2, &[0, 2], 4).is_err());
        assert_eq!(UnitChar::from_exponents(2, &[0, 1], 3).unwrap().conductor().unwrap(), 3);
    }

    #[test]
    fn discrete_logs_match_brute_force() {
        for (p, k) in [(3u64, 4u32), (5, 3), (2, 5), (7, 2)] {
            let g = UnitGroup::build(p, k);
            let m = p.pow(k);
            let gens = if p == 2 { vec![m - 1, 5 % m] } else { vec![generators(p)[0]] };
            let mut seen = std::collections::HashSet::new();
            for u in 1..m {
                match g.log(u) {
                    None => assert_eq!(u % p, 0),
                    Some(l) => {
                        let mut x = 1u64;
                        for (gi, e) in gens.iter().zip(l) {
                            x = x * powmod(*gi, e as u64, m) % m;
                        }
                        assert_eq!(x, u);
                        assert!(seen.insert(l));
                    }
                }
            }
            assert_eq!(seen.len() as u64, g.order());
        }
    }

    #[test]
    fn conductor_counts_match_group_orders() {
        // number of characters of conductor <= m equals |(Z/p^m)^x|
        for (p, m) in [(3u64, 3u32), (2, 4), (5, 2)] {
            let all = UnitChar::all_up_to(p, m);
            let order = UnitGroup::build(p, m).order() as usize;
            assert_eq!(all.len(), order);
            assert!(all.iter().all(|c| c.conductor().unwrap() <= m));
        }
        // no conductor-1 characters at p = 2
        assert!(UnitChar::all_up_to(2, 1).iter().all(|c| c.is_trivial()));
    }

    #[test]
    fn derived_constants() {
        let p = 3u64;
        let mu = MultChar::unramified(p, Complex64::new(0.7, 0.2));
        let mup = MultChar::unramified(p, Complex64::new(-1.1, 0.4));
        let chi = BorelChar::new(mu.clone(), mup.clone());
        let lhs = chi.alpha() / chi.beta();
        let rhs = (mu.at_pi() / mup.at_pi()).inv() * 3.0;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    fn unit_char(p: u64) -> impl Strategy<Value = MultChar> {
        let all = UnitChar::all_up_to(p, 3);
        (0..all.len(), -2.0f64..2.0, -2.0f64..2.0).prop_map(move |(i, re, im)| {
            MultChar::new(Complex64::new(re, im + 2.5), all[i].clone())
        })
    }

    proptest! {
        #[test]
        fn eval_is_multiplicative(chi in unit_char(3), a in -2i64..3, u in 1u64..700, b in -2i64..3, w in 1u64..700) {
            prop_assume!(u % 3 != 0 && w % 3 != 0);
            let f = field(3);
            let x = f.from_parts(a, u, 6).unwrap();
            let y = f.from_parts(b, w, 6).unwrap();
            let lhs = chi.eval(&f, f.mul(x, y)).unwrap();
            let rhs = chi.eval(&f, x).unwrap() * chi.eval(&f, y).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
        }

        #[test]
        fn eval_is_multiplicative_at_two(chi in unit_char(2), u in 1u64..64, w in 1u64..64) {
            prop_assume!(u % 2 == 1 && w % 2 == 1);
            let f = field(2);
            let x = f.from_int(u as i64);
            let y = f.from_int(-(w as i64));
            let lhs = chi.eval(&f, f.mul(x, y)).unwrap();
            let rhs = chi.eval(&f, x).unwrap() * chi.eval(&f, y).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }
    }
}

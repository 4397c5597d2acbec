//! Truncated arithmetic in Q_p.
//!
//! An element is `p^val * unit` with the unit known modulo `p^prec`. Multiplication
//! keeps the smaller relative precision; addition works at the smaller absolute
//! precision and may lose digits on cancellation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::characters::UnitGroup;
use crate::error::{Error, Result};

const ZERO_VAL: i32 = i32::MAX;

/// Element of Q_p. `val == i32::MAX` encodes zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Qp {
    val: i32,
    unit: u64,
    prec: u32,
}

impl Qp {
    pub const ZERO: Qp = Qp { val: ZERO_VAL, unit: 0, prec: 0 };

    pub fn is_zero(&self) -> bool {
        self.val == ZERO_VAL
    }

    /// Valuation, `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.val as i64)
    }

    /// Valuation with zero mapped to `cap`.
    pub fn val_or(&self, cap: i64) -> i64 {
        self.valuation().unwrap_or(cap)
    }

    pub fn unit(&self) -> u64 {
        self.unit
    }

    /// Relative precision of the unit part.
    pub fn precision(&self) -> u32 {
        self.prec
    }
}

/// Arithmetic context: prime, working precision and precision floor.
#[derive(Debug)]
pub struct Field {
    p: u64,
    n: u32,
    floor: u32,
    pow: Vec<u64>,
    units: Vec<OnceLock<UnitGroup>>,
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

impl Field {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        Self::with_floor(p, n, 1)
    }

    pub fn with_floor(p: u64, n: u32, floor: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        if n == 0 || floor == 0 || floor > n {
            return Err(Error::Config(format!("precision {n} with floor {floor}")));
        }
        let mut pow = vec![1u64];
        for _ in 0..(2 * n + 2) {
            let last = *pow.last().unwrap();
            let next = last
                .checked_mul(p)
                .filter(|v| *v < 1 << 62)
                .ok_or_else(|| Error::Config(format!("p^{} overflows", 2 * n + 2)))?;
            pow.push(next);
        }
        let units = (0..=n).map(|_| OnceLock::new()).collect();
        Ok(Field { p, n, floor, pow, units })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.n
    }

    pub fn floor(&self) -> u32 {
        self.floor
    }

    /// `p^k` for `0 <= k <= 2N+2`.
    pub fn pow(&self, k: u32) -> u64 {
        self.pow[k as usize]
    }

    pub(crate) fn unit_group(&self, level: u32) -> Result<&UnitGroup> {
        let cell = self
            .units
            .get(level as usize)
            .ok_or(Error::LevelOverflow { level, cap: self.n })?;
        Ok(cell.get_or_init(|| UnitGroup::build(self.p, level)))
    }

    fn check(&self, prec: u32) -> Result<u32> {
        if prec < self.floor {
            Err(Error::PrecisionUnderflow { have: prec, floor: self.floor })
        } else {
            Ok(prec)
        }
    }

    pub fn zero(&self) -> Qp {
        Qp::ZERO
    }

    pub fn one(&self) -> Qp {
        Qp { val: 0, unit: 1, prec: self.n }
    }

    /// `p^k`.
    pub fn pi_pow(&self, k: i64) -> Qp {
        Qp { val: k as i32, unit: 1, prec: self.n }
    }

    /// Exact integer at full precision.
    pub fn from_int(&self, x: i64) -> Qp {
        if x == 0 {
            return Qp::ZERO;
        }
        let mut v = 0;
        let mut m = x.unsigned_abs();
        while m % self.p == 0 {
            m /= self.p;
            v += 1;
        }
        let modulus = self.pow(self.n);
        let mut unit = m % modulus;
        if x < 0 {
            unit = (modulus - unit) % modulus;
        }
        Qp { val: v, unit, prec: self.n }
    }

    /// `p^val * unit`; the unit must be prime to p.
    pub fn from_parts(&self, val: i64, unit: u64, prec: u32) -> Result<Qp> {
        if unit % self.p == 0 {
            return Err(Error::Precision(format!("unit {unit} divisible by {}", self.p)));
        }
        let prec = self.check(prec.min(self.n))?;
        Ok(Qp { val: val as i32, unit: unit % self.pow(prec), prec })
    }

    /// The residue `x mod p^k` of a nonnegative integer, as an element.
    pub fn from_residue(&self, x: u64) -> Qp {
        self.from_int(x as i64)
    }

    pub fn neg(&self, x: Qp) -> Qp {
        if x.is_zero() {
            return x;
        }
        let m = self.pow(x.prec);
        Qp { unit: (m - x.unit) % m, ..x }
    }

    pub fn mul(&self, x: Qp, y: Qp) -> Qp {
        if x.is_zero() || y.is_zero() {
            return Qp::ZERO;
        }
        let prec = x.prec.min(y.prec);
        Qp { val: x.val + y.val, unit: mulmod(x.unit, y.unit, self.pow(prec)), prec }
    }

    pub fn inv(&self, x: Qp) -> Result<Qp> {
        if x.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let unit = invmod(x.unit, self.pow(x.prec)).expect("unit invertible");
        Ok(Qp { val: -x.val, unit, prec: x.prec })
    }

    pub fn div(&self, x: Qp, y: Qp) -> Result<Qp> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn add(&self, x: Qp, y: Qp) -> Result<Qp> {
        if x.is_zero() {
            return Ok(y);
        }
        if y.is_zero() {
            return Ok(x);
        }
        let (x, y) = if x.val <= y.val { (x, y) } else { (y, x) };
        let ax = x.val as i64 + x.prec as i64;
        let ay = y.val as i64 + y.prec as i64;
        let abs = ax.min(ay);
        if y.val as i64 >= abs {
            let prec = self.check((abs - x.val as i64) as u32)?;
            return Ok(Qp { unit: x.unit % self.pow(prec), prec, ..x });
        }
        let width = (abs - x.val as i64) as u32;
        let m = self.pow(width);
        let shift = self.pow((y.val - x.val) as u32);
        let s = (x.unit % m + mulmod(y.unit % m, shift, m)) % m;
        if s == 0 {
            return Ok(Qp::ZERO);
        }
        let mut t = 0;
        let mut s = s;
        while s % self.p == 0 {
            s /= self.p;
            t += 1;
        }
        let prec = self.check(width - t)?;
        Ok(Qp { val: x.val + t as i32, unit: s % self.pow(prec), prec })
    }

    pub fn sub(&self, x: Qp, y: Qp) -> Result<Qp> {
        self.add(x, self.neg(y))
    }

    /// True when `x - y` vanishes at the available precision.
    pub fn eq(&self, x: Qp, y: Qp) -> bool {
        matches!(self.sub(x, y), Ok(d) if d.is_zero())
    }

    pub fn abs_norm(&self, x: Qp) -> f64 {
        match x.valuation() {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-(v as i32)),
        }
    }

    /// `x mod p^k` for integral x.
    pub fn residue(&self, x: Qp, k: u32) -> Result<u64> {
        if x.is_zero() || x.val as i64 >= k as i64 {
            return Ok(0);
        }
        if x.val < 0 {
            return Err(Error::Precision(format!("residue of non-integral element (val {})", x.val)));
        }
        let v = x.val as u32;
        if v + x.prec < k {
            return Err(Error::Precision(format!(
                "need {k} digits, element known to {}",
                v + x.prec
            )));
        }
        Ok(mulmod(x.unit % self.pow(k - v), self.pow(v), self.pow(k)))
    }

    /// Unit part modulo `p^k`.
    pub fn unit_residue(&self, x: Qp, k: u32) -> Result<u64> {
        if x.is_zero() {
            return Err(Error::ZeroArgument);
        }
        if x.prec < k {
            return Err(Error::Precision(format!("unit needed mod p^{k}, known mod p^{}", x.prec)));
        }
        Ok(x.unit % self.pow(k))
    }

    /// Standard character `exp(2 pi i {x}_p)`, trivial exactly on O.
    pub fn additive_char(&self, x: Qp) -> Result<Complex64> {
        match x.valuation() {
            None => Ok(Complex64::new(1.0, 0.0)),
            Some(v) if v >= 0 => Ok(Complex64::new(1.0, 0.0)),
            Some(v) => {
                let depth = (-v) as u32;
                if depth > x.prec || depth > self.n {
                    return Err(Error::NotRepresentable { val: v, prec: x.prec });
                }
                let den = self.pow(depth);
                let num = x.unit % den;
                Ok(Complex64::from_polar(1.0, 2.0 * PI * num as f64 / den as f64))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-9
    }

    #[test]
    fn valuations_add() {
        let f = Field::new(5, 3).unwrap();
        let x = f.mul(f.from_int(5), f.from_int(5));
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.unit(), 1);
    }

    #[test]
    fn inverse_of_three_mod_125() {
        let f = Field::new(5, 3).unwrap();
        let x = f.inv(f.from_int(3)).unwrap();
        // independent oracle: brute search for the inverse
        let brute = (1..125u64).find(|u| (3 * u) % 125 == 1).unwrap();
        assert_eq!(x.unit(), brute);
        assert_eq!(brute, 42);
    }

    #[test]
    fn add_cancels_to_zero() {
        let f = Field::new(3, 6).unwrap();
        assert!(f.add(f.one(), f.from_int(-1)).unwrap().is_zero());
        assert_eq!(f.inv(Qp::ZERO), Err(Error::ZeroInverse));
    }

    #[test]
    fn partial_cancellation_tracks_precision() {
        let f = Field::new(3, 4).unwrap();
        let x = f.add(f.from_int(1), f.from_int(8)).unwrap();
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.precision(), 2);
        let strict = Field::with_floor(3, 4, 4).unwrap();
        assert!(matches!(
            strict.add(strict.from_int(1), strict.from_int(8)),
            Err(Error::PrecisionUnderflow { have: 2, floor: 4 })
        ));
    }

    #[test]
    fn norms() {
        let f = Field::new(3, 6).unwrap();
        assert!((f.abs_norm(f.from_int(3)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.abs_norm(f.one()), 1.0);
        assert!((f.abs_norm(f.pi_pow(-2)) - 9.0).abs() < 1e-12);
        assert_eq!(f.abs_norm(Qp::ZERO), 0.0);
    }

    #[test]
    fn psi_values() {
        let f = Field::new(3, 6).unwrap();
        let third = f.pi_pow(-1);
        let expected = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        assert!(close(f.additive_char(third).unwrap(), expected));
        let shifted = f.add(third, f.one()).unwrap();
        assert!(close(f.additive_char(shifted).unwrap(), expected));
        assert!(close(f.additive_char(f.from_int(7)).unwrap(), Complex64::new(1.0, 0.0)));
        let deep = f.from_parts(-7, 1, 6).unwrap();
        assert!(f.additive_char(deep).is_err());
    }

    fn elem(f: &Field) -> impl Strategy<Value = Qp> + '_ {
        (-3i64..4, 1u64..729).prop_filter_map("unit", move |(v, u)| {
            f.from_parts(v, u, f.precision()).ok()
        })
    }

    proptest! {
        #[test]
        fn psi_is_additive(a in -3i64..3, u in 1u64..729, b in -3i64..3, w in 1u64..729) {
            let f = Field::new(3, 6).unwrap();
            prop_assume!(u % 3 != 0 && w % 3 != 0);
            let x = f.from_parts(a, u, 6).unwrap();
            let y = f.from_parts(b, w, 6).unwrap();
            let s = f.add(x, y).unwrap();
            let lhs = f.additive_char(s).unwrap();
            let rhs = f.additive_char(x).unwrap() * f.additive_char(y).unwrap();
            prop_assert!(close(lhs, rhs));
        }

        #[test]
        fn norm_is_multiplicative_and_ultrametric(x in elem(&Field::new(3, 6).unwrap()), y in elem(&Field::new(3, 6).unwrap())) {
            let f = Field::new(3, 6).unwrap();
            let nx = f.abs_norm(x);
            let ny = f.abs_norm(y);
            prop_assert!((f.abs_norm(f.mul(x, y)) - nx * ny).abs() < 1e-9 * nx * ny);
            let s = f.abs_norm(f.add(x, y).unwrap());
            prop_assert!(s <= nx.max(ny) * (1.0 + 1e-12));
            if nx != ny {
                prop_assert!((s - nx.max(ny)).abs() < 1e-12 * nx.max(ny));
            }
        }

        #[test]
        fn inverse_roundtrip(x in elem(&Field::new(5, 4).unwrap())) {
            let f = Field::new(5, 4).unwrap();
            let y = f.mul(x, f.inv(x).unwrap());
            prop_assert!(f.eq(y, f.one()));
        }
    }
}

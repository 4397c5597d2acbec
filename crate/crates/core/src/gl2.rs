//! 2x2 matrices over Q_p: Iwasawa decomposition, subgroup membership, and
//! finite coset models of K = GL2(Z_p).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_field::{Field, Qp};

/// Matrix `(a b; c d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: Qp,
    pub b: Qp,
    pub c: Qp,
    pub d: Qp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Subgroup {
    K,
    /// Iwahori subgroup of depth n: lower-left entry in p^n O.
    Iwahori(u32),
    /// Principal congruence subgroup of level n.
    Principal(u32),
    /// The set `(1 O; p^n O 1)`.
    J(u32),
    /// `k = (1 *; 0 1) mod p^n`.
    I1(u32),
}

impl Mat2 {
    pub fn new(a: Qp, b: Qp, c: Qp, d: Qp) -> Mat2 {
        Mat2 { a, b, c, d }
    }

    pub fn ints(f: &Field, a: i64, b: i64, c: i64, d: i64) -> Mat2 {
        Mat2::new(f.from_int(a), f.from_int(b), f.from_int(c), f.from_int(d))
    }

    pub fn identity(f: &Field) -> Mat2 {
        Mat2::ints(f, 1, 0, 0, 1)
    }

    pub fn diag(a: Qp, d: Qp) -> Mat2 {
        Mat2::new(a, Qp::ZERO, Qp::ZERO, d)
    }

    /// `gamma^r = diag(p^-r, 1)`.
    pub fn gamma(f: &Field, r: i64) -> Mat2 {
        Mat2::diag(f.pi_pow(-r), f.one())
    }

    /// `(0 1; 1 0)`.
    pub fn w_tilde(f: &Field) -> Mat2 {
        Mat2::ints(f, 0, 1, 1, 0)
    }

    /// Atkin-Lehner element `(0 1; p^n 0)`.
    pub fn atkin_lehner(f: &Field, n: u32) -> Mat2 {
        Mat2::new(Qp::ZERO, f.one(), f.pi_pow(n as i64), Qp::ZERO)
    }

    pub fn upper_unipotent(f: &Field, x: Qp) -> Mat2 {
        Mat2::new(f.one(), x, Qp::ZERO, f.one())
    }

    pub fn lower_unipotent(f: &Field, x: Qp) -> Mat2 {
        Mat2::new(f.one(), Qp::ZERO, x, f.one())
    }

    pub fn scalar(z: Qp) -> Mat2 {
        Mat2::diag(z, z)
    }

    pub fn mul(&self, f: &Field, o: &Mat2) -> Result<Mat2> {
        Ok(Mat2 {
            a: f.add(f.mul(self.a, o.a), f.mul(self.b, o.c))?,
            b: f.add(f.mul(self.a, o.b), f.mul(self.b, o.d))?,
            c: f.add(f.mul(self.c, o.a), f.mul(self.d, o.c))?,
            d: f.add(f.mul(self.c, o.b), f.mul(self.d, o.d))?,
        })
    }

    pub fn det(&self, f: &Field) -> Result<Qp> {
        f.sub(f.mul(self.a, self.d), f.mul(self.b, self.c))
    }

    pub fn inv(&self, f: &Field) -> Result<Mat2> {
        let det = self.det(f)?;
        let di = f.inv(det)?;
        Ok(Mat2 {
            a: f.mul(self.d, di),
            b: f.neg(f.mul(self.b, di)),
            c: f.neg(f.mul(self.c, di)),
            d: f.mul(self.a, di),
        })
    }

    pub fn eq(&self, f: &Field, o: &Mat2) -> bool {
        f.eq(self.a, o.a) && f.eq(self.b, o.b) && f.eq(self.c, o.c) && f.eq(self.d, o.d)
    }

    pub fn is_upper(&self) -> bool {
        self.c.is_zero()
    }

    pub fn entries(&self) -> [Qp; 4] {
        [self.a, self.b, self.c, self.d]
    }

    fn min_val(&self) -> Option<i64> {
        self.entries().iter().filter_map(|x| x.valuation()).min()
    }

    /// Write `g = p^e g0` with g0 integral and primitive; returns `(e, val det g0)`.
    pub fn primitive_split(&self, f: &Field) -> Result<(i64, i64)> {
        let e = self.min_val().ok_or(Error::ZeroInverse)?;
        let dv = self.det(f)?.valuation().ok_or(Error::ZeroInverse)?;
        Ok((e, dv - 2 * e))
    }

    /// Entries reduced modulo p^n (for integral matrices).
    pub fn residues(&self, f: &Field, n: u32) -> Result<[u64; 4]> {
        Ok([f.residue(self.a, n)?, f.residue(self.b, n)?, f.residue(self.c, n)?, f.residue(self.d, n)?])
    }

    /// Canonical Iwasawa decomposition `g = b k` with b upper triangular, k in K.
    ///
    /// If g already lies in K then b = 1. Otherwise the bottom row of k is the
    /// bottom row of g divided by `p^m`, `m` the smaller valuation; its top row is
    /// taken from g when that gives an element of K, else the determinant-one
    /// completion `(0, -1/c')` (c' a unit) or `(1/d', 0)`.
    pub fn iwasawa(&self, f: &Field) -> Result<(Mat2, Mat2)> {
        let m = match (self.c.valuation(), self.d.valuation()) {
            (None, None) => return Err(Error::Precision("bottom row vanishes".into())),
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (Some(x), Some(y)) => x.min(y),
        };
        let scale = f.pi_pow(-m);
        let cb = f.mul(self.c, scale);
        let db = f.mul(self.d, scale);
        let from_g = Mat2::new(self.a, self.b, cb, db);
        let k = if from_g.in_k(f)? {
            from_g
        } else if cb.valuation() == Some(0) {
            Mat2::new(Qp::ZERO, f.neg(f.inv(cb)?), cb, db)
        } else {
            Mat2::new(f.inv(db)?, Qp::ZERO, cb, db)
        };
        let detk = k.det(f)?;
        let b22 = f.pi_pow(m);
        let b11 = f.div(self.det(f)?, f.mul(b22, detk))?;
        let b12 = f.div(f.sub(f.mul(self.b, k.a), f.mul(self.a, k.b))?, detk)?;
        Ok((Mat2::new(b11, b12, Qp::ZERO, b22), k))
    }

    fn in_k(&self, f: &Field) -> Result<bool> {
        if self.entries().iter().any(|x| x.val_or(0) < 0) {
            return Ok(false);
        }
        Ok(self.det(f)?.valuation() == Some(0))
    }

    /// Valuation of the lower-left entry, capped at the precision.
    pub fn shell_depth(&self, f: &Field) -> u32 {
        let n = f.precision() as i64;
        self.c.val_or(n).clamp(0, n) as u32
    }

    pub fn is_member(&self, f: &Field, s: Subgroup) -> Result<bool> {
        let level = match s {
            Subgroup::K => 0,
            Subgroup::Iwahori(n) | Subgroup::Principal(n) | Subgroup::J(n) | Subgroup::I1(n) => n,
        };
        if level > f.precision() {
            return Err(Error::Precision(format!("level {level} beyond precision {}", f.precision())));
        }
        let n = level as i64;
        let deep = |x: Qp, k: i64| x.val_or(i64::MAX) >= k;
        if let Subgroup::J(_) = s {
            return Ok(f.eq(self.a, f.one()) && f.eq(self.d, f.one()) && deep(self.b, 0) && deep(self.c, n));
        }
        if !self.in_k(f)? {
            return Ok(false);
        }
        let minus_one = |x: Qp| f.sub(x, f.one()).map(|y| deep(y, n));
        Ok(match s {
            Subgroup::K => true,
            Subgroup::Iwahori(_) => deep(self.c, n),
            Subgroup::Principal(_) => {
                minus_one(self.a)? && minus_one(self.d)? && deep(self.b, n) && deep(self.c, n)
            }
            Subgroup::I1(_) => minus_one(self.a)? && minus_one(self.d)? && deep(self.c, n),
            Subgroup::J(_) => unreachable!(),
        })
    }
}

/// `|GL2(Z/p^n)|`.
pub fn gl2_order(p: u64, n: u32) -> u128 {
    if n == 0 {
        return 1;
    }
    let p = p as u128;
    (p * p - 1) * (p * p - p) * p.pow(4 * (n - 1))
}

/// `[K : I_n]`.
pub fn iwahori_index(p: u64, n: u32) -> u64 {
    if n == 0 {
        1
    } else {
        p.pow(n - 1) * (p + 1)
    }
}

/// Integer representatives of K / Kprin_n, entries in `[0, p^n)`.
pub fn enumerate_cosets(f: &Field, n: u32, budget: u64) -> Result<Vec<[u64; 4]>> {
    let needed = gl2_order(f.p(), n);
    if needed > budget as u128 {
        return Err(Error::Budget { needed, budget });
    }
    if n == 0 {
        return Ok(vec![[1, 0, 0, 1]]);
    }
    let m = f.pow(n);
    let p = f.p();
    let mut out = Vec::with_capacity(needed as usize);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let det = (a as u128 * d as u128 + (m as u128 * m as u128) - b as u128 * c as u128) % p as u128;
                    if det != 0 {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn int_mat(f: &Field, e: [u64; 4]) -> Mat2 {
    Mat2::new(f.from_residue(e[0]), f.from_residue(e[1]), f.from_residue(e[2]), f.from_residue(e[3]))
}

/// Number of points of P^1(Z/p^s), i.e. of double cosets (B cap K) \ K / Kprin_s.
pub fn p1_size(p: u64, s: u32) -> usize {
    if s == 0 {
        1
    } else {
        (p.pow(s) + p.pow(s - 1)) as usize
    }
}

/// Representative of the `idx`-th point of P^1(Z/p^s): `(0 -1; 1 t)` for
/// `idx = t < p^s`, and `(1 0; p j 1)` for `idx = p^s + j`.
pub fn p1_rep(f: &Field, s: u32, idx: usize) -> Mat2 {
    if s == 0 {
        return Mat2::identity(f);
    }
    let q = f.pow(s) as usize;
    if idx < q {
        Mat2::new(Qp::ZERO, f.from_int(-1), f.one(), f.from_residue(idx as u64))
    } else {
        Mat2::lower_unipotent(f, f.from_residue(((idx - q) as u64) * f.p()))
    }
}

/// Locate k in K: returns `(idx, a', d')` with `k = (a' *; 0 d') p1_rep(idx)`.
pub fn p1_locate(f: &Field, k: &Mat2, s: u32) -> Result<(usize, Qp, Qp)> {
    let det = k.det(f)?;
    if k.c.valuation() == Some(0) {
        let t = f.div(k.d, k.c)?;
        let idx = if s == 0 { 0 } else { f.residue(t, s)? as usize };
        Ok((idx, f.div(det, k.c)?, k.c))
    } else if k.d.valuation() == Some(0) {
        let t = f.div(k.c, k.d)?;
        let idx = if s == 0 { 0 } else { f.pow(s) as usize + (f.residue(t, s)? / f.p()) as usize };
        Ok((idx, f.div(det, k.d)?, k.d))
    } else {
        Err(Error::Precision("matrix not in K".into()))
    }
}

/// Exhaustive check of `K cap B gamma^r I_s gamma^-r = I_{r+s}` at level r+s+1.
///
/// Membership of k in the left side is decided by comparing the point of
/// P^1 given by the bottom row of k with the set of bottom-row points of
/// `gamma^r h gamma^-r`, h ranging over I_s modulo level r+s+1+r.
pub fn support_identity_check(f: &Field, r: u32, s: u32, budget: u64) -> Result<bool> {
    if s == 0 || r + s + 1 > f.precision() {
        return Err(Error::Precision(format!("(r, s) = ({r}, {s}) outside 1 <= s, r+s < N")));
    }
    let level = r + s + 1;
    let p = f.p();
    let q = f.pow(level);
    let mut points = std::collections::HashSet::new();
    for z in (0..f.pow(level - r.min(level))).filter(|z| *z % f.pow(s) == 0) {
        for w in (1..q).filter(|w| w % p != 0) {
            let lower = f.mul(f.pi_pow(r as i64), f.from_residue(z));
            let pt = f.div(lower, f.from_residue(w))?;
            points.insert(f.residue(pt, level)?);
        }
    }
    let reps: Vec<Mat2> = match enumerate_cosets(f, level, budget) {
        Ok(all) => all.into_iter().map(|e| int_mat(f, e)).collect(),
        Err(Error::Budget { .. }) => (0..p1_size(p, level)).map(|i| p1_rep(f, level, i)).collect(),
        Err(e) => return Err(e),
    };
    for k in reps {
        let in_left = if k.d.valuation() == Some(0) {
            points.contains(&f.residue(f.div(k.c, k.d)?, level)?)
        } else {
            false
        };
        if in_left != k.is_member(f, Subgroup::Iwahori(r + s))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `gamma^-r k gamma^r = (a, p^r b; p^-r c, d)`.
pub fn conj_gamma(f: &Field, k: &Mat2, r: i64) -> Result<Mat2> {
    Mat2::gamma(f, -r).mul(f, k)?.mul(f, &Mat2::gamma(f, r))
}

/// Factors of the decomposition of `gamma^-r k gamma^r` for `k in I_{n+r}`, c != 0,
/// with m = val(c) - r: `(det k, p^-m c b; 0, p^-m-r c d) (1 0; p^m 1) diag(d^-1, p^{m+r}/c)`.
pub fn decomposition_factors(f: &Field, k: &Mat2, r: i64) -> Result<[Mat2; 3]> {
    let vc = k.c.valuation().ok_or_else(|| Error::CaseMismatch("c = 0".into()))?;
    let m = vc - r;
    let det = k.det(f)?;
    let b0 = Mat2::new(
        det,
        f.mul(f.mul(f.pi_pow(-m), k.c), k.b),
        Qp::ZERO,
        f.mul(f.mul(f.pi_pow(-m - r), k.c), k.d),
    );
    let mid = Mat2::lower_unipotent(f, f.pi_pow(m));
    let right = Mat2::diag(f.inv(k.d)?, f.div(f.pi_pow(m + r), k.c)?);
    Ok([b0, mid, right])
}

/// Factors of the second decomposition of `gamma^-r k gamma^r` for
/// `k in I_s \ I_{s+1}`, `s <= r`, with C = p^-r c:
/// `(-det/C, a + det/C; 0, C) (1 0; 1 1) (1, 1 + d/C; 0, -1)`.
pub fn decomposition2_factors(f: &Field, k: &Mat2, r: i64) -> Result<[Mat2; 3]> {
    let cc = f.mul(f.pi_pow(-r), k.c);
    let det = k.det(f)?;
    let q = f.div(det, cc)?;
    let left = Mat2::new(f.neg(q), f.add(k.a, q)?, Qp::ZERO, cc);
    let mid = Mat2::ints(f, 1, 0, 1, 1);
    let right = Mat2::new(f.one(), f.add(f.one(), f.div(k.d, cc)?)?, Qp::ZERO, f.from_int(-1));
    Ok([left, mid, right])
}

pub fn product(f: &Field, ms: &[Mat2]) -> Result<Mat2> {
    ms.iter().try_fold(Mat2::identity(f), |acc, m| acc.mul(f, m))
}

/// Coset representatives as JSON-friendly integer rows.
pub fn cosets_json(reps: &[[u64; 4]]) -> Vec<[u64; 4]> {
    reps.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(p: u64, n: u32) -> Field {
        Field::new(p, n).unwrap()
    }

    #[test]
    fn iwasawa_examples() {
        let f = field(3, 6);
        let k = Mat2::ints(&f, 2, 1, 3, 5);
        let (b, kk) = k.iwasawa(&f).unwrap();
        assert!(b.eq(&f, &Mat2::identity(&f)));
        assert!(kk.eq(&f, &k));
        let g = Mat2::atkin_lehner(&f, 1);
        let (b, k) = g.iwasawa(&f).unwrap();
        assert!(b.eq(&f, &Mat2::diag(f.one(), f.pi_pow(1))));
        assert!(k.eq(&f, &Mat2::w_tilde(&f)));
    }

    #[test]
    fn shell_depths() {
        let f = field(2, 5);
        assert_eq!(Mat2::w_tilde(&f).shell_depth(&f), 0);
        assert_eq!(Mat2::ints(&f, 1, 0, 2, 1).shell_depth(&f), 1);
        assert_eq!(Mat2::ints(&f, 1, 1, 0, 1).shell_depth(&f), 5);
    }

    #[test]
    fn membership_examples() {
        let f = field(3, 4);
        let id = Mat2::identity(&f);
        for s in [Subgroup::K, Subgroup::Iwahori(3), Subgroup::Principal(3), Subgroup::J(2), Subgroup::I1(2)] {
            assert!(id.is_member(&f, s).unwrap());
        }
        let l = Mat2::ints(&f, 1, 0, 3, 1);
        assert!(l.is_member(&f, Subgroup::Iwahori(1)).unwrap());
        assert!(!l.is_member(&f, Subgroup::Iwahori(2)).unwrap());
        let t = Mat2::ints(&f, 2, 0, 0, 1);
        assert!(!t.is_member(&f, Subgroup::Principal(1)).unwrap());
        assert!(t.is_member(&f, Subgroup::Iwahori(1)).unwrap());
        assert!(id.is_member(&f, Subgroup::Iwahori(5)).is_err());
    }

    #[test]
    fn coset_counts() {
        // oracle: brute count of invertible matrices over Z/p^n, independently coded
        for (p, n) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let m = p.pow(n) as i64;
            let mut count = 0;
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            if (a * d - b * c).rem_euclid(p as i64) != 0 {
                                count += 1;
                            }
                        }
                    }
                }
            }
            let f = field(p, 4);
            let reps = enumerate_cosets(&f, n, 1_000_000).unwrap();
            assert_eq!(reps.len(), count);
            assert_eq!(reps.len() as u128, gl2_order(p, n));
        }
        assert_eq!(gl2_order(2, 1), 6);
        assert_eq!(gl2_order(3, 1), 48);
        assert_eq!(gl2_order(2, 2), 96);
        let f = field(7, 3);
        assert!(matches!(enumerate_cosets(&f, 3, 1_000_000), Err(Error::Budget { .. })));
    }

    #[test]
    fn iwahori_index_from_counts() {
        for (p, n) in [(2u64, 1u32), (2, 2), (3, 1), (3, 2), (2, 3)] {
            let f = field(p, 4);
            let reps = enumerate_cosets(&f, n, 1_000_000).unwrap();
            let inside = reps.iter().filter(|e| e[2] % p.pow(n) == 0).count();
            assert_eq!(reps.len() / inside, iwahori_index(p, n) as usize);
        }
        assert_eq!(iwahori_index(2, 2), 6);
    }

    #[test]
    fn p1_reps_roundtrip() {
        let f = field(3, 5);
        for s in 0..=3 {
            let size = p1_size(3, s);
            for idx in 0..size {
                let k = p1_rep(&f, s, idx);
                let (j, a, d) = p1_locate(&f, &k, s).unwrap();
                assert_eq!(j, idx);
                assert!(f.eq(a, f.one()) || f.eq(a, f.from_int(-1)) || s == 0);
                assert_eq!(d.valuation(), Some(0));
            }
        }
    }

    #[test]
    fn intersection_identity() {
        for (p, r, s) in [(2u64, 0u32, 1u32), (2, 1, 1), (3, 2, 1), (2, 1, 2), (3, 0, 3)] {
            let f = field(p, 6);
            assert!(support_identity_check(&f, r, s, 1_000_000).unwrap(), "p={p} r={r} s={s}");
        }
    }

    fn kmat(p: u64) -> impl Strategy<Value = [i64; 4]> {
        let m = (p as i64).pow(4);
        [0..m, 0..m, 0..m, 0..m].prop_filter("invertible", move |e| (e[0] * e[3] - e[1] * e[2]).rem_euclid(p as i64) != 0)
    }

    proptest! {
        #[test]
        fn iwasawa_roundtrip(e in kmat(3), r in -3i64..4, s in -2i64..3) {
            let f = field(3, 6);
            let g = Mat2::gamma(&f, r).mul(&f, &Mat2::ints(&f, e[0], e[1], e[2], e[3])).unwrap()
                .mul(&f, &Mat2::gamma(&f, s)).unwrap();
            let (b, k) = g.iwasawa(&f).unwrap();
            prop_assert!(b.is_upper());
            prop_assert!(k.is_member(&f, Subgroup::K).unwrap());
            prop_assert!(b.mul(&f, &k).unwrap().eq(&f, &g));
        }

        #[test]
        fn iwahori_closed_under_products(e in kmat(2), g in kmat(2), n in 0u32..4) {
            let f = field(2, 6);
            let x = Mat2::ints(&f, e[0], e[1], e[2], e[3]);
            let y = Mat2::ints(&f, g[0], g[1], g[2], g[3]);
            let xy = x.mul(&f, &y).unwrap();
            if x.is_member(&f, Subgroup::Iwahori(n)).unwrap() && y.is_member(&f, Subgroup::Iwahori(n)).unwrap() {
                prop_assert!(xy.is_member(&f, Subgroup::Iwahori(n)).unwrap());
            }
            prop_assert!(xy.shell_depth(&f) >= x.shell_depth(&f).min(y.shell_depth(&f)));
        }
    }
}

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::characters::MultChar;
use crate::error::{Error, Result};
use crate::induced_reps::{InducedVector, VectorTag};
use crate::local_field::Field;

/// Value of the kernel integral together with the sum of the absolute values
/// of its pieces, which bounds the cancellation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub scale: f64,
    pub cells: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Cell {
    /// Points `(c : 1)` with `c in pO` rather than `(1 : t)`.
    lower: bool,
    x: u64,
}

impl Cell {
    fn bottom(&self) -> (u64, u64) {
        if self.lower {
            (self.x, 1)
        } else {
            (1, self.x)
        }
    }
}

const PAIRS: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];

struct Integrator<'a> {
    f: &'a Field,
    p: u64,
    /// Integrate over `P^1(O)^3` with the vectors, or over `O^3` with the kernel alone.
    projective: bool,
    kappa: [MultChar; 3],
    vecs: Option<[&'a InducedVector; 3]>,
    levels: [u32; 3],
    j0: Complex64,
    tol: f64,
}

fn pair_of(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        _ => 2,
    }
}

impl Integrator<'_> {
    fn chart(&self) -> f64 {
        if self.projective {
            self.p as f64 / (self.p as f64 + 1.0)
        } else {
            1.0
        }
    }

    fn mass(&self, d: u32) -> f64 {
        self.chart() * (self.p as f64).powi(-(d as i32))
    }

    fn delta(&self, cells: &[Cell; 3], i: usize, j: usize, d: u32) -> u64 {
        let q = self.f.pow(d) as i128;
        let (ci, di) = cells[i].bottom();
        let (cj, dj) = cells[j].bottom();
        ((ci as i128 * dj as i128 - di as i128 * cj as i128).rem_euclid(q)) as u64
    }

    /// Valuation and unit part of a nonzero residue.
    fn split(&self, mut x: u64) -> (u32, u64) {
        let mut v = 0;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        (v, x)
    }

    fn kappa_at(&self, k: usize, delta: u64, d: u32) -> Result<Complex64> {
        let (v, u) = self.split(delta);
        let ch = &self.kappa[k];
        let mut out = ch.at_pi().powi(v as i32);
        if !ch.is_unramified() {
            out *= ch.unit.eval_residue(self.f, u % self.f.pow(d - v), d - v)?;
        }
        Ok(out)
    }

    /// `int_{p^d O} kappa(u) du`.
    fn ball(&self, k: usize, d: u32) -> Result<Complex64> {
        let ch = &self.kappa[k];
        if !ch.is_unramified() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let pf = self.p as f64;
        let r = ch.at_pi() / pf;
        if (1.0 - r).norm() < self.tol {
            return Err(Error::Boundary("kernel exponent on the convergence boundary".into()));
        }
        Ok((1.0 - 1.0 / pf) * r.powi(d as i32) / (1.0 - r))
    }

    fn value_at(&self, i: usize, cell: &Cell) -> Complex64 {
        let Some(vecs) = self.vecs else { return Complex64::new(1.0, 0.0) };
        let s = self.levels[i];
        if s == 0 {
            return vecs[i].values[0];
        }
        let q = self.f.pow(s);
        let idx = if cell.lower { q + (cell.x % q) / self.p } else { cell.x % q };
        vecs[i].values[idx as usize]
    }

    fn resolved_pair(&self, cells: &[Cell; 3], i: usize, k: usize, d: u32) -> bool {
        let delta = self.delta(cells, i, k, d);
        let (v, _) = self.split(delta);
        v + self.kappa[pair_of(i, k)].cond() <= d
    }

    fn run(&self, d: u32, cells: [Cell; 3], acc: &mut (Complex64, f64, usize)) -> Result<()> {
        let smax = *self.levels.iter().max().unwrap();
        let resolved_levels = d >= smax;
        let mut fprod = Complex64::new(1.0, 0.0);
        for i in 0..3 {
            if d >= self.levels[i] {
                let v = self.value_at(i, &cells[i]);
                if v == Complex64::new(0.0, 0.0) {
                    return Ok(());
                }
                fprod *= v;
            }
        }
        let eq = [cells[0] == cells[1], cells[0] == cells[2], cells[1] == cells[2]];
        let n_eq = eq.iter().filter(|x| **x).count();
        if resolved_levels {
            let pf = self.p as f64;
            let piece = if n_eq == 3 {
                let kstar = self.kappa[0].mul(&self.kappa[1]).mul(&self.kappa[2]);
                let mut t = self.chart().powi(3) * pf.powi(-3 * d as i32) * kstar.at_pi().powi(d as i32) * self.j0;
                if cells[0].lower && !kstar.is_unramified() {
                    t *= kstar.eval(self.f, self.f.from_int(-1))?;
                }
                Some(t)
            } else if n_eq == 1 {
                let pi = eq.iter().position(|x| *x).unwrap();
                let (i, j, k) = PAIRS[pi];
                if self.resolved_pair(&cells, i, k, d) && self.resolved_pair(&cells, j, k, d) {
                    let a = self.kappa_at(pair_of(i, k), self.delta(&cells, i.min(k), i.max(k), d), d)?;
                    let b = self.kappa_at(pair_of(j, k), self.delta(&cells, j.min(k), j.max(k), d), d)?;
                    let pair = self.chart().powi(2) * pf.powi(-(d as i32)) * self.ball(pi, d)?;
                    Some(a * b * pair * self.mass(d))
                } else {
                    None
                }
            } else if PAIRS.iter().all(|&(i, j, _)| self.resolved_pair(&cells, i, j, d)) {
                let mut t = Complex64::new(self.mass(d).powi(3), 0.0);
                for (k, &(i, j, _)) in PAIRS.iter().enumerate() {
                    t *= self.kappa_at(k, self.delta(&cells, i, j, d), d)?;
                }
                Some(t)
            } else {
                None
            };
            if let Some(t) = piece {
                let c = fprod * t;
                acc.0 += c;
                acc.1 += c.norm();
                acc.2 += 1;
                return Ok(());
            }
        }
        if d + 1 > self.f.precision() {
            return Err(Error::LevelOverflow { level: d + 1, cap: self.f.precision() });
        }
        let step = self.f.pow(d);
        for a in 0..self.p {
            for b in 0..self.p {
                for c in 0..self.p {
                    let kids = [a, b, c];
                    let mut next = cells;
                    for t in 0..3 {
                        next[t].x += kids[t] * step;
                    }
                    self.run(d + 1, next, acc)?;
                }
            }
        }
        Ok(())
    }

    fn top(&self) -> Result<(Complex64, f64, usize)> {
        let mut first: Vec<Cell> = (0..self.p).map(|x| Cell { lower: false, x }).collect();
        if self.projective {
            first.push(Cell { lower: true, x: 0 });
        }
        let mut triples = vec![];
        for a in &first {
            for b in &first {
                for c in &first {
                    if !self.projective && a == b && b == c {
                        continue;
                    }
                    triples.push([*a, *b, *c]);
                }
            }
        }
        let parts = triples
            .par_iter()
            .map(|cells| {
                let mut acc = (Complex64::new(0.0, 0.0), 0.0, 0);
                self.run(1, *cells, &mut acc).map(|_| acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().fold((Complex64::new(0.0, 0.0), 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2)))
    }
}

/// The invariant form on three induced models realized as
/// `int_{P^1(O)^3} f1 f2 f3 prod_{i<j} kappa_ij(Delta_ij)` where
/// `Delta_ij = c_i d_j - d_i c_j` on bottom rows and
/// `kappa_ij = (mu_k'/mu_k) (mu1' mu2' mu3')^{-1} |.|^{-1/2}`, k the third index.
/// Divergent geometric pieces are summed by analytic continuation.
pub fn kernel_oracle(f: &Field, vecs: [&InducedVector; 3], tol: f64) -> Result<KernelValue> {
    if vecs.iter().any(|v| v.tag == VectorTag::QuotientClass) {
        return Err(Error::Unsupported("kernel integral on a quotient model".into()));
    }
    let p = f.p();
    let chis: Vec<_> = vecs.iter().map(|v| v.chi.clone()).collect();
    let total = chis[0].central().mul(&chis[1].central()).mul(&chis[2].central());
    if !total.approx_eq(&MultChar::trivial(p), 1e-9) {
        return Err(Error::Config("product of central characters is not trivial".into()));
    }
    let xi = chis[0]
        .mu_prime
        .mul(&chis[1].mu_prime)
        .mul(&chis[2].mu_prime)
        .inv()
        .mul(&MultChar::norm_power(p, -0.5));
    let kappa = PAIRS.map(|(_, _, k)| chis[k].mu_prime.mul(&chis[k].mu.inv()).mul(&xi));
    let mut x = Integrator { f, p, projective: false, kappa, vecs: None, levels: [0; 3], j0: Complex64::new(0.0, 0.0), tol };
    let (xs, _, _) = x.top()?;
    let kstar = x.kappa[0].mul(&x.kappa[1]).mul(&x.kappa[2]);
    let denom = 1.0 - kstar.at_pi() / (p as f64).powi(2);
    if denom.norm() < tol {
        return Err(Error::Boundary("triple coincidence term diverges".into()));
    }
    x.j0 = xs / denom;
    x.projective = true;
    x.vecs = Some(vecs);
    x.levels = vecs.map(|v| v.level);
    let (value, scale, cells) = x.top()?;
    Ok(KernelValue { value, scale, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::UnitChar;
    use crate::gl2::Mat2;
    use crate::induced_reps::{new_vector, RepSpec};

    fn unram(p: u64, re: f64, im: f64) -> MultChar {
        MultChar::unramified(p, Complex64::new(re, im))
    }

    #[test]
    fn trivial_kernel_is_volume() {
        let p = 3;
        let f = Field::new(p, 6).unwrap();
        let e = MultChar::trivial(p);
        let s = RepSpec::reducible(e).unwrap();
        let v = new_vector(&f, &s).unwrap();
        let k = kernel_oracle(&f, [&v, &v, &v], 1e-9).unwrap();
        assert!((k.value - 1.0).norm() < 1e-12, "{:?}", k);
    }

    #[test]
    fn invariance_unramified() {
        let p = 3;
        let f = Field::new(p, 8).unwrap();
        let v1 = RepSpec::principal(unram(p, 0.7, 0.2), unram(p, 0.9, 0.3)).unwrap();
        let v2 = RepSpec::principal(unram(p, 1.2, -0.1), unram(p, 0.8, 0.5)).unwrap();
        let w = v1.central().mul(&v2.central()).inv();
        let a = unram(p, 0.6, 0.6);
        let v3 = RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap();
        let vs = [&v1, &v2, &v3].map(|s| new_vector(&f, s).unwrap());
        let base = kernel_oracle(&f, [&vs[0], &vs[1], &vs[2]], 1e-9).unwrap();
        for g in [Mat2::gamma(&f, 1), Mat2::upper_unipotent(&f, f.from_int(1)), Mat2::w_tilde(&f)] {
            let moved = vs.clone().map(|v| v.act(&f, &g).unwrap());
            let k = kernel_oracle(&f, [&moved[0], &moved[1], &moved[2]], 1e-9).unwrap();
            assert!((k.value - base.value).norm() < 1e-9 * base.scale);
        }
    }

    #[test]
    fn invariance_under_group() {
        let p = 3;
        let f = Field::new(p, 8).unwrap();
        let sgn = UnitChar::from_exponents(p, &[1], 1).unwrap();
        let v1 = RepSpec::principal(unram(p, 0.7, 0.2), MultChar::new(Complex64::new(0.9, 0.3), sgn.clone())).unwrap();
        let v2 = RepSpec::principal(MultChar::new(Complex64::new(1.2, -0.1), sgn.clone()), unram(p, 0.8, 0.5)).unwrap();
        let w = v1.central().mul(&v2.central()).inv();
        let a = unram(p, 0.6, 0.6);
        let v3 = RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap();
        let vs = [&v1, &v2, &v3].map(|s| new_vector(&f, s).unwrap());
        let base = kernel_oracle(&f, [&vs[0], &vs[1], &vs[2]], 1e-9).unwrap();
        for g in [
            Mat2::gamma(&f, 1),
            Mat2::upper_unipotent(&f, f.from_int(1)),
            Mat2::lower_unipotent(&f, f.from_int(3)),
            Mat2::w_tilde(&f),
            Mat2::diag(f.from_int(2), f.one()),
        ] {
            let moved = vs.clone().map(|v| v.act(&f, &g).unwrap());
            let k = kernel_oracle(&f, [&moved[0], &moved[1], &moved[2]], 1e-9).unwrap();
            assert!((k.value - base.value).norm() < 1e-9 * base.scale, "{:?} vs {:?}", k, base);
        }
    }
}

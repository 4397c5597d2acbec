use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::characters::{generators, BorelChar, MultChar};
use crate::error::{Error, Result};
use crate::gl2::{p1_size, Mat2};
use crate::induced_reps::{base_level, InducedVector};
use crate::local_field::{Field, Qp};

use super::context::TrilinearContext;

/// `f -> int_F f(w0 n(x)) eta(x) dx` on the induced model of the third
/// representation, `eta = (mu1 mu2' mu3')^{-1} |.|^{-1/2}`. It transforms under
/// the diagonal torus by `(chi1 chi2')^{-1}` with `chi1 chi2'(diag(a, d)) =
/// mu1 mu2'(a) mu1' mu2(d)`.
#[derive(Clone, Debug, Serialize)]
pub struct Phi {
    pub eta: MultChar,
    /// `(mu1 mu2', mu1' mu2)`.
    pub torus: BorelChar,
    pub chi3: BorelChar,
    pub radius: Option<u32>,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhiValue {
    pub value: Complex64,
    /// Sum of absolute values of all contributions.
    pub scale: f64,
    /// Magnitude of the two geometric tails.
    pub tail: f64,
    pub radius: u32,
    pub cells: usize,
}

pub fn build_phi(ctx: &TrilinearContext) -> Result<Phi> {
    let (b1, b2, b3) = (ctx.borel(0), ctx.borel(1), ctx.borel(2));
    let p = ctx.p();
    let eta = b1.mu.mul(&b2.mu_prime).mul(&b3.mu_prime).inv().mul(&MultChar::norm_power(p, -0.5));
    Ok(Phi {
        eta,
        torus: BorelChar::new(b1.mu.mul(&b2.mu_prime), b1.mu_prime.mul(&b2.mu)),
        chi3: b3,
        radius: ctx.settings.radius,
        tol: ctx.settings.tol,
    })
}

fn geometric(r: Complex64, start: u32, tol: f64, what: &str) -> Result<Complex64> {
    if (Complex64::new(1.0, 0.0) - r).norm() < tol {
        return Err(Error::Boundary(format!("{what} tail ratio {r} is 1")));
    }
    Ok(r.powi(start as i32) / (1.0 - r))
}

impl Phi {
    /// `(chi1 chi2')(diag(a, d))^{-1}`: `phi(t.v) = torus_factor(t) phi(v)`.
    pub fn torus_factor(&self, f: &Field, a: Qp, d: Qp) -> Result<Complex64> {
        Ok(self.torus.eval(f, a, d)?.inv())
    }

    pub fn eval(&self, f: &Field, v: &InducedVector) -> Result<PhiValue> {
        if !(v.chi.mu.approx_eq(&self.chi3.mu, 1e-12) && v.chi.mu_prime.approx_eq(&self.chi3.mu_prime, 1e-12)) {
            return Err(Error::ModelMismatch("vector is not in the model of the third representation".into()));
        }
        let p = f.p();
        let pf = p as f64;
        let s = v.level;
        let radius = self.radius.unwrap_or(s + 1).max(s).max(1);
        let ce = self.eta.cond() as i64;
        let mut value = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        let mut cells = 0usize;
        for j in -(radius as i64 - 1)..=(radius as i64 - 1) {
            let m = (s as i64 - j).max(ce).max(1) as u32;
            if m > f.precision() {
                return Err(Error::LevelOverflow { level: m, cap: f.precision() });
            }
            let q = f.pow(m);
            let weight = pf.powi(-(j as i32)) * pf.powi(-(m as i32));
            let parts = (1..q)
                .into_par_iter()
                .filter(|u| u % p != 0)
                .map(|u| -> Result<(Complex64, f64)> {
                    let x = f.mul(f.pi_pow(j), f.from_residue(u));
                    let g = Mat2::new(Qp::ZERO, f.one(), f.one(), x);
                    let fv = v.evaluate(f, &g)?;
                    if fv == Complex64::new(0.0, 0.0) {
                        return Ok((fv, 0.0));
                    }
                    let c = fv * self.eta.eval(f, x)? * weight;
                    Ok((c, c.norm()))
                })
                .collect::<Result<Vec<_>>>()?;
            cells += parts.len();
            for (c, a) in parts {
                value += c;
                scale += a;
            }
        }
        let shell = 1.0 - 1.0 / pf;
        let mut tail = 0.0;
        if self.eta.is_unramified() {
            let r0 = self.eta.at_pi() / pf;
            let fw0 = v.evaluate(f, &Mat2::w_tilde(f))?;
            let t = fw0 * shell * geometric(r0, radius, self.tol, "small |x|")?;
            value += t;
            tail += t.norm();
        }
        let chi_inf = self.chi3.mu_prime.mul(&self.chi3.mu.inv()).mul(&self.eta);
        if chi_inf.is_unramified() {
            let r = chi_inf.at_pi().inv();
            let f1 = v.evaluate(f, &Mat2::identity(f))?;
            let t = f1 * self.chi3.mu.eval(f, f.from_int(-1))? * shell * geometric(r, radius, self.tol, "large |x|")?;
            value += t;
            tail += t.norm();
        }
        Ok(PhiValue { value, scale: scale + tail, tail, radius, cells })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearOracle {
    pub level: u32,
    pub unknowns: usize,
    pub equations: usize,
    pub nullity: usize,
    /// `value(test_k) / value(test_0)` from the solved functional.
    pub ratios: Vec<Complex64>,
}

/// Solves for a functional on level-`level + 1` vectors from the torus
/// equivariance alone, independently of the integral formula.
pub fn linear_oracle(f: &Field, phi: &Phi, level: u32, tests: &[InducedVector], budget: u64) -> Result<LinearOracle> {
    let top = level + 1;
    let chi = &phi.chi3;
    if level < base_level(chi) {
        return Err(Error::Representation("level below the model's conductor".into()));
    }
    let dim = p1_size(f.p(), top);
    if (dim as u64).pow(2) > budget {
        return Err(Error::Budget { needed: (dim as u128).pow(2), budget });
    }
    let mut rows: Vec<Vec<Complex64>> = vec![];
    let units: Vec<Qp> = if f.p() == 2 {
        vec![f.from_int(-1), f.from_int(5)]
    } else {
        vec![f.from_int(generators(f.p())[0] as i64)]
    };
    for u in &units {
        for t in [Mat2::diag(*u, f.one()), Mat2::diag(f.one(), *u)] {
            let m = crate::induced_reps::action_matrix(f, chi, top, &t)?;
            let c = phi.torus_factor(f, t.a, t.d)?;
            for col in 0..dim {
                let mut row: Vec<Complex64> = (0..dim).map(|r| m[(r, col)]).collect();
                row[col] -= c;
                rows.push(row);
            }
        }
    }
    let shifts = [
        Mat2::gamma(f, 1),
        Mat2::gamma(f, -1),
        Mat2::diag(f.one(), f.pi_pow(1)),
        Mat2::diag(f.one(), f.pi_pow(-1)),
    ];
    let low = p1_size(f.p(), level);
    for t in &shifts {
        let c = phi.torus_factor(f, t.a, t.d)?;
        for i in 0..low {
            let mut e = InducedVector::zero(chi, level);
            e.values[i] = Complex64::new(1.0, 0.0);
            let moved = e.act(f, t)?.relevel(f, top)?;
            let base = e.relevel(f, top)?;
            rows.push(moved.values.iter().zip(&base.values).map(|(x, y)| x - c * y).collect());
        }
    }
    let a = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
    let svd = a.clone().svd(false, true);
    let sv = &svd.singular_values;
    let top_sv = sv.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let nullity = sv.iter().filter(|x| **x < 1e-9 * top_sv).count() + dim.saturating_sub(sv.len());
    let k = (0..sv.len()).min_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap()).unwrap();
    let vt = svd.v_t.unwrap();
    let lambda: Vec<Complex64> = (0..dim).map(|c| vt[(k, c)].conj()).collect();
    let apply = |v: &InducedVector| -> Result<Complex64> {
        let w = v.relevel(f, top)?;
        Ok(w.values.iter().zip(&lambda).map(|(x, l)| x * l).sum())
    };
    let vals = tests.iter().map(apply).collect::<Result<Vec<_>>>()?;
    let ratios = vals.iter().map(|v| v / vals[0]).collect();
    Ok(LinearOracle { level, unknowns: dim, equations: rows.len(), nullity, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::UnitChar;
    use crate::induced_reps::{new_vector, RepSpec};
    use crate::trilinear::context::Settings;

    fn unram(p: u64, re: f64, im: f64) -> MultChar {
        MultChar::unramified(p, Complex64::new(re, im))
    }

    pub(crate) fn ctx_p3() -> (Field, TrilinearContext) {
        let p = 3;
        let f = Field::new(p, 8).unwrap();
        let sgn = UnitChar::from_exponents(p, &[1], 1).unwrap();
        let a = unram(p, 0.7, 0.4);
        let b = unram(p, 1.1, -0.3);
        let v1 = RepSpec::principal(a.clone(), a.inv().mul(&unram(p, 0.9, 0.2))).unwrap();
        let v2 = RepSpec::principal(b.clone(), b.inv().mul(&unram(p, 1.3, 0.1))).unwrap();
        let w = v1.central().mul(&v2.central()).inv();
        let x = MultChar::new(Complex64::new(0.8, 0.5), sgn.clone());
        let v3 = RepSpec::principal(x.clone(), w.mul(&x.inv())).unwrap();
        (f, TrilinearContext::new([v1, v2, v3], Settings::default()).unwrap())
    }

    #[test]
    fn torus_equivariance() {
        let (f, ctx) = ctx_p3();
        let phi = build_phi(&ctx).unwrap();
        let v = new_vector(&f, &ctx.specs[2]).unwrap();
        let base = phi.eval(&f, &v).unwrap().value;
        assert!(base.norm() > 1e-6);
        for (a, d) in [(1i64, 0i64), (0, 1), (-1, 0), (2, 1)] {
            let t = Mat2::diag(f.mul(f.pi_pow(a), f.from_int(2)), f.pi_pow(d));
            let moved = phi.eval(&f, &v.act(&f, &t).unwrap()).unwrap().value;
            let want = phi.torus_factor(&f, t.a, t.d).unwrap() * base;
            assert!((moved - want).norm() < 1e-9 * base.norm().max(1.0), "{a} {d}: {moved} vs {want}");
        }
    }

    #[test]
    fn radius_independent() {
        let (f, ctx) = ctx_p3();
        let mut phi = build_phi(&ctx).unwrap();
        let v = new_vector(&f, &ctx.specs[2]).unwrap().act(&f, &Mat2::gamma(&f, 1)).unwrap();
        let a = phi.eval(&f, &v).unwrap().value;
        phi.radius = Some(5);
        let b = phi.eval(&f, &v).unwrap().value;
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn linear_oracle_agrees() {
        let (f, ctx) = ctx_p3();
        let phi = build_phi(&ctx).unwrap();
        let v = new_vector(&f, &ctx.specs[2]).unwrap();
        let tests = vec![
            v.clone(),
            v.act(&f, &Mat2::upper_unipotent(&f, f.from_int(1))).unwrap().relevel(&f, 2).unwrap(),
            v.act(&f, &Mat2::lower_unipotent(&f, f.from_int(1))).unwrap().relevel(&f, 2).unwrap(),
        ];
        let o = linear_oracle(&f, &phi, 2, &tests, 1 << 24).unwrap();
        assert_eq!(o.nullity, 1);
        let v0 = phi.eval(&f, &tests[0]).unwrap().value;
        for (t, r) in tests.iter().zip(&o.ratios) {
            let want = phi.eval(&f, t).unwrap().value / v0;
            assert!((want - r).norm() < 1e-8, "{want} vs {r}");
        }
    }
}

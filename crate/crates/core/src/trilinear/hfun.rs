use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::gl2::{enumerate_cosets, gl2_order, int_mat, p1_rep, Mat2, Subgroup};
use crate::induced_reps::{new_vector, special_vector, InducedVector, SpecialBasis};
use crate::local_field::{Field, Qp};

use super::context::{Role, TrilinearContext};

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `(1 - beta/alpha)^{-1}` for spherical members, 1 otherwise.
pub fn lambda_i(ctx: &TrilinearContext, i: usize) -> Complex64 {
    match ctx.roles[i] {
        Role::Unramified => (one() - ctx.beta(i) / ctx.alpha(i)).inv(),
        _ => one(),
    }
}

/// The constant with `H = Lambda v1* (x) v2*`.
pub fn big_lambda(f: &Field, ctx: &TrilinearContext) -> Result<Complex64> {
    let mu2_minus_one = ctx.borel(1).mu.eval(f, f.from_int(-1))?;
    let shift = ctx.conductors[0] as i32 - ctx.n as i32;
    Ok(lambda_i(ctx, 0) * lambda_i(ctx, 1) * mu2_minus_one * ctx.alpha(0).powi(shift))
}

/// Haar mass given to `J_n`: the proportion of level-n cosets of K it meets.
pub fn vol_j(p: u64, n: u32) -> f64 {
    (p as f64).powi(n as i32) / gl2_order(p, n) as f64
}

/// `v1*` and `v2*` as functions in the induced models.
pub fn v_star(f: &Field, ctx: &TrilinearContext) -> Result<(InducedVector, InducedVector)> {
    let n = ctx.n as i64;
    let g = |r: i64| Mat2::gamma(f, r);
    let v1 = match ctx.roles[0] {
        Role::Unramified => {
            let v = new_vector(f, &ctx.specs[0])?;
            v.act(f, &g(n))?.add_scaled(f, -ctx.beta(0), &v.act(f, &g(n - 1))?)?
        }
        Role::Special => special_vector(f, &ctx.specs[0], SpecialBasis::VI)?.act(f, &g(n - 1))?,
        Role::Ramified => new_vector(f, &ctx.specs[0])?.act(f, &g(n - ctx.conductors[0] as i64))?,
    };
    let v2 = match ctx.roles[1] {
        Role::Unramified => {
            let v = new_vector(f, &ctx.specs[1])?;
            v.add_scaled(f, -ctx.alpha(1).inv(), &v.act(f, &g(1))?)?
        }
        Role::Special => special_vector(f, &ctx.specs[1], SpecialBasis::VKminusI)?,
        Role::Ramified => new_vector(f, &ctx.specs[1])?,
    };
    Ok((v1, v2))
}

fn negligible(f: &Field, x: Qp) -> bool {
    x.val_or(i64::MAX) >= f.precision() as i64
}

/// `H(k1, k2)` for `k1, k2 in K` from its defining properties: supported on
/// `B x B . {(k0, w0 k0) : k0 in J_n}` with `H(k0, w0 k0) = 1`.
pub fn h_value(f: &Field, ctx: &TrilinearContext, k1: &Mat2, k2: &Mat2) -> Result<Complex64> {
    let n = ctx.n as i64;
    if k1.d.val_or(i64::MAX) != 0 || k2.c.val_or(i64::MAX) != 0 {
        return Ok(zero());
    }
    let c0 = f.div(k1.c, k1.d)?;
    if c0.val_or(i64::MAX) < n {
        return Ok(zero());
    }
    let b0 = f.div(k2.d, k2.c)?;
    let k0 = Mat2::new(f.one(), b0, c0, f.one());
    let k0i = k0.inv(f)?;
    let b1 = k1.mul(f, &k0i)?;
    let b2 = k2.mul(f, &k0i)?.mul(f, &Mat2::w_tilde(f))?;
    if !negligible(f, b1.c) || !negligible(f, b2.c) {
        return Err(crate::Error::Precision("decomposition through J_n lost precision".into()));
    }
    Ok(ctx.borel(0).eval_normalized(f, b1.a, b1.d)? * ctx.borel(1).eval_normalized(f, b2.a, b2.d)?)
}

/// `H` on arbitrary pairs through the Iwasawa decomposition.
pub fn h_general(f: &Field, ctx: &TrilinearContext, g1: &Mat2, g2: &Mat2) -> Result<Complex64> {
    let (b1, k1) = g1.iwasawa(f)?;
    let (b2, k2) = g2.iwasawa(f)?;
    let h = h_value(f, ctx, &k1, &k2)?;
    if h == zero() {
        return Ok(h);
    }
    Ok(h * ctx.borel(0).eval_normalized(f, b1.a, b1.d)? * ctx.borel(1).eval_normalized(f, b2.a, b2.d)?)
}

/// Support-and-value description: `omega1(d1) omega2(-det k2 / c2)` on `I_n x (K \ I)`.
pub fn h_closed_form(f: &Field, ctx: &TrilinearContext, k1: &Mat2, k2: &Mat2) -> Result<Complex64> {
    if !k1.is_member(f, Subgroup::Iwahori(ctx.n))? || k2.is_member(f, Subgroup::Iwahori(1))? {
        return Ok(zero());
    }
    let w2 = ctx.central(1).eval(f, f.neg(f.div(k2.det(f)?, k2.c)?))?;
    Ok(ctx.central(0).eval(f, k1.d)? * w2)
}

#[derive(Clone, Debug, Serialize)]
pub struct Lambda12Report {
    /// "cosets" (all pairs of level-n cosets of K) or "p1" (pairs of P^1 representatives).
    pub mode: String,
    pub pairs: usize,
    pub support_pairs: usize,
    pub lambda: [f64; 2],
    /// `max |H - Lambda v1* (x) v2*|`.
    pub max_dev: f64,
    /// `max |H - closed form|`.
    pub closed_form_dev: f64,
    /// `max |H(g, g)|` over samples.
    pub diagonal_max: f64,
    /// `max |H(g, w0 g) - h(g)|` over samples `g in T J_n`.
    pub w0_dev: f64,
    pub vol_j: f64,
    pub pass: bool,
}

pub fn verify_lambda12(f: &Field, ctx: &TrilinearContext) -> Result<Lambda12Report> {
    let n = ctx.n;
    let lam = big_lambda(f, ctx)?;
    let (v1, v2) = v_star(f, ctx)?;
    let reps: Vec<Mat2>;
    let mode;
    let budget = ctx.settings.budget;
    if gl2_order(f.p(), n).pow(2) <= budget as u128 {
        reps = enumerate_cosets(f, n, budget)?.into_iter().map(|e| int_mat(f, e)).collect();
        mode = "cosets";
    } else {
        reps = (0..crate::gl2::p1_size(f.p(), n)).map(|i| p1_rep(f, n, i)).collect();
        mode = "p1";
    }
    use rayon::prelude::*;
    let rows = reps
        .par_iter()
        .map(|k1| -> Result<(f64, f64, usize)> {
            let a1 = v1.eval_k(f, k1)?;
            let mut dev: f64 = 0.0;
            let mut cdev: f64 = 0.0;
            let mut support = 0;
            for k2 in &reps {
                let h = h_value(f, ctx, k1, k2)?;
                if h != zero() {
                    support += 1;
                }
                dev = dev.max((h - lam * a1 * v2.eval_k(f, k2)?).norm());
                cdev = cdev.max((h - h_closed_form(f, ctx, k1, k2)?).norm());
            }
            Ok((dev, cdev, support))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_dev = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let closed_form_dev = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let support_pairs = rows.iter().map(|r| r.2).sum();

    let mut diagonal_max: f64 = 0.0;
    let mut w0_dev: f64 = 0.0;
    let w0 = Mat2::w_tilde(f);
    for (i, (a, d)) in [(0i64, 0i64), (1, 0), (0, 1), (-1, 2), (2, -1)].into_iter().enumerate() {
        let t = Mat2::diag(f.mul(f.pi_pow(a), f.from_int(1 + i as i64 * f.p() as i64 + 1)), f.mul(f.pi_pow(d), f.from_int(-1)));
        for (b, c) in [(0i64, 0i64), (1, 1), (2, 3), (-1, 2)] {
            let k0 = Mat2::new(f.one(), f.from_int(b), f.mul(f.pi_pow(n as i64), f.from_int(c)), f.one());
            let g = t.mul(f, &k0)?;
            diagonal_max = diagonal_max.max(h_general(f, ctx, &g, &g)?.norm());
            let h = h_general(f, ctx, &g, &w0.mul(f, &g)?)?;
            let want = ctx.borel(0).mu.mul(&ctx.borel(1).mu_prime).eval(f, t.a)?
                * ctx.borel(0).mu_prime.mul(&ctx.borel(1).mu).eval(f, t.d)?;
            w0_dev = w0_dev.max((h - want).norm());
        }
    }
    let tol = 1e-9;
    let pass = max_dev < tol && closed_form_dev < tol && diagonal_max < tol && w0_dev < tol;
    Ok(Lambda12Report {
        mode: mode.into(),
        pairs: reps.len() * reps.len(),
        support_pairs,
        lambda: [lam.re, lam.im],
        max_dev,
        closed_form_dev,
        diagonal_max,
        w0_dev,
        vol_j: vol_j(f.p(), n),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{MultChar, UnitChar};
    use crate::induced_reps::RepSpec;
    use crate::trilinear::context::Settings;

    fn unram(p: u64, re: f64, im: f64) -> MultChar {
        MultChar::unramified(p, Complex64::new(re, im))
    }

    fn check(p: u64, specs: [RepSpec; 3]) -> Lambda12Report {
        let f = Field::new(p, 8).unwrap();
        let ctx = TrilinearContext::new(specs, Settings::default()).unwrap();
        let r = verify_lambda12(&f, &ctx).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.support_pairs > 0);
        r
    }

    fn third(p: u64, a: &RepSpec, b: &RepSpec, eta: MultChar) -> RepSpec {
        let w = a.central().mul(&b.central()).inv();
        let e2 = eta.pow(2);
        let rest = w.mul(&e2.inv());
        if rest.is_norm_power(0.0, 1e-12) {
            RepSpec::special_quotient(eta)
        } else {
            RepSpec::principal(eta.clone(), w.mul(&eta.inv())).unwrap_or_else(|_| RepSpec::special_quotient(eta.mul(&unram(p, 1.0, 0.0))))
        }
    }

    #[test]
    fn unramified_pair_at_two() {
        let p = 2;
        let v1 = RepSpec::principal(unram(p, 0.6, 0.2), unram(p, 1.2, -0.4)).unwrap();
        let v2 = RepSpec::principal(unram(p, 0.9, 0.3), unram(p, 0.5, 0.5)).unwrap();
        let w = v1.central().mul(&v2.central()).inv();
        let eta = MultChar::unramified(p, w.at_pi().sqrt());
        let v3 = RepSpec::special_quotient(eta);
        let r = check(p, [v1, v2, v3]);
        assert_eq!(r.mode, "cosets");
    }

    #[test]
    fn special_and_ramified() {
        let p = 3;
        let sgn = UnitChar::from_exponents(p, &[1], 1).unwrap();
        let st = RepSpec::special_quotient(unram(p, 0.8, 0.6));
        let un = RepSpec::principal(unram(p, 0.6, 0.2), unram(p, 1.2, -0.4)).unwrap();
        let ram1 = RepSpec::principal(MultChar::new(Complex64::new(0.7, 0.1), sgn.clone()), unram(p, 1.1, 0.2)).unwrap();
        check(p, [st.clone(), un.clone(), third(p, &st, &un, MultChar::new(one(), sgn.clone()))]);
        check(p, [un.clone(), ram1.clone(), third(p, &un, &ram1, MultChar::new(one(), sgn.clone()))]);
        check(p, [ram1.clone(), st.clone(), third(p, &ram1, &st, MultChar::new(one(), sgn.clone()))]);
    }
}

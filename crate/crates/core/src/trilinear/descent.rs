use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gl2::Mat2;
use crate::induced_reps::{eigenspace_dim, new_vector, special_project, EigenSide, InducedVector, RepKind};
use crate::local_field::Field;

use super::context::{Role, TrilinearContext};
use super::hfun::{big_lambda, vol_j};
use super::phi::{build_phi, PhiValue};

/// `gamma^a v1 (x) gamma^b v2 (x) gamma^c v3`, the `v_i` new vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Tensor {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Tensor {
    pub fn new(a: i64, b: i64, c: i64) -> Tensor {
        Tensor { a, b, c }
    }

    /// Representative under the diagonal action of `gamma`.
    pub fn normalized(self) -> Tensor {
        let m = self.a.min(self.b);
        Tensor { a: self.a - m, b: self.b - m, c: self.c - m }
    }

    pub fn label(&self) -> String {
        let part = |e: i64, i: u8| match e {
            0 => format!("v{i}"),
            1 => format!("g v{i}"),
            _ => format!("g^{e} v{i}"),
        };
        format!("{} (x) {} (x) {}", part(self.a, 1), part(self.b, 2), part(self.c, 3))
    }
}

/// The functional `l(gamma^a v1 (x) gamma^b v2 (x) .)` lies in the
/// `omega3^{-1}(d)`-eigenspace of `I_level` in the dual of V3.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub tensor: Tensor,
    pub level: u32,
    pub eigenspace_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equation {
    pub origin: String,
    pub terms: Vec<(Tensor, Complex64)>,
    pub rhs: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub tensor: Tensor,
    pub label: String,
    pub value: Complex64,
    pub forced_zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ledger {
    /// `psi(v1* (x) v2* (x) gamma^i v3)`.
    pub psi: Vec<Complex64>,
    pub phi: Vec<PhiValue>,
    pub lambda: Complex64,
    pub vol_j: f64,
    /// Magnitude below which a value counts as cancellation noise is
    /// `tol * scale`.
    pub scale: f64,
    pub equations: Vec<Equation>,
    pub certificates: Vec<Certificate>,
    pub identities: Vec<IdentityCheck>,
    pub entries: Vec<Entry>,
    pub unknowns: usize,
    pub rank: usize,
    pub residual: f64,
}

impl Ledger {
    pub fn certificate(&self, t: Tensor) -> Option<&Certificate> {
        let t = t.normalized();
        self.certificates.iter().find(|c| c.tensor == t)
    }
}

/// `x` with `w x = eps x` up to the reported residual, after projecting to
/// the representation when the model is a quotient.
fn eigen_ratio(f: &Field, ctx: &TrilinearContext, v: &InducedVector, wv: &InducedVector) -> Result<(Complex64, f64)> {
    let spec = &ctx.specs[2];
    let wv = match spec.kind {
        RepKind::SpecialQuotient { .. } => special_project(f, spec, wv)?
            .into_vector()
            .ok_or_else(|| Error::ModelMismatch("quotient projection".into()))?,
        _ => wv.clone(),
    };
    let level = v.level.max(wv.level);
    let (a, b) = (v.relevel(f, level)?, wv.relevel(f, level)?);
    let num: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    let den: f64 = a.values.iter().map(|x| x.norm_sqr()).sum();
    let eps = num / den;
    Ok((eps, b.distance(f, &a.scale(eps))?))
}

pub fn build_ledger(f: &Field, ctx: &TrilinearContext) -> Result<Ledger> {
    let n = ctx.n as i64;
    if n == 0 {
        return Err(Error::CaseMismatch("the construction of H needs a ramified member".into()));
    }
    let [n1, n2, n3] = ctx.conductors.map(|x| x as i64);
    let phi = build_phi(ctx)?;
    let lambda = big_lambda(f, ctx)?;
    let vj = vol_j(f.p(), ctx.n);
    let v3 = new_vector(f, &ctx.specs[2])?;
    let mut psi = vec![];
    let mut phis = vec![];
    for i in 0..=(n - n3) {
        let pv = phi.eval(f, &v3.act(f, &Mat2::gamma(f, i))?)?;
        psi.push(pv.value * vj / lambda);
        phis.push(pv);
    }
    let scale = phis.iter().map(|p| p.scale).fold(0.0, f64::max) * vj / lambda.norm();

    let one = Complex64::new(1.0, 0.0);
    let e1: Vec<(i64, Complex64)> = match ctx.roles[0] {
        Role::Unramified => vec![(n, one), (n - 1, -ctx.beta(0))],
        _ => vec![(n - n1, one)],
    };
    let e2: Vec<(i64, Complex64)> = match ctx.roles[1] {
        Role::Unramified => vec![(0, one), (1, -ctx.alpha(1).inv())],
        _ => vec![(0, one)],
    };
    let mut equations = vec![];
    for (i, value) in psi.iter().enumerate() {
        let mut terms: BTreeMap<Tensor, Complex64> = BTreeMap::new();
        for (a, x) in &e1 {
            for (b, y) in &e2 {
                *terms.entry(Tensor::new(*a, *b, i as i64).normalized()).or_default() += x * y;
            }
        }
        equations.push(Equation {
            origin: format!("psi(v1* (x) v2* (x) g^{i} v3)"),
            terms: terms.into_iter().collect(),
            rhs: *value,
        });
    }

    let mut identities = vec![];
    if ctx.roles == [Role::Unramified, Role::Unramified] && n == 1 && n3 == 1 {
        let w = Mat2::atkin_lehner(f, 1);
        let g = Mat2::gamma(f, 1);
        let v1 = new_vector(f, &ctx.specs[0])?;
        let v2 = new_vector(f, &ctx.specs[1])?;
        let w1 = ctx.central(0).at_pi();
        identities.push(IdentityCheck {
            name: "w v1 = omega1(p) g v1".into(),
            residual: v1.act(f, &w)?.distance(f, &v1.act(f, &g)?.scale(w1))?,
        });
        identities.push(IdentityCheck {
            name: "w g v2 = v2".into(),
            residual: v2.act(f, &w.mul(f, &g)?)?.distance(f, &v2)?,
        });
        let (eps, res) = eigen_ratio(f, ctx, &v3, &v3.act(f, &w)?)?;
        identities.push(IdentityCheck { name: format!("w v3 = ({:.6}{:+.6}i) v3", eps.re, eps.im), residual: res });
        equations.push(Equation {
            origin: "invariance under w".into(),
            terms: vec![(Tensor::new(0, 1, 0), one), (Tensor::new(1, 0, 0), -w1 * eps)],
            rhs: Complex64::new(0.0, 0.0),
        });
    }

    let dual3 = ctx.specs[2].contragredient()?;
    let omega = ctx.central(2).inv();
    let mut dims: BTreeMap<u32, usize> = BTreeMap::new();
    let tensors: BTreeSet<Tensor> = equations.iter().flat_map(|e| e.terms.iter().map(|t| t.0)).collect();
    let mut certificates = vec![];
    for t in &tensors {
        let level = (n1 + t.a).max(n2 + t.b) as u32;
        let dim = match dims.get(&level) {
            Some(d) => *d,
            None => {
                let d = eigenspace_dim(f, &dual3, level, &omega, EigenSide::D, ctx.settings.budget)?;
                dims.insert(level, d);
                d
            }
        };
        certificates.push(Certificate { tensor: *t, level, eigenspace_dim: dim });
    }
    let zero_set: BTreeSet<Tensor> = certificates.iter().filter(|c| c.eigenspace_dim == 0).map(|c| c.tensor).collect();
    let unknowns: Vec<Tensor> = tensors.iter().filter(|t| !zero_set.contains(t)).cloned().collect();
    let index: BTreeMap<Tensor, usize> = unknowns.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut entries: Vec<Entry> = zero_set
        .iter()
        .map(|t| Entry { tensor: *t, label: t.label(), value: Complex64::new(0.0, 0.0), forced_zero: true })
        .collect();
    let (mut rank, mut residual) = (0, 0.0);
    if !unknowns.is_empty() {
        let a = DMatrix::from_fn(equations.len(), unknowns.len(), |r, c| {
            equations[r].terms.iter().filter(|(t, _)| index.get(t) == Some(&c)).map(|(_, x)| *x).sum()
        });
        let b = DVector::from_fn(equations.len(), |r, _| equations[r].rhs);
        let svd = a.clone().svd(true, true);
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * top.max(1e-300)).count();
        if rank == unknowns.len() {
            let x = svd.solve(&b, 1e-12 * top).map_err(|e| Error::Underdetermined(e.to_string()))?;
            residual = (&a * &x - &b).norm();
            for (t, v) in unknowns.iter().zip(x.iter()) {
                entries.push(Entry { tensor: *t, label: t.label(), value: *v, forced_zero: false });
            }
        }
    }
    Ok(Ledger {
        psi,
        phi: phis,
        lambda,
        vol_j: vj,
        scale,
        equations,
        certificates,
        identities,
        entries,
        unknowns: unknowns.len(),
        rank,
        residual,
    })
}

/// Value of `l` on a tensor the ledger determines.
pub fn descent_solve(ledger: &Ledger, target: Tensor) -> Result<Complex64> {
    let t = target.normalized();
    ledger
        .entries
        .iter()
        .find(|e| e.tensor == t)
        .map(|e| e.value)
        .ok_or_else(|| Error::Underdetermined(format!("{} is not determined by the ledger", target.label())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{MultChar, UnitChar};
    use crate::induced_reps::RepSpec;
    use crate::trilinear::context::Settings;
    use crate::trilinear::hfun::v_star;
    use crate::trilinear::kernel::kernel_oracle;

    fn unram(p: u64, re: f64, im: f64) -> MultChar {
        MultChar::unramified(p, Complex64::new(re, im))
    }

    fn kernel_of(f: &Field, ctx: &TrilinearContext, t: Tensor) -> Complex64 {
        let vs: Vec<InducedVector> = (0..3)
            .map(|i| {
                let e = [t.a, t.b, t.c][i];
                new_vector(f, &ctx.specs[i]).unwrap().act(f, &Mat2::gamma(f, e)).unwrap()
            })
            .collect();
        kernel_oracle(f, [&vs[0], &vs[1], &vs[2]], 1e-9).unwrap().value
    }

    #[test]
    fn unramified_pair_matches_kernel() {
        let p = 3;
        let f = Field::new(p, 8).unwrap();
        let sgn = UnitChar::from_exponents(p, &[1], 1).unwrap();
        let v1 = RepSpec::principal(unram(p, 0.7, 0.2), unram(p, 0.9, 0.3)).unwrap();
        let v2 = RepSpec::principal(unram(p, 1.2, -0.1), unram(p, 0.8, 0.5)).unwrap();
        let w = v1.central().mul(&v2.central()).inv();
        let x = MultChar::new(Complex64::new(0.6, 0.6), sgn);
        let v3 = RepSpec::principal(x.clone(), w.mul(&x.inv())).unwrap();
        let ctx = TrilinearContext::new([v1, v2, v3], Settings::default()).unwrap();
        let ledger = build_ledger(&f, &ctx).unwrap();
        let target = descent_solve(&ledger, Tensor::new(2, 0, 0)).unwrap();
        assert!((target - ledger.psi[0]).norm() < 1e-12);
        assert!(ledger.certificate(Tensor::new(1, 0, 0)).unwrap().eigenspace_dim == 0);

        let (s1, s2) = v_star(&f, &ctx).unwrap();
        let v3v = new_vector(&f, &ctx.specs[2]).unwrap();
        let kstar = kernel_oracle(&f, [&s1, &s2, &v3v], 1e-9).unwrap().value;
        let k200 = kernel_of(&f, &ctx, Tensor::new(2, 0, 0));
        let k000 = kernel_of(&f, &ctx, Tensor::new(0, 0, 0));
        assert!((k200 / kstar - 1.0).norm() < 1e-9, "{k200} {kstar}");
        assert!(k000.norm() < 1e-9 * k200.norm());
    }

    #[test]
    fn equal_first_conductors_match_kernel() {
        let p = 3;
        let f = Field::new(p, 8).unwrap();
        let sgn = UnitChar::from_exponents(p, &[1], 1).unwrap();
        let r = |x: f64, y: f64| MultChar::new(Complex64::new(x, y), sgn.clone());
        let v1 = RepSpec::principal(unram(p, 0.7, 0.2), r(0.9, 0.3)).unwrap();
        let v2 = RepSpec::principal(r(1.2, -0.1), unram(p, 0.8, 0.5)).unwrap();
        let w = v1.central().mul(&v2.central()).inv();
        let a = unram(p, 0.6, 0.6);
        let v3 = RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap();
        let ctx = TrilinearContext::new([v1, v2, v3], Settings::default()).unwrap();
        let ledger = build_ledger(&f, &ctx).unwrap();
        let e0 = descent_solve(&ledger, Tensor::new(0, 0, 0)).unwrap();
        let e1 = descent_solve(&ledger, Tensor::new(0, 0, 1)).unwrap();
        let k0 = kernel_of(&f, &ctx, Tensor::new(0, 0, 0));
        let k1 = kernel_of(&f, &ctx, Tensor::new(0, 0, 1));
        assert!((e1 / e0 - k1 / k0).norm() < 1e-9, "{} {}", e1 / e0, k1 / k0);
    }
}

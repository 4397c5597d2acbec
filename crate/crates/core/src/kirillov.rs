//! Kirillov-model fragment: finitely supported functions on F^x, the Borel
//! action, the pairing `Phi(v', v'') = int v'(x) v''(x) |x|^-1 d^x x`, and
//! supercuspidal stubs carrying only their new-vector data.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::characters::MultChar;
use crate::error::{Error, Result};
use crate::gl2::{enumerate_cosets, gl2_order, int_mat, iwahori_index, Mat2, Subgroup};
use crate::induced_reps::{new_vector, EigenSide, RepKind, RepSpec};
use crate::local_field::Field;

/// Additive character a Kirillov model is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AddChar {
    Psi,
    PsiBar,
}

impl AddChar {
    fn eval(self, f: &Field, x: crate::Qp) -> Result<Complex64> {
        let v = f.additive_char(x)?;
        Ok(match self {
            AddChar::Psi => v,
            AddChar::PsiBar => v.conj(),
        })
    }
}

/// Function on F^x constant on the cells `p^a (u + p^depth O)`, u a unit mod `p^depth`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KirillovVector {
    pub depth: u32,
    pub cells: BTreeMap<(i64, u64), Complex64>,
    pub convention: AddChar,
}

fn units(p: u64, depth: u32) -> Vec<u64> {
    if depth == 0 {
        vec![0]
    } else {
        (1..p.pow(depth)).filter(|u| u % p != 0).collect()
    }
}

fn cell_mass(p: u64, depth: u32) -> f64 {
    if depth == 0 {
        1.0
    } else {
        1.0 / ((p - 1) * p.pow(depth - 1)) as f64
    }
}

impl KirillovVector {
    pub fn zero(convention: AddChar) -> KirillovVector {
        KirillovVector { depth: 0, cells: BTreeMap::new(), convention }
    }

    /// Characteristic function of `O^x`.
    pub fn unit_indicator(convention: AddChar) -> KirillovVector {
        let mut cells = BTreeMap::new();
        cells.insert((0, 0), Complex64::new(1.0, 0.0));
        KirillovVector { depth: 0, cells, convention }
    }

    /// Value at a nonzero x.
    pub fn value(&self, f: &Field, x: crate::Qp) -> Result<Complex64> {
        let a = x.valuation().ok_or(Error::ZeroArgument)?;
        let u = if self.depth == 0 { 0 } else { f.unit_residue(x, self.depth)? };
        Ok(self.cells.get(&(a, u)).copied().unwrap_or_default())
    }

    pub fn refine(&self, p: u64, depth: u32) -> KirillovVector {
        if depth <= self.depth {
            return self.clone();
        }
        let mut cells = BTreeMap::new();
        for (&(a, u), &v) in &self.cells {
            for w in units(p, depth) {
                if self.depth == 0 || w % p.pow(self.depth) == u {
                    cells.insert((a, w), v);
                }
            }
        }
        KirillovVector { depth, cells, convention: self.convention }
    }

    /// `self + c o`, same additive character only.
    pub fn add_scaled(&self, p: u64, c: Complex64, o: &KirillovVector) -> Result<KirillovVector> {
        if self.convention != o.convention {
            return Err(Error::ModelMismatch("Kirillov vectors for psi and psi-bar cannot be combined".into()));
        }
        let depth = self.depth.max(o.depth);
        let mut out = self.refine(p, depth);
        for (key, v) in o.refine(p, depth).cells {
            *out.cells.entry(key).or_default() += c * v;
        }
        out.cells.retain(|_, v| v.norm() > 0.0);
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> KirillovVector {
        KirillovVector { cells: self.cells.iter().map(|(k, v)| (*k, v * c)).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.cells.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `(a b; 0 d) . f (x) = omega(d) psi(b x / d) f(a x / d)`.
pub fn borel_act(f: &Field, b: &Mat2, v: &KirillovVector, omega: &MultChar) -> Result<KirillovVector> {
    if !b.is_upper() || b.a.is_zero() || b.d.is_zero() {
        return Err(Error::Unsupported("Kirillov action is only known on the Borel subgroup".into()));
    }
    let p = f.p();
    let r = f.div(b.a, b.d)?;
    let s = r.valuation().unwrap();
    let y = f.div(b.b, b.d)?;
    let mut depth = v.depth;
    for &(a1, _) in v.cells.keys() {
        if let Some(vy) = y.valuation() {
            depth = depth.max((-(vy + a1 - s)).max(0) as u32);
        }
    }
    if depth > f.precision() {
        return Err(Error::LevelOverflow { level: depth, cap: f.precision() });
    }
    let w = omega.eval(f, b.d)?;
    let rho = if v.depth == 0 { 0 } else { f.unit_residue(r, v.depth)? };
    let modulus = p.pow(v.depth);
    let vals: std::collections::BTreeSet<i64> = v.cells.keys().map(|k| k.0).collect();
    let mut cells = BTreeMap::new();
    for a1 in vals {
        let a0 = a1 - s;
        for u in units(p, depth) {
            let src = if v.depth == 0 { 0 } else { (u % modulus) * rho % modulus };
            let Some(val) = v.cells.get(&(a1, src)) else { continue };
            let x = f.mul(f.pi_pow(a0), f.from_residue(u.max(1)));
            let phase = v.convention.eval(f, f.mul(y, x))?;
            let out = w * phase * val;
            if out.norm() > 0.0 {
                cells.insert((a0, u), out);
            }
        }
    }
    Ok(KirillovVector { depth, cells, convention: v.convention })
}

/// `Phi(f, g) = int f(x) g(x) |x|^-1 d^x x` with `vol(O^x) = 1`; f relative to psi, g to psi-bar.
pub fn pairing_phi(p: u64, v: &KirillovVector, w: &KirillovVector) -> Result<Complex64> {
    if v.convention == w.convention {
        return Err(Error::ModelMismatch("Phi pairs a psi-model with a psi-bar-model".into()));
    }
    let depth = v.depth.max(w.depth);
    let (v, w) = (v.refine(p, depth), w.refine(p, depth));
    let mass = cell_mass(p, depth);
    let mut total = Complex64::new(0.0, 0.0);
    for (key, x) in &v.cells {
        if let Some(y) = w.cells.get(key) {
            total += x * y * (p as f64).powi(key.0 as i32) * mass;
        }
    }
    Ok(total)
}

/// Line spanned by a stub vector that is not a Kirillov function we can write down.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenLine {
    pub level: u32,
    pub side: EigenSide,
    pub character: MultChar,
}

/// Supercuspidal representation known through conductor, central character and new vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupercuspidalStub {
    pub n: u32,
    pub omega: MultChar,
    pub convention: AddChar,
}

impl SupercuspidalStub {
    pub fn from_spec(spec: &RepSpec, convention: AddChar) -> Result<SupercuspidalStub> {
        match &spec.kind {
            RepKind::Stub { n, omega, .. } => Ok(SupercuspidalStub { n: *n, omega: omega.clone(), convention }),
            _ => Err(Error::ModelMismatch("not a supercuspidal stub".into())),
        }
    }

    pub fn conductor(&self) -> u32 {
        self.n
    }

    pub fn central(&self) -> &MultChar {
        &self.omega
    }

    pub fn new_vector(&self) -> KirillovVector {
        KirillovVector::unit_indicator(self.convention)
    }

    /// `k . new = omega(d) new` for k in I_n; other elements of K are not modelled.
    pub fn act_on_new(&self, f: &Field, k: &Mat2) -> Result<KirillovVector> {
        if k.is_upper() {
            return borel_act(f, k, &self.new_vector(), &self.omega);
        }
        if !k.is_member(f, Subgroup::Iwahori(self.n))? {
            return Err(Error::Unsupported("translate of a stub new vector outside I_n".into()));
        }
        Ok(self.new_vector().scale(self.omega.eval(f, k.d)?))
    }

    /// `(0 1; p^n 0) . new` spans the line where I_n acts by `omega(a)`.
    pub fn atkin_lehner_image(&self) -> EigenLine {
        EigenLine { level: self.n, side: EigenSide::A, character: self.omega.clone() }
    }

    pub fn act(&self, f: &Field, g: &Mat2, v: &KirillovVector) -> Result<KirillovVector> {
        if g.is_upper() {
            borel_act(f, g, v, &self.omega)
        } else {
            Err(Error::Unsupported("stubs carry no action beyond the Borel subgroup".into()))
        }
    }
}

/// Result of [`ell_equal_conductor`].
#[derive(Clone, Debug, Serialize)]
pub struct EqualConductor {
    pub value: Complex64,
    pub closed_form: Complex64,
    pub volume_enumerated: f64,
    pub volume_closed: f64,
    pub cosets: usize,
    pub support_cosets: usize,
}

/// `l(gamma^{n3-n1} v1 (x) v2 (x) v3)` as `int_K v(k) Phi(k v2, k v3) dk` for
/// two stubs of equal conductor n3 and V1 = Ind(mu, mu') with mu unramified.
pub fn ell_equal_conductor(
    f: &Field,
    v1: &RepSpec,
    v2: &SupercuspidalStub,
    v3: &SupercuspidalStub,
    budget: u64,
) -> Result<EqualConductor> {
    let RepKind::Principal { mu, mu_prime } = &v1.kind else {
        return Err(Error::CaseMismatch("V1 must be a principal series".into()));
    };
    if !mu.is_unramified() || mu_prime.is_unramified() {
        return Err(Error::CaseMismatch("V1 needs mu unramified and mu' ramified".into()));
    }
    let (n1, n3) = (v1.conductor(), v3.n);
    if v2.n != n3 {
        return Err(Error::CaseMismatch(format!("conductors {} and {n3} differ", v2.n)));
    }
    if n1 >= n3 {
        return Err(Error::CaseMismatch(format!("n1 = {n1} >= n3 = {n3}")));
    }
    if v2.convention == v3.convention {
        return Err(Error::ModelMismatch("V2 and V3 need opposite additive characters".into()));
    }
    let product = v1.central().mul(&v2.omega).mul(&v3.omega);
    if !product.approx_eq(&MultChar::trivial(f.p()), 1e-9) {
        return Err(Error::Config("central characters do not multiply to 1".into()));
    }
    let r = n3 - n1;
    let v = new_vector(f, v1)?.act(f, &Mat2::gamma(f, r as i64))?;
    let base = pairing_phi(f.p(), &v2.new_vector(), &v3.new_vector())?;
    let reps = enumerate_cosets(f, n3, budget)?;
    let total = gl2_order(f.p(), n3) as f64;
    let scale = v.max_abs().max(1.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut support = 0usize;
    let mut in_iwahori = 0usize;
    for e in &reps {
        let k = int_mat(f, *e);
        let inside = k.is_member(f, Subgroup::Iwahori(n3))?;
        in_iwahori += usize::from(inside);
        let x = v.eval_k(f, &k)?;
        if x.norm() <= 1e-12 * scale {
            continue;
        }
        let a = v2.act_on_new(f, &k)?;
        let b = v3.act_on_new(f, &k)?;
        let phi = pairing_phi(f.p(), &a, &b)?;
        debug_assert!((phi - base * v2.omega.mul(&v3.omega).eval(f, k.d)?).norm() < 1e-9);
        sum += x * phi;
        support += 1;
    }
    let alpha = v1.borel().unwrap().alpha();
    let volume_closed = 1.0 / iwahori_index(f.p(), n3) as f64;
    Ok(EqualConductor {
        value: sum / total,
        closed_form: alpha.powi(r as i32) * volume_closed,
        volume_enumerated: in_iwahori as f64 / total,
        volume_closed,
        cosets: reps.len(),
        support_cosets: support,
    })
}

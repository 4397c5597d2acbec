#![allow(dead_code)]

use num_complex::Complex64;
use testvec::{Field, MultChar, RepSpec, UnitChar};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn unram(p: u64, z: Complex64) -> MultChar {
    MultChar::unramified(p, z)
}

pub fn ram(p: u64, k: i64, m: u32, z: Complex64) -> MultChar {
    MultChar::new(z, UnitChar::from_exponents(p, &[k], m).unwrap())
}

pub fn field(p: u64) -> Field {
    Field::new(p, 10).unwrap()
}

/// Unramified principal series with Satake-type data `(a, b)`.
pub fn unramified(p: u64, a: Complex64, b: Complex64) -> RepSpec {
    RepSpec::principal(unram(p, a), unram(p, b)).unwrap()
}

/// Remaining unramified central value making the triple's product trivial.
pub fn completing(p: u64, specs: &[&RepSpec]) -> MultChar {
    specs.iter().fold(MultChar::trivial(p), |acc, s| acc.mul(&s.central())).inv()
}

/// Unramified character with `eta^2 = w` on the uniformizer.
pub fn sqrt_unram(p: u64, w: &MultChar) -> MultChar {
    assert!(w.is_unramified());
    unram(p, w.at_pi().sqrt())
}

/// Two unramified members and a third of the requested kind.
pub fn vt00n(p: u64, third: &str) -> [RepSpec; 3] {
    let v1 = unramified(p, c(0.7, 0.2), c(0.9, 0.3));
    let v2 = unramified(p, c(1.2, -0.1), c(0.8, 0.5));
    let w = completing(p, &[&v1, &v2]);
    let v3 = match third {
        "special" => RepSpec::special_quotient(sqrt_unram(p, &w)),
        "cond2" => {
            let x = ram(p, 1, 1, c(0.6, 0.6));
            RepSpec::principal(x.clone(), w.mul(&x.inv())).unwrap()
        }
        _ => panic!("unknown third member"),
    };
    [v1, v2, v3]
}

/// p = 5: V1 unramified, V2 = Ind(chi^2, 1) with chi of order 4, V3 = chi (x) St.
pub fn case_a_p5() -> [RepSpec; 3] {
    let p = 5;
    let v1 = unramified(p, c(0.7, 0.2), c(0.9, 0.3));
    let v2 = RepSpec::principal(ram(p, 2, 1, c(1.1, 0.2)), unram(p, c(0.8, -0.4))).unwrap();
    let w = completing(p, &[&v1, &v2]);
    let chi = ram(p, 1, 1, c(1.0, 0.0));
    let rest = w.mul(&chi.pow(2).inv());
    let v3 = RepSpec::special_quotient(chi.mul(&sqrt_unram(p, &rest)));
    [v1, v2, v3]
}

/// p = 3: ramified principal series of conductor 1 on both sides, V3 unramified.
pub fn case_b_p3() -> [RepSpec; 3] {
    let p = 3;
    let v1 = RepSpec::principal(unram(p, c(0.7, 0.2)), ram(p, 1, 1, c(0.9, 0.3))).unwrap();
    let v2 = RepSpec::principal(ram(p, 1, 1, c(1.2, -0.1)), unram(p, c(0.8, 0.5))).unwrap();
    let w = completing(p, &[&v1, &v2]);
    let a = unram(p, c(0.6, 0.6));
    let v3 = RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap();
    [v1, v2, v3]
}

/// p = 3: two unramified twists of Steinberg, V3 unramified.
pub fn case_b_special() -> [RepSpec; 3] {
    let p = 3;
    let v1 = RepSpec::special_quotient(unram(p, c(0.8, 0.6)));
    let v2 = RepSpec::special_quotient(unram(p, c(-0.6, 0.8)));
    let w = completing(p, &[&v1, &v2]);
    let a = unram(p, c(0.6, 0.6));
    let v3 = RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap();
    [v1, v2, v3]
}

/// p = 5: conductor-2 character on both sides, V3 unramified.
pub fn case_b_p5() -> [RepSpec; 3] {
    let p = 5;
    let rho = ram(p, 1, 2, c(0.9, 0.3));
    let v1 = RepSpec::principal(unram(p, c(0.7, 0.2)), rho.clone()).unwrap();
    let v2 = RepSpec::principal(ram(p, -1, 2, c(1.2, -0.1)), unram(p, c(0.8, 0.5))).unwrap();
    let w = completing(p, &[&v1, &v2]);
    let a = unram(p, c(0.6, 0.6));
    let v3 = RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap();
    [v1, v2, v3]
}

/// Three reducible spherical inductions with `eta1 eta2 eta3 = sign`.
pub fn reducible_i(p: u64, sign: f64) -> [RepSpec; 3] {
    let e1 = unram(p, Complex64::from_polar(1.0, 0.4));
    let e2 = unram(p, Complex64::from_polar(1.0, 1.3));
    let e3 = e1.mul(&e2).inv().mul(&unram(p, c(sign, 0.0)));
    [e1, e2, e3].map(|e| RepSpec::reducible(e).unwrap())
}

/// Two reducible spherical inductions and an irreducible V3 of conductor 0 or 1.
pub fn reducible_ii(p: u64, n3: u32) -> [RepSpec; 3] {
    let e1 = unram(p, Complex64::from_polar(1.0, 0.4));
    let e2 = unram(p, Complex64::from_polar(1.0, 1.3));
    let v1 = RepSpec::reducible(e1.clone()).unwrap();
    let v2 = RepSpec::reducible(e2.clone()).unwrap();
    let w = completing(p, &[&v1, &v2]);
    let v3 = if n3 == 0 {
        let a = unram(p, c(0.6, 0.6));
        RepSpec::principal(a.clone(), w.mul(&a.inv())).unwrap()
    } else {
        RepSpec::special_quotient(sqrt_unram(p, &w))
    };
    [v1, v2, v3]
}

/// p = 5: V1 reducible, V2 = Ind(chi^2, 1), V3 = Ind(chi x, chi y) of conductor 2.
pub fn reducible_iii_a() -> [RepSpec; 3] {
    let p = 5;
    let v1 = RepSpec::reducible(unram(p, Complex64::from_polar(1.0, 0.4))).unwrap();
    let v2 = RepSpec::principal(ram(p, 2, 1, c(1.1, 0.2)), unram(p, c(0.8, -0.4))).unwrap();
    let w = completing(p, &[&v1, &v2]);
    let x = ram(p, 1, 1, c(0.6, 0.6));
    let y = w.mul(&x.inv());
    [v1, v2, RepSpec::principal(x, y).unwrap()]
}

/// p = 3: V1 = Ind(1, sgn), stubs of conductor 2 for V2, V3.
pub fn equal_conductor() -> [RepSpec; 3] {
    let p = 3;
    let v1 = RepSpec::principal(unram(p, c(0.8, 0.3)), ram(p, 1, 1, c(1.1, -0.2))).unwrap();
    let w1 = v1.central();
    let v2 = RepSpec::stub(2, MultChar::trivial(p), "sigma2").unwrap();
    let v3 = RepSpec::stub(2, w1.inv(), "sigma3").unwrap();
    [v1, v2, v3]
}

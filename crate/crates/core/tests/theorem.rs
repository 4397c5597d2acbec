mod common;

use common::*;
use testvec::trilinear::{verify_theorem, CaseId, Settings};

fn run(case: CaseId, p: u64, specs: [testvec::RepSpec; 3]) {
    let f = field(p);
    let r = verify_theorem(&f, case, specs, Settings::default()).unwrap();
    assert!(r.pass, "{}", serde_json_free(&r));
}

fn serde_json_free(r: &testvec::trilinear::TheoremReport) -> String {
    format!("{:?} {:?} {:?} {:?}", r.nonzero, r.zeros, r.vanishing, r.lambda12.iter().map(|l| l.pass).collect::<Vec<_>>())
}

#[test]
fn two_unramified_and_conductor_two() {
    run(CaseId::Vt00n, 3, vt00n(3, "cond2"));
}

#[test]
fn two_unramified_and_steinberg() {
    run(CaseId::Vt00n, 2, vt00n(2, "special"));
    run(CaseId::Vt00n, 3, vt00n(3, "special"));
}

#[test]
fn third_conductor_largest() {
    run(CaseId::Vt01scA, 5, case_a_p5());
    run(CaseId::Vt01scA, 3, vt00n(3, "cond2"));
}

#[test]
fn equal_first_conductors() {
    run(CaseId::Vt01scB, 3, case_b_p3());
    run(CaseId::Vt01scB, 3, case_b_special());
    run(CaseId::Vt01scB, 5, case_b_p5());
}

#[test]
fn supercuspidal_pair() {
    run(CaseId::EqualConductor, 3, equal_conductor());
}

#[test]
fn reducible_members() {
    run(CaseId::ReducibleI, 3, reducible_i(3, 1.0));
    run(CaseId::ReducibleI, 3, reducible_i(3, -1.0));
    run(CaseId::ReducibleII, 3, reducible_ii(3, 0));
    run(CaseId::ReducibleII, 3, reducible_ii(3, 1));
    run(CaseId::ReducibleIIIa, 5, reducible_iii_a());
}

#[test]
fn form_values_route_by_membership() {
    use testvec::trilinear::{evaluate_form, Tensor};
    use testvec::Error;
    let f = field(3);
    let s = Settings::default();
    let v = evaluate_form(&f, case_b_p3(), Tensor::new(0, 0, 0), s.clone()).unwrap();
    assert!(!v.zero && v.via == "descent");
    let v = evaluate_form(&f, vt00n(3, "cond2"), Tensor::new(-1, 0, 0), s.clone()).unwrap();
    assert!(v.zero && v.certificate.is_some());
    let v = evaluate_form(&f, equal_conductor(), Tensor::new(1, 0, 0), s.clone()).unwrap();
    assert!(!v.zero && v.equal_conductor.is_some());
    assert!(matches!(evaluate_form(&f, equal_conductor(), Tensor::new(0, 0, 0), s.clone()), Err(Error::Unsupported(_))));
    let stub = || testvec::RepSpec::stub(2, testvec::MultChar::trivial(3), "s").unwrap();
    assert!(matches!(evaluate_form(&f, [stub(), stub(), stub()], Tensor::new(0, 0, 0), s.clone()), Err(Error::Unsupported(_))));
}

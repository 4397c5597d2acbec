use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use testvec::gl2::{int_mat, Mat2, Subgroup};
use testvec::induced_reps::new_vector;
use testvec::tree::{act, covering_ok, standard_path, theorem_configuration, to_dot, OrientedPath};
use testvec::trilinear::{build_phi, evaluate_form, verify_theorem, CaseId, Tensor, TrilinearContext};
use testvec::verify::{lemma_family, lemma_suite, structural_checks};
use testvec::{Error, Field};

use crate::config::{RunConfig, TreeConfig};

pub struct Outcome {
    pub result: Value,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct SpotCheck {
    pub name: String,
    pub seed: u64,
    pub samples: usize,
    pub max_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn random_k(f: &Field, rng: &mut ChaCha8Rng, level: u32) -> Mat2 {
    let q = f.pow(level);
    loop {
        let e = [0; 4].map(|_| rng.gen_range(0..q));
        if (e[0] as i128 * e[3] as i128 - e[1] as i128 * e[2] as i128).rem_euclid(f.p() as i128) != 0 {
            return int_mat(f, e);
        }
    }
}

fn random_unit(f: &Field, rng: &mut ChaCha8Rng) -> u64 {
    loop {
        let u = rng.gen_range(1..f.pow(2));
        if u % f.p() != 0 {
            return u;
        }
    }
}

/// `g = b k` with b upper triangular and k in K, for random g.
fn iwasawa_spot_check(f: &Field, cfg: &RunConfig) -> Result<SpotCheck, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bad = 0usize;
    for _ in 0..cfg.samples {
        let k = random_k(f, &mut rng, 2);
        let b = Mat2::new(
            f.mul(f.pi_pow(rng.gen_range(-2..=2)), f.from_residue(random_unit(f, &mut rng))),
            f.mul(f.pi_pow(rng.gen_range(-1..=1)), f.from_int(rng.gen_range(0..9))),
            f.zero(),
            f.mul(f.pi_pow(rng.gen_range(-2..=2)), f.from_residue(random_unit(f, &mut rng))),
        );
        let g = b.mul(f, &k)?;
        let (b2, k2) = g.iwasawa(f)?;
        let ok = b2.is_upper() && k2.is_member(f, Subgroup::K)? && b2.mul(f, &k2)?.eq(f, &g);
        bad += usize::from(!ok);
    }
    Ok(SpotCheck {
        name: "Iwasawa decomposition multiplies back".into(),
        seed: cfg.seed,
        samples: cfg.samples,
        max_dev: bad as f64,
        tol: 0.0,
        pass: bad == 0,
    })
}

/// `phi(t v) = (chi1 chi2')(t)^-1 phi(v)` on random vectors of V3 and torus elements.
fn phi_spot_check(f: &Field, cfg: &RunConfig, ctx: &TrilinearContext) -> Result<SpotCheck, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phi = build_phi(ctx)?;
    let nv = new_vector(f, &ctx.specs[2])?;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let mut v = nv.act(f, &random_k(f, &mut rng, 2))?;
        let g = Mat2::gamma(f, rng.gen_range(0..=1)).mul(f, &random_k(f, &mut rng, 2))?;
        v = v.add_scaled(f, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), &nv.act(f, &g)?)?;
        let t = Mat2::diag(
            f.mul(f.pi_pow(rng.gen_range(-1..=1)), f.from_residue(random_unit(f, &mut rng))),
            f.mul(f.pi_pow(rng.gen_range(-1..=1)), f.from_residue(random_unit(f, &mut rng))),
        );
        let base = phi.eval(f, &v)?;
        let moved = phi.eval(f, &v.act(f, &t)?)?;
        let factor = phi.torus_factor(f, t.a, t.d)?;
        let scale = moved.scale.max(factor.norm() * base.scale);
        worst = worst.max((moved.value - factor * base.value).norm() / scale);
    }
    Ok(SpotCheck {
        name: "torus equivariance of phi".into(),
        seed: cfg.seed,
        samples: cfg.samples,
        max_dev: worst,
        tol: cfg.tol,
        pass: worst <= cfg.tol,
    })
}

pub fn verify_lemmas(cfg: &RunConfig) -> Result<Outcome, Error> {
    let f = cfg.field()?;
    let structure = structural_checks(&f, cfg.lemmas.structure_level, cfg.budget)?;
    let mut family = lemma_family(cfg.p)?;
    for (i, s) in cfg.rep_specs()?.into_iter().enumerate() {
        if !s.is_stub() {
            family.push((format!("config V{}", i + 1), s));
        }
    }
    let suite = lemma_suite(&f, &family, cfg.lemmas.r_max, cfg.budget, cfg.tol, cfg.alpha_perturbation)?;
    let spot = iwasawa_spot_check(&f, cfg)?;
    let lemmas: Vec<Value> = suite
        .by_lemma()
        .into_iter()
        .map(|(lemma, pass, worst)| json!({ "lemma": lemma, "pass": pass, "worst_rel_dev": worst }))
        .collect();
    let pass = suite.pass && structure.pass && spot.pass;
    Ok(Outcome {
        result: json!({
            "lemmas": lemmas,
            "suite": to_value(&suite),
            "structure": to_value(&structure),
            "spot_checks": [to_value(&spot)],
        }),
        pass,
    })
}

pub fn parse_tensor(desc: &str) -> Result<Tensor, Error> {
    let parts: Vec<i64> = desc
        .split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Config(format!("tensor {desc:?}: {e}")))?;
    match parts[..] {
        [a, b, c] => Ok(Tensor::new(a, b, c)),
        _ => Err(Error::Config(format!("tensor {desc:?}: expected three exponents a,b,c"))),
    }
}

pub fn eval_form(cfg: &RunConfig, tensor: &str) -> Result<Outcome, Error> {
    let f = cfg.field()?;
    let t = parse_tensor(tensor)?;
    let v = evaluate_form(&f, cfg.triple()?, t, cfg.settings())?;
    Ok(Outcome { result: to_value(&v), pass: true })
}

pub fn verify_case(cfg: &RunConfig, case: &str) -> Result<Outcome, Error> {
    let f = cfg.field()?;
    let case: CaseId = case.parse()?;
    let specs = cfg.triple()?;
    let report = verify_theorem(&f, case, specs.clone(), cfg.settings())?;
    let mut spots = vec![];
    if matches!(case, CaseId::Vt00n | CaseId::Vt01scA | CaseId::Vt01scB | CaseId::ReducibleIIIa) {
        let ctx = TrilinearContext::new(specs, cfg.settings())?;
        spots.push(phi_spot_check(&f, cfg, &ctx)?);
    }
    let pass = report.pass && spots.iter().all(|s| s.pass);
    Ok(Outcome { result: json!({ "theorem": to_value(&report), "spot_checks": to_value(&spots) }), pass })
}

fn tree_paths(f: &Field, tree: &TreeConfig) -> Result<Vec<OrientedPath>, Error> {
    let cap = f.precision() as i64;
    match tree {
        TreeConfig::Conductors { conductors: [n1, n2, n3] } => {
            if *n1.max(n2).max(n3) as i64 > cap {
                return Err(Error::Config(format!("conductors {:?} exceed precision {cap}", [n1, n2, n3])));
            }
            Ok(theorem_configuration(f, *n1, *n2, *n3)?.to_vec())
        }
        TreeConfig::Paths { paths } => paths
            .iter()
            .map(|pc| {
                if pc.length as i64 + pc.shift.abs() > cap {
                    return Err(Error::Config(format!(
                        "path of length {} shifted by {} exceeds precision {cap}",
                        pc.length, pc.shift
                    )));
                }
                let path = act(f, &Mat2::gamma(f, pc.shift), &standard_path(pc.length))?;
                if pc.reversed {
                    OrientedPath::new(f, path.vertices.clone(), !path.forward)
                } else {
                    Ok(path)
                }
            })
            .collect(),
    }
}

pub fn tree(cfg: &RunConfig, out: &Path) -> Result<Outcome, Error> {
    let f = cfg.field()?;
    let tree = cfg.tree.as_ref().ok_or_else(|| Error::Config("tree command needs a \"tree\" section".into()))?;
    let paths = tree_paths(&f, tree)?;
    let covering = match &paths[..] {
        [a, b, c] => Some(covering_ok([a, b, c])),
        _ => None,
    };
    let comment = match &covering {
        Some(c) => format!("// covering_ok = {}: {}\n", c.ok, c.diagnostic),
        None => format!("// covering_ok = n/a: {} path(s), three needed\n", paths.len()),
    };
    let dot = comment + &to_dot(cfg.p, &paths);
    std::fs::write(out, &dot).map_err(|e| Error::Config(format!("cannot write {}: {e}", out.display())))?;
    Ok(Outcome {
        result: json!({
            "dot": out.display().to_string(),
            "paths": to_value(&paths),
            "covering": covering.as_ref().map(to_value),
        }),
        pass: true,
    })
}

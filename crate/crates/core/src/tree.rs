//! The Bruhat-Tits tree of PGL2(Q_p): lattice classes, oriented paths and the
//! covering condition for triples of Iwahori subgroups.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gl2::Mat2;
use crate::local_field::Field;

/// Class of the lattice spanned by the columns of `(p^n, b; 0, 1)`, with
/// `b = num / p^e` reduced modulo `p^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Vertex {
    pub n: i64,
    pub num: u64,
    pub e: u32,
}

impl Vertex {
    /// The vertex fixed by K.
    pub const BASE: Vertex = Vertex { n: 0, num: 0, e: 0 };

    pub fn matrix(&self, f: &Field) -> Mat2 {
        let b = f.mul(f.from_residue(self.num), f.pi_pow(-(self.e as i64)));
        Mat2::new(f.pi_pow(self.n), b, f.zero(), f.one())
    }

    /// Hermite form of the class of the lattice spanned by the columns of `m`.
    pub fn canonical(f: &Field, m: &Mat2) -> Result<Vertex> {
        let (c, d) = (m.c, m.d);
        let (a, b, c, d) = match (c.valuation(), d.valuation()) {
            (_, None) if c.is_zero() => return Err(Error::Precision("singular lattice basis".into())),
            (Some(vc), Some(vd)) if vc < vd => (m.b, m.a, d, c),
            (Some(_), None) => (m.b, m.a, d, c),
            _ => (m.a, m.b, c, d),
        };
        let a = if c.is_zero() { a } else { f.sub(a, f.mul(b, f.div(c, d)?))? };
        let x = f.div(a, d)?;
        let y = f.div(b, d)?;
        let n = x.valuation().ok_or_else(|| Error::Precision("lattice basis degenerated".into()))?;
        let Some(v) = y.valuation().filter(|v| *v < n) else {
            return Ok(Vertex { n, num: 0, e: 0 });
        };
        let mut e = (-v).max(0) as u32;
        let mut num = f.residue(f.mul(y, f.pi_pow(e as i64)), (n + e as i64) as u32)?;
        while e > 0 && num % f.p() == 0 {
            num /= f.p();
            e -= 1;
        }
        Ok(Vertex { n, num, e })
    }

    pub fn act(&self, f: &Field, g: &Mat2) -> Result<Vertex> {
        Vertex::canonical(f, &g.mul(f, &self.matrix(f))?)
    }

    pub fn distance(&self, f: &Field, o: &Vertex) -> Result<u32> {
        let g = self.matrix(f).inv(f)?.mul(f, &o.matrix(f))?;
        Ok(g.primitive_split(f)?.1 as u32)
    }

    pub fn label(&self, p: u64) -> String {
        if self.num == 0 {
            format!("({p}^{}, 0)", self.n)
        } else if self.e == 0 {
            format!("({p}^{}, {})", self.n, self.num)
        } else {
            format!("({p}^{}, {}/{p}^{})", self.n, self.num, self.e)
        }
    }

    fn node_id(&self) -> String {
        let n = if self.n < 0 { format!("m{}", -self.n) } else { self.n.to_string() };
        format!("v_{n}_{}_{}", self.num, self.e)
    }
}

/// Backtrack-free path; `forward` selects the character `d mod p^n` for the
/// order in which the vertices are listed, `a mod p^n` otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrientedPath {
    pub vertices: Vec<Vertex>,
    pub forward: bool,
}

impl OrientedPath {
    pub fn new(f: &Field, vertices: Vec<Vertex>, forward: bool) -> Result<OrientedPath> {
        if vertices.is_empty() {
            return Err(Error::Config("a path has at least one vertex".into()));
        }
        for w in vertices.windows(2) {
            if w[0].distance(f, &w[1])? != 1 {
                return Err(Error::Config(format!("{:?} and {:?} are not adjacent", w[0], w[1])));
            }
        }
        for w in vertices.windows(3) {
            if w[0].distance(f, &w[2])? != 2 {
                return Err(Error::Config("path backtracks".into()));
            }
        }
        Ok(OrientedPath { vertices, forward })
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.vertices.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect()
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.vertices[0], *self.vertices.last().unwrap())
    }

    /// Equality as oriented paths: reversing the vertex list and the flag together is the same path.
    pub fn same(&self, o: &OrientedPath) -> bool {
        if self.vertices == o.vertices && self.forward == o.forward {
            return true;
        }
        let rev: Vec<Vertex> = o.vertices.iter().rev().copied().collect();
        self.vertices == rev && self.forward != o.forward
    }
}

/// The path from K to `gamma^n K gamma^-n`, oriented by `d mod p^n`.
pub fn standard_path(n: u32) -> OrientedPath {
    let vertices = (0..=n as i64).map(|i| Vertex { n: -i, num: 0, e: 0 }).collect();
    OrientedPath { vertices, forward: true }
}

pub fn act(f: &Field, g: &Mat2, path: &OrientedPath) -> Result<OrientedPath> {
    let vertices = path.vertices.iter().map(|v| v.act(f, g)).collect::<Result<Vec<_>>>()?;
    Ok(OrientedPath { vertices, forward: path.forward })
}

/// Outcome of [`covering_ok`].
#[derive(Clone, Debug, Serialize)]
pub struct Covering {
    pub ok: bool,
    pub longest: Option<usize>,
    pub diagnostic: String,
}

/// Whether the longest of the three paths is exactly the union of the other
/// two, each of which starts at an end of it.
pub fn covering_ok(paths: [&OrientedPath; 3]) -> Covering {
    let max = paths.iter().map(|p| p.len()).max().unwrap();
    let mut reasons = vec![];
    for l in (0..3).filter(|&i| paths[i].len() == max) {
        let long = paths[l];
        let others: Vec<&OrientedPath> = (0..3).filter(|&i| i != l).map(|i| paths[i]).collect();
        let target = long.edges();
        let union: BTreeSet<_> = others.iter().flat_map(|p| p.edges()).collect();
        let on_long: BTreeSet<Vertex> = long.vertices.iter().copied().collect();
        let (s, t) = long.endpoints();
        if union != target {
            reasons.push(format!("path {l}: union of the other edge sets differs from its {} edges", target.len()));
            continue;
        }
        if let Some(p) = others.iter().find(|p| p.vertices.iter().any(|v| !on_long.contains(v))) {
            reasons.push(format!("path {l}: a vertex of {:?} lies off the longest path", p.endpoints()));
            continue;
        }
        let anchored = |p: &OrientedPath| {
            let (a, b) = p.endpoints();
            [a, b].iter().any(|v| *v == s || *v == t)
        };
        if !others.iter().all(|p| anchored(p)) {
            reasons.push(format!("path {l}: a shorter path does not reach an end of the longest"));
            continue;
        }
        let shared = others[0].edges().intersection(&others[1].edges()).count();
        return Covering {
            ok: true,
            longest: Some(l),
            diagnostic: format!("path {l} of length {max} covered, {shared} shared edges"),
        };
    }
    Covering { ok: false, longest: None, diagnostic: reasons.join("; ") }
}

/// The paths of `I_{n1}`, `gamma^{n3-n2} I_{n2} gamma^{n2-n3}` and `I_{n3}`.
pub fn theorem_configuration(f: &Field, n1: u32, n2: u32, n3: u32) -> Result<[OrientedPath; 3]> {
    if n3 < n2 {
        return Err(Error::Config(format!("n3 = {n3} < n2 = {n2}")));
    }
    let shifted = act(f, &Mat2::gamma(f, (n3 - n2) as i64), &standard_path(n2))?;
    Ok([standard_path(n1), shifted, standard_path(n3)])
}

const STYLES: [&str; 6] = ["red", "blue", "darkgreen", "orange", "purple", "brown"];

/// DOT digraph; one colour per path, arrows along each path's orientation.
pub fn to_dot(p: u64, paths: &[OrientedPath]) -> String {
    let mut nodes = BTreeMap::new();
    for path in paths {
        for v in &path.vertices {
            nodes.insert(v.node_id(), v.label(p));
        }
    }
    let mut out = String::from("digraph tree {\n");
    for (id, label) in &nodes {
        writeln!(out, "  {id} [label=\"{label}\"];").unwrap();
    }
    for (i, path) in paths.iter().enumerate() {
        let colour = STYLES[i % STYLES.len()];
        let mut vs = path.vertices.clone();
        if !path.forward {
            vs.reverse();
        }
        for w in vs.windows(2) {
            writeln!(out, "  {} -> {} [color={colour}, label=\"P{i}\"];", w[0].node_id(), w[1].node_id()).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl2::{enumerate_cosets, int_mat, Subgroup};
    use proptest::prelude::*;

    fn field(p: u64) -> Field {
        Field::new(p, 8).unwrap()
    }

    #[test]
    fn standard_paths() {
        let f = field(3);
        assert_eq!(standard_path(0).vertices, vec![Vertex::BASE]);
        let p2 = standard_path(2);
        assert!(OrientedPath::new(&f, p2.vertices.clone(), true).is_ok());
        let v1 = Vertex::BASE.act(&f, &Mat2::gamma(&f, 1)).unwrap();
        assert_eq!(standard_path(1).vertices, vec![Vertex::BASE, v1]);
    }

    #[test]
    fn canonical_forms() {
        let f = field(2);
        // (1 1/2; 0 1) moves the base vertex to a neighbour of gamma K
        let g = Mat2::new(f.one(), f.pi_pow(-1), f.zero(), f.one());
        let v = Vertex::BASE.act(&f, &g).unwrap();
        assert_eq!(v, Vertex { n: 0, num: 1, e: 1 });
        assert_eq!(Vertex::BASE.distance(&f, &v).unwrap(), 2);
        // scalars act trivially
        let s = Mat2::scalar(f.from_int(6));
        assert_eq!(v.act(&f, &s).unwrap(), v);
        // the p+1 neighbours of the base vertex are distinct
        let nbrs: BTreeSet<Vertex> = (0..2)
            .map(|b| Vertex { n: 1, num: b, e: 0 })
            .chain([Vertex { n: -1, num: 0, e: 0 }])
            .collect();
        assert_eq!(nbrs.len(), 3);
        for w in &nbrs {
            assert_eq!(Vertex::BASE.distance(&f, w).unwrap(), 1);
            assert_eq!(Vertex::canonical(&f, &w.matrix(&f)).unwrap(), *w);
        }
    }

    #[test]
    fn gamma_shifts_edge() {
        let f = field(3);
        let shifted = act(&f, &Mat2::gamma(&f, 1), &standard_path(1)).unwrap();
        assert_eq!(shifted.vertices, vec![Vertex { n: -1, num: 0, e: 0 }, Vertex { n: -2, num: 0, e: 0 }]);
        let k = Mat2::ints(&f, 2, 1, 3, 1);
        assert!(act(&f, &k, &standard_path(0)).unwrap().same(&standard_path(0)));
    }

    #[test]
    fn atkin_lehner_reverses() {
        let f = field(3);
        let p = standard_path(3);
        let q = act(&f, &Mat2::atkin_lehner(&f, 3), &p).unwrap();
        let rev: Vec<Vertex> = p.vertices.iter().rev().copied().collect();
        assert_eq!(q.vertices, rev);
        assert!(!q.same(&p));
    }

    #[test]
    fn stabilizer_is_iwahori() {
        for p in [2u64, 3] {
            let f = field(p);
            for n in 0..=2u32 {
                let path = standard_path(n);
                for e in enumerate_cosets(&f, n + 1, 1 << 20).unwrap() {
                    let k = int_mat(&f, e);
                    let fixed = act(&f, &k, &path).unwrap().same(&path);
                    assert_eq!(fixed, k.is_member(&f, Subgroup::Iwahori(n)).unwrap(), "p={p} n={n} {e:?}");
                }
            }
        }
    }

    #[test]
    fn covering_pictures() {
        let f = field(2);
        let l = standard_path(4);
        let first = OrientedPath::new(&f, l.vertices[0..2].to_vec(), true).unwrap();
        let rest = OrientedPath::new(&f, l.vertices[1..5].to_vec(), true).unwrap();
        assert!(covering_ok([&first, &rest, &l]).ok);
        let overlap = OrientedPath::new(&f, l.vertices[0..3].to_vec(), true).unwrap();
        assert!(covering_ok([&overlap, &rest, &l]).ok);
        let five = standard_path(5);
        let end = OrientedPath::new(&f, five.vertices[3..6].to_vec(), true).unwrap();
        assert!(covering_ok([&five, &five, &end]).ok);
        let middle = OrientedPath::new(&f, l.vertices[1..3].to_vec(), true).unwrap();
        assert!(!covering_ok([&middle, &first, &l]).ok);
        let e = |k: i64| act(&f, &Mat2::gamma(&f, 3 * k), &standard_path(1)).unwrap();
        let c = covering_ok([&e(0), &e(1), &e(2)]);
        assert!(!c.ok);
        assert!(!c.diagnostic.is_empty());
    }

    #[test]
    fn theorem_picture() {
        let f = field(3);
        let [a, b, c] = theorem_configuration(&f, 2, 1, 3).unwrap();
        assert_eq!(b.vertices[0], Vertex { n: -2, num: 0, e: 0 });
        assert!(covering_ok([&a, &b, &c]).ok);
        let dot = to_dot(3, &[a, b, c]);
        assert_eq!(dot.matches("[label=\"(").count(), 4);
        assert_eq!(dot.matches(" -> ").count(), 2 + 1 + 3);
    }

    #[test]
    fn dot_skeletons() {
        assert_eq!(to_dot(2, &[]), "digraph tree {\n}\n");
        let d = to_dot(2, &[standard_path(2)]);
        assert_eq!(d.matches("label=\"(").count(), 3);
        assert_eq!(d.matches(" -> ").count(), 2);
    }

    fn small(f: &Field) -> impl Strategy<Value = Mat2> + '_ {
        (-2i64..3, 1u64..27, 0u64..27, -2i64..3, 1u64..27).prop_filter_map("invertible", move |(x, u, b, y, w)| {
            if u % 3 == 0 || w % 3 == 0 {
                return None;
            }
            let a = f.mul(f.pi_pow(x), f.from_residue(u));
            let d = f.mul(f.pi_pow(y), f.from_residue(w));
            let bb = f.mul(f.pi_pow(-1), f.from_residue(b));
            Some(Mat2::new(a, bb, f.zero(), d).mul(f, &Mat2::ints(f, 1, 0, (b % 4) as i64, 1)).ok()?)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn action_is_a_group_action(g in small(&Field::new(3, 10).unwrap()), h in small(&Field::new(3, 10).unwrap()), n in 0u32..3) {
            let f = Field::new(3, 10).unwrap();
            let path = standard_path(n);
            let gh = g.mul(&f, &h).unwrap();
            let lhs = act(&f, &gh, &path).unwrap();
            let rhs = act(&f, &g, &act(&f, &h, &path).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn covering_is_invariant(g in small(&Field::new(3, 10).unwrap()), n1 in 0u32..3, n2 in 0u32..3, extra in 0u32..2) {
            let f = Field::new(3, 10).unwrap();
            let n3 = n1.max(n2) + extra;
            let paths = theorem_configuration(&f, n1, n2, n3).unwrap();
            let moved: Vec<OrientedPath> = paths.iter().map(|p| act(&f, &g, p).unwrap()).collect();
            let before = covering_ok([&paths[0], &paths[1], &paths[2]]).ok;
            let after = covering_ok([&moved[0], &moved[1], &moved[2]]).ok;
            prop_assert_eq!(before, after);
        }
    }
}

//! Newton polygon geometry: boundary, ordered weights, face functions, principal part,
//! and the rescaled loop polynomials of the faces.

use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixedpoly::MixedPoly;
use crate::scalar::{cis, cpow, Coeff, Real};
use crate::trig::{Chart, LoopPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NewtonError {
    #[error("the Newton boundary has no compact 1-face")]
    NoCompactFace,
    #[error("face not found: {0}")]
    FaceNotFound(String),
}

/// A positive weight vector `P = (p₁, p₂)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight {
    pub p1: u64,
    pub p2: u64,
}

impl Weight {
    pub fn new(p1: u64, p2: u64) -> Self {
        Weight { p1, p2 }
    }

    /// `ℓ_P(w) = p₁ w₁ + p₂ w₂`.
    pub fn ell(&self, w: (u64, u64)) -> u64 {
        self.p1 * w.0 + self.p2 * w.1
    }

    pub fn component(&self, index: usize) -> u64 {
        if index == 1 {
            self.p1
        } else {
            self.p2
        }
    }
}

/// `d(Q; p)`: the minimum of `ℓ_Q` over the support, `None` for the zero polynomial.
pub fn d_weight<K: Coeff>(p: &MixedPoly<K>, q: Weight) -> Option<u64> {
    p.iter().map(|(m, _)| q.ell(m.point())).min()
}

/// Terms of `p` minimizing `ℓ_Q`.
pub fn relative_face_function<K: Coeff>(p: &MixedPoly<K>, q: Weight) -> MixedPoly<K> {
    match d_weight(p, q) {
        Some(d) => p.filter(|m| q.ell(m.point()) == d),
        None => MixedPoly::zero(),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub point: (u64, u64),
    pub extreme: bool,
}

/// A compact 1-face with its constants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub index: usize,
    pub weight: Weight,
    pub d: u64,
    /// Endpoint nearer the `v`-axis.
    pub start: (u64, u64),
    /// Endpoint nearer the `u`-axis.
    pub end: (u64, u64),
    /// `k = p₁/p₂` in lowest terms.
    pub k: String,
    /// Largest `|u|`-exponent on the face.
    pub s: u64,
    /// Smallest `r`-exponent on the face.
    pub n: u64,
    /// Smallest `|u|`-exponent on the face.
    pub m: u64,
}

impl Face {
    pub fn k(&self) -> BigRational {
        BigRational::new(BigInt::from(self.weight.p1), BigInt::from(self.weight.p2))
    }

    pub fn k_f64(&self) -> f64 {
        self.weight.p1 as f64 / self.weight.p2 as f64
    }

    /// `k s + n = d / p₂`, the power of `r` pulled out by the rescaling.
    pub fn radial_degree(&self) -> BigRational {
        BigRational::new(BigInt::from(self.d), BigInt::from(self.weight.p2))
    }

    pub fn contains(&self, w: (u64, u64)) -> bool {
        self.weight.ell(w) == self.d
    }
}

/// Which piece of the boundary a face function is taken over.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceRef {
    /// The `i`-th compact 1-face, `1 ≤ i ≤ N`.
    Face(usize),
    /// A vertex given by its lattice point.
    Vertex((u64, u64)),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonData {
    pub support: Vec<(u64, u64)>,
    pub vertices: Vec<Vertex>,
    pub faces: Vec<Face>,
}

fn cross(o: (i128, i128), a: (i128, i128), b: (i128, i128)) -> i128 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Boundary vertices ordered from the `v`-axis side to the `u`-axis side.
fn boundary_vertices(support: &[(u64, u64)]) -> Vec<(u64, u64)> {
    let mut pts: Vec<(u64, u64)> = support.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let mut hull: Vec<(u64, u64)> = Vec::new();
    let c = |p: (u64, u64)| (p.0 as i128, p.1 as i128);
    for p in pts {
        while hull.len() >= 2 && cross(c(hull[hull.len() - 2]), c(hull[hull.len() - 1]), c(p)) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let mut out = vec![hull[0]];
    for w in hull.windows(2) {
        if w[1].1 < w[0].1 {
            out.push(w[1]);
        } else {
            break;
        }
    }
    out
}

pub fn newton_polygon<K: Coeff>(p: &MixedPoly<K>) -> Result<NewtonData, NewtonError> {
    let support = p.support();
    if support.is_empty() {
        return Err(NewtonError::NoCompactFace);
    }
    let verts = boundary_vertices(&support);
    if verts.len() < 2 {
        return Err(NewtonError::NoCompactFace);
    }
    let last = verts.len() - 1;
    let vertices = verts.iter().enumerate().map(|(i, &point)| Vertex { point, extreme: i == 0 || i == last }).collect();
    let faces = verts
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (a1, b1) = w[0];
            let (a2, b2) = w[1];
            let (x, y) = (b1 - b2, a2 - a1);
            let g = x.gcd(&y);
            let weight = Weight::new(x / g, y / g);
            let d = weight.ell(w[0]);
            let k = if weight.p2 == 1 { weight.p1.to_string() } else { format!("{}/{}", weight.p1, weight.p2) };
            Face { index: i + 1, weight, d, start: w[0], end: w[1], k, s: a2, n: b2, m: a1 }
        })
        .collect();
    Ok(NewtonData { support, vertices, faces })
}

impl NewtonData {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face(&self, i: usize) -> Result<&Face, NewtonError> {
        if i == 0 || i > self.faces.len() {
            return Err(NewtonError::FaceNotFound(format!("face index {i} outside 1..={}", self.faces.len())));
        }
        Ok(&self.faces[i - 1])
    }

    pub fn first_face(&self) -> &Face {
        &self.faces[0]
    }

    pub fn last_face(&self) -> &Face {
        &self.faces[self.faces.len() - 1]
    }

    pub fn weights(&self) -> Vec<Weight> {
        self.faces.iter().map(|f| f.weight).collect()
    }

    pub fn non_extreme_vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(|v| !v.extreme)
    }

    /// `d(Q; f)`, the minimum of `ℓ_Q` over the vertices.
    pub fn d(&self, q: Weight) -> u64 {
        self.vertices.iter().map(|v| q.ell(v.point)).min().expect("at least two vertices")
    }

    pub fn u_convenient(&self) -> bool {
        self.vertices.last().map(|v| v.point.1 == 0).unwrap_or(false)
    }

    pub fn v_convenient(&self) -> bool {
        self.vertices.first().map(|v| v.point.0 == 0).unwrap_or(false)
    }

    /// True when `ℓ_Q(w) > d(Q; f)` for every positive `Q`; decided on the face normals and
    /// the two non-compact rays.
    pub fn is_above(&self, w: (u64, u64)) -> bool {
        let first = self.vertices[0].point;
        let last = self.vertices[self.vertices.len() - 1].point;
        w.0 >= first.0 && w.1 >= last.1 && self.faces.iter().all(|f| f.weight.ell(w) > f.d)
    }

    /// Lies on a compact face (vertices included).
    pub fn on_boundary(&self, w: (u64, u64)) -> bool {
        self.faces.iter().any(|f| f.contains(w) && w.0 >= f.start.0 && w.0 <= f.end.0)
    }

    pub fn face_function<K: Coeff>(&self, p: &MixedPoly<K>, face: FaceRef) -> Result<MixedPoly<K>, NewtonError> {
        match face {
            FaceRef::Face(i) => {
                let f = self.face(i)?;
                Ok(p.filter(|m| f.contains(m.point())))
            }
            FaceRef::Vertex(pt) => {
                if !self.vertices.iter().any(|v| v.point == pt) {
                    return Err(NewtonError::FaceNotFound(format!("vertex ({}, {})", pt.0, pt.1)));
                }
                Ok(p.filter(|m| m.point() == pt))
            }
        }
    }

    pub fn principal_part<K: Coeff>(&self, p: &MixedPoly<K>) -> MixedPoly<K> {
        p.filter(|m| self.on_boundary(m.point()))
    }
}

pub fn face_function<K: Coeff>(p: &MixedPoly<K>, face: FaceRef) -> Result<MixedPoly<K>, NewtonError> {
    newton_polygon(p)?.face_function(p, face)
}

pub fn principal_part<K: Coeff>(p: &MixedPoly<K>) -> Result<MixedPoly<K>, NewtonError> {
    Ok(newton_polygon(p)?.principal_part(p))
}

/// `g_i` with `f_{P_i}(r^{k_i} u, r e^{it}) = r^{k_i s_i + n_i} g_i(u, ū, e^{it})`.
pub fn face_to_loop<K: Coeff>(p: &MixedPoly<K>, i: usize) -> Result<LoopPoly<K>, NewtonError> {
    let nd = newton_polygon(p)?;
    Ok(LoopPoly::from_face(&nd.face_function(p, FaceRef::Face(i))?, Chart::CxS1))
}

/// `ĝ_N`, the profile of the last face function on the complementary chart `S¹×C`.
pub fn hat_g_n<K: Coeff>(p: &MixedPoly<K>) -> Result<LoopPoly<K>, NewtonError> {
    let nd = newton_polygon(p)?;
    let n = nd.n_faces();
    Ok(LoopPoly::from_face(&nd.face_function(p, FaceRef::Face(n))?, Chart::S1xC))
}

/// The `r`-deformation `f_i(u, ū, r, t)` of `g_i`, stored per monomial with its exponent
/// of `r`.
#[derive(Clone, Debug)]
pub struct Deformation<F: Real> {
    terms: Vec<DeformTerm<F>>,
}

#[derive(Clone, Debug)]
struct DeformTerm<F: Real> {
    coeff: Complex<F>,
    u: u32,
    ubar: u32,
    freq: i64,
    /// `(ℓ_P(w) − d) / p₂`, exact as a pair.
    r_exp: (u64, u64),
}

impl<F: Real> Deformation<F> {
    pub fn new<K: Coeff>(p: &MixedPoly<K>, nd: &NewtonData, i: usize) -> Result<Self, NewtonError> {
        let face = nd.face(i)?;
        let terms = p
            .iter()
            .map(|(m, c)| {
                let excess = face.weight.ell(m.point()) - face.d;
                let g = excess.gcd(&face.weight.p2).max(1);
                DeformTerm {
                    coeff: c.to_complex(),
                    u: m.u,
                    ubar: m.ubar,
                    freq: m.v as i64 - m.vbar as i64,
                    r_exp: (excess / g, face.weight.p2 / g),
                }
            })
            .collect();
        Ok(Deformation { terms })
    }

    pub fn eval(&self, u: Complex<F>, r: F, t: F) -> Complex<F> {
        let mut acc = Complex::new(F::zero(), F::zero());
        let ln_r = r.ln();
        for term in &self.terms {
            let rp = if term.r_exp.0 == 0 {
                F::one()
            } else if r <= F::zero() {
                continue;
            } else {
                (ln_r * F::from_u64(term.r_exp.0).unwrap() / F::from_u64(term.r_exp.1).unwrap()).exp()
            };
            acc = acc
                + term.coeff
                    * cpow(u, term.u)
                    * cpow(u.conj(), term.ubar)
                    * cis(t * F::from_i64(term.freq).unwrap())
                    * rp;
        }
        acc
    }

    /// `(∂_u f_i, ∂_ū f_i)` at a point.
    pub fn eval_du(&self, u: Complex<F>, r: F, t: F) -> (Complex<F>, Complex<F>) {
        let mut du = Complex::new(F::zero(), F::zero());
        let mut dub = Complex::new(F::zero(), F::zero());
        let ln_r = r.ln();
        for term in &self.terms {
            let rp = if term.r_exp.0 == 0 {
                F::one()
            } else if r <= F::zero() {
                continue;
            } else {
                (ln_r * F::from_u64(term.r_exp.0).unwrap() / F::from_u64(term.r_exp.1).unwrap()).exp()
            };
            let base = term.coeff * cis(t * F::from_i64(term.freq).unwrap()) * rp;
            if term.u > 0 {
                du = du + base * F::from_u32(term.u).unwrap() * cpow(u, term.u - 1) * cpow(u.conj(), term.ubar);
            }
            if term.ubar > 0 {
                dub = dub + base * F::from_u32(term.ubar).unwrap() * cpow(u, term.u) * cpow(u.conj(), term.ubar - 1);
            }
        }
        (du, dub)
    }
}

/// `f_i(u, ū, r, t)`; at `r = 0` it equals `g_i(u, ū, e^{it})`.
pub fn deformation_eval<K: Coeff>(p: &MixedPoly<K>, i: usize, u: Complex<f64>, r: f64, t: f64) -> Result<Complex<f64>, NewtonError> {
    let nd = newton_polygon(p)?;
    Ok(Deformation::<f64>::new(p, &nd, i)?.eval(u, r, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;
    use crate::gauss::GaussRat;
    use crate::mixedpoly::ExactPoly;

    const EX21: &str = "u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)";

    fn p(s: &str) -> ExactPoly {
        parse_poly(s).unwrap()
    }

    #[test]
    fn running_example_polygon() {
        let f = p(EX21);
        let nd = newton_polygon(&f).unwrap();
        let pts: Vec<_> = nd.vertices.iter().map(|v| v.point).collect();
        assert_eq!(pts, vec![(0, 7), (2, 3), (8, 0)]);
        assert_eq!(nd.weights(), vec![Weight::new(2, 1), Weight::new(1, 2)]);
        assert_eq!((nd.faces[0].d, nd.faces[1].d), (7, 8));
        assert_eq!(nd.vertices.iter().map(|v| v.extreme).collect::<Vec<_>>(), vec![true, false, true]);
        assert_eq!(nd.faces[1].k, "1/2");
        assert!(nd.u_convenient() && nd.v_convenient());
    }

    #[test]
    fn cusp_constants() {
        let nd = newton_polygon(&p("u^2 - v^3")).unwrap();
        let f = &nd.faces[0];
        assert_eq!((f.weight, f.d, f.k.as_str(), f.s, f.n, f.m), (Weight::new(3, 2), 6, "3/2", 2, 0, 0));
        assert_eq!(newton_polygon(&p("u^5")), Err(NewtonError::NoCompactFace));
    }

    #[test]
    fn face_functions_of_running_example() {
        let f = p(EX21);
        assert_eq!(face_function(&f, FaceRef::Face(1)).unwrap(), p("v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)"));
        assert_eq!(face_function(&f, FaceRef::Face(2)).unwrap(), p("u^8 + v^3*u^2"));
        assert_eq!(face_function(&f, FaceRef::Vertex((2, 3))).unwrap(), p("v^3*u^2"));
        assert!(matches!(face_function(&f, FaceRef::Face(3)), Err(NewtonError::FaceNotFound(_))));
        assert!(matches!(face_function(&f, FaceRef::Vertex((1, 5))), Err(NewtonError::FaceNotFound(_))));
    }

    #[test]
    fn relative_faces() {
        let f = p(EX21);
        assert_eq!(relative_face_function(&f, Weight::new(3, 1)), p("-2*(v^7 + conj(v)^7)"));
        assert_eq!(relative_face_function(&f, Weight::new(1, 1)), p("v^3*u^2"));
        assert_eq!(relative_face_function(&f, Weight::new(1, 5)), p("u^8"));
    }

    #[test]
    fn principal_parts() {
        let f = p(EX21);
        assert_eq!(principal_part(&f).unwrap(), f);
        assert_eq!(principal_part(&p("u^2 - v^3 + u^5*v^5")).unwrap(), p("u^2 - v^3"));
        assert_eq!(principal_part(&p("u^2 - v^3")).unwrap(), p("u^2 - v^3"));
    }

    #[test]
    fn loops_of_running_example() {
        let f = p(EX21);
        let g1 = face_to_loop(&f, 1).unwrap();
        let mut want = LoopPoly::zero(Chart::CxS1);
        want.add_term(2, 0, 3, GaussRat::int(1));
        want.add_term(1, 0, -5, GaussRat::int(1));
        want.add_term(0, 0, 7, GaussRat::int(-2));
        want.add_term(0, 0, -7, GaussRat::int(-2));
        assert_eq!(g1, want);
        let g2 = face_to_loop(&f, 2).unwrap();
        let mut want = LoopPoly::zero(Chart::CxS1);
        want.add_term(8, 0, 0, GaussRat::int(1));
        want.add_term(2, 0, 3, GaussRat::int(1));
        assert_eq!(g2, want);
        let g = face_to_loop(&p("u^2 - v^3"), 1).unwrap();
        let mut want = LoopPoly::zero(Chart::CxS1);
        want.add_term(2, 0, 0, GaussRat::int(1));
        want.add_term(0, 0, 3, GaussRat::int(-1));
        assert_eq!(g, want);
    }

    #[test]
    fn hat_g_examples() {
        let mut want = LoopPoly::zero(Chart::S1xC);
        want.add_term(0, 0, 2, GaussRat::int(1));
        want.add_term(3, 0, 0, GaussRat::int(-1));
        assert_eq!(hat_g_n(&p("u^2 - v^3")).unwrap(), want);
        let mut want = LoopPoly::zero(Chart::S1xC);
        want.add_term(1, 0, 1, GaussRat::int(1));
        assert_eq!(hat_g_n(&p("u*v + u^3 + v^3")).unwrap().coeff(1, 0), want.coeff(1, 0));
        let mut want = LoopPoly::zero(Chart::S1xC);
        want.add_term(0, 0, 8, GaussRat::int(1));
        want.add_term(3, 0, 2, GaussRat::int(1));
        assert_eq!(hat_g_n(&p(EX21)).unwrap(), want);
    }

    #[test]
    fn deformation_shift() {
        let f = p("u^2 - v^3 + v^4");
        let u = Complex::new(0.3, 0.4);
        let (r, t) = (0.37, 1.1);
        let got = deformation_eval(&f, 1, u, r, t).unwrap();
        let want = u * u - cis(3.0 * t) + cis(4.0 * t) * r;
        assert!((got - want).norm() < 1e-13);
        let g = face_to_loop(&f, 1).unwrap();
        let at0 = deformation_eval(&f, 1, u, 0.0, t).unwrap();
        assert!((at0 - g.eval(u, t)).norm() < 1e-13);
    }
}

//! Mixed polynomials in `u, v, ū, v̄`: algebra, Wirtinger calculus, evaluation and
//! the residuals of the singular-set equations.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::gauss::GaussRat;
use crate::scalar::{cpow, Coeff, Real};

/// One of the four independent Wirtinger variables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    U,
    Ubar,
    V,
    Vbar,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::U, Var::Ubar, Var::V, Var::Vbar];

    pub fn conj(self) -> Var {
        match self {
            Var::U => Var::Ubar,
            Var::Ubar => Var::U,
            Var::V => Var::Vbar,
            Var::Vbar => Var::V,
        }
    }

    /// 1 for `u, ū`, 2 for `v, v̄`.
    pub fn axis(self) -> usize {
        match self {
            Var::U | Var::Ubar => 1,
            Var::V | Var::Vbar => 2,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::U => "u",
            Var::Ubar => "conj(u)",
            Var::V => "v",
            Var::Vbar => "conj(v)",
        };
        f.write_str(s)
    }
}

/// Exponents of `u^a ū^b v^c v̄^d`, i.e. `ν = (a, c)` and `μ = (b, d)`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub u: u32,
    pub ubar: u32,
    pub v: u32,
    pub vbar: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { u: 0, ubar: 0, v: 0, vbar: 0 };

    pub fn new(u: u32, ubar: u32, v: u32, vbar: u32) -> Self {
        Monomial { u, ubar, v, vbar }
    }

    pub fn of(var: Var) -> Self {
        let mut m = Monomial::ONE;
        *m.exp_mut(var) = 1;
        m
    }

    pub fn exp(&self, var: Var) -> u32 {
        match var {
            Var::U => self.u,
            Var::Ubar => self.ubar,
            Var::V => self.v,
            Var::Vbar => self.vbar,
        }
    }

    pub fn exp_mut(&mut self, var: Var) -> &mut u32 {
        match var {
            Var::U => &mut self.u,
            Var::Ubar => &mut self.ubar,
            Var::V => &mut self.v,
            Var::Vbar => &mut self.vbar,
        }
    }

    /// The lattice point `ν + μ`.
    pub fn point(&self) -> (u64, u64) {
        ((self.u + self.ubar) as u64, (self.v + self.vbar) as u64)
    }

    pub fn conj(&self) -> Self {
        Monomial { u: self.ubar, ubar: self.u, v: self.vbar, vbar: self.v }
    }

    pub fn swap_uv(&self) -> Self {
        Monomial { u: self.v, ubar: self.vbar, v: self.u, vbar: self.ubar }
    }

    pub fn mul(&self, o: &Monomial) -> Self {
        Monomial { u: self.u + o.u, ubar: self.ubar + o.ubar, v: self.v + o.v, vbar: self.vbar + o.vbar }
    }

    pub fn degree(&self) -> u32 {
        self.u + self.ubar + self.v + self.vbar
    }

    pub fn eval<F: Real>(&self, u: Complex<F>, v: Complex<F>) -> Complex<F> {
        cpow(u, self.u) * cpow(u.conj(), self.ubar) * cpow(v, self.v) * cpow(v.conj(), self.vbar)
    }
}

/// Finite map from monomials to non-zero coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct MixedPoly<K: Coeff = GaussRat> {
    terms: BTreeMap<Monomial, K>,
}

impl<K: Coeff> Default for MixedPoly<K> {
    fn default() -> Self {
        MixedPoly { terms: BTreeMap::new() }
    }
}

impl<K: Coeff> MixedPoly<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: K) -> Self {
        Self::monomial(Monomial::ONE, c)
    }

    pub fn var(var: Var) -> Self {
        Self::monomial(Monomial::of(var), K::one())
    }

    pub fn monomial(m: Monomial, c: K) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, K)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c·m`, merging like terms and dropping cancellations.
    pub fn add_term(&mut self, m: Monomial, c: K) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(old) => {
                let sum = old.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *old = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, K> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &K)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&K> {
        self.terms.get(m)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Keeps the terms whose monomial satisfies `keep`.
    pub fn filter<P: Fn(&Monomial) -> bool>(&self, keep: P) -> Self {
        MixedPoly { terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (*m, c.clone())).collect() }
    }

    pub fn map_coeffs<L: Coeff, G: Fn(&K) -> L>(&self, g: G) -> MixedPoly<L> {
        MixedPoly::from_terms(self.terms.iter().map(|(m, c)| (*m, g(c))))
    }

    pub fn scale(&self, c: &K) -> Self {
        MixedPoly::from_terms(self.terms.iter().map(|(m, k)| (*m, k.clone() * c.clone())))
    }

    /// Complex conjugate as a function: conjugated coefficients, `u ↔ ū`, `v ↔ v̄`.
    pub fn conj(&self) -> Self {
        MixedPoly::from_terms(self.terms.iter().map(|(m, c)| (m.conj(), c.conj())))
    }

    /// `p(v, u)`: the roles of the two complex variables exchanged.
    pub fn swap_uv(&self) -> Self {
        MixedPoly::from_terms(self.terms.iter().map(|(m, c)| (m.swap_uv(), c.clone())))
    }

    /// Formal partial derivative with `u, ū, v, v̄` independent.
    pub fn wirtinger(&self, var: Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.exp(var);
            if e == 0 {
                continue;
            }
            let mut m2 = *m;
            *m2.exp_mut(var) -= 1;
            out.add_term(m2, c.clone() * K::from_i64(e as i64));
        }
        out
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.terms.keys().any(|m| m.exp(var) > 0)
    }

    /// `x`-semiholomorphic: independent of the conjugate of `x`.
    pub fn is_semiholomorphic(&self, x: Var) -> bool {
        !self.depends_on(x.conj())
    }

    /// Lattice support `{ν + μ}`.
    pub fn support(&self) -> Vec<(u64, u64)> {
        let mut pts: Vec<(u64, u64)> = self.terms.keys().map(|m| m.point()).collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Largest coefficient modulus.
    pub fn max_modulus(&self) -> f64 {
        self.terms.values().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    pub fn to_numeric<F: Real>(&self) -> MixedPoly<Complex<F>> {
        self.map_coeffs(|c| c.to_complex::<F>())
    }

    pub fn evaluate<F: Real>(&self, u: Complex<F>, v: Complex<F>) -> Complex<F> {
        let mut acc = Complex::new(F::zero(), F::zero());
        for (m, c) in &self.terms {
            acc = acc + c.to_complex::<F>() * m.eval(u, v);
        }
        acc
    }

    /// `Σ |c| |u|^{a+b} |v|^{c+d}`, the size against which cancellation is measured.
    pub fn evaluate_abs<F: Real>(&self, ru: F, rv: F) -> F {
        let mut acc = F::zero();
        for (m, c) in &self.terms {
            let (a, b) = m.point();
            acc = acc + c.to_complex::<F>().norm() * ru.powi(a as i32) * rv.powi(b as i32);
        }
        acc
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(K::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl<'a, K: Coeff> Add<&'a MixedPoly<K>> for &'a MixedPoly<K> {
    type Output = MixedPoly<K>;
    fn add(self, o: &MixedPoly<K>) -> MixedPoly<K> {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl<'a, K: Coeff> Sub<&'a MixedPoly<K>> for &'a MixedPoly<K> {
    type Output = MixedPoly<K>;
    fn sub(self, o: &MixedPoly<K>) -> MixedPoly<K> {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl<'a, K: Coeff> Mul<&'a MixedPoly<K>> for &'a MixedPoly<K> {
    type Output = MixedPoly<K>;
    fn mul(self, o: &MixedPoly<K>) -> MixedPoly<K> {
        let mut out = MixedPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        out
    }
}

impl<K: Coeff> Neg for MixedPoly<K> {
    type Output = MixedPoly<K>;
    fn neg(self) -> MixedPoly<K> {
        MixedPoly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

/// Values of `s₁, s₂, s₃` at a point.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularResiduals {
    pub s1: Complex<f64>,
    pub s2: f64,
    pub s3: f64,
}

impl SingularResiduals {
    pub fn max_abs(&self) -> f64 {
        self.s1.norm().max(self.s2.abs()).max(self.s3.abs())
    }
}

/// `s₁ = f_u·conj(f_v̄) − conj(f_ū)·f_v`, `s₂ = |f_u|²−|f_ū|²`, `s₃ = |f_v|²−|f_v̄|²`.
pub fn singular_residuals<K: Coeff>(p: &MixedPoly<K>, u: Complex<f64>, v: Complex<f64>) -> SingularResiduals {
    let fu = p.wirtinger(Var::U).evaluate(u, v);
    let fub = p.wirtinger(Var::Ubar).evaluate(u, v);
    let fv = p.wirtinger(Var::V).evaluate(u, v);
    let fvb = p.wirtinger(Var::Vbar).evaluate(u, v);
    SingularResiduals {
        s1: fu * fvb.conj() - fub.conj() * fv,
        s2: fu.norm_sqr() - fub.norm_sqr(),
        s3: fv.norm_sqr() - fvb.norm_sqr(),
    }
}

/// The residual functions as exact mixed polynomials `[s₁, s₂, s₃]`.
pub fn residual_polys<K: Coeff>(p: &MixedPoly<K>) -> [MixedPoly<K>; 3] {
    let fu = p.wirtinger(Var::U);
    let fub = p.wirtinger(Var::Ubar);
    let fv = p.wirtinger(Var::V);
    let fvb = p.wirtinger(Var::Vbar);
    let s1 = &(&fu * &fvb.conj()) - &(&fub.conj() * &fv);
    let s2 = &(&fu * &fu.conj()) - &(&fub * &fub.conj());
    let s3 = &(&fv * &fv.conj()) - &(&fvb * &fvb.conj());
    [s1, s2, s3]
}

/// Structural flags of a polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub u_semiholomorphic: bool,
    pub ubar_semiholomorphic: bool,
    pub v_semiholomorphic: bool,
    pub vbar_semiholomorphic: bool,
    pub holomorphic: bool,
    pub u_convenient: bool,
    pub v_convenient: bool,
    pub convenient: bool,
}

/// The boundary meets the `u`-axis iff some support point has no `v`-degree, and symmetrically.
pub fn classify_structure<K: Coeff>(p: &MixedPoly<K>) -> StructureReport {
    let support = p.support();
    let u_conv = support.iter().any(|&(_, b)| b == 0);
    let v_conv = support.iter().any(|&(a, _)| a == 0);
    let semi = |x: Var| p.is_semiholomorphic(x);
    StructureReport {
        u_semiholomorphic: semi(Var::U),
        ubar_semiholomorphic: semi(Var::Ubar),
        v_semiholomorphic: semi(Var::V),
        vbar_semiholomorphic: semi(Var::Vbar),
        holomorphic: semi(Var::U) && semi(Var::V),
        u_convenient: u_conv,
        v_convenient: v_conv,
        convenient: u_conv && v_conv,
    }
}

/// Function values and Wirtinger derivatives of a polynomial, precompiled for repeated
/// floating-point evaluation.
#[derive(Clone, Debug)]
pub struct Jet<F: Real> {
    pub f: MixedPoly<Complex<F>>,
    pub fu: MixedPoly<Complex<F>>,
    pub fub: MixedPoly<Complex<F>>,
    pub fv: MixedPoly<Complex<F>>,
    pub fvb: MixedPoly<Complex<F>>,
}

/// Values of a [`Jet`] at a point.
#[derive(Copy, Clone, Debug)]
pub struct JetValue<F: Real> {
    pub f: Complex<F>,
    pub fu: Complex<F>,
    pub fub: Complex<F>,
    pub fv: Complex<F>,
    pub fvb: Complex<F>,
}

impl<F: Real> JetValue<F> {
    pub fn s1(&self) -> Complex<F> {
        self.fu * self.fvb.conj() - self.fub.conj() * self.fv
    }
    pub fn s2(&self) -> F {
        self.fu.norm_sqr() - self.fub.norm_sqr()
    }
    pub fn s3(&self) -> F {
        self.fv.norm_sqr() - self.fvb.norm_sqr()
    }
}

impl<F: Real> Jet<F> {
    pub fn new<K: Coeff>(p: &MixedPoly<K>) -> Self {
        let n = p.to_numeric::<F>();
        Jet {
            fu: n.wirtinger(Var::U),
            fub: n.wirtinger(Var::Ubar),
            fv: n.wirtinger(Var::V),
            fvb: n.wirtinger(Var::Vbar),
            f: n,
        }
    }

    pub fn at(&self, u: Complex<F>, v: Complex<F>) -> JetValue<F> {
        JetValue {
            f: eval_num(&self.f, u, v),
            fu: eval_num(&self.fu, u, v),
            fub: eval_num(&self.fub, u, v),
            fv: eval_num(&self.fv, u, v),
            fvb: eval_num(&self.fvb, u, v),
        }
    }

    /// Scale-free residuals: each of `|f|, |s₁|, |s₂|, |s₃|` divided by the modulus sum of
    /// its expansion, so that the measure survives the weighted rescaling and stays
    /// meaningful near the coordinate axes.
    pub fn normalized(&self, u: Complex<F>, v: Complex<F>) -> [F; 4] {
        let j = self.at(u, v);
        let (ru, rv) = (u.norm(), v.norm());
        let af = self.f.evaluate_abs(ru, rv);
        let au = self.fu.evaluate_abs(ru, rv);
        let aub = self.fub.evaluate_abs(ru, rv);
        let av = self.fv.evaluate_abs(ru, rv);
        let avb = self.fvb.evaluate_abs(ru, rv);
        let ratio = |num: F, den: F| if den > F::zero() { num / den } else { F::zero() };
        [
            ratio(j.f.norm(), af),
            ratio(j.s1().norm(), au * avb + aub * av),
            ratio(j.s2().abs(), au * au + aub * aub),
            ratio(j.s3().abs(), av * av + avb * avb),
        ]
    }
}

fn eval_num<F: Real>(p: &MixedPoly<Complex<F>>, u: Complex<F>, v: Complex<F>) -> Complex<F> {
    let mut acc = Complex::new(F::zero(), F::zero());
    for (m, c) in p.iter() {
        acc = acc + *c * m.eval(u, v);
    }
    acc
}

/// Exact polynomial type used at the API boundary.
pub type ExactPoly = MixedPoly<GaussRat>;

impl ExactPoly {
    /// Multiplies by a Gaussian rational.
    pub fn scale_exact(&self, c: &GaussRat) -> Self {
        self.scale(c)
    }
}

impl fmt::Display for MixedPoly<GaussRat> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::expr::format_poly(self))
    }
}

impl std::str::FromStr for MixedPoly<GaussRat> {
    type Err = crate::expr::ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::expr::parse_poly(s)
    }
}

impl Serialize for MixedPoly<GaussRat> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::expr::format_poly(self))
    }
}

impl<'de> Deserialize<'de> for MixedPoly<GaussRat> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        crate::expr::parse_poly_allow_zero(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::expr::parse_poly;

    fn p(s: &str) -> ExactPoly {
        parse_poly(s).unwrap()
    }

    #[test]
    fn wirtinger_examples() {
        assert_eq!(p("u^2*conj(v)").wirtinger(Var::U), p("2*u*conj(v)"));
        let f = p("u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)");
        assert_eq!(f.wirtinger(Var::U), p("8*u^7 + 2*v^3*u + conj(v)^5"));
        assert!(p("v^3*u^2").wirtinger(Var::Ubar).is_zero());
    }

    #[test]
    fn evaluation_examples() {
        let one = Complex::new(1.0, 0.0);
        assert!(p("u^2 - v^3").evaluate(one, one).norm() < 1e-15);
        let z = p("u*conj(u)").evaluate(Complex::new(3.0, 4.0), Complex::new(0.0, 0.0));
        assert!((z - Complex::new(25.0, 0.0)).norm() < 1e-12);
        let f = p("u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)");
        let w = f.evaluate(Complex::new(0.0, 0.0), one);
        assert!((w - Complex::new(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn residual_examples() {
        let z = Complex::new(0.3, -1.1);
        let w = Complex::new(-0.7, 0.2);
        let r = singular_residuals(&p("u"), z, w);
        assert_eq!((r.s1, r.s2, r.s3), (Complex::new(0.0, 0.0), 1.0, 0.0));
        let r = singular_residuals(&p("u^2 - v^3"), Complex::zero(), Complex::zero());
        assert_eq!(r.max_abs(), 0.0);
        let r = singular_residuals(&p("u*conj(u)"), Complex::new(1.0, 0.0), Complex::zero());
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn structure_examples() {
        let s = classify_structure(&p("u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)"));
        assert!(s.u_semiholomorphic && s.convenient && !s.holomorphic);
        let s = classify_structure(&p("u^4 - u^2*v^3"));
        assert!(s.u_convenient && !s.v_convenient);
        assert!(classify_structure(&p("u^2 - v^3")).holomorphic);
    }

    #[test]
    fn residual_polys_are_real_where_expected() {
        let f = p("u^3*conj(v) + (2+3i)*conj(u)*v^2 - 5*v*conj(v)");
        let [_, s2, s3] = residual_polys(&f);
        assert_eq!(s2, s2.conj());
        assert_eq!(s3, s3.conj());
    }
}

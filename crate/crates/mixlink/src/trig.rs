//! Laurent trigonometric polynomials `Σ c_k e^{ikt}` and polynomials in `u, ū` whose
//! coefficients are such trigonometric polynomials.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::gauss::GaussRat;
use crate::mixedpoly::MixedPoly;
use crate::scalar::{cis, cpow, Coeff, Real};

/// `Σ_k c_k e^{ikt}` with finitely many non-zero `c_k`.
#[derive(Clone, PartialEq, Debug)]
pub struct TrigPoly<K: Coeff = GaussRat> {
    coeffs: BTreeMap<i64, K>,
}

impl<K: Coeff> Default for TrigPoly<K> {
    fn default() -> Self {
        TrigPoly { coeffs: BTreeMap::new() }
    }
}

impl<K: Coeff> TrigPoly<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: K) -> Self {
        Self::term(0, c)
    }

    pub fn term(freq: i64, c: K) -> Self {
        let mut t = Self::zero();
        t.add_term(freq, c);
        t
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, K)>>(it: I) -> Self {
        let mut t = Self::zero();
        for (k, c) in it {
            t.add_term(k, c);
        }
        t
    }

    pub fn add_term(&mut self, freq: i64, c: K) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&freq) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.coeffs.insert(freq, sum);
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, K> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_freq(&self) -> i64 {
        self.coeffs.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &o.coeffs {
            out.add_term(*k, c.clone());
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (k1, c1) in &self.coeffs {
            for (k2, c2) in &o.coeffs {
                out.add_term(k1 + k2, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &K) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, x)| (*k, x.clone() * c.clone())))
    }

    /// The pointwise complex conjugate `t ↦ conj(p(t))`.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, c)| (-k, c.conj())))
    }

    /// `t ↦ p(n t)`.
    pub fn power(&self, n: i64) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, c)| (k * n, c.clone())))
    }

    pub fn eval<F: Real>(&self, t: F) -> Complex<F> {
        let mut acc = Complex::new(F::zero(), F::zero());
        for (k, c) in &self.coeffs {
            acc = acc + c.to_complex::<F>() * cis(t * F::from_i64(*k).unwrap());
        }
        acc
    }

    /// `d/dt p(t)`.
    pub fn eval_dt<F: Real>(&self, t: F) -> Complex<F> {
        let mut acc = Complex::new(F::zero(), F::zero());
        for (k, c) in &self.coeffs {
            let kf = F::from_i64(*k).unwrap();
            acc = acc + c.to_complex::<F>() * Complex::new(F::zero(), kf) * cis(t * kf);
        }
        acc
    }

    /// `Σ |c_k|`, a bound on `|p|`.
    pub fn l1(&self) -> f64 {
        self.coeffs.values().map(|c| c.modulus()).sum()
    }

    /// `Σ |k| |c_k|`, a Lipschitz constant of `p` in `t`.
    pub fn lipschitz(&self) -> f64 {
        self.coeffs.iter().map(|(k, c)| k.unsigned_abs() as f64 * c.modulus()).sum()
    }

    pub fn map_coeffs<L: Coeff, G: Fn(&K) -> L>(&self, g: G) -> TrigPoly<L> {
        TrigPoly::from_terms(self.coeffs.iter().map(|(k, c)| (*k, g(c))))
    }
}

impl fmt::Display for TrigPoly<GaussRat> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                _ => format!("({c})e^{{{k}it}}"),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Which solid torus a loop polynomial lives on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// Variable `u ∈ C`, angle `t` of `v`.
    #[serde(rename = "CxS1")]
    CxS1,
    /// Angle `φ` of `u`, variable `v ∈ C`.
    #[serde(rename = "S1xC")]
    S1xC,
}

/// `Σ_{a,b} c_{a,b}(t) z^a z̄^b` with trigonometric coefficients, where `z` is the chart
/// variable (`u` on `C×S¹`, `v` on `S¹×C`).
#[derive(Clone, PartialEq, Debug)]
pub struct LoopPoly<K: Coeff = GaussRat> {
    pub chart: Chart,
    coeffs: BTreeMap<(u32, u32), TrigPoly<K>>,
}

impl<K: Coeff> LoopPoly<K> {
    pub fn zero(chart: Chart) -> Self {
        LoopPoly { chart, coeffs: BTreeMap::new() }
    }

    pub fn add_term(&mut self, a: u32, b: u32, freq: i64, c: K) {
        let entry = self.coeffs.entry((a, b)).or_default();
        entry.add_term(freq, c);
        if entry.is_zero() {
            self.coeffs.remove(&(a, b));
        }
    }

    pub fn add_trig(&mut self, a: u32, b: u32, t: &TrigPoly<K>) {
        for (k, c) in t.coeffs() {
            self.add_term(a, b, *k, c.clone());
        }
    }

    /// Holomorphic loop `Σ_j c_j(t) z^j`.
    pub fn from_coefficients(chart: Chart, cs: Vec<TrigPoly<K>>) -> Self {
        let mut out = Self::zero(chart);
        for (j, c) in cs.iter().enumerate() {
            out.add_trig(j as u32, 0, c);
        }
        out
    }

    /// The profile of a radially weighted homogeneous face function on the chart's torus:
    /// on `C×S¹` a term `c u^a ū^b v^c v̄^d` becomes `c e^{i(c−d)t} u^a ū^b`, on `S¹×C` it
    /// becomes `c e^{i(a−b)φ} v^c v̄^d`.
    pub fn from_face(face: &MixedPoly<K>, chart: Chart) -> Self {
        let mut out = Self::zero(chart);
        for (m, c) in face.iter() {
            match chart {
                Chart::CxS1 => out.add_term(m.u, m.ubar, m.v as i64 - m.vbar as i64, c.clone()),
                Chart::S1xC => out.add_term(m.v, m.vbar, m.u as i64 - m.ubar as i64, c.clone()),
            }
        }
        out
    }

    pub fn coeffs(&self) -> &BTreeMap<(u32, u32), TrigPoly<K>> {
        &self.coeffs
    }

    pub fn coeff(&self, a: u32, b: u32) -> Option<&TrigPoly<K>> {
        self.coeffs.get(&(a, b))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// No `z̄` dependence.
    pub fn is_semiholomorphic(&self) -> bool {
        self.coeffs.keys().all(|&(_, b)| b == 0)
    }

    /// Largest total degree `a + b`.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    /// Smallest total degree `a + b` (the multiplicity of the zero strand).
    pub fn low_degree(&self) -> u32 {
        self.coeffs.keys().map(|(a, b)| a + b).min().unwrap_or(0)
    }

    pub fn max_freq(&self) -> i64 {
        self.coeffs.values().map(|t| t.max_freq()).max().unwrap_or(0)
    }

    /// `t ↦ g(z, e^{int})`.
    pub fn power(&self, n: i64) -> Self {
        LoopPoly { chart: self.chart, coeffs: self.coeffs.iter().map(|(k, t)| (*k, t.power(n))).collect() }
    }

    /// `z^m g`.
    pub fn shift(&self, m: u32) -> Self {
        LoopPoly { chart: self.chart, coeffs: self.coeffs.iter().map(|((a, b), t)| ((a + m, *b), t.clone())).collect() }
    }

    /// Holomorphic coefficient list `c_0(t), …, c_deg(t)`.
    pub fn holomorphic_coefficients(&self) -> Vec<TrigPoly<K>> {
        let d = self.degree() as usize;
        let mut out = vec![TrigPoly::zero(); d + 1];
        for ((a, _), t) in &self.coeffs {
            out[*a as usize] = t.clone();
        }
        out
    }

    /// Numeric coefficients of the holomorphic loop at angle `t`.
    pub fn coefficients_at<F: Real>(&self, t: F) -> Vec<Complex<F>> {
        let d = self.degree() as usize;
        let mut out = vec![Complex::zero(); d + 1];
        for ((a, _), c) in &self.coeffs {
            out[*a as usize] = out[*a as usize] + c.eval(t);
        }
        out
    }

    /// `∂_t` of the numeric coefficients at angle `t`.
    pub fn coefficients_dt_at<F: Real>(&self, t: F) -> Vec<Complex<F>> {
        let d = self.degree() as usize;
        let mut out = vec![Complex::zero(); d + 1];
        for ((a, _), c) in &self.coeffs {
            out[*a as usize] = out[*a as usize] + c.eval_dt(t);
        }
        out
    }

    pub fn eval<F: Real>(&self, z: Complex<F>, t: F) -> Complex<F> {
        let mut acc = Complex::new(F::zero(), F::zero());
        for ((a, b), c) in &self.coeffs {
            acc = acc + c.eval(t) * cpow(z, *a) * cpow(z.conj(), *b);
        }
        acc
    }

    pub fn eval_dt<F: Real>(&self, z: Complex<F>, t: F) -> Complex<F> {
        let mut acc = Complex::new(F::zero(), F::zero());
        for ((a, b), c) in &self.coeffs {
            acc = acc + c.eval_dt(t) * cpow(z, *a) * cpow(z.conj(), *b);
        }
        acc
    }

    /// `(∂_z g, ∂_z̄ g)` at a point.
    pub fn eval_dz<F: Real>(&self, z: Complex<F>, t: F) -> (Complex<F>, Complex<F>) {
        let mut dz = Complex::new(F::zero(), F::zero());
        let mut dzb = Complex::new(F::zero(), F::zero());
        for ((a, b), c) in &self.coeffs {
            let ct = c.eval(t);
            if *a > 0 {
                dz = dz + ct * F::from_u32(*a).unwrap() * cpow(z, a - 1) * cpow(z.conj(), *b);
            }
            if *b > 0 {
                dzb = dzb + ct * F::from_u32(*b).unwrap() * cpow(z, *a) * cpow(z.conj(), b - 1);
            }
        }
        (dz, dzb)
    }

    pub fn map_coeffs<L: Coeff, G: Fn(&K) -> L + Copy>(&self, g: G) -> LoopPoly<L> {
        LoopPoly { chart: self.chart, coeffs: self.coeffs.iter().map(|(k, t)| (*k, t.map_coeffs(g))).collect() }
    }

    /// Back to a mixed polynomial restricted to `r = 1`: the inverse of [`LoopPoly::from_face`]
    /// is not unique, so this only exposes the monomial data.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, i64, &K)> {
        self.coeffs.iter().flat_map(|((a, b), t)| t.coeffs().iter().map(move |(k, c)| (*a, *b, *k, c)))
    }
}

impl fmt::Display for LoopPoly<GaussRat> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let (z, zb, ang) = match self.chart {
            Chart::CxS1 => ("u", "conj(u)", "t"),
            Chart::S1xC => ("v", "conj(v)", "phi"),
        };
        let mut parts = Vec::new();
        for ((a, b), t) in self.coeffs.iter().rev() {
            for (k, c) in t.coeffs() {
                let mut s = format!("({c})");
                if *k != 0 {
                    s.push_str(&format!("*e^({k}i{ang})"));
                }
                if *a > 0 {
                    s.push_str(&format!("*{z}^{a}"));
                }
                if *b > 0 {
                    s.push_str(&format!("*{zb}^{b}"));
                }
                parts.push(s);
            }
        }
        f.write_str(&parts.join(" + "))
    }
}

/// JSON shape of a loop polynomial: a list of `{z, zbar, trig: {freq: coefficient}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopTermJson {
    pub z: u32,
    pub zbar: u32,
    pub trig: BTreeMap<i64, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPolyJson {
    pub chart: Chart,
    pub terms: Vec<LoopTermJson>,
}

impl Serialize for LoopPoly<GaussRat> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms = self
            .coeffs
            .iter()
            .map(|((a, b), t)| LoopTermJson {
                z: *a,
                zbar: *b,
                trig: t.coeffs().iter().map(|(k, c)| (*k, c.to_string())).collect(),
            })
            .collect();
        LoopPolyJson { chart: self.chart, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LoopPoly<GaussRat> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = LoopPolyJson::deserialize(d)?;
        let mut out = LoopPoly::zero(j.chart);
        for term in j.terms {
            for (k, c) in term.trig {
                let c = crate::expr::parse_coefficient(&c).map_err(serde::de::Error::custom)?;
                out.add_term(term.z, term.zbar, k, c);
            }
        }
        Ok(out)
    }
}

//! Geometric braids traced by the roots of loops of polynomials `g(·, e^{it})`, their
//! Artin words, P-fibered certificates, and trigonometric representatives of words.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss::GaussRat;
use crate::roots::{aberth, derivative, horner, horner_with_derivative, polish, trim, RootError};
use crate::scalar::{cis, Coeff, Real};
use crate::status::Status;
use crate::trig::{Chart, LoopPoly, TrigPoly};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BraidError {
    #[error("leading coefficient vanishes at t = {t}")]
    LeadingCoefficientVanishes { t: f64 },
    #[error("strands collide near t = {t}")]
    StrandCollision { t: f64 },
    #[error("loop depends on the conjugate variable; use the zero-set tracer")]
    NonSemiholomorphic,
    #[error("projection is not generic (simultaneous or tangential crossing)")]
    NonGenericProjection,
    #[error("word and tracked permutation disagree; sampling is too coarse")]
    WordPermutationMismatch,
    #[error("endpoints of the strands do not match up")]
    EndpointMismatch,
    #[error("fitted representative reads as {got}, expected {expected}; raise the harmonics")]
    FidelityLoss { expected: BraidWord, got: BraidWord },
    #[error("invalid braid word: {0}")]
    InvalidWord(String),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// A word in the Artin generators; `j` stands for `σ_j`, `-j` for `σ_j^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    pub letters: Vec<i32>,
    pub strands: usize,
}

impl BraidWord {
    pub fn new(letters: Vec<i32>, strands: usize) -> Result<Self, BraidError> {
        if strands == 0 {
            return Err(BraidError::InvalidWord("a braid has at least one strand".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l.unsigned_abs() as usize >= strands) {
            return Err(BraidError::InvalidWord(format!("generator {bad} on {strands} strands")));
        }
        Ok(BraidWord { letters, strands })
    }

    pub fn empty(strands: usize) -> Self {
        BraidWord { letters: Vec::new(), strands: strands.max(1) }
    }

    /// Parses whitespace-separated signed generators; `strands` defaults to one more than the
    /// largest generator.
    pub fn parse(text: &str, strands: Option<usize>) -> Result<Self, BraidError> {
        let letters = text
            .split_whitespace()
            .map(|tok| tok.parse::<i32>().map_err(|_| BraidError::InvalidWord(format!("bad letter {tok:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let need = letters.iter().map(|l| l.unsigned_abs() as usize + 1).max().unwrap_or(1);
        Self::new(letters, strands.unwrap_or(need))
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `perm[p]` is the final position of the strand starting at position `p` (0-based).
    pub fn permutation(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.strands).collect();
        for l in &self.letters {
            let j = l.unsigned_abs() as usize;
            order.swap(j - 1, j);
        }
        let mut perm = vec![0; self.strands];
        for (q, &s) in order.iter().enumerate() {
            perm[s] = q;
        }
        perm
    }

    /// Components of the closure.
    pub fn components(&self) -> usize {
        cycle_count(&self.permutation())
    }

    pub fn inverse(&self) -> Self {
        BraidWord { letters: self.letters.iter().rev().map(|l| -l).collect(), strands: self.strands }
    }

    pub fn power(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut letters = Vec::with_capacity(base.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            letters.extend_from_slice(&base.letters);
        }
        BraidWord { letters, strands: self.strands }
    }

    pub fn exponent_sum(&self) -> i64 {
        self.letters.iter().map(|l| l.signum() as i64).sum()
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for BraidWord {
    type Err = BraidError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, None)
    }
}

pub fn cycle_count(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut count = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
        }
    }
    count
}

/// Strand curves sampled at `t_k = 2πk/samples`, `k = 0..=samples`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricBraid<F: Real> {
    pub strands: Vec<Vec<Complex<F>>>,
    /// `u_j(2π) = u_{π(j)}(0)`.
    pub permutation: Vec<usize>,
    /// No strand passes through `0`.
    pub affine: bool,
    pub samples: usize,
    /// Multiplicity of the root `u = 0` removed before tracking.
    pub zero_multiplicity: u32,
}

pub type Braid64 = GeometricBraid<f64>;

impl<F: Real> GeometricBraid<F> {
    pub fn strand_count(&self) -> usize {
        self.strands.len()
    }

    pub fn t(&self, k: usize) -> F {
        F::lit(2.0 * PI * k as f64 / self.samples as f64)
    }

    /// Closure components.
    pub fn components(&self) -> usize {
        cycle_count(&self.permutation)
    }

    /// `π` in terms of positions ordered by real part at `t = 0`.
    pub fn position_permutation(&self) -> Vec<usize> {
        let order = start_order(&self.strands, Complex::new(F::one(), F::zero()));
        let mut pos = vec![0; order.len()];
        for (p, &j) in order.iter().enumerate() {
            pos[j] = p;
        }
        let mut perm = vec![0; order.len()];
        for j in 0..order.len() {
            perm[pos[j]] = pos[self.permutation[j]];
        }
        perm
    }

    pub fn scaled(&self, factor: F) -> Self {
        GeometricBraid {
            strands: self.strands.iter().map(|s| s.iter().map(|z| *z * factor).collect()).collect(),
            ..self.clone()
        }
    }

    /// Smallest distance between two strands over all samples.
    pub fn min_separation(&self) -> F {
        let mut best = F::infinity();
        for k in 0..=self.samples {
            for a in 0..self.strands.len() {
                for b in a + 1..self.strands.len() {
                    best = best.min((self.strands[a][k] - self.strands[b][k]).norm());
                }
            }
        }
        best
    }

    pub fn min_modulus(&self) -> F {
        self.strands.iter().flatten().map(|z| z.norm()).fold(F::infinity(), F::min)
    }

    pub fn max_modulus(&self) -> F {
        self.strands.iter().flatten().map(|z| z.norm()).fold(F::zero(), F::max)
    }

    /// Disjoint union of braids sampled on the same grid.
    pub fn union(parts: &[GeometricBraid<F>]) -> Self {
        let samples = parts.first().map(|b| b.samples).unwrap_or(0);
        let mut strands = Vec::new();
        let mut permutation = Vec::new();
        let mut affine = true;
        for b in parts {
            assert_eq!(b.samples, samples, "braids must share the sampling grid");
            let base = strands.len();
            strands.extend(b.strands.iter().cloned());
            permutation.extend(b.permutation.iter().map(|p| p + base));
            affine &= b.affine;
        }
        GeometricBraid { strands, permutation, affine, samples, zero_multiplicity: 0 }
    }

    /// `|g(u, e^{it_k}) − lead(t_k) Π (u − u_j(t_k))|` at a probe point, for the loop that
    /// produced this braid.
    pub fn reconstruction_error<K: Coeff>(&self, g: &LoopPoly<K>, k: usize, u: Complex<F>) -> F {
        let t = self.t(k);
        let cs = g.coefficients_at(t);
        let lead = cs[cs.len() - 1];
        let mut prod = lead;
        for _ in 0..self.zero_multiplicity {
            prod = prod * u;
        }
        for s in &self.strands {
            prod = prod * (u - s[k]);
        }
        (horner(&cs, u) - prod).norm()
    }
}

/// Numeric snapshot of a holomorphic loop: per power of `u`, its `(freq, coeff)` list.
#[derive(Clone, Debug)]
pub(crate) struct NumLoop<F: Real> {
    coeffs: Vec<Vec<(F, Complex<F>)>>,
}

impl<F: Real> NumLoop<F> {
    pub(crate) fn new<K: Coeff>(g: &LoopPoly<K>, skip: u32) -> Self {
        let hc = g.holomorphic_coefficients();
        let coeffs = hc
            .iter()
            .skip(skip as usize)
            .map(|t| t.coeffs().iter().map(|(k, c)| (F::from_i64(*k).unwrap(), c.to_complex::<F>())).collect())
            .collect();
        NumLoop { coeffs }
    }

    pub(crate) fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub(crate) fn at(&self, t: F) -> Vec<Complex<F>> {
        self.coeffs.iter().map(|ts| ts.iter().map(|(k, c)| *c * cis(*k * t)).fold(Complex::new(F::zero(), F::zero()), |a, b| a + b)).collect()
    }

    pub(crate) fn at_dt(&self, t: F) -> Vec<Complex<F>> {
        self.coeffs
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|(k, c)| *c * Complex::new(F::zero(), *k) * cis(*k * t))
                    .fold(Complex::new(F::zero(), F::zero()), |a, b| a + b)
            })
            .collect()
    }

    fn lead_l1(&self) -> F {
        self.coeffs.last().map(|ts| ts.iter().map(|(_, c)| c.norm()).fold(F::zero(), |a, b| a + b)).unwrap_or(F::zero())
    }
}

fn min_dist<F: Real>(zs: &[Complex<F>], i: usize) -> F {
    zs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, z)| (zs[i] - z).norm()).fold(F::infinity(), F::min)
}

/// Leading coefficient scan: the `t` of its smallest modulus on a fine grid, if negligible.
fn leading_vanishes<F: Real>(nl: &NumLoop<F>, samples: usize) -> Option<f64> {
    let lead = nl.coeffs.last()?;
    if lead.len() <= 1 {
        return None;
    }
    let l1 = nl.lead_l1();
    let n = 8 * samples.max(64);
    let mut best = (F::infinity(), 0.0);
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        let v = nl.at(F::lit(t))[nl.degree()].norm();
        if v < best.0 {
            best = (v, t);
        }
    }
    (best.0 <= F::lit(1e-9) * l1).then_some(best.1)
}

fn newton_correct<F: Real>(c: &[Complex<F>], z0: Complex<F>, tol: F) -> Option<Complex<F>> {
    let mut z = z0;
    for _ in 0..8 {
        let (p, dp) = horner_with_derivative(c, z);
        if dp.norm() == F::zero() {
            return None;
        }
        let step = p / dp;
        z = z - step;
        if step.norm() <= tol * (F::one() + z.norm()) {
            return Some(z);
        }
    }
    None
}

/// Continues the roots from `t` to `t + h`; `None` asks for a smaller step.
fn advance<F: Real>(nl: &NumLoop<F>, roots: &[Complex<F>], t: F, h: F, tol: F) -> Option<Vec<Complex<F>>> {
    let c = nl.at(t);
    let ct = nl.at_dt(t);
    let c_new = nl.at(t + h);
    let mut out = Vec::with_capacity(roots.len());
    for (i, &z) in roots.iter().enumerate() {
        let (_, gu) = horner_with_derivative(&c, z);
        let gt = horner(&ct, z);
        if gu.norm() == F::zero() {
            return None;
        }
        let pred = z - gt / gu * h;
        let corr = newton_correct(&c_new, pred, tol)?;
        let gap = min_dist(roots, i);
        let moved = (corr - z).norm();
        if gap.is_finite() && (moved > F::lit(0.3) * gap || (corr - pred).norm() > F::lit(0.1) * gap) {
            return None;
        }
        if !gap.is_finite() && moved > F::lit(0.3) * (F::one() + z.norm()) {
            return None;
        }
        out.push(corr);
    }
    for i in 0..out.len() {
        if min_dist(&out, i) <= F::lit(10.0) * tol * (F::one() + out[i].norm()) {
            return None;
        }
    }
    Some(out)
}

/// Traces the roots of `g(·, e^{it})` (with the root `0` of multiplicity `low_degree(g)`
/// removed) over `t ∈ [0, 2π]`.
pub fn track_roots<F: Real, K: Coeff>(g: &LoopPoly<K>, samples: usize) -> Result<GeometricBraid<F>, BraidError> {
    if !g.is_semiholomorphic() {
        return Err(BraidError::NonSemiholomorphic);
    }
    let m = g.low_degree();
    let nl = NumLoop::<F>::new(g, m);
    let samples = samples.max(8);
    if let Some(t) = leading_vanishes(&nl, samples) {
        return Err(BraidError::LeadingCoefficientVanishes { t });
    }
    let tol = F::epsilon() * F::lit(1e3);
    let c0 = nl.at(F::zero());
    let mut roots: Vec<Complex<F>> = aberth(&c0)?.into_iter().map(|z| polish(&c0, z, 4)).collect();
    let s = roots.len();
    let mut strands: Vec<Vec<Complex<F>>> = roots.iter().map(|&z| vec![z]).collect();
    for i in 0..s {
        if min_dist(&roots, i) <= F::lit(10.0) * tol * (F::one() + roots[i].norm()) {
            return Err(BraidError::StrandCollision { t: 0.0 });
        }
    }
    let dt = F::lit(2.0 * PI / samples as f64);
    let hmin = dt * F::lit(2f64.powi(-20));
    let mut t = F::zero();
    let mut h = dt;
    for k in 0..samples {
        let target = F::lit(2.0 * PI * (k + 1) as f64 / samples as f64);
        while t < target {
            let step = h.min(target - t);
            match advance(&nl, &roots, t, step, tol) {
                Some(next) => {
                    roots = next;
                    t = if step == target - t { target } else { t + step };
                    h = (h + h).min(dt);
                }
                None => {
                    h = step / F::lit(2.0);
                    if h < hmin {
                        return Err(BraidError::StrandCollision { t: t.to_f64().unwrap_or(f64::NAN) });
                    }
                }
            }
        }
        for (j, z) in roots.iter().enumerate() {
            strands[j].push(*z);
        }
    }
    let scale = F::one() + strands.iter().flatten().map(|z| z.norm()).fold(F::zero(), F::max);
    let mut permutation = vec![usize::MAX; s];
    let mut used = vec![false; s];
    for j in 0..s {
        let end = strands[j][samples];
        let (i, d) = (0..s)
            .map(|i| (i, (strands[i][0] - end).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .ok_or(BraidError::EndpointMismatch)?;
        if used[i] || d > F::lit(1e-6) * scale {
            return Err(BraidError::EndpointMismatch);
        }
        used[i] = true;
        permutation[j] = i;
    }
    let floor = F::lit(1e-9) * scale;
    let affine = strands.iter().flatten().all(|z| z.norm() > floor);
    Ok(GeometricBraid { strands, permutation, affine, samples, zero_multiplicity: m })
}

fn start_order<F: Real>(strands: &[Vec<Complex<F>>], rot: Complex<F>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..strands.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = (strands[a][0] * rot).re;
        let rb = (strands[b][0] * rot).re;
        ra.partial_cmp(&rb).unwrap_or(Ordering::Equal)
    });
    order
}

fn word_with_rotation<F: Real>(b: &GeometricBraid<F>, angle: f64) -> Result<BraidWord, BraidError> {
    let s = b.strands.len();
    if s <= 1 {
        return Ok(BraidWord::empty(s.max(1)));
    }
    let rot = cis(F::lit(angle));
    let pts: Vec<Vec<Complex<f64>>> = b
        .strands
        .iter()
        .map(|st| {
            st.iter()
                .map(|z| {
                    let w = *z * rot;
                    Complex::new(w.re.to_f64().unwrap_or(f64::NAN), w.im.to_f64().unwrap_or(f64::NAN))
                })
                .collect()
        })
        .collect();
    let mut order = start_order(&b.strands, rot);
    for w in order.windows(2) {
        let (za, zb) = (pts[w[0]][0], pts[w[1]][0]);
        if (zb.re - za.re).abs() <= 1e-12 * za.norm().max(zb.norm()) {
            return Err(BraidError::NonGenericProjection);
        }
    }
    let mut pos = vec![0usize; s];
    for (p, &j) in order.iter().enumerate() {
        pos[j] = p;
    }
    let mut letters = Vec::new();
    for k in 0..b.samples {
        let mut events: Vec<(f64, usize, usize, f64, f64)> = Vec::new();
        for a in 0..s {
            for c in a + 1..s {
                let d0 = pts[a][k].re - pts[c][k].re;
                let d1 = pts[a][k + 1].re - pts[c][k + 1].re;
                if (d0 < 0.0) != (d1 < 0.0) {
                    let tau = if d0 == d1 { 0.5 } else { (d0 / (d0 - d1)).clamp(0.0, 1.0) };
                    let ia = pts[a][k].im + tau * (pts[a][k + 1].im - pts[a][k].im);
                    let ic = pts[c][k].im + tau * (pts[c][k + 1].im - pts[c][k].im);
                    events.push((tau, a, c, ia, ic));
                }
            }
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (_, a, c, ia, ic) in events {
            let (pa, pc) = (pos[a], pos[c]);
            if pa.abs_diff(pc) != 1 {
                return Err(BraidError::NonGenericProjection);
            }
            let scale = pts[a][k].norm().max(pts[c][k].norm()).max(f64::MIN_POSITIVE);
            if (ia - ic).abs() <= 1e-9 * scale {
                return Err(BraidError::NonGenericProjection);
            }
            // `lo` is the strand moving from position j to j + 1.
            let (lo_im, hi_im, j) = if pa < pc { (ia, ic, pa) } else { (ic, ia, pc) };
            let sign = if lo_im < hi_im { 1 } else { -1 };
            letters.push(sign * (j as i32 + 1));
            order.swap(j, j + 1);
            pos[order[j]] = j;
            pos[order[j + 1]] = j + 1;
        }
    }
    let word = BraidWord { letters, strands: s };
    let start = start_order(&b.strands, rot);
    let mut start_pos = vec![0; s];
    for (p, &j) in start.iter().enumerate() {
        start_pos[j] = p;
    }
    let perm = word.permutation();
    for j in 0..s {
        if perm[start_pos[j]] != start_pos[b.permutation[j]] {
            return Err(BraidError::WordPermutationMismatch);
        }
    }
    Ok(word)
}

/// Reads the Artin word off a geometric braid by projecting onto the real axis. A crossing
/// is positive when the strand moving from position `j` to `j + 1` passes below, i.e. has
/// the smaller imaginary part; so counterclockwise exchanges are positive.
pub fn extract_word<F: Real>(b: &GeometricBraid<F>) -> Result<BraidWord, BraidError> {
    let angles = [0.0, 1.3e-3, -2.9e-3, 4.7e-3];
    let mut last = BraidError::NonGenericProjection;
    for a in angles {
        match word_with_rotation(b, a) {
            Ok(w) => return Ok(w),
            Err(e @ BraidError::NonGenericProjection) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Where a critical value vanishes or its argument stalls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibrationWitness {
    pub t: f64,
    pub u: Complex<f64>,
    pub value: Complex<f64>,
    pub arg_derivative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibrationCertificate {
    pub m: u32,
    /// `min |∂ arg h(c_j(t)) / ∂t|`; absent when `h` has no critical points off the core.
    pub min_arg_derivative: Option<f64>,
    /// `+1` or `-1` when every sampled derivative has that sign, `0` otherwise.
    pub sign: i32,
    pub samples: usize,
    /// Largest disagreement between the analytic derivative and central differences.
    pub fd_error: f64,
    pub status: Status,
    pub witness: Option<FibrationWitness>,
}

/// Critical points of `h = u^m g` at angle `t`, omitting the core `u = 0` when `m ≥ 1`.
fn critical_points<F: Real>(c: &[Complex<F>], m: u32) -> Result<Vec<Complex<F>>, RootError> {
    if m == 0 {
        let d = derivative(c);
        let d = trim(&d, F::zero());
        if d.len() <= 1 {
            return Ok(Vec::new());
        }
        Ok(aberth(d)?.into_iter().map(|z| polish(d, z, 3)).collect())
    } else {
        let mf = F::from_u32(m).unwrap();
        let q: Vec<Complex<F>> = c.iter().enumerate().map(|(k, a)| *a * (mf + F::from_usize(k).unwrap())).collect();
        if q.len() <= 1 {
            return Ok(Vec::new());
        }
        Ok(aberth(&q)?.into_iter().map(|z| polish(&q, z, 3)).collect())
    }
}

fn h_value<F: Real>(c: &[Complex<F>], ct: &[Complex<F>], m: u32, z: Complex<F>) -> (Complex<F>, Complex<F>) {
    let zm = crate::scalar::cpow(z, m);
    (horner(c, z) * zm, horner(ct, z) * zm)
}

/// `∂_t arg h(c_j(t))` for every critical point `c_j` of `h = u^m g(·, e^{it})` off the core.
pub(crate) fn critical_arg_derivatives<K: Coeff>(g: &LoopPoly<K>, m: u32, t: f64) -> Result<Vec<f64>, BraidError> {
    let nl = NumLoop::<f64>::new(g, 0);
    let c = nl.at(t);
    let ct = nl.at_dt(t);
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut out = Vec::new();
    for z in critical_points(&c, m)? {
        if m > 0 && z.norm() <= 1e-12 {
            continue;
        }
        let (h, ht) = h_value(&c, &ct, m, z);
        if h.norm() <= 1e-14 * scale {
            out.push(0.0);
        } else {
            out.push((ht / h).im);
        }
    }
    Ok(out)
}

/// Certifies that `arg(u^m g)` fibres `(C × S¹) ∖ (B ∪ core)` over the circle by checking
/// that the arguments of the critical values move monotonically.
pub fn check_pfibered<F: Real, K: Coeff>(g: &LoopPoly<K>, m: u32, samples: usize) -> Result<FibrationCertificate, BraidError> {
    if !g.is_semiholomorphic() {
        return Err(BraidError::NonSemiholomorphic);
    }
    let nl = NumLoop::<F>::new(g, 0);
    let samples = samples.max(8);
    if let Some(t) = leading_vanishes(&nl, samples) {
        return Err(BraidError::LeadingCoefficientVanishes { t });
    }
    let mut min_d = f64::INFINITY;
    let mut any_pos = false;
    let mut any_neg = false;
    let mut witness: Option<FibrationWitness> = None;
    let mut refuted = false;
    let mut prev: Vec<(Complex<f64>, f64)> = Vec::new();
    let zero_tol = 1e-10;
    let to64 = |z: Complex<F>| Complex::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN));
    for k in 0..samples {
        let t = F::lit(2.0 * PI * k as f64 / samples as f64);
        let c = nl.at(t);
        let ct = nl.at_dt(t);
        let cps = critical_points(&c, m)?;
        let mut cur = Vec::with_capacity(cps.len());
        for z in cps {
            let (h, ht) = h_value(&c, &ct, m, z);
            let scale: F = c.iter().enumerate().map(|(j, a)| a.norm() * z.norm().powi(j as i32 + m as i32)).fold(F::zero(), |a, b| a + b);
            let hv = to64(h);
            if h.norm() <= F::lit(1e-12) * scale.max(F::min_positive_value()) {
                refuted = true;
                witness.get_or_insert(FibrationWitness { t: t.to_f64().unwrap(), u: to64(z), value: hv, arg_derivative: f64::NAN });
                continue;
            }
            let d = (ht / h).im.to_f64().unwrap_or(f64::NAN);
            if d.abs() < min_d {
                min_d = d.abs();
            }
            if d.abs() <= zero_tol {
                refuted = true;
                witness.get_or_insert(FibrationWitness { t: t.to_f64().unwrap(), u: to64(z), value: hv, arg_derivative: d });
            }
            any_pos |= d > 0.0;
            any_neg |= d < 0.0;
            cur.push((to64(z), d));
        }
        if any_pos && any_neg && !prev.is_empty() && !refuted {
            for &(z, d) in &cur {
                if let Some(&(_, dp)) = prev.iter().min_by(|a, b| (a.0 - z).norm().total_cmp(&(b.0 - z).norm())) {
                    if (d > 0.0) != (dp > 0.0) {
                        refuted = true;
                        witness.get_or_insert(FibrationWitness { t: t.to_f64().unwrap(), u: z, value: Complex::new(f64::NAN, f64::NAN), arg_derivative: d });
                    }
                }
            }
        }
        prev = cur;
    }
    let fd_error = finite_difference_error(&nl, m, samples);
    let has_cps = min_d.is_finite();
    let status = if refuted {
        Status::Refuted
    } else if !has_cps || min_d > 10.0 * fd_error + 1e-9 {
        Status::Verified
    } else {
        Status::Inconclusive
    };
    let sign = match (any_pos, any_neg) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    };
    Ok(FibrationCertificate { m, min_arg_derivative: has_cps.then_some(min_d), sign, samples, fd_error, status, witness })
}

/// Central-difference cross-check of `∂ arg h(c(t))/∂t` at up to 64 sample angles.
fn finite_difference_error<F: Real>(nl: &NumLoop<F>, m: u32, samples: usize) -> f64 {
    let n = samples.min(64);
    let delta = 1e-5;
    let mut err = 0.0f64;
    for i in 0..n {
        let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
        let c = nl.at(F::lit(t));
        let ct = nl.at_dt(F::lit(t));
        let Ok(cps) = critical_points(&c, m) else { continue };
        let cp = nl.at(F::lit(t + delta));
        let cm = nl.at(F::lit(t - delta));
        let q = |cs: &[Complex<F>]| -> Vec<Complex<F>> {
            if m == 0 {
                derivative(cs)
            } else {
                let mf = F::from_u32(m).unwrap();
                cs.iter().enumerate().map(|(k, a)| *a * (mf + F::from_usize(k).unwrap())).collect()
            }
        };
        let (qp, qm) = (q(&cp), q(&cm));
        for z in cps {
            let (h, ht) = h_value(&c, &ct, m, z);
            if h.norm() == F::zero() {
                continue;
            }
            let analytic = (ht / h).im.to_f64().unwrap_or(0.0);
            let zp = polish(&qp, z, 4);
            let zm = polish(&qm, z, 4);
            let hp = h_value(&cp, &ct, m, zp).0;
            let hm = h_value(&cm, &ct, m, zm).0;
            let mut dphi = (hp / hm).arg().to_f64().unwrap_or(0.0);
            if dphi > PI {
                dphi -= 2.0 * PI;
            }
            let fd = dphi / (2.0 * delta);
            err = err.max((fd - analytic).abs());
        }
    }
    err
}

/// Position of every strand at time `τ ∈ [0, 2π]` along a concatenation of half-turn
/// exchanges on equally spaced basepoints.
fn piecewise_positions(w: &BraidWord, base: &[f64], tau: f64) -> Vec<Complex<f64>> {
    let s = w.strands;
    let n = w.letters.len();
    let mut order: Vec<usize> = (0..s).collect();
    let mut pos: Vec<Complex<f64>> = base.iter().map(|&x| Complex::new(x, 0.0)).collect();
    if n == 0 {
        return pos;
    }
    let seg = 2.0 * PI / n as f64;
    let idx = ((tau / seg).floor() as usize).min(n - 1);
    for l in &w.letters[..idx] {
        let j = l.unsigned_abs() as usize;
        order.swap(j - 1, j);
    }
    for (p, &st) in order.iter().enumerate() {
        pos[st] = Complex::new(base[p], 0.0);
    }
    let l = w.letters[idx];
    let j = l.unsigned_abs() as usize;
    let frac = ((tau - idx as f64 * seg) / seg).clamp(0.0, 1.0);
    let dir = if l > 0 { 1.0 } else { -1.0 };
    let (left, right) = (order[j - 1], order[j]);
    let mid = 0.5 * (base[j - 1] + base[j]);
    let rad = 0.5 * (base[j] - base[j - 1]);
    pos[left] = Complex::new(mid, 0.0) + cis(PI + dir * PI * frac) * rad;
    pos[right] = Complex::new(mid, 0.0) + cis(dir * PI * frac) * rad;
    pos
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// A trigonometric representative of `w` and the loop `g = Π (u − u_j(t))` it bounds.
/// Exchanges are constant-speed half turns; each closed strand cycle is low-pass filtered
/// to `harmonics` Fourier modes.
pub fn braid_from_word(w: &BraidWord, harmonics: usize, affine_offset: bool, samples: usize) -> Result<(Braid64, LoopPoly<GaussRat>), BraidError> {
    let w = BraidWord::new(w.letters.clone(), w.strands)?;
    let s = w.strands;
    // centered bases, kept off the origin so that no strand rests at `u = 0`
    let shift = if s % 2 == 1 { 0.25 } else { 0.0 };
    let base: Vec<f64> =
        (1..=s).map(|j| if affine_offset { j as f64 } else { j as f64 - (s as f64 + 1.0) / 2.0 + shift }).collect();
    let perm = w.permutation();
    // strand `st` starts at position `st`; follow cycles of the position permutation
    let mut seen = vec![false; s];
    let mut fits: Vec<(Vec<usize>, Vec<(i64, Complex<f64>)>)> = Vec::new();
    let mut planner = FftPlanner::<f64>::new();
    for start in 0..s {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            cycle.push(j);
            j = perm[j];
        }
        let c = cycle.len();
        let m = next_pow2((64 * c).max(16 * (2 * harmonics + 1)));
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|n| {
                let tau = 2.0 * PI * c as f64 * n as f64 / m as f64;
                let lap = ((tau / (2.0 * PI)).floor() as usize).min(c - 1);
                let local = tau - 2.0 * PI * lap as f64;
                piecewise_positions(&w, &base, local)[cycle[lap]]
            })
            .collect();
        planner.plan_fft_forward(m).process(&mut buf);
        let h = harmonics as i64;
        let modes: Vec<(i64, Complex<f64>)> = (-h..=h)
            .map(|k| {
                let idx = if k >= 0 { k as usize } else { m - (-k) as usize };
                (k, buf[idx] / m as f64)
            })
            .filter(|(_, a)| a.norm() > 1e-13)
            .collect();
        fits.push((cycle, modes));
    }
    // strand `cycle[ℓ]` is the cycle curve shifted by `2πℓ`, with modes of frequency `k/c`
    let strand_at = |t: f64| -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); s];
        for (cycle, modes) in &fits {
            let c = cycle.len() as f64;
            for (l, &st) in cycle.iter().enumerate() {
                let tau = t + 2.0 * PI * l as f64;
                out[st] = modes.iter().map(|(k, a)| a * cis(*k as f64 * tau / c)).sum();
            }
        }
        out
    };
    let fmax = s * harmonics + 1;
    let n = next_pow2((4 * fmax + 8).max(64));
    let mut esym: Vec<Vec<Complex<f64>>> = vec![Vec::with_capacity(n); s + 1];
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        let us = strand_at(t);
        let mut e = vec![Complex::new(0.0, 0.0); s + 1];
        e[0] = Complex::new(1.0, 0.0);
        for u in us {
            for k in (1..=s).rev() {
                e[k] = e[k] + e[k - 1] * u;
            }
        }
        for k in 0..=s {
            esym[k].push(e[k]);
        }
    }
    let mut coeffs: Vec<TrigPoly<GaussRat>> = vec![TrigPoly::zero(); s + 1];
    for k in 0..=s {
        let mut buf = esym[k].clone();
        planner.plan_fft_forward(n).process(&mut buf);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut tp = TrigPoly::zero();
        let lim = (n / 2 - 1) as i64;
        for f in -lim..=lim {
            let idx = if f >= 0 { f as usize } else { n - (-f) as usize };
            let a = buf[idx] / n as f64 * sign;
            if a.norm() > 1e-11 {
                tp.add_term(f, GaussRat::from_complex(a, 1e-12));
            }
        }
        // coefficient of u^{s-k}
        coeffs[s - k] = tp;
    }
    let g = LoopPoly::from_coefficients(Chart::CxS1, coeffs);
    let braid = track_roots::<f64, _>(&g, samples)?;
    let got = extract_word(&braid)?;
    if got != w {
        return Err(BraidError::FidelityLoss { expected: w, got });
    }
    Ok((braid, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GaussRat;

    fn lp(terms: &[(u32, i64, i64)]) -> LoopPoly<GaussRat> {
        let mut g = LoopPoly::zero(Chart::CxS1);
        for &(a, f, c) in terms {
            g.add_term(a, 0, f, GaussRat::int(c));
        }
        g
    }

    #[test]
    fn trefoil_loop() {
        let g = lp(&[(2, 0, 1), (0, 3, -1)]);
        let b = track_roots::<f64, _>(&g, 1024).unwrap();
        assert_eq!(b.strand_count(), 2);
        assert_eq!(b.permutation, vec![1, 0]);
        for k in [0, 100, 517, 1024] {
            let t = b.t(k);
            let r = cis(1.5 * t);
            for s in &b.strands {
                assert!((s[k] - r).norm() < 1e-9 || (s[k] + r).norm() < 1e-9);
            }
        }
        assert_eq!(extract_word(&b).unwrap(), BraidWord::new(vec![1, 1, 1], 2).unwrap());
    }

    #[test]
    fn single_strand_and_distant_strand() {
        let b = track_roots::<f64, _>(&lp(&[(1, 0, 1), (0, 1, -1)]), 256).unwrap();
        assert_eq!((b.strand_count(), b.permutation.clone()), (1, vec![0]));
        assert!(extract_word(&b).unwrap().is_empty());
        let two = track_roots::<f64, _>(&lp(&[(2, 0, 1), (0, 2, -1)]), 512).unwrap();
        let three = GeometricBraid {
            strands: vec![two.strands[0].clone(), two.strands[1].clone(), vec![Complex::new(3.0, 0.0); 513]],
            permutation: vec![0, 1, 2],
            ..two.clone()
        };
        assert_eq!(extract_word(&three).unwrap(), BraidWord::new(vec![1, 1], 3).unwrap());
    }

    #[test]
    fn leading_coefficient_check() {
        let mut g = lp(&[(0, 0, 1)]);
        g.add_term(1, 0, 1, GaussRat::int(1));
        g.add_term(1, 0, 0, GaussRat::int(1));
        assert!(matches!(track_roots::<f64, _>(&g, 64), Err(BraidError::LeadingCoefficientVanishes { .. })));
    }

    #[test]
    fn collision_is_reported() {
        // u² − (1 + cos t)/2 has a double root at t = π
        let mut g = lp(&[(2, 0, 1)]);
        g.add_term(0, 0, 0, GaussRat::ratio(-1, 2));
        g.add_term(0, 0, 1, GaussRat::ratio(-1, 4));
        g.add_term(0, 0, -1, GaussRat::ratio(-1, 4));
        assert!(matches!(track_roots::<f64, _>(&g, 64), Err(BraidError::StrandCollision { .. })));
    }

    #[test]
    fn pfibered_closed_forms() {
        let c = check_pfibered::<f64, _>(&lp(&[(2, 0, 1), (0, 2, -1)]), 0, 1024).unwrap();
        assert_eq!(c.status, Status::Verified);
        assert!((c.min_arg_derivative.unwrap() - 2.0).abs() < 1e-9);
        let c = check_pfibered::<f64, _>(&lp(&[(2, 0, 1), (0, 3, -1)]), 0, 1024).unwrap();
        assert!((c.min_arg_derivative.unwrap() - 3.0).abs() < 1e-9);
        let c = check_pfibered::<f64, _>(&lp(&[(2, 0, 1), (0, 0, -1)]), 0, 256).unwrap();
        assert_eq!(c.status, Status::Refuted);
        let c = check_pfibered::<f64, _>(&lp(&[(2, 0, 1), (1, 0, -2), (0, 0, 1)]), 0, 256).unwrap();
        assert_eq!(c.status, Status::Refuted);
    }

    #[test]
    fn word_algebra() {
        let w: BraidWord = "1 1 1".parse().unwrap();
        assert_eq!(w.strands, 2);
        assert_eq!(w.components(), 1);
        assert_eq!(w.power(2).components(), 2);
        assert_eq!(w.power(-1).to_string(), "-1 -1 -1");
        assert_eq!(BraidWord::parse("", Some(3)).unwrap().components(), 3);
        assert!(BraidWord::parse("3", Some(3)).is_err());
        assert!(BraidWord::parse("1 x", None).is_err());
    }

    #[test]
    fn words_round_trip_through_representatives() {
        for (text, s) in [("1", 2), ("1 1 1", 2), ("", 1), ("1 -2", 3), ("-1 2 2 1", 3)] {
            let w = BraidWord::parse(text, Some(s)).unwrap();
            let (b, g) = braid_from_word(&w, 16, false, 1024).unwrap();
            assert_eq!(extract_word(&b).unwrap(), w, "word {text}");
            assert_eq!(g.degree() as usize, s);
        }
        let (_, g) = braid_from_word(&BraidWord::parse("1", None).unwrap(), 16, false, 256).unwrap();
        assert_eq!(g, {
            let mut h = lp(&[(2, 0, 1)]);
            h.add_term(0, 0, 1, GaussRat::ratio(-1, 4));
            h
        });
    }
}

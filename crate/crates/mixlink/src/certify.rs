//! Non-vanishing certificates for systems of trigonometric polynomials on a torus `(S¹)^d`,
//! by adaptive subdivision with Lipschitz bounds read off the coefficients.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::mixedpoly::{MixedPoly, Monomial};
use crate::scalar::Coeff;

/// `Σ c_k e^{i⟨k, θ⟩}` on `(S¹)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiTrig {
    dim: usize,
    terms: Vec<(Vec<i64>, Complex<f64>)>,
}

impl MultiTrig {
    pub fn new(dim: usize, terms: Vec<(Vec<i64>, Complex<f64>)>) -> Self {
        let mut merged: Vec<(Vec<i64>, Complex<f64>)> = Vec::new();
        for (k, c) in terms {
            assert_eq!(k.len(), dim);
            match merged.iter_mut().find(|(j, _)| *j == k) {
                Some((_, a)) => *a += c,
                None => merged.push((k, c)),
            }
        }
        merged.retain(|(_, c)| c.norm() > 0.0);
        MultiTrig { dim, terms: merged }
    }

    /// Restriction of a polynomial to a torus, each monomial sent to a frequency vector.
    pub fn from_poly<K: Coeff, M: Fn(&Monomial) -> Vec<i64>>(p: &MixedPoly<K>, dim: usize, freq: M) -> Self {
        Self::new(dim, p.iter().map(|(m, c)| (freq(m), c.to_complex())).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, theta: &[f64]) -> Complex<f64> {
        self.terms
            .iter()
            .map(|(k, c)| {
                let ph: f64 = k.iter().zip(theta).map(|(a, b)| *a as f64 * b).sum();
                c * Complex::new(ph.cos(), ph.sin())
            })
            .sum()
    }

    /// Bound on `|q(θ) − q(θ')| / ‖θ − θ'‖_∞`.
    pub fn lipschitz(&self) -> f64 {
        self.terms.iter().map(|(k, c)| c.norm() * k.iter().map(|a| a.unsigned_abs() as f64).sum::<f64>()).sum()
    }

    pub fn l1(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Every cell has some function bounded away from zero; `margin` is the smallest
    /// excess `|q(c)| − L h` used, relative to `‖q‖₁`.
    Certified { cells: usize, margin: f64 },
    /// Cells that could not be certified at full depth, best candidates first.
    Uncertified { cells: usize, suspects: Vec<Vec<f64>> },
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Certified { .. })
    }
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Initial cells per dimension.
    pub init: usize,
    /// Maximal number of bisections of an initial cell.
    pub max_depth: u32,
    /// Total cell budget.
    pub max_cells: usize,
    /// Suspects kept for a witness search.
    pub keep: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { init: 64, max_depth: 8, max_cells: 4_000_000, keep: 32 }
    }
}

/// Tries to prove that the functions `qs` have no common zero on `(S¹)^d`.
pub fn certify_no_common_zero(qs: &[MultiTrig], opts: &CertifyOptions) -> Certificate {
    let dim = qs.first().map(|q| q.dim()).unwrap_or(1);
    let live: Vec<(&MultiTrig, f64, f64)> =
        qs.iter().filter(|q| !q.is_zero()).map(|q| (q, q.lipschitz(), q.l1())).collect();
    let h0 = PI / opts.init as f64;
    let mut stack: Vec<(Vec<f64>, f64, u32)> = Vec::new();
    let total = opts.init.pow(dim as u32);
    for idx in 0..total {
        let mut c = Vec::with_capacity(dim);
        let mut r = idx;
        for _ in 0..dim {
            c.push((2 * (r % opts.init) + 1) as f64 * h0);
            r /= opts.init;
        }
        stack.push((c, h0, 0));
    }
    let mut cells = 0usize;
    let mut margin = f64::INFINITY;
    let mut suspects: Vec<(f64, Vec<f64>)> = Vec::new();
    while let Some((c, h, depth)) = stack.pop() {
        cells += 1;
        let mut best: Option<f64> = None;
        let mut score = 0.0f64;
        for (q, l, n) in &live {
            let v = q.eval(&c).norm();
            score = score.max(v / n.max(f64::MIN_POSITIVE));
            let excess = v - l * h * (1.0 + 1e-9) - 1e-14 * n;
            if excess > 0.0 {
                let rel = excess / n.max(f64::MIN_POSITIVE);
                best = Some(best.map_or(rel, |b: f64| b.max(rel)));
            }
        }
        if let Some(b) = best {
            margin = margin.min(b);
            continue;
        }
        if depth >= opts.max_depth || cells + stack.len() > opts.max_cells {
            suspects.push((score, c));
            if suspects.len() > 8 * opts.keep {
                suspects.sort_by(|a, b| a.0.total_cmp(&b.0));
                suspects.truncate(opts.keep);
            }
            continue;
        }
        let hh = h / 2.0;
        for mask in 0..(1usize << dim) {
            let child: Vec<f64> =
                c.iter().enumerate().map(|(k, x)| if mask >> k & 1 == 1 { x + hh } else { x - hh }).collect();
            stack.push((child, hh, depth + 1));
        }
    }
    if suspects.is_empty() {
        Certificate::Certified { cells, margin }
    } else {
        suspects.sort_by(|a, b| a.0.total_cmp(&b.0));
        suspects.truncate(opts.keep);
        Certificate::Uncertified { cells, suspects: suspects.into_iter().map(|(_, c)| c).collect() }
    }
}

/// `Σ c z^a z̄^b e^{ift}` on the slice `|z| ≤ 1, t ∈ S¹` (one coordinate pinned to the
/// unit circle by weighted homogeneity).
#[derive(Clone, Debug, PartialEq)]
pub struct SliceTrig {
    terms: Vec<(Complex<f64>, u32, u32, i64)>,
}

/// Which variable is pinned to the unit circle.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Slice {
    /// `v = e^{it}`, `u` in the unit disk.
    VCircle,
    /// `u = e^{it}`, `v` in the unit disk.
    UCircle,
}

impl SliceTrig {
    pub fn from_poly<K: Coeff>(p: &MixedPoly<K>, slice: Slice) -> Self {
        let terms = p
            .iter()
            .map(|(m, c)| {
                let c = c.to_complex();
                match slice {
                    Slice::VCircle => (c, m.u, m.ubar, m.v as i64 - m.vbar as i64),
                    Slice::UCircle => (c, m.v, m.vbar, m.u as i64 - m.ubar as i64),
                }
            })
            .collect();
        SliceTrig { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: Complex<f64>, t: f64) -> Complex<f64> {
        self.terms
            .iter()
            .map(|(c, a, b, f)| c * z.powu(*a) * z.conj().powu(*b) * Complex::new(0.0, *f as f64 * t).exp())
            .sum()
    }

    /// Bound on the variation over a cell of half-widths `hz` (real and imaginary part) and
    /// `ht`, where `|z| ≤ rho` on the cell.
    fn variation(&self, rho: f64, hz: f64, ht: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, a, b, f)| {
                let d = (a + b) as i32;
                let dz = if d > 0 { d as f64 * rho.powi(d - 1) * 2.0 * hz } else { 0.0 };
                c.norm() * (dz + f.unsigned_abs() as f64 * rho.powi(d) * ht)
            })
            .sum()
    }

    fn l1(&self, rho: f64) -> f64 {
        self.terms.iter().map(|(c, a, b, _)| c.norm() * rho.powi((a + b) as i32)).sum()
    }
}

/// Tries to prove that `qs` have no common zero on `{|z| ≤ 1} × S¹`.
pub fn certify_slice(qs: &[SliceTrig], opts: &CertifyOptions) -> Certificate {
    let live: Vec<&SliceTrig> = qs.iter().filter(|q| !q.is_zero()).collect();
    let n = opts.init;
    let hz0 = 1.0 / n as f64;
    let ht0 = PI / n as f64;
    let mut stack: Vec<([f64; 3], f64, f64, u32)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = [-1.0 + (2 * i + 1) as f64 * hz0, -1.0 + (2 * j + 1) as f64 * hz0, (2 * k + 1) as f64 * ht0];
                stack.push((c, hz0, ht0, 0));
            }
        }
    }
    let mut cells = 0usize;
    let mut margin = f64::INFINITY;
    let mut suspects: Vec<(f64, Vec<f64>)> = Vec::new();
    while let Some((c, hz, ht, depth)) = stack.pop() {
        cells += 1;
        let near = (c[0].abs() - hz).max(0.0).hypot((c[1].abs() - hz).max(0.0));
        if near > 1.0 {
            continue;
        }
        let rho = (c[0].abs() + hz).hypot(c[1].abs() + hz);
        let z = Complex::new(c[0], c[1]);
        let mut best: Option<f64> = None;
        let mut score = 0.0f64;
        for q in &live {
            let v = q.eval(z, c[2]).norm();
            let n1 = q.l1(rho).max(f64::MIN_POSITIVE);
            score = score.max(v / n1);
            let excess = v - q.variation(rho, hz, ht) * (1.0 + 1e-9) - 1e-14 * n1;
            if excess > 0.0 {
                let rel = excess / n1;
                best = Some(best.map_or(rel, |b: f64| b.max(rel)));
            }
        }
        if let Some(b) = best {
            margin = margin.min(b);
            continue;
        }
        if depth >= opts.max_depth || cells + stack.len() > opts.max_cells {
            suspects.push((score, c.to_vec()));
            if suspects.len() > 8 * opts.keep {
                suspects.sort_by(|a, b| a.0.total_cmp(&b.0));
                suspects.truncate(opts.keep);
            }
            continue;
        }
        let (hz2, ht2) = (hz / 2.0, ht / 2.0);
        for mask in 0..8u32 {
            let d = |bit: u32, h: f64| if mask >> bit & 1 == 1 { h } else { -h };
            stack.push(([c[0] + d(0, hz2), c[1] + d(1, hz2), c[2] + d(2, ht2)], hz2, ht2, depth + 1));
        }
    }
    if suspects.is_empty() {
        Certificate::Certified { cells, margin }
    } else {
        suspects.sort_by(|a, b| a.0.total_cmp(&b.0));
        suspects.truncate(opts.keep);
        Certificate::Uncertified { cells, suspects: suspects.into_iter().map(|(_, c)| c).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn nonvanishing_monomial_is_certified() {
        let q = MultiTrig::new(2, vec![(vec![3, 2], c(1.0))]);
        assert!(certify_no_common_zero(&[q], &CertifyOptions::default()).is_certified());
    }

    #[test]
    fn cosine_has_suspects_near_its_zeros() {
        let q = MultiTrig::new(1, vec![(vec![7], c(-2.0)), (vec![-7], c(-2.0))]);
        match certify_no_common_zero(std::slice::from_ref(&q), &CertifyOptions::default()) {
            Certificate::Uncertified { suspects, .. } => {
                assert!(q.eval(&suspects[0]).norm() < 1e-1);
            }
            other => panic!("expected suspects, got {other:?}"),
        }
    }

    #[test]
    fn a_second_function_rescues_the_first() {
        let a = MultiTrig::new(1, vec![(vec![1], c(0.5)), (vec![-1], c(0.5))]);
        let b = MultiTrig::new(1, vec![(vec![1], Complex::new(0.0, -0.5)), (vec![-1], Complex::new(0.0, 0.5))]);
        assert!(certify_no_common_zero(&[a, b], &CertifyOptions::default()).is_certified());
    }

    #[test]
    fn slice_certificates() {
        let pos = crate::expr::parse_poly("u*conj(u) + v*conj(v)").unwrap();
        let opts = CertifyOptions { init: 8, max_depth: 5, max_cells: 200_000, keep: 8 };
        for slice in [Slice::VCircle, Slice::UCircle] {
            assert!(certify_slice(&[SliceTrig::from_poly(&pos, slice)], &opts).is_certified());
        }
        let cusp = crate::expr::parse_poly("u^2 - v^3").unwrap();
        assert!(!certify_slice(&[SliceTrig::from_poly(&cusp, Slice::VCircle)], &opts).is_certified());
    }

    #[test]
    fn lipschitz_bound_holds() {
        let q = MultiTrig::new(2, vec![(vec![3, -1], c(1.0)), (vec![0, 2], Complex::new(0.5, 0.5))]);
        let l = q.lipschitz();
        for k in 0..50 {
            let a = [k as f64 * 0.37, k as f64 * 0.11];
            let b = [a[0] + 1e-3, a[1] - 7e-4];
            assert!((q.eval(&a) - q.eval(&b)).norm() <= l * 1e-3 + 1e-15);
        }
    }
}

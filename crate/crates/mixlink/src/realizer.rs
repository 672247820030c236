//! Real algebraic realizations of nested closures of P-fibered braids: a tower of
//! semiholomorphic face functions glued into one boundary polynomial.

use std::f64::consts::PI;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braids::{
    braid_from_word, check_pfibered, critical_arg_derivatives, extract_word, track_roots, Braid64, BraidError, BraidWord,
    FibrationCertificate,
};
use crate::config::Config;
use crate::gauss::GaussRat;
use crate::linker::{link_unchecked, nest_braids, LinkDescription};
use crate::mixedpoly::{ExactPoly, Monomial};
use crate::nondegen::{analyze, NondegReport};
use crate::scalar::Coeff;
use crate::status::Status;
use crate::trig::{Chart, LoopPoly};

/// Largest `r` tried by the doubling search.
pub const MAX_R: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizerError {
    #[error("braid {0} is not P-fibered with the required multiplicity")]
    NotPFibered(usize, Box<FibrationCertificate>),
    #[error("no exponent r up to {max_r} works at level {level}")]
    SearchExhausted { level: usize, max_r: u64 },
    #[error("level {0}: {1}")]
    IntegralityFailure(usize, String),
    #[error("braid {0} passes through 0")]
    NotAffine(usize),
    #[error("realization does not match: {0}")]
    Mismatch(String),
    #[error("empty tower")]
    Empty,
    #[error(transparent)]
    Braid(#[from] BraidError),
}

/// One level of the tower: a braid and the monic loop it is the root set of.
#[derive(Clone, Debug)]
pub struct Level {
    pub braid: Braid64,
    pub g: LoopPoly<GaussRat>,
}

impl Level {
    /// The standard representative of a braid word; levels after the first avoid `0`.
    pub fn from_word(w: &BraidWord, affine: bool, samples: usize) -> Result<Self, RealizerError> {
        let (braid, g) = braid_from_word(w, 8, affine, samples)?;
        Ok(Level { braid, g })
    }

    pub fn from_loop(g: LoopPoly<GaussRat>, samples: usize) -> Result<Self, RealizerError> {
        let braid = track_roots::<f64, _>(&g, samples)?;
        Ok(Level { braid, g })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub words: Vec<BraidWord>,
    pub loops: Vec<LoopPoly<GaussRat>>,
    pub strands: Vec<u64>,
    /// `m_i = Σ_{j<i} s_j`.
    pub multiplicities: Vec<u64>,
    pub r: Vec<u64>,
    pub k: Vec<u64>,
    /// `a_j`, the coefficient of `u^{m_j}` in `f_j`, for `j = 2..N`.
    pub a: Vec<ExactPoly>,
    pub certificates: Vec<FibrationCertificate>,
}

impl TowerSpec {
    /// Word of `B(B_1^{2r_1}, …, B_N^{2r_N})`.
    pub fn expected_word(&self, samples: usize) -> Result<BraidWord, RealizerError> {
        let bs: Vec<Braid64> = self
            .loops
            .iter()
            .zip(&self.r)
            .map(|(g, r)| track_roots::<f64, _>(&g.power(2 * *r as i64), samples))
            .collect::<Result<_, _>>()?;
        Ok(nest_braids(&bs, None).map_err(|e| RealizerError::Mismatch(e.to_string()))?.word)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub f: ExactPoly,
    pub spec: TowerSpec,
    pub report: NondegReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationReport {
    pub status: Status,
    pub strong_inner_nd: Status,
    pub expected_word: BraidWord,
    pub link: LinkDescription,
    pub report: NondegReport,
}

/// `(α, β, c)`: the term `c r^α e^{iβt}`, i.e. `c v^{(α+β)/2} v̄^{(α−β)/2}`.
type RTerm = (u64, i64, GaussRat);

fn admissible(alpha: i64, beta: i64) -> bool {
    alpha >= beta.abs() && (alpha - beta).rem_euclid(2) == 0
}

fn monomial(gamma: u64, alpha: u64, beta: i64) -> Monomial {
    let a = alpha as i64;
    Monomial::new(gamma as u32, 0, ((a + beta) / 2) as u32, ((a - beta) / 2) as u32)
}

/// Terms `(γ, β, c)` of `g(u, e^{iβt})`, checked holomorphic and monic of degree `s`.
fn loop_terms(g: &LoopPoly<GaussRat>, level: usize) -> Result<(u64, Vec<(u64, i64, GaussRat)>), RealizerError> {
    if !g.is_semiholomorphic() {
        return Err(RealizerError::Braid(BraidError::NonSemiholomorphic));
    }
    let s = g.degree() as u64;
    let lead = g.coeff(s as u32, 0).cloned().unwrap_or_default();
    let lead_coeffs: Vec<_> = lead.coeffs().iter().collect();
    if lead_coeffs.len() != 1 || *lead_coeffs[0].0 != 0 || !lead_coeffs[0].1.is_one() {
        return Err(RealizerError::IntegralityFailure(level, "the loop must be monic in u".into()));
    }
    Ok((s, g.terms().map(|(a, _, k, c)| (a as u64, k, c.clone())).collect()))
}

/// `a · u^m · r^{k s} · g(u / r^k, e^{2 r i t})` as an exact polynomial, if every term is a
/// genuine monomial in `v, v̄`.
fn level_poly(a: &[RTerm], m: u64, k: u64, s: u64, r: u64, g: &[(u64, i64, GaussRat)]) -> Option<ExactPoly> {
    let mut out = ExactPoly::zero();
    for (aa, ab, ac) in a {
        for (gamma, beta, c) in g {
            let alpha = aa + k * (s - gamma);
            let b = ab + 2 * r as i64 * beta;
            if !admissible(alpha as i64, b) {
                return None;
            }
            out.add_term(monomial(gamma + m, alpha, b), ac.clone() * c.clone());
        }
    }
    Some(out)
}

/// Coefficient of `u^m` as `r`-terms.
fn u_coefficient(f: &ExactPoly, m: u64) -> Vec<RTerm> {
    f.iter()
        .filter(|(mono, _)| mono.u as u64 == m && mono.ubar == 0)
        .map(|(mono, c)| ((mono.v + mono.vbar) as u64, mono.v as i64 - mono.vbar as i64, c.clone()))
        .collect()
}

fn rterms_to_poly(a: &[RTerm]) -> ExactPoly {
    ExactPoly::from_terms(a.iter().map(|(al, b, c)| (monomial(0, *al, *b), c.clone())))
}

/// `∂_t arg a(1, t)` at `t`.
fn arg_rate(a: &[RTerm], t: f64) -> f64 {
    let mut val = Complex::<f64>::zero();
    let mut der = Complex::<f64>::zero();
    for (_, b, c) in a {
        let e = Complex::new(0.0, *b as f64 * t).exp() * c.to_complex::<f64>();
        val += e;
        der += e * Complex::new(0.0, *b as f64);
    }
    (der / val).im
}

/// The smallest `r` (by doubling) making `∂_t arg a(1,t) + 2r ∂ arg v_ℓ(2rt)` keep the
/// fibration sign on every sample.
fn search_r(a: &[RTerm], g: &LoopPoly<GaussRat>, m: u32, sign: i32, samples: usize) -> Option<u64> {
    let candidates: Vec<u64> = (0..=16).map(|e| 1u64 << e).collect();
    candidates.par_iter().copied().find_first(|&r| {
        (0..samples).all(|k| {
            let t = 2.0 * PI * k as f64 / samples as f64;
            let da = arg_rate(a, t);
            let tau = (2.0 * r as f64 * t).rem_euclid(2.0 * PI);
            match critical_arg_derivatives(g, m, tau) {
                Ok(ds) => ds.iter().all(|d| {
                    let c = da + 2.0 * r as f64 * d;
                    c * sign as f64 > 1e-9
                }),
                Err(_) => false,
            }
        })
    })
}

/// Builds the tower polynomial from levels `B_1, …, B_N` (innermost first).
pub fn build_tower(levels: &[Level], cfg: &Config) -> Result<Tower, RealizerError> {
    let n = levels.len();
    if n == 0 {
        return Err(RealizerError::Empty);
    }
    let mut strands = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(n);
    for (i, l) in levels.iter().enumerate() {
        let (s, t) = loop_terms(&l.g, i + 1)?;
        strands.push(s);
        terms.push(t);
    }
    let mult: Vec<u64> = (0..n).map(|i| strands[..i].iter().sum()).collect();
    let certificates: Vec<FibrationCertificate> = levels
        .par_iter()
        .enumerate()
        .map(|(i, l)| check_pfibered::<f64, _>(&l.g, mult[i] as u32, cfg.samples).map_err(RealizerError::from))
        .collect::<Result<_, _>>()?;
    for (i, c) in certificates.iter().enumerate() {
        if c.status != Status::Verified {
            return Err(RealizerError::NotPFibered(i + 1, Box::new(c.clone())));
        }
        if mult[i] > 0 && !levels[i].braid.affine {
            return Err(RealizerError::NotAffine(i + 1));
        }
    }
    let mut r = vec![1u64; n];
    let mut k = vec![0u64; n];
    let mut fs: Vec<ExactPoly> = vec![ExactPoly::zero(); n];
    let mut a_polys = Vec::new();
    // top level: k_N even with k (s − γ) ≥ 2|β|
    let sn = strands[n - 1];
    let mut kn = 2u64;
    for (gamma, beta, _) in &terms[n - 1] {
        if *gamma < sn {
            let need = (2 * beta.unsigned_abs()).div_ceil(sn - gamma);
            kn = kn.max(need + need % 2);
        }
    }
    k[n - 1] = kn;
    let unit: Vec<RTerm> = vec![(0, 0, GaussRat::one())];
    fs[n - 1] = level_poly(&unit, mult[n - 1], kn, sn, 1, &terms[n - 1])
        .ok_or_else(|| RealizerError::IntegralityFailure(n, "top level".into()))?;
    for j in (1..n).rev() {
        // level j − 1 in one-based terms is index j − 1
        let a = u_coefficient(&fs[j], mult[j]);
        a_polys.push(rterms_to_poly(&a));
        let lo = j - 1;
        let rj = if lo == 0 && strands[0] == 1 {
            1
        } else {
            search_r(&a, &levels[lo].g, mult[lo] as u32, certificates[lo].sign, cfg.samples.min(512))
                .ok_or(RealizerError::SearchExhausted { level: lo + 1, max_r: MAX_R })?
        };
        r[lo] = rj;
        let mut kk = k[j] + 2;
        let poly = loop {
            if let Some(p) = level_poly(&a, mult[lo], kk, strands[lo], rj, &terms[lo]) {
                break p;
            }
            kk += 2;
            if kk > 1 << 20 {
                return Err(RealizerError::IntegralityFailure(lo + 1, "no admissible even k".into()));
            }
        };
        k[lo] = kk;
        fs[lo] = poly;
    }
    a_polys.reverse();
    let mut f = ExactPoly::zero();
    for p in &fs {
        f = &f + p;
    }
    for j in 1..n {
        let dup = ExactPoly::from_terms(u_coefficient(&fs[j], mult[j]).iter().map(|(al, b, c)| (monomial(mult[j], *al, *b), c.clone())));
        f = &f - &dup;
    }
    let report = analyze(&f, cfg).map_err(|e| RealizerError::Mismatch(e.to_string()))?;
    let spec = TowerSpec {
        words: levels.iter().map(|l| extract_word(&l.braid)).collect::<Result<_, _>>()?,
        loops: levels.iter().map(|l| l.g.clone()).collect(),
        strands,
        multiplicities: mult,
        r,
        k,
        a: a_polys,
        certificates,
    };
    Ok(Tower { f, spec, report })
}

/// Re-checks isolation and compares the link of `f` with the requested nested closure.
pub fn validate_realization(f: &ExactPoly, spec: &TowerSpec, cfg: &Config) -> Result<RealizationReport, RealizerError> {
    let report = analyze(f, cfg).map_err(|e| RealizerError::Mismatch(e.to_string()))?;
    if report.strong_inner_nd == Status::Refuted {
        return Err(RealizerError::Mismatch("not strongly inner non-degenerate".into()));
    }
    let link = link_unchecked(f, cfg).map_err(|e| RealizerError::Mismatch(e.to_string()))?;
    let expected = spec.expected_word(cfg.samples)?;
    if link.word.as_ref() != Some(&expected) {
        return Err(RealizerError::Mismatch(format!(
            "link word {} differs from {}",
            link.word.as_ref().map(|w| w.to_string()).unwrap_or_else(|| "(none)".into()),
            expected
        )));
    }
    if link.axis {
        return Err(RealizerError::Mismatch("unexpected axis component".into()));
    }
    Ok(RealizationReport { status: report.strong_inner_nd, strong_inner_nd: report.strong_inner_nd, expected_word: expected, link, report })
}

/// Loop `Σ_γ c_γ(t) u^γ` from `(γ, freq, c)` triples.
pub fn loop_from_terms(terms: &[(u32, i64, GaussRat)]) -> LoopPoly<GaussRat> {
    let mut g = LoopPoly::zero(Chart::CxS1);
    for (a, k, c) in terms {
        g.add_term(*a, 0, *k, c.clone());
    }
    g
}

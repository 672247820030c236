//! Verdicts for (strong) Newton non-degeneracy, inner and strongly inner non-degeneracy,
//! niceness and trueness of the faces of a mixed polynomial.
//!
//! Vertices and the two coordinate axes reduce to trigonometric polynomials on a torus and
//! are certified by Lipschitz subdivision. One-faces that are holomorphic in one of the
//! variables are decided through the critical values of their loop polynomial. Genuinely
//! mixed one-faces fall back to a slice certificate or a multi-start residual search.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{certify_no_common_zero, certify_slice, Certificate, CertifyOptions, MultiTrig, Slice, SliceTrig};
use crate::config::Config;
use crate::gauss::GaussRat;
use crate::mixedpoly::{classify_structure, residual_polys, ExactPoly, Jet, Monomial, Var};
use crate::scalar::Coeff;
use crate::newton::{newton_polygon, FaceRef, NewtonData, NewtonError};
use crate::optimize::{levenberg_marquardt, LmOptions};
use crate::roots::{aberth, horner, trim};
use crate::status::Status;
use crate::trig::{Chart, LoopPoly};

type C64 = Complex<f64>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ExactShortcut,
    NumericSearch,
    /// Derived from other verdicts by an implication.
    Implied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub u: C64,
    pub v: C64,
    /// Largest raw residual among the equations tested at the point.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub method: Method,
    /// A search that found nothing, as opposed to a certificate.
    pub heuristic: bool,
    pub tolerance: f64,
    pub grid: Option<usize>,
    pub min_residual: Option<f64>,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

impl Verdict {
    fn certified(tol: f64, note: impl Into<String>) -> Self {
        Verdict {
            status: Status::Verified,
            method: Method::ExactShortcut,
            heuristic: false,
            tolerance: tol,
            grid: None,
            min_residual: None,
            witness: None,
            note: Some(note.into()),
        }
    }

    fn refuted(method: Method, tol: f64, w: Witness) -> Self {
        Verdict {
            status: Status::Refuted,
            method,
            heuristic: false,
            tolerance: tol,
            grid: None,
            min_residual: Some(w.residual),
            witness: Some(w),
            note: None,
        }
    }

    fn inconclusive(method: Method, tol: f64, note: impl Into<String>) -> Self {
        Verdict {
            status: Status::Inconclusive,
            method,
            heuristic: false,
            tolerance: tol,
            grid: None,
            min_residual: None,
            witness: None,
            note: Some(note.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// What a verdict is about.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// The `i`-th compact one-face, on `(C*)²`.
    Edge(usize),
    /// A vertex, on `(C*)²`.
    Vertex((u64, u64)),
    /// `f_{P_1}` on `{u = 0, v ≠ 0}`.
    AxisU0,
    /// `f_{P_N}` on `{v = 0, u ≠ 0}`.
    AxisV0,
}

/// Weak (critical zeros, `V ∩ Σ`) and strong (critical points, `Σ`) verdicts for one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetVerdicts {
    pub target: Target,
    pub extreme: bool,
    pub weak: Verdict,
    pub strong: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetVerdict {
    pub target: Target,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegReport {
    pub edges: Vec<TargetVerdicts>,
    pub vertices: Vec<TargetVerdicts>,
    pub axis_u0: TargetVerdicts,
    pub axis_v0: TargetVerdicts,
    /// Per non-extreme vertex: its face function has no zero in `(C*)²`.
    pub nice_vertices: Vec<TargetVerdict>,
    /// Per one-face: its face function has a zero in `(C*)²`.
    pub true_faces: Vec<TargetVerdict>,
    pub convenient: bool,
    pub oka_nd: Status,
    pub oka_strong_nd: Status,
    pub inner_nd: Status,
    pub strong_inner_nd: Status,
    pub nice: Status,
    pub true_polynomial: Status,
    pub weakly_isolated: bool,
    pub isolated: bool,
    pub notes: Vec<String>,
}

/// A slice of the report for one notion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartReport {
    pub status: Status,
    pub verdicts: Vec<TargetVerdict>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvenientizeError {
    #[error("{which} has exponent {exponent}, which must exceed {bound}")]
    ExponentTooLow { which: String, exponent: u64, bound: String },
    #[error("{0} must only involve {1}")]
    WrongVariables(String, String),
    #[error("the polynomial is not {0}-convenient and needs a non-zero {1}")]
    MissingTerm(String, String),
    #[error("the polynomial is already convenient")]
    NotNeeded,
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

fn cert_opts_torus(cfg: &Config) -> CertifyOptions {
    CertifyOptions { init: (cfg.grid / 4).clamp(16, 256), max_depth: 8, max_cells: 4_000_000, keep: 24 }
}

fn cert_opts_slice(cfg: &Config) -> CertifyOptions {
    CertifyOptions { init: (cfg.grid / 16).clamp(8, 32), max_depth: 5, max_cells: 400_000, keep: 24 }
}

/// Raw residuals `[|f|, |s₁|, |s₂|, |s₃|]` at a point.
fn raw_residuals(jet: &Jet<f64>, u: C64, v: C64) -> [f64; 4] {
    let j = jet.at(u, v);
    [j.f.norm(), j.s1().norm(), j.s2().abs(), j.s3().abs()]
}

fn witness_residual(r: &[f64; 4], strong: bool) -> f64 {
    if strong {
        r[1].max(r[2]).max(r[3])
    } else {
        r.iter().fold(0.0, |a: f64, b| a.max(*b))
    }
}

/// A point of the torus or of an axis circle, in `(u, v)` coordinates.
#[derive(Copy, Clone, Debug)]
enum TorusKind {
    /// `(e^{iφ}, e^{it})`, parameters `[φ, t]`.
    Torus,
    /// `(0, e^{it})`.
    AxisU0,
    /// `(e^{iφ}, 0)`.
    AxisV0,
}

impl TorusKind {
    fn dim(self) -> usize {
        match self {
            TorusKind::Torus => 2,
            _ => 1,
        }
    }

    fn keep(self, m: &Monomial) -> bool {
        match self {
            TorusKind::Torus => true,
            TorusKind::AxisU0 => m.u == 0 && m.ubar == 0,
            TorusKind::AxisV0 => m.v == 0 && m.vbar == 0,
        }
    }

    fn freq(self, m: &Monomial) -> Vec<i64> {
        let fu = m.u as i64 - m.ubar as i64;
        let fv = m.v as i64 - m.vbar as i64;
        match self {
            TorusKind::Torus => vec![fu, fv],
            TorusKind::AxisU0 => vec![fv],
            TorusKind::AxisV0 => vec![fu],
        }
    }

    fn point(self, th: &[f64]) -> (C64, C64) {
        let e = |x: f64| Complex::new(x.cos(), x.sin());
        match self {
            TorusKind::Torus => (e(th[0]), e(th[1])),
            TorusKind::AxisU0 => (C64::new(0.0, 0.0), e(th[0])),
            TorusKind::AxisV0 => (e(th[0]), C64::new(0.0, 0.0)),
        }
    }

    fn describe(self) -> &'static str {
        match self {
            TorusKind::Torus => "torus",
            TorusKind::AxisU0 => "circle u = 0, |v| = 1",
            TorusKind::AxisV0 => "circle v = 0, |u| = 1",
        }
    }
}

fn restrict(p: &ExactPoly, kind: TorusKind) -> MultiTrig {
    MultiTrig::from_poly(&p.filter(|m| kind.keep(m)), kind.dim(), |m| kind.freq(m))
}

/// The torus functions for the selected equations (`f` first when weak).
fn torus_system(face: &ExactPoly, kind: TorusKind, strong: bool, only_f: bool) -> Vec<MultiTrig> {
    let mut out = Vec::new();
    if !strong {
        out.push(restrict(face, kind));
    }
    if !only_f {
        for s in residual_polys(face) {
            out.push(restrict(&s, kind));
        }
    }
    out
}

/// Certifies or refutes the absence of common zeros of a torus system; refutations are
/// confirmed on the raw residuals of `face` at the corresponding point.
fn torus_verdict(face: &ExactPoly, kind: TorusKind, strong: bool, only_f: bool, cfg: &Config) -> Verdict {
    let tol = cfg.tol;
    let system = torus_system(face, kind, strong, only_f);
    let opts = cert_opts_torus(cfg);
    let suspects = match certify_no_common_zero(&system, &opts) {
        Certificate::Certified { cells, margin } => {
            let mut v = Verdict::certified(tol, format!("Lipschitz certificate on the {}", kind.describe()));
            v.grid = Some(opts.init);
            v.min_residual = Some(margin);
            v.note = Some(format!("Lipschitz certificate on the {}, {cells} cells", kind.describe()));
            return v;
        }
        Certificate::Uncertified { suspects, .. } => suspects,
    };
    let jet = Jet::<f64>::new(face);
    let dim = kind.dim();
    let resid = |th: &[f64]| -> Vec<f64> {
        let mut r = Vec::with_capacity(2 * system.len());
        for q in &system {
            let z = q.eval(th);
            r.push(z.re);
            r.push(z.im);
        }
        r
    };
    let mut best = f64::INFINITY;
    for s in suspects.iter().take(opts.keep) {
        let res = levenberg_marquardt(resid, &s[..dim], &LmOptions::default());
        let (u, v) = kind.point(&res.x);
        let raw = raw_residuals(&jet, u, v);
        let r = if only_f { raw[0] } else { witness_residual(&raw, strong) };
        best = best.min(r);
        if r < tol {
            return Verdict::refuted(Method::ExactShortcut, tol, Witness { u, v, residual: r });
        }
    }
    let mut v = Verdict::inconclusive(
        Method::ExactShortcut,
        tol,
        format!("no certificate on the {} and no witness below tolerance", kind.describe()),
    );
    v.grid = Some(opts.init);
    v.min_residual = Some(best);
    v
}

/// Variables change that turns a face holomorphic in one variable into a `u`-semiholomorphic
/// one: conjugate, then optionally exchange `u` and `v`.
#[derive(Copy, Clone, Debug)]
struct Chartless {
    conj: bool,
    swap: bool,
}

impl Chartless {
    fn find(face: &ExactPoly) -> Option<Self> {
        for (x, conj, swap) in [(Var::U, false, false), (Var::Ubar, true, false), (Var::V, false, true), (Var::Vbar, true, true)] {
            if face.is_semiholomorphic(x) {
                return Some(Chartless { conj, swap });
            }
        }
        None
    }

    fn apply(self, p: &ExactPoly) -> ExactPoly {
        let q = if self.conj { p.conj() } else { p.clone() };
        if self.swap {
            q.swap_uv()
        } else {
            q
        }
    }

    /// Maps a point of the transformed chart back.
    fn point_back(self, u: C64, v: C64) -> (C64, C64) {
        if self.swap {
            (v, u)
        } else {
            (u, v)
        }
    }
}

/// One critical point `c(t)` of `g(·, e^{it})` off `u = 0`, with `h = g(c)` and `h_t = ∂_t g(c)`.
#[derive(Copy, Clone, Debug)]
struct CritSample {
    c: C64,
    h: C64,
    ht: C64,
}

struct CritScan {
    /// Per sample angle, the critical data.
    rows: Vec<Vec<CritSample>>,
    /// `g` and `g_t` coefficient scales.
    lipschitz: f64,
}

/// Critical points of `g(·, e^{it})` excluding the forced root `0`, on `n` samples.
fn crit_scan(g: &LoopPoly<GaussRat>, n: usize) -> Option<CritScan> {
    let m = g.low_degree();
    let hc = g.holomorphic_coefficients();
    let deg = hc.len() - 1;
    let num: Vec<Vec<(f64, C64)>> =
        hc.iter().map(|t| t.coeffs().iter().map(|(k, c)| (*k as f64, c.to_complex::<f64>())).collect()).collect();
    let at = |t: f64| -> (Vec<C64>, Vec<C64>) {
        let c: Vec<C64> = num.iter().map(|ts| ts.iter().map(|(k, a)| a * Complex::new(0.0, k * t).exp()).sum()).collect();
        let ct: Vec<C64> =
            num.iter().map(|ts| ts.iter().map(|(k, a)| a * Complex::new(0.0, *k) * Complex::new(0.0, k * t).exp()).sum()).collect();
        (c, ct)
    };
    let lead_l1: f64 = num[deg].iter().map(|(_, a)| a.norm()).sum();
    let mut rows = Vec::with_capacity(n);
    let mut bound = 0.0f64;
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        let (c, ct) = at(t);
        if c[deg].norm() <= 1e-9 * lead_l1 {
            return None;
        }
        // g_u with the forced factor u^{m-1} removed
        let skip = m.saturating_sub(1) as usize;
        let du: Vec<C64> = (1..=deg).map(|k| c[k] * k as f64).skip(skip).collect();
        let du = trim(&du, 0.0);
        let cps = if du.len() <= 1 { Vec::new() } else { aberth(du).ok()? };
        let scale = 1.0 + cps.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut row = Vec::with_capacity(cps.len());
        for z in cps {
            if m >= 1 && z.norm() <= 1e-12 * scale {
                continue;
            }
            bound = bound.max(z.norm());
            row.push(CritSample { c: z, h: horner(&c, z), ht: horner(&ct, z) });
        }
        rows.push(row);
    }
    let b = 1.25 * bound + 1e-3;
    let lipschitz = num
        .iter()
        .enumerate()
        .map(|(a, ts)| ts.iter().map(|(k, c)| c.norm() * k.abs()).sum::<f64>() * b.powi(a as i32))
        .sum();
    Some(CritScan { rows, lipschitz })
}

/// Residual vector on the slice `v = e^{it}` in coordinates `(Re u, Im u, t)`.
fn slice_residual(jet: &Jet<f64>, x: &[f64], slice: Slice, strong: bool) -> Vec<f64> {
    let (u, v) = slice_point(x, slice);
    let j = jet.at(u, v);
    let s1 = j.s1();
    if strong {
        vec![s1.re, s1.im, j.s2(), j.s3()]
    } else {
        vec![j.f.re, j.f.im, s1.re, s1.im, j.s2(), j.s3()]
    }
}

fn slice_point(x: &[f64], slice: Slice) -> (C64, C64) {
    let z = C64::new(x[0], x[1]);
    let e = C64::new(x[2].cos(), x[2].sin());
    match slice {
        Slice::VCircle => (z, e),
        Slice::UCircle => (e, z),
    }
}

fn off_axes(u: C64, v: C64) -> bool {
    u.norm() > 1e-3 && v.norm() > 1e-3
}

/// Accepts an LM endpoint as a witness on `(C*)²`.
fn accept(jet: &Jet<f64>, u: C64, v: C64, strong: bool, tol: f64) -> Option<Witness> {
    if !off_axes(u, v) {
        return None;
    }
    let raw = raw_residuals(jet, u, v);
    let r = witness_residual(&raw, strong);
    let nrm = jet.normalized(u, v);
    let nr = if strong { nrm[1].max(nrm[2]).max(nrm[3]) } else { nrm.iter().fold(0.0, |a: f64, b| a.max(*b)) };
    (r < tol && nr < tol.sqrt()).then_some(Witness { u, v, residual: r })
}

/// Multi-start residual search for critical (zero) points of a one-face on the two compact
/// slices `|v| = 1, |u| ≤ 1` and `|u| = 1, |v| ≤ 1`.
pub fn numeric_search(face: &ExactPoly, strong: bool, cfg: &Config) -> Verdict {
    let tol = cfg.tol;
    let jet = Jet::<f64>::new(face);
    let n = (cfg.grid / 8).max(8);
    let mut seeds: Vec<(f64, Slice, [f64; 3])> = Vec::new();
    for slice in [Slice::VCircle, Slice::UCircle] {
        let mut local: Vec<(f64, Slice, [f64; 3])> = (0..n * n * n)
            .into_par_iter()
            .filter_map(|idx| {
                let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
                let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
                let y = -1.0 + 2.0 * (j as f64 + 0.5) / n as f64;
                let t = 2.0 * PI * k as f64 / n as f64;
                if x * x + y * y > 1.0 {
                    return None;
                }
                let (u, v) = slice_point(&[x, y, t], slice);
                let r = jet.normalized(u, v);
                let score = if strong { r[1].max(r[2]).max(r[3]) } else { r.iter().fold(0.0, |a: f64, b| a.max(*b)) };
                Some((score, slice, [x, y, t]))
            })
            .collect();
        local.sort_by(|a, b| a.0.total_cmp(&b.0));
        local.truncate(16);
        seeds.extend(local);
    }
    let grid_min = seeds.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let results: Vec<(Option<Witness>, f64)> = seeds
        .par_iter()
        .map(|(_, slice, x0)| {
            let res = levenberg_marquardt(|x| slice_residual(&jet, x, *slice, strong), x0, &LmOptions { max_iter: 100, ..LmOptions::default() });
            let (u, v) = slice_point(&res.x, *slice);
            let w = accept(&jet, u, v, strong, tol);
            let nrm = jet.normalized(u, v);
            let score = if strong { nrm[1].max(nrm[2]).max(nrm[3]) } else { nrm.iter().fold(0.0, |a: f64, b| a.max(*b)) };
            (w, if off_axes(u, v) { score } else { f64::INFINITY })
        })
        .collect();
    let mut best = grid_min;
    for (w, score) in results {
        if let Some(w) = w {
            let mut v = Verdict::refuted(Method::NumericSearch, tol, w);
            v.grid = Some(n);
            return v;
        }
        best = best.min(score);
    }
    let status = if best > 1e-4 { Status::Verified } else { Status::Inconclusive };
    Verdict {
        status,
        method: Method::NumericSearch,
        heuristic: true,
        tolerance: tol,
        grid: Some(n),
        min_residual: Some(best),
        witness: None,
        note: Some(format!("multi-start search on two slices, {n}^3 seeds each; smallest normalized residual {best:.3e}")),
    }
}

/// Rigorous slice certificate for a mixed one-face; `None` when it does not close.
fn slice_certificate(face: &ExactPoly, strong: bool, cfg: &Config) -> Option<Verdict> {
    let polys: Vec<ExactPoly> = if strong {
        residual_polys(face).to_vec()
    } else {
        let mut v = vec![face.clone()];
        v.extend(residual_polys(face));
        v
    };
    let opts = cert_opts_slice(cfg);
    let mut cells = 0;
    for slice in [Slice::VCircle, Slice::UCircle] {
        let qs: Vec<SliceTrig> = polys.iter().map(|p| SliceTrig::from_poly(p, slice)).collect();
        match certify_slice(&qs, &opts) {
            Certificate::Certified { cells: c, .. } => cells += c,
            Certificate::Uncertified { .. } => return None,
        }
    }
    let mut v = Verdict::certified(cfg.tol, format!("Lipschitz certificate on both slices, {cells} cells"));
    v.grid = Some(opts.init);
    Some(v)
}

/// Decides a one-face holomorphic in some variable via the critical values of its loop.
fn semiholomorphic_edge(face: &ExactPoly, ch: Chartless, strong: bool, cfg: &Config) -> Verdict {
    let tol = cfg.tol;
    let f = ch.apply(face);
    let g = LoopPoly::from_face(&f, Chart::CxS1);
    let jet_f = Jet::<f64>::new(&f);
    let jet = Jet::<f64>::new(face);
    let mut n = (cfg.samples * 4).max(256);
    loop {
        let Some(scan) = crit_scan(&g, n) else {
            return numeric_search(face, strong, cfg).with_note("leading coefficient of g_u vanishes; numeric search used");
        };
        let dt = 2.0 * PI / n as f64;
        let scale = g.coeffs().values().map(|t| t.l1()).fold(0.0, f64::max).max(1e-300);
        // weak: critical values bounded away from zero
        let (mut hmin, mut arg) = (f64::INFINITY, (0usize, C64::new(0.0, 0.0)));
        for (i, row) in scan.rows.iter().enumerate() {
            for cs in row {
                if cs.h.norm() < hmin {
                    hmin = cs.h.norm();
                    arg = (i, cs.c);
                }
            }
        }
        let weak_witness = |i: usize, c: C64| -> Option<Witness> {
            let t0 = 2.0 * PI * i as f64 / n as f64;
            let res = levenberg_marquardt(|x| slice_residual(&jet_f, x, Slice::VCircle, false), &[c.re, c.im, t0], &LmOptions::default());
            let (u, v) = slice_point(&res.x, Slice::VCircle);
            let (u, v) = ch.point_back(u, v);
            accept(&jet, u, v, false, tol)
        };
        let has_cps = scan.rows.iter().any(|r| !r.is_empty());
        if !has_cps {
            return Verdict::certified(tol, "no critical points of the loop off u = 0");
        }
        if hmin <= 1e-6 * scale {
            if let Some(w) = weak_witness(arg.0, arg.1) {
                return Verdict::refuted(Method::ExactShortcut, tol, w);
            }
        }
        if !strong {
            if hmin > scan.lipschitz * dt / 2.0 {
                let mut v = Verdict::certified(tol, format!("critical values of the loop stay away from 0 ({n} samples)"));
                v.min_residual = Some(hmin);
                v.grid = Some(n);
                return v;
            }
            if n < 1 << 16 {
                n *= 2;
                continue;
            }
            if hmin > tol * scale {
                let mut v = Verdict::certified(tol, "critical values sampled away from 0; Lipschitz margin not reached");
                v.heuristic = true;
                v.min_residual = Some(hmin);
                v.grid = Some(n);
                return v;
            }
            let mut v = Verdict::inconclusive(Method::ExactShortcut, tol, "critical value close to 0 without a confirmed witness");
            v.min_residual = Some(hmin);
            return v;
        }
        // strong: Im(conj(h) h_t) never vanishes along any branch
        let dval = |cs: &CritSample| (cs.h.conj() * cs.ht).im;
        let mut dmin = f64::INFINITY;
        let mut crossing: Option<(usize, C64)> = None;
        for (i, row) in scan.rows.iter().enumerate() {
            for cs in row {
                let d = dval(cs);
                dmin = dmin.min(d.abs());
                if crossing.is_none() {
                    let next = &scan.rows[(i + 1) % n];
                    if let Some(nb) = next.iter().min_by(|a, b| (a.c - cs.c).norm().total_cmp(&(b.c - cs.c).norm())) {
                        if (d > 0.0) != (dval(nb) > 0.0) || d == 0.0 {
                            crossing = Some((i, cs.c));
                        }
                    }
                }
            }
        }
        if let Some((i, c)) = crossing {
            let t0 = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            for x0 in [[c.re, c.im, t0], [c.re, c.im, t0 - dt], [c.re, c.im, t0 + dt]] {
                let res = levenberg_marquardt(|x| slice_residual(&jet_f, x, Slice::VCircle, true), &x0, &LmOptions::default());
                let (u, v) = slice_point(&res.x, Slice::VCircle);
                let (u, v) = ch.point_back(u, v);
                if let Some(w) = accept(&jet, u, v, true, tol) {
                    return Verdict::refuted(Method::ExactShortcut, tol, w);
                }
            }
            if n < 1 << 14 {
                n *= 2;
                continue;
            }
            return Verdict::inconclusive(Method::ExactShortcut, tol, "argument derivative changes sign but no witness confirmed");
        }
        let rel = dmin / (scale * scale);
        if rel > tol {
            let mut v = Verdict::certified(tol, format!("argument derivative of the critical values keeps its sign on every branch ({n} samples)"));
            v.heuristic = true;
            v.min_residual = Some(rel);
            v.grid = Some(n);
            return v;
        }
        let mut v = Verdict::inconclusive(Method::ExactShortcut, tol, "argument derivative of a critical value nearly vanishes");
        v.min_residual = Some(rel);
        return v;
    }
}

fn edge_verdict(face: &ExactPoly, strong: bool, cfg: &Config) -> Verdict {
    if let Some(ch) = Chartless::find(face) {
        return semiholomorphic_edge(face, ch, strong, cfg);
    }
    if let Some(v) = slice_certificate(face, strong, cfg) {
        return v;
    }
    numeric_search(face, strong, cfg)
}

/// Trueness of a one-face: a zero in `(C*)²`.
fn true_verdict(face: &ExactPoly, cfg: &Config) -> Verdict {
    let tol = cfg.tol;
    if Chartless::find(face).is_some() {
        return Verdict::certified(tol, "holomorphic in one variable with at least two distinct powers: roots off the axes exist");
    }
    let jet = Jet::<f64>::new(face);
    let n = (cfg.grid / 8).max(8);
    for slice in [Slice::VCircle, Slice::UCircle] {
        let mut seeds: Vec<(f64, [f64; 3])> = Vec::new();
        for idx in 0..n * n * n {
            let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
            let x = [-1.0 + 2.0 * (i as f64 + 0.5) / n as f64, -1.0 + 2.0 * (j as f64 + 0.5) / n as f64, 2.0 * PI * k as f64 / n as f64];
            if x[0] * x[0] + x[1] * x[1] > 1.0 {
                continue;
            }
            let (u, v) = slice_point(&x, slice);
            seeds.push((jet.normalized(u, v)[0], x));
        }
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, x0) in seeds.iter().take(12) {
            let res = levenberg_marquardt(
                |x| {
                    let (u, v) = slice_point(x, slice);
                    let f = jet.at(u, v).f;
                    vec![f.re, f.im]
                },
                x0,
                &LmOptions::default(),
            );
            let (u, v) = slice_point(&res.x, slice);
            let r = jet.at(u, v).f.norm();
            if off_axes(u, v) && r < tol {
                let mut v = Verdict::certified(tol, "zero found off the axes");
                v.method = Method::NumericSearch;
                v.witness = Some(Witness { u, v: v_of(slice, &res.x), residual: r });
                return v;
            }
        }
    }
    let opts = cert_opts_slice(cfg);
    let mut all = true;
    for slice in [Slice::VCircle, Slice::UCircle] {
        all &= certify_slice(&[SliceTrig::from_poly(face, slice)], &opts).is_certified();
    }
    if all {
        let mut v = Verdict::certified(tol, "face function certified zero-free on both slices");
        v.status = Status::Refuted;
        return v;
    }
    Verdict::inconclusive(Method::NumericSearch, tol, "no zero found and no certificate of emptiness")
}

fn v_of(slice: Slice, x: &[f64]) -> C64 {
    slice_point(x, slice).1
}

fn implied(status: Status, tol: f64, note: &str) -> Verdict {
    Verdict {
        status,
        method: Method::Implied,
        heuristic: false,
        tolerance: tol,
        grid: None,
        min_residual: None,
        witness: None,
        note: Some(note.to_string()),
    }
}

/// Enforces strong ⇒ weak and its contrapositive on one target.
fn consolidate(tv: &mut TargetVerdicts, jet: &Jet<f64>, tol: f64) {
    if tv.weak.status == Status::Refuted && tv.strong.status != Status::Refuted {
        if tv.strong.status == Status::Verified {
            let note = "weak refutation contradicts strong verification";
            tv.weak = Verdict::inconclusive(tv.weak.method, tol, note);
            tv.strong = Verdict::inconclusive(tv.strong.method, tol, note);
            return;
        }
        let mut s = tv.weak.clone();
        s.method = Method::Implied;
        s.note = Some("a critical zero is a critical point".into());
        tv.strong = s;
    }
    if tv.strong.status == Status::Refuted && tv.weak.status != Status::Refuted {
        if let Some(w) = &tv.strong.witness {
            let r = witness_residual(&raw_residuals(jet, w.u, w.v), false);
            if r < tol {
                if tv.weak.status == Status::Verified && !tv.weak.heuristic {
                    let note = "strong witness lies on the zero set, contradicting the weak certificate";
                    tv.weak = Verdict::inconclusive(tv.weak.method, tol, note);
                    tv.strong = Verdict::inconclusive(tv.strong.method, tol, note);
                    return;
                }
                tv.weak = Verdict::refuted(Method::Implied, tol, Witness { residual: r, ..w.clone() });
            }
        }
    }
    if tv.strong.status == Status::Verified && tv.weak.status != Status::Verified {
        if tv.weak.status == Status::Refuted {
            let note = "strong verification contradicts weak refutation";
            tv.weak = Verdict::inconclusive(tv.weak.method, tol, note);
            tv.strong = Verdict::inconclusive(tv.strong.method, tol, note);
        } else {
            tv.weak = implied(Status::Verified, tol, "no critical points at all");
        }
    }
}

fn part(targets: &[&TargetVerdicts], strong: bool) -> Status {
    Status::all(targets.iter().map(|t| if strong { t.strong.status } else { t.weak.status }))
}

/// Runs every check on `p` and assembles the report.
pub fn analyze(p: &ExactPoly, cfg: &Config) -> Result<NondegReport, NewtonError> {
    let nd = newton_polygon(p)?;
    analyze_with(p, &nd, cfg)
}

pub fn analyze_with(p: &ExactPoly, nd: &NewtonData, cfg: &Config) -> Result<NondegReport, NewtonError> {
    let tol = cfg.tol;
    let n = nd.n_faces();
    let edges: Vec<TargetVerdicts> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let face = nd.face_function(p, FaceRef::Face(i)).expect("face exists");
            let jet = Jet::<f64>::new(&face);
            let weak = edge_verdict(&face, false, cfg);
            let strong = if weak.status == Status::Refuted { weak.clone() } else { edge_verdict(&face, true, cfg) };
            let mut tv = TargetVerdicts { target: Target::Edge(i), extreme: false, weak, strong };
            consolidate(&mut tv, &jet, tol);
            tv
        })
        .collect();
    let vertices: Vec<TargetVerdicts> = nd
        .vertices
        .par_iter()
        .map(|vx| {
            let face = nd.face_function(p, FaceRef::Vertex(vx.point)).expect("vertex exists");
            let jet = Jet::<f64>::new(&face);
            let weak = torus_verdict(&face, TorusKind::Torus, false, false, cfg);
            let strong = torus_verdict(&face, TorusKind::Torus, true, false, cfg);
            let mut tv = TargetVerdicts { target: Target::Vertex(vx.point), extreme: vx.extreme, weak, strong };
            consolidate(&mut tv, &jet, tol);
            tv
        })
        .collect();
    let f1 = nd.face_function(p, FaceRef::Face(1))?;
    let fn_ = nd.face_function(p, FaceRef::Face(n))?;
    let axis = |face: &ExactPoly, kind: TorusKind, target: Target| {
        let jet = Jet::<f64>::new(face);
        let weak = torus_verdict(face, kind, false, false, cfg);
        let strong = torus_verdict(face, kind, true, false, cfg);
        let mut tv = TargetVerdicts { target, extreme: false, weak, strong };
        consolidate(&mut tv, &jet, tol);
        tv
    };
    let mut axis_u0 = axis(&f1, TorusKind::AxisU0, Target::AxisU0);
    let mut axis_v0 = axis(&fn_, TorusKind::AxisV0, Target::AxisV0);
    let mut notes = Vec::new();
    // the vertex on an axis sees the axis critical set after moving off the axis
    let first = nd.vertices[0].point;
    let last = nd.vertices[nd.vertices.len() - 1].point;
    let mut vertices = vertices;
    let one = C64::new(1.0, 0.0);
    for (axis_tv, vpoint, on_axis, u_side) in [(&mut axis_u0, first, first.0 == 0, true), (&mut axis_v0, last, last.1 == 0, false)] {
        let moved = |w: &Witness| if u_side { (one, w.v) } else { (w.u, one) };
        if !on_axis {
            continue;
        }
        let vt = vertices.iter_mut().find(|t| t.target == Target::Vertex(vpoint)).expect("extreme vertex");
        let vface = nd.face_function(p, FaceRef::Vertex(vpoint))?;
        let vjet = Jet::<f64>::new(&vface);
        for strong in [false, true] {
            let (ax, vx) = if strong { (&mut axis_tv.strong, &mut vt.strong) } else { (&mut axis_tv.weak, &mut vt.weak) };
            if ax.status == Status::Refuted && vx.status != Status::Refuted {
                if let Some(w) = &ax.witness {
                    let (u, v) = moved(w);
                    let r = witness_residual(&raw_residuals(&vjet, u, v), strong);
                    if r < tol {
                        *vx = Verdict::refuted(Method::Implied, tol, Witness { u, v, residual: r });
                        vx.note = Some("axis witness moved off the axis".into());
                    }
                }
            }
            if vx.status == Status::Verified && !vx.heuristic {
                match ax.status {
                    Status::Inconclusive => *ax = implied(Status::Verified, tol, "the vertex on this axis is non-degenerate"),
                    Status::Refuted => {
                        notes.push(format!("axis refutation contradicts vertex {:?}; both set inconclusive", vpoint));
                        *ax = Verdict::inconclusive(Method::Implied, tol, "contradiction with the vertex on this axis");
                        *vx = Verdict::inconclusive(Method::Implied, tol, "contradiction with the axis");
                    }
                    Status::Verified => {}
                }
            }
        }
    }
    let nice_vertices: Vec<TargetVerdict> = nd
        .non_extreme_vertices()
        .map(|vx| {
            let face = nd.face_function(p, FaceRef::Vertex(vx.point)).expect("vertex exists");
            TargetVerdict { target: Target::Vertex(vx.point), verdict: torus_verdict(&face, TorusKind::Torus, false, true, cfg) }
        })
        .collect();
    let true_faces: Vec<TargetVerdict> = (1..=n)
        .map(|i| {
            let face = nd.face_function(p, FaceRef::Face(i)).expect("face exists");
            TargetVerdict { target: Target::Edge(i), verdict: true_verdict(&face, cfg) }
        })
        .collect();
    let all_v: Vec<&TargetVerdicts> = edges.iter().chain(vertices.iter()).collect();
    let inner: Vec<&TargetVerdicts> = edges
        .iter()
        .chain(vertices.iter().filter(|t| !t.extreme))
        .chain([&axis_u0, &axis_v0])
        .collect();
    let oka_nd = part(&all_v, false);
    let oka_strong_nd = part(&all_v, true);
    let inner_nd = part(&inner, false);
    let strong_inner_nd = part(&inner, true);
    let nice = Status::all(nice_vertices.iter().map(|t| t.verdict.status));
    let true_polynomial = Status::all(true_faces.iter().map(|t| t.verdict.status));
    let convenient = classify_structure(p).convenient;
    if oka_nd == Status::Refuted && inner_nd == Status::Verified {
        for t in &vertices {
            if t.weak.status == Status::Refuted {
                notes.push(format!("vertex {:?} is Newton degenerate while the boundary is inner non-degenerate", match t.target {
                    Target::Vertex(pt) => pt,
                    _ => (0, 0),
                }));
            }
        }
    }
    Ok(NondegReport {
        edges,
        vertices,
        axis_u0,
        axis_v0,
        nice_vertices,
        true_faces,
        convenient,
        oka_nd,
        oka_strong_nd,
        inner_nd,
        strong_inner_nd,
        nice,
        true_polynomial,
        weakly_isolated: inner_nd == Status::Verified,
        isolated: strong_inner_nd == Status::Verified,
        notes,
    })
}

impl NondegReport {
    pub fn vertex(&self, point: (u64, u64)) -> Option<&TargetVerdicts> {
        self.vertices.iter().find(|t| t.target == Target::Vertex(point))
    }

    fn collect(&self, inner: bool, strong: bool) -> PartReport {
        let pick = |t: &TargetVerdicts| TargetVerdict { target: t.target, verdict: if strong { t.strong.clone() } else { t.weak.clone() } };
        let mut v: Vec<TargetVerdict> = self.edges.iter().map(pick).collect();
        if inner {
            v.extend(self.vertices.iter().filter(|t| !t.extreme).map(pick));
            v.push(pick(&self.axis_u0));
            v.push(pick(&self.axis_v0));
        } else {
            v.extend(self.vertices.iter().map(pick));
        }
        let status = match (inner, strong) {
            (false, false) => self.oka_nd,
            (false, true) => self.oka_strong_nd,
            (true, false) => self.inner_nd,
            (true, true) => self.strong_inner_nd,
        };
        PartReport { status, verdicts: v }
    }
}

/// (Strong) Newton non-degeneracy on every compact face.
pub fn check_oka(p: &ExactPoly, strong: bool, cfg: &Config) -> Result<PartReport, NewtonError> {
    Ok(analyze(p, cfg)?.collect(false, strong))
}

/// (Strong) inner non-degeneracy.
pub fn check_inner(p: &ExactPoly, strong: bool, cfg: &Config) -> Result<PartReport, NewtonError> {
    Ok(analyze(p, cfg)?.collect(true, strong))
}

/// Niceness: no non-extreme vertex function vanishes on `(C*)²`.
pub fn check_nice(p: &ExactPoly, cfg: &Config) -> Result<PartReport, NewtonError> {
    let nd = newton_polygon(p)?;
    let verdicts: Vec<TargetVerdict> = nd
        .non_extreme_vertices()
        .map(|vx| {
            let face = nd.face_function(p, FaceRef::Vertex(vx.point)).expect("vertex exists");
            TargetVerdict { target: Target::Vertex(vx.point), verdict: torus_verdict(&face, TorusKind::Torus, false, true, cfg) }
        })
        .collect();
    Ok(PartReport { status: Status::all(verdicts.iter().map(|t| t.verdict.status)), verdicts })
}

/// Trueness of every one-face.
pub fn check_true(p: &ExactPoly, cfg: &Config) -> Result<PartReport, NewtonError> {
    let nd = newton_polygon(p)?;
    let verdicts: Vec<TargetVerdict> = (1..=nd.n_faces())
        .map(|i| {
            let face = nd.face_function(p, FaceRef::Face(i)).expect("face exists");
            TargetVerdict { target: Target::Edge(i), verdict: true_verdict(&face, cfg) }
        })
        .collect();
    Ok(PartReport { status: Status::all(verdicts.iter().map(|t| t.verdict.status)), verdicts })
}

/// Weak or strong verdict for a single face function on `(C*)²` (numeric search only).
pub fn face_search(face: &ExactPoly, strong: bool, cfg: &Config) -> Verdict {
    numeric_search(face, strong, cfg)
}

/// The same verdict through the critical values of the loop, for faces holomorphic in one
/// variable; `None` otherwise.
pub fn face_shortcut(face: &ExactPoly, strong: bool, cfg: &Config) -> Option<Verdict> {
    Chartless::find(face).map(|ch| semiholomorphic_edge(face, ch, strong, cfg))
}

/// `p + M1 + M2`, where `M1` (in `v, v̄`) and `M2` (in `u, ū`) lie strictly above the
/// extremal faces, making the result convenient.
pub fn convenientize(p: &ExactPoly, m1: &ExactPoly, m2: &ExactPoly) -> Result<ExactPoly, ConvenientizeError> {
    let nd = newton_polygon(p)?;
    let st = classify_structure(p);
    if st.convenient {
        return Err(ConvenientizeError::NotNeeded);
    }
    if m1.depends_on(Var::U) || m1.depends_on(Var::Ubar) {
        return Err(ConvenientizeError::WrongVariables("M1".into(), "v and conj(v)".into()));
    }
    if m2.depends_on(Var::V) || m2.depends_on(Var::Vbar) {
        return Err(ConvenientizeError::WrongVariables("M2".into(), "u and conj(u)".into()));
    }
    let f1 = nd.first_face();
    let fnn = nd.last_face();
    if let Some(e) = m1.iter().map(|(m, _)| (m.v + m.vbar) as u64).min() {
        // e > d(P_1)/p_{1,2}
        if e * f1.weight.p2 <= f1.d {
            return Err(ConvenientizeError::ExponentTooLow { which: "M1".into(), exponent: e, bound: ratio(f1.d, f1.weight.p2) });
        }
    } else if !st.v_convenient {
        return Err(ConvenientizeError::MissingTerm("v".into(), "M1".into()));
    }
    if let Some(e) = m2.iter().map(|(m, _)| (m.u + m.ubar) as u64).min() {
        if e * fnn.weight.p1 <= fnn.d {
            return Err(ConvenientizeError::ExponentTooLow { which: "M2".into(), exponent: e, bound: ratio(fnn.d, fnn.weight.p1) });
        }
    } else if !st.u_convenient {
        return Err(ConvenientizeError::MissingTerm("u".into(), "M2".into()));
    }
    Ok(&(p + m1) + m2)
}

fn ratio(a: u64, b: u64) -> String {
    let g = num_integer::gcd(a, b).max(1);
    if b / g == 1 {
        (a / g).to_string()
    } else {
        format!("{}/{}", a / g, b / g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;

    fn p(s: &str) -> ExactPoly {
        parse_poly(s).unwrap()
    }

    fn quick() -> Config {
        Config { grid: 64, samples: 256, tol: 1e-8 }
    }

    #[test]
    fn running_example() {
        let f = p("u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)");
        let r = analyze(&f, &quick()).unwrap();
        assert_eq!(r.inner_nd, Status::Verified);
        assert_eq!(r.oka_nd, Status::Refuted);
        let v = r.vertex((0, 7)).unwrap();
        assert_eq!(v.weak.status, Status::Refuted);
        let w = v.weak.witness.as_ref().unwrap();
        assert!((w.v.powu(7) + w.v.conj().powu(7)).norm() < 1e-8);
        assert_eq!(r.nice, Status::Verified);
        assert!(r.weakly_isolated);
    }

    #[test]
    fn cusp_and_monomial() {
        let r = analyze(&p("u^2 - v^3"), &quick()).unwrap();
        assert_eq!((r.strong_inner_nd, r.oka_strong_nd, r.true_polynomial), (Status::Verified, Status::Verified, Status::Verified));
        assert!(r.isolated);
        let r = analyze(&p("u*v"), &quick());
        assert!(matches!(r, Err(NewtonError::NoCompactFace)));
        let r = analyze(&p("u*v + u^3 + v^3"), &quick()).unwrap();
        for e in &r.edges {
            assert_eq!(e.strong.status, Status::Verified);
        }
    }

    #[test]
    fn inconvenient_degenerate() {
        let r = analyze(&p("u^4 - u^2*v^3"), &quick()).unwrap();
        assert_eq!(r.inner_nd, Status::Refuted);
        assert_eq!(r.axis_u0.weak.status, Status::Refuted);
        assert_eq!(r.oka_nd, Status::Verified);
    }

    #[test]
    fn niceness_and_trueness() {
        let r = check_nice(&p("u^4 + u^2*(v + conj(v)) + v^3"), &quick()).unwrap();
        assert_eq!(r.status, Status::Refuted);
        let r = check_true(&p("u*conj(u) + v*conj(v)"), &quick()).unwrap();
        assert_eq!(r.status, Status::Refuted);
        let r = check_true(&p("u^2 - v^3"), &quick()).unwrap();
        assert_eq!(r.status, Status::Verified);
    }

    #[test]
    fn convenientization() {
        let out = convenientize(&p("u^2*v - v^4"), &ExactPoly::zero(), &p("u^9")).unwrap();
        assert_eq!(out, p("u^2*v - v^4 + u^9"));
        assert!(classify_structure(&out).convenient);
        let ex = p("u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)");
        assert_eq!(convenientize(&ex, &p("v^9"), &p("u^9")), Err(ConvenientizeError::NotNeeded));
        // d(P;f)/p_1 = 8/3 for u²v − v⁴; 3 exceeds it, but u^2 does not
        assert!(convenientize(&p("u^2*v - v^4"), &ExactPoly::zero(), &p("u^3")).is_ok());
        assert!(matches!(
            convenientize(&p("u^2*v - v^4"), &ExactPoly::zero(), &p("u^2")),
            Err(ConvenientizeError::ExponentTooLow { .. })
        ));
        // u^3 v − v^3: face weight (2,3), d = 9, bound 9/2 on |u|-exponents
        assert!(matches!(
            convenientize(&p("u^3*v - v^3"), &ExactPoly::zero(), &p("u^4")),
            Err(ConvenientizeError::ExponentTooLow { .. })
        ));
    }
}

//! Nested links: the braid `B(B_1, …, B_N)` built from rescaled braids, zero sets of mixed
//! face loops traced as curves in a solid torus, and the link of an isolated singularity.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braids::{cycle_count, extract_word, track_roots, Braid64, BraidError, BraidWord};
use crate::config::Config;
use crate::mixedpoly::{classify_structure, ExactPoly, Var};
use crate::newton::{newton_polygon, FaceRef, NewtonData, NewtonError};
use crate::nondegen::{analyze_with, NondegReport};
use crate::scalar::Coeff;
use crate::status::Status;
use crate::trig::{Chart, LoopPoly};

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("braid {0} passes through 0")]
    NotAffine(usize),
    #[error("no scale in the search range separates the nested braids")]
    DisjointnessFailure,
    #[error("braids are sampled on different grids")]
    SamplingMismatch,
    #[error("the zero set is singular near u = {u}, t = {t}")]
    SingularZeroSet { u: C64, t: f64 },
    #[error("a traced curve did not close up")]
    TraceNotClosed,
    #[error("piece {0} meets the core")]
    CoreViolation(usize),
    #[error("preconditions failed: inner non-degeneracy {inner}, niceness {nice}")]
    PreconditionFailed { inner: Status, nice: Status, report: Box<NondegReport> },
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

/// A closed curve in a solid torus, sampled as `(z, t)` with `t ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracedCurve {
    pub points: Vec<(C64, f64)>,
    /// Degree of the projection to the circle.
    pub wrapping: i64,
    /// The projection to the circle is monotone, so the curve is a closed braid.
    pub braided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolidTorusLink {
    pub components: Vec<TracedCurve>,
    pub chart: Chart,
    /// Every component stays away from `z = 0`.
    pub avoids_core: bool,
    /// The pieces as a geometric braid, when they form one.
    pub braid: Option<Braid64>,
    pub seed_grid: usize,
    pub radius: f64,
    pub warnings: Vec<String>,
}

impl SolidTorusLink {
    pub fn empty(chart: Chart) -> Self {
        SolidTorusLink { components: Vec::new(), chart, avoids_core: true, braid: None, seed_grid: 0, radius: 0.0, warnings: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    fn from_braid(b: Braid64, chart: Chart) -> Self {
        let mut seen = vec![false; b.strand_count()];
        let mut components = Vec::new();
        for j0 in 0..b.strand_count() {
            if seen[j0] {
                continue;
            }
            let mut points = Vec::new();
            let mut j = j0;
            let mut w = 0;
            loop {
                seen[j] = true;
                for k in 0..b.samples {
                    points.push((b.strands[j][k], b.t(k)));
                }
                w += 1;
                j = b.permutation[j];
                if j == j0 {
                    break;
                }
            }
            components.push(TracedCurve { points, wrapping: w, braided: true });
        }
        let avoids_core = b.affine;
        SolidTorusLink { components, chart, avoids_core, braid: Some(b), seed_grid: 0, radius: 0.0, warnings: Vec::new() }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    ClosedBraid,
    BraidPlusAxis,
    /// Pieces on both solid tori that are not all braids.
    TorusPair,
}

/// Summary of one nested piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub face: usize,
    pub components: usize,
    pub strands: usize,
    pub wrapping: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkDescription {
    pub kind: LinkKind,
    pub word: Option<BraidWord>,
    /// The braid axis `{v = 0}` is a component.
    pub axis: bool,
    /// `{u = 0}` is a component; when a word is present it is one of its strands.
    pub core_u: bool,
    /// `{v = 0}` is a component.
    pub core_v: bool,
    pub components: usize,
    /// The scales `ε^{k_i}` used for nesting.
    pub nesting: Vec<f64>,
    pub pieces: Vec<PieceSummary>,
    /// Coordinates were conjugated or exchanged before reading the braid.
    pub transform: Option<String>,
}

impl LinkDescription {
    /// The description without sampling details, for comparing two links.
    pub fn signature(&self) -> (LinkKind, Option<&BraidWord>, bool, bool, usize, Vec<Vec<i64>>) {
        let mut w: Vec<Vec<i64>> = self.pieces.iter().map(|p| p.wrapping.clone()).collect();
        w.iter_mut().for_each(|x| x.sort());
        (self.kind, self.word.as_ref(), self.axis, self.core_u, self.components, w)
    }
}

/// The nested braid and its word.
#[derive(Clone, Debug, PartialEq)]
pub struct Nested {
    pub braid: Braid64,
    pub word: BraidWord,
    pub epsilon: f64,
    pub scales: Vec<f64>,
}

/// `B(B_1, …, B_N)` with `B_i` rescaled by `ε^{k_i}`; the default exponents are `N − i + 1`.
pub fn nest_braids(bs: &[Braid64], ks: Option<&[f64]>) -> Result<Nested, LinkError> {
    if bs.is_empty() {
        return Err(LinkError::DisjointnessFailure);
    }
    let n = bs.len();
    // a root of `B_1` resting at the origin is a strand of the union
    let bs = &with_origin_strands(bs);
    for (i, b) in bs.iter().enumerate().skip(1) {
        if !b.affine {
            return Err(LinkError::NotAffine(i + 1));
        }
    }
    if bs.iter().any(|b| b.samples != bs[0].samples) {
        return Err(LinkError::SamplingMismatch);
    }
    let ks: Vec<f64> = match ks {
        Some(k) => k.to_vec(),
        None => (0..n).map(|i| (n - i) as f64).collect(),
    };
    if ks.len() != n || ks.windows(2).any(|w| w[0] <= w[1]) || ks.iter().any(|k| *k <= 0.0) {
        return Err(LinkError::DisjointnessFailure);
    }
    let separated = |eps: f64| -> bool {
        let mut inner = 0.0f64;
        for i in 0..n {
            let s = eps.powf(ks[i]);
            if i > 0 && inner >= 0.25 * s * bs[i].min_modulus() {
                return false;
            }
            inner = inner.max(s * bs[i].max_modulus());
        }
        inner < 0.5 && inner.is_finite()
    };
    let build = |eps: f64| -> Result<(Braid64, BraidWord, Vec<f64>), LinkError> {
        let scales: Vec<f64> = ks.iter().map(|k| eps.powf(*k)).collect();
        let parts: Vec<Braid64> = bs.iter().zip(&scales).map(|(b, s)| b.scaled(*s)).collect();
        let u = Braid64::union(&parts);
        let w = extract_word(&u)?;
        Ok((u, w, scales))
    };
    let mut eps = 0.5;
    let mut tries = 0;
    while !separated(eps) {
        eps /= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(LinkError::DisjointnessFailure);
        }
    }
    let mut cur = build(eps)?;
    for _ in 0..40 {
        let next = build(eps / 2.0)?;
        if next.1 == cur.1 {
            let (braid, word, scales) = cur;
            return Ok(Nested { braid, word, epsilon: eps, scales });
        }
        eps /= 2.0;
        cur = next;
        if cur.2.iter().any(|s| *s < 1e-280) {
            break;
        }
    }
    Err(LinkError::DisjointnessFailure)
}

/// Word of the union of `B_i` scaled by `ε^{k_i}` for a fixed `ε`.
pub fn nested_word_at(bs: &[Braid64], ks: &[f64], eps: f64) -> Result<BraidWord, LinkError> {
    let bs = with_origin_strands(bs);
    let parts: Vec<Braid64> = bs.iter().zip(ks).map(|(b, k)| b.scaled(eps.powf(*k))).collect();
    Ok(extract_word(&Braid64::union(&parts))?)
}

/// The closure of `w` together with its braid axis.
pub fn add_axis(w: &BraidWord) -> LinkDescription {
    LinkDescription {
        kind: LinkKind::BraidPlusAxis,
        word: Some(w.clone()),
        axis: true,
        core_u: false,
        core_v: true,
        components: w.components() + 1,
        nesting: Vec::new(),
        pieces: Vec::new(),
        transform: None,
    }
}

/// Options for the level-set tracer.
#[derive(Clone, Debug)]
pub struct TraceOptions {
    /// Seed grid points per real direction of the chart variable.
    pub seed_grid: usize,
    /// Circle slices searched for seeds.
    pub seed_slices: usize,
    /// Samples of the circle used for braids and the step length `2π/samples`.
    pub samples: usize,
    pub corrector_tol: f64,
    /// Drop seeds and flag curves closer than this to `z = 0`.
    pub core_exclusion: Option<f64>,
}

impl TraceOptions {
    pub fn from_config(cfg: &Config) -> Self {
        TraceOptions { seed_grid: 64, seed_slices: 16, samples: cfg.samples, corrector_tol: 1e-10, core_exclusion: None }
    }
}

struct NumericLoop {
    g: LoopPoly<C64>,
    scale: f64,
}

impl NumericLoop {
    fn new<K: Coeff>(g: &LoopPoly<K>) -> Self {
        let g = g.map_coeffs(|c| c.to_complex::<f64>());
        let scale = g.coeffs().values().map(|t| t.l1()).fold(0.0, f64::max).max(1e-300);
        NumericLoop { g, scale }
    }

    fn value(&self, x: [f64; 3]) -> C64 {
        self.g.eval(C64::new(x[0], x[1]), x[2])
    }

    /// Gradients of `Re g` and `Im g` in `(x, y, t)`.
    fn jacobian(&self, x: [f64; 3]) -> [[f64; 3]; 2] {
        let z = C64::new(x[0], x[1]);
        let (gz, gzb) = self.g.eval_dz(z, x[2]);
        let gx = gz + gzb;
        let gy = (gz - gzb) * C64::new(0.0, 1.0);
        let gt = self.g.eval_dt(z, x[2]);
        [[gx.re, gy.re, gt.re], [gx.im, gy.im, gt.im]]
    }

    /// Root-modulus bound from the coefficient norms, by total degree.
    fn radius(&self) -> f64 {
        let d = self.g.degree() as usize;
        let mut by_deg = vec![0.0; d + 1];
        for ((a, b), t) in self.g.coeffs() {
            by_deg[(a + b) as usize] += t.l1();
        }
        let lead = self.g.coeffs().iter().filter(|((a, b), _)| (a + b) as usize == d).map(|(_, t)| t.l1()).sum::<f64>();
        let lead = lead.max(1e-300);
        let mut r: f64 = 1.0;
        for (j, c) in by_deg.iter().enumerate().take(d) {
            r = r.max(2.0 * (c / lead).powf(1.0 / (d - j) as f64));
        }
        r * 1.1
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Minimum-norm Newton corrections back onto `g = 0`.
fn correct(nl: &NumericLoop, mut x: [f64; 3], tol: f64) -> Option<[f64; 3]> {
    for _ in 0..12 {
        let g = nl.value(x);
        if g.norm() <= tol * nl.scale {
            return Some(x);
        }
        let j = nl.jacobian(x);
        // J Jᵀ y = −g, Δ = Jᵀ y
        let a = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[0][2] * j[0][2];
        let b = j[0][0] * j[1][0] + j[0][1] * j[1][1] + j[0][2] * j[1][2];
        let c = j[1][0] * j[1][0] + j[1][1] * j[1][1] + j[1][2] * j[1][2];
        let det = a * c - b * b;
        if det.abs() <= 1e-300 {
            return None;
        }
        let y0 = (-g.re * c + g.im * b) / det;
        let y1 = (-g.im * a + g.re * b) / det;
        for k in 0..3 {
            x[k] += j[0][k] * y0 + j[1][k] * y1;
        }
    }
    (nl.value(x).norm() <= tol * nl.scale).then_some(x)
}

fn wrap_t(t: f64) -> f64 {
    t.rem_euclid(2.0 * PI)
}

fn torus_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let mut dt = (a[2] - b[2]).rem_euclid(2.0 * PI);
    if dt > PI {
        dt -= 2.0 * PI;
    }
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + dt * dt).sqrt()
}

/// Traces the zero set of a (possibly mixed) loop polynomial in its solid torus.
pub fn trace_loop_zero_set<K: Coeff>(g: &LoopPoly<K>, opts: &TraceOptions) -> Result<SolidTorusLink, LinkError> {
    let nl = NumericLoop::new(g);
    let radius = nl.radius();
    let n = opts.seed_grid.max(8);
    let excl = opts.core_exclusion.unwrap_or(0.0);
    let tol = opts.corrector_tol;
    // seeds: local minima of |g| on grid slices, polished at fixed t
    let slices: Vec<f64> = (0..opts.seed_slices.max(1)).map(|j| 2.0 * PI * (j as f64 + 0.37) / opts.seed_slices.max(1) as f64).collect();
    let mut seeds: Vec<[f64; 3]> = slices
        .par_iter()
        .flat_map_iter(|&t| {
            let h = 2.0 * radius / (n - 1) as f64;
            let val: Vec<Vec<f64>> =
                (0..n).map(|i| (0..n).map(|j| nl.value([-radius + i as f64 * h, -radius + j as f64 * h, t]).norm()).collect()).collect();
            let mut out = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let v = val[i][j];
                    let mut is_min = true;
                    for di in -1i64..=1 {
                        for dj in -1i64..=1 {
                            let (a, b) = (i as i64 + di, j as i64 + dj);
                            if (di, dj) != (0, 0) && a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n && val[a as usize][b as usize] < v {
                                is_min = false;
                            }
                        }
                    }
                    if !is_min {
                        continue;
                    }
                    if let Some(z) = polish_slice(&nl, C64::new(-radius + i as f64 * h, -radius + j as f64 * h), t, tol) {
                        if z.norm() > excl {
                            out.push([z.re, z.im, t]);
                        }
                    }
                }
            }
            out
        })
        .collect();
    seeds.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let step = 2.0 * PI / opts.samples.max(64) as f64 * (1.0 + radius).min(4.0);
    let mut curves: Vec<(Vec<[f64; 3]>, f64)> = Vec::new();
    let mut warnings = Vec::new();
    let mut avoids_core = true;
    for s in seeds {
        if curves.iter().any(|(c, _)| c.iter().any(|p| torus_dist(*p, s) < 3.0 * step)) {
            continue;
        }
        let (pts, dt_total) = trace_curve(&nl, s, step, tol)?;
        if excl > 0.0 && pts.iter().any(|p| p[0].hypot(p[1]) <= excl) {
            avoids_core = false;
        }
        curves.push((pts, dt_total));
    }
    let min_mod = curves.iter().flat_map(|(c, _)| c.iter().map(|p| p[0].hypot(p[1]))).fold(f64::INFINITY, f64::min);
    if min_mod <= 1e-9 * radius {
        avoids_core = false;
    }
    if curves.is_empty() && nl.g.degree() > 0 {
        warnings.push(format!("no zeros found on {} slices of a {n}x{n} grid", opts.seed_slices));
    }
    let components: Vec<TracedCurve> = curves
        .into_iter()
        .map(|(pts, dt_total)| {
            let wrapping = (dt_total / (2.0 * PI)).round() as i64;
            let braided = wrapping != 0 && pts.windows(2).all(|w| {
                let mut d = w[1][2] - w[0][2];
                if d < -PI {
                    d += 2.0 * PI;
                }
                d > 0.0
            });
            TracedCurve { points: pts.iter().map(|p| (C64::new(p[0], p[1]), wrap_t(p[2]))).collect(), wrapping, braided }
        })
        .collect();
    let mut link = SolidTorusLink { components, chart: g.chart, avoids_core, braid: None, seed_grid: n, radius, warnings };
    if !link.components.is_empty() && link.components.iter().all(|c| c.braided) {
        link.braid = Some(curves_to_braid(&link.components, opts.samples));
    }
    Ok(link)
}

fn polish_slice(nl: &NumericLoop, mut z: C64, t: f64, tol: f64) -> Option<C64> {
    for _ in 0..40 {
        let g = nl.g.eval(z, t);
        if g.norm() <= tol * nl.scale {
            return Some(z);
        }
        let (gz, gzb) = nl.g.eval_dz(z, t);
        // minimum-norm Newton step on (Re g, Im g) in (x, y), regularized for rank loss
        let gx = gz + gzb;
        let gy = (gz - gzb) * C64::new(0.0, 1.0);
        let j = [[gx.re, gy.re], [gx.im, gy.im]];
        let a = j[0][0] * j[0][0] + j[0][1] * j[0][1];
        let b = j[0][0] * j[1][0] + j[0][1] * j[1][1];
        let c = j[1][0] * j[1][0] + j[1][1] * j[1][1];
        let mu = 1e-14 * (a + c) + 1e-300;
        let det = (a + mu) * (c + mu) - b * b;
        if det <= 0.0 {
            return None;
        }
        let y0 = (-g.re * (c + mu) + g.im * b) / det;
        let y1 = (-g.im * (a + mu) + g.re * b) / det;
        let dx = j[0][0] * y0 + j[1][0] * y1;
        let dy = j[0][1] * y0 + j[1][1] * y1;
        z += C64::new(dx, dy);
        if !z.re.is_finite() || z.norm() > 1e6 {
            return None;
        }
    }
    None
}

/// Predictor–corrector continuation along the kernel of the Jacobian until the curve closes.
fn trace_curve(nl: &NumericLoop, start: [f64; 3], step: f64, tol: f64) -> Result<(Vec<[f64; 3]>, f64), LinkError> {
    let tangent = |x: [f64; 3]| -> Result<[f64; 3], LinkError> {
        let j = nl.jacobian(x);
        let c = cross(j[0], j[1]);
        let nc = norm3(c);
        let gn = norm3(j[0]).max(norm3(j[1])).max(1e-300);
        if nc <= 1e-7 * gn * gn.max(nl.scale * 1e-3) {
            return Err(LinkError::SingularZeroSet { u: C64::new(x[0], x[1]), t: wrap_t(x[2]) });
        }
        Ok([c[0] / nc, c[1] / nc, c[2] / nc])
    };
    let mut x = start;
    let mut tv = tangent(x)?;
    if tv[2] < 0.0 {
        tv = [-tv[0], -tv[1], -tv[2]];
    }
    let mut pts = vec![start];
    let mut travelled = 0.0;
    let mut dt_total = 0.0;
    let max_steps = 4_000_000usize;
    let mut h = step;
    for _ in 0..max_steps {
        let pred = [x[0] + h * tv[0], x[1] + h * tv[1], x[2] + h * tv[2]];
        let next = correct(nl, pred, tol).filter(|y| torus_dist(*y, x) < 2.0 * h);
        let Some(y) = next else {
            h /= 2.0;
            if h < step * 1e-4 {
                return Err(LinkError::TraceNotClosed);
            }
            continue;
        };
        let mut ty = tangent(y)?;
        if ty[0] * tv[0] + ty[1] * tv[1] + ty[2] * tv[2] < 0.0 {
            ty = [-ty[0], -ty[1], -ty[2]];
        }
        if ty[0] * tv[0] + ty[1] * tv[1] + ty[2] * tv[2] < 0.9 && h > step * 1e-3 {
            h /= 2.0;
            continue;
        }
        dt_total += y[2] - x[2];
        travelled += torus_dist(y, x);
        x = y;
        tv = ty;
        if travelled > 4.0 * step && torus_dist(x, start) < 1.2 * h.max(step) {
            // the remaining t-gap closes the loop
            let gap = (start[2] - x[2] + PI).rem_euclid(2.0 * PI) - PI;
            dt_total += gap;
            return Ok((pts, dt_total));
        }
        pts.push([x[0], x[1], wrap_t(x[2])]);
        h = (h * 1.5).min(step);
    }
    Err(LinkError::TraceNotClosed)
}

/// Resamples closed braided curves on a uniform grid of `samples` angles.
fn curves_to_braid(curves: &[TracedCurve], samples: usize) -> Braid64 {
    let mut strands: Vec<Vec<C64>> = Vec::new();
    let mut permutation = Vec::new();
    for c in curves {
        // unwrap t along the curve, starting at the point right after t = 0
        let n = c.points.len();
        let start = (0..n).find(|&i| c.points[i].1 < c.points[(i + n - 1) % n].1).unwrap_or(0);
        let mut pts: Vec<(C64, f64)> = Vec::with_capacity(n + 1);
        let mut offset = 0.0;
        let mut prev = f64::NEG_INFINITY;
        for j in 0..=n {
            let (z, t) = c.points[(start + j) % n];
            let mut tt = t + offset;
            if tt < prev {
                offset += 2.0 * PI;
                tt += 2.0 * PI;
            }
            prev = tt;
            pts.push((z, tt));
        }
        // the first sample may sit after 0; prepend a wrapped copy of the last point
        let w = c.wrapping.max(1) as usize;
        let last = pts[pts.len() - 2];
        let mut all = vec![(last.0, last.1 - 2.0 * PI * w as f64)];
        all.extend(pts);
        let base = strands.len();
        let mut cursor = 0;
        let interp = |target: f64, cursor: &mut usize| -> C64 {
            while *cursor + 1 < all.len() && all[*cursor + 1].1 < target {
                *cursor += 1;
            }
            let (z0, t0) = all[*cursor];
            let (z1, t1) = all[(*cursor + 1).min(all.len() - 1)];
            if t1 <= t0 {
                return z0;
            }
            z0 + (z1 - z0) * ((target - t0) / (t1 - t0))
        };
        for j in 0..w {
            let mut s = Vec::with_capacity(samples + 1);
            for k in 0..=samples {
                let target = 2.0 * PI * (j as f64 + k as f64 / samples as f64);
                s.push(interp(target, &mut cursor));
            }
            strands.push(s);
            permutation.push(base + (j + 1) % w);
        }
    }
    let affine = strands.iter().flatten().all(|z| z.norm() > 1e-12);
    Braid64 { strands, permutation, affine, samples, zero_multiplicity: 0 }
}

/// How the loops of a polynomial are read.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Route {
    /// Holomorphic in `u` after optionally conjugating and exchanging the variables.
    Braid { conj: bool, swap: bool },
    Mixed,
}

fn route_for(principal: &ExactPoly) -> Route {
    for (x, conj, swap) in [(Var::U, false, false), (Var::Ubar, true, false), (Var::V, false, true), (Var::Vbar, true, true)] {
        if principal.is_semiholomorphic(x) {
            return Route::Braid { conj, swap };
        }
    }
    Route::Mixed
}

fn transformed(p: &ExactPoly, conj: bool, swap: bool) -> ExactPoly {
    let q = if conj { p.conj() } else { p.clone() };
    if swap {
        q.swap_uv()
    } else {
        q
    }
}

/// The link piece of face `i`: the braid of `g_i` for semiholomorphic loops, otherwise the
/// traced zero set (of `ĝ_N` on `S¹×C` for the last face).
pub fn trace_face_link(p: &ExactPoly, i: usize, cfg: &Config) -> Result<SolidTorusLink, LinkError> {
    let nd = newton_polygon(p)?;
    let face = nd.face_function(p, FaceRef::Face(i))?;
    let g = LoopPoly::from_face(&face, Chart::CxS1);
    if g.is_semiholomorphic() {
        let mut b = track_roots::<f64, _>(&g, cfg.samples)?;
        if i == 1 && b.zero_multiplicity > 0 {
            b = with_zero_strands(b);
        }
        return Ok(SolidTorusLink::from_braid(b, Chart::CxS1));
    }
    let mut opts = TraceOptions::from_config(cfg);
    if i == nd.n_faces() && i > 1 {
        let hat = LoopPoly::from_face(&face, Chart::S1xC);
        return trace_loop_zero_set(&hat, &opts);
    }
    if i > 1 {
        opts.core_exclusion = Some(1e-6);
    }
    trace_loop_zero_set(&g, &opts)
}

fn with_origin_strands(bs: &[Braid64]) -> Vec<Braid64> {
    let mut out = bs.to_vec();
    if let Some(b) = out.first_mut() {
        if b.zero_multiplicity > 0 {
            *b = with_zero_strands(b.clone());
        }
    }
    out
}

fn with_zero_strands(mut b: Braid64) -> Braid64 {
    for _ in 0..b.zero_multiplicity {
        let j = b.strands.len();
        b.strands.push(vec![C64::new(0.0, 0.0); b.samples + 1]);
        b.permutation.push(j);
    }
    b.zero_multiplicity = 0;
    b.affine = false;
    b
}

/// Maps the non-core components of an `S¹×C` piece to the `C×S¹` chart of the last face,
/// returning them with the number of core components removed.
fn hat_to_cxs1(link: &SolidTorusLink, k: f64, samples: usize) -> (SolidTorusLink, usize) {
    let mut cores = 0;
    let mut comps = Vec::new();
    for c in &link.components {
        let max_v = c.points.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
        if max_v <= 1e-8 * (1.0 + link.radius) {
            cores += 1;
            continue;
        }
        let points: Vec<(C64, f64)> = c
            .points
            .iter()
            .map(|(v, phi)| {
                let u = C64::from_polar(v.norm().powf(-k), *phi);
                (u, wrap_t(v.arg()))
            })
            .collect();
        let mut points = points;
        let forward = points.windows(2).map(|w| ((w[1].1 - w[0].1 + PI).rem_euclid(2.0 * PI) - PI).signum()).sum::<f64>();
        if forward < 0.0 {
            points.reverse();
        }
        let mut dt_total = 0.0;
        let mut mono = true;
        for w in 0..points.len() {
            let a = points[w].1;
            let b = points[(w + 1) % points.len()].1;
            let mut d = b - a;
            if d > PI {
                d -= 2.0 * PI;
            }
            if d < -PI {
                d += 2.0 * PI;
            }
            mono &= d > 0.0;
            dt_total += d;
        }
        let wrapping = (dt_total / (2.0 * PI)).round() as i64;
        comps.push(TracedCurve { points, wrapping, braided: mono && wrapping > 0 });
    }
    let mut out = SolidTorusLink { components: comps, chart: Chart::CxS1, avoids_core: true, braid: None, ..link.clone() };
    if !out.components.is_empty() && out.components.iter().all(|c| c.braided) {
        out.braid = Some(curves_to_braid(&out.components, samples));
    }
    (out, cores)
}

/// `L([L_1, …, L_{N−1}], L_N)`; `core_v` says the last piece contained `{v = 0}`.
pub fn assemble_link(ls: &[SolidTorusLink], core_v: bool) -> Result<LinkDescription, LinkError> {
    for (i, l) in ls.iter().enumerate().skip(1) {
        if !l.avoids_core {
            return Err(LinkError::CoreViolation(i + 1));
        }
    }
    let pieces: Vec<PieceSummary> = ls
        .iter()
        .enumerate()
        .map(|(i, l)| PieceSummary {
            face: i + 1,
            components: l.component_count(),
            strands: l.components.iter().map(|c| c.wrapping.unsigned_abs() as usize).sum(),
            wrapping: l.components.iter().map(|c| c.wrapping).collect(),
        })
        .collect();
    let core_u = ls.first().and_then(|l| l.braid.as_ref()).is_some_and(|b| !b.affine);
    let kind_axis = if core_v { LinkKind::BraidPlusAxis } else { LinkKind::ClosedBraid };
    let all_braids = ls.iter().all(|l| l.is_empty() || l.braid.is_some());
    if all_braids {
        let parts: Vec<(usize, Braid64)> =
            ls.iter().enumerate().filter_map(|(i, l)| l.braid.clone().filter(|b| b.strand_count() > 0).map(|b| (i, b))).collect();
        if parts.is_empty() {
            return Ok(LinkDescription {
                kind: kind_axis,
                word: None,
                axis: core_v,
                core_u: false,
                core_v,
                components: core_v as usize,
                nesting: Vec::new(),
                pieces,
                transform: None,
            });
        }
        let n = ls.len();
        let ks: Vec<f64> = parts.iter().map(|(i, _)| (n - i) as f64).collect();
        let bs: Vec<Braid64> = parts.into_iter().map(|(_, b)| b).collect();
        let nested = nest_braids(&bs, Some(&ks))?;
        let components = nested.word.components() + core_v as usize;
        return Ok(LinkDescription {
            kind: kind_axis,
            word: Some(nested.word),
            axis: core_v,
            core_u,
            core_v,
            components,
            nesting: nested.scales,
            pieces,
            transform: None,
        });
    }
    let components = pieces.iter().map(|p| p.components).sum::<usize>() + core_v as usize;
    Ok(LinkDescription {
        kind: LinkKind::TorusPair,
        word: None,
        axis: core_v,
        core_u,
        core_v,
        components,
        nesting: Vec::new(),
        pieces,
        transform: None,
    })
}

/// Components as the sum over the nested pieces plus the axis.
pub fn count_components(d: &LinkDescription) -> usize {
    if d.pieces.is_empty() {
        return d.word.as_ref().map(|w| w.components()).unwrap_or(0) + d.axis as usize;
    }
    d.pieces.iter().map(|p| p.components).sum::<usize>() + d.axis as usize
}

/// The link of the singularity of `p` at the origin, after checking its preconditions.
pub fn link_of_singularity(p: &ExactPoly, cfg: &Config) -> Result<LinkDescription, LinkError> {
    let nd = newton_polygon(p)?;
    let principal = nd.principal_part(p);
    let report = analyze_with(p, &nd, cfg)?;
    let semi = matches!(route_for(&principal), Route::Braid { .. });
    if report.inner_nd != Status::Verified || (!semi && report.nice != Status::Verified) {
        return Err(LinkError::PreconditionFailed { inner: report.inner_nd, nice: report.nice, report: Box::new(report) });
    }
    link_unchecked(p, cfg)
}

/// The link pipeline without the non-degeneracy gate.
pub fn link_unchecked(p: &ExactPoly, cfg: &Config) -> Result<LinkDescription, LinkError> {
    let nd0 = newton_polygon(p)?;
    let principal = nd0.principal_part(p);
    match route_for(&principal) {
        Route::Braid { conj, swap } => {
            let q = transformed(&principal, conj, swap);
            let nd = newton_polygon(&q)?;
            let mut d = braid_route(&q, &nd, cfg)?;
            d.transform = match (conj, swap) {
                (false, false) => None,
                (true, false) => Some("conjugated".into()),
                (false, true) => Some("u and v exchanged".into()),
                (true, true) => Some("conjugated, u and v exchanged".into()),
            };
            Ok(d)
        }
        Route::Mixed => mixed_route(&principal, &nd0, cfg),
    }
}

fn braid_route(q: &ExactPoly, nd: &NewtonData, cfg: &Config) -> Result<LinkDescription, LinkError> {
    let n = nd.n_faces();
    let braids: Vec<Braid64> = (1..=n)
        .into_par_iter()
        .map(|i| -> Result<Braid64, LinkError> {
            let g = LoopPoly::from_face(&nd.face_function(q, FaceRef::Face(i))?, Chart::CxS1);
            let b = track_roots::<f64, _>(&g, cfg.samples)?;
            Ok(if i == 1 && b.zero_multiplicity > 0 { with_zero_strands(b) } else { b })
        })
        .collect::<Result<_, _>>()?;
    let ls: Vec<SolidTorusLink> = braids.into_iter().map(|b| SolidTorusLink::from_braid(b, Chart::CxS1)).collect();
    let core_v = !classify_structure(q).u_convenient;
    assemble_link(&ls, core_v)
}

fn mixed_route(p: &ExactPoly, nd: &NewtonData, cfg: &Config) -> Result<LinkDescription, LinkError> {
    let n = nd.n_faces();
    let mut ls: Vec<SolidTorusLink> = (1..=n).into_par_iter().map(|i| trace_face_link(p, i, cfg)).collect::<Result<_, _>>()?;
    let mut core_v = false;
    if n > 1 && ls[n - 1].chart == Chart::S1xC {
        let (l, cores) = hat_to_cxs1(&ls[n - 1], nd.last_face().k_f64(), cfg.samples);
        ls[n - 1] = l;
        core_v = cores > 0;
    }
    if !classify_structure(p).u_convenient {
        core_v = true;
    }
    let mut d = assemble_link(&ls, core_v)?;
    if let Some(w) = &d.word {
        debug_assert_eq!(cycle_count(&w.permutation()), w.components());
    }
    if d.word.is_none() {
        d.components = count_components(&d);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::braids::braid_from_word;
    use crate::expr::parse_poly;

    fn p(s: &str) -> ExactPoly {
        parse_poly(s).unwrap()
    }

    fn cfg() -> Config {
        Config { grid: 64, samples: 512, tol: 1e-8 }
    }

    #[test]
    fn torus_links() {
        let d = link_of_singularity(&p("u^2 - v^3"), &cfg()).unwrap();
        assert_eq!(d.word.as_ref().unwrap().letters, vec![1, 1, 1]);
        assert_eq!(d.components, 1);
        let d = link_of_singularity(&p("u^2 - v^2"), &cfg()).unwrap();
        assert_eq!(d.word.as_ref().unwrap().letters, vec![1, 1]);
        assert_eq!(d.components, 2);
        assert_eq!(count_components(&d), 2);
    }

    #[test]
    fn axis_descriptions() {
        let w = BraidWord::parse("1 1 1", None).unwrap();
        assert_eq!(add_axis(&w).components, 2);
        assert_eq!(add_axis(&BraidWord::empty(1)).components, 2);
        assert_eq!(add_axis(&BraidWord::parse("1", None).unwrap()).components, 2);
    }

    #[test]
    fn nesting_single_and_pair() {
        let (b1, _) = braid_from_word(&BraidWord::parse("1 1 1", None).unwrap(), 8, false, 256).unwrap();
        let n = nest_braids(std::slice::from_ref(&b1), None).unwrap();
        assert_eq!(n.word, extract_word(&b1).unwrap());
        let (b2, _) = braid_from_word(&BraidWord::parse("1", None).unwrap(), 8, true, 256).unwrap();
        let n2 = nest_braids(&[b1.clone(), b2.clone()], None).unwrap();
        assert_eq!(n2.word.strands, 4);
        let g = LoopPoly::from_face(&p("u^2 - 2*u*v"), Chart::CxS1);
        let b0 = with_zero_strands(track_roots::<f64, _>(&g, 256).unwrap());
        assert_eq!(nest_braids(&[b2, b0], None), Err(LinkError::NotAffine(2)));
    }

    #[test]
    fn tracer_cases() {
        let opts = TraceOptions { seed_grid: 48, seed_slices: 8, samples: 256, corrector_tol: 1e-10, core_exclusion: None };
        // |u|² − 1 vanishes on a whole torus
        let g = LoopPoly::from_face(&p("u*conj(u) - v*conj(v)"), Chart::CxS1);
        assert!(matches!(trace_loop_zero_set(&g, &opts), Err(LinkError::SingularZeroSet { .. })));
        // |u|² + 1 has no zeros
        let g = LoopPoly::from_face(&p("u*conj(u) + v*conj(v)"), Chart::CxS1);
        assert!(trace_loop_zero_set(&g, &opts).unwrap().is_empty());
        // e^{2iφ} − v³ on S¹×C: one component wrapping three times
        let g = LoopPoly::from_face(&p("u^2 - v^3"), Chart::S1xC);
        let l = trace_loop_zero_set(&g, &opts).unwrap();
        assert_eq!(l.component_count(), 1);
        assert_eq!(l.components[0].wrapping.abs(), 3);
        // a mixed loop whose zero set is a braid: u² + u ū e^{it}/4 − e^{it}, near u² − e^{it}
        let g = LoopPoly::from_face(&p("u^2*v + 1/4*u*conj(u)*v - v^3*conj(v)"), Chart::CxS1);
        assert!(!g.is_semiholomorphic());
        let l = trace_loop_zero_set(&g, &opts).unwrap();
        assert_eq!(l.component_count(), 1);
        assert_eq!(l.components[0].wrapping, 2);
        let b = l.braid.unwrap();
        assert_eq!(extract_word(&b).unwrap().letters, vec![1]);
    }

    #[test]
    fn running_example_nests_two_pieces() {
        let f = p("u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)");
        let d = link_of_singularity(&f, &cfg()).unwrap();
        assert_eq!(d.pieces.len(), 2);
        assert_eq!((d.pieces[0].strands, d.pieces[1].strands), (2, 6));
        let w = d.word.as_ref().unwrap();
        assert_eq!(w.strands, 8);
        assert_eq!(d.components, count_components(&d));
        assert_eq!(d.components, cycle_count(&w.permutation()));
        eprintln!("{} {:?}", w, d.pieces);
    }
}

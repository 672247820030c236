//! The acceptance suite. Every criterion prints one PASS/FAIL line; the test fails if any
//! criterion fails.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use mixlink::braids::{braid_from_word, check_pfibered, cycle_count};
use mixlink::linker::{nest_braids, nested_word_at};
use mixlink::mixedpoly::classify_structure;
use mixlink::newton::{d_weight, face_to_loop, relative_face_function};
use mixlink::realizer::loop_from_terms;
use mixlink::roots::{aberth, derivative};
use mixlink::{
    analyze, build_tower, link_of_singularity, newton_polygon, parse_poly, validate_realization, BraidWord, Chart,
    Complex64, Config, ExactPoly, FaceRef, GaussRat, Level, LoopPoly, Monomial, Status, Var,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cfg() -> Config {
    Config { grid: 64, samples: 512, tol: 1e-8 }
}

fn p(s: &str) -> ExactPoly {
    parse_poly(s).unwrap()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const RUNNING: &str = "u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7+conj(v)^7)";

fn g1_expected() -> LoopPoly<GaussRat> {
    let mut g = LoopPoly::zero(Chart::CxS1);
    g.add_term(2, 0, 3, GaussRat::int(1));
    g.add_term(1, 0, -5, GaussRat::int(1));
    g.add_term(0, 0, 7, GaussRat::int(-2));
    g.add_term(0, 0, -7, GaussRat::int(-2));
    g
}

fn example_reproduction() -> Outcome {
    let f = p(RUNNING);
    let nd = newton_polygon(&f).map_err(|e| e.to_string())?;
    ensure!(nd.n_faces() == 2, "N = {}", nd.n_faces());
    let w = nd.faces[0].weight;
    ensure!((w.p1, w.p2) == (2, 1), "P_1 = ({}, {})", w.p1, w.p2);
    let f1 = nd.face_function(&f, FaceRef::Face(1)).unwrap();
    let f2 = nd.face_function(&f, FaceRef::Face(2)).unwrap();
    ensure!(f1 == p("v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)"), "f_P1 = {f1}");
    ensure!(f2 == p("u^8 + v^3*u^2"), "f_P2 = {f2}");
    let g1 = face_to_loop(&f, 1).unwrap();
    ensure!(g1 == g1_expected(), "g_1 differs");
    let mut g2 = LoopPoly::zero(Chart::CxS1);
    g2.add_term(8, 0, 0, GaussRat::int(1));
    g2.add_term(2, 0, 3, GaussRat::int(1));
    ensure!(face_to_loop(&f, 2).unwrap() == g2, "g_2 differs");
    let s = classify_structure(&f);
    ensure!(s.convenient && s.u_semiholomorphic, "convenient {} u-semiholomorphic {}", s.convenient, s.u_semiholomorphic);
    let r = analyze(&f, &cfg()).map_err(|e| e.to_string())?;
    ensure!(r.inner_nd == Status::Verified, "inner ND {:?}", r.inner_nd);
    ensure!(r.oka_nd == Status::Refuted, "Oka ND {:?}", r.oka_nd);
    let v = r.vertex((0, 7)).ok_or("no vertex (0,7)")?;
    ensure!(v.weak.status == Status::Refuted, "vertex (0,7) is {:?}", v.weak.status);
    let wit = v.weak.witness.as_ref().ok_or("no witness")?;
    let res = (wit.v.powu(7) + wit.v.conj().powu(7)).norm();
    ensure!(res < 1e-8, "witness residual {res:e}");
    Ok(format!("witness residual {res:.1e}"))
}

fn critical_value() -> Outcome {
    let g1 = face_to_loop(&p(RUNNING), 1).unwrap();
    let n = 1024;
    let mut worst = 0.0f64;
    let mut min_val = f64::INFINITY;
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        let c: Vec<Complex64> = g1.coefficients_at(t);
        let crit = aberth(&derivative(&c)).map_err(|e| format!("{e:?}"))?;
        ensure!(crit.len() == 1, "{} critical points at t = {t}", crit.len());
        let closed = -0.5 * Complex64::from_polar(1.0, -8.0 * t);
        worst = worst.max((crit[0] - closed).norm());
        min_val = min_val.min(g1.eval(crit[0], t).norm());
    }
    ensure!(worst < 1e-10, "critical point error {worst:e}");
    // golden from the first verified run; the exact minimum over all t is about 0.0815
    ensure!(min_val > 0.09, "min |g_1(c)| = {min_val}");
    // the value at c(t) is -e^{-13it}/4 - 4 cos 7t, which never vanishes on a fine grid
    let dense = (0..1 << 20)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / (1 << 20) as f64;
            (-0.25 * Complex64::from_polar(1.0, -13.0 * t) - 4.0 * (7.0 * t).cos()).norm()
        })
        .fold(f64::INFINITY, f64::min);
    ensure!(dense > 0.08, "closed form minimum {dense}");
    Ok(format!("max error {worst:.1e}, min |g_1(c)| = {min_val:.4}, dense minimum {dense:.4}"))
}

fn trefoil_pipeline() -> Outcome {
    let t = link_of_singularity(&p("u^2 - v^3"), &cfg()).map_err(|e| e.to_string())?;
    let h = link_of_singularity(&p("u^2 - v^2"), &cfg()).map_err(|e| e.to_string())?;
    let word = |d: &mixlink::LinkDescription| d.word.as_ref().map(|w| (w.letters.clone(), w.strands));
    ensure!(word(&t) == Some((vec![1, 1, 1], 2)) && t.components == 1, "trefoil gave {:?}, {}", word(&t), t.components);
    ensure!(word(&h) == Some((vec![1, 1], 2)) && h.components == 2, "Hopf gave {:?}, {}", word(&h), h.components);
    Ok("σ₁³ and σ₁²".into())
}

fn gauss(rng: &mut ChaCha8Rng) -> GaussRat {
    loop {
        let c = GaussRat::new(
            num_rational::BigRational::from_integer(rng.gen_range(-3i64..=3).into()),
            num_rational::BigRational::from_integer(rng.gen_range(-2i64..=2).into()),
        );
        if c != GaussRat::int(0) {
            return c;
        }
    }
}

/// Random mixed polynomial of total degree at most `deg` with at most `max_terms` terms.
fn random_poly(rng: &mut ChaCha8Rng, deg: u32, max_terms: usize) -> ExactPoly {
    let n = rng.gen_range(1..=max_terms);
    let mut f = ExactPoly::zero();
    for _ in 0..n {
        let total = rng.gen_range(1..=deg);
        let mut e = [0u32; 4];
        for _ in 0..total {
            e[rng.gen_range(0..4)] += 1;
        }
        f.add_term(Monomial::new(e[0], e[1], e[2], e[3]), gauss(rng));
    }
    f
}

fn derivative_face_degrees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut checks = 0usize;
    let mut polys = 0usize;
    while polys < 500 {
        let f = random_poly(&mut rng, 6, 8);
        let Ok(nd) = newton_polygon(&f) else { continue };
        polys += 1;
        for q in nd.weights() {
            // independent minimum of the weighted degree
            let d = f.support().iter().map(|&(a, b)| q.p1 * a + q.p2 * b).min().unwrap();
            ensure!(d_weight(&f, q) == Some(d), "d(P;f) mismatch on {f}");
            let fp = relative_face_function(&f, q);
            for x in [Var::U, Var::Ubar, Var::V, Var::Vbar] {
                if !f.depends_on(x) {
                    continue;
                }
                let fx = f.wirtinger(x);
                let pi = q.component(x.axis()) as i64;
                let dx = d_weight(&fx, q).ok_or("f_x vanished")? as i64;
                ensure!(dx >= d as i64 - pi, "inequality fails for {f}, {x}");
                let equal = dx == d as i64 - pi;
                let depends = fp.depends_on(x);
                let commutes = relative_face_function(&fx, q) == fp.wirtinger(x);
                ensure!(equal == depends && depends == commutes, "conditions disagree for {f}, {x}: {equal} {depends} {commutes}");
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} (P, x) checks"))
}

fn rescaling_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut probes = 0;
    let mut worst = 0.0f64;
    while probes < 200 {
        let f = random_poly(&mut rng, 6, 8);
        let Ok(nd) = newton_polygon(&f) else { continue };
        let i = rng.gen_range(1..=nd.n_faces());
        let face = &nd.faces[i - 1];
        let fp = nd.face_function(&f, FaceRef::Face(i)).unwrap();
        let g = face_to_loop(&f, i).unwrap();
        let r: f64 = rng.gen_range(0.05..1.5);
        let u = Complex64::from_polar(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0 * PI));
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        let lhs = fp.evaluate(u * r.powf(face.k_f64()), Complex64::from_polar(r, t));
        let rhs = g.eval(u, t) * r.powf(face.d as f64 / face.weight.p2 as f64);
        let err = (lhs - rhs).norm();
        worst = worst.max(err / (1.0 + lhs.norm()));
        ensure!(err < 1e-9 * (1.0 + lhs.norm()), "error {err:e} on {f}, face {i}");
        probes += 1;
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

fn nesting_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..50 {
        let n = rng.gen_range(1..=3);
        let mut bs = Vec::new();
        let mut expected = 0;
        for i in 0..n {
            let s = rng.gen_range(1..=3usize);
            let len = if s == 1 { 0 } else { rng.gen_range(0..=3) };
            let letters: Vec<i32> =
                (0..len).map(|_| rng.gen_range(1..s as i32) * if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let w = BraidWord::new(letters, s).unwrap();
            expected += cycle_count(&w.permutation());
            let (b, _) = braid_from_word(&w, 8, i > 0, 512).map_err(|e| format!("case {case}: {e}"))?;
            bs.push(b);
        }
        let nest = nest_braids(&bs, None).map_err(|e| format!("case {case}: {e}"))?;
        let ks: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        let half = nested_word_at(&bs, &ks, nest.epsilon / 2.0).map_err(|e| e.to_string())?;
        ensure!(half == nest.word, "case {case}: words differ at ε/2");
        ensure!(nest.word.components() == expected, "case {case}: {} components, expected {expected}", nest.word.components());
    }
    Ok("50 sequences".into())
}

fn semiholomorphic_somewhere(f: &ExactPoly) -> bool {
    let s = classify_structure(f);
    s.u_semiholomorphic || s.ubar_semiholomorphic || s.v_semiholomorphic || s.vbar_semiholomorphic
}

/// Exponents `e` split randomly into a holomorphic and an antiholomorphic part.
fn split(rng: &mut ChaCha8Rng, e: u32) -> (u32, u32) {
    let a = rng.gen_range(0..=e);
    (a, e - a)
}

fn principal_part_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    let mut tried = 0;
    while done < 20 {
        tried += 1;
        ensure!(tried < 400, "only {done} boundary polynomials found");
        // u^a + c v^b v̄^e, or a two-face boundary through (1, q1)
        let a = rng.gen_range(2..=3u32);
        let q2 = rng.gen_range(2..=6u32);
        let (vb, ve) = split(&mut rng, q2);
        let mut f = ExactPoly::zero();
        f.add_term(Monomial::new(a, 0, 0, 0), GaussRat::int(1));
        f.add_term(Monomial::new(0, 0, vb, ve), gauss(&mut rng));
        if rng.gen_bool(0.5) {
            let q1 = rng.gen_range(1..=q2);
            if (q1 as f64) < q2 as f64 * (a - 1) as f64 / a as f64 {
                let (b, e) = split(&mut rng, q1);
                f.add_term(Monomial::new(1, 0, b, e), gauss(&mut rng));
            }
        }
        let nd = newton_polygon(&f).map_err(|e| e.to_string())?;
        if nd.principal_part(&f) != f || !semiholomorphic_somewhere(&f) {
            continue;
        }
        let Ok(r) = analyze(&f, &cfg()) else { continue };
        if r.inner_nd != Status::Verified || r.nice != Status::Verified {
            continue;
        }
        let before = link_of_singularity(&f, &cfg()).map_err(|e| format!("{f}: {e}"))?;
        let mut g = f.clone();
        let extra = rng.gen_range(1..=3);
        let mut added = 0;
        while added < extra {
            let (x, y) = (rng.gen_range(0..=a + 1) as u64, rng.gen_range(0..=q2 + 2) as u64);
            if !nd.faces.iter().all(|q| q.weight.ell((x, y)) > q.d) {
                continue;
            }
            let (ua, ub) = split(&mut rng, x as u32);
            let (va, vbb) = split(&mut rng, y as u32);
            g.add_term(Monomial::new(ua, ub, va, vbb), gauss(&mut rng));
            added += 1;
        }
        ensure!(nd.principal_part(&g) == f, "{g} has a different principal part");
        let after = link_of_singularity(&g, &cfg()).map_err(|e| format!("{g}: {e}"))?;
        ensure!(before.signature() == after.signature(), "{f} and {g} differ");
        done += 1;
    }
    Ok(format!("20 pairs from {tried} candidates"))
}

fn pfibered_closed_forms() -> Outcome {
    let mut out = Vec::new();
    for freq in [2i64, 3] {
        let g = loop_from_terms(&[(2, 0, GaussRat::int(1)), (0, freq, GaussRat::int(-1))]);
        let c = check_pfibered::<f64, _>(&g, 0, 1024).map_err(|e| e.to_string())?;
        let d = c.min_arg_derivative.ok_or("no critical points")?;
        ensure!((d - freq as f64).abs() < 1e-6, "u^2 - e^({freq}it): {d}");
        out.push(format!("{d:.9}"));
    }
    Ok(out.join(", "))
}

fn realizer_round_trip() -> Outcome {
    let g = loop_from_terms(&[(2, 0, GaussRat::int(1)), (0, 1, GaussRat::int(-1))]);
    let level = Level::from_loop(g, 512).map_err(|e| e.to_string())?;
    let t = build_tower(&[level], &cfg()).map_err(|e| e.to_string())?;
    ensure!(t.spec.words[0].letters == vec![1], "level word {}", t.spec.words[0]);
    ensure!(t.f == p("u^2 - v^3*conj(v)"), "f = {}", t.f);
    ensure!(t.report.strong_inner_nd == Status::Verified, "strong inner ND {:?}", t.report.strong_inner_nd);
    let l = link_of_singularity(&t.f, &cfg()).map_err(|e| e.to_string())?;
    ensure!(l.word.as_ref().map(|w| w.letters.clone()) == Some(vec![1, 1]) && l.components == 2, "link {:?}", l.word);
    validate_realization(&t.f, &t.spec, &cfg()).map_err(|e| e.to_string())?;
    let corrupted = p("u^2 - v^3*conj(v) + v^2*conj(v)^2");
    ensure!(validate_realization(&corrupted, &t.spec, &cfg()).is_err(), "corrupted polynomial validated");
    Ok("Hopf link".into())
}

fn implication_lattice() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut n = 0;
    let mut counts = [0usize; 3];
    while n < 100 {
        let f = random_poly(&mut rng, 6, 6);
        let Ok(r) = analyze(&f, &cfg()) else { continue };
        n += 1;
        let all = r.edges.iter().chain(&r.vertices).chain([&r.axis_u0, &r.axis_v0]);
        for tv in all {
            ensure!(
                !(tv.strong.status == Status::Verified && tv.weak.status != Status::Verified),
                "{f}: {:?} strong without weak",
                tv.target
            );
        }
        let implies = |a: Status, b: Status| a != Status::Verified || b == Status::Verified;
        ensure!(implies(r.strong_inner_nd, r.inner_nd), "{f}: strong inner without inner");
        ensure!(implies(r.oka_strong_nd, r.oka_nd), "{f}: strong Oka without Oka");
        ensure!(!r.convenient || implies(r.oka_nd, r.inner_nd), "{f}: convenient Oka without inner");
        counts[0] += (r.inner_nd == Status::Verified) as usize;
        counts[1] += (r.inner_nd == Status::Refuted) as usize;
        counts[2] += (r.oka_nd == Status::Verified) as usize;
    }
    Ok(format!("inner verified {}, refuted {}, Oka verified {}", counts[0], counts[1], counts[2]))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("running example reproduction", example_reproduction),
        ("critical value of g_1", critical_value),
        ("trefoil and Hopf pipeline", trefoil_pipeline),
        ("derivative face degrees, 500 polynomials", derivative_face_degrees),
        ("rescaling identity, 200 probes", rescaling_identity),
        ("nesting invariance, 50 sequences", nesting_invariance),
        ("principal part invariance, 20 polynomials", principal_part_invariance),
        ("P-fibered closed forms", pfibered_closed_forms),
        ("realizer round trip", realizer_round_trip),
        ("implication lattice, 100 polynomials", implication_lattice),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            // straight to stderr so the lines survive output capture
            Ok(info) => writeln!(std::io::stderr(), "PASS {:>2} {name} ({info}; {secs:.1} s)", i + 1).unwrap(),
            Err(why) => {
                writeln!(std::io::stderr(), "FAIL {:>2} {name}: {why} ({secs:.1} s)", i + 1).unwrap();
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

//! Univariate complex polynomials in coefficient form (ascending powers) and the
//! Aberth–Ehrlich simultaneous root finder.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("root iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
}

pub fn horner<F: Real>(c: &[Complex<F>], z: Complex<F>) -> Complex<F> {
    c.iter().rev().fold(Complex::new(F::zero(), F::zero()), |acc, &a| acc * z + a)
}

/// `(p(z), p'(z))`.
pub fn horner_with_derivative<F: Real>(c: &[Complex<F>], z: Complex<F>) -> (Complex<F>, Complex<F>) {
    let zero = Complex::new(F::zero(), F::zero());
    let mut p = zero;
    let mut dp = zero;
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

pub fn derivative<F: Real>(c: &[Complex<F>]) -> Vec<Complex<F>> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * F::from_usize(k).unwrap())
        .collect()
}

/// Drops trailing (highest-power) coefficients that are negligible relative to the largest.
pub fn trim<F: Real>(c: &[Complex<F>], rel: F) -> &[Complex<F>] {
    let scale = c.iter().map(|a| a.norm()).fold(F::zero(), F::max);
    let mut n = c.len();
    while n > 0 && c[n - 1].norm() <= rel * scale {
        n -= 1;
    }
    &c[..n]
}

/// All roots of `c[0] + c[1] z + … + c[d] z^d`, `c[d] ≠ 0`.
pub fn aberth<F: Real>(c: &[Complex<F>]) -> Result<Vec<Complex<F>>, RootError> {
    let d = c.len().saturating_sub(1);
    if c.is_empty() || c[d].norm() == F::zero() {
        return Err(RootError::ZeroLeading);
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    if d == 1 {
        return Ok(vec![-c[0] / c[1]]);
    }
    let lead = c[d].norm();
    let mut radius = F::zero();
    for (k, a) in c.iter().enumerate().take(d) {
        let n = a.norm();
        if n > F::zero() {
            let e = F::one() / F::from_usize(d - k).unwrap();
            radius = radius.max((n / lead).powf(e));
        }
    }
    if radius == F::zero() {
        return Ok(vec![Complex::new(F::zero(), F::zero()); d]);
    }
    let two_pi = F::PI() + F::PI();
    let offset = F::lit(0.4);
    let mut z: Vec<Complex<F>> = (0..d)
        .map(|k| {
            let th = two_pi * F::from_usize(k).unwrap() / F::from_usize(d).unwrap() + offset;
            Complex::new(th.cos(), th.sin()) * radius
        })
        .collect();
    let eps = F::epsilon() * F::lit(16.0);
    let max_sweeps = 500;
    let mut done = vec![false; d];
    for _ in 0..max_sweeps {
        let mut all = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = horner_with_derivative(c, z[i]);
            if p.norm() == F::zero() {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex::new(F::zero(), F::zero());
            for j in 0..d {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() > F::zero() {
                        sum = sum + diff.inv();
                    }
                }
            }
            let w = ratio / (Complex::new(F::one(), F::zero()) - ratio * sum);
            if !w.re.is_finite() || !w.im.is_finite() {
                all = false;
                z[i] = z[i] + Complex::new(eps, eps) * radius;
                continue;
            }
            z[i] = z[i] - w;
            if w.norm() <= eps * (F::one() + z[i].norm()) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            return Ok(z);
        }
    }
    // Multiple roots converge only linearly; accept if the residuals are tiny.
    let scale = c.iter().map(|a| a.norm()).fold(F::zero(), |a, b| a + b);
    let ok = z.iter().all(|&r| {
        let m = F::one().max(r.norm()).powi(d as i32);
        horner(c, r).norm() <= F::lit(1e3) * F::epsilon() * scale * m
    });
    if ok {
        Ok(z)
    } else {
        Err(RootError::NoConvergence(max_sweeps))
    }
}

/// Newton refinement of an approximate root.
pub fn polish<F: Real>(c: &[Complex<F>], mut z: Complex<F>, steps: usize) -> Complex<F> {
    for _ in 0..steps {
        let (p, dp) = horner_with_derivative(c, z);
        if dp.norm() == F::zero() {
            break;
        }
        let step = p / dp;
        z = z - step;
        if step.norm() <= F::epsilon() * (F::one() + z.norm()) {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn from_roots(rs: &[C]) -> Vec<C> {
        let mut c = vec![C::new(1.0, 0.0)];
        for &r in rs {
            let mut n = vec![C::new(0.0, 0.0); c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                n[k + 1] += a;
                n[k] -= a * r;
            }
            c = n;
        }
        c
    }

    #[test]
    fn recovers_known_roots() {
        let rs = [C::new(1.0, 0.5), C::new(-2.0, 0.0), C::new(0.0, -0.3), C::new(3.0, 3.0)];
        let c = from_roots(&rs);
        let mut got = aberth(&c).unwrap();
        for r in rs {
            let (k, _) = got.iter().enumerate().map(|(k, z)| (k, (z - r).norm())).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            assert!((got[k] - r).norm() < 1e-10);
            got.remove(k);
        }
    }

    #[test]
    fn cube_roots_of_unity_in_f32() {
        let c = [Complex::<f32>::new(-1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
        for z in aberth(&c).unwrap() {
            assert!((z.norm() - 1.0).abs() < 1e-5);
            assert!((z * z * z - Complex::new(1.0, 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn zero_roots_and_errors() {
        let c = [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
        assert!(aberth(&c).unwrap().iter().all(|z| z.norm() < 1e-12));
        assert_eq!(aberth(&[C::new(1.0, 0.0), C::new(0.0, 0.0)]), Err(RootError::ZeroLeading));
        assert!(aberth(&[C::new(2.0, 0.0)]).unwrap().is_empty());
    }

    #[test]
    fn horner_derivative_matches_finite_difference() {
        let c = from_roots(&[C::new(0.3, 0.1), C::new(-1.0, 2.0), C::new(0.5, -0.5)]);
        let z = C::new(0.7, -0.2);
        let (_, dp) = horner_with_derivative(&c, z);
        let h = 1e-6;
        let fd = (horner(&c, z + h) - horner(&c, z - h)) / (2.0 * h);
        assert!((dp - fd).norm() < 1e-8);
        assert!((horner(&derivative(&c), z) - dp).norm() < 1e-12);
    }
}

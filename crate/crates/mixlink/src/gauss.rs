//! Exact Gaussian rationals `a + b i` with arbitrary-precision parts.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{Coeff, Real};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn i() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Squared modulus, exact.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(GaussRat { re: &self.re / &n, im: -(&self.im) / &n })
    }

    /// Closest rational with a small denominator (continued fractions), per component.
    pub fn approx_f64(re: f64, im: f64, tol: f64) -> Self {
        GaussRat { re: rational_approx(re, tol), im: rational_approx(im, tol) }
    }

    pub fn from_complex(z: Complex<f64>, tol: f64) -> Self {
        Self::approx_f64(z.re, z.im, tol)
    }
}

/// Continued-fraction approximation of `x` to within `tol`, denominators capped at 2^40.
pub fn rational_approx(x: f64, tol: f64) -> BigRational {
    if !x.is_finite() || x.abs() < tol {
        return BigRational::zero();
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let approx = h1.to_f64().unwrap_or(f64::NAN) / k1.to_f64().unwrap_or(f64::NAN);
        if (approx - x).abs() <= tol || k1.bits() > 40 {
            break;
        }
        let frac = y - a;
        if frac.abs() < 1e-300 {
            break;
        }
        y = 1.0 / frac;
    }
    BigRational::new(h1, k1)
}

pub(crate) fn fmt_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let re0 = self.re.is_zero();
        let im0 = self.im.is_zero();
        let imag = |q: &BigRational| -> String {
            if q.is_one() {
                "i".to_string()
            } else if (-q).is_one() {
                "-i".to_string()
            } else {
                format!("{}i", fmt_rational(q))
            }
        };
        match (re0, im0) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => write!(f, "{}", imag(&self.im)),
            (false, false) => {
                let im = imag(&self.im);
                if self.im.is_negative() {
                    write!(f, "{}{}", fmt_rational(&self.re), im)
                } else {
                    write!(f, "{}+{}", fmt_rational(&self.re), im)
                }
            }
        }
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussRat {
    fn one() -> Self {
        Self::int(1)
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        GaussRat { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl AddAssign for GaussRat {
    fn add_assign(&mut self, o: GaussRat) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for GaussRat {
    type Output = GaussRat;
    fn sub(self, o: GaussRat) -> GaussRat {
        GaussRat { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re, im: -self.im }
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, o: GaussRat) -> GaussRat {
        &self * &o
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Div for GaussRat {
    type Output = GaussRat;
    fn div(self, o: GaussRat) -> GaussRat {
        self * o.inv().expect("division by zero Gaussian rational")
    }
}

impl Coeff for GaussRat {
    fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -(&self.im) }
    }

    fn from_i64(n: i64) -> Self {
        Self::int(n)
    }

    fn to_complex<F: Real>(&self) -> Complex<F> {
        Complex::new(F::lit(ratio_to_f64(&self.re)), F::lit(ratio_to_f64(&self.im)))
    }
}

pub fn ratio_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

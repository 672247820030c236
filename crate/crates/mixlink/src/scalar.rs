//! Scalar and coefficient traits shared by the exact and floating layers.

use std::fmt::{Debug, Display};
use std::ops::{Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, One, Zero};

/// Real floating scalar used by every numeric routine.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Coefficient ring of a mixed polynomial.
pub trait Coeff:
    Clone + PartialEq + Debug + Zero + One + Neg<Output = Self> + Sub<Output = Self> + Send + Sync
{
    fn conj(&self) -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_complex<F: Real>(&self) -> Complex<F>;

    fn modulus(&self) -> f64 {
        self.to_complex::<f64>().norm()
    }
}

impl<F: Real> Coeff for Complex<F> {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn from_i64(n: i64) -> Self {
        Complex::new(F::from_i64(n).unwrap_or_else(F::nan), F::zero())
    }

    fn to_complex<G: Real>(&self) -> Complex<G> {
        let re = self.re.to_f64().unwrap_or(f64::NAN);
        let im = self.im.to_f64().unwrap_or(f64::NAN);
        Complex::new(G::lit(re), G::lit(im))
    }
}

/// `e^{i theta}` in the requested precision.
pub fn cis<F: Real>(theta: F) -> Complex<F> {
    Complex::new(theta.cos(), theta.sin())
}

/// Integer power of a complex number by repeated squaring.
pub fn cpow<F: Real>(z: Complex<F>, n: u32) -> Complex<F> {
    let mut acc = Complex::new(F::one(), F::zero());
    let mut base = z;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

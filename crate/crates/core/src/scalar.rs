//! Exact coefficients: rationals and Gaussian rationals `re + i*im`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use malachite_base::num::basic::traits::{One, Zero};
use malachite_q::Rational as Inner;

/// Arbitrary precision rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Rational(Inner);

impl Rational {
    pub fn zero() -> Self {
        Rational(Inner::ZERO)
    }

    pub fn one() -> Self {
        Rational(Inner::ONE)
    }

    pub fn from_int(n: i64) -> Self {
        Rational(Inner::from(n))
    }

    /// `num/den`, reduced. Panics when `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(Inner::from_signeds(num, den))
    }

    pub fn is_zero(&self) -> bool {
        self.0 == Inner::ZERO
    }

    pub fn is_one(&self) -> bool {
        self.0 == Inner::ONE
    }

    pub fn is_negative(&self) -> bool {
        self.0 < Inner::ZERO
    }

    pub fn abs(&self) -> Rational {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn recip(&self) -> Option<Rational> {
        if self.is_zero() {
            None
        } else {
            Some(Rational(Inner::ONE / &self.0))
        }
    }

    pub fn pow(&self, e: u32) -> Rational {
        let mut acc = Rational::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Integer numerator and denominator as decimal strings.
    pub fn parts(&self) -> (String, String) {
        let sign = if self.is_negative() { "-" } else { "" };
        (
            format!("{sign}{}", self.0.numerator_ref()),
            self.0.denominator_ref().to_string(),
        )
    }

    pub fn is_integer(&self) -> bool {
        self.0.denominator_ref() == &malachite_nz::natural::Natural::ONE
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rational {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Inner::from_str(s.trim()).map(Rational)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! rat_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational($tr::$m(&self.0, &rhs.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational($tr::$m(self.0, rhs.0))
            }
        }
    };
}
rat_binop!(Add, add);
rat_binop!(Sub, sub);
rat_binop!(Mul, mul);
rat_binop!(Div, div);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

/// Gaussian rational `re + i*im`; the imaginary unit of the phase-space
/// relations lives here.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GaussScalar {
    pub re: Rational,
    pub im: Rational,
}

impl GaussScalar {
    pub fn zero() -> Self {
        GaussScalar {
            re: Rational::zero(),
            im: Rational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussScalar::real(Rational::one())
    }

    pub fn i() -> Self {
        GaussScalar {
            re: Rational::zero(),
            im: Rational::one(),
        }
    }

    pub fn real(re: Rational) -> Self {
        GaussScalar {
            re,
            im: Rational::zero(),
        }
    }

    pub fn imag(im: Rational) -> Self {
        GaussScalar {
            re: Rational::zero(),
            im,
        }
    }

    pub fn new(re: Rational, im: Rational) -> Self {
        GaussScalar { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        GaussScalar::real(Rational::from_int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        GaussScalar::real(Rational::new(num, den))
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => GaussScalar::one(),
            1 => GaussScalar::i(),
            2 => GaussScalar::from_int(-1),
            _ => -GaussScalar::i(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn scale(&self, r: &Rational) -> GaussScalar {
        GaussScalar {
            re: &self.re * r,
            im: &self.im * r,
        }
    }

    /// Multiply by `i`.
    pub fn mul_i(&self) -> GaussScalar {
        GaussScalar {
            re: -&self.im,
            im: self.re.clone(),
        }
    }

    pub fn conj(&self) -> GaussScalar {
        GaussScalar {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn recip(&self) -> Option<GaussScalar> {
        let norm = &(&self.re * &self.re) + &(&self.im * &self.im);
        let inv = norm.recip()?;
        Some(self.conj().scale(&inv))
    }

    /// `self * n * i^k`.
    pub fn mul_int_ipow(&self, n: i64, k: i64) -> GaussScalar {
        let c = if n == 1 {
            self.clone()
        } else {
            self.scale(&Rational::from_int(n))
        };
        match k.rem_euclid(4) {
            0 => c,
            1 => c.mul_i(),
            2 => -c,
            _ => -c.mul_i(),
        }
    }

    pub fn pow(&self, e: u32) -> GaussScalar {
        let mut acc = GaussScalar::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

impl From<Rational> for GaussScalar {
    fn from(r: Rational) -> Self {
        GaussScalar::real(r)
    }
}

impl fmt::Display for GaussScalar {
    /// `re`, `i`, `-i`, `im*i` or `(re + im*i)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let imag = |f: &mut fmt::Formatter<'_>, im: &Rational| {
            if im.is_one() {
                write!(f, "i")
            } else if (-im).is_one() {
                write!(f, "-i")
            } else {
                write!(f, "{im}*i")
            }
        };
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            imag(f, &self.im)
        } else {
            write!(f, "({} ", self.re)?;
            if self.im.is_negative() {
                write!(f, "- ")?;
                imag(f, &self.im.abs())?;
            } else {
                write!(f, "+ ")?;
                imag(f, &self.im)?;
            }
            write!(f, ")")
        }
    }
}

impl Add<&GaussScalar> for &GaussScalar {
    type Output = GaussScalar;
    fn add(self, rhs: &GaussScalar) -> GaussScalar {
        GaussScalar {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub<&GaussScalar> for &GaussScalar {
    type Output = GaussScalar;
    fn sub(self, rhs: &GaussScalar) -> GaussScalar {
        GaussScalar {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul<&GaussScalar> for &GaussScalar {
    type Output = GaussScalar;
    fn mul(self, rhs: &GaussScalar) -> GaussScalar {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussScalar::real(&self.re * &rhs.re);
        }
        GaussScalar {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &GaussScalar {
    type Output = GaussScalar;
    fn neg(self) -> GaussScalar {
        GaussScalar {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

impl Neg for GaussScalar {
    type Output = GaussScalar;
    fn neg(self) -> GaussScalar {
        -&self
    }
}

impl AddAssign<&GaussScalar> for GaussScalar {
    fn add_assign(&mut self, rhs: &GaussScalar) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussScalar> for GaussScalar {
    fn sub_assign(&mut self, rhs: &GaussScalar) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> Rational {
    (1..=n as i64).fold(Rational::one(), |acc, k| &acc * &Rational::from_int(k))
}

/// Binomial coefficient `C(n, k)` for nonnegative integers.
pub fn binomial(n: u32, k: u32) -> Rational {
    if k > n {
        return Rational::zero();
    }
    let mut acc = Rational::one();
    for j in 0..k {
        acc = &acc * &Rational::new((n - j) as i64, (j + 1) as i64);
    }
    acc
}

/// Generalized binomial coefficient `C(r, k)` for rational `r`.
pub fn binomial_rational(r: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    for j in 0..k {
        let top = r - &Rational::from_int(j as i64);
        acc = &(&acc * &top) / &Rational::from_int(j as i64 + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gauss() -> impl Strategy<Value = GaussScalar> {
        (-20i64..20, 1i64..9, -20i64..20, 1i64..9)
            .prop_map(|(a, b, c, d)| GaussScalar::new(Rational::new(a, b), Rational::new(c, d)))
    }

    #[test]
    fn display_forms() {
        assert_eq!(GaussScalar::ratio(-3, 4).to_string(), "-3/4");
        assert_eq!(GaussScalar::i().to_string(), "i");
        assert_eq!((-GaussScalar::i()).to_string(), "-i");
        assert_eq!(GaussScalar::imag(Rational::new(1, 2)).to_string(), "1/2*i");
        let z = GaussScalar::new(Rational::from_int(2), Rational::new(-1, 3));
        assert_eq!(z.to_string(), "(2 - 1/3*i)");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), Rational::from_int(15));
        assert_eq!(binomial_rational(&Rational::new(1, 2), 2), Rational::new(-1, 8));
        assert_eq!(factorial(5), Rational::from_int(120));
    }

    proptest! {
        #[test]
        fn field_axioms(a in gauss(), b in gauss(), c in gauss()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            if let Some(inv) = a.recip() {
                prop_assert!((&a * &inv).is_one());
            }
        }
    }
}

//! Coefficient rings for exponential-polynomial terms.
//!
//! Three rings are provided:
//!
//! * [`Rational`]: exact arithmetic, used whenever `h` and the problem
//!   constants are rational.
//! * [`MpFloat`]: MPFR floating point with a configurable mantissa, used for
//!   irrational or machine-generated `h` values (e.g. inside a minimizer).
//! * [`SymbolicH`]: polynomials in the convergence-control parameter `h`
//!   with rational coefficients, so that a whole series can be built once for
//!   a symbolic `h`.

use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use rug::{Float, Rational};

static WORKING_PRECISION: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION);

/// Default MPFR mantissa size in bits.
pub const DEFAULT_PRECISION: u32 = 512;

/// Sets the mantissa size used when new [`MpFloat`] values are created from
/// scratch. Values are clamped to at least 53 bits.
pub fn set_working_precision(bits: u32) {
    WORKING_PRECISION.store(bits.max(53), Ordering::Relaxed);
}

pub fn working_precision() -> u32 {
    WORKING_PRECISION.load(Ordering::Relaxed)
}

/// A commutative ring that can be scaled and divided by rationals.
///
/// Every operation the series engine performs on coefficients goes through
/// this trait, so the engine is agnostic to whether it runs exactly,
/// in floating point, or symbolically in `h`.
pub trait Coeff: Clone + fmt::Debug + fmt::Display + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, rhs: &Self);
    fn sub_assign_ref(&mut self, rhs: &Self);
    fn mul_ref(&self, rhs: &Self) -> Self;
    /// `self += a * b`
    fn add_mul(&mut self, a: &Self, b: &Self) {
        let p = a.mul_ref(b);
        self.add_assign_ref(&p);
    }
    fn neg_in_place(&mut self);
    fn scale(&mut self, r: &Rational);
    /// Divides by a nonzero rational.
    fn div_rational(&mut self, r: &Rational);

    /// Whether equality of values is meaningful (no rounding).
    fn is_exact() -> bool {
        true
    }
    fn one() -> Self {
        Self::from_rational(&Rational::from(1))
    }
    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from(v))
    }
    fn scaled(&self, r: &Rational) -> Self {
        let mut c = self.clone();
        c.scale(r);
        c
    }
    fn negated(&self) -> Self {
        let mut c = self.clone();
        c.neg_in_place();
        c
    }
}

/// Coefficient rings with a numeric value.
pub trait Numeric: Coeff {
    fn to_float(&self, prec: u32) -> Float;

    fn to_f64(&self) -> f64 {
        self.to_float(64).to_f64()
    }
}

impl Coeff for Rational {
    fn zero() -> Self {
        Rational::new()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn sub_assign_ref(&mut self, rhs: &Self) {
        *self -= rhs;
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        Rational::from(self * rhs)
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += Rational::from(a * b);
    }
    fn neg_in_place(&mut self) {
        let v = std::mem::take(self);
        *self = -v;
    }
    fn scale(&mut self, r: &Rational) {
        *self *= r;
    }
    fn div_rational(&mut self, r: &Rational) {
        *self /= r;
    }
}

impl Numeric for Rational {
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, self)
    }
}

/// An MPFR float whose precision follows its operands.
#[derive(Clone, Debug, PartialEq)]
pub struct MpFloat(pub Float);

impl MpFloat {
    pub fn with_prec(prec: u32, value: f64) -> Self {
        MpFloat(Float::with_val(prec, value))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }
}

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_string_radix(10, Some(20)))
    }
}

impl Coeff for MpFloat {
    fn is_exact() -> bool {
        false
    }
    fn zero() -> Self {
        MpFloat(Float::new(working_precision()))
    }
    fn from_rational(r: &Rational) -> Self {
        MpFloat(Float::with_val(working_precision(), r))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        self.0 += &rhs.0;
    }
    fn sub_assign_ref(&mut self, rhs: &Self) {
        self.0 -= &rhs.0;
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        let prec = self.0.prec().max(rhs.0.prec());
        MpFloat(Float::with_val(prec, &self.0 * &rhs.0))
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        self.0 += &a.0 * &b.0;
    }
    fn neg_in_place(&mut self) {
        self.0 = -std::mem::replace(&mut self.0, Float::new(53));
    }
    fn scale(&mut self, r: &Rational) {
        self.0 *= r;
    }
    fn div_rational(&mut self, r: &Rational) {
        self.0 /= r;
    }
}

impl Numeric for MpFloat {
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.0)
    }
}

/// A polynomial in `h` with rational coefficients, dense in increasing
/// powers. The zero polynomial is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SymbolicH(Vec<Rational>);

impl SymbolicH {
    /// The indeterminate `h` itself.
    pub fn h() -> Self {
        SymbolicH(vec![Rational::new(), Rational::from(1)])
    }

    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        let mut p = SymbolicH(coeffs);
        p.trim();
        p
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, h: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.0.iter().rev() {
            acc *= h;
            acc += c;
        }
        acc
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.cmp0() == std::cmp::Ordering::Equal) {
            self.0.pop();
        }
    }
}

impl fmt::Display for SymbolicH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate() {
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})h")?,
                _ => write!(f, "({c})h^{k}")?,
            }
        }
        Ok(())
    }
}

impl Coeff for SymbolicH {
    fn zero() -> Self {
        SymbolicH(Vec::new())
    }
    fn from_rational(r: &Rational) -> Self {
        SymbolicH::from_coeffs(vec![r.clone()])
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        if self.0.len() < rhs.0.len() {
            self.0.resize(rhs.0.len(), Rational::new());
        }
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
        self.trim();
    }
    fn sub_assign_ref(&mut self, rhs: &Self) {
        if self.0.len() < rhs.0.len() {
            self.0.resize(rhs.0.len(), Rational::new());
        }
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
        self.trim();
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        if self.0.is_empty() || rhs.0.is_empty() {
            return SymbolicH::zero();
        }
        let mut out = vec![Rational::new(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += Rational::from(a * b);
            }
        }
        SymbolicH::from_coeffs(out)
    }
    fn neg_in_place(&mut self) {
        for c in &mut self.0 {
            let v = std::mem::take(c);
            *c = -v;
        }
    }
    fn scale(&mut self, r: &Rational) {
        if r.cmp0() == std::cmp::Ordering::Equal {
            self.0.clear();
            return;
        }
        for c in &mut self.0 {
            *c *= r;
        }
    }
    fn div_rational(&mut self, r: &Rational) {
        for c in &mut self.0 {
            *c /= r;
        }
    }
}
